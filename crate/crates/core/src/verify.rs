//! Numerical verification of every inequality, identity and rate claim the
//! kernels rely on: kernel bounds, the convolution estimate with its
//! logarithmic corrections, the angular integral, PDE residuals of all
//! fundamental solutions, and the asymptote comparison table.
//!
//! Each check produces a [`VerificationReport`] that records the evidence
//! (sampled suprema, residuals, fitted slopes) next to the declared
//! threshold; reports are bit-for-bit reproducible from (check id, seed,
//! parameters).

use crate::error::{Error, Result};
use crate::fields::Scene;
use crate::geometry::{normalize_angle, wake_exponent, PolarPoint, Vec2};
use crate::kernels;
use crate::quad::{adaptive_1d, periodic_trapezoid};
use crate::specfun::scaled_bessel;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

/// Every pass/fail threshold used by the checks, in one place.
pub mod thresholds {
    /// relative error of the scaled Bessel kernels against the oracle
    pub const BESSEL_ORACLE_REL: f64 = 1e-12;
    /// finite-difference residuals of the PDE identities
    pub const PDE_RESIDUAL: f64 = 1e-5;
    /// |W| r1^{1/2} e^{-(r - r1 - r0)}
    pub const LEMMA1_W_RATIO: f64 = 0.25;
    /// |dr W| r1^{3/2} e^{-(r - r1 - r0)/2}
    pub const LEMMA1_DR_RATIO: f64 = 0.35;
    /// |(1/r) dth W| r1^{3/2} r0^{-1/2} e^{-(r - r1 - r0)/2}
    pub const LEMMA1_DTH_RATIO: f64 = 0.35;
    /// x^{1/2} k0s, x^{1/2} k1s on [1, 700]
    pub const BESSEL_SQRT_RATIO: f64 = 2.0;
    /// x^{3/2} k1m0s on [1, 700]
    pub const BESSEL_DIFF_RATIO: f64 = 0.7;
    /// polar identity |(r - r0 cos) - r1 cos| / (1 + r)
    pub const POLAR_IDENTITY: f64 = 1e-10;
    /// I(r) / majorant for the convolution estimate
    pub const LEMMA2_RATIO: f64 = 30.0;
    /// (1 + sqrt(r0)) * angular integral
    pub const ANGULAR_RATIO: f64 = 8.0;
    /// r^{3/2} e^{r(1-cos)} |grad G(x - x0) - shifted leading form|
    pub const SHIFTED_KERNEL: f64 = 3.0;
    /// transform-residual identity for the derived (v, phi)
    pub const TRANSFORM_RESIDUAL: f64 = 1e-5;
    /// wake-scaled improved-asymptote error slope window
    pub const IMPROVED_SLOPE: (f64, f64) = (-1.65, -1.35);
    /// classical error may not decay faster than its own leading term
    pub const CLASSICAL_SLOPE_MIN: f64 = -0.7;
    /// seed-to-seed drift of the regression-locked Lemma 1 constants
    pub const LEMMA1_SEED_DRIFT: f64 = 0.01;
}

/// Structured record of one checked inequality or identity.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub check_id: String,
    pub seed: u64,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extracted_constant: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_stderr: Option<f64>,
    pub threshold: f64,
    pub pass: bool,
    pub notes: String,
}

impl VerificationReport {
    fn ratio(check_id: &str, seed: u64, samples: usize, worst: f64, threshold: f64) -> Self {
        VerificationReport {
            check_id: check_id.into(),
            seed,
            samples,
            worst_ratio: Some(worst),
            max_residual: None,
            extracted_constant: Some(worst),
            fitted_slope: None,
            slope_stderr: None,
            threshold,
            pass: worst.is_finite() && worst <= threshold,
            notes: String::new(),
        }
    }

    fn residual(check_id: &str, seed: u64, samples: usize, worst: f64, threshold: f64) -> Self {
        VerificationReport {
            check_id: check_id.into(),
            seed,
            samples,
            worst_ratio: None,
            max_residual: Some(worst),
            extracted_constant: None,
            fitted_slope: None,
            slope_stderr: None,
            threshold,
            pass: worst.is_finite() && worst <= threshold,
            notes: String::new(),
        }
    }
}

/// Deterministic per-check RNG stream derived from (seed, check id).
fn rng_for(seed: u64, check_id: &str) -> ChaCha8Rng {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in check_id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(h);
    rng
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo * (hi / lo).powf(rng.random_range(0.0..1.0))
}

/// Lemma-style kernel bounds: the three W ratios, the scaled Bessel
/// inequalities and the polar identity, sampled over scale-spanning pairs.
pub fn check_kernel_bounds(n_samples: usize, seed: u64) -> Vec<VerificationReport> {
    let mut rng = rng_for(seed, "kernel-bounds");
    let mut sup_w: f64 = 0.0;
    let mut sup_dr: f64 = 0.0;
    let mut sup_dth: f64 = 0.0;
    let mut sup_polar: f64 = 0.0;
    let mut used = 0usize;
    for _ in 0..n_samples {
        let r = log_uniform(&mut rng, 0.1, 300.0);
        let r0 = log_uniform(&mut rng, 0.1, 50.0);
        let th = rng.random_range(-PI..PI);
        let th0 = rng.random_range(-PI..PI);
        let x = PolarPoint::from_polar(r, th);
        let x0 = PolarPoint::from_polar(r0, th0);
        let rel = crate::geometry::relative_polar(&x, &x0);
        if rel.r1 < 1e-6 {
            continue; // minimum-separation guard
        }
        used += 1;

        let w = kernels::kernel_w(&x, &x0).expect("separated points");
        sup_w = sup_w.max(w.mantissa.abs() * rel.r1.sqrt());

        let g = kernels::grad_w(&x, &x0).expect("separated points");
        let half = (0.5 * g.log_scale).exp();
        sup_dr = sup_dr.max(g.dr.abs() * rel.r1.powf(1.5) * half);
        sup_dth = sup_dth.max(g.dtheta_over_r.abs() * rel.r1.powf(1.5) / r0.sqrt() * half);

        let lhs = r - r0 * normalize_angle(th - th0).cos();
        let rhs = rel.r1 * normalize_angle(rel.theta1 - th).cos();
        sup_polar = sup_polar.max((lhs - rhs).abs() / (1.0 + r));
    }

    // the Bessel inequalities hold on [1, 700]; K1 ~ 1/x breaks the
    // sqrt(x) scaling below that, which the lemma never uses
    let mut sup_k0: f64 = 0.0;
    let mut sup_k1: f64 = 0.0;
    let mut sup_diff: f64 = 0.0;
    let n_grid = 4000;
    for i in 0..n_grid {
        let x = 1.0 * 700.0f64.powf(i as f64 / (n_grid - 1) as f64);
        let b = scaled_bessel(x).unwrap();
        sup_k0 = sup_k0.max(x.sqrt() * b.k0s);
        sup_k1 = sup_k1.max(x.sqrt() * b.k1s);
        sup_diff = sup_diff.max(x.powf(1.5) * b.k1m0s);
    }

    vec![
        VerificationReport::ratio("lemma1-w", seed, used, sup_w, thresholds::LEMMA1_W_RATIO),
        VerificationReport::ratio("lemma1-dr", seed, used, sup_dr, thresholds::LEMMA1_DR_RATIO),
        VerificationReport::ratio(
            "lemma1-dtheta",
            seed,
            used,
            sup_dth,
            thresholds::LEMMA1_DTH_RATIO,
        ),
        VerificationReport::ratio(
            "bessel-k0-sqrt",
            seed,
            n_grid,
            sup_k0,
            thresholds::BESSEL_SQRT_RATIO,
        ),
        VerificationReport::ratio(
            "bessel-k1-sqrt",
            seed,
            n_grid,
            sup_k1,
            thresholds::BESSEL_SQRT_RATIO,
        ),
        VerificationReport::ratio(
            "bessel-k1m0-3half",
            seed,
            n_grid,
            sup_diff,
            thresholds::BESSEL_DIFF_RATIO,
        ),
        VerificationReport::residual(
            "polar-identity",
            seed,
            used,
            sup_polar,
            thresholds::POLAR_IDENTITY,
        ),
    ]
}

fn kronecker_3half(x: f64) -> bool {
    (x - 1.5).abs() < 1e-12
}

fn lemma2_majorant(alpha: f64, sigma: f64, r: f64) -> f64 {
    let lr = r.ln().abs();
    let t1 = r.powf(-(alpha + sigma - 1.5));
    let t2 = if kronecker_3half(sigma) { lr } else { 1.0 } * r.powf(-alpha);
    let t3 = if kronecker_3half(alpha) { lr } else { 1.0 } * r.powf(-sigma);
    t1 + t2 + t3
}

/// I(r) = int r1^{-alpha} r0^{-sigma} e^{r - r1 - r0} dx0 by the same
/// region splitting as the proof: r0 <= r/2 (polar at the origin),
/// r1 <= r/2 (polar at the evaluation point), and the remaining annulus.
pub fn lemma2_integral(alpha: f64, sigma: f64, r: f64, tol: f64) -> Result<f64> {
    // region A: r0 <= r/2, the r1-singularity is far
    let i_a = adaptive_1d(
        &mut |r0: f64| {
            if r0 <= 0.0 {
                return 0.0;
            }
            let inner = adaptive_1d(
                &mut |th0: f64| {
                    let r1 = (r * r + r0 * r0 - 2.0 * r * r0 * th0.cos()).max(0.0).sqrt();
                    r1.powf(-alpha) * (r - r1 - r0).exp()
                },
                0.0,
                PI,
                tol * 1e-3,
            )
            .unwrap_or(0.0);
            2.0 * inner * r0.powf(1.0 - sigma)
        },
        0.0,
        0.5 * r,
        tol,
    )?;

    // region B: r1 <= r/2, local polar around x (r0 >= r/2 there)
    let i_b = adaptive_1d(
        &mut |s: f64| {
            if s <= 0.0 {
                return 0.0;
            }
            let inner = adaptive_1d(
                &mut |phi: f64| {
                    let r0 = (r * r + s * s + 2.0 * r * s * phi.cos()).max(0.0).sqrt();
                    r0.powf(-sigma) * (r - s - r0).exp()
                },
                0.0,
                PI,
                tol * 1e-3,
            )
            .unwrap_or(0.0);
            2.0 * inner * s.powf(1.0 - alpha)
        },
        0.0,
        0.5 * r,
        tol,
    )?;

    // region C: both r0 and r1 above r/2
    let i_c = adaptive_1d(
        &mut |r0: f64| {
            if r0 <= 0.0 {
                return 0.0;
            }
            // exclude the arc where r1 < r/2
            let cstar = (r0 * r0 + 0.75 * r * r) / (2.0 * r * r0);
            let beta = if cstar < 1.0 { cstar.acos() } else { 0.0 };
            if beta >= PI {
                return 0.0;
            }
            let inner = adaptive_1d(
                &mut |th0: f64| {
                    let r1 = (r * r + r0 * r0 - 2.0 * r * r0 * th0.cos()).max(0.0).sqrt();
                    r1.powf(-alpha) * (r - r1 - r0).exp()
                },
                beta,
                PI,
                tol * 1e-3,
            )
            .unwrap_or(0.0);
            2.0 * inner * r0.powf(1.0 - sigma)
        },
        0.5 * r,
        r + 40.0,
        tol,
    )?;

    Ok(i_a + i_b + i_c)
}

/// Convolution estimate check: sup over the radius grid of I(r)/majorant.
pub fn check_integral_lemma(alpha: f64, sigma: f64, r_grid: &[f64]) -> Result<VerificationReport> {
    if !(alpha > 0.0 && alpha < 2.0 && sigma > 0.0 && sigma < 2.0) {
        return Err(Error::Domain {
            what: "check_integral_lemma",
            detail: format!("alpha and sigma must lie in (0, 2), got ({alpha}, {sigma})"),
        });
    }
    if alpha + sigma <= 1.5 {
        return Err(Error::Domain {
            what: "check_integral_lemma",
            detail: format!("need alpha + sigma > 3/2, got {}", alpha + sigma),
        });
    }
    let mut sup = 0.0f64;
    for &r in r_grid {
        let maj = lemma2_majorant(alpha, sigma, r);
        let i = lemma2_integral(alpha, sigma, r, 1e-5 * maj)?;
        sup = sup.max(i / maj);
    }
    let mut rep = VerificationReport::ratio(
        &format!("lemma2-a{alpha}-s{sigma}"),
        0,
        r_grid.len(),
        sup,
        thresholds::LEMMA2_RATIO,
    );
    rep.notes = format!(
        "log factors: sigma {}, alpha {}",
        kronecker_3half(sigma),
        kronecker_3half(alpha)
    );
    Ok(rep)
}

/// Angular integral int e^{-r0 (1 - cos phi)} dphi against 1/(1 + sqrt(r0)).
///
/// The paper states the bound with constant one; the true ratio approaches
/// 2 pi as r0 -> 0, so the check extracts the implied constant and passes
/// while it stays below [`thresholds::ANGULAR_RATIO`].
pub fn check_angular_integral(r0_grid: &[f64]) -> VerificationReport {
    let mut sup = 0.0f64;
    let mut prev = f64::INFINITY;
    let mut monotone = true;
    for &r0 in r0_grid {
        let n = 64 + 8 * (r0.sqrt() as usize);
        let j = periodic_trapezoid(n, |phi| (-r0 * (1.0 - phi.cos())).exp());
        if j > prev + 1e-12 {
            monotone = false;
        }
        prev = j;
        sup = sup.max((1.0 + r0.sqrt()) * j);
    }
    let mut rep = VerificationReport::ratio(
        "angular-integral",
        0,
        r0_grid.len(),
        sup,
        thresholds::ANGULAR_RATIO,
    );
    rep.pass = rep.pass && monotone;
    rep.notes = format!(
        "paper's stated constant 1 is exceeded (extracted constant {sup:.3}); monotone: {monotone}"
    );
    rep
}

struct Fd {
    h: f64,
}

impl Fd {
    fn grad(&self, f: &dyn Fn(Vec2) -> f64, x: Vec2) -> Vec2 {
        let h = self.h;
        let d1 = Vec2::new(h, 0.0);
        let d2 = Vec2::new(0.0, h);
        Vec2::new(
            (-f(x + d1 * 2.0) + 8.0 * f(x + d1) - 8.0 * f(x - d1) + f(x - d1 * 2.0)) / (12.0 * h),
            (-f(x + d2 * 2.0) + 8.0 * f(x + d2) - 8.0 * f(x - d2) + f(x - d2 * 2.0)) / (12.0 * h),
        )
    }

    fn laplacian(&self, f: &dyn Fn(Vec2) -> f64, x: Vec2) -> f64 {
        let h = self.h;
        let mut s = 0.0;
        for d in [Vec2::new(h, 0.0), Vec2::new(0.0, h)] {
            s += (-f(x + d * 2.0) + 16.0 * f(x + d) - 30.0 * f(x) + 16.0 * f(x - d)
                - f(x - d * 2.0))
                / (12.0 * h * h);
        }
        s
    }
}

/// Finite-difference residuals of the PDE identities satisfied by H, G,
/// (E, e) and W, on wake-normalized values so no sample underflows.
pub fn check_pde_residuals(n_points: usize, seed: u64) -> Vec<VerificationReport> {
    let mut rng = rng_for(seed, "pde-residuals");
    let mut res_h: f64 = 0.0;
    let mut res_g: f64 = 0.0;
    let mut res_mom: f64 = 0.0;
    let mut res_div: f64 = 0.0;
    let mut res_curl: f64 = 0.0;
    let mut res_w: f64 = 0.0;

    for _ in 0..n_points {
        let r = log_uniform(&mut rng, 0.5, 20.0);
        let th = rng.random_range(-PI..PI);
        let x = PolarPoint::from_polar(r, th);
        let xv = x.vec();
        let fd = Fd {
            h: 1e-4 * r.max(1.0),
        };

        // Delta H = 0
        let h_of = |y: Vec2| y.norm().ln() / (2.0 * PI);
        res_h = res_h.max(fd.laplacian(&h_of, xv).abs());

        // (Delta - 2 d1) G = 0 on wake-normalized samples
        let ls0 = -wake_exponent(&x);
        let g_of = |y: Vec2| {
            let p = PolarPoint::from_vec(y);
            let g = kernels::fundamental(&p).unwrap().g;
            g.value_with_offset(-ls0)
        };
        let lap = fd.laplacian(&g_of, xv);
        let dg = fd.grad(&g_of, xv);
        let scale = (lap.abs() + 2.0 * dg.x.abs()).max(1.0);
        res_g = res_g.max((lap - 2.0 * dg.x).abs() / scale);

        // Oseen momentum, divergence and curl on E . A for a random direction
        let phi_a = rng.random_range(-PI..PI);
        let a = Vec2::new(phi_a.cos(), phi_a.sin());
        let comp = |k: usize| {
            move |y: Vec2| {
                let p = PolarPoint::from_vec(y);
                let u = kernels::fundamental(&p).unwrap().tensor.mul_vec(a);
                if k == 0 {
                    u.x
                } else {
                    u.y
                }
            }
        };
        let press = |y: Vec2| {
            let p = PolarPoint::from_vec(y);
            kernels::fundamental(&p).unwrap().pressure.dot(a)
        };
        let u0 = comp(0);
        let u1 = comp(1);
        let lap0 = fd.laplacian(&u0, xv);
        let lap1 = fd.laplacian(&u1, xv);
        let g0 = fd.grad(&u0, xv);
        let g1 = fd.grad(&u1, xv);
        let gp = fd.grad(&press, xv);
        let m0 = lap0 - gp.x - 2.0 * g0.x;
        let m1 = lap1 - gp.y - 2.0 * g1.x;
        let scale = (lap0.abs() + lap1.abs() + gp.x.abs() + gp.y.abs()).max(1.0);
        res_mom = res_mom.max(m0.abs().max(m1.abs()) / scale);
        res_div = res_div.max((g0.x + g1.y).abs() / scale);

        // curl identity against the analytic vorticity kernel
        let curl_fd = g1.x - g0.y;
        let curl_exact = kernels::grad_g(&x).unwrap().value().dot(a.perp());
        res_curl = res_curl.max((curl_fd - curl_exact).abs() / curl_exact.abs().max(1.0));

        // adjoint identity for W in the source variable
        let r0 = log_uniform(&mut rng, 0.5, 20.0);
        let th0 = rng.random_range(-PI..PI);
        let x0 = PolarPoint::from_polar(r0, th0);
        if crate::geometry::relative_polar(&x, &x0).r1 < 1.0 {
            continue;
        }
        let ls_w = kernels::kernel_w(&x, &x0).unwrap().log_scale;
        let w_of = |y0: Vec2| {
            let p0 = PolarPoint::from_vec(y0);
            kernels::kernel_w(&x, &p0).unwrap().value_with_offset(-ls_w)
        };
        let fd0 = Fd {
            h: 1e-4 * r0.max(1.0),
        };
        let lw = fd0.laplacian(&w_of, x0.vec());
        let gw = fd0.grad(&w_of, x0.vec());
        let wv = w_of(x0.vec());
        let adj = lw + 2.0 * gw.dot(x0.e_r()) + wv / r0;
        let scale = (lw.abs() + 2.0 * gw.norm() + wv.abs() / r0).max(1.0);
        res_w = res_w.max(adj.abs() / scale);
    }

    let t = thresholds::PDE_RESIDUAL;
    vec![
        VerificationReport::residual("pde-laplace-h", seed, n_points, res_h, t),
        VerificationReport::residual("pde-oseen-g", seed, n_points, res_g, t),
        VerificationReport::residual("pde-oseen-momentum", seed, n_points, res_mom, t),
        VerificationReport::residual("pde-divergence", seed, n_points, res_div, t),
        VerificationReport::residual("pde-curl-identity", seed, n_points, res_curl, t),
        VerificationReport::residual("pde-adjoint-w", seed, n_points, res_w, t),
    ]
}

/// Shifted-kernel expansion: r^{3/2} e^{r(1-cos)} |grad G(x-x0) -
/// grad G(x) e^{r0 (cos(th-th0) - cos th0)}| bounded for r0 <= 1.
pub fn check_shifted_expansion() -> VerificationReport {
    let mut sup = 0.0f64;
    let mut samples = 0usize;
    for &th in &[0.0, PI / 2.0, -PI / 2.0, PI] {
        for i in 0..12 {
            let r = 20.0 * (100.0f64 / 20.0).powf(i as f64 / 11.0);
            let x = PolarPoint::from_polar(r, th);
            let w = wake_exponent(&x);
            for &r0 in &[0.25, 0.5, 1.0] {
                for k in 0..8 {
                    let th0 = -PI + 2.0 * PI * (k as f64 + 0.5) / 8.0;
                    let x0 = PolarPoint::from_polar(r0, th0);
                    let exact = kernels::grad_g(&PolarPoint::from_vec(x.vec() - x0.vec()))
                        .unwrap();
                    let lead = kernels::shifted_gradg_leading(&x, &x0).unwrap();
                    let d = exact.value_with_offset(w) - lead.value_with_offset(w);
                    sup = sup.max(r.powf(1.5) * d.norm());
                    samples += 1;
                }
            }
        }
    }
    VerificationReport::ratio(
        "shifted-kernel",
        0,
        samples,
        sup,
        thresholds::SHIFTED_KERNEL,
    )
}

/// Transform-residual certification of the derived (v, phi) on random
/// smooth compactly supported test functions.
pub fn check_transform_residual(n_functions: usize, seed: u64) -> VerificationReport {
    use crate::asymptotics::{
        CoefficientField, DecayExponents, PerturbationModel, PerturbationProfile,
    };
    let mut rng = rng_for(seed, "transform-residual");
    let mut worst = 0.0f64;
    for _ in 0..n_functions {
        let exps = DecayExponents {
            a: rng.random_range(-1.0..1.0),
            b: rng.random_range(-1.0..1.0),
        };
        let nu = rng.random_range(0.0..0.3);
        let pert = PerturbationModel::new(nu, 0.25, PerturbationProfile::Cosine).unwrap();
        let coeffs = CoefficientField::new(exps, pert);

        let c = Vec2::new(rng.random_range(1.5..4.0), rng.random_range(-1.5..1.5));
        let rho = rng.random_range(0.8..1.5);
        let k = Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let (c0, c1) = (rng.random_range(0.3..1.0), rng.random_range(-0.5..0.5));
        let omega = move |y: Vec2| {
            let d = (y - c).norm_sq() / (rho * rho);
            if d >= 1.0 {
                0.0
            } else {
                (1.0 - d).powi(4) * (c0 + c1 * (k.dot(y)).sin())
            }
        };

        // evaluation point inside the support bulk
        let (pr, pphi) = (
            rng.random_range(0.0..0.6 * rho),
            rng.random_range(-PI..PI),
        );
        let xv = c + Vec2::new(pr * pphi.cos(), pr * pphi.sin());
        let p0 = PolarPoint::from_vec(xv);
        let fd = Fd {
            h: 1e-3 * p0.r.max(1.0),
        };

        let gw = fd.grad(&omega, xv);
        let u_h = coeffs.u_h(&p0);
        let (ubr, ubt) = pert.u_bar_polar(&p0);
        let u_bar = p0.e_r() * ubr + p0.e_theta() * ubt;
        let lhs = fd.laplacian(&omega, xv) - 2.0 * gw.x - (u_h + u_bar).dot(gw);

        let a_of = |y: Vec2| {
            let p = PolarPoint::from_vec(y);
            omega(y) * (-crate::asymptotics::log_modulation(&p, &exps).unwrap()).exp()
        };
        let ga = fd.grad(&a_of, xv);
        let a0 = a_of(xv);
        let rhs_op = fd.laplacian(&a_of, xv) - 2.0 * p0.e_r().dot(ga) - a0 / p0.r
            - coeffs.v_cartesian(&p0).dot(ga)
            - coeffs.phi(&p0) * a0;
        let rhs = rhs_op * crate::asymptotics::log_modulation(&p0, &exps).unwrap().exp();

        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    VerificationReport::residual(
        "transform-residual",
        seed,
        n_functions,
        worst,
        thresholds::TRANSFORM_RESIDUAL,
    )
}

/// Slope, intercept and slope standard error of a log-log least squares fit.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
}

/// Least squares of log(value) against log(r).
pub fn rate_fit(samples: &[(f64, f64)]) -> Result<RateFit> {
    if samples.len() < 5 {
        return Err(Error::Fit(format!(
            "need at least 5 samples, got {}",
            samples.len()
        )));
    }
    if let Some(&(r, v)) = samples.iter().find(|(r, v)| !(*r > 0.0) || !(*v > 0.0)) {
        return Err(Error::Domain {
            what: "rate_fit",
            detail: format!("nonpositive sample (r = {r}, value = {v})"),
        });
    }
    let n = samples.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(r, v) in samples {
        let (x, y) = (r.ln(), v.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let det = n * sxx - sx * sx;
    if det <= 0.0 {
        return Err(Error::Fit("degenerate abscissae".into()));
    }
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / n;
    let mut ss = 0.0;
    for &(r, v) in samples {
        let e = v.ln() - intercept - slope * r.ln();
        ss += e * e;
    }
    let dof = (samples.len() - 2) as f64;
    let sxx_c = sxx - sx * sx / n;
    let stderr = if dof > 0.0 { (ss / dof / sxx_c).sqrt() } else { 0.0 };
    Ok(RateFit {
        slope,
        intercept,
        stderr,
    })
}

/// One row of the asymptote comparison table; every value is wake-normalized
/// (multiplied by e^{r(1 - cos theta)}).
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoteRow {
    pub theta: f64,
    pub r: f64,
    pub exact: f64,
    pub classical: f64,
    pub improved: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modified: Option<f64>,
    pub err_classical: f64,
    pub err_improved: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub err_modified: Option<f64>,
}

/// Exact vorticity (by convolution) against the competing asymptotes along
/// rays; requires a linear no-body scene.
pub fn compare_asymptotes(
    scene: &Scene,
    rays: &[f64],
    radii: &[f64],
    modified: Option<(&crate::asymptotics::DecayExponents, &dyn Fn(f64) -> f64)>,
) -> Result<Vec<AsymptoteRow>> {
    if scene.body.is_some() {
        return Err(Error::Config(
            "asymptote comparison needs the linear no-body scene".into(),
        ));
    }
    let force = crate::fields::net_force(scene)?.force;
    let mut rows = Vec::new();
    for &theta in rays {
        let f_theta = crate::fields::net_force_angular(scene, theta)?;
        for &r in radii {
            let x = PolarPoint::from_polar(r, theta);
            let w = wake_exponent(&x);
            let exact = crate::fields::convolve_vorticity_scaled(
                &scene.source,
                &x,
                scene.quad_tol,
                w,
            )?;
            let classical = kernels::grad_g(&x)?.dot(force.perp()).value_with_offset(w);
            let improved = kernels::grad_g(&x)?.dot(f_theta.perp()).value_with_offset(w);
            let (modified_v, err_modified) = match modified {
                Some((exps, mu)) => {
                    let m = crate::asymptotics::modified_asymptote(&x, exps, mu(theta))?
                        .value_with_offset(w);
                    (Some(m), Some((exact - m).abs()))
                }
                None => (None, None),
            };
            rows.push(AsymptoteRow {
                theta,
                r,
                exact,
                classical,
                improved,
                modified: modified_v,
                err_classical: (exact - classical).abs(),
                err_improved: (exact - improved).abs(),
                err_modified,
            });
        }
    }
    Ok(rows)
}

/// Serialize a report set as pretty JSON (deterministic field order).
pub fn reports_to_json(reports: &[VerificationReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize")
}

/// Summary CSV: one line per report.
pub fn reports_to_csv(reports: &[VerificationReport]) -> String {
    let mut s = String::from("check_id,seed,samples,worst_ratio,max_residual,threshold,pass\n");
    for r in reports {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.check_id,
            r.seed,
            r.samples,
            r.worst_ratio.map_or(String::new(), |v| v.to_string()),
            r.max_residual.map_or(String::new(), |v| v.to_string()),
            r.threshold,
            r.pass
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Scene, SourceBump, SourceTerm};

    #[test]
    fn rate_fit_examples() {
        // exact power law
        let data: Vec<(f64, f64)> = (0..20)
            .map(|i| {
                let r = 10.0 * 1.2f64.powi(i);
                (r, 3.7 * r.powf(-1.5))
            })
            .collect();
        let fit = rate_fit(&data).unwrap();
        assert!((fit.slope + 1.5).abs() < 1e-12);
        assert!(fit.stderr < 1e-12);

        // perturbed power law on [20, 80]
        let data: Vec<(f64, f64)> = (0..16)
            .map(|i| {
                let r = 20.0 * (80.0f64 / 20.0).powf(i as f64 / 15.0);
                (r, r.powf(-1.5) * (1.0 + 1.0 / r))
            })
            .collect();
        let fit = rate_fit(&data).unwrap();
        assert!(fit.slope > -1.55 && fit.slope < -1.45, "slope {}", fit.slope);

        // constant data
        let data: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64, 2.5)).collect();
        let fit = rate_fit(&data).unwrap();
        assert!(fit.slope.abs() < 1e-12);

        // nonpositive value is a domain error
        assert!(rate_fit(&[(1.0, 1.0), (2.0, -1.0), (3.0, 1.0), (4.0, 1.0), (5.0, 1.0)]).is_err());
    }

    #[test]
    fn kernel_bounds_smoke() {
        let reports = check_kernel_bounds(20_000, 1);
        for r in &reports {
            assert!(r.pass, "{} failed: {:?}", r.check_id, r);
        }
    }

    #[test]
    fn angular_integral_values() {
        let grid: Vec<f64> = (0..40).map(|i| 1e-3 * (1e3f64 / 1e-3).powf(i as f64 / 39.0)).collect();
        let rep = check_angular_integral(&grid);
        assert!(rep.pass, "{rep:?}");
        // spot value J(100) = 2 pi e^{-100} I0(100)
        let j100 = periodic_trapezoid(256, |phi| (-100.0 * (1.0 - phi.cos())).exp());
        assert!((j100 - 0.25097793711649271).abs() < 1e-12, "{j100}");
        // ratio at r0 = 100 about 2.76
        assert!(((1.0 + 10.0) * j100 - 2.7607573082814198).abs() < 1e-10);
    }

    #[test]
    fn pde_residuals_smoke() {
        let reports = check_pde_residuals(60, 7);
        for r in &reports {
            assert!(r.pass, "{} failed with {:?}", r.check_id, r.max_residual);
        }
    }

    #[test]
    fn residual_order_drops_with_coarser_second_order_stencil() {
        // 2nd-order Laplacian of H at h and 10h: residual grows ~100x
        let x = Vec2::new(1.3, 0.4);
        let h_of = |y: Vec2| y.norm().ln() / (2.0 * PI);
        let lap2 = |h: f64| {
            let mut s = 0.0;
            for d in [Vec2::new(h, 0.0), Vec2::new(0.0, h)] {
                s += (h_of(x + d) - 2.0 * h_of(x) + h_of(x - d)) / (h * h);
            }
            s.abs()
        };
        let r1 = lap2(1e-3);
        let r2 = lap2(1e-2);
        let gain = r2 / r1;
        assert!(gain > 30.0 && gain < 300.0, "h^2 scaling violated: {gain}");
    }

    #[test]
    fn shifted_expansion_bounded() {
        let rep = check_shifted_expansion();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn transform_residual_check() {
        let rep = check_transform_residual(10, 3);
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn lemma2_anchor_value() {
        // regression anchor: I(10) for alpha = sigma = 1, cross-checked
        // against an independent brute-force quadrature (2.46070 +- 2e-3)
        let v = lemma2_integral(1.0, 1.0, 10.0, 1e-6).unwrap();
        assert!((v - 2.4607).abs() < 5e-3, "I(10) = {v}");
    }

    #[test]
    fn lemma2_brute_force_cross_check() {
        // independent strategy: polar around the evaluation point over the
        // whole plane, no region splitting
        let (alpha, sigma, r) = (1.0, 1.0, 10.0);
        let brute = adaptive_1d(
            &mut |s: f64| {
                if s <= 0.0 {
                    return 0.0;
                }
                let inner = adaptive_1d(
                    &mut |phi: f64| {
                        let r0 = (r * r + s * s + 2.0 * r * s * phi.cos()).max(0.0).sqrt();
                        if r0 <= 0.0 {
                            return 0.0;
                        }
                        r0.powf(-sigma) * (r - s - r0).exp()
                    },
                    0.0,
                    PI,
                    1e-9,
                )
                .unwrap_or(0.0);
                2.0 * inner * s.powf(1.0 - alpha)
            },
            0.0,
            r + 40.0,
            1e-5,
        )
        .unwrap();
        let split = lemma2_integral(alpha, sigma, r, 1e-6).unwrap();
        assert!(
            (brute - split).abs() < 2e-3 * split,
            "brute {brute} vs split {split}"
        );
    }

    #[test]
    fn lemma2_rejects_bad_parameters() {
        assert!(check_integral_lemma(0.5, 0.5, &[10.0]).is_err());
        assert!(check_integral_lemma(2.5, 1.0, &[10.0]).is_err());
    }

    #[test]
    fn lemma2_log_factor_cases() {
        let grid = [10.0, 30.0, 100.0];
        let rep = check_integral_lemma(1.0, 1.0, &grid).unwrap();
        assert!(rep.pass, "{rep:?}");
        let rep = check_integral_lemma(1.5, 1.0, &grid).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn asymptote_table_basics() {
        let bump = SourceBump::new(Vec2::new(0.4, 0.3), 1.0, Vec2::new(1.0, 0.5)).unwrap();
        let scene = Scene::no_body(SourceTerm::new(vec![bump]));
        let rows =
            compare_asymptotes(&scene, &[0.0, PI / 2.0], &[25.0, 40.0, 60.0], None).unwrap();
        assert_eq!(rows.len(), 6);
        // on the downstream axis classical and improved coincide
        for row in rows.iter().filter(|r| r.theta == 0.0) {
            assert!((row.classical - row.improved).abs() < 1e-12 * row.exact.abs().max(1e-30));
        }
        // zero source: all columns vanish
        let empty = Scene::no_body(SourceTerm::default());
        let rows = compare_asymptotes(&empty, &[0.0], &[30.0], None).unwrap();
        assert_eq!(rows[0].exact, 0.0);
        assert_eq!(rows[0].classical, 0.0);
        assert_eq!(rows[0].improved, 0.0);
    }

    #[test]
    fn reports_serialize_deterministically() {
        let a = reports_to_json(&check_kernel_bounds(500, 42));
        let b = reports_to_json(&check_kernel_bounds(500, 42));
        assert_eq!(a, b);
        let csv = reports_to_csv(&check_kernel_bounds(500, 42));
        assert!(csv.starts_with("check_id,"));
        assert_eq!(csv.lines().count(), 8);
    }
}
