//! Fixed-point construction of the amplitude field: a = a1 + a2[a] + a3 with
//!
//!   a1 = -int W R,   a2[a] = -int W (phi a + v . grad a),
//!   a3 = +oint [a grad_{x0} W - W grad a + 2 a W e_r] . n
//!
//! (n the outward normal of the body). The signs follow from the Green
//! identity for Delta - 2 d_r - 1/r, whose fundamental solution W integrates
//! against -delta; the volume quadrature runs over the polar grid with the
//! logarithmic kernel cell replaced by its analytic disk average.
//!
//! W depends on the angles only through their difference, so the grid kernel
//! is block-circulant: one (n_r x n_r x n_theta) table serves every target,
//! and each iteration is a circular correlation against it.

use super::{AmplitudeField, CoefficientField, DecayExponents, PolarGrid};
use crate::error::{Error, Result};
use crate::fields::Scene;
use crate::geometry::{PolarPoint, Vec2};
use crate::kernels;
use crate::quad::{self, pairwise_sum};
use crate::specfun::scaled_bessel;
use rayon::prelude::*;

/// Dirichlet-type boundary data for the amplitude on the inner circle,
/// sampled at the grid's angular nodes.
#[derive(Debug, Clone)]
pub struct BoundaryAmplitude {
    pub radius: f64,
    pub a: Vec<f64>,
    pub grad_a: Vec<Vec2>,
}

impl BoundaryAmplitude {
    /// Boundary amplitude of the exact vorticity grad G(. - x_c) . F0_perp,
    /// converted through the modulation; the gradient comes from the
    /// analytic Hessian of G and grad log m.
    pub fn manufactured(
        grid: &PolarGrid,
        radius: f64,
        x_c: Vec2,
        f0: Vec2,
        exps: &DecayExponents,
    ) -> Result<Self> {
        let mut a = Vec::with_capacity(grid.n_theta());
        let mut grad_a = Vec::with_capacity(grid.n_theta());
        for j in 0..grid.n_theta() {
            let y = PolarPoint::from_polar(radius, grid.theta[j]);
            let arg = PolarPoint::from_vec(y.vec() - x_c);
            let omega = kernels::grad_g(&arg)?.dot(f0.perp()).value();
            let (hg, hls) = kernels::hess_g(&arg)?;
            let grad_omega = hg.mul_vec(f0.perp()) * hls.exp();

            let logm = super::log_modulation(&y, exps)?;
            let q = exps.q(y.theta);
            let qp = exps.q_prime(y.theta);
            let s_half = (0.5 * y.theta).sin();
            let p_rad = q / y.r - 2.0 * s_half * s_half;
            let p_ang = qp * y.r.ln() / y.r - y.theta.sin();
            let grad_logm = y.e_r() * p_rad + y.e_theta() * p_ang;

            let m_inv = (-logm).exp();
            a.push(omega * m_inv);
            grad_a.push((grad_omega - grad_logm * omega) * m_inv);
        }
        Ok(BoundaryAmplitude { radius, a, grad_a })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PicardParams {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for PicardParams {
    fn default() -> Self {
        PicardParams {
            max_iter: 30,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub field: AmplitudeField,
    pub a1: AmplitudeField,
    pub a3: AmplitudeField,
    /// sup-norm differences per iteration
    pub diffs: Vec<f64>,
    /// successive contraction ratios diffs[n]/diffs[n-1]
    pub ratios: Vec<f64>,
    pub iterations: usize,
}

/// Block-circulant table of the grid kernel, area weights folded in:
/// entry (i, k, m) = W(x_{i, j}, y_{k, j-m}) * area(k).
struct WTable {
    n_r: usize,
    n_theta: usize,
    w: Vec<f64>,
}

impl WTable {
    fn build(grid: &PolarGrid) -> Self {
        let (nr, nt) = (grid.n_r(), grid.n_theta());
        let mut w = vec![0.0; nr * nr * nt];
        let rows: Vec<(usize, Vec<f64>)> = (0..nr)
            .into_par_iter()
            .map(|i| {
                let mut row = vec![0.0; nr * nt];
                let ri = grid.r[i];
                for k in 0..nr {
                    let rk = grid.r[k];
                    let area = grid.area_weight(k, 0);
                    for m in 0..nt {
                        if i == k && m == 0 {
                            continue; // singular diagonal, handled by the patch
                        }
                        let dth = 2.0 * std::f64::consts::PI * m as f64 / nt as f64;
                        let r1 = (ri * ri + rk * rk - 2.0 * ri * rk * dth.cos())
                            .max(0.0)
                            .sqrt();
                        if r1 == 0.0 {
                            continue;
                        }
                        let ls = ri - rk - r1;
                        if ls < -500.0 {
                            continue;
                        }
                        let b = scaled_bessel(r1).expect("r1 > 0");
                        row[k * nt + m] =
                            0.5 / std::f64::consts::PI * b.k0s * ls.exp() * area;
                    }
                }
                (i, row)
            })
            .collect();
        for (i, row) in rows {
            w[i * nr * nt..(i + 1) * nr * nt].copy_from_slice(&row);
        }
        WTable {
            n_r: nr,
            n_theta: nt,
            w,
        }
    }

    /// Analytic disk average of W over the cell at node (i, .):
    /// int_{|z| < rho} (1/2 pi) K0(|z|) dz = 1 - rho K1(rho).
    fn diagonal_patch(grid: &PolarGrid, i: usize) -> f64 {
        let rho = (grid.area_weight(i, 0) / std::f64::consts::PI).sqrt();
        let b = scaled_bessel(rho).expect("rho > 0");
        1.0 - rho * b.k1s * (-rho).exp()
    }

    /// y[i][j] = sum_{k, m} w(i, k, m) s[k][(j - m) mod n_theta]  (+ patch).
    fn apply(&self, grid: &PolarGrid, s: &[f64], skip_first_ring: bool) -> Vec<f64> {
        let (nr, nt) = (self.n_r, self.n_theta);
        let patches: Vec<f64> = (0..nr).map(|i| Self::diagonal_patch(grid, i)).collect();
        let out: Vec<f64> = (0..nr * nt)
            .into_par_iter()
            .map(|t| {
                let (i, j) = (t / nt, t % nt);
                if skip_first_ring && i == 0 {
                    return 0.0;
                }
                let mut terms = Vec::with_capacity(nr * nt);
                let wi = &self.w[i * nr * nt..(i + 1) * nr * nt];
                for k in 0..nr {
                    let wk = &wi[k * nt..(k + 1) * nt];
                    let sk = &s[k * nt..(k + 1) * nt];
                    for (m, &wv) in wk.iter().enumerate() {
                        if wv != 0.0 {
                            terms.push(wv * sk[(j + nt - m) % nt]);
                        }
                    }
                }
                terms.push(patches[i] * s[i * nt + j]);
                pairwise_sum(&terms)
            })
            .collect();
        out
    }
}

/// The source and boundary components of the representation: a1 = -int W R
/// and a3 = +oint [a grad_{x0} W - W grad a + 2 a W e_r] . n.
pub fn picard_components(
    scene: &Scene,
    coeffs: &CoefficientField,
    grid: &PolarGrid,
    boundary: Option<&BoundaryAmplitude>,
) -> Result<(AmplitudeField, AmplitudeField)> {
    validate_grid(scene, grid, boundary)?;
    let (nr, nt) = (grid.n_r(), grid.n_theta());

    let mut a1 = AmplitudeField::zeros(grid.clone());
    if !scene.source.is_empty() {
        let vals: Vec<Result<f64>> = (0..nr * nt)
            .into_par_iter()
            .map(|t| {
                let x = grid.node(t / nt, t % nt);
                volume_component(scene, coeffs, &x)
            })
            .collect();
        for (k, v) in vals.into_iter().enumerate() {
            a1.values[k] = v?;
        }
    }

    let mut a3 = AmplitudeField::zeros(grid.clone());
    if let Some(data) = boundary {
        let vals: Vec<f64> = (0..nr * nt)
            .into_par_iter()
            .map(|t| {
                let (i, j) = (t / nt, t % nt);
                if i == 0 {
                    return data.a[j]; // on the boundary the data itself holds
                }
                boundary_component(data, grid, &grid.node(i, j))
            })
            .collect();
        a3.values = vals;
    }
    Ok((a1, a3))
}

fn volume_component(scene: &Scene, coeffs: &CoefficientField, x: &PolarPoint) -> Result<f64> {
    let xv = x.vec();
    let mut acc = 0.0;
    for bump in &scene.source.bumps {
        let d = (xv - bump.center).norm();
        let mut f = |y: Vec2| -> [f64; 1] {
            let p = PolarPoint::from_vec(y);
            let r_val = match coeffs.source_amplitude(&scene.source, &p) {
                Ok(v) => v,
                Err(_) => return [0.0],
            };
            if r_val == 0.0 {
                return [0.0];
            }
            match kernels::kernel_w(x, &p) {
                Ok(w) => [w.value() * r_val],
                Err(_) => [0.0],
            }
        };
        let out = if d < bump.radius {
            quad::disk_quadrature_desingularized(bump.center, bump.radius, xv, &mut f, scene.quad_tol)?
        } else if d < 2.0 * bump.radius {
            quad::disk_quadrature_exterior_point(bump.center, bump.radius, xv, &mut f, scene.quad_tol)?
        } else {
            quad::disk_quadrature(bump.center, bump.radius, &mut f, scene.quad_tol)?
        };
        acc += out.values[0];
    }
    Ok(-acc)
}

fn boundary_component(data: &BoundaryAmplitude, grid: &PolarGrid, x: &PolarPoint) -> f64 {
    let nt = grid.n_theta();
    let h = 2.0 * std::f64::consts::PI / nt as f64 * data.radius;
    let mut acc = 0.0;
    for (j, &th) in grid.theta.iter().enumerate() {
        let y = PolarPoint::from_polar(data.radius, th);
        let n = y.e_r();
        let w = kernels::kernel_w(x, &y).expect("x off the boundary circle");
        let gw0 = kernels::grad_w_x0(x, &y).expect("x != y, y off origin");
        let term = data.a[j] * gw0.value().dot(n) - w.value() * data.grad_a[j].dot(n)
            + 2.0 * data.a[j] * w.value();
        acc += term * h;
    }
    acc
}

fn validate_grid(
    scene: &Scene,
    grid: &PolarGrid,
    boundary: Option<&BoundaryAmplitude>,
) -> Result<()> {
    let r0 = grid.r[0];
    let rmax = *grid.r.last().unwrap();
    for bump in &scene.source.bumps {
        let c = bump.center.norm();
        if c + bump.radius > rmax || c - bump.radius < r0 {
            return Err(Error::Config(format!(
                "source support [{}, {}] must lie inside the grid annulus [{r0}, {rmax}]",
                c - bump.radius,
                c + bump.radius
            )));
        }
    }
    if let Some(b) = boundary {
        if (b.radius - r0).abs() > 1e-12 * r0 {
            return Err(Error::Config(format!(
                "boundary data radius {} must match the inner grid radius {r0}",
                b.radius
            )));
        }
        if b.a.len() != grid.n_theta() || b.grad_a.len() != grid.n_theta() {
            return Err(Error::Config(
                "boundary data must be sampled at the grid's angular nodes".into(),
            ));
        }
    }
    Ok(())
}

/// Run the fixed-point iteration a <- a1 + a2[a] + a3 until the sup-norm
/// difference drops below tol.
pub fn picard_solve(
    scene: &Scene,
    exps: &DecayExponents,
    pert: &super::PerturbationModel,
    grid: &PolarGrid,
    boundary: Option<&BoundaryAmplitude>,
    params: &PicardParams,
) -> Result<PicardOutcome> {
    let coeffs = CoefficientField::new(*exps, *pert);
    let (a1, a3) = picard_components(scene, &coeffs, grid, boundary)?;
    let (nr, nt) = (grid.n_r(), grid.n_theta());

    let mut base = AmplitudeField::zeros(grid.clone());
    for k in 0..nr * nt {
        base.values[k] = a1.values[k] + a3.values[k];
    }
    let pinned = boundary.is_some();
    if let Some(data) = boundary {
        base.values[..nt].copy_from_slice(&data.a);
    }

    // per-node coefficients are iteration-invariant
    let mut phi = vec![0.0; nr * nt];
    let mut v_r = vec![0.0; nr * nt];
    let mut v_t = vec![0.0; nr * nt];
    for i in 0..nr {
        for j in 0..nt {
            let p = grid.node(i, j);
            let k = grid.idx(i, j);
            phi[k] = coeffs.phi(&p);
            let (vr, vt) = coeffs.v_polar(&p);
            v_r[k] = vr;
            v_t[k] = vt;
        }
    }
    let trivial = phi.iter().all(|&p| p == 0.0)
        && v_r.iter().all(|&v| v == 0.0)
        && v_t.iter().all(|&v| v == 0.0);

    let table = if trivial {
        None
    } else {
        Some(WTable::build(grid))
    };

    let mut a = base.clone();
    let mut diffs = Vec::new();
    let mut ratios = Vec::new();
    let mut rising = 0usize;
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..params.max_iter {
        iterations += 1;
        let a2 = if let Some(tab) = &table {
            a.differentiate();
            let mut s = vec![0.0; nr * nt];
            for i in 0..nr {
                for j in 0..nt {
                    let k = grid.idx(i, j);
                    s[k] = phi[k] * a.values[k]
                        + v_r[k] * a.ddr[k]
                        + v_t[k] * a.ddtheta[k] / grid.r[i];
                }
            }
            tab.apply(grid, &s, pinned)
        } else {
            vec![0.0; nr * nt]
        };

        let mut diff = 0.0f64;
        for k in 0..nr * nt {
            let new = base.values[k] - a2[k];
            diff = diff.max((new - a.values[k]).abs());
            a.values[k] = new;
        }
        if pinned {
            a.values[..nt].copy_from_slice(&base.values[..nt]);
        }

        if let Some(&prev) = diffs.last() {
            if prev > 0.0 {
                let ratio = diff / prev;
                ratios.push(ratio);
                if ratio >= 1.0 {
                    rising += 1;
                    if rising >= 3 {
                        return Err(Error::NonContraction {
                            nu: pert.nu,
                            ratio,
                        });
                    }
                } else {
                    rising = 0;
                }
            }
        }
        diffs.push(diff);
        if diff < params.tol {
            converged = true;
            break;
        }
    }

    if !converged {
        return Err(Error::MaxIterations {
            iterations,
            last_diff: *diffs.last().unwrap_or(&f64::NAN),
        });
    }
    a.differentiate();
    Ok(PicardOutcome {
        field: a,
        a1,
        a3,
        diffs,
        ratios,
        iterations,
    })
}
