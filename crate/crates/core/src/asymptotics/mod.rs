//! The modulation machinery behind the data-dependent vorticity asymptote:
//! decay exponents, the change of variables omega = m a, the transformed
//! equation's drift and potential coefficients, the polar grid and amplitude
//! field, the angular profile integrals, and the three competing asymptotes.

mod picard;

pub use picard::{
    picard_components, picard_solve, BoundaryAmplitude, PicardOutcome, PicardParams,
};

use crate::error::{Error, Result};
use crate::fields::{net_force, ExponentSpec, Scene, SourceTerm};
use crate::geometry::{wake_exponent, PolarPoint, Vec2};
use crate::kernels::{self, WakeScaled, INV_SQRT_8PI};
use crate::quad;
use std::f64::consts::PI;

/// Decay exponents (A, B) of the modulation r^{A(1-cos) + B sin}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayExponents {
    pub a: f64,
    pub b: f64,
}

impl DecayExponents {
    pub const ZERO: DecayExponents = DecayExponents { a: 0.0, b: 0.0 };

    /// Angular exponent q(theta) = A(1 - cos theta) + B sin theta.
    pub fn q(&self, theta: f64) -> f64 {
        self.a * (1.0 - theta.cos()) + self.b * theta.sin()
    }

    pub fn q_prime(&self, theta: f64) -> f64 {
        self.a * theta.sin() + self.b * theta.cos()
    }

    pub fn q_second(&self, theta: f64) -> f64 {
        self.a * theta.cos() - self.b * theta.sin()
    }
}

/// Exponents derived from a net force: A = F1/(8 pi), B = -F2/(8 pi).
pub fn decay_exponents(force: Vec2) -> DecayExponents {
    DecayExponents {
        a: force.x / (8.0 * PI),
        b: -force.y / (8.0 * PI),
    }
}

/// Resolve a scene's exponent specification, computing the net force when
/// asked to.
pub fn resolve_exponents(scene: &Scene) -> Result<DecayExponents> {
    match scene.exponents {
        ExponentSpec::Explicit { a, b } => Ok(DecayExponents { a, b }),
        ExponentSpec::FromForce => Ok(decay_exponents(net_force(scene)?.force)),
    }
}

/// log m(r, theta) = q(theta) log r - r (1 - cos theta).
pub fn log_modulation(x: &PolarPoint, exps: &DecayExponents) -> Result<f64> {
    if x.r == 0.0 {
        return Err(Error::Singularity {
            what: "log_modulation",
        });
    }
    Ok(exps.q(x.theta) * x.r.ln() - wake_exponent(x))
}

/// omega = m a.
pub fn a_to_omega(a: f64, x: &PolarPoint, exps: &DecayExponents) -> Result<f64> {
    Ok(a * log_modulation(x, exps)?.exp())
}

/// a = omega / m.
pub fn omega_to_a(omega: f64, x: &PolarPoint, exps: &DecayExponents) -> Result<f64> {
    Ok(omega * (-log_modulation(x, exps)?).exp())
}

/// Amplitude a from a wake-scaled vorticity value; the exponential factors
/// combine in log space, so nothing overflows.
pub fn amplitude_from_vorticity(
    omega: &WakeScaled,
    x: &PolarPoint,
    exps: &DecayExponents,
) -> Result<f64> {
    Ok(omega.mantissa * (omega.log_scale - log_modulation(x, exps)?).exp())
}

/// Fixed smooth angular factor of the perturbation profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationProfile {
    /// chi_r = (3 + cos)/4, chi_theta = (3 + sin)/4
    Cosine,
    /// chi = 1 (the envelopes themselves)
    Uniform,
}

/// Concrete perturbation field realizing the hypothesis envelopes
///
///   |u_r| <= nu r^{-1/2} e^{-r(1-cos)/2} + nu r^{-1-eps},
///   |u_t| <= nu r^{-1}   e^{-r(1-cos)/2} + nu r^{-1-eps},
///
/// as sign-definite profiles (envelope times a fixed angular factor <= 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationModel {
    pub nu: f64,
    pub epsilon: f64,
    pub profile: PerturbationProfile,
}

impl PerturbationModel {
    pub fn new(nu: f64, epsilon: f64, profile: PerturbationProfile) -> Result<Self> {
        if !(nu >= 0.0) {
            return Err(Error::Config(format!("nu must be nonnegative, got {nu}")));
        }
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(Error::Config(format!(
                "epsilon must lie in (0, 1/2), got {epsilon}"
            )));
        }
        Ok(PerturbationModel {
            nu,
            epsilon,
            profile,
        })
    }

    pub fn none() -> Self {
        PerturbationModel {
            nu: 0.0,
            epsilon: 0.25,
            profile: PerturbationProfile::Uniform,
        }
    }

    fn chi(&self, theta: f64) -> (f64, f64) {
        match self.profile {
            PerturbationProfile::Cosine => ((3.0 + theta.cos()) / 4.0, (3.0 + theta.sin()) / 4.0),
            PerturbationProfile::Uniform => (1.0, 1.0),
        }
    }

    /// Polar components (u_r, u_theta) of the perturbation at x.
    pub fn u_bar_polar(&self, x: &PolarPoint) -> (f64, f64) {
        if self.nu == 0.0 {
            return (0.0, 0.0);
        }
        let w2 = (-0.5 * wake_exponent(x)).exp();
        let tail = x.r.powf(-1.0 - self.epsilon);
        let (cr, ct) = self.chi(x.theta);
        (
            self.nu * (w2 / x.r.sqrt() + tail) * cr,
            self.nu * (w2 / x.r + tail) * ct,
        )
    }
}

/// The drift and potential coefficients of the transformed equation
///
///   Delta a - 2 d_r a - a/r = v . grad a + phi a + R,
///
/// obtained by chain-rule substitution of omega = m a into the vorticity
/// equation; certified numerically by the transform-residual check.
#[derive(Debug, Clone, Copy)]
pub struct CoefficientField {
    pub exps: DecayExponents,
    pub pert: PerturbationModel,
}

impl CoefficientField {
    pub fn new(exps: DecayExponents, pert: PerturbationModel) -> Self {
        CoefficientField { exps, pert }
    }

    /// Harmonic drift u_h = (2A/r) e_r + (2B/r) e_theta.
    pub fn u_h(&self, x: &PolarPoint) -> Vec2 {
        (x.e_r() * (2.0 * self.exps.a) + x.e_theta() * (2.0 * self.exps.b)) * (1.0 / x.r)
    }

    /// Polar components (v_r, v_theta) of the drift coefficient:
    ///   v_r = (2/r)(A cos - B sin) + u_r,
    ///   v_t = -2 q'(theta) log r / r + 2B/r + u_t.
    pub fn v_polar(&self, x: &PolarPoint) -> (f64, f64) {
        let (ur, ut) = self.pert.u_bar_polar(x);
        let vr = 2.0 / x.r * (self.exps.a * x.theta.cos() - self.exps.b * x.theta.sin()) + ur;
        let vt = -2.0 * self.exps.q_prime(x.theta) * x.r.ln() / x.r
            + 2.0 * self.exps.b / x.r
            + ut;
        (vr, vt)
    }

    pub fn v_cartesian(&self, x: &PolarPoint) -> Vec2 {
        let (vr, vt) = self.v_polar(x);
        x.e_r() * vr + x.e_theta() * vt
    }

    /// Potential coefficient:
    ///   phi = -q'' ln r / r^2 - q^2/r^2 - q'^2 ln^2 r / r^2
    ///         + 2 A q / r^2 + 2 B q' ln r / r^2 + u_r P + u_t Q,
    /// with P = q/r - (1 - cos), Q = q' ln r / r - sin (the polar components
    /// of grad log m).
    pub fn phi(&self, x: &PolarPoint) -> f64 {
        let th = x.theta;
        let q = self.exps.q(th);
        let qp = self.exps.q_prime(th);
        let qpp = self.exps.q_second(th);
        let lr = x.r.ln();
        let r2 = x.r * x.r;
        let s_half = (0.5 * th).sin();
        let p_rad = q / x.r - 2.0 * s_half * s_half;
        let p_ang = qp * lr / x.r - th.sin();
        let (ur, ut) = self.pert.u_bar_polar(x);
        -qpp * lr / r2 - q * q / r2 - qp * qp * lr * lr / r2
            + 2.0 * self.exps.a * q / r2
            + 2.0 * self.exps.b * qp * lr / r2
            + ur * p_rad
            + ut * p_ang
    }

    /// Transformed source R = m^{-1} curl f.
    pub fn source_amplitude(&self, source: &SourceTerm, x: &PolarPoint) -> Result<f64> {
        let c = source.curl(x.vec());
        if c == 0.0 {
            return Ok(0.0);
        }
        Ok(c * (-log_modulation(x, &self.exps)?).exp())
    }
}

/// Geometrically graded radial grid times a uniform angular grid.
///
/// theta_j = -pi + 2 pi (j+1)/n_theta, so theta covers (-pi, pi] and, for
/// even n_theta, contains both 0 and pi exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    pub r: Vec<f64>,
    pub theta: Vec<f64>,
    /// uniform step of s = log r
    pub log_step: f64,
}

impl PolarGrid {
    pub fn new(r0: f64, r_max: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        if !(r0 > 0.0 && r_max > r0) {
            return Err(Error::Config(format!(
                "need 0 < r0 < r_max, got {r0}, {r_max}"
            )));
        }
        if n_r < 8 || n_theta < 8 || n_theta % 2 != 0 {
            return Err(Error::Config(
                "grid needs n_r >= 8 and even n_theta >= 8".into(),
            ));
        }
        let log_step = (r_max / r0).ln() / (n_r - 1) as f64;
        let r = (0..n_r)
            .map(|i| r0 * (log_step * i as f64).exp())
            .collect();
        let theta = (0..n_theta)
            .map(|j| -PI + 2.0 * PI * (j + 1) as f64 / n_theta as f64)
            .collect();
        Ok(PolarGrid {
            r,
            theta,
            log_step,
        })
    }

    /// Default grid of the fixed-point experiments.
    pub fn standard() -> Self {
        Self::new(1.0, 80.0, 128, 64).unwrap()
    }

    pub fn n_r(&self) -> usize {
        self.r.len()
    }

    pub fn n_theta(&self) -> usize {
        self.theta.len()
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_theta() + j
    }

    pub fn node(&self, i: usize, j: usize) -> PolarPoint {
        PolarPoint::from_polar(self.r[i], self.theta[j])
    }

    /// Index of the angular node closest to `theta`.
    pub fn theta_index(&self, theta: f64) -> usize {
        let n = self.n_theta();
        let t = crate::geometry::normalize_angle(theta);
        let jf = (t + PI) * n as f64 / (2.0 * PI) - 1.0;
        let j = jf.round() as i64;
        j.rem_euclid(n as i64) as usize
    }

    /// Area weight of node (i, j) for the polar trapezoid rule:
    /// r^2 (radial half-weight at the ends) * dlog r * dtheta.
    pub fn area_weight(&self, i: usize, j: usize) -> f64 {
        let _ = j;
        let edge = if i == 0 || i + 1 == self.n_r() { 0.5 } else { 1.0 };
        let dtheta = 2.0 * PI / self.n_theta() as f64;
        edge * self.r[i] * self.r[i] * self.log_step * dtheta
    }
}

/// The transformed vorticity amplitude sampled on a polar grid, with its
/// derivative arrays (filled by [`AmplitudeField::differentiate`]).
#[derive(Debug, Clone)]
pub struct AmplitudeField {
    pub grid: PolarGrid,
    /// a(r_i, theta_j), row-major in i
    pub values: Vec<f64>,
    /// d a / d r
    pub ddr: Vec<f64>,
    /// d a / d theta
    pub ddtheta: Vec<f64>,
}

impl AmplitudeField {
    pub fn zeros(grid: PolarGrid) -> Self {
        let n = grid.n_r() * grid.n_theta();
        AmplitudeField {
            grid,
            values: vec![0.0; n],
            ddr: vec![0.0; n],
            ddtheta: vec![0.0; n],
        }
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    /// Cartesian gradient at node (i, j) from the derivative arrays.
    pub fn gradient(&self, i: usize, j: usize) -> Vec2 {
        let p = self.grid.node(i, j);
        let k = self.grid.idx(i, j);
        p.e_r() * self.ddr[k] + p.e_theta() * (self.ddtheta[k] / p.r)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Fill the derivative arrays: spectral differentiation in theta,
    /// fourth-order compact differences in s = log r (so d/dr = (1/r) d/ds).
    pub fn differentiate(&mut self) {
        let (nr, nt) = (self.grid.n_r(), self.grid.n_theta());

        // spectral periodic differentiation matrix weights
        let mut wspec = vec![0.0; nt];
        let h = 2.0 * PI / nt as f64;
        for (m, w) in wspec.iter_mut().enumerate().skip(1) {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            *w = 0.5 * sign / (0.5 * m as f64 * h).tan();
        }
        // f'_j = sum_m D_m f_{j-m} with D_m = (1/2)(-1)^m cot(m h / 2)
        for i in 0..nr {
            let row = &self.values[i * nt..(i + 1) * nt];
            for j in 0..nt {
                let mut s = 0.0;
                for (m, w) in wspec.iter().enumerate().skip(1) {
                    s += w * row[(j + nt - m) % nt];
                }
                self.ddtheta[i * nt + j] = s;
            }
        }

        // compact 4th-order scheme in s = log r, one column at a time
        let hs = self.grid.log_step;
        let mut rhs = vec![0.0; nr];
        let mut diag = vec![0.0; nr];
        let mut lower = vec![0.0; nr];
        let mut upper = vec![0.0; nr];
        let mut sol = vec![0.0; nr];
        for j in 0..nt {
            // boundary closures: g'_0 + 3 g'_1 = (1/h)(-17/6 g0 + 3/2 g1 + 3/2 g2 - 1/6 g3)
            diag[0] = 1.0;
            upper[0] = 3.0;
            rhs[0] = (-17.0 / 6.0 * self.value(0, j) + 1.5 * self.value(1, j)
                + 1.5 * self.value(2, j)
                - self.value(3, j) / 6.0)
                / hs;
            for i in 1..nr - 1 {
                lower[i] = 0.25;
                diag[i] = 1.0;
                upper[i] = 0.25;
                rhs[i] = 0.75 * (self.value(i + 1, j) - self.value(i - 1, j)) / hs;
            }
            let n = nr - 1;
            diag[n] = 1.0;
            lower[n] = 3.0;
            rhs[n] = (17.0 / 6.0 * self.value(n, j) - 1.5 * self.value(n - 1, j)
                - 1.5 * self.value(n - 2, j)
                + self.value(n - 3, j) / 6.0)
                / hs;

            thomas(&lower, &mut diag.clone(), &upper, &mut rhs.clone(), &mut sol);
            for i in 0..nr {
                self.ddr[i * nt + j] = sol[i] / self.grid.r[i];
            }
        }
    }
}

/// Tridiagonal solve (Thomas algorithm); `diag` and `rhs` are scratch.
fn thomas(lower: &[f64], diag: &mut [f64], upper: &[f64], rhs: &mut [f64], out: &mut [f64]) {
    let n = diag.len();
    for i in 1..n {
        let m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    out[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        out[i] = (rhs[i] - upper[i] * out[i + 1]) / diag[i];
    }
}

/// mu_1: volume contribution to the angular profile, from the source curl:
/// -(1/sqrt(8 pi)) int r0^{-q(th0)} e^{r0 (cos(th - th0) - cos th0)} curl f.
pub fn mu1(theta: f64, source: &SourceTerm, exps: &DecayExponents, tol: f64) -> Result<f64> {
    let mut acc = 0.0;
    for bump in &source.bumps {
        let v = quad::disk_quadrature(
            bump.center,
            bump.radius,
            &mut |y: Vec2| {
                let p = PolarPoint::from_vec(y);
                let c = bump.curl(y);
                if c == 0.0 || p.r == 0.0 {
                    return [0.0];
                }
                let w = p.r * (crate::geometry::normalize_angle(theta - p.theta).cos()
                    - p.theta.cos());
                [p.r.powf(-exps.q(p.theta)) * w.exp() * c]
            },
            tol,
        )?
        .values;
        acc += v[0];
    }
    Ok(-INV_SQRT_8PI * acc)
}

/// mu_2: feedback contribution from a converged amplitude field:
/// -(1/sqrt(8 pi)) int e^{-r0 (1 - cos(th - th0))} (phi a + v . grad a).
pub fn mu2(theta: f64, field: &AmplitudeField, coeffs: &CoefficientField) -> f64 {
    let grid = &field.grid;
    let mut acc = 0.0;
    for i in 0..grid.n_r() {
        for j in 0..grid.n_theta() {
            let p = grid.node(i, j);
            let w0 = crate::geometry::wake_exponent_of(p.r, theta - p.theta);
            if w0 > 46.0 {
                continue;
            }
            let (vr, vt) = coeffs.v_polar(&p);
            let k = grid.idx(i, j);
            let s = coeffs.phi(&p) * field.values[k]
                + vr * field.ddr[k]
                + vt * field.ddtheta[k] / p.r;
            acc += grid.area_weight(i, j) * (-w0).exp() * s;
        }
    }
    -INV_SQRT_8PI * acc
}

/// Classical asymptote grad G(x) . F_perp, wake-scaled.
pub fn classical_asymptote(x: &PolarPoint, force: Vec2) -> Result<WakeScaled> {
    Ok(kernels::grad_g(x)?.dot(force.perp()))
}

/// Improved asymptote grad G(x) . F_perp(theta), with the angle-weighted
/// force computed from the scene.
pub fn improved_asymptote(scene: &Scene, x: &PolarPoint) -> Result<WakeScaled> {
    let f_theta = crate::fields::net_force_angular(scene, x.theta)?;
    Ok(kernels::grad_g(x)?.dot(f_theta.perp()))
}

/// Modified asymptote r^{q(theta)} mu(theta) r^{-1/2} e^{-r(1-cos)}; the
/// caller supplies mu at the evaluation angle.
pub fn modified_asymptote(x: &PolarPoint, exps: &DecayExponents, mu: f64) -> Result<WakeScaled> {
    if x.r == 0.0 {
        return Err(Error::Singularity {
            what: "modified_asymptote",
        });
    }
    Ok(WakeScaled::new(
        mu * x.r.powf(exps.q(x.theta) - 0.5),
        -wake_exponent(x),
    ))
}

/// Angular profile extracted from the far zone of an amplitude field.
#[derive(Debug, Clone)]
pub struct MuFit {
    pub theta: Vec<f64>,
    pub mu: Vec<f64>,
    /// max |mu shift| / max |mu| under a 25% window shift
    pub stability: f64,
}

fn fit_window(
    field: &AmplitudeField,
    window: (f64, f64),
    epsilon: f64,
) -> Result<Vec<f64>> {
    let grid = &field.grid;
    let idx: Vec<usize> = (0..grid.n_r())
        .filter(|&i| grid.r[i] >= window.0 && grid.r[i] <= window.1)
        .collect();
    if idx.len() < 5 {
        return Err(Error::Fit(format!(
            "window [{}, {}] contains {} radial nodes, need >= 5",
            window.0,
            window.1,
            idx.len()
        )));
    }
    // least squares for y = c0 + c1 r^{-eps} with y = a sqrt(r)
    let mut out = Vec::with_capacity(grid.n_theta());
    let n = idx.len() as f64;
    let (mut sx, mut sxx) = (0.0, 0.0);
    for &i in &idx {
        let x = grid.r[i].powf(-epsilon);
        sx += x;
        sxx += x * x;
    }
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-12 * n * sxx {
        return Err(Error::Fit("ill-conditioned basis".into()));
    }
    for j in 0..grid.n_theta() {
        let (mut sy, mut sxy) = (0.0, 0.0);
        for &i in &idx {
            let x = grid.r[i].powf(-epsilon);
            let y = field.value(i, j) * grid.r[i].sqrt();
            sy += y;
            sxy += x * y;
        }
        let c0 = (sxx * sy - sx * sxy) / det;
        out.push(c0);
    }
    Ok(out)
}

/// Fit mu(theta_j) as the constant of a(r, theta) sqrt(r) = c0 + c1 r^{-eps}
/// over the window, with a stability estimate from shifting the window start
/// by 25% of its length.
pub fn fit_mu(field: &AmplitudeField, window: (f64, f64), epsilon: f64) -> Result<MuFit> {
    let mu = fit_window(field, window, epsilon)?;
    let shift = 0.25 * (window.1 - window.0);
    let mu_shifted = fit_window(field, (window.0 + shift, window.1), epsilon)?;
    let scale = mu
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    let stability = mu
        .iter()
        .zip(&mu_shifted)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / scale;
    Ok(MuFit {
        theta: field.grid.theta.clone(),
        mu,
        stability,
    })
}

/// CSV emitter for an amplitude field (theta-major rows).
pub fn write_amplitude_csv(field: &AmplitudeField, out: &mut impl std::io::Write) -> std::io::Result<()> {
    writeln!(out, "r,theta,a,da_dr,da_dtheta")?;
    let grid = &field.grid;
    for j in 0..grid.n_theta() {
        for i in 0..grid.n_r() {
            let k = grid.idx(i, j);
            writeln!(
                out,
                "{},{},{},{},{}",
                grid.r[i], grid.theta[j], field.values[k], field.ddr[k], field.ddtheta[k]
            )?;
        }
    }
    Ok(())
}

/// CSV emitter for a fitted angular profile.
pub fn write_mu_csv(fit: &MuFit, out: &mut impl std::io::Write) -> std::io::Result<()> {
    writeln!(out, "theta,mu,stability")?;
    for (t, m) in fit.theta.iter().zip(&fit.mu) {
        writeln!(out, "{},{},{}", t, m, fit.stability)?;
    }
    Ok(())
}
