//! Closed-form evaluation of the Oseen kernels: the fundamental pair (E, e),
//! the stream/log potentials psi, H, the vorticity kernel G and its
//! derivatives, the wake/harmonic split of E, and the Green function W of the
//! transformed amplitude operator, all in both exact and leading-asymptotic
//! form.
//!
//! Every exponentially small quantity is returned as a [`WakeScaled`] value:
//! a mantissa together with a nonpositive decay exponent. Callers combine
//! exponents additively and exponentiate only at the final reduction, so
//! nothing here overflows for radii up to the hundreds where e^r alone would.

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, relative_polar, wake_exponent, Mat2, PolarPoint, Vec2};
use crate::specfun::scaled_bessel;

const INV_2PI: f64 = 1.0 / (2.0 * std::f64::consts::PI);

/// sqrt(1/(8 pi)), the coefficient of every leading wake term.
pub const INV_SQRT_8PI: f64 = 0.199_471_140_200_716_34;

/// A value of the form mantissa * e^{log_scale} with log_scale <= 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WakeScaled {
    pub mantissa: f64,
    pub log_scale: f64,
}

impl WakeScaled {
    pub fn new(mantissa: f64, log_scale: f64) -> Self {
        // The stored exponent is a decay exponent; formulas guarantee <= 0
        // mathematically, so only roundoff is clamped here.
        WakeScaled {
            mantissa,
            log_scale: log_scale.min(0.0),
        }
    }

    pub fn value(&self) -> f64 {
        self.mantissa * self.log_scale.exp()
    }

    /// mantissa * e^{log_scale + offset}; lets callers undo a known decay
    /// factor without ever forming huge intermediates.
    pub fn value_with_offset(&self, log_offset: f64) -> f64 {
        self.mantissa * (self.log_scale + log_offset).exp()
    }
}

/// A 2-vector with one shared decay exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WakeVec2 {
    pub mantissa: Vec2,
    pub log_scale: f64,
}

impl WakeVec2 {
    pub fn new(mantissa: Vec2, log_scale: f64) -> Self {
        WakeVec2 {
            mantissa,
            log_scale: log_scale.min(0.0),
        }
    }

    pub fn value(&self) -> Vec2 {
        self.mantissa * self.log_scale.exp()
    }

    pub fn value_with_offset(&self, log_offset: f64) -> Vec2 {
        self.mantissa * (self.log_scale + log_offset).exp()
    }

    pub fn dot(&self, v: Vec2) -> WakeScaled {
        WakeScaled::new(self.mantissa.dot(v), self.log_scale)
    }
}

/// The Oseen fundamental solution block at one point.
#[derive(Debug, Clone, Copy)]
pub struct OseenFundamental {
    /// Velocity fundamental tensor E (symmetric).
    pub tensor: Mat2,
    /// Pressure fundamental vector e = -grad H.
    pub pressure: Vec2,
    /// Vorticity kernel grad G, wake-scaled.
    pub grad_g: WakeVec2,
    /// G = (1/2pi) e^{r cos theta} K0(r), wake-scaled.
    pub g: WakeScaled,
    /// H = (1/2pi) log r.
    pub h: f64,
    /// psi = (H + G)/2.
    pub psi: f64,
}

fn require_off_origin(x: &PolarPoint, what: &'static str) -> Result<()> {
    if x.r == 0.0 {
        return Err(Error::Singularity { what });
    }
    Ok(())
}

/// Full fundamental-solution block (E, e, grad G, G, H, psi) at x != 0.
pub fn fundamental(x: &PolarPoint) -> Result<OseenFundamental> {
    require_off_origin(x, "fundamental")?;
    let b = scaled_bessel(x.r)?;
    let w = wake_exponent(x);
    let g = WakeScaled::new(INV_2PI * b.k0s, -w);
    let grad_g = grad_g_from(x, b.k1s, b.k1m0s, w);

    let g_plain = g.value();
    let grad_g_plain = grad_g.value();
    let h = INV_2PI * x.r.ln();
    let grad_h = Vec2::new(x.x1, x.x2) * (INV_2PI / (x.r * x.r));
    let psi = 0.5 * (h + g_plain);
    let dpsi = (grad_h + grad_g_plain) * 0.5;

    let tensor = Mat2::new(dpsi.x - g_plain, dpsi.y, dpsi.y, -dpsi.x);
    Ok(OseenFundamental {
        tensor,
        pressure: -grad_h,
        grad_g,
        g,
        h,
        psi,
    })
}

fn grad_g_from(x: &PolarPoint, k1s: f64, k1m0s: f64, w: f64) -> WakeVec2 {
    // d1 G = (1/2pi) e^{x1} [K0 - K1 cos th]
    //      = (1/2pi) e^{x1} [K1 (1 - cos th) - (K1 - K0)],
    // d2 G = -(1/2pi) e^{x1} K1 sin th.
    let s = (0.5 * x.theta).sin();
    let one_m_cos = 2.0 * s * s;
    let m1 = INV_2PI * (k1s * one_m_cos - k1m0s);
    let m2 = -INV_2PI * k1s * x.theta.sin();
    WakeVec2::new(Vec2::new(m1, m2), -w)
}

/// grad G alone, wake-scaled.
pub fn grad_g(x: &PolarPoint) -> Result<WakeVec2> {
    require_off_origin(x, "grad_g")?;
    let b = scaled_bessel(x.r)?;
    Ok(grad_g_from(x, b.k1s, b.k1m0s, wake_exponent(x)))
}

/// Hessian of G, wake-scaled: (mantissa matrix, log_scale).
///
/// Grouped as k0s vv^T - k1m0s B + (k1s/r) C with v = (1-cos, -sin) so the
/// individually O(r^{-3/2}) pieces never go through a large cancellation.
pub fn hess_g(x: &PolarPoint) -> Result<(Mat2, f64)> {
    require_off_origin(x, "hess_g")?;
    let b = scaled_bessel(x.r)?;
    let (c, s) = (x.theta.cos(), x.theta.sin());
    let hs = (0.5 * x.theta).sin();
    let omc = 2.0 * hs * hs; // 1 - cos theta
    let v = Vec2::new(omc, -s);
    let vv = Mat2::new(v.x * v.x, v.x * v.y, v.x * v.y, v.y * v.y);
    let bmat = Mat2::new(2.0 * c, s, s, 0.0);
    let cmat = Mat2::new(2.0 * c * c - 1.0, 2.0 * c * s, 2.0 * c * s, 2.0 * s * s - 1.0);
    let m = vv.scale(b.k0s) + cmat.scale(b.k1s / x.r) - bmat.scale(b.k1m0s);
    Ok((m.scale(INV_2PI), -wake_exponent(x)))
}

/// Leading term of grad G: (1/sqrt(8 pi)) (1-cos, -sin) r^{-1/2}, wake-scaled.
pub fn grad_g_leading(x: &PolarPoint) -> Result<WakeVec2> {
    require_off_origin(x, "grad_g_leading")?;
    let s = (0.5 * x.theta).sin();
    let v = Vec2::new(2.0 * s * s, -x.theta.sin());
    Ok(WakeVec2::new(
        v * (INV_SQRT_8PI / x.r.sqrt()),
        -wake_exponent(x),
    ))
}

/// The two rank-structured terms of the asymptotic expansion of E.
#[derive(Debug, Clone, Copy)]
pub struct TensorLeading {
    /// Wake matrix including its -r^{-1/2}/sqrt(32 pi) coefficient.
    pub wake_mantissa: Mat2,
    pub log_scale: f64,
    /// Harmonic part (cos, sin; sin, -cos)/(4 pi r); no wake factor.
    pub harmonic: Mat2,
}

/// Leading asymptotic decomposition of E into wake and harmonic parts.
pub fn tensor_leading(x: &PolarPoint) -> Result<TensorLeading> {
    require_off_origin(x, "tensor_leading")?;
    let (c, s) = (x.theta.cos(), x.theta.sin());
    let coeff = -1.0 / (32.0 * std::f64::consts::PI).sqrt() / x.r.sqrt();
    let wake = Mat2::new(1.0 + c, s, s, 1.0 - c).scale(coeff);
    let harm = Mat2::new(c, s, s, -c).scale(0.5 * INV_2PI / x.r);
    Ok(TensorLeading {
        wake_mantissa: wake,
        log_scale: -wake_exponent(x),
        harmonic: harm,
    })
}

/// Wake part of the far-field velocity: -F1 e1 / sqrt(8 pi) r^{-1/2} e^{-r(1-cos)}.
pub fn wake_velocity(x: &PolarPoint, f1: f64) -> Vec2 {
    let amp = -f1 * INV_SQRT_8PI / x.r.sqrt() * (-wake_exponent(x)).exp();
    Vec2::new(amp, 0.0)
}

/// Harmonic part of the far-field velocity: F1/(4 pi) e_r/r - F2/(4 pi) e_th/r.
pub fn harmonic_velocity(x: &PolarPoint, f: Vec2) -> Result<Vec2> {
    require_off_origin(x, "harmonic_velocity")?;
    let c = 0.5 * INV_2PI / x.r;
    Ok(x.e_r() * (c * f.x) - x.e_theta() * (c * f.y))
}

/// W(x, x0) = (1/2pi) e^{r - r0} K0(|x - x0|), wake-scaled with exponent
/// r - r0 - r1 <= 0.
pub fn kernel_w(x: &PolarPoint, x0: &PolarPoint) -> Result<WakeScaled> {
    let rel = relative_polar(x, x0);
    if rel.r1 == 0.0 {
        return Err(Error::Singularity { what: "kernel_w" });
    }
    let b = scaled_bessel(rel.r1)?;
    Ok(WakeScaled::new(INV_2PI * b.k0s, x.r - x0.r - rel.r1))
}

/// Radial and angular derivatives of W with respect to x, sharing one
/// decay exponent.
#[derive(Debug, Clone, Copy)]
pub struct WPolarGrad {
    /// mantissa of dW/dr
    pub dr: f64,
    /// mantissa of (1/r) dW/dtheta
    pub dtheta_over_r: f64,
    pub log_scale: f64,
}

/// Analytic polar gradient of W in x, with the cancellation-prone
/// combination routed through the stored K1 - K0 difference:
///
///   dr W      = (1/2pi) e^{r-r0} [K0(r1)(1 - cos(th1-th)) - (K1-K0)(r1) cos(th1-th)],
///   (1/r) dth W = -(1/2pi) e^{r-r0} K1(r1) r0 sin(th-th0) / r1.
pub fn grad_w(x: &PolarPoint, x0: &PolarPoint) -> Result<WPolarGrad> {
    let rel = relative_polar(x, x0);
    if rel.r1 == 0.0 {
        return Err(Error::Singularity { what: "grad_w" });
    }
    let b = scaled_bessel(rel.r1)?;
    let d = normalize_angle(rel.theta1 - x.theta);
    let sd = (0.5 * d).sin();
    let one_m_cos = 2.0 * sd * sd;
    let dr = INV_2PI * (b.k0s * one_m_cos - b.k1m0s * d.cos());
    let dth =
        -INV_2PI * b.k1s * x0.r * normalize_angle(x.theta - x0.theta).sin() / rel.r1;
    Ok(WPolarGrad {
        dr,
        dtheta_over_r: dth,
        log_scale: (x.r - x0.r - rel.r1).min(0.0),
    })
}

/// Gradient of W with respect to the source point x0 (x0 off the origin):
/// (1/2pi) e^{r-r0} [K0(r1)(ehat1 - ehat_{r0}) + (K1-K0)(r1) ehat1].
pub fn grad_w_x0(x: &PolarPoint, x0: &PolarPoint) -> Result<WakeVec2> {
    let rel = relative_polar(x, x0);
    if rel.r1 == 0.0 {
        return Err(Error::Singularity { what: "grad_w_x0" });
    }
    if x0.r == 0.0 {
        return Err(Error::Domain {
            what: "grad_w_x0",
            detail: "kernel is not differentiable in x0 at the origin".into(),
        });
    }
    let b = scaled_bessel(rel.r1)?;
    let e1 = Vec2::new(rel.theta1.cos(), rel.theta1.sin());
    let er0 = x0.e_r();
    let m = (e1 - er0) * b.k0s + e1 * b.k1m0s;
    Ok(WakeVec2::new(
        m * INV_2PI,
        x.r - x0.r - rel.r1,
    ))
}

/// Leading form of W for r >> r0: (1/sqrt(8 pi)) r^{-1/2} e^{-r0(1-cos(th-th0))}.
pub fn kernel_w_leading(x: &PolarPoint, x0: &PolarPoint) -> f64 {
    let w0 = crate::geometry::wake_exponent_of(x0.r, x.theta - x0.theta);
    INV_SQRT_8PI / x.r.sqrt() * (-w0).exp()
}

/// Leading form of grad_{x0} W: the same scalar times
/// (cos th - cos th0, sin th - sin th0).
pub fn grad_w0_leading(x: &PolarPoint, x0: &PolarPoint) -> Vec2 {
    let v = Vec2::new(
        x.theta.cos() - x0.theta.cos(),
        x.theta.sin() - x0.theta.sin(),
    );
    v * kernel_w_leading(x, x0)
}

/// Shifted-kernel expansion: grad G(x) e^{r0 (cos(th - th0) - cos th0)},
/// the extra factor folded into the mantissa.
pub fn shifted_gradg_leading(x: &PolarPoint, x0: &PolarPoint) -> Result<WakeVec2> {
    let g = grad_g(x)?;
    let f = (x0.r * (normalize_angle(x.theta - x0.theta).cos() - x0.theta.cos())).exp();
    Ok(WakeVec2 {
        mantissa: g.mantissa * f,
        log_scale: g.log_scale,
    })
}

/// All first derivatives of E: `out[i].m[j][k]` = d_i E_{jk}, evaluated in the
/// argument. Plain values; every entry is bounded by construction.
pub fn grad_e_tensor(x: &PolarPoint) -> Result<[Mat2; 2]> {
    require_off_origin(x, "grad_e_tensor")?;
    let (hg_m, hg_ls) = hess_g(x)?;
    let hg = hg_m.scale(hg_ls.exp());
    let rr = x.r * x.r;
    let xh = Vec2::new(x.x1 / x.r, x.x2 / x.r);
    let hh = Mat2::new(
        1.0 - 2.0 * xh.x * xh.x,
        -2.0 * xh.x * xh.y,
        -2.0 * xh.x * xh.y,
        1.0 - 2.0 * xh.y * xh.y,
    )
    .scale(INV_2PI / rr);
    let hpsi = (hh + hg).scale(0.5);
    let gg = grad_g(x)?.value();

    let mut out = [Mat2::ZERO; 2];
    for i in 0..2 {
        let hp_i1 = hpsi.m[i][0];
        let hp_i2 = hpsi.m[i][1];
        let dg_i = if i == 0 { gg.x } else { gg.y };
        out[i] = Mat2::new(hp_i1 - dg_i, hp_i2, hp_i2, -hp_i1);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::to_polar;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn fundamental_point_values() {
        // H vanishes on the unit circle.
        let f = fundamental(&to_polar(0.0, 1.0)).unwrap();
        close(f.h, 0.0, 1e-15);

        // G mantissa at r=1 depends on r only: (1/2pi) k0s(1).
        for th in [0.0, 0.7, -2.1, PI] {
            let f = fundamental(&PolarPoint::from_polar(1.0, th)).unwrap();
            close(f.g.mantissa, 0.18214695633744165, 1e-14);
        }

        // e = -grad H at (2, 0) is (-1/(4 pi), 0).
        let f = fundamental(&to_polar(2.0, 0.0)).unwrap();
        close(f.pressure.x, -1.0 / (4.0 * PI), 1e-15);
        close(f.pressure.y, 0.0, 1e-15);
    }

    #[test]
    fn fundamental_structural_identities() {
        for &(x1, x2) in &[(1.3, -0.4), (0.2, 2.0), (-3.0, 1.0), (10.0, 5.0)] {
            let p = to_polar(x1, x2);
            let f = fundamental(&p).unwrap();
            close(f.psi, 0.5 * (f.h + f.g.value()), 1e-15);
            close(f.tensor.trace(), -f.g.value(), 1e-15);
            close(f.tensor.m[0][1], f.tensor.m[1][0], 0.0);
        }
    }

    #[test]
    fn grad_g_axis_symmetry_and_leading() {
        // On the downstream axis the second component vanishes by symmetry.
        let g = grad_g(&to_polar(7.0, 0.0)).unwrap();
        close(g.mantissa.y, 0.0, 1e-16);

        // grad_g_leading at theta = 0 is the zero vector.
        let l = grad_g_leading(&to_polar(5.0, 0.0)).unwrap();
        close(l.mantissa.x, 0.0, 0.0);
        close(l.mantissa.y, 0.0, 0.0);

        // theta = pi, r = 4: mantissa (2, 0)/sqrt(8 pi)/2, log_scale -8.
        let l = grad_g_leading(&to_polar(-4.0, 0.0)).unwrap();
        close(l.mantissa.x, 2.0 * INV_SQRT_8PI / 2.0, 1e-15);
        close(l.mantissa.y, 0.0, 1e-15);
        close(l.log_scale, -8.0, 1e-12);

        // x = (0, 4): leading components +-1.827e-3 (1 + O(1/r)).
        let g = grad_g(&to_polar(0.0, 4.0)).unwrap();
        let lead = 1.0 / (8.0 * PI).sqrt() * 0.5 * (-4.0f64).exp();
        assert!((g.value().x / lead - 1.0).abs() < 0.2);
        assert!((g.value().y / -lead - 1.0).abs() < 0.2);
        close(lead, 1.827e-3, 1e-6);
    }

    #[test]
    fn grad_g_matches_finite_differences() {
        let h = 1e-5;
        for &(x1, x2) in &[(1.5, 0.8), (-2.0, 0.4), (0.3, -1.1)] {
            let g = grad_g(&to_polar(x1, x2)).unwrap().value();
            let gv = |a: f64, b: f64| fundamental(&to_polar(a, b)).unwrap().g.value();
            let fd1 = (gv(x1 + h, x2) - gv(x1 - h, x2)) / (2.0 * h);
            let fd2 = (gv(x1, x2 + h) - gv(x1, x2 - h)) / (2.0 * h);
            assert!((g.x - fd1).abs() < 1e-7 * (1.0 + fd1.abs()), "{} {}", g.x, fd1);
            assert!((g.y - fd2).abs() < 1e-7 * (1.0 + fd2.abs()), "{} {}", g.y, fd2);
        }
    }

    #[test]
    fn hess_g_matches_finite_differences() {
        let h = 1e-5;
        for &(x1, x2) in &[(1.2, 0.9), (-1.7, 0.6)] {
            let (m, ls) = hess_g(&to_polar(x1, x2)).unwrap();
            let hm = m.scale(ls.exp());
            let gg = |a: f64, b: f64| grad_g(&to_polar(a, b)).unwrap().value();
            let d1 = (gg(x1 + h, x2) - gg(x1 - h, x2)) * (0.5 / h);
            let d2 = (gg(x1, x2 + h) - gg(x1, x2 - h)) * (0.5 / h);
            close(hm.m[0][0], d1.x, 1e-6);
            close(hm.m[0][1], d1.y, 1e-6);
            close(hm.m[1][0], d2.x, 1e-6);
            close(hm.m[1][1], d2.y, 1e-6);
        }
    }

    #[test]
    fn grad_e_matches_finite_differences() {
        let h = 1e-5;
        let (x1, x2) = (1.4, -0.7);
        let de = grad_e_tensor(&to_polar(x1, x2)).unwrap();
        let ev = |a: f64, b: f64| fundamental(&to_polar(a, b)).unwrap().tensor;
        let d1 = (ev(x1 + h, x2) - ev(x1 - h, x2)).scale(0.5 / h);
        let d2 = (ev(x1, x2 + h) - ev(x1, x2 - h)).scale(0.5 / h);
        for j in 0..2 {
            for k in 0..2 {
                close(de[0].m[j][k], d1.m[j][k], 1e-6);
                close(de[1].m[j][k], d2.m[j][k], 1e-6);
            }
        }
    }

    #[test]
    fn tensor_leading_at_upstream_angle() {
        let t = tensor_leading(&PolarPoint::from_polar(3.0, PI)).unwrap();
        let coeff = -1.0 / (32.0 * PI).sqrt() / 3.0f64.sqrt();
        close(t.wake_mantissa.m[0][0], 0.0, 1e-15);
        close(t.wake_mantissa.m[1][1], 2.0 * coeff, 1e-15);
        close(t.harmonic.m[0][0], -1.0 / (4.0 * PI * 3.0), 1e-15);
        close(t.harmonic.m[1][1], 1.0 / (4.0 * PI * 3.0), 1e-15);
        close(t.log_scale, -6.0, 1e-12);
    }

    #[test]
    fn velocity_parts() {
        // Coefficient cancellation: F1 = -sqrt(8 pi) at (1, 0) gives e1.
        let v = wake_velocity(&to_polar(1.0, 0.0), -(8.0 * PI).sqrt());
        close(v.x, 1.0, 1e-14);
        close(v.y, 0.0, 0.0);

        // F1 = 0 gives the zero vector.
        let v = wake_velocity(&to_polar(2.0, 1.0), 0.0);
        assert_eq!(v, Vec2::ZERO);

        // Upstream suppression by e^{-2r}.
        let v = wake_velocity(&PolarPoint::from_polar(8.0, PI), 1.0);
        assert!(v.x.abs() < (-(16.0f64)).exp());

        let u = harmonic_velocity(&to_polar(2.0, 0.0), Vec2::new(4.0 * PI, 0.0)).unwrap();
        close(u.x, 0.5, 1e-15);
        close(u.y, 0.0, 1e-15);
        let u = harmonic_velocity(&to_polar(2.0, 0.0), Vec2::new(0.0, 4.0 * PI)).unwrap();
        close(u.x, 0.0, 1e-15);
        close(u.y, -0.5, 1e-15);
        let u = harmonic_velocity(&to_polar(2.0, 0.0), Vec2::ZERO).unwrap();
        assert_eq!(u, Vec2::ZERO);
    }

    #[test]
    fn kernel_w_examples() {
        // x0 at the origin, r = 100: mantissa k0s(100)/2pi, exponent 0.
        let w = kernel_w(&to_polar(100.0, 0.0), &to_polar(0.0, 0.0)).unwrap();
        close(w.mantissa, 0.12517562165912658 * INV_2PI, 1e-14);
        close(w.log_scale, 0.0, 1e-12);
        close(w.mantissa, 0.019922, 1e-5);

        // Colinear downstream: the exponent telescopes to zero.
        let w = kernel_w(&to_polar(10.0, 0.0), &to_polar(5.0, 0.0)).unwrap();
        close(w.log_scale, 0.0, 1e-12);

        // Opposite points: r - r0 - r1 = 10 - 10 - 20.
        let w = kernel_w(&to_polar(-10.0, 0.0), &to_polar(10.0, 0.0)).unwrap();
        close(w.log_scale, -20.0, 1e-12);

        assert!(kernel_w(&to_polar(1.0, 1.0), &to_polar(1.0, 1.0)).is_err());
    }

    #[test]
    fn grad_w_matches_finite_differences() {
        // Relative agreement with central differences of kernel_w at
        // x = (5, 1), x0 = (1, 0).
        let x = to_polar(5.0, 1.0);
        let x0 = to_polar(1.0, 0.0);
        let g = grad_w(&x, &x0).unwrap();
        let h = 1e-6;
        let wv = |r: f64, th: f64| {
            kernel_w(&PolarPoint::from_polar(r, th), &x0)
                .unwrap()
                .value()
        };
        let fd_r = (wv(x.r + h, x.theta) - wv(x.r - h, x.theta)) / (2.0 * h);
        let fd_t = (wv(x.r, x.theta + h) - wv(x.r, x.theta - h)) / (2.0 * h * x.r);
        let scale = g.log_scale.exp();
        assert!(((g.dr * scale) / fd_r - 1.0).abs() < 1e-6);
        assert!(((g.dtheta_over_r * scale) / fd_t - 1.0).abs() < 1e-6);
    }

    #[test]
    fn grad_w_angular_part_vanishes_for_central_source() {
        let g = grad_w(&to_polar(3.0, 2.0), &to_polar(0.0, 0.0)).unwrap();
        assert_eq!(g.dtheta_over_r, 0.0);
    }

    #[test]
    fn grad_w_x0_matches_finite_differences() {
        let x = to_polar(4.0, 1.5);
        let x0 = to_polar(0.8, -0.3);
        let g = grad_w_x0(&x, &x0).unwrap().value();
        let h = 1e-6;
        let wv = |a: f64, b: f64| kernel_w(&x, &to_polar(a, b)).unwrap().value();
        let fd1 = (wv(x0.x1 + h, x0.x2) - wv(x0.x1 - h, x0.x2)) / (2.0 * h);
        let fd2 = (wv(x0.x1, x0.x2 + h) - wv(x0.x1, x0.x2 - h)) / (2.0 * h);
        assert!((g.x / fd1 - 1.0).abs() < 1e-5);
        assert!((g.y / fd2 - 1.0).abs() < 1e-5);
    }

    #[test]
    fn leading_kernels_degenerate_cases() {
        // Aligned angles: exponent zero, leading W = (1/sqrt(8 pi)) r^{-1/2}.
        let x = PolarPoint::from_polar(50.0, 0.9);
        let x0 = PolarPoint::from_polar(2.0, 0.9);
        close(kernel_w_leading(&x, &x0), INV_SQRT_8PI / 50.0f64.sqrt(), 1e-15);
        let g = grad_w0_leading(&x, &x0);
        close(g.x, 0.0, 1e-15);
        close(g.y, 0.0, 1e-15);
    }

    #[test]
    fn shifted_gradg_reduces_to_gradg() {
        // x0 at the origin: the shift factor is exactly one.
        let x = to_polar(12.0, 3.0);
        let a = grad_g(&x).unwrap();
        let b = shifted_gradg_leading(&x, &to_polar(0.0, 0.0)).unwrap();
        assert_eq!(a.mantissa, b.mantissa);

        // theta = 0 with x0 on the positive axis: factor one as well.
        let x = to_polar(30.0, 0.0);
        let b = shifted_gradg_leading(&x, &to_polar(0.7, 0.0)).unwrap();
        let a = grad_g(&x).unwrap();
        assert_eq!(a.mantissa, b.mantissa);
    }

    #[test]
    fn gradg_remainder_order() {
        // r^{3/2} e^{r(1-cos)} |grad_g - grad_g_leading| stays bounded along
        // the ray theta = pi/2, r in [10, 100].
        for i in 0..20 {
            let r = 10.0 * (10.0f64).powf(i as f64 / 19.0);
            let p = PolarPoint::from_polar(r, PI / 2.0);
            let a = grad_g(&p).unwrap();
            let b = grad_g_leading(&p).unwrap();
            let d = a.mantissa - b.mantissa;
            let bound = r.powf(1.5) * d.norm();
            assert!(bound < 1.0, "remainder ratio {bound} at r={r}");
        }
    }

    #[test]
    fn singularity_errors() {
        let origin = to_polar(0.0, 0.0);
        assert!(fundamental(&origin).is_err());
        assert!(grad_g(&origin).is_err());
        assert!(harmonic_velocity(&origin, Vec2::new(1.0, 0.0)).is_err());
    }
}
