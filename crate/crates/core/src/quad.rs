//! Quadrature building blocks: Gauss-Legendre rules, adaptive integration
//! over disks (with optional desingularization in local polar coordinates
//! around an interior singular point), the periodic trapezoid rule for
//! boundary integrals, and fixed-order reductions.

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use std::f64::consts::TAU;

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights by Newton iteration on P_n; accurate to ~1e-15.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for k in 0..m {
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Legendre recurrence for P_n(x) and P_n'(x).
                let mut p0 = 1.0;
                let mut p1 = x;
                for j in 2..=n {
                    let jf = j as f64;
                    let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[k] = -x;
            weights[k] = w;
            nodes[n - 1 - k] = x;
            weights[n - 1 - k] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let c = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(mid + c * x);
        }
        c * s
    }
}

/// Adaptive 1D integration under a global absolute error budget: intervals
/// live on a worklist, the one with the largest GL8/GL16 discrepancy is
/// bisected until the summed estimate drops below `tol`.
pub fn adaptive_1d(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    struct Seg {
        a: f64,
        b: f64,
        q: f64,
        err: f64,
    }
    let lo = GaussLegendre::new(8);
    let hi = GaussLegendre::new(16);
    let eval = |f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64| {
        let q_lo = lo.integrate(a, b, &mut *f);
        let q_hi = hi.integrate(a, b, &mut *f);
        Seg {
            a,
            b,
            q: q_hi,
            err: (q_hi - q_lo).abs(),
        }
    };
    let mut segs = vec![eval(f, a, b)];
    for _ in 0..4000 {
        let total_err: f64 = segs.iter().map(|s| s.err).sum();
        if total_err <= tol {
            return Ok(segs.iter().map(|s| s.q).sum());
        }
        let (worst, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, s)| (i, s.err))
            .unwrap();
        let s = segs.swap_remove(worst);
        if s.b - s.a < 1e-15 * (1.0 + s.a.abs() + s.b.abs()) {
            // cannot split further; keep it and accept its error
            let mut kept = s;
            kept.err = 0.0;
            segs.push(kept);
            continue;
        }
        let mid = 0.5 * (s.a + s.b);
        segs.push(eval(f, s.a, mid));
        segs.push(eval(f, mid, s.b));
    }
    let estimate = segs.iter().map(|s| s.q).sum();
    let error_bound = segs.iter().map(|s| s.err).sum();
    Err(Error::Quadrature {
        estimate,
        error_bound,
        tol,
    })
}

/// Periodic trapezoid sum (spectrally accurate for smooth periodic
/// integrands): int_0^{2 pi} f = (2 pi / n) sum f(2 pi m / n).
pub fn periodic_trapezoid(n: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let h = TAU / n as f64;
    let mut s = 0.0;
    for m in 0..n {
        s += f(h * m as f64);
    }
    h * s
}

/// Result of an adaptive 2D rule: values plus the doubling error estimate.
#[derive(Debug, Clone, Copy)]
pub struct QuadOutcome<const N: usize> {
    pub values: [f64; N],
    pub error: f64,
}

fn max_abs_diff<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..N {
        m = m.max((a[i] - b[i]).abs());
    }
    m
}

/// Integral of a smooth vector integrand over a disk, in polar coordinates
/// around the center: trapezoid in the angle, composite Gauss-Legendre in the
/// radius, refined by doubling until the change is below `tol` (absolute).
pub fn disk_quadrature<const N: usize>(
    center: Vec2,
    radius: f64,
    f: &mut impl FnMut(Vec2) -> [f64; N],
    tol: f64,
) -> Result<QuadOutcome<N>> {
    let gl = GaussLegendre::new(12);
    let mut prev: Option<[f64; N]> = None;
    for level in 0..6u32 {
        let n_phi = 12usize << level;
        let n_panels = 1usize << level;
        let mut acc = [0.0; N];
        let dphi = TAU / n_phi as f64;
        for jp in 0..n_phi {
            let phi = dphi * jp as f64;
            let (cp, sp) = (phi.cos(), phi.sin());
            for panel in 0..n_panels {
                let s0 = radius * panel as f64 / n_panels as f64;
                let s1 = radius * (panel + 1) as f64 / n_panels as f64;
                let c = 0.5 * (s1 - s0);
                let mid = 0.5 * (s0 + s1);
                for (xn, wn) in gl.nodes.iter().zip(&gl.weights) {
                    let s = mid + c * xn;
                    let p = Vec2::new(center.x + s * cp, center.y + s * sp);
                    let v = f(p);
                    let w = wn * c * s * dphi;
                    for i in 0..N {
                        acc[i] += w * v[i];
                    }
                }
            }
        }
        if let Some(p) = prev {
            let err = max_abs_diff(&acc, &p);
            if err <= tol {
                return Ok(QuadOutcome {
                    values: acc,
                    error: err,
                });
            }
        }
        prev = Some(acc);
    }
    let last = prev.unwrap();
    Err(Error::Quadrature {
        estimate: last[0],
        error_bound: f64::INFINITY,
        tol,
    })
}

/// Same integral when the integrand has an integrable (log or 1/r)
/// singularity at `sing`, a point inside the disk: local polar coordinates
/// around the singularity so the Jacobian cancels the blow-up, geometric
/// radial panels toward it.
pub fn disk_quadrature_desingularized<const N: usize>(
    center: Vec2,
    radius: f64,
    sing: Vec2,
    f: &mut impl FnMut(Vec2) -> [f64; N],
    tol: f64,
) -> Result<QuadOutcome<N>> {
    let d = sing - center;
    debug_assert!(d.norm() < radius, "singularity must lie inside the disk");
    let gl = GaussLegendre::new(12);
    let mut prev: Option<[f64; N]> = None;
    for level in 0..6u32 {
        let n_phi = 16usize << level;
        let n_geo = 8 + 4 * level as usize;
        let mut acc = [0.0; N];
        let dphi = TAU / n_phi as f64;
        for jp in 0..n_phi {
            let phi = dphi * jp as f64;
            let e = Vec2::new(phi.cos(), phi.sin());
            // distance from sing to the disk boundary along direction e
            let de = d.dot(e);
            let s_max = -de + (de * de + radius * radius - d.norm_sq()).sqrt();
            // geometric panels accumulating at s = 0
            for panel in 0..n_geo {
                let hi_frac = 0.5f64.powi(panel as i32);
                let lo_frac = if panel + 1 == n_geo {
                    0.0
                } else {
                    0.5 * hi_frac
                };
                let (s0, s1) = (s_max * lo_frac, s_max * hi_frac);
                let c = 0.5 * (s1 - s0);
                let mid = 0.5 * (s0 + s1);
                for (xn, wn) in gl.nodes.iter().zip(&gl.weights) {
                    let s = mid + c * xn;
                    let p = Vec2::new(sing.x + s * e.x, sing.y + s * e.y);
                    let v = f(p);
                    let w = wn * c * s * dphi;
                    for i in 0..N {
                        acc[i] += w * v[i];
                    }
                }
            }
        }
        if let Some(p) = prev {
            let err = max_abs_diff(&acc, &p);
            if err <= tol {
                return Ok(QuadOutcome {
                    values: acc,
                    error: err,
                });
            }
        }
        prev = Some(acc);
    }
    let last = prev.unwrap();
    Err(Error::Quadrature {
        estimate: last[0],
        error_bound: f64::INFINITY,
        tol,
    })
}

/// Integral over a disk of an integrand with a singularity at `origin`
/// OUTSIDE (but possibly very near) the disk: rays from the origin sweep the
/// cone subtended by the disk, and the radial panels are graded
/// geometrically from the near edge where the kernel is steep.
pub fn disk_quadrature_exterior_point<const N: usize>(
    center: Vec2,
    radius: f64,
    origin: Vec2,
    f: &mut impl FnMut(Vec2) -> [f64; N],
    tol: f64,
) -> Result<QuadOutcome<N>> {
    let d = center - origin;
    let dist = d.norm();
    debug_assert!(dist >= radius, "origin must lie outside the disk");
    let alpha = d.y.atan2(d.x);
    let beta = (radius / dist).min(1.0).asin();
    let gl = GaussLegendre::new(12);
    let mut prev: Option<[f64; N]> = None;
    for level in 0..6u32 {
        let n_phi = 8usize << level;
        let n_geo = 10 + 4 * level as usize;
        let mut acc = [0.0; N];
        for pp in 0..n_phi {
            // GL panel distribution over the cone [alpha - beta, alpha + beta]
            let p0 = alpha - beta + 2.0 * beta * pp as f64 / n_phi as f64;
            let p1 = alpha - beta + 2.0 * beta * (pp + 1) as f64 / n_phi as f64;
            let cphi = 0.5 * (p1 - p0);
            let mphi = 0.5 * (p0 + p1);
            for (pn, pw) in gl.nodes.iter().zip(&gl.weights) {
                let phi = mphi + cphi * pn;
                let e = Vec2::new(phi.cos(), phi.sin());
                let de = d.dot(e);
                let disc = de * de + radius * radius - dist * dist;
                if disc <= 0.0 {
                    continue;
                }
                let s_in = de - disc.sqrt();
                let s_out = de + disc.sqrt();
                if s_out <= 0.0 {
                    continue;
                }
                let s_in = s_in.max(0.0);
                // log-graded radial panels from the near edge
                let ratio: f64 = (s_out / s_in.max(1e-3 * radius)).max(2.0);
                for panel in 0..n_geo {
                    let lo = s_in * ratio.powf(panel as f64 / n_geo as f64);
                    let hi = if panel + 1 == n_geo {
                        s_out
                    } else {
                        (s_in * ratio.powf((panel + 1) as f64 / n_geo as f64)).min(s_out)
                    };
                    if hi <= lo {
                        continue;
                    }
                    let c = 0.5 * (hi - lo);
                    let mid = 0.5 * (hi + lo);
                    for (xn, wn) in gl.nodes.iter().zip(&gl.weights) {
                        let s = mid + c * xn;
                        let p = Vec2::new(origin.x + s * e.x, origin.y + s * e.y);
                        let v = f(p);
                        let w = wn * c * s * (pw * cphi);
                        for i in 0..N {
                            acc[i] += w * v[i];
                        }
                    }
                }
            }
        }
        if let Some(pv) = prev {
            let err = max_abs_diff(&acc, &pv);
            if err <= tol {
                return Ok(QuadOutcome {
                    values: acc,
                    error: err,
                });
            }
        }
        prev = Some(acc);
    }
    let last = prev.unwrap();
    Err(Error::Quadrature {
        estimate: last[0],
        error_bound: f64::INFINITY,
        tol,
    })
}

/// Pairwise (cascade) summation with a fixed reduction order; keeps parallel
/// sweeps bitwise independent of the worker count.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gauss_legendre_is_exact_on_polynomials() {
        let gl = GaussLegendre::new(8);
        // degree 15 polynomial integrated exactly by an 8-point rule
        let q = gl.integrate(0.0, 1.0, |x| x.powi(15));
        assert!((q - 1.0 / 16.0).abs() < 1e-14);
        let q = gl.integrate(-2.0, 3.0, |x| 5.0 * x.powi(4) - x);
        assert!((q - (3.0f64.powi(5) + 2.0f64.powi(5) - (9.0 - 4.0) / 2.0)).abs() < 1e-11);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        // int_0^1 ln(x) dx = -1
        let q = adaptive_1d(&mut |x: f64| x.ln(), 1e-300, 1.0, 1e-10).unwrap();
        assert!((q + 1.0).abs() < 1e-8, "{q}");
        // int_0^1 x^{-1/2} dx = 2
        let q = adaptive_1d(&mut |x: f64| x.sqrt().recip(), 1e-300, 1.0, 1e-8).unwrap();
        assert!((q - 2.0).abs() < 1e-6, "{q}");
    }

    #[test]
    fn periodic_trapezoid_is_spectral() {
        let q = periodic_trapezoid(32, |t| (3.0 * t).cos().powi(2));
        assert!((q - PI).abs() < 1e-13);
    }

    #[test]
    fn disk_rule_matches_known_integrals() {
        // area
        let out = disk_quadrature(Vec2::new(0.3, -0.2), 2.0, &mut |_| [1.0], 1e-12).unwrap();
        assert!((out.values[0] - 4.0 * PI).abs() < 1e-10);
        // int (1 - |x|^2)^4 over the unit disk = pi/5
        let out = disk_quadrature(
            Vec2::ZERO,
            1.0,
            &mut |p: Vec2| [(1.0 - p.norm_sq()).powi(4)],
            1e-12,
        )
        .unwrap();
        assert!((out.values[0] - PI / 5.0).abs() < 1e-10);
    }

    #[test]
    fn desingularized_rule_handles_log_kernel() {
        // int_{|y| < 1} ln|y - x0| dy with x0 = (0.3, 0.1):
        // mean-value: for |x0| < 1 the integral is pi (|x0|^2 - 1)/... use
        // the exact value pi * (|x0|^2 - 1)/2 ... check against the plain
        // radial formula: int ln|y-x0| dy = pi (|x0|^2/2 - 1/2)  for R = 1.
        let x0 = Vec2::new(0.3, 0.1);
        let exact = PI * (x0.norm_sq() - 1.0) / 2.0;
        let out =
            disk_quadrature_desingularized(Vec2::ZERO, 1.0, x0, &mut |p| [(p - x0).norm().ln()], 1e-10)
                .unwrap();
        assert!((out.values[0] - exact).abs() < 1e-8, "{} vs {exact}", out.values[0]);
    }

    #[test]
    fn desingularized_matches_plain_on_smooth_integrand() {
        let f = |p: Vec2| [(p.x - 0.2).powi(2) * (p.y + 1.0)];
        let a = disk_quadrature(Vec2::new(1.0, 0.5), 1.5, &mut f.clone(), 1e-11).unwrap();
        let b = disk_quadrature_desingularized(
            Vec2::new(1.0, 0.5),
            1.5,
            Vec2::new(0.7, 0.2),
            &mut f.clone(),
            1e-11,
        )
        .unwrap();
        assert!((a.values[0] - b.values[0]).abs() < 1e-9);
    }

    #[test]
    fn pairwise_sum_basics() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[1.5]), 1.5);
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500500.0);
    }
}
