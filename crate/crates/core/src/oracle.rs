//! Slow, independent reference evaluators backing the verification tests.
//!
//! Nothing in here is used by the production evaluation paths; the point is
//! that these routines reach their accuracy through different algorithms
//! than the ones they check.

/// Compensated (Kahan) summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn add(&mut self, v: f64) {
        let y = v - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Pairwise (cascade) summation with a fixed reduction order.
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

/// Reference values of (e^x K0, e^x K1, e^x (K1-K0)) through the integral
/// representation K_nu(x) = int_0^inf e^{-x cosh t} cosh(nu t) dt.
///
/// The integrand is even and analytic, so the plain trapezoid rule converges
/// geometrically in 1/h; all three integrands share one pass and are strictly
/// positive, so there is no cancellation anywhere.
pub fn bessel_k_scaled_reference(x: f64) -> (f64, f64, f64) {
    bessel_k_scaled_reference_with_step(x, 1.0)
}

/// Same as [`bessel_k_scaled_reference`] with the step scaled by `h_scale`;
/// used to check self-convergence of the oracle itself.
pub fn bessel_k_scaled_reference_with_step(x: f64, h_scale: f64) -> (f64, f64, f64) {
    assert!(x > 0.0 && x.is_finite());
    let h = h_scale * (0.8 / (8.0 + x.sqrt())).min(0.05);
    // Truncate once x (cosh t - 1) > 50: the tail is below 2e-22 relative.
    let t_max = {
        let z = 1.0 + 50.0 / x;
        (z + (z * z - 1.0).sqrt()).ln()
    };
    let n = (t_max / h).ceil() as usize + 1;
    let mut s0 = KahanSum::default();
    let mut s1 = KahanSum::default();
    let mut sd = KahanSum::default();
    // t = 0 contributes with trapezoid half weight: integrands (1, 1, 0).
    s0.add(0.5);
    s1.add(0.5);
    for k in 1..=n {
        let t = h * k as f64;
        let cm1 = 2.0 * (0.5 * t).sinh().powi(2); // cosh t - 1, cancellation-free
        let w = (-x * cm1).exp();
        s0.add(w);
        s1.add(w * (1.0 + cm1));
        sd.add(w * cm1);
    }
    (h * s0.value(), h * s1.value(), h * sd.value())
}

/// Power-series reference for e^x K0(x), valid for small x (used to validate
/// the integral oracle on (0, 2]).
pub fn k0_scaled_series_reference(x: f64) -> f64 {
    assert!(x > 0.0 && x <= 2.5);
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let t = 0.25 * x * x;
    let mut i0 = 1.0;
    let mut s = 0.0;
    let mut u = 1.0;
    let mut h = 0.0;
    for k in 1..64 {
        let kf = k as f64;
        u *= t / (kf * kf);
        h += 1.0 / kf;
        i0 += u;
        s += h * u;
        if u < 1e-18 * i0 {
            break;
        }
    }
    x.exp() * (-((0.5 * x).ln() + EULER_GAMMA) * i0 + s)
}

/// Divergent asymptotic series for e^x K_nu(x) (nu = 0 or 1), truncated at
/// the smallest term; near machine precision for x >= 30.
pub fn k_scaled_asymptotic_reference(nu: u32, x: f64) -> f64 {
    assert!(x >= 25.0);
    let fournu2 = 4.0 * (nu * nu) as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        let next = term * (fournu2 - (2.0 * kf - 1.0).powi(2)) / (8.0 * kf * x);
        if next.abs() >= term.abs() {
            break; // series started diverging
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    (std::f64::consts::PI / (2.0 * x)).sqrt() * sum
}
