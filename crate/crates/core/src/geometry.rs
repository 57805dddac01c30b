//! Plane geometry in the conventions used throughout the crate: every point
//! carries both Cartesian and polar form, angles live in (-pi, pi], and the
//! wake coordinate r(1-cos theta) is computed cancellation-free.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

/// Plain 2-vector with the handful of operations the kernels need.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// 2D wedge product a /\ b = a1 b2 - a2 b1.
    pub fn wedge(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    /// Counterclockwise perpendicular (-y, x), so that a.wedge(b) = -a.dot(b.perp()).
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// 2x2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2 {
    pub m: [[f64; 2]; 2],
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2 { m: [[0.0; 2]; 2] };

    pub fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Mat2 {
            m: [[m11, m12], [m21, m22]],
        }
    }

    pub fn mul_vec(self, v: Vec2) -> Vec2 {
        Vec2::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y,
            self.m[1][0] * v.x + self.m[1][1] * v.y,
        )
    }

    pub fn transpose(self) -> Mat2 {
        Mat2::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn scale(self, s: f64) -> Mat2 {
        Mat2::new(
            self.m[0][0] * s,
            self.m[0][1] * s,
            self.m[1][0] * s,
            self.m[1][1] * s,
        )
    }

    pub fn trace(self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.m[0][0] + o.m[0][0],
            self.m[0][1] + o.m[0][1],
            self.m[1][0] + o.m[1][0],
            self.m[1][1] + o.m[1][1],
        )
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.m[0][0] - o.m[0][0],
            self.m[0][1] - o.m[0][1],
            self.m[1][0] - o.m[1][0],
            self.m[1][1] - o.m[1][1],
        )
    }
}

/// Reduce an angle to (-pi, pi].
pub fn normalize_angle(t: f64) -> f64 {
    if t > -PI && t <= PI {
        return t;
    }
    let a = t.rem_euclid(TAU);
    if a > PI {
        a - TAU
    } else {
        a
    }
}

/// A plane point carried in both Cartesian and polar form.
///
/// The angle of the origin is 0 by convention; `theta` is always in (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPoint {
    pub x1: f64,
    pub x2: f64,
    pub r: f64,
    pub theta: f64,
}

impl PolarPoint {
    pub fn from_cartesian(x1: f64, x2: f64) -> Self {
        let r = x1.hypot(x2);
        let theta = if r == 0.0 {
            0.0
        } else {
            // atan2 returns values in [-pi, pi]; fold the closed lower end.
            let t = x2.atan2(x1);
            if t <= -PI {
                PI
            } else {
                t
            }
        };
        PolarPoint { x1, x2, r, theta }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        let theta = normalize_angle(theta);
        PolarPoint {
            x1: r * theta.cos(),
            x2: r * theta.sin(),
            r,
            theta,
        }
    }

    pub fn from_vec(v: Vec2) -> Self {
        Self::from_cartesian(v.x, v.y)
    }

    pub fn vec(&self) -> Vec2 {
        Vec2::new(self.x1, self.x2)
    }

    /// Radial unit vector; e1 at the origin by the theta = 0 convention.
    pub fn e_r(&self) -> Vec2 {
        Vec2::new(self.theta.cos(), self.theta.sin())
    }

    /// Angular unit vector.
    pub fn e_theta(&self) -> Vec2 {
        Vec2::new(-self.theta.sin(), self.theta.cos())
    }
}

/// Polar form of a difference vector x - x0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativePolar {
    pub r1: f64,
    pub theta1: f64,
}

/// Conversion housing the notation conventions; origin maps to (r, theta) = (0, 0).
pub fn to_polar(x1: f64, x2: f64) -> PolarPoint {
    PolarPoint::from_cartesian(x1, x2)
}

/// Wake coordinate r(1 - cos theta), as 2 r sin^2(theta/2) to avoid
/// cancellation on the downstream axis.
pub fn wake_exponent(p: &PolarPoint) -> f64 {
    let s = (0.5 * p.theta).sin();
    2.0 * p.r * s * s
}

/// Same quantity for a bare (r, angle) pair; the angle is reduced first.
pub fn wake_exponent_of(r: f64, theta: f64) -> f64 {
    let s = (0.5 * normalize_angle(theta)).sin();
    2.0 * r * s * s
}

/// Polar coordinates (r1, theta1) of x - x0; theta1 = 0 when the points coincide.
pub fn relative_polar(x: &PolarPoint, x0: &PolarPoint) -> RelativePolar {
    let d = PolarPoint::from_cartesian(x.x1 - x0.x1, x.x2 - x0.x2);
    RelativePolar {
        r1: d.r,
        theta1: d.theta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn polar_conversion_conventions() {
        let p = to_polar(1.0, 0.0);
        assert_eq!((p.r, p.theta), (1.0, 0.0));

        let p = to_polar(-1.0, 0.0);
        assert_eq!((p.r, p.theta), (1.0, PI));

        let p = to_polar(0.0, -1.0);
        assert_eq!((p.r, p.theta), (1.0, -PI / 2.0));

        let p = to_polar(0.0, 0.0);
        assert_eq!((p.r, p.theta), (0.0, 0.0));

        // Positive axis: exactly zero angle.
        let p = to_polar(37.5, 0.0);
        assert_eq!(p.theta, 0.0);
    }

    #[test]
    fn wake_exponent_examples() {
        assert_eq!(wake_exponent(&PolarPoint::from_polar(50.0, 0.0)), 0.0);
        assert_close(wake_exponent(&PolarPoint::from_polar(3.0, PI)), 6.0, 1e-14);
        assert_close(
            wake_exponent(&PolarPoint::from_polar(10.0, PI / 2.0)),
            10.0,
            1e-13,
        );
    }

    #[test]
    fn relative_polar_examples() {
        let rp = relative_polar(&to_polar(2.0, 0.0), &to_polar(1.0, 0.0));
        assert_eq!((rp.r1, rp.theta1), (1.0, 0.0));

        let rp = relative_polar(&to_polar(0.0, 1.0), &to_polar(0.0, -1.0));
        assert_eq!((rp.r1, rp.theta1), (2.0, PI / 2.0));

        let rp = relative_polar(&to_polar(1.0, 1.0), &to_polar(1.0, 0.0));
        assert_eq!((rp.r1, rp.theta1), (1.0, PI / 2.0));
    }

    #[test]
    fn polar_identity_and_triangle_bound() {
        // r - r0 cos(theta - theta0) = r1 cos(theta1 - theta) and
        // r1 + r0 - r >= r0 (1 - cos(theta - theta0)) over random pairs.
        let mut rng = ChaCha8Rng::seed_from_u64(0x9e3779b9);
        for _ in 0..100_000 {
            let r = 10f64.powf(rng.random_range(-1.0..2.0));
            let r0 = 10f64.powf(rng.random_range(-1.0..2.0));
            let th = rng.random_range(-PI..PI);
            let th0 = rng.random_range(-PI..PI);
            let x = PolarPoint::from_polar(r, th);
            let x0 = PolarPoint::from_polar(r0, th0);
            let rel = relative_polar(&x, &x0);
            if rel.r1 < 1e-9 {
                continue;
            }
            let lhs = r - r0 * normalize_angle(th - th0).cos();
            let rhs = rel.r1 * normalize_angle(rel.theta1 - th).cos();
            assert!(
                (lhs - rhs).abs() < 1e-10 * (1.0 + r),
                "polar identity failed at r={r} th={th} r0={r0} th0={th0}: {lhs} vs {rhs}"
            );

            let gap = rel.r1 + r0 - r - r0 * (1.0 - normalize_angle(th - th0).cos());
            assert!(gap > -1e-9 * (1.0 + r + r0), "triangle bound failed: {gap}");

            // r1 >= |r - r0 cos(theta - theta0)|
            assert!(rel.r1 >= lhs.abs() - 1e-9 * (1.0 + r + r0));
        }
    }

    #[test]
    fn triangle_bound_equality_when_colinear() {
        // x and x0 on the same ray from the origin with r0 <= r.
        let x = PolarPoint::from_polar(5.0, 0.7);
        let x0 = PolarPoint::from_polar(2.0, 0.7);
        let rel = relative_polar(&x, &x0);
        let lhs = rel.r1 + x0.r - x.r;
        assert_close(lhs, 0.0, 1e-12);
    }

    #[test]
    fn angle_normalization_branch() {
        assert_eq!(normalize_angle(PI), PI);
        assert_close(normalize_angle(-PI), PI, 0.0);
        assert_close(normalize_angle(3.0 * PI), PI, 1e-12);
        assert_close(normalize_angle(TAU + 0.25), 0.25, 1e-12);
        assert_close(normalize_angle(-TAU - 0.25), -0.25, 1e-12);
    }

    #[test]
    fn perp_and_wedge_are_consistent() {
        let a = Vec2::new(0.3, -1.7);
        let b = Vec2::new(2.0, 0.9);
        assert_close(a.wedge(b), -a.dot(b.perp()), 1e-15);
        assert_close(a.wedge(b), a.perp().dot(b), 1e-15);
    }
}
