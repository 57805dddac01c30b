//! Problem instances (compactly supported source terms, an optional disk
//! body with boundary traces) and the representation formulas built on them:
//! volume convolutions against E and grad G, the boundary integrals of the
//! Green identity, and the net force in both plain and angle-weighted form.

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, wake_exponent, Mat2, PolarPoint, Vec2};
use crate::kernels::{self, WakeScaled};
use crate::quad;
use std::f64::consts::{PI, TAU};

/// One smooth compactly supported bump: c (1 - |x-center|^2/rho^2)^4 inside
/// the disk of radius rho, zero outside; C^3 across the support boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceBump {
    pub center: Vec2,
    pub radius: f64,
    pub amplitude: Vec2,
}

impl SourceBump {
    pub fn new(center: Vec2, radius: f64, amplitude: Vec2) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Config(format!(
                "bump radius must be positive, got {radius}"
            )));
        }
        Ok(SourceBump {
            center,
            radius,
            amplitude,
        })
    }

    pub fn contains(&self, x: Vec2) -> bool {
        (x - self.center).norm_sq() < self.radius * self.radius
    }

    fn profile(&self, x: Vec2) -> f64 {
        let s2 = (x - self.center).norm_sq() / (self.radius * self.radius);
        if s2 >= 1.0 {
            0.0
        } else {
            let t = 1.0 - s2;
            t * t * t * t
        }
    }

    pub fn eval(&self, x: Vec2) -> Vec2 {
        self.amplitude * self.profile(x)
    }

    /// curl f = d1 f2 - d2 f1 = -8 (1-s^2)^3 ((x-c) /\ c_amp) / rho^2.
    pub fn curl(&self, x: Vec2) -> f64 {
        let d = x - self.center;
        let s2 = d.norm_sq() / (self.radius * self.radius);
        if s2 >= 1.0 {
            return 0.0;
        }
        let t = 1.0 - s2;
        -8.0 * t * t * t * d.wedge(self.amplitude) / (self.radius * self.radius)
    }

    /// Closed form of int f: amplitude * pi rho^2 / 5.
    pub fn integral(&self) -> Vec2 {
        self.amplitude * (PI * self.radius * self.radius / 5.0)
    }
}

/// A finite sum of bumps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SourceTerm {
    pub bumps: Vec<SourceBump>,
}

impl SourceTerm {
    pub fn new(bumps: Vec<SourceBump>) -> Self {
        SourceTerm { bumps }
    }

    pub fn eval(&self, x: Vec2) -> Vec2 {
        self.bumps
            .iter()
            .fold(Vec2::ZERO, |acc, b| acc + b.eval(x))
    }

    pub fn curl(&self, x: Vec2) -> f64 {
        self.bumps.iter().map(|b| b.curl(x)).sum()
    }

    pub fn integral(&self) -> Vec2 {
        self.bumps
            .iter()
            .fold(Vec2::ZERO, |acc, b| acc + b.integral())
    }

    pub fn is_empty(&self) -> bool {
        self.bumps.is_empty()
    }
}

/// Boundary samples of (u, p, grad u) on the uniform angular grid of a disk
/// body; `velocity_gradient[m].m[i][j]` is d_i u_j at node m.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTraces {
    pub velocity: Vec<Vec2>,
    pub pressure: Vec<f64>,
    pub velocity_gradient: Vec<Mat2>,
}

/// Disk body centered at the origin, with optional traces.
#[derive(Debug, Clone, PartialEq)]
pub struct BodySpec {
    pub radius: f64,
    pub nodes: usize,
    pub traces: Option<BoundaryTraces>,
}

impl BodySpec {
    pub fn disk(radius: f64, nodes: usize) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Config(format!(
                "body radius must be positive, got {radius}"
            )));
        }
        if nodes < 16 {
            return Err(Error::Config("need at least 16 boundary nodes".into()));
        }
        Ok(BodySpec {
            radius,
            nodes,
            traces: None,
        })
    }

    pub fn node_angle(&self, m: usize) -> f64 {
        normalize_angle(TAU * m as f64 / self.nodes as f64)
    }

    pub fn node_point(&self, m: usize) -> PolarPoint {
        PolarPoint::from_polar(self.radius, self.node_angle(m))
    }

    fn traces(&self) -> Result<&BoundaryTraces> {
        self.traces
            .as_ref()
            .ok_or_else(|| Error::Config("body has no boundary traces".into()))
    }

    /// Quadrature value of the no-net-flux integral over the boundary.
    pub fn no_flux_residual(&self) -> Result<f64> {
        let tr = self.traces()?;
        let h = TAU / self.nodes as f64 * self.radius;
        let mut s = 0.0;
        for m in 0..self.nodes {
            let n = self.node_point(m).e_r();
            s += tr.velocity[m].dot(n) * h;
        }
        Ok(s)
    }
}

/// Exact-solution traces: u = E(. - x_c) F0, p = e(. - x_c) . F0 with the
/// singularity hidden strictly inside the body, so (u, p) solves the
/// homogeneous system in the fluid domain.
pub fn manufactured_traces(body: &BodySpec, x_c: Vec2, f0: Vec2) -> Result<BodySpec> {
    if x_c.norm() >= body.radius {
        return Err(Error::Config(format!(
            "singularity point (|x_c| = {}) must lie strictly inside the body (radius {})",
            x_c.norm(),
            body.radius
        )));
    }
    let n = body.nodes;
    let mut velocity = Vec::with_capacity(n);
    let mut pressure = Vec::with_capacity(n);
    let mut velocity_gradient = Vec::with_capacity(n);
    for m in 0..n {
        let y = body.node_point(m).vec();
        let arg = PolarPoint::from_vec(y - x_c);
        let fund = kernels::fundamental(&arg)?;
        let de = kernels::grad_e_tensor(&arg)?;
        velocity.push(fund.tensor.mul_vec(f0));
        pressure.push(fund.pressure.dot(f0));
        let mut gu = Mat2::ZERO;
        for i in 0..2 {
            let row = de[i].mul_vec(f0);
            gu.m[i][0] = row.x;
            gu.m[i][1] = row.y;
        }
        velocity_gradient.push(gu);
    }
    Ok(BodySpec {
        radius: body.radius,
        nodes: n,
        traces: Some(BoundaryTraces {
            velocity,
            pressure,
            velocity_gradient,
        }),
    })
}

/// Decay exponents given explicitly or derived from the net force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExponentSpec {
    Explicit { a: f64, b: f64 },
    FromForce,
}

/// A full problem instance.
#[derive(Debug, Clone)]
pub struct Scene {
    pub source: SourceTerm,
    pub body: Option<BodySpec>,
    pub exponents: ExponentSpec,
    /// Absolute tolerance handed to the volume quadratures.
    pub quad_tol: f64,
}

impl Scene {
    pub fn new(
        source: SourceTerm,
        body: Option<BodySpec>,
        exponents: ExponentSpec,
        quad_tol: f64,
    ) -> Result<Self> {
        if !(quad_tol > 0.0) {
            return Err(Error::Config("quadrature tolerance must be positive".into()));
        }
        if let Some(b) = &body {
            for bump in &source.bumps {
                if bump.center.norm() - bump.radius <= b.radius {
                    return Err(Error::Config(
                        "source support must lie strictly outside the body".into(),
                    ));
                }
            }
        }
        Ok(Scene {
            source,
            body,
            exponents,
            quad_tol,
        })
    }

    pub fn no_body(source: SourceTerm) -> Self {
        Scene {
            source,
            body: None,
            exponents: ExponentSpec::Explicit { a: 0.0, b: 0.0 },
            quad_tol: 1e-9,
        }
    }

    fn check_exterior(&self, x: &PolarPoint) -> Result<()> {
        if let Some(b) = &self.body {
            if x.r <= b.radius {
                return Err(Error::Domain {
                    what: "field evaluation",
                    detail: format!("point at r = {} lies inside the body", x.r),
                });
            }
        }
        Ok(())
    }
}

/// Integrate `f` over one bump support, desingularizing around `x` when the
/// evaluation point lies inside it.
fn bump_quadrature<const N: usize>(
    bump: &SourceBump,
    x: Vec2,
    f: &mut impl FnMut(Vec2) -> [f64; N],
    tol: f64,
) -> Result<[f64; N]> {
    let d = (x - bump.center).norm();
    let out = if d < bump.radius {
        quad::disk_quadrature_desingularized(bump.center, bump.radius, x, f, tol)?
    } else if d < 2.0 * bump.radius {
        // near-singular kernel: rays from the evaluation point
        quad::disk_quadrature_exterior_point(bump.center, bump.radius, x, f, tol)?
    } else {
        quad::disk_quadrature(bump.center, bump.radius, f, tol)?
    };
    Ok(out.values)
}

/// Volume convolution int E(x - y) f(y) dy over every bump support.
pub fn convolve_velocity(source: &SourceTerm, x: &PolarPoint, tol: f64) -> Result<Vec2> {
    let xv = x.vec();
    let mut acc = Vec2::ZERO;
    for bump in &source.bumps {
        let v = bump_quadrature(
            bump,
            xv,
            &mut |y: Vec2| {
                let arg = PolarPoint::from_vec(xv - y);
                let fv = bump.eval(y);
                match kernels::fundamental(&arg) {
                    Ok(f) => {
                        let u = f.tensor.mul_vec(fv);
                        [u.x, u.y]
                    }
                    Err(_) => [0.0, 0.0],
                }
            },
            tol,
        )?;
        acc = acc + Vec2::new(v[0], v[1]);
    }
    Ok(acc)
}

/// Volume convolution int grad G(x - y) . f_perp(y) dy, returned with the
/// factor e^{log_offset} applied inside the integrand so far-field values
/// can be computed wake-normalized without over/underflow.
pub fn convolve_vorticity_scaled(
    source: &SourceTerm,
    x: &PolarPoint,
    tol: f64,
    log_offset: f64,
) -> Result<f64> {
    let xv = x.vec();
    let mut acc = 0.0;
    for bump in &source.bumps {
        let v = bump_quadrature(
            bump,
            xv,
            &mut |y: Vec2| {
                let arg = PolarPoint::from_vec(xv - y);
                match kernels::grad_g(&arg) {
                    Ok(g) => [g
                        .value_with_offset(log_offset)
                        .dot(bump.eval(y).perp())],
                    Err(_) => [0.0],
                }
            },
            tol,
        )?;
        acc += v[0];
    }
    Ok(acc)
}

/// Plain (unscaled) vorticity convolution.
pub fn convolve_vorticity(source: &SourceTerm, x: &PolarPoint, tol: f64) -> Result<f64> {
    convolve_vorticity_scaled(source, x, tol, 0.0)
}

/// Boundary contribution to the velocity representation, with n the outward
/// normal of the body:
///
///   u_b(x) = oint E(x-y) (T - 2 u (x) e1) n
///          + oint [ (sum_i u_i dE_i) n + (sum_j n_j dE_j) u - e (u.n) ].
fn boundary_velocity_term(body: &BodySpec, x: &PolarPoint) -> Result<Vec2> {
    let tr = body.traces()?;
    let xv = x.vec();
    let h = TAU / body.nodes as f64 * body.radius;
    let mut acc = Vec2::ZERO;
    for m in 0..body.nodes {
        let yp = body.node_point(m);
        let y = yp.vec();
        let n = yp.e_r();
        let u = tr.velocity[m];
        let p = tr.pressure[m];
        let gu = tr.velocity_gradient[m];

        // stress T = grad u + (grad u)^T - p I, then g = (T - 2 u (x) e1) n
        let t = gu + gu.transpose() - Mat2::new(p, 0.0, 0.0, p);
        let g = t.mul_vec(n) - u * (2.0 * n.x);

        let arg = PolarPoint::from_vec(xv - y);
        let fund = kernels::fundamental(&arg)?;
        let de = kernels::grad_e_tensor(&arg)?;
        let mu = de[0].scale(u.x) + de[1].scale(u.y);
        let mn = de[0].scale(n.x) + de[1].scale(n.y);
        let dl = mu.mul_vec(n) + mn.mul_vec(u) - fund.pressure * u.dot(n);

        acc = acc + (fund.tensor.mul_vec(g) + dl) * h;
    }
    Ok(acc)
}

/// Boundary contribution to the vorticity representation, wake-normalized by
/// e^{log_offset}.
fn boundary_vorticity_term_scaled(body: &BodySpec, x: &PolarPoint, log_offset: f64) -> Result<f64> {
    let tr = body.traces()?;
    let xv = x.vec();
    let h = TAU / body.nodes as f64 * body.radius;
    let mut acc = 0.0;
    for m in 0..body.nodes {
        let yp = body.node_point(m);
        let y = yp.vec();
        let n = yp.e_r();
        let u = tr.velocity[m];
        let p = tr.pressure[m];
        let gu = tr.velocity_gradient[m];
        let t = gu + gu.transpose() - Mat2::new(p, 0.0, 0.0, p);
        let g = t.mul_vec(n) - u * (2.0 * n.x);

        let arg = PolarPoint::from_vec(xv - y);
        let gg = kernels::grad_g(&arg)?;
        let (hg, hg_ls) = kernels::hess_g(&arg)?;
        let scale = (hg_ls + log_offset).exp();
        let single = gg.value_with_offset(log_offset).dot(g.perp());
        let double = (u.dot(hg.mul_vec(n.perp())) + n.dot(hg.mul_vec(u.perp()))) * scale;
        acc += (single + double) * h;
    }
    Ok(acc)
}

/// Velocity representation: volume convolution plus, when a body is present,
/// the single- and double-layer boundary integrals.
pub fn oseen_velocity(scene: &Scene, x: &PolarPoint) -> Result<Vec2> {
    scene.check_exterior(x)?;
    let mut u = convolve_velocity(&scene.source, x, scene.quad_tol)?;
    if let Some(body) = &scene.body {
        u = u + boundary_velocity_term(body, x)?;
    }
    Ok(u)
}

/// Vorticity representation, wake-scaled with exponent -r(1 - cos theta).
pub fn oseen_vorticity(scene: &Scene, x: &PolarPoint) -> Result<WakeScaled> {
    scene.check_exterior(x)?;
    let w = wake_exponent(x);
    let mut omega = convolve_vorticity_scaled(&scene.source, x, scene.quad_tol, w)?;
    if let Some(body) = &scene.body {
        omega += boundary_vorticity_term_scaled(body, x, w)?;
    }
    Ok(WakeScaled::new(omega, -w))
}

/// Which representation produced a net force.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForceProvenance {
    VolumeOnly,
    VolumeAndBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetForce {
    pub force: Vec2,
    pub provenance: ForceProvenance,
}

/// Net force: closed-form volume integral per bump plus the boundary
/// momentum-flux integral when a body is present.
pub fn net_force(scene: &Scene) -> Result<NetForce> {
    let mut f = scene.source.integral();
    let mut provenance = ForceProvenance::VolumeOnly;
    if let Some(body) = &scene.body {
        let tr = body.traces()?;
        let h = TAU / body.nodes as f64 * body.radius;
        for m in 0..body.nodes {
            let n = body.node_point(m).e_r();
            let u = tr.velocity[m];
            let p = tr.pressure[m];
            let gu = tr.velocity_gradient[m];
            let t = gu + gu.transpose() - Mat2::new(p, 0.0, 0.0, p);
            f = f + (t.mul_vec(n) - u * (2.0 * n.x)) * h;
        }
        provenance = ForceProvenance::VolumeAndBoundary;
    }
    Ok(NetForce {
        force: f,
        provenance,
    })
}

/// Angle-dependent force: the same integrands weighted by
/// e^{r0 (cos(theta - theta0) - cos theta0)}.
pub fn net_force_angular(scene: &Scene, theta: f64) -> Result<Vec2> {
    let theta = normalize_angle(theta);
    let weight = |y: Vec2| -> f64 {
        let p = PolarPoint::from_vec(y);
        (p.r * (normalize_angle(theta - p.theta).cos() - p.theta.cos())).exp()
    };
    let mut f = Vec2::ZERO;
    for bump in &scene.source.bumps {
        let v = quad::disk_quadrature(
            bump.center,
            bump.radius,
            &mut |y: Vec2| {
                let fv = bump.eval(y) * weight(y);
                [fv.x, fv.y]
            },
            scene.quad_tol,
        )?
        .values;
        f = f + Vec2::new(v[0], v[1]);
    }
    if let Some(body) = &scene.body {
        let tr = body.traces()?;
        let h = TAU / body.nodes as f64 * body.radius;
        for m in 0..body.nodes {
            let yp = body.node_point(m);
            let n = yp.e_r();
            let u = tr.velocity[m];
            let p = tr.pressure[m];
            let gu = tr.velocity_gradient[m];
            let t = gu + gu.transpose() - Mat2::new(p, 0.0, 0.0, p);
            f = f + (t.mul_vec(n) - u * (2.0 * n.x)) * (h * weight(yp.vec()));
        }
    }
    Ok(f)
}
