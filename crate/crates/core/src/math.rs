//! Vector, pose and ray primitives plus the reflection law and the
//! least-squares ray convergence solver.
//!
//! All lengths are millimeters. Angles are radians unless a name says
//! otherwise.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Smallest accepted ray parameter for an intersection, in mm.
pub const HIT_EPSILON: f64 = 1e-9;
/// Distance a ray origin is pushed along its new direction after an interaction.
pub const ORIGIN_ADVANCE: f64 = 1e-6;
/// `|d·n|` below this counts as parallel to a plane.
pub const PARALLEL_EPSILON: f64 = 1e-12;
/// Bundles whose normal matrix is worse conditioned than this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction. The zero vector stays zero.
    pub fn normalize(self) -> Vec3 {
        let n = self.norm();
        if n == 0.0 {
            return self;
        }
        self / n
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    fn to_na(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.x, self.y, self.z)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Row-major 3×3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// Matrix whose columns are `u`, `v`, `w`.
    pub fn from_columns(u: Vec3, v: Vec3, w: Vec3) -> Self {
        Mat3([[u.x, v.x, w.x], [u.y, v.y, w.y], [u.z, v.z, w.z]])
    }

    pub fn from_row_major(a: [f64; 9]) -> Self {
        Mat3([[a[0], a[1], a[2]], [a[3], a[4], a[5]], [a[6], a[7], a[8]]])
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
        ]
    }

    pub fn column(&self, j: usize) -> Vec3 {
        Vec3::new(self.0[0][j], self.0[1][j], self.0[2][j])
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn mul_mat(&self, o: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        Mat3(out)
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Largest entry of `|R·Rᵀ − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let p = self.mul_mat(&self.transpose());
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p.0[i][j] - target).abs());
            }
        }
        worst
    }
}

/// Rigid placement of an element. The rotation's columns are the element's
/// local `u`, `v`, `w` axes expressed in world coordinates; `w` is the
/// surface normal for planar elements.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    position: Vec3,
    rotation: Mat3,
}

impl Pose {
    pub const ORTHONORMAL_TOLERANCE: f64 = 1e-10;

    pub fn new(position: Vec3, rotation: Mat3) -> Result<Self> {
        if !position.is_finite() {
            return Err(Error::Validation("pose position is not finite".into()));
        }
        let err = rotation.orthonormality_error();
        if !(err <= Self::ORTHONORMAL_TOLERANCE) {
            return Err(Error::Validation(format!(
                "pose rotation is not orthonormal (|R·Rᵀ − I| = {err:.3e})"
            )));
        }
        if rotation.determinant() < 0.0 {
            return Err(Error::Validation("pose rotation is a reflection".into()));
        }
        Ok(Pose { position, rotation })
    }

    pub fn identity() -> Self {
        Pose {
            position: Vec3::ZERO,
            rotation: Mat3::IDENTITY,
        }
    }

    pub fn at(position: Vec3) -> Self {
        Pose {
            position,
            rotation: Mat3::IDENTITY,
        }
    }

    /// Pose whose `w` axis is `normal` and whose `v` axis is as close to `up`
    /// as possible.
    pub fn facing(position: Vec3, normal: Vec3, up: Vec3) -> Result<Self> {
        let w = normal.normalize();
        let u = up.cross(w);
        if u.norm() < 1e-9 {
            return Err(Error::InvalidGeometry("up vector is parallel to the normal".into()));
        }
        let u = u.normalize();
        let v = w.cross(u).normalize();
        Pose::new(position, Mat3::from_columns(u, v, w))
    }

    pub fn position(&self) -> Vec3 {
        self.position
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn u_axis(&self) -> Vec3 {
        self.rotation.column(0)
    }

    pub fn v_axis(&self) -> Vec3 {
        self.rotation.column(1)
    }

    pub fn normal(&self) -> Vec3 {
        self.rotation.column(2)
    }

    pub fn to_local_point(&self, p: Vec3) -> Vec3 {
        self.rotation.transpose().mul_vec(p - self.position)
    }

    pub fn to_local_dir(&self, d: Vec3) -> Vec3 {
        self.rotation.transpose().mul_vec(d)
    }

    pub fn to_world_point(&self, p: Vec3) -> Vec3 {
        self.rotation.mul_vec(p) + self.position
    }

    pub fn to_world_dir(&self, d: Vec3) -> Vec3 {
        self.rotation.mul_vec(d)
    }

    /// Same orientation, moved by `delta` in world coordinates.
    pub fn translated(&self, delta: Vec3) -> Pose {
        Pose {
            position: self.position + delta,
            rotation: self.rotation,
        }
    }
}

/// Which TMD interaction last shaped a ray.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum RayMode {
    #[default]
    Primary,
    DoubleReflect,
    SingleReflect,
    PassThrough,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    direction: Vec3,
    pub weight: f64,
    pub mode: RayMode,
}

impl Ray {
    /// Primary ray of weight 1. `direction` is normalized.
    pub fn new(origin: Vec3, direction: Vec3) -> Self {
        Ray {
            origin,
            direction: direction.normalize(),
            weight: 1.0,
            mode: RayMode::Primary,
        }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight.clamp(0.0, 1.0);
        self
    }

    pub fn with_mode(mut self, mode: RayMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }

    /// Continue from `origin` along `direction`, nudged off the surface.
    pub fn redirected(&self, origin: Vec3, direction: Vec3) -> Ray {
        // Renormalizing an already-unit vector only adds rounding noise.
        let direction = if (direction.norm_squared() - 1.0).abs() <= 4.0 * f64::EPSILON {
            direction
        } else {
            direction.normalize()
        };
        Ray {
            origin: origin + direction * ORIGIN_ADVANCE,
            direction,
            weight: self.weight,
            mode: self.mode,
        }
    }
}

/// Reflects `d` about the unit normal `n`. The side `n` points to is irrelevant.
pub fn reflect(d: Vec3, n: Vec3) -> Vec3 {
    d - n * (2.0 * d.dot(n))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneHit {
    pub t: f64,
    pub point: Vec3,
    /// Hit coordinates in the plane's `(u, v)` axes, origin at the pose position.
    pub uv: (f64, f64),
}

/// Intersection with the rectangle of full size `extent` centered on the
/// pose origin in its `u`-`v` plane.
pub fn intersect_plane(ray: &Ray, pose: &Pose, extent: (f64, f64)) -> Option<PlaneHit> {
    let hit = intersect_unbounded_plane(ray, pose)?;
    let (u, v) = hit.uv;
    (u.abs() <= extent.0 / 2.0 && v.abs() <= extent.1 / 2.0).then_some(hit)
}

/// Intersection with the infinite plane through the pose, forward hits only.
pub fn intersect_unbounded_plane(ray: &Ray, pose: &Pose) -> Option<PlaneHit> {
    let n = pose.normal();
    let denom = ray.direction().dot(n);
    if denom.abs() < PARALLEL_EPSILON {
        return None;
    }
    let t = (pose.position() - ray.origin).dot(n) / denom;
    if !(t > HIT_EPSILON) {
        return None;
    }
    let point = ray.at(t);
    let local = pose.to_local_point(point);
    Some(PlaneHit {
        t,
        point,
        uv: (local.x, local.y),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Convergence {
    pub point: Vec3,
    pub rms_residual: f64,
}

/// Least-squares point nearest to every ray's supporting line.
///
/// Solves `Σ(I − dᵢdᵢᵀ) p = Σ(I − dᵢdᵢᵀ) oᵢ`. The lines are unbounded, so the
/// point may lie behind the origins (a virtual image).
pub fn closest_point_to_rays(rays: &[Ray]) -> Result<Convergence> {
    if rays.len() < 2 {
        return Err(Error::DegenerateBundle {
            condition: f64::INFINITY,
        });
    }
    let mut a = Matrix3::<f64>::zeros();
    let mut b = Vector3::<f64>::zeros();
    for ray in rays {
        let d = ray.direction().to_na();
        let proj = Matrix3::identity() - d * d.transpose();
        a += proj;
        b += proj * ray.origin.to_na();
    }
    let eig = a.symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::DegenerateBundle { condition });
    }
    let p = a.cholesky().ok_or(Error::DegenerateBundle { condition })?.solve(&b);
    let point = Vec3::new(p.x, p.y, p.z);
    let sum_sq: f64 = rays.iter().map(|r| distance_sq_to_line(point, r)).sum();
    Ok(Convergence {
        point,
        rms_residual: (sum_sq / rays.len() as f64).sqrt(),
    })
}

/// Squared distance from `p` to the full line through the ray.
pub fn distance_sq_to_line(p: Vec3, ray: &Ray) -> f64 {
    let r = p - ray.origin;
    let d = ray.direction();
    (r - d * r.dot(d)).norm_squared()
}
