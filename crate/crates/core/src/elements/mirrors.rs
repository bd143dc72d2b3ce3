use super::{check_extent, check_positive, plane_hit, SurfaceHit};
use crate::error::{Error, Result};
use crate::math::{reflect, Pose, Ray, HIT_EPSILON};

/// Flat partially reflecting plate.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfMirror {
    pub pose: Pose,
    pub extent: (f64, f64),
    pub reflectance: f64,
}

impl HalfMirror {
    pub const DEFAULT_REFLECTANCE: f64 = 0.5;

    pub fn new(pose: Pose, extent: (f64, f64), reflectance: f64) -> Result<Self> {
        check_extent(extent)?;
        if !(reflectance > 0.0 && reflectance < 1.0) {
            return Err(Error::Validation(format!(
                "half mirror reflectance must lie in (0, 1), got {reflectance}"
            )));
        }
        Ok(HalfMirror {
            pose,
            extent,
            reflectance,
        })
    }

    pub fn transmittance(&self) -> f64 {
        1.0 - self.reflectance
    }

    pub fn intersect(&self, ray: &Ray) -> Option<SurfaceHit> {
        plane_hit(ray, &self.pose, self.extent)
    }

    /// Splits the ray into `(reflected, transmitted)`. The two weights sum
    /// to the incident weight.
    pub fn interact(&self, ray: &Ray) -> Result<(Ray, Ray)> {
        let hit = self.intersect(ray).ok_or(Error::NoIntersection)?;
        let d = ray.direction();
        let (reflected_weight, transmitted_weight) = split_weight(ray.weight, self.reflectance);
        let mut reflected = ray.redirected(hit.point, reflect(d, self.pose.normal()));
        reflected.weight = reflected_weight;
        let mut transmitted = ray.redirected(hit.point, d);
        transmitted.weight = transmitted_weight;
        Ok((reflected, transmitted))
    }
}

/// Splits `w` into `(w·r, w − w·r)` such that the two parts add back to
/// `w` exactly. The reflected part is rounded to a multiple of the last
/// bit of `w`, which makes both the subtraction and the sum exact.
fn split_weight(w: f64, r: f64) -> (f64, f64) {
    if !(w > 0.0) || !w.is_finite() {
        return (0.0, 0.0);
    }
    let ulp = f64::from_bits(w.to_bits() + 1) - w;
    let reflected = ((w * r / ulp).round() * ulp).min(w);
    (reflected, w - reflected)
}

/// Curved fully reflecting mirror realised as a spherical cap.
///
/// The radius is chosen so that a viewer at `reference_distance` sees an
/// angular magnification of `magnification` (paraxially):
/// `R = 2·reference_distance·m/(m − 1)`. For `m > 1` the center of curvature
/// lies on the front (`+w`) side, for `m < 1` behind, and `m = 1` is flat.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexMirror {
    pub pose: Pose,
    pub extent: (f64, f64),
    pub magnification: f64,
    pub reference_distance: f64,
}

impl ConvexMirror {
    pub fn new(pose: Pose, extent: (f64, f64), magnification: f64, reference_distance: f64) -> Result<Self> {
        check_extent(extent)?;
        check_positive("mirror magnification", magnification)?;
        check_positive("mirror reference distance", reference_distance)?;
        Ok(ConvexMirror {
            pose,
            extent,
            magnification,
            reference_distance,
        })
    }

    /// Signed curvature `1/R`; positive when the center is on the `+w` side.
    pub fn curvature(&self) -> f64 {
        let m = self.magnification;
        (m - 1.0) / (2.0 * self.reference_distance * m)
    }

    /// Signed radius of curvature, infinite for a flat mirror.
    pub fn radius(&self) -> f64 {
        1.0 / self.curvature()
    }

    pub fn intersect(&self, ray: &Ray) -> Option<SurfaceHit> {
        self.intersect_with_normal(ray).map(|(hit, _)| hit)
    }

    fn intersect_with_normal(&self, ray: &Ray) -> Option<(SurfaceHit, crate::math::Vec3)> {
        let c = self.curvature();
        if c == 0.0 {
            return plane_hit(ray, &self.pose, self.extent).map(|h| (h, self.pose.normal()));
        }
        let vertex = self.pose.position();
        let center = vertex + self.pose.normal() * (1.0 / c);
        let radius = (1.0 / c).abs();
        let oc = ray.origin - center;
        let d = ray.direction();
        let b = oc.dot(d);
        let disc = b * b - (oc.norm_squared() - radius * radius);
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        let to_vertex = vertex - center;
        for t in [-b - sq, -b + sq] {
            if !(t > HIT_EPSILON) {
                continue;
            }
            let point = ray.at(t);
            let radial = point - center;
            // Only the half of the sphere that contains the vertex is mirror.
            if radial.dot(to_vertex) <= 0.0 {
                continue;
            }
            let local = self.pose.to_local_point(point);
            if local.x.abs() <= self.extent.0 / 2.0 && local.y.abs() <= self.extent.1 / 2.0 {
                let hit = SurfaceHit {
                    t,
                    point,
                    uv: (local.x, local.y),
                };
                return Some((hit, radial / radius));
            }
        }
        None
    }

    /// Specular reflection about the local surface normal. Weight is kept.
    pub fn transform(&self, ray: &Ray) -> Result<Ray> {
        let (hit, normal) = self.intersect_with_normal(ray).ok_or(Error::NoIntersection)?;
        Ok(ray.redirected(hit.point, reflect(ray.direction(), normal)))
    }
}
