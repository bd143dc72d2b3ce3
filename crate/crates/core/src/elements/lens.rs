use super::{check_positive, SurfaceHit};
use crate::error::{Error, Result};
use crate::math::{intersect_plane, Pose, Ray, Vec3};

/// Ideal aberration-free thin lens with a circular aperture in its `u`-`v`
/// plane. Works identically for light crossing in either direction.
#[derive(Clone, Debug, PartialEq)]
pub struct ThinLens {
    pub pose: Pose,
    pub focal_length: f64,
    pub aperture_diameter: f64,
}

impl ThinLens {
    pub fn new(pose: Pose, focal_length: f64, aperture_diameter: f64) -> Result<Self> {
        if !focal_length.is_finite() || focal_length == 0.0 {
            return Err(Error::Validation(format!(
                "lens focal length must be finite and nonzero, got {focal_length}"
            )));
        }
        check_positive("lens aperture", aperture_diameter)?;
        Ok(ThinLens {
            pose,
            focal_length,
            aperture_diameter,
        })
    }

    pub fn intersect(&self, ray: &Ray) -> Option<SurfaceHit> {
        let d = self.aperture_diameter;
        let hit = intersect_plane(ray, &self.pose, (d, d))?;
        let (u, v) = hit.uv;
        let r = d / 2.0;
        (u * u + v * v <= r * r).then_some(SurfaceHit {
            t: hit.t,
            point: hit.point,
            uv: hit.uv,
        })
    }

    /// Applies `s' = s − h/f` to both transverse reduced slopes, where `h` is
    /// the hit offset from the lens center and slopes are measured along the
    /// direction of travel.
    pub fn transform(&self, ray: &Ray) -> Result<Ray> {
        let hit = self.intersect(ray).ok_or(Error::NoIntersection)?;
        let local = self.pose.to_local_dir(ray.direction());
        let along = local.z.abs();
        let (h_u, h_v) = hit.uv;
        let su = local.x / along - h_u / self.focal_length;
        let sv = local.y / along - h_v / self.focal_length;
        let out = Vec3::new(su, sv, local.z.signum());
        Ok(ray.redirected(hit.point, self.pose.to_world_dir(out)))
    }
}
