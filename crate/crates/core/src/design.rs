//! Closed-form viewing angles of the three see-through layouts, a pitch
//! resolution estimate, and a traced-ray field-of-view measurement to check
//! them against.
//!
//! Every angle is the full angle `2·atan(size / (2·distance))` that an
//! aperture of `size` subtends at `distance`.

use std::fmt;
use std::fmt::Write as _;

use crate::elements::ModeWeights;
use crate::error::{Error, Result};
use crate::math::Ray;
use crate::scene::{HmdSpec, Scene};
use crate::tracer::{trace_ray, RayStream};

/// Largest angle the curved-mirror magnification is allowed to report.
pub const MAX_CONVEX_FOV_DEG: f64 = 179.9;

fn subtended_deg(size: f64, distance: f64) -> f64 {
    2.0 * (size / (2.0 * distance)).atan().to_degrees()
}

fn require_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidGeometry(format!("{name} must be positive, got {value}")))
    }
}

/// View angle of a screen of width `l1` seen over a half mirror, with the
/// eye `a` from the mirror and the screen `d` beyond it.
pub fn fov_half_mirror(l1: f64, a: f64, d: f64) -> Result<f64> {
    if !(a + d > 0.0) || !(a + d).is_finite() {
        return Err(Error::InvalidGeometry(format!(
            "eye-to-screen path a + d must be positive, got {}",
            a + d
        )));
    }
    if !(l1 >= 0.0) || !l1.is_finite() {
        return Err(Error::InvalidGeometry(format!("screen size must be ≥ 0, got {l1}")));
    }
    Ok(subtended_deg(l1, a + d))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClampedFov {
    pub deg: f64,
    /// The linear magnification rule left its valid range and was capped.
    pub clamped: bool,
}

/// Curved-mirror view angle: the flat-mirror angle scaled by the mirror's
/// angular magnification, capped at [`MAX_CONVEX_FOV_DEG`].
pub fn fov_convex_mirror(theta1_deg: f64, a_mag: f64) -> ClampedFov {
    let raw = theta1_deg * a_mag;
    if raw > MAX_CONVEX_FOV_DEG {
        ClampedFov {
            deg: MAX_CONVEX_FOV_DEG,
            clamped: true,
        }
    } else {
        ClampedFov {
            deg: raw,
            clamped: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LimitingFactor {
    TmdWindow,
    DeviceFov,
    LensAperture,
}

impl LimitingFactor {
    pub fn name(self) -> &'static str {
        match self {
            LimitingFactor::TmdWindow => "tmd_window",
            LimitingFactor::DeviceFov => "device_fov",
            LimitingFactor::LensAperture => "lens_aperture",
        }
    }
}

impl fmt::Display for LimitingFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Geometry shared by the three layouts. The eye-to-mirror distance `a` and
/// the mirror magnification `a_mag` are separate fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayoutParams {
    /// Screen width.
    pub l1: f64,
    /// HMD lens aperture.
    pub l2: f64,
    /// TMD plate width.
    pub l3: f64,
    /// Eye to half mirror.
    pub a: f64,
    /// Half mirror to screen.
    pub d: f64,
    /// TMD to HMD.
    pub d2: f64,
    /// TMD to eye.
    pub d4: f64,
    pub a_mag: f64,
    /// Device field of view, degrees.
    pub theta_device: f64,
    /// TMD cell pitch.
    pub pitch: f64,
}

impl LayoutParams {
    /// Every length multiplied by `k`.
    pub fn scaled(&self, k: f64) -> LayoutParams {
        LayoutParams {
            l1: self.l1 * k,
            l2: self.l2 * k,
            l3: self.l3 * k,
            a: self.a * k,
            d: self.d * k,
            d2: self.d2 * k,
            d4: self.d4 * k,
            pitch: self.pitch * k,
            ..*self
        }
    }
}

/// View angle of the TMD eyepiece layout: the smallest of the plate window
/// seen from the HMD, the lens seen from the eye, and the device's own
/// field of view. Ties go to the device, then the window.
pub fn fov_ame(p: &LayoutParams) -> Result<(f64, LimitingFactor)> {
    for (name, v) in [("l2", p.l2), ("l3", p.l3), ("d2", p.d2), ("d4", p.d4)] {
        require_positive(name, v)?;
    }
    if !(p.theta_device > 0.0 && p.theta_device < 180.0) {
        return Err(Error::InvalidGeometry(format!(
            "device FOV must lie in (0, 180), got {}",
            p.theta_device
        )));
    }
    let candidates = [
        (p.theta_device, LimitingFactor::DeviceFov),
        (subtended_deg(p.l3, p.d2), LimitingFactor::TmdWindow),
        (subtended_deg(p.l2, p.d4), LimitingFactor::LensAperture),
    ];
    let mut best = candidates[0];
    for c in &candidates[1..] {
        if c.0 < best.0 {
            best = *c;
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolutionEstimate {
    /// Panel pixels across the field of view.
    pub device_px: f64,
    /// TMD cells across the visible window; infinite for a continuous plate.
    pub pitch_px: f64,
    pub effective_px: f64,
    pub arcmin_per_px: f64,
}

/// Horizontal resolution across `fov_deg`: whichever is coarser of the
/// panel's pixels and the TMD cells the eye sees through. The visible part
/// of a plate of width `l3` is what the field of view spans at `d4`.
pub fn resolution_estimate(hmd: &HmdSpec, fov_deg: f64, pitch: f64, l3: f64, d4: f64) -> ResolutionEstimate {
    let device_px = hmd.per_eye_resolution.0 as f64 * (fov_deg / hmd.fov_deg).min(1.0);
    let visible = l3.min(2.0 * d4 * (fov_deg.to_radians() / 2.0).tan());
    let pitch_px = if pitch > 0.0 { visible / pitch } else { f64::INFINITY };
    let effective_px = device_px.min(pitch_px);
    let arcmin_per_px = if effective_px > 0.0 {
        fov_deg * 60.0 / effective_px
    } else {
        f64::INFINITY
    };
    ResolutionEstimate {
        device_px,
        pitch_px,
        effective_px,
        arcmin_per_px,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignReport {
    pub device: String,
    pub theta_device: f64,
    pub half_mirror_deg: f64,
    pub convex_mirror: ClampedFov,
    pub ame_deg: f64,
    pub limiting: LimitingFactor,
    pub resolution: ResolutionEstimate,
}

pub fn design_report(hmd: &HmdSpec, params: &LayoutParams) -> Result<DesignReport> {
    let half = fov_half_mirror(params.l1, params.a, params.d)?;
    require_positive("a_mag", params.a_mag)?;
    let convex = fov_convex_mirror(half, params.a_mag);
    let (ame, limiting) = fov_ame(params)?;
    if !(params.pitch >= 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "pitch must be ≥ 0, got {}",
            params.pitch
        )));
    }
    let resolution = resolution_estimate(hmd, ame, params.pitch, params.l3, params.d4);
    Ok(DesignReport {
        device: hmd.name.clone(),
        theta_device: params.theta_device,
        half_mirror_deg: half,
        convex_mirror: convex,
        ame_deg: ame,
        limiting,
        resolution,
    })
}

impl DesignReport {
    /// `key,value` lines.
    pub fn to_text(&self) -> String {
        let r = &self.resolution;
        let mut out = String::new();
        let _ = writeln!(out, "device,{}", self.device);
        let _ = writeln!(out, "device_fov_deg,{:.3}", self.theta_device);
        let _ = writeln!(out, "half_mirror_fov_deg,{:.3}", self.half_mirror_deg);
        let _ = writeln!(out, "convex_mirror_fov_deg,{:.3}", self.convex_mirror.deg);
        let _ = writeln!(out, "convex_mirror_clamped,{}", self.convex_mirror.clamped);
        let _ = writeln!(out, "ame_fov_deg,{:.3}", self.ame_deg);
        let _ = writeln!(out, "ame_limiting_factor,{}", self.limiting);
        let _ = writeln!(out, "device_px,{:.1}", r.device_px);
        let _ = writeln!(out, "pitch_px,{:.1}", r.pitch_px);
        let _ = writeln!(out, "effective_px,{:.1}", r.effective_px);
        let _ = writeln!(out, "arcmin_per_px,{:.3}", r.arcmin_per_px);
        out
    }

    /// One row per layout.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("architecture,fov_deg,note\n");
        let _ = writeln!(out, "half_mirror,{:.6},", self.half_mirror_deg);
        let note = if self.convex_mirror.clamped { "clamped" } else { "" };
        let _ = writeln!(out, "convex_mirror,{:.6},{note}", self.convex_mirror.deg);
        let _ = writeln!(out, "ame,{:.6},{}", self.ame_deg, self.limiting);
        out
    }
}

/// Field of view measured by tracing chief rays from the eye center across
/// its horizontal (`u`-`w`) plane: the angular span over which the path
/// ends on the element `target`. TMD plates are replaced by ideal
/// continuous ones so that the measurement is free of sampling noise.
pub fn traced_fov(scene: &Scene, target: &str) -> Result<f64> {
    if scene.element(target).is_none() {
        return Err(Error::Validation(format!("no element `{target}` in the scene")));
    }
    let scene = scene.map_tmds(|t| {
        let mut ideal = t.clone().with_weights(ModeWeights::IDEAL).with_polarizer(false);
        ideal.pitch = 0.0;
        ideal.angular_fill = false;
        ideal
    })?;
    let eye = scene.eye();
    let origin = eye.pose.position();
    let forward = eye.forward();
    let side = eye.pose.u_axis();
    let reaches = |theta: f64| {
        let dir = forward * theta.cos() + side * theta.sin();
        let path = trace_ray(&scene, Ray::new(origin, dir), 8, &RayStream::new(0, 0));
        path.ends_on(target)
    };
    if !reaches(0.0) {
        return Ok(0.0);
    }
    let step = 0.1f64.to_radians();
    let limit = 89.9f64.to_radians();
    let mut total = 0.0;
    for sign in [1.0, -1.0] {
        let mut inside = 0.0;
        let mut outside = None;
        let mut theta = step;
        while theta <= limit {
            if reaches(sign * theta) {
                inside = theta;
            } else {
                outside = Some(theta);
                break;
            }
            theta += step;
        }
        let edge = match outside {
            Some(mut hi) => {
                let mut lo = inside;
                for _ in 0..40 {
                    let mid = 0.5 * (lo + hi);
                    if reaches(sign * mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            }
            None => inside,
        };
        total += edge;
    }
    Ok(total.to_degrees())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> LayoutParams {
        LayoutParams {
            l1: 40.0,
            l2: 1e6,
            l3: 1e6,
            a: 20.0,
            d: 20.0,
            d2: 40.0,
            d4: 40.0,
            a_mag: 1.5,
            theta_device: 110.0,
            pitch: 0.5,
        }
    }

    #[test]
    fn half_mirror_examples() {
        assert_eq!(fov_half_mirror(0.0, 20.0, 20.0).unwrap(), 0.0);
        assert!((fov_half_mirror(80.0, 20.0, 20.0).unwrap() - 90.0).abs() < 1e-12);
        assert!((fov_half_mirror(40.0, 20.0, 20.0).unwrap() - 53.130_102_354).abs() < 1e-6);
        assert!(fov_half_mirror(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn convex_examples() {
        assert_eq!(
            fov_convex_mirror(30.0, 2.0),
            ClampedFov {
                deg: 60.0,
                clamped: false
            }
        );
        assert_eq!(fov_convex_mirror(42.0, 1.0).deg, 42.0);
        assert_eq!(
            fov_convex_mirror(120.0, 2.0),
            ClampedFov {
                deg: 179.9,
                clamped: true
            }
        );
    }

    #[test]
    fn ame_examples() {
        assert_eq!(fov_ame(&params()).unwrap(), (110.0, LimitingFactor::DeviceFov));
        let window = LayoutParams {
            l3: 60.0,
            d2: 50.0,
            theta_device: 179.0,
            ..params()
        };
        let (deg, limit) = fov_ame(&window).unwrap();
        assert!((deg - 61.927_513).abs() < 1e-5);
        assert_eq!(limit, LimitingFactor::TmdWindow);
        let tiny = LayoutParams { l3: 1e-9, ..params() };
        assert!(fov_ame(&tiny).unwrap().0 < 1e-6);
        let lens = LayoutParams { l2: 10.0, ..params() };
        assert_eq!(fov_ame(&lens).unwrap().1, LimitingFactor::LensAperture);
        assert!(fov_ame(&LayoutParams { d4: 0.0, ..params() }).is_err());
    }

    #[test]
    fn resolution_examples() {
        let dk2 = HmdSpec::dk2();
        assert_eq!(resolution_estimate(&dk2, 110.0, 0.0, 120.0, 40.0).effective_px, 960.0);
        let r = resolution_estimate(&dk2, 110.0, 0.5, 60.0, 400.0);
        assert_eq!(r.pitch_px, 120.0);
        assert_eq!(r.effective_px, 120.0);
        assert!((r.arcmin_per_px - 55.0).abs() < 1e-12);
        let fine = resolution_estimate(&dk2, 110.0, 0.3, 60.0, 400.0);
        assert!(fine.effective_px >= r.effective_px);
    }

    #[test]
    fn report_for_dk2() {
        let dk2 = HmdSpec::dk2();
        let report = design_report(&dk2, &params()).unwrap();
        assert_eq!(report.ame_deg, 110.0);
        assert!(report.half_mirror_deg < report.ame_deg);
        assert!(report.to_text().contains("ame_fov_deg,110.000\n"));
        assert_eq!(report.to_csv().lines().count(), 4);
    }

    #[test]
    fn unit_scene_smoke() {
        let unit = LayoutParams {
            l1: 1.0,
            l2: 1.0,
            l3: 1.0,
            a: 1.0,
            d: 1.0,
            d2: 1.0,
            d4: 1.0,
            a_mag: 1.0,
            theta_device: 90.0,
            pitch: 0.0,
        };
        let r = design_report(&HmdSpec::cardboard(), &unit).unwrap();
        assert!(r.half_mirror_deg.is_finite() && r.convex_mirror.deg.is_finite() && r.ame_deg.is_finite());
    }
}
