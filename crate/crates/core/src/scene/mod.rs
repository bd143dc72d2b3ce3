//! Scene description: posed elements, the viewing eye/camera and an
//! optional background plane. Scenes are immutable once built.

mod parse;
mod presets;

pub use parse::{parse_scene, parse_vec3, serialize_scene};
pub use presets::{
    ame_preset, ame_preset_with_lens, builtin_scene, convex_mirror_preset, defocus_bench_preset, half_mirror_preset,
    tmd_see_through_preset, BenchLayout, HmdSpec, TmdParams, BUILTIN_SCENES,
};

use std::collections::HashSet;

use crate::elements::{check_positive, Element, ElementKind, Pattern, Screen, SurfaceHit, TmdPlate};
use crate::error::{Error, Result};
use crate::math::{Pose, Ray, Vec3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sensor {
    pub width_px: usize,
    pub height_px: usize,
    /// Pixel pitch in mm.
    pub pixel_pitch: f64,
}

impl Sensor {
    pub const MAX_PIXELS: usize = 1 << 24;

    fn validate(&self) -> Result<()> {
        if self.width_px == 0 || self.height_px == 0 {
            return Err(Error::Validation("sensor needs at least one pixel".into()));
        }
        if self.width_px.saturating_mul(self.height_px) > Self::MAX_PIXELS {
            return Err(Error::Validation("sensor has too many pixels".into()));
        }
        check_positive("sensor pixel pitch", self.pixel_pitch)
    }
}

/// Thin-lens camera standing in for the viewer's eye. It looks along its
/// local `−w` axis with `u` to the right and `v` up, so the pose's `w` axis
/// points back out of the eye.
#[derive(Clone, Debug, PartialEq)]
pub struct EyeCamera {
    pub id: String,
    pub pose: Pose,
    pub focal_length: f64,
    pub aperture_diameter: f64,
    /// Object distance in focus; infinite for a relaxed eye.
    pub focus_distance: f64,
    pub sensor: Sensor,
}

impl EyeCamera {
    pub fn new(
        id: impl Into<String>,
        pose: Pose,
        focal_length: f64,
        aperture_diameter: f64,
        focus_distance: f64,
        sensor: Sensor,
    ) -> Result<Self> {
        let eye = EyeCamera {
            id: id.into(),
            pose,
            focal_length,
            aperture_diameter,
            focus_distance,
            sensor,
        };
        eye.validate()?;
        Ok(eye)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("eye focal length", self.focal_length)?;
        check_positive("eye aperture", self.aperture_diameter)?;
        if !(self.focus_distance > self.focal_length) {
            return Err(Error::Validation(format!(
                "eye focus distance {} must exceed its focal length {}",
                self.focus_distance, self.focal_length
            )));
        }
        self.sensor.validate()
    }

    /// Lens-to-sensor distance from the thin-lens equation.
    pub fn image_distance(&self) -> f64 {
        if self.focus_distance.is_infinite() {
            self.focal_length
        } else {
            1.0 / (1.0 / self.focal_length - 1.0 / self.focus_distance)
        }
    }

    /// Viewing direction in world coordinates.
    pub fn forward(&self) -> Vec3 {
        -self.pose.normal()
    }

    /// Full horizontal field of view of the sensor, in degrees.
    pub fn horizontal_fov_deg(&self) -> f64 {
        let half = self.sensor.width_px as f64 * self.sensor.pixel_pitch / 2.0;
        2.0 * (half / self.image_distance()).atan().to_degrees()
    }

    /// Same camera moved `offset` mm backwards (positive) or forwards
    /// (negative) along its viewing axis, focus unchanged.
    pub fn moved_back(&self, offset: f64) -> EyeCamera {
        let mut moved = self.clone();
        moved.pose = self.pose.translated(self.pose.normal() * offset);
        moved
    }

    /// Intersection with the entrance pupil disk.
    pub fn intersect_pupil(&self, ray: &Ray) -> Option<SurfaceHit> {
        let d = self.aperture_diameter;
        let hit = crate::math::intersect_plane(ray, &self.pose, (d, d))?;
        let (u, v) = hit.uv;
        (u * u + v * v <= d * d / 4.0).then_some(SurfaceHit {
            t: hit.t,
            point: hit.point,
            uv: hit.uv,
        })
    }
}

/// Distant textured plane seen by rays that leave the optical system.
/// Emits from both faces.
#[derive(Clone, Debug, PartialEq)]
pub struct Background {
    surface: Screen,
}

impl Background {
    pub fn new(pose: Pose, extent: (f64, f64), pattern: Pattern) -> Result<Self> {
        Ok(Background {
            surface: Screen::new(pose, extent, pattern, (false, false))?,
        })
    }

    pub fn pose(&self) -> &Pose {
        &self.surface.pose
    }

    pub fn extent(&self) -> (f64, f64) {
        self.surface.extent
    }

    pub fn pattern(&self) -> &Pattern {
        &self.surface.pattern
    }

    /// Radiance seen along an escaping ray, zero if the plane is missed.
    pub fn radiance(&self, ray: &Ray) -> [f64; 3] {
        match self.surface.intersect(ray) {
            Some(hit) => {
                let (w, h) = self.surface.extent;
                let uv = (hit.uv.0 + w / 2.0, hit.uv.1 + h / 2.0);
                self.surface.emit(uv, self.surface.pose.normal()).unwrap_or([0.0; 3])
            }
            None => [0.0; 3],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    elements: Vec<Element>,
    eye: EyeCamera,
    background: Option<Background>,
}

impl Scene {
    pub fn new(elements: Vec<Element>, eye: EyeCamera, background: Option<Background>) -> Result<Self> {
        let scene = Scene {
            elements,
            eye,
            background,
        };
        scene.validate()?;
        Ok(scene)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for id in self
            .elements
            .iter()
            .map(|e| e.id.as_str())
            .chain(std::iter::once(self.eye.id.as_str()))
        {
            if !is_valid_id(id) {
                return Err(Error::Validation(format!("invalid identifier `{id}`")));
            }
            if !seen.insert(id) {
                return Err(Error::Validation(format!("duplicate identifier `{id}`")));
            }
        }
        for e in &self.elements {
            if let ElementKind::Tmd(t) = &e.kind {
                t.validate()?;
            }
        }
        self.eye.validate()
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn eye(&self) -> &EyeCamera {
        &self.eye
    }

    pub fn background(&self) -> Option<&Background> {
        self.background.as_ref()
    }

    pub fn element(&self, id: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.id == id)
    }

    /// Copy with a different viewing camera.
    pub fn with_eye(&self, eye: EyeCamera) -> Result<Scene> {
        Scene::new(self.elements.clone(), eye, self.background.clone())
    }

    /// Copy with every element rewritten by `f`.
    pub fn map_elements(&self, mut f: impl FnMut(&Element) -> Element) -> Result<Scene> {
        let elements = self.elements.iter().map(&mut f).collect();
        Scene::new(elements, self.eye.clone(), self.background.clone())
    }

    /// Copy with every TMD plate rewritten by `f`.
    pub fn map_tmds(&self, mut f: impl FnMut(&TmdPlate) -> TmdPlate) -> Result<Scene> {
        self.map_elements(|e| match &e.kind {
            ElementKind::Tmd(t) => Element::new(e.id.clone(), f(t)),
            _ => e.clone(),
        })
    }

    /// Copy without the elements whose id matches.
    pub fn without(&self, ids: &[&str]) -> Result<Scene> {
        let elements = self
            .elements
            .iter()
            .filter(|e| !ids.contains(&e.id.as_str()))
            .cloned()
            .collect();
        Scene::new(elements, self.eye.clone(), self.background.clone())
    }
}

pub(crate) fn is_valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}
