//! Optical elements of the half-mirror, curved-mirror and TMD layouts.
//!
//! Every element owns its [`Pose`]. Element transforms are pure: anything
//! random (the TMD interaction mode) arrives as an explicit draw.

mod lens;
mod mirrors;
mod screen;
mod tmd;

pub use lens::ThinLens;
pub use mirrors::{ConvexMirror, HalfMirror};
pub use screen::{Pattern, PatternKind, Rgb, Screen, ScreenImage};
pub use tmd::{ModeWeights, TmdMode, TmdPlate};

use crate::error::{Error, Result};
use crate::math::{intersect_plane, Pose, Ray, Vec3};

/// Where a ray meets an element surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceHit {
    pub t: f64,
    pub point: Vec3,
    /// Local `(u, v)` of the hit, origin at the element center.
    pub uv: (f64, f64),
}

/// Opaque plate that terminates any ray, optionally with a centered
/// circular hole (an HMD housing around its lens).
#[derive(Clone, Debug, PartialEq)]
pub struct Absorber {
    pub pose: Pose,
    pub extent: (f64, f64),
    pub hole_diameter: f64,
}

impl Absorber {
    pub fn new(pose: Pose, extent: (f64, f64), hole_diameter: f64) -> Result<Self> {
        check_extent(extent)?;
        check_non_negative("hole_diameter", hole_diameter)?;
        Ok(Absorber {
            pose,
            extent,
            hole_diameter,
        })
    }

    pub fn intersect(&self, ray: &Ray) -> Option<SurfaceHit> {
        let hit = intersect_plane(ray, &self.pose, self.extent)?;
        let (u, v) = hit.uv;
        let r = self.hole_diameter / 2.0;
        if u * u + v * v < r * r {
            return None;
        }
        Some(SurfaceHit {
            t: hit.t,
            point: hit.point,
            uv: hit.uv,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ElementKind {
    ThinLens(ThinLens),
    HalfMirror(HalfMirror),
    ConvexMirror(ConvexMirror),
    Tmd(TmdPlate),
    Screen(Screen),
    Absorber(Absorber),
}

impl ElementKind {
    /// Keyword used for this kind in scene files.
    pub fn keyword(&self) -> &'static str {
        match self {
            ElementKind::ThinLens(_) => "lens",
            ElementKind::HalfMirror(_) => "half_mirror",
            ElementKind::ConvexMirror(_) => "convex_mirror",
            ElementKind::Tmd(_) => "tmd",
            ElementKind::Screen(_) => "screen",
            ElementKind::Absorber(_) => "absorber",
        }
    }

    pub fn pose(&self) -> &Pose {
        match self {
            ElementKind::ThinLens(e) => &e.pose,
            ElementKind::HalfMirror(e) => &e.pose,
            ElementKind::ConvexMirror(e) => &e.pose,
            ElementKind::Tmd(e) => &e.pose,
            ElementKind::Screen(e) => &e.pose,
            ElementKind::Absorber(e) => &e.pose,
        }
    }

    pub fn intersect(&self, ray: &Ray) -> Option<SurfaceHit> {
        match self {
            ElementKind::ThinLens(e) => e.intersect(ray),
            ElementKind::HalfMirror(e) => e.intersect(ray),
            ElementKind::ConvexMirror(e) => e.intersect(ray),
            ElementKind::Tmd(e) => e.intersect(ray),
            ElementKind::Screen(e) => e.intersect(ray),
            ElementKind::Absorber(e) => e.intersect(ray),
        }
    }
}

/// A posed element with a scene-unique identifier.
#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    pub id: String,
    pub kind: ElementKind,
}

impl Element {
    pub fn new(id: impl Into<String>, kind: impl Into<ElementKind>) -> Self {
        Element {
            id: id.into(),
            kind: kind.into(),
        }
    }
}

macro_rules! impl_into_kind {
    ($($ty:ident => $variant:ident),* $(,)?) => {
        $(impl From<$ty> for ElementKind {
            fn from(e: $ty) -> Self {
                ElementKind::$variant(e)
            }
        })*
    };
}

impl_into_kind! {
    ThinLens => ThinLens,
    HalfMirror => HalfMirror,
    ConvexMirror => ConvexMirror,
    TmdPlate => Tmd,
    Screen => Screen,
    Absorber => Absorber,
}

pub(crate) fn plane_hit(ray: &Ray, pose: &Pose, extent: (f64, f64)) -> Option<SurfaceHit> {
    intersect_plane(ray, pose, extent).map(|h| SurfaceHit {
        t: h.t,
        point: h.point,
        uv: h.uv,
    })
}

pub(crate) fn check_extent(extent: (f64, f64)) -> Result<()> {
    check_non_negative("extent width", extent.0)?;
    check_non_negative("extent height", extent.1)
}

pub(crate) fn check_non_negative(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "{name} must be a finite value ≥ 0, got {value}"
        )))
    }
}

pub(crate) fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "{name} must be a finite value > 0, got {value}"
        )))
    }
}
