use std::fmt;
use std::str::FromStr;

use super::{check_extent, check_non_negative, plane_hit, SurfaceHit};
use crate::error::{Error, Result};
use crate::math::{Pose, Ray, Vec3};

pub type Rgb = [f64; 3];

/// Row-major RGB radiance grid, row 0 at the top (`+v` edge).
#[derive(Clone, Debug, PartialEq)]
pub struct ScreenImage {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl ScreenImage {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::Validation(format!(
                "screen image needs {width}×{height} > 0 pixels, got {}",
                pixels.len()
            )));
        }
        if pixels.iter().flatten().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(Error::Validation("screen radiance must be finite and ≥ 0".into()));
        }
        Ok(ScreenImage { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    /// Bilinear sample at continuous pixel coordinates where pixel centers
    /// sit at integers. Edges clamp.
    pub fn bilinear(&self, x: f64, y: f64) -> Rgb {
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let y = y.clamp(0.0, (self.height - 1) as f64);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let (a, b, c, d) = (
            self.pixel(x0, y0),
            self.pixel(x1, y0),
            self.pixel(x0, y1),
            self.pixel(x1, y1),
        );
        std::array::from_fn(|k| {
            let top = a[k] + (b[k] - a[k]) * fx;
            let bottom = c[k] + (d[k] - c[k]) * fx;
            top + (bottom - top) * fy
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatternKind {
    Uniform,
    /// Alternating bright and dark squares, `cells` across the width.
    Checker,
    /// Thin bright lines on dark, `cells` across the width.
    Grid,
    /// Asymmetric layout for checking image orientation: a red block top
    /// left, a green block top right and a blue bar near the bottom.
    Marker,
}

impl PatternKind {
    pub fn name(self) -> &'static str {
        match self {
            PatternKind::Uniform => "uniform",
            PatternKind::Checker => "checker",
            PatternKind::Grid => "grid",
            PatternKind::Marker => "marker",
        }
    }
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PatternKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(PatternKind::Uniform),
            "checker" => Ok(PatternKind::Checker),
            "grid" => Ok(PatternKind::Grid),
            "marker" => Ok(PatternKind::Marker),
            other => Err(format!("unknown pattern `{other}`")),
        }
    }
}

/// Procedural texture description for screens and the background plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pattern {
    pub kind: PatternKind,
    pub cells: usize,
    /// Texture resolution across the width.
    pub resolution: usize,
    pub radiance: f64,
}

impl Default for Pattern {
    fn default() -> Self {
        Pattern {
            kind: PatternKind::Uniform,
            cells: 8,
            resolution: 256,
            radiance: 1.0,
        }
    }
}

impl Pattern {
    pub const MAX_RESOLUTION: usize = 4096;
    pub const MAX_PIXELS: usize = 1 << 22;

    pub fn new(kind: PatternKind, cells: usize, resolution: usize, radiance: f64) -> Self {
        Pattern {
            kind,
            cells,
            resolution,
            radiance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells == 0 || self.resolution == 0 {
            return Err(Error::Validation("pattern cells and resolution must be ≥ 1".into()));
        }
        if self.resolution > Self::MAX_RESOLUTION {
            return Err(Error::Validation(format!(
                "pattern resolution above {}",
                Self::MAX_RESOLUTION
            )));
        }
        check_non_negative("pattern radiance", self.radiance)
    }

    /// Rasterizes the pattern for a surface of physical size `extent`.
    pub fn rasterize(&self, extent: (f64, f64)) -> Result<ScreenImage> {
        self.validate()?;
        let width = self.resolution;
        let aspect = if extent.0 > 0.0 { extent.1 / extent.0 } else { 1.0 };
        let height = ((width as f64 * aspect).round() as usize).clamp(1, Self::MAX_RESOLUTION);
        if width * height > Self::MAX_PIXELS {
            return Err(Error::Validation(format!(
                "pattern raster {width}×{height} is too large"
            )));
        }
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                // Unit-square coordinates measured in widths, y down.
                let fx = (x as f64 + 0.5) / width as f64;
                let fy = (y as f64 + 0.5) / width as f64;
                let level = self.level(fx, fy, height as f64 / width as f64);
                pixels.push(level.map(|c| c * self.radiance));
            }
        }
        ScreenImage::new(width, height, pixels)
    }

    fn level(&self, fx: f64, fy: f64, aspect: f64) -> Rgb {
        let n = self.cells as f64;
        match self.kind {
            PatternKind::Uniform => [1.0; 3],
            PatternKind::Checker => {
                let cx = (fx * n).floor() as i64;
                let cy = (fy * n).floor() as i64;
                if (cx + cy).rem_euclid(2) == 0 {
                    [1.0; 3]
                } else {
                    [0.0; 3]
                }
            }
            PatternKind::Grid => {
                let near = |t: f64| {
                    let f = (t * n).fract();
                    !(0.08..=0.92).contains(&f)
                };
                if near(fx) || near(fy) {
                    [1.0; 3]
                } else {
                    [0.05; 3]
                }
            }
            PatternKind::Marker => {
                let fy = fy / aspect;
                let inside = |x0: f64, x1: f64, y0: f64, y1: f64| (x0..x1).contains(&fx) && (y0..y1).contains(&fy);
                if inside(0.1, 0.4, 0.1, 0.4) {
                    [1.0, 0.0, 0.0]
                } else if inside(0.6, 0.9, 0.1, 0.25) {
                    [0.0, 1.0, 0.0]
                } else if inside(0.1, 0.9, 0.75, 0.85) {
                    [0.0, 0.0, 1.0]
                } else {
                    [0.05; 3]
                }
            }
        }
    }
}

/// Lambertian emitter on the `+w` face of a rectangle.
#[derive(Clone, Debug, PartialEq)]
pub struct Screen {
    pub pose: Pose,
    pub extent: (f64, f64),
    pub pattern: Pattern,
    /// Mirror the displayed content along `u` and/or `v`.
    pub flip: (bool, bool),
    image: ScreenImage,
}

impl Screen {
    pub fn new(pose: Pose, extent: (f64, f64), pattern: Pattern, flip: (bool, bool)) -> Result<Self> {
        check_extent(extent)?;
        let image = pattern.rasterize(extent)?;
        Ok(Screen {
            pose,
            extent,
            pattern,
            flip,
            image,
        })
    }

    pub fn image(&self) -> &ScreenImage {
        &self.image
    }

    pub fn intersect(&self, ray: &Ray) -> Option<SurfaceHit> {
        plane_hit(ray, &self.pose, self.extent)
    }

    /// Radiance leaving the screen at corner-origin coordinates
    /// `uv ∈ [0, w]×[0, h]` (`v` up). Emission is the same in every
    /// direction, so `toward` only matters for which face is seen.
    pub fn emit(&self, uv: (f64, f64), toward: Vec3) -> Result<Rgb> {
        let (w, h) = self.extent;
        let (u, v) = uv;
        let slack = 1e-9;
        if !(u >= -slack && u <= w + slack && v >= -slack && v <= h + slack) {
            return Err(Error::OutOfBounds { u, v });
        }
        if toward.dot(self.pose.normal()) < 0.0 {
            return Ok([0.0; 3]);
        }
        let u = if self.flip.0 { w - u } else { u };
        let v = if self.flip.1 { h - v } else { v };
        let img = &self.image;
        let x = if w > 0.0 { u / w * img.width() as f64 - 0.5 } else { 0.0 };
        let y = if h > 0.0 {
            (h - v) / h * img.height() as f64 - 0.5
        } else {
            0.0
        };
        Ok(img.bilinear(x, y))
    }

    /// Radiance seen by a ray arriving at a centered-coordinate hit.
    pub fn emit_at_hit(&self, hit: &SurfaceHit, incoming: Vec3) -> Rgb {
        let uv = (hit.uv.0 + self.extent.0 / 2.0, hit.uv.1 + self.extent.1 / 2.0);
        self.emit(uv, -incoming).unwrap_or([0.0; 3])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn screen(kind: PatternKind, flip: (bool, bool)) -> Screen {
        Screen::new(Pose::identity(), (40.0, 30.0), Pattern::new(kind, 4, 64, 1.0), flip).unwrap()
    }

    #[test]
    fn flip_matches_mirrored_coordinates() {
        let plain = screen(PatternKind::Marker, (false, false));
        let flipped = screen(PatternKind::Marker, (true, true));
        for &(u, v) in &[(3.0, 4.0), (10.0, 25.0), (33.3, 12.1), (0.0, 0.0)] {
            assert_eq!(
                flipped.emit((u, v), Vec3::Z).unwrap(),
                plain.emit((40.0 - u, 30.0 - v), Vec3::Z).unwrap()
            );
        }
    }

    #[test]
    fn uniform_is_uniform() {
        let s = screen(PatternKind::Uniform, (false, true));
        for &(u, v) in &[(0.0, 0.0), (12.0, 7.0), (40.0, 30.0)] {
            assert_eq!(s.emit((u, v), Vec3::Z).unwrap(), [1.0; 3]);
        }
    }

    #[test]
    fn double_flip_restores_sampling() {
        let plain = screen(PatternKind::Checker, (false, false));
        let flipped = screen(PatternKind::Checker, (true, true));
        let corner = (0.1, 29.9);
        let once = (40.0 - corner.0, 30.0 - corner.1);
        let twice = (40.0 - once.0, 30.0 - once.1);
        assert_eq!(
            flipped.emit(once, Vec3::Z).unwrap(),
            plain.emit(twice, Vec3::Z).unwrap()
        );
    }

    #[test]
    fn out_of_bounds() {
        let s = screen(PatternKind::Uniform, (false, false));
        assert!(matches!(s.emit((41.0, 1.0), Vec3::Z), Err(Error::OutOfBounds { .. })));
        assert!(matches!(s.emit((1.0, -1.0), Vec3::Z), Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn back_face_is_dark() {
        let s = screen(PatternKind::Uniform, (false, false));
        assert_eq!(s.emit((1.0, 1.0), -Vec3::Z).unwrap(), [0.0; 3]);
    }

    #[test]
    fn marker_top_left_is_red() {
        let s = screen(PatternKind::Marker, (false, false));
        let c = s.emit((0.25 * 40.0, 30.0 - 0.25 * 40.0), Vec3::Z).unwrap();
        assert_eq!(c, [1.0, 0.0, 0.0]);
    }
}
