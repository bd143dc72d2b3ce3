//! Backward rendering of what the eye camera sees, a gradient-energy
//! sharpness score and the camera defocus sweep.
//!
//! Camera rays are followed from a thin-lens camera into the scene. Where
//! the optics branch (half mirrors, TMD crossing modes) every branch is
//! followed and weighted by its probability, so images carry no Monte Carlo
//! noise from the elements; randomness only enters through pixel and
//! aperture sampling.

mod ppm;

pub use ppm::{decode_ppm, encode_ppm, read_ppm, tone_map, write_ppm};

use std::fmt::Write as _;
use std::path::Path;

use rand_chacha::rand_core::RngCore;
use rayon::prelude::*;

use crate::elements::{ElementKind, Rgb, TmdMode};
use crate::error::{Error, Result};
use crate::math::{Ray, Vec3};
use crate::scene::{EyeCamera, Scene};
use crate::tracer::{nearest_hit, unit_f64, RayStream, Target, DEFAULT_MAX_BOUNCES, PRUNE_WEIGHT};

pub const DEFAULT_RAYS_PER_PIXEL: usize = 16;
/// Camera offsets of the focus experiment, mm.
pub const DEFAULT_OFFSETS: [f64; 4] = [10.0, 0.0, -10.0, -20.0];

/// Row-major RGB image, row 0 at the top.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::Validation(format!(
                "image needs {width}×{height} > 0 pixels, got {}",
                pixels.len()
            )));
        }
        if pixels.iter().flatten().any(|c| !(*c >= 0.0)) {
            return Err(Error::Validation("image radiance must be ≥ 0".into()));
        }
        Ok(Image { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: Rgb) -> Result<Self> {
        Image::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    /// Rec. 709 luminance of every pixel.
    pub fn luminance(&self) -> Vec<f64> {
        self.pixels
            .iter()
            .map(|p| 0.2126 * p[0] + 0.7152 * p[1] + 0.0722 * p[2])
            .collect()
    }
}

/// Mean squared forward-difference gradient of the luminance over mean
/// luminance squared. Differences past the last row or column count as 0.
/// Constant and all-black images score 0.
pub fn sharpness_metric(img: &Image) -> f64 {
    let lum = img.luminance();
    let (w, h) = (img.width, img.height);
    let n = lum.len() as f64;
    let mean = lum.iter().sum::<f64>() / n;
    if !(mean > 0.0) {
        return 0.0;
    }
    let mut energy = 0.0;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w {
                energy += (lum[i + 1] - lum[i]).powi(2);
            }
            if y + 1 < h {
                energy += (lum[i + w] - lum[i]).powi(2);
            }
        }
    }
    energy / n / (mean * mean)
}

/// Plastic-number family constant for a 4D additive recurrence.
const R4_G: f64 = 1.167_303_978_261_418_7;

fn r4(i: usize, shift: [f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    let mut a = 1.0;
    for (k, slot) in out.iter_mut().enumerate() {
        a /= R4_G;
        *slot = (shift[k] + a * (i as f64 + 1.0)).fract();
    }
    out
}

struct Radiance<'a> {
    scene: &'a Scene,
    max_depth: usize,
}

impl Radiance<'_> {
    fn trace(&self, ray: &Ray, throughput: f64, depth: usize) -> Rgb {
        if depth > self.max_depth || throughput < PRUNE_WEIGHT {
            return [0.0; 3];
        }
        let Some((Target::Element(i), hit)) = nearest_hit(self.scene, ray, false) else {
            return self.scene.background().map_or([0.0; 3], |bg| bg.radiance(ray));
        };
        let next = depth + 1;
        match &self.scene.elements()[i].kind {
            ElementKind::Screen(screen) => screen.emit_at_hit(&hit, ray.direction()),
            ElementKind::Absorber(_) => [0.0; 3],
            ElementKind::ThinLens(lens) => match lens.transform(ray) {
                Ok(out) => self.trace(&out, throughput, next),
                Err(_) => [0.0; 3],
            },
            ElementKind::ConvexMirror(mirror) => match mirror.transform(ray) {
                Ok(out) => self.trace(&out, throughput, next),
                Err(_) => [0.0; 3],
            },
            ElementKind::HalfMirror(mirror) => {
                let Ok((reflected, transmitted)) = mirror.interact(ray) else {
                    return [0.0; 3];
                };
                let r = mirror.reflectance;
                let mut acc = [0.0; 3];
                add_scaled(&mut acc, r, self.trace(&reflected, throughput * r, next));
                add_scaled(
                    &mut acc,
                    1.0 - r,
                    self.trace(&transmitted, throughput * (1.0 - r), next),
                );
                acc
            }
            ElementKind::Tmd(plate) => {
                let local = plate.pose.to_local_dir(ray.direction());
                let single = plate.effective_single() / 2.0;
                let branches = [
                    (TmdMode::DoubleReflect, plate.double_probability(local)),
                    (TmdMode::SingleReflectU, single),
                    (TmdMode::SingleReflectV, single),
                    (TmdMode::PassThrough, plate.mode_weights.pass),
                ];
                let mut acc = [0.0; 3];
                for (mode, p) in branches {
                    // Zero-probability branches are skipped outright, which
                    // keeps a polarized plate bit-identical to one with no
                    // single-reflection weight at all.
                    if p == 0.0 {
                        continue;
                    }
                    if let Ok(out) = plate.transform(ray, mode) {
                        add_scaled(&mut acc, p, self.trace(&out, throughput * p, next));
                    }
                }
                acc
            }
        }
    }
}

fn add_scaled(acc: &mut Rgb, k: f64, c: Rgb) {
    for (a, c) in acc.iter_mut().zip(c) {
        *a += k * c;
    }
}

/// Camera ray for sensor position `(sx, sy)` (mm from the center, `y` up)
/// and aperture position `(au, av)`.
fn camera_ray(camera: &EyeCamera, sensor: (f64, f64), aperture: (f64, f64)) -> Ray {
    let pose = &camera.pose;
    let di = camera.image_distance();
    // Direction of the undeviated ray through the lens center, drawn on an
    // upright virtual sensor in front of the lens.
    let chief = pose.to_world_dir(Vec3::new(sensor.0, sensor.1, -di));
    let origin = pose.to_world_point(Vec3::new(aperture.0, aperture.1, 0.0));
    if camera.focus_distance.is_infinite() {
        return Ray::new(origin, chief);
    }
    let focus_point = pose.position() + chief * (camera.focus_distance / di);
    Ray::new(origin, focus_point - origin)
}

/// Renders the scene through `camera`. Each pixel averages
/// `rays_per_pixel` camera rays spread over the pixel and the aperture by
/// a randomly shifted low-discrepancy sequence; the shift comes from the
/// pixel's own random stream, so the image is a pure function of the seed.
pub fn render_view(scene: &Scene, camera: &EyeCamera, rays_per_pixel: usize, seed: u64) -> Result<Image> {
    if rays_per_pixel == 0 {
        return Err(Error::Validation("rays per pixel must be ≥ 1".into()));
    }
    camera.validate()?;
    let (w, h) = (camera.sensor.width_px, camera.sensor.height_px);
    let pitch = camera.sensor.pixel_pitch;
    let radius = camera.aperture_diameter / 2.0;
    let tracer = Radiance {
        scene,
        max_depth: DEFAULT_MAX_BOUNCES,
    };
    let pixels: Vec<Rgb> = (0..w * h)
        .into_par_iter()
        .map(|index| {
            let (x, y) = (index % w, index / w);
            let mut rng = RayStream::new(seed, index as u64).rng();
            let shift = [0; 4].map(|_: i32| unit_f64(rng.next_u64()));
            let mut acc = [0.0; 3];
            for s in 0..rays_per_pixel {
                let [jx, jy, a1, a2] = r4(s, shift);
                let sx = (x as f64 + jx - w as f64 / 2.0) * pitch;
                let sy = (h as f64 / 2.0 - (y as f64 + jy)) * pitch;
                let r = radius * a1.sqrt();
                let phi = 2.0 * std::f64::consts::PI * a2;
                let ray = camera_ray(camera, (sx, sy), (r * phi.cos(), r * phi.sin()));
                add_scaled(&mut acc, 1.0, tracer.trace(&ray, 1.0, 0));
            }
            acc.map(|c| c / rays_per_pixel as f64)
        })
        .collect();
    Image::new(w, h, pixels)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub offsets: Vec<f64>,
    pub sharpness: Vec<f64>,
    pub images: Vec<Image>,
}

impl SweepResult {
    /// Offset with the highest sharpness; the first one on ties.
    pub fn argmax_offset(&self) -> f64 {
        let mut best = 0;
        for (i, s) in self.sharpness.iter().enumerate() {
            if *s > self.sharpness[best] {
                best = i;
            }
        }
        self.offsets[best]
    }

    /// `offset_mm,sharpness` table with 9 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("offset_mm,sharpness\n");
        for (o, s) in self.offsets.iter().zip(&self.sharpness) {
            let _ = writeln!(out, "{},{}", format_significant(*o, 9), format_significant(*s, 9));
        }
        out
    }
}

/// Renders with the camera moved back by each offset along its axis (focus
/// setting unchanged) and scores each image.
pub fn defocus_sweep(
    scene: &Scene,
    camera: &EyeCamera,
    offsets: &[f64],
    rays_per_pixel: usize,
    seed: u64,
) -> Result<SweepResult> {
    if offsets.is_empty() {
        return Err(Error::Validation("defocus sweep needs at least one offset".into()));
    }
    let mut sharpness = Vec::with_capacity(offsets.len());
    let mut images = Vec::with_capacity(offsets.len());
    for &offset in offsets {
        let img = render_view(scene, &camera.moved_back(offset), rays_per_pixel, seed)?;
        sharpness.push(sharpness_metric(&img));
        images.push(img);
    }
    Ok(SweepResult {
        offsets: offsets.to_vec(),
        sharpness,
        images,
    })
}

pub fn write_csv(sweep: &SweepResult, path: &Path) -> Result<()> {
    std::fs::write(path, sweep.to_csv())?;
    Ok(())
}

/// `printf("%.*g")`-style formatting.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}"))
    }
}
