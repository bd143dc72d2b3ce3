//! Ready-made layouts: the TMD eyepiece (AME) arrangement, the half-mirror
//! and curved-mirror comparison setups, a tilted see-through plate and the
//! desk-scale focus bench.

use super::{Background, EyeCamera, Scene, Sensor};
use crate::elements::{
    Absorber, ConvexMirror, Element, HalfMirror, ModeWeights, Pattern, PatternKind, Screen, ThinLens, TmdPlate,
};
use crate::error::{Error, Result};
use crate::math::{Pose, Vec3};

/// An off-the-shelf single-lens VR headset.
#[derive(Clone, Debug, PartialEq)]
pub struct HmdSpec {
    pub name: String,
    /// Horizontal field of view per eye, degrees.
    pub fov_deg: f64,
    pub resolution: (u32, u32),
    pub per_eye_resolution: (u32, u32),
    /// Physical width of one eye's half of the panel, mm.
    pub panel_width_mm: f64,
}

impl HmdSpec {
    pub const NAMES: [&'static str; 2] = ["cardboard", "dk2"];

    pub fn new(
        name: impl Into<String>,
        fov_deg: f64,
        resolution: (u32, u32),
        per_eye_resolution: (u32, u32),
        panel_width_mm: f64,
    ) -> Result<Self> {
        let spec = HmdSpec {
            name: name.into(),
            fov_deg,
            resolution,
            per_eye_resolution,
            panel_width_mm,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return Err(Error::InvalidGeometry(format!(
                "device FOV must lie in (0, 180) degrees, got {}",
                self.fov_deg
            )));
        }
        if self.per_eye_resolution.0 == 0 || self.per_eye_resolution.1 == 0 {
            return Err(Error::InvalidGeometry("per-eye resolution must be nonzero".into()));
        }
        if !(self.panel_width_mm > 0.0 && self.panel_width_mm.is_finite()) {
            return Err(Error::InvalidGeometry("panel width must be positive".into()));
        }
        Ok(())
    }

    pub fn cardboard() -> Self {
        HmdSpec {
            name: "cardboard".into(),
            fov_deg: 90.0,
            resolution: (1280, 800),
            per_eye_resolution: (640, 800),
            panel_width_mm: 55.0,
        }
    }

    /// Oculus Rift DK2.
    pub fn dk2() -> Self {
        HmdSpec {
            name: "dk2".into(),
            fov_deg: 110.0,
            resolution: (1920, 1080),
            per_eye_resolution: (960, 1080),
            panel_width_mm: 63.0,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "cardboard" => Some(Self::cardboard()),
            "dk2" => Some(Self::dk2()),
            _ => None,
        }
    }

    /// Eyepiece focal length that puts the panel at the focal plane and
    /// spans `fov_deg`.
    pub fn eyepiece_focal_length(&self) -> f64 {
        (self.panel_width_mm / 2.0) / (self.fov_deg.to_radians() / 2.0).tan()
    }

    fn panel_extent(&self) -> (f64, f64) {
        let (w, h) = self.per_eye_resolution;
        (self.panel_width_mm, self.panel_width_mm * h as f64 / w as f64)
    }
}

/// Build parameters for a TMD plate in a preset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TmdParams {
    pub extent: (f64, f64),
    pub pitch: f64,
    pub mode_weights: ModeWeights,
    pub polarizer: bool,
    pub mirror_ratio: f64,
    pub angular_fill: bool,
}

impl Default for TmdParams {
    /// The prototype plate: 0.5 mm pitch behind a polarizing filter.
    fn default() -> Self {
        TmdParams {
            extent: (120.0, 120.0),
            pitch: 0.5,
            mode_weights: ModeWeights::default(),
            polarizer: true,
            mirror_ratio: TmdPlate::DEFAULT_MIRROR_RATIO,
            angular_fill: false,
        }
    }
}

impl TmdParams {
    /// Continuous plate that always double-reflects.
    pub fn ideal(extent: (f64, f64)) -> Self {
        TmdParams {
            extent,
            pitch: 0.0,
            mode_weights: ModeWeights::IDEAL,
            polarizer: false,
            ..TmdParams::default()
        }
    }

    pub fn plate(&self, pose: Pose) -> Result<TmdPlate> {
        let mut plate = TmdPlate::new(pose, self.extent, self.pitch)?
            .with_weights(self.mode_weights)
            .with_polarizer(self.polarizer);
        plate.mirror_ratio = self.mirror_ratio;
        plate.angular_fill = self.angular_fill;
        plate.validate()?;
        Ok(plate)
    }
}

fn require_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidGeometry(format!("{name} must be positive, got {value}")))
    }
}

fn human_eye(id: &str, pose: Pose, fov_deg: f64) -> Result<EyeCamera> {
    const FOCAL: f64 = 17.0;
    const PX: usize = 256;
    let span = 2.0 * FOCAL * (fov_deg.min(170.0).to_radians() / 2.0).tan();
    let sensor = Sensor {
        width_px: PX,
        height_px: PX,
        pixel_pitch: span / PX as f64,
    };
    EyeCamera::new(id, pose, FOCAL, 4.0, f64::INFINITY, sensor)
}

fn dim_background(pose: Pose, size: f64) -> Result<Background> {
    Background::new(pose, (size, size), Pattern::new(PatternKind::Grid, 20, 512, 0.2))
}

/// TMD eyepiece layout with the lens aperture equal to the smaller plate
/// side.
pub fn ame_preset(hmd: &HmdSpec, tmd: &TmdParams, d2: f64, d4: f64) -> Result<Scene> {
    ame_preset_with_lens(hmd, tmd, tmd.extent.0.min(tmd.extent.1), d2, d4)
}

/// TMD eyepiece layout. The plate sits at the origin facing `+z`; the HMD
/// (panel in the focal plane of its lens) sits `d2` behind it, the eye `d4`
/// in front looking back at the plate. The plate images the lens to `d2` on
/// the eye side, and the panel content is pre-flipped both ways so that the
/// plate's inversion leaves it upright.
pub fn ame_preset_with_lens(hmd: &HmdSpec, tmd: &TmdParams, l2: f64, d2: f64, d4: f64) -> Result<Scene> {
    require_positive("d2", d2)?;
    require_positive("d4", d4)?;
    require_positive("lens aperture", l2)?;
    hmd.validate()?;
    let window = tmd.extent.0.min(tmd.extent.1);
    if l2 > window {
        return Err(Error::InvalidGeometry(format!(
            "lens aperture {l2} mm exceeds the TMD extent {window} mm"
        )));
    }
    let f = hmd.eyepiece_focal_length();
    let panel = hmd.panel_extent();
    let plate = tmd.plate(Pose::identity())?;
    let lens = ThinLens::new(Pose::at(Vec3::new(0.0, 0.0, -d2)), f, l2)?;
    let housing_size = 4.0 * panel.0.max(panel.1).max(window);
    let housing = Absorber::new(Pose::at(Vec3::new(0.0, 0.0, -d2)), (housing_size, housing_size), l2)?;
    let screen = Screen::new(
        Pose::at(Vec3::new(0.0, 0.0, -d2 - f)),
        panel,
        Pattern::new(PatternKind::Marker, 8, 512, 1.0),
        (true, true),
    )?;
    let eye = human_eye("eye", Pose::at(Vec3::new(0.0, 0.0, d4)), hmd.fov_deg + 10.0)?;
    let background = dim_background(Pose::at(Vec3::new(0.0, 0.0, -d2 - f - 1000.0)), 20.0 * housing_size)?;
    Scene::new(
        vec![
            Element::new("tmd", plate),
            Element::new("lens", lens),
            Element::new("housing", housing),
            Element::new("panel", screen),
        ],
        eye,
        Some(background),
    )
}

/// Shared frame for the folded see-through layouts: the eye at the origin
/// looking along `+z`, a 45° fold element at `z = a` sending the view up to
/// `+y`.
fn folded_layout(l1: f64, a: f64, d: f64) -> Result<(Pose, Screen, EyeCamera, Background)> {
    if !(l1 >= 0.0 && l1.is_finite()) {
        return Err(Error::InvalidGeometry(format!("screen size must be ≥ 0, got {l1}")));
    }
    require_positive("a", a)?;
    require_positive("d", d)?;
    let fold = Pose::facing(
        Vec3::new(0.0, 0.0, a),
        Vec3::new(0.0, 1.0, -1.0),
        Vec3::new(0.0, 1.0, 1.0),
    )?;
    let screen = Screen::new(
        Pose::facing(Vec3::new(0.0, d, a), -Vec3::Y, Vec3::Z)?,
        (l1, l1),
        Pattern::new(PatternKind::Marker, 8, 256, 1.0),
        (false, false),
    )?;
    let fov = 2.0 * (l1 / (2.0 * (a + d))).atan().to_degrees();
    let eye_pose = Pose::facing(Vec3::ZERO, -Vec3::Z, Vec3::Y)?;
    let eye = human_eye("eye", eye_pose, (fov * 3.0).clamp(20.0, 160.0))?;
    let far = 10.0 * (l1 + a + d);
    let background = dim_background(Pose::at(Vec3::new(0.0, 0.0, a + far)), 20.0 * far)?;
    Ok((fold, screen, eye, background))
}

fn fold_extent(l1: f64, a: f64, d: f64) -> (f64, f64) {
    (4.0 * (l1 + a + d), 2f64.sqrt() * 1.8 * a.min(d))
}

/// Half-mirror see-through layout: eye to mirror `a`, mirror to screen `d`,
/// screen width `l1`.
pub fn half_mirror_preset(l1: f64, a: f64, d: f64) -> Result<Scene> {
    let (fold, screen, eye, background) = folded_layout(l1, a, d)?;
    let mirror = HalfMirror::new(fold, fold_extent(l1, a, d), HalfMirror::DEFAULT_REFLECTANCE)?;
    Scene::new(
        vec![Element::new("mirror", mirror), Element::new("screen", screen)],
        eye,
        Some(background),
    )
}

/// Curved-mirror variant of [`half_mirror_preset`] with angular
/// magnification `a_mag`.
///
/// The 45° fold sees the sphere obliquely; across the fold (the horizontal
/// direction here) the surface power is scaled by `cos 45°`. The reference
/// distance is picked so that this sagittal power enlarges the view of the
/// screen by `a_mag`.
pub fn convex_mirror_preset(l1: f64, a: f64, d: f64, a_mag: f64) -> Result<Scene> {
    let (fold, screen, eye, background) = folded_layout(l1, a, d)?;
    require_positive("magnification", a_mag)?;
    let reference = a * d / (a + d) * std::f64::consts::FRAC_1_SQRT_2;
    let mirror = ConvexMirror::new(fold, fold_extent(l1, a, d), a_mag, reference)?;
    Scene::new(
        vec![Element::new("mirror", mirror), Element::new("screen", screen)],
        eye,
        Some(background),
    )
}

/// A screen below a 45° TMD plate, seen as an aerial image `a − h` in front
/// of the eye. The eye is at the origin looking along `+z`, the plate at
/// `z = a` and the screen `h` below the plate.
pub fn tmd_see_through_preset(l1: f64, a: f64, h: f64, tmd: &TmdParams) -> Result<Scene> {
    require_positive("a", a)?;
    require_positive("h", h)?;
    require_positive("screen size", l1)?;
    if h >= a {
        return Err(Error::InvalidGeometry(format!(
            "screen drop {h} mm puts the aerial image behind the eye (a = {a} mm)"
        )));
    }
    let plate_pose = Pose::facing(
        Vec3::new(0.0, 0.0, a),
        Vec3::new(0.0, 1.0, -1.0),
        Vec3::new(0.0, 1.0, 1.0),
    )?;
    let plate = tmd.plate(plate_pose)?;
    let screen = Screen::new(
        Pose::facing(Vec3::new(0.0, -h, a), Vec3::Y, Vec3::Z)?,
        (l1, l1),
        Pattern::new(PatternKind::Marker, 8, 256, 1.0),
        (false, false),
    )?;
    let fov = 2.0 * (l1 / (2.0 * (a - h))).atan().to_degrees();
    let eye = human_eye(
        "eye",
        Pose::facing(Vec3::ZERO, -Vec3::Z, Vec3::Y)?,
        (fov * 1.5).clamp(20.0, 160.0),
    )?;
    let background = dim_background(Pose::at(Vec3::new(0.0, 0.0, a + 1000.0)), 20000.0)?;
    Scene::new(
        vec![Element::new("tmd", plate), Element::new("screen", screen)],
        eye,
        Some(background),
    )
}

/// Desk-scale focus bench.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchLayout {
    /// Put a magnifying lens between the screen and the plate.
    pub with_eyepiece: bool,
    pub tmd: TmdParams,
}

impl BenchLayout {
    pub const CAMERA_FOCAL_LENGTH: f64 = 100.0;
    pub const CAMERA_APERTURE: f64 = 25.0;
    /// Camera-to-aerial-image distance at the nominal position.
    pub const STANDOFF: f64 = 400.0;
    /// Object-side width covered by the sensor at the standoff distance.
    pub const FRAME_WIDTH: f64 = 80.0;

    const SCREEN_SIZE: f64 = 24.0;
    const PLAIN_SCREEN_Z: f64 = -60.0;
    const EYEPIECE_Z: f64 = -40.0;
    const EYEPIECE_F: f64 = 50.0;
    const EYEPIECE_SCREEN_Z: f64 = -70.0;

    /// Depth of the aerial image in front of the plate.
    pub fn aerial_image_z(&self) -> f64 {
        if self.with_eyepiece {
            // The lens forms a virtual image of the screen which the plate
            // then mirrors.
            let s = Self::EYEPIECE_Z - Self::EYEPIECE_SCREEN_Z;
            let virtual_distance = 1.0 / (1.0 / s - 1.0 / Self::EYEPIECE_F);
            -(Self::EYEPIECE_Z - virtual_distance)
        } else {
            -Self::PLAIN_SCREEN_Z
        }
    }

    /// Lateral magnification of the screen as seen in the aerial image.
    pub fn magnification(&self) -> f64 {
        if self.with_eyepiece {
            let s = Self::EYEPIECE_Z - Self::EYEPIECE_SCREEN_Z;
            Self::EYEPIECE_F / (Self::EYEPIECE_F - s)
        } else {
            1.0
        }
    }
}

/// A checkerboard screen imaged into the air by a TMD plate, with or
/// without a magnifying eyepiece, and a 100 mm camera focused on the aerial
/// image from [`BenchLayout::STANDOFF`].
pub fn defocus_bench_preset(layout: &BenchLayout) -> Result<Scene> {
    let plate = layout.tmd.plate(Pose::identity())?;
    let pattern = Pattern::new(PatternKind::Checker, 6, 512, 1.0);
    let size = (BenchLayout::SCREEN_SIZE, BenchLayout::SCREEN_SIZE);
    let mut elements = vec![Element::new("tmd", plate)];
    if layout.with_eyepiece {
        let lens = ThinLens::new(
            Pose::at(Vec3::new(0.0, 0.0, BenchLayout::EYEPIECE_Z)),
            BenchLayout::EYEPIECE_F,
            100.0,
        )?;
        elements.push(Element::new("eyepiece", lens));
        let screen = Screen::new(
            Pose::at(Vec3::new(0.0, 0.0, BenchLayout::EYEPIECE_SCREEN_Z)),
            size,
            pattern,
            (true, true),
        )?;
        elements.push(Element::new("screen", screen));
    } else {
        let screen = Screen::new(
            Pose::at(Vec3::new(0.0, 0.0, BenchLayout::PLAIN_SCREEN_Z)),
            size,
            pattern,
            (true, true),
        )?;
        elements.push(Element::new("screen", screen));
    }
    let f = BenchLayout::CAMERA_FOCAL_LENGTH;
    let standoff = BenchLayout::STANDOFF;
    let image_distance = 1.0 / (1.0 / f - 1.0 / standoff);
    let px = 256;
    let sensor = Sensor {
        width_px: px,
        height_px: px,
        pixel_pitch: BenchLayout::FRAME_WIDTH * image_distance / standoff / px as f64,
    };
    let camera = EyeCamera::new(
        "camera",
        Pose::at(Vec3::new(0.0, 0.0, layout.aerial_image_z() + standoff)),
        f,
        BenchLayout::CAMERA_APERTURE,
        standoff,
        sensor,
    )?;
    Scene::new(elements, camera, None)
}

/// Names accepted by [`builtin_scene`].
pub const BUILTIN_SCENES: [&str; 7] = [
    "ame-dk2",
    "ame-cardboard",
    "half-mirror",
    "convex-mirror",
    "tmd-see-through",
    "bench-no-eyepiece",
    "bench-eyepiece",
];

/// One of the shipped example scenes.
pub fn builtin_scene(name: &str) -> Option<Scene> {
    let tmd = TmdParams::default();
    let scene = match name {
        "ame-dk2" => ame_preset(&HmdSpec::dk2(), &tmd, 40.0, 40.0),
        "ame-cardboard" => ame_preset(&HmdSpec::cardboard(), &tmd, 40.0, 40.0),
        "half-mirror" => half_mirror_preset(60.0, 30.0, 30.0),
        "convex-mirror" => convex_mirror_preset(60.0, 30.0, 30.0, 1.5),
        "tmd-see-through" => tmd_see_through_preset(60.0, 100.0, 60.0, &tmd),
        "bench-no-eyepiece" => defocus_bench_preset(&BenchLayout {
            with_eyepiece: false,
            tmd,
        }),
        "bench-eyepiece" => defocus_bench_preset(&BenchLayout {
            with_eyepiece: true,
            tmd,
        }),
        _ => return None,
    };
    Some(scene.expect("built-in scenes are valid"))
}
