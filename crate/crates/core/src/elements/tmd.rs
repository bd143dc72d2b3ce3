//! Transmissive mirror device: a plate of micro dihedral corner reflectors.
//!
//! Each reflector cell is a pair of orthogonal mirrors standing
//! perpendicular to the plate. A ray that bounces off both mirrors has both
//! in-plane direction components negated and keeps its normal component,
//! which places the real image of a source at its mirror position across
//! the plate. The cell structure itself is collapsed into that direction map;
//! the pitch survives only as quantization of the exit point onto cell
//! centers.

use super::{check_extent, check_non_negative, check_positive, plane_hit, SurfaceHit};
use crate::error::{Error, Result};
use crate::math::{Pose, Ray, RayMode, Vec3};

/// How a ray crosses the plate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TmdMode {
    DoubleReflect,
    /// Bounced off the mirror whose normal is the plate `u` axis only.
    SingleReflectU,
    /// Bounced off the mirror whose normal is the plate `v` axis only.
    SingleReflectV,
    PassThrough,
    Absorbed,
}

impl TmdMode {
    pub fn ray_mode(self) -> Option<RayMode> {
        match self {
            TmdMode::DoubleReflect => Some(RayMode::DoubleReflect),
            TmdMode::SingleReflectU | TmdMode::SingleReflectV => Some(RayMode::SingleReflect),
            TmdMode::PassThrough => Some(RayMode::PassThrough),
            TmdMode::Absorbed => None,
        }
    }
}

/// Probabilities of the three crossing modes. The remainder up to 1 is
/// absorbed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeWeights {
    pub double: f64,
    pub single: f64,
    pub pass: f64,
}

impl ModeWeights {
    pub const IDEAL: ModeWeights = ModeWeights {
        double: 1.0,
        single: 0.0,
        pass: 0.0,
    };

    pub fn new(double: f64, single: f64, pass: f64) -> Result<Self> {
        let w = ModeWeights { double, single, pass };
        w.validate()?;
        Ok(w)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("double", self.double), ("single", self.single), ("pass", self.pass)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Validation(format!(
                    "TMD {name} weight must lie in [0, 1], got {v}"
                )));
            }
        }
        if self.double + self.single + self.pass > 1.0 + 1e-12 {
            return Err(Error::Validation(format!(
                "TMD mode weights sum to more than 1: {} + {} + {}",
                self.double, self.single, self.pass
            )));
        }
        Ok(())
    }
}

impl Default for ModeWeights {
    /// Placeholder budget; real plates need measured values.
    fn default() -> Self {
        ModeWeights {
            double: 0.6,
            single: 0.3,
            pass: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TmdPlate {
    pub pose: Pose,
    pub extent: (f64, f64),
    /// Cell pitch in mm; 0 is an ideal continuous plate.
    pub pitch: f64,
    /// Mirror slat height over pitch.
    pub mirror_ratio: f64,
    pub mode_weights: ModeWeights,
    /// A polarizing filter that blocks singly reflected light.
    pub polarizer: bool,
    /// Scale the double-reflection probability down with incidence angle.
    pub angular_fill: bool,
}

impl TmdPlate {
    pub const DEFAULT_MIRROR_RATIO: f64 = 3.0;

    pub fn new(pose: Pose, extent: (f64, f64), pitch: f64) -> Result<Self> {
        let plate = TmdPlate {
            pose,
            extent,
            pitch,
            mirror_ratio: Self::DEFAULT_MIRROR_RATIO,
            mode_weights: ModeWeights::default(),
            polarizer: false,
            angular_fill: false,
        };
        plate.validate()?;
        Ok(plate)
    }

    /// Ideal continuous plate that always double-reflects.
    pub fn ideal(pose: Pose, extent: (f64, f64)) -> Result<Self> {
        Ok(TmdPlate::new(pose, extent, 0.0)?.with_weights(ModeWeights::IDEAL))
    }

    pub fn with_weights(mut self, weights: ModeWeights) -> Self {
        self.mode_weights = weights;
        self
    }

    pub fn with_polarizer(mut self, polarizer: bool) -> Self {
        self.polarizer = polarizer;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_extent(self.extent)?;
        check_non_negative("TMD pitch", self.pitch)?;
        check_positive("TMD mirror ratio", self.mirror_ratio)?;
        self.mode_weights.validate()
    }

    /// Single-reflection probability after the polarizer.
    pub fn effective_single(&self) -> f64 {
        if self.polarizer {
            0.0
        } else {
            self.mode_weights.single
        }
    }

    /// Double-reflection probability for a ray with plate-frame direction
    /// `incidence`. With `angular_fill` on, a steep ray is less likely to
    /// meet both mirrors of a cell:
    /// `p(θ) = clamp(p·(1 − tanθ/(2·ratio)), 0, 1)`.
    pub fn double_probability(&self, incidence: Vec3) -> f64 {
        let base = self.mode_weights.double;
        if !self.angular_fill {
            return base;
        }
        let tan = (incidence.x.hypot(incidence.y) / incidence.z.abs()).min(f64::MAX);
        (base * (1.0 - tan / (2.0 * self.mirror_ratio))).clamp(0.0, 1.0)
    }

    /// Picks a crossing mode by where `draw ∈ [0, 1)` falls in the
    /// partition `[double | single | pass | absorbed]`. The single interval
    /// splits evenly into its `u` and `v` halves. With the polarizer, draws
    /// in the single interval are absorbed: the filter removes that light
    /// rather than redistributing it.
    pub fn classify_mode(&self, incidence: Vec3, draw: f64) -> TmdMode {
        let double = self.double_probability(incidence);
        let single = self.mode_weights.single;
        let pass = self.mode_weights.pass;
        if draw < double {
            TmdMode::DoubleReflect
        } else if draw < double + single {
            if self.polarizer {
                TmdMode::Absorbed
            } else if draw < double + single / 2.0 {
                TmdMode::SingleReflectU
            } else {
                TmdMode::SingleReflectV
            }
        } else if draw < double + single + pass {
            TmdMode::PassThrough
        } else {
            TmdMode::Absorbed
        }
    }

    pub fn intersect(&self, ray: &Ray) -> Option<SurfaceHit> {
        plane_hit(ray, &self.pose, self.extent)
    }

    /// Center of the pitch cell containing `(u, v)`. Cells are aligned so
    /// that their corners sit on multiples of the pitch.
    pub fn quantize(&self, uv: (f64, f64)) -> (f64, f64) {
        let p = self.pitch;
        if p == 0.0 {
            return uv;
        }
        let q = |x: f64| ((x / p).floor() + 0.5) * p;
        (q(uv.0), q(uv.1))
    }

    /// Direction map of a mode in the plate frame.
    pub fn map_local_direction(mode: TmdMode, d: Vec3) -> Vec3 {
        match mode {
            TmdMode::DoubleReflect => Vec3::new(-d.x, -d.y, d.z),
            TmdMode::SingleReflectU => Vec3::new(-d.x, d.y, d.z),
            TmdMode::SingleReflectV => Vec3::new(d.x, -d.y, d.z),
            TmdMode::PassThrough | TmdMode::Absorbed => d,
        }
    }

    /// Carries the ray across the plate in `mode`. Reflected modes leave
    /// from the center of the hit cell; pass-through leaves from the true hit.
    /// An absorbed ray comes back with weight 0 at the hit point.
    pub fn transform(&self, ray: &Ray, mode: TmdMode) -> Result<Ray> {
        let hit = self.intersect(ray).ok_or(Error::NoIntersection)?;
        let Some(ray_mode) = mode.ray_mode() else {
            let mut dead = *ray;
            dead.origin = hit.point;
            dead.weight = 0.0;
            return Ok(dead);
        };
        let exit = match mode {
            TmdMode::PassThrough => hit.point,
            _ => {
                let (u, v) = self.quantize(hit.uv);
                self.pose.to_world_point(Vec3::new(u, v, 0.0))
            }
        };
        let local = self.pose.to_local_dir(ray.direction());
        let out = self.pose.to_world_dir(Self::map_local_direction(mode, local));
        Ok(ray.redirected(exit, out).with_mode(ray_mode))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plate(pitch: f64) -> TmdPlate {
        TmdPlate::new(Pose::identity(), (100.0, 100.0), pitch).unwrap()
    }

    #[test]
    fn double_mode_flips_in_plane_components() {
        let d = Vec3::new(0.3, -0.4, 0.866);
        assert_eq!(
            TmdPlate::map_local_direction(TmdMode::DoubleReflect, d),
            Vec3::new(-0.3, 0.4, 0.866)
        );
        assert_eq!(TmdPlate::map_local_direction(TmdMode::DoubleReflect, Vec3::Z), Vec3::Z);
    }

    #[test]
    fn quantizes_to_cell_center() {
        let (u, v) = plate(0.5).quantize((0.26, 0.74));
        assert!((u - 0.25).abs() < 1e-15 && (v - 0.75).abs() < 1e-15);
        assert_eq!(plate(0.0).quantize((0.26, 0.74)), (0.26, 0.74));
        let (u, _) = plate(0.5).quantize((-0.1, 0.0));
        assert!((u + 0.25).abs() < 1e-15);
    }

    #[test]
    fn pass_through_is_not_quantized() {
        let ray = Ray::new(Vec3::new(0.26, 0.74, -1.0), Vec3::Z);
        let out = plate(0.5).transform(&ray, TmdMode::PassThrough).unwrap();
        assert!((out.origin.x - 0.26).abs() < 1e-12);
        assert_eq!(out.mode, RayMode::PassThrough);
        let out = plate(0.5).transform(&ray, TmdMode::DoubleReflect).unwrap();
        assert!((out.origin.x - 0.25).abs() < 1e-12);
        assert_eq!(out.mode, RayMode::DoubleReflect);
    }

    #[test]
    fn classify_examples() {
        let p = plate(0.0).with_weights(ModeWeights::new(0.6, 0.3, 0.1).unwrap());
        let m = p.classify_mode(Vec3::Z, 0.65);
        assert!(matches!(m, TmdMode::SingleReflectU | TmdMode::SingleReflectV));
        assert_eq!(p.classify_mode(Vec3::Z, 0.65), TmdMode::SingleReflectU);
        assert_eq!(p.classify_mode(Vec3::Z, 0.8), TmdMode::SingleReflectV);
        assert_eq!(p.classify_mode(Vec3::Z, 0.95), TmdMode::PassThrough);

        let polarized = p.clone().with_polarizer(true);
        assert_eq!(polarized.classify_mode(Vec3::Z, 0.65), TmdMode::Absorbed);
        assert_eq!(polarized.classify_mode(Vec3::Z, 0.3), TmdMode::DoubleReflect);

        let ideal = p.with_weights(ModeWeights::IDEAL);
        for draw in [0.0, 0.3, 0.999_999] {
            assert_eq!(ideal.classify_mode(Vec3::Z, draw), TmdMode::DoubleReflect);
        }
    }

    #[test]
    fn weights_leave_remainder_absorbed() {
        let p = plate(0.0).with_weights(ModeWeights::new(0.5, 0.0, 0.2).unwrap());
        assert_eq!(p.classify_mode(Vec3::Z, 0.75), TmdMode::Absorbed);
        assert!(ModeWeights::new(0.6, 0.3, 0.2).is_err());
        assert!(ModeWeights::new(-0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn angular_fill_reduces_double_mass() {
        let mut p = plate(0.5).with_weights(ModeWeights::IDEAL);
        p.angular_fill = true;
        assert_eq!(p.double_probability(Vec3::Z), 1.0);
        // tan 45° = 1, ratio 3 → 1 − 1/6.
        let d = Vec3::new(1.0, 0.0, 1.0).normalize();
        assert!((p.double_probability(d) - 5.0 / 6.0).abs() < 1e-12);
        let grazing = Vec3::new(1.0, 0.0, 1e-9).normalize();
        assert_eq!(p.double_probability(grazing), 0.0);
    }

    #[test]
    fn absorbed_ray_has_zero_weight() {
        let ray = Ray::new(Vec3::new(0.0, 0.0, -1.0), Vec3::Z);
        let out = plate(0.5).transform(&ray, TmdMode::Absorbed).unwrap();
        assert_eq!(out.weight, 0.0);
    }

    #[test]
    fn miss_is_error() {
        let ray = Ray::new(Vec3::new(80.0, 0.0, -1.0), Vec3::Z);
        assert!(matches!(
            plate(0.0).transform(&ray, TmdMode::DoubleReflect),
            Err(Error::NoIntersection)
        ));
    }
}
