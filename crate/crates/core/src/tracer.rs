//! Non-sequential ray propagation through a scene.
//!
//! Rays find the nearest element, interact, and carry on until something
//! absorbs them, they leave the scene, reach the eye pupil or run out of
//! bounces. Half mirrors split a path into a tree. Every random choice comes
//! from a counter-based stream keyed by `(seed, ray index, bounce)`, so a
//! bundle traces to the same bits on any number of threads.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::elements::{ElementKind, SurfaceHit, TmdMode};
use crate::error::{Error, Result};
use crate::math::{intersect_unbounded_plane, Pose, Ray, RayMode, Vec3, PARALLEL_EPSILON};
use crate::scene::Scene;

pub const DEFAULT_MAX_BOUNCES: usize = 16;
/// Split-off branches lighter than this are dropped.
pub const PRUNE_WEIGHT: f64 = 1e-4;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Counter-based random source for one ray. Draw `k` is a pure function of
/// `(seed, stream, k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RayStream {
    seed: u64,
    stream: u64,
}

impl RayStream {
    pub fn new(seed: u64, index: u64) -> Self {
        RayStream { seed, stream: index }
    }

    /// Uniform draw in `[0, 1)`.
    pub fn draw(&self, counter: u64) -> f64 {
        let mut rng = self.rng();
        rng.set_word_pos(u128::from(counter) * 2);
        unit_f64(rng.next_u64())
    }

    /// Sequential generator positioned at the start of the stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Independent stream for a sub-branch.
    pub fn branch(&self, key: u64) -> RayStream {
        RayStream {
            seed: self.seed,
            stream: splitmix64(self.stream ^ splitmix64(key.wrapping_add(1))),
        }
    }
}

pub(crate) fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// What happened where a segment ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interaction {
    Lens,
    Mirror,
    /// Continued on the reflected side of a half mirror.
    HalfMirrorReflect,
    /// Continued on the transmitted side of a half mirror.
    HalfMirrorTransmit,
    Tmd(TmdMode),
    /// Stopped on a screen.
    Screen,
    /// Stopped on an absorber.
    Absorber,
    /// Entered the eye pupil.
    Eye,
    /// Left the scene.
    None,
    /// Hit an element with no bounces left.
    Cutoff,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub ray: Ray,
    /// Element (or eye) id at the end of the segment.
    pub element: Option<String>,
    pub hit: Option<Vec3>,
    pub interaction: Interaction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Terminal {
    Absorbed,
    Escaped,
    ReachedEye,
    MaxBounces,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TracePath {
    pub segments: Vec<Segment>,
    pub terminal: Terminal,
    /// Paths split off at half mirrors, in the order they were created.
    pub children: Vec<TracePath>,
}

impl TracePath {
    /// The ray of the last segment.
    pub fn last_ray(&self) -> &Ray {
        &self.segments.last().expect("paths have at least one segment").ray
    }

    /// Number of element interactions along the main branch.
    pub fn interactions(&self) -> usize {
        self.segments.iter().filter(|s| s.element.is_some()).count()
    }

    /// This path followed by all descendants, depth first.
    pub fn leaves(&self) -> Vec<&TracePath> {
        let mut out = vec![self];
        for c in &self.children {
            out.extend(c.leaves());
        }
        out
    }

    /// Whether this path or any descendant ends on the element `id`.
    pub fn ends_on(&self, id: &str) -> bool {
        self.leaves().iter().any(|p| {
            p.segments.last().and_then(|s| s.element.as_deref()) == Some(id) && p.terminal != Terminal::MaxBounces
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Target {
    Element(usize),
    Eye,
}

/// Nearest surface along the ray, optionally counting the eye pupil.
pub(crate) fn nearest_hit(scene: &Scene, ray: &Ray, with_eye: bool) -> Option<(Target, SurfaceHit)> {
    let mut best: Option<(Target, SurfaceHit)> = None;
    for (i, e) in scene.elements().iter().enumerate() {
        if let Some(hit) = e.kind.intersect(ray) {
            if best.is_none_or(|(_, b)| hit.t < b.t) {
                best = Some((Target::Element(i), hit));
            }
        }
    }
    if with_eye {
        if let Some(hit) = scene.eye().intersect_pupil(ray) {
            if best.is_none_or(|(_, b)| hit.t < b.t) {
                best = Some((Target::Eye, hit));
            }
        }
    }
    best
}

struct Tracer<'a> {
    scene: &'a Scene,
    max_bounces: usize,
}

impl Tracer<'_> {
    fn trace(&self, mut ray: Ray, mut bounces: usize, stream: RayStream) -> TracePath {
        let mut segments = Vec::new();
        let mut children = Vec::new();
        let mut splits = 0u64;
        loop {
            let Some((target, hit)) = nearest_hit(self.scene, &ray, true) else {
                segments.push(Segment {
                    ray,
                    element: None,
                    hit: None,
                    interaction: Interaction::None,
                });
                return TracePath {
                    segments,
                    terminal: Terminal::Escaped,
                    children,
                };
            };
            let (id, kind) = match target {
                Target::Eye => {
                    segments.push(Segment {
                        ray,
                        element: Some(self.scene.eye().id.clone()),
                        hit: Some(hit.point),
                        interaction: Interaction::Eye,
                    });
                    return TracePath {
                        segments,
                        terminal: Terminal::ReachedEye,
                        children,
                    };
                }
                Target::Element(i) => {
                    let e = &self.scene.elements()[i];
                    (e.id.clone(), &e.kind)
                }
            };
            let stop = |interaction, terminal, segments: &mut Vec<Segment>| {
                segments.push(Segment {
                    ray,
                    element: Some(id.clone()),
                    hit: Some(hit.point),
                    interaction,
                });
                terminal
            };
            let terminal = match kind {
                ElementKind::Screen(_) => Some(stop(Interaction::Screen, Terminal::Absorbed, &mut segments)),
                ElementKind::Absorber(_) => Some(stop(Interaction::Absorber, Terminal::Absorbed, &mut segments)),
                _ if bounces >= self.max_bounces => {
                    Some(stop(Interaction::Cutoff, Terminal::MaxBounces, &mut segments))
                }
                _ => None,
            };
            if let Some(terminal) = terminal {
                return TracePath {
                    segments,
                    terminal,
                    children,
                };
            }
            bounces += 1;
            let (interaction, next) = match kind {
                ElementKind::ThinLens(lens) => (Interaction::Lens, lens.transform(&ray)),
                ElementKind::ConvexMirror(mirror) => (Interaction::Mirror, mirror.transform(&ray)),
                ElementKind::HalfMirror(mirror) => match mirror.interact(&ray) {
                    Ok((reflected, transmitted)) => {
                        // Equal split keeps the reflected side on the main path.
                        let reflected_main = reflected.weight >= transmitted.weight;
                        let (main, other) = if reflected_main {
                            (reflected, transmitted)
                        } else {
                            (transmitted, reflected)
                        };
                        if other.weight >= PRUNE_WEIGHT {
                            splits += 1;
                            let child_stream = stream.branch(splits);
                            children.push(self.trace(other, bounces, child_stream));
                        }
                        let interaction = if reflected_main {
                            Interaction::HalfMirrorReflect
                        } else {
                            Interaction::HalfMirrorTransmit
                        };
                        (interaction, Ok(main))
                    }
                    Err(e) => (Interaction::None, Err(e)),
                },
                ElementKind::Tmd(plate) => {
                    let local = plate.pose.to_local_dir(ray.direction());
                    let mode = plate.classify_mode(local, stream.draw(bounces as u64));
                    (Interaction::Tmd(mode), plate.transform(&ray, mode))
                }
                ElementKind::Screen(_) | ElementKind::Absorber(_) => unreachable!(),
            };
            // The nearest-hit search already found this element, so the
            // transform cannot miss it.
            let next = next.expect("element was hit");
            segments.push(Segment {
                ray,
                element: Some(id),
                hit: Some(hit.point),
                interaction,
            });
            if interaction == Interaction::Tmd(TmdMode::Absorbed) {
                return TracePath {
                    segments,
                    terminal: Terminal::Absorbed,
                    children,
                };
            }
            ray = next;
        }
    }
}

/// Traces one ray. Screens, absorbers and the eye end a path without using
/// up a bounce; every other element costs one.
pub fn trace_ray(scene: &Scene, ray: Ray, max_bounces: usize, stream: &RayStream) -> TracePath {
    Tracer { scene, max_bounces }.trace(ray, 0, *stream)
}

/// Cone of emission directions around `axis`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cone {
    pub axis: Vec3,
    /// Half-angle in radians.
    pub half_angle: f64,
}

impl Cone {
    pub fn new(axis: Vec3, half_angle: f64) -> Result<Self> {
        if !(axis.norm() > 0.0) || !axis.is_finite() {
            return Err(Error::InvalidGeometry("cone axis must be nonzero".into()));
        }
        if !(0.0..=std::f64::consts::PI).contains(&half_angle) {
            return Err(Error::InvalidGeometry(format!(
                "cone half-angle must lie in [0, π], got {half_angle}"
            )));
        }
        Ok(Cone {
            axis: axis.normalize(),
            half_angle,
        })
    }

    /// Direction `i` of `n`: a Fibonacci lattice spread evenly over the
    /// cone's solid angle.
    pub fn direction(&self, i: usize, n: usize) -> Vec3 {
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let x1 = (i as f64 + 0.5) / n as f64;
        let x2 = (i as f64 * golden).fract();
        let cos_theta = 1.0 - x1 * (1.0 - self.half_angle.cos());
        let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
        let phi = 2.0 * std::f64::consts::PI * x2;
        let w = self.axis;
        let helper = if w.x.abs() < 0.9 { Vec3::X } else { Vec3::Y };
        let u = helper.cross(w).normalize();
        let v = w.cross(u);
        (u * (sin_theta * phi.cos()) + v * (sin_theta * phi.sin()) + w * cos_theta).normalize()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ModeTally {
    pub count: usize,
    pub weight: f64,
}

/// Counts over every leaf path (main paths and split-off children).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BundleStats {
    pub emitted: usize,
    pub reached_eye: usize,
    pub absorbed: usize,
    pub escaped: usize,
    pub max_bounces: usize,
    /// Indexed by [`RayMode`] in declaration order, tallying each leaf's
    /// final mode and weight.
    pub modes: [ModeTally; 4],
}

impl BundleStats {
    pub fn mode(&self, mode: RayMode) -> ModeTally {
        self.modes[mode_index(mode)]
    }

    fn add(&mut self, path: &TracePath) {
        for leaf in path.leaves() {
            match leaf.terminal {
                Terminal::Absorbed => self.absorbed += 1,
                Terminal::Escaped => self.escaped += 1,
                Terminal::ReachedEye => self.reached_eye += 1,
                Terminal::MaxBounces => self.max_bounces += 1,
            }
            let ray = leaf.last_ray();
            let tally = &mut self.modes[mode_index(ray.mode)];
            tally.count += 1;
            tally.weight += ray.weight;
        }
    }
}

fn mode_index(mode: RayMode) -> usize {
    match mode {
        RayMode::Primary => 0,
        RayMode::DoubleReflect => 1,
        RayMode::SingleReflect => 2,
        RayMode::PassThrough => 3,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BundleResult {
    pub paths: Vec<TracePath>,
    pub seed: u64,
    pub stats: BundleStats,
}

impl BundleResult {
    /// Final rays of every leaf that escaped or reached the eye.
    pub fn exit_rays(&self) -> Vec<Ray> {
        self.paths
            .iter()
            .flat_map(|p| p.leaves())
            .filter(|p| matches!(p.terminal, Terminal::Escaped | Terminal::ReachedEye))
            .map(|p| *p.last_ray())
            .filter(|r| r.weight > 0.0)
            .collect()
    }

    /// Final rays of leaves that reached the eye.
    pub fn eye_rays(&self) -> Vec<Ray> {
        self.paths
            .iter()
            .flat_map(|p| p.leaves())
            .filter(|p| p.terminal == Terminal::ReachedEye)
            .map(|p| *p.last_ray())
            .collect()
    }
}

/// Traces `n_rays` from a point source over `cone`. Ray `i` takes lattice
/// direction `i` and random stream `(seed, i)`; paths come back in index
/// order whatever the thread count.
pub fn trace_bundle(scene: &Scene, source: Vec3, n_rays: usize, cone: &Cone, seed: u64) -> BundleResult {
    trace_bundle_with(scene, source, n_rays, cone, seed, DEFAULT_MAX_BOUNCES)
}

pub fn trace_bundle_with(
    scene: &Scene,
    source: Vec3,
    n_rays: usize,
    cone: &Cone,
    seed: u64,
    max_bounces: usize,
) -> BundleResult {
    let tracer = Tracer { scene, max_bounces };
    let paths: Vec<TracePath> = (0..n_rays)
        .into_par_iter()
        .map(|i| {
            let ray = Ray::new(source, cone.direction(i, n_rays));
            tracer.trace(ray, 0, RayStream::new(seed, i as u64))
        })
        .collect();
    let mut stats = BundleStats {
        emitted: n_rays,
        ..BundleStats::default()
    };
    for p in &paths {
        stats.add(p);
    }
    BundleResult { paths, seed, stats }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpotDiagram {
    /// Crossing points in the plane's `(u, v)` coordinates.
    pub points: Vec<(f64, f64)>,
    pub centroid: (f64, f64),
    /// Root-mean-square distance from the centroid.
    pub rms_radius: f64,
}

/// Where the lines of the exit rays cross `plane`. Lines are followed both
/// ways, so the plane may sit behind the last interaction.
pub fn spot_diagram(bundle: &BundleResult, plane: &Pose) -> Result<SpotDiagram> {
    let n = plane.normal();
    let points: Vec<(f64, f64)> = bundle
        .exit_rays()
        .iter()
        .filter_map(|ray| {
            let d = ray.direction();
            if d.dot(n).abs() < PARALLEL_EPSILON {
                return None;
            }
            // Start far back along the line so the forward-only plane test
            // accepts crossings on either side of the origin.
            let t0 = (plane.position() - ray.origin).dot(n) / d.dot(n);
            let probe = Ray::new(ray.at(t0 - 1.0), d);
            intersect_unbounded_plane(&probe, plane).map(|h| h.uv)
        })
        .collect();
    spot_from_points(points)
}

pub(crate) fn spot_from_points(points: Vec<(f64, f64)>) -> Result<SpotDiagram> {
    if points.is_empty() {
        return Err(Error::EmptySpot);
    }
    let count = points.len() as f64;
    let cu = points.iter().map(|p| p.0).sum::<f64>() / count;
    let cv = points.iter().map(|p| p.1).sum::<f64>() / count;
    let ms = points
        .iter()
        .map(|p| (p.0 - cu).powi(2) + (p.1 - cv).powi(2))
        .sum::<f64>()
        / count;
    Ok(SpotDiagram {
        points,
        centroid: (cu, cv),
        rms_radius: ms.sqrt(),
    })
}
