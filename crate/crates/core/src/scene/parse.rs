//! Plain-text `.scene` format.
//!
//! ```text
//! # comment
//! element tmd plate {
//!   extent = 120 120
//!   pitch = 0.5
//!   position = 0 0 0
//! }
//! eye viewer {
//!   aperture = 4
//!   focal_length = 17
//!   position = 0 0 40
//! }
//! background {
//!   extent = 4000 4000
//!   position = 0 0 -2000
//! }
//! ```
//!
//! One `key = value` per line, units fixed to millimeters. Vectors are
//! whitespace-separated numbers, `rotation` is a row-major 3×3 matrix whose
//! columns are the local axes. The serializer writes keys in alphabetical
//! order and numbers in shortest round-trip form.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{is_valid_id, Background, EyeCamera, Scene, Sensor};
use crate::elements::{
    Absorber, ConvexMirror, Element, ElementKind, HalfMirror, ModeWeights, Pattern, PatternKind, Screen, ThinLens,
    TmdPlate,
};
use crate::error::{Error, Result};
use crate::math::{Mat3, Pose, Vec3};

/// Parses `x,y,z` or `x y z` into a vector.
pub fn parse_vec3(text: &str) -> std::result::Result<Vec3, String> {
    let parts: Vec<&str> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect();
    if parts.len() != 3 {
        return Err(format!("expected 3 numbers, got {}", parts.len()));
    }
    let mut out = [0.0; 3];
    for (slot, p) in out.iter_mut().zip(&parts) {
        *slot = p.parse::<f64>().map_err(|_| format!("`{p}` is not a number"))?;
        if !slot.is_finite() {
            return Err(format!("`{p}` is not finite"));
        }
    }
    Ok(Vec3::from(out))
}

#[derive(Debug)]
enum BlockKind {
    Element(String),
    Eye,
    Background,
}

#[derive(Debug)]
struct Block {
    kind: BlockKind,
    id: String,
    line: usize,
    entries: BTreeMap<String, (String, usize)>,
}

impl Block {
    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key)
    }

    fn numbers<const N: usize>(&mut self, key: &str) -> Result<Option<[f64; N]>> {
        let Some((value, line)) = self.take(key) else {
            return Ok(None);
        };
        let parts: Vec<&str> = value.split_whitespace().collect();
        if parts.len() != N {
            return Err(Error::parse(
                line,
                format!("`{key}` expects {N} number(s), got {}", parts.len()),
            ));
        }
        let mut out = [0.0; N];
        for (slot, p) in out.iter_mut().zip(parts) {
            *slot = p
                .parse::<f64>()
                .map_err(|_| Error::parse(line, format!("`{key}`: `{p}` is not a number")))?;
            if slot.is_nan() {
                return Err(Error::parse(line, format!("`{key}` is NaN")));
            }
        }
        Ok(Some(out))
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>> {
        Ok(self.numbers::<1>(key)?.map(|[x]| x))
    }

    fn required_number(&mut self, key: &str) -> Result<f64> {
        self.number(key)?.ok_or_else(|| self.missing(key))
    }

    fn pair(&mut self, key: &str) -> Result<Option<(f64, f64)>> {
        Ok(self.numbers::<2>(key)?.map(|[a, b]| (a, b)))
    }

    fn required_pair(&mut self, key: &str) -> Result<(f64, f64)> {
        self.pair(key)?.ok_or_else(|| self.missing(key))
    }

    fn bools<const N: usize>(&mut self, key: &str) -> Result<Option<[bool; N]>> {
        let Some((value, line)) = self.take(key) else {
            return Ok(None);
        };
        let parts: Vec<&str> = value.split_whitespace().collect();
        if parts.len() != N {
            return Err(Error::parse(
                line,
                format!("`{key}` expects {N} boolean(s), got {}", parts.len()),
            ));
        }
        let mut out = [false; N];
        for (slot, p) in out.iter_mut().zip(parts) {
            *slot = match p {
                "true" => true,
                "false" => false,
                other => return Err(Error::parse(line, format!("`{key}`: `{other}` is not true/false"))),
            };
        }
        Ok(Some(out))
    }

    fn flag(&mut self, key: &str) -> Result<bool> {
        Ok(self.bools::<1>(key)?.map(|[b]| b).unwrap_or(false))
    }

    fn count(&mut self, key: &str, default: usize) -> Result<usize> {
        let Some((value, line)) = self.take(key) else {
            return Ok(default);
        };
        value
            .parse::<usize>()
            .map_err(|_| Error::parse(line, format!("`{key}`: `{value}` is not a count")))
    }

    fn pose(&mut self) -> Result<Pose> {
        let position = self.numbers::<3>("position")?.ok_or_else(|| self.missing("position"))?;
        let rotation = self
            .numbers::<9>("rotation")?
            .map(Mat3::from_row_major)
            .unwrap_or(Mat3::IDENTITY);
        Pose::new(Vec3::from(position), rotation).map_err(|e| Error::Validation(format!("`{}`: {e}", self.id)))
    }

    fn pattern(&mut self) -> Result<Pattern> {
        let defaults = Pattern::default();
        let kind = match self.take("pattern") {
            Some((value, line)) => value.parse::<PatternKind>().map_err(|e| Error::parse(line, e))?,
            None => defaults.kind,
        };
        Ok(Pattern {
            kind,
            cells: self.count("pattern_cells", defaults.cells)?,
            resolution: self.count("pattern_resolution", defaults.resolution)?,
            radiance: self.number("pattern_radiance")?.unwrap_or(defaults.radiance),
        })
    }

    fn missing(&self, key: &str) -> Error {
        Error::Validation(format!("`{}` is missing required key `{key}`", self.id))
    }

    /// Every key must have been consumed.
    fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            Some((key, (_, line))) => Err(Error::parse(line, format!("unknown key `{key}`"))),
            None => Ok(()),
        }
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn lex_blocks(text: &str) -> Result<Vec<Block>> {
    let mut blocks = Vec::new();
    let mut open: Option<Block> = None;
    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(block) = open.as_mut() {
            if line == "}" {
                blocks.push(open.take().expect("block is open"));
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::parse(line_no, "expected `key = value` or `}`"));
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(Error::parse(line_no, format!("invalid key `{key}`")));
            }
            if value.is_empty() {
                return Err(Error::parse(line_no, format!("`{key}` has no value")));
            }
            if block
                .entries
                .insert(key.to_string(), (value.to_string(), line_no))
                .is_some()
            {
                return Err(Error::parse(line_no, format!("duplicate key `{key}`")));
            }
            continue;
        }
        let Some(header) = line.strip_suffix('{') else {
            return Err(Error::parse(line_no, "expected a block header ending in `{`"));
        };
        let words: Vec<&str> = header.split_whitespace().collect();
        let (kind, id) = match words.as_slice() {
            ["element", kind, id] => (BlockKind::Element(kind.to_string()), *id),
            ["eye", id] => (BlockKind::Eye, *id),
            ["background"] => (BlockKind::Background, "background"),
            _ => {
                return Err(Error::parse(
                    line_no,
                    "expected `element <kind> <id> {`, `eye <id> {` or `background {`",
                ))
            }
        };
        if !is_valid_id(id) {
            return Err(Error::parse(line_no, format!("invalid identifier `{id}`")));
        }
        open = Some(Block {
            kind,
            id: id.to_string(),
            line: line_no,
            entries: BTreeMap::new(),
        });
    }
    if let Some(block) = open {
        return Err(Error::parse(
            block.line,
            format!("block `{}` is never closed", block.id),
        ));
    }
    Ok(blocks)
}

fn build_element(kind: &str, mut b: Block) -> Result<Element> {
    let pose = b.pose()?;
    let built: ElementKind = match kind {
        "lens" => {
            let f = b.required_number("focal_length")?;
            let aperture = b.required_number("aperture")?;
            ThinLens::new(pose, f, aperture)?.into()
        }
        "half_mirror" => {
            let extent = b.required_pair("extent")?;
            let r = b.number("reflectance")?.unwrap_or(HalfMirror::DEFAULT_REFLECTANCE);
            HalfMirror::new(pose, extent, r)?.into()
        }
        "convex_mirror" => {
            let extent = b.required_pair("extent")?;
            let mag = b.required_number("magnification")?;
            let reference = b.required_number("reference_distance")?;
            ConvexMirror::new(pose, extent, mag, reference)?.into()
        }
        "tmd" => {
            let extent = b.required_pair("extent")?;
            let pitch = b.number("pitch")?.unwrap_or(0.0);
            let mut plate = TmdPlate::new(pose, extent, pitch)?;
            if let Some(ratio) = b.number("mirror_ratio")? {
                plate.mirror_ratio = ratio;
            }
            if let Some([d, s, p]) = b.numbers::<3>("mode_weights")? {
                plate.mode_weights = ModeWeights::new(d, s, p)?;
            }
            plate.polarizer = b.flag("polarizer")?;
            plate.angular_fill = b.flag("angular_fill")?;
            plate.validate()?;
            plate.into()
        }
        "screen" => {
            let extent = b.required_pair("extent")?;
            let pattern = b.pattern()?;
            let flip = b.bools::<2>("flip")?.unwrap_or([false, false]);
            Screen::new(pose, extent, pattern, (flip[0], flip[1]))?.into()
        }
        "absorber" => {
            let extent = b.required_pair("extent")?;
            let hole = b.number("hole_diameter")?.unwrap_or(0.0);
            Absorber::new(pose, extent, hole)?.into()
        }
        other => {
            return Err(Error::parse(b.line, format!("unknown element kind `{other}`")));
        }
    };
    let id = b.id.clone();
    b.finish()?;
    Ok(Element { id, kind: built })
}

fn build_eye(mut b: Block) -> Result<EyeCamera> {
    let pose = b.pose()?;
    let f = b.required_number("focal_length")?;
    let aperture = b.required_number("aperture")?;
    let focus = b.number("focus_distance")?.unwrap_or(f64::INFINITY);
    let sensor = match b.take("sensor") {
        Some((value, line)) => {
            let parts: Vec<&str> = value.split_whitespace().collect();
            let bad = || Error::parse(line, "`sensor` expects `<width_px> <height_px> <pitch_mm>`");
            let [w, h, p] = parts.as_slice() else {
                return Err(bad());
            };
            Sensor {
                width_px: w.parse().map_err(|_| bad())?,
                height_px: h.parse().map_err(|_| bad())?,
                pixel_pitch: p.parse().map_err(|_| bad())?,
            }
        }
        None => Sensor {
            width_px: 256,
            height_px: 256,
            pixel_pitch: 0.05,
        },
    };
    let id = b.id.clone();
    b.finish()?;
    EyeCamera::new(id, pose, f, aperture, focus, sensor)
}

fn build_background(mut b: Block) -> Result<Background> {
    let pose = b.pose()?;
    let extent = b.required_pair("extent")?;
    let pattern = b.pattern()?;
    b.finish()?;
    Background::new(pose, extent, pattern)
}

/// Parses and validates a scene file.
pub fn parse_scene(text: &str) -> Result<Scene> {
    let mut elements = Vec::new();
    let mut eye = None;
    let mut background = None;
    for block in lex_blocks(text)? {
        match &block.kind {
            BlockKind::Element(kind) => {
                let kind = kind.clone();
                elements.push(build_element(&kind, block)?);
            }
            BlockKind::Eye => {
                if eye.is_some() {
                    return Err(Error::Validation("scene has more than one eye".into()));
                }
                eye = Some(build_eye(block)?);
            }
            BlockKind::Background => {
                if background.is_some() {
                    return Err(Error::Validation("scene has more than one background".into()));
                }
                background = Some(build_background(block)?);
            }
        }
    }
    let eye = eye.ok_or_else(|| Error::Validation("scene has no eye".into()))?;
    Scene::new(elements, eye, background)
}

struct Writer {
    out: String,
    entries: BTreeMap<&'static str, String>,
}

impl Writer {
    fn new() -> Self {
        Writer {
            out: String::from("# ame scene\n"),
            entries: BTreeMap::new(),
        }
    }

    fn nums(&mut self, key: &'static str, values: &[f64]) {
        let text = values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
        self.entries.insert(key, text);
    }

    fn text(&mut self, key: &'static str, value: impl ToString) {
        self.entries.insert(key, value.to_string());
    }

    fn pose(&mut self, pose: &Pose) {
        self.nums("position", &pose.position().to_array());
        self.nums("rotation", &pose.rotation().to_row_major());
    }

    fn pattern(&mut self, p: &Pattern) {
        self.text("pattern", p.kind);
        self.text("pattern_cells", p.cells);
        self.text("pattern_resolution", p.resolution);
        self.nums("pattern_radiance", &[p.radiance]);
    }

    fn block(&mut self, header: &str) {
        let _ = writeln!(self.out, "{header} {{");
        for (key, value) in std::mem::take(&mut self.entries) {
            let _ = writeln!(self.out, "  {key} = {value}");
        }
        self.out.push_str("}\n");
    }
}

/// Writes a scene in the form [`parse_scene`] reads back exactly.
pub fn serialize_scene(scene: &Scene) -> String {
    let mut w = Writer::new();
    for e in scene.elements() {
        w.pose(e.kind.pose());
        match &e.kind {
            ElementKind::ThinLens(l) => {
                w.nums("focal_length", &[l.focal_length]);
                w.nums("aperture", &[l.aperture_diameter]);
            }
            ElementKind::HalfMirror(m) => {
                w.nums("extent", &[m.extent.0, m.extent.1]);
                w.nums("reflectance", &[m.reflectance]);
            }
            ElementKind::ConvexMirror(m) => {
                w.nums("extent", &[m.extent.0, m.extent.1]);
                w.nums("magnification", &[m.magnification]);
                w.nums("reference_distance", &[m.reference_distance]);
            }
            ElementKind::Tmd(t) => {
                w.nums("extent", &[t.extent.0, t.extent.1]);
                w.nums("pitch", &[t.pitch]);
                w.nums("mirror_ratio", &[t.mirror_ratio]);
                let m = t.mode_weights;
                w.nums("mode_weights", &[m.double, m.single, m.pass]);
                w.text("polarizer", t.polarizer);
                w.text("angular_fill", t.angular_fill);
            }
            ElementKind::Screen(s) => {
                w.nums("extent", &[s.extent.0, s.extent.1]);
                w.pattern(&s.pattern);
                w.text("flip", format!("{} {}", s.flip.0, s.flip.1));
            }
            ElementKind::Absorber(a) => {
                w.nums("extent", &[a.extent.0, a.extent.1]);
                w.nums("hole_diameter", &[a.hole_diameter]);
            }
        }
        w.block(&format!("element {} {}", e.kind.keyword(), e.id));
    }
    let eye = scene.eye();
    w.pose(&eye.pose);
    w.nums("focal_length", &[eye.focal_length]);
    w.nums("aperture", &[eye.aperture_diameter]);
    w.nums("focus_distance", &[eye.focus_distance]);
    w.text(
        "sensor",
        format!(
            "{} {} {}",
            eye.sensor.width_px, eye.sensor.height_px, eye.sensor.pixel_pitch
        ),
    );
    w.block(&format!("eye {}", eye.id));
    if let Some(bg) = scene.background() {
        w.pose(bg.pose());
        let extent = bg.extent();
        w.nums("extent", &[extent.0, extent.1]);
        w.pattern(bg.pattern());
        w.block("background");
    }
    w.out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
element screen panel {
  extent = 40 30
  position = 0 0 -100
}
element tmd plate {
  extent = 120 120
  pitch = 0.5
  polarizer = true
  position = 0 0 0
}
eye viewer {
  focal_length = 17
  aperture = 4
  position = 0 0 100
}
";

    #[test]
    fn minimal_scene() {
        let scene = parse_scene(MINIMAL).unwrap();
        assert_eq!(scene.elements().len(), 2);
        assert_eq!(scene.eye().id, "viewer");
        let ElementKind::Tmd(plate) = &scene.element("plate").unwrap().kind else {
            panic!("plate is not a TMD");
        };
        assert_eq!(plate.pitch, 0.5);
        assert!(plate.polarizer);
        assert_eq!(plate.mode_weights, ModeWeights::default());
    }

    #[test]
    fn two_eyes_is_a_validation_error() {
        let text = format!("{MINIMAL}eye second {{\n  focal_length = 17\n  aperture = 4\n  position = 0 0 1\n}}\n");
        assert!(matches!(parse_scene(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn missing_eye() {
        let text = "element absorber wall {\n extent = 1 1\n position = 0 0 0\n}\n";
        assert!(matches!(parse_scene(text), Err(Error::Validation(_))));
    }

    #[test]
    fn duplicate_ids() {
        let text = MINIMAL.replace("tmd plate", "tmd panel");
        assert!(matches!(parse_scene(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn skewed_rotation() {
        let text = MINIMAL.replace("pitch = 0.5", "pitch = 0.5\n  rotation = 1 0.1 0 0 1 0 0 0 1");
        assert!(matches!(parse_scene(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn negative_dimensions() {
        let text = MINIMAL.replace("extent = 40 30", "extent = -40 30");
        assert!(matches!(parse_scene(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let text = MINIMAL.replace("pitch = 0.5", "pitch 0.5");
        match parse_scene(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("unexpected {other:?}"),
        }
        let text = MINIMAL.replace("pitch = 0.5", "pitch = half");
        assert!(matches!(parse_scene(&text), Err(Error::Parse { line: 7, .. })));
        let text = MINIMAL.replace("pitch = 0.5", "pitch = 0.5\n  pitch = 0.3");
        assert!(matches!(parse_scene(&text), Err(Error::Parse { line: 8, .. })));
        let text = MINIMAL.replace("pitch = 0.5", "colour = red");
        assert!(matches!(parse_scene(&text), Err(Error::Parse { line: 7, .. })));
        assert!(matches!(
            parse_scene("element tmd plate {\n extent = 1 1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_scene("element prism p {\n position = 0 0 0\n}\n"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = format!(
            "# header\n\n{}",
            MINIMAL.replace("pitch = 0.5", "pitch = 0.5 # experiment")
        );
        assert!(parse_scene(&text).is_ok());
    }

    #[test]
    fn serializer_sorts_keys() {
        let out = serialize_scene(&parse_scene(MINIMAL).unwrap());
        let tmd: Vec<&str> = out
            .split("element tmd plate {\n")
            .nth(1)
            .unwrap()
            .lines()
            .take_while(|l| *l != "}")
            .map(|l| l.trim().split(' ').next().unwrap())
            .collect();
        let mut sorted = tmd.clone();
        sorted.sort();
        assert_eq!(tmd, sorted);
        assert_eq!(parse_scene(&out).unwrap(), parse_scene(MINIMAL).unwrap());
    }

    #[test]
    fn vec3_parsing() {
        assert_eq!(parse_vec3("1,2,3").unwrap(), Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(parse_vec3(" -1 0.5  2 ").unwrap(), Vec3::new(-1.0, 0.5, 2.0));
        assert!(parse_vec3("1,2").is_err());
        assert!(parse_vec3("1,2,x").is_err());
        assert!(parse_vec3("1,2,inf").is_err());
    }
}
