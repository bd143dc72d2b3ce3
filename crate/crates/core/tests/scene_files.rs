use ame_optics::elements::{
    Absorber, ConvexMirror, Element, ElementKind, HalfMirror, ModeWeights, Pattern, PatternKind, Screen, ThinLens,
    TmdPlate,
};
use ame_optics::scene::{
    builtin_scene, parse_scene, serialize_scene, Background, EyeCamera, Scene, Sensor, BUILTIN_SCENES,
};
use ame_optics::{Error, Pose, Vec3};
use proptest::prelude::*;

#[test]
fn builtin_scenes_round_trip() {
    for name in BUILTIN_SCENES {
        let scene = builtin_scene(name).unwrap();
        let text = serialize_scene(&scene);
        let back = parse_scene(&text).unwrap_or_else(|e| panic!("{name}: {e}\n{text}"));
        assert_eq!(back, scene, "{name}");
        assert_eq!(serialize_scene(&back), text, "{name}");
    }
    assert!(builtin_scene("nosuch").is_none());
}

#[test]
fn hand_written_scene() {
    let text = "\
# a plate and a screen
element tmd plate {
  position = 0 0 0
  extent = 120 120
  pitch = 0.5
  polarizer = true
}
element screen target {
  position = 0 0 -80
  extent = 60 60
  pattern = checker
  pattern_cells = 6
}
eye viewer {
  position = 0 0 80
  focal_length = 17
  aperture = 4
  focus_distance = 80
  sensor = 64 48 0.1
}
";
    let scene = parse_scene(text).unwrap();
    let ElementKind::Tmd(plate) = &scene.element("plate").unwrap().kind else {
        panic!("plate is not a TMD");
    };
    assert_eq!(plate.pitch, 0.5);
    assert!(plate.polarizer);
    let ElementKind::Screen(screen) = &scene.element("target").unwrap().kind else {
        panic!("target is not a screen");
    };
    assert_eq!(screen.pattern.kind, PatternKind::Checker);
    assert_eq!(scene.eye().sensor.width_px, 64);
    assert_eq!(scene.eye().focus_distance, 80.0);
    assert!(scene.background().is_none());
}

#[test]
fn errors_are_classified() {
    assert!(matches!(parse_scene(""), Err(Error::Validation(_))));
    assert!(matches!(
        parse_scene("eye e {\n position = 0 0\n}\n"),
        Err(Error::Parse { line: 2, .. })
    ));
    assert!(matches!(parse_scene("}\n"), Err(Error::Parse { line: 1, .. })));
    assert!(matches!(
        parse_scene("eye e {\n position = 0 0 0\n focal_length = 17\n aperture = nan\n}\n"),
        Err(Error::Parse { line: 4, .. })
    ));
}

fn pose() -> impl Strategy<Value = Pose> {
    let v = |r: f64| (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z));
    (v(500.0), v(1.0), v(1.0))
        .prop_filter("well conditioned", |(_, n, u)| {
            n.norm() > 0.1 && u.norm() > 0.1 && n.normalize().cross(u.normalize()).norm() > 0.1
        })
        .prop_map(|(p, n, u)| Pose::facing(p, n, u).unwrap())
}

fn extent() -> impl Strategy<Value = (f64, f64)> {
    (0.0..1e3f64, 0.0..1e3f64)
}

fn pattern() -> impl Strategy<Value = Pattern> {
    let kind = prop_oneof![
        Just(PatternKind::Uniform),
        Just(PatternKind::Checker),
        Just(PatternKind::Grid),
        Just(PatternKind::Marker),
    ];
    (kind, 1..64usize, 1..512usize, 0.0..10.0f64).prop_map(|(k, c, r, l)| Pattern::new(k, c, r, l))
}

fn element_kind() -> impl Strategy<Value = ElementKind> {
    prop_oneof![
        (pose(), prop_oneof![-500.0..-1.0f64, 1.0..500.0f64], 0.1..200.0f64).prop_map(|(p, f, a)| ThinLens::new(
            p, f, a
        )
        .unwrap()
        .into()),
        (pose(), extent(), 0.0..=1.0f64).prop_map(|(p, e, r)| HalfMirror::new(p, e, r).unwrap().into()),
        (pose(), extent(), 0.1..5.0f64, 1.0..500.0f64)
            .prop_map(|(p, e, m, d)| ConvexMirror::new(p, e, m, d).unwrap().into()),
        (
            pose(),
            extent(),
            0.0..2.0f64,
            0.0..1.0f64,
            0.0..1.0f64,
            any::<bool>(),
            any::<bool>()
        )
            .prop_map(|(p, e, pitch, s, t, pol, fill)| {
                let total = 1.0 + s + t;
                let mut plate = TmdPlate::new(p, e, pitch)
                    .unwrap()
                    .with_weights(ModeWeights::new(1.0 / total, s / total, t / total).unwrap())
                    .with_polarizer(pol);
                plate.angular_fill = fill;
                plate.into()
            }),
        (pose(), extent(), pattern(), any::<(bool, bool)>())
            .prop_map(|(p, e, pat, flip)| Screen::new(p, e, pat, flip).unwrap().into()),
        (pose(), (1.0..1e3f64, 1.0..1e3f64), 0.0..1.0f64)
            .prop_map(|(p, e, h)| Absorber::new(p, e, h * e.0.min(e.1)).unwrap().into()),
    ]
}

fn scene() -> impl Strategy<Value = Scene> {
    let sensor = (1..64usize, 1..64usize, 0.001..1.0f64).prop_map(|(w, h, p)| Sensor {
        width_px: w,
        height_px: h,
        pixel_pitch: p,
    });
    let focus = prop_oneof![Just(f64::INFINITY), 200.0..1e4f64];
    let eye = (pose(), 1.0..100.0f64, 0.1..20.0f64, focus, sensor)
        .prop_map(|(p, f, a, fd, s)| EyeCamera::new("eye", p, f, a, fd, s).unwrap());
    let background =
        proptest::option::of((pose(), extent(), pattern()).prop_map(|(p, e, pat)| Background::new(p, e, pat).unwrap()));
    (prop::collection::vec(element_kind(), 0..6), eye, background).prop_map(|(kinds, eye, bg)| {
        let elements = kinds
            .into_iter()
            .enumerate()
            .map(|(i, k)| Element::new(format!("e{i}"), k))
            .collect();
        Scene::new(elements, eye, bg).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn serialized_scenes_parse_back_unchanged(scene in scene()) {
        let text = serialize_scene(&scene);
        let back = parse_scene(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, scene);
    }

    #[test]
    fn parser_never_panics(text in "[a-z_ {}=#0-9.,\\-\n]{0,400}") {
        let _ = parse_scene(&text);
    }
}
