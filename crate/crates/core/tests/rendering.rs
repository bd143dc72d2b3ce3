use ame_optics::elements::Pattern;
use ame_optics::elements::{ModeWeights, PatternKind};
use ame_optics::render::{defocus_sweep, render_view, sharpness_metric, Image, DEFAULT_OFFSETS};
use ame_optics::scene::{
    ame_preset, defocus_bench_preset, Background, BenchLayout, EyeCamera, HmdSpec, Scene, Sensor, TmdParams,
};
use ame_optics::{Pose, Vec3};

fn bench(with_eyepiece: bool, tmd: TmdParams) -> Scene {
    defocus_bench_preset(&BenchLayout { with_eyepiece, tmd }).unwrap()
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

/// Columns whose mean red exceeds `threshold`, as `(first, last)`.
fn red_columns(img: &Image, threshold: f64) -> Option<(usize, usize)> {
    let cols: Vec<usize> = (0..img.width())
        .filter(|&x| {
            let sum: f64 = (0..img.height()).map(|y| img.pixel(x, y)[0]).sum();
            sum / img.height() as f64 > threshold
        })
        .collect();
    Some((*cols.first()?, *cols.last()?))
}

#[test]
fn empty_scene_with_uniform_background_renders_flat() {
    let sensor = Sensor {
        width_px: 16,
        height_px: 12,
        pixel_pitch: 0.05,
    };
    let eye = EyeCamera::new("eye", Pose::identity(), 17.0, 4.0, f64::INFINITY, sensor).unwrap();
    let bg = Background::new(
        Pose::at(Vec3::new(0.0, 0.0, -500.0)),
        (5000.0, 5000.0),
        Pattern::new(PatternKind::Uniform, 1, 8, 0.7),
    )
    .unwrap();
    let scene = Scene::new(vec![], eye.clone(), Some(bg)).unwrap();
    let img = render_view(&scene, &eye, 4, 1).unwrap();
    assert!(img.pixels().iter().all(|p| *p == [0.7; 3]));
    assert_eq!(sharpness_metric(&img), 0.0);
}

#[test]
fn ame_preset_shows_the_panel_upright() {
    let scene = ame_preset(&HmdSpec::cardboard(), &TmdParams::ideal((120.0, 120.0)), 40.0, 40.0).unwrap();
    let img = render_view(&scene, scene.eye(), 2, 5).unwrap();
    let (w, h) = (img.width(), img.height());
    // The marker's red block sits top left, the blue bar low across the
    // middle.
    let mut red = (0.0, 0.0, 0.0);
    let mut blue_y = (0.0, 0.0);
    for y in 0..h {
        for x in 0..w {
            let p = img.pixel(x, y);
            if p[0] > 0.5 && p[1] < 0.2 {
                red = (red.0 + x as f64, red.1 + y as f64, red.2 + 1.0);
            }
            if p[2] > 0.5 && p[0] < 0.2 {
                blue_y = (blue_y.0 + y as f64, blue_y.1 + 1.0);
            }
        }
    }
    assert!(red.2 > 50.0 && blue_y.1 > 50.0);
    let (rx, ry) = (red.0 / red.2, red.1 / red.2);
    assert!(rx < w as f64 / 2.0, "red centroid x {rx}");
    assert!(ry < h as f64 / 2.0, "red centroid y {ry}");
    assert!(blue_y.0 / blue_y.1 > h as f64 / 2.0);
}

#[test]
fn polarizer_removes_exactly_the_single_reflection_light() {
    let weights = ModeWeights::new(0.6, 0.3, 0.1).unwrap();
    let zeroed = ModeWeights::new(0.6, 0.0, 0.1).unwrap();
    let params = |w, polarizer| TmdParams {
        mode_weights: w,
        polarizer,
        ..TmdParams::default()
    };
    let render = |tmd: TmdParams| {
        let scene = bench(false, tmd);
        render_view(&scene, scene.eye(), 2, 11).unwrap()
    };
    let polarized = render(params(weights, true));
    assert_eq!(polarized, render(params(zeroed, true)));
    assert_eq!(polarized, render(params(zeroed, false)));
    assert_ne!(render(params(weights, false)), render(params(zeroed, false)));
}

#[test]
fn render_is_independent_of_thread_count() {
    let scene = bench(true, TmdParams::default());
    let one = in_pool(1, || render_view(&scene, scene.eye(), 3, 99).unwrap());
    let many = in_pool(6, || render_view(&scene, scene.eye(), 3, 99).unwrap());
    assert_eq!(one, many);
    let other_seed = render_view(&scene, scene.eye(), 3, 100).unwrap();
    assert_ne!(one, other_seed);
}

#[test]
fn defocus_sweep_peaks_at_nominal_focus() {
    for with_eyepiece in [false, true] {
        let scene = bench(with_eyepiece, TmdParams::ideal((120.0, 120.0)));
        let sweep = defocus_sweep(&scene, scene.eye(), &DEFAULT_OFFSETS, 16, 42).unwrap();
        assert_eq!(
            sweep.argmax_offset(),
            0.0,
            "eyepiece={with_eyepiece} {:?}",
            sweep.sharpness
        );
    }
}

#[test]
fn defocus_sweep_with_prototype_plate_peaks_at_focus() {
    let scene = bench(false, TmdParams::default());
    let sweep = defocus_sweep(&scene, scene.eye(), &DEFAULT_OFFSETS, 8, 42).unwrap();
    assert_eq!(sweep.argmax_offset(), 0.0, "{:?}", sweep.sharpness);
}

#[test]
fn single_offset_sweep() {
    let scene = bench(false, TmdParams::default());
    let sweep = defocus_sweep(&scene, scene.eye(), &[0.0], 1, 0).unwrap();
    assert_eq!(sweep.offsets.len(), 1);
    assert_eq!(sweep.sharpness.len(), 1);
    assert!(defocus_sweep(&scene, scene.eye(), &[], 1, 0).is_err());
}

#[test]
fn eyepiece_magnifies_the_aerial_image() {
    // Red-only pattern extent is not available on a checkerboard; compare
    // the lit footprint instead.
    let lit_width = |with_eyepiece| {
        let scene = bench(with_eyepiece, TmdParams::ideal((120.0, 120.0)));
        let img = render_view(&scene, scene.eye(), 2, 1).unwrap();
        let (first, last) = red_columns(&img, 0.05).unwrap();
        (last - first + 1) as f64
    };
    let plain = lit_width(false);
    let magnified = lit_width(true);
    let expected = BenchLayout {
        with_eyepiece: true,
        tmd: TmdParams::default(),
    }
    .magnification();
    assert!(
        (magnified / plain - expected).abs() < 0.1 * expected,
        "{plain} → {magnified}"
    );
}

#[test]
fn finer_pitch_renders_sharper() {
    let sharpness = |pitch| {
        let tmd = TmdParams {
            pitch,
            mode_weights: ModeWeights::IDEAL,
            ..TmdParams::default()
        };
        let scene = bench(false, tmd);
        sharpness_metric(&render_view(&scene, scene.eye(), 16, 42).unwrap())
    };
    let s3 = sharpness(0.3);
    let s5 = sharpness(0.5);
    assert!(s3 >= s5, "{s3} < {s5}");
}
