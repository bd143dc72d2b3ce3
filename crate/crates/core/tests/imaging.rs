use ame_optics::elements::{Element, ModeWeights, TmdPlate};
use ame_optics::math::closest_point_to_rays;
use ame_optics::scene::{ame_preset, EyeCamera, HmdSpec, Scene, Sensor, TmdParams};
use ame_optics::tracer::{spot_diagram, trace_bundle, trace_ray, Cone, RayStream, Terminal};
use ame_optics::{Mat3, Pose, Ray, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn far_eye() -> EyeCamera {
    let sensor = Sensor {
        width_px: 8,
        height_px: 8,
        pixel_pitch: 0.1,
    };
    EyeCamera::new(
        "eye",
        Pose::at(Vec3::new(0.0, 0.0, 1e5)),
        17.0,
        4.0,
        f64::INFINITY,
        sensor,
    )
    .unwrap()
}

fn random_pose(rng: &mut ChaCha8Rng) -> Pose {
    let normal = Vec3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(0.2..1.0),
    );
    let up = Vec3::new(rng.random_range(-1.0..1.0), 1.0, rng.random_range(-1.0..1.0));
    let position = Vec3::new(
        rng.random_range(-20.0..20.0),
        rng.random_range(-20.0..20.0),
        rng.random_range(-20.0..20.0),
    );
    Pose::facing(position, normal, up).unwrap()
}

fn plate_scene(plate: TmdPlate) -> Scene {
    Scene::new(vec![Element::new("tmd", plate)], far_eye(), None).unwrap()
}

#[test]
fn ideal_plate_images_random_sources_to_their_mirror_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..100 {
        let pose = random_pose(&mut rng);
        let plate = TmdPlate::ideal(pose, (400.0, 400.0)).unwrap();
        let scene = plate_scene(plate);
        let local = Vec3::new(
            rng.random_range(-50.0..50.0),
            rng.random_range(-50.0..50.0),
            -rng.random_range(5.0..150.0),
        );
        let source = pose.to_world_point(local);
        let image = pose.to_world_point(Vec3::new(local.x, local.y, -local.z));
        let toward = pose.to_world_point(Vec3::new(local.x, local.y, 0.0)) - source;
        let bundle = trace_bundle(&scene, source, 64, &Cone::new(toward, 0.4).unwrap(), case);
        let rays = bundle.exit_rays();
        assert_eq!(rays.len(), 64);
        let c = closest_point_to_rays(&rays).unwrap();
        assert!(c.rms_residual < 1e-9, "case {case}: residual {}", c.rms_residual);
        assert!((c.point - image).norm() < 1e-8, "case {case}: {} vs {image}", c.point);
    }
}

#[test]
fn single_ray_bundle_matches_trace_ray() {
    let plate = TmdPlate::new(Pose::identity(), (200.0, 200.0), 0.5).unwrap();
    let scene = plate_scene(plate);
    let cone = Cone::new(Vec3::Z, 0.3).unwrap();
    let source = Vec3::new(1.0, 2.0, -30.0);
    let bundle = trace_bundle(&scene, source, 1, &cone, 5);
    let direct = trace_ray(
        &scene,
        Ray::new(source, cone.direction(0, 1)),
        16,
        &RayStream::new(5, 0),
    );
    assert_eq!(bundle.paths, vec![direct]);
}

#[test]
fn same_seed_is_bit_identical_across_thread_counts() {
    let scene = plate_scene(TmdPlate::new(Pose::identity(), (200.0, 200.0), 0.3).unwrap());
    let cone = Cone::new(Vec3::Z, 0.5).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| trace_bundle(&scene, Vec3::new(0.0, 0.0, -40.0), 2000, &cone, 42))
    };
    let a = run(1);
    assert_eq!(a, run(5));
    assert_eq!(a, run(1));
    assert_ne!(a, trace_bundle(&scene, Vec3::new(0.0, 0.0, -40.0), 2000, &cone, 43));
}

#[test]
fn ame_plate_floats_the_lens_at_d2() {
    for (d2, d4) in [(40.0, 40.0), (55.0, 30.0), (25.0, 80.0)] {
        let scene = ame_preset(&HmdSpec::dk2(), &TmdParams::ideal((120.0, 120.0)), d2, d4).unwrap();
        // Points on the lens itself, emitting toward the plate.
        for p in [Vec3::new(0.0, 0.0, -d2), Vec3::new(5.0, -3.0, -d2)] {
            let bundle = trace_bundle(
                &scene,
                p + Vec3::new(0.0, 0.0, 1e-3),
                200,
                &Cone::new(Vec3::Z, 0.3).unwrap(),
                1,
            );
            let c = closest_point_to_rays(&bundle.exit_rays()).unwrap();
            let expected = Vec3::new(p.x, p.y, d2 - 1e-3);
            assert!((c.point - expected).norm() < 1e-6, "{} vs {expected}", c.point);
        }
    }
}

#[test]
fn ame_bundle_reaching_the_eye_converges_on_the_aerial_image() {
    let hmd = HmdSpec::cardboard();
    let (d2, d4) = (40.0, 40.0);
    let scene = ame_preset(&hmd, &TmdParams::ideal((120.0, 120.0)), d2, d4).unwrap();
    let f = hmd.eyepiece_focal_length();
    // Halfway between panel and lens the lens forms a virtual image one
    // focal length behind itself; the plate floats that to d2 + f.
    let source = Vec3::new(2.0, 1.0, -d2 - f / 2.0);
    let bundle = trace_bundle(&scene, source, 4000, &Cone::new(Vec3::Z, 0.6).unwrap(), 42);
    let rays = bundle.eye_rays();
    assert!(rays.len() > 10, "only {} rays reached the eye", rays.len());
    let c = closest_point_to_rays(&rays).unwrap();
    // The virtual image is magnified by f / (f/2) = 2.
    let expected = Vec3::new(4.0, 2.0, d2 + f);
    assert!(c.rms_residual < 1e-6, "residual {}", c.rms_residual);
    assert!((c.point - expected).norm() < 1e-6, "{} vs {expected}", c.point);
}

fn spot_rms(pitch: f64, plane_z: f64) -> f64 {
    let plate = TmdPlate::new(Pose::identity(), (200.0, 200.0), pitch)
        .unwrap()
        .with_weights(ModeWeights::IDEAL);
    let scene = plate_scene(plate);
    let bundle = trace_bundle(
        &scene,
        Vec3::new(0.2, -0.1, -50.0),
        4000,
        &Cone::new(Vec3::Z, 0.3).unwrap(),
        42,
    );
    spot_diagram(&bundle, &Pose::at(Vec3::new(0.0, 0.0, plane_z)))
        .unwrap()
        .rms_radius
}

#[test]
fn spot_grows_with_pitch() {
    let rms: Vec<f64> = [0.0, 0.1, 0.3, 0.5].iter().map(|&p| spot_rms(p, 50.0)).collect();
    assert!(rms[0] < 1e-9, "{rms:?}");
    assert!(rms.windows(2).all(|w| w[0] < w[1]), "{rms:?}");
}

#[test]
fn spot_grows_linearly_away_from_focus() {
    let r = |dz: f64| spot_rms(0.0, 50.0 + dz);
    let (r10, r20, r40) = (r(10.0), r(20.0), r(40.0));
    assert!((r20 / r10 - 2.0).abs() < 1e-6);
    assert!((r40 / r10 - 4.0).abs() < 1e-6);
}

#[test]
fn paths_are_continuous() {
    let scene = ame_preset(&HmdSpec::dk2(), &TmdParams::default(), 40.0, 40.0).unwrap();
    let pitch = TmdParams::default().pitch;
    let bundle = trace_bundle(
        &scene,
        Vec3::new(0.0, 0.0, -50.0),
        500,
        &Cone::new(Vec3::Z, 0.8).unwrap(),
        3,
    );
    for path in bundle.paths.iter().flat_map(|p| p.leaves()) {
        for pair in path.segments.windows(2) {
            let hit = pair[0].hit.unwrap();
            let gap = (pair[1].ray.origin - hit).norm();
            assert!(gap <= pitch * 2f64.sqrt() / 2.0 + 1e-6, "gap {gap}");
        }
        let weights: Vec<f64> = path.segments.iter().map(|s| s.ray.weight).collect();
        assert!(weights.windows(2).all(|w| w[1] <= w[0]));
        if path.terminal == Terminal::Escaped {
            assert!(path.segments.last().unwrap().hit.is_none());
        }
    }
}

#[test]
fn rotated_frame_sanity() {
    // A plate given by an explicit rotation matrix behaves like the same
    // plate built from a normal.
    let r = Mat3::from_row_major([0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0]);
    let pose = Pose::new(Vec3::ZERO, r).unwrap();
    let scene = plate_scene(TmdPlate::ideal(pose, (100.0, 100.0)).unwrap());
    let bundle = trace_bundle(
        &scene,
        Vec3::new(30.0, 5.0, 2.0),
        32,
        &Cone::new(-Vec3::X, 0.3).unwrap(),
        0,
    );
    let c = closest_point_to_rays(&bundle.exit_rays()).unwrap();
    assert!((c.point - Vec3::new(-30.0, 5.0, 2.0)).norm() < 1e-9);
}
