#![no_main]

use ame_optics::scene::{parse_scene, serialize_scene};
use libfuzzer_sys::fuzz_target;

// Anything the parser accepts must serialize to text that parses back to
// the same scene.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(scene) = parse_scene(text) else {
        return;
    };
    let out = serialize_scene(&scene);
    let back = parse_scene(&out).expect("serialized scene parses");
    assert_eq!(back, scene);
    assert_eq!(serialize_scene(&back), out);
});
