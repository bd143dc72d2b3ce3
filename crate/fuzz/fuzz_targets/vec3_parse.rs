#![no_main]

use ame_optics::scene::parse_vec3;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(v) = parse_vec3(text) {
            assert!(v.is_finite());
        }
    }
});
