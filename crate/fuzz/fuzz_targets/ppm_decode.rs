#![no_main]

use ame_optics::render::{decode_ppm, encode_ppm};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = decode_ppm(data) {
        // Encoding rescales to the brightest channel, so only the shape
        // survives a round trip in general.
        let again = decode_ppm(&encode_ppm(&img)).expect("encoded image decodes");
        assert_eq!((again.width(), again.height()), (img.width(), img.height()));
    }
});
