#![no_main]
use compact_fractal::frame::parse_pbm;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(bmp) = parse_pbm(data) {
        assert_eq!(bmp.bits.len() as u64, bmp.width * bmp.height);
    }
});
