#![no_main]
use compact_fractal::{CompactCoord, EmbeddedCoord};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(e) = text.parse::<EmbeddedCoord>() {
        assert_eq!(e.to_string().parse::<EmbeddedCoord>().unwrap(), e);
    }
    if let Ok(c) = text.parse::<CompactCoord>() {
        assert_eq!(c.to_string().parse::<CompactCoord>().unwrap(), c);
    }
});
