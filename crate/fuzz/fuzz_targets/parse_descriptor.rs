#![no_main]
use compact_fractal::FractalDescriptor;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(desc) = FractalDescriptor::parse(text) {
        // Whatever parses must print back to the same descriptor.
        let again = FractalDescriptor::parse(&desc.to_string()).expect("printed descriptor parses");
        assert_eq!(again, desc);
        assert!(desc.k() >= 1 && desc.k() <= desc.s() * desc.s());
    }
});
