#![no_main]
use arbitrary::Arbitrary;
use compact_fractal::maps::{CompactCoord, FractalMap};
use compact_fractal::{EmbeddedCoord, FractalDescriptor};
use libfuzzer_sys::fuzz_target;

#[derive(Arbitrary, Debug)]
struct Input {
    fractal: u8,
    level: u8,
    x: u64,
    y: u64,
}

fuzz_target!(|input: Input| {
    let desc = match input.fractal % 3 {
        0 => FractalDescriptor::sierpinski_triangle(),
        1 => FractalDescriptor::sierpinski_carpet(),
        _ => FractalDescriptor::vicsek(),
    };
    let Ok(map) = FractalMap::new(&desc, u32::from(input.level % 40)) else {
        return;
    };
    let e = EmbeddedCoord::new(input.x, input.y);
    if let Ok(c) = map.nu(e) {
        assert_eq!(map.lambda(c).unwrap(), e);
    }
    let c = CompactCoord::new(input.x, input.y);
    if let Ok(e) = map.lambda(c) {
        assert_eq!(map.nu(e).unwrap(), c);
    }
});
