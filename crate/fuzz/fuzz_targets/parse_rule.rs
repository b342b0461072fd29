#![no_main]
use compact_fractal::StencilRule;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(rule) = StencilRule::parse(text) {
        assert_eq!(StencilRule::parse(&rule.to_string()).unwrap(), rule);
    }
});
