#![no_main]
use compact_fractal::bench::{read_bench_csv, write_bench_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(records) = read_bench_csv(data) else {
        return;
    };
    let mut out = Vec::new();
    write_bench_csv(&records, &mut out).unwrap();
    let again = read_bench_csv(out.as_slice()).unwrap();
    assert_eq!(again.len(), records.len());
});
