#![no_main]

use egl::io::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::parse(text) {
        let _ = cfg.validate();
        let back = RunConfig::parse(&cfg.canonical()).expect("canonical form parses");
        // NaN fields compare unequal; the canonical text must still be stable.
        assert_eq!(back.canonical(), cfg.canonical());
    }
});
