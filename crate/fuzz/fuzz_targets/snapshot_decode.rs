#![no_main]

use egl::io::{decode, decode_all};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((snap, used)) = decode(data) {
        assert!(used <= data.len());
        // A decoded record must re-encode to the bytes it came from.
        let again = snap.to_bytes().expect("decoded records re-encode");
        assert_eq!(&again[..], &data[..used]);
    }
    let _ = decode_all(data);
});
