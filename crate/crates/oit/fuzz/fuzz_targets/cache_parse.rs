#![no_main]

use libfuzzer_sys::fuzz_target;

// The a_p cache file is the one on-disk format read back by the tool; any
// byte sequence must parse cleanly or error, never panic.
fuzz_target!(|data: &[u8]| {
    if let Ok(records) = oit::cli::cache::parse_cache_bytes(data) {
        // Accepted input must round-trip.
        let rendered = oit::cli::cache::render_cache(&records);
        let again = oit::cli::cache::parse_cache_bytes(rendered.as_bytes())
            .expect("rendered cache must reparse");
        assert_eq!(records, again);
    }
});
