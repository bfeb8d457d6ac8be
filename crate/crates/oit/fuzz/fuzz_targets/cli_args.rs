#![no_main]

use libfuzzer_sys::fuzz_target;

// Argument parsing must never panic, whatever the argv. Parsing only; no
// command is executed.
fuzz_target!(|data: &str| {
    let argv = std::iter::once("oit".to_string())
        .chain(data.split_whitespace().map(|s| s.to_string()));
    let _ = oit::cli::try_parse_args(argv);
});
