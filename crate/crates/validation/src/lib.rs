//! Holds the acceptance suite in `tests/acceptance.rs`. Run it with
//! `cargo test -p argx-validation`; it prints one PASS/FAIL line per
//! criterion and needs the `argx` binary built alongside it.
