//! Holds the acceptance test target, which prints one PASS/FAIL line per
//! criterion. Run it with `cargo test -p eltract-validation --test acceptance`.
