//! Holds the `acceptance` test target, which checks the optimizer against
//! reference anchors and prints one line per criterion. Run it with
//! `cargo test -p bandpilot-validation --test acceptance`.
