//! The handbook, compiled into the crate.
//!
//! Each module below includes one chapter of the rendered book (the
//! `book/` directory at the repository root) verbatim as its
//! documentation. The point is not navigation, it is enforcement:
//! `cargo test --doc` compiles and runs every Rust snippet the book
//! shows, so the prose cannot drift from the code it documents.
//!
//! Read the book with `mdbook serve book/`, or read the same text here
//! through rustdoc.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/ch1-odometers.md")]
pub mod chapter1_odometers {}

#[doc = include_str!("../../../book/src/ch2-windows.md")]
pub mod chapter2_windows {}

#[doc = include_str!("../../../book/src/ch3-arrays.md")]
pub mod chapter3_arrays {}

#[doc = include_str!("../../../book/src/ch4-metrics.md")]
pub mod chapter4_metrics {}

#[doc = include_str!("../../../book/src/ch5-constructions.md")]
pub mod chapter5_constructions {}

#[doc = include_str!("../../../book/src/ch6-cli.md")]
pub mod chapter6_cli {}
