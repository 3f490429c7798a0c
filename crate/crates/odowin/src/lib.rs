//! A workbench for windows over integer odometers.
//!
//! An odometer is the "adding machine" completion of the integers with
//! respect to a chain of finite quotients `Z/M_1 <- Z/M_2 <- ...`, where
//! `M_n = m_1 * ... * m_n` for a scale sequence `m_n >= 2`. Points are
//! mixed-radix digit streams, addition carries over, and the cylinder sets
//! (fixed digit prefixes) are exactly the metric balls.
//!
//! A *window* is a compact subset of the odometer represented here as a
//! finite-depth cylinder tree whose cells are marked fully inside, fully
//! outside, or still undecided (frontier). All measures are exact rationals;
//! undecidedness surfaces as interval bounds, never as silent approximation.
//!
//! Windows cut 0-1 arrays out of the integers: position `g` reads the symbol
//! of the cell containing the embedded point `tau(g)`. The crate provides the
//! resulting symbolic arrays, periodicity reports, Besicovitch/Weyl distance
//! estimators, translation-metric ball profiles with box-dimension slopes,
//! word-complexity counts, and a gallery of constructions exercising all of
//! it: a regular window with a one-point boundary and divergent complexity,
//! a family with prescribed box dimension, greedy measure-interpolation
//! paths, and a two-stage positive-entropy window.
//!
//! Start with [`OdometerSpec`] and [`WindowTree`]; the `guide` module holds
//! a chapter-by-chapter tour that doubles as the rendered handbook.

pub mod constructions;
pub mod guide;
pub mod measure;
pub mod metrics;
pub mod model_set;
pub mod odometer;
pub mod window;

pub use measure::MeasureInterval;
pub use model_set::{Symbol, SymbolicArray};
pub use odometer::{OdometerPoint, OdometerSpec};
pub use window::{CellStatus, WindowTree};

// Compile and run the README's example alongside the doc tests.
#[doc = include_str!("../../../README.md")]
#[cfg(doctest)]
pub struct ReadmeDoctests;
