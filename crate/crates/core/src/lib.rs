//! Specification validation for software packages.
//!
//! A specification lists data types, data elements and functions. Each
//! function carries a four-descriptor classification, its parameter
//! references, and effects that state the status every element must have
//! before and after the effect runs. This crate
//!
//! * parses and pretty-prints the `.svsp` language ([`dsl`]),
//! * checks a specification for consistency ([`checker`]),
//! * gates piecewise edits behind that check ([`editor`]),
//! * answers selective and cross-reference queries ([`query`]),
//! * simulates call sequences against a store of element statuses
//!   ([`scenario`]).

pub mod checker;
pub mod diag;
pub mod dsl;
pub mod editor;
pub mod model;
pub mod query;
pub mod restriction;
pub mod scenario;
pub mod symbols;
pub mod synth;

pub use checker::{check_spec, CheckReport};
pub use diag::{Code, Diagnostic, Severity};
pub use dsl::{format_spec, parse_spec};
pub use model::*;
