//! Compiler pipeline and reference interpreters for a literate legal DSL
//! built on prioritized default logic.

pub mod backend;
pub mod dcalc;
pub mod dcalc_to_lcalc;
pub mod desugar;
pub mod error;
pub mod gen;
pub mod lcalc;
pub mod lexer;
pub mod literate;
pub mod ops;
pub mod parser;
pub mod pipeline;
pub mod pos;
pub mod scope_to_dcalc;
pub mod scopelang;
pub mod selftest;
pub mod surface;
pub mod value;
