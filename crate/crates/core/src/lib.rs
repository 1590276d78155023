//! Differential testing building blocks for compilers and assemblers.
//!
//! The modules follow the life of a test input: [`toolchain`] runs tools and
//! classifies outcomes, [`corpus`] and [`matrix`] compare acceptance across
//! tools and option grids, [`execdiff`] checks execution output against an
//! embedded expectation, [`generator`] synthesizes arithmetic programs,
//! [`combiner`] merges single-main tests into one program, [`reducer`]
//! minimizes failing inputs, and [`asmdiff`] compares machine code.

pub mod asmdiff;
pub mod combiner;
pub mod corpus;
pub mod execdiff;
pub mod generator;
pub mod matrix;
pub mod reducer;
pub mod toolchain;
