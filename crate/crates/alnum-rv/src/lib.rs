//! Alphanumeric RISC-V RV64GC shellcode: instruction catalogs, a packer that
//! turns any payload into a self-unpacking charset-valid image, and an RV64
//! interpreter to check the result.

pub mod catalog;
pub mod charset;
pub mod emu;
pub mod error;
pub mod fp;
pub mod isa;
pub mod link;
pub mod loadtable;
pub mod payload;
pub mod stage1;
pub mod stage2;

/// Double precision, the format the fmadd unpacker works in.
pub type Double = f64;
/// Single precision, for `.s` instructions in the interpreter.
pub type Single = f32;
