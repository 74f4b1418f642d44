//! Floating-point support: a soft fused multiply-add and the fmadd constant solver.

mod soft;
pub mod solver;

pub use soft::{fma, fma_exact, fma_flags, Binary, Rounding, NV, NX, OF, UF};
