//! Qubit operators in the basis |0⟩ = (1, 0)ᵀ (excited), |1⟩ = (0, 1)ᵀ (ground).

use super::{ComplexMatrix, C64, I, ONE, ZERO};

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_row_major(2, vec![ZERO, ONE, ONE, ZERO]).unwrap()
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::from_row_major(2, vec![ZERO, -I, I, ZERO]).unwrap()
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_row_major(2, vec![ONE, ZERO, ZERO, -ONE]).unwrap()
}

/// Lowering operator `|1⟩⟨0|`.
pub fn sigma_minus() -> ComplexMatrix {
    ComplexMatrix::from_row_major(2, vec![ZERO, ZERO, ONE, ZERO]).unwrap()
}

/// Raising operator `|0⟩⟨1|`.
pub fn sigma_plus() -> ComplexMatrix {
    ComplexMatrix::from_row_major(2, vec![ZERO, ONE, ZERO, ZERO]).unwrap()
}

pub fn ket0() -> [C64; 2] {
    [ONE, ZERO]
}

pub fn ket1() -> [C64; 2] {
    [ZERO, ONE]
}

/// `(|0⟩ + |1⟩)/√2`.
pub fn ket_plus() -> [C64; 2] {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [h, h]
}
