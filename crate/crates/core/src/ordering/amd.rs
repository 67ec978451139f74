//! Approximate minimum degree ordering on the pattern of `A + Aᵀ`.
//!
//! Backed by the `amd` crate (a port of the reference AMD implementation,
//! with aggressive absorption enabled).

use crate::sparse::{CscMatrix, Permutation};

pub fn amd_order(a: &CscMatrix) -> Permutation {
    assert!(a.is_square(), "amd_order needs a square matrix");
    let n = a.ncols();
    let off_diagonal = a.iter().any(|(i, j, _)| i != j);
    if !off_diagonal {
        return Permutation::identity(n);
    }
    let ap: Vec<isize> = a.col_ptr().iter().map(|&p| p as isize).collect();
    let ai: Vec<isize> = a.row_idx().iter().map(|&i| i as isize).collect();
    let control = amd::Control {
        aggressive: true,
        ..Default::default()
    };
    let (p, _pinv, _info) =
        amd::order(n as isize, &ap, &ai, &control).expect("CSC input is always valid for AMD");
    Permutation::from_order(p.into_iter().map(|v| v as usize).collect())
        .expect("AMD returns a permutation")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_is_identity() {
        assert!(amd_order(&CscMatrix::identity(6)).is_identity());
    }
}
