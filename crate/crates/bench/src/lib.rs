//! Fixtures shared by the criterion benches.

use quadkit_core::{
    design_matrix, golub_welsch, multi_index_set, recurrence_coefficients, sample_weights, tensor_grid, DesignMatrix,
    Family, IndexKind,
};

/// Total order `order` Legendre design on the `(order + 1)^d` Chebyshev grid
/// with reciprocal Christoffel weights.
pub fn chebyshev_design(d: usize, order: usize) -> DesignMatrix {
    let cheb = recurrence_coefficients(Family::Chebyshev1, order + 2).unwrap();
    let g = golub_welsch(&cheb, order + 1).unwrap();
    let grid = tensor_grid(&vec![g; d]).unwrap();
    let basis = multi_index_set(IndexKind::TotalOrder, d, order, None).unwrap();
    let tabs = vec![recurrence_coefficients(Family::Legendre, order + 1).unwrap(); d];
    let w = sample_weights(&grid.points, &basis, &tabs).unwrap();
    design_matrix(&basis, &tabs, &grid.points, &w).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_shape() {
        let a = chebyshev_design(3, 2);
        assert_eq!((a.m(), a.n()), (27, 10));
    }
}
