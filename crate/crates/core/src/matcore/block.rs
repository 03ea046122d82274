use super::lu::Lu;
use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Inverse of `[[T11, T12], [T21, T22]]` through the block LDU factorization
/// pivoted on `T11`:
///
/// ```text
/// T^{-1} = [[T11^{-1} + T11^{-1} T12 S^{-1} T21 T11^{-1}, -T11^{-1} T12 S^{-1}],
///           [-S^{-1} T21 T11^{-1},                        S^{-1}]]
/// ```
/// with the Schur complement `S = T22 - T21 T11^{-1} T12`.
pub fn block2x2_inv(t11: &Matrix, t12: &Matrix, t21: &Matrix, t22: &Matrix) -> Result<Matrix> {
    let (p, q) = (t11.rows(), t22.rows());
    if !t11.is_square()
        || !t22.is_square()
        || t12.shape() != (p, q)
        || t21.shape() != (q, p)
    {
        return Err(Error::dims(
            format!("blocks {p}x{p}, {p}x{q}, {q}x{p}, {q}x{q}"),
            format!(
                "{:?}, {:?}, {:?}, {:?}",
                t11.shape(),
                t12.shape(),
                t21.shape(),
                t22.shape()
            ),
        ));
    }
    let lu11 = Lu::factor(t11).map_err(|_| Error::SingularBlock("T11".into()))?;
    let a_inv_b = lu11.solve(t12);
    let c_a_inv = {
        // C A^{-1} = (A^{-*} C^*)^*
        let lu_adj = Lu::factor(&t11.adjoint()).map_err(|_| Error::SingularBlock("T11".into()))?;
        lu_adj.solve(&t21.adjoint()).adjoint()
    };
    let schur = t22 - &(t21 * &a_inv_b);
    let s_inv = Lu::factor(&schur)
        .map_err(|_| Error::SingularBlock("Schur complement".into()))?
        .inverse();
    let top_right = -&(&a_inv_b * &s_inv);
    let bottom_left = -&(&s_inv * &c_a_inv);
    let top_left = &lu11.inverse() + &(&(&a_inv_b * &s_inv) * &c_a_inv);
    Ok(Matrix::block2(&top_left, &top_right, &bottom_left, &s_inv))
}
