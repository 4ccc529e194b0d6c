use super::C64;
use crate::error::{Error, Result};
use faer::Mat;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MatrixNorms {
    /// ‖O‖₁, sum of singular values
    pub trace_norm: f64,
    /// ‖O‖₂ = sqrt(tr O†O)
    pub frobenius: f64,
    /// ‖O‖∞, largest singular value
    pub operator_norm: f64,
}

pub fn matrix_norms(op: &Mat<C64>) -> Result<MatrixNorms> {
    if op.nrows() == 0 || op.ncols() == 0 {
        return Ok(MatrixNorms { trace_norm: 0.0, frobenius: 0.0, operator_norm: 0.0 });
    }
    let s = op.singular_values().map_err(|e| Error::Numerical(format!("svd: {e:?}")))?;
    Ok(MatrixNorms {
        trace_norm: s.iter().sum(),
        frobenius: op.norm_l2(),
        operator_norm: s.first().copied().unwrap_or(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::super::{haar_unitary_from_seed, Pauli};
    use super::*;

    fn approx(n: MatrixNorms, want: (f64, f64, f64)) {
        assert!((n.trace_norm - want.0).abs() < 1e-12);
        assert!((n.frobenius - want.1).abs() < 1e-12);
        assert!((n.operator_norm - want.2).abs() < 1e-12);
    }

    #[test]
    fn examples() {
        approx(matrix_norms(&Pauli::X.matrix()).unwrap(), (2.0, 2f64.sqrt(), 1.0));
        approx(matrix_norms(&Mat::zeros(3, 3)).unwrap(), (0.0, 0.0, 0.0));
        approx(matrix_norms(&Mat::identity(4, 4)).unwrap(), (4.0, 2.0, 1.0));
    }

    #[test]
    fn frobenius_bounded_by_operator_norm() {
        for seed in 0..20 {
            let u = haar_unitary_from_seed(6, seed);
            let a = Mat::from_fn(6, 6, |i, j| u[(i, j)] * (i + 1) as f64);
            let n = matrix_norms(&a).unwrap();
            assert!(n.frobenius.powi(2) / 6.0 <= n.operator_norm.powi(2) + 1e-9);
            assert!(n.operator_norm <= n.frobenius + 1e-12);
            assert!(n.frobenius <= n.trace_norm + 1e-12);
        }
    }
}
