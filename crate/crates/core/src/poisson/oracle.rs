//! Dense least-squares reference solver, for test-sized grids only.

use nalgebra::{DMatrix, DVector};

use crate::dither::GradientField;
use crate::error::{NucError, Result};
use crate::grid::Frame;
use crate::sensor::OffsetMap;

pub const DENSE_LIMIT: usize = 4096;

/// Minimizes `‖Du − g‖²` over zero-mean `u` with an explicit dense factorization.
///
/// The normal matrix `DᵀD` is assembled edge by edge from the forward
/// difference stencil and regularized with `11ᵀ`, which is positive definite
/// on a connected grid and forces `Σu = 0` because `1ᵀDᵀg = 0`.
pub fn dense_lsq_oracle(g: &GradientField) -> Result<OffsetMap> {
    let (h, w) = g.frame_dims();
    let n = h * w;
    if n > DENSE_LIMIT {
        return Err(NucError::SizeExceeded {
            cells: n,
            limit: DENSE_LIMIT,
        });
    }

    let mut normal = DMatrix::<f64>::from_element(n, n, 1.0);
    let mut rhs = DVector::<f64>::zeros(n);
    let mut edge = |p: usize, q: usize, value: f64| {
        // one row of D: u[q] − u[p] ≈ value
        normal[(p, p)] += 1.0;
        normal[(q, q)] += 1.0;
        normal[(p, q)] -= 1.0;
        normal[(q, p)] -= 1.0;
        rhs[q] += value;
        rhs[p] -= value;
    };
    for i in 0..h {
        for j in 0..w - 1 {
            edge(i * w + j, i * w + j + 1, g.dx().get(i, j));
        }
    }
    for i in 0..h - 1 {
        for j in 0..w {
            edge(i * w + j, (i + 1) * w + j, g.dy().get(i, j));
        }
    }

    let chol = normal.cholesky().ok_or(NucError::Degenerate(
        "normal matrix is not positive definite",
    ))?;
    let u = chol.solve(&rhs);
    let mean = u.mean();
    let data: Vec<f64> = u.iter().map(|v| v - mean).collect();
    Ok(OffsetMap::compensated(Frame::new(h, w, data)?))
}
