//! Offset reconstruction from an estimated gradient field.
//!
//! The estimated field is generally not integrable, so the reconstruction is
//! the least-squares surface: the solution of `Lu = div g` with `L` the 5-point
//! Laplacian under Neumann boundary conditions. With the divergence defined as
//! the exact negative adjoint of the forward differences, `L` is diagonalized
//! by the DCT-II basis and the solve is a pointwise spectral division.

mod dct;
mod oracle;

use std::f64::consts::PI;

pub use dct::CosineTransform2d;
pub use oracle::{dense_lsq_oracle, DENSE_LIMIT};

use crate::dither::GradientField;
use crate::error::Result;
use crate::grid::{forward_diff_x, forward_diff_y, Frame, Grid};
use crate::sensor::OffsetMap;

pub const DC_CONVENTION: &str = "zero-mean";

/// Right-hand side of the Poisson equation, same H×W as the offset map.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceMap(Frame);

impl DivergenceMap {
    pub fn new(frame: Frame) -> Self {
        DivergenceMap(frame)
    }

    pub fn frame(&self) -> &Frame {
        &self.0
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionReport {
    pub offset: OffsetMap,
    /// RMS over every gradient cell of `∇offset − g`.
    pub residual_norm: f64,
    pub dc_convention: &'static str,
}

/// Backward-difference divergence with one-sided boundary terms (`−Dᵀ g`).
pub fn divergence(g: &GradientField) -> DivergenceMap {
    let (h, w) = g.frame_dims();
    let dx = g.dx();
    let dy = g.dy();
    let mut out = vec![0.0; h * w];
    for i in 0..h {
        for j in 0..w {
            let mut v = 0.0;
            if j + 1 < w {
                v += dx.get(i, j);
            }
            if j > 0 {
                v -= dx.get(i, j - 1);
            }
            if i + 1 < h {
                v += dy.get(i, j);
            }
            if i > 0 {
                v -= dy.get(i - 1, j);
            }
            out[i * w + j] = v;
        }
    }
    DivergenceMap(Frame::new(h, w, out).expect("divergence of a finite field is finite"))
}

/// Eigenvalue of the Neumann Laplacian for cosine mode `(k, l)`.
#[inline]
pub fn neumann_eigenvalue(k: usize, l: usize, height: usize, width: usize) -> f64 {
    2.0 * (PI * k as f64 / height as f64).cos() + 2.0 * (PI * l as f64 / width as f64).cos() - 4.0
}

/// Zero-mean solution of `Lu = d − mean(d)`.
pub fn solve_poisson_dct(d: &DivergenceMap) -> OffsetMap {
    let (h, w) = d.dims();
    let transform = CosineTransform2d::new(h, w);
    let mut spectrum = d.frame().as_slice().to_vec();
    transform.forward(&mut spectrum);

    let col_terms: Vec<f64> = (0..w)
        .map(|l| 2.0 * (PI * l as f64 / w as f64).cos())
        .collect();
    for k in 0..h {
        let row_term = 2.0 * (PI * k as f64 / h as f64).cos() - 4.0;
        let row = &mut spectrum[k * w..(k + 1) * w];
        for (l, (v, col)) in row.iter_mut().zip(&col_terms).enumerate() {
            *v = if k == 0 && l == 0 {
                0.0
            } else {
                *v / (row_term + col)
            };
        }
    }
    transform.inverse(&mut spectrum);

    let mean = spectrum.iter().sum::<f64>() / spectrum.len() as f64;
    spectrum.iter_mut().for_each(|v| *v -= mean);
    OffsetMap::compensated(Frame::new(h, w, spectrum).expect("spectral solve stays finite"))
}

/// RMS of `∇u − g` over all `H(W−1) + (H−1)W` gradient cells.
pub fn gradient_residual_rms(u: &Frame, g: &GradientField) -> Result<f64> {
    let rx = forward_diff_x(u);
    let ry = forward_diff_y(u);
    let ss = |a: &Grid, b: &Grid| -> Result<f64> {
        a.ensure_same_dims(b)?;
        Ok(a.as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| (x - y) * (x - y))
            .sum())
    };
    let total = ss(&rx, g.dx())? + ss(&ry, g.dy())?;
    Ok((total / (rx.len() + ry.len()) as f64).sqrt())
}

/// Least-squares offset surface for `g`, pinned to zero mean.
pub fn reconstruct_offset(g: &GradientField) -> Result<ReconstructionReport> {
    let offset = solve_poisson_dct(&divergence(g));
    let residual_norm = gradient_residual_rms(offset.frame(), g)?;
    Ok(ReconstructionReport {
        offset,
        residual_norm,
        dc_convention: DC_CONVENTION,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DxMap, DyMap};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn seeded(h: usize, w: usize, seed: u64) -> Frame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Frame::from_fn(h, w, |_, _| rng.random_range(-1.0..1.0)).unwrap()
    }

    fn field(dx: Grid, dy: Grid) -> GradientField {
        let w = dx.width() + 1;
        let h = dy.height() + 1;
        GradientField::new(DxMap::new(dx, w).unwrap(), DyMap::new(dy, h).unwrap(), 1, 1).unwrap()
    }

    #[test]
    fn divergence_of_zero_field() {
        let g = field(
            Grid::filled(4, 3, 0.0).unwrap(),
            Grid::filled(3, 4, 0.0).unwrap(),
        );
        assert!(divergence(&g).frame().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn divergence_boundary_convention() {
        let g = field(
            Grid::filled(4, 3, 1.0).unwrap(),
            Grid::filled(3, 4, 0.0).unwrap(),
        );
        let d = divergence(&g);
        for i in 0..4 {
            assert_eq!(d.frame().row(i), &[1.0, 0.0, 0.0, -1.0]);
        }
    }

    #[test]
    fn divergence_of_gradient_is_neumann_laplacian() {
        let (h, w) = (6, 7);
        let f = seeded(h, w, 3);
        let d = divergence(&GradientField::of_frame(&f));
        for i in 0..h {
            for j in 0..w {
                // 5-point stencil with mirrored ghost cells
                let c = f.get(i, j);
                let left = if j > 0 { f.get(i, j - 1) } else { c };
                let right = if j + 1 < w { f.get(i, j + 1) } else { c };
                let up = if i > 0 { f.get(i - 1, j) } else { c };
                let down = if i + 1 < h { f.get(i + 1, j) } else { c };
                let lap = left + right + up + down - 4.0 * c;
                assert!((d.frame().get(i, j) - lap).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn null_source_gives_zero() {
        let d = DivergenceMap::new(Frame::zeros(5, 6).unwrap());
        assert!(solve_poisson_dct(&d)
            .grid()
            .as_slice()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn cosine_mode_is_an_eigenfunction() {
        for &(h, w, k, l) in &[(8, 8, 1, 0), (9, 6, 0, 2), (7, 10, 3, 4)] {
            let mode = Frame::from_fn(h, w, |i, j| {
                (PI * k as f64 * (2 * i + 1) as f64 / (2 * h) as f64).cos()
                    * (PI * l as f64 * (2 * j + 1) as f64 / (2 * w) as f64).cos()
            })
            .unwrap();
            let lambda = neumann_eigenvalue(k, l, h, w);
            let d = DivergenceMap::new(mode.map(|v| lambda * v).unwrap());
            let u = solve_poisson_dct(&d);
            assert!(u.grid().rms_diff(&mode).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn source_mean_is_ignored() {
        let d = seeded(6, 5, 4);
        let shifted = DivergenceMap::new(d.map(|v| v + 3.0).unwrap());
        let a = solve_poisson_dct(&DivergenceMap::new(d));
        let b = solve_poisson_dct(&shifted);
        assert!(a.grid().max_abs_diff(b.grid()).unwrap() < 1e-12);
        assert!(a.grid().mean().abs() < 1e-15);
    }

    #[test]
    fn ramp_round_trip() {
        let ramp = Frame::from_fn(12, 9, |_, j| j as f64).unwrap();
        let r = reconstruct_offset(&GradientField::of_frame(&ramp)).unwrap();
        let expected = ramp.map(|v| v - 4.0).unwrap();
        assert!(r.offset.grid().rms_diff(&expected).unwrap() <= 1e-9);
        assert!(r.residual_norm <= 1e-9);
        assert_eq!(r.dc_convention, "zero-mean");
    }

    #[test]
    fn seeded_round_trip() {
        let f = seeded(16, 11, 5);
        let r = reconstruct_offset(&GradientField::of_frame(&f)).unwrap();
        let mean = f.mean();
        let expected = f.map(|v| v - mean).unwrap();
        assert!(r.offset.grid().rms_diff(&expected).unwrap() <= 1e-9);
        assert!(r.residual_norm <= 1e-9);
        let (m, s) = r.offset.grid().stats();
        assert!(m.abs() <= 1e-9 * s + 1e-15);
    }
}
