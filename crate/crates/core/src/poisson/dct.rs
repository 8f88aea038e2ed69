//! Separable 2-D cosine transforms on row-major buffers.
//!
//! `forward` is the unnormalized DCT-II along both axes,
//! `X(k,l) = Σ x(i,j) cos(πk(2i+1)/2H) cos(πl(2j+1)/2W)`, and `inverse`
//! undoes it exactly (DCT-III scaled by `4/(HW)`).

use std::sync::Arc;

use rustdct::{DctPlanner, TransformType2And3};

pub struct CosineTransform2d {
    height: usize,
    width: usize,
    along_rows: Arc<dyn TransformType2And3<f64>>,
    along_cols: Arc<dyn TransformType2And3<f64>>,
}

impl CosineTransform2d {
    pub fn new(height: usize, width: usize) -> Self {
        let mut planner = DctPlanner::new();
        CosineTransform2d {
            height,
            width,
            along_rows: planner.plan_dct2(width),
            along_cols: planner.plan_dct2(height),
        }
    }

    pub fn forward(&self, data: &mut [f64]) {
        self.apply(data, |plan, lane, scratch| {
            plan.process_dct2_with_scratch(lane, scratch)
        });
    }

    pub fn inverse(&self, data: &mut [f64]) {
        self.apply(data, |plan, lane, scratch| {
            plan.process_dct3_with_scratch(lane, scratch)
        });
        let scale = 4.0 / (self.height * self.width) as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    fn apply(
        &self,
        data: &mut [f64],
        op: impl Fn(&dyn TransformType2And3<f64>, &mut [f64], &mut [f64]),
    ) {
        let (h, w) = (self.height, self.width);
        assert_eq!(data.len(), h * w, "buffer does not match transform size");
        let scratch_len = self
            .along_rows
            .get_scratch_len()
            .max(self.along_cols.get_scratch_len());
        let mut scratch = vec![0.0; scratch_len];

        for row in data.chunks_exact_mut(w) {
            op(
                self.along_rows.as_ref(),
                row,
                &mut scratch[..self.along_rows.get_scratch_len()],
            );
        }

        let mut column = vec![0.0; h];
        for j in 0..w {
            for i in 0..h {
                column[i] = data[i * w + j];
            }
            op(
                self.along_cols.as_ref(),
                &mut column,
                &mut scratch[..self.along_cols.get_scratch_len()],
            );
            for i in 0..h {
                data[i * w + j] = column[i];
            }
        }
    }
}
