//! Random harmonic sampling on a patch and the streamed Gram matrix.

use crate::error::Result;
use crate::fem::{element_averages_many, squared_norms_many, LocalProblem};
use crate::field::SeedScheme;
use crate::grid::{NodeKind, Patch};
use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

/// `n x m` block of projected harmonic samples, stored column by column.
/// Coordinates are `sqrt|K|`-scaled element averages, so the Euclidean norm of
/// a column is the `L^2(D_T)` norm of the projected function.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedBlock {
    pub n: usize,
    pub m: usize,
    pub data: Vec<f64>,
}

impl ProjectedBlock {
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        ProjectedBlock {
            n,
            m,
            data: vec![0.0; n * m],
        }
    }
}

/// Draws `m` columns of i.i.d. standard normal data on the trace nodes
/// (zero on Γ), extends them harmonically, scales each extension to unit
/// discrete `H^1(D_T)` norm and projects onto the patch elements.
pub fn sample_projected_harmonics(
    patch: &Patch,
    problem: &LocalProblem,
    m: usize,
    seeds: &SeedScheme,
    sample_index: u64,
) -> Result<ProjectedBlock> {
    let region = problem.region();
    let trace: Vec<usize> = region
        .node_kinds()
        .iter()
        .enumerate()
        .filter(|(_, k)| **k == NodeKind::Trace)
        .map(|(i, _)| i)
        .collect();
    let nn = region.num_nodes();
    let mut boundary = vec![0.0; nn * m];
    let mut rng = seeds.rng(sample_index);
    for j in 0..m {
        loop {
            let mut any = false;
            for &t in &trace {
                let v: f64 = StandardNormal.sample(&mut rng);
                boundary[t * m + j] = v;
                any |= v != 0.0;
            }
            if any || trace.is_empty() {
                break;
            }
        }
    }
    let u = problem.extend_many(&boundary, m);
    let norms = squared_norms_many(region, &u, m);
    let avg = element_averages_many(region, &u, m, patch.log_coarse())?;
    let n = patch.len();
    let sqrt_k = (-((patch.log_coarse() as usize * patch.dim()) as f64) / 2.0).exp2();
    let mut block = ProjectedBlock::zeros(n, m);
    for (j, (l2, h1)) in norms.iter().enumerate() {
        let total = l2 + h1;
        let s = if total > 0.0 { sqrt_k / total.sqrt() } else { 0.0 };
        for k in 0..n {
            block.data[j * n + k] = avg[k * m + j] * s;
        }
    }
    Ok(block)
}

/// Streamed `X X^T` over blocks in the order they are added. Only the lower
/// triangle is accumulated; the result is mirrored, so it is exactly
/// symmetric.
#[derive(Clone, Debug)]
pub struct GramAccumulator {
    n: usize,
    lower: Vec<f64>,
    columns: usize,
}

impl GramAccumulator {
    pub fn new(n: usize) -> Self {
        GramAccumulator {
            n,
            lower: vec![0.0; n * (n + 1) / 2],
            columns: 0,
        }
    }

    pub fn add(&mut self, block: &ProjectedBlock) {
        assert_eq!(block.n, self.n, "block height");
        for j in 0..block.m {
            let c = block.column(j);
            let mut o = 0;
            for k in 0..self.n {
                let ck = c[k];
                for (l, v) in self.lower[o..o + k + 1].iter_mut().enumerate() {
                    *v += ck * c[l];
                }
                o += k + 1;
            }
        }
        self.columns += block.m;
    }

    /// Total number of columns accumulated.
    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn finish(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.n, self.n);
        let mut o = 0;
        for k in 0..self.n {
            for l in 0..=k {
                g[(k, l)] = self.lower[o + l];
                g[(l, k)] = self.lower[o + l];
            }
            o += k + 1;
        }
        g
    }
}

/// Gram matrix of the concatenated blocks, summed in block order.
pub fn accumulate_gram<'a>(n: usize, blocks: impl IntoIterator<Item = &'a ProjectedBlock>) -> DMatrix<f64> {
    let mut acc = GramAccumulator::new(n);
    for b in blocks {
        acc.add(b);
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_matches_dense_product() {
        let data: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin()).collect();
        let block = ProjectedBlock { n: 3, m: 4, data: data.clone() };
        let x = DMatrix::from_column_slice(3, 4, &data);
        let g = accumulate_gram(3, [&block]);
        let direct = &x * x.transpose();
        assert!((g.clone() - direct).amax() < 1e-15);
        assert_eq!(g, g.transpose());
    }

    #[test]
    fn zero_blocks_give_zero() {
        let b = ProjectedBlock::zeros(4, 3);
        assert_eq!(accumulate_gram(4, [&b, &b]), DMatrix::zeros(4, 4));
    }
}
