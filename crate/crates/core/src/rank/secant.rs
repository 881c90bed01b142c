//! Secant dimensions by Terracini's lemma: the span of the affine tangent
//! spaces at `r` generic points of `X` has dimension `dim σ_r(X) + 1`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::{numerical_rank, CMatrix, RANK_TOL};
use crate::tensor::SystemSpec;
use crate::varieties::{expected_secant_dim, random_local_vectors, tangent_space};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecantReport {
    pub r: usize,
    pub measured: usize,
    pub expected: usize,
    pub defect: i64,
    pub per_seed: Vec<usize>,
    pub seeds: Vec<u64>,
}

pub fn secant_dim(spec: &SystemSpec, r: usize, seed: u64) -> SecantReport {
    secant_dim_tol(spec, r, seed, RANK_TOL)
}

pub fn secant_dim_tol(spec: &SystemSpec, r: usize, seed: u64, tol: f64) -> SecantReport {
    let r = r.max(1);
    let seeds: Vec<u64> = (0..3).map(|k| seed.wrapping_add(k)).collect();
    let per_seed: Vec<usize> = seeds.par_iter().map(|&s| measure_once(spec, r, s, tol)).collect();
    let measured = per_seed.iter().copied().max().unwrap_or(0);
    let expected = expected_secant_dim(spec, r).expected_dim;
    SecantReport { r, measured, expected, defect: expected as i64 - measured as i64, per_seed, seeds }
}

fn measure_once(spec: &SystemSpec, r: usize, seed: u64, tol: f64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<Vec<crate::linalg::C64>> = Vec::new();
    for _ in 0..r {
        let vecs = random_local_vectors(spec, &mut rng);
        let ts = tangent_space(spec, &vecs).expect("generic point");
        for t in ts {
            let n = t.norm();
            cols.push(t.weighted_coords().into_iter().map(|x| x / n).collect());
        }
    }
    let m = CMatrix::from_fn(spec.ambient_dim(), cols.len(), |i, j| cols[j][i]);
    numerical_rank(&m, tol).saturating_sub(1)
}
