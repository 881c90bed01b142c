//! Rank and border-rank estimation.
//!
//! Upper bounds come from fits whose terms all have norm at most
//! `bound · ‖ψ‖`; border evidence comes from following the best fit while the
//! bound is loosened and watching the residual vanish as term norms blow up.
//! Lower bounds come from flattening ranks.

mod jet;
pub(crate) mod model;
pub mod secant;
pub(crate) mod solver;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, C64, RANK_TOL};
use crate::tensor::{binomial, Kind, Tensor};
use model::Model;
use solver::{continuation, fit_restarts, one_restart, ContinuationPlan, Fit, RestartPlan};

pub use model::{Decomposition, WitnessTerm};
pub use secant::{secant_dim, secant_dim_tol, SecantReport};
pub use solver::Rung;

/// Residual below which a bounded fit certifies an upper bound.
pub const UPPER_TOL: f64 = 1e-8;
/// Residual that border evidence must reach.
pub const BORDER_TOL: f64 = 1e-6;
/// Term norm that border evidence must exceed.
pub const BORDER_NORM: f64 = 1e2;
/// Bounds at which the border ladder is reported.
pub const LADDER: [f64; 4] = [1e1, 1e2, 1e3, 1e4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Bound on term norms relative to `‖ψ‖`; `None` lets norms grow without limit.
    pub coeff_bound: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { restarts: 32, max_iters: 500, seed: 0, coeff_bound: Some(10.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub r: usize,
    /// `‖ψ − Σ terms‖ / ‖ψ‖`.
    pub residual: f64,
    /// Largest term norm relative to `‖ψ‖`.
    pub max_term_norm: f64,
    pub witness: Decomposition,
    /// Residuals along the loosened bounds (unbounded fits only).
    pub ladder: Vec<Rung>,
}

/// Best approximation of `state` by a sum of `r` coherent points.
pub fn best_rank_r(state: &Tensor, r: usize, opts: &FitOptions) -> Result<FitReport> {
    if r == 0 {
        return Err(Error::BadParams("r must be at least 1".into()));
    }
    let (model, psi, scale) = prepare(state)?;
    let plan = restart_plan(opts.restarts, opts.max_iters, opts.seed, r as u64);
    match opts.coeff_bound {
        Some(b) => {
            if b.is_nan() || b <= 0.0 {
                return Err(Error::BadParams("coefficient bound must be positive".into()));
            }
            let fit = fit_restarts(&model, &psi, r, b, &plan, None);
            Ok(report(&model, r, &fit, scale, Vec::new()))
        }
        None => {
            let fit = fit_restarts(&model, &psi, r, 10.0, &plan, None);
            if fit.residual < UPPER_TOL {
                let ladder = vec![Rung { bound: 10.0, residual: fit.residual, max_norm: fit.max_norm }];
                return Ok(report(&model, r, &fit, scale, ladder));
            }
            let (chain, _) = border_chains(&model, &psi, r, &fit, &plan);
            Ok(report(&model, r, &chain.fit, scale, chain.rungs))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Certificate {
    Flattening,
    Catalog,
    Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBound {
    pub value: usize,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpperBound {
    pub value: usize,
    pub certified: bool,
    pub residual: f64,
    pub max_term_norm: f64,
    pub witness: Option<Decomposition>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BorderEstimate {
    pub value: usize,
    pub certified: bool,
    pub residual: f64,
    pub max_term_norm: f64,
    /// Best residual reached with term norms up to 10, 10², 10³, 10⁴.
    pub ladder: Vec<Rung>,
    pub witness: Option<Decomposition>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    pub lower_bound: LowerBound,
    pub upper_bound: UpperBound,
    pub border_estimate: BorderEstimate,
    pub exceptional: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Numerical rank tolerance for flattenings.
    pub tol: f64,
    /// Bound on term norms relative to `‖ψ‖` for certified upper bounds.
    pub bound: f64,
    /// Largest rank tried; `None` means the ambient dimension.
    pub max_rank: Option<usize>,
}

impl Default for RankOptions {
    fn default() -> Self {
        RankOptions { restarts: 32, max_iters: 500, seed: 0, tol: RANK_TOL, bound: 10.0, max_rank: None }
    }
}

/// Lower bound, certified upper bound and border-rank estimate.
pub fn estimate_rank(state: &Tensor, opts: &RankOptions) -> Result<RankReport> {
    let (model, psi, scale) = prepare(state)?;
    let spec = state.spec();
    let mut lower = LowerBound { value: flattening_lower_bound_tol(state, opts.tol)?, certificate: Certificate::Flattening };
    if let Some(b) = crate::catalog::catalog_border_rank(state) {
        if b > lower.value {
            lower = LowerBound { value: b, certificate: Certificate::Catalog };
        }
    }
    let cap = opts.max_rank.unwrap_or(spec.ambient_dim()).max(lower.value);

    // Upper bound: least r whose bounded fit reaches the tolerance.
    let mut fits: Vec<(usize, Fit)> = Vec::new();
    let mut warm: Option<Vec<model::Term>> = None;
    let mut upper: Option<UpperBound> = None;
    for r in lower.value..=cap {
        let plan = restart_plan(opts.restarts, opts.max_iters, opts.seed, r as u64);
        let fit = fit_restarts(&model, &psi, r, opts.bound, &plan, warm.as_deref());
        let ok = fit.residual < UPPER_TOL;
        if ok || r == cap {
            upper = Some(UpperBound {
                value: r,
                certified: ok,
                residual: fit.residual,
                max_term_norm: fit.max_norm,
                witness: Some(model.decomposition(&fit.terms, scale, fit.residual)),
            });
            if ok {
                break;
            }
        }
        warm = Some(fit.terms.clone());
        fits.push((r, fit));
    }
    let upper = upper.expect("loop runs at least once");

    // Border estimate: least r below the upper bound with continuation evidence.
    let mut border = BorderEstimate {
        value: upper.value,
        certified: upper.certified,
        residual: upper.residual,
        max_term_norm: upper.max_term_norm,
        ladder: Vec::new(),
        witness: upper.witness.clone(),
    };
    if upper.value > lower.value {
        for (r, fit) in &fits {
            let plan = restart_plan(opts.restarts, opts.max_iters, opts.seed, *r as u64);
            let (chain, ok) = match jet_evidence(&model, &psi, *r, &plan) {
                Some(chain) => (chain, true),
                None => border_chains(&model, &psi, *r, fit, &plan),
            };
            if ok {
                border = BorderEstimate {
                    value: *r,
                    certified: true,
                    residual: chain.fit.residual,
                    max_term_norm: chain.fit.max_norm,
                    ladder: ladder_checkpoints(&chain.rungs),
                    witness: Some(model.decomposition(&chain.fit.terms, scale, chain.fit.residual)),
                };
                break;
            }
        }
    }
    let exceptional = upper.certified && border.certified && upper.value > border.value;
    Ok(RankReport { lower_bound: lower, upper_bound: upper, border_estimate: border, exceptional })
}

/// Exact rank for two particles from the singular values of the coefficient
/// matrix; antisymmetric matrices have even rank, which is halved. Rank and
/// border rank coincide because matrices of bounded rank form a closed set.
pub fn matrix_rank_exact(state: &Tensor) -> Result<RankReport> {
    matrix_rank_exact_tol(state, RANK_TOL)
}

pub fn matrix_rank_exact_tol(state: &Tensor, tol: f64) -> Result<RankReport> {
    if state.spec().particles() != 2 {
        return Err(Error::SpecMismatch("exact matrix rank needs two particles".into()));
    }
    if state.is_zero() {
        return Err(Error::AllZero);
    }
    let m = state.flatten(&[0])?;
    let mut r = numerical_rank(&m, tol);
    if state.spec().kind() == Kind::Fermionic {
        r /= 2;
    }
    Ok(RankReport {
        lower_bound: LowerBound { value: r, certificate: Certificate::Matrix },
        upper_bound: UpperBound { value: r, certified: true, residual: 0.0, max_term_norm: 0.0, witness: None },
        border_estimate: BorderEstimate {
            value: r,
            certified: true,
            residual: 0.0,
            max_term_norm: 0.0,
            ladder: Vec::new(),
            witness: None,
        },
        exceptional: false,
    })
}

/// Largest flattening rank, turned into a bound on the border rank. A
/// coherent point has flattening rank 1 for distinguishable and bosonic
/// states and `C(L, k)` for a fermionic flattening with `k` row slots, so the
/// fermionic rank is divided by that constant and rounded up.
pub fn flattening_lower_bound(state: &Tensor) -> Result<usize> {
    flattening_lower_bound_tol(state, RANK_TOL)
}

pub fn flattening_lower_bound_tol(state: &Tensor, tol: f64) -> Result<usize> {
    if state.is_zero() {
        return Err(Error::AllZero);
    }
    let spec = state.spec();
    let l = spec.particles();
    if l == 1 {
        return Ok(1);
    }
    let mode_sets: Vec<Vec<usize>> = match spec.kind() {
        Kind::Distinguishable if l <= 6 => (1..(1usize << l))
            .map(|mask| (0..l).filter(|j| mask >> j & 1 == 1).collect::<Vec<_>>())
            .filter(|s| s.len() <= l / 2)
            .collect(),
        Kind::Distinguishable => (0..l).map(|j| vec![j]).collect(),
        _ => (1..=l / 2).map(|k| (0..k).collect()).collect(),
    };
    let mut best = 1;
    for modes in mode_sets {
        let rank = state.flattening_rank(&modes, tol)?;
        let bound = match spec.kind() {
            Kind::Fermionic => rank.div_ceil(binomial(l, modes.len())),
            _ => rank,
        };
        best = best.max(bound);
    }
    Ok(best)
}

fn prepare(state: &Tensor) -> Result<(Model, Vec<C64>, f64)> {
    if state.is_zero() {
        return Err(Error::AllZero);
    }
    let scale = state.norm();
    let psi: Vec<C64> = state.weighted_coords().into_iter().map(|x| x / scale).collect();
    Ok((Model::new(state.spec()), psi, scale))
}

fn restart_plan(restarts: usize, max_iters: usize, seed: u64, salt: u64) -> RestartPlan {
    RestartPlan { restarts, max_iters, seed, salt, success_below: UPPER_TOL * 1e-2, stop_below: 1e-13 }
}

fn report(model: &Model, r: usize, fit: &Fit, scale: f64, ladder: Vec<Rung>) -> FitReport {
    FitReport {
        r,
        residual: fit.residual,
        max_term_norm: fit.max_norm,
        witness: model.decomposition(&fit.terms, scale, fit.residual),
        ladder,
    }
}

const CHAINS: usize = 8;
const CHAIN_BATCH: usize = 4;

fn continuation_plan() -> ContinuationPlan {
    ContinuationPlan {
        start_bound: 10.0,
        max_bound: 1e8,
        factor: 1.5,
        corrector_iters: 300,
        stall_rtol: 1e-3,
        target: 1e-9,
        min_norm: BORDER_NORM,
    }
}

/// Exact jet fits with `r`-term approximants, checked like a continuation chain.
fn jet_evidence(model: &Model, psi: &[C64], r: usize, plan: &RestartPlan) -> Option<solver::Chain> {
    jet::JetShape::for_rank(r).find_map(|shape| {
        let salt = plan.salt ^ 0x1E7 ^ ((shape.jets as u64) << 32);
        let (x, res) = jet::fit_jets(model, psi, shape, plan.restarts.min(16), plan.max_iters, plan.seed, salt);
        if res >= UPPER_TOL {
            return None;
        }
        jet::jet_chain(model, psi, shape, &x, &LADDER).filter(has_border_evidence)
    })
}

/// Continuation chains from the best bounded fit and from fresh restarts; the
/// first chain (by index) that shows border evidence is returned, otherwise
/// the chain with the lowest final residual.
fn border_chains(model: &Model, psi: &[C64], r: usize, best: &Fit, plan: &RestartPlan) -> (solver::Chain, bool) {
    let cp = continuation_plan();
    let chain_plan = RestartPlan { salt: plan.salt ^ 0xB0_4DE5, ..*plan };
    let mut fallback: Option<solver::Chain> = None;
    let mut start = 0;
    while start < CHAINS {
        let end = (start + CHAIN_BATCH).min(CHAINS);
        let chains: Vec<solver::Chain> = (start..end)
            .into_par_iter()
            .map(|k| {
                let from = if k == 0 {
                    best.clone()
                } else {
                    one_restart(model, psi, r, cp.start_bound, &chain_plan, k, None)
                };
                continuation(model, psi, from, &cp, solver::restart_seed(plan.seed, chain_plan.salt, 1000 + k))
            })
            .collect();
        for chain in chains {
            if has_border_evidence(&chain) {
                return (chain, true);
            }
            let better = match &fallback {
                None => true,
                Some(f) => chain.fit.residual < f.fit.residual,
            };
            if better {
                fallback = Some(chain);
            }
        }
        start = end;
    }
    (fallback.expect("at least one chain"), false)
}

fn has_border_evidence(chain: &solver::Chain) -> bool {
    let ladder = ladder_checkpoints(&chain.rungs);
    chain.fit.residual < BORDER_TOL
        && chain.fit.max_norm > BORDER_NORM
        && ladder.windows(2).all(|w| w[1].residual <= w[0].residual)
        && ladder.last().map(|x| x.residual) < ladder.first().map(|x| x.residual)
}

/// The last rung at or below each reporting bound; chains that stop early
/// repeat their final rung.
fn ladder_checkpoints(rungs: &[Rung]) -> Vec<Rung> {
    LADDER
        .iter()
        .filter_map(|&b| rungs.iter().rev().find(|r| r.bound <= b * (1.0 + 1e-12)).or(rungs.last()).copied())
        .collect()
}
