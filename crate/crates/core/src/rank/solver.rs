//! Fitting sums of coherent points: alternating least-squares warm-up,
//! Levenberg–Marquardt refinement with a box on term norms, and
//! predictor–corrector continuation in the norm bound.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::model::{Model, Term};
use crate::linalg::{self, solve_hpd, CMatrix, CVector, C64, ONE, ZERO};
use crate::tensor::Kind;

/// Per-restart seed derived from the user seed and the restart index.
pub(crate) fn restart_seed(seed: u64, salt: u64, index: usize) -> u64 {
    let mut z = seed ^ salt.rotate_left(17) ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub(crate) struct Fit {
    pub terms: Vec<Term>,
    pub residual: f64,
    pub max_norm: f64,
    pub index: usize,
}

impl Fit {
    /// Lowest residual wins, then lowest max norm, then lowest index.
    pub fn better_than(&self, other: &Fit) -> bool {
        let scale = self.residual.max(other.residual);
        if (self.residual - other.residual).abs() > 1e-12 * scale + 1e-15 {
            return self.residual < other.residual;
        }
        if self.max_norm != other.max_norm {
            return self.max_norm < other.max_norm;
        }
        self.index < other.index
    }
}

pub(crate) fn pick_best(fits: Vec<Fit>) -> Option<Fit> {
    let mut best: Option<Fit> = None;
    for f in fits {
        best = match best {
            Some(b) if !f.better_than(&b) => Some(b),
            _ => Some(f),
        };
    }
    best
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LmSettings {
    pub max_iters: usize,
    /// Stop once the residual drops below this (exact-fit floor).
    pub stop_below: f64,
    /// Stop when ten accepted steps together improve the residual by less than this fraction.
    pub stall_rtol: f64,
}

/// Levenberg–Marquardt on the holomorphic parametrization with Marquardt
/// scaling. Terms are re-gauged after every accepted step.
pub(crate) fn levenberg_marquardt(
    model: &Model,
    psi: &[C64],
    mut terms: Vec<Term>,
    bound: f64,
    settings: LmSettings,
    rng: &mut ChaCha8Rng,
) -> (Vec<Term>, f64) {
    model.normalize_all(&mut terms, bound, rng);
    let mut res_vec = model.residual_vec(psi, &terms);
    let mut res = linalg::norm(&res_vec);
    let mut mu = 1e-3;
    let mut accepted: Vec<f64> = vec![res];
    for _ in 0..settings.max_iters {
        if res < settings.stop_below {
            break;
        }
        let j = model.jacobian(&terms);
        let x = model.pack(&terms);
        let jh = j.adjoint();
        let gram = &jh * &j;
        let rhs = &jh * CVector::from_column_slice(&res_vec);
        let mut improved = false;
        while mu < 1e12 {
            let Some(delta) = damped_step(&gram, &rhs, mu) else {
                mu *= 4.0;
                continue;
            };
            let xn: Vec<C64> = x.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            let mut cand = model.unpack(&xn);
            model.normalize_all(&mut cand, bound, rng);
            let cand_vec = model.residual_vec(psi, &cand);
            let cand_res = linalg::norm(&cand_vec);
            if cand_res.is_finite() && cand_res < res {
                terms = cand;
                res_vec = cand_vec;
                res = cand_res;
                mu = (mu / 3.0).max(1e-15);
                improved = true;
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            break;
        }
        accepted.push(res);
        let k = accepted.len();
        if k > 10 && accepted[k - 11] - res < settings.stall_rtol * accepted[k - 11] {
            break;
        }
    }
    (terms, res)
}

/// Minimizer of `‖Jδ − r‖² + μ Σ d_k |δ_k|²` with `d` the diagonal of `JᴴJ`.
pub(crate) fn damped_step(gram: &CMatrix, rhs: &CVector, mu: f64) -> Option<CVector> {
    let mut a = gram.clone();
    for k in 0..a.nrows() {
        let d = a[(k, k)].re;
        a[(k, k)] += C64::new(mu * (d + 1e-12), 0.0);
    }
    let delta = linalg::solve_hpd(a, rhs)?;
    delta.iter().all(|x| x.is_finite()).then_some(delta)
}

/// Alternating least squares over the slots of multilinear models
/// (distinguishable and fermionic). Each sweep solves for one slot of every
/// term at once; the result is re-gauged and projected to the bound.
pub(crate) fn als_sweeps(
    model: &Model,
    psi: &[C64],
    terms: Vec<Term>,
    sweeps: usize,
    bound: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Term> {
    if model.spec.kind() == Kind::Bosonic || sweeps == 0 {
        return terms;
    }
    // Factor form: absorb 1/t into the first local vector.
    let mut factors: Vec<Vec<Vec<C64>>> = terms
        .iter()
        .map(|t| {
            let mut f = t.factors.clone();
            f[0].iter_mut().for_each(|x| *x /= t.t);
            f
        })
        .collect();
    let r = factors.len();
    let rhs = CVector::from_column_slice(psi);
    for _ in 0..sweeps {
        for slot in 0..model.slot_dims.len() {
            let d = model.slot_dims[slot];
            let mut g = CMatrix::zeros(model.dim(), r * d);
            for (k, f) in factors.iter().enumerate() {
                for comp in 0..d {
                    let mut e = vec![ZERO; d];
                    e[comp] = ONE;
                    let mut replaced = f.clone();
                    replaced[slot] = e;
                    let col = model.coherent(&replaced);
                    for (i, v) in col.into_iter().enumerate() {
                        g[(i, k * d + comp)] = v;
                    }
                }
            }
            let mut a = g.adjoint() * &g;
            let ridge = 1e-10 * (0..r * d).map(|k| a[(k, k)].re).fold(0.0, f64::max).max(1e-300);
            for k in 0..r * d {
                a[(k, k)] += ridge;
            }
            if let Some(sol) = solve_hpd(a, &(g.adjoint() * &rhs)) {
                if sol.iter().all(|x| x.is_finite()) {
                    for (k, f) in factors.iter_mut().enumerate() {
                        f[slot] = sol.as_slice()[k * d..(k + 1) * d].to_vec();
                    }
                }
            }
        }
    }
    let mut out: Vec<Term> = factors.into_iter().map(|f| Term { t: ONE, factors: f }).collect();
    model.normalize_all(&mut out, bound, rng);
    out
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct RestartPlan {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub salt: u64,
    /// Restarts run in batches; the search ends after the first batch that reaches this residual.
    pub success_below: f64,
    pub stop_below: f64,
}

const BATCH: usize = 8;
const ALS_WARMUP: usize = 10;

pub(crate) fn one_restart(
    model: &Model,
    psi: &[C64],
    r: usize,
    bound: f64,
    plan: &RestartPlan,
    index: usize,
    warm: Option<&[Term]>,
) -> Fit {
    let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(plan.seed, plan.salt, index));
    let start = match warm {
        Some(w) if index == 0 => {
            let mut t = w.to_vec();
            while t.len() < r {
                t.push(model.random_term(&mut rng, C64::new(1e6, 0.0)));
            }
            t.truncate(r);
            t
        }
        _ => {
            let s = model.random_start(&mut rng, psi, r, bound);
            als_sweeps(model, psi, s, ALS_WARMUP, bound, &mut rng)
        }
    };
    let settings = LmSettings { max_iters: plan.max_iters, stop_below: plan.stop_below, stall_rtol: 1e-12 };
    let (terms, residual) = levenberg_marquardt(model, psi, start, bound, settings, &mut rng);
    let max_norm = model.max_norm(&terms);
    Fit { terms, residual, max_norm, index }
}

/// Best fit over restarts at a fixed bound on term norms.
pub(crate) fn fit_restarts(
    model: &Model,
    psi: &[C64],
    r: usize,
    bound: f64,
    plan: &RestartPlan,
    warm: Option<&[Term]>,
) -> Fit {
    let mut best: Option<Fit> = None;
    let total = plan.restarts.max(1);
    let mut start = 0;
    while start < total {
        let end = (start + BATCH).min(total);
        let fits: Vec<Fit> =
            (start..end).into_par_iter().map(|i| one_restart(model, psi, r, bound, plan, i, warm)).collect();
        let mut all = fits;
        if let Some(b) = best.take() {
            all.insert(0, b);
        }
        best = pick_best(all);
        if best.as_ref().is_some_and(|b| b.residual < plan.success_below) {
            break;
        }
        start = end;
    }
    best.expect("at least one restart")
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Rung {
    pub bound: f64,
    pub residual: f64,
    pub max_norm: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Chain {
    pub fit: Fit,
    pub rungs: Vec<Rung>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ContinuationPlan {
    pub start_bound: f64,
    pub max_bound: f64,
    pub factor: f64,
    pub corrector_iters: usize,
    /// Stall rule of each corrector run; a loose one moves on to the next rung
    /// as soon as the current one flattens out.
    pub stall_rtol: f64,
    /// A chain stops once its residual is below `target` and some term norm
    /// exceeds `min_norm`.
    pub target: f64,
    pub min_norm: f64,
}

/// Follow the bounded optimum as the bound grows geometrically. Each rung
/// predicts by linear extrapolation in 1/B and corrects with a short LM run;
/// when the corrected point is worse than the previous (still feasible)
/// solution, the corrector is rerun from that solution, so the residual never
/// increases along the chain.
pub(crate) fn continuation(model: &Model, psi: &[C64], start: Fit, plan: &ContinuationPlan, seed: u64) -> Chain {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let settings = LmSettings { max_iters: plan.corrector_iters, stop_below: plan.target * 1e-3, stall_rtol: plan.stall_rtol };
    let mut bound = plan.start_bound;
    let mut cur = start.terms.clone();
    let mut res = start.residual;
    let mut prev: Option<Vec<C64>> = None;
    let mut rungs = vec![Rung { bound, residual: res, max_norm: model.max_norm(&cur) }];
    while (res >= plan.target || model.max_norm(&cur) <= plan.min_norm) && bound < plan.max_bound {
        bound = (bound * plan.factor).min(plan.max_bound);
        let x = model.pack(&cur);
        let predicted = match &prev {
            Some(p) => {
                let step = 1.0 / plan.factor;
                x.iter().zip(p).map(|(a, b)| a + (a - b) * step).collect::<Vec<C64>>()
            }
            None => x.clone(),
        };
        let (t1, r1) = levenberg_marquardt(model, psi, model.unpack(&predicted), bound, settings, &mut rng);
        let (next, next_res) = if r1 <= res {
            (t1, r1)
        } else {
            let (t2, r2) = levenberg_marquardt(model, psi, cur.clone(), bound, settings, &mut rng);
            if r2 <= res {
                (t2, r2)
            } else {
                (cur.clone(), res)
            }
        };
        prev = Some(x);
        cur = next;
        res = next_res;
        rungs.push(Rung { bound, residual: res, max_norm: model.max_norm(&cur) });
    }
    let max_norm = model.max_norm(&cur);
    Chain { fit: Fit { terms: cur, residual: res, max_norm, index: start.index }, rungs }
}
