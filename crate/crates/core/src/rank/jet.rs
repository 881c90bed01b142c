//! Border evidence from tangent jets.
//!
//! The jet `dP_x[w]` of the coherent map is the limit of
//! `(P(x + εw) − P(x − εw)) / 2ε`, so a sum of `s` jets and `r − 2s` coherent
//! points lies in the closure of the rank-`r` states. Fitting jets directly
//! avoids the diverging parameters of a rank-`r` fit; once a jet fit is exact,
//! central differences give explicit rank-`r` approximants whose residual
//! falls like `ε²` while their term norms grow like `1/ε`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{Model, Term};
use super::solver::{damped_step, restart_seed, Chain, Fit, Rung};
use crate::linalg::{self, random_vector, CMatrix, CVector, C64, ONE, ZERO};

type Factors = Vec<Vec<C64>>;

/// A sum of `jets` tangent jets and `points` coherent points.
#[derive(Debug, Clone, Copy)]
pub(crate) struct JetShape {
    pub jets: usize,
    pub points: usize,
}

impl JetShape {
    /// Shapes with at least one jet whose approximants have rank `r`.
    pub fn for_rank(r: usize) -> impl Iterator<Item = JetShape> {
        (1..=r / 2).map(move |s| JetShape { jets: s, points: r - 2 * s })
    }
}

struct JetParams {
    jets: Vec<(Factors, Factors)>,
    points: Vec<Factors>,
}

fn slot_len(model: &Model) -> usize {
    model.slot_dims.iter().sum()
}

fn split_factors(model: &Model, x: &[C64]) -> Factors {
    let mut out = Vec::with_capacity(model.slot_dims.len());
    let mut pos = 0;
    for &d in &model.slot_dims {
        out.push(x[pos..pos + d].to_vec());
        pos += d;
    }
    out
}

fn unpack(model: &Model, shape: JetShape, x: &[C64]) -> JetParams {
    let n = slot_len(model);
    let jets = (0..shape.jets)
        .map(|k| {
            let base = 2 * k * n;
            (split_factors(model, &x[base..base + n]), split_factors(model, &x[base + n..base + 2 * n]))
        })
        .collect();
    let offset = 2 * shape.jets * n;
    let points = (0..shape.points).map(|k| split_factors(model, &x[offset + k * n..offset + (k + 1) * n])).collect();
    JetParams { jets, points }
}

fn jet_value(model: &Model, x: &Factors, w: &Factors) -> Vec<C64> {
    let mut acc = vec![ZERO; model.dim()];
    for (slot, ws) in w.iter().enumerate() {
        for (a, t) in acc.iter_mut().zip(model.tangent(x, slot, ws)) {
            *a += t;
        }
    }
    acc
}

fn value(model: &Model, p: &JetParams) -> Vec<C64> {
    let mut acc = vec![ZERO; model.dim()];
    let parts = p.jets.iter().map(|(x, w)| jet_value(model, x, w)).chain(p.points.iter().map(|y| model.coherent(y)));
    for v in parts {
        acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
    }
    acc
}

fn residual_vec(model: &Model, psi: &[C64], shape: JetShape, x: &[C64]) -> Vec<C64> {
    let v = value(model, &unpack(model, shape, x));
    psi.iter().zip(v).map(|(a, b)| a - b).collect()
}

/// Jacobian of the model value. Derivatives along `w` and along the points
/// are tangent vectors; derivatives of a jet along its base point are taken
/// by central differences.
fn jacobian(model: &Model, shape: JetShape, x: &[C64]) -> CMatrix {
    let n = slot_len(model);
    let p = unpack(model, shape, x);
    let mut j = CMatrix::zeros(model.dim(), x.len());
    let unit_columns = |factors: &Factors, j: &mut CMatrix, mut col: usize| {
        for (slot, &d) in model.slot_dims.iter().enumerate() {
            for comp in 0..d {
                let mut e = vec![ZERO; d];
                e[comp] = ONE;
                for (i, t) in model.tangent(factors, slot, &e).into_iter().enumerate() {
                    j[(i, col)] = t;
                }
                col += 1;
            }
        }
    };
    for (k, (base, w)) in p.jets.iter().enumerate() {
        let mut col = 2 * k * n;
        for (slot, &d) in model.slot_dims.iter().enumerate() {
            for comp in 0..d {
                let h = 1e-6 * base[slot][comp].norm().max(1.0);
                let mut plus = base.clone();
                let mut minus = base.clone();
                plus[slot][comp] += h;
                minus[slot][comp] -= h;
                let (a, b) = (jet_value(model, &plus, w), jet_value(model, &minus, w));
                for i in 0..model.dim() {
                    j[(i, col)] = (a[i] - b[i]) / (2.0 * h);
                }
                col += 1;
            }
        }
        unit_columns(base, &mut j, 2 * k * n + n);
    }
    let offset = 2 * shape.jets * n;
    for (k, y) in p.points.iter().enumerate() {
        unit_columns(y, &mut j, offset + k * n);
    }
    j
}

fn levenberg_marquardt(model: &Model, psi: &[C64], shape: JetShape, mut x: Vec<C64>, max_iters: usize) -> (Vec<C64>, f64) {
    let mut r = residual_vec(model, psi, shape, &x);
    let mut res = linalg::norm(&r);
    let mut mu = 1e-3;
    let mut history = vec![res];
    for _ in 0..max_iters {
        if res < 1e-13 {
            break;
        }
        let j = jacobian(model, shape, &x);
        let jh = j.adjoint();
        let gram = &jh * &j;
        let rhs = &jh * CVector::from_column_slice(&r);
        let mut improved = false;
        while mu < 1e12 {
            if let Some(delta) = damped_step(&gram, &rhs, mu) {
                let cand: Vec<C64> = x.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
                let cand_r = residual_vec(model, psi, shape, &cand);
                let cand_res = linalg::norm(&cand_r);
                if cand_res.is_finite() && cand_res < res {
                    (x, r, res) = (cand, cand_r, cand_res);
                    mu = (mu / 3.0).max(1e-15);
                    improved = true;
                    break;
                }
            }
            mu *= 4.0;
        }
        if !improved {
            break;
        }
        history.push(res);
        let k = history.len();
        if k > 10 && history[k - 11] - res < 1e-12 * history[k - 11] {
            break;
        }
    }
    (x, res)
}

/// Random parameters scaled so that the model value best matches `psi`.
fn random_start(model: &Model, psi: &[C64], shape: JetShape, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let len = (2 * shape.jets + shape.points) * slot_len(model);
    let mut x = random_vector(rng, len);
    let v = value(model, &unpack(model, shape, &x));
    let vv: f64 = v.iter().map(|a| a.norm_sqr()).sum();
    if vv > 0.0 {
        let c: C64 = v.iter().zip(psi).map(|(a, b)| a.conj() * b).sum::<C64>() / vv;
        if c.norm() > 0.0 {
            // Every part of the value is homogeneous of degree L in the parameters.
            let s = c.powf(1.0 / model.spec.particles() as f64);
            x.iter_mut().for_each(|a| *a *= s);
        }
    }
    x
}

/// Best jet fit of the given shape over `restarts` random starts.
pub(crate) fn fit_jets(
    model: &Model,
    psi: &[C64],
    shape: JetShape,
    restarts: usize,
    max_iters: usize,
    seed: u64,
    salt: u64,
) -> (Vec<C64>, f64) {
    let mut best: Option<(Vec<C64>, f64)> = None;
    for k in 0..restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(seed, salt, k));
        let x0 = random_start(model, psi, shape, &mut rng);
        let (x, res) = levenberg_marquardt(model, psi, shape, x0, max_iters);
        if best.as_ref().is_none_or(|b| res < b.1) {
            best = Some((x, res));
        }
        if res < 1e-12 {
            break;
        }
    }
    best.expect("at least one restart")
}

/// Rank-`r` approximants of a jet fit with step `eps`.
fn approximants(model: &Model, shape: JetShape, x: &[C64], eps: f64) -> Option<Vec<Term>> {
    let p = unpack(model, shape, x);
    let shifted = |base: &Factors, w: &Factors, s: f64| -> Factors {
        base.iter().zip(w).map(|(b, d)| b.iter().zip(d).map(|(a, c)| a + c * s).collect()).collect()
    };
    let mut terms = Vec::with_capacity(2 * shape.jets + shape.points);
    for (base, w) in &p.jets {
        let t = C64::new(2.0 * eps, 0.0);
        terms.push(Term { t, factors: shifted(base, w, eps) });
        terms.push(Term { t: -t, factors: shifted(base, w, -eps) });
    }
    for y in &p.points {
        terms.push(Term { t: ONE, factors: y.clone() });
    }
    for term in &mut terms {
        if !model.normalize(term, f64::INFINITY) {
            return None;
        }
    }
    Some(terms)
}

/// Step whose approximants have largest term norm close to `target`.
fn step_for_norm(model: &Model, shape: JetShape, x: &[C64], target: f64) -> Option<f64> {
    let mut eps = 1.0;
    for _ in 0..8 {
        let norm = model.max_norm(&approximants(model, shape, x, eps)?);
        if (norm / target - 1.0).abs() < 1e-3 {
            break;
        }
        eps *= norm / target;
    }
    Some(eps)
}

/// Ladder of explicit approximants at the given norm bounds. The chain ends at
/// the last bound.
pub(crate) fn jet_chain(model: &Model, psi: &[C64], shape: JetShape, x: &[C64], bounds: &[f64]) -> Option<Chain> {
    let mut rungs = Vec::with_capacity(bounds.len());
    let mut last = None;
    for &b in bounds {
        let eps = step_for_norm(model, shape, x, b)?;
        let terms = approximants(model, shape, x, eps)?;
        let residual = linalg::norm(&model.residual_vec(psi, &terms));
        let max_norm = model.max_norm(&terms);
        rungs.push(Rung { bound: b, residual, max_norm });
        last = Some(Fit { terms, residual, max_norm, index: 0 });
    }
    Some(Chain { fit: last?, rungs })
}
