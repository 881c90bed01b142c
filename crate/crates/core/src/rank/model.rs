//! Sums of coherent points as a differentiable model.
//!
//! A term is `coherent(factors) / t` with unit factors (orthonormal frames for
//! fermions), so its norm is `unit_norm / |t|` and a bound on term norms
//! becomes the box `|t| >= unit_norm / B`. Everything is expressed in weighted
//! packed coordinates, where the Euclidean inner product is the one of the full
//! expansion.

use rand::Rng;
use serde::Serialize;

use crate::linalg::{self, gram_schmidt, random_vector, CMatrix, C64, ONE, ZERO};
use crate::tensor::{Kind, SystemSpec, Tensor};
use crate::varieties::{coherent_entries, factor_count, factor_dim, tangent_entries};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Term {
    pub t: C64,
    pub factors: Vec<Vec<C64>>,
}

pub(crate) struct Model {
    pub spec: SystemSpec,
    pub basis: Vec<Vec<usize>>,
    pub sw: Vec<f64>,
    pub slot_dims: Vec<usize>,
    pub unit_norm: f64,
}

impl Model {
    pub fn new(spec: &SystemSpec) -> Model {
        let slots = factor_count(spec);
        let unit_norm = match spec.kind() {
            Kind::Fermionic => (1..=spec.particles()).map(|k| k as f64).product::<f64>().sqrt(),
            _ => 1.0,
        };
        Model {
            spec: spec.clone(),
            basis: spec.basis(),
            sw: spec.multiplicities().iter().map(|w| w.sqrt()).collect(),
            slot_dims: (0..slots).map(|j| factor_dim(spec, j)).collect(),
            unit_norm,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn params_per_term(&self) -> usize {
        1 + self.slot_dims.iter().sum::<usize>()
    }

    /// Weighted coordinates of the coherent point of `factors`.
    pub fn coherent(&self, factors: &[Vec<C64>]) -> Vec<C64> {
        let mut v = coherent_entries(&self.spec, &self.basis, factors);
        v.iter_mut().zip(&self.sw).for_each(|(x, w)| *x *= *w);
        v
    }

    pub fn tangent(&self, factors: &[Vec<C64>], slot: usize, w: &[C64]) -> Vec<C64> {
        let mut v = tangent_entries(&self.spec, &self.basis, factors, slot, w);
        v.iter_mut().zip(&self.sw).for_each(|(x, s)| *x *= *s);
        v
    }

    pub fn value(&self, terms: &[Term]) -> Vec<C64> {
        let mut acc = vec![ZERO; self.dim()];
        for term in terms {
            let inv = ONE / term.t;
            for (a, c) in acc.iter_mut().zip(self.coherent(&term.factors)) {
                *a += c * inv;
            }
        }
        acc
    }

    pub fn residual_vec(&self, psi: &[C64], terms: &[Term]) -> Vec<C64> {
        let v = self.value(terms);
        psi.iter().zip(v).map(|(p, m)| p - m).collect()
    }

    pub fn term_norm(&self, term: &Term) -> f64 {
        self.unit_norm / term.t.norm()
    }

    pub fn max_norm(&self, terms: &[Term]) -> f64 {
        terms.iter().map(|t| self.term_norm(t)).fold(0.0, f64::max)
    }

    /// Jacobian of the model with respect to the packed parameter vector.
    pub fn jacobian(&self, terms: &[Term]) -> CMatrix {
        let p = self.params_per_term();
        let n = self.dim();
        let mut j = CMatrix::zeros(n, p * terms.len());
        for (k, term) in terms.iter().enumerate() {
            let inv = ONE / term.t;
            let base = k * p;
            let c = self.coherent(&term.factors);
            for i in 0..n {
                j[(i, base)] = -c[i] * inv * inv;
            }
            let mut col = base + 1;
            for (slot, &d) in self.slot_dims.iter().enumerate() {
                for comp in 0..d {
                    let mut e = vec![ZERO; d];
                    e[comp] = ONE;
                    let tv = self.tangent(&term.factors, slot, &e);
                    for i in 0..n {
                        j[(i, col)] = tv[i] * inv;
                    }
                    col += 1;
                }
            }
        }
        j
    }

    pub fn pack(&self, terms: &[Term]) -> Vec<C64> {
        let mut x = Vec::with_capacity(terms.len() * self.params_per_term());
        for term in terms {
            x.push(term.t);
            for f in &term.factors {
                x.extend_from_slice(f);
            }
        }
        x
    }

    pub fn unpack(&self, x: &[C64]) -> Vec<Term> {
        x.chunks(self.params_per_term())
            .map(|chunk| {
                let mut factors = Vec::with_capacity(self.slot_dims.len());
                let mut pos = 1;
                for &d in &self.slot_dims {
                    factors.push(chunk[pos..pos + d].to_vec());
                    pos += d;
                }
                Term { t: chunk[0], factors }
            })
            .collect()
    }

    /// Re-gauge a term to unit factors and enforce `|term| <= bound`.
    /// Returns false when the factors have collapsed.
    pub fn normalize(&self, term: &mut Term, bound: f64) -> bool {
        match self.spec.kind() {
            Kind::Distinguishable => {
                for f in &mut term.factors {
                    let n = linalg::norm(f);
                    if !(n.is_finite() && n > 0.0) {
                        return false;
                    }
                    f.iter_mut().for_each(|x| *x /= n);
                    term.t /= n;
                }
            }
            Kind::Bosonic => {
                let n = linalg::norm(&term.factors[0]);
                if !(n.is_finite() && n > 0.0) {
                    return false;
                }
                term.factors[0].iter_mut().for_each(|x| *x /= n);
                term.t /= n.powi(self.spec.particles() as i32);
            }
            Kind::Fermionic => match gram_schmidt(&term.factors) {
                Some((q, d)) => {
                    term.factors = q;
                    term.t /= d;
                }
                None => return false,
            },
        }
        if !term.t.is_finite() || term.t == ZERO {
            return false;
        }
        let floor = self.unit_norm / bound;
        if term.t.norm() < floor {
            term.t = term.t / term.t.norm() * floor;
        }
        true
    }

    /// Normalize all terms; collapsed ones are replaced by a random negligible term.
    pub fn normalize_all<R: Rng>(&self, terms: &mut [Term], bound: f64, rng: &mut R) {
        for term in terms.iter_mut() {
            if !self.normalize(term, bound) {
                *term = self.random_term(rng, C64::new(1e12, 0.0));
                self.normalize(term, bound);
            }
        }
    }

    pub fn random_term<R: Rng>(&self, rng: &mut R, t: C64) -> Term {
        let factors = self.slot_dims.iter().map(|&d| random_vector(rng, d)).collect();
        Term { t, factors }
    }

    /// Random unit factors with least-squares optimal coefficients.
    pub fn random_start<R: Rng>(&self, rng: &mut R, psi: &[C64], r: usize, bound: f64) -> Vec<Term> {
        let mut terms: Vec<Term> = (0..r).map(|_| self.random_term(rng, ONE)).collect();
        self.normalize_all(&mut terms, f64::INFINITY, rng);
        // Fit coefficients c_k for points coherent(f_k) / t_k, then absorb them.
        let cols: Vec<Vec<C64>> = terms
            .iter()
            .map(|t| self.coherent(&t.factors).into_iter().map(|x| x / t.t).collect())
            .collect();
        let g = CMatrix::from_fn(self.dim(), r, |i, k| cols[k][i]);
        let rhs = linalg::CVector::from_column_slice(psi);
        let mut a = g.adjoint() * &g;
        let ridge = 1e-10 * (0..r).map(|k| a[(k, k)].re).fold(0.0, f64::max).max(1e-300);
        for k in 0..r {
            a[(k, k)] += ridge;
        }
        let coeffs = linalg::solve_hpd(a, &(g.adjoint() * rhs));
        for (k, term) in terms.iter_mut().enumerate() {
            let c = coeffs.as_ref().map(|c| c[k]).unwrap_or(ONE);
            term.t = if c.norm() > 1e-12 { term.t / c } else { term.t * 1e12 };
        }
        self.normalize_all(&mut terms, bound, rng);
        terms
    }

    /// Witness in user-facing form, scaled back by the norm of the input.
    pub fn decomposition(&self, terms: &[Term], scale: f64, residual: f64) -> Decomposition {
        Decomposition {
            terms: terms
                .iter()
                .map(|t| WitnessTerm {
                    coefficient: pair(C64::new(scale, 0.0) / t.t),
                    factors: t.factors.iter().map(|f| f.iter().map(|x| pair(*x)).collect()).collect(),
                })
                .collect(),
            relative_residual: residual,
        }
    }
}

fn pair(c: C64) -> [f64; 2] {
    [c.re, c.im]
}

/// A sum of coherent points `Σ coefficient_k · coherent(factors_k)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub terms: Vec<WitnessTerm>,
    pub relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessTerm {
    /// `[re, im]`.
    pub coefficient: [f64; 2],
    /// Local vectors as lists of `[re, im]`.
    pub factors: Vec<Vec<[f64; 2]>>,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Rebuild the tensor the witness describes.
    pub fn to_tensor(&self, spec: &SystemSpec) -> crate::Result<Tensor> {
        let mut acc = Tensor::zeros(spec);
        for term in &self.terms {
            let factors: Vec<Vec<C64>> =
                term.factors.iter().map(|f| f.iter().map(|p| C64::new(p[0], p[1])).collect()).collect();
            let point = Tensor::from_entries(spec, coherent_entries(spec, &spec.basis(), &factors))?;
            acc = acc.add(&point.scaled(C64::new(term.coefficient[0], term.coefficient[1])))?;
        }
        Ok(acc)
    }

    /// Largest term norm.
    pub fn max_term_norm(&self, spec: &SystemSpec) -> f64 {
        self.terms
            .iter()
            .map(|term| {
                let factors: Vec<Vec<C64>> =
                    term.factors.iter().map(|f| f.iter().map(|p| C64::new(p[0], p[1])).collect()).collect();
                let point = Tensor::from_entries(spec, coherent_entries(spec, &spec.basis(), &factors))
                    .expect("consistent witness");
                point.norm() * C64::new(term.coefficient[0], term.coefficient[1]).norm()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Central differences of the model value against the analytic Jacobian.
    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for spec in [
            SystemSpec::distinguishable(&[2, 3, 2]).unwrap(),
            SystemSpec::bosonic(3, 3).unwrap(),
            SystemSpec::fermionic(5, 2).unwrap(),
        ] {
            let m = Model::new(&spec);
            let terms: Vec<Term> = (0..2).map(|_| m.random_term(&mut rng, C64::new(0.7, 0.2))).collect();
            let x = m.pack(&terms);
            let j = m.jacobian(&terms);
            let h = 1e-6;
            for p in 0..x.len() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[p] += h;
                xm[p] -= h;
                let (vp, vm) = (m.value(&m.unpack(&xp)), m.value(&m.unpack(&xm)));
                for i in 0..m.dim() {
                    let fd = (vp[i] - vm[i]) / (2.0 * h);
                    assert!((fd - j[(i, p)]).norm() < 1e-6 * (1.0 + fd.norm()), "{spec:?} param {p}");
                }
            }
        }
    }

    #[test]
    fn normalization_keeps_value_and_enforces_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for spec in [
            SystemSpec::qubits(3),
            SystemSpec::bosonic(2, 4).unwrap(),
            SystemSpec::fermionic(6, 3).unwrap(),
        ] {
            let m = Model::new(&spec);
            let mut term = m.random_term(&mut rng, C64::new(0.3, -0.1));
            let before = m.value(std::slice::from_ref(&term));
            assert!(m.normalize(&mut term, f64::INFINITY));
            let after = m.value(std::slice::from_ref(&term));
            let diff: f64 = before.iter().zip(&after).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            assert!(diff < 1e-12 * linalg::norm(&before));
            assert!((linalg::norm(&after) - m.term_norm(&term)).abs() < 1e-12 * linalg::norm(&after));
            m.normalize(&mut term, 0.5);
            assert!(m.term_norm(&term) <= 0.5 + 1e-12);
        }
    }
}
