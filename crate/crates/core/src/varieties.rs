//! Coherent points (Segre, Veronese and Plücker), their tangent spaces, and
//! the closed-form facts about secant varieties used as reference values.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, det_columns, gram_schmidt, orthogonal_complement, CMatrix, C64, ONE, ZERO};
use crate::tensor::{Kind, SystemSpec, Tensor};

/// Number of local vectors a coherent point of `spec` is built from.
pub fn factor_count(spec: &SystemSpec) -> usize {
    match spec.kind() {
        Kind::Bosonic => 1,
        _ => spec.particles(),
    }
}

/// Length of the `j`-th local vector.
pub fn factor_dim(spec: &SystemSpec, j: usize) -> usize {
    spec.local_dim(j)
}

fn check_vectors(spec: &SystemSpec, vecs: &[Vec<C64>]) -> Result<()> {
    if vecs.len() != factor_count(spec) {
        return Err(Error::DimensionMismatch(format!(
            "expected {} local vectors, got {}",
            factor_count(spec),
            vecs.len()
        )));
    }
    for (j, v) in vecs.iter().enumerate() {
        if v.len() != factor_dim(spec, j) {
            return Err(Error::DimensionMismatch(format!(
                "local vector {j} has length {}, expected {}",
                v.len(),
                factor_dim(spec, j)
            )));
        }
    }
    Ok(())
}

/// Packed entries of the coherent point built from `vecs` (no validation).
pub(crate) fn coherent_entries(spec: &SystemSpec, basis: &[Vec<usize>], vecs: &[Vec<C64>]) -> Vec<C64> {
    match spec.kind() {
        Kind::Distinguishable => {
            let mut acc = vec![ONE];
            for v in vecs {
                let mut next = Vec::with_capacity(acc.len() * v.len());
                for a in &acc {
                    for x in v {
                        next.push(a * x);
                    }
                }
                acc = next;
            }
            acc
        }
        Kind::Bosonic => {
            let v = &vecs[0];
            basis.iter().map(|m| m.iter().map(|&i| v[i]).product()).collect()
        }
        Kind::Fermionic => {
            let cols: Vec<&[C64]> = vecs.iter().map(|v| v.as_slice()).collect();
            basis.iter().map(|s| det_columns(&cols, s)).collect()
        }
    }
}

/// Packed derivative of the coherent map when slot `slot` moves in direction `w`.
/// For bosons the single slot is differentiated as a whole (all L copies).
pub(crate) fn tangent_entries(
    spec: &SystemSpec,
    basis: &[Vec<usize>],
    vecs: &[Vec<C64>],
    slot: usize,
    w: &[C64],
) -> Vec<C64> {
    match spec.kind() {
        Kind::Bosonic => {
            let v = &vecs[0];
            basis
                .iter()
                .map(|m| {
                    let mut s = ZERO;
                    for p in 0..m.len() {
                        if w[m[p]] == ZERO {
                            continue;
                        }
                        let mut prod = w[m[p]];
                        for (q, &i) in m.iter().enumerate() {
                            if q != p {
                                prod *= v[i];
                            }
                        }
                        s += prod;
                    }
                    s
                })
                .collect()
        }
        _ => {
            let mut replaced = vecs.to_vec();
            replaced[slot] = w.to_vec();
            coherent_entries(spec, basis, &replaced)
        }
    }
}

/// The coherent point `v1 ⊗ … ⊗ vL`, `v^L` or `u1 ∧ … ∧ uL`.
pub fn coherent_point(spec: &SystemSpec, vecs: &[Vec<C64>]) -> Result<Tensor> {
    check_vectors(spec, vecs)?;
    let entries = coherent_entries(spec, &spec.basis(), vecs);
    let t = Tensor::from_entries(spec, entries)?;
    if t.is_zero() {
        return Err(match spec.kind() {
            Kind::Fermionic => Error::DependentFermionVectors,
            _ => Error::AllZero,
        });
    }
    if spec.kind() == Kind::Fermionic {
        let scale: f64 = vecs.iter().map(|v| linalg::norm(v)).product();
        if t.norm() < 1e-12 * scale {
            return Err(Error::DependentFermionVectors);
        }
    }
    Ok(t)
}

/// Standard complex Gaussian local vectors for `spec`; fermionic frames are
/// redrawn until their condition number is below 1e6.
pub fn random_local_vectors<R: rand::Rng + ?Sized>(spec: &SystemSpec, rng: &mut R) -> Vec<Vec<C64>> {
    loop {
        let vecs: Vec<Vec<C64>> =
            (0..factor_count(spec)).map(|j| linalg::random_vector(rng, factor_dim(spec, j))).collect();
        if spec.kind() != Kind::Fermionic {
            return vecs;
        }
        let m = CMatrix::from_fn(spec.dims()[0], vecs.len(), |i, j| vecs[j][i]);
        let s = linalg::singular_values(&m);
        let cond = s.first().copied().unwrap_or(0.0) / s.last().copied().unwrap_or(0.0);
        if cond.is_finite() && cond < 1e6 {
            return vecs;
        }
    }
}

pub fn random_coherent(spec: &SystemSpec, seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vecs = random_local_vectors(spec, &mut rng);
    coherent_point(spec, &vecs).expect("well-conditioned random point")
}

/// Spanning set of the affine tangent space at a coherent point: the point
/// itself plus one derivative per direction in an orthonormal basis of the
/// complement of each moving subspace. This gives exactly `dim X + 1`
/// tensors, independent whenever the point is.
pub fn tangent_space(spec: &SystemSpec, vecs: &[Vec<C64>]) -> Result<Vec<Tensor>> {
    let point = coherent_point(spec, vecs)?;
    let basis = spec.basis();
    let mut out = vec![point];
    match spec.kind() {
        Kind::Distinguishable => {
            for (j, v) in vecs.iter().enumerate() {
                for w in orthogonal_complement(std::slice::from_ref(v), v.len()) {
                    out.push(Tensor::from_entries(spec, tangent_entries(spec, &basis, vecs, j, &w))?);
                }
            }
        }
        Kind::Bosonic => {
            let v = &vecs[0];
            for w in orthogonal_complement(std::slice::from_ref(v), v.len()) {
                out.push(Tensor::from_entries(spec, tangent_entries(spec, &basis, vecs, 0, &w))?);
            }
        }
        Kind::Fermionic => {
            let (q, _) = gram_schmidt(vecs).ok_or(Error::DependentFermionVectors)?;
            let comp = orthogonal_complement(&q, spec.dims()[0]);
            for j in 0..vecs.len() {
                for w in &comp {
                    out.push(Tensor::from_entries(spec, tangent_entries(spec, &basis, vecs, j, w))?);
                }
            }
        }
    }
    Ok(out)
}

/// Expected and (where a theorem gives it) actual dimension of `σ_r(X)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecantProfile {
    #[serde(skip)]
    pub spec: SystemSpec,
    pub r: usize,
    pub expected_dim: usize,
    pub ambient_dim_minus_1: usize,
    pub known_actual_dim: Option<usize>,
    pub defective: Option<bool>,
}

pub fn expected_dim(spec: &SystemSpec, r: usize) -> usize {
    let d = spec.coherent_dim();
    (r * d + r - 1).min(spec.ambient_dim() - 1)
}

pub fn expected_secant_dim(spec: &SystemSpec, r: usize) -> SecantProfile {
    let r = r.max(1);
    let expected = expected_dim(spec, r);
    let top = spec.ambient_dim() - 1;
    let l = spec.particles();
    let known: Option<usize> = if r == 1 {
        Some(spec.coherent_dim())
    } else {
        match spec.kind() {
            Kind::Distinguishable if spec.dims().iter().all(|&d| d == 2) => {
                Some(if (r, l) == (3, 4) { 13 } else { expected })
            }
            Kind::Distinguishable => None,
            Kind::Bosonic => Some(veronese_secant_dim(spec.dims()[0], l, r)),
            Kind::Fermionic => {
                let n = spec.dims()[0];
                let lp = l.min(n - l);
                if lp <= 1 || (lp >= 3 && lp * r <= n) {
                    Some(expected)
                } else {
                    None
                }
            }
        }
    };
    let defective = match known {
        Some(a) => Some(a < expected),
        None if spec.kind() == Kind::Fermionic => {
            let n = spec.dims()[0];
            if l.min(n - l) == 2 {
                Some(1 < r && r < n / 2)
            } else {
                None
            }
        }
        None => None,
    };
    SecantProfile {
        spec: spec.clone(),
        r,
        expected_dim: expected,
        ambient_dim_minus_1: top,
        known_actual_dim: known,
        defective,
    }
}

/// Projective dimension of `σ_r` of the degree-`l` Veronese of `P^{n-1}`
/// by the Alexander–Hirschowitz theorem.
fn veronese_secant_dim(n: usize, l: usize, r: usize) -> usize {
    let spec = SystemSpec::bosonic(n, l).expect("valid");
    let expected = expected_dim(&spec, r);
    if n <= 1 || l == 1 {
        return expected;
    }
    if l == 2 {
        // Symmetric n×n matrices of rank ≤ r.
        let rr = r.min(n);
        return rr * n - rr * (rr.saturating_sub(1)) / 2 - 1;
    }
    if matches!((n, l, r), (3, 4, 5) | (4, 4, 9) | (5, 4, 14) | (5, 3, 7)) {
        return expected - 1;
    }
    expected
}

/// ⌈N / (dim X + 1)⌉.
pub fn expected_generic_rank(spec: &SystemSpec) -> usize {
    spec.ambient_dim().div_ceil(spec.coherent_dim() + 1)
}

/// Whether `(n, L)` is on the Alexander–Hirschowitz exception list.
pub fn ah_exceptional(n: usize, l: usize) -> bool {
    l == 2 && n >= 2 || matches!((n, l), (3, 4) | (4, 4) | (5, 4) | (5, 3))
}

/// Whether the symmetry group acts spherically, which for these families is
/// equivalent to the absence of exceptional states. Distinguishable factors of
/// dimension one are inert and are not counted as particles.
pub fn is_spherical(spec: &SystemSpec) -> bool {
    let l = spec.particles();
    match spec.kind() {
        Kind::Distinguishable => spec.dims().iter().filter(|&&d| d >= 2).count() <= 2,
        Kind::Bosonic => l <= 2 || spec.dims()[0] == 1,
        Kind::Fermionic => {
            let n = spec.dims()[0];
            l.min(n - l) <= 2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::numerical_rank;

    fn e(n: usize, i: usize) -> Vec<C64> {
        let mut v = vec![ZERO; n];
        v[i] = ONE;
        v
    }

    fn span_rank(ts: &[Tensor]) -> usize {
        let m = CMatrix::from_fn(ts[0].entries().len(), ts.len(), |i, j| ts[j].entries()[i]);
        numerical_rank(&m, 1e-8)
    }

    #[test]
    fn coherent_examples() {
        let q = SystemSpec::qubits(3);
        let t = coherent_point(&q, &[e(2, 0), e(2, 0), e(2, 0)]).unwrap();
        assert_eq!(t.get(&[0, 0, 0]), ONE);

        let b = SystemSpec::bosonic(2, 3).unwrap();
        let t = coherent_point(&b, &[vec![ONE, ONE]]).unwrap();
        // Packed entries carry no binomial weights; the expansion does.
        assert!(t.entries().iter().all(|x| *x == ONE));
        assert!((t.norm() - 8f64.sqrt()).abs() < 1e-12);

        let f = SystemSpec::fermionic(6, 3).unwrap();
        let t = coherent_point(&f, &[e(6, 0), e(6, 1), e(6, 2)]).unwrap();
        assert_eq!(t.get(&[0, 1, 2]), ONE);
        assert_eq!(
            coherent_point(&f, &[e(6, 0), e(6, 1), e(6, 0)]),
            Err(Error::DependentFermionVectors)
        );
    }

    #[test]
    fn random_points_are_coherent() {
        let d = SystemSpec::distinguishable(&[2, 3, 2]).unwrap();
        let t = random_coherent(&d, 5);
        assert_eq!(t, random_coherent(&d, 5));
        for j in 0..3 {
            assert_eq!(t.flattening_rank(&[j], 1e-8).unwrap(), 1);
        }
        let f = SystemSpec::fermionic(6, 3).unwrap();
        let t = random_coherent(&f, 9);
        assert_eq!(t.flattening_rank(&[0], 1e-8).unwrap(), 3);
    }

    #[test]
    fn tangent_space_sizes() {
        let q = SystemSpec::qubits(3);
        let ts = tangent_space(&q, &[e(2, 0), e(2, 0), e(2, 0)]).unwrap();
        assert_eq!(ts.len(), 4);

        let b = SystemSpec::bosonic(2, 3).unwrap();
        let ts = tangent_space(&b, &[e(2, 0)]).unwrap();
        assert_eq!(ts.len(), 2);
        assert_eq!(ts[1].get(&[0, 0, 1]), ONE);

        let f = SystemSpec::fermionic(6, 3).unwrap();
        let ts = tangent_space(&f, &[e(6, 0), e(6, 1), e(6, 2)]).unwrap();
        assert_eq!(ts.len(), 10);
        assert_eq!(span_rank(&ts), 10);
    }

    #[test]
    fn tangent_space_is_independent_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for spec in [
            SystemSpec::distinguishable(&[2, 3, 4]).unwrap(),
            SystemSpec::bosonic(4, 3).unwrap(),
            SystemSpec::fermionic(7, 3).unwrap(),
        ] {
            let vecs = random_local_vectors(&spec, &mut rng);
            let ts = tangent_space(&spec, &vecs).unwrap();
            assert_eq!(ts.len(), spec.coherent_dim() + 1);
            assert_eq!(span_rank(&ts), spec.coherent_dim() + 1);
        }
    }

    #[test]
    fn expected_dimensions() {
        let p = expected_secant_dim(&SystemSpec::qubits(4), 3);
        assert_eq!((p.expected_dim, p.known_actual_dim, p.defective), (14, Some(13), Some(true)));
        let p = expected_secant_dim(&SystemSpec::qubits(3), 2);
        assert_eq!((p.expected_dim, p.known_actual_dim, p.defective), (7, Some(7), Some(false)));
        let p = expected_secant_dim(&SystemSpec::fermionic(6, 2).unwrap(), 2);
        assert_eq!((p.expected_dim, p.ambient_dim_minus_1, p.defective), (14, 14, Some(true)));
        let p = expected_secant_dim(&SystemSpec::bosonic(3, 4).unwrap(), 5);
        assert_eq!((p.expected_dim, p.known_actual_dim), (14, Some(13)));
    }

    #[test]
    fn generic_ranks() {
        assert_eq!(expected_generic_rank(&SystemSpec::qubits(4)), 4);
        assert_eq!(expected_generic_rank(&SystemSpec::qubits(3)), 2);
        assert_eq!(expected_generic_rank(&SystemSpec::bosonic(3, 4).unwrap()), 5);
    }

    #[test]
    fn exception_list() {
        assert!(ah_exceptional(3, 4));
        assert!(ah_exceptional(7, 2));
        assert!(!ah_exceptional(3, 3));
    }

    #[test]
    fn sphericity() {
        assert!(is_spherical(&SystemSpec::distinguishable(&[2, 2]).unwrap()));
        assert!(!is_spherical(&SystemSpec::qubits(3)));
        assert!(!is_spherical(&SystemSpec::fermionic(6, 3).unwrap()));
        assert!(is_spherical(&SystemSpec::fermionic(7, 5).unwrap()));
        assert!(is_spherical(&SystemSpec::bosonic(5, 1).unwrap()));
    }
}
