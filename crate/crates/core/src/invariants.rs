//! Local invariants: one-particle reduced density matrices, the momentum-map
//! norm, multilinear rank, and Cayley's hyperdeterminant.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, singular_values, CMatrix, C64, RANK_TOL, ZERO};
use crate::tensor::{Kind, ProjectiveState, SystemSpec, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RdmSet {
    #[serde(skip)]
    pub spec: SystemSpec,
    #[serde(skip)]
    pub rho: Vec<CMatrix>,
    /// Eigenvalues of each matrix, descending.
    pub spectra: Vec<Vec<f64>>,
}

/// Reduced density matrices of unit trace: one per factor for distinguishable
/// states, a single one for bosons and fermions.
pub fn rdm(state: &ProjectiveState) -> RdmSet {
    let t = state.rep();
    let spec = t.spec().clone();
    let full = t.expand_full();
    let norm_sq = full.norm().powi(2);
    let factors = if spec.kind() == Kind::Distinguishable { spec.particles() } else { 1 };
    let rho: Vec<CMatrix> = (0..factors)
        .map(|j| {
            if spec.particles() == 1 {
                let v = CMatrix::from_column_slice(full.entries().len(), 1, full.entries());
                return &v * v.adjoint() / C64::new(norm_sq, 0.0);
            }
            let m = full.flatten(&[j]).expect("single mode of L >= 2");
            &m * m.adjoint() / C64::new(norm_sq, 0.0)
        })
        .collect();
    let spectra = rho.iter().map(hermitian_eigenvalues).collect();
    RdmSet { spec, rho, spectra }
}

/// `(1/4) Σ tr(ρ̃ᵢ²)` with `ρ̃ᵢ = ρᵢ − I/nᵢ`.
pub fn mu_norm_sq(state: &ProjectiveState) -> f64 {
    let r = rdm(state);
    r.rho
        .iter()
        .map(|rho| {
            let n = rho.nrows();
            let shifted = rho - CMatrix::identity(n, n) * C64::new(1.0 / n as f64, 0.0);
            shifted.iter().map(|x| x.norm_sqr()).sum::<f64>()
        })
        .sum::<f64>()
        / 4.0
}

/// Ranks of the single-mode flattenings.
pub fn mlrank(t: &Tensor) -> Result<Vec<usize>> {
    mlrank_tol(t, RANK_TOL)
}

pub fn mlrank_tol(t: &Tensor, tol: f64) -> Result<Vec<usize>> {
    if t.spec().kind() != Kind::Distinguishable {
        return Err(Error::SpecMismatch("multilinear rank needs a distinguishable state".into()));
    }
    if t.spec().particles() == 1 {
        return Ok(vec![usize::from(!t.is_zero())]);
    }
    (0..t.spec().particles()).map(|j| t.flattening_rank(&[j], tol)).collect()
}

/// Cayley's degree-4 hyperdeterminant of a 2×2×2 array, evaluated on the
/// tensor as given (callers normalize when a scale-free comparison is needed).
pub fn hyperdet_222(t: &Tensor) -> Result<C64> {
    if *t.spec() != SystemSpec::qubits(3) {
        return Err(Error::SpecMismatch("hyperdeterminant needs three qubits".into()));
    }
    let a = |i: usize, j: usize, k: usize| t.get(&[i, j, k]);
    let (a000, a001, a010, a011) = (a(0, 0, 0), a(0, 0, 1), a(0, 1, 0), a(0, 1, 1));
    let (a100, a101, a110, a111) = (a(1, 0, 0), a(1, 0, 1), a(1, 1, 0), a(1, 1, 1));
    let two = C64::new(2.0, 0.0);
    let four = C64::new(4.0, 0.0);
    let p0 = a000 * a111;
    let p1 = a011 * a100;
    let p2 = a101 * a010;
    let p3 = a110 * a001;
    Ok(p0 * p0 + p3 * p3 + p2 * p2 + p1 * p1
        - two * p0 * (p1 + p2 + p3)
        - two * p1 * (p2 + p3)
        - two * p2 * p3
        + four * (a000 * a011 * a101 * a110 + a001 * a010 * a100 * a111))
}

/// Componentwise comparison of sorted spectra.
pub fn spectra_equal(a: &RdmSet, b: &RdmSet, tol: f64) -> Result<bool> {
    if a.spec != b.spec {
        return Err(Error::SpecMismatch("RDM sets come from different specs".into()));
    }
    Ok(a.spectra.iter().zip(&b.spectra).all(|(x, y)| x.iter().zip(y).all(|(u, v)| (u - v).abs() <= tol)))
}

/// For two bipartite distinguishable states with equal Schmidt coefficients,
/// local unitaries `(U1, U2)` with `(U1 ⊗ U2) a = b` up to phase; `None` if
/// the Schmidt coefficients differ by more than `tol`.
pub fn lu_witness_bipartite(a: &ProjectiveState, b: &ProjectiveState, tol: f64) -> Result<Option<(CMatrix, CMatrix)>> {
    let spec = a.spec();
    if spec != b.spec() || spec.kind() != Kind::Distinguishable || spec.particles() != 2 {
        return Err(Error::SpecMismatch("LU witness needs two bipartite distinguishable states".into()));
    }
    let ma = a.rep().flatten(&[0])?;
    let mb = b.rep().flatten(&[0])?;
    let (sa, sb) = (singular_values(&ma), singular_values(&mb));
    if sa.iter().zip(&sb).any(|(x, y)| (x - y).abs() > tol) {
        return Ok(None);
    }
    let (ua, va) = full_svd(&ma);
    let (ub, vb) = full_svd(&mb);
    // ma = ua Σ va^H and mb = ub Σ vb^H, so mb = (ub ua^H) ma (va vb^H);
    // the second factor acts on the column index as its transpose.
    let u1 = &ub * ua.adjoint();
    let u2 = (&va * vb.adjoint()).transpose();
    Ok(Some((u1, u2)))
}

/// Left and right singular vectors completed to full unitaries, ordered by
/// descending singular value.
fn full_svd(m: &CMatrix) -> (CMatrix, CMatrix) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let ucols: Vec<Vec<C64>> = order.iter().map(|&k| u.column(k).iter().copied().collect()).collect();
    let vcols: Vec<Vec<C64>> = order.iter().map(|&k| vt.row(k).iter().map(|x| x.conj()).collect()).collect();
    (complete(ucols, m.nrows()), complete(vcols, m.ncols()))
}

fn complete(mut cols: Vec<Vec<C64>>, n: usize) -> CMatrix {
    let extra = crate::linalg::orthogonal_complement(&cols, n);
    cols.extend(extra);
    let mut out = CMatrix::from_element(n, n, ZERO);
    for (j, c) in cols.iter().take(n).enumerate() {
        for i in 0..n {
            out[(i, j)] = c[i];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ket::parse_ket;
    use crate::linalg::{random_unitary, ONE};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ps(text: &str, spec: &SystemSpec) -> ProjectiveState {
        ProjectiveState::new(&parse_ket(text, spec).unwrap()).unwrap()
    }

    #[test]
    fn rdm_examples() {
        let q = SystemSpec::qubits(3);
        let ghz = rdm(&ps("|000>+|111>", &q));
        for s in &ghz.spectra {
            assert!((s[0] - 0.5).abs() < 1e-12 && (s[1] - 0.5).abs() < 1e-12);
        }
        let w = rdm(&ps("|001>+|010>+|100>", &q));
        for s in &w.spectra {
            assert!((s[0] - 2.0 / 3.0).abs() < 1e-12 && (s[1] - 1.0 / 3.0).abs() < 1e-12);
        }
        let p = rdm(&ps("|000>", &q));
        assert!((p.rho[0][(0, 0)] - ONE).norm() < 1e-15);
    }

    #[test]
    fn momentum_map_norms() {
        let q = SystemSpec::qubits(3);
        assert!(mu_norm_sq(&ps("|000>+|111>", &q)).abs() < 1e-15);
        assert!((mu_norm_sq(&ps("|000>", &q)) - 3.0 / 8.0).abs() < 1e-15);
        assert!((mu_norm_sq(&ps("|001>+|010>+|100>", &q)) - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn multilinear_ranks() {
        let q = SystemSpec::qubits(3);
        assert_eq!(mlrank(&parse_ket("|001>+|010>+|100>", &q).unwrap()).unwrap(), vec![2, 2, 2]);
        assert_eq!(mlrank(&parse_ket("|0>(|00>+|11>)", &q).unwrap()).unwrap(), vec![1, 2, 2]);
        assert_eq!(mlrank(&parse_ket("|000>", &q).unwrap()).unwrap(), vec![1, 1, 1]);
    }

    #[test]
    fn hyperdeterminant_examples() {
        let q = SystemSpec::qubits(3);
        assert_eq!(hyperdet_222(&parse_ket("|000>+|111>", &q).unwrap()).unwrap(), ONE);
        assert_eq!(hyperdet_222(&parse_ket("|001>+|010>+|100>", &q).unwrap()).unwrap(), ZERO);
        assert_eq!(hyperdet_222(&parse_ket("|000>", &q).unwrap()).unwrap(), ZERO);
        let two = SystemSpec::qubits(2);
        assert!(hyperdet_222(&parse_ket("|00>", &two).unwrap()).is_err());
    }

    #[test]
    fn spectra_comparisons() {
        let q = SystemSpec::qubits(3);
        let ghz = ps("|000>+|111>", &q);
        let w = ps("|001>+|010>+|100>", &q);
        assert!(!spectra_equal(&rdm(&ghz), &rdm(&w), 1e-8).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let us: Vec<CMatrix> = (0..3).map(|_| random_unitary(&mut rng, 2)).collect();
        let rotated = ProjectiveState::new(&ghz.rep().transform(&us).unwrap()).unwrap();
        assert!(spectra_equal(&rdm(&ghz), &rdm(&rotated), 1e-10).unwrap());

        let f = SystemSpec::fermionic(6, 3).unwrap();
        let psi = ps("|012>+|345>", &f);
        let phi = ps("|013>-|024>+|125>", &f);
        assert!(!spectra_equal(&rdm(&psi), &rdm(&phi), 1e-8).unwrap());
        assert!((rdm(&psi).spectra[0][0] - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn lu_witness_maps_one_state_to_the_other() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = SystemSpec::distinguishable(&[2, 3]).unwrap();
        let a = Tensor::from_entries(&s, crate::linalg::random_vector(&mut rng, 6)).unwrap();
        let b = a.transform(&[random_unitary(&mut rng, 2), random_unitary(&mut rng, 3)]).unwrap();
        let (pa, pb) = (ProjectiveState::new(&a).unwrap(), ProjectiveState::new(&b).unwrap());
        let (u1, u2) = lu_witness_bipartite(&pa, &pb, 1e-10).unwrap().unwrap();
        let img = pa.rep().transform(&[u1, u2]).unwrap();
        assert!(img.proj_distance(pb.rep()).unwrap() < 1e-10);
    }
}
