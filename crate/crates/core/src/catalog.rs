//! Known exceptional states, with orbit classifiers for three qubits and for
//! 2×2×N.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::invariants::{hyperdet_222, mlrank};
use crate::ket::parse_ket;
use crate::linalg::{singular_values, CMatrix, C64, RANK_TOL};
use crate::tensor::{Kind, SystemSpec, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    #[serde(rename = "2x2xN")]
    TwoTwoN,
    #[serde(rename = "2x3xN")]
    TwoThreeN,
    #[serde(rename = "4qubit")]
    FourQubit,
    Bosonic,
    Fermionic,
}

impl Family {
    pub const ALL: [Family; 5] =
        [Family::TwoTwoN, Family::TwoThreeN, Family::FourQubit, Family::Bosonic, Family::Fermionic];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::TwoTwoN => "2x2xN",
            Family::TwoThreeN => "2x3xN",
            Family::FourQubit => "4qubit",
            Family::Bosonic => "bosonic",
            Family::Fermionic => "fermionic",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Family> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::BadParams(format!("unknown catalog family '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub id: String,
    pub family: Family,
    pub kind: Kind,
    #[serde(rename = "L")]
    pub l: usize,
    pub dims: Vec<usize>,
    pub ket: String,
    pub rank: usize,
    pub border_rank: usize,
    pub min_n: Option<usize>,
    pub citation: String,
}

impl CatalogEntry {
    pub fn spec(&self) -> SystemSpec {
        SystemSpec::new(self.kind, self.l, self.dims.clone()).expect("catalog specs are valid")
    }

    pub fn tensor(&self) -> Tensor {
        parse_ket(&self.ket, &self.spec()).expect("catalog kets parse")
    }
}

#[allow(clippy::too_many_arguments)]
fn entry(
    id: &str,
    family: Family,
    spec: SystemSpec,
    ket: &str,
    rank: usize,
    border_rank: usize,
    min_n: Option<usize>,
    citation: &str,
) -> CatalogEntry {
    CatalogEntry {
        id: id.into(),
        family,
        kind: spec.kind(),
        l: spec.particles(),
        dims: spec.dims().to_vec(),
        ket: ket.into(),
        rank,
        border_rank,
        min_n,
        citation: citation.into(),
    }
}

fn d(dims: &[usize]) -> SystemSpec {
    SystemSpec::distinguishable(dims).expect("valid")
}

/// `v_1 v_n^{L-1}`: rank `L`, border rank 2.
pub fn boson_entry(n: usize, l: usize) -> Result<CatalogEntry> {
    if n < 2 || l < 3 {
        return Err(Error::BadParams("the bosonic entry needs n >= 2 and L >= 3".into()));
    }
    let label: String = std::iter::once('0')
        .chain(std::iter::repeat_n(char::from_digit((n - 1) as u32, 36).expect("n <= 36"), l - 1))
        .collect();
    if n > 10 {
        return Err(Error::BadParams("ket labels support at most 10 modes".into()));
    }
    Ok(entry(
        &format!("boson_v1_vn^{}_n{}", l - 1, n),
        Family::Bosonic,
        SystemSpec::bosonic(n, l)?,
        &format!("|{label}>"),
        l,
        2,
        None,
        "bosonic monomial v1 vn^(L-1), limit of the binomial-formula curve",
    ))
}

/// Exceptional states of the given family, or of all families; the bosonic
/// family is instantiated at its smallest size.
pub fn exceptional_catalog(filter: Option<Family>) -> Vec<CatalogEntry> {
    let all = vec![
        entry("W", Family::TwoTwoN, d(&[2, 2, 2]), "|001>+|010>+|100>", 3, 2, Some(2), "2x2xN, the orbit through W"),
        entry("Psi1", Family::TwoThreeN, d(&[2, 3, 2]), "|100>+|010>+|001>", 3, 2, Some(2), "2x3xN list, item 1"),
        entry(
            "Psi2",
            Family::TwoThreeN,
            d(&[2, 3, 3]),
            "|0>(|00>+|11>)+|1>(|01>+|22>)",
            4,
            3,
            Some(3),
            "2x3xN list, item 2",
        ),
        entry(
            "Psi3",
            Family::TwoThreeN,
            d(&[2, 3, 3]),
            "|0>(|00>+|11>+|22>)+|1>(|01>+|12>)",
            4,
            3,
            Some(3),
            "2x3xN list, item 3",
        ),
        entry("Psi4", Family::TwoThreeN, d(&[2, 3, 3]), "|0>(|00>+|11>+|22>)+|101>", 4, 3, Some(3), "2x3xN list, item 4"),
        entry(
            "Psi5",
            Family::TwoThreeN,
            d(&[2, 3, 3]),
            "|0>(|00>+|12>)+|1>(|01>+|22>)",
            4,
            3,
            Some(3),
            "2x3xN list, item 5",
        ),
        entry(
            "Psi6",
            Family::TwoThreeN,
            d(&[2, 3, 4]),
            "|0>(|00>+|12>+|23>)+|1>(|01>+|13>)",
            5,
            4,
            Some(4),
            "2x3xN list, item 6",
        ),
        entry("0W3", Family::FourQubit, d(&[2, 2, 2, 2]), "|0>(|001>+|010>+|100>)", 3, 2, None, "four qubits, three-qubit W"),
        entry(
            "W4",
            Family::FourQubit,
            d(&[2, 2, 2, 2]),
            "|0001>+|0010>+|0100>+|1000>",
            4,
            2,
            None,
            "four qubits, four-qubit W",
        ),
        boson_entry(2, 3).expect("valid"),
        entry(
            "phi",
            Family::Fermionic,
            SystemSpec::fermionic(6, 3).expect("valid"),
            "|013>-|024>+|125>",
            3,
            2,
            None,
            "three fermions in six modes, limit of the six-dimensional curve",
        ),
    ];
    all.into_iter().filter(|e| filter.is_none_or(|f| e.family == f)).collect()
}

/// Border rank of a catalog entry projectively equal to `state`, if any.
pub fn catalog_border_rank(state: &Tensor) -> Option<usize> {
    if state.is_zero() {
        return None;
    }
    let spec = state.spec();
    let mut candidates = exceptional_catalog(None);
    if spec.kind() == Kind::Bosonic {
        if let Ok(e) = boson_entry(spec.dims()[0], spec.particles()) {
            candidates.push(e);
        }
    }
    candidates
        .into_iter()
        .filter(|e| e.spec() == *spec)
        .find(|e| e.tensor().proj_distance(state).is_ok_and(|dist| dist < 1e-10))
        .map(|e| e.border_rank)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub label: String,
    pub mlrank: Vec<usize>,
    /// Absolute hyperdeterminant of the unit-norm (trimmed) state, when computed.
    pub hyperdet_abs: Option<f64>,
    /// Set when the hyperdeterminant is too close to zero to separate GHZ from W reliably.
    pub near_boundary: bool,
}

const HYPERDET_TOL: f64 = 1e-10;

/// SLOCC orbit of a three-qubit state.
pub fn classify_three_qubit(state: &Tensor) -> Result<Classification> {
    if *state.spec() != SystemSpec::qubits(3) {
        return Err(Error::SpecMismatch("three-qubit classification needs dims 2,2,2".into()));
    }
    if state.is_zero() {
        return Err(Error::AllZero);
    }
    let ml = mlrank(state)?;
    let ones: Vec<usize> = (0..3).filter(|&j| ml[j] == 1).collect();
    let roman = ["I", "II", "III"];
    let (label, det, near) = match ones.len() {
        3 => ("SEP".to_string(), None, false),
        1 => (format!("BISEP_{}", roman[ones[0]]), None, false),
        _ => {
            let unit = state.scaled(C64::new(1.0 / state.norm(), 0.0));
            let det = hyperdet_222(&unit)?.norm();
            let label = if det > HYPERDET_TOL { "GHZ" } else { "W" };
            (label.to_string(), Some(det), (1e-12..=1e-8).contains(&det))
        }
    };
    Ok(Classification { label, mlrank: ml, hyperdet_abs: det, near_boundary: near })
}

/// Orbit label in 2×2×N. The third factor is first restricted to the column
/// space of its flattening; concise 2×2×2 states use the three-qubit labels,
/// concise 2×2×3 states split by the rank of the matrix annihilating their
/// slice space, and concise 2×2×4 states form the open orbit.
pub fn classify_22n(state: &Tensor) -> Result<Classification> {
    let spec = state.spec();
    if spec.kind() != Kind::Distinguishable || spec.particles() != 3 || spec.dims()[..2] != [2, 2] {
        return Err(Error::SpecMismatch("2x2xN classification needs dims 2,2,N".into()));
    }
    if state.is_zero() {
        return Err(Error::AllZero);
    }
    let ml = mlrank(state)?;
    let trimmed = trim_third(state)?;
    let k = trimmed.spec().dims()[2];
    let plain = |label: &str| Classification { label: label.into(), mlrank: ml.clone(), hyperdet_abs: None, near_boundary: false };
    Ok(match k {
        1 => {
            if ml[0] == 1 {
                plain("SEP")
            } else {
                plain("BISEP_III")
            }
        }
        2 => {
            let padded = trimmed;
            let mut c = classify_three_qubit(&padded)?;
            c.mlrank = ml;
            c
        }
        3 => {
            // Slices span a 3-dimensional subspace of 2×2 matrices; its
            // annihilator under the bilinear trace pairing is one matrix.
            let slices = CMatrix::from_fn(3, 4, |s, ij| trimmed.get(&[ij / 2, ij % 2, s]));
            let svd = slices.svd(false, true);
            let vt = svd.v_t.expect("requested");
            let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
            order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
            // Right null vector of the slice matrix (no conjugation: bilinear pairing).
            let null = complement_row(&vt, &order);
            let det = (null[0] * null[3] - null[1] * null[2]).norm();
            if det > HYPERDET_TOL {
                plain("CONCISE_223_GENERIC")
            } else {
                plain("CONCISE_223_SPECIAL")
            }
        }
        _ => plain("CONCISE_224"),
    })
}

/// Unit vector orthogonal (bilinearly) to the three leading rows of `vt`.
fn complement_row(vt: &CMatrix, order: &[usize]) -> Vec<C64> {
    let rows: Vec<Vec<C64>> = order.iter().take(3).map(|&r| vt.row(r).iter().map(|x| x.conj()).collect()).collect();
    let comp = crate::linalg::orthogonal_complement(&rows, 4);
    // Orthogonal in the Hermitian sense to the conjugated rows means
    // bilinearly orthogonal to the rows themselves.
    comp[0].iter().map(|x| x.conj()).collect()
}

/// Restrict the third factor to the column space of its flattening.
pub fn trim_third(state: &Tensor) -> Result<Tensor> {
    let m = state.flatten(&[2])?;
    let s = singular_values(&m);
    let k = crate::linalg::rank_from_singular_values(&s, RANK_TOL);
    let svd = m.svd(true, false);
    let u = svd.u.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let n = state.spec().dims()[2];
    let proj = CMatrix::from_fn(k, n, |i, j| u[(j, order[i])].conj());
    let id = CMatrix::identity(2, 2);
    state.transform(&[id.clone(), id, proj])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_matrix, random_sl, random_vector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn catalog_contents() {
        assert_eq!(exceptional_catalog(None).len(), 11);
        let f = exceptional_catalog(Some(Family::TwoThreeN));
        assert_eq!(f.len(), 6);
        let p6 = f.iter().find(|e| e.id == "Psi6").unwrap();
        assert_eq!((p6.rank, p6.border_rank, p6.min_n), (5, 4, Some(4)));
        assert_eq!(exceptional_catalog(Some(Family::FourQubit)).len(), 2);
        let b = &exceptional_catalog(Some(Family::Bosonic))[0];
        assert_eq!((b.ket.as_str(), b.rank, b.border_rank), ("|011>", 3, 2));
        for e in exceptional_catalog(None) {
            assert!(e.rank > e.border_rank);
            assert!(!e.tensor().is_zero());
        }
    }

    #[test]
    fn catalog_kets_expand_as_listed() {
        let s = SystemSpec::distinguishable(&[2, 3, 3]).unwrap();
        let direct = parse_ket("|000>+|011>+|101>+|122>", &s).unwrap();
        let p2 = exceptional_catalog(None).into_iter().find(|e| e.id == "Psi2").unwrap().tensor();
        assert_eq!(direct, p2);
    }

    #[test]
    fn bosonic_entries() {
        let e = boson_entry(3, 4).unwrap();
        assert_eq!(e.ket, "|0222>");
        assert!(boson_entry(1, 3).is_err());
        assert_eq!(catalog_border_rank(&e.tensor()), Some(2));
    }

    #[test]
    fn three_qubit_labels() {
        let q = SystemSpec::qubits(3);
        let c = |k: &str| classify_three_qubit(&parse_ket(k, &q).unwrap()).unwrap().label;
        assert_eq!(c("|000>+|111>"), "GHZ");
        assert_eq!(c("|001>+|010>+|100>"), "W");
        assert_eq!(c("|0>(|00>+|11>)"), "BISEP_I");
        assert_eq!(c("|000>+|101>"), "BISEP_II");
        assert_eq!(c("|000>+|110>"), "BISEP_III");
        assert_eq!(c("|000>"), "SEP");
    }

    #[test]
    fn three_qubit_labels_are_slocc_invariant() {
        let q = SystemSpec::qubits(3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for k in ["|000>+|111>", "|001>+|010>+|100>", "|0>(|00>+|11>)", "|000>"] {
            let t = parse_ket(k, &q).unwrap();
            let label = classify_three_qubit(&t).unwrap().label;
            for _ in 0..10 {
                let g: Vec<CMatrix> = (0..3).map(|_| random_sl(&mut rng, 2)).collect();
                assert_eq!(classify_three_qubit(&t.transform(&g).unwrap()).unwrap().label, label);
            }
        }
    }

    #[test]
    fn two_two_n_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = SystemSpec::qubits(3);
        let w = parse_ket("|001>+|010>+|100>", &q).unwrap();
        let s4 = SystemSpec::distinguishable(&[2, 2, 4]).unwrap();
        let inj = random_matrix(&mut rng, 4, 2);
        let id = CMatrix::identity(2, 2);
        let padded = w.embed(&s4, &[id.clone(), id.clone(), inj]).unwrap();
        assert_eq!(classify_22n(&padded).unwrap().label, "W");

        let s3 = SystemSpec::distinguishable(&[2, 2, 3]).unwrap();
        assert_eq!(classify_22n(&parse_ket("|000>+|111>", &s3).unwrap()).unwrap().label, "GHZ");

        let generic = Tensor::from_entries(&s4, random_vector(&mut rng, 16)).unwrap();
        let c = classify_22n(&generic).unwrap();
        assert_eq!((c.label.as_str(), c.mlrank.clone()), ("CONCISE_224", vec![2, 2, 4]));

        assert_eq!(classify_22n(&parse_ket("|000>+|011>+|102>", &s3).unwrap()).unwrap().label, "CONCISE_223_SPECIAL");
        assert_eq!(
            classify_22n(&parse_ket("|000>+|011>+|102>+|110>", &s3).unwrap()).unwrap().label,
            "CONCISE_223_GENERIC"
        );
        assert_eq!(classify_22n(&parse_ket("|000>+|110>", &s3).unwrap()).unwrap().label, "BISEP_III");
    }
}
