//! Dense complex tensors over the three state-space families.
//!
//! Bosonic and fermionic tensors are stored packed: one entry per weakly
//! (resp. strictly) increasing index tuple, in lexicographic order. The packed
//! value is the entry of the full L-fold array at that tuple, so expansion
//! copies it (with the permutation sign for fermions) without multinomial
//! weights. Inner products and norms are those of the full expansion; in packed
//! coordinates each entry is weighted by the number of tuples it stands for.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, CMatrix, C64, RANK_TOL, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Distinguishable,
    Bosonic,
    Fermionic,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Distinguishable => "distinguishable",
            Kind::Bosonic => "bosonic",
            Kind::Fermionic => "fermionic",
        }
    }
}

impl std::str::FromStr for Kind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "distinguishable" | "d" => Ok(Kind::Distinguishable),
            "bosonic" | "boson" | "b" => Ok(Kind::Bosonic),
            "fermionic" | "fermion" | "f" => Ok(Kind::Fermionic),
            other => Err(Error::InvalidSpec(format!("unknown kind '{other}'"))),
        }
    }
}

/// Family, particle count and local dimensions of a state space.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SystemSpec {
    kind: Kind,
    l: usize,
    dims: Vec<usize>,
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl SystemSpec {
    pub fn new(kind: Kind, l: usize, dims: Vec<usize>) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidSpec("particle count must be positive".into()));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidSpec("local dimensions must be positive".into()));
        }
        match kind {
            Kind::Distinguishable if dims.len() != l => Err(Error::InvalidSpec(format!(
                "distinguishable spec needs {l} local dimensions, got {}",
                dims.len()
            ))),
            Kind::Bosonic | Kind::Fermionic if dims.len() != 1 => Err(Error::InvalidSpec(
                "bosonic and fermionic specs take a single local dimension".into(),
            )),
            Kind::Fermionic if l > dims[0] => Err(Error::InvalidSpec(format!(
                "fermionic spec needs L <= n, got L={l}, n={}",
                dims[0]
            ))),
            _ => Ok(SystemSpec { kind, l, dims }),
        }
    }

    pub fn distinguishable(dims: &[usize]) -> Result<Self> {
        Self::new(Kind::Distinguishable, dims.len(), dims.to_vec())
    }

    pub fn bosonic(n: usize, l: usize) -> Result<Self> {
        Self::new(Kind::Bosonic, l, vec![n])
    }

    pub fn fermionic(n: usize, l: usize) -> Result<Self> {
        Self::new(Kind::Fermionic, l, vec![n])
    }

    /// `L` qubits.
    pub fn qubits(l: usize) -> Self {
        Self::distinguishable(&vec![2; l]).expect("valid qubit spec")
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    /// Particle count `L`.
    pub fn particles(&self) -> usize {
        self.l
    }

    /// As stored: `L` entries for distinguishable, `[n]` otherwise.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Dimension of the `j`-th tensor factor of the full expansion.
    pub fn local_dim(&self, j: usize) -> usize {
        match self.kind {
            Kind::Distinguishable => self.dims[j],
            _ => self.dims[0],
        }
    }

    /// Local dimensions of the full L-fold array.
    pub fn full_dims(&self) -> Vec<usize> {
        (0..self.l).map(|j| self.local_dim(j)).collect()
    }

    /// Ambient dimension `N` of the (packed) state space.
    pub fn ambient_dim(&self) -> usize {
        let n = self.dims[0];
        match self.kind {
            Kind::Distinguishable => self.dims.iter().product(),
            Kind::Bosonic => binomial(self.l + n - 1, self.l),
            Kind::Fermionic => binomial(n, self.l),
        }
    }

    /// Dimension of the coherent variety `X` (projective).
    pub fn coherent_dim(&self) -> usize {
        let n = self.dims[0];
        match self.kind {
            Kind::Distinguishable => self.dims.iter().map(|d| d - 1).sum(),
            Kind::Bosonic => n - 1,
            Kind::Fermionic => self.l * (n - self.l),
        }
    }

    /// The distinguishable spec of the full expansion.
    pub fn full_spec(&self) -> SystemSpec {
        SystemSpec { kind: Kind::Distinguishable, l: self.l, dims: self.full_dims() }
    }

    /// Canonical multi-indices in storage order.
    pub fn basis(&self) -> Vec<Vec<usize>> {
        let l = self.l;
        let mut out = Vec::with_capacity(self.ambient_dim());
        match self.kind {
            Kind::Distinguishable => {
                let mut idx = vec![0usize; l];
                loop {
                    out.push(idx.clone());
                    if !odometer(&mut idx, &self.dims) {
                        break;
                    }
                }
            }
            Kind::Bosonic | Kind::Fermionic => {
                let n = self.dims[0];
                let strict = self.kind == Kind::Fermionic;
                let mut idx: Vec<usize> =
                    if strict { (0..l).collect() } else { vec![0; l] };
                loop {
                    out.push(idx.clone());
                    if !next_sorted(&mut idx, n, strict) {
                        break;
                    }
                }
            }
        }
        out
    }

    /// Storage position of a canonical multi-index.
    pub fn position(&self, idx: &[usize]) -> usize {
        match self.kind {
            Kind::Distinguishable => {
                idx.iter().zip(&self.dims).fold(0, |acc, (&i, &d)| acc * d + i)
            }
            Kind::Fermionic => rank_strict(idx, self.dims[0]),
            Kind::Bosonic => {
                let shifted: Vec<usize> = idx.iter().enumerate().map(|(j, &i)| i + j).collect();
                rank_strict(&shifted, self.dims[0] + self.l - 1)
            }
        }
    }

    /// Number of full-array entries represented by each packed entry.
    pub fn multiplicities(&self) -> Vec<f64> {
        match self.kind {
            Kind::Distinguishable => vec![1.0; self.ambient_dim()],
            Kind::Fermionic => vec![factorial(self.l); self.ambient_dim()],
            Kind::Bosonic => self.basis().iter().map(|idx| permutation_count(idx)).collect(),
        }
    }
}

/// Number of distinct rearrangements of a sorted tuple.
pub(crate) fn permutation_count(sorted: &[usize]) -> f64 {
    let mut res = factorial(sorted.len());
    let mut run = 1;
    for w in 1..=sorted.len() {
        if w < sorted.len() && sorted[w] == sorted[w - 1] {
            run += 1;
        } else {
            res /= factorial(run);
            run = 1;
        }
    }
    res
}

fn odometer(idx: &mut [usize], dims: &[usize]) -> bool {
    for j in (0..idx.len()).rev() {
        idx[j] += 1;
        if idx[j] < dims[j] {
            return true;
        }
        idx[j] = 0;
    }
    false
}

fn next_sorted(idx: &mut [usize], n: usize, strict: bool) -> bool {
    let l = idx.len();
    for j in (0..l).rev() {
        let cap = if strict { n - (l - j) } else { n - 1 };
        if idx[j] < cap {
            idx[j] += 1;
            for k in j + 1..l {
                idx[k] = if strict { idx[k - 1] + 1 } else { idx[k - 1] };
            }
            return true;
        }
    }
    false
}

/// Lexicographic rank of a strictly increasing tuple among all such tuples in {0..n}.
fn rank_strict(idx: &[usize], n: usize) -> usize {
    let l = idx.len();
    let mut r = 0;
    let mut prev = 0usize;
    for (j, &c) in idx.iter().enumerate() {
        let start = if j == 0 { 0 } else { prev + 1 };
        for v in start..c {
            r += binomial(n - v - 1, l - j - 1);
        }
        prev = c;
    }
    r
}

/// Sort a tuple, returning the permutation sign.
fn sort_with_sign(idx: &mut [usize]) -> f64 {
    let mut sign = 1.0;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    sign
}

/// A dense complex tensor in packed canonical storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    spec: SystemSpec,
    entries: Vec<C64>,
}

impl Tensor {
    pub fn zeros(spec: &SystemSpec) -> Tensor {
        Tensor { spec: spec.clone(), entries: vec![ZERO; spec.ambient_dim()] }
    }

    /// Wrap packed entries given in storage order.
    pub fn from_entries(spec: &SystemSpec, entries: Vec<C64>) -> Result<Tensor> {
        if entries.len() != spec.ambient_dim() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} packed entries, got {}",
                spec.ambient_dim(),
                entries.len()
            )));
        }
        Ok(Tensor { spec: spec.clone(), entries })
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<C64> {
        self.entries
    }

    /// Entry at an arbitrary (not necessarily sorted) multi-index.
    pub fn get(&self, idx: &[usize]) -> C64 {
        match self.canonical_slot(idx) {
            Ok(Some((pos, sign))) => self.entries[pos] * sign,
            _ => ZERO,
        }
    }

    /// Storage slot and sign for a multi-index; `None` for a repeated fermionic index.
    fn canonical_slot(&self, idx: &[usize]) -> Result<Option<(usize, f64)>> {
        if idx.len() != self.spec.l {
            return Err(Error::IndexLength { got: idx.len(), expected: self.spec.l });
        }
        for (j, &i) in idx.iter().enumerate() {
            let d = self.spec.local_dim(j);
            if i >= d {
                return Err(Error::IndexOutOfRange { index: i, dim: d });
            }
        }
        let mut s = idx.to_vec();
        let sign = match self.spec.kind {
            Kind::Distinguishable => 1.0,
            Kind::Bosonic => {
                s.sort_unstable();
                1.0
            }
            Kind::Fermionic => {
                let sign = sort_with_sign(&mut s);
                if s.windows(2).any(|w| w[0] == w[1]) {
                    return Ok(None);
                }
                sign
            }
        };
        Ok(Some((self.spec.position(&s), sign)))
    }

    /// Euclidean inner product `<self, other>` of the full expansions.
    pub fn inner(&self, other: &Tensor) -> Result<C64> {
        self.check_same_spec(other)?;
        let w = self.spec.multiplicities();
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .zip(&w)
            .map(|((a, b), w)| a.conj() * b * *w)
            .sum())
    }

    pub fn norm(&self) -> f64 {
        let w = self.spec.multiplicities();
        self.entries.iter().zip(&w).map(|(a, w)| a.norm_sqr() * w).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|x| *x == ZERO)
    }

    pub fn scaled(&self, c: C64) -> Tensor {
        Tensor { spec: self.spec.clone(), entries: self.entries.iter().map(|x| x * c).collect() }
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.check_same_spec(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect();
        Ok(Tensor { spec: self.spec.clone(), entries })
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.add(&other.scaled(C64::new(-1.0, 0.0)))
    }

    fn check_same_spec(&self, other: &Tensor) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch(format!("{:?} vs {:?}", self.spec, other.spec)));
        }
        Ok(())
    }

    /// Coordinates in which the packed inner product becomes the plain one.
    pub fn weighted_coords(&self) -> Vec<C64> {
        let w = self.spec.multiplicities();
        self.entries.iter().zip(&w).map(|(a, w)| a * w.sqrt()).collect()
    }

    pub fn from_weighted_coords(spec: &SystemSpec, coords: &[C64]) -> Result<Tensor> {
        let w = spec.multiplicities();
        Tensor::from_entries(spec, coords.iter().zip(&w).map(|(a, w)| a / w.sqrt()).collect())
    }

    /// The full L-fold array as a distinguishable tensor. Identity on distinguishable input.
    pub fn expand_full(&self) -> Tensor {
        if self.spec.kind == Kind::Distinguishable {
            return self.clone();
        }
        let full = self.spec.full_spec();
        let entries = full.basis().iter().map(|idx| self.get(idx)).collect();
        Tensor { spec: full, entries }
    }

    /// Inverse of [`Tensor::expand_full`]: read the canonical slots of a full array.
    pub fn pack_full(spec: &SystemSpec, full: &Tensor) -> Result<Tensor> {
        if full.spec != spec.full_spec() {
            return Err(Error::SpecMismatch("full array does not match spec".into()));
        }
        let entries = spec.basis().iter().map(|idx| full.entries[full.spec.position(idx)]).collect();
        Ok(Tensor { spec: spec.clone(), entries })
    }

    /// Matrix with rows indexed by `modes` and columns by the remaining factors,
    /// both in lexicographic order of ascending mode. Modes are 0-based.
    pub fn flatten(&self, modes: &[usize]) -> Result<CMatrix> {
        let l = self.spec.l;
        let mut rows_modes: Vec<usize> = modes.to_vec();
        rows_modes.sort_unstable();
        rows_modes.dedup();
        if rows_modes.is_empty() || rows_modes.len() >= l || rows_modes.iter().any(|&m| m >= l) {
            return Err(Error::EmptyOrFullModeSet);
        }
        let full = self.expand_full();
        let dims = full.spec.dims.clone();
        let col_modes: Vec<usize> = (0..l).filter(|m| !rows_modes.contains(m)).collect();
        let nr: usize = rows_modes.iter().map(|&m| dims[m]).product();
        let nc: usize = col_modes.iter().map(|&m| dims[m]).product();
        let mut mat = CMatrix::zeros(nr, nc);
        let mut idx = vec![0usize; l];
        for &v in &full.entries {
            if v != ZERO {
                let r = rows_modes.iter().fold(0, |acc, &m| acc * dims[m] + idx[m]);
                let c = col_modes.iter().fold(0, |acc, &m| acc * dims[m] + idx[m]);
                mat[(r, c)] = v;
            }
            odometer(&mut idx, &dims);
        }
        Ok(mat)
    }

    /// Numerical rank of a flattening.
    pub fn flattening_rank(&self, modes: &[usize], tol: f64) -> Result<usize> {
        Ok(numerical_rank(&self.flatten(modes)?, tol))
    }

    /// Apply local linear maps: one per factor for distinguishable tensors, a
    /// single map for bosonic and fermionic ones. Maps may be rectangular; the
    /// result lives in the space of the output dimensions.
    pub fn transform(&self, maps: &[CMatrix]) -> Result<Tensor> {
        let l = self.spec.l;
        let expected = if self.spec.kind == Kind::Distinguishable { l } else { 1 };
        if maps.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "expected {expected} local maps, got {}",
                maps.len()
            )));
        }
        for j in 0..l {
            let m = &maps[if expected == 1 { 0 } else { j }];
            if m.ncols() != self.spec.local_dim(j) {
                return Err(Error::DimensionMismatch(format!(
                    "map for factor {j} has {} columns, factor dimension is {}",
                    m.ncols(),
                    self.spec.local_dim(j)
                )));
            }
        }
        let new_dims: Vec<usize> = if expected == 1 {
            vec![maps[0].nrows()]
        } else {
            maps.iter().map(|m| m.nrows()).collect()
        };
        let new_spec = SystemSpec::new(self.spec.kind, l, new_dims)?;
        let mut cur = self.expand_full();
        for j in 0..l {
            cur = apply_mode(&cur, j, &maps[if expected == 1 { 0 } else { j }]);
        }
        if self.spec.kind == Kind::Distinguishable {
            Ok(cur)
        } else {
            Tensor::pack_full(&new_spec, &cur)
        }
    }

    /// Image under full-column-rank injections into a larger space.
    pub fn embed(&self, target: &SystemSpec, injections: &[CMatrix]) -> Result<Tensor> {
        if target.kind != self.spec.kind || target.l != self.spec.l {
            return Err(Error::DimensionMismatch("target spec has a different family".into()));
        }
        for (j, m) in injections.iter().enumerate() {
            let td = if target.kind == Kind::Distinguishable { target.dims.get(j) } else { target.dims.first() };
            if Some(&m.nrows()) != td {
                return Err(Error::DimensionMismatch(format!("injection {j} has wrong row count")));
            }
            if m.nrows() < m.ncols() || numerical_rank(m, RANK_TOL) < m.ncols() {
                return Err(Error::RankDeficientInjection(j));
            }
        }
        let out = self.transform(injections)?;
        debug_assert_eq!(out.spec, *target);
        Ok(out)
    }

    /// Fubini–Study compatible distance between the projective classes.
    pub fn proj_distance(&self, other: &Tensor) -> Result<f64> {
        self.check_same_spec(other)?;
        let (na, nb) = (self.norm(), other.norm());
        if na == 0.0 || nb == 0.0 {
            return Err(Error::AllZero);
        }
        let a = self.weighted_coords();
        let b = other.weighted_coords();
        let a: Vec<C64> = a.iter().map(|x| x / na).collect();
        let b: Vec<C64> = b.iter().map(|x| x / nb).collect();
        let overlap: f64 = crate::linalg::dot(&a, &b).norm();
        let d2 = 1.0 - overlap * overlap;
        if d2 > 1e-6 {
            return Ok(d2.max(0.0).sqrt());
        }
        // Near-parallel states: Lagrange's identity avoids the cancellation in 1 - |<a,b>|^2.
        let mut acc = 0.0;
        for i in 0..a.len() {
            if a[i] == ZERO && b[i] == ZERO {
                continue;
            }
            for j in i + 1..a.len() {
                acc += (a[i] * b[j] - a[j] * b[i]).norm_sqr();
            }
        }
        Ok(acc.sqrt())
    }
}

/// Multiply the full array `t` along factor `mode` by `m`.
fn apply_mode(t: &Tensor, mode: usize, m: &CMatrix) -> Tensor {
    let dims = &t.spec.dims;
    let outer: usize = dims[..mode].iter().product();
    let inner: usize = dims[mode + 1..].iter().product();
    let (din, dout) = (dims[mode], m.nrows());
    let mut out = vec![ZERO; outer * dout * inner];
    for o in 0..outer {
        for k in 0..din {
            let src = &t.entries[(o * din + k) * inner..(o * din + k + 1) * inner];
            if src.iter().all(|x| *x == ZERO) {
                continue;
            }
            for r in 0..dout {
                let c = m[(r, k)];
                if c == ZERO {
                    continue;
                }
                let dst = &mut out[(o * dout + r) * inner..(o * dout + r + 1) * inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += c * s;
                }
            }
        }
    }
    let mut nd = dims.clone();
    nd[mode] = dout;
    Tensor { spec: SystemSpec { kind: Kind::Distinguishable, l: t.spec.l, dims: nd }, entries: out }
}

/// Build a packed tensor from sparse `(multi-index, value)` pairs.
///
/// Bosonic indices in any order accumulate into the sorted slot; fermionic
/// ones accumulate with the sign of the sorting permutation.
pub fn make_tensor(spec: &SystemSpec, entries: &[(Vec<usize>, C64)]) -> Result<Tensor> {
    let mut t = Tensor::zeros(spec);
    for (idx, v) in entries {
        match t.canonical_slot(idx)? {
            Some((pos, sign)) => t.entries[pos] += v * sign,
            None => {
                let mut s = idx.clone();
                s.sort_unstable();
                let rep = s.windows(2).find(|w| w[0] == w[1]).map(|w| w[0]).unwrap_or(0);
                return Err(Error::RepeatedFermionIndex(rep));
            }
        }
    }
    if t.is_zero() {
        return Err(Error::AllZero);
    }
    Ok(t)
}

/// A tensor up to nonzero scalar, stored as its unit-norm representative whose
/// first nonzero canonical entry is real positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveState {
    rep: Tensor,
}

impl ProjectiveState {
    pub fn new(t: &Tensor) -> Result<ProjectiveState> {
        let n = t.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(if n.is_finite() { Error::AllZero } else { Error::Numeric("non-finite tensor".into()) });
        }
        let first = t.entries.iter().find(|x| **x != ZERO).copied().unwrap_or(C64::new(1.0, 0.0));
        let phase = first.conj() / first.norm();
        Ok(ProjectiveState { rep: t.scaled(phase / n) })
    }

    pub fn rep(&self) -> &Tensor {
        &self.rep
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.rep.spec
    }

    pub fn distance(&self, other: &ProjectiveState) -> Result<f64> {
        self.rep.proj_distance(&other.rep)
    }
}

impl From<ProjectiveState> for Tensor {
    fn from(p: ProjectiveState) -> Tensor {
        p.rep
    }
}

/// Distance between projective classes; see [`Tensor::proj_distance`].
pub fn proj_distance(a: &ProjectiveState, b: &ProjectiveState) -> Result<f64> {
    a.distance(b)
}
