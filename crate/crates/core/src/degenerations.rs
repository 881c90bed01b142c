//! One-parameter curves `A(a) = g0 A1(a) g0⁻¹` whose orbits through rank-2
//! states converge to exceptional states as `a → 0`.
//!
//! The curve is evaluated in the frame where `A1(a)` is diagonal: the start
//! state is rotated once by `g0⁻¹`, scaled monomially by `A1(a)`, and compared
//! to the limit there. Distances are unitarily invariant, so this gives the
//! same numbers as working with `A(a)` directly, without the cancellation
//! that `a ± a⁻¹` entries cause for small `a`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ket::parse_ket;
use crate::linalg::{CMatrix, C64, ONE, ZERO};
use crate::tensor::{Kind, ProjectiveState, SystemSpec, Tensor};
use crate::varieties::coherent_point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum CurveFamily {
    Qubit3,
    Boson { n: usize, l: usize },
    Fermion36,
}

#[derive(Debug, Clone)]
pub struct CurveSpec {
    pub family: CurveFamily,
    pub spec: SystemSpec,
    /// Unitary change of frame.
    pub g0: CMatrix,
    /// `A1(a) = diag(a^e_j)`.
    pub exponents: Vec<i32>,
    pub start: ProjectiveState,
    /// The limit state, `g0 · phi`.
    pub target: ProjectiveState,
    /// The limit state in the diagonal frame.
    pub phi: Tensor,
    /// `g0⁻¹ · start`.
    chi: Tensor,
    /// Local vectors of the two coherent summands of the start state.
    start_terms: Vec<Vec<Vec<C64>>>,
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn basis_vec(n: usize, i: usize) -> Vec<C64> {
    let mut v = vec![ZERO; n];
    v[i] = ONE;
    v
}

/// Build the curve of a family.
pub fn make_curve(family: CurveFamily) -> Result<CurveSpec> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (spec, g0, exponents, start_ket, phi_ket, start_terms) = match family {
        CurveFamily::Qubit3 => {
            let g0 = CMatrix::from_row_slice(2, 2, &[re(h), re(-h), re(h), re(h)]);
            let terms = vec![vec![basis_vec(2, 0); 3], vec![basis_vec(2, 1); 3]];
            (SystemSpec::qubits(3), g0, vec![1, -1], "|000>+|111>".to_string(), "|011>+|101>+|110>".to_string(), terms)
        }
        CurveFamily::Boson { n, l } => {
            if n < 2 || l < 3 {
                return Err(Error::BadParams("the bosonic curve needs n >= 2 and L >= 3".into()));
            }
            if n > 10 {
                return Err(Error::BadParams("ket labels support at most 10 modes".into()));
            }
            let mut g0 = CMatrix::identity(n, n);
            g0[(0, 0)] = re(h);
            g0[(0, n - 1)] = re(-h);
            g0[(n - 1, 0)] = re(h);
            g0[(n - 1, n - 1)] = re(h);
            let mut exps = vec![0; n];
            exps[0] = 1;
            exps[n - 1] = -1;
            let last = char::from_digit((n - 1) as u32, 10).expect("n <= 10");
            let all_first = "0".repeat(l);
            let all_last: String = std::iter::repeat_n(last, l).collect();
            let sign = if l % 2 == 1 { "+" } else { "-" };
            let start = format!("|{all_first}>{sign}|{all_last}>");
            let phi = format!("|0{}>", std::iter::repeat_n(last, l - 1).collect::<String>());
            // v_n^L with coefficient (-1)^{L+1} is the coherent point of ±v_n scaled.
            let mut vn = basis_vec(n, n - 1);
            if l % 2 == 0 {
                // (ω v_n)^L = -v_n^L with ω a primitive 2L-th root of unity.
                let w = C64::from_polar(1.0, std::f64::consts::PI / l as f64);
                vn.iter_mut().for_each(|x| *x *= w);
            }
            let terms = vec![vec![basis_vec(n, 0)], vec![vn]];
            (SystemSpec::bosonic(n, l)?, g0, exps, start, phi, terms)
        }
        CurveFamily::Fermion36 => {
            #[rustfmt::skip]
            let m = [
                1., 0., 0., 0., 0., -1.,
                0., 1., 0., 0., -1., 0.,
                0., 0., 1., -1., 0., 0.,
                0., 0., 1., 1., 0., 0.,
                0., 1., 0., 0., 1., 0.,
                1., 0., 0., 0., 0., 1.,
            ];
            let g0 = CMatrix::from_row_slice(6, 6, &m.map(|x| re(x * h)));
            let terms = vec![(0..3).map(|i| basis_vec(6, i)).collect(), (3..6).map(|i| basis_vec(6, i)).collect()];
            (
                SystemSpec::fermionic(6, 3)?,
                g0,
                vec![-1, -1, -1, 1, 1, 1],
                "|012>+|345>".to_string(),
                "|013>-|024>+|125>".to_string(),
                terms,
            )
        }
    };
    let start_t = parse_ket(&start_ket, &spec)?;
    let phi = parse_ket(&phi_ket, &spec)?;
    let maps = |m: &CMatrix| if spec.kind() == Kind::Distinguishable { vec![m.clone(); 3] } else { vec![m.clone()] };
    let chi = start_t.transform(&maps(&g0.adjoint()))?;
    let target = ProjectiveState::new(&phi.transform(&maps(&g0))?)?;
    Ok(CurveSpec {
        family,
        spec: spec.clone(),
        g0,
        exponents,
        start: ProjectiveState::new(&start_t)?,
        target,
        phi,
        chi,
        start_terms,
    })
}

impl CurveSpec {
    fn maps(&self, m: CMatrix) -> Vec<CMatrix> {
        if self.spec.kind() == Kind::Distinguishable {
            vec![m; self.spec.particles()]
        } else {
            vec![m]
        }
    }

    pub fn a1(&self, a: C64) -> CMatrix {
        let d: Vec<C64> = self.exponents.iter().map(|&e| a.powi(e)).collect();
        CMatrix::from_diagonal(&nalgebra::DVector::from_vec(d))
    }

    /// `A(a) = g0 A1(a) g0⁻¹`, the local map applied along the curve.
    pub fn matrix(&self, a: C64) -> CMatrix {
        &self.g0 * self.a1(a) * self.g0.adjoint()
    }

    /// `A1(a) · g0⁻¹ · start`, the curve in the diagonal frame.
    fn diagonal_point(&self, a: C64) -> Result<Tensor> {
        if a == ZERO {
            return Err(Error::ZeroParameter);
        }
        self.chi.transform(&self.maps(self.a1(a)))
    }

    /// The state `A(a) · start`.
    pub fn evaluate(&self, a: C64) -> Result<ProjectiveState> {
        let x = self.diagonal_point(a)?;
        ProjectiveState::new(&x.transform(&self.maps(self.g0.clone()))?)
    }

    /// Two coherent points summing to `A(a) · start`.
    pub fn witness(&self, a: C64) -> Result<Vec<Tensor>> {
        if a == ZERO {
            return Err(Error::ZeroParameter);
        }
        let m = self.matrix(a);
        self.start_terms
            .iter()
            .map(|vecs| {
                let moved: Vec<Vec<C64>> = vecs.iter().map(|v| (&m * nalgebra::DVector::from_column_slice(v)).as_slice().to_vec()).collect();
                coherent_point(&self.spec, &moved)
            })
            .collect()
    }

    /// Distance from the curve to its limit at each `a`, and the slope of
    /// `log distance` against `log a`.
    pub fn verify_limit(&self, ladder: &[f64]) -> Result<LimitReport> {
        let mut rows = Vec::with_capacity(ladder.len());
        for &a in ladder {
            if a.is_nan() || a <= 0.0 {
                return Err(Error::BadParams("ladder values must be positive".into()));
            }
            let x = self.diagonal_point(re(a))?;
            rows.push(LadderRow { a, distance: x.proj_distance(&self.phi)? });
        }
        Ok(LimitReport { fitted_order: fitted_slope(&rows), rows })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderRow {
    pub a: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitReport {
    pub rows: Vec<LadderRow>,
    pub fitted_order: f64,
}

fn fitted_slope(rows: &[LadderRow]) -> f64 {
    let pts: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.distance > 0.0).map(|r| (r.a.ln(), r.distance.ln())).collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// `10^{-1}, 10^{-1.5}, …, 10^{-4}`.
pub fn default_ladder() -> Vec<f64> {
    (0..7).map(|k| 10f64.powf(-1.0 - 0.5 * k as f64)).collect()
}

/// The curve matrix in closed form, in the parameter of the closed-form
/// `A1(a)` (for the fermionic curve that is `1/a` of [`CurveSpec::matrix`]).
pub fn closed_form_matrix(family: CurveFamily, a: f64) -> Result<CMatrix> {
    let p = (a + 1.0 / a) / 2.0;
    let m = (a - 1.0 / a) / 2.0;
    Ok(match family {
        CurveFamily::Qubit3 => CMatrix::from_row_slice(2, 2, &[re(p), re(m), re(m), re(p)]),
        CurveFamily::Boson { n, l } => {
            if n < 2 || l < 3 {
                return Err(Error::BadParams("the bosonic curve needs n >= 2 and L >= 3".into()));
            }
            let mut out = CMatrix::identity(n, n);
            out[(0, 0)] = re(p);
            out[(0, n - 1)] = re(m);
            out[(n - 1, 0)] = re(m);
            out[(n - 1, n - 1)] = re(p);
            out
        }
        CurveFamily::Fermion36 => CMatrix::from_fn(6, 6, |i, j| {
            if i == j {
                re(p)
            } else if i + j == 5 {
                re(m)
            } else {
                ZERO
            }
        }),
    })
}

/// The closed-form diagonal factor `A1(a)`.
pub fn closed_form_a1(family: CurveFamily, a: f64) -> Result<CMatrix> {
    let exps: Vec<i32> = match family {
        CurveFamily::Qubit3 => vec![1, -1],
        CurveFamily::Boson { n, .. } => {
            let mut e = vec![0; n.max(2)];
            e[0] = 1;
            e[n.max(2) - 1] = -1;
            e
        }
        CurveFamily::Fermion36 => vec![1, 1, 1, -1, -1, -1],
    };
    Ok(CMatrix::from_diagonal(&nalgebra::DVector::from_vec(exps.iter().map(|&e| re(a.powi(e))).collect())))
}
