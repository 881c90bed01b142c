//! Waring ranks of monomials and of sums of monomials in disjoint variables.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::ONE;
use crate::tensor::{make_tensor, SystemSpec, Tensor};

/// `x_1^{α_1} ⋯ x_n^{α_n}`, exponents indexed by variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Monomial {
    pub exponents: Vec<usize>,
}

impl Monomial {
    pub fn new(exponents: Vec<usize>) -> Result<Monomial> {
        if exponents.iter().all(|&a| a == 0) {
            return Err(Error::ZeroMonomial);
        }
        Ok(Monomial { exponents })
    }

    pub fn degree(&self) -> usize {
        self.exponents.iter().sum()
    }

    /// Nonzero exponents ascending, zeros trailing.
    pub fn canonical(&self) -> Vec<usize> {
        let mut nz: Vec<usize> = self.exponents.iter().copied().filter(|&a| a > 0).collect();
        nz.sort_unstable();
        let zeros = self.exponents.len() - nz.len();
        nz.extend(std::iter::repeat_n(0, zeros));
        nz
    }

    fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.exponents.iter().enumerate().filter(|(_, &a)| a > 0).map(|(i, _)| i)
    }

    /// The monomial as a bosonic state on `max(n, #variables)` modes: the
    /// symmetric tensor with one basis label holding `α_j` copies of `j`.
    pub fn to_tensor(&self, n: usize) -> Result<Tensor> {
        let n = n.max(self.exponents.len());
        let spec = SystemSpec::bosonic(n, self.degree())?;
        let label: Vec<usize> =
            self.exponents.iter().enumerate().flat_map(|(j, &a)| std::iter::repeat_n(j, a)).collect();
        make_tensor(&spec, &[(label, ONE)])
    }
}

/// `Π_{j≥2} (α_j + 1)` over the ascending nonzero exponents.
pub fn monomial_rank(m: &Monomial) -> Result<usize> {
    let nz: Vec<usize> = m.canonical().into_iter().filter(|&a| a > 0).collect();
    if nz.is_empty() {
        return Err(Error::ZeroMonomial);
    }
    Ok(nz[1..].iter().map(|a| a + 1).product())
}

/// Additivity for pairwise coprime monomials of one degree.
pub fn coprime_sum_rank(ms: &[Monomial]) -> Result<usize> {
    if ms.is_empty() {
        return Err(Error::ZeroMonomial);
    }
    for (i, a) in ms.iter().enumerate() {
        for (j, b) in ms.iter().enumerate().skip(i + 1) {
            if a.degree() != b.degree() {
                return Err(Error::DegreeMismatch(a.degree(), b.degree()));
            }
            if a.support().any(|v| b.exponents.get(v).is_some_and(|&e| e > 0)) {
                return Err(Error::NotCoprime(i, j));
            }
        }
    }
    ms.iter().map(monomial_rank).sum()
}
