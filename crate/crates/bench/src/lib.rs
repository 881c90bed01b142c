//! Fixtures shared by the criterion benches.

use secanta_core::{parse_ket, SystemSpec, Tensor};

pub fn w_state(l: usize) -> Tensor {
    let terms: Vec<String> = (0..l)
        .map(|k| {
            let label: String = (0..l).map(|j| if j == k { '1' } else { '0' }).collect();
            format!("|{label}>")
        })
        .collect();
    parse_ket(&terms.join("+"), &SystemSpec::qubits(l)).expect("valid W state")
}

/// The fermionic state `|013> - |024> + |125>` in three fermions on six modes.
pub fn fermion_phi() -> Tensor {
    parse_ket("|013>-|024>+|125>", &SystemSpec::fermionic(6, 3).expect("valid spec")).expect("valid ket")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_normalizable() {
        assert!((w_state(4).norm() - 2.0).abs() < 1e-12);
        assert!((fermion_phi().norm() - 6f64.sqrt() * 3f64.sqrt()).abs() < 1e-9);
    }
}
