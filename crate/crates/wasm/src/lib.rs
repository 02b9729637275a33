//! Browser bindings for the static demo page in `www/`.
//!
//! Everything crosses the boundary as flat `Float64Array`s so the page needs
//! no glue beyond what `wasm-bindgen` generates.

use wasm_bindgen::prelude::*;

use spreadwidth::integrals::{delta_jprime_study, IntegralKind, StudyOptions};
use spreadwidth::metrics::{metrics_for, strength_function, RowKind, SweepOptions};
use spreadwidth::{diagonalize, hamiltonian, FockState, ModelParameters, Result};

/// Keeps the page responsive; D = 231 diagonalizes in well under a second.
pub const MAX_DEMO_SHELL: usize = 20;

fn params(lambda: f64, max_shell: usize) -> Result<ModelParameters> {
    if max_shell > MAX_DEMO_SHELL {
        return Err(spreadwidth::Error::InvalidParameter(format!(
            "demo basis limited to max_shell <= {MAX_DEMO_SHELL}"
        )));
    }
    ModelParameters::new(lambda, max_shell)
}

/// `[ε, κ]` per shell, flattened.
pub fn shell_kappa(lambda: f64, max_shell: usize) -> Result<Vec<f64>> {
    let p = params(lambda, max_shell)?;
    let h = hamiltonian(&p);
    let s = diagonalize(&h)?;
    let rows = metrics_for(&p, &h, &s, &SweepOptions::default())?;
    Ok(rows
        .iter()
        .filter(|r| matches!(r.kind, RowKind::Shell(_)))
        .flat_map(|r| [r.epsilon, r.kappa.unwrap_or(f64::NAN)])
        .collect())
}

/// `[E_i, P(E_i)]` of the basis state `|n1, n2⟩`, flattened.
pub fn state_strength(lambda: f64, max_shell: usize, n1: usize, n2: usize) -> Result<Vec<f64>> {
    let h = hamiltonian(&params(lambda, max_shell)?);
    let s = diagonalize(&h)?;
    let sf = strength_function(&s, FockState::new(n1, n2))?;
    Ok(sf.points.iter().flat_map(|&(e, p)| [e, p]).collect())
}

/// `[K_p, ⟨ΔJ'⟩]` on the common in-S set; NaN where the set is empty.
pub fn jprime_trend(lambda: f64, max_shell: usize, kind: &str, p_sizes: &[usize]) -> Result<Vec<f64>> {
    let kind = IntegralKind::parse(kind)?;
    let h = hamiltonian(&params(lambda, max_shell)?);
    let opts = StudyOptions {
        p_sizes: p_sizes.to_vec(),
        integrals: vec![kind],
        epsilon: 1e-3,
    };
    let study = delta_jprime_study(&h, &opts)?;
    Ok(study
        .common_trend(kind)
        .into_iter()
        .flat_map(|(kp, v)| [kp as f64, v.unwrap_or(f64::NAN)])
        .collect())
}

fn js<T>(r: Result<T>) -> std::result::Result<T, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = shellKappa)]
pub fn shell_kappa_js(lambda: f64, max_shell: usize) -> std::result::Result<Vec<f64>, JsError> {
    js(shell_kappa(lambda, max_shell))
}

#[wasm_bindgen(js_name = stateStrength)]
pub fn state_strength_js(
    lambda: f64,
    max_shell: usize,
    n1: usize,
    n2: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    js(state_strength(lambda, max_shell, n1, n2))
}

#[wasm_bindgen(js_name = jprimeTrend)]
pub fn jprime_trend_js(
    lambda: f64,
    max_shell: usize,
    kind: &str,
    p_sizes: Vec<usize>,
) -> std::result::Result<Vec<f64>, JsError> {
    js(jprime_trend(lambda, max_shell, kind, &p_sizes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_vanishes_without_coupling() {
        let v = shell_kappa(0.0, 6).unwrap();
        assert_eq!(v.len(), 14);
        assert!(v.chunks(2).all(|c| c[1] == 0.0));
    }

    #[test]
    fn strength_is_normalized() {
        let v = state_strength(0.1, 10, 2, 3).unwrap();
        let total: f64 = v.chunks(2).map(|c| c[1]).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trend_and_limits() {
        let v = jprime_trend(0.1, 10, "N", &[2, 10]).unwrap();
        assert_eq!(v[2], 10.0);
        assert!(v[3] < 1e-8);
        assert!(state_strength(0.1, MAX_DEMO_SHELL + 1, 0, 0).is_err());
        assert!(jprime_trend(0.1, 6, "x", &[1]).is_err());
    }
}
