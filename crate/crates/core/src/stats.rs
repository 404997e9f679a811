//! Closed-form sample-complexity bounds, per-step precision budgets, and
//! chain-success decay.
//!
//! All logarithms are natural: the bounds come from
//! `|P| (1 - eps)^m <= |P| exp(-eps m) <= delta`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Values within this relative distance above an integer are rounded down
/// by [`ceil_count`]. Inputs such as `delta = 0.367879441` stand for `1/e`
/// at nine significant digits and must not bump `m` by one.
pub const CEIL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("{name} must lie in (0, 1), got {value}")]
    OpenUnitInterval { name: &'static str, value: f64 },
    #[error("{name} must be positive, got {value}")]
    Positive { name: &'static str, value: f64 },
    #[error("step error {value} at position {index} is outside [0, 1)")]
    StepError { index: usize, value: f64 },
}

fn open_unit(name: &'static str, value: f64) -> Result<(), StatsError> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(StatsError::OpenUnitInterval { name, value })
    }
}

fn positive(name: &'static str, value: f64) -> Result<(), StatsError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(StatsError::Positive { name, value })
    }
}

/// Ceiling that ignores floating-point noise just above an integer.
pub fn ceil_count(x: f64) -> u64 {
    let nearest = x.round();
    if x > nearest && x - nearest <= CEIL_TOLERANCE * nearest.abs().max(1.0) {
        return nearest.max(0.0) as u64;
    }
    x.ceil().max(0.0) as u64
}

/// `ceil(ln(|P| / delta) / epsilon)`.
///
/// `epsilon` is only required to be positive so that the degenerate
/// single-hypothesis identities (`epsilon = 1`) can be evaluated; `delta` must
/// lie in (0, 1).
pub fn sample_complexity_lemma(class_size: u64, epsilon: f64, delta: f64) -> Result<u64, StatsError> {
    positive("class_size", class_size as f64)?;
    positive("epsilon", epsilon)?;
    open_unit("delta", delta)?;
    Ok(ceil_count((class_size as f64 / delta).ln() / epsilon))
}

/// `ceil(ln(|P| k_max / delta) * 2 k_max / epsilon)`.
pub fn sample_complexity_bottomup(class_size: u64, k_max: u64, epsilon: f64, delta: f64) -> Result<u64, StatsError> {
    positive("class_size", class_size as f64)?;
    positive("k_max", k_max as f64)?;
    positive("epsilon", epsilon)?;
    open_unit("delta", delta)?;
    let k = k_max as f64;
    Ok(ceil_count((class_size as f64 * k / delta).ln() * 2.0 * k / epsilon))
}

/// `ceil(ln(|P| k_max / delta) * k_max / epsilon)`.
pub fn sample_complexity_topdown(class_size: u64, k_max: u64, epsilon: f64, delta: f64) -> Result<u64, StatsError> {
    positive("class_size", class_size as f64)?;
    positive("k_max", k_max as f64)?;
    positive("epsilon", epsilon)?;
    open_unit("delta", delta)?;
    let k = k_max as f64;
    Ok(ceil_count((class_size as f64 * k / delta).ln() * k / epsilon))
}

/// Probability that a chain of independent steps succeeds: the exact product
/// `prod(1 - eps_i)` and its exponential approximation `exp(-sum eps_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSuccess {
    pub exact: f64,
    pub approx: f64,
}

pub fn chain_success(step_errors: &[f64]) -> Result<ChainSuccess, StatsError> {
    for (index, &value) in step_errors.iter().enumerate() {
        if !(0.0..1.0).contains(&value) {
            return Err(StatsError::StepError { index, value });
        }
    }
    let exact = step_errors.iter().map(|e| 1.0 - e).product();
    let approx = (-step_errors.iter().sum::<f64>()).exp();
    Ok(ChainSuccess { exact, approx })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetMode {
    BottomUp,
    TopDown,
    LemmaOnly,
}

/// Precision parameters driving a critic: target `(epsilon, delta)`, the
/// decomposition cap `k_max`, the sample count `m`, and the per-step budgets
/// the search allots to each vertex or function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionBudget {
    pub mode: BudgetMode,
    pub epsilon: f64,
    pub delta: f64,
    pub k_max: u64,
    pub class_size: u64,
    pub m: u64,
    pub per_vertex_epsilon: f64,
    pub per_vertex_delta: f64,
}

impl PrecisionBudget {
    /// Computes `m` and the per-step budgets for `mode`. In lemma-only mode
    /// `k_max` is ignored and the per-step budgets equal `(epsilon, delta)`.
    pub fn new(mode: BudgetMode, epsilon: f64, delta: f64, k_max: u64, class_size: u64) -> Result<Self, StatsError> {
        open_unit("epsilon", epsilon)?;
        open_unit("delta", delta)?;
        let (m, k_max, per_vertex_epsilon, per_vertex_delta) = match mode {
            BudgetMode::BottomUp => (
                sample_complexity_bottomup(class_size, k_max, epsilon, delta)?,
                k_max,
                epsilon / (2.0 * k_max as f64),
                delta / k_max as f64,
            ),
            BudgetMode::TopDown => (
                sample_complexity_topdown(class_size, k_max, epsilon, delta)?,
                k_max,
                epsilon / k_max as f64,
                delta / k_max as f64,
            ),
            BudgetMode::LemmaOnly => (sample_complexity_lemma(class_size, epsilon, delta)?, 1, epsilon, delta),
        };
        Ok(PrecisionBudget {
            mode,
            epsilon,
            delta,
            k_max,
            class_size,
            m,
            per_vertex_epsilon,
            per_vertex_delta,
        })
    }

    /// Overrides `m` with a larger sample count.
    pub fn with_samples(mut self, m: u64) -> Self {
        self.m = self.m.max(m);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const E_INV: f64 = 0.36787944117144233;

    #[test]
    fn lemma_worked_values() {
        assert_eq!(sample_complexity_lemma(1, 1.0, E_INV), Ok(1));
        assert_eq!(sample_complexity_lemma(100_000, 0.1, 0.01), Ok(162));
        assert_eq!(sample_complexity_lemma(1000, 0.05, 0.001), Ok(277));
        // nine-digit rendering of 1/e
        assert_eq!(sample_complexity_lemma(1, 1.0, 0.367879441), Ok(1));
    }

    #[test]
    fn bottomup_worked_values() {
        assert_eq!(sample_complexity_bottomup(100, 5, 0.2, 0.05), Ok(461));
        assert_eq!(sample_complexity_bottomup(1, 1, 2.0, E_INV), Ok(1));
        // ln(20000) * 100 = 990.349
        assert_eq!(sample_complexity_bottomup(100, 10, 0.2, 0.05), Ok(991));
    }

    #[test]
    fn topdown_worked_values() {
        assert_eq!(sample_complexity_topdown(100, 5, 0.2, 0.05), Ok(231));
        assert_eq!(sample_complexity_topdown(1, 1, 1.0, E_INV), Ok(1));
        let bu = sample_complexity_bottomup(100, 5, 0.2, 0.05).unwrap();
        let td = sample_complexity_topdown(100, 5, 0.2, 0.05).unwrap();
        assert!(td == bu.div_ceil(2) || td + 1 == bu.div_ceil(2));
    }

    #[test]
    fn domain_errors() {
        assert!(sample_complexity_lemma(0, 0.1, 0.1).is_err());
        assert!(sample_complexity_lemma(10, 0.0, 0.1).is_err());
        assert!(sample_complexity_lemma(10, 0.1, 1.0).is_err());
        assert!(sample_complexity_topdown(10, 0, 0.1, 0.1).is_err());
        assert!(chain_success(&[0.1, 1.0]).is_err());
        assert!(chain_success(&[-0.1]).is_err());
        assert!(PrecisionBudget::new(BudgetMode::BottomUp, 1.5, 0.1, 3, 10).is_err());
    }

    #[test]
    fn chain_success_values() {
        assert_eq!(
            chain_success(&[]).unwrap(),
            ChainSuccess {
                exact: 1.0,
                approx: 1.0
            }
        );
        let c = chain_success(&[0.1; 10]).unwrap();
        assert!((c.exact - 0.34868).abs() < 5e-6);
        assert!((c.approx - 0.36788).abs() < 5e-6);
        let c = chain_success(&[0.0, 0.0]).unwrap();
        assert!((c.exact - 1.0).abs() < 1e-12 && (c.approx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn budget_per_vertex_values() {
        let b = PrecisionBudget::new(BudgetMode::BottomUp, 0.2, 0.05, 5, 100).unwrap();
        assert_eq!(b.m, 461);
        assert!((b.per_vertex_epsilon - 0.02).abs() < 1e-12);
        assert!((b.per_vertex_delta - 0.01).abs() < 1e-12);
        let b = PrecisionBudget::new(BudgetMode::TopDown, 0.2, 0.05, 5, 100).unwrap();
        assert_eq!(b.m, 231);
        assert!((b.per_vertex_epsilon - 0.04).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn exact_never_exceeds_approx(errs in prop::collection::vec(0.0f64..0.999, 0..40)) {
            let c = chain_success(&errs).unwrap();
            prop_assert!(c.exact <= c.approx + 1e-12);
        }

        #[test]
        fn m_is_monotone(
            p in 1u64..10_000,
            k in 1u64..20,
            eps in 0.01f64..0.9,
            delta in 0.001f64..0.5,
        ) {
            let bu = |p, k, e, d| sample_complexity_bottomup(p, k, e, d).unwrap();
            prop_assert!(bu(p, k, eps, delta) <= bu(p + 1, k, eps, delta));
            prop_assert!(bu(p, k, eps, delta) <= bu(p, k + 1, eps, delta));
            prop_assert!(bu(p, k, eps, delta) >= bu(p, k, eps * 1.1, delta));
            prop_assert!(bu(p, k, eps, delta) >= bu(p, k, eps, delta * 1.1));
            let td = |p, k, e, d| sample_complexity_topdown(p, k, e, d).unwrap();
            prop_assert!(td(p, k, eps, delta) <= td(p + 1, k + 1, eps, delta));
            let lm = |p, e, d| sample_complexity_lemma(p, e, d).unwrap();
            prop_assert!(lm(p, eps, delta) <= lm(p + 1, eps, delta));
            prop_assert!(lm(p, eps, delta) >= lm(p, eps * 1.1, delta * 1.1));
        }

        #[test]
        fn single_hypothesis_bound(eps in 0.01f64..0.99, delta in 0.001f64..0.99) {
            let classic = ceil_count((1.0 / delta).ln() / eps);
            prop_assert_eq!(sample_complexity_lemma(1, eps, delta).unwrap(), classic);
        }

        #[test]
        fn per_vertex_budget_fits_combined_m(
            p in 1u64..10_000,
            k in 1u64..20,
            eps in 0.01f64..0.9,
            delta in 0.001f64..0.5,
            top_down in any::<bool>(),
        ) {
            let mode = if top_down { BudgetMode::TopDown } else { BudgetMode::BottomUp };
            let b = PrecisionBudget::new(mode, eps, delta, k, p).unwrap();
            let m_lemma = sample_complexity_lemma(p, b.per_vertex_epsilon, b.per_vertex_delta).unwrap();
            prop_assert!(m_lemma <= b.m, "{} > {}", m_lemma, b.m);
        }
    }
}
