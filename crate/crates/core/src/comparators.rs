//! Per-objective comparison of action return distributions.
//!
//! Every comparator works on the z-scored quantile matrix of one objective
//! (mean and population standard deviation taken over all actions and all
//! quantile rows jointly), assigns each action a scalar score, and declares
//! `a` dominant over `a'` when `score(a) - score(a') > ε`.
//!
//! * Quantile dominance: the score is the negative Wasserstein-1 distance of
//!   the action's quantile column to the quantile-wise maximum over actions.
//! * CVaR: mean of the lowest `⌈α·K⌉` quantile rows.
//! * Mean–variance: column mean minus `λ` times column variance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ActionMatrix, BoolMatrix};
use crate::scalar::{mean, Scalar};

/// Standard deviations below this are treated as zero spread.
pub const ZERO_SPREAD: f64 = 1e-12;

/// `K × A` table of return quantiles for one objective at one state.
///
/// Row `k` belongs to quantile fraction `fractions[k]`, column `a` to action `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileMatrix<T> {
    fractions: Vec<T>,
    n_actions: usize,
    /// Row-major.
    values: Vec<T>,
}

impl<T: Scalar> QuantileMatrix<T> {
    pub fn from_rows(fractions: Vec<T>, rows: Vec<Vec<T>>) -> Result<Self> {
        if rows.len() != fractions.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} fractions but {} rows",
                fractions.len(),
                rows.len()
            )));
        }
        let n_actions = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_actions) {
            return Err(Error::ShapeMismatch("ragged quantile rows".into()));
        }
        Self::from_raw(fractions, n_actions, rows.into_iter().flatten().collect())
    }

    /// One column per action, each of length `fractions.len()`.
    pub fn from_columns(fractions: Vec<T>, columns: &[Vec<T>]) -> Result<Self> {
        let k = fractions.len();
        if columns.iter().any(|c| c.len() != k) {
            return Err(Error::ShapeMismatch(format!(
                "columns must have {k} quantiles"
            )));
        }
        let mut values = Vec::with_capacity(k * columns.len());
        for row in 0..k {
            values.extend(columns.iter().map(|c| c[row]));
        }
        Self::from_raw(fractions, columns.len(), values)
    }

    pub(crate) fn from_raw(fractions: Vec<T>, n_actions: usize, values: Vec<T>) -> Result<Self> {
        if fractions.is_empty() || n_actions == 0 {
            return Err(Error::Empty);
        }
        if values.len() != fractions.len() * n_actions {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values, got {}",
                fractions.len() * n_actions,
                values.len()
            )));
        }
        let valid_fractions = fractions.iter().all(|&t| t > T::zero() && t < T::one())
            && fractions.windows(2).all(|w| w[0] < w[1]);
        if !valid_fractions {
            return Err(Error::Config(
                "quantile fractions must be strictly increasing in (0, 1)".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("quantile matrix has non-finite entries".into()));
        }
        Ok(Self {
            fractions,
            n_actions,
            values,
        })
    }

    /// Midpoint fractions `(2k - 1) / 2K`, `k = 1..=K`.
    pub fn midpoint_fractions(k: usize) -> Vec<T> {
        (1..=k)
            .map(|i| T::of_usize(2 * i - 1) / T::of_usize(2 * k))
            .collect()
    }

    pub fn n_quantiles(&self) -> usize {
        self.fractions.len()
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn fractions(&self) -> &[T] {
        &self.fractions
    }

    #[inline]
    pub fn get(&self, k: usize, a: usize) -> T {
        self.values[k * self.n_actions + a]
    }

    pub fn row(&self, k: usize) -> &[T] {
        &self.values[k * self.n_actions..(k + 1) * self.n_actions]
    }

    pub fn column(&self, a: usize) -> Vec<T> {
        (0..self.n_quantiles()).map(|k| self.get(k, a)).collect()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Entry-wise `scale * v + shift`.
    pub fn affine(&self, scale: T, shift: T) -> Self {
        self.map_values(|v| scale * v + shift)
    }

    fn map_values(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            fractions: self.fractions.clone(),
            n_actions: self.n_actions,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Keep only the listed action columns, in the given order.
    pub fn select_actions(&self, actions: &[usize]) -> Result<Self> {
        if let Some(&bad) = actions.iter().find(|&&a| a >= self.n_actions) {
            return Err(Error::Index {
                what: "action",
                index: bad,
                limit: self.n_actions,
            });
        }
        let columns: Vec<Vec<T>> = actions.iter().map(|&a| self.column(a)).collect();
        Self::from_columns(self.fractions.clone(), &columns)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComparatorKind {
    #[serde(rename = "QD")]
    QuantileDominance,
    #[serde(rename = "CVaR")]
    CVaR,
    #[serde(rename = "MV")]
    MeanVariance,
}

impl ComparatorKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::QuantileDominance => "QD",
            Self::CVaR => "CVaR",
            Self::MeanVariance => "MV",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparatorConfig<T> {
    pub kind: ComparatorKind,
    /// Indifference tolerance on the normalized score scale.
    pub epsilon: T,
    /// Lower-tail fraction, CVaR only.
    pub cvar_alpha: Option<T>,
    /// Variance penalty, mean–variance only.
    pub mv_lambda: Option<T>,
    /// Lower bound on the normalizing spread. Zero gives plain z-scores.
    pub min_spread: T,
}

impl<T: Scalar> ComparatorConfig<T> {
    pub const DEFAULT_CVAR_ALPHA: f64 = 0.25;
    pub const DEFAULT_MV_LAMBDA: f64 = 1.0;

    pub fn qd(epsilon: T) -> Self {
        Self {
            kind: ComparatorKind::QuantileDominance,
            epsilon,
            cvar_alpha: None,
            mv_lambda: None,
            min_spread: T::zero(),
        }
    }

    pub fn cvar(epsilon: T, alpha: T) -> Self {
        Self {
            kind: ComparatorKind::CVaR,
            cvar_alpha: Some(alpha),
            ..Self::qd(epsilon)
        }
    }

    pub fn mean_variance(epsilon: T, lambda: T) -> Self {
        Self {
            kind: ComparatorKind::MeanVariance,
            mv_lambda: Some(lambda),
            ..Self::qd(epsilon)
        }
    }

    pub fn with_min_spread(mut self, min_spread: T) -> Self {
        self.min_spread = min_spread;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= T::zero()) {
            return Err(Error::Config("epsilon must be >= 0".into()));
        }
        if !(self.min_spread >= T::zero()) {
            return Err(Error::Config("min_spread must be >= 0".into()));
        }
        match self.kind {
            ComparatorKind::QuantileDominance => {}
            ComparatorKind::CVaR => match self.cvar_alpha {
                Some(a) if a > T::zero() && a <= T::one() => {}
                Some(_) => return Err(Error::Config("cvar_alpha must lie in (0, 1]".into())),
                None => return Err(Error::Config("CVaR comparator needs cvar_alpha".into())),
            },
            ComparatorKind::MeanVariance => match self.mv_lambda {
                Some(l) if l >= T::zero() => {}
                Some(_) => return Err(Error::Config("mv_lambda must be >= 0".into())),
                None => return Err(Error::Config("MV comparator needs mv_lambda".into())),
            },
        }
        Ok(())
    }
}

/// Dominance bits produced by one comparator call.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseDecision {
    pub dom: BoolMatrix,
    pub dom_by: BoolMatrix,
}

/// Z-score over all entries with population standard deviation.
/// A spread below [`ZERO_SPREAD`] yields the all-zero matrix.
pub fn zscore_normalize<T: Scalar>(m: &QuantileMatrix<T>) -> QuantileMatrix<T> {
    normalize_with_floor(m, T::zero())
}

fn normalize_with_floor<T: Scalar>(m: &QuantileMatrix<T>, min_spread: T) -> QuantileMatrix<T> {
    let mu = mean(m.values());
    let var = m.values().iter().map(|&v| (v - mu) * (v - mu)).sum::<T>() / T::of_usize(m.values.len());
    let std = var.sqrt();
    if std < T::of(ZERO_SPREAD) {
        return m.map_values(|_| T::zero());
    }
    let scale = std.max(min_spread);
    m.map_values(|v| (v - mu) / scale)
}

/// Quantile-wise maximum over actions.
pub fn ideal_profile<T: Scalar>(m_norm: &QuantileMatrix<T>) -> Vec<T> {
    (0..m_norm.n_quantiles())
        .map(|k| {
            m_norm
                .row(k)
                .iter()
                .copied()
                .fold(T::neg_infinity(), T::max)
        })
        .collect()
}

/// Mean absolute gap between each action's column and `ideal`.
pub fn w1_to_ideal<T: Scalar>(m_norm: &QuantileMatrix<T>, ideal: &[T]) -> Vec<T> {
    let k = T::of_usize(m_norm.n_quantiles());
    (0..m_norm.n_actions())
        .map(|a| {
            ideal
                .iter()
                .enumerate()
                .map(|(row, &z)| (m_norm.get(row, a) - z).abs())
                .sum::<T>()
                / k
        })
        .collect()
}

/// Per-action comparator scores on the normalized matrix; higher is better.
pub fn scores<T: Scalar>(m: &QuantileMatrix<T>, cfg: &ComparatorConfig<T>) -> Result<Vec<T>> {
    cfg.validate()?;
    let norm = normalize_with_floor(m, cfg.min_spread);
    Ok(match cfg.kind {
        ComparatorKind::QuantileDominance => {
            let ideal = ideal_profile(&norm);
            w1_to_ideal(&norm, &ideal).into_iter().map(|w| -w).collect()
        }
        ComparatorKind::CVaR => {
            let alpha = cfg.cvar_alpha.expect("validated");
            let tail = (alpha * T::of_usize(norm.n_quantiles()))
                .ceil()
                .to_usize()
                .unwrap_or(1)
                .clamp(1, norm.n_quantiles());
            (0..norm.n_actions())
                .map(|a| (0..tail).map(|k| norm.get(k, a)).sum::<T>() / T::of_usize(tail))
                .collect()
        }
        ComparatorKind::MeanVariance => {
            let lambda = cfg.mv_lambda.expect("validated");
            (0..norm.n_actions())
                .map(|a| {
                    let col = norm.column(a);
                    let mu = mean(&col);
                    let var = col.iter().map(|&v| (v - mu) * (v - mu)).sum::<T>()
                        / T::of_usize(col.len());
                    mu - lambda * var
                })
                .collect()
        }
    })
}

/// Antisymmetric quantile-dominance matrix: `out[a][a'] = score(a) - score(a')`.
pub fn qd<T: Scalar>(m: &QuantileMatrix<T>) -> ActionMatrix<T> {
    let s = scores(m, &ComparatorConfig::qd(T::zero())).expect("QD config is always valid");
    ActionMatrix::from_fn(s.len(), |a, b| s[a] - s[b])
}

/// Dominance decisions for the pairs selected by `mask`; other pairs stay zero.
pub fn classify_pairs<T: Scalar>(
    m: &QuantileMatrix<T>,
    cfg: &ComparatorConfig<T>,
    mask: &BoolMatrix,
) -> Result<PairwiseDecision> {
    let n = m.n_actions();
    if mask.size() != n {
        return Err(Error::ShapeMismatch(format!(
            "mask is {}x{}, matrix has {} actions",
            mask.size(),
            mask.size(),
            n
        )));
    }
    let mut dom = BoolMatrix::zeros(n);
    let mut dom_by = BoolMatrix::zeros(n);
    if !mask.any() {
        cfg.validate()?;
        return Ok(PairwiseDecision { dom, dom_by });
    }
    let s = scores(m, cfg)?;
    for a in 0..n {
        for b in 0..n {
            if a == b || !mask.get(a, b) {
                continue;
            }
            let diff = s[a] - s[b];
            if diff > cfg.epsilon {
                dom.set(a, b, true);
            } else if -diff > cfg.epsilon {
                dom_by.set(a, b, true);
            }
        }
    }
    Ok(PairwiseDecision { dom, dom_by })
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn matrix() -> impl Strategy<Value = QuantileMatrix<f64>> {
        (1usize..9, 1usize..7).prop_flat_map(|(k, a)| {
            proptest::collection::vec(-10.0f64..10.0, k * a).prop_map(move |v| {
                QuantileMatrix::from_raw(QuantileMatrix::midpoint_fractions(k), a, v).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn qd_is_antisymmetric(m in matrix()) {
            let q = qd(&m);
            for a in 0..m.n_actions() {
                for b in 0..m.n_actions() {
                    prop_assert!((q.get(a, b) + q.get(b, a)).abs() <= 1e-9);
                }
            }
        }

        #[test]
        fn zero_w1_iff_attains_every_row_max(m in matrix()) {
            let z = zscore_normalize(&m);
            let ideal = ideal_profile(&z);
            let w = w1_to_ideal(&z, &ideal);
            for a in 0..m.n_actions() {
                prop_assert!(w[a] >= 0.0);
                let on_top = (0..m.n_quantiles()).all(|k| z.get(k, a) == ideal[k]);
                prop_assert_eq!(w[a] == 0.0, on_top);
            }
        }

        #[test]
        fn single_call_never_conflicts(m in matrix(), eps in 0.0f64..0.5, kind in 0usize..3) {
            let cfg = match kind {
                0 => ComparatorConfig::qd(eps),
                1 => ComparatorConfig::cvar(eps, 0.25),
                _ => ComparatorConfig::mean_variance(eps, 1.0),
            };
            let n = m.n_actions();
            let d = classify_pairs(&m, &cfg, &BoolMatrix::ones(n)).unwrap();
            prop_assert!(!d.dom.and(&d.dom_by).any());
            for a in 0..n {
                prop_assert!(!d.dom.get(a, a) && !d.dom_by.get(a, a));
                for b in 0..n {
                    prop_assert_eq!(d.dom.get(a, b), d.dom_by.get(b, a));
                }
            }
        }

        #[test]
        fn single_quantile_zero_tolerance_is_scalar_order(v in proptest::collection::vec(-5i32..5, 1..6)) {
            let values: Vec<f64> = v.iter().map(|&x| f64::from(x)).collect();
            let n = values.len();
            let m = QuantileMatrix::from_raw(vec![0.5], n, values.clone()).unwrap();
            let d = classify_pairs(&m, &ComparatorConfig::qd(0.0), &BoolMatrix::ones(n)).unwrap();
            for a in 0..n {
                for b in 0..n {
                    prop_assert_eq!(d.dom.get(a, b), values[a] > values[b]);
                }
            }
        }
    }
}
