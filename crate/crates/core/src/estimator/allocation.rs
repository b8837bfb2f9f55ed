use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::ceil_tol;
use super::index_set::IndexSet;
use super::rates::{variance_model, RateParams};

/// Samples per multi-index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Allocation {
    #[serde(with = "pair_map")]
    pub counts: BTreeMap<(usize, usize), u64>,
    pub epsilon: f64,
}

impl Allocation {
    pub fn get(&self, index: (usize, usize)) -> Option<u64> {
        self.counts.get(&index).copied()
    }

    pub fn total_samples(&self) -> u64 {
        self.counts.values().sum()
    }
}

/// `m_l = ceil(eps^-2 sqrt(V_l / C_l) sum_k sqrt(V_k C_k))` for arbitrary
/// variance and cost sequences.
pub fn optimal_counts(epsilon: f64, variances: &[f64], costs: &[f64]) -> Result<Vec<u64>> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::domain(format!("tolerance must be positive, got {epsilon}")));
    }
    if variances.len() != costs.len() {
        return Err(Error::Dimension { expected: variances.len(), actual: costs.len() });
    }
    let total: f64 = variances.iter().zip(costs).map(|(v, c)| (v * c).sqrt()).sum();
    let scale = total / (epsilon * epsilon);
    variances
        .iter()
        .zip(costs)
        .map(|(v, c)| {
            let m = ceil_tol(scale * (v / c).sqrt());
            if !m.is_finite() || m > u64::MAX as f64 / 2.0 {
                return Err(Error::domain(format!("sample count overflows: {m}")));
            }
            Ok((m as u64).max(1))
        })
        .collect()
}

/// Sample counts over `set` using the log-free cost `2^{l1 + l2}`.
pub fn allocate_samples(epsilon: f64, set: &IndexSet, rates: &RateParams) -> Result<Allocation> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::domain(format!("tolerance must lie in (0, 1), got {epsilon}")));
    }
    let v: Vec<f64> = set.members().iter().map(|&m| variance_model(m, rates)).collect();
    let c: Vec<f64> = set.members().iter().map(|&(a, b)| ((a + b) as f64).exp2()).collect();
    let m = optimal_counts(epsilon, &v, &c)?;
    Ok(Allocation {
        counts: set.members().iter().copied().zip(m).collect(),
        epsilon,
    })
}

pub(crate) mod pair_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        l1: usize,
        l2: usize,
        m: u64,
    }

    pub fn serialize<S: Serializer>(map: &BTreeMap<(usize, usize), u64>, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<Entry> = map.iter().map(|(&(l1, l2), &m)| Entry { l1, l2, m }).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<(usize, usize), u64>, D::Error> {
        let v = Vec::<Entry>::deserialize(d)?;
        Ok(v.into_iter().map(|e| ((e.l1, e.l2), e.m)).collect())
    }
}
