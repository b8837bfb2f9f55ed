use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::ceil_tol;
use super::rates::RateParams;

/// How the level `L` of the index set is derived from a tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum LevelRule {
    /// `L = max(ceil(log2(1/eps)), 1)`.
    #[default]
    Plain,
    /// `theta = max(xi1/alpha1, xi2/alpha2)`; adds a log-log term when both
    /// ratios coincide.
    Corrected,
}

/// Tolerance or explicit level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum LevelSpec {
    Tolerance(f64),
    Explicit(u32),
}

/// Downward-closed triangle `{xi1 l1 + xi2 l2 <= L}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IndexSet {
    members: Vec<(usize, usize)>,
    xi1: f64,
    xi2: f64,
    level: u32,
}

const SLACK: f64 = 1e-12;

impl IndexSet {
    /// Enumerates the triangle for the given slopes and level.
    pub fn triangle(xi1: f64, xi2: f64, level: u32) -> Result<Self> {
        if !(xi1 > 0.0 && xi2 > 0.0 && xi1.is_finite() && xi2.is_finite()) {
            return Err(Error::config(format!(
                "index set slopes must be positive, got ({xi1}, {xi2})"
            )));
        }
        let cap = level as f64 * (1.0 + SLACK) + SLACK;
        let max1 = (cap / xi1).floor() as usize;
        let mut members = Vec::new();
        for l1 in 0..=max1 {
            let rest = cap - xi1 * l1 as f64;
            let max2 = (rest / xi2).floor() as usize;
            members.extend((0..=max2).map(|l2| (l1, l2)));
        }
        Ok(Self { members, xi1, xi2, level })
    }

    /// Members in lexicographic order.
    pub fn members(&self) -> &[(usize, usize)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, index: (usize, usize)) -> bool {
        self.members.binary_search(&index).is_ok()
    }

    pub fn xi(&self) -> (f64, f64) {
        (self.xi1, self.xi2)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Largest `l1` and `l2` appearing in the set.
    pub fn extent(&self) -> (usize, usize) {
        self.members
            .iter()
            .fold((0, 0), |(a, b), &(l1, l2)| (a.max(l1), b.max(l2)))
    }

    /// Every member's west, south and south-west neighbours (clamped at zero)
    /// are members too.
    pub fn is_downward_closed(&self) -> bool {
        let set: BTreeSet<_> = self.members.iter().copied().collect();
        self.members.iter().all(|&(l1, l2)| {
            let w = (l1.saturating_sub(1), l2);
            let s = (l1, l2.saturating_sub(1));
            let sw = (l1.saturating_sub(1), l2.saturating_sub(1));
            set.contains(&w) && set.contains(&s) && set.contains(&sw)
        })
    }
}

/// Level from a tolerance according to `rule`.
pub(crate) fn level_for(epsilon: f64, rates: &RateParams, xi: (f64, f64)) -> Result<u32> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::domain(format!("tolerance must lie in (0, 1), got {epsilon}")));
    }
    let level = match rates.level_rule {
        LevelRule::Plain => ceil_tol(-epsilon.log2()),
        LevelRule::Corrected => {
            let r1 = xi.0 / rates.alpha1;
            let r2 = xi.1 / rates.alpha2;
            let theta = r1.max(r2);
            let base = (2.0 / epsilon).log2();
            if (r1 - r2).abs() <= 1e-12 * theta {
                ceil_tol(theta * (base + (theta * base).log2()))
            } else {
                ceil_tol(theta * base)
            }
        }
    };
    Ok(level.max(1.0) as u32)
}

/// Index set with `xi_j = alpha_j + (1 - B_j) / 10`.
pub fn build_index_set(level: LevelSpec, rates: &RateParams) -> Result<IndexSet> {
    rates.validate()?;
    let xi1 = rates.alpha1 + (1.0 - rates.b1) / 10.0;
    let xi2 = rates.alpha2 + (1.0 - rates.b2) / 10.0;
    if !(xi1 > 0.0 && xi2 > 0.0) {
        return Err(Error::config(format!(
            "index set slopes must be positive, got ({xi1}, {xi2})"
        )));
    }
    let l = match level {
        LevelSpec::Tolerance(eps) => level_for(eps, rates, (xi1, xi2))?,
        LevelSpec::Explicit(l) if l >= 1 => l,
        LevelSpec::Explicit(l) => return Err(Error::domain(format!("level must be >= 1, got {l}"))),
    };
    IndexSet::triangle(xi1, xi2, l)
}
