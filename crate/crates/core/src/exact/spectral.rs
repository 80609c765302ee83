//! Angular part of the limit measure of `F` on the unit sphere of the
//! aggregation norm.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::enumerate::GraphEnumerator;
use super::{ExactEngine, Method, Prepared};
use crate::error::{Error, Result};
use crate::model::{AggregationNorm, MarketScenario};
use crate::numeric::{pow0, NeumaierSum};

/// Points closer than this in every coordinate are merged.
const POINT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralAtom {
    pub point: Vec<f64>,
    pub mass: f64,
}

/// Discrete probability measure on the unit sphere. `total` is the
/// unnormalized mass, equal to the systemic constant under the same norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    pub atoms: Vec<SpectralAtom>,
    pub total: f64,
    pub norm: AggregationNorm,
    pub method: Method,
}

impl SpectralMeasure {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_probability(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Probability of the atoms whose point satisfies `pred`.
    pub fn mass_where(&self, pred: impl Fn(&[f64]) -> bool) -> f64 {
        self.atoms
            .iter()
            .filter(|a| pred(&a.point))
            .map(|a| a.mass)
            .sum()
    }

    /// `E[theta_i^alpha]` under the measure.
    pub fn coordinate_moment(&self, i: usize, alpha: f64) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.mass * pow0(a.point[i], alpha))
            .sum()
    }
}

type Key = Vec<i64>;

fn key_of(point: &[f64]) -> Key {
    point.iter().map(|x| (x / POINT_TOL).round() as i64).collect()
}

#[derive(Default)]
struct Accumulator {
    atoms: BTreeMap<Key, (Vec<f64>, NeumaierSum)>,
}

impl Accumulator {
    fn add(&mut self, vector: &[f64], norm: AggregationNorm, alpha: f64, weight: f64) {
        let n = norm.norm(vector);
        if !(n > 0.0) || weight == 0.0 {
            return;
        }
        let point: Vec<f64> = vector.iter().map(|x| x / n).collect();
        let entry = self
            .atoms
            .entry(key_of(&point))
            .or_insert_with(|| (point, NeumaierSum::new()));
        entry.1.add(weight * n.powf(alpha));
    }

    fn merge(&mut self, other: Accumulator) {
        for (k, (point, mass)) in other.atoms {
            self.atoms
                .entry(k)
                .or_insert_with(|| (point, NeumaierSum::new()))
                .1
                .add(mass.value());
        }
    }

    fn finish(self, norm: AggregationNorm, method: Method) -> Result<SpectralMeasure> {
        let total: f64 = self.atoms.values().map(|(_, m)| m.value()).sum();
        if !(total > 0.0) {
            return Err(Error::Degenerate);
        }
        let atoms = self
            .atoms
            .into_values()
            .map(|(point, m)| SpectralAtom {
                point,
                mass: m.value() / total,
            })
            .collect();
        Ok(SpectralMeasure {
            atoms,
            total,
            norm,
            method,
        })
    }
}

/// Independent claims: the extreme event is one large claim, so the
/// measure sits on normalized columns `A e_j` over edge patterns `b`.
pub(super) fn independent(engine: &ExactEngine, s: &MarketScenario) -> Result<SpectralMeasure> {
    let m = Prepared::new(s)?;
    let (q, d) = (m.p.agents(), m.p.objects());
    if q > engine.config.sphere_cap_agents {
        return Err(Error::CapExceeded {
            what: "sphere enumeration (agents)",
            size: q as u64,
            cap: engine.config.sphere_cap_agents as u64,
        });
    }
    let mut acc = Accumulator::default();
    let mut column = vec![0.0; q];
    for j in 0..d {
        for mask in 1u64..(1 << q) {
            let mut prob = m.scales[j];
            for i in 0..q {
                let p = m.p.get(i, j);
                prob *= if mask >> i & 1 == 1 { p } else { 1.0 - p };
            }
            if prob == 0.0 {
                continue;
            }
            let k = mask.count_ones() as usize;
            for (i, c) in column.iter_mut().enumerate() {
                *c = if mask >> i & 1 == 1 {
                    s.weights.weight(i, j, k)
                } else {
                    0.0
                };
            }
            acc.add(&column, s.norm, m.alpha, prob);
        }
    }
    acc.finish(s.norm, Method::Enumeration)
}

/// Fully dependent claims: the measure sits on normalized `A K^{1/alpha} 1`.
pub(super) fn dependent(engine: &ExactEngine, s: &MarketScenario) -> Result<SpectralMeasure> {
    let m = Prepared::new(s)?;
    let e = GraphEnumerator::new(&m.p, engine.config.graph_cap_edges)?;
    let (alpha, norm) = (m.alpha, s.norm);
    let parts = e.fold_chunks(Accumulator::default, |acc, g, prob| {
        if prob > 0.0 {
            let f = g.apply(&g.weighted(&s.weights), &m.claim_scales);
            acc.add(&f, norm, alpha, prob);
        }
    });
    let mut acc = Accumulator::default();
    for part in parts {
        acc.merge(part);
    }
    acc.finish(norm, Method::Enumeration)
}
