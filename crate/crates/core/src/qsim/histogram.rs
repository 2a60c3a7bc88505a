use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::state::{sample_index, weighted_index, StateVector};
use crate::error::Result;

/// Outcome counts of a measured register.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    /// Width in qubits of the measured register.
    pub width: usize,
    pub shots: u64,
    pub seed: u64,
    pub counts: BTreeMap<u64, u64>,
}

impl Histogram {
    /// Draws `shots` outcomes from `probs` with a ChaCha8 stream seeded by `seed`.
    pub fn sample(probs: &[f64], width: usize, shots: u64, seed: u64) -> Result<Self> {
        let dist = weighted_index(probs)?;
        let mut rng = StateVector::rng(seed);
        let mut counts = BTreeMap::new();
        for _ in 0..shots {
            *counts.entry(sample_index(&dist, &mut rng) as u64).or_insert(0) += 1;
        }
        Ok(Histogram {
            width,
            shots,
            seed,
            counts,
        })
    }

    pub fn count(&self, outcome: u64) -> u64 {
        self.counts.get(&outcome).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn frequency(&self, outcome: u64) -> f64 {
        self.count(outcome) as f64 / self.shots as f64
    }

    /// Most frequent outcome; ties go to the smaller outcome.
    pub fn mode(&self) -> Option<u64> {
        self.counts
            .iter()
            .fold(None, |best: Option<(u64, u64)>, (&k, &c)| match best {
                Some((_, bc)) if bc >= c => best,
                _ => Some((k, c)),
            })
            .map(|(k, _)| k)
    }

    /// Dense count vector over all 2^width outcomes.
    pub fn dense(&self) -> Vec<u64> {
        (0..1u64 << self.width).map(|k| self.count(k)).collect()
    }

    /// `outcome,count` rows for every outcome of the register, zeros included.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["outcome", "count"])?;
        for (k, c) in self.dense().iter().enumerate() {
            w.write_record([k.to_string(), c.to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_prefers_smaller_on_tie() {
        let h = Histogram {
            width: 2,
            shots: 4,
            seed: 0,
            counts: [(1, 2), (3, 2)].into_iter().collect(),
        };
        assert_eq!(h.mode(), Some(1));
    }

    #[test]
    fn csv_and_json() {
        let h = Histogram::sample(&[0.0, 1.0], 1, 10, 3).unwrap();
        assert_eq!(h.to_csv().unwrap(), "outcome,count\n0,0\n1,10\n");
        let back: Histogram = serde_json::from_str(&h.to_json().unwrap()).unwrap();
        assert_eq!(back, h);
    }
}
