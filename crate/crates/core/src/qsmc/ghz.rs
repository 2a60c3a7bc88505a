use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::FftPlanner;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::StateVector;

/// Largest qudit statevector (in amplitudes) built by default.
pub const DEFAULT_STATE_CAP: u128 = 1 << 22;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GhzBackend {
    /// Build the (K+1)-qudit GHZ state and measure every particle in the Fourier basis.
    QuditStatevector,
    /// Draw K outcomes uniformly and solve the last from the sum constraint.
    ConstraintSampler,
    /// Statevector when it fits under the cap, sampler otherwise.
    #[default]
    Auto,
}

/// Fourier-basis outcomes of one d-level GHZ round: o_s for the server, o_k per client.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GhzRound {
    pub d: u64,
    pub server: u64,
    pub clients: Vec<u64>,
}

impl GhzRound {
    /// Wraps recorded outcomes, checking range and the sum-zero constraint.
    pub fn from_outcomes(d: u64, server: u64, clients: Vec<u64>) -> Result<Self> {
        let round = Self { d, server, clients };
        if d < 2 || round.outcomes().any(|o| o >= d) {
            return Err(Error::InvalidArgument(format!("outcomes must lie in Z_{d}")));
        }
        if !round.sums_to_zero() {
            return Err(Error::InvalidArgument(format!("outcomes do not sum to 0 mod {d}")));
        }
        Ok(round)
    }

    /// o_s, o_1, ..., o_K.
    pub fn outcomes(&self) -> impl DoubleEndedIterator<Item = u64> + '_ {
        std::iter::once(self.server).chain(self.clients.iter().copied())
    }

    pub fn sums_to_zero(&self) -> bool {
        self.outcomes().fold(0u128, |acc, o| (acc + o as u128) % self.d as u128) == 0
    }
}

/// Joint outcome distribution of a Fourier-basis measurement on every particle of
/// (1/sqrt d) sum_q |q>^(parties), indexed with particle 0 as the lowest base-d digit.
pub fn ghz_fourier_distribution(parties: usize, d: u64, cap: u128) -> Result<Vec<f64>> {
    if parties < 2 || d < 2 {
        return Err(Error::InvalidArgument("need d >= 2 and at least two particles".into()));
    }
    let amplitudes = (d as u128)
        .checked_pow(parties as u32)
        .unwrap_or(u128::MAX);
    if amplitudes > cap {
        return Err(Error::StateTooLarge { amplitudes, cap });
    }
    let (d, n) = (d as usize, amplitudes as usize);
    let diagonal: usize = (0..parties).map(|p| d.pow(p as u32)).sum();
    let norm = 1.0 / (d as f64).sqrt();
    let mut amps = vec![Complex64::new(0.0, 0.0); n];
    for q in 0..d {
        amps[q * diagonal] = Complex64::new(norm, 0.0);
    }
    // <QFT p| has entries e^{-2 pi i p y / d} / sqrt d: a forward DFT along each particle axis
    let fft = FftPlanner::<f64>::new().plan_fft_forward(d);
    let mut line = vec![Complex64::new(0.0, 0.0); d];
    let mut stride = 1usize;
    for _ in 0..parties {
        for outer in (0..n).step_by(stride * d) {
            for inner in 0..stride {
                let base = outer + inner;
                for (y, slot) in line.iter_mut().enumerate() {
                    *slot = amps[base + y * stride];
                }
                fft.process(&mut line);
                for (p, v) in line.iter().enumerate() {
                    amps[base + p * stride] = v * norm;
                }
            }
        }
        stride *= d;
    }
    Ok(amps
        .iter()
        .map(|a| {
            let p = a.norm_sqr();
            if p < 1e-12 {
                0.0
            } else {
                p
            }
        })
        .collect())
}

type TableCache = Mutex<HashMap<(usize, u64), Arc<WeightedIndex<f64>>>>;

fn cached_table(parties: usize, d: u64, cap: u128) -> Result<Arc<WeightedIndex<f64>>> {
    static CACHE: OnceLock<TableCache> = OnceLock::new();
    let amplitudes = (d as u128).checked_pow(parties as u32).unwrap_or(u128::MAX);
    if amplitudes > cap {
        return Err(Error::StateTooLarge { amplitudes, cap });
    }
    let cache = CACHE.get_or_init(Default::default);
    if let Some(t) = cache.lock().expect("table cache poisoned").get(&(parties, d)) {
        return Ok(t.clone());
    }
    let probs = ghz_fourier_distribution(parties, d, cap)?;
    let table = Arc::new(WeightedIndex::new(probs).map_err(|e| Error::InvalidArgument(e.to_string()))?);
    cache
        .lock()
        .expect("table cache poisoned")
        .insert((parties, d), table.clone());
    Ok(table)
}

/// Reusable generator of GHZ rounds for fixed (K, d); the statevector distribution
/// is computed once.
pub struct GhzSource {
    clients: usize,
    d: u64,
    backend: GhzBackend,
    table: Option<Arc<WeightedIndex<f64>>>,
}

impl GhzSource {
    pub fn new(clients: usize, d: u64, backend: GhzBackend, cap: u128) -> Result<Self> {
        if clients < 1 || d < 2 {
            return Err(Error::InvalidArgument(format!(
                "GHZ round needs K >= 1 and d >= 2 (got K = {clients}, d = {d})"
            )));
        }
        let table = match backend {
            GhzBackend::ConstraintSampler => None,
            GhzBackend::QuditStatevector => Some(cached_table(clients + 1, d, cap)?),
            GhzBackend::Auto => match cached_table(clients + 1, d, cap) {
                Ok(t) => Some(t),
                Err(Error::StateTooLarge { .. }) => None,
                Err(e) => return Err(e),
            },
        };
        let backend = match (backend, &table) {
            (GhzBackend::Auto, Some(_)) => GhzBackend::QuditStatevector,
            (GhzBackend::Auto, None) => GhzBackend::ConstraintSampler,
            (b, _) => b,
        };
        Ok(Self {
            clients,
            d,
            backend,
            table,
        })
    }

    /// The backend actually in use (never `Auto`).
    pub fn backend(&self) -> GhzBackend {
        self.backend
    }

    pub fn round(&self, rng: &mut ChaCha8Rng) -> GhzRound {
        let d = self.d;
        let mut outcomes: Vec<u64> = match &self.table {
            Some(table) => {
                let mut idx = table.sample(rng) as u64;
                (0..=self.clients)
                    .map(|_| {
                        let o = idx % d;
                        idx /= d;
                        o
                    })
                    .collect()
            }
            None => {
                let mut v: Vec<u64> = (0..self.clients).map(|_| rng.gen_range(0..d)).collect();
                let sum = v.iter().fold(0u64, |acc, o| (acc + o) % d);
                v.push((d - sum) % d);
                v
            }
        };
        let server = outcomes.remove(0);
        GhzRound {
            d,
            server,
            clients: outcomes,
        }
    }
}

/// One GHZ round for K clients with the default statevector cap.
pub fn run_ghz_round(clients: usize, d: u64, backend: GhzBackend, seed: u64) -> Result<GhzRound> {
    let source = GhzSource::new(clients, d, backend, DEFAULT_STATE_CAP)?;
    Ok(source.round(&mut StateVector::rng(seed)))
}
