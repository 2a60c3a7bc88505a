use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Moduli used when none are given; their product is about 1.06e12.
pub const DEFAULT_MODULI: [u64; 4] = [1009, 1013, 1019, 1021];

fn default_signed() -> bool {
    true
}

/// Pairwise-coprime moduli d_1..d_m with product S, and the precision scale gamma.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrtConfig {
    pub moduli: Vec<u64>,
    pub gamma: f64,
    /// Decode totals from the window [-S/2, S/2) instead of [0, S).
    #[serde(default = "default_signed")]
    pub signed: bool,
}

impl Default for CrtConfig {
    fn default() -> Self {
        Self {
            moduli: DEFAULT_MODULI.to_vec(),
            gamma: 1e6,
            signed: true,
        }
    }
}

impl CrtConfig {
    pub fn new(moduli: Vec<u64>, gamma: f64, signed: bool) -> Result<Self> {
        let config = Self { moduli, gamma, signed };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.moduli.is_empty() {
            return Err(Error::InvalidArgument("at least one modulus is required".into()));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::InvalidArgument(format!("gamma must be positive, got {}", self.gamma)));
        }
        let mut product: u128 = 1;
        for (i, &a) in self.moduli.iter().enumerate() {
            if a < 2 {
                return Err(Error::InvalidArgument(format!("modulus {a} must exceed 1")));
            }
            for &b in &self.moduli[i + 1..] {
                if a.gcd(&b) != 1 {
                    return Err(Error::NotCoprime { a, b });
                }
            }
            product = product
                .checked_mul(a as u128)
                .filter(|p| *p < (1u128 << 100))
                .ok_or_else(|| Error::InvalidArgument("modulus product exceeds 2^100".into()))?;
        }
        Ok(())
    }

    /// S = d_1 d_2 ... d_m.
    pub fn modulus(&self) -> u128 {
        self.moduli.iter().map(|&d| d as u128).product()
    }

    /// Inclusive-exclusive range of totals the decoder can return.
    pub fn window(&self) -> (i128, i128) {
        let s = self.modulus() as i128;
        if self.signed {
            (-(s / 2), s - s / 2)
        } else {
            (0, s)
        }
    }

    /// Whether an aggregate total decodes unambiguously.
    pub fn fits(&self, total: i128) -> bool {
        let (lo, hi) = self.window();
        total >= lo && total < hi
    }

    /// Representative of `value` in [0, S).
    pub fn to_residue(&self, value: i128) -> u128 {
        value.rem_euclid(self.modulus() as i128) as u128
    }

    /// Maps a representative in [0, S) to the decode window.
    pub fn decode(&self, residue: u128) -> i128 {
        let s = self.modulus() as i128;
        let r = residue as i128 % s;
        if self.signed && r >= s - s / 2 {
            r - s
        } else {
            r
        }
    }
}

/// mu^j = round(gamma beta g^j), rounding half away from zero.
pub fn scale_to_integers(g: &[f64], beta: f64, gamma: f64) -> Result<Vec<i128>> {
    g.iter()
        .map(|&v| {
            let scaled = (gamma * beta * v).round();
            if !scaled.is_finite() || scaled.abs() >= 2f64.powi(100) {
                return Err(Error::InvalidArgument(format!(
                    "gamma * beta * g = {} is not representable",
                    gamma * beta * v
                )));
            }
            Ok(scaled as i128)
        })
        .collect()
}

/// s_i = mu mod d_i for every modulus (least nonnegative residue).
pub fn compute_shares(mu: i128, moduli: &[u64]) -> Vec<u64> {
    moduli.iter().map(|&d| mu.rem_euclid(d as i128) as u64).collect()
}

/// The unique total in the decode window congruent to every residue.
pub fn crt_reconstruct(residues: &[u64], config: &CrtConfig) -> Result<i128> {
    if residues.len() != config.moduli.len() {
        return Err(Error::DimensionMismatch {
            expected: config.moduli.len(),
            got: residues.len(),
        });
    }
    let s = config.modulus() as i128;
    let mut total: i128 = 0;
    for (&r, &d) in residues.iter().zip(&config.moduli) {
        let d = d as i128;
        let n = s / d;
        let eg = (n % d).extended_gcd(&d);
        if eg.gcd != 1 {
            return Err(Error::NotCoprime {
                a: (n % d) as u64,
                b: d as u64,
            });
        }
        let inv = eg.x.rem_euclid(d);
        // n < 2^100 and the cofactor < d, so reduce the cofactor first to stay in range
        let coef = ((r as i128 % d) * inv) % d;
        total = (total + mulmod(n, coef, s)) % s;
    }
    Ok(config.decode(total as u128))
}

fn mulmod(a: i128, b: i128, m: i128) -> i128 {
    match a.checked_mul(b) {
        Some(p) => p.rem_euclid(m),
        None => {
            let (mut a, mut b, mut acc) = (a.rem_euclid(m), b.rem_euclid(m), 0i128);
            while b > 0 {
                if b & 1 == 1 {
                    acc = (acc + a) % m;
                }
                a = (a * 2) % m;
                b >>= 1;
            }
            acc
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small() -> CrtConfig {
        CrtConfig::new(vec![23, 29], 100.0, false).unwrap()
    }

    #[test]
    fn scaling_examples() {
        assert_eq!(scale_to_integers(&[2.0, 3.46], 0.5, 100.0).unwrap(), vec![100, 173]);
        assert_eq!(scale_to_integers(&[5.0, 8.66], 0.5, 100.0).unwrap(), vec![250, 433]);
        assert_eq!(scale_to_integers(&[0.0], 0.5, 100.0).unwrap(), vec![0]);
        assert_eq!(scale_to_integers(&[-0.025], 1.0, 100.0).unwrap(), vec![-3]);
    }

    #[test]
    fn share_examples() {
        assert_eq!(compute_shares(100, &[23, 29]), vec![8, 13]);
        assert_eq!(compute_shares(173, &[23, 29]), vec![12, 28]);
        assert_eq!(compute_shares(250, &[23, 29]), vec![20, 18]);
        assert_eq!(compute_shares(433, &[23, 29]), vec![19, 27]);
        assert_eq!(compute_shares(0, &[23, 29, 31]), vec![0, 0, 0]);
        assert_eq!(compute_shares(-1, &[23, 29]), vec![22, 28]);
    }

    #[test]
    fn reconstruct_examples() {
        let c = small();
        assert_eq!(crt_reconstruct(&[5, 2], &c).unwrap(), 350);
        assert_eq!(crt_reconstruct(&[8, 26], &c).unwrap(), 606);
        assert_eq!(crt_reconstruct(&[0, 0], &c).unwrap(), 0);
        let signed = CrtConfig::new(vec![23, 29], 100.0, true).unwrap();
        assert_eq!(crt_reconstruct(&[22, 28], &signed).unwrap(), -1);
        assert_eq!(crt_reconstruct(&[5, 2], &signed).unwrap(), 350 - 667);
    }

    #[test]
    fn rejects_bad_moduli() {
        assert!(matches!(CrtConfig::new(vec![6, 9], 1.0, true), Err(Error::NotCoprime { a: 6, b: 9 })));
        assert!(CrtConfig::new(vec![1, 7], 1.0, true).is_err());
        assert!(CrtConfig::new(vec![], 1.0, true).is_err());
        assert!(CrtConfig::new(vec![7], 0.0, true).is_err());
        assert!(crt_reconstruct(&[1], &small()).is_err());
    }

    #[test]
    fn default_window() {
        let c = CrtConfig::default();
        assert_eq!(c.modulus(), 1009u128 * 1013 * 1019 * 1021);
        let (lo, hi) = c.window();
        assert!(c.fits(lo) && !c.fits(hi) && !c.fits(lo - 1));
        assert_eq!(crt_reconstruct(&compute_shares(lo, &c.moduli), &c).unwrap(), lo);
    }

    fn coprime_set() -> impl Strategy<Value = Vec<u64>> {
        prop::collection::vec(2u64..5000, 1..5).prop_map(|cands| {
            let mut out: Vec<u64> = Vec::new();
            for c in cands {
                if out.iter().all(|&d| d.gcd(&c) == 1) {
                    out.push(c);
                }
            }
            out
        })
    }

    proptest! {
        #[test]
        fn round_trip_unsigned(moduli in coprime_set(), frac in 0.0f64..1.0) {
            let c = CrtConfig::new(moduli, 1.0, false).unwrap();
            let x = ((c.modulus() as f64) * frac).floor().min(c.modulus() as f64 - 1.0) as i128;
            prop_assert_eq!(crt_reconstruct(&compute_shares(x, &c.moduli), &c).unwrap(), x);
        }

        #[test]
        fn round_trip_signed(moduli in coprime_set(), frac in 0.0f64..1.0) {
            let c = CrtConfig::new(moduli, 1.0, true).unwrap();
            let (lo, hi) = c.window();
            let x = (lo + ((hi - lo) as f64 * frac) as i128).min(hi - 1);
            prop_assert_eq!(crt_reconstruct(&compute_shares(x, &c.moduli), &c).unwrap(), x);
        }

        #[test]
        fn shares_are_additive(a in -100_000i128..100_000, b in -100_000i128..100_000) {
            let m = [1009u64, 1013];
            let (sa, sb, sab) = (compute_shares(a, &m), compute_shares(b, &m), compute_shares(a + b, &m));
            for i in 0..2 {
                prop_assert_eq!((sa[i] + sb[i]) % m[i], sab[i]);
            }
        }
    }
}
