use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::qsim::StateVector;

/// Eavesdropper on one distribution channel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Attacker {
    #[default]
    None,
    /// Measures every particle sent to `client` during GHZ round `round` in a random
    /// basis and re-sends the state it observed.
    InterceptResend {
        #[serde(default)]
        client: usize,
        #[serde(default)]
        round: usize,
    },
}

impl Attacker {
    pub fn targets(&self, client: usize, round: usize) -> bool {
        matches!(*self, Attacker::InterceptResend { client: c, round: r } if c == client && r == round)
    }
}

/// Decoy basis: V1 is computational, V2 is its Fourier transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Computational,
    Fourier,
}

impl Basis {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        if rng.gen_bool(0.5) {
            Basis::Fourier
        } else {
            Basis::Computational
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoyCheck {
    pub delta: usize,
    pub d: u64,
    /// Slot of the GHZ particle among the delta + 1 transmitted.
    pub position: usize,
    pub errors: usize,
    pub error_rate: f64,
    pub passed: bool,
}

/// Outcome of measuring |basis_b, p> in basis `measure`. The two bases are mutually
/// unbiased, so a mismatched measurement is uniform on Z_d.
fn measure(prepared: Basis, value: u64, measure: Basis, d: u64, rng: &mut ChaCha8Rng) -> u64 {
    if prepared == measure {
        value
    } else {
        rng.gen_range(0..d)
    }
}

/// Per-decoy error probability under intercept-resend.
pub fn intercept_error_probability(d: u64) -> f64 {
    (d - 1) as f64 / (2 * d) as f64
}

/// Probability that at least one of `delta` decoys reveals an intercept-resend attack.
pub fn detection_probability(d: u64, delta: usize) -> f64 {
    1.0 - ((d + 1) as f64 / (2 * d) as f64).powi(delta as i32)
}

/// Sends `delta` random decoys in random bases through the channel, has the receiver
/// measure them in the announced bases and compares with what was prepared.
pub fn run_decoy_check_with(
    delta: usize,
    d: u64,
    intercepted: bool,
    threshold: f64,
    rng: &mut ChaCha8Rng,
) -> DecoyCheck {
    let position = rng.gen_range(0..=delta);
    let mut errors = 0;
    for _ in 0..delta {
        let basis = Basis::random(rng);
        let value = rng.gen_range(0..d);
        let (carried_basis, carried_value) = if intercepted {
            let eve = Basis::random(rng);
            (eve, measure(basis, value, eve, d, rng))
        } else {
            (basis, value)
        };
        if measure(carried_basis, carried_value, basis, d, rng) != value {
            errors += 1;
        }
    }
    let error_rate = if delta == 0 { 0.0 } else { errors as f64 / delta as f64 };
    DecoyCheck {
        delta,
        d,
        position,
        errors,
        error_rate,
        passed: error_rate <= threshold,
    }
}

/// Stand-alone channel check on a single link.
pub fn run_decoy_check(delta: usize, d: u64, attacker: Attacker, threshold: f64, seed: u64) -> DecoyCheck {
    let mut rng = StateVector::rng(seed);
    run_decoy_check_with(delta, d, attacker != Attacker::None, threshold, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn honest_channel_passes() {
        for seed in 0..20 {
            let c = run_decoy_check(20, 23, Attacker::None, 0.0, seed);
            assert_eq!(c.errors, 0);
            assert!(c.passed);
        }
    }

    #[test]
    fn no_decoys_never_detect() {
        let attack = Attacker::InterceptResend { client: 0, round: 0 };
        for seed in 0..50 {
            assert!(run_decoy_check(0, 23, attack, 0.0, seed).passed);
        }
    }

    #[test]
    fn intercept_error_rate() {
        let attack = Attacker::InterceptResend { client: 0, round: 0 };
        let (mut errors, mut total) = (0usize, 0usize);
        for seed in 0..2000 {
            let c = run_decoy_check(10, 5, attack, 0.0, seed);
            errors += c.errors;
            total += c.delta;
        }
        let rate = errors as f64 / total as f64;
        assert!((rate - intercept_error_probability(5)).abs() < 0.01, "{rate}");
    }

    #[test]
    fn detection_formula() {
        assert!((detection_probability(23, 20) - (1.0 - (24.0f64 / 46.0).powi(20))).abs() < 1e-15);
        assert_eq!(detection_probability(23, 0), 0.0);
        assert!(Attacker::InterceptResend { client: 1, round: 2 }.targets(1, 2));
        assert!(!Attacker::InterceptResend { client: 1, round: 2 }.targets(0, 2));
        assert!(!Attacker::None.targets(0, 0));
    }
}
