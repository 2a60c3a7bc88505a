use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed-point format for reals held in a q-qubit register. Signed formats
/// use two's complement over the full register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub q: u32,
    pub frac_bits: u32,
    pub signed: bool,
}

impl FixedPoint {
    pub fn new(q: u32, frac_bits: u32, signed: bool) -> Result<Self> {
        if q == 0 || q > 48 || frac_bits > q {
            return Err(Error::InvalidArgument(format!(
                "fixed-point format q={q}, frac_bits={frac_bits} is not supported"
            )));
        }
        Ok(FixedPoint { q, frac_bits, signed })
    }

    pub fn modulus(&self) -> u64 {
        1u64 << self.q
    }

    pub fn resolution(&self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    fn raw_bounds(&self) -> (i64, i64) {
        if self.signed {
            (-(1i64 << (self.q - 1)), (1i64 << (self.q - 1)) - 1)
        } else {
            (0, (1i64 << self.q) - 1)
        }
    }

    /// Largest and smallest representable values.
    pub fn range(&self) -> (f64, f64) {
        let (lo, hi) = self.raw_bounds();
        (lo as f64 * self.resolution(), hi as f64 * self.resolution())
    }

    /// Signed integer with scale 2^frac_bits, rounded half away from zero.
    pub fn to_scaled(&self, value: f64) -> Result<i64> {
        let scaled = (value * (self.frac_bits as f64).exp2()).round();
        let (lo, hi) = self.raw_bounds();
        if !scaled.is_finite() || scaled < lo as f64 || scaled > hi as f64 {
            return Err(self.overflow(value));
        }
        Ok(scaled as i64)
    }

    pub fn encode(&self, value: f64) -> Result<u64> {
        Ok(self.wrap(self.to_scaled(value)?))
    }

    /// Register pattern of a scaled integer, modulo 2^q.
    pub fn wrap(&self, scaled: i64) -> u64 {
        scaled.rem_euclid(self.modulus() as i64) as u64
    }

    /// Interprets a register pattern (two's complement when signed).
    pub fn unwrap_raw(&self, raw: u64) -> i64 {
        let raw = raw % self.modulus();
        if self.signed && raw >= self.modulus() / 2 {
            raw as i64 - self.modulus() as i64
        } else {
            raw as i64
        }
    }

    pub fn decode(&self, raw: u64) -> f64 {
        self.unwrap_raw(raw) as f64 * self.resolution()
    }

    /// decode(encode(v)): the value a register actually carries.
    pub fn quantize(&self, value: f64) -> Result<f64> {
        Ok(self.decode(self.encode(value)?))
    }

    pub fn fits(&self, value: f64) -> bool {
        self.to_scaled(value).is_ok()
    }

    fn overflow(&self, value: f64) -> Error {
        Error::FixedPointOverflow {
            value,
            q: self.q,
            frac_bits: self.frac_bits,
            signed: self.signed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn o_x_example_value() {
        let f = FixedPoint::new(6, 3, false).unwrap();
        // 3.464 * 8 = 27.71 rounds to 28
        assert_eq!(f.encode(3.464).unwrap(), 28);
        assert_eq!(f.encode(2.0).unwrap(), 16);
        assert!(f.encode(8.0).is_err());
    }

    #[test]
    fn twos_complement_wraparound() {
        let f = FixedPoint::new(4, 0, true).unwrap();
        assert_eq!(f.encode(-1.0).unwrap(), 15);
        assert_eq!(f.decode(15), -1.0);
        assert_eq!(f.range(), (-8.0, 7.0));
        assert!(f.encode(8.0).is_err());
        assert!(f.encode(-8.0).is_ok());
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        let f = FixedPoint::new(8, 1, true).unwrap();
        assert_eq!(f.to_scaled(0.25).unwrap(), 1);
        assert_eq!(f.to_scaled(-0.25).unwrap(), -1);
    }

    proptest! {
        #[test]
        fn encode_decode_raw_is_identity(q in 1u32..16, frac in 0u32..16, signed: bool, raw in 0u64..65536) {
            prop_assume!(frac <= q);
            let f = FixedPoint::new(q, frac, signed).unwrap();
            let raw = raw % f.modulus();
            prop_assert_eq!(f.encode(f.decode(raw)).unwrap(), raw);
        }

        #[test]
        fn decode_encode_within_half_lsb(v in -100.0f64..100.0) {
            let f = FixedPoint::new(20, 10, true).unwrap();
            let back = f.quantize(v).unwrap();
            prop_assert!((back - v).abs() <= f.resolution() / 2.0 + 1e-12);
        }
    }
}
