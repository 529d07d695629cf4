use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{JensenError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// `ε·(−1)^(x₁+…+x_d)`, real.
    Parity,
    /// Per-coordinate hash seeds a stream; re and im uniform in `[−ε/√2, ε/√2]`.
    SeededUniform,
}

/// Bounded perturbation with `|noise(x)| ≤ amplitude` everywhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Noise {
    #[serde(rename = "type")]
    pub kind: NoiseKind,
    pub amplitude: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Noise {
    pub fn parity(amplitude: f64) -> Self {
        Noise {
            kind: NoiseKind::Parity,
            amplitude,
            seed: 0,
        }
    }

    pub fn seeded_uniform(amplitude: f64, seed: u64) -> Self {
        Noise {
            kind: NoiseKind::SeededUniform,
            amplitude,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(JensenError::Incompatible(format!(
                "noise amplitude must be finite and nonnegative, got {}",
                self.amplitude
            )));
        }
        Ok(())
    }

    /// Noise value at integer coordinates (a lattice point, or `[index]` on a finite carrier).
    ///
    /// Depends only on the coordinates and the seed, never on call order.
    pub fn sample(&self, coords: &[i64]) -> Complex64 {
        let eps = self.amplitude;
        match self.kind {
            NoiseKind::Parity => {
                let odd = coords.iter().fold(0i64, |acc, c| acc ^ (c & 1)) != 0;
                Complex64::new(if odd { -eps } else { eps }, 0.0)
            }
            NoiseKind::SeededUniform => {
                if eps == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let mut rng = ChaCha8Rng::seed_from_u64(coordinate_key(self.seed, coords));
                let half = eps * std::f64::consts::FRAC_1_SQRT_2;
                Complex64::new(rng.gen_range(-half..=half), rng.gen_range(-half..=half))
            }
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn coordinate_key(seed: u64, coords: &[i64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(seed), |h, &c| splitmix64(h ^ c as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parity_sign_follows_coordinate_sum() {
        let n = Noise::parity(0.25);
        assert_eq!(n.sample(&[4]).re, 0.25);
        assert_eq!(n.sample(&[-3]).re, -0.25);
        assert_eq!(n.sample(&[1, 1]).re, 0.25);
        assert_eq!(n.sample(&[2, -1]).re, -0.25);
    }

    #[test]
    fn seeded_values_depend_on_coordinates() {
        let n = Noise::seeded_uniform(1.0, 42);
        assert_ne!(n.sample(&[1, 2]), n.sample(&[2, 1]));
        assert_eq!(n.sample(&[5]), n.sample(&[5]));
        assert!(Noise::seeded_uniform(-1.0, 0).validate().is_err());
        assert!(Noise::seeded_uniform(f64::NAN, 0).validate().is_err());
    }
}
