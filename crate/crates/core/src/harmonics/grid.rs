use crate::error::{bail, Result};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};

/// Band limit `B`: degrees `0 ≤ l < B`, sampled on `2B` nodes per Euler angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Bandwidth(usize);

impl Bandwidth {
    pub fn new(b: usize) -> Result<Self> {
        if b == 0 {
            bail!(InvalidArgument, "bandwidth must be at least 1");
        }
        Ok(Self(b))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }

    /// Nodes per angle, `2B`.
    #[inline]
    pub fn nodes(self) -> usize {
        2 * self.0
    }

    /// Samples on the S² grid, `(2B)²`.
    #[inline]
    pub fn s2_len(self) -> usize {
        4 * self.0 * self.0
    }

    /// Samples on the SO(3) grid, `(2B)³`.
    #[inline]
    pub fn so3_len(self) -> usize {
        8 * self.0 * self.0 * self.0
    }

    /// Number of spherical-harmonic coefficients, `B²`.
    #[inline]
    pub fn s2_coeffs(self) -> usize {
        self.0 * self.0
    }

    /// Number of Wigner coefficients, `Σ (2l+1)² = B(4B²−1)/3`.
    #[inline]
    pub fn so3_coeffs(self) -> usize {
        self.0 * (4 * self.0 * self.0 - 1) / 3
    }

    /// Colatitude / β node `π(2j+1)/(4B)`.
    pub fn beta<T: Real>(self, j: usize) -> T {
        T::PI() * T::from_usize_lossy(2 * j + 1) / T::from_usize_lossy(4 * self.0)
    }

    /// Longitude / α / γ node `πk/B`.
    pub fn azimuth<T: Real>(self, k: usize) -> T {
        T::PI() * T::from_usize_lossy(k) / T::from_usize_lossy(self.0)
    }
}

impl TryFrom<usize> for Bandwidth {
    type Error = crate::error::Error;
    fn try_from(b: usize) -> Result<Self> {
        Self::new(b)
    }
}

impl From<Bandwidth> for usize {
    fn from(b: Bandwidth) -> usize {
        b.0
    }
}

impl std::fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "B={}", self.0)
    }
}

/// Driscoll–Healy colatitude weights for the nodes `θ_j = π(2j+1)/(4B)`.
///
/// `Σ_j w_j p(cos θ_j) = ∫_0^π p(cos θ) sin θ dθ` for every polynomial `p` of
/// degree below `2B`; in particular `Σ_j w_j = 2`.
pub fn dh_weights<T: Real>(b: Bandwidth) -> Vec<T> {
    let bb = b.get();
    (0..b.nodes())
        .map(|j| {
            let theta: T = b.beta(j);
            let mut acc = T::zero();
            for k in 0..bb {
                let odd = T::from_usize_lossy(2 * k + 1);
                acc = acc + (odd * theta).sin() / odd;
            }
            T::lit(2.0) / T::from_usize_lossy(bb) * theta.sin() * acc
        })
        .collect()
}
