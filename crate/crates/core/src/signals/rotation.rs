use crate::scalar::Real;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// An element of SO(3) as ZYZ Euler angles, acting as `Rz(α)·Ry(β)·Rz(γ)`.
///
/// Constructors canonicalize to `α, γ ∈ [0, 2π)`, `β ∈ [0, π]`; at the poles
/// (`β ∈ {0, π}`) the redundant angle is folded into `α` and `γ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    alpha: f64,
    beta: f64,
    gamma: f64,
}

pub type Matrix3 = [[f64; 3]; 3];

const POLE_EPS: f64 = 1e-13;

fn rz(a: f64) -> Matrix3 {
    let (s, c) = a.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

fn ry(b: f64) -> Matrix3 {
    let (s, c) = b.sin_cos();
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

fn matmul(a: &Matrix3, b: &Matrix3) -> Matrix3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

impl Rotation {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        if (0.0..=PI).contains(&beta) && beta > POLE_EPS && PI - beta > POLE_EPS {
            return Self { alpha: wrap_angle(alpha), beta, gamma: wrap_angle(gamma) };
        }
        let raw = matmul(&matmul(&rz(alpha), &ry(beta)), &rz(gamma));
        Self::from_matrix(&raw)
    }

    pub fn identity() -> Self {
        Self { alpha: 0.0, beta: 0.0, gamma: 0.0 }
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    #[inline]
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Angles converted to the working scalar type.
    pub fn angles<T: Real>(&self) -> (T, T, T) {
        (T::lit(self.alpha), T::lit(self.beta), T::lit(self.gamma))
    }

    pub fn to_matrix(&self) -> Matrix3 {
        matmul(&matmul(&rz(self.alpha), &ry(self.beta)), &rz(self.gamma))
    }

    /// Euler angles of a proper rotation matrix.
    pub fn from_matrix(r: &Matrix3) -> Self {
        let sb = r[0][2].hypot(r[1][2]);
        let beta = sb.atan2(r[2][2]);
        if sb > POLE_EPS {
            let alpha = r[1][2].atan2(r[0][2]);
            let gamma = r[2][1].atan2(-r[2][0]);
            return Self { alpha: wrap_angle(alpha), beta, gamma: wrap_angle(gamma) };
        }
        if r[2][2] > 0.0 {
            Self { alpha: wrap_angle(r[1][0].atan2(r[0][0])), beta: 0.0, gamma: 0.0 }
        } else {
            Self { alpha: wrap_angle((-r[1][0]).atan2(-r[0][0])), beta: PI, gamma: 0.0 }
        }
    }

    /// `self · other`: apply `other` first.
    pub fn compose(&self, other: &Rotation) -> Rotation {
        Self::from_matrix(&matmul(&self.to_matrix(), &other.to_matrix()))
    }

    pub fn inverse(&self) -> Rotation {
        Self::new(PI - self.gamma, self.beta, PI - self.alpha)
    }

    /// Image of a unit vector.
    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let r = self.to_matrix();
        [0, 1, 2].map(|i| r[i][0] * v[0] + r[i][1] * v[1] + r[i][2] * v[2])
    }

    /// Haar-uniform random rotation.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let alpha = rng.random::<f64>() * TAU;
        let gamma = rng.random::<f64>() * TAU;
        let z: f64 = rng.random::<f64>() * 2.0 - 1.0;
        Self::new(alpha, z.clamp(-1.0, 1.0).acos(), gamma)
    }

    /// Rotations at the nodes of the SO(3) sampling grid, in storage order `[α][β][γ]`.
    pub fn grid(b: crate::harmonics::Bandwidth) -> Vec<Rotation> {
        let n = b.nodes();
        let mut out = Vec::with_capacity(b.so3_len());
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    out.push(Self::new(b.azimuth(i), b.beta(j), b.azimuth(k)));
                }
            }
        }
        out
    }

    /// Largest entry-wise difference of the rotation matrices.
    pub fn distance(&self, other: &Rotation) -> f64 {
        let (a, b) = (self.to_matrix(), other.to_matrix());
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((a[i][j] - b[i][j]).abs());
            }
        }
        worst
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

/// Unit vector at colatitude `theta`, longitude `phi`.
pub fn unit_vector(theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}

/// `(θ, φ)` of a unit vector, `φ ∈ [0, 2π)`.
pub fn spherical_coords(v: [f64; 3]) -> (f64, f64) {
    let theta = v[0].hypot(v[1]).atan2(v[2]);
    (theta, wrap_angle(v[1].atan2(v[0])))
}
