//! Special functions and exact harmonic transforms on S² and SO(3).
//!
//! Conventions:
//!
//! * Rotations are ZYZ Euler triples `(α, β, γ)` acting as `Rz(α)·Ry(β)·Rz(γ)`.
//! * `D^l_{mn}(α, β, γ) = e^{-imα} d^l_{mn}(β) e^{-inγ}`, a unitary
//!   representation: `D(g₁g₂) = D(g₁)·D(g₂)`.
//! * Spherical harmonics are the basis induced from the zero section
//!   `γ = 0`: `Y_l^m(θ, φ) = √((2l+1)/4π) · D^l_{m0}(φ, θ, 0)`. This carries a
//!   `e^{-imφ}` phase (the complex conjugate of the physics convention) and the
//!   Condon–Shortley sign.
//! * S² area is `4π`; SO(3) Haar measure has total mass one.
//! * Expansions: `f = Σ f̂_l^m Y_l^m` on S² and
//!   `f = Σ_l (2l+1) Σ_{mn} f̂^l_{mn} D^l_{mn}` on SO(3).

mod grid;
mod legendre;
mod plan;
mod sht;
mod so3ft;
mod spectrum;
mod wigner;

pub use grid::{dh_weights, Bandwidth};
pub use legendre::{assoc_legendre, assoc_legendre_column, sph_harm};
pub use plan::{plan, Plan};
pub use sht::{
    sht_adjoint_forward, sht_adjoint_inverse, sht_forward, sht_forward_truncated, sht_inverse,
    sht_inverse_complex,
};
pub use so3ft::{
    so3_adjoint_forward, so3_adjoint_inverse, so3_ft_forward, so3_ft_forward_truncated, so3_ft_inverse,
    so3_ft_inverse_complex,
};
pub use spectrum::{S2Spectrum, So3Spectrum, SquareMatrix};
pub use wigner::{fault_injection, wigner_big_d, wigner_big_d_all, wigner_d, wigner_d_all};
