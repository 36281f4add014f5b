//! Group correlations on S² and SO(3), second-order Volterra layers, the
//! invariant layer, and brute-force quadrature oracles for each.

mod bruteforce;
mod corr;
mod kernel;
mod volterra;

pub use bruteforce::{
    corr_s2_bruteforce, corr_so3_bruteforce, volterra2_bruteforce, SampledInput, SeparablePair, BRUTEFORCE_MAX_B,
    VOLTERRA_BRUTEFORCE_MAX_B,
};
pub use corr::{
    corr_s2, corr_s2_at, corr_s2_spectral, corr_s2_spectral_backward, corr_so3, corr_so3_at, corr_so3_spectral,
    corr_so3_spectral_backward,
};
pub use kernel::{
    s2_param_grad, s2_param_len, s2_params_from_spectrum, s2_spectrum_from_params, so3_param_grad, so3_param_len,
    so3_params_from_spectrum, so3_spectrum_from_params, S2Kernel, So3Kernel,
};
pub use volterra::{
    product_bandwidth, volterra2_s2, volterra2_s2_at, volterra2_so3, volterra2_so3_at, KernelShape, S2VolterraLayer,
    So3VolterraLayer, VolterraLayer,
};

use crate::scalar::Real;
use crate::signals::{integrate_so3, So3Signal};

/// Haar integral of each channel: the rotation-invariant pooling.
pub fn invariant_layer<T: Real>(f: &So3Signal<T>) -> Vec<T> {
    integrate_so3(f)
}

#[cfg(test)]
mod tests;
