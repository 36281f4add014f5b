//! Signals on S² and SO(3), the rotation group acting on them, and
//! quadrature integration.
//!
//! The action is the pullback `(g·f)(x) = f(g⁻¹x)`. Rotation is performed on
//! spectra, never by resampling, so it is exact for band-limited signals.

mod io;
mod ops;
mod rotation;
mod signal;

pub use io::{read_any_signal, read_s2_signal, read_so3_signal, write_signal, AnySignal, SIGNAL_MAGIC, SIGNAL_VERSION};
pub(crate) use io::{read_exact_or_corrupt, read_f64s, read_u32};
pub use ops::{
    evaluate_s2, integrate_s2, integrate_so3, random_bandlimited_s2, random_bandlimited_so3, random_s2_spectrum,
    random_so3_spectrum, rotate_s2, rotate_s2_spectrum, rotate_so3, rotate_so3_spectrum,
};
pub use rotation::{spherical_coords, unit_vector, Matrix3, Rotation};
pub use signal::{Domain, S2Signal, Signal, So3Signal, S2, So3};
