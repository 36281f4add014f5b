//! Deterministic synthetic datasets: bump-mixture blobs on S² for
//! classification and tract-like sequences of shell signals for group testing.

mod blobs;
mod io;
mod sequences;

pub use blobs::{blob_template, generate_blobs, sample_rotation, BlobParams, Dataset, Regime};
pub use io::{read_dataset, write_dataset, DATASET_MAGIC, DATASET_VERSION};
pub use sequences::{generate_sequences, SequenceParams};

use crate::harmonics::{sht_forward_truncated, sht_inverse, Bandwidth};
use crate::signals::S2Signal;

/// Sample `f(θ, φ)` on the grid and project onto band limit `b`.
pub(crate) fn bandlimited_from_fn(b: Bandwidth, f: impl Fn(f64, f64) -> f64) -> S2Signal<f64> {
    let n = b.nodes();
    let samples: Vec<f64> = (0..n * n)
        .map(|i| {
            let (j, k) = (i / n, i % n);
            f(b.beta::<f64>(j), b.azimuth::<f64>(k))
        })
        .collect();
    let spec = sht_forward_truncated(b, &samples, b).expect("grid sized");
    S2Signal::new(b, 1, sht_inverse(b, &spec)).expect("finite samples")
}
