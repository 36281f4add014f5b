use crate::{CliError, CliResult};
use homcorr::equivariant_ops::{corr_s2, corr_s2_bruteforce, S2Kernel};
use homcorr::harmonics::Bandwidth;
use homcorr::rng::{stream_rng, Stream};
use homcorr::signals::{random_bandlimited_s2, Rotation};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

/// Largest band limit timed with the brute-force oracle.
pub const BRUTEFORCE_LIMIT: usize = 16;

/// One CSV row; brute-force columns are empty above [`BRUTEFORCE_LIMIT`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub bandwidth: usize,
    pub spectral_seconds: f64,
    pub bruteforce_seconds: Option<f64>,
    pub speedup: Option<f64>,
}

fn min_time(reps: usize, mut f: impl FnMut()) -> f64 {
    (0..reps.max(1))
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn bench(min_b: usize, max_b: usize, reps: usize, seed: u64, out: Option<&Path>) -> CliResult<()> {
    if min_b == 0 || min_b > max_b {
        return Err(CliError::Usage(format!("need 1 <= min-b <= max-b, got {min_b}..{max_b}")));
    }
    let mut rows = Vec::new();
    for b in min_b..=max_b {
        let bb = Bandwidth::new(b)?;
        let f = random_bandlimited_s2::<f64>(bb, 1, seed);
        let w = S2Kernel::random(1, 1, bb, 1.0, &mut stream_rng(seed, Stream::Kernel, b as u64));
        let spectral = min_time(reps, || {
            corr_s2(&f, &w).expect("shapes match");
        });
        let brute = (b <= BRUTEFORCE_LIMIT).then(|| {
            let grid = Rotation::grid(bb);
            min_time(1, || {
                corr_s2_bruteforce(&f, &w, &grid, true).expect("shapes match");
            })
        });
        rows.push(BenchRow {
            bandwidth: b,
            spectral_seconds: spectral,
            bruteforce_seconds: brute,
            speedup: brute.map(|t| t / spectral),
        });
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    let text = String::from_utf8(bytes).expect("csv is utf-8");
    match rows.iter().find(|r| r.speedup.is_some_and(|s| s > 1.0)) {
        Some(r) => eprintln!("crossover: spectral faster from B={}", r.bandwidth),
        None => eprintln!("crossover: not reached in B={min_b}..={max_b}"),
    }
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
