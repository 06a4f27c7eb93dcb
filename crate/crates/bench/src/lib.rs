//! Shared fixtures for the criterion benchmarks.

use digger_core::corpus::{Sample, Split};

/// `n` samples of `len` pseudo-text byte tokens, deterministic in `seed`.
pub fn byte_samples(n: usize, len: usize, seed: u64) -> Vec<Sample> {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (0..n)
        .map(|i| {
            let tokens = (0..len)
                .map(|_| {
                    state = state
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    u32::from(b"etaoin shrdlu"[(state >> 59) as usize % 13])
                })
                .collect();
            Sample::new(&format!("bench{i:03}"), Split::Baseline, 0, tokens)
        })
        .collect()
}
