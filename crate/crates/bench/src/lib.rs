//! Shared fixtures for the kernel benchmarks.

use edm_coherence::{
    build_edm, complete_from_truth, make_distribution, sample_coordinates, sample_mask,
    DistributionSpec, EdmMatrix, MaskMode, NodeCloud, SvtParams,
};

pub fn uniform_cloud(n: usize, d: usize, seed: u64) -> NodeCloud {
    let dist = make_distribution(DistributionSpec::uniform(-1.0, 1.0)).expect("uniform");
    sample_coordinates(&dist, n, d, seed).expect("sample")
}

pub fn uniform_edm(n: usize, d: usize, seed: u64) -> EdmMatrix {
    build_edm(&uniform_cloud(n, d, seed)).expect("edm")
}

/// Runs one completion of an `n`-node EDM from `m` off-diagonal samples and
/// returns the iteration count.
pub fn completion_iterations(edm: &EdmMatrix, d: usize, m: usize, seed: u64) -> usize {
    let n = edm.entries.nrows();
    let mask = sample_mask(n, m, MaskMode::SymmetricOffdiag, seed).expect("mask");
    complete_from_truth(&edm.entries, &mask, &SvtParams::standard(n, m, d))
        .map(|r| r.iterations)
        .unwrap_or(0)
}
