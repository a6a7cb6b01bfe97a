//! Shared inputs for the criterion benchmarks in `benches/`.

use bbdgemm_core::KernelSpec;

/// The shapes compared in the batched-vs-per-call study.
pub const STUDY_SET: [&str; 3] = [
    "bbdgemm_ColMajor_2_2_2_cis",
    "bbdgemm_ColMajor_10_9_9_cis",
    "bbdgemm_ColMajor_20_9_10_csi",
];

pub fn study_specs() -> Vec<KernelSpec> {
    STUDY_SET
        .iter()
        .map(|n| n.parse().expect("valid kernel name"))
        .collect()
}

/// Batch size of the study, one element per mesh cell.
pub const BATCH: usize = 10_000;

#[cfg(test)]
mod tests {
    #[test]
    fn study_set_parses() {
        let specs = super::study_specs();
        assert_eq!(specs[2].shape.k(), 10);
    }
}
