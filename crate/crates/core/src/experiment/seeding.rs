//! Stateless repetition seeding. Every random draw in the experiment is
//! keyed by (master seed, dataset, method, labeled size, substream, rep,
//! salt) through a fixed mixer chain, so no RNG state survives across
//! repetitions and any parallel schedule produces the same numbers.
//!
//! The labeled substream deliberately omits the unlabeled size: labeled
//! draws are then common random numbers across the unlabeled axis, which
//! makes supervised curves exactly flat and aligns the semi-supervised
//! curves with them.

use crate::math::{fnv1a64, mix64};

/// Cell-level seed context shared by all repetitions of one curve cell.
#[derive(Debug, Clone, Copy)]
pub struct SeedCtx<'a> {
    pub master_seed: u64,
    pub dataset: &'a str,
    pub method: &'a str,
    pub n_labeled: usize,
}

/// Which stream of a repetition is being seeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substream {
    /// Labeled index draws; independent of the unlabeled size.
    Labeled,
    /// Unlabeled index draws for a specific unlabeled size.
    Unlabeled { n_unlabeled: usize },
}

const LABELED_TAG: u64 = 0x4c41_4245_4c45_4400; // "LABELED\0"
const UNLABELED_TAG: u64 = 0x554e_4c41_4245_4c00; // "UNLABEL\0"

/// Derives the 64-bit seed for one substream of one repetition. `salt`
/// is 0 normally and counts replacement attempts for degenerate draws.
pub fn rep_seed(ctx: &SeedCtx<'_>, substream: Substream, rep: usize, salt: u64) -> u64 {
    let mut h = mix64(ctx.master_seed);
    h = mix64(h ^ fnv1a64(ctx.dataset.as_bytes()));
    h = mix64(h ^ fnv1a64(ctx.method.as_bytes()));
    h = mix64(h ^ ctx.n_labeled as u64);
    h = match substream {
        Substream::Labeled => mix64(h ^ LABELED_TAG),
        Substream::Unlabeled { n_unlabeled } => {
            mix64(mix64(h ^ UNLABELED_TAG) ^ n_unlabeled as u64)
        }
    };
    h = mix64(h ^ rep as u64);
    mix64(h ^ salt)
}
