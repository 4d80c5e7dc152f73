//! Seeded random streams for a run.
//!
//! Both streams are ChaCha8 keyed by the run seed and differ only in the
//! ChaCha stream id, so adding banks never shifts section choices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SECTION_STREAM: u64 = 0;
const BANK_STREAM: u64 = 1;

#[derive(Debug, Clone)]
pub(crate) struct Streams {
    sections: ChaCha8Rng,
    banks: ChaCha8Rng,
}

impl Streams {
    pub(crate) fn new(seed: u64) -> Self {
        let mut sections = ChaCha8Rng::seed_from_u64(seed);
        sections.set_stream(SECTION_STREAM);
        let mut banks = ChaCha8Rng::seed_from_u64(seed);
        banks.set_stream(BANK_STREAM);
        Streams { sections, banks }
    }

    /// Index drawn from a discrete distribution given by `probs`.
    pub(crate) fn pick_section<I>(&mut self, probs: I) -> usize
    where
        I: ExactSizeIterator<Item = f64>,
    {
        let n = probs.len();
        if n == 1 {
            return 0;
        }
        let u: f64 = self.sections.random();
        let mut acc = 0.0;
        for (i, p) in probs.enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        // Rounding left the cumulative sum a hair under 1.
        n - 1
    }

    pub(crate) fn pick_bank(&mut self, banks: usize) -> usize {
        if banks == 1 {
            0
        } else {
            self.banks.random_range(0..banks)
        }
    }
}
