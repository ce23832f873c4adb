//! Named random sub-streams derived from one master seed.
//!
//! Every consumer asks for a stream by a stable label, so adding or
//! reordering rules only changes the draws of the rules involved.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    master: u64,
}

impl SeedTree {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Independent ChaCha stream keyed by the master seed and the label.
    pub fn stream(&self, label: &str) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(fnv1a(label));
        rng
    }

    /// A child tree, for components that need several streams of their own.
    pub fn subtree(&self, label: &str) -> SeedTree {
        SeedTree {
            master: self.master ^ fnv1a(label).rotate_left(17),
        }
    }
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}
