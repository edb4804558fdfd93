use serde::{Deserialize, Serialize};

/// SplitMix64 finalizer: a bijection on `u64` with full avalanche.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Pair indices must stay below `2^PAIR_BITS`.
pub const PAIR_BITS: u32 = 24;
/// Run indices must stay below `2^RUN_BITS`.
pub const RUN_BITS: u32 = 40;

/// Independent random streams derived from one run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Workload = 0,
    Simulation = 1,
}

/// Derivation of every per-episode seed from one master seed.
///
/// `run_seed = splitmix64(splitmix64(master) ^ (pair << 40 | run))`. Both
/// steps are bijections and the packing is injective for in-range indices,
/// so distinct `(pair, run)` never share a seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPlan {
    pub master_seed: u64,
}

impl SeedPlan {
    pub fn new(master_seed: u64) -> Self {
        SeedPlan { master_seed }
    }

    pub fn id(&self) -> String {
        format!("splitmix64/{:016x}", self.master_seed)
    }

    pub fn run_seed(&self, pair_index: u64, run_index: u64) -> u64 {
        debug_assert!(pair_index < 1 << PAIR_BITS && run_index < 1 << RUN_BITS);
        splitmix64(splitmix64(self.master_seed) ^ ((pair_index << RUN_BITS) | run_index))
    }

    pub fn stream_seed(run_seed: u64, stream: Stream) -> u64 {
        splitmix64(run_seed ^ (stream as u64).wrapping_mul(0xD1B5_4A32_D192_ED03))
    }
}
