#![allow(dead_code)]

use ergopt::examples::Instance;
use ergopt::oracle::random_planted_instance;
use ergopt::{Analysis, Tolerances};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Planted instance with alphabet <= 3 and range <= 3, reproducible from `seed`.
pub fn planted(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_planted_instance(&mut rng, 3, 3)
}

pub fn analyze(instance: &Instance) -> Analysis {
    Analysis::run(instance, &Tolerances::default()).expect("planted instances analyze cleanly")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
