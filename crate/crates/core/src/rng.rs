use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent generator for work item `index` under the run seed.
///
/// Every Monte-Carlo routine draws item `i` from stream `i`, so results do
/// not depend on how items are distributed across threads.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
