//! Per-frame random streams. Frame `i` of a run seeded with `master` always
//! sees the same ChaCha stream, independent of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn frame_rng(master: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(frame);
    rng
}
