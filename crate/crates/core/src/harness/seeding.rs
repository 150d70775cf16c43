//! Counter-based random streams.
//!
//! Every random draw in an experiment comes from a ChaCha8 stream keyed by
//! the root seed. The stream id is a SplitMix64 fold of a purpose tag and the
//! integer coordinates of the draw (q index, trial, user, ...), so a stream
//! depends only on its own coordinates. Changing the number of trials or
//! users never shifts the draws of the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. The discriminant is part of the stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    MeanData = 1,
    MeanBcdp = 2,
    MeanBaseline = 3,
    OlsData = 4,
    OlsPrivate = 5,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream id for `purpose` at the given coordinates.
pub fn stream_id(purpose: Purpose, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix(purpose as u64), |acc, &c| splitmix(acc ^ splitmix(c)))
}

/// The ChaCha8 stream for `purpose` at `coords` under `root`.
pub fn stream(root: u64, purpose: Purpose, coords: &[u64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(stream_id(purpose, coords));
    rng
}
