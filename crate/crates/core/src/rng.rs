//! Keyed random streams: every (seed, stream, substream) triple gets its own
//! ChaCha generator, so runs and experiments are reproducible regardless of
//! the order or thread they execute on.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_rng(seed: u64, stream: u64, substream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let words = [
        splitmix64(seed),
        splitmix64(seed ^ 0xA5A5_A5A5_A5A5_A5A5),
        splitmix64(stream.wrapping_add(0x1234_5678)),
        splitmix64(substream.wrapping_mul(0x2545_F491_4F6C_DD1D) ^ 0x5851_F42D),
    ];
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}
