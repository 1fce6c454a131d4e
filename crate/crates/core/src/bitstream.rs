//! Counter-based bit generator: the bit at position `i` under key `k` is a
//! pure function of `(k, i)`, so any position can be read without generating
//! its predecessors.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A keyed, random-access stream of fair bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bitstream {
    key: u64,
}

impl Bitstream {
    pub fn new(seed: u64) -> Self {
        Self { key: splitmix64(seed) }
    }

    /// The `sample`-th independent stream derived from `seed`.
    pub fn for_sample(seed: u64, sample: u64) -> Self {
        Self {
            key: splitmix64(splitmix64(seed) ^ splitmix64(sample.wrapping_mul(GOLDEN) ^ 0x5851_F42D_4C95_7F2D)),
        }
    }

    #[inline]
    pub fn word(&self, index: u64) -> u64 {
        splitmix64(self.key ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
    }

    #[inline]
    pub fn bit(&self, pos: u64) -> bool {
        (self.word(pos >> 6) >> (pos & 63)) & 1 == 1
    }

    pub fn prefix(&self, len: usize) -> Vec<bool> {
        (0..len as u64).map(|p| self.bit(p)).collect()
    }
}
