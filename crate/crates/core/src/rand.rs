//! Small deterministic generator shared by the executor and the network
//! generator. Not suitable for real key material; the point is exact
//! reproducibility from a seed across platforms.

/// SplitMix64, the standard finalizer-based stream generator.
#[derive(Debug, Clone)]
pub(crate) struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub(crate) fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub(crate) fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform-ish draw below `n` by reduction; the modulo bias is
    /// irrelevant at the scales this crate draws at.
    pub(crate) fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        self.next_u64() % n
    }

    /// `len` bytes taken from consecutive big-endian words.
    pub(crate) fn bytes(&mut self, len: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(len);
        while out.len() < len {
            let chunk = self.next_u64().to_be_bytes();
            let take = (len - out.len()).min(8);
            out.extend_from_slice(&chunk[..take]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_the_reference_stream() {
        let mut g = SplitMix64::new(0);
        assert_eq!(g.next_u64(), 0xE220A8397B1DCDAF);
        assert_eq!(g.next_u64(), 0x6E789E6AA1B965F4);
    }

    #[test]
    fn bytes_are_prefixes_of_the_word_stream() {
        let mut a = SplitMix64::new(9);
        let mut b = SplitMix64::new(9);
        let long = a.bytes(12);
        let word = b.next_u64().to_be_bytes();
        assert_eq!(&long[..8], &word);
        assert_eq!(long.len(), 12);
    }

    #[test]
    fn below_stays_in_range() {
        let mut g = SplitMix64::new(7);
        for _ in 0..100 {
            assert!(g.below(13) < 13);
        }
    }
}
