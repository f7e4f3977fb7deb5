//! Counter-based random numbers.
//!
//! Every sample is a pure hash of `(seed, pixel, sample, bounce, dimension)`.
//! There is no sequential state, so the value a path consumes does not depend
//! on which thread renders it or in what order pixels are visited.

#[inline]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed from a base seed and a salt.
#[inline]
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    splitmix64(seed ^ splitmix64(salt ^ 0xD1B5_4A32_D192_ED03))
}

/// Random stream of one `(pixel, sample)` path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleStream {
    key: u64,
}

impl SampleStream {
    pub fn new(seed: u64, pixel: u64, sample: u64) -> Self {
        let k = splitmix64(seed ^ 0x5851_F42D_4C95_7F2D);
        let k = splitmix64(k ^ pixel);
        let k = splitmix64(k ^ sample.wrapping_mul(0xA24B_AED4_963E_E407));
        Self { key: k }
    }

    /// Uniform value in `[0, 1)` for a bounce and dimension.
    #[inline]
    pub fn get(&self, bounce: u32, dim: u32) -> f64 {
        let counter = ((bounce as u64) << 32) | dim as u64;
        let h = splitmix64(self.key ^ splitmix64(counter));
        (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn get2(&self, bounce: u32, dim: u32) -> (f64, f64) {
        (self.get(bounce, dim), self.get(bounce, dim + 1))
    }
}

/// Dimension assignments within one bounce.
pub(crate) mod dims {
    pub const PIXEL_JITTER: u32 = 0;
    pub const LIGHT: u32 = 0;
    pub const LOBE: u32 = 2;
    pub const BSDF: u32 = 3;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_are_pure_functions_of_the_counter() {
        let a = SampleStream::new(7, 123, 4);
        let b = SampleStream::new(7, 123, 4);
        for bounce in 0..4 {
            for dim in 0..6 {
                assert_eq!(a.get(bounce, dim), b.get(bounce, dim));
            }
        }
        assert_ne!(a.get(0, 0), SampleStream::new(8, 123, 4).get(0, 0));
        assert_ne!(a.get(0, 0), SampleStream::new(7, 124, 4).get(0, 0));
        assert_ne!(a.get(0, 0), SampleStream::new(7, 123, 5).get(0, 0));
        assert_ne!(a.get(0, 0), a.get(1, 0));
        assert_ne!(a.get(0, 0), a.get(0, 1));
    }

    #[test]
    fn roughly_uniform() {
        let s = SampleStream::new(1, 2, 3);
        let n = 100_000;
        let mut hist = [0usize; 10];
        let mut sum = 0.0;
        for i in 0..n {
            let v = s.get(i / 64, i % 64);
            assert!((0.0..1.0).contains(&v));
            hist[(v * 10.0) as usize] += 1;
            sum += v;
        }
        assert!((sum / n as f64 - 0.5).abs() < 0.005);
        for h in hist {
            assert!((h as f64 / n as f64 - 0.1).abs() < 0.005);
        }
    }
}
