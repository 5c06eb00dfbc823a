//! Counter-based random numbers.
//!
//! Every draw is a pure hash of `(seed, stream, sample, bounce, dimension)`,
//! so a pixel's estimate never depends on which worker evaluated it or in
//! what order.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn combine(key: u64, value: u64) -> u64 {
    mix(key ^ mix(value.wrapping_add(GOLDEN)))
}

/// Keyed sample stream for one path (or one texel sample).
#[derive(Clone, Debug)]
pub struct Sampler {
    key: u64,
    bounce: u32,
    dimension: u32,
}

impl Sampler {
    /// `stream` identifies the pixel or texel, `sample` the sample index within it.
    pub fn new(seed: u64, stream: u64, sample: u64) -> Self {
        let key = combine(combine(mix(seed ^ GOLDEN), stream), sample);
        Sampler {
            key,
            bounce: 0,
            dimension: 0,
        }
    }

    /// Switches to the dimension block of path vertex `bounce`.
    pub fn start_bounce(&mut self, bounce: u32) {
        self.bounce = bounce;
        self.dimension = 0;
    }

    /// Uniform draw in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        let counter = ((self.bounce as u64) << 32) | self.dimension as u64;
        self.dimension = self.dimension.wrapping_add(1);
        // SplitMix64 stream offset by the per-path key.
        let bits = mix(self.key.wrapping_add(counter.wrapping_mul(GOLDEN))) >> 11;
        bits as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_2d(&mut self) -> (f64, f64) {
        let a = self.next_f64();
        let b = self.next_f64();
        (a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_keyed_not_sequenced() {
        let mut a = Sampler::new(7, 10, 3);
        a.start_bounce(2);
        let _ = a.next_f64();
        let second = a.next_f64();

        let mut b = Sampler::new(7, 10, 3);
        b.start_bounce(5);
        b.start_bounce(2);
        let _ = b.next_f64();
        assert_eq!(second.to_bits(), b.next_f64().to_bits());
    }

    #[test]
    fn different_keys_give_different_streams() {
        let x = Sampler::new(1, 0, 0).next_f64();
        let y = Sampler::new(1, 1, 0).next_f64();
        let z = Sampler::new(1, 0, 1).next_f64();
        let w = Sampler::new(2, 0, 0).next_f64();
        assert!(x != y && x != z && x != w && y != z);
    }

    #[test]
    fn moments_look_uniform() {
        let n = 200_000u64;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for i in 0..n {
            let v = Sampler::new(42, i, 0).next_f64();
            assert!((0.0..1.0).contains(&v));
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
        assert!((var - 1.0 / 12.0).abs() < 0.002, "var {var}");
    }
}
