use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const START_BOX: f64 = 20.0;

/// The all-ones vector followed by `count - 1` vectors uniform on `(0, 20)^n`.
/// Coordinate `j` of start `k` depends only on `(seed, k, j)`: ChaCha8 keyed
/// by `seed`, stream `k`, word position `2j`.
pub fn generate_starts(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut starts = Vec::with_capacity(count);
    if count == 0 {
        return starts;
    }
    starts.push(vec![1.0; n]);
    for k in 1..count {
        starts.push(
            (0..n)
                .map(|j| START_BOX * open_unit(seed, k as u64, j as u128))
                .collect(),
        );
    }
    starts
}

/// A uniform draw on the open interval `(0, 1)`.
fn open_unit(seed: u64, stream: u64, coord: u128) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(2 * coord);
    ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ones_first() {
        assert_eq!(generate_starts(4, 1, 9), vec![vec![1.0; 4]]);
        assert!(generate_starts(3, 0, 9).is_empty());
    }

    #[test]
    fn open_range_and_deterministic() {
        let a = generate_starts(2, 11, 42);
        assert_eq!(a.len(), 11);
        assert!(a[1..].iter().flatten().all(|&v| v > 0.0 && v < 20.0));
        assert_eq!(a, generate_starts(2, 11, 42));
        assert_ne!(a, generate_starts(2, 11, 43));
    }

    #[test]
    fn coordinates_do_not_depend_on_dimension_or_count() {
        let small = generate_starts(3, 4, 7);
        let big = generate_starts(10, 9, 7);
        for k in 1..4 {
            assert_eq!(small[k][..], big[k][..3]);
        }
    }
}
