use rand::Rng;

use super::Matrix;
use crate::error::{Error, Result};

/// Inverted dropout mask: each entry is 0 with probability `p` and
/// `1 / (1 - p)` otherwise, so the expectation of a masked value is unchanged.
pub fn dropout_mask(p: f64, len: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    if p == 0.0 {
        return Ok(vec![1.0; len]);
    }
    let keep = 1.0 / (1.0 - p);
    Ok((0..len)
        .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep })
        .collect())
}

/// Multiplies `m` elementwise by `mask` (row-major, same length as `m`).
pub fn apply_mask(m: &mut Matrix, mask: &[f64]) {
    debug_assert_eq!(m.data().len(), mask.len());
    for (x, k) in m.data_mut().iter_mut().zip(mask) {
        *x *= k;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::seeded_rng;

    #[test]
    fn zero_probability_keeps_everything() {
        let mut rng = seeded_rng(1);
        assert_eq!(dropout_mask(0.0, 5, &mut rng).unwrap(), vec![1.0; 5]);
    }

    #[test]
    fn half_dropout_keeps_about_half() {
        let mut rng = seeded_rng(42);
        let mask = dropout_mask(0.5, 1_000_000, &mut rng).unwrap();
        let kept = mask.iter().filter(|&&m| m > 0.0).count() as f64 / 1e6;
        assert!((kept - 0.5).abs() < 0.01, "{kept}");
        assert!(mask.iter().all(|&m| m == 0.0 || m == 2.0));
    }

    #[test]
    fn same_seed_same_mask() {
        let a = dropout_mask(0.3, 100, &mut seeded_rng(5)).unwrap();
        let b = dropout_mask(0.3, 100, &mut seeded_rng(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_probability() {
        let mut rng = seeded_rng(0);
        assert!(dropout_mask(1.0, 3, &mut rng).is_err());
        assert!(dropout_mask(-0.1, 3, &mut rng).is_err());
    }
}
