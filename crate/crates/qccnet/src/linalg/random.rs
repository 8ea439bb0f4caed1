use super::{C64, CMatrix};
use rand::Rng;
use rand_distr::StandardNormal;

/// Complex Gaussian matrix: re and im of each entry are i.i.d. N(0, std²/2),
/// so E|z|² = std². Deterministic given the generator state.
pub fn random_gaussian_matrix<R: Rng>(rows: usize, cols: usize, std: f64, rng: &mut R) -> CMatrix {
    assert!(std > 0.0, "std must be positive");
    let s = std / 2.0f64.sqrt();
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mean_square_modulus_matches_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let a = random_gaussian_matrix(100, 100, 1.0, &mut rng);
        let mean_sq: f64 =
            a.data().iter().map(|z| z.norm_sqr()).sum::<f64>() / (a.rows() * a.cols()) as f64;
        // var(|z|^2) = 1 for unit-variance complex Gaussian; 3 sigma over 10^4 samples
        assert!((mean_sq - 1.0).abs() < 3.0 / 100.0, "mean |z|^2 = {mean_sq}");
    }

    #[test]
    fn seeded_determinism() {
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        let a = random_gaussian_matrix(4, 3, 0.5, &mut r1);
        let b = random_gaussian_matrix(4, 3, 0.5, &mut r2);
        assert_eq!(a, b);
        let mut r3 = ChaCha8Rng::seed_from_u64(10);
        let c = random_gaussian_matrix(4, 3, 0.5, &mut r3);
        assert_ne!(a, c);
    }
}
