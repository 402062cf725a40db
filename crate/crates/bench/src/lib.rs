//! Shared fixtures for the criterion benches.

use num_complex::Complex64;
use qpoisson_core::laurent::{LaurentSeries, NumericContext};
use qpoisson_core::qdiff::ExtensionClass;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn context() -> NumericContext {
    NumericContext::new(Complex64::new(0.1, 0.0), 1e-12).expect("valid context")
}

pub fn random_series(seed: u64, lo: i64, hi: i64) -> LaurentSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    LaurentSeries::polynomial((lo..=hi).map(|e| {
        (
            e,
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
        )
    }))
}

pub fn random_class(seed: u64, k: usize) -> ExtensionClass {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..2 * k)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    ExtensionClass::new(k, Complex64::new(0.8, 0.0), coords).expect("valid class")
}
