//! Seeded randomness shared by targets, initialisation and Monte-Carlo estimates.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::C64;

/// The generator used everywhere a seed is accepted.
pub fn seeded(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator for `seed`.
pub fn seeded_stream(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = seeded(seed);
    rng.set_stream(stream);
    rng
}

/// Complex Gaussian with `E|z|^2 = 1`.
pub fn complex_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-random `d x d` unitary: QR of a Ginibre matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn haar_unitary<R: rand::Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<C64> {
    let g = DMatrix::from_fn(d, d, |_, _| complex_normal(rng));
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar-random unit vector in `C^d` (first column of a Haar unitary).
pub fn haar_vector<R: rand::Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<C64> {
    haar_unitary(d, rng).column(0).iter().copied().collect()
}
