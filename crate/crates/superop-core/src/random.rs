//! Seeded random matrices and channels.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{CoreError, Result};
use crate::linalg::{self, c64, CMat};
use crate::superop::{ChoiMatrix, SuperOp};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex Gaussian matrix with independent standard normal real and
/// imaginary parts.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    Mat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64::new(re, im)
    })
}

/// Hermitian matrix `(G + G†)/2` from a Ginibre sample.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    linalg::hermitian_part(ginibre(n, n, rng).as_ref())
}

/// `X^{-1/2}` for a positive definite Hermitian `X`.
fn inv_sqrt(x: &CMat) -> Result<CMat> {
    let (w, u) = linalg::eigh(x.as_ref())?;
    if w[0] <= 0.0 {
        return Err(CoreError::Invalid("partial trace is not positive definite".into()));
    }
    let n = w.len();
    let scaled = Mat::from_fn(n, n, |i, j| u[(i, j)] * (1.0 / w[j].sqrt()));
    Ok(&scaled * u.adjoint())
}

/// Turns a positive definite Choi matrix into a channel by the congruence
/// `σ ↦ (1 ⊗ X^{-1/2}) σ (1 ⊗ X^{-1/2})`, `X = Tr_out σ`. Positivity is kept
/// exactly and the trace condition holds to rounding.
pub fn normalize_choi(sigma: &ChoiMatrix) -> Result<SuperOp> {
    let d = sigma.d();
    let x = sigma.partial_trace_out();
    let xs = inv_sqrt(&x)?;
    let k = linalg::kron(linalg::identity(d).as_ref(), xs.as_ref());
    let fixed = &(&k * sigma.mat()) * &k;
    let fixed = linalg::hermitian_part(fixed.as_ref());
    Ok(ChoiMatrix::new(d, fixed)?.to_superop())
}

/// A random CPT map of full Kraus rank: Choi matrix `G G†` for a d²×d²
/// Ginibre `G`, then trace-normalized by [`normalize_choi`].
pub fn random_channel(d: usize, seed: u64) -> Result<SuperOp> {
    let mut rng = rng_from_seed(seed);
    random_channel_with(d, d * d, &mut rng)
}

/// Random CPT map whose Choi matrix has rank at most `rank`.
pub fn random_channel_with<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> Result<SuperOp> {
    if d < 2 {
        return Err(CoreError::Invalid(format!("random_channel needs d ≥ 2, got {d}")));
    }
    if rank == 0 {
        return Err(CoreError::Invalid("Kraus rank must be positive".into()));
    }
    let g = ginibre(d * d, rank, rng);
    let sigma = &g * g.adjoint();
    normalize_choi(&ChoiMatrix::new(d, sigma)?)
}
