use super::{DenseState, C64, ZERO};
use crate::error::Result;
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` derived from `seed`; draw `k` of a Monte Carlo
/// run uses `stream_rng(seed, k)` so results do not depend on scheduling.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Haar-random state on `num_sites` sites of dimension `local_dim`.
pub fn random_state<R: Rng + ?Sized>(local_dim: usize, num_sites: usize, rng: &mut R) -> Result<DenseState> {
    let d = super::hilbert_dim(local_dim, num_sites)?;
    let amps: Vec<C64> = (0..d).map(|_| gaussian(rng)).collect();
    let mut s = DenseState::new(amps, local_dim, num_sites)?;
    s.normalize()?;
    Ok(s)
}

/// First `cols` columns of a Haar unitary of size `rows`.
///
/// Gram–Schmidt of a complex Ginibre matrix leaves R with a positive diagonal,
/// which is exactly the phase-corrected QR that makes Q Haar distributed.
/// Large isometries go through faer's blocked QR with the same phase fix.
pub fn haar_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Mat<C64> {
    assert!(cols <= rows && rows >= 1, "isometry needs 1 <= cols <= rows");
    let g = Mat::from_fn(rows, cols, |_, _| gaussian(rng));
    if cols <= 64 {
        gram_schmidt(g)
    } else {
        let qr = g.qr();
        let mut q = qr.compute_thin_Q();
        let r = qr.thin_R();
        for j in 0..cols {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
            for i in 0..rows {
                q[(i, j)] *= phase;
            }
        }
        q
    }
}

fn gram_schmidt(mut g: Mat<C64>) -> Mat<C64> {
    let (rows, cols) = (g.nrows(), g.ncols());
    for j in 0..cols {
        // two passes keep the columns orthogonal to machine precision
        for _ in 0..2 {
            for k in 0..j {
                let mut dot = ZERO;
                for i in 0..rows {
                    dot += g[(i, k)].conj() * g[(i, j)];
                }
                for i in 0..rows {
                    let gik = g[(i, k)];
                    g[(i, j)] -= dot * gik;
                }
            }
        }
        let norm = (0..rows).map(|i| g[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..rows {
            g[(i, j)] /= norm;
        }
    }
    g
}

/// Haar-random unitary of size `dim`.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Mat<C64> {
    haar_isometry(dim, dim, rng)
}

pub fn haar_unitary_from_seed(dim: usize, seed: u64) -> Mat<C64> {
    haar_unitary(dim, &mut seeded_rng(seed))
}
