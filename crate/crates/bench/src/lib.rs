//! Benchmark fixtures shared by the criterion benches in `benches/`.

use harnacklab_core::covering::CylinderFamily;
use harnacklab_core::solutions::{AnalyticSolution, BarenblattSpec};
use harnacklab_core::{EllipticityParams, Slice, SpatialGrid, SymMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn params(p: f64, n: usize) -> EllipticityParams {
    EllipticityParams::new(1.0, 2.0, p, n).expect("fixed parameters are valid")
}

/// Symmetric `n x n` matrices with entries in `[-1, 1]`.
pub fn random_matrices(n: usize, count: usize, seed: u64) -> Vec<SymMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut m = SymMatrix::zeros(n);
            for i in 0..n {
                for j in i..n {
                    m.set(i, j, rng.random_range(-1.0..=1.0));
                }
            }
            m
        })
        .collect()
}

/// Barenblatt profile at `t = 1` on `[-2, 2]^n` with spacing `dx`.
pub fn barenblatt_slice(p: f64, n: usize, dx: f64) -> Slice {
    let b = BarenblattSpec::new(params(p, n)).expect("fixed parameters are valid");
    let space = SpatialGrid::new(&vec![0.0; n], &vec![2.0; n], dx).expect("fixed grid is valid");
    Slice::from_fn(space, 1.0, |x| b.value(x, 1.0).expect("inside the domain")).expect("finite values")
}

pub fn random_family(size: usize, n: usize, seed: u64) -> CylinderFamily {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CylinderFamily::random(&mut rng, size, n, 0.5, 3.0).expect("fixed family parameters are valid")
}
