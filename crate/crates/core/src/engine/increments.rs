use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Source of Brownian increments for one path.
pub trait Increments {
    /// Fills `out` with independent `N(0, dt)` increments.
    fn fill(&mut self, dt: f64, out: &mut [f64]);
}

/// Independent Gaussian increments from a seeded ChaCha8 stream.
#[derive(Debug, Clone)]
pub struct GaussianIncrements {
    rng: ChaCha8Rng,
}

impl GaussianIncrements {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

impl Increments for GaussianIncrements {
    fn fill(&mut self, dt: f64, out: &mut [f64]) {
        let scale = dt.sqrt();
        for v in out.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            *v = scale * z;
        }
    }
}

/// Increments over a step of `dt` built by summing `substeps` increments of
/// `dt / substeps` from an inner source.
///
/// Driving a path at step `k·h` with `RefinedIncrements { substeps: k }` over
/// the same seed as a path at step `h` couples both to the same Brownian
/// motion, which is what strong-convergence studies need.
pub struct RefinedIncrements<I> {
    inner: I,
    substeps: usize,
    scratch: Vec<f64>,
}

impl<I: Increments> RefinedIncrements<I> {
    pub fn new(inner: I, substeps: usize) -> Self {
        assert!(substeps >= 1, "at least one substep is required");
        Self {
            inner,
            substeps,
            scratch: Vec::new(),
        }
    }
}

impl<I: Increments> Increments for RefinedIncrements<I> {
    fn fill(&mut self, dt: f64, out: &mut [f64]) {
        let h = dt / self.substeps as f64;
        self.scratch.resize(out.len(), 0.0);
        out.iter_mut().for_each(|v| *v = 0.0);
        for _ in 0..self.substeps {
            self.inner.fill(h, &mut self.scratch);
            for (o, s) in out.iter_mut().zip(&self.scratch) {
                *o += s;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_moments() {
        let mut g = GaussianIncrements::new(3);
        let mut buf = vec![0.0; 200_000];
        g.fill(0.25, &mut buf);
        let n = buf.len() as f64;
        let mean = buf.iter().sum::<f64>() / n;
        let var = buf.iter().map(|v| v * v).sum::<f64>() / n;
        assert!(mean.abs() < 0.005);
        assert!((var - 0.25).abs() < 0.005);
    }

    #[test]
    fn refinement_sums_the_fine_path() {
        let mut fine = GaussianIncrements::new(9);
        let mut coarse = RefinedIncrements::new(GaussianIncrements::new(9), 2);
        let (mut a, mut b, mut c) = (vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]);
        fine.fill(0.5, &mut a);
        fine.fill(0.5, &mut b);
        coarse.fill(1.0, &mut c);
        for k in 0..3 {
            assert!((a[k] + b[k] - c[k]).abs() < 1e-15);
        }
    }
}
