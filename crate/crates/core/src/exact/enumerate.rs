//! Expectations over the random graph by exhaustive enumeration of the
//! uncertain edges, with a sampling fallback for large markets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Realization;
use crate::model::ProbMatrix;
use crate::numeric::NeumaierSum;

/// Enumerates graph realizations with positive probability. Edges with
/// `p in {0, 1}` are fixed; only the remaining ones are iterated.
pub(crate) struct GraphEnumerator<'a> {
    p: &'a ProbMatrix,
    free: Vec<(usize, usize)>,
    base: Vec<bool>,
}

impl<'a> GraphEnumerator<'a> {
    pub fn new(p: &'a ProbMatrix, cap_free_edges: usize) -> Result<Self> {
        let (q, d) = (p.agents(), p.objects());
        let mut free = Vec::new();
        let mut base = vec![false; q * d];
        for i in 0..q {
            for j in 0..d {
                let x = p.get(i, j);
                if x >= 1.0 {
                    base[i * d + j] = true;
                } else if x > 0.0 {
                    free.push((i, j));
                }
            }
        }
        if free.len() > cap_free_edges {
            return Err(Error::CapExceeded {
                what: "full-graph enumeration (random edges)",
                size: free.len() as u64,
                cap: cap_free_edges as u64,
            });
        }
        Ok(Self { p, free, base })
    }

    fn realization(&self, mask: u64) -> (Realization, f64) {
        let d = self.p.objects();
        let mut edges = self.base.clone();
        let mut prob = 1.0;
        for (bit, &(i, j)) in self.free.iter().enumerate() {
            let x = self.p.get(i, j);
            if mask >> bit & 1 == 1 {
                edges[i * d + j] = true;
                prob *= x;
            } else {
                prob *= 1.0 - x;
            }
        }
        (Realization::from_edges(self.p.agents(), d, edges), prob)
    }

    /// Folds every realization into per-chunk accumulators. Chunks are fixed
    /// by the high bits of the mask, so the returned order (and any ordered
    /// reduction of it) does not depend on the worker count.
    pub fn fold_chunks<T, I, F>(&self, init: I, step: F) -> Vec<T>
    where
        T: Send,
        I: Fn() -> T + Sync,
        F: Fn(&mut T, &Realization, f64) + Sync,
    {
        let n = self.free.len();
        let high = n.min(8);
        let low = n - high;
        (0u64..(1 << high))
            .into_par_iter()
            .map(|h| {
                let mut acc = init();
                for l in 0u64..(1 << low) {
                    let (g, prob) = self.realization(h << low | l);
                    step(&mut acc, &g, prob);
                }
                acc
            })
            .collect()
    }

    /// `E f(A)` over all realizations.
    pub fn expect<F>(&self, f: F) -> f64
    where
        F: Fn(&Realization) -> f64 + Sync,
    {
        let parts = self.fold_chunks(NeumaierSum::new, |acc, g, prob| {
            if prob > 0.0 {
                acc.add(prob * f(g));
            }
        });
        let mut total = NeumaierSum::new();
        total.extend(parts.iter().map(NeumaierSum::value));
        total.value()
    }
}

/// Sample mean of `f` over independently drawn graphs, with the half-width
/// of a normal-approximation confidence interval at level `confidence`.
pub(crate) fn sample_expectation<F>(
    p: &ProbMatrix,
    replicates: u64,
    seed: u64,
    confidence: f64,
    f: F,
) -> (f64, f64)
where
    F: Fn(&Realization) -> f64 + Sync,
{
    const BLOCK: u64 = 4096;
    let blocks = replicates.div_ceil(BLOCK);
    let parts: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let n = BLOCK.min(replicates - b * BLOCK);
            let (mut s, mut s2) = (NeumaierSum::new(), NeumaierSum::new());
            for _ in 0..n {
                let x = f(&Realization::sample(p, &mut rng));
                s.add(x);
                s2.add(x * x);
            }
            (s.value(), s2.value())
        })
        .collect();
    let (mut s, mut s2) = (NeumaierSum::new(), NeumaierSum::new());
    for (a, b) in parts {
        s.add(a);
        s2.add(b);
    }
    let n = replicates as f64;
    let mean = s.value() / n;
    let var = (s2.value() / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    let z = crate::stats::normal_quantile(0.5 + confidence / 2.0);
    (mean, z * (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probabilities_sum_to_one_and_fixed_edges_are_skipped() {
        let p = ProbMatrix::from_rows(&[vec![1.0, 0.3], vec![0.0, 0.6]]).unwrap();
        let e = GraphEnumerator::new(&p, 10).unwrap();
        assert_eq!(e.free.len(), 2);
        assert!((e.expect(|_| 1.0) - 1.0).abs() < 1e-15);
        let mean_deg1 = e.expect(|g| g.degree(1) as f64);
        assert!((mean_deg1 - 0.9).abs() < 1e-15);
    }

    #[test]
    fn cap_counts_random_edges_only() {
        let p = ProbMatrix::filled(4, 4, 0.5);
        assert!(matches!(
            GraphEnumerator::new(&p, 15),
            Err(Error::CapExceeded { size: 16, .. })
        ));
        let fixed = ProbMatrix::filled(10, 10, 1.0);
        assert!(GraphEnumerator::new(&fixed, 0).is_ok());
    }

    #[test]
    fn sampling_is_reproducible_and_close() {
        let p = ProbMatrix::filled(3, 2, 0.4);
        let a = sample_expectation(&p, 20_000, 7, 0.99, |g| g.degree(0) as f64);
        let b = sample_expectation(&p, 20_000, 7, 0.99, |g| g.degree(0) as f64);
        assert_eq!(a, b);
        assert!((a.0 - 1.2).abs() < a.1 + 1e-3, "{a:?}");
    }
}
