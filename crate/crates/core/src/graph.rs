//! One realization of the random bipartite agent/object graph.

use rand::Rng;

use crate::model::{ProbMatrix, WeightScheme};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Realization {
    q: usize,
    d: usize,
    edges: Vec<bool>,
    degrees: Vec<usize>,
}

impl Realization {
    /// `edges` is row-major `q x d`: `edges[i * d + j]` is `1(i ~ j)`.
    pub fn from_edges(q: usize, d: usize, edges: Vec<bool>) -> Self {
        assert_eq!(edges.len(), q * d, "edge vector must be q*d long");
        let mut degrees = vec![0usize; d];
        for i in 0..q {
            for (j, deg) in degrees.iter_mut().enumerate() {
                *deg += usize::from(edges[i * d + j]);
            }
        }
        Self {
            q,
            d,
            edges,
            degrees,
        }
    }

    /// Independent Bernoulli(p_ij) edges.
    pub fn sample<R: Rng + ?Sized>(p: &ProbMatrix, rng: &mut R) -> Self {
        let (q, d) = (p.agents(), p.objects());
        let mut edges = Vec::with_capacity(q * d);
        for i in 0..q {
            for j in 0..d {
                let pij = p.get(i, j);
                // Keep p in {0, 1} deterministic without consuming entropy.
                let e = if pij >= 1.0 {
                    true
                } else if pij <= 0.0 {
                    false
                } else {
                    rng.gen::<f64>() < pij
                };
                edges.push(e);
            }
        }
        Self::from_edges(q, d, edges)
    }

    pub fn agents(&self) -> usize {
        self.q
    }

    pub fn objects(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges[i * self.d + j]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    #[inline]
    pub fn degree(&self, j: usize) -> usize {
        self.degrees[j]
    }

    pub fn uninsured_count(&self) -> usize {
        self.degrees.iter().filter(|&&k| k == 0).count()
    }

    /// Weighted adjacency `A_ij = 1(i ~ j) W_ij`, row-major. Uninsured
    /// objects contribute zero to every agent.
    pub fn weighted(&self, scheme: &WeightScheme) -> Vec<f64> {
        let mut a = vec![0.0; self.q * self.d];
        for i in 0..self.q {
            for j in 0..self.d {
                if self.has_edge(i, j) {
                    a[i * self.d + j] = scheme.weight(i, j, self.degrees[j]);
                }
            }
        }
        a
    }

    /// Row-wise product `A v` for a weighted matrix from [`Self::weighted`].
    pub fn apply(&self, a: &[f64], v: &[f64]) -> Vec<f64> {
        (0..self.q)
            .map(|i| {
                a[i * self.d..(i + 1) * self.d]
                    .iter()
                    .zip(v)
                    .map(|(x, y)| x * y)
                    .sum()
            })
            .collect()
    }

    /// Share of object `j` left with society: `1 - sum_i A_ij`.
    pub fn uninsured_share(&self, a: &[f64], scheme: &WeightScheme, j: usize) -> f64 {
        if matches!(scheme, WeightScheme::Proportional) {
            return if self.degrees[j] == 0 { 1.0 } else { 0.0 };
        }
        1.0 - (0..self.q).map(|i| a[i * self.d + j]).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::WeightScheme;

    #[test]
    fn proportional_columns_sum_to_one_or_zero() {
        let g = Realization::from_edges(3, 2, vec![true, false, true, false, false, false]);
        assert_eq!(g.degrees(), &[2, 0]);
        let a = g.weighted(&WeightScheme::Proportional);
        assert_eq!(a, vec![0.5, 0.0, 0.5, 0.0, 0.0, 0.0]);
        assert_eq!(g.uninsured_share(&a, &WeightScheme::Proportional, 1), 1.0);
        assert_eq!(g.apply(&a, &[2.0, 7.0]), vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn compensated_column_r_norm_is_degree() {
        let g = Realization::from_edges(3, 1, vec![true, true, true]);
        let r = 2.0;
        let a = g.weighted(&WeightScheme::Compensated { r });
        let n = a.iter().map(|x| x.powf(r)).sum::<f64>().powf(1.0 / r);
        assert!((n - 3.0).abs() < 1e-12);
    }
}
