//! Exact law of an object's degree: a Poisson-binomial sum of independent
//! Bernoulli edge indicators.

/// Law of `deg(j)` for one object, together with the column of edge
/// probabilities it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeLaw {
    probs: Vec<f64>,
    pmf: Vec<f64>,
}

impl DegreeLaw {
    /// `P(deg = l)` for `l = 0..=q`.
    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `P(deg = 0)` computed directly as a product.
    pub fn prob_zero(&self) -> f64 {
        self.probs.iter().map(|p| 1.0 - p).product()
    }

    pub fn prob_positive(&self) -> f64 {
        1.0 - self.prob_zero()
    }

    /// Law of the degree counted among agents other than `i` (length `q`).
    pub fn conditional_pmf_excluding(&self, i: usize) -> Vec<f64> {
        poisson_binomial(
            self.probs
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != i)
                .map(|(_, &p)| p),
        )
    }

    /// Law of the degree counted among agents outside `excluded`.
    pub fn conditional_pmf_excluding_set(&self, excluded: &[usize]) -> Vec<f64> {
        poisson_binomial(
            self.probs
                .iter()
                .enumerate()
                .filter(|(k, _)| !excluded.contains(k))
                .map(|(_, &p)| p),
        )
    }
}

/// Exact degree law of a column `p_1j..p_qj` via the O(q^2) recursion.
pub fn degree_law(p_column: &[f64]) -> DegreeLaw {
    DegreeLaw {
        probs: p_column.to_vec(),
        pmf: poisson_binomial(p_column.iter().copied()),
    }
}

/// Poisson-binomial pmf by adding one Bernoulli at a time.
pub fn poisson_binomial<I: IntoIterator<Item = f64>>(probs: I) -> Vec<f64> {
    let mut pmf = vec![1.0];
    for p in probs {
        let mut next = vec![0.0; pmf.len() + 1];
        for (l, &m) in pmf.iter().enumerate() {
            next[l] += m * (1.0 - p);
            next[l + 1] += m * p;
        }
        pmf = next;
    }
    pmf
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Enumerates all 2^q edge patterns.
    fn brute(ps: &[f64]) -> Vec<f64> {
        let q = ps.len();
        let mut pmf = vec![0.0; q + 1];
        for mask in 0u32..(1 << q) {
            let mut prob = 1.0;
            for (i, p) in ps.iter().enumerate() {
                prob *= if mask >> i & 1 == 1 { *p } else { 1.0 - p };
            }
            pmf[mask.count_ones() as usize] += prob;
        }
        pmf
    }

    #[test]
    fn deterministic_degree() {
        assert_eq!(degree_law(&[1.0, 1.0, 1.0]).pmf(), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn two_fair_coins() {
        assert_eq!(degree_law(&[0.5, 0.5]).pmf(), &[0.25, 0.5, 0.25]);
    }

    #[test]
    fn matches_brute_force_for_homogeneous_column() {
        let ps = [0.3; 5];
        let law = degree_law(&ps);
        for (a, b) in law.pmf().iter().zip(brute(&ps)) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
    }

    #[test]
    fn conditional_law_drops_one_agent() {
        let ps = [0.2, 0.9, 0.5, 0.7];
        let law = degree_law(&ps);
        let cond = law.conditional_pmf_excluding(1);
        let expected = brute(&[0.2, 0.5, 0.7]);
        assert_eq!(cond.len(), 4);
        for (a, b) in cond.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        let cond2 = law.conditional_pmf_excluding_set(&[0, 3]);
        for (a, b) in cond2.iter().zip(brute(&[0.9, 0.5])) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn pmf_is_a_distribution_and_matches_enumeration(ps in proptest::collection::vec(0.0f64..=1.0, 1..=12)) {
                let law = degree_law(&ps);
                let total: f64 = law.pmf().iter().sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
                prop_assert!(law.pmf().iter().all(|&x| x >= 0.0));
                for (a, b) in law.pmf().iter().zip(brute(&ps)) {
                    prop_assert!((a - b).abs() < 1e-13);
                }
                prop_assert!((law.prob_zero() - law.pmf()[0]).abs() < 1e-14);
            }
        }
    }
}
