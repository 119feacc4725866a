//! Swendsen-Wang dynamics: the Ising chain on the complete graph, exact
//! small-n transition matrices, and the Potts chain on trees.

mod tree;

pub use tree::{
    evenly_spaced_edges, potts_edge_step, potts_tree_measure, potts_tree_sw_step,
    potts_tree_sw_step_with_bonds, tracked_edge_tv, tree_mix_bound, Coloring, EdgeConfig,
    TrackedEdgeTv, TreeSpec, POTTS_ENUMERATION_GUARD,
};

use alloc::vec::Vec;

use crate::error::{param_err, Error, Result};
use crate::graph::{percolate_pairs, DisjointSets};
use crate::stochastic::{check_probability, RandomStream};

/// Largest vertex count accepted by the exact enumerations.
pub const EXACT_GUARD: usize = 5;

/// An Ising configuration, one `+1`/`-1` spin per vertex.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpinConfig {
    spins: Vec<i8>,
}

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if spins.is_empty() {
            return Err(param_err!("a spin configuration needs at least one vertex"));
        }
        if let Some(s) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(param_err!("Ising spins are +1 or -1, got {s}"));
        }
        Ok(SpinConfig { spins })
    }

    pub fn all_plus(n: usize) -> Self {
        SpinConfig {
            spins: alloc::vec![1; n.max(1)],
        }
    }

    /// Configuration number `index` in counting order: bit `v` of the index
    /// set means vertex `v` carries `-1`.
    pub fn from_index(n: usize, index: usize) -> Self {
        SpinConfig {
            spins: (0..n)
                .map(|v| if index >> v & 1 == 1 { -1 } else { 1 })
                .collect(),
        }
    }

    pub fn index(&self) -> usize {
        self.spins
            .iter()
            .enumerate()
            .map(|(v, &s)| ((s < 0) as usize) << v)
            .sum()
    }

    pub fn n(&self) -> usize {
        self.spins.len()
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn magnetization(&self) -> i64 {
        self.spins.iter().map(|&s| s as i64).sum()
    }

    pub fn positives(&self) -> usize {
        self.spins.iter().filter(|&&s| s > 0).count()
    }
}

/// `beta = -ln(1 - p) / 2`, the inverse temperature at which `p`-percolation
/// Swendsen-Wang preserves the Ising measure.
pub fn ising_beta(p: f64) -> Result<f64> {
    check_probability(p)?;
    if p >= 1.0 {
        return Err(param_err!("p = 1 corresponds to infinite beta"));
    }
    Ok(-0.5 * libm::log1p(-p))
}

/// Inverse of [`ising_beta`].
pub fn ising_p(beta: f64) -> Result<f64> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(param_err!(
            "beta must be finite and nonnegative, got {beta}"
        ));
    }
    Ok(-libm::expm1(-2.0 * beta))
}

/// One Swendsen-Wang step on `K_n` with bond probability `c / n`.
pub fn sw_step_complete(
    sigma: &SpinConfig,
    c: f64,
    stream: &mut RandomStream,
) -> Result<SpinConfig> {
    let n = sigma.n();
    let p = c / n as f64;
    if !(c >= 0.0) || p > 1.0 {
        return Err(param_err!("need 0 <= c/n <= 1, got c = {c}, n = {n}"));
    }
    let mut out = alloc::vec![0i8; n];
    for class in [1i8, -1] {
        let members: Vec<usize> = (0..n).filter(|&v| sigma.spins[v] == class).collect();
        let mut sets = DisjointSets::new(members.len());
        percolate_pairs(members.len(), p, stream, |a, b| sets.union(a, b));
        let mut sign = alloc::vec![0i8; members.len()];
        for (i, &v) in members.iter().enumerate() {
            let root = sets.find(i);
            if sign[root] == 0 {
                sign[root] = stream.rademacher() as i8;
            }
            out[v] = sign[root];
        }
    }
    Ok(SpinConfig { spins: out })
}

fn check_exact(n: usize) -> Result<()> {
    if n == 0 {
        return Err(param_err!("need at least one vertex"));
    }
    if n > EXACT_GUARD {
        return Err(Error::Capacity(alloc::format!(
            "exact enumeration supports n <= {EXACT_GUARD}, got {n}"
        )));
    }
    Ok(())
}

/// Every bond percolation of the complete graph on `members`, as
/// `(component label per member, probability)`.
fn percolation_outcomes(members: &[usize], p: f64) -> Vec<(Vec<usize>, f64)> {
    let k = members.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|b| (0..b).map(move |a| (a, b))).collect();
    let mut out = Vec::with_capacity(1 << pairs.len());
    for mask in 0u32..(1 << pairs.len()) {
        let mut sets = DisjointSets::new(k);
        let mut weight = 1.0;
        for (e, &(a, b)) in pairs.iter().enumerate() {
            if mask >> e & 1 == 1 {
                sets.union(a, b);
                weight *= p;
            } else {
                weight *= 1.0 - p;
            }
        }
        if weight > 0.0 {
            out.push(((0..k).map(|i| sets.find(i)).collect(), weight));
        }
    }
    out
}

/// Row-stochastic Swendsen-Wang transition matrix on `K_n` over the `2^n`
/// configurations in [`SpinConfig::from_index`] order.
pub fn exact_transition_matrix(n: usize, p: f64) -> Result<Vec<Vec<f64>>> {
    check_exact(n)?;
    check_probability(p)?;
    let states = 1usize << n;
    let mut matrix = alloc::vec![alloc::vec![0.0; states]; states];
    for (from, row) in matrix.iter_mut().enumerate() {
        let sigma = SpinConfig::from_index(n, from);
        let plus: Vec<usize> = (0..n).filter(|&v| sigma.spins[v] > 0).collect();
        let minus: Vec<usize> = (0..n).filter(|&v| sigma.spins[v] < 0).collect();
        let plus_outcomes = percolation_outcomes(&plus, p);
        let minus_outcomes = percolation_outcomes(&minus, p);
        // Component id per vertex: plus labels as-is, minus labels shifted.
        let mut label = alloc::vec![0usize; n];
        for (pl, pw) in &plus_outcomes {
            for (ml, mw) in &minus_outcomes {
                for (i, &v) in plus.iter().enumerate() {
                    label[v] = pl[i];
                }
                for (i, &v) in minus.iter().enumerate() {
                    label[v] = n + ml[i];
                }
                let mut distinct = label.clone();
                distinct.sort_unstable();
                distinct.dedup();
                let weight = pw * mw * libm::ldexp(1.0, -(distinct.len() as i32));
                for (to, entry) in row.iter_mut().enumerate() {
                    let constant_on_components = (0..n).all(|u| {
                        (0..u).all(|v| label[u] != label[v] || (to >> u & 1) == (to >> v & 1))
                    });
                    if constant_on_components {
                        *entry += weight;
                    }
                }
            }
        }
    }
    Ok(matrix)
}

/// Ising measure on `K_n` at inverse temperature `beta`, indexed like
/// [`exact_transition_matrix`].
pub fn gibbs_vector(n: usize, beta: f64) -> Result<Vec<f64>> {
    check_exact(n)?;
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(param_err!(
            "beta must be finite and nonnegative, got {beta}"
        ));
    }
    let weights: Vec<f64> = (0..1usize << n)
        .map(|i| {
            let s = SpinConfig::from_index(n, i).magnetization() as f64;
            libm::exp(beta * (s * s - n as f64) / 2.0)
        })
        .collect();
    let z: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / z).collect())
}

/// Largest `|(pi P)_j - pi_j|`.
pub fn stationarity_residual(pi: &[f64], matrix: &[Vec<f64>]) -> f64 {
    (0..pi.len())
        .map(|j| {
            let pushed: f64 = pi.iter().zip(matrix).map(|(w, row)| w * row[j]).sum();
            (pushed - pi[j]).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        for i in 0..32 {
            assert_eq!(SpinConfig::from_index(5, i).index(), i);
        }
        assert_eq!(SpinConfig::from_index(3, 0b001).spins(), &[-1, 1, 1]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SpinConfig::new(alloc::vec![1, 0]).is_err());
        let s = SpinConfig::all_plus(3);
        let mut r = RandomStream::new(1, 0);
        assert!(sw_step_complete(&s, 4.0, &mut r).is_err());
        assert!(matches!(
            exact_transition_matrix(6, 0.1),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn single_vertex_and_free_matrices() {
        let m = exact_transition_matrix(1, 0.7).unwrap();
        assert!(m.iter().flatten().all(|&x| (x - 0.5).abs() < 1e-15));
        let m = exact_transition_matrix(2, 0.0).unwrap();
        assert!(m.iter().flatten().all(|&x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn rows_sum_to_one_and_flip_commutes() {
        for n in 1..=5 {
            let m = exact_transition_matrix(n, 0.35).unwrap();
            let full = (1 << n) - 1;
            for (i, row) in m.iter().enumerate() {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                for (j, &x) in row.iter().enumerate() {
                    assert!((x - m[i ^ full][j ^ full]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gibbs_closed_forms() {
        let g = gibbs_vector(2, 0.0).unwrap();
        assert!(g.iter().all(|&x| (x - 0.25).abs() < 1e-15));
        let beta: f64 = 0.8;
        let g = gibbs_vector(2, beta).unwrap();
        let e = libm::exp(beta);
        assert!((g[0] - e / (2.0 * e + 2.0 / e)).abs() < 1e-14);
        let g = gibbs_vector(3, 0.5).unwrap();
        assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        for i in 0..8 {
            assert!((g[i] - g[i ^ 7]).abs() < 1e-15);
        }
    }

    #[test]
    fn gibbs_is_stationary() {
        for n in 1..=4 {
            for p in [0.2, 0.4, 0.5, 0.8] {
                let pi = gibbs_vector(n, ising_beta(p).unwrap()).unwrap();
                let m = exact_transition_matrix(n, p).unwrap();
                assert!(stationarity_residual(&pi, &m) < 1e-10);
            }
        }
    }

    #[test]
    fn beta_p_round_trip() {
        let b = ising_beta(0.4).unwrap();
        assert!((ising_p(b).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn free_step_gives_independent_spins() {
        let s = SpinConfig::all_plus(3);
        let trials = 100_000;
        let mut extreme = 0;
        for i in 0..trials {
            let out = sw_step_complete(&s, 0.0, &mut RandomStream::new(2, i)).unwrap();
            extreme += (out.magnetization().abs() == 3) as u32;
        }
        assert!((extreme as f64 / trials as f64 - 0.25).abs() < 0.005);
    }

    #[test]
    fn full_bonds_give_one_cluster() {
        let s = SpinConfig::all_plus(2);
        let mut plus = 0;
        for i in 0..10_000 {
            let out = sw_step_complete(&s, 2.0, &mut RandomStream::new(3, i)).unwrap();
            assert_eq!(out.spins()[0], out.spins()[1]);
            plus += (out.spins()[0] > 0) as u32;
        }
        assert!((plus as f64 / 1e4 - 0.5).abs() < 0.02);
    }
}
