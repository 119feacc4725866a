//! Percolation on the complete graph `G(m, p)`: explicit edge sampling,
//! union-find components, the sequential exploration process and the
//! i.i.d.-increment walks that dominate it.

mod exploration;
mod walk;

pub use exploration::{
    approximate, explore, explore_on_graph, ApproxTrace, ComponentSampler, ExplorationTrace,
};
pub(crate) use walk::ln_choose;
pub use walk::{
    hitting_time_exact, hitting_time_spitzer, iid_walk, record_minima, survival_experiment,
    walk_fate, RecordMinima, SurvivalEstimate, WalkFate, WalkTrace, HITTING_DP_GUARD,
};

use alloc::vec::Vec;

use crate::error::{param_err, Error, Result};
use crate::stochastic::{check_probability, RandomStream};

/// Largest vertex count for which edges are ever materialised.
pub const EDGE_LIST_GUARD: usize = 100_000;

/// An undirected edge between 0-based vertex indices.
pub type Edge = (u32, u32);

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GraphSpec {
    pub m: usize,
    pub p: f64,
}

impl GraphSpec {
    pub fn new(m: usize, p: f64) -> Result<Self> {
        if m == 0 {
            return Err(param_err!("graph needs at least one vertex"));
        }
        check_probability(p)?;
        Ok(GraphSpec { m, p })
    }
}

/// Component sizes of one graph, largest first.
///
/// Ties keep the order in which the components were produced.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComponentSizes(Vec<usize>);

impl ComponentSizes {
    /// Sort sizes listed in discovery order.
    pub fn from_discovery_order(mut sizes: Vec<usize>) -> Self {
        // Stable: equal sizes stay in discovery order.
        sizes.sort_by(|a, b| b.cmp(a));
        ComponentSizes(sizes)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `|C_1|`, or 0 for the empty graph.
    pub fn largest(&self) -> usize {
        self.0.first().copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn sum_of_squares(&self) -> u64 {
        self.0.iter().map(|&s| (s as u64) * (s as u64)).sum()
    }

    pub fn isolated(&self) -> usize {
        self.0.iter().rev().take_while(|&&s| s == 1).count()
    }
}

/// Sample `G(m, p)` as an explicit edge list, skipping geometrically over
/// absent pairs.
pub fn sample_edge_set(spec: GraphSpec, stream: &mut RandomStream) -> Result<Vec<Edge>> {
    if spec.m > EDGE_LIST_GUARD {
        return Err(Error::Capacity(alloc::format!(
            "m = {} exceeds the edge-list guard of {EDGE_LIST_GUARD}; use `explore` instead",
            spec.m
        )));
    }
    let mut edges = Vec::new();
    percolate_pairs(spec.m, spec.p, stream, |a, b| {
        edges.push((a as u32, b as u32))
    });
    Ok(edges)
}

/// Visit every pair `a < b < m` retained independently with probability `p`.
pub(crate) fn percolate_pairs(
    m: usize,
    p: f64,
    stream: &mut RandomStream,
    mut keep: impl FnMut(usize, usize),
) {
    if m < 2 || p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        for b in 1..m {
            for a in 0..b {
                keep(a, b);
            }
        }
        return;
    }
    // Pairs are enumerated as (a, b) with a < b, b ascending; `a` runs past
    // `b` when a skip wraps into later rows.
    let ln_q = libm::log1p(-p);
    let (mut b, mut a) = (1usize, 0usize);
    let mut first = true;
    loop {
        let skip = libm::floor(libm::log(stream.uniform_open()) / ln_q);
        if skip >= (m * m) as f64 {
            return;
        }
        a += skip as usize + if first { 0 } else { 1 };
        first = false;
        while a >= b {
            a -= b;
            b += 1;
            if b >= m {
                return;
            }
        }
        keep(a, b);
    }
}

/// Disjoint-set forest with union by size and path halving.
#[derive(Clone, Debug)]
pub(crate) struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSets {
    pub(crate) fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n as u32).collect(),
            size: alloc::vec![1; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            core::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
    }

    pub(crate) fn size_of_root(&self, root: usize) -> usize {
        self.size[root] as usize
    }
}

pub(crate) fn check_edges(edges: &[Edge], m: usize) -> Result<()> {
    match edges
        .iter()
        .find(|&&(a, b)| a as usize >= m || b as usize >= m)
    {
        Some(&(a, b)) => Err(param_err!("edge ({a}, {b}) has an endpoint outside 0..{m}")),
        None => Ok(()),
    }
}

/// Exact component sizes of an explicit graph on `m` vertices.
pub fn components_of(edges: &[Edge], m: usize) -> Result<ComponentSizes> {
    check_edges(edges, m)?;
    let mut sets = DisjointSets::new(m);
    for &(a, b) in edges {
        sets.union(a as usize, b as usize);
    }
    // Components listed by their lowest vertex, i.e. the order in which an
    // ascending-index exploration discovers them.
    let mut by_lowest = Vec::new();
    let mut seen_root = alloc::vec![false; m];
    for v in 0..m {
        let r = sets.find(v);
        if !seen_root[r] {
            seen_root[r] = true;
            by_lowest.push(sets.size_of_root(r));
        }
    }
    Ok(ComponentSizes::from_discovery_order(by_lowest))
}
