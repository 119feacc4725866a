//! q-state Potts Swendsen-Wang on trees and its edge-dual chain.
//!
//! Edge `i - 1` joins vertex `i` to `parent(i)`; vertex 0 is the root.

use alloc::vec::Vec;

use crate::error::{param_err, Error, Result};
use crate::exec::Executor;
use crate::stochastic::{check_probability, RandomStream};

/// Largest `q^n` accepted by [`potts_tree_measure`].
pub const POTTS_ENUMERATION_GUARD: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TreeSpec {
    parent: Vec<usize>,
    q: u32,
    p: f64,
    /// Vertices ordered so that every parent precedes its children.
    order: Vec<usize>,
}

impl TreeSpec {
    /// `parent[0]` is ignored; every other vertex must reach the root.
    pub fn new(parent: Vec<usize>, q: u32, p: f64) -> Result<Self> {
        check_probability(p)?;
        if q < 2 {
            return Err(param_err!("need q >= 2 colours, got {q}"));
        }
        let n = parent.len();
        if n == 0 {
            return Err(param_err!("a tree needs at least one vertex"));
        }
        let mut children = alloc::vec![Vec::new(); n];
        for (v, &u) in parent.iter().enumerate().skip(1) {
            if u >= n || u == v {
                return Err(param_err!("vertex {v} has invalid parent {u}"));
            }
            children[u].push(v);
        }
        let mut order = Vec::with_capacity(n);
        order.push(0);
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            order.extend_from_slice(&children[v]);
        }
        if order.len() != n {
            return Err(param_err!("parent array contains a cycle"));
        }
        Ok(TreeSpec {
            parent,
            q,
            p,
            order,
        })
    }

    pub fn path(n: usize, q: u32, p: f64) -> Result<Self> {
        Self::new((0..n).map(|v| v.saturating_sub(1)).collect(), q, p)
    }

    /// Random recursive tree: vertex `i` attaches to a uniform earlier vertex.
    pub fn random_recursive(n: usize, q: u32, p: f64, stream: &mut RandomStream) -> Result<Self> {
        let parent = (0..n)
            .map(|v| {
                if v == 0 {
                    0
                } else {
                    stream.below(v as u64) as usize
                }
            })
            .collect();
        Self::new(parent, q, p)
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn edge_count(&self) -> usize {
        self.n() - 1
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn parent(&self, v: usize) -> usize {
        self.parent[v]
    }

    /// Endpoints `(child, parent)` of edge `e`.
    pub fn edge(&self, e: usize) -> (usize, usize) {
        (e + 1, self.parent[e + 1])
    }

    /// Stationary probability that an edge of the dual chain is open.
    pub fn open_edge_probability(&self) -> f64 {
        let up = self.p / self.q as f64;
        up / (up + 1.0 - self.p)
    }
}

/// Open/closed state of every tree edge.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EdgeConfig {
    bits: Vec<bool>,
}

impl EdgeConfig {
    pub fn new(bits: Vec<bool>, tree: &TreeSpec) -> Result<Self> {
        if bits.len() != tree.edge_count() {
            return Err(param_err!(
                "tree has {} edges, configuration has {}",
                tree.edge_count(),
                bits.len()
            ));
        }
        Ok(EdgeConfig { bits })
    }

    pub fn all(tree: &TreeSpec, open: bool) -> Self {
        EdgeConfig {
            bits: alloc::vec![open; tree.edge_count()],
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Potts colouring with colours `1..=q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Coloring {
    colors: Vec<u32>,
    q: u32,
}

impl Coloring {
    pub fn new(colors: Vec<u32>, q: u32) -> Result<Self> {
        if let Some(c) = colors.iter().find(|&&c| c == 0 || c > q) {
            return Err(param_err!("colour {c} outside 1..={q}"));
        }
        Ok(Coloring { colors, q })
    }

    pub fn monochromatic(n: usize, q: u32) -> Self {
        Coloring {
            colors: alloc::vec![1; n],
            q,
        }
    }

    /// Colouring number `index` in base-`q` counting order, vertex 0 least
    /// significant.
    pub fn from_index(n: usize, q: u32, mut index: usize) -> Self {
        let colors = (0..n)
            .map(|_| {
                let d = index % q as usize;
                index /= q as usize;
                d as u32 + 1
            })
            .collect();
        Coloring { colors, q }
    }

    pub fn index(&self) -> usize {
        self.colors
            .iter()
            .rev()
            .fold(0, |acc, &c| acc * self.q as usize + (c - 1) as usize)
    }

    pub fn colors(&self) -> &[u32] {
        &self.colors
    }

    pub fn q(&self) -> u32 {
        self.q
    }
}

/// One step of the edge-dual chain: closed edges open with probability
/// `p / q`, open edges stay open with probability `p`.
pub fn potts_edge_step(eta: &EdgeConfig, tree: &TreeSpec, stream: &mut RandomStream) -> EdgeConfig {
    let up = tree.p / tree.q as f64;
    EdgeConfig {
        bits: eta
            .bits
            .iter()
            .map(|&open| stream.bernoulli(if open { tree.p } else { up }))
            .collect(),
    }
}

/// One Swendsen-Wang step; see [`potts_tree_sw_step_with_bonds`].
pub fn potts_tree_sw_step(
    sigma: &Coloring,
    tree: &TreeSpec,
    stream: &mut RandomStream,
) -> Result<Coloring> {
    potts_tree_sw_step_with_bonds(sigma, tree, stream).map(|(c, _)| c)
}

/// Percolate monochromatic edges at `p`, recolour each cluster uniformly.
/// Also returns the retained bonds, which form the edge-dual state.
pub fn potts_tree_sw_step_with_bonds(
    sigma: &Coloring,
    tree: &TreeSpec,
    stream: &mut RandomStream,
) -> Result<(Coloring, EdgeConfig)> {
    if sigma.colors.len() != tree.n() || sigma.q != tree.q {
        return Err(param_err!(
            "colouring has {} vertices and {} colours; tree has {} and {}",
            sigma.colors.len(),
            sigma.q,
            tree.n(),
            tree.q
        ));
    }
    let bits: Vec<bool> = (1..tree.n())
        .map(|v| sigma.colors[v] == sigma.colors[tree.parent[v]] && stream.bernoulli(tree.p))
        .collect();
    let mut colors = alloc::vec![0u32; tree.n()];
    for &v in &tree.order {
        colors[v] = if v != 0 && bits[v - 1] {
            colors[tree.parent[v]]
        } else {
            stream.below(tree.q as u64) as u32 + 1
        };
    }
    Ok((Coloring { colors, q: tree.q }, EdgeConfig { bits }))
}

/// Potts measure on the tree with weight `1 / (1 - p)` per monochromatic
/// edge, indexed by [`Coloring::from_index`].
pub fn potts_tree_measure(tree: &TreeSpec) -> Result<Vec<f64>> {
    if tree.p >= 1.0 {
        return Err(param_err!(
            "p = 1 has no Potts measure at finite temperature"
        ));
    }
    let states = (tree.q as usize)
        .checked_pow(tree.n() as u32)
        .filter(|&s| s <= POTTS_ENUMERATION_GUARD)
        .ok_or_else(|| {
            Error::Capacity(alloc::format!(
                "q^n exceeds {POTTS_ENUMERATION_GUARD} colourings"
            ))
        })?;
    let ln_w = -libm::log1p(-tree.p);
    let weights: Vec<f64> = (0..states)
        .map(|i| {
            let c = Coloring::from_index(tree.n(), tree.q, i);
            let same = (1..tree.n())
                .filter(|&v| c.colors[v] == c.colors[tree.parent[v]])
                .count();
            libm::exp(ln_w * same as f64)
        })
        .collect();
    let z: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / z).collect())
}

/// Joint law of a few tracked edges of the edge-dual state after `steps`
/// SW steps from a monochromatic colouring, compared with the stationary
/// product law.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrackedEdgeTv {
    pub steps: u64,
    pub tracked: Vec<usize>,
    pub trials: usize,
    /// Empirical TV to the stationary product law.
    pub tv: f64,
    /// Exact TV of the tracked marginal at `steps`, from the two-state
    /// edge chain started fully open.
    pub exact_tv: f64,
    /// Expected plug-in TV under exact stationarity, `sum sqrt(pi) / (2 sqrt(N))`.
    pub allowance: f64,
}

/// `k` edge indices spread evenly over the tree's edges.
pub fn evenly_spaced_edges(tree: &TreeSpec, k: usize) -> Vec<usize> {
    let e = tree.edge_count();
    let k = k.min(e);
    (0..k).map(|i| (2 * i + 1) * e / (2 * k)).collect()
}

fn product_law(prob_open: f64, k: usize) -> Vec<f64> {
    (0..1usize << k)
        .map(|atom| {
            let ones = atom.count_ones() as i32;
            libm::pow(prob_open, ones as f64) * libm::pow(1.0 - prob_open, (k as i32 - ones) as f64)
        })
        .collect()
}

/// Run `trials` SW chains (trial `i` on stream `(seed, i)`) for `steps`
/// steps and compare the tracked bonds with the stationary product law.
pub fn tracked_edge_tv<E: Executor>(
    tree: &TreeSpec,
    steps: u64,
    tracked: &[usize],
    trials: usize,
    seed: u64,
    exec: &E,
) -> Result<TrackedEdgeTv> {
    if steps == 0 || trials == 0 {
        return Err(param_err!("need at least one step and one trial"));
    }
    if tracked.is_empty() || tracked.len() > 16 || tracked.iter().any(|&e| e >= tree.edge_count()) {
        return Err(param_err!("track between 1 and 16 valid edges"));
    }
    let k = tracked.len();
    let atoms = exec.map(trials, |i| {
        let mut s = RandomStream::new(seed, i as u64);
        let mut sigma = Coloring::monochromatic(tree.n(), tree.q);
        let mut bonds = EdgeConfig::all(tree, true);
        for _ in 0..steps {
            (sigma, bonds) =
                potts_tree_sw_step_with_bonds(&sigma, tree, &mut s).expect("matching tree");
        }
        tracked
            .iter()
            .enumerate()
            .fold(0usize, |acc, (j, &e)| acc | (bonds.bits[e] as usize) << j)
    });
    let mut counts = alloc::vec![0u64; 1 << k];
    for a in atoms {
        counts[a] += 1;
    }
    let pi = tree.open_edge_probability();
    let target = product_law(pi, k);
    let lambda = tree.p * (1.0 - 1.0 / tree.q as f64);
    let at_t = product_law(pi + (1.0 - pi) * libm::pow(lambda, steps as f64), k);
    let half_l1 =
        |a: &[f64], b: &[f64]| 0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / trials as f64).collect();
    Ok(TrackedEdgeTv {
        steps,
        tracked: tracked.to_vec(),
        trials,
        tv: half_l1(&empirical, &target),
        exact_tv: half_l1(&at_t, &target),
        allowance: target.iter().map(|&v| libm::sqrt(v)).sum::<f64>()
            / (2.0 * libm::sqrt(trials as f64)),
    })
}

/// `ceil((ln n + ln 4) / -ln(p (1 - 1/q)))`, the path-coupling bound for the
/// edge-dual chain.
pub fn tree_mix_bound(n: usize, p: f64, q: u32) -> Result<u64> {
    if n == 0 || q < 2 {
        return Err(param_err!("need n >= 1 and q >= 2"));
    }
    let contraction = p * (1.0 - 1.0 / q as f64);
    if !(contraction > 0.0 && contraction < 1.0) {
        return Err(param_err!("need 0 < p (1 - 1/q) < 1, got {contraction}"));
    }
    let t = (libm::log(n as f64) + libm::log(4.0)) / -libm::log(contraction);
    Ok((libm::ceil(t) as u64).max(1))
}
