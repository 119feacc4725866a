use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Reverse;

use super::{check_edges, ComponentSizes, Edge, GraphSpec};
use crate::error::{param_err, Error, Result};
use crate::stochastic::{BinomialTable, EdgeRate, RandomStream};

/// The full record of one run of the sequential exploration process.
///
/// Vertices are active, explored or neutral. Step `t` explores the first
/// active vertex (or, when none is active, the first neutral one) and
/// activates its `eta[t]` neutral neighbours. Index conventions follow the
/// process: `active`, `neutral` and `y` run over `0..=m`, while `eta` and `z`
/// are stored for `t = 1..=m` at offset `t - 1`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExplorationTrace {
    m: usize,
    eta: Vec<usize>,
    active: Vec<usize>,
    neutral: Vec<usize>,
    y: Vec<i64>,
    z: Vec<usize>,
    boundaries: Vec<usize>,
}

impl ExplorationTrace {
    /// Rebuild every derived sequence from the increments `eta_1..eta_m`.
    pub fn from_increments(m: usize, eta: Vec<usize>) -> Result<Self> {
        if m == 0 || eta.len() != m {
            return Err(param_err!(
                "need exactly m = {m} increments, got {}",
                eta.len()
            ));
        }
        let mut active = Vec::with_capacity(m + 1);
        let mut neutral = Vec::with_capacity(m + 1);
        let mut y = Vec::with_capacity(m + 1);
        let mut z = Vec::with_capacity(m);
        let mut boundaries = Vec::new();
        active.push(1);
        neutral.push(m - 1);
        y.push(1i64);
        let mut finished = 0usize;
        for (i, &e) in eta.iter().enumerate() {
            let t = i + 1;
            let (a_prev, n_prev) = (active[i], neutral[i]);
            let restart = a_prev == 0;
            let pool = n_prev
                .checked_sub(restart as usize)
                .ok_or_else(|| param_err!("no vertex left to explore at step {t}"))?;
            if e > pool {
                return Err(param_err!(
                    "eta_{t} = {e} exceeds the {pool} neutral vertices"
                ));
            }
            // Z_t counts zeros of A among A_1..A_{t-1}.
            z.push(finished);
            let a = if restart { e } else { a_prev + e - 1 };
            active.push(a);
            neutral.push(pool - e);
            y.push(y[i] + e as i64 - 1);
            if a == 0 {
                finished += 1;
                boundaries.push(t);
            }
        }
        if active[m] != 0 {
            return Err(param_err!(
                "exploration ends with {} active vertices",
                active[m]
            ));
        }
        Ok(ExplorationTrace {
            m,
            eta,
            active,
            neutral,
            y,
            z,
            boundaries,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `eta_1..eta_m`.
    pub fn eta(&self) -> &[usize] {
        &self.eta
    }

    /// `A_0..A_m`.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    /// `N_0..N_m`.
    pub fn neutral(&self) -> &[usize] {
        &self.neutral
    }

    /// `Y_0..Y_m`.
    pub fn y(&self) -> &[i64] {
        &self.y
    }

    /// `Z_1..Z_m`.
    pub fn z(&self) -> &[usize] {
        &self.z
    }

    /// Times `t_1 < t_2 < ...` at which a component is completed.
    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    /// Component sizes in discovery order.
    pub fn sizes_in_discovery_order(&self) -> Vec<usize> {
        let mut prev = 0;
        self.boundaries
            .iter()
            .map(|&b| {
                let s = b - prev;
                prev = b;
                s
            })
            .collect()
    }

    pub fn component_sizes(&self) -> ComponentSizes {
        ComponentSizes::from_discovery_order(self.sizes_in_discovery_order())
    }

    /// Size of the component whose exploration interval contains time `t`.
    pub fn component_containing_time(&self, t: usize) -> Result<usize> {
        if t == 0 || t > self.m {
            return Err(param_err!("time {t} outside 1..={}", self.m));
        }
        let j = self.boundaries.partition_point(|&b| b < t);
        let start = if j == 0 { 0 } else { self.boundaries[j - 1] };
        Ok(self.boundaries[j] - start)
    }

    /// Check the recursions and identities linking the sequences, returning
    /// the first violated one.
    pub fn check_invariants(&self) -> Result<()> {
        let m = self.m;
        let fail =
            |what: &str, t: usize| Err(Error::Data(alloc::format!("{what} fails at t = {t}")));
        if self.active[0] != 1 || self.neutral[0] != m - 1 || self.y[0] != 1 {
            return fail("initial condition", 0);
        }
        let mut running_min = self.y[0];
        let mut zeros = 0usize;
        let mut b = self.boundaries.iter().peekable();
        for t in 1..=m {
            let restart = (self.active[t - 1] == 0) as usize;
            if self.neutral[t] + self.eta[t - 1] + restart != self.neutral[t - 1] {
                return fail("neutral recursion", t);
            }
            if self.neutral[t] + t + self.active[t] != m {
                return fail("vertex conservation", t);
            }
            if self.y[t] != self.y[t - 1] + self.eta[t - 1] as i64 - 1 {
                return fail("walk recursion", t);
            }
            if self.active[t] as i64 != self.y[t] - running_min + 1 {
                return fail("active count from record minimum", t);
            }
            if self.z[t - 1] != zeros {
                return fail("completed component count", t);
            }
            if self.y[t] != self.active[t] as i64 - zeros as i64 {
                return fail("walk as active minus completed", t);
            }
            let record = self.y[t] < running_min;
            if record != (self.active[t] == 0) {
                return fail("record minima mark component ends", t);
            }
            if record {
                if b.next() != Some(&t) {
                    return fail("boundary list", t);
                }
                zeros += 1;
            }
            running_min = running_min.min(self.y[t]);
        }
        if b.next().is_some() {
            return fail("boundary list", m);
        }
        Ok(())
    }
}

/// Samples component structure of `G(m, c/n)` for any `m <= max_m` through
/// the exploration process, without materialising edges.
#[derive(Clone, Debug)]
pub struct ComponentSampler {
    table: BinomialTable,
}

impl ComponentSampler {
    pub fn new(rate: EdgeRate, max_m: usize) -> Self {
        ComponentSampler {
            table: BinomialTable::for_rate(rate, max_m),
        }
    }

    pub fn with_probability(p: f64, max_m: usize) -> Result<Self> {
        Ok(ComponentSampler {
            table: BinomialTable::new(p, max_m)?,
        })
    }

    pub fn p(&self) -> f64 {
        self.table.p()
    }

    pub fn max_m(&self) -> usize {
        self.table.max_trials()
    }

    /// Run the exploration on `m` vertices, calling `step(eta_t, A_t, stream)`
    /// for `t = 1..=m`. The callback may draw from the same stream.
    #[inline]
    pub fn run(
        &self,
        m: usize,
        stream: &mut RandomStream,
        mut step: impl FnMut(usize, usize, &mut RandomStream),
    ) {
        if m == 0 {
            return;
        }
        let mut active = 1usize;
        let mut neutral = m - 1;
        for _ in 0..m {
            let restart = active == 0;
            let pool = neutral - restart as usize;
            let eta = self.table.sample(pool, stream);
            neutral = pool - eta;
            active = if restart { eta } else { active + eta - 1 };
            step(eta, active, stream);
        }
    }

    /// Call `f(size, stream)` for each component of `G(m, p)` in discovery order.
    #[inline]
    pub fn for_each_component(
        &self,
        m: usize,
        stream: &mut RandomStream,
        mut f: impl FnMut(usize, &mut RandomStream),
    ) {
        let mut start = 0usize;
        let mut t = 0usize;
        self.run(m, stream, |_, active, stream| {
            t += 1;
            if active == 0 {
                f(t - start, stream);
                start = t;
            }
        });
    }

    pub fn sizes(&self, m: usize, stream: &mut RandomStream) -> ComponentSizes {
        let mut sizes = Vec::new();
        self.for_each_component(m, stream, |s, _| sizes.push(s));
        ComponentSizes::from_discovery_order(sizes)
    }

    pub fn trace(&self, m: usize, stream: &mut RandomStream) -> ExplorationTrace {
        let mut eta = Vec::with_capacity(m);
        self.run(m, stream, |e, _, _| eta.push(e));
        ExplorationTrace::from_increments(m, eta).expect("sampled increments are consistent")
    }
}

/// Sample an exploration trace of `G(m, p)`, drawing each `eta_t` from its
/// conditional binomial law.
pub fn explore(spec: GraphSpec, stream: &mut RandomStream) -> ExplorationTrace {
    let sampler =
        ComponentSampler::with_probability(spec.p, spec.m).expect("GraphSpec validates p");
    sampler.trace(spec.m, stream)
}

/// Run the exploration on an explicit graph, visiting the lowest-index active
/// vertex first and restarting from the lowest-index neutral vertex.
pub fn explore_on_graph(edges: &[Edge], m: usize) -> Result<ExplorationTrace> {
    if m == 0 {
        return Err(param_err!("graph needs at least one vertex"));
    }
    check_edges(edges, m)?;
    let mut degree = alloc::vec![0usize; m + 1];
    for &(a, b) in edges {
        if a != b {
            degree[a as usize + 1] += 1;
            degree[b as usize + 1] += 1;
        }
    }
    for v in 0..m {
        degree[v + 1] += degree[v];
    }
    let offsets = degree;
    let mut fill = offsets.clone();
    let mut adjacency = alloc::vec![0u32; offsets[m]];
    for &(a, b) in edges {
        if a != b {
            adjacency[fill[a as usize]] = b;
            fill[a as usize] += 1;
            adjacency[fill[b as usize]] = a;
            fill[b as usize] += 1;
        }
    }

    #[derive(Clone, Copy, PartialEq)]
    enum State {
        Neutral,
        Active,
        Explored,
    }
    let mut state = alloc::vec![State::Neutral; m];
    let mut frontier = BinaryHeap::new();
    state[0] = State::Active;
    frontier.push(Reverse(0u32));
    let mut lowest_neutral = 1usize;
    let mut eta = Vec::with_capacity(m);
    for _ in 0..m {
        let w = match frontier.pop() {
            Some(Reverse(w)) => w as usize,
            None => {
                while state[lowest_neutral] != State::Neutral {
                    lowest_neutral += 1;
                }
                lowest_neutral
            }
        };
        state[w] = State::Explored;
        let mut found = 0;
        for &u in &adjacency[offsets[w]..offsets[w + 1]] {
            if state[u as usize] == State::Neutral {
                state[u as usize] = State::Active;
                frontier.push(Reverse(u));
                found += 1;
            }
        }
        eta.push(found);
    }
    ExplorationTrace::from_increments(m, eta)
}

/// The centred approximation of the exploration walk: drift
/// `D_t = E(eta_t - 1 | F_{t-1})`, martingale increments `Delta_t`, the
/// deterministic centre `y_t` and `Ytilde_t = y_t + sum (1-p)^{t-i} Delta_i`.
///
/// All vectors are indexed by `t - 1` for `t = 1..=m`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ApproxTrace {
    pub p: f64,
    pub delta: Vec<f64>,
    pub drift: Vec<f64>,
    pub ytilde: Vec<f64>,
    pub ydet: Vec<f64>,
}

/// Relative rounding allowance used when checking the approximation bound.
pub const APPROX_ROUNDING: f64 = 1e-9;

impl ApproxTrace {
    /// `max_t (|Y_t - Ytilde_t| - p t Z_t)`; non-positive when the
    /// approximation bound holds along the whole trace.
    pub fn bound_excess(&self, trace: &ExplorationTrace) -> f64 {
        (1..=trace.m())
            .map(|t| {
                let gap = (trace.y()[t] as f64 - self.ytilde[t - 1]).abs();
                gap - self.p * t as f64 * trace.z()[t - 1] as f64
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Whether the bound holds at every step up to floating-point rounding
    /// (`APPROX_ROUNDING` times `m`).
    pub fn bound_holds(&self, trace: &ExplorationTrace) -> bool {
        self.bound_excess(trace) <= APPROX_ROUNDING * trace.m() as f64
    }
}

pub fn approximate(trace: &ExplorationTrace, p: f64) -> ApproxTrace {
    let m = trace.m();
    let q = 1.0 - p;
    let ln_q = libm::log1p(-p);
    let mut delta = Vec::with_capacity(m);
    let mut drift = Vec::with_capacity(m);
    let mut ytilde = Vec::with_capacity(m);
    let mut ydet = Vec::with_capacity(m);
    let mut smoothed = 0.0;
    for t in 1..=m {
        let restart = (trace.active()[t - 1] == 0) as usize;
        let pool = (trace.neutral()[t - 1] - restart) as f64;
        let d = pool * p - 1.0;
        let dl = trace.eta()[t - 1] as f64 - 1.0 - d;
        smoothed = q * smoothed + dl;
        // The walk starts from one active vertex and m - 1 neutral ones, so
        // the deterministic centre discounts m - 1 rather than m.
        let centre = (m - t) as f64 - (m - 1) as f64 * libm::exp(t as f64 * ln_q);
        drift.push(d);
        delta.push(dl);
        ydet.push(centre);
        ytilde.push(centre + smoothed);
    }
    ApproxTrace {
        p,
        delta,
        drift,
        ytilde,
        ydet,
    }
}
