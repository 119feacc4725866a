//! Cross-checks between the full spin dynamics, its exact transition
//! matrix and the reduced magnetization chains.

use std::collections::BTreeMap;

use swcluster_core::analysis::ks_two_sample;
use swcluster_core::coupling::{couple_supercritical, exact_stationary, tv_to_law, LatticeLaw};
use swcluster_core::magnetization::{ChainParams, MagnetizationChain, TwoDimState, Variant};
use swcluster_core::stochastic::RandomStream;
use swcluster_core::sw::{
    exact_transition_matrix, potts_edge_step, potts_tree_sw_step_with_bonds, sw_step_complete,
    Coloring, EdgeConfig, SpinConfig, TreeSpec,
};

/// Plug-in TV between empirical counts and an exact law over the same keys.
fn tv_counts<K: Ord + Copy>(
    counts: &BTreeMap<K, usize>,
    exact: &BTreeMap<K, f64>,
    trials: usize,
) -> f64 {
    let mut keys: Vec<K> = counts.keys().chain(exact.keys()).copied().collect();
    keys.sort();
    keys.dedup();
    0.5 * keys
        .iter()
        .map(|k| {
            let e = *counts.get(k).unwrap_or(&0) as f64 / trials as f64;
            (e - exact.get(k).copied().unwrap_or(0.0)).abs()
        })
        .sum::<f64>()
}

#[test]
fn spin_step_matches_exact_matrix() {
    for (n, p) in [(4usize, 0.4), (5, 0.3)] {
        let matrix = exact_transition_matrix(n, p).unwrap();
        let start = SpinConfig::from_index(n, 0b0110);
        let row: BTreeMap<usize, f64> = matrix[start.index()].iter().copied().enumerate().collect();
        let trials = 200_000;
        let mut counts = BTreeMap::new();
        let mut s = RandomStream::new(11, n as u64);
        for _ in 0..trials {
            let next = sw_step_complete(&start, p * n as f64, &mut s).unwrap();
            *counts.entry(next.index()).or_insert(0) += 1;
        }
        let tv = tv_counts(&counts, &row, trials);
        assert!(tv <= 0.01, "n = {n}: tv = {tv}");
    }
}

#[test]
fn magnetization_chain_is_the_projected_spin_chain() {
    let (n, p) = (5usize, 0.35);
    let matrix = exact_transition_matrix(n, p).unwrap();
    let chain =
        MagnetizationChain::new(ChainParams::new(n, p * n as f64, Variant::Standard).unwrap())
            .unwrap();
    for start in [0b11111usize, 0b00111, 0b00001] {
        let sigma = SpinConfig::from_index(n, start);
        let x = sigma.magnetization().abs();
        let mut exact = BTreeMap::new();
        for (j, w) in matrix[start].iter().enumerate() {
            *exact
                .entry(SpinConfig::from_index(n, j).magnetization().abs())
                .or_insert(0.0) += w;
        }
        let trials = 200_000;
        let mut counts = BTreeMap::new();
        let mut s = RandomStream::new(12, start as u64);
        for _ in 0..trials {
            *counts
                .entry(chain.step_standard(x, &mut s).unwrap())
                .or_insert(0) += 1;
        }
        let tv = tv_counts(&counts, &exact, trials);
        assert!(tv <= 0.01, "x = {x}: tv = {tv}");
    }
}

#[test]
fn two_block_chain_is_the_projected_spin_chain() {
    // Blocks {0, 1} and {2, 3, 4}; bit i of the index is vertex i.
    let (n, p) = (5usize, 0.4);
    let (g1, g2) = (2usize, 3usize);
    let matrix = exact_transition_matrix(n, p).unwrap();
    let chain =
        MagnetizationChain::new(ChainParams::new(n, p * n as f64, Variant::TwoDim).unwrap())
            .unwrap();
    let block_counts = |idx: usize| {
        let spins = SpinConfig::from_index(n, idx);
        let y = spins.spins()[..g1].iter().filter(|&&v| v == 1).count();
        let z = spins.spins()[g1..].iter().filter(|&&v| v == 1).count();
        (y, z)
    };
    for start in [0b11111usize, 0b11100, 0b00101] {
        let (y, z) = block_counts(start);
        let mut exact = BTreeMap::new();
        for (j, w) in matrix[start].iter().enumerate() {
            *exact.entry(block_counts(j)).or_insert(0.0) += w;
        }
        let state = TwoDimState::new(y, z, g1, g2).unwrap();
        let trials = 200_000;
        let mut counts = BTreeMap::new();
        let mut s = RandomStream::new(13, start as u64);
        for _ in 0..trials {
            let next = chain.step_two_dim(state, &mut s).unwrap();
            *counts.entry((next.y, next.z)).or_insert(0) += 1;
        }
        let tv = tv_counts(&counts, &exact, trials);
        assert!(tv <= 0.015, "start ({y}, {z}): tv = {tv}");
    }
}

#[test]
fn modified_chain_folds_onto_standard_chain() {
    let n = 512;
    for (c, x) in [(2.0, 200i64), (3.0, 0), (1.5, 512)] {
        let std_chain =
            MagnetizationChain::new(ChainParams::new(n, c, Variant::Standard).unwrap()).unwrap();
        let mod_chain =
            MagnetizationChain::new(ChainParams::new(n, c, Variant::ModifiedLargest).unwrap())
                .unwrap();
        let trials = 20_000;
        let mut s = RandomStream::new(14, 0);
        let a: Vec<f64> = (0..trials)
            .map(|_| std_chain.step(x, &mut s).unwrap() as f64)
            .collect();
        let mut s = RandomStream::new(14, 1);
        let b: Vec<f64> = (0..trials)
            .map(|_| mod_chain.step(x, &mut s).unwrap().abs() as f64)
            .collect();
        let ks = ks_two_sample(&a, &b).unwrap();
        assert!(ks.p_value > 1e-3, "c = {c}, x = {x}: {ks:?}");
    }
}

#[test]
fn stationary_law_is_a_fixed_point() {
    let (n, c) = (256usize, 2.0);
    let law = exact_stationary(n, c).unwrap();
    let abs: LatticeLaw = law.abs_law();
    let chain =
        MagnetizationChain::new(ChainParams::new(n, c, Variant::Standard).unwrap()).unwrap();
    let trials = 50_000;
    let after: Vec<i64> = (0..trials)
        .map(|i| {
            let mut s = RandomStream::new(15, i as u64);
            let x0 = abs.sample(&mut s);
            chain.step(x0, &mut s).unwrap()
        })
        .collect();
    let tv = tv_to_law(&after, &abs).unwrap();
    let allowance = abs.plug_in_allowance(trials);
    // Fresh exact draws give the reference level of plug-in noise.
    let mut s = RandomStream::new(16, 0);
    let fresh: Vec<i64> = (0..trials).map(|_| abs.sample(&mut s)).collect();
    let reference = tv_to_law(&fresh, &abs).unwrap();
    assert!(tv <= allowance + 0.01, "tv = {tv}, allowance = {allowance}");
    assert!(
        (tv - reference).abs() <= 0.02,
        "tv = {tv}, exact draws give {reference}"
    );
}

#[test]
fn far_from_stationarity_the_law_moves() {
    // The same statistic after one step from all-plus is far above the
    // plug-in allowance, so the fixed-point test above has power.
    let (n, c) = (256usize, 2.0);
    let abs = exact_stationary(n, c).unwrap().abs_law();
    let chain =
        MagnetizationChain::new(ChainParams::new(n, c, Variant::Standard).unwrap()).unwrap();
    let trials = 50_000;
    let mut s = RandomStream::new(17, 0);
    let after: Vec<i64> = (0..trials)
        .map(|_| chain.step(n as i64, &mut s).unwrap())
        .collect();
    let tv = tv_to_law(&after, &abs).unwrap();
    assert!(tv > 0.1 + abs.plug_in_allowance(trials), "tv = {tv}");
}

#[test]
fn coupled_chains_stay_together_after_meeting() {
    let (n, c) = (10_000usize, 3.0);
    let chain =
        MagnetizationChain::new(ChainParams::new(n, c, Variant::Standard).unwrap()).unwrap();
    let mut met_runs = 0;
    for trial in 0..40u64 {
        let mut sx = RandomStream::new(18, 3 * trial);
        let mut sy = RandomStream::new(18, 3 * trial + 1);
        let mut sc = RandomStream::new(18, 3 * trial + 2);
        let (mut x, mut y) = (8534i64, 8634i64);
        let mut met = false;
        for _ in 0..6 {
            // Once together, both chains read the same percolation stream.
            let o = if met {
                let mut shared = sx.clone();
                let o = couple_supercritical(x, y, &chain, &mut sx, &mut shared, &mut sc).unwrap();
                assert!(o.met && o.x == o.y, "trial {trial} separated after meeting");
                o
            } else {
                couple_supercritical(x, y, &chain, &mut sx, &mut sy, &mut sc).unwrap()
            };
            if o.met {
                assert_eq!(o.x, o.y);
            }
            met |= o.met;
            (x, y) = (o.x, o.y);
        }
        met_runs += met as usize;
    }
    assert!(met_runs > 0);
}

#[test]
fn spin_bonds_follow_the_edge_chain() {
    // Starting monochromatic, the retained bonds of the spin dynamics are a
    // copy of the edge chain started from all edges open.
    let mut shape = RandomStream::new(19, u64::MAX);
    let tree = TreeSpec::random_recursive(9, 3, 0.45, &mut shape).unwrap();
    let steps = 3;
    let trials = 40_000;
    let mut from_spins = vec![0usize; tree.edge_count() + 1];
    let mut from_edges = vec![0usize; tree.edge_count() + 1];
    let mut per_edge = (
        vec![0usize; tree.edge_count()],
        vec![0usize; tree.edge_count()],
    );
    for i in 0..trials {
        let mut s = RandomStream::new(20, i);
        let mut sigma = Coloring::monochromatic(tree.n(), tree.q());
        let mut bonds = EdgeConfig::all(&tree, true);
        for _ in 0..steps {
            (sigma, bonds) = potts_tree_sw_step_with_bonds(&sigma, &tree, &mut s).unwrap();
        }
        from_spins[bonds.ones()] += 1;
        for (e, &b) in bonds.bits().iter().enumerate() {
            per_edge.0[e] += b as usize;
        }

        let mut s = RandomStream::new(21, i);
        // The first spin step from a monochromatic state opens each edge
        // with probability p, which is also the edge step from all open.
        let mut eta = EdgeConfig::all(&tree, true);
        for _ in 0..steps {
            eta = potts_edge_step(&eta, &tree, &mut s);
        }
        from_edges[eta.ones()] += 1;
        for (e, &b) in eta.bits().iter().enumerate() {
            per_edge.1[e] += b as usize;
        }
    }
    let tv = 0.5
        * from_spins
            .iter()
            .zip(&from_edges)
            .map(|(&a, &b)| (a as f64 - b as f64).abs() / trials as f64)
            .sum::<f64>();
    assert!(tv < 0.015, "open-count tv = {tv}");
    // Each edge is open with probability P_t = p P_{t-1} + (p / q)(1 - P_{t-1}).
    let (p, q) = (tree.p(), tree.q() as f64);
    let mut open = 1.0;
    for _ in 0..steps {
        open = p * open + p / q * (1.0 - open);
    }
    for e in 0..tree.edge_count() {
        for f in [per_edge.0[e], per_edge.1[e]] {
            let freq = f as f64 / trials as f64;
            assert!((freq - open).abs() < 0.012, "edge {e}: {freq} vs {open}");
        }
    }
}
