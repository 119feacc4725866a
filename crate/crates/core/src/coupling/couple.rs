//! One-step couplings of two magnetization chains that try to make them
//! meet, leaving a reserve of isolated vertices whose signs are coupled
//! maximally.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};

use super::law::{maximal_coupling, LatticeLaw};
use crate::error::{param_err, Result};
use crate::magnetization::{on_lattice, MagnetizationChain, TwoDimState};
use crate::stochastic::RandomStream;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CouplingOutcome<S> {
    pub met: bool,
    pub steps_used: usize,
    pub x: S,
    pub y: S,
    pub diagnostics: BTreeMap<String, f64>,
}

/// `ceil(g / (3 e^c))`, the number of isolated vertices held back.
pub fn isolated_reserve(g: usize, c: f64) -> usize {
    libm::ceil(g as f64 / (3.0 * libm::exp(c))) as usize
}

/// One chain's percolation: signed sum over assigned components and the
/// number of isolated vertices left unassigned.
struct Partial {
    sum: i64,
    isolated: usize,
}

fn percolate_and_sign(chain: &MagnetizationChain, x: i64, stream: &mut RandomStream) -> Partial {
    let n = chain.n();
    let plus = (n + x.unsigned_abs() as usize) / 2;
    let (mut sum, mut isolated) = (0i64, 0usize);
    for m in [plus, n - plus] {
        chain.sampler().for_each_component(m, stream, |size, s| {
            if size == 1 {
                isolated += 1;
            } else {
                sum += s.rademacher() * size as i64;
            }
        });
    }
    Partial { sum, isolated }
}

/// Sum of `k` fair signs.
fn sign_sum(k: usize, stream: &mut RandomStream) -> i64 {
    2 * stream.binomial(k as u64, 0.5).expect("valid binomial") as i64 - k as i64
}

/// Couple one step of two standard chains started at `x` and `y` with
/// `c > 2`. Each chain percolates on its own stream and signs everything
/// except `M = ceil(n / (3 e^c))` isolated vertices; the two laws of
/// `|partial + sum of M signs|` are then coupled maximally on
/// `coupling_stream`. Too few isolated vertices in either chain gives
/// `met = false` with the `shortfall` diagnostic set, and both chains are
/// finished independently.
pub fn couple_supercritical(
    x: i64,
    y: i64,
    chain: &MagnetizationChain,
    x_stream: &mut RandomStream,
    y_stream: &mut RandomStream,
    coupling_stream: &mut RandomStream,
) -> Result<CouplingOutcome<i64>> {
    let n = chain.n();
    let c = chain.params().c;
    if !(c > 2.0) {
        return Err(param_err!(
            "the supercritical coupling needs c > 2, got {c}"
        ));
    }
    for v in [x, y] {
        if v < 0 || !on_lattice(n, v) {
            return Err(param_err!(
                "state {v} is not a standard-chain state for n = {n}"
            ));
        }
    }
    let reserve = isolated_reserve(n, c);
    let mut px = percolate_and_sign(chain, x, x_stream);
    let mut py = percolate_and_sign(chain, y, y_stream);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("reserve".to_string(), reserve as f64);
    diagnostics.insert("isolated_x".to_string(), px.isolated as f64);
    diagnostics.insert("isolated_y".to_string(), py.isolated as f64);

    if px.isolated < reserve || py.isolated < reserve {
        diagnostics.insert("shortfall".to_string(), 1.0);
        let x1 = (px.sum + sign_sum(px.isolated, x_stream)).abs();
        let y1 = (py.sum + sign_sum(py.isolated, y_stream)).abs();
        return Ok(CouplingOutcome {
            met: false,
            steps_used: 1,
            x: x1,
            y: y1,
            diagnostics,
        });
    }
    diagnostics.insert("shortfall".to_string(), 0.0);
    px.sum += sign_sum(px.isolated - reserve, x_stream);
    py.sum += sign_sum(py.isolated - reserve, y_stream);
    let (bar_x, bar_y) = (px.sum.abs(), py.sum.abs());
    diagnostics.insert("partial_x".to_string(), bar_x as f64);
    diagnostics.insert("partial_y".to_string(), bar_y as f64);

    let signs = LatticeLaw::sign_sum(reserve as u64);
    let law_x = signs.shifted(bar_x).folded();
    let law_y = signs.shifted(bar_y).folded();
    diagnostics.insert("overlap".to_string(), 1.0 - law_x.tv(&law_y));
    let (x1, y1) = maximal_coupling(&law_x, &law_y, coupling_stream);
    Ok(CouplingOutcome {
        met: x1 == y1,
        steps_used: 1,
        x: x1,
        y: y1,
        diagnostics,
    })
}

/// Per-block bookkeeping for the two-block coupling.
struct BlockPartial {
    y: usize,
    z: usize,
    isolated_one: usize,
    isolated_two: usize,
}

fn block_percolate(
    chain: &MagnetizationChain,
    state: TwoDimState,
    stream: &mut RandomStream,
) -> Result<BlockPartial> {
    let mut p = BlockPartial {
        y: 0,
        z: 0,
        isolated_one: 0,
        isolated_two: 0,
    };
    chain.for_each_block_component(state, stream, |size, ones, s| {
        if size == 1 {
            if ones == 1 {
                p.isolated_one += 1;
            } else {
                p.isolated_two += 1;
            }
        } else if s.coin() {
            p.y += ones;
            p.z += size - ones;
        }
    })?;
    Ok(p)
}

/// Couple one step of two two-block chains (`c < 2`). Every component
/// except isolated vertices is signed independently in each chain; the
/// isolated vertices of each block then contribute `Bin(k, 1/2)` positives,
/// and the two chains' block counts are coupled by independent maximal
/// couplings per block. A chain with fewer than `ceil(g / (3 e^c))` isolated
/// vertices in a block of size `g` reports a shortfall and `met = false`.
pub fn couple_two_dim(
    a: TwoDimState,
    b: TwoDimState,
    chain: &MagnetizationChain,
    a_stream: &mut RandomStream,
    b_stream: &mut RandomStream,
    coupling_stream: &mut RandomStream,
) -> Result<CouplingOutcome<TwoDimState>> {
    let c = chain.params().c;
    if !(c < 2.0) {
        return Err(param_err!("the two-block coupling needs c < 2, got {c}"));
    }
    if (a.g1, a.g2) != (b.g1, b.g2) {
        return Err(param_err!("both chains must share the block sizes"));
    }
    let pa = block_percolate(chain, a, a_stream)?;
    let pb = block_percolate(chain, b, b_stream)?;
    let (need_one, need_two) = (isolated_reserve(a.g1, c), isolated_reserve(a.g2, c));
    let mut diagnostics = BTreeMap::new();
    for (key, v) in [
        ("isolated_one_x", pa.isolated_one),
        ("isolated_two_x", pa.isolated_two),
        ("isolated_one_y", pb.isolated_one),
        ("isolated_two_y", pb.isolated_two),
        ("reserve_one", need_one),
        ("reserve_two", need_two),
    ] {
        diagnostics.insert(key.to_string(), v as f64);
    }
    let shortfall = [pa.isolated_one, pb.isolated_one]
        .iter()
        .any(|&k| k < need_one)
        || [pa.isolated_two, pb.isolated_two]
            .iter()
            .any(|&k| k < need_two);
    diagnostics.insert("shortfall".to_string(), shortfall as u8 as f64);

    let finish = |p: &BlockPartial, s: &mut RandomStream| {
        let y = p.y
            + s.binomial(p.isolated_one as u64, 0.5)
                .expect("valid binomial") as usize;
        let z = p.z
            + s.binomial(p.isolated_two as u64, 0.5)
                .expect("valid binomial") as usize;
        (y, z)
    };
    let (met, (y1, z1), (y2, z2)) = if shortfall {
        (false, finish(&pa, a_stream), finish(&pb, b_stream))
    } else {
        let law = |base: usize, k: usize| LatticeLaw::fair_binomial(k as u64).shifted(base as i64);
        let one_a = law(pa.y, pa.isolated_one);
        let one_b = law(pb.y, pb.isolated_one);
        let two_a = law(pa.z, pa.isolated_two);
        let two_b = law(pb.z, pb.isolated_two);
        diagnostics.insert("overlap_one".to_string(), 1.0 - one_a.tv(&one_b));
        diagnostics.insert("overlap_two".to_string(), 1.0 - two_a.tv(&two_b));
        let (ya, yb) = maximal_coupling(&one_a, &one_b, coupling_stream);
        let (za, zb) = maximal_coupling(&two_a, &two_b, coupling_stream);
        (
            ya == yb && za == zb,
            (ya as usize, za as usize),
            (yb as usize, zb as usize),
        )
    };
    Ok(CouplingOutcome {
        met,
        steps_used: 1,
        x: TwoDimState::new(y1, z1, a.g1, a.g2)?,
        y: TwoDimState::new(y2, z2, b.g1, b.g2)?,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::magnetization::{ChainParams, Variant};

    fn chain(n: usize, c: f64, variant: Variant) -> MagnetizationChain {
        MagnetizationChain::new(ChainParams::new(n, c, variant).unwrap()).unwrap()
    }

    #[test]
    fn reserve_size() {
        assert_eq!(isolated_reserve(10_000, 3.0), 166);
    }

    #[test]
    fn synchronized_chains_always_meet() {
        let ch = chain(2000, 3.0, Variant::Standard);
        for i in 0..50 {
            let s = RandomStream::new(1, i);
            let out = couple_supercritical(
                1200,
                1200,
                &ch,
                &mut s.clone(),
                &mut s.clone(),
                &mut RandomStream::new(2, i),
            )
            .unwrap();
            assert!(out.met);
            assert_eq!(out.x, out.y);
        }
    }

    #[test]
    fn distant_chains_cannot_meet() {
        let ch = chain(2000, 3.0, Variant::Standard);
        for i in 0..20 {
            let out = couple_supercritical(
                2000,
                0,
                &ch,
                &mut RandomStream::new(3, i),
                &mut RandomStream::new(4, i),
                &mut RandomStream::new(5, i),
            )
            .unwrap();
            let gap = out.diagnostics["partial_x"] - out.diagnostics["partial_y"];
            if gap.abs() > out.diagnostics["reserve"] {
                assert!(!out.met);
            }
        }
    }

    #[test]
    fn coupling_rejects_bad_input() {
        let ch = chain(100, 1.0, Variant::Standard);
        let mut s = RandomStream::new(6, 0);
        let (mut a, mut b) = (s.clone(), s.clone());
        assert!(couple_supercritical(10, 10, &ch, &mut a, &mut b, &mut s).is_err());
        let ch = chain(100, 3.0, Variant::TwoDim);
        let st = TwoDimState::new(10, 10, 50, 50).unwrap();
        assert!(couple_two_dim(st, st, &ch, &mut a, &mut b, &mut s).is_err());
    }

    #[test]
    fn two_dim_synchronized_meets() {
        let ch = chain(1000, 1.0, Variant::TwoDim);
        let st = TwoDimState::new(300, 200, 500, 500).unwrap();
        for i in 0..20 {
            let s = RandomStream::new(7, i);
            let out = couple_two_dim(
                st,
                st,
                &ch,
                &mut s.clone(),
                &mut s.clone(),
                &mut RandomStream::new(8, i),
            )
            .unwrap();
            assert!(out.met);
        }
    }
}
