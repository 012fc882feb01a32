use std::ops::RangeInclusive;

use rand::seq::index;
use rand::Rng;

use super::{
    sample_diffusion, DiffusionError, DiffusionModel, DiffusionSample, InfluenceParams,
    Propagator, ReachabilityTable,
};
use crate::graph::Graph;
use crate::greedy::{self, MarginalGain};
use crate::parallel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadEstimate {
    pub mean: f64,
    /// Standard error of `mean`.
    pub std_error: f64,
    pub sims: usize,
}

fn check_seeds(g: &Graph, seeds: &[usize]) -> Result<(), DiffusionError> {
    let n = g.node_count();
    match seeds.iter().find(|&&s| s >= n) {
        Some(&seed) => Err(DiffusionError::SeedOutOfRange { seed, n }),
        None => Ok(()),
    }
}

/// Monte-Carlo estimate of `F(S)` with its standard error.
pub fn estimate_spread_stats<R: Rng + ?Sized>(
    g: &Graph,
    params: &InfluenceParams,
    seeds: &[usize],
    num_sims: usize,
    rng: &mut R,
) -> Result<SpreadEstimate, DiffusionError> {
    check_seeds(g, seeds)?;
    let num_sims = num_sims.max(1);
    if seeds.is_empty() {
        return Ok(SpreadEstimate {
            mean: 0.0,
            std_error: 0.0,
            sims: num_sims,
        });
    }
    let parts = parallel::map_sims(rng, num_sims, |r, count| {
        let mut prop = Propagator::new(g.node_count());
        let (mut s, mut s2) = (0.0f64, 0.0f64);
        for _ in 0..count {
            let w = sample_diffusion(g, params, r);
            let k = prop.run(g, params, &w, seeds).expect("seeds validated") as f64;
            s += k;
            s2 += k * k;
        }
        (s, s2)
    });
    let (s, s2) = parts
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let m = num_sims as f64;
    let mean = s / m;
    let var = if num_sims > 1 {
        ((s2 - m * mean * mean) / (m - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(SpreadEstimate {
        mean,
        std_error: (var / m).sqrt(),
        sims: num_sims,
    })
}

pub fn estimate_spread<R: Rng + ?Sized>(
    g: &Graph,
    params: &InfluenceParams,
    seeds: &[usize],
    num_sims: usize,
    rng: &mut R,
) -> Result<f64, DiffusionError> {
    Ok(estimate_spread_stats(g, params, seeds, num_sims, rng)?.mean)
}

pub const MAX_ENUMERATED_EDGES: usize = 22;

fn for_each_ic_realization<F>(g: &Graph, params: &InfluenceParams, mut f: F) -> Result<(), DiffusionError>
where
    F: FnMut(f64, &DiffusionSample),
{
    let m = g.edge_count();
    if m > MAX_ENUMERATED_EDGES {
        return Err(DiffusionError::TooManyEdges {
            m,
            max: MAX_ENUMERATED_EDGES,
        });
    }
    let probs = params.weights();
    let mut live = vec![false; m];
    for mask in 0u64..(1u64 << m) {
        let mut prob = 1.0;
        for (e, flag) in live.iter_mut().enumerate() {
            *flag = mask >> e & 1 == 1;
            prob *= if *flag { probs[e] } else { 1.0 - probs[e] };
        }
        if prob == 0.0 {
            continue;
        }
        let w = DiffusionSample::Ic {
            live: std::mem::take(&mut live),
        };
        f(prob, &w);
        let DiffusionSample::Ic { live: back } = w else {
            unreachable!()
        };
        live = back;
    }
    Ok(())
}

/// Exact `F(S)` under IC by enumerating all `2^m` live-edge realizations.
pub fn exact_spread_ic(
    g: &Graph,
    params: &InfluenceParams,
    seeds: &[usize],
) -> Result<f64, DiffusionError> {
    check_seeds(g, seeds)?;
    let ic = params.with_model(g, DiffusionModel::Ic)?;
    let mut prop = Propagator::new(g.node_count());
    let mut total = 0.0;
    for_each_ic_realization(g, &ic, |prob, w| {
        total += prob * prop.run(g, &ic, w, seeds).expect("seeds validated") as f64;
    })?;
    Ok(total)
}

/// Exact pairwise reachabilities `p*[u][v] = F({u}, v)` under IC.
pub fn exact_reachability_ic(
    g: &Graph,
    params: &InfluenceParams,
) -> Result<ReachabilityTable, DiffusionError> {
    let n = g.node_count();
    let ic = params.with_model(g, DiffusionModel::Ic)?;
    let mut acc = vec![0.0; n * n];
    let mut prop = Propagator::new(n);
    for_each_ic_realization(g, &ic, |prob, w| {
        for u in 0..n {
            prop.run(g, &ic, w, &[u]).expect("valid seed");
            for &v in prop.activated() {
                acc[u * n + v] += prob;
            }
        }
    })?;
    for x in &mut acc {
        *x = x.clamp(0.0, 1.0);
    }
    ReachabilityTable::from_flat(n, acc)
}

/// Estimates `p*` from random seed sets: each simulation draws a cardinality
/// uniformly from `seed_sizes`, a uniform seed set of that size, one
/// diffusion sample, and records pairwise feedback for every seed.
pub fn estimate_reachability<R: Rng + ?Sized>(
    g: &Graph,
    params: &InfluenceParams,
    num_sims: usize,
    seed_sizes: RangeInclusive<usize>,
    rng: &mut R,
) -> Result<ReachabilityTable, DiffusionError> {
    let n = g.node_count();
    if n == 0 {
        return ReachabilityTable::from_flat(0, Vec::new());
    }
    let lo = (*seed_sizes.start()).clamp(1, n);
    let hi = (*seed_sizes.end()).clamp(lo, n);
    let parts = parallel::map_sims(rng, num_sims.max(1), |r, count| {
        let mut prop = Propagator::new(n);
        let mut sources = vec![0u64; n];
        let mut hits = vec![0u32; n * n];
        for _ in 0..count {
            let k = r.gen_range(lo..=hi);
            let set = index::sample(r, n, k);
            let w = sample_diffusion(g, params, r);
            for u in set.iter() {
                prop.run(g, params, &w, &[u]).expect("valid seed");
                sources[u] += 1;
                for &v in prop.activated() {
                    hits[u * n + v] += 1;
                }
            }
        }
        (sources, hits)
    });
    let mut sources = vec![0u64; n];
    let mut hits = vec![0u64; n * n];
    for (s, h) in parts {
        for (a, b) in sources.iter_mut().zip(s) {
            *a += b;
        }
        for (a, b) in hits.iter_mut().zip(h) {
            *a += u64::from(b);
        }
    }
    let mut data = vec![0.0; n * n];
    for u in 0..n {
        if sources[u] == 0 {
            data[u * n + u] = 1.0;
            continue;
        }
        for v in 0..n {
            data[u * n + v] = hits[u * n + v] as f64 / sources[u] as f64;
        }
    }
    let mut table = ReachabilityTable::from_flat(n, data)?;
    table.set_observations(sources);
    Ok(table)
}

/// Total activations of `seeds` across `samples`.
pub fn spread_on_samples(
    g: &Graph,
    params: &InfluenceParams,
    samples: &[DiffusionSample],
    seeds: &[usize],
) -> Result<u64, DiffusionError> {
    check_seeds(g, seeds)?;
    if seeds.is_empty() {
        return Ok(0);
    }
    const CHUNK: usize = 64;
    let chunks: Vec<&[DiffusionSample]> = samples.chunks(CHUNK).collect();
    let counts = parallel::map_ordered(chunks, |chunk| {
        let mut prop = Propagator::new(g.node_count());
        chunk
            .iter()
            .map(|w| prop.run(g, params, w, seeds).map(|k| k as u64))
            .sum::<Result<u64, DiffusionError>>()
    });
    counts.into_iter().sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadGreedy {
    /// In selection order.
    pub seeds: Vec<usize>,
    /// Mean spread of `seeds` over the samples used for selection.
    pub spread: f64,
    pub evaluations: usize,
}

struct SampledSpread<'a> {
    g: &'a Graph,
    params: &'a InfluenceParams,
    samples: &'a [DiffusionSample],
    current: Vec<usize>,
    current_total: u64,
    scratch: Vec<usize>,
}

impl MarginalGain for SampledSpread<'_> {
    fn node_count(&self) -> usize {
        self.g.node_count()
    }

    fn gain(&mut self, u: usize) -> f64 {
        if self.current.contains(&u) {
            return 0.0;
        }
        self.scratch.clear();
        self.scratch.extend_from_slice(&self.current);
        self.scratch.push(u);
        let total = spread_on_samples(self.g, self.params, self.samples, &self.scratch)
            .expect("candidate ids are in range");
        (total - self.current_total) as f64 / self.samples.len() as f64
    }

    fn commit(&mut self, u: usize) {
        self.current.push(u);
        self.current_total = spread_on_samples(self.g, self.params, self.samples, &self.current)
            .expect("candidate ids are in range");
    }
}

/// Spread-maximizing seeds by lazy greedy over `num_sims` shared diffusion
/// samples (common random numbers across candidates).
///
/// For IC the sampled objective is a coverage function, so the lazy
/// evaluation is exact; for LT it is a heuristic since per-sample LT spread
/// need not be submodular.
pub fn greedy_spread_seeds<R: Rng + ?Sized>(
    g: &Graph,
    params: &InfluenceParams,
    k: usize,
    num_sims: usize,
    rng: &mut R,
) -> SpreadGreedy {
    let samples: Vec<DiffusionSample> = (0..num_sims.max(1))
        .map(|_| sample_diffusion(g, params, rng))
        .collect();
    let mut oracle = SampledSpread {
        g,
        params,
        samples: &samples,
        current: Vec::new(),
        current_total: 0,
        scratch: Vec::new(),
    };
    let run = greedy::lazy_greedy(&mut oracle, k);
    SpreadGreedy {
        spread: oracle.current_total as f64 / samples.len() as f64,
        seeds: run.seeds,
        evaluations: run.evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::DiffusionModel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ic(g: &Graph, p: f64) -> InfluenceParams {
        InfluenceParams::constant(g, DiffusionModel::Ic, p).unwrap()
    }

    #[test]
    fn exact_spread_examples() {
        let g = Graph::empty(1);
        assert_eq!(exact_spread_ic(&g, &ic(&g, 0.5), &[0]).unwrap(), 1.0);
        let g = Graph::new(2, [(0, 1)]).unwrap();
        assert!((exact_spread_ic(&g, &ic(&g, 0.5), &[0]).unwrap() - 1.5).abs() < 1e-15);
        let g = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        assert!((exact_spread_ic(&g, &ic(&g, 0.5), &[0]).unwrap() - 1.75).abs() < 1e-15);
    }

    #[test]
    fn exact_spread_rejects_large_graphs() {
        let edges: Vec<_> = (0..23).map(|i| (i, i + 1)).collect();
        let g = Graph::new(24, edges).unwrap();
        assert_eq!(
            exact_spread_ic(&g, &ic(&g, 0.5), &[0]),
            Err(DiffusionError::TooManyEdges { m: 23, max: 22 })
        );
    }

    #[test]
    fn spread_estimate_trivial_cases() {
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(estimate_spread(&g, &ic(&g, 0.3), &[], 10, &mut rng).unwrap(), 0.0);
        assert_eq!(estimate_spread(&g, &ic(&g, 1.0), &[2], 10, &mut rng).unwrap(), 4.0);
    }

    #[test]
    fn spread_estimate_single_edge() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let est = estimate_spread(&g, &ic(&g, 0.5), &[0], 100_000, &mut rng).unwrap();
        assert!((est - 1.5).abs() <= 0.01, "{est}");
    }

    #[test]
    fn reachability_chain_estimate() {
        let g = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = estimate_reachability(&g, &ic(&g, 0.5), 200_000, 1..=3, &mut rng).unwrap();
        assert!((t.get(0, 2) - 0.25).abs() <= 0.01, "{}", t.get(0, 2));
        for u in 0..3 {
            assert_eq!(t.get(u, u), 1.0);
        }
    }

    #[test]
    fn reachability_zero_probability_is_identity() {
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = estimate_reachability(&g, &ic(&g, 0.0), 50, 1..=1, &mut rng).unwrap();
        for u in 0..4 {
            for v in 0..4 {
                let want = if u == v { 1.0 } else { 0.0 };
                assert_eq!(t.get(u, v), want);
            }
        }
    }

    #[test]
    fn unobserved_sources_are_flagged() {
        let g = Graph::new(50, [(0, 1)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = estimate_reachability(&g, &ic(&g, 1.0), 3, 1..=1, &mut rng).unwrap();
        let unobserved = (0..50).filter(|&u| !t.is_observed(u)).count();
        assert!(unobserved >= 47);
        for u in (0..50).filter(|&u| !t.is_observed(u)) {
            assert_eq!(t.row(u).iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn exact_reachability_chain() {
        let g = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let t = exact_reachability_ic(&g, &ic(&g, 0.5)).unwrap();
        assert!((t.get(0, 1) - 0.5).abs() < 1e-15);
        assert!((t.get(0, 2) - 0.25).abs() < 1e-15);
        assert_eq!(t.get(2, 0), 0.0);
    }

    #[test]
    fn greedy_spread_picks_hub() {
        let g = Graph::new(5, [(0, 1), (0, 2), (0, 3), (4, 3)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let r = greedy_spread_seeds(&g, &ic(&g, 1.0), 2, 20, &mut rng);
        assert_eq!(r.seeds, vec![0, 4]);
        assert_eq!(r.spread, 5.0);
    }

    #[test]
    fn parallel_estimates_are_deterministic() {
        let g = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let a = estimate_spread(&g, &ic(&g, 0.4), &[0], 5000, &mut ChaCha8Rng::seed_from_u64(9));
        let b = estimate_spread(&g, &ic(&g, 0.4), &[0], 5000, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }
}
