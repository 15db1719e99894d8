//! The exhaustive enumeration engine and the Monte Carlo driver shared by
//! all observables.
//!
//! Enumeration is deterministic: the configuration space is cut into fixed
//! blocks, block sums are accumulated pairwise, and blocks reduce in index
//! order. Shard and thread counts redistribute whole blocks, so results are
//! bit-identical for any shard or thread count.

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{FkConfig, LoopSet};
use crate::error::{FkError, Result};
use crate::lattice::LatticeDomain;
use crate::measures::{
    es_sample_fk_given_spins, es_sample_spins_given_fk, fk_weight_from_stats, ModelParams,
    SpinConfig,
};

/// Hard ceiling on exact enumeration: 2^26 configurations.
pub const MAX_ENUM_EDGES: usize = 26;

/// Block granularity: per-block pairwise sums make the reduction order
/// independent of the shard layout.
const BLOCK_BITS: usize = 14;

#[derive(Debug, Clone, Copy)]
pub struct EnumOpts {
    pub shards: usize,
    pub threads: usize,
    pub max_edges: usize,
}

impl Default for EnumOpts {
    fn default() -> Self {
        EnumOpts {
            shards: 1,
            threads: 1,
            max_edges: MAX_ENUM_EDGES,
        }
    }
}

/// Shard layout over the configuration space.
#[derive(Debug, Clone)]
pub struct EnumerationPlan {
    pub edge_count: usize,
    pub shard_count: usize,
    pub block_bits: usize,
    /// Per shard, the half-open config range it owns.
    pub ranges: Vec<(u64, u64)>,
}

impl EnumerationPlan {
    pub fn new(edge_count: usize, shards: usize, max_edges: usize) -> Result<Self> {
        if edge_count > max_edges || edge_count > MAX_ENUM_EDGES {
            return Err(FkError::EnumerationCap {
                edges: edge_count,
                cap: max_edges.min(MAX_ENUM_EDGES),
            });
        }
        let total: u64 = 1 << edge_count;
        let block_bits = BLOCK_BITS.min(edge_count);
        let blocks = total >> block_bits;
        let shards = shards.clamp(1, blocks.max(1) as usize);
        let mut ranges = Vec::with_capacity(shards);
        let per = blocks / shards as u64;
        let extra = blocks % shards as u64;
        let mut b0 = 0u64;
        for s in 0..shards as u64 {
            let nb = per + u64::from(s < extra);
            let b1 = b0 + nb;
            ranges.push((b0 << block_bits, b1 << block_bits));
            b0 = b1;
        }
        Ok(EnumerationPlan {
            edge_count,
            shard_count: shards,
            block_bits,
            ranges,
        })
    }
}

/// Exact `(Z, sum)` of `weight(omega) * functional(omega)` over all
/// configurations, with the functional producing `width` complex components.
///
/// The reduction is bit-identical for every shard and thread count.
pub fn enumerate_reduce_vec<F>(
    domain: &Arc<LatticeDomain>,
    params: &ModelParams,
    opts: &EnumOpts,
    width: usize,
    functional: F,
) -> Result<(f64, Vec<Complex64>)>
where
    F: Fn(&FkConfig, &LoopSet, &mut [Complex64]) + Sync,
{
    let plan = EnumerationPlan::new(domain.edge_count(), opts.shards, opts.max_edges)?;
    let shard_out: Vec<(Vec<f64>, Vec<Vec<Complex64>>)> =
        run_shards(&plan, opts.threads, |range| {
            run_shard(domain, params, &plan, range, width, &functional)
        });

    // Flatten per-block partials in shard order = block order, then reduce
    // pairwise over the block list.
    let mut block_z: Vec<f64> = Vec::new();
    let mut block_sums: Vec<Vec<Complex64>> = Vec::new();
    for (zs, sums) in shard_out {
        block_z.extend(zs);
        block_sums.extend(sums);
    }
    let z = pairwise_sum_f64(&block_z);
    let mut sums = vec![Complex64::new(0.0, 0.0); width];
    for (i, sum) in sums.iter_mut().enumerate() {
        let col: Vec<Complex64> = block_sums.iter().map(|b| b[i]).collect();
        *sum = pairwise_sum_c64(&col);
    }
    Ok((z, sums))
}

/// Scalar convenience wrapper around [`enumerate_reduce_vec`].
pub fn enumerate_reduce<F>(
    domain: &Arc<LatticeDomain>,
    params: &ModelParams,
    opts: &EnumOpts,
    functional: F,
) -> Result<(f64, Complex64)>
where
    F: Fn(&FkConfig, &LoopSet) -> Complex64 + Sync,
{
    let (z, sums) = enumerate_reduce_vec(domain, params, opts, 1, |cfg, loops, out| {
        out[0] = functional(cfg, loops);
    })?;
    Ok((z, sums[0]))
}

fn run_shards<T: Send, F>(plan: &EnumerationPlan, threads: usize, work: F) -> Vec<T>
where
    F: Fn((u64, u64)) -> T + Sync,
{
    let threads = threads.max(1).min(plan.shard_count);
    if threads == 1 {
        return plan.ranges.iter().map(|&r| work(r)).collect();
    }
    // Contiguous groups of shards per thread; joining in thread order keeps
    // the per-shard output order equal to the shard order.
    let per = plan.ranges.len().div_ceil(threads);
    let groups: Vec<&[(u64, u64)]> = plan.ranges.chunks(per).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = groups
            .into_iter()
            .map(|group| scope.spawn(|| group.iter().map(|&r| work(r)).collect::<Vec<T>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("shard thread"))
            .collect()
    })
}

fn run_shard<F>(
    domain: &Arc<LatticeDomain>,
    params: &ModelParams,
    plan: &EnumerationPlan,
    range: (u64, u64),
    width: usize,
    functional: &F,
) -> (Vec<f64>, Vec<Vec<Complex64>>)
where
    F: Fn(&FkConfig, &LoopSet, &mut [Complex64]) + Sync,
{
    let block = 1u64 << plan.block_bits;
    let mut block_z = Vec::new();
    let mut block_sums = Vec::new();
    let mut buf = vec![Complex64::new(0.0, 0.0); width];
    let mut b = range.0;
    while b < range.1 {
        let mut zacc = PairwiseF64::new();
        let mut acc: Vec<PairwiseC64> = (0..width).map(|_| PairwiseC64::new()).collect();
        for bits in b..b + block {
            let cfg = FkConfig::new(Arc::clone(domain), bits).expect("mask in range");
            let loops = cfg.extract_loops();
            let k = cfg.clusters().primal_count;
            let w = fk_weight_from_stats(cfg.open_count(), k, params);
            buf.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
            functional(&cfg, &loops, &mut buf);
            zacc.push(w);
            for (a, v) in acc.iter_mut().zip(&buf) {
                a.push(w * v);
            }
        }
        block_z.push(zacc.finish());
        block_sums.push(acc.into_iter().map(PairwiseC64::finish).collect());
        b += block;
    }
    (block_z, block_sums)
}

macro_rules! pairwise_acc {
    ($name:ident, $ty:ty, $zero:expr) => {
        struct $name {
            levels: Vec<Option<$ty>>,
        }
        impl $name {
            fn new() -> Self {
                $name { levels: Vec::new() }
            }
            fn push(&mut self, mut v: $ty) {
                let mut i = 0;
                loop {
                    if i == self.levels.len() {
                        self.levels.push(Some(v));
                        return;
                    }
                    match self.levels[i].take() {
                        None => {
                            self.levels[i] = Some(v);
                            return;
                        }
                        Some(u) => {
                            v = u + v;
                            i += 1;
                        }
                    }
                }
            }
            fn finish(self) -> $ty {
                let mut total = $zero;
                for lvl in self.levels {
                    if let Some(v) = lvl {
                        total = v + total;
                    }
                }
                total
            }
        }
    };
}

pairwise_acc!(PairwiseF64, f64, 0.0);
pairwise_acc!(PairwiseC64, Complex64, Complex64::new(0.0, 0.0));

fn pairwise_sum_f64(xs: &[f64]) -> f64 {
    let mut acc = PairwiseF64::new();
    for &x in xs {
        acc.push(x);
    }
    acc.finish()
}

fn pairwise_sum_c64(xs: &[Complex64]) -> Complex64 {
    let mut acc = PairwiseC64::new();
    for &x in xs {
        acc.push(x);
    }
    acc.finish()
}

/// One Edwards-Sokal Markov chain: alternate cluster-spin resampling with
/// edge resampling. Each full sweep leaves `rho_p` invariant.
pub struct ChainState {
    domain: Arc<LatticeDomain>,
    params: ModelParams,
    pub config: FkConfig,
    pub spins: SpinConfig,
    pub sweep: u64,
    pub burn_in: u64,
    rng: ChaCha8Rng,
}

impl ChainState {
    /// Streams are independent for distinct `(seed, chain_id)`.
    pub fn new(
        domain: &Arc<LatticeDomain>,
        params: &ModelParams,
        burn_in: u64,
        seed: u64,
        chain_id: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chain_id);
        let config = FkConfig::new(Arc::clone(domain), 0).expect("empty mask");
        let spins = SpinConfig::all_plus(domain);
        ChainState {
            domain: Arc::clone(domain),
            params: *params,
            config,
            spins,
            sweep: 0,
            burn_in,
            rng,
        }
    }

    pub fn step(&mut self) {
        self.spins = es_sample_spins_given_fk(&self.config, &mut self.rng);
        self.config =
            es_sample_fk_given_spins(&self.domain, &self.spins, &self.params, &mut self.rng);
        self.sweep += 1;
    }
}

/// Run the ES chain and hand every post-burn-in configuration to `visit`.
pub fn run_chain<F>(
    domain: &Arc<LatticeDomain>,
    params: &ModelParams,
    n_sweeps: u64,
    burn_in: u64,
    seed: u64,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(&FkConfig),
{
    if n_sweeps <= burn_in {
        return Err(FkError::BadSweepCount { n_sweeps, burn_in });
    }
    let mut chain = ChainState::new(domain, params, burn_in, seed, 0);
    for _ in 0..n_sweeps {
        chain.step();
        if chain.sweep > burn_in {
            visit(&chain.config);
        }
    }
    Ok(())
}
