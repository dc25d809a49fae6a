//! The equilibrium jump process on strict partitions and the birth–death
//! chain of its weight: rates, sampling, simulation and Monte Carlo
//! correlation estimates.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::io::{format_f64, to_json_string};
use crate::kernels::params_json;
use crate::measures::{neg_binomial, neg_binomial_tail, up_kernel, down_kernel};
use crate::partitions::StrictPartition;
use crate::specfun::ModelParams;

/// Default bound on the weight of a simulated state.
pub const WEIGHT_CAP: usize = 10_000;

/// Tail mass left out of the sampled weight distribution.
const SAMPLER_TAIL: f64 = 1e-12;

/// Outgoing rates of one state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpRates {
    pub up: Vec<(StrictPartition, f64)>,
    pub down: Vec<(StrictPartition, f64)>,
    pub total: f64,
}

/// (up, down) rates of the weight chain at n.
pub fn birth_death_rates(n: usize, p: &ModelParams) -> (f64, f64) {
    let xi = p.xi();
    let nf = n as f64;
    (xi * (nf + p.alpha() / 2.0) / (1.0 - xi), nf / (1.0 - xi))
}

/// Rates of the partition-valued process out of `lambda`.
pub fn jump_rates(lambda: &StrictPartition, p: &ModelParams) -> JumpRates {
    let (up_total, down_total) = birth_death_rates(lambda.weight(), p);
    let up = up_kernel(lambda, p.alpha())
        .into_iter()
        .map(|(k, pr)| (k, pr * up_total))
        .collect();
    let down = if lambda.is_empty() {
        Vec::new()
    } else {
        down_kernel(lambda).into_iter().map(|(m, pr)| (m, pr * down_total)).collect()
    };
    JumpRates {
        up,
        down,
        total: up_total + down_total,
    }
}

/// Independent generator for stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws from M_{α,ξ}: the weight by inverse CDF, then the shape by
/// repeated up-kernel steps.
#[derive(Debug, Clone)]
pub struct EquilibriumSampler {
    params: ModelParams,
    cdf: Vec<f64>,
}

impl EquilibriumSampler {
    pub fn new(p: &ModelParams) -> Self {
        let mut cdf = Vec::new();
        let mut acc = 0.0;
        let mut n = 0;
        loop {
            acc += neg_binomial(n, p);
            cdf.push(acc);
            if neg_binomial_tail(n, p) < SAMPLER_TAIL {
                break;
            }
            n += 1;
        }
        Self { params: *p, cdf }
    }

    pub fn sample_weight(&self, rng: &mut impl Rng) -> usize {
        let u = rng.gen::<f64>() * self.cdf.last().copied().unwrap_or(1.0);
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> StrictPartition {
        let n = self.sample_weight(rng);
        let mut lambda = StrictPartition::empty();
        for _ in 0..n {
            let options = up_kernel(&lambda, self.params.alpha());
            lambda = choose(options, rng);
        }
        lambda
    }
}

fn choose(options: Vec<(StrictPartition, f64)>, rng: &mut impl Rng) -> StrictPartition {
    let total: f64 = options.iter().map(|o| o.1).sum();
    let mut u = rng.gen::<f64>() * total;
    let last = options.len() - 1;
    for (i, (s, w)) in options.into_iter().enumerate() {
        if u < w || i == last {
            return s;
        }
        u -= w;
    }
    unreachable!("options are nonempty")
}

/// One draw from M_{α,ξ} on stream 0 of `seed`.
pub fn sample_equilibrium(p: &ModelParams, seed: u64) -> StrictPartition {
    EquilibriumSampler::new(p).sample(&mut stream_rng(seed, 0))
}

/// A simulated path: jump times with the states entered at those times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub seed: u64,
    pub stream: u64,
    pub horizon: f64,
    pub events: Vec<(f64, StrictPartition)>,
}

impl Trajectory {
    /// State occupied at time t ∈ [0, horizon].
    pub fn state_at(&self, t: f64) -> &StrictPartition {
        let i = self.events.partition_point(|e| e.0 <= t);
        &self.events[i.max(1) - 1].1
    }

    /// Fraction of [0, horizon] during which x is a part; the initial
    /// indicator when the horizon is zero.
    pub fn occupancy(&self, x: u32) -> f64 {
        if self.horizon == 0.0 {
            return if self.events[0].1.contains(x) { 1.0 } else { 0.0 };
        }
        let mut time = 0.0;
        for (k, (t, s)) in self.events.iter().enumerate() {
            let end = self.events.get(k + 1).map_or(self.horizon, |e| e.0);
            if s.contains(x) {
                time += end - t;
            }
        }
        time / self.horizon
    }

    /// CSV with columns time, partition.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["time", "partition"]).expect("in-memory write");
        for (t, s) in &self.events {
            w.write_record([format_f64(*t), s.to_string()]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidParameters(format!("horizon must be finite and nonnegative, got {horizon}")));
    }
    Ok(())
}

/// Event-driven simulation on stream 0 of `seed`.
pub fn simulate(p: &ModelParams, seed: u64, horizon: f64) -> Result<Trajectory> {
    simulate_stream(&EquilibriumSampler::new(p), seed, 0, horizon, WEIGHT_CAP)
}

/// Event-driven simulation of one equilibrium path on a given stream.
pub fn simulate_stream(
    sampler: &EquilibriumSampler,
    seed: u64,
    stream: u64,
    horizon: f64,
    weight_cap: usize,
) -> Result<Trajectory> {
    check_horizon(horizon)?;
    let p = &sampler.params;
    let mut rng = stream_rng(seed, stream);
    let mut state = sampler.sample(&mut rng);
    let mut events = vec![(0.0, state.clone())];
    let mut t = 0.0;
    loop {
        let rates = jump_rates(&state, p);
        t += -(1.0 - rng.gen::<f64>()).ln() / rates.total;
        if t > horizon {
            break;
        }
        let options: Vec<_> = rates.up.into_iter().chain(rates.down).collect();
        state = choose(options, &mut rng);
        if state.weight() >= weight_cap {
            return Err(Error::CapExceeded {
                required: state.weight(),
                limit: weight_cap,
            });
        }
        events.push((t, state.clone()));
    }
    Ok(Trajectory {
        seed,
        stream,
        horizon,
        events,
    })
}

/// `count` independent equilibrium paths, path i on stream i, in index order.
pub fn simulate_many(p: &ModelParams, seed: u64, count: usize, horizon: f64) -> Result<Vec<Trajectory>> {
    check_horizon(horizon)?;
    let sampler = EquilibriumSampler::new(p);
    (0..count as u64)
        .into_par_iter()
        .map(|i| simulate_stream(&sampler, seed, i, horizon, WEIGHT_CAP))
        .collect()
}

/// Monte Carlo estimate of a space-time correlation with its binomial
/// standard error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub trajectories: usize,
    pub seed: u64,
}

impl CorrelationEstimate {
    pub fn to_json(&self, p: &ModelParams) -> String {
        to_json_string(&json!({
            "estimate": self.estimate,
            "std_error": self.std_error,
            "R": self.trajectories,
            "seed": self.seed,
            "params": params_json(Some(*p), None),
        }))
    }
}

/// Mean of ∏ 1[x_j ∈ λ(t_j)] over `trajectories` paths, path i on stream i.
pub fn estimate_correlation(
    points: &[(f64, u32)],
    p: &ModelParams,
    trajectories: usize,
    seed: u64,
) -> Result<CorrelationEstimate> {
    if trajectories == 0 {
        return Err(Error::InvalidParameters("at least one trajectory is required".into()));
    }
    if points.iter().any(|&(t, _)| !(t >= 0.0)) {
        return Err(Error::InvalidParameters("times must be nonnegative".into()));
    }
    let horizon = points.iter().map(|q| q.0).fold(0.0, f64::max);
    let sampler = EquilibriumSampler::new(p);
    let hits = (0..trajectories as u64)
        .into_par_iter()
        .map(|i| {
            let tr = simulate_stream(&sampler, seed, i, horizon, WEIGHT_CAP)?;
            Ok(points.iter().all(|&(t, x)| tr.state_at(t).contains(x)) as usize)
        })
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .sum::<usize>();
    let r = trajectories as f64;
    let est = hits as f64 / r;
    Ok(CorrelationEstimate {
        estimate: est,
        std_error: (est * (1.0 - est) / r).sqrt(),
        trajectories,
        seed,
    })
}
