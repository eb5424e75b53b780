//! Exact-jump simulation of the process with and without catastrophes.
//!
//! Every path `i` draws from its own ChaCha12 stream `(seed, i)`, so results do not
//! depend on the number of worker threads.

use std::io::{self, Write};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{ProcessSpec, TimeVaryingSpec};
use crate::transient::nonhomogeneous::cumulative_intensity;

/// Jumps per path before the path is reported as censored.
pub const JUMP_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventLabel {
    Birth,
    Death,
    Catastrophe,
}

impl EventLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            EventLabel::Birth => "birth",
            EventLabel::Death => "death",
            EventLabel::Catastrophe => "catastrophe",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub time: f64,
    pub state: usize,
    pub label: EventLabel,
}

/// One simulated path on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub seed: u64,
    pub start: usize,
    pub jumps: Vec<Jump>,
    pub horizon: f64,
    /// The jump cap was reached before the horizon.
    pub censored: bool,
}

impl PathSample {
    pub fn state_at(&self, t: f64) -> usize {
        let i = self.jumps.partition_point(|j| j.time <= t);
        if i == 0 {
            self.start
        } else {
            self.jumps[i - 1].state
        }
    }

    /// `time,state,label`, one event per line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "time,state,label")?;
        for j in &self.jumps {
            writeln!(out, "{},{},{}", j.time, j.state, j.label.as_str())?;
        }
        Ok(())
    }
}

pub(crate) fn path_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn exp1(rng: &mut ChaCha12Rng) -> f64 {
    rng.sample(Exp1)
}

/// Rates seen by the simulator. Catastrophes never fire at the floor.
trait Dynamics: Sync {
    fn floor(&self) -> usize;
    fn start_time(&self) -> f64;
    /// `[birth, death, catastrophe]` out of `n` at time `t`.
    fn rates(&self, n: usize, t: f64) -> [f64; 3];
    /// Thinning bound for time-varying rates, `None` when rates are constant in time.
    fn bound(&self, n: usize) -> Option<f64>;
}

struct Homogeneous<'a> {
    spec: &'a ProcessSpec<f64>,
    with_catastrophes: bool,
}

impl Dynamics for Homogeneous<'_> {
    fn floor(&self) -> usize {
        self.spec.r
    }
    fn start_time(&self) -> f64 {
        0.0
    }
    fn rates(&self, n: usize, _t: f64) -> [f64; 3] {
        let x = if self.with_catastrophes && n > self.spec.r { self.spec.xi } else { 0.0 };
        [self.spec.birth(n), self.spec.death(n), x]
    }
    fn bound(&self, _n: usize) -> Option<f64> {
        None
    }
}

struct TimeVarying<'a> {
    spec: &'a TimeVaryingSpec<f64>,
    with_catastrophes: bool,
}

impl Dynamics for TimeVarying<'_> {
    fn floor(&self) -> usize {
        self.spec.r
    }
    fn start_time(&self) -> f64 {
        self.spec.t0
    }
    fn rates(&self, n: usize, t: f64) -> [f64; 3] {
        let x = if self.with_catastrophes && n > self.spec.r { self.spec.xi(t) } else { 0.0 };
        [self.spec.birth(n, t), self.spec.death(n, t), x]
    }
    fn bound(&self, n: usize) -> Option<f64> {
        Some(self.spec.rate_bound(n))
    }
}

enum Step {
    Jump(Jump),
    /// No event can ever occur again.
    Absorbed,
    /// The next event would fall after `until`; time is left at `until`.
    Horizon,
    Capped,
}

struct Walker<'a, D> {
    dynamics: &'a D,
    state: usize,
    time: f64,
    jumps: u64,
}

impl<'a, D: Dynamics> Walker<'a, D> {
    fn new(dynamics: &'a D, start: usize) -> Self {
        Self {
            dynamics,
            state: start,
            time: dynamics.start_time(),
            jumps: 0,
        }
    }

    fn apply(&mut self, rates: [f64; 3], u: f64) -> Jump {
        let label = if u < rates[0] {
            self.state += 1;
            EventLabel::Birth
        } else if u < rates[0] + rates[1] {
            self.state -= 1;
            EventLabel::Death
        } else {
            self.state = self.dynamics.floor();
            EventLabel::Catastrophe
        };
        self.jumps += 1;
        Jump {
            time: self.time,
            state: self.state,
            label,
        }
    }

    fn step(&mut self, rng: &mut ChaCha12Rng, until: f64) -> Step {
        if self.jumps >= JUMP_CAP {
            return Step::Capped;
        }
        match self.dynamics.bound(self.state) {
            None => {
                let rates = self.dynamics.rates(self.state, self.time);
                let total: f64 = rates.iter().sum();
                if total <= 0.0 {
                    return Step::Absorbed;
                }
                let t = self.time + exp1(rng) / total;
                if t > until {
                    self.time = until;
                    return Step::Horizon;
                }
                self.time = t;
                let u = rng.random::<f64>() * total;
                Step::Jump(self.apply(rates, u))
            }
            Some(bound) => {
                if bound <= 0.0 {
                    return Step::Absorbed;
                }
                let mut proposals = 0u64;
                loop {
                    let t = self.time + exp1(rng) / bound;
                    if t > until {
                        self.time = until;
                        return Step::Horizon;
                    }
                    self.time = t;
                    let rates = self.dynamics.rates(self.state, t);
                    let u = rng.random::<f64>() * bound;
                    if u < rates.iter().sum::<f64>() {
                        return Step::Jump(self.apply(rates, u));
                    }
                    proposals += 1;
                    if proposals >= JUMP_CAP {
                        return Step::Capped;
                    }
                }
            }
        }
    }
}

/// Outcome of running a path until a stopping event.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Stopped {
    At(f64),
    Never,
    Censored,
}

fn run_until<D: Dynamics>(
    dynamics: &D,
    start: usize,
    rng: &mut ChaCha12Rng,
    until: f64,
    mut stop: impl FnMut(&Jump) -> bool,
) -> Stopped {
    let mut w = Walker::new(dynamics, start);
    loop {
        match w.step(rng, until) {
            Step::Jump(j) => {
                if stop(&j) {
                    return Stopped::At(j.time);
                }
            }
            Step::Absorbed | Step::Horizon => return Stopped::Never,
            Step::Capped => return Stopped::Censored,
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::MonteCarlo(msg.into())
}

fn check_paths(n_paths: usize) -> Result<(), Error> {
    if n_paths < 100 {
        return Err(invalid(format!("need at least 100 paths, got {n_paths}")));
    }
    Ok(())
}

/// Path of the process with catastrophes from `j` on `[0, horizon]`.
pub fn simulate_path(spec: &ProcessSpec<f64>, j: usize, horizon: f64, seed: u64) -> Result<PathSample, Error> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid("horizon must be positive and finite"));
    }
    if j < spec.r {
        return Err(invalid(format!("initial state {j} below the floor {}", spec.r)));
    }
    let dynamics = Homogeneous {
        spec,
        with_catastrophes: true,
    };
    let mut rng = path_rng(seed, 0);
    let mut w = Walker::new(&dynamics, j);
    let mut jumps = Vec::new();
    let censored = loop {
        match w.step(&mut rng, horizon) {
            Step::Jump(jump) => jumps.push(jump),
            Step::Absorbed | Step::Horizon => break false,
            Step::Capped => break true,
        }
    };
    Ok(PathSample {
        seed,
        start: j,
        jumps,
        horizon,
        censored,
    })
}

/// Sample mean and variance with standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub se_mean: f64,
    /// Large-sample standard error of the sample variance, from the fourth central moment.
    pub se_variance: f64,
    pub censored: usize,
}

impl Summary {
    pub fn from_samples(xs: &[f64], censored: usize) -> Self {
        let n = xs.len();
        let nf = n as f64;
        let mean = xs.iter().sum::<f64>() / nf;
        let (mut m2, mut m4) = (0.0, 0.0);
        for &x in xs {
            let d = (x - mean) * (x - mean);
            m2 += d;
            m4 += d * d;
        }
        let variance = m2 / (nf - 1.0);
        let m4 = m4 / nf;
        let pop = m2 / nf;
        Self {
            n,
            mean,
            variance,
            se_mean: (variance / nf).sqrt(),
            se_variance: ((m4 - pop * pop).max(0.0) / nf).sqrt(),
            censored,
        }
    }

    /// `|value - mean| ≤ k · se_mean`.
    pub fn mean_within(&self, value: f64, k: f64) -> bool {
        (value - self.mean).abs() <= k * self.se_mean
    }

    pub fn variance_within(&self, value: f64, k: f64) -> bool {
        (value - self.variance).abs() <= k * self.se_variance
    }
}

/// Sorted samples of a random time plus their summary.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeEstimate {
    pub summary: Summary,
    pub samples: Vec<f64>,
}

impl TimeEstimate {
    fn from_outcomes(outcomes: Vec<Stopped>) -> Self {
        let mut censored = 0;
        let mut samples = Vec::with_capacity(outcomes.len());
        for o in outcomes {
            match o {
                Stopped::At(t) => samples.push(t),
                Stopped::Never | Stopped::Censored => censored += 1,
            }
        }
        samples.sort_by(f64::total_cmp);
        Self {
            summary: Summary::from_samples(&samples, censored),
            samples,
        }
    }

    /// Empirical CDF at `t` and its binomial standard error.
    pub fn ecdf(&self, t: f64) -> (f64, f64) {
        let n = self.samples.len() as f64;
        let f = self.samples.partition_point(|&x| x <= t) as f64 / n;
        (f, (f * (1.0 - f) / n).sqrt())
    }
}

/// First-visit time to `k` from `j`, one path per sample.
pub fn estimate_first_visit(
    spec: &ProcessSpec<f64>,
    j: usize,
    k: usize,
    n_paths: usize,
    seed: u64,
) -> Result<TimeEstimate, Error> {
    check_paths(n_paths)?;
    if j == k || j < spec.r || k < spec.r {
        return Err(invalid("first visit needs distinct states at or above the floor"));
    }
    let dynamics = Homogeneous {
        spec,
        with_catastrophes: true,
    };
    let outcomes = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            run_until(&dynamics, j, &mut rng, f64::INFINITY, |jump| jump.state == k)
        })
        .collect();
    Ok(TimeEstimate::from_outcomes(outcomes))
}

/// Time of the first catastrophe that changes the state, started from `j`.
pub fn estimate_catastrophe_time(
    spec: &ProcessSpec<f64>,
    j: usize,
    n_paths: usize,
    seed: u64,
) -> Result<TimeEstimate, Error> {
    check_paths(n_paths)?;
    if !(spec.xi > 0.0) {
        return Err(invalid("catastrophe time needs a positive catastrophe rate"));
    }
    let dynamics = Homogeneous {
        spec,
        with_catastrophes: true,
    };
    let outcomes = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            run_until(&dynamics, j, &mut rng, f64::INFINITY, |jump| {
                jump.label == EventLabel::Catastrophe
            })
        })
        .collect();
    Ok(TimeEstimate::from_outcomes(outcomes))
}

/// Time-average occupancy of one long path after `burn_in`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryEstimate {
    pub r: usize,
    /// `occupancy[i]` is the fraction of time spent in `r + i`.
    pub occupancy: Vec<f64>,
    /// Batch-means standard errors.
    pub se: Vec<f64>,
    pub batches: usize,
    pub censored: bool,
}

impl StationaryEstimate {
    pub fn prob(&self, n: usize) -> f64 {
        if n < self.r {
            return 0.0;
        }
        self.occupancy.get(n - self.r).copied().unwrap_or(0.0)
    }

    pub fn se_of(&self, n: usize) -> f64 {
        if n < self.r {
            return 0.0;
        }
        self.se.get(n - self.r).copied().unwrap_or(0.0)
    }
}

pub const STATIONARY_BATCHES: usize = 32;

pub fn estimate_stationary(
    spec: &ProcessSpec<f64>,
    j: usize,
    burn_in: f64,
    horizon: f64,
    seed: u64,
) -> Result<StationaryEstimate, Error> {
    if !(burn_in >= 0.0 && horizon > burn_in && horizon.is_finite()) {
        return Err(invalid("need 0 <= burn_in < horizon"));
    }
    let dynamics = Homogeneous {
        spec,
        with_catastrophes: true,
    };
    let b = STATIONARY_BATCHES;
    let width = (horizon - burn_in) / b as f64;
    let mut per_batch: Vec<Vec<f64>> = vec![Vec::new(); b];
    let credit = |state: usize, from: f64, to: f64, per_batch: &mut Vec<Vec<f64>>| {
        let (mut a, end) = (from.max(burn_in), to.min(horizon));
        while a < end {
            let k = (((a - burn_in) / width) as usize).min(b - 1);
            let edge = (burn_in + width * (k + 1) as f64).min(end);
            let row = &mut per_batch[k];
            let i = state - spec.r;
            if row.len() <= i {
                row.resize(i + 1, 0.0);
            }
            row[i] += edge - a;
            a = edge;
        }
    };
    let mut rng = path_rng(seed, 0);
    let mut w = Walker::new(&dynamics, j);
    let mut censored = false;
    loop {
        let (state, from) = (w.state, w.time);
        match w.step(&mut rng, horizon) {
            Step::Jump(jump) => credit(state, from, jump.time, &mut per_batch),
            Step::Absorbed | Step::Horizon => {
                credit(state, from, horizon, &mut per_batch);
                break;
            }
            Step::Capped => {
                censored = true;
                break;
            }
        }
    }
    let len = per_batch.iter().map(Vec::len).max().unwrap_or(0);
    let mut occupancy = vec![0.0; len];
    let mut se = vec![0.0; len];
    for i in 0..len {
        let fr: Vec<f64> = per_batch.iter().map(|row| row.get(i).copied().unwrap_or(0.0) / width).collect();
        let s = Summary::from_samples(&fr, 0);
        occupancy[i] = s.mean;
        se[i] = s.se_mean;
    }
    Ok(StationaryEstimate {
        r: spec.r,
        occupancy,
        se,
        batches: b,
        censored,
    })
}

/// Two-sample Kolmogorov-Smirnov statistic of sorted samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut k, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && k < b.len() {
        let x = a[i].min(b[k]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while k < b.len() && b[k] <= x {
            k += 1;
        }
        d = d.max((i as f64 / n - k as f64 / m).abs());
    }
    d
}

/// One-sample Kolmogorov-Smirnov statistic of sorted samples against `cdf`.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = samples.len() as f64;
    samples.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// Asymptotic critical value of the two-sample statistic at level `alpha`.
pub fn ks_critical_two_sample(n: usize, m: usize, alpha: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    (-0.5 * (alpha / 2.0).ln()).sqrt() * ((n + m) / (n * m)).sqrt()
}

pub fn ks_critical_one_sample(n: usize, alpha: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt() / (n as f64).sqrt()
}

/// Paired samples of `T_{j,r}` and `min(T̂_{j,r}, Z)` with `Z` the first catastrophe clock.
#[derive(Debug, Clone, PartialEq)]
pub struct MinCharacterization {
    pub direct: TimeEstimate,
    pub via_min: TimeEstimate,
    pub ks: f64,
    pub ks_critical_1pct: f64,
}

fn characterization(direct: Vec<Stopped>, via_min: Vec<Stopped>) -> MinCharacterization {
    let direct = TimeEstimate::from_outcomes(direct);
    let via_min = TimeEstimate::from_outcomes(via_min);
    MinCharacterization {
        ks: ks_two_sample(&direct.samples, &via_min.samples),
        ks_critical_1pct: ks_critical_two_sample(direct.samples.len(), via_min.samples.len(), 0.01),
        direct,
        via_min,
    }
}

/// The caller asserts that the catastrophe-free process reaches `r` almost surely.
pub fn sample_min_characterization(
    spec: &ProcessSpec<f64>,
    j: usize,
    n_paths: usize,
    seed: u64,
) -> Result<MinCharacterization, Error> {
    check_paths(n_paths)?;
    if j <= spec.r || !(spec.xi > 0.0) {
        return Err(invalid("needs j above the floor and a positive catastrophe rate"));
    }
    let r = spec.r;
    let with = Homogeneous {
        spec,
        with_catastrophes: true,
    };
    let without = Homogeneous {
        spec,
        with_catastrophes: false,
    };
    let pairs: Vec<(Stopped, Stopped)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, 2 * i);
            let direct = run_until(&with, j, &mut rng, f64::INFINITY, |jump| jump.state == r);
            let mut rng = path_rng(seed, 2 * i + 1);
            let z = exp1(&mut rng) / spec.xi;
            let hat = match run_until(&without, j, &mut rng, z, |jump| jump.state == r) {
                Stopped::Never => Stopped::At(z),
                other => other,
            };
            (direct, hat)
        })
        .collect();
    let (direct, via_min) = pairs.into_iter().unzip();
    Ok(characterization(direct, via_min))
}

/// Solves `∫_{t0}^{t} ξ(u) du = e` for `t`.
fn invert_hazard(spec: &TimeVaryingSpec<f64>, e: f64) -> Result<f64, Error> {
    let tol = 1e-12;
    let engine = |err: crate::error::EngineError| Error::Engine(err);
    let mut a = spec.t0;
    let mut acc = 0.0;
    let step = 1.0;
    loop {
        let piece = cumulative_intensity(spec, a, a + step, tol).map_err(engine)?;
        if acc + piece >= e {
            break;
        }
        if !(piece > 0.0) && a - spec.t0 > 1e6 {
            return Err(invalid("catastrophe intensity integrates to a finite total"));
        }
        acc += piece;
        a += step;
    }
    let (mut lo, mut hi) = (a, a + step);
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let g = acc + cumulative_intensity(spec, a, t, tol).map_err(engine)? - e;
        if g.abs() <= 1e-13 * e.max(1.0) {
            break;
        }
        if g > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let slope = spec.xi(t);
        let newton = t - g / slope;
        t = if slope > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-14 * hi.abs().max(1.0) {
            break;
        }
    }
    Ok(t)
}

/// Time-varying version: `Z` has hazard `ξ(t)` from `t0`. Times are absolute.
pub fn sample_min_characterization_tv(
    spec: &TimeVaryingSpec<f64>,
    j: usize,
    n_paths: usize,
    seed: u64,
) -> Result<MinCharacterization, Error> {
    check_paths(n_paths)?;
    if j <= spec.r {
        return Err(invalid("needs j above the floor"));
    }
    let r = spec.r;
    let with = TimeVarying {
        spec,
        with_catastrophes: true,
    };
    let without = TimeVarying {
        spec,
        with_catastrophes: false,
    };
    let pairs: Vec<Result<(Stopped, Stopped), Error>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, 2 * i);
            let direct = run_until(&with, j, &mut rng, f64::INFINITY, |jump| jump.state == r);
            let mut rng = path_rng(seed, 2 * i + 1);
            let z = invert_hazard(spec, exp1(&mut rng))?;
            let hat = match run_until(&without, j, &mut rng, z, |jump| jump.state == r) {
                Stopped::Never => Stopped::At(z),
                other => other,
            };
            Ok((direct, hat))
        })
        .collect();
    let mut direct = Vec::with_capacity(n_paths);
    let mut via_min = Vec::with_capacity(n_paths);
    for p in pairs {
        let (d, m) = p?;
        direct.push(d);
        via_min.push(m);
    }
    Ok(characterization(direct, via_min))
}

/// Simulated first-visit times to `r` of the time-varying process, absolute times.
pub fn estimate_first_visit_tv(
    spec: &TimeVaryingSpec<f64>,
    j: usize,
    n_paths: usize,
    seed: u64,
) -> Result<TimeEstimate, Error> {
    check_paths(n_paths)?;
    let r = spec.r;
    let with = TimeVarying {
        spec,
        with_catastrophes: true,
    };
    let outcomes = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            run_until(&with, j, &mut rng, f64::INFINITY, |jump| jump.state == r)
        })
        .collect();
    Ok(TimeEstimate::from_outcomes(outcomes))
}
