//! Monte Carlo simulation of the NAV under the pricing measure.
//!
//! `ln S` advances by a log-Euler step whose drift drops by the fee rate `μ·a`
//! whenever the NAV sits above the mark at the start of the step. Paths are
//! generated in fixed-size blocks, each on its own ChaCha stream, and block
//! sums are combined in block order, so results do not depend on the number
//! of threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{derive_coefficients, FundParameters, HwmMode};

/// Samples (antithetic pairs or single paths) per random stream.
const BLOCK: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    /// Number of simulated paths; with antithetics this is rounded up to an
    /// even count.
    pub paths: u64,
    pub steps_per_year: u32,
    pub seed: u64,
    pub antithetic: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { paths: 100_000, steps_per_year: 2000, seed: 20_240_917, antithetic: true }
    }
}

impl McConfig {
    pub fn check(&self) -> Result<()> {
        if self.paths == 0 || self.steps_per_year == 0 {
            return Err(Error::domain("paths and steps_per_year must be at least 1"));
        }
        Ok(())
    }

    fn samples(&self) -> u64 {
        if self.antithetic {
            self.paths.div_ceil(2)
        } else {
            self.paths
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum McPayoff {
    Call,
    Put,
    /// `S_T`, discounted.
    Forward,
}

/// Which paths contribute their payoff.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathFilter {
    #[default]
    All,
    /// Only paths that stay strictly on their starting side of the mark.
    /// Crossings between grid points are accounted for with the Brownian
    /// bridge crossing probability, so the estimate carries no monitoring
    /// bias.
    BarrierNotHit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathBatchStats {
    pub price_mean: f64,
    /// Zero when fewer than two independent samples were drawn.
    pub std_error: f64,
    pub paths: u64,
    /// Mean fraction of time steps that start above the mark.
    pub occupation_above_fraction: f64,
    /// Fraction of paths observed on or across the mark at some grid point.
    pub barrier_hit_fraction: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridCell {
    pub strike: f64,
    pub maturity: f64,
    pub stats: PathBatchStats,
}

/// Prices one payoff with the contract strike and maturity of `params`.
pub fn simulate_price(params: &FundParameters, payoff: McPayoff, config: &McConfig) -> Result<PathBatchStats> {
    let cells = simulate_grid(params, payoff, &[params.strike], &[params.maturity], PathFilter::All, config)?;
    Ok(cells[0].stats)
}

/// Prices a strike × maturity grid on a shared set of paths.
///
/// Maturities are measured from inception like [`FundParameters::maturity`].
/// With more than one maturity the step is `1/steps_per_year` and every
/// remaining time must be a whole number of steps. Cells are returned
/// maturity-major in the order given.
pub fn simulate_grid(
    params: &FundParameters,
    payoff: McPayoff,
    strikes: &[f64],
    maturities: &[f64],
    filter: PathFilter,
    config: &McConfig,
) -> Result<Vec<GridCell>> {
    params.check()?;
    config.check()?;
    if strikes.is_empty() || maturities.is_empty() {
        return Err(Error::domain("empty strike or maturity list"));
    }
    let remaining: Vec<f64> = maturities.iter().map(|m| m - params.valuation_time).collect();
    if remaining.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::domain("every maturity must lie after the valuation time"));
    }
    let (dt, checkpoints) = schedule(&remaining, config.steps_per_year)?;

    let mut payoffs = Vec::with_capacity(maturities.len());
    for (&m, &s) in maturities.iter().zip(&remaining) {
        let discount = (-params.rate * s).exp();
        let row: Vec<f64> = strikes
            .iter()
            .map(|&k| FundParameters { strike: k, maturity: m, ..params.clone() }.payoff_strike())
            .collect();
        payoffs.push((discount, row));
    }

    let model = PathModel::new(params, dt);
    let job = Job { model, payoff, filter, checkpoints, payoffs, antithetic: config.antithetic };
    let samples = config.samples();
    let blocks = samples.div_ceil(BLOCK);
    let partial: Vec<Result<Vec<Acc>>> = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let n = BLOCK.min(samples - blk * BLOCK);
            job.block(config.seed, blk, n)
        })
        .collect();
    let mut total = vec![Acc::default(); maturities.len() * strikes.len()];
    for part in partial {
        for (t, p) in total.iter_mut().zip(part?) {
            t.merge(&p);
        }
    }

    let mut cells = Vec::with_capacity(total.len());
    for (i, &m) in maturities.iter().enumerate() {
        for (j, &k) in strikes.iter().enumerate() {
            cells.push(GridCell { strike: k, maturity: m, stats: total[i * strikes.len() + j].stats() });
        }
    }
    Ok(cells)
}

fn schedule(remaining: &[f64], steps_per_year: u32) -> Result<(f64, Vec<usize>)> {
    let spy = f64::from(steps_per_year);
    if let [s] = remaining {
        let n = ((s * spy) - 1e-9).ceil().max(1.0) as usize;
        return Ok((s / n as f64, vec![n]));
    }
    let mut steps = Vec::with_capacity(remaining.len());
    for s in remaining {
        let n = (s * spy).round();
        if n < 1.0 || (s * spy - n).abs() > 1e-6 {
            return Err(Error::domain(format!(
                "remaining time {s} is not a whole number of steps at {steps_per_year} per year"
            )));
        }
        steps.push(n as usize);
    }
    Ok((1.0 / spy, steps))
}

#[derive(Clone, Copy, Debug)]
struct PathModel {
    x0: f64,
    drift_below: f64,
    drift_above: f64,
    vol_step: f64,
    /// `ln H_t` at the valuation date and its increase per step.
    barrier0: f64,
    barrier_step: f64,
    /// `1/(σ²Δ)`, used by the bridge crossing probability.
    bridge_scale: f64,
}

impl PathModel {
    fn new(p: &FundParameters, dt: f64) -> Self {
        let sigma = p.vol;
        let drift_below = p.rate + p.alpha - p.mgmt_fee - 0.5 * sigma * sigma;
        let (barrier0, barrier_step) = match p.mode {
            HwmMode::Fixed => (p.hwm.ln(), 0.0),
            HwmMode::AccruingAtRate => (p.hwm.ln() + p.rate * p.valuation_time, p.rate * dt),
        };
        PathModel {
            x0: p.spot.ln(),
            drift_below: drift_below * dt,
            drift_above: (drift_below - p.mu * p.incentive) * dt,
            vol_step: sigma * dt.sqrt(),
            barrier0,
            barrier_step,
            bridge_scale: 1.0 / (sigma * sigma * dt),
        }
    }
}

/// Running state of one path.
#[derive(Clone, Copy, Debug)]
struct PathState {
    x: f64,
    /// +1 when the path started below the mark, -1 above, 0 on it.
    side: f64,
    hit: bool,
    above_steps: u64,
    log_survival: f64,
}

impl PathState {
    fn start(m: &PathModel) -> Self {
        let side = (m.barrier0 - m.x0).signum();
        let side = if m.barrier0 == m.x0 { 0.0 } else { side };
        PathState { x: m.x0, side, hit: side == 0.0, above_steps: 0, log_survival: 0.0 }
    }

    #[inline]
    fn step(&mut self, m: &PathModel, barrier: f64, next_barrier: f64, z: f64, track_survival: bool) {
        let above = self.x > barrier;
        self.above_steps += above as u64;
        let x_next = self.x + if above { m.drift_above } else { m.drift_below } + m.vol_step * z;
        if !self.hit {
            let gap_next = (next_barrier - x_next) * self.side;
            if gap_next <= 0.0 {
                self.hit = true;
            } else if track_survival {
                let exponent = 2.0 * (barrier - self.x) * self.side * gap_next * m.bridge_scale;
                if exponent < 40.0 {
                    self.log_survival += (-(-exponent).exp()).ln_1p();
                }
            }
        }
        self.x = x_next;
    }

    fn weight(&self, filter: PathFilter) -> f64 {
        match filter {
            PathFilter::All => 1.0,
            PathFilter::BarrierNotHit if self.hit => 0.0,
            PathFilter::BarrierNotHit => self.log_survival.exp(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Acc {
    samples: u64,
    paths: u64,
    sum: f64,
    sum_sq: f64,
    occupation: f64,
    hits: u64,
}

impl Acc {
    fn merge(&mut self, o: &Acc) {
        self.samples += o.samples;
        self.paths += o.paths;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
        self.occupation += o.occupation;
        self.hits += o.hits;
    }

    fn stats(&self) -> PathBatchStats {
        let n = self.samples as f64;
        let mean = self.sum / n;
        let std_error = if self.samples > 1 {
            ((self.sum_sq - n * mean * mean).max(0.0) / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        PathBatchStats {
            price_mean: mean,
            std_error,
            paths: self.paths,
            occupation_above_fraction: self.occupation / self.paths as f64,
            barrier_hit_fraction: self.hits as f64 / self.paths as f64,
        }
    }
}

struct Job {
    model: PathModel,
    payoff: McPayoff,
    filter: PathFilter,
    checkpoints: Vec<usize>,
    /// Per maturity: discount factor and payoff strikes.
    payoffs: Vec<(f64, Vec<f64>)>,
    antithetic: bool,
}

impl Job {
    fn block(&self, seed: u64, block: u64, samples: u64) -> Result<Vec<Acc>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(block);
        let width = self.payoffs[0].1.len();
        let mut acc = vec![Acc::default(); self.payoffs.len() * width];
        let last = *self.checkpoints.iter().max().unwrap_or(&0);
        let track = self.filter == PathFilter::BarrierNotHit;
        let m = &self.model;
        let members = if self.antithetic { 2 } else { 1 };

        for _ in 0..samples {
            let mut paths = [PathState::start(m); 2];
            for k in 0..last {
                let barrier = m.barrier0 + m.barrier_step * k as f64;
                let next_barrier = barrier + m.barrier_step;
                let z: f64 = rng.sample(StandardNormal);
                paths[0].step(m, barrier, next_barrier, z, track);
                if self.antithetic {
                    paths[1].step(m, barrier, next_barrier, -z, track);
                }
                for (i, &n) in self.checkpoints.iter().enumerate() {
                    if n == k + 1 {
                        self.record(&paths[..members], n, i, &mut acc[i * width..(i + 1) * width])?;
                    }
                }
            }
        }
        Ok(acc)
    }

    fn record(&self, paths: &[PathState], steps: usize, maturity: usize, acc: &mut [Acc]) -> Result<()> {
        let (discount, strikes) = &self.payoffs[maturity];
        let members = paths.len() as f64;
        for (cell, &k) in acc.iter_mut().zip(strikes) {
            let mut value = 0.0;
            for p in paths {
                let s = p.x.exp();
                let raw = match self.payoff {
                    McPayoff::Call => (s - k).max(0.0),
                    McPayoff::Put => (k - s).max(0.0),
                    McPayoff::Forward => s,
                };
                value += discount * raw * p.weight(self.filter);
            }
            value /= members;
            if !value.is_finite() {
                return Err(Error::numeric(format!("non-finite path payoff after {steps} steps"), value));
            }
            cell.samples += 1;
            cell.paths += paths.len() as u64;
            cell.sum += value;
            cell.sum_sq += value * value;
            for p in paths {
                cell.occupation += p.above_steps as f64 / steps as f64;
                cell.hits += p.hit as u64;
            }
        }
        Ok(())
    }
}

/// Result of the density-process check `E^P[Z_t] = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadonNikodymReport {
    pub mean: f64,
    pub std_error: f64,
    pub paths: u64,
    /// Largest `|A⁺ + A⁻ - t|` over all paths.
    pub max_occupation_residual: f64,
    pub mean_local_time: f64,
}

/// Simulates standard Brownian paths and averages the density of the pricing
/// measure written through local time and occupation times at `d_H`.
///
/// Local time is the ε-band estimate `(1/2ε)·|{u ≤ t : |W_u - d_H| ≤ ε}|`
/// with `ε = √Δ`; occupation times are left Riemann sums.
pub fn simulate_radon_nikodym_check(params: &FundParameters, config: &McConfig, t: f64) -> Result<RadonNikodymReport> {
    config.check()?;
    if !(t > 0.0) {
        return Err(Error::domain(format!("horizon must be positive, got {t}")));
    }
    let c = derive_coefficients(params, params.spot)?;
    let (_, steps) = schedule(&[t], config.steps_per_year)?;
    let n = steps[0];
    let dt = t / n as f64;
    let sqrt_dt = dt.sqrt();
    let eps = sqrt_dt;
    let (b, lambda, d_h) = (c.b, c.lambda, c.d_h);
    let prefactor = 2.0 * lambda * (-d_h).max(0.0);

    let samples = config.samples();
    let blocks = samples.div_ceil(BLOCK);
    let antithetic = config.antithetic;
    // (sum, sum_sq, local time sum, max residual)
    let partial: Vec<(f64, f64, f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(blk);
            let count = BLOCK.min(samples - blk * BLOCK);
            let mut out = (0.0, 0.0, 0.0, 0.0f64);
            for _ in 0..count {
                let mut w = [0.0f64; 2];
                let mut band = [0u64; 2];
                let mut above = [0u64; 2];
                let mut below = [0u64; 2];
                for _ in 0..n {
                    let z: f64 = rng.sample(StandardNormal);
                    for (j, sign) in [1.0, -1.0].into_iter().enumerate().take(if antithetic { 2 } else { 1 }) {
                        band[j] += ((w[j] - d_h).abs() <= eps) as u64;
                        above[j] += (w[j] > d_h) as u64;
                        below[j] += (w[j] <= d_h) as u64;
                        w[j] += sign * sqrt_dt * z;
                    }
                }
                let members = if antithetic { 2 } else { 1 };
                let mut value = 0.0;
                for j in 0..members {
                    let local = band[j] as f64 * dt / (2.0 * eps);
                    let a_plus = above[j] as f64 * dt;
                    let a_minus = below[j] as f64 * dt;
                    out.3 = out.3.max((a_plus + a_minus - t).abs());
                    out.2 += local;
                    let log_z = prefactor + b * w[j] - 2.0 * lambda * (w[j] - d_h).max(0.0) + lambda * local
                        - c.alpha_plus * a_plus
                        - c.alpha_minus * a_minus;
                    value += log_z.exp();
                }
                value /= members as f64;
                out.0 += value;
                out.1 += value * value;
            }
            out
        })
        .collect();

    let (mut sum, mut sum_sq, mut local, mut residual) = (0.0, 0.0, 0.0, 0.0f64);
    for p in partial {
        sum += p.0;
        sum_sq += p.1;
        local += p.2;
        residual = residual.max(p.3);
    }
    let ns = samples as f64;
    let paths = if antithetic { 2 * samples } else { samples };
    let mean = sum / ns;
    let std_error = if samples > 1 { ((sum_sq - ns * mean * mean).max(0.0) / (ns - 1.0) / ns).sqrt() } else { 0.0 };
    Ok(RadonNikodymReport {
        mean,
        std_error,
        paths,
        max_occupation_residual: residual,
        mean_local_time: local / paths as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::table1;

    fn quick(paths: u64) -> McConfig {
        McConfig { paths, steps_per_year: 500, seed: 7, antithetic: true }
    }

    #[test]
    fn rerun_is_bit_identical() {
        let p = table1();
        let cfg = McConfig { paths: 1, ..McConfig::default() };
        let a = simulate_price(&p, McPayoff::Call, &cfg).unwrap();
        let b = simulate_price(&p, McPayoff::Call, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.paths, 2);
        assert_eq!(a.std_error, 0.0);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let p = table1();
        let cfg = McConfig { paths: 3 * BLOCK * 2 + 10, ..quick(0) };
        let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let parallel = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = serial.install(|| simulate_price(&p, McPayoff::Call, &cfg).unwrap());
        let b = parallel.install(|| simulate_price(&p, McPayoff::Call, &cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn grid_matches_single_runs() {
        let p = table1();
        let cfg = quick(2 * BLOCK + 2);
        let grid = simulate_grid(&p, McPayoff::Call, &[90.0, 100.0], &[0.5, 1.0], PathFilter::All, &cfg).unwrap();
        assert_eq!(grid.len(), 4);
        let single = simulate_price(&p, McPayoff::Call, &cfg).unwrap();
        let cell = grid.iter().find(|c| c.strike == 100.0 && c.maturity == 1.0).unwrap();
        assert_eq!(cell.stats, single);
    }

    #[test]
    fn rejects_bad_schedules() {
        let p = table1();
        assert!(simulate_grid(&p, McPayoff::Call, &[100.0], &[0.5, 0.3333], PathFilter::All, &quick(10)).is_err());
        assert!(simulate_price(&p, McPayoff::Call, &McConfig { paths: 0, ..quick(1) }).is_err());
        let late = FundParameters { valuation_time: 0.5, ..table1() };
        assert!(simulate_grid(&late, McPayoff::Call, &[100.0], &[0.25], PathFilter::All, &quick(10)).is_err());
    }

    #[test]
    fn fractions_are_probabilities() {
        let p = FundParameters { hwm: 115.0, ..table1() };
        let s = simulate_price(&p, McPayoff::Call, &quick(20_000)).unwrap();
        assert!(s.std_error > 0.0);
        assert!((0.0..=1.0).contains(&s.occupation_above_fraction));
        assert!((0.0..=1.0).contains(&s.barrier_hit_fraction));
        // continuous monitoring gives 0.620 for drift 8% and 20% vol; the grid misses a few
        assert!(s.barrier_hit_fraction < 0.620 && s.barrier_hit_fraction > 0.58, "{}", s.barrier_hit_fraction);

        let at = simulate_price(&table1(), McPayoff::Call, &quick(1000)).unwrap();
        assert_eq!(at.barrier_hit_fraction, 1.0);
    }

    #[test]
    fn fee_free_forward_is_exact_in_expectation() {
        // without fees the discounted NAV drifts at α - c
        let p = FundParameters { incentive: 0.0, ..table1() };
        let s = simulate_price(&p, McPayoff::Forward, &quick(20_000)).unwrap();
        let exact = 100.0 * ((p.alpha - p.mgmt_fee) * p.maturity).exp();
        assert!((s.price_mean - exact).abs() < 3.0 * s.std_error, "{} ± {} vs {exact}", s.price_mean, s.std_error);
    }

    #[test]
    fn antithetic_on_and_off_agree() {
        let p = table1();
        let on = simulate_price(&p, McPayoff::Call, &quick(40_000)).unwrap();
        let off = simulate_price(&p, McPayoff::Call, &McConfig { antithetic: false, seed: 8, ..quick(40_000) }).unwrap();
        let combined = (on.std_error.powi(2) + off.std_error.powi(2)).sqrt();
        assert!((on.price_mean - off.price_mean).abs() < 3.0 * combined);
        assert_eq!(on.paths, off.paths);
    }

    #[test]
    fn parity_holds_path_by_path_in_expectation() {
        let p = table1();
        let cfg = quick(20_000);
        let call = simulate_price(&p, McPayoff::Call, &cfg).unwrap();
        let put = simulate_price(&p, McPayoff::Put, &cfg).unwrap();
        let fwd = simulate_price(&p, McPayoff::Forward, &cfg).unwrap();
        let residual = call.price_mean - put.price_mean - (fwd.price_mean - 100.0 * (-0.02f64).exp());
        // identical paths: the identity holds to rounding
        assert!(residual.abs() < 1e-9, "{residual}");
    }

    #[test]
    fn survival_filter_matches_closed_form_without_fees() {
        // up-and-out call with a=0 has a closed form; check the bridge-weighted
        // estimator on a coarse grid
        let p = FundParameters { hwm: 115.0, strike: 90.0, maturity: 0.5, incentive: 0.0, ..table1() };
        let cfg = McConfig { paths: 40_000, steps_per_year: 50, seed: 3, antithetic: true };
        let mc = simulate_grid(&p, McPayoff::Call, &[90.0], &[0.5], PathFilter::BarrierNotHit, &cfg).unwrap()[0].stats;
        let c = derive_coefficients(&p, 100.0).unwrap();
        let exact = crate::lifetime::c1_price(&p, &c, 100.0, 0.5).unwrap();
        assert!((mc.price_mean - exact).abs() < 3.0 * mc.std_error, "{} ± {} vs {exact}", mc.price_mean, mc.std_error);
    }

    #[test]
    fn density_check_without_local_time_weight() {
        let p = FundParameters { incentive: 0.0, hwm: 110.0, ..table1() };
        let r = simulate_radon_nikodym_check(&p, &quick(20_000), 0.5).unwrap();
        assert!((r.mean - 1.0).abs() < 3.0 * r.std_error, "{} ± {}", r.mean, r.std_error);
        assert!(r.max_occupation_residual < 1e-12);
    }
}
