//! Independent oracles for the analytic results: Green's function series by
//! forward iteration, stationary distributions of truncated quadrant chains,
//! tail regression, Monte Carlo estimation of the prefactor `f`, and
//! residual checks.

use alloc::collections::btree_map::Entry;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::asymptotics::{Estimate, Profile, TailLaw};
use crate::error::{Error, Result};
use crate::greens::d_plus;
use crate::kernel::{
    BridgePhaseChain, FreeKernel, HarmonicFunction, HomogeneousChain, PhaseChain, PhaseMeasure,
};
use crate::laurent::LaurentPoly;
use crate::linalg::{least_squares, BandedMatrix};
use crate::num::{ceil, exp, ln, sqrt};
use crate::spectral::{spectral_radius, Regime};

// ---------------------------------------------------------------------------
// Green's function series

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreensOptions {
    pub lmax: usize,
    pub ymax: usize,
    pub horizon_factor: f64,
    pub start: (i64, usize),
    /// Slope `c` of `a₀(y) = 1 + c·y`; nonzero applies the Doob transform.
    pub a0_slope: f64,
    /// Extra columns beyond `[0, lmax]`, in units of the largest jump.
    pub margin: usize,
    /// Phases `0..visit_phases` whose visit counts are kept.
    pub visit_phases: usize,
}

impl GreensOptions {
    pub fn new(lmax: usize) -> Self {
        Self {
            lmax,
            ymax: 200,
            horizon_factor: 4.0,
            start: (0, 0),
            a0_slope: 0.0,
            margin: 64,
            visit_phases: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreensSeries {
    /// Expected visits to `(ℓ, 0)` for `ℓ = 0..=lmax`.
    pub values: Vec<f64>,
    /// `visits[y][ℓ]` for `y < visit_phases`.
    pub visits: Vec<Vec<f64>>,
    /// Mass lost through the left or top edge at levels `≤ lmax`, plus mass
    /// still at levels `≤ lmax` when the horizon ends.
    pub residual_mass: f64,
    /// Mass that left through the right edge.
    pub escaped_mass: f64,
    pub steps: usize,
    pub options: GreensOptions,
}

impl GreensSeries {
    pub fn at(&self, level: usize, y: usize) -> f64 {
        self.visits[y][level]
    }

    pub fn total_visits(&self) -> f64 {
        self.visits.iter().flatten().sum()
    }
}

struct Terms {
    jumps: Vec<(i64, f64)>,
}

impl Terms {
    fn of(h: &LaurentPoly, factor: f64) -> Self {
        Self {
            jumps: h.iter().map(|(e, w)| (e as i64, w * factor)).collect(),
        }
    }
}

fn max_jumps(k: &FreeKernel) -> (i64, i64) {
    let mut left = 0i64;
    let mut right = 0i64;
    for h in k.transforms() {
        if let Some(lo) = h.min_exponent() {
            left = left.max(-(lo as i64));
        }
        if let Some(hi) = h.max_exponent() {
            right = right.max(hi as i64);
        }
    }
    (left, right)
}

/// Expected visits `Σ_n Iⁿ((x₀, y₀), (ℓ, y))` by forward iteration of the
/// sub-probability mass.
pub fn greens_dp(i: &FreeKernel, opts: &GreensOptions) -> Result<GreensSeries> {
    let dp = d_plus(i);
    if !(dp > 0.0) {
        return Err(Error::NonconvergentOracle("greens_dp needs d+ > 0"));
    }
    if opts.start.1 > opts.ymax || opts.visit_phases == 0 || opts.visit_phases > opts.ymax + 1 {
        return Err(Error::InvalidArgument(
            "greens_dp: start or visit phases outside lattice".into(),
        ));
    }
    let (left, right) = max_jumps(i);
    let x_neg = opts.margin as i64 * left.max(1);
    let x_pos = opts.margin as i64 * right.max(1);
    let lmax = opts.lmax as i64;
    if opts.start.0 < -x_neg || opts.start.0 > lmax {
        return Err(Error::InvalidArgument(
            "greens_dp: start level outside lattice".into(),
        ));
    }
    let width = (x_neg + lmax + x_pos + 1) as usize;
    let ny = opts.ymax + 1;
    let steps = ceil(opts.horizon_factor * opts.lmax as f64 / dp) as usize;
    let a0 = |y: usize| 1.0 + opts.a0_slope * y as f64;

    let up = Terms::of(&i.up, 1.0);
    let down = Terms::of(&i.down, 1.0);
    let stay = Terms::of(&i.stay, 1.0);
    let up0 = Terms::of(&i.up0, a0(1) / a0(0));
    let stay0 = Terms::of(&i.stay0, 1.0);

    let mut mass = vec![0.0; width * ny];
    let mut next = vec![0.0; width * ny];
    let col = |x: i64| (x + x_neg) as usize;
    mass[opts.start.1 * width + col(opts.start.0)] = 1.0;

    let vp = opts.visit_phases;
    let mut visits = vec![vec![0.0; opts.lmax + 1]; vp];
    let zero = col(0);
    let accumulate = |mass: &[f64], ytop: usize, visits: &mut Vec<Vec<f64>>| {
        for (y, row) in visits.iter_mut().enumerate().take(ytop.min(vp - 1) + 1) {
            let base = y * width + zero;
            for (v, m) in row.iter_mut().zip(&mass[base..base + opts.lmax + 1]) {
                *v += m;
            }
        }
    };

    let mut ytop = opts.start.1;
    let mut xlo = col(opts.start.0);
    let mut xhi = xlo;
    accumulate(&mass, ytop, &mut visits);
    let mut residual = 0.0;
    let mut escaped = 0.0;
    let lmax_col = col(lmax);

    for _ in 0..steps {
        let new_ytop = (ytop + 1).min(opts.ymax);
        let nlo = xlo.saturating_sub(left as usize);
        let nhi = (xhi + right as usize).min(width - 1);
        for y in 0..=new_ytop {
            next[y * width + nlo..=y * width + nhi].fill(0.0);
        }
        for y in 0..=ytop {
            let row = &mass[y * width..(y + 1) * width];
            let moves: [(&Terms, isize, f64); 3] = if y == 0 {
                [(&up0, 1, 1.0), (&stay0, 0, 1.0), (&stay0, 0, 0.0)]
            } else {
                [
                    (&up, 1, a0(y + 1) / a0(y)),
                    (&down, -1, a0(y - 1) / a0(y)),
                    (&stay, 0, 1.0),
                ]
            };
            for (terms, dy, factor) in moves {
                if factor == 0.0 {
                    continue;
                }
                let ty = (y as isize + dy) as usize;
                let lost_top = ty > opts.ymax;
                for &(dx, w) in &terms.jumps {
                    let w = w * factor;
                    for x in xlo..=xhi {
                        let m = row[x];
                        if m == 0.0 {
                            continue;
                        }
                        let tx = x as i64 + dx;
                        let v = m * w;
                        if tx < 0 {
                            residual += v;
                        } else if tx as usize >= width {
                            escaped += v;
                        } else if lost_top {
                            if x <= lmax_col {
                                residual += v;
                            } else {
                                escaped += v;
                            }
                        } else {
                            next[ty * width + tx as usize] += v;
                        }
                    }
                }
            }
        }
        core::mem::swap(&mut mass, &mut next);
        ytop = new_ytop;
        xlo = nlo;
        xhi = nhi;
        accumulate(&mass, ytop, &mut visits);
    }
    for y in 0..=ytop {
        residual += mass[y * width..y * width + lmax_col + 1]
            .iter()
            .sum::<f64>();
    }
    Ok(GreensSeries {
        values: visits[0].clone(),
        visits,
        residual_mass: residual,
        escaped_mass: escaped,
        steps,
        options: *opts,
    })
}

/// Richardson extrapolation of `g(ℓ) = g∞ + a/ℓ + b/ℓ²` from `ℓ, 2ℓ, 4ℓ`.
pub fn richardson(g1: f64, g2: f64, g4: f64) -> f64 {
    let r1 = 2.0 * g2 - g1;
    let r2 = 2.0 * g4 - g2;
    (4.0 * r2 - r1) / 3.0
}

// ---------------------------------------------------------------------------
// Truncated quadrant chain

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Gth,
    Power,
}

/// Largest state count solved by direct elimination.
pub const GTH_MAX_STATES: usize = 30_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Stationary {
    pub x_max: usize,
    pub y_max: usize,
    /// `pi[x * (y_max + 1) + y]`.
    pub pi: Vec<f64>,
    pub method: SolveMethod,
    /// `‖πP - π‖₁`.
    pub residual: f64,
}

impl Stationary {
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.pi[x * (self.y_max + 1) + y]
    }

    /// `π(·, y)` over levels.
    pub fn row(&self, y: usize) -> Vec<f64> {
        (0..=self.x_max).map(|x| self.at(x, y)).collect()
    }

    /// `π(x, ·)` over phases.
    pub fn column(&self, x: usize) -> Vec<f64> {
        (0..=self.y_max).map(|y| self.at(x, y)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 2_000_000,
        }
    }
}

/// Transitions of the quadrant chain on `{0..=X} × {0..=Y}`; jumps leaving
/// the box become self-loops.
fn quadrant_transitions(k: &FreeKernel, xm: usize, ym: usize) -> Vec<Vec<(usize, f64)>> {
    let ny = ym + 1;
    let n = (xm + 1) * ny;
    let mut out = Vec::with_capacity(n);
    for x in 0..=xm {
        for y in 0..=ym {
            let from = x * ny + y;
            let mut row: Vec<(usize, f64)> = Vec::new();
            let mut self_loop = 0.0;
            let parts: [(&LaurentPoly, isize); 3] = if y == 0 {
                [(&k.up0, 1), (&k.stay0, 0), (&LaurentPoly::zero(), 0)]
            } else {
                [(&k.up, 1), (&k.down, -1), (&k.stay, 0)]
            };
            for (h, dy) in parts {
                let ty = y as isize + dy;
                for (dx, w) in h.iter() {
                    let tx = x as i64 + dx as i64;
                    if tx < 0 || tx > xm as i64 || ty > ym as isize || (tx as usize == x && dy == 0)
                    {
                        self_loop += w;
                    } else {
                        row.push((tx as usize * ny + ty as usize, w));
                    }
                }
            }
            if self_loop > 0.0 {
                row.push((from, self_loop));
            }
            out.push(row);
        }
    }
    out
}

fn stationarity_residual(trans: &[Vec<(usize, f64)>], pi: &[f64]) -> f64 {
    let mut next = vec![0.0; pi.len()];
    for (from, row) in trans.iter().enumerate() {
        for &(to, w) in row {
            next[to] += pi[from] * w;
        }
    }
    next.iter().zip(pi).map(|(a, b)| (a - b).abs()).sum()
}

/// Stationary distribution of the quadrant chain built from a free kernel.
pub fn truncated_stationary(k: &FreeKernel, x_max: usize, y_max: usize) -> Result<Stationary> {
    let n = (x_max + 1) * (y_max + 1);
    let method = if n <= GTH_MAX_STATES {
        SolveMethod::Gth
    } else {
        SolveMethod::Power
    };
    truncated_stationary_with(k, x_max, y_max, method, &PowerOptions::default())
}

pub fn truncated_stationary_with(
    k: &FreeKernel,
    x_max: usize,
    y_max: usize,
    method: SolveMethod,
    power: &PowerOptions,
) -> Result<Stationary> {
    if k.kappa > 0.0 {
        return Err(Error::InvalidKernel(
            "quadrant chain needs kappa = 0".into(),
        ));
    }
    let ny = y_max + 1;
    let n = (x_max + 1) * ny;
    let trans = quadrant_transitions(k, x_max, y_max);
    let pi = match method {
        SolveMethod::Gth => {
            let (left, right) = max_jumps(k);
            let band = left.max(right) as usize * ny + 1;
            let mut m = BandedMatrix::new(n, band.min(n.saturating_sub(1)).max(1));
            for (from, row) in trans.iter().enumerate() {
                for &(to, w) in row {
                    if to != from {
                        m.add(from, to, w);
                    }
                }
            }
            m.gth_stationary()
                .ok_or(Error::Oracle("quadrant chain is reducible".into()))?
        }
        SolveMethod::Power => {
            let mut pi = vec![1.0 / n as f64; n];
            let mut next = vec![0.0; n];
            let mut converged = false;
            for _ in 0..power.max_iter {
                next.fill(0.0);
                for (from, row) in trans.iter().enumerate() {
                    let m = 0.5 * pi[from];
                    next[from] += m;
                    for &(to, w) in row {
                        next[to] += m * w;
                    }
                }
                let total: f64 = next.iter().sum();
                let mut diff = 0.0;
                for (a, b) in next.iter_mut().zip(&pi) {
                    *a /= total;
                    diff += (*a - b).abs();
                }
                core::mem::swap(&mut pi, &mut next);
                // the lazy step halves the residual of the original chain
                if 2.0 * diff < power.tol {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::NonconvergentOracle("power iteration"));
            }
            pi
        }
    };
    let residual = stationarity_residual(&trans, &pi);
    Ok(Stationary {
        x_max,
        y_max,
        pi,
        method,
        residual,
    })
}

// ---------------------------------------------------------------------------
// Tail regression

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub rate: f64,
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (usize, usize),
}

/// Least squares of `log v(ℓ)` on `{1, ℓ, log ℓ}` over `ℓ ∈ [lo, hi]`;
/// `series` is indexed by `ℓ`.
pub fn fit_tail(series: &[f64], window: (usize, usize)) -> Result<FitResult> {
    let (lo, hi) = window;
    if lo == 0 || hi < lo || hi - lo + 1 < 20 || hi >= series.len() {
        return Err(Error::InvalidArgument(format!(
            "fit window {lo}..={hi} needs 1 <= lo, at least 20 points, within {} values",
            series.len()
        )));
    }
    let mut logs = Vec::with_capacity(hi - lo + 1);
    for l in lo..=hi {
        let v = series[l];
        if !(v > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "value at level {l} is not positive"
            )));
        }
        logs.push(ln(v));
    }
    let ones = vec![1.0; logs.len()];
    let levels: Vec<f64> = (lo..=hi).map(|l| l as f64).collect();
    let loglev: Vec<f64> = levels.iter().map(|&l| ln(l)).collect();
    let b =
        least_squares(&[ones, levels.clone(), loglev.clone()], &logs).ok_or(Error::SingularFit)?;
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (j, &v) in logs.iter().enumerate() {
        let pred = b[0] + b[1] * levels[j] + b[2] * loglev[j];
        ss_res += (v - pred) * (v - pred);
        ss_tot += (v - mean) * (v - mean);
    }
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(FitResult {
        rate: -b[1],
        exponent: b[2],
        intercept: b[0],
        r_squared,
        window,
    })
}

// ---------------------------------------------------------------------------
// Monte Carlo estimate of f

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimState {
    pub x: i64,
    pub y: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub seed: u64,
    /// Total budget, split across phases in proportion to their weight.
    pub replications: u64,
    pub escape_level: i64,
    pub horizon: u64,
    /// Phases with `π(0,y)ĥ(y)` below `cutoff` times the total are skipped.
    pub cutoff: f64,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            seed: 42,
            replications: 100_000,
            escape_level: 200,
            horizon: 1_000_000,
            cutoff: 1e-12,
        }
    }
}

/// Coarser cutoff used to report the estimator's sensitivity to the cutoff.
pub const COARSE_CUTOFF: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct FEstimate {
    pub estimate: Estimate,
    /// The same sum restricted to phases above [`COARSE_CUTOFF`].
    pub coarse_value: f64,
    /// `(y, weight, paths, survivors)`.
    pub strata: Vec<(usize, f64, u64, u64)>,
    pub paths: u64,
    pub censored: u64,
}

struct Sampler {
    cum: Vec<f64>,
    jumps: Vec<i64>,
}

impl Sampler {
    fn new(h: &LaurentPoly) -> Self {
        let total = h.mass();
        let mut acc = 0.0;
        let mut cum = Vec::new();
        let mut jumps = Vec::new();
        for (e, w) in h.iter() {
            acc += w / total.max(f64::MIN_POSITIVE);
            cum.push(acc);
            jumps.push(e as i64);
        }
        Self { cum, jumps }
    }

    fn draw(&self, u: f64) -> i64 {
        for (c, j) in self.cum.iter().zip(&self.jumps) {
            if u < *c {
                return *j;
            }
        }
        *self.jumps.last().unwrap_or(&0)
    }
}

#[inline]
fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

enum Chain {
    Bridge(BridgePhaseChain),
    Homogeneous(HomogeneousChain),
}

impl Chain {
    fn probs(&self, y: usize) -> (f64, f64, f64) {
        match self {
            Chain::Bridge(c) => (c.up(y), c.down(y), c.stay(y)),
            Chain::Homogeneous(c) => (c.up(y), c.down(y), c.stay(y)),
        }
    }
}

/// `f = Σ_y π(0,y) ĥ(y) P_{(0,y)}(never return to x ≤ 0)` under the
/// h-transformed twisted chain. `i` is the twisted kernel of `law`.
pub fn estimate_f(
    law: &TailLaw,
    pi_boundary: &[f64],
    i: &FreeKernel,
    mc: &McOptions,
) -> Result<FEstimate> {
    if !(d_plus(i) > 0.0) {
        return Err(Error::Hypothesis(
            "twisted chain must drift right (d+ > 0)".into(),
        ));
    }
    let tc = law.twisted;
    let (chain, slope) = match law.profile {
        Profile::Bridge { kappa, p0, u, .. } => (
            Chain::Bridge(BridgePhaseChain {
                u,
                s: tc.s,
                p0,
                s0: tc.s0,
                kappa,
            }),
            kappa / p0,
        ),
        Profile::Jitter { .. } => (Chain::Homogeneous(HomogeneousChain::from(&tc)), 0.0),
    };
    let h = HarmonicFunction::new(0.0, law.theta2, slope)?;
    let weights: Vec<f64> = pi_boundary
        .iter()
        .enumerate()
        .map(|(y, p)| p * h.phase(y))
        .collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument(
            "boundary distribution has no mass".into(),
        ));
    }
    let samplers = [
        Sampler::new(&i.up),
        Sampler::new(&i.down),
        Sampler::new(&i.stay),
        Sampler::new(&i.up0),
        Sampler::new(&i.stay0),
    ];
    let mut strata = Vec::new();
    let mut paths = 0u64;
    let mut censored = 0u64;
    for (y0, &w) in weights.iter().enumerate() {
        if w < mc.cutoff * total {
            continue;
        }
        let n = ceil(mc.replications as f64 * w / total) as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
        rng.set_stream(y0 as u64);
        let mut survivors = 0u64;
        for _ in 0..n {
            let mut s = SimState { x: 0, y: y0 };
            let mut done = false;
            for _ in 0..mc.horizon {
                let (pu, pd, _) = chain.probs(s.y);
                let u = uniform(&mut rng);
                let (which, dy): (usize, isize) = if u < pu {
                    (if s.y == 0 { 3 } else { 0 }, 1)
                } else if u < pu + pd {
                    (1, -1)
                } else {
                    (if s.y == 0 { 4 } else { 2 }, 0)
                };
                s.x += samplers[which].draw(uniform(&mut rng));
                s.y = (s.y as isize + dy) as usize;
                if s.x >= mc.escape_level {
                    survivors += 1;
                    done = true;
                    break;
                }
                if s.x <= 0 {
                    done = true;
                    break;
                }
            }
            if !done {
                censored += 1;
            }
        }
        paths += n;
        strata.push((y0, w, n, survivors));
    }
    if censored * 1000 > paths {
        return Err(Error::Censoring {
            censored,
            total: paths,
        });
    }
    let mut value = 0.0;
    let mut coarse = 0.0;
    let mut var = 0.0;
    for &(_, w, n, k) in &strata {
        let p = k as f64 / n as f64;
        value += w * p;
        if w >= COARSE_CUTOFF * total {
            coarse += w * p;
        }
        var += w * w * p * (1.0 - p) / n as f64;
    }
    Ok(FEstimate {
        estimate: Estimate {
            value,
            se: sqrt(var),
        },
        coarse_value: coarse,
        strata,
        paths,
        censored,
    })
}

/// `f(ℓ) = π(ℓ, 0) / shape(ℓ, 0)` for each level of `window`, and their median.
pub fn back_solve_f(
    law: &TailLaw,
    row0: &[f64],
    window: (usize, usize),
) -> Result<(f64, Vec<f64>)> {
    let (lo, hi) = window;
    if lo == 0 || hi >= row0.len() || hi < lo {
        return Err(Error::InvalidArgument(
            "back-solve window outside the data".into(),
        ));
    }
    let vals: Vec<f64> = (lo..=hi)
        .map(|l| row0[l] / law.shape(l as u64, 0))
        .collect();
    let mut sorted = vals.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let m = sorted.len();
    let median = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    };
    Ok((median, vals))
}

// ---------------------------------------------------------------------------
// Ratio limits, convexity, harmonic residuals

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioQuery {
    pub start_a: (i64, usize),
    pub target_a: usize,
    pub start_b: (i64, usize),
    pub target_b: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioRow {
    pub query: RatioQuery,
    pub dp: f64,
    pub expected: f64,
}

impl RatioRow {
    pub fn rel_err(&self) -> f64 {
        (self.dp / self.expected - 1.0).abs()
    }
}

/// `G(a, (ℓ, ŷa)) / G(b, (ℓ, ŷb))` against `φ(ŷa)/φ(ŷb)` on the chain
/// Doob-transformed by `a₀`.
pub fn ratio_limit_check(
    i: &FreeKernel,
    phi: &PhaseMeasure,
    a0_slope: f64,
    queries: &[RatioQuery],
    level: usize,
) -> Result<Vec<RatioRow>> {
    let mut starts = BTreeMap::new();
    let phases = queries
        .iter()
        .map(|q| q.target_a.max(q.target_b))
        .max()
        .unwrap_or(0)
        + 1;
    for q in queries {
        for s in [q.start_a, q.start_b] {
            if let Entry::Vacant(slot) = starts.entry(s) {
                let opts = GreensOptions {
                    start: s,
                    a0_slope,
                    visit_phases: phases,
                    ..GreensOptions::new(level)
                };
                slot.insert(greens_dp(i, &opts)?);
            }
        }
    }
    Ok(queries
        .iter()
        .map(|q| {
            let a = starts[&q.start_a].at(level, q.target_a);
            let b = starts[&q.start_b].at(level, q.target_b);
            RatioRow {
                query: *q,
                dp: a / b,
                expected: phi.value(q.target_a) / phi.value(q.target_b),
            }
        })
        .collect())
}

/// Midpoint convexity of `Λ(γ) = log r(Ĵ_γ)` over all pairs of the grid.
pub fn convexity_check(k: &FreeKernel, grid: &[f64]) -> Result<bool> {
    if grid.len() < 3 {
        return Err(Error::InvalidArgument(
            "convexity grid needs three points".into(),
        ));
    }
    let lam: Vec<f64> = grid
        .iter()
        .map(|&g| spectral_radius(k, g).map(|s| s.log_radius))
        .collect::<Result<_>>()?;
    for a in 0..grid.len() {
        for b in a + 1..grid.len() {
            let mid = spectral_radius(k, 0.5 * (grid[a] + grid[b]))?.log_radius;
            if mid > 0.5 * (lam[a] + lam[b]) + 1e-9 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `sup_y |Σ K((x,y),(x',y')) h(x',y')/h(x,y) - 1|` for `y ≤ ymax`.
pub fn harmonic_residual(k: &FreeKernel, h: &HarmonicFunction, ymax: usize) -> f64 {
    let z = exp(h.alpha);
    let mut worst: f64 = 0.0;
    for y in 0..=ymax {
        let hy = h.phase(y);
        let sum = if y == 0 {
            k.up0.eval_real(z) * h.phase(1) / hy + k.stay0.eval_real(z)
        } else {
            k.up.eval_real(z) * h.phase(y + 1) / hy
                + k.down.eval_real(z) * h.phase(y - 1) / hy
                + k.stay.eval_real(z)
        };
        worst = worst.max((sum - 1.0).abs());
    }
    worst
}

/// The regime's harmonic function on the free kernel at its twist point.
pub fn harmonic_for(law: &TailLaw) -> HarmonicFunction {
    let slope = match (law.regime, law.profile) {
        (Regime::Bridge, Profile::Bridge { kappa, p0, .. }) => kappa / p0,
        _ => 0.0,
    };
    HarmonicFunction {
        alpha: law.theta1,
        beta: law.theta2,
        a0_slope: slope,
    }
}
