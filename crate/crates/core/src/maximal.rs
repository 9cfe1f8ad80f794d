//! The non-centered maximal operator `M_μ` over a countable ball family on a
//! weighted grid, and the inequality chain behind its boundedness on
//! `L^{p(·)}(μ)`: Lemma A1, the variable Jensen inequality, Lemma A4 and the
//! pointwise maximal bound.
//!
//! All ball averages use the grid weights, so the discrete measure `μ_h` is a
//! measure in its own right and every check runs against it exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classes::{check_p_mu, inverse_s, BallSampler};
use crate::error::{Error, Result};
use crate::exponent::ExponentSpec;
use crate::gauss::{Ball, BallFamily, BoxDomain, MeasureHandle};
use crate::norms::{luxemburg_norm_with, Bump, GridFunction, DEFAULT_TOL, EPS_NUM};
use crate::report::{fmt_f64, relative_change, CheckReport};

/// Grid points per axis used when none is given.
pub fn default_points_per_axis(dim: usize) -> usize {
    match dim {
        1 => 1 << 10,
        2 => 1 << 7,
        _ => 1 << 5,
    }
}

/// `t^e` with `e = 1/inv_e`, using `t^∞ = 0` for `t < 1`.
pub fn pow_inv(t: f64, inv_e: f64) -> f64 {
    if inv_e <= 0.0 {
        if t < 1.0 {
            0.0
        } else {
            1.0
        }
    } else {
        t.powf(1.0 / inv_e)
    }
}

/// `1/q(x,y) = max(1/p(x) - 1/p(y), 0)`.
pub fn inverse_q(px: f64, py: f64) -> f64 {
    (1.0 / px - 1.0 / py).max(0.0)
}

/// `(q(x,y), s(x))`, either of which may be `∞`.
pub fn exponents_q_s(spec: &ExponentSpec, p_inf: f64, x: &[f64], y: &[f64]) -> (f64, f64) {
    let (px, py) = (spec.eval(x), spec.eval(y));
    let inv = |v: f64| if v == 0.0 { f64::INFINITY } else { 1.0 / v };
    (inv(inverse_q(px, py)), inv(inverse_s(px, p_inf)))
}

/// Multiscale family on the `n^d` midpoint grid of `domain`.
///
/// Level 0 puts a ball of radius `h/2` on every grid node, so each node is a
/// singleton of the family. Level `k` has radius `2^{k-1} h` with centers on
/// a lattice of spacing `r/2`, up to the first radius exceeding the diameter.
pub fn multiscale_family(domain: &BoxDomain, n_per_axis: usize) -> Result<BallFamily> {
    let dim = domain.dim();
    if n_per_axis == 0 || dim == 0 {
        return Err(Error::InvalidArgument("need a nonempty grid".into()));
    }
    let h = (0..dim)
        .map(|k| (domain.hi[k] - domain.lo[k]) / n_per_axis as f64)
        .fold(0.0, f64::max);
    let diam = crate::gauss::dist(&domain.lo, &domain.hi);
    let mut balls = Vec::new();
    let mid = lattice(domain, n_per_axis, true);
    balls.extend(mid.into_iter().map(|c| Ball {
        center: c,
        radius: 0.5 * h,
    }));
    let mut r = h;
    loop {
        let spacing = 0.5 * r;
        let per_axis = (0..dim)
            .map(|k| ((domain.hi[k] - domain.lo[k]) / spacing).ceil() as usize)
            .max()
            .unwrap_or(1);
        let centers = lattice(domain, per_axis, false);
        balls.extend(centers.into_iter().map(|c| Ball { center: c, radius: r }));
        if r > diam {
            break;
        }
        r *= 2.0;
    }
    Ok(BallFamily::from_balls(dim, balls))
}

/// Cell midpoints (`mid`) or the `n + 1` cell corners per axis, row-major.
fn lattice(domain: &BoxDomain, n: usize, mid: bool) -> Vec<Vec<f64>> {
    let dim = domain.dim();
    let m = if mid { n } else { n + 1 };
    let axis = |k: usize, i: usize| {
        let h = (domain.hi[k] - domain.lo[k]) / n as f64;
        let off = if mid { 0.5 } else { 0.0 };
        domain.lo[k] + (i as f64 + off) * h
    };
    let total = m.pow(dim as u32);
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        out.push((0..dim).map(|k| axis(k, idx[k])).collect());
        for k in (0..dim).rev() {
            idx[k] += 1;
            if idx[k] < m {
                break;
            }
            idx[k] = 0;
        }
    }
    out
}

/// A measure, a ball family, an exponent and the constants of the chain.
#[derive(Debug, Clone)]
pub struct MaximalInstance {
    pub measure: MeasureHandle,
    pub domain: BoxDomain,
    pub n_per_axis: usize,
    pub family: BallFamily,
    pub spec: ExponentSpec,
    /// The exponent in use is `p(x)/divisor` (1 for `p`, `p⁻` for `p/p⁻`).
    pub divisor: f64,
    pub gamma: f64,
    /// `min(c_μ, γ)/6`.
    pub delta: f64,
    /// Given for the exponent in use.
    pub p_inf: f64,
    /// `P_μ` constant for the exponent in use.
    pub c_mu: f64,
    /// `inf μ_h(B)^{p⁺_B - p⁻_B}` over the family, with node exponents.
    pub c_family: f64,
    grid: GridFunction,
    exps: Vec<f64>,
    members: Vec<Vec<u32>>,
    mass: Vec<f64>,
}

impl MaximalInstance {
    /// `c_certified` is the `P_μ` constant from a ball sample; the instance uses
    /// its minimum with the family's own constant. `p_inf` defaults to the
    /// exponent's limit at infinity, else `p⁻`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        measure: MeasureHandle,
        spec: ExponentSpec,
        domain: BoxDomain,
        n_per_axis: usize,
        family: BallFamily,
        gamma: f64,
        c_certified: f64,
        p_inf: Option<f64>,
    ) -> Result<Self> {
        let dim = spec.dim();
        if domain.dim() != dim || family.dim != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: if domain.dim() != dim { domain.dim() } else { family.dim },
            });
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidArgument(format!("gamma = {gamma} must lie in (0, 1)")));
        }
        if !(c_certified > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "P_mu constant {c_certified} must be positive"
            )));
        }
        let p_inf = p_inf.or(spec.p_inf()).unwrap_or(spec.p_minus());
        if !(p_inf >= 1.0 && p_inf.is_finite()) {
            return Err(Error::InvalidArgument(format!("p_inf = {p_inf} must lie in [1, ∞)")));
        }
        let grid = GridFunction::on_box(&measure, &domain, n_per_axis, |_| 0.0)?;
        let exps: Vec<f64> = grid.points().iter().map(|x| spec.eval(x)).collect();
        let members: Vec<Vec<u32>> = family
            .balls
            .par_iter()
            .map(|fb| ball_members(&domain, n_per_axis, grid.points(), &fb.ball))
            .collect();
        let w = grid.weights();
        let mass: Vec<f64> = members.iter().map(|m| m.iter().map(|&i| w[i as usize]).sum()).collect();
        let mut inst = MaximalInstance {
            measure,
            domain,
            n_per_axis,
            family,
            spec,
            divisor: 1.0,
            gamma,
            delta: 0.0,
            p_inf,
            c_mu: c_certified,
            c_family: 1.0,
            grid,
            exps,
            members,
            mass,
        };
        inst.c_family = inst.family_constant();
        inst.c_mu = c_certified.min(inst.c_family);
        inst.delta = inst.c_mu.min(gamma) / 6.0;
        let mut covered = vec![false; inst.grid.len()];
        for (m, mass) in inst.members.iter().zip(&inst.mass) {
            if *mass > 0.0 {
                m.iter().for_each(|&i| covered[i as usize] = true);
            }
        }
        if let Some(i) = covered.iter().position(|c| !c) {
            return Err(Error::Uncovered(inst.grid.points()[i].clone()));
        }
        Ok(inst)
    }

    /// Working box `[-half, half]^d`, the multiscale family and a `P_μ`
    /// constant certified by `check_p_mu`.
    pub fn standard(spec: ExponentSpec, cfg: &MaximalConfig) -> Result<Self> {
        let dim = spec.dim();
        let measure = MeasureHandle::gaussian(dim);
        let report = check_p_mu(&spec, &measure, &cfg.sampler, cfg.p_mu_balls)?;
        if !report.passed() && !cfg.force {
            return Err(Error::Config(format!(
                "exponent fails P_mu (fitted {}), rerun with force",
                fmt_f64(report.fitted_constant)
            )));
        }
        let c = if report.fitted_constant > 0.0 {
            report.fitted_constant
        } else {
            f64::MIN_POSITIVE
        };
        let n = if cfg.n_per_axis == 0 {
            default_points_per_axis(dim)
        } else {
            cfg.n_per_axis
        };
        let domain = BoxDomain::cube(dim, cfg.box_half);
        let family = multiscale_family(&domain, n)?;
        Self::new(measure, spec, domain, n, family, cfg.gamma, c, cfg.p_inf)
    }

    /// Instance for `p/p⁻`, with constant `c_μ^{1/p⁻}` and limit `p_∞/p⁻`.
    pub fn quotient(&self) -> Self {
        let pm = self.spec.p_minus();
        let mut q = self.clone();
        q.divisor = self.divisor * pm;
        q.p_inf = self.p_inf / pm;
        q.c_mu = self.c_mu.powf(1.0 / pm);
        q.c_family = self.c_family.powf(1.0 / pm);
        q.delta = q.c_mu.min(q.gamma) / 6.0;
        q
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn grid(&self) -> &GridFunction {
        &self.grid
    }

    /// Exponent in use at a grid node.
    pub fn exponent(&self, i: usize) -> f64 {
        self.exps[i] / self.divisor
    }

    pub fn exponent_at(&self, x: &[f64]) -> f64 {
        self.spec.eval(x) / self.divisor
    }

    fn exponents(&self) -> Vec<f64> {
        self.exps.iter().map(|p| p / self.divisor).collect()
    }

    /// Grid nodes of family ball `b`.
    pub fn members(&self, b: usize) -> &[u32] {
        &self.members[b]
    }

    /// `μ_h(B)` of family ball `b`.
    pub fn ball_mass(&self, b: usize) -> f64 {
        self.mass[b]
    }

    fn family_constant(&self) -> f64 {
        (0..self.members.len())
            .filter(|&b| self.mass[b] > 0.0)
            .map(|b| {
                let (lo, hi) = self.ball_range(b);
                self.mass[b].powf(hi - lo)
            })
            .fold(1.0, f64::min)
    }

    /// `(p⁻_B, p⁺_B)` over the grid nodes of ball `b`.
    pub fn ball_range(&self, b: usize) -> (f64, f64) {
        self.members[b]
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let p = self.exponent(i as usize);
                (lo.min(p), hi.max(p))
            })
    }

    /// Grid function with values `f` at the instance nodes.
    pub fn function<F: Fn(&[f64]) -> f64>(&self, f: F) -> GridFunction {
        self.grid.map(|x, _| f(x))
    }

    fn check_grid(&self, f: &GridFunction) -> Result<()> {
        if f.len() != self.grid.len() || f.dim() != self.grid.dim() || f.weights() != self.grid.weights() {
            return Err(Error::InvalidArgument(
                "function is not sampled on the instance grid".into(),
            ));
        }
        Ok(())
    }

    fn average(&self, b: usize, values: &[f64]) -> f64 {
        let w = self.grid.weights();
        let s: f64 = self.members[b]
            .iter()
            .map(|&i| w[i as usize] * values[i as usize].abs())
            .sum();
        s / self.mass[b]
    }

    /// `ln((1/μ(B))∫_B e^{g}dμ)` for node values `g = logv`, shifted by the
    /// ball maximum so that values far below the float range still count.
    fn log_average(&self, b: usize, logv: &[f64]) -> f64 {
        let w = self.grid.weights();
        let m = &self.members[b];
        let top = m.iter().map(|&i| logv[i as usize]).fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return top;
        }
        let s: f64 = m.iter().map(|&i| w[i as usize] * (logv[i as usize] - top).exp()).sum();
        top + s.ln() - self.mass[b].ln()
    }

    /// `ln M_μ(e^{g})` at every grid node.
    pub fn log_maximal_values(&self, logv: &[f64]) -> Vec<f64> {
        let avg: Vec<f64> = (0..self.members.len())
            .into_par_iter()
            .map(|b| {
                if self.mass[b] > 0.0 {
                    self.log_average(b, logv)
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let mut out = vec![f64::NEG_INFINITY; self.grid.len()];
        for (b, m) in self.members.iter().enumerate() {
            for &i in m {
                let o = &mut out[i as usize];
                *o = o.max(avg[b]);
            }
        }
        out
    }

    /// `(1/μ(B))∫_B|f|dμ` for every family ball (0 for empty balls).
    pub fn ball_averages(&self, values: &[f64]) -> Vec<f64> {
        (0..self.members.len())
            .into_par_iter()
            .map(|b| {
                if self.mass[b] > 0.0 {
                    self.average(b, values)
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// `M_μ f` at every grid node.
    pub fn maximal_values(&self, values: &[f64]) -> Vec<f64> {
        let avg = self.ball_averages(values);
        let mut out = vec![0.0f64; self.grid.len()];
        for (b, m) in self.members.iter().enumerate() {
            for &i in m {
                let o = &mut out[i as usize];
                *o = o.max(avg[b]);
            }
        }
        out
    }

    /// `M_μ f` as a grid function.
    pub fn maximal_grid(&self, f: &GridFunction) -> Result<GridFunction> {
        self.check_grid(f)?;
        f.with_values(self.maximal_values(f.values()))
    }

    /// Luxemburg norm for the exponent in use.
    pub fn norm(&self, f: &GridFunction) -> Result<f64> {
        self.check_grid(f)?;
        luxemburg_norm_with(f, &self.exponents(), DEFAULT_TOL)
    }

    /// `f/(2‖f‖ + ε)`, whose norm is below 1/2.
    pub fn normalize_half(&self, f: &GridFunction) -> Result<GridFunction> {
        let n = self.norm(f)?;
        Ok(f.scaled(1.0 / (2.0 * n + 1e-12)))
    }

    fn require_half(&self, f: &GridFunction) -> Result<()> {
        let n = self.norm(f)?;
        if n > 0.5 * (1.0 + 1e-9) {
            return Err(Error::NotNormalized(n));
        }
        Ok(())
    }
}

/// Grid nodes inside `ball`, by scanning the index box around it.
fn ball_members(domain: &BoxDomain, n: usize, points: &[Vec<f64>], ball: &Ball) -> Vec<u32> {
    let dim = domain.dim();
    let mut ranges = Vec::with_capacity(dim);
    for k in 0..dim {
        let h = (domain.hi[k] - domain.lo[k]) / n as f64;
        let a = ((ball.center[k] - ball.radius - domain.lo[k]) / h - 0.5)
            .ceil()
            .max(0.0);
        let b = ((ball.center[k] + ball.radius - domain.lo[k]) / h - 0.5).floor();
        if b < 0.0 || a > (n - 1) as f64 {
            return Vec::new();
        }
        // One extra index on each side absorbs rounding in the division.
        let a = (a as usize).saturating_sub(1);
        let b = ((b as usize) + 1).min(n - 1);
        ranges.push((a, b));
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    'outer: loop {
        let flat = idx.iter().fold(0usize, |acc, &i| acc * n + i);
        if ball.contains(&points[flat]) {
            out.push(flat as u32);
        }
        for k in (0..dim).rev() {
            idx[k] += 1;
            if idx[k] <= ranges[k].1 {
                continue 'outer;
            }
            idx[k] = ranges[k].0;
        }
        break;
    }
    out
}

/// `ln(e^a + e^b)`.
fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

/// `M_μ f(x)`: the largest family-ball average over balls containing `x`.
pub fn maximal_apply(inst: &MaximalInstance, f: &GridFunction, x: &[f64]) -> Result<f64> {
    inst.check_grid(f)?;
    if x.len() != inst.dim() {
        return Err(Error::DimensionMismatch {
            expected: inst.dim(),
            got: x.len(),
        });
    }
    let mut best: Option<f64> = None;
    for (b, fb) in inst.family.balls.iter().enumerate() {
        if inst.mass[b] > 0.0 && fb.ball.contains(x) {
            let a = inst.average(b, f.values());
            best = Some(best.map_or(a, |v| v.max(a)));
        }
    }
    best.ok_or_else(|| Error::Uncovered(x.to_vec()))
}

/// Settings for [`MaximalInstance::standard`] and the experiments.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MaximalConfig {
    pub box_half: f64,
    /// 0 selects [`default_points_per_axis`].
    pub n_per_axis: usize,
    pub gamma: f64,
    pub p_inf: Option<f64>,
    pub p_mu_balls: usize,
    pub sampler: BallSampler,
    /// Build the instance even when the exponent fails `P_μ`.
    pub force: bool,
    pub seed: u64,
}

impl Default for MaximalConfig {
    fn default() -> Self {
        MaximalConfig {
            box_half: 10.0,
            n_per_axis: 0,
            gamma: 0.5,
            p_inf: None,
            p_mu_balls: 1000,
            sampler: BallSampler::default(),
            force: false,
            seed: 17,
        }
    }
}

fn sample_ball_node<R: Rng>(inst: &MaximalInstance, live: &[usize], rng: &mut R) -> (usize, usize) {
    let b = live[rng.random_range(0..live.len())];
    let m = &inst.members[b];
    (b, m[rng.random_range(0..m.len())] as usize)
}

fn live_balls(inst: &MaximalInstance) -> Vec<usize> {
    (0..inst.members.len()).filter(|&b| inst.mass[b] > 0.0).collect()
}

/// Largest `lhs/rhs` on the full sample and on its first half, with the
/// violation count.
struct Tally {
    ratios: Vec<f64>,
    violations: usize,
}

impl Tally {
    fn new() -> Self {
        Tally {
            ratios: Vec::new(),
            violations: 0,
        }
    }

    /// `lhs <= rhs` up to the relative slack `EPS_NUM`.
    fn push(&mut self, lhs: f64, rhs: f64) {
        if !(lhs <= rhs * (1.0 + EPS_NUM) + f64::MIN_POSITIVE) {
            self.violations += 1;
        }
        self.ratios.push(if lhs == 0.0 { 0.0 } else { lhs / rhs });
    }

    fn push_log(&mut self, log_lhs: f64, log_rhs: f64) {
        if !(log_lhs <= log_rhs + EPS_NUM.ln_1p()) {
            self.violations += 1;
        }
        self.ratios.push(if log_lhs == f64::NEG_INFINITY {
            0.0
        } else {
            (log_lhs - log_rhs).exp()
        });
    }

    fn report(self, name: &str, sample: String, notes: Vec<String>) -> CheckReport {
        let max = |r: &[f64]| r.iter().cloned().fold(0.0, f64::max);
        let full = max(&self.ratios);
        let half = max(&self.ratios[..self.ratios.len() / 2]);
        CheckReport {
            name: name.into(),
            sample,
            fitted_constant: full,
            stability_delta: relative_change(full, half),
            samples: self.ratios.len(),
            violations: self.violations,
            pass: self.violations == 0,
            notes,
        }
    }
}

/// `(c_μ(λ/μ(B))^{1/p⁻_B})^{p(x)} <= λ/μ(B)` at `n` random (ball, node)
/// pairs of the family and every `λ` in `lambdas`.
pub fn lemma_a1_check(inst: &MaximalInstance, lambdas: &[f64], n: usize, seed: u64) -> Result<CheckReport> {
    if lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) {
        return Err(Error::InvalidArgument("lambda must lie in [0, 1]".into()));
    }
    let live = live_balls(inst);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::new();
    for _ in 0..n {
        let (b, i) = sample_ball_node(inst, &live, &mut rng);
        let (lo, _) = inst.ball_range(b);
        let (px, mu) = (inst.exponent(i), inst.mass[b]);
        for &l in lambdas {
            if l == 0.0 {
                t.push(0.0, 0.0);
                continue;
            }
            // Compared in logs: λ/μ(B) reaches 1e90 on far balls.
            let log_rhs = l.ln() - mu.ln();
            let log_lhs = px * (inst.c_mu.ln() + log_rhs / lo);
            t.push_log(log_lhs, log_rhs);
        }
    }
    Ok(t.report(
        "lemma_A1",
        format!("{n} (B,x) x {} lambda", lambdas.len()),
        vec![format!("c_mu = {}", fmt_f64(inst.c_mu))],
    ))
}

/// `(δ⨍_B|f|)^{p(x)} <= ⨍_B|f|^{p(y)} + ⨍_B γ^{q(x,y)}` with `δ = min(c_μ, γ)/6`,
/// at `n` random (ball, node) pairs. `f` must have norm at most 1/2.
pub fn jensen_variable_check(inst: &MaximalInstance, f: &GridFunction, n: usize, seed: u64) -> Result<CheckReport> {
    inst.require_half(f)?;
    let live = live_balls(inst);
    let logf: Vec<f64> = f.values().iter().map(|v| v.abs().ln()).collect();
    let logfp: Vec<f64> = logf.iter().enumerate().map(|(i, l)| inst.exponent(i) * l).collect();
    let log_gamma = inst.gamma.ln();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<(usize, usize)> = (0..n).map(|_| sample_ball_node(inst, &live, &mut rng)).collect();
    let terms: Vec<(f64, f64)> = picks
        .par_iter()
        .map(|&(b, i)| {
            let px = inst.exponent(i);
            let lhs = px * (inst.delta.ln() + inst.log_average(b, &logf));
            // γ^{q(x,y)} as e^{ln γ / (1/q)}, with γ^∞ = 0.
            let logq: Vec<f64> = (0..logf.len())
                .map(|j| {
                    let iq = inverse_q(px, inst.exponent(j));
                    if iq > 0.0 {
                        log_gamma / iq
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect();
            (lhs, log_add(inst.log_average(b, &logfp), inst.log_average(b, &logq)))
        })
        .collect();
    let mut t = Tally::new();
    for (l, r) in terms {
        t.push_log(l, r);
    }
    Ok(t.report(
        "variable_jensen",
        format!("{n} (B,x)"),
        vec![format!("delta = {}", fmt_f64(inst.delta))],
    ))
}

/// `t^{q(x,y)} <= t^{s(x)/2} + t^{s(y)/2}` on `t_points` equispaced `t ∈ [0,1]`
/// and `n` random pairs in the working box.
pub fn lemma_a4_check(inst: &MaximalInstance, t_points: usize, n: usize, seed: u64) -> Result<CheckReport> {
    if t_points < 2 {
        return Err(Error::InvalidArgument("need at least two t values".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = &inst.domain;
    let mut draw = || -> Vec<f64> { (0..d.dim()).map(|k| rng.random_range(d.lo[k]..=d.hi[k])).collect() };
    let mut t = Tally::new();
    for _ in 0..n {
        let (x, y) = (draw(), draw());
        let (px, py) = (inst.exponent_at(&x), inst.exponent_at(&y));
        let iq = inverse_q(px, py);
        let (sx, sy) = (inverse_s(px, inst.p_inf), inverse_s(py, inst.p_inf));
        for k in 0..t_points {
            let tv = k as f64 / (t_points - 1) as f64;
            t.push(pow_inv(tv, iq), pow_inv(tv, 2.0 * sx) + pow_inv(tv, 2.0 * sy));
        }
    }
    Ok(t.report(
        "lemma_A4",
        format!("{n} (x,y) x {t_points} t"),
        vec![format!("p_inf = {}", fmt_f64(inst.p_inf))],
    ))
}

/// `(δM f(x))^{p(x)} <= M(|f|^{p(·)})(x) + 2M(γ^{s(·)/2})(x)` at `n` random
/// grid nodes (every node when `n` exceeds the grid). `f` must have norm at
/// most 1/2.
pub fn pointwise_maximal_check(inst: &MaximalInstance, f: &GridFunction, n: usize, seed: u64) -> Result<CheckReport> {
    inst.require_half(f)?;
    let logf: Vec<f64> = f.values().iter().map(|v| v.abs().ln()).collect();
    let len = logf.len();
    let logfp: Vec<f64> = logf.iter().enumerate().map(|(i, l)| inst.exponent(i) * l).collect();
    let loggs: Vec<f64> = (0..len)
        .map(|i| {
            let is = inverse_s(inst.exponent(i), inst.p_inf);
            if is > 0.0 {
                inst.gamma.ln() / (2.0 * is)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let (mf, mfp, mgs) = (
        inst.log_maximal_values(&logf),
        inst.log_maximal_values(&logfp),
        inst.log_maximal_values(&loggs),
    );
    let nodes: Vec<usize> = if n >= len {
        (0..len).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(0..len)).collect()
    };
    let mut t = Tally::new();
    for &i in &nodes {
        let lhs = inst.exponent(i) * (inst.delta.ln() + mf[i]);
        t.push_log(lhs, log_add(mfp[i], std::f64::consts::LN_2 + mgs[i]));
    }
    Ok(t.report(
        "pointwise_maximal",
        format!("{} x", nodes.len()),
        vec![
            format!("delta = {}", fmt_f64(inst.delta)),
            format!("divisor = {}", fmt_f64(inst.divisor)),
        ],
    ))
}

/// One named test function for the boundedness experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    One,
    Bump(Bump),
    Indicator(Ball),
}

impl TestFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::One => 1.0,
            TestFunction::Bump(b) => b.eval(x),
            TestFunction::Indicator(b) => f64::from(u8::from(b.contains(x))),
        }
    }

    pub fn label(&self) -> String {
        let c = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        match self {
            TestFunction::One => "one".into(),
            TestFunction::Bump(b) => format!("bump(c={};w={})", c(&b.center), b.width),
            TestFunction::Indicator(b) => format!("ind(c={};r={})", c(&b.center), b.radius),
        }
    }
}

/// `f ≡ 1`, bumps of widths 0.25 and 1 and unit-radius indicators centred at
/// `c·e₁` for `c ∈ {0, 2, 5, 8}`.
pub fn bump_suite(dim: usize) -> Vec<TestFunction> {
    let mut out = vec![TestFunction::One];
    for c in [0.0, 2.0, 5.0, 8.0] {
        let mut center = vec![0.0; dim];
        center[0] = c;
        for width in [0.25, 1.0] {
            out.push(TestFunction::Bump(Bump {
                center: center.clone(),
                width,
                amplitude: 1.0,
            }));
        }
        out.push(TestFunction::Indicator(Ball {
            center: center.clone(),
            radius: 1.0,
        }));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub label: String,
    pub norm_f: f64,
    pub norm_mf: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioTable {
    pub dim: usize,
    pub n_per_axis: usize,
    pub rows: Vec<RatioRow>,
    /// Largest ratio: the empirical `K`.
    pub k: f64,
}

impl RatioTable {
    pub const HEADER: &'static str = "function\tnorm_f\tnorm_Mf\tratio";

    pub fn to_tsv(&self) -> String {
        let mut s = format!("# d={} n={}\n{}\n", self.dim, self.n_per_axis, Self::HEADER);
        for r in &self.rows {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                r.label,
                fmt_f64(r.norm_f),
                fmt_f64(r.norm_mf),
                fmt_f64(r.ratio)
            ));
        }
        s.push_str(&format!("empirical K = {}\n", fmt_f64(self.k)));
        s
    }
}

/// `‖M f‖_{p(·)}/‖f‖_{p(·)}` for each test function, and their maximum.
pub fn boundedness_experiment(inst: &MaximalInstance, suite: &[TestFunction]) -> Result<RatioTable> {
    let mut rows = Vec::with_capacity(suite.len());
    for tf in suite {
        let f = inst.function(|x| tf.eval(x));
        let mf = inst.maximal_grid(&f)?;
        let (nf, nmf) = (inst.norm(&f)?, inst.norm(&mf)?);
        rows.push(RatioRow {
            label: tf.label(),
            norm_f: nf,
            norm_mf: nmf,
            ratio: if nf > 0.0 { nmf / nf } else { f64::NAN },
        });
    }
    let k = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(RatioTable {
        dim: inst.dim(),
        n_per_axis: inst.n_per_axis,
        rows,
        k,
    })
}

/// The experiment on the configured grid and on twice as many points per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementStudy {
    pub coarse: RatioTable,
    pub fine: RatioTable,
    pub delta: f64,
    pub pass: bool,
}

impl RefinementStudy {
    /// Relative change of `K` allowed under one doubling.
    pub const TOLERANCE: f64 = 0.05;

    pub fn to_tsv(&self) -> String {
        format!(
            "{}{}refinement delta = {}\npass = {}\n",
            self.coarse.to_tsv(),
            self.fine.to_tsv(),
            fmt_f64(self.delta),
            self.pass
        )
    }
}

pub fn refinement_study(spec: &ExponentSpec, cfg: &MaximalConfig, suite: &[TestFunction]) -> Result<RefinementStudy> {
    let coarse_inst = MaximalInstance::standard(spec.clone(), cfg)?;
    let n = coarse_inst.n_per_axis;
    let coarse = boundedness_experiment(&coarse_inst, suite)?;
    drop(coarse_inst);
    let fine_cfg = MaximalConfig {
        n_per_axis: 2 * n,
        ..cfg.clone()
    };
    let fine = boundedness_experiment(&MaximalInstance::standard(spec.clone(), &fine_cfg)?, suite)?;
    let delta = relative_change(fine.k, coarse.k);
    Ok(RefinementStudy {
        pass: fine.k.is_finite() && delta < RefinementStudy::TOLERANCE,
        coarse,
        fine,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::registry_spec;
    use crate::norms::random_bump_sum;
    use proptest::prelude::*;

    fn small(spec: &str, dim: usize, n: usize) -> MaximalInstance {
        let cfg = MaximalConfig {
            n_per_axis: n,
            p_mu_balls: 200,
            ..MaximalConfig::default()
        };
        MaximalInstance::standard(registry_spec(spec, dim).unwrap(), &cfg).unwrap()
    }

    #[test]
    fn q_s_examples() {
        let s = ExponentSpec::constant(2.0, 1).unwrap();
        assert_eq!(exponents_q_s(&s, 3.0, &[0.0], &[1.0]).0, f64::INFINITY);
        assert_eq!(exponents_q_s(&s, 2.0, &[0.0], &[1.0]).1, f64::INFINITY);
        assert!((1.0 / inverse_q(2.0, 3.0) - 6.0).abs() < 1e-12);
        assert_eq!(inverse_q(3.0, 2.0), 0.0);
        assert_eq!(pow_inv(0.5, 0.0), 0.0);
        assert_eq!(pow_inv(1.0, 0.0), 1.0);
    }

    #[test]
    fn constant_function_is_fixed() {
        let inst = small("inv_square", 1, 128);
        let one = inst.function(|_| 1.0);
        let m = inst.maximal_grid(&one).unwrap();
        assert!(m.values().iter().all(|v| (v - 1.0).abs() < 1e-15));
        assert!((maximal_apply(&inst, &one, &[0.37]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grid_maximal_matches_scan() {
        let inst = small("inv_square", 1, 128);
        let f = inst.function(|x| (3.0 * x[0]).sin() * (-x[0] * x[0] / 8.0).exp());
        let m = inst.maximal_grid(&f).unwrap();
        for i in (0..128).step_by(7) {
            let x = &inst.grid().points()[i];
            let scan = maximal_apply(&inst, &f, x).unwrap();
            assert_eq!(scan, m.values()[i]);
        }
    }

    #[test]
    fn dominates_function_on_nodes() {
        let inst = small("inv_square", 2, 16);
        let f = inst.function(|x| x[0] - 0.5 * x[1]);
        let m = inst.maximal_grid(&f).unwrap();
        for (mv, v) in m.values().iter().zip(f.values()) {
            assert!(*mv >= v.abs());
        }
    }

    #[test]
    fn single_ball_family() {
        let measure = MeasureHandle::gaussian(1);
        let domain = BoxDomain::cube(1, 3.0);
        let ball = Ball::new(vec![0.5], 1.0).unwrap();
        let family = BallFamily::from_balls(1, vec![Ball::new(vec![0.0], 10.0).unwrap(), ball.clone()]);
        let spec = ExponentSpec::constant(2.0, 1).unwrap();
        let inst = MaximalInstance::new(measure, spec, domain, 64, family, 0.5, 0.5, None).unwrap();
        let f = inst.function(|x| if ball.contains(x) { 1.0 } else { 0.0 });
        // Outside the small ball only the big one is available.
        let big = maximal_apply(&inst, &f, &[-2.0]).unwrap();
        let w = inst.grid().weights();
        let total: f64 = w.iter().sum();
        let inside: f64 = inst.members(1).iter().map(|&i| w[i as usize]).sum();
        assert!((big - inside / total).abs() < 1e-14);
        assert_eq!(maximal_apply(&inst, &f, &[0.5]).unwrap(), 1.0);
        assert!(matches!(maximal_apply(&inst, &f, &[20.0]), Err(Error::Uncovered(_))));
    }

    #[test]
    fn family_covers_box() {
        let d = BoxDomain::cube(2, 1.0);
        let fam = multiscale_family(&d, 8).unwrap();
        for x in [[-1.0, -1.0], [1.0, 1.0], [0.3, -0.77]] {
            assert!(fam.covers(&x));
        }
    }

    #[test]
    fn chain_passes_on_certified_spec() {
        let inst = small("inv_square", 1, 256);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bumps = random_bump_sum(&mut rng, 1, 3, 3.0);
        let f = inst
            .normalize_half(&inst.function(|x| crate::norms::eval_bumps(&bumps, x)))
            .unwrap();
        let lambdas = [0.0, 1e-6, 1e-3, 0.1, 0.5, 1.0];
        for r in [
            lemma_a1_check(&inst, &lambdas, 300, 1).unwrap(),
            jensen_variable_check(&inst, &f, 300, 2).unwrap(),
            lemma_a4_check(&inst, 64, 300, 3).unwrap(),
            pointwise_maximal_check(&inst, &f, 1000, 4).unwrap(),
            pointwise_maximal_check(&inst.quotient(), &inst.quotient().normalize_half(&f).unwrap(), 1000, 4).unwrap(),
        ] {
            assert!(r.pass, "{}", r.table_row());
        }
    }

    #[test]
    fn unnormalized_function_rejected() {
        let inst = small("inv_square", 1, 64);
        let f = inst.function(|_| 10.0);
        assert!(jensen_variable_check(&inst, &f, 10, 0).is_err());
        assert!(pointwise_maximal_check(&inst, &f, 10, 0).is_err());
    }

    #[test]
    fn zero_function_trivial() {
        let inst = small("inv_square", 1, 64);
        let f = inst.function(|_| 0.0);
        let r = pointwise_maximal_check(&inst, &f, 100, 0).unwrap();
        assert!(r.pass && r.fitted_constant == 0.0);
    }

    #[test]
    fn constant_function_ratio_one() {
        let inst = small("inv_square", 1, 128);
        let t = boundedness_experiment(&inst, &[TestFunction::One]).unwrap();
        assert!((t.rows[0].ratio - 1.0).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn sublinear_and_monotone(a in prop::collection::vec(-3.0f64..3.0, 64),
                                  b in prop::collection::vec(-3.0f64..3.0, 64),
                                  c in -4.0f64..4.0) {
            let measure = MeasureHandle::gaussian(1);
            let domain = BoxDomain::cube(1, 4.0);
            let family = multiscale_family(&domain, 64).unwrap();
            let spec = ExponentSpec::constant(2.0, 1).unwrap();
            let inst = MaximalInstance::new(measure, spec, domain, 64, family, 0.5, 0.5, None).unwrap();
            let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let (ma, mb, ms) = (inst.maximal_values(&a), inst.maximal_values(&b), inst.maximal_values(&sum));
            for i in 0..64 {
                prop_assert!(ms[i] <= (ma[i] + mb[i]) * (1.0 + 1e-14));
            }
            let scaled: Vec<f64> = a.iter().map(|x| c * x).collect();
            let mc = inst.maximal_values(&scaled);
            for i in 0..64 {
                prop_assert!((mc[i] - c.abs() * ma[i]).abs() <= 1e-13 * (1.0 + ma[i]));
            }
            let bigger: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.abs() + y.abs()).collect();
            let mbig = inst.maximal_values(&bigger);
            for i in 0..64 {
                prop_assert!(mbig[i] >= ma[i]);
            }
        }
    }
}
