//! The Gaussian measure `dγ_d = π^{-d/2} e^{-|x|²} dx` and its ball geometry.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{gauss_kronrod_breaks, gauss_legendre, pairwise_sum, unit_ball_volume, GkOptions};

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Closed Euclidean ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!("ball radius {radius} must be positive")));
        }
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("ball center must be a finite point".into()));
        }
        Ok(Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        dist(&self.center, x) <= self.radius
    }

    /// Lebesgue volume `|B|`.
    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.dim()) * self.radius.powi(self.dim() as i32)
    }
}

/// `π^{-d/2} e^{-|x|²}`.
pub fn gaussian_density(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    (-x.iter().map(|v| v * v).sum::<f64>()).exp() / PI.powf(d / 2.0)
}

/// `γ_1([a, b])`, accurate in both tails.
pub fn gaussian_interval_mass(a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if b - a < 0.05 {
        // Thin slices: direct Gauss-Legendre avoids erfc cancellation.
        let (x, w) = gl8();
        let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
        return h * x
            .iter()
            .zip(w)
            .map(|(t, w)| w * (-(m + h * t).powi(2)).exp())
            .sum::<f64>()
            / PI.sqrt();
    }
    if a >= 0.0 {
        0.5 * (libm::erfc(a) - libm::erfc(b))
    } else if b <= 0.0 {
        0.5 * (libm::erfc(-b) - libm::erfc(-a))
    } else {
        1.0 - 0.5 * libm::erfc(b) - 0.5 * libm::erfc(-a)
    }
}

fn gl8() -> &'static (Vec<f64>, Vec<f64>) {
    use std::sync::OnceLock;
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(8))
}

/// A measure on `R^d` that can evaluate balls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureHandle {
    Gaussian {
        dim: usize,
    },
    Lebesgue {
        dim: usize,
    },
    GridWeighted {
        dim: usize,
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
}

/// Monte-Carlo estimate of a ball measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

const MC_STRATA: usize = 16;
const MC_MAX_SAMPLES: usize = 1 << 22;

impl MeasureHandle {
    pub fn gaussian(dim: usize) -> Self {
        MeasureHandle::Gaussian { dim }
    }

    pub fn lebesgue(dim: usize) -> Self {
        MeasureHandle::Lebesgue { dim }
    }

    pub fn grid_weighted(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidArgument("grid weights must be nonnegative".into()));
        }
        let dim = points.first().map_or(0, |p| p.len());
        Ok(MeasureHandle::GridWeighted { dim, points, weights })
    }

    pub fn dim(&self) -> usize {
        match self {
            MeasureHandle::Gaussian { dim }
            | MeasureHandle::Lebesgue { dim }
            | MeasureHandle::GridWeighted { dim, .. } => *dim,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MeasureHandle::Gaussian { .. } => "gaussian",
            MeasureHandle::Lebesgue { .. } => "lebesgue",
            MeasureHandle::GridWeighted { .. } => "grid_weighted",
        }
    }

    /// Density with respect to Lebesgue measure (grid measures have none).
    pub fn density(&self, x: &[f64]) -> Option<f64> {
        match self {
            MeasureHandle::Gaussian { .. } => Some(gaussian_density(x)),
            MeasureHandle::Lebesgue { .. } => Some(1.0),
            MeasureHandle::GridWeighted { .. } => None,
        }
    }

    /// `μ(B)`. For the Gaussian measure `tol` is a relative tolerance; the
    /// quadrature paths (d <= 3) are deterministic and d > 3 uses Monte Carlo.
    pub fn measure_ball(&self, ball: &Ball, tol: f64) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
        }
        if ball.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: ball.dim(),
            });
        }
        match self {
            MeasureHandle::Lebesgue { .. } => Ok(ball.volume()),
            MeasureHandle::GridWeighted { points, weights, .. } => {
                let inside: Vec<f64> = points
                    .iter()
                    .zip(weights)
                    .filter(|(p, _)| ball.contains(p))
                    .map(|(_, w)| *w)
                    .collect();
                Ok(pairwise_sum(&inside))
            }
            MeasureHandle::Gaussian { dim } if *dim == 1 => gaussian_ball_1d(ball, tol),
            MeasureHandle::Gaussian { dim } if *dim <= 3 => gaussian_ball_nested(&ball.center, ball.radius, tol),
            MeasureHandle::Gaussian { .. } => {
                let mut n = 1 << 14;
                loop {
                    let est = self.measure_ball_mc(ball, n, 0x5eed)?;
                    if est.std_error <= tol * est.value {
                        return Ok(est.value);
                    }
                    if n >= MC_MAX_SAMPLES {
                        return Err(Error::NonConvergence(format!(
                            "Monte Carlo ball measure: relative error {:e} after {n} samples",
                            est.std_error / est.value
                        )));
                    }
                    n *= 4;
                }
            }
        }
    }

    /// Stratified antithetic Monte-Carlo estimate of `γ_d(B)`.
    ///
    /// Small balls (`r <= 1`) sample uniformly inside `B` and average the
    /// density; large balls sample `γ_d` and count hits.
    pub fn measure_ball_mc(&self, ball: &Ball, samples: usize, seed: u64) -> Result<MonteCarloEstimate> {
        let MeasureHandle::Gaussian { dim } = self else {
            return Err(Error::InvalidArgument(
                "Monte Carlo path is provided for the Gaussian measure".into(),
            ));
        };
        let dim = *dim;
        let per = (samples / (2 * MC_STRATA)).max(1);
        let small = ball.radius <= 1.0;
        let vol = ball.volume();
        let means: Vec<f64> = (0..MC_STRATA)
            .into_par_iter()
            .map(|s| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(s as u64));
                let mut acc = 0.0;
                let mut z = vec![0.0; dim];
                let mut y = vec![0.0; dim];
                for _ in 0..per {
                    if small {
                        uniform_in_unit_ball(&mut rng, &mut z);
                        for sign in [1.0, -1.0] {
                            for k in 0..dim {
                                y[k] = ball.center[k] + sign * ball.radius * z[k];
                            }
                            acc += 0.5 * vol * gaussian_density(&y);
                        }
                    } else {
                        for v in z.iter_mut() {
                            *v = std_normal(&mut rng) * std::f64::consts::FRAC_1_SQRT_2;
                        }
                        for sign in [1.0, -1.0] {
                            for k in 0..dim {
                                y[k] = sign * z[k];
                            }
                            if ball.contains(&y) {
                                acc += 0.5;
                            }
                        }
                    }
                }
                acc / per as f64
            })
            .collect();
        let mean = means.iter().sum::<f64>() / MC_STRATA as f64;
        let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (MC_STRATA - 1) as f64;
        Ok(MonteCarloEstimate {
            value: mean,
            std_error: (var / MC_STRATA as f64).sqrt(),
            samples: per * 2 * MC_STRATA,
            seed,
        })
    }
}

pub(crate) fn std_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; one variate per call keeps the stream layout simple.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

fn uniform_in_unit_ball<R: Rng>(rng: &mut R, out: &mut [f64]) {
    loop {
        for v in out.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        if out.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            return;
        }
    }
}

fn gk_opts(tol: f64) -> GkOptions {
    GkOptions {
        abs_tol: 0.0,
        rel_tol: tol,
        max_intervals: 4000,
    }
}

/// Integration window for a 1-d slice `[a, b]`: mass beyond `|q| + 27` is
/// below `e^{-729}` relative to the slice.
fn window(a: f64, b: f64) -> (f64, f64) {
    let q = if a > 0.0 {
        a
    } else if b < 0.0 {
        -b
    } else {
        0.0
    };
    let l = q + 27.0;
    (a.max(-l), b.min(l))
}

fn slice_breaks(a: f64, b: f64) -> Vec<f64> {
    let mut br = vec![a, b];
    let q = if a > 0.0 {
        a
    } else if b < 0.0 {
        b
    } else {
        0.0
    };
    for off in [-6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0] {
        let t = q + off;
        if t > a && t < b {
            br.push(t);
        }
    }
    br.sort_by(f64::total_cmp);
    br.dedup();
    br
}

fn gaussian_ball_1d(ball: &Ball, tol: f64) -> Result<f64> {
    let (a, b) = window(ball.center[0] - ball.radius, ball.center[0] + ball.radius);
    let r = gauss_kronrod_breaks(|x| (-x * x).exp() / PI.sqrt(), &slice_breaks(a, b), &gk_opts(tol));
    if !r.converged {
        return Err(Error::NonConvergence(format!("1-d ball measure: {r:?}")));
    }
    Ok(r.value)
}

/// Iterated integral over the ball in sine-substituted coordinates with the
/// last coordinate integrated exactly through `erfc`.
fn gaussian_ball_nested(center: &[f64], radius: f64, tol: f64) -> Result<f64> {
    if center.len() == 1 {
        return Ok(gaussian_interval_mass(center[0] - radius, center[0] + radius));
    }
    let c0 = center[0];
    let rest = &center[1..];
    let (a, b) = window(c0 - radius, c0 + radius);
    let theta = |x: f64| ((x - c0) / radius).clamp(-1.0, 1.0).asin();
    let mut breaks: Vec<f64> = slice_breaks(a, b).into_iter().map(theta).collect();
    breaks.dedup();
    let mut failure = None;
    let r = gauss_kronrod_breaks(
        |th| {
            let x = c0 + radius * th.sin();
            let h = radius * th.cos();
            if h <= 0.0 {
                return 0.0;
            }
            match gaussian_ball_nested(rest, h, tol * 0.1) {
                Ok(inner) => (-x * x).exp() / PI.sqrt() * inner * radius * th.cos(),
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            }
        },
        &breaks,
        &gk_opts(tol),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    if !r.converged {
        return Err(Error::NonConvergence(format!("nested ball measure: {r:?}")));
    }
    Ok(r.value)
}

/// `q_B`, the point of `B̄` closest to the origin, and `|q_B|`.
pub fn nearest_point(ball: &Ball) -> (Vec<f64>, f64) {
    let c = norm(&ball.center);
    if c <= ball.radius {
        return (vec![0.0; ball.dim()], 0.0);
    }
    let s = 1.0 - ball.radius / c;
    (ball.center.iter().map(|v| v * s).collect(), c - ball.radius)
}

/// Regimes of the Gaussian ball lower bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerBoundCase {
    /// `r_B <= 1 ∧ 1/|q_B|`: bound `e^{-|q_B|²}|B|`.
    Small,
    /// `|q_B| < 1`, `r_B > 1`: bound `1`.
    Central,
    /// `|q_B| >= 1`, `r_B > 1/|q_B|`: bound `e^{-(d+1)|q_B|²}`.
    Far,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub case: LowerBoundCase,
    pub variable_part: f64,
    /// `(e^{-|q_B|²}/|q_B|)(1 ∧ (r_B/|q_B|)^{(d-1)/2})` when `|q_B| >= 1` and
    /// `r_B >= 1/(4|q_B|)`.
    pub sharp_part: Option<f64>,
}

/// Case and variable part of the lower bound for `γ_d(B)`.
pub fn lower_bound_gamma(ball: &Ball) -> LowerBound {
    let d = ball.dim() as f64;
    let (_, q) = nearest_point(ball);
    let r = ball.radius;
    let small_limit = if q > 0.0 { (1.0f64).min(1.0 / q) } else { 1.0 };
    let (case, variable_part) = if r <= small_limit {
        (LowerBoundCase::Small, (-q * q).exp() * ball.volume())
    } else if q < 1.0 {
        (LowerBoundCase::Central, 1.0)
    } else {
        (LowerBoundCase::Far, (-(d + 1.0) * q * q).exp())
    };
    let sharp_part =
        (q >= 1.0 && r >= 1.0 / (4.0 * q)).then(|| (-q * q).exp() / q * (1.0f64).min((r / q).powf((d - 1.0) / 2.0)));
    LowerBound {
        case,
        variable_part,
        sharp_part,
    }
}

/// Balls drawn per case of [`lower_bound_gamma`], parametrized by `(|q_B|, r_B)`
/// with `|q_B| <= q_max` and `r_B <= 6`.
pub fn lower_bound_balls(dim: usize, per_case: usize, q_max: f64, seed: u64) -> Vec<Ball> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(3 * per_case);
    let log_uniform = |rng: &mut ChaCha8Rng, a: f64, b: f64| rng.random_range(a.ln()..=b.ln()).exp();
    for case in [LowerBoundCase::Small, LowerBoundCase::Central, LowerBoundCase::Far] {
        for _ in 0..per_case {
            let (q, r) = match case {
                LowerBoundCase::Small => {
                    let q = if rng.random::<f64>() < 0.2 {
                        0.0
                    } else {
                        rng.random_range(0.0..=q_max)
                    };
                    let lim = if q > 0.0 { (1.0f64).min(1.0 / q) } else { 1.0 };
                    (q, log_uniform(&mut rng, 1e-3 * lim, lim))
                }
                LowerBoundCase::Central => {
                    let q = if rng.random::<f64>() < 0.3 {
                        0.0
                    } else {
                        rng.random_range(0.0..1.0)
                    };
                    (q, log_uniform(&mut rng, 1.0 + 1e-9, 6.0))
                }
                LowerBoundCase::Far => {
                    let q = rng.random_range(1.0..=q_max);
                    (q, log_uniform(&mut rng, (1.0 + 1e-9) / q, 6.0))
                }
            };
            let dir = random_unit(&mut rng, dim);
            let c = if q > 0.0 { q + r } else { rng.random_range(0.0..r) };
            out.push(Ball {
                center: dir.iter().map(|v| c * v).collect(),
                radius: r,
            });
        }
    }
    out
}

/// Balls on the edges of each case region, where the ratio
/// `γ_d(B)/variable_part` is smallest. `γ_d` is rotation invariant, so the
/// centers lie on the first axis.
pub fn lower_bound_edge_balls(dim: usize, steps: usize, q_max: f64) -> Vec<Ball> {
    let mut out = Vec::new();
    let mut push = |q: f64, r: f64| {
        let mut center = vec![0.0; dim];
        center[0] = q + r;
        out.push(Ball { center, radius: r });
    };
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let q = q_max * t;
        push(q, if q > 0.0 { (1.0f64).min(1.0 / q) } else { 1.0 });
        let qc = t * (1.0 - 1e-9);
        push(qc, 1.0 + 1e-9);
        push(qc, 6.0);
        let qf = 1.0 + (q_max - 1.0) * t;
        push(qf, (1.0 + 1e-9) / qf);
        push(qf, 6.0);
    }
    out
}

fn random_unit<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| std_normal(rng)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// One constant `c` fitted on a calibration set and checked on a disjoint one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundFit {
    pub c: f64,
    pub calibration: usize,
    pub validation: usize,
    /// Per case: validation count and smallest validation ratio.
    pub per_case: Vec<(LowerBoundCase, usize, f64)>,
    pub violations: usize,
    pub pass: bool,
}

fn lower_bound_ratios(balls: &[Ball], tol: f64) -> Result<Vec<(LowerBoundCase, f64)>> {
    let gamma = MeasureHandle::gaussian(balls.first().map_or(1, |b| b.dim()));
    balls
        .par_iter()
        .map(|b| {
            let lb = lower_bound_gamma(b);
            Ok((lb.case, gamma.measure_ball(b, tol)? / lb.variable_part))
        })
        .collect()
}

/// `c = inf γ_d(B)/variable_part(B)` over calibration balls (random plus
/// edge balls), then `γ_d(B) >= c·variable_part(B)` on `per_case` fresh
/// balls per case.
pub fn lower_bound_fit(dim: usize, per_case: usize, seed: u64) -> Result<LowerBoundFit> {
    const Q_MAX: f64 = 5.0;
    const TOL: f64 = 1e-8;
    let mut cal = lower_bound_balls(dim, per_case, Q_MAX, seed);
    cal.extend(lower_bound_edge_balls(dim, 64, Q_MAX));
    let c = lower_bound_ratios(&cal, TOL)?
        .iter()
        .map(|r| r.1)
        .fold(f64::INFINITY, f64::min);
    let val = lower_bound_balls(dim, per_case, Q_MAX, seed ^ 0x5bd1_e995);
    let ratios = lower_bound_ratios(&val, TOL)?;
    let per_case: Vec<(LowerBoundCase, usize, f64)> =
        [LowerBoundCase::Small, LowerBoundCase::Central, LowerBoundCase::Far]
            .into_iter()
            .map(|case| {
                let rs: Vec<f64> = ratios.iter().filter(|r| r.0 == case).map(|r| r.1).collect();
                (case, rs.len(), rs.iter().cloned().fold(f64::INFINITY, f64::min))
            })
            .collect();
    // Slack of ten quadrature tolerances.
    let violations = ratios.iter().filter(|r| r.1 < c * (1.0 - 10.0 * TOL)).count();
    Ok(LowerBoundFit {
        pass: c > 0.0 && c.is_finite() && violations == 0,
        c,
        calibration: cal.len(),
        validation: val.len(),
        per_case,
        violations,
    })
}

/// `d·min(1, 1/|x|)`, with value `d` at the origin.
pub fn hyperbolic_radius(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    let n = norm(x);
    if n <= 1.0 {
        d
    } else {
        d / n
    }
}

/// `y ∈ B(x)`.
pub fn in_local_region(x: &[f64], y: &[f64]) -> bool {
    dist(x, y) <= hyperbolic_radius(x)
}

/// Axis-aligned box `Π [lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn cube(dim: usize, half_width: f64) -> Self {
        BoxDomain {
            lo: vec![-half_width; dim],
            hi: vec![half_width; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }
}

/// A ball of a covering family together with its dilate `B̂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyBall {
    pub ball: Ball,
    pub dilate_radius: f64,
}

impl FamilyBall {
    pub fn new(ball: Ball) -> Self {
        let dilate_radius = dilate_radius(&ball);
        FamilyBall { ball, dilate_radius }
    }

    pub fn dilate(&self) -> Ball {
        Ball {
            center: self.ball.center.clone(),
            radius: self.dilate_radius,
        }
    }
}

/// `r + d·min(1, 1/(|c| - r))`, using `d` when `|c| <= r`. Contains `B(x)`
/// for every `x ∈ B`.
pub fn dilate_radius(ball: &Ball) -> f64 {
    let d = ball.dim() as f64;
    let gap = norm(&ball.center) - ball.radius;
    let reach = if gap <= 0.0 { d } else { d * (1.0f64).min(1.0 / gap) };
    ball.radius + reach
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallFamily {
    pub dim: usize,
    pub balls: Vec<FamilyBall>,
}

impl BallFamily {
    pub fn from_balls(dim: usize, balls: Vec<Ball>) -> Self {
        BallFamily {
            dim,
            balls: balls.into_iter().map(FamilyBall::new).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn covers(&self, x: &[f64]) -> bool {
        self.balls.iter().any(|b| b.ball.contains(x))
    }

    /// Columnar text: center coordinates, radius, dilate radius.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for k in 0..self.dim {
            let _ = write!(out, "c{k}\t");
        }
        out.push_str("radius\tdilate_radius\n");
        for b in &self.balls {
            for c in &b.ball.center {
                let _ = write!(out, "{c:.17e}\t");
            }
            let _ = writeln!(out, "{:.17e}\t{:.17e}", b.ball.radius, b.dilate_radius);
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Config("empty ball table".into()))?;
        let dim = header.split('\t').count().saturating_sub(2);
        let mut balls = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let vals: Vec<f64> = line
                .split('\t')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config(format!("ball table: {e}")))?;
            if vals.len() != dim + 2 {
                return Err(Error::Config(format!("ball table row has {} columns", vals.len())));
            }
            balls.push(FamilyBall {
                ball: Ball::new(vals[..dim].to_vec(), vals[dim])?,
                dilate_radius: vals[dim + 1],
            });
        }
        Ok(BallFamily { dim, balls })
    }
}

/// `min(1, 1/|c|)`, the local scale at `c`.
pub fn local_scale(c: &[f64]) -> f64 {
    let n = norm(c);
    if n <= 1.0 {
        1.0
    } else {
        1.0 / n
    }
}

/// Covering of `domain` by balls adapted to the Gaussian local scale.
///
/// Depth 0 returns one ball around the whole box. Otherwise cubes are split
/// dyadically (at most `depth` times) until their half-diagonal is at most
/// `min(1, 1/|center|)`; each cube becomes a concentric ball of radius
/// `max(half-diagonal, scale/2)`.
pub fn admissible_ball_family(domain: &BoxDomain, depth: usize) -> BallFamily {
    let dim = domain.dim();
    let center: Vec<f64> = domain.lo.iter().zip(&domain.hi).map(|(l, h)| 0.5 * (l + h)).collect();
    let half_diag = 0.5 * dist(&domain.lo, &domain.hi);
    if depth == 0 {
        return BallFamily::from_balls(
            dim,
            vec![Ball {
                center,
                radius: half_diag.max(f64::MIN_POSITIVE),
            }],
        );
    }
    let mut out = Vec::new();
    let mut stack = vec![(domain.lo.clone(), domain.hi.clone(), 0usize)];
    while let Some((lo, hi, level)) = stack.pop() {
        let c: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect();
        let hd = 0.5 * dist(&lo, &hi);
        let scale = local_scale(&c);
        if hd <= scale || level >= depth {
            out.push(Ball {
                center: c,
                radius: hd.max(0.5 * scale),
            });
            continue;
        }
        for mask in 0..(1usize << dim) {
            let mut l2 = lo.clone();
            let mut h2 = hi.clone();
            for k in 0..dim {
                if mask >> k & 1 == 0 {
                    h2[k] = c[k];
                } else {
                    l2[k] = c[k];
                }
            }
            stack.push((l2, h2, level + 1));
        }
    }
    out.sort_by(|a, b| {
        a.center
            .iter()
            .zip(&b.center)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    BallFamily::from_balls(dim, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Maclaurin series for erf, independent of libm.
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        for n in 1..200 {
            term *= -x * x / n as f64;
            let add = term / (2 * n + 1) as f64;
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
        }
        2.0 / PI.sqrt() * sum
    }

    #[test]
    fn density_values() {
        assert!((gaussian_density(&[0.0]) - 0.564_189_583_5).abs() < 1e-10);
        assert!((gaussian_density(&[0.0, 0.0]) - 1.0 / PI).abs() < 1e-15);
        assert!((gaussian_density(&[1.0]) - (-1.0f64).exp() / PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn one_dim_ball_matches_erf_series() {
        let g = MeasureHandle::gaussian(1);
        for r in [0.1, 0.5, 1.0, 2.0] {
            let m = g.measure_ball(&Ball::new(vec![0.0], r).unwrap(), 1e-12).unwrap();
            assert!((m - erf_series(r)).abs() < 1e-12, "r = {r}");
        }
        let m = g.measure_ball(&Ball::new(vec![0.0], 1.0).unwrap(), 1e-12).unwrap();
        assert!((m - 0.842_700_792_9).abs() < 1e-9);
        let m = g.measure_ball(&Ball::new(vec![0.0], 50.0).unwrap(), 1e-12).unwrap();
        assert!((m - 1.0).abs() < 1e-12);
        let m = g.measure_ball(&Ball::new(vec![0.3], 0.7).unwrap(), 1e-12).unwrap();
        assert!((m - 0.5 * (erf_series(1.0) - erf_series(-0.4))).abs() < 1e-12);
    }

    #[test]
    fn nested_quadrature_matches_rotational_closed_form() {
        // A centered disk has γ_2 mass 1 - e^{-r²}.
        let g = MeasureHandle::gaussian(2);
        for r in [0.3, 1.0, 2.5] {
            let m = g.measure_ball(&Ball::new(vec![0.0, 0.0], r).unwrap(), 1e-10).unwrap();
            assert!((m - (1.0 - (-r * r).exp())).abs() < 1e-10, "r = {r}");
        }
        // Far small ball: mass ≈ density × volume.
        let b = Ball::new(vec![12.0, 5.0], 1e-3).unwrap();
        let m = g.measure_ball(&b, 1e-10).unwrap();
        let approx = gaussian_density(&b.center) * b.volume();
        assert!((m / approx - 1.0).abs() < 1e-4);
        // d = 3 centered ball: closed form via the chi distribution.
        let r: f64 = 1.3;
        let exact = libm::erf(r) - 2.0 * r * (-r * r).exp() / PI.sqrt();
        let g3 = MeasureHandle::gaussian(3);
        let m = g3.measure_ball(&Ball::new(vec![0.0; 3], r).unwrap(), 1e-9).unwrap();
        assert!((m - exact).abs() < 1e-9);
    }

    #[test]
    fn lebesgue_and_grid_measures() {
        let l = MeasureHandle::lebesgue(2);
        let m = l.measure_ball(&Ball::new(vec![1.0, 1.0], 2.0).unwrap(), 1e-9).unwrap();
        assert!((m - 4.0 * PI).abs() < 1e-12);
        let grid = MeasureHandle::grid_weighted(vec![vec![0.0], vec![1.0], vec![3.0]], vec![0.5, 0.25, 0.25]).unwrap();
        let m = grid.measure_ball(&Ball::new(vec![0.5], 0.6).unwrap(), 1e-9).unwrap();
        assert_eq!(m, 0.75);
    }

    #[test]
    fn monte_carlo_agrees_with_quadrature() {
        for dim in 1..=3 {
            let g = MeasureHandle::gaussian(dim);
            for (c, r) in [(0.4, 0.8), (1.5, 2.0), (2.0, 0.3)] {
                let mut center = vec![0.0; dim];
                center[0] = c;
                let b = Ball::new(center, r).unwrap();
                let q = g.measure_ball(&b, 1e-9).unwrap();
                let mc = g.measure_ball_mc(&b, 1 << 16, 42).unwrap();
                assert!((q - mc.value).abs() <= 3.0 * mc.std_error + 1e-15, "d={dim} {q} {mc:?}");
            }
        }
        let g = MeasureHandle::gaussian(5);
        let m = g.measure_ball(&Ball::new(vec![0.0; 5], 0.5).unwrap(), 1e-3).unwrap();
        assert!(m > 0.0 && m < 1.0);
    }

    #[test]
    fn nearest_point_geometry() {
        let (q, d) = nearest_point(&Ball::new(vec![3.0, 0.0], 1.0).unwrap());
        assert_eq!((q, d), (vec![2.0, 0.0], 2.0));
        let (q, d) = nearest_point(&Ball::new(vec![0.5, 0.0], 1.0).unwrap());
        assert_eq!((q, d), (vec![0.0, 0.0], 0.0));
        let (q, _) = nearest_point(&Ball::new(vec![0.0, 4.0], 0.5).unwrap());
        assert_eq!(q, vec![0.0, 3.5]);
    }

    #[test]
    fn lower_bound_cases() {
        let b = Ball::new(vec![0.5, 0.0], 2.0).unwrap();
        let lb = lower_bound_gamma(&b);
        assert_eq!((lb.case, lb.variable_part), (LowerBoundCase::Central, 1.0));
        let b = Ball::new(vec![3.0, 0.0], 1.0).unwrap();
        let lb = lower_bound_gamma(&b);
        assert_eq!(lb.case, LowerBoundCase::Far);
        assert!((lb.variable_part - (-12.0f64).exp()).abs() < 1e-20);
        let b = Ball::new(vec![3.0, 0.0], 0.1).unwrap();
        assert_eq!(lower_bound_gamma(&b).case, LowerBoundCase::Small);
    }

    #[test]
    fn lower_bound_fit_small_sample() {
        let fit = lower_bound_fit(1, 100, 4).unwrap();
        assert!(fit.pass, "{fit:?}");
        assert!(fit.per_case.iter().all(|(_, n, _)| *n > 0));
        for b in lower_bound_balls(2, 50, 5.0, 1) {
            assert!(b.radius > 0.0);
        }
    }

    #[test]
    fn hyperbolic_ball() {
        assert_eq!(hyperbolic_radius(&[0.0, 0.0]), 2.0);
        assert_eq!(hyperbolic_radius(&[4.0, 0.0]), 0.5);
        assert!(in_local_region(&[4.0, 0.0], &[4.4, 0.0]));
        assert!(!in_local_region(&[4.0, 0.0], &[4.6, 0.0]));
    }

    #[test]
    fn families_cover_and_dilates_contain_local_balls() {
        let domain = BoxDomain::cube(2, 3.0);
        let single = admissible_ball_family(&domain, 0);
        assert_eq!(single.len(), 1);
        let fam = admissible_ball_family(&domain, 12);
        for i in 0..=30 {
            for j in 0..=30 {
                let x = [-3.0 + 0.2 * i as f64, -3.0 + 0.2 * j as f64];
                assert!(fam.covers(&x));
            }
        }
        for b in &fam.balls {
            let ratio = b.ball.radius / local_scale(&b.ball.center);
            assert!((0.5..=2.0).contains(&ratio), "{ratio}");
        }
        let back = BallFamily::from_tsv(&fam.to_tsv()).unwrap();
        assert_eq!(back, fam);
    }

    proptest! {
        #[test]
        fn nearest_point_is_closest(cx in -5.0..5.0f64, cy in -5.0..5.0f64, r in 0.01..3.0f64, u in 0.0..1.0f64, th in 0.0..std::f64::consts::TAU) {
            let b = Ball::new(vec![cx, cy], r).unwrap();
            let (_, d) = nearest_point(&b);
            let z = [cx + r * u.sqrt() * th.cos(), cy + r * u.sqrt() * th.sin()];
            prop_assert!(d <= norm(&z) + 1e-12);
        }

        #[test]
        fn dilate_contains_hyperbolic_balls(cx in -6.0..6.0f64, cy in -6.0..6.0f64, r in 0.05..2.0f64,
                                            u in 0.0..1.0f64, th in 0.0..std::f64::consts::TAU, v in 0.0..1.0f64, ph in 0.0..std::f64::consts::TAU) {
            let fb = FamilyBall::new(Ball::new(vec![cx, cy], r).unwrap());
            let x = [cx + r * u.sqrt() * th.cos(), cy + r * u.sqrt() * th.sin()];
            let h = hyperbolic_radius(&x) * v;
            let y = [x[0] + h * ph.cos(), x[1] + h * ph.sin()];
            prop_assert!(fb.dilate().contains(&y));
        }

        #[test]
        fn gaussian_measure_is_monotone(c in -4.0..4.0f64, r in 0.01..3.0f64, grow in 0.0..2.0f64) {
            let g = MeasureHandle::gaussian(2);
            let inner = g.measure_ball(&Ball::new(vec![c, 0.0], r).unwrap(), 1e-10).unwrap();
            let outer = g.measure_ball(&Ball::new(vec![c, 0.0], r + grow).unwrap(), 1e-10).unwrap();
            prop_assert!(inner > 0.0 && outer <= 1.0 + 1e-12);
            prop_assert!(inner <= outer * (1.0 + 1e-9));
        }
    }
}
