//! Modulars and Luxemburg norms on `L^{p(·)}(μ)` for functions sampled on
//! weighted grids, with numerical verifiers for the Hölder inequality, the
//! norm conjugate formula and the change-of-exponent estimate.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{conjugate_exponent, ExponentSpec};
use crate::gauss::{gaussian_interval_mass, norm, Ball, BoxDomain, MeasureHandle};
use crate::quad::{gauss_hermite, pairwise_sum};

/// Slack on every inequality verifier.
pub const EPS_NUM: f64 = 1e-9;
pub const DEFAULT_TOL: f64 = 1e-12;

/// A function sampled at weighted nodes of a measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    dim: usize,
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    weights: Vec<f64>,
    measure_tag: String,
}

impl GridFunction {
    pub fn new(
        dim: usize,
        points: Vec<Vec<f64>>,
        values: Vec<f64>,
        weights: Vec<f64>,
        measure_tag: impl Into<String>,
    ) -> Result<Self> {
        if points.len() != values.len() || points.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "grid columns differ in length: {} points, {} values, {} weights",
                points.len(),
                values.len(),
                weights.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument("weights must be finite and nonnegative".into()));
        }
        Ok(GridFunction {
            dim,
            points,
            values,
            weights,
            measure_tag: measure_tag.into(),
        })
    }

    /// Midpoints of a uniform `n^d` cell grid on `domain`, each weighted by the
    /// exact measure of its cell.
    pub fn on_box<F: Fn(&[f64]) -> f64>(
        measure: &MeasureHandle,
        domain: &BoxDomain,
        n_per_axis: usize,
        f: F,
    ) -> Result<Self> {
        let dim = domain.dim();
        if measure.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: measure.dim(),
            });
        }
        if n_per_axis == 0 {
            return Err(Error::InvalidArgument("need at least one cell per axis".into()));
        }
        let gaussian = match measure {
            MeasureHandle::Gaussian { .. } => true,
            MeasureHandle::Lebesgue { .. } => false,
            MeasureHandle::GridWeighted { .. } => {
                return Err(Error::InvalidArgument(
                    "grid-weighted measures carry their own nodes".into(),
                ))
            }
        };
        // Per axis: (midpoint, cell mass).
        let axes: Vec<Vec<(f64, f64)>> = (0..dim)
            .map(|k| {
                let (lo, hi) = (domain.lo[k], domain.hi[k]);
                let h = (hi - lo) / n_per_axis as f64;
                (0..n_per_axis)
                    .map(|i| {
                        let a = lo + i as f64 * h;
                        let b = if i + 1 == n_per_axis { hi } else { a + h };
                        let mass = if gaussian { gaussian_interval_mass(a, b) } else { b - a };
                        (0.5 * (a + b), mass)
                    })
                    .collect()
            })
            .collect();
        let total = n_per_axis.pow(dim as u32);
        let mut points = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            points.push((0..dim).map(|k| axes[k][idx[k]].0).collect::<Vec<_>>());
            weights.push((0..dim).map(|k| axes[k][idx[k]].1).product());
            for k in (0..dim).rev() {
                idx[k] += 1;
                if idx[k] < n_per_axis {
                    break;
                }
                idx[k] = 0;
            }
        }
        let values = points.iter().map(|p| f(p)).collect();
        Self::new(dim, points, values, weights, measure.name())
    }

    /// Tensor Gauss-Hermite nodes for `γ_d`, weights summing to 1.
    pub fn gauss_hermite<F: Fn(&[f64]) -> f64>(dim: usize, n: usize, f: F) -> Result<Self> {
        let (x, w) = gauss_hermite(n);
        let w: Vec<f64> = w.iter().map(|v| v / std::f64::consts::PI.sqrt()).collect();
        let total = n.pow(dim as u32);
        let mut points = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            points.push(idx.iter().map(|&i| x[i]).collect::<Vec<_>>());
            weights.push(idx.iter().map(|&i| w[i]).product());
            for k in (0..dim).rev() {
                idx[k] += 1;
                if idx[k] < n {
                    break;
                }
                idx[k] = 0;
            }
        }
        let values = points.iter().map(|p| f(p)).collect();
        Self::new(dim, points, values, weights, "gaussian")
    }

    /// The same nodes and weights carrying new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(
            self.dim,
            self.points.clone(),
            values,
            self.weights.clone(),
            self.measure_tag.clone(),
        )
    }

    pub fn map<F: Fn(&[f64], f64) -> f64>(&self, f: F) -> Self {
        let values = self.points.iter().zip(&self.values).map(|(p, v)| f(p, *v)).collect();
        GridFunction { values, ..self.clone() }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|_, v| c * v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn measure_tag(&self) -> &str {
        &self.measure_tag
    }

    pub fn total_weight(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `∑ w·|f·g|` over a shared grid.
    pub fn pairing(&self, other: &GridFunction) -> Result<f64> {
        self.same_grid(other)?;
        let terms: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .zip(&self.weights)
            .map(|((a, b), w)| w * (a * b).abs())
            .collect();
        Ok(pairwise_sum(&terms))
    }

    fn same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.points != other.points || self.weights != other.weights {
            return Err(Error::InvalidArgument("functions live on different grids".into()));
        }
        Ok(())
    }

    fn check_compatible(&self, spec: &ExponentSpec, measure: &MeasureHandle) -> Result<()> {
        for got in [spec.dim(), measure.dim()] {
            if got != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got,
                });
            }
        }
        if measure.name() != self.measure_tag {
            return Err(Error::InvalidArgument(format!(
                "grid built for {}, not {}",
                self.measure_tag,
                measure.name()
            )));
        }
        Ok(())
    }

    /// Columnar table: coordinates, value, weight.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let head: Vec<String> = (0..self.dim).map(|k| format!("x{k}")).collect();
        out.push_str(&format!(
            "# measure={}\n{}\tvalue\tweight\n",
            self.measure_tag,
            head.join("\t")
        ));
        for ((p, v), w) in self.points.iter().zip(&self.values).zip(&self.weights) {
            for c in p {
                out.push_str(&format!("{c:e}\t"));
            }
            out.push_str(&format!("{v:e}\t{w:e}\n"));
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let tag = lines
            .next()
            .and_then(|l| l.strip_prefix("# measure="))
            .ok_or_else(|| Error::InvalidArgument("missing measure line".into()))?
            .to_string();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("missing header".into()))?;
        let dim = header.split('\t').count().saturating_sub(2);
        let (mut points, mut values, mut weights) = (Vec::new(), Vec::new(), Vec::new());
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let cols: Vec<f64> = line
                .split('\t')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidArgument(format!("bad number in {line:?}: {e}")))?;
            if cols.len() != dim + 2 {
                return Err(Error::InvalidArgument(format!(
                    "expected {} columns in {line:?}",
                    dim + 2
                )));
            }
            points.push(cols[..dim].to_vec());
            values.push(cols[dim]);
            weights.push(cols[dim + 1]);
        }
        Self::new(dim, points, values, weights, tag)
    }
}

fn modular_scaled(f: &GridFunction, p: &[f64], lambda: f64) -> f64 {
    let terms: Vec<f64> = f
        .values
        .par_iter()
        .zip(&f.weights)
        .zip(p)
        .map(|((v, w), p)| {
            let a = v.abs() / lambda;
            if a == 0.0 {
                0.0
            } else {
                w * a.powf(*p)
            }
        })
        .collect();
    pairwise_sum(&terms)
}

fn exponent_values(f: &GridFunction, spec: &ExponentSpec) -> Vec<f64> {
    f.points.iter().map(|x| spec.eval(x)).collect()
}

/// `∑ w·|f|^{p(x)}`.
pub fn modular(f: &GridFunction, spec: &ExponentSpec, measure: &MeasureHandle) -> Result<f64> {
    f.check_compatible(spec, measure)?;
    Ok(modular_scaled(f, &exponent_values(f, spec), 1.0))
}

/// `inf {λ > 0 : modular(f/λ) <= 1}` by bisection in `log λ`; the returned
/// value always satisfies `modular(f/λ) <= 1`.
pub fn luxemburg_norm(f: &GridFunction, spec: &ExponentSpec, measure: &MeasureHandle, tol: f64) -> Result<f64> {
    f.check_compatible(spec, measure)?;
    luxemburg_norm_with(f, &exponent_values(f, spec), tol)
}

/// Luxemburg norm for exponent values given per grid node.
pub fn luxemburg_norm_with(f: &GridFunction, p: &[f64], tol: f64) -> Result<f64> {
    if p.len() != f.len() {
        return Err(Error::InvalidArgument(format!(
            "{} exponent values for {} nodes",
            p.len(),
            f.len()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if f.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Bracket("non-finite function values".into()));
    }
    if f.values.iter().zip(&f.weights).all(|(v, w)| *v == 0.0 || *w == 0.0) {
        return Ok(0.0);
    }
    let m = |l: f64| modular_scaled(f, p, l);
    let pmin = p.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = f.sup_abs() * f.total_weight().max(1.0).powf(1.0 / pmin) + 1.0;
    let mut guard = 0;
    while m(hi) > 1.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 2000 || !hi.is_finite() {
            return Err(Error::Bracket(format!("upper bracket diverged at {hi}")));
        }
    }
    let mut lo = 0.5 * hi;
    guard = 0;
    while m(lo) <= 1.0 {
        hi = lo;
        lo *= 0.5;
        guard += 1;
        if guard > 2000 || lo == 0.0 {
            return Err(Error::Bracket("lower bracket collapsed".into()));
        }
    }
    for _ in 0..200 {
        if hi - lo <= tol * hi {
            break;
        }
        let mid = (lo * hi).sqrt();
        let mid = if mid > lo && mid < hi { mid } else { 0.5 * (lo + hi) };
        if m(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Classical `(∑ w·|f|^p)^{1/p}`.
pub fn classical_norm(f: &GridFunction, p: f64) -> f64 {
    let terms: Vec<f64> = f
        .values
        .iter()
        .zip(&f.weights)
        .map(|(v, w)| w * v.abs().powf(p))
        .collect();
    pairwise_sum(&terms).powf(1.0 / p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderOutcome {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `∑ w·|fg| <= 2‖f‖_{p(·)}‖g‖_{p'(·)}` with slack [`EPS_NUM`].
pub fn holder_check(
    f: &GridFunction,
    g: &GridFunction,
    spec: &ExponentSpec,
    measure: &MeasureHandle,
) -> Result<HolderOutcome> {
    let conj = conjugate_exponent(spec)?;
    let lhs = f.pairing(g)?;
    let rhs = 2.0 * luxemburg_norm(f, spec, measure, DEFAULT_TOL)? * luxemburg_norm(g, &conj, measure, DEFAULT_TOL)?;
    Ok(HolderOutcome {
        lhs,
        rhs,
        pass: lhs <= rhs * (1.0 + EPS_NUM),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualEstimate {
    pub norm: f64,
    pub sup_pairing: f64,
    /// Index of the maximizing family member.
    pub argmax: Option<usize>,
    pub family_size: usize,
    /// `sup <= 2‖f‖`; asserted.
    pub upper_pass: bool,
    /// `sup >= (1/2 - ε_fam)‖f‖`; reported only, a finite family can miss it.
    pub lower_pass: bool,
}

/// Supremum of `∑ w·|fg|` over the family, each member rescaled to
/// `‖g‖_{p'(·)} = 1`.
pub fn dual_norm_estimate(
    f: &GridFunction,
    spec: &ExponentSpec,
    measure: &MeasureHandle,
    family: &[GridFunction],
    eps_fam: f64,
) -> Result<DualEstimate> {
    if family.is_empty() {
        return Err(Error::InvalidArgument("dual family is empty".into()));
    }
    let conj = conjugate_exponent(spec)?;
    let norm = luxemburg_norm(f, spec, measure, DEFAULT_TOL)?;
    let mut sup = 0.0;
    let mut argmax = None;
    for (i, g) in family.iter().enumerate() {
        let gn = luxemburg_norm(g, &conj, measure, DEFAULT_TOL)?;
        if gn == 0.0 {
            continue;
        }
        let v = f.pairing(g)? / gn;
        if v > sup {
            sup = v;
            argmax = Some(i);
        }
    }
    Ok(DualEstimate {
        norm,
        sup_pairing: sup,
        argmax,
        family_size: family.len(),
        upper_pass: sup <= 2.0 * norm * (1.0 + EPS_NUM),
        lower_pass: sup >= (0.5 - eps_fam) * norm,
    })
}

/// `(|f|/‖f‖)^{p(x)-1}`, the near-extremal dual candidate.
pub fn dual_candidate(f: &GridFunction, spec: &ExponentSpec, measure: &MeasureHandle) -> Result<GridFunction> {
    let n = luxemburg_norm(f, spec, measure, DEFAULT_TOL)?;
    if n == 0.0 {
        return Ok(f.map(|_, _| 0.0));
    }
    Ok(f.map(|x, v| {
        let a = v.abs() / n;
        if a == 0.0 {
            0.0
        } else {
            a.powf(spec.eval(x) - 1.0)
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangepOutcome {
    /// `∫_E G^{p(y)}`.
    pub variable: f64,
    /// `∫_E G^{p_∞}`.
    pub limit: f64,
    /// `∫_E (e + |y|)^{-d p⁻}`.
    pub tail: f64,
    /// Smallest `C` with `variable <= C·limit + tail`.
    pub c_forward: f64,
    /// Smallest `C` with `limit <= C·variable + tail`.
    pub c_backward: f64,
}

impl ChangepOutcome {
    pub fn fitted_c(&self) -> f64 {
        self.c_forward.max(self.c_backward)
    }
}

fn smallest_c(lhs: f64, base: f64, tail: f64) -> f64 {
    let excess = lhs - tail;
    if excess <= 0.0 {
        0.0
    } else if base > 0.0 {
        excess / base
    } else {
        f64::INFINITY
    }
}

/// Both change-of-exponent inequalities for `0 <= G <= 1` on the grid nodes
/// inside `set`. `G` must carry Lebesgue weights.
pub fn changep_error_check(g: &GridFunction, spec: &ExponentSpec, set: &Ball) -> Result<ChangepOutcome> {
    if g.measure_tag != "lebesgue" {
        return Err(Error::InvalidArgument(
            "change of exponent is stated for Lebesgue weights".into(),
        ));
    }
    if g.dim != spec.dim() || set.dim() != g.dim {
        return Err(Error::DimensionMismatch {
            expected: g.dim,
            got: spec.dim(),
        });
    }
    if let Some(v) = g.values.iter().find(|v| !(**v >= 0.0 && **v <= 1.0)) {
        return Err(Error::InvalidArgument(format!(
            "G must take values in [0, 1], found {v}"
        )));
    }
    let (p_lo, p_inf) = (
        spec.p_minus(),
        spec.p_inf()
            .ok_or_else(|| Error::InvalidArgument("change of exponent needs p_inf".into()))?,
    );
    if !(p_lo > 1.0) {
        return Err(Error::InvalidArgument("change of exponent needs p⁻ > 1".into()));
    }
    let d = g.dim as f64;
    let (mut var, mut lim, mut tail) = (Vec::new(), Vec::new(), Vec::new());
    for ((x, v), w) in g.points.iter().zip(&g.values).zip(&g.weights) {
        if !set.contains(x) {
            continue;
        }
        let pw = |p: f64| if *v == 0.0 { 0.0 } else { v.powf(p) };
        var.push(w * pw(spec.eval(x)));
        lim.push(w * pw(p_inf));
        tail.push(w * (std::f64::consts::E + norm(x)).powf(-d * p_lo));
    }
    let (variable, limit, tail) = (pairwise_sum(&var), pairwise_sum(&lim), pairwise_sum(&tail));
    Ok(ChangepOutcome {
        variable,
        limit,
        tail,
        c_forward: smallest_c(variable, limit, tail),
        c_backward: smallest_c(limit, variable, tail),
    })
}

/// `amplitude·exp(-|x - center|²/(2 width²))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub width: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        self.amplitude * (-r2 / (2.0 * self.width * self.width)).exp()
    }

    /// Centers in `[-spread, spread]^d`, widths log-uniform in `[0.1, 2]`,
    /// amplitudes in `[-3, 3]`.
    pub fn random<R: Rng>(rng: &mut R, dim: usize, spread: f64) -> Self {
        Bump {
            center: (0..dim).map(|_| rng.random_range(-spread..=spread)).collect(),
            width: rng.random_range(0.1f64.ln()..=2f64.ln()).exp(),
            amplitude: rng.random_range(-3.0..=3.0),
        }
    }
}

/// Sum of `k` random bumps.
pub fn random_bump_sum<R: Rng>(rng: &mut R, dim: usize, k: usize, spread: f64) -> Vec<Bump> {
    (0..k).map(|_| Bump::random(rng, dim, spread)).collect()
}

pub fn eval_bumps(bumps: &[Bump], x: &[f64]) -> f64 {
    bumps.iter().map(|b| b.eval(x)).sum()
}
