//! Kernels of the Gaussian Riesz transforms and their numerical analysis.
//!
//! Both kernels are one-dimensional integrals over `t ∈ (0, 1)` (or
//! `r = √(1−t)`) evaluated by panelled quadrature. Operators are applied in
//! polar coordinates around `x` with a centrally symmetric sphere rule, so the
//! odd leading singularity cancels exactly and the radial integrand stays
//! bounded near `ρ = 0`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classes::random_direction;
use crate::error::{Error, Result};
use crate::exponent::ExponentSpec;
use crate::gauss::{dist, hyperbolic_radius, norm, BallFamily, BoxDomain, MeasureHandle};
use crate::hermite::{
    hermite_eval, hermite_eval_multi, riesz, synthesize, CapPolicy, HermiteExpansion, MultiIndex, RieszVariant,
};
use crate::norms::{classical_norm, GridFunction};
use crate::quad::{
    gauss_hermite, gauss_kronrod, gauss_kronrod_breaks, gauss_legendre, tanh_sinh, GkOptions, QuadResult, SphereRule,
    TanhSinhOptions,
};
use crate::report::{is_stable, relative_change, CheckReport};

/// Smooth functions with a closed form, usable as `F` in `K̄_F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegisteredFunction {
    /// `sin(x₁)`: odd, so orthogonal to constants.
    SinX1,
    /// `cos(x₁) − e^{−1/4}`: even, orthogonal to constants.
    CosX1Centered,
    /// `x₁ e^{|x|²/10}`: orthogonal, but violates the growth condition for ε < 1/10.
    GrowingX1,
}

impl RegisteredFunction {
    pub const ALL: [RegisteredFunction; 3] = [
        RegisteredFunction::SinX1,
        RegisteredFunction::CosX1Centered,
        RegisteredFunction::GrowingX1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegisteredFunction::SinX1 => "sin_x1",
            RegisteredFunction::CosX1Centered => "cos_x1_centered",
            RegisteredFunction::GrowingX1 => "growing_x1",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }

    /// Whether `∫ F dγ_d = 0` holds analytically.
    pub fn gaussian_orthogonal(self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum KernelFunction {
    /// `scale · H_α`.
    Hermite {
        alpha: MultiIndex,
        scale: f64,
    },
    Registered {
        function: RegisteredFunction,
    },
}

/// `F`, the order parameter `m` and the growth parameter `ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelFamily {
    pub function: KernelFunction,
    pub m: f64,
    pub eps: f64,
}

/// `C_α = 2^{−|α|/2} π^{−d/2} / Γ(|α|/2)`.
///
/// With this constant the kernel operators coincide with the spectral
/// `R_α` and `R*_α`; `calibration_check` recovers it numerically.
pub fn riesz_constant(alpha: &MultiIndex) -> f64 {
    let m = alpha.order() as f64;
    let d = alpha.dim() as f64;
    2f64.powf(-0.5 * m) * PI.powf(-0.5 * d) / libm::tgamma(0.5 * m)
}

impl KernelFamily {
    /// The family of `R_α` / `R*_α`: `F = C_α H_α`, `m = |α|`.
    pub fn riesz(alpha: &MultiIndex) -> Result<Self> {
        if alpha.is_zero() {
            return Err(Error::InvalidArgument("Riesz order must be nonzero".into()));
        }
        Ok(KernelFamily {
            function: KernelFunction::Hermite {
                alpha: alpha.clone(),
                scale: riesz_constant(alpha),
            },
            m: alpha.order() as f64,
            eps: 0.05,
        })
    }

    /// `F = H_α` without normalization.
    pub fn hermite_unscaled(alpha: &MultiIndex) -> Result<Self> {
        let mut fam = Self::riesz(alpha)?;
        fam.function = KernelFunction::Hermite {
            alpha: alpha.clone(),
            scale: 1.0,
        };
        Ok(fam)
    }

    pub fn registered(function: RegisteredFunction, m: f64) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "order parameter m = {m} must be positive"
            )));
        }
        Ok(KernelFamily {
            function: KernelFunction::Registered { function },
            m,
            eps: 0.05,
        })
    }

    /// Dimension fixed by `F`, if any.
    pub fn dim(&self) -> Option<usize> {
        match &self.function {
            KernelFunction::Hermite { alpha, .. } => Some(alpha.dim()),
            KernelFunction::Registered { .. } => None,
        }
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if dim == 0 || dim > 3 {
            return Err(Error::InvalidArgument(format!(
                "kernel quadrature supports 1 <= d <= 3, got {dim}"
            )));
        }
        match self.dim() {
            Some(d) if d != dim => Err(Error::DimensionMismatch { expected: d, got: dim }),
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match &self.function {
            KernelFunction::Hermite { alpha, .. } => format!("H{:?}", alpha.0),
            KernelFunction::Registered { function } => function.name().to_string(),
        }
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        match &self.function {
            KernelFunction::Hermite { alpha, scale } => scale * hermite_eval_multi(alpha, z),
            KernelFunction::Registered { function } => match function {
                RegisteredFunction::SinX1 => z[0].sin(),
                RegisteredFunction::CosX1Centered => z[0].cos() - (-0.25f64).exp(),
                RegisteredFunction::GrowingX1 => z[0] * (0.1 * z.iter().map(|v| v * v).sum::<f64>()).exp(),
            },
        }
    }

    pub fn grad(&self, z: &[f64]) -> Vec<f64> {
        match &self.function {
            KernelFunction::Hermite { alpha, scale } => (0..z.len())
                .map(|i| {
                    let ai = alpha.0[i] as usize;
                    if ai == 0 {
                        return 0.0;
                    }
                    let mut g = scale * 2.0 * ai as f64 * hermite_eval(ai - 1, z[i]);
                    for (j, &aj) in alpha.0.iter().enumerate() {
                        if j != i {
                            g *= hermite_eval(aj as usize, z[j]);
                        }
                    }
                    g
                })
                .collect(),
            KernelFunction::Registered { function } => {
                let mut g = vec![0.0; z.len()];
                match function {
                    RegisteredFunction::SinX1 => g[0] = z[0].cos(),
                    RegisteredFunction::CosX1Centered => g[0] = -z[0].sin(),
                    RegisteredFunction::GrowingX1 => {
                        let e = (0.1 * z.iter().map(|v| v * v).sum::<f64>()).exp();
                        for (i, gi) in g.iter_mut().enumerate() {
                            *gi = 0.2 * z[0] * z[i] * e;
                        }
                        g[0] += e;
                    }
                }
                g
            }
        }
    }

    /// `∫ F dγ_d` by a tensor Gauss-Hermite rule (exact for Hermite `F`).
    pub fn gaussian_mean(&self, dim: usize) -> Result<f64> {
        self.check_dim(dim)?;
        let (nodes, weights) = gauss_hermite(40);
        let n = nodes.len();
        let total = n.pow(dim as u32);
        let mut z = vec![0.0; dim];
        let mut sum = 0.0;
        for k in 0..total {
            let mut idx = k;
            let mut w = 1.0;
            for zi in z.iter_mut() {
                let j = idx % n;
                idx /= n;
                *zi = nodes[j];
                w *= weights[j];
            }
            sum += w * self.eval(&z);
        }
        Ok(sum / PI.powf(0.5 * dim as f64))
    }

    /// Sample `max(|F|, |∇F|) e^{−ε|x|²}` on the sphere ladder `|x| = 2^k`, k = −2..6.
    pub fn growth_check(&self, dim: usize, eps: f64) -> Result<GrowthReport> {
        self.check_dim(dim)?;
        let rule = SphereRule::new(dim, 16);
        let radii: Vec<f64> = (-2..=6).map(|k| 2f64.powi(k)).collect();
        let profile: Vec<f64> = radii
            .iter()
            .map(|&r| {
                let m = rule
                    .directions
                    .iter()
                    .map(|w| {
                        let z: Vec<f64> = w.iter().map(|c| r * c).collect();
                        let grad = self.grad(&z);
                        let gm = grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                        let g = if gm > 0.0 {
                            gm * norm(&grad.iter().map(|v| v / gm).collect::<Vec<_>>())
                        } else {
                            0.0
                        };
                        self.eval(&z).abs().max(g)
                    })
                    .fold(0.0, f64::max);
                (m.ln() - eps * r * r).exp()
            })
            .collect();
        let c_eps = profile.iter().copied().fold(0.0, f64::max);
        let n = profile.len();
        let pass = c_eps.is_finite() && profile[n - 1] <= profile[n - 2] && profile[n - 1] < c_eps;
        Ok(GrowthReport {
            eps,
            radii,
            profile,
            c_eps,
            pass,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub eps: f64,
    pub radii: Vec<f64>,
    pub profile: Vec<f64>,
    pub c_eps: f64,
    /// The weighted sup is attained inside the ladder and decays at its end.
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointMap {
    None,
    #[default]
    DoubleExponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    /// Geometric panels on `t ∈ (0, 1/2]`.
    pub t_panels: usize,
    /// Transform used on the panel touching `t = 1`.
    pub endpoint_map: EndpointMap,
    /// Exclusion radii of the principal value ladder, scaled so the first is at most `B(x)`/2.
    pub pv_radii: Vec<f64>,
    /// Lower bound for the truncation radius; the radius used is `max(this, |x| + 6)`.
    pub domain_truncation_radius: f64,
    pub tol: f64,
    /// Azimuthal points (d = 2) or polar nodes (d = 3) of the sphere rule.
    pub angular_resolution: usize,
    /// Kernel evaluations closer than this to the diagonal are flagged.
    pub separation_floor: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            t_panels: 16,
            endpoint_map: EndpointMap::DoubleExponential,
            pv_radii: (0..=6).map(|k| 0.25 * 0.5f64.powi(k)).collect(),
            domain_truncation_radius: 8.0,
            tol: 1e-10,
            angular_resolution: 32,
            separation_floor: 1e-6,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.pv_radii.len() < 2 {
            return Err(Error::Config("pv_radii needs at least two radii".into()));
        }
        if self.pv_radii.iter().any(|r| !(*r > 0.0)) || self.pv_radii.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config(
                "pv_radii must be positive and strictly decreasing".into(),
            ));
        }
        if self.t_panels == 0 {
            return Err(Error::Config("t_panels must be positive".into()));
        }
        Ok(())
    }

    /// Same configuration with twice the panels, used for self-convergence studies.
    pub fn refined(&self) -> Self {
        QuadratureConfig {
            t_panels: 2 * self.t_panels,
            ..self.clone()
        }
    }
}

/// `(ψ_m(t), φ_m(t))` with `ψ_m(t) = (−log(1−t)/(2t))^{(m−2)/2}` and `φ_m = ψ_m/√(1−t)`.
pub fn psi_phi(m: f64, t: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("psi_phi needs 0 <= t < 1, got {t}")));
    }
    let psi = psi_split(m, t, 1.0 - t);
    Ok((psi, psi / (1.0 - t).sqrt()))
}

/// `ψ_m` given `t` and `1 − t` separately, so both ends stay accurate.
fn psi_split(m: f64, t: f64, omt: f64) -> f64 {
    let e = 0.5 * (m - 2.0);
    if e == 0.0 {
        return 1.0;
    }
    let ratio = if t == 0.0 {
        1.0
    } else if t < 0.5 {
        -(-t).ln_1p() / t
    } else {
        -omt.ln() / t
    };
    (0.5 * ratio).powf(e)
}

/// Quantities attached to a pair `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub a: f64,
    pub b: f64,
    pub t0: f64,
    pub u0: f64,
}

pub fn geometry(x: &[f64], y: &[f64]) -> Result<Geometry> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let a: f64 = x.iter().chain(y).map(|v| v * v).sum();
    if a == 0.0 {
        return Err(Error::InvalidArgument("geometry is degenerate at x = y = 0".into()));
    }
    let b: f64 = 2.0 * x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let (xx, yy): (f64, f64) = (x.iter().map(|v| v * v).sum(), y.iter().map(|v| v * v).sum());
    let (t0, u0) = if b > 0.0 {
        let plus: Vec<f64> = x.iter().zip(y).map(|(p, q)| p + q).collect();
        // √(a² − b²) = |x + y||x − y| without cancellation
        let s = norm(&plus) * dist(x, y);
        (2.0 * s / (a + s), 0.5 * (yy - xx + s))
    } else {
        (1.0, yy)
    };
    Ok(Geometry {
        x: x.to_vec(),
        y: y.to_vec(),
        a,
        b,
        t0,
        u0,
    })
}

impl Geometry {
    /// `u(t) = |y − √(1−t) x|² / t`.
    pub fn u(&self, t: f64) -> f64 {
        u_split(&self.x, &self.y, t, 1.0 - t)
    }

    /// `ū(t) = u(t) + |x|² − |y|² = |x − √(1−t) y|² / t`.
    pub fn ubar(&self, t: f64) -> f64 {
        u_split(&self.y, &self.x, t, 1.0 - t)
    }

    /// Numerical minimizer of `u` on `(0, 1]`: grid scan followed by golden-section refinement.
    pub fn argmin_u(&self) -> (f64, f64) {
        let n = 4000;
        let grid: Vec<f64> = (0..=n)
            .map(|k| {
                let s = k as f64 / n as f64;
                // denser near 0, where the minimum sits for nearby points
                (1e-12f64.ln() * (1.0 - s)).exp()
            })
            .collect();
        let (mut best, mut best_u) = (grid.len() - 1, self.u(1.0));
        for (k, &t) in grid.iter().enumerate() {
            let v = self.u(t);
            if v < best_u {
                best = k;
                best_u = v;
            }
        }
        let lo = grid[best.saturating_sub(1)];
        let hi = grid[(best + 1).min(grid.len() - 1)];
        golden_min(|t| self.u(t), lo, hi)
    }
}

fn u_split(x: &[f64], y: &[f64], t: f64, omt: f64) -> f64 {
    let r = omt.sqrt();
    x.iter()
        .zip(y)
        .map(|(p, q)| {
            let v = q - r * p;
            v * v
        })
        .sum::<f64>()
        / t
}

/// Golden-section minimization on `[lo, hi]`; returns `(argmin, min)`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (hi - lo) <= 1e-15 * (lo.abs() + hi.abs()) {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    let t = 0.5 * (lo + hi);
    let candidates = [(t, f(t)), (lo, f(lo)), (hi, f(hi))];
    candidates.into_iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEval {
    pub value: f64,
    pub error: f64,
    pub near_singular: bool,
}

/// `K̄_F(x, y)` from the `t`-form.
pub fn kernel_new(x: &[f64], y: &[f64], fam: &KernelFamily, cfg: &QuadratureConfig) -> Result<KernelEval> {
    kernel(RieszVariant::New, x, y, fam, cfg)
}

/// `K_α(x, y)` (with `F` in place of `C_α H_α`) from the `t`-form.
pub fn kernel_old(x: &[f64], y: &[f64], fam: &KernelFamily, cfg: &QuadratureConfig) -> Result<KernelEval> {
    kernel(RieszVariant::Old, x, y, fam, cfg)
}

fn check_pair(x: &[f64], y: &[f64], fam: &KernelFamily) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    fam.check_dim(x.len())?;
    if x == y {
        return Err(Error::InvalidArgument("kernels are singular at x = y".into()));
    }
    Ok(())
}

pub fn kernel(
    variant: RieszVariant,
    x: &[f64],
    y: &[f64],
    fam: &KernelFamily,
    cfg: &QuadratureConfig,
) -> Result<KernelEval> {
    check_pair(x, y, fam)?;
    let h: Vec<f64> = y.iter().zip(x).map(|(q, p)| q - p).collect();
    let q = kernel_t(variant, x, &h, fam, cfg);
    finish_eval(q, dist(x, y), cfg)
}

/// The same kernel from the original `r`-integral (no change of variables).
pub fn kernel_r_form(
    variant: RieszVariant,
    x: &[f64],
    y: &[f64],
    fam: &KernelFamily,
    cfg: &QuadratureConfig,
) -> Result<KernelEval> {
    check_pair(x, y, fam)?;
    let q = kernel_r(variant, x, y, fam, cfg);
    finish_eval(q, dist(x, y), cfg)
}

fn finish_eval(q: QuadResult, sep: f64, cfg: &QuadratureConfig) -> Result<KernelEval> {
    if !q.converged || !q.value.is_finite() {
        return Err(Error::NonConvergence(format!(
            "kernel quadrature: value {:e}, error {:e}",
            q.value, q.error
        )));
    }
    Ok(KernelEval {
        value: q.value,
        error: q.error,
        near_singular: sep < cfg.separation_floor,
    })
}

/// Geometric breakpoints on `(0, 1/2]` adapted to the scale `|x − y|²`.
fn t_breaks(sep2: f64, t0: f64, panels: usize) -> Vec<f64> {
    let lo = (sep2.min(0.5) / 64.0).max(1e-300);
    let ratio = (0.5 / lo).powf(1.0 / panels as f64);
    let mut breaks = vec![0.0];
    let mut t = lo;
    for _ in 0..panels {
        breaks.push(t);
        t *= ratio;
    }
    breaks.push(0.5);
    if t0 > 0.0 && t0 < 0.5 {
        breaks.push(t0);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks
}

fn t0_of(x: &[f64], y: &[f64]) -> f64 {
    geometry(x, y).map(|g| g.t0).unwrap_or(1.0)
}

/// Integrand of the `t`-form at `(t, 1 − t)` for the pair `(x, x + h)`.
///
/// Working with the displacement `h` keeps `y − √(1−t)x = h + (1−√(1−t))x`
/// exact when `|h|` is far below the spacing of floats near `x`.
fn t_integrand(
    variant: RieszVariant,
    x: &[f64],
    h: &[f64],
    fam: &KernelFamily,
    t: f64,
    omt: f64,
    z: &mut [f64],
) -> f64 {
    if t <= 0.0 || omt <= 0.0 {
        return 0.0;
    }
    let d = x.len() as f64;
    let r = omt.sqrt();
    let one_minus_r = t / (1.0 + r);
    let u = x
        .iter()
        .zip(h)
        .map(|(p, q)| {
            let v = q + one_minus_r * p;
            v * v
        })
        .sum::<f64>()
        / t;
    let logw = -u - (0.5 * d + 1.0) * t.ln();
    if logw < -745.0 {
        return 0.0;
    }
    let st = t.sqrt();
    let psi = psi_split(fam.m, t, omt);
    let jac = match variant {
        RieszVariant::New => {
            // x − r y = (1 − r)x − r h
            for ((zi, p), q) in z.iter_mut().zip(x).zip(h) {
                *zi = (one_minus_r * p - r * q) / st;
            }
            1.0 / r
        }
        RieszVariant::Old => {
            for ((zi, p), q) in z.iter_mut().zip(x).zip(h) {
                *zi = (q + one_minus_r * p) / st;
            }
            omt.powf(0.5 * (fam.m - 2.0))
        }
    };
    0.5 * psi * jac * fam.eval(z) * logw.exp()
}

fn kernel_t(variant: RieszVariant, x: &[f64], h: &[f64], fam: &KernelFamily, cfg: &QuadratureConfig) -> QuadResult {
    let sep2: f64 = h.iter().map(|v| v * v).sum();
    let y: Vec<f64> = x.iter().zip(h).map(|(p, q)| p + q).collect();
    let t0 = t0_of(x, &y);
    let breaks = t_breaks(sep2, t0, cfg.t_panels);
    let mut z = vec![0.0; x.len()];
    // size of the integrand on each geometric panel, so that values that
    // cancel to nearly zero still meet an absolute tolerance
    let envelope = breaks
        .windows(2)
        .map(|w| {
            let t = 0.5 * (w[0] + w[1]);
            (t_integrand(variant, x, h, fam, t, 1.0 - t, &mut z) * (w[1] - w[0])).abs()
        })
        .fold(0.0, f64::max)
        .max((0.25 * t_integrand(variant, x, h, fam, 0.75, 0.25, &mut z)).abs())
        .max(
            (0.5 * t_integrand(
                variant,
                x,
                h,
                fam,
                t0.clamp(0.5, 0.99),
                1.0 - t0.clamp(0.5, 0.99),
                &mut z,
            ))
            .abs(),
        );
    let abs_tol = (1e-3 * cfg.tol * envelope).max(1e-300);
    let gk = GkOptions {
        abs_tol,
        rel_tol: cfg.tol,
        max_intervals: 4000,
    };
    let lower = gauss_kronrod_breaks(|t| t_integrand(variant, x, h, fam, t, 1.0 - t, &mut z), &breaks, &gk);
    // the peak of e^{−u} sits at t₀ with a width comparable to its distance
    // from the panel ends, so the upper half is graded geometrically around it
    let mut ubreaks = vec![0.5];
    if t0 > 0.5 && t0 < 1.0 {
        for k in 1..=4 {
            ubreaks.push(t0 - (t0 - 0.5) * 0.25f64.powi(k));
        }
        ubreaks.push(t0);
        for k in 1..=4 {
            ubreaks.push(t0 + (1.0 - t0) * 0.25f64.powi(5 - k));
        }
        ubreaks.push(t0 + 0.5 * (1.0 - t0));
    } else {
        ubreaks.push(0.75);
    }
    ubreaks.sort_by(f64::total_cmp);
    ubreaks.dedup();
    let split = *ubreaks.last().unwrap();
    let middle = gauss_kronrod_breaks(|t| t_integrand(variant, x, h, fam, t, 1.0 - t, &mut z), &ubreaks, &gk);
    let upper = match cfg.endpoint_map {
        EndpointMap::DoubleExponential => {
            let opts = TanhSinhOptions {
                abs_tol,
                rel_tol: cfg.tol,
                min_level: 4,
                max_level: 12,
            };
            tanh_sinh(
                |t, _, omt| t_integrand(variant, x, h, fam, t, omt, &mut z),
                split,
                1.0,
                &opts,
            )
        }
        EndpointMap::None => gauss_kronrod(|t| t_integrand(variant, x, h, fam, t, 1.0 - t, &mut z), split, 1.0, &gk),
    };
    combine(&[lower, middle, upper], cfg.tol)
}

/// Sum of pieces; converged when the total error meets the relative tolerance
/// (pieces may individually fail it when they are negligible).
fn combine(parts: &[QuadResult], tol: f64) -> QuadResult {
    let value: f64 = parts.iter().map(|p| p.value).sum();
    let error: f64 = parts.iter().map(|p| p.error).sum();
    let scale: f64 = parts.iter().map(|p| p.value.abs()).sum();
    QuadResult {
        value,
        error,
        evals: parts.iter().map(|p| p.evals).sum(),
        converged: parts.iter().all(|p| p.converged) || error <= 10.0 * tol * scale,
    }
}

fn r_integrand(variant: RieszVariant, x: &[f64], y: &[f64], fam: &KernelFamily, r: f64, z: &mut [f64]) -> f64 {
    if r <= 0.0 || r >= 1.0 {
        return 0.0;
    }
    let d = x.len() as f64;
    let s = (1.0 - r) * (1.0 + r);
    let e: f64 = x
        .iter()
        .zip(y)
        .map(|(p, q)| {
            let v = q - r * p;
            v * v
        })
        .sum::<f64>()
        / s;
    let logw = -e - (0.5 * d + 1.0) * s.ln();
    if logw < -745.0 {
        return 0.0;
    }
    let st = s.sqrt();
    let factor = ((-r.ln()) / s).powf(0.5 * (fam.m - 2.0));
    let lead = match variant {
        RieszVariant::New => {
            for ((zi, p), q) in z.iter_mut().zip(x).zip(y) {
                *zi = (p - r * q) / st;
            }
            1.0
        }
        RieszVariant::Old => {
            for ((zi, p), q) in z.iter_mut().zip(x).zip(y) {
                *zi = (q - r * p) / st;
            }
            r.powf(fam.m - 1.0)
        }
    };
    lead * factor * fam.eval(z) * logw.exp()
}

fn kernel_r(variant: RieszVariant, x: &[f64], y: &[f64], fam: &KernelFamily, cfg: &QuadratureConfig) -> QuadResult {
    let sep2: f64 = x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum();
    let tb = t_breaks(sep2, t0_of(x, y), cfg.t_panels);
    let mut rb: Vec<f64> = tb.iter().map(|t| (1.0 - t).sqrt()).collect();
    rb.reverse();
    let mut z = vec![0.0; x.len()];
    let gk = GkOptions {
        abs_tol: 1e-300,
        rel_tol: cfg.tol,
        max_intervals: 4000,
    };
    let upper = gauss_kronrod_breaks(|r| r_integrand(variant, x, y, fam, r, &mut z), &rb, &gk);
    let lower = tanh_sinh(
        |r, _, _| r_integrand(variant, x, y, fam, r, &mut z),
        0.0,
        rb[0],
        &TanhSinhOptions {
            abs_tol: 1e-300,
            rel_tol: cfg.tol,
            min_level: 4,
            max_level: 12,
        },
    );
    combine(&[lower, upper], cfg.tol)
}

/// `Ω(x′) = 2∫₀^∞ F(s x′) s^{d−1} e^{−s²} ds` for a unit vector `x′`.
pub fn omega(fam: &KernelFamily, direction: &[f64]) -> f64 {
    let d = direction.len() as i32;
    let mut z = vec![0.0; direction.len()];
    let q = gauss_kronrod_breaks(
        |s| {
            for (zi, w) in z.iter_mut().zip(direction) {
                *zi = s * w;
            }
            fam.eval(&z) * s.powi(d - 1) * (-s * s).exp()
        },
        &[0.0, 1.0, 2.0, 4.0, 8.0, 14.0],
        &GkOptions {
            abs_tol: 1e-15,
            rel_tol: 1e-13,
            max_intervals: 500,
        },
    );
    2.0 * q.value
}

/// `Ω(x/|x|) / |x|^d`, the homogeneous kernel of degree `−d`.
pub fn homogeneous_kernel(fam: &KernelFamily, x: &[f64]) -> Result<f64> {
    fam.check_dim(x.len())?;
    let r = norm(x);
    if r == 0.0 {
        return Err(Error::InvalidArgument("homogeneous kernel is singular at 0".into()));
    }
    let dir: Vec<f64> = x.iter().map(|v| v / r).collect();
    Ok(omega(fam, &dir) / r.powi(x.len() as i32))
}

/// `∫_{S^{d−1}} Ω dσ` with the sphere rule of the given resolution.
pub fn omega_sphere_integral(fam: &KernelFamily, dim: usize, resolution: usize) -> Result<f64> {
    fam.check_dim(dim)?;
    let rule = SphereRule::new(dim, resolution);
    Ok(rule
        .directions
        .iter()
        .zip(&rule.weights)
        .map(|(w, q)| q * omega(fam, w))
        .sum())
}

/// Coefficient `c_F` of the identity part: the operator defined by the
/// kernel equals `p.v. ∫ K f + c_F f(x)`, with
/// `c_F = −φ_m(0) ∫₀^∞ log r · r^{d−1} e^{−r²} ∫_{S^{d−1}} F(rω) dσ(ω) dr`.
///
/// It is the limit of the kernel integral over `|y − x| < ε` and vanishes
/// when `F` is odd.
pub fn identity_coefficient(fam: &KernelFamily, dim: usize, resolution: usize) -> Result<f64> {
    fam.check_dim(dim)?;
    let rule = SphereRule::new(dim, resolution);
    let phi0 = psi_split(fam.m, 0.0, 1.0);
    let mut z = vec![0.0; dim];
    let mut g = |r: f64| {
        let mut sum = 0.0;
        for (w, q) in rule.directions.iter().zip(&rule.weights) {
            for (zi, wi) in z.iter_mut().zip(w) {
                *zi = r * wi;
            }
            sum += q * fam.eval(&z);
        }
        r.ln() * r.powi(dim as i32 - 1) * (-r * r).exp() * sum
    };
    let near = tanh_sinh(
        |r, _, _| g(r),
        0.0,
        1.0,
        &TanhSinhOptions {
            abs_tol: 1e-15,
            rel_tol: 1e-13,
            min_level: 4,
            max_level: 12,
        },
    );
    let far = gauss_kronrod_breaks(
        &mut g,
        &[1.0, 2.0, 4.0, 8.0, 14.0],
        &GkOptions {
            abs_tol: 1e-15,
            rel_tol: 1e-13,
            max_intervals: 500,
        },
    );
    Ok(-phi0 * (near.value + far.value))
}

/// Function argument of the operator engines.
pub type TestFunction<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

#[derive(Debug, Clone, PartialEq)]
pub struct PvResult {
    pub value: f64,
    /// Part over the hyperbolic ball `B(x)`.
    pub local: f64,
    /// Part over `B(x)^c`, truncated at `truncation_radius`.
    pub global: f64,
    pub hyperbolic_radius: f64,
    /// Exclusion radii actually used.
    pub radii: Vec<f64>,
    /// Integrals over `ρ > radii[k]`.
    pub ladder: Vec<f64>,
    /// Integral over `ρ < radii.last()`.
    pub core: f64,
    /// `c_F f(x)`, the part of the operator not captured by the principal value.
    pub identity_term: f64,
    pub truncation_radius: f64,
    /// `∫_R^{2R} |A(ρ)| dρ` with one Gauss-Kronrod panel.
    pub tail_estimate: f64,
    pub quadrature_error: f64,
}

struct Polar<'a> {
    variant: RieszVariant,
    fam: &'a KernelFamily,
    f: TestFunction<'a>,
    x: &'a [f64],
    rule: SphereRule,
    cfg: &'a QuadratureConfig,
}

impl Polar<'_> {
    /// Radial integrand `ρ^{d−1} Σ_j w_j K(x, x + ρω_j) f(x + ρω_j)`.
    fn radial(&self, rho: f64, failures: &mut usize) -> f64 {
        let d = self.x.len();
        let mut y = vec![0.0; d];
        let mut h = vec![0.0; d];
        let mut sum = 0.0;
        for (w, q) in self.rule.directions.iter().zip(&self.rule.weights) {
            for (((yi, hi), xi), wi) in y.iter_mut().zip(h.iter_mut()).zip(self.x).zip(w) {
                *hi = rho * wi;
                *yi = xi + *hi;
            }
            let fv = (self.f)(&y);
            if fv == 0.0 {
                continue;
            }
            let k = kernel_t(self.variant, self.x, &h, self.fam, self.cfg);
            if !k.converged {
                *failures += 1;
            }
            sum += q * k.value * fv;
        }
        sum * rho.powi(d as i32 - 1)
    }

    /// `∫_0^ρ` after `ρ' = ρe^{−s}`, which turns the logarithmic behaviour at
    /// the centre into a smooth integrand; fixed Gauss-Legendre panels in `s`.
    fn core(&self, rho: f64, failures: &mut usize) -> QuadResult {
        let panels = [0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 24.0, 36.0];
        let rule = |n: usize, failures: &mut usize| {
            let (nodes, weights) = gauss_legendre(n);
            let mut total = 0.0;
            for w in panels.windows(2) {
                let (a, b) = (w[0], w[1]);
                for (t, wt) in nodes.iter().zip(&weights) {
                    let s = a + 0.5 * (b - a) * (t + 1.0);
                    let r = rho * (-s).exp();
                    total += 0.5 * (b - a) * wt * r * self.radial(r, failures);
                }
            }
            total
        };
        let fine = rule(16, failures);
        let coarse = rule(10, failures);
        QuadResult {
            value: fine,
            error: (fine - coarse).abs(),
            evals: 26 * (panels.len() - 1),
            converged: true,
        }
    }

    fn integrate(&self, breaks: &[f64], failures: &mut usize) -> QuadResult {
        gauss_kronrod_breaks(
            |r| self.radial(r, failures),
            breaks,
            &GkOptions {
                abs_tol: 1e-14,
                rel_tol: self.cfg.tol,
                max_intervals: 200,
            },
        )
    }
}

/// Principal value `p.v. ∫ K(x, y) f(y) dy` with `K = K̄_F` (new) or `K_F` (old).
pub fn pv_apply(
    variant: RieszVariant,
    fam: &KernelFamily,
    f: TestFunction<'_>,
    x: &[f64],
    cfg: &QuadratureConfig,
) -> Result<PvResult> {
    cfg.validate()?;
    let d = x.len();
    fam.check_dim(d)?;
    let polar = Polar {
        variant,
        fam,
        f,
        x,
        rule: SphereRule::new(d, cfg.angular_resolution),
        cfg,
    };
    let rh = hyperbolic_radius(x);
    let big_r = cfg.domain_truncation_radius.max(norm(x) + 6.0);
    let scale = (0.5 * rh / cfg.pv_radii[0]).min(1.0);
    let radii: Vec<f64> = cfg.pv_radii.iter().map(|r| r * scale).collect();
    let mut failures = 0;

    let mut gbreaks = vec![rh];
    while gbreaks.last().unwrap() * 2.0 < big_r {
        let next = gbreaks.last().unwrap() * 2.0;
        gbreaks.push(next);
    }
    gbreaks.push(big_r);
    let global = polar.integrate(&gbreaks, &mut failures);
    let mid = polar.integrate(&[radii[0], rh], &mut failures);
    let steps: Vec<QuadResult> = radii
        .windows(2)
        .map(|w| polar.integrate(&[w[1], w[0]], &mut failures))
        .collect();
    let core = polar.core(*radii.last().unwrap(), &mut failures);
    let tail = gauss_kronrod(
        |r| polar.radial(r, &mut failures).abs(),
        big_r,
        2.0 * big_r,
        &GkOptions {
            abs_tol: 0.0,
            rel_tol: 1.0,
            max_intervals: 1,
        },
    );

    let mut ladder = vec![global.value + mid.value];
    for s in &steps {
        ladder.push(ladder.last().unwrap() + s.value);
    }
    let value = ladder.last().unwrap() + core.value;
    let error = global.error + mid.error + core.error + steps.iter().map(|s| s.error).sum::<f64>();
    if failures > 0 {
        return Err(Error::NonConvergence(format!(
            "{failures} kernel evaluations did not converge during p.v. application"
        )));
    }
    // increments of a convergent ladder decay like ρ(1 + |log ρ|), possibly
    // through a sign change; a surviving 1/ρ^d singularity keeps them constant
    let floor = 100.0 * cfg.tol * (1.0 + value.abs());
    if let Some((last, rest)) = steps.split_last() {
        let prev = rest.iter().map(|s| s.value.abs()).fold(0.0, f64::max);
        if !rest.is_empty() && last.value.abs() > 0.5 * prev + floor {
            return Err(Error::PvNotCauchy {
                increment: last.value.abs(),
                tol: 0.5 * prev + floor,
            });
        }
    }
    Ok(PvResult {
        value,
        local: value - global.value,
        global: global.value,
        hyperbolic_radius: rh,
        radii,
        ladder,
        core: core.value,
        identity_term: identity_coefficient(fam, d, cfg.angular_resolution)? * f(x),
        truncation_radius: big_r,
        tail_estimate: tail.value,
        quadrature_error: error,
    })
}

impl PvResult {
    /// Value of the operator whose kernel was integrated.
    pub fn operator_value(&self) -> f64 {
        self.value + self.identity_term
    }
}

/// `(Lf(x), Gf(x))`.
pub fn local_global_split(
    variant: RieszVariant,
    fam: &KernelFamily,
    f: TestFunction<'_>,
    x: &[f64],
    cfg: &QuadratureConfig,
) -> Result<(f64, f64)> {
    let r = pv_apply(variant, fam, f, x, cfg)?;
    Ok((r.local, r.global))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheckRow {
    pub x: Vec<f64>,
    pub spectral: f64,
    pub kernel: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheck {
    pub variant: RieszVariant,
    pub alpha: MultiIndex,
    pub rows: Vec<CrossCheckRow>,
    pub max_delta: f64,
}

/// Apply `R_α`/`R*_α` to an expansion both spectrally and by kernel p.v. quadrature.
pub fn spectral_cross_check(
    variant: RieszVariant,
    alpha: &MultiIndex,
    f: &HermiteExpansion,
    points: &[Vec<f64>],
    cfg: &QuadratureConfig,
) -> Result<CrossCheck> {
    let fam = KernelFamily::riesz(alpha)?;
    let image = riesz(alpha, f, variant, CapPolicy::Raise)?;
    let fun = |y: &[f64]| synthesize(f, y).unwrap_or(f64::NAN);
    let rows = points
        .par_iter()
        .map(|x| {
            let kernel = pv_apply(variant, &fam, &fun, x, cfg)?.operator_value();
            Ok(CrossCheckRow {
                x: x.clone(),
                spectral: synthesize(&image, x)?,
                kernel,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_delta = rows.iter().map(|r| (r.spectral - r.kernel).abs()).fold(0.0, f64::max);
    Ok(CrossCheck {
        variant,
        alpha: alpha.clone(),
        rows,
        max_delta,
    })
}

/// `n` points with coordinates in `[−half, half]`, deterministic in `seed`.
pub fn interior_points(dim: usize, n: usize, half: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-half..half)).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub variant: RieszVariant,
    pub alpha: MultiIndex,
    pub point: Vec<f64>,
    pub closed_form: f64,
    pub fitted: f64,
    pub rel_error: f64,
}

/// Fit the constant in front of `H_α` so that the kernel operator reproduces
/// the spectral transform of `h_α` at `0.7·(1,…,1)/√d`.
pub fn calibration_check(variant: RieszVariant, alpha: &MultiIndex, cfg: &QuadratureConfig) -> Result<Calibration> {
    let d = alpha.dim();
    let point = vec![0.7 / (d as f64).sqrt(); d];
    let cap = 2 * alpha.order() + 1;
    let h = HermiteExpansion::basis(d, cap, alpha.clone())?;
    let spectral = synthesize(&riesz(alpha, &h, variant, CapPolicy::Raise)?, &point)?;
    let unit = KernelFamily::hermite_unscaled(alpha)?;
    let fun = |y: &[f64]| synthesize(&h, y).unwrap_or(f64::NAN);
    let k = pv_apply(variant, &unit, &fun, &point, cfg)?.operator_value();
    let fitted = spectral / k;
    let closed_form = riesz_constant(alpha);
    Ok(Calibration {
        variant,
        alpha: alpha.clone(),
        point,
        closed_form,
        fitted,
        rel_error: (fitted - closed_form).abs() / closed_form,
    })
}

/// `|T̄_F(f χ_I)(x)|` in d = 1 for the interval `I = [lo, hi] ∋ x`.
fn truncated_singular_1d(omega_pos: f64, omega_neg: f64, f: TestFunction<'_>, x: f64, lo: f64, hi: f64) -> f64 {
    let (left, right) = (x - lo, hi - x);
    let reach = left.max(right);
    if reach <= 0.0 {
        return 0.0;
    }
    let mut breaks = vec![0.0, left.min(right), reach];
    breaks.dedup();
    let q = gauss_kronrod_breaks(
        |r| {
            let plus = if r <= right { omega_neg * f(&[x + r]) } else { 0.0 };
            let minus = if r <= left { omega_pos * f(&[x - r]) } else { 0.0 };
            (plus + minus) / r
        },
        &breaks,
        &GkOptions {
            abs_tol: 1e-13,
            rel_tol: 1e-10,
            max_intervals: 500,
        },
    );
    q.value.abs()
}

/// Uncentered Hardy-Littlewood maximal function of `f χ_I` at `x ∈ I` (d = 1),
/// over intervals with endpoints on a uniform grid of `n` cells refined at `x`.
fn maximal_1d(f: TestFunction<'_>, x: f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let vals: Vec<f64> = (0..n).map(|k| f(&[lo + (k as f64 + 0.5) * h]).abs()).collect();
    let mut prefix = vec![0.0; n + 1];
    for k in 0..n {
        prefix[k + 1] = prefix[k] + vals[k] * h;
    }
    let ix = (((x - lo) / h).floor() as usize).min(n - 1);
    let mut best = f(&[x]).abs();
    for i in 0..=ix {
        for j in ix + 1..=n {
            let avg = (prefix[j] - prefix[i]) / ((j - i) as f64 * h);
            best = best.max(avg);
        }
    }
    best
}

/// Fitted `c` in `|Lf(x)| ≤ c Σ_{B∋x} (|T̄_F(fχ_B̂)(x)| + M(fχ_B̂)(x))` (d = 1).
///
/// The grid of the maximal function uses `grid` cells per dilate; the report
/// compares against `grid/2`.
pub fn local_domination_check(
    variant: RieszVariant,
    fam: &KernelFamily,
    f: TestFunction<'_>,
    xs: &[f64],
    family: &BallFamily,
    grid: usize,
    cfg: &QuadratureConfig,
) -> Result<CheckReport> {
    if family.dim != 1 {
        return Err(Error::InvalidArgument(
            "local domination is checked in d = 1 only".into(),
        ));
    }
    fam.check_dim(1)?;
    let (op, on) = (omega(fam, &[1.0]), omega(fam, &[-1.0]));
    let rows = xs
        .par_iter()
        .map(|&x| {
            let l = pv_apply(variant, fam, f, &[x], cfg)?.local.abs();
            let mut rhs = [0.0, 0.0];
            for b in family.balls.iter().filter(|b| b.ball.contains(&[x])) {
                let (lo, hi) = (b.ball.center[0] - b.dilate_radius, b.ball.center[0] + b.dilate_radius);
                let t = truncated_singular_1d(op, on, f, x, lo, hi);
                rhs[0] += t + maximal_1d(f, x, lo, hi, grid);
                rhs[1] += t + maximal_1d(f, x, lo, hi, (grid / 2).max(2));
            }
            Ok((l, rhs))
        })
        .collect::<Result<Vec<_>>>()?;
    let ratio = |k: usize| {
        rows.iter()
            .map(|(l, r)| {
                if *l == 0.0 {
                    0.0
                } else if r[k] == 0.0 {
                    f64::INFINITY
                } else {
                    l / r[k]
                }
            })
            .fold(0.0, f64::max)
    };
    let (full, half) = (ratio(0), ratio(1));
    let uncovered = xs.iter().filter(|x| !family.covers(&[**x])).count();
    Ok(CheckReport {
        name: "local_domination".into(),
        sample: format!("{} points, {} balls, grid {grid}", xs.len(), family.len()),
        fitted_constant: full,
        stability_delta: relative_change(full, half),
        samples: xs.len(),
        violations: uncovered,
        pass: uncovered == 0 && is_stable(full, half),
        notes: vec![format!("F = {}, grid {} constant {:.6e}", fam.label(), grid / 2, half)],
    })
}

/// `α_∞ = (1−ε)/2 − |1/p_∞ − (1−3ε)/2|`, after checking `0 < ε < 1/(2p′_∞) ∧ 1/d`.
pub fn alpha_infinity(p_inf: f64, eps: f64, dim: usize) -> Result<f64> {
    if !(p_inf > 1.0) {
        return Err(Error::InvalidArgument(format!("p_inf = {p_inf} must exceed 1")));
    }
    let p_conj = p_inf / (p_inf - 1.0);
    let bound = (1.0 / (2.0 * p_conj)).min(1.0 / dim as f64);
    if !(eps > 0.0 && eps < bound) {
        return Err(Error::InvalidArgument(format!(
            "eps = {eps} outside the admissible range (0, {bound})"
        )));
    }
    Ok(0.5 * (1.0 - eps) - (1.0 / p_inf - 0.5 * (1.0 - 3.0 * eps)).abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalBoundReport {
    pub alpha_inf: f64,
    /// `sup_x ∫ P(x,y) |f(y)| e^{−|y|²/p(y)} dy` over the sample.
    pub d_constant: f64,
    pub report: CheckReport,
}

/// Check `|Gf(x)| ≤ C [e^{ε|x|²}‖f‖_{p⁻,γ} + e^{|x|²/p(x)} ∫_{B^c(x)} P |f| e^{−|y|²/p(y)} dy]`.
#[allow(clippy::too_many_arguments)]
pub fn global_bound_check(
    variant: RieszVariant,
    fam: &KernelFamily,
    spec: &ExponentSpec,
    eps: f64,
    f: TestFunction<'_>,
    xs: &[Vec<f64>],
    cfg: &QuadratureConfig,
) -> Result<GlobalBoundReport> {
    let dim = spec.dim();
    fam.check_dim(dim)?;
    let p_inf = spec
        .p_inf()
        .ok_or_else(|| Error::InvalidArgument("global bound needs an exponent with p_inf".into()))?;
    let alpha_inf = alpha_infinity(p_inf, eps, dim)?;
    if !(alpha_inf > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha_inf = {alpha_inf} is not positive"
        )));
    }
    let n_axis = match dim {
        1 => 4000,
        2 => 300,
        _ => 60,
    };
    let gamma = MeasureHandle::gaussian(dim);
    let gf = GridFunction::on_box(&gamma, &BoxDomain::cube(dim, 10.0), n_axis, |y| f(y))?;
    let f_norm = classical_norm(&gf, spec.p_minus());
    let rule = SphereRule::new(dim, cfg.angular_resolution);
    let rows = xs
        .par_iter()
        .map(|x| {
            let g = pv_apply(variant, fam, f, x, cfg)?.global;
            let rh = hyperbolic_radius(x);
            let big_r = cfg.domain_truncation_radius.max(norm(x) + 6.0);
            let mut y = vec![0.0; dim];
            let j = gauss_kronrod_breaks(
                |rho| {
                    let mut s = 0.0;
                    for (w, q) in rule.directions.iter().zip(&rule.weights) {
                        for ((yi, xi), wi) in y.iter_mut().zip(x.iter()).zip(w) {
                            *yi = xi + rho * wi;
                        }
                        let fv = f(&y).abs();
                        if fv == 0.0 {
                            continue;
                        }
                        let plus: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
                        let sp = norm(&plus);
                        let p = sp.powi(dim as i32) * (-alpha_inf * rho * sp).exp();
                        let yy: f64 = y.iter().map(|v| v * v).sum();
                        s += q * p * fv * (-yy / spec.eval(&y)).exp();
                    }
                    s * rho.powi(dim as i32 - 1)
                },
                &[rh, 0.5 * (rh + big_r), big_r],
                &GkOptions {
                    abs_tol: 1e-14,
                    rel_tol: 1e-8,
                    max_intervals: 200,
                },
            )
            .value;
            let xx: f64 = x.iter().map(|v| v * v).sum();
            let rhs = (eps * xx).exp() * f_norm + (xx / spec.eval(x)).exp() * j;
            Ok((g.abs(), rhs, j))
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = |it: &mut dyn Iterator<Item = &(f64, f64, f64)>| {
        it.map(|(g, r, _)| if *g == 0.0 { 0.0 } else { g / r })
            .fold(0.0, f64::max)
    };
    let full = fit(&mut rows.iter());
    let half = fit(&mut rows.iter().step_by(2));
    let d_constant = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let pass = full.is_finite() && d_constant.is_finite();
    Ok(GlobalBoundReport {
        alpha_inf,
        d_constant,
        report: CheckReport {
            name: "global_bound".into(),
            sample: format!("{} points, eps {eps}", xs.len()),
            fitted_constant: full,
            stability_delta: relative_change(full, half),
            samples: xs.len(),
            violations: 0,
            pass,
            notes: vec![format!("alpha_inf {alpha_inf:.6}, D {d_constant:.6e}")],
        },
    })
}

/// Which inequality of the exponential kernel bounds is tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundCase {
    /// `⟨x, y⟩ ≤ 0`: `|K̄_F| ≤ C_ε e^{ε|x|² − |y|²}`.
    NonPositive,
    /// `⟨x, y⟩ > 0`: `|K̄_F| ≤ C_ε e^{−(1−ε)u₀} t₀^{−d/2} e^{ε(|x|² − |y|²)}`.
    Positive,
}

impl BoundCase {
    pub fn name(self) -> &'static str {
        match self {
            BoundCase::NonPositive => "b<=0",
            BoundCase::Positive => "b>0",
        }
    }

    fn admits(self, x: &[f64], y: &[f64]) -> bool {
        let b: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
        let ok = match self {
            BoundCase::NonPositive => b <= 0.0,
            BoundCase::Positive => b > 0.0,
        };
        ok && dist(x, y) >= hyperbolic_radius(x) && x.iter().chain(y).any(|v| *v != 0.0)
    }
}

/// Pairs `(x, y)` in a box with `y ∉ B(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalPairSampler {
    pub box_half: f64,
    pub seed: u64,
}

impl Default for GlobalPairSampler {
    fn default() -> Self {
        GlobalPairSampler {
            box_half: 4.0,
            seed: 11,
        }
    }
}

impl GlobalPairSampler {
    pub fn sample(&self, dim: usize, case: BoundCase, n: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (dim as u64) << 8 ^ case as u64);
        let h = self.box_half;
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let x: Vec<f64> = if rng.random_bool(0.2) {
                // near-origin stratum, where B(x) is largest
                random_direction(&mut rng, dim)
                    .iter()
                    .map(|v| v * rng.random_range(0.0..1.0))
                    .collect()
            } else {
                (0..dim).map(|_| rng.random_range(-h..h)).collect()
            };
            let y: Vec<f64> = (0..dim).map(|_| rng.random_range(-h..h)).collect();
            if case.admits(&x, &y) {
                out.push((x, y));
            }
        }
        out
    }
}

/// `log |K̄_F(x,y)| − log(bound)`; `None` when the kernel quadrature fails.
fn bound_log_ratio(
    fam: &KernelFamily,
    eps: f64,
    case: BoundCase,
    x: &[f64],
    y: &[f64],
    cfg: &QuadratureConfig,
) -> Option<f64> {
    let k = kernel_new(x, y, fam, cfg).ok()?.value.abs();
    let xx: f64 = x.iter().map(|v| v * v).sum();
    let yy: f64 = y.iter().map(|v| v * v).sum();
    let log_bound = match case {
        BoundCase::NonPositive => eps * xx - yy,
        BoundCase::Positive => {
            let g = geometry(x, y).ok()?;
            -(1.0 - eps) * g.u0 - 0.5 * x.len() as f64 * g.t0.ln() + eps * (xx - yy)
        }
    };
    Some(if k == 0.0 {
        f64::NEG_INFINITY
    } else {
        k.ln() - log_bound
    })
}

/// Coordinate pattern search on `(x, y)` maximizing the log ratio inside the case region.
fn refine_bound_pair(
    fam: &KernelFamily,
    eps: f64,
    case: BoundCase,
    sampler: &GlobalPairSampler,
    start: (Vec<f64>, Vec<f64>),
    start_val: f64,
    cfg: &QuadratureConfig,
) -> f64 {
    let d = start.0.len();
    let (mut x, mut y) = start;
    let mut best = start_val;
    let mut step = 0.25;
    let h = sampler.box_half;
    while step > 1e-3 {
        let mut improved = false;
        for k in 0..2 * d {
            for sgn in [1.0, -1.0] {
                let (mut x2, mut y2) = (x.clone(), y.clone());
                let c = if k < d { &mut x2[k] } else { &mut y2[k - d] };
                *c += sgn * step;
                if c.abs() > h || !case.admits(&x2, &y2) {
                    continue;
                }
                if let Some(v) = bound_log_ratio(fam, eps, case, &x2, &y2, cfg) {
                    if v > best {
                        best = v;
                        x = x2;
                        y = y2;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

fn bound_fit(
    fam: &KernelFamily,
    eps: f64,
    case: BoundCase,
    sampler: &GlobalPairSampler,
    pairs: &[(Vec<f64>, Vec<f64>)],
    cfg: &QuadratureConfig,
) -> (f64, usize) {
    let vals: Vec<Option<f64>> = pairs
        .par_iter()
        .map(|(x, y)| bound_log_ratio(fam, eps, case, x, y, cfg))
        .collect();
    let failures = vals.iter().filter(|v| v.is_none()).count();
    let mut order: Vec<(usize, f64)> = vals.iter().enumerate().filter_map(|(i, v)| v.map(|v| (i, v))).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1));
    let refined = order
        .par_iter()
        .take(8)
        .map(|&(i, v)| refine_bound_pair(fam, eps, case, sampler, pairs[i].clone(), v, cfg))
        .reduce(|| f64::NEG_INFINITY, f64::max);
    let top = order.first().map(|o| o.1).unwrap_or(f64::NEG_INFINITY);
    (top.max(refined).exp(), failures)
}

/// Fitted `C_ε` of the exponential kernel bound over `n` and `2n` global-region pairs.
pub fn boundsexp_check(
    fam: &KernelFamily,
    eps: f64,
    case: BoundCase,
    dim: usize,
    sampler: &GlobalPairSampler,
    n: usize,
    cfg: &QuadratureConfig,
) -> Result<CheckReport> {
    fam.check_dim(dim)?;
    let limit = match case {
        BoundCase::NonPositive => 1.0,
        BoundCase::Positive => 1.0 / dim as f64,
    };
    if !(eps > 0.0 && eps < limit) {
        return Err(Error::InvalidArgument(format!(
            "eps = {eps} outside (0, {limit}) for case {}",
            case.name()
        )));
    }
    let pairs = sampler.sample(dim, case, 2 * n);
    let mut oracle_misses = 0;
    if case == BoundCase::Positive {
        for (x, y) in pairs.iter().take(16) {
            let g = geometry(x, y)?;
            let (_, umin) = g.argmin_u();
            if (umin - g.u0).abs() > 1e-8 * (1.0 + g.u0.abs()) {
                oracle_misses += 1;
            }
        }
    }
    let (half, f1) = bound_fit(fam, eps, case, sampler, &pairs[..n], cfg);
    let (full, f2) = bound_fit(fam, eps, case, sampler, &pairs, cfg);
    Ok(CheckReport {
        name: format!("boundsexp {}", case.name()),
        sample: format!("{} pairs, d {dim}, m {}, eps {eps}", 2 * n, fam.m),
        fitted_constant: full,
        stability_delta: relative_change(full, half),
        samples: 2 * n,
        violations: oracle_misses,
        pass: oracle_misses == 0 && is_stable(full, half),
        notes: vec![
            format!("F = {}, constant over {n} pairs {half:.6e}", fam.label()),
            format!("kernel quadrature failures: {}", f1 + f2),
        ],
    })
}

/// Kernel values at the given pairs as a columnar table.
pub fn kernel_table(
    variant: RieszVariant,
    fam: &KernelFamily,
    pairs: &[(Vec<f64>, Vec<f64>)],
    cfg: &QuadratureConfig,
) -> Result<String> {
    use std::fmt::Write;
    let dim = pairs.first().map(|p| p.0.len()).unwrap_or(1);
    let mut out = String::new();
    for k in 0..dim {
        let _ = write!(out, "x{k}\t");
    }
    for k in 0..dim {
        let _ = write!(out, "y{k}\t");
    }
    out.push_str("kernel\terror\n");
    let vals = pairs
        .par_iter()
        .map(|(x, y)| kernel(variant, x, y, fam, cfg))
        .collect::<Result<Vec<_>>>()?;
    for ((x, y), k) in pairs.iter().zip(vals) {
        for v in x.iter().chain(y) {
            let _ = write!(out, "{v:.17e}\t");
        }
        let _ = writeln!(out, "{:.17e}\t{:.3e}", k.value, k.error);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn alpha(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    #[test]
    fn psi_phi_values() {
        for t in [0.0, 0.1, 0.5, 0.9] {
            assert_eq!(psi_phi(2.0, t).unwrap().0, 1.0);
        }
        assert!((psi_phi(4.0, 0.0).unwrap().1 - 0.5).abs() < 1e-15);
        assert!((psi_phi(1.0, 1e-12).unwrap().1 - 2f64.sqrt()).abs() < 1e-10);
        assert!(psi_phi(3.0, 1.0).is_err());
    }

    #[test]
    fn phi_modulus_near_zero() {
        // |φ_m(t) − φ_m(0)| ≤ C t/(1−t): fitted on two grids
        let fit = |n: usize| {
            (1..=n)
                .map(|k| 0.9 * k as f64 / n as f64)
                .map(|t| {
                    let (_, p) = psi_phi(3.0, t).unwrap();
                    let p0 = psi_phi(3.0, 0.0).unwrap().1;
                    (p - p0).abs() / (t / (1.0 - t))
                })
                .fold(0.0, f64::max)
        };
        let (a, b) = (fit(500), fit(1000));
        assert!(a.is_finite() && relative_change(b, a) < 0.01);
    }

    #[test]
    fn geometry_examples() {
        let g = geometry(&[2.0, 0.0], &[3.0, 0.0]).unwrap();
        assert!((g.u0 - 5.0).abs() < 1e-14);
        assert!((g.u(g.t0) - 5.0).abs() < 1e-12);
        let g = geometry(&[1.0, 0.5], &[-1.0, 1.0]).unwrap();
        assert_eq!(g.t0, 1.0);
        assert_eq!(g.u0, 2.0);
        assert!((g.ubar(0.3) - g.u(0.3) - (1.25 - 2.0)).abs() < 1e-12);
        assert!(geometry(&[0.0], &[0.0]).is_err());
    }

    #[test]
    fn geometry_matches_golden_section() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let x: Vec<f64> = (0..2).map(|_| rng.random_range(-3.0..3.0)).collect();
            let y: Vec<f64> = (0..2).map(|_| rng.random_range(-3.0..3.0)).collect();
            let g = geometry(&x, &y).unwrap();
            let (t, u) = g.argmin_u();
            assert!((u - g.u0).abs() < 1e-8 * (1.0 + g.u0), "{x:?} {y:?}: {u} vs {}", g.u0);
            if g.b > 0.0 {
                assert!((t - g.t0).abs() < 1e-5, "{t} vs {}", g.t0);
            }
        }
    }

    #[test]
    fn r_and_t_forms_agree() {
        let cfg = QuadratureConfig::default();
        let fam2 = KernelFamily::riesz(&alpha(&[2, 1])).unwrap();
        let fam1 = KernelFamily::riesz(&alpha(&[1])).unwrap();
        let cases: [(&KernelFamily, Vec<f64>, Vec<f64>); 4] = [
            (&fam1, vec![0.3], vec![1.1]),
            (&fam1, vec![-2.0], vec![0.5]),
            (&fam2, vec![0.3, -0.2], vec![0.8, 0.4]),
            (&fam2, vec![1.5, 1.0], vec![-0.5, 2.0]),
        ];
        for (fam, x, y) in cases {
            for v in [RieszVariant::New, RieszVariant::Old] {
                let a = kernel(v, &x, &y, fam, &cfg).unwrap().value;
                let b = kernel_r_form(v, &x, &y, fam, &cfg).unwrap().value;
                assert!(
                    (a - b).abs() <= 2.0 * cfg.tol * a.abs().max(1e-300) + 1e-300,
                    "{v:?} {x:?} {y:?}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn panel_doubling_self_convergence() {
        let cfg = QuadratureConfig::default();
        let fine = cfg.refined();
        let fam = KernelFamily::riesz(&alpha(&[1, 1])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut n = 0;
        while n < 20 {
            let x: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
            let y: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
            if dist(&x, &y) < 0.2 {
                continue;
            }
            n += 1;
            for v in [RieszVariant::New, RieszVariant::Old] {
                let a = kernel(v, &x, &y, &fam, &cfg).unwrap().value;
                let b = kernel(v, &x, &y, &fam, &fine).unwrap().value;
                assert!((a - b).abs() <= cfg.tol * a.abs(), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn odd_f_flips_sign_under_reflection() {
        let cfg = QuadratureConfig::default();
        let fam = KernelFamily::registered(RegisteredFunction::SinX1, 1.0).unwrap();
        let (x, y) = (vec![0.4, -0.3], vec![1.2, 0.9]);
        let mx: Vec<f64> = x.iter().map(|v| -v).collect();
        let my: Vec<f64> = y.iter().map(|v| -v).collect();
        let a = kernel_new(&x, &y, &fam, &cfg).unwrap().value;
        let b = kernel_new(&mx, &my, &fam, &cfg).unwrap().value;
        assert!((a + b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn diagonal_rejected_and_flagged() {
        let cfg = QuadratureConfig::default();
        let fam = KernelFamily::riesz(&alpha(&[1])).unwrap();
        assert!(kernel_new(&[0.5], &[0.5], &fam, &cfg).is_err());
        assert!(kernel_new(&[0.5], &[0.5 + 1e-7], &fam, &cfg).unwrap().near_singular);
    }

    #[test]
    fn near_diagonal_limit_is_homogeneous_kernel() {
        // ρ^d K̄(x, x + ρω) → ½ φ_m(0) Ω(−ω), K(x, x + ρω) → ½ φ_m(0) Ω(ω)
        let cfg = QuadratureConfig::default();
        let fam = KernelFamily::riesz(&alpha(&[2, 1])).unwrap();
        let x = [0.3, -0.4];
        let w = [0.6, 0.8];
        let rho = 1e-4;
        let y = [x[0] + rho * w[0], x[1] + rho * w[1]];
        let phi0 = psi_phi(fam.m, 0.0).unwrap().1;
        let new = kernel_new(&x, &y, &fam, &cfg).unwrap().value * rho * rho;
        let old = kernel_old(&x, &y, &fam, &cfg).unwrap().value * rho * rho;
        let on = 0.5 * phi0 * omega(&fam, &[-0.6, -0.8]);
        let op = 0.5 * phi0 * omega(&fam, &w);
        assert!((new - on).abs() < 1e-3 * on.abs(), "{new} vs {on}");
        assert!((old - op).abs() < 1e-3 * op.abs(), "{old} vs {op}");
    }

    #[test]
    fn homogeneous_kernel_properties() {
        let fam = KernelFamily::riesz(&alpha(&[1, 2])).unwrap();
        let x = [0.3, -0.7];
        let a = homogeneous_kernel(&fam, &x).unwrap();
        let b = homogeneous_kernel(&fam, &[0.6, -1.4]).unwrap();
        assert!((b - a / 4.0).abs() <= 1e-12 * a.abs());
        let f1 = KernelFamily::riesz(&alpha(&[3])).unwrap();
        assert!((omega(&f1, &[1.0]) + omega(&f1, &[-1.0])).abs() < 1e-14);
        for fam in [
            KernelFamily::riesz(&alpha(&[1, 1])).unwrap(),
            KernelFamily::riesz(&alpha(&[2, 0, 0])).unwrap(),
            KernelFamily::registered(RegisteredFunction::CosX1Centered, 2.0).unwrap(),
        ] {
            let d = fam.dim().unwrap_or(2);
            let s = omega_sphere_integral(&fam, d, 32).unwrap();
            assert!(s.abs() < 1e-10, "{}: {s}", fam.label());
        }
    }

    #[test]
    fn gaussian_mean_and_growth() {
        for fam in [
            KernelFamily::riesz(&alpha(&[1, 2])).unwrap(),
            KernelFamily::registered(RegisteredFunction::SinX1, 1.0).unwrap(),
            KernelFamily::registered(RegisteredFunction::CosX1Centered, 1.0).unwrap(),
        ] {
            assert!(fam.gaussian_mean(2).unwrap().abs() < 1e-12, "{}", fam.label());
            assert!(fam.growth_check(2, 0.05).unwrap().pass);
        }
        let grow = KernelFamily::registered(RegisteredFunction::GrowingX1, 1.0).unwrap();
        assert!(grow.gaussian_mean(1).unwrap().abs() < 1e-12);
        assert!(!grow.growth_check(1, 0.05).unwrap().pass);
        assert!(grow.growth_check(1, 0.2).unwrap().pass);
    }

    #[test]
    fn pv_of_zero_is_zero() {
        let cfg = QuadratureConfig::default();
        let fam = KernelFamily::riesz(&alpha(&[1])).unwrap();
        let r = pv_apply(RieszVariant::New, &fam, &|_| 0.0, &[0.4], &cfg).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn pv_matches_spectral_d1() {
        let cfg = QuadratureConfig::default();
        let pts = interior_points(1, 10, 2.0, 1);
        for v in [RieszVariant::New, RieszVariant::Old] {
            for b in 1..=4u32 {
                let h = HermiteExpansion::basis(1, 12, alpha(&[b])).unwrap();
                let c = spectral_cross_check(v, &alpha(&[1]), &h, &pts, &cfg).unwrap();
                assert!(c.max_delta < 5e-3, "{v:?} beta {b}: {}", c.max_delta);
            }
        }
        let h = HermiteExpansion::basis(1, 12, alpha(&[3])).unwrap();
        let c = spectral_cross_check(RieszVariant::New, &alpha(&[2]), &h, &pts, &cfg).unwrap();
        assert!(c.max_delta < 5e-3, "second order: {}", c.max_delta);
    }

    #[test]
    fn pv_exclusion_radius_independence() {
        let cfg = QuadratureConfig::default();
        let mut finer = cfg.clone();
        finer.pv_radii.push(finer.pv_radii.last().unwrap() / 2.0);
        let fam = KernelFamily::riesz(&alpha(&[1])).unwrap();
        let f = |y: &[f64]| (-(y[0] - 0.2).powi(2)).exp();
        let a = pv_apply(RieszVariant::New, &fam, &f, &[0.5], &cfg).unwrap();
        let b = pv_apply(RieszVariant::New, &fam, &f, &[0.5], &finer).unwrap();
        assert!((a.value - b.value).abs() < 10.0 * cfg.tol, "{} vs {}", a.value, b.value);
    }

    #[test]
    fn split_support_cases() {
        let cfg = QuadratureConfig::default();
        let fam = KernelFamily::riesz(&alpha(&[1])).unwrap();
        let x = [2.0];
        // B(x) has radius 1/2 here
        let inside = |y: &[f64]| {
            if (y[0] - 2.0).abs() < 0.5 {
                (1.0 - 4.0 * (y[0] - 2.0).powi(2)).powi(3)
            } else {
                0.0
            }
        };
        let outside = |y: &[f64]| {
            if (y[0] - 2.0).abs() > 0.5 {
                (-y[0] * y[0]).exp()
            } else {
                0.0
            }
        };
        let (l, g) = local_global_split(RieszVariant::New, &fam, &inside, &x, &cfg).unwrap();
        assert_eq!(g, 0.0);
        assert!(l != 0.0);
        let (l, g) = local_global_split(RieszVariant::New, &fam, &outside, &x, &cfg).unwrap();
        assert_eq!(l, 0.0);
        assert!(g != 0.0);
    }

    #[test]
    fn calibration_reproduces_closed_form() {
        let cfg = QuadratureConfig::default();
        for v in [RieszVariant::New, RieszVariant::Old] {
            for a in [alpha(&[1]), alpha(&[2]), alpha(&[1, 1])] {
                let c = calibration_check(v, &a, &cfg).unwrap();
                assert!(c.rel_error < 1e-3, "{v:?} {a:?}: {} vs {}", c.fitted, c.closed_form);
            }
        }
    }

    #[test]
    fn identity_term_vanishes_for_odd_f() {
        for a in [alpha(&[1]), alpha(&[3]), alpha(&[1, 1]), alpha(&[2, 1])] {
            let fam = KernelFamily::riesz(&a).unwrap();
            assert!(identity_coefficient(&fam, a.dim(), 32).unwrap().abs() < 1e-14);
        }
        let even = KernelFamily::riesz(&alpha(&[2])).unwrap();
        assert!(identity_coefficient(&even, 1, 32).unwrap().abs() > 1e-3);
    }

    #[test]
    fn alpha_infinity_range() {
        assert!((alpha_infinity(2.0, 1e-9, 2).unwrap() - 0.5).abs() < 1e-8);
        assert!(alpha_infinity(2.0, 0.24, 2).is_ok());
        assert!(alpha_infinity(2.0, 0.26, 2).is_err());
        assert!(alpha_infinity(2.0, 0.0, 1).is_err());
    }

    #[test]
    fn boundsexp_small_sample_is_finite() {
        let cfg = QuadratureConfig::default();
        let fam = KernelFamily::riesz(&alpha(&[1])).unwrap();
        for case in [BoundCase::NonPositive, BoundCase::Positive] {
            let r = boundsexp_check(&fam, 0.05, case, 1, &GlobalPairSampler::default(), 100, &cfg).unwrap();
            assert!(r.fitted_constant.is_finite() && r.fitted_constant > 0.0);
            assert_eq!(r.violations, 0);
        }
    }

    #[test]
    fn local_domination_zero_and_bump() {
        let cfg = QuadratureConfig::default();
        let fam = KernelFamily::riesz(&alpha(&[1])).unwrap();
        let family = crate::gauss::admissible_ball_family(&BoxDomain::cube(1, 4.0), 6);
        let xs = [-1.5, -0.3, 0.2, 0.9, 2.5];
        let zero = local_domination_check(RieszVariant::New, &fam, &|_| 0.0, &xs, &family, 64, &cfg).unwrap();
        assert_eq!(zero.fitted_constant, 0.0);
        let bump = |y: &[f64]| (-4.0 * (y[0] - 0.5).powi(2)).exp();
        let r = local_domination_check(RieszVariant::New, &fam, &bump, &xs, &family, 256, &cfg).unwrap();
        assert!(r.pass, "{r:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn homogeneity(x0 in -3.0f64..3.0, x1 in -3.0f64..3.0, lam in 0.1f64..10.0) {
            prop_assume!(x0.abs() + x1.abs() > 1e-3);
            let fam = KernelFamily::riesz(&MultiIndex(vec![1, 1])).unwrap();
            let a = homogeneous_kernel(&fam, &[x0, x1]).unwrap();
            let b = homogeneous_kernel(&fam, &[lam * x0, lam * x1]).unwrap();
            prop_assert!((b * lam * lam - a).abs() <= 1e-12 * a.abs().max(1e-300));
        }

        #[test]
        fn ubar_identity(x0 in -3.0f64..3.0, y0 in -3.0f64..3.0, t in 0.01f64..1.0) {
            prop_assume!(x0 != 0.0 || y0 != 0.0);
            let g = geometry(&[x0], &[y0]).unwrap();
            let lhs = g.ubar(t);
            let rhs = g.u(t) + x0 * x0 - y0 * y0;
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
            prop_assert!(g.u(t) >= g.u0 - 1e-10 * (1.0 + g.u0));
        }
    }
}
