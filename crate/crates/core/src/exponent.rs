//! Variable exponents `p(·)` given in closed form.
//!
//! Every kind has an exact description of its range on balls and on exterior
//! regions `{|y| >= r}`, which the class checks in [`crate::classes`] use in
//! place of point sampling.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::{norm, Ball};

/// Closed forms available for `p(·)` (before clipping).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ExponentKind {
    Constant {
        p: f64,
    },
    /// `p_∞ + c/|x|²`.
    #[serde(rename = "p_inf_plus_inverse_square")]
    InverseSquare {
        p_inf: f64,
        c: f64,
    },
    /// `p_∞ + c/(shift + |x|)^power`.
    #[serde(rename = "p_inf_plus_inverse_power")]
    InversePower {
        p_inf: f64,
        c: f64,
        power: f64,
        #[serde(default)]
        shift: f64,
    },
    /// `p_∞ + c/log(e + |x|)`.
    #[serde(rename = "p_inf_plus_inverse_log")]
    InverseLog {
        p_inf: f64,
        c: f64,
    },
    /// Piecewise linear in `|x|` through `(radii[i], values[i])`, constant
    /// outside the table.
    RadialTable {
        radii: Vec<f64>,
        values: Vec<f64>,
    },
    /// `high` where `x[axis] >= offset`, `low` elsewhere.
    StepJump {
        axis: usize,
        offset: f64,
        low: f64,
        high: f64,
    },
    /// Pointwise conjugate `p/(p-1)` of another exponent.
    Conjugate {
        inner: Box<ExponentSpec>,
    },
}

/// A variable exponent: closed form, clip range and dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRecord", into = "SpecRecord")]
pub struct ExponentSpec {
    kind: ExponentKind,
    clip: [f64; 2],
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct SpecRecord {
    #[serde(flatten)]
    kind: ExponentKind,
    clip_range: [f64; 2],
    dim: usize,
}

impl From<ExponentSpec> for SpecRecord {
    fn from(s: ExponentSpec) -> Self {
        SpecRecord {
            kind: s.kind,
            clip_range: s.clip,
            dim: s.dim,
        }
    }
}

impl TryFrom<SpecRecord> for ExponentSpec {
    type Error = Error;
    fn try_from(r: SpecRecord) -> Result<Self> {
        ExponentSpec::new(r.kind, r.clip_range, r.dim)
    }
}

/// `p' = p/(p-1)`, with `1' = ∞`.
pub fn conj(p: f64) -> f64 {
    if p <= 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

impl ExponentSpec {
    pub fn new(kind: ExponentKind, clip: [f64; 2], dim: usize) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if dim == 0 {
            return bad("dimension must be positive".into());
        }
        let [lo, hi] = clip;
        if !(lo >= 1.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("clip range [{lo}, {hi}] must satisfy 1 <= lo <= hi < inf"));
        }
        match &kind {
            ExponentKind::Constant { p } if !p.is_finite() => return bad("constant must be finite".into()),
            ExponentKind::InverseSquare { p_inf, c } | ExponentKind::InverseLog { p_inf, c }
                if !p_inf.is_finite() || !c.is_finite() =>
            {
                return bad("parameters must be finite".into())
            }
            ExponentKind::InversePower { power, shift, .. } if !(*power > 0.0) || !(*shift >= 0.0) => {
                return bad("power must be positive and shift nonnegative".into())
            }
            ExponentKind::RadialTable { radii, values } => {
                if radii.is_empty() || radii.len() != values.len() {
                    return bad("radial table needs matching nonempty radii and values".into());
                }
                if radii[0] < 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("table radii must be nonnegative and increasing".into());
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return bad("table values must be finite".into());
                }
            }
            ExponentKind::StepJump { axis, .. } if *axis >= dim => {
                return bad(format!("step axis {axis} out of range for dimension {dim}"))
            }
            ExponentKind::Conjugate { inner } if inner.dim != dim => {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: inner.dim,
                })
            }
            _ => {}
        }
        Ok(ExponentSpec { kind, clip, dim })
    }

    pub fn constant(p: f64, dim: usize) -> Result<Self> {
        Self::new(ExponentKind::Constant { p }, [p, p], dim)
    }

    pub fn kind(&self) -> &ExponentKind {
        &self.kind
    }

    pub fn clip_range(&self) -> [f64; 2] {
        self.clip
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ExponentKind::Constant { .. } => "constant",
            ExponentKind::InverseSquare { .. } => "p_inf_plus_inverse_square",
            ExponentKind::InversePower { .. } => "p_inf_plus_inverse_power",
            ExponentKind::InverseLog { .. } => "p_inf_plus_inverse_log",
            ExponentKind::RadialTable { .. } => "radial_table",
            ExponentKind::StepJump { .. } => "step_jump",
            ExponentKind::Conjugate { .. } => "conjugate",
        }
    }

    fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.clip[0], self.clip[1])
    }

    /// Unclipped radial profile `g(r)`; `None` for non-radial kinds.
    fn radial(&self, r: f64) -> Option<f64> {
        let inverse = |p_inf: f64, c: f64, t: f64| {
            if c == 0.0 {
                p_inf
            } else if t == 0.0 {
                c.signum() * f64::INFINITY
            } else {
                p_inf + c / t
            }
        };
        Some(match &self.kind {
            ExponentKind::Constant { p } => *p,
            ExponentKind::InverseSquare { p_inf, c } => inverse(*p_inf, *c, r * r),
            ExponentKind::InversePower { p_inf, c, power, shift } => inverse(*p_inf, *c, (shift + r).powf(*power)),
            ExponentKind::InverseLog { p_inf, c } => p_inf + c / (E + r).ln(),
            ExponentKind::RadialTable { radii, values } => table_value(radii, values, r),
            _ => return None,
        })
    }

    /// `g(∞)` for radial kinds.
    fn radial_limit(&self) -> Option<f64> {
        match &self.kind {
            ExponentKind::Constant { p } => Some(*p),
            ExponentKind::InverseSquare { p_inf, .. }
            | ExponentKind::InversePower { p_inf, .. }
            | ExponentKind::InverseLog { p_inf, .. } => Some(*p_inf),
            ExponentKind::RadialTable { values, .. } => values.last().copied(),
            _ => None,
        }
    }

    /// `p(x)`, always inside the clip range.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            ExponentKind::StepJump {
                axis,
                offset,
                low,
                high,
            } => self.clamp(if x[*axis] >= *offset { *high } else { *low }),
            ExponentKind::Conjugate { inner } => self.clamp(conj(inner.eval(x))),
            _ => self.clamp(self.radial(norm(x)).expect("radial kind")),
        }
    }

    /// Clipped range of a radial profile over `r ∈ [r0, r1]` (`r1` may be ∞).
    fn radial_range(&self, r0: f64, r1: f64) -> (f64, f64) {
        let g1 = if r1.is_infinite() {
            self.radial_limit().expect("radial kind")
        } else {
            self.radial(r1).expect("radial kind")
        };
        let mut lo = self.radial(r0).expect("radial kind").min(g1);
        let mut hi = self.radial(r0).expect("radial kind").max(g1);
        if let ExponentKind::RadialTable { radii, values } = &self.kind {
            for (r, v) in radii.iter().zip(values) {
                if *r > r0 && *r < r1 {
                    lo = lo.min(*v);
                    hi = hi.max(*v);
                }
            }
        }
        (self.clamp(lo), self.clamp(hi))
    }

    /// `(p⁻_B, p⁺_B)`: exact infimum and supremum of `p` on the closed ball.
    pub fn ball_range(&self, ball: &Ball) -> (f64, f64) {
        match &self.kind {
            ExponentKind::StepJump {
                axis,
                offset,
                low,
                high,
            } => {
                let c = ball.center[*axis];
                let has_high = c + ball.radius >= *offset;
                let has_low = c - ball.radius < *offset;
                let vals: Vec<f64> = [(has_low, *low), (has_high, *high)]
                    .iter()
                    .filter(|(present, _)| *present)
                    .map(|(_, v)| self.clamp(*v))
                    .collect();
                min_max(&vals)
            }
            ExponentKind::Conjugate { inner } => {
                let (lo, hi) = inner.ball_range(ball);
                (self.clamp(conj(hi)), self.clamp(conj(lo)))
            }
            _ => {
                let c = norm(&ball.center);
                self.radial_range((c - ball.radius).max(0.0), c + ball.radius)
            }
        }
    }

    /// `p⁺_B - p⁻_B`.
    pub fn oscillation(&self, ball: &Ball) -> f64 {
        let (lo, hi) = self.ball_range(ball);
        hi - lo
    }

    /// Range of `p` over the exterior region `{|y| >= r}`.
    pub fn exterior_range(&self, r: f64) -> (f64, f64) {
        match &self.kind {
            ExponentKind::StepJump { low, high, .. } => min_max(&[self.clamp(*low), self.clamp(*high)]),
            ExponentKind::Conjugate { inner } => {
                let (lo, hi) = inner.exterior_range(r);
                (self.clamp(conj(hi)), self.clamp(conj(lo)))
            }
            _ => self.radial_range(r.max(0.0), f64::INFINITY),
        }
    }

    /// `p⁻ = inf p`.
    pub fn p_minus(&self) -> f64 {
        self.exterior_range(0.0).0
    }

    /// `p⁺ = sup p`.
    pub fn p_plus(&self) -> f64 {
        self.exterior_range(0.0).1
    }

    /// `p(x) - p_∞`, evaluated without cancellation where the closed form
    /// allows it. `None` when there is no `p_∞`.
    pub fn inf_deviation(&self, x: &[f64]) -> Option<f64> {
        let p_inf = self.p_inf()?;
        let p = self.eval(x);
        let inside = p > self.clip[0] && p < self.clip[1];
        let r = norm(x);
        Some(match &self.kind {
            ExponentKind::InverseSquare { c, .. } if inside => c / (r * r),
            ExponentKind::InversePower { c, power, shift, .. } if inside => c / (shift + r).powf(*power),
            ExponentKind::InverseLog { c, .. } if inside => c / (E + r).ln(),
            ExponentKind::Conjugate { inner } => {
                let d = inner.inf_deviation(x)?;
                let q = inner.p_inf()?;
                let pi = inner.eval(x);
                let raw = -d / ((pi - 1.0) * (q - 1.0));
                if conj(pi) > self.clip[0] && conj(pi) < self.clip[1] {
                    raw
                } else {
                    p - p_inf
                }
            }
            _ => p - p_inf,
        })
    }

    /// `sup_{|y| >= |x|} |p(x) - p(y)|`, without cancellation for the
    /// monotone closed forms.
    pub fn exterior_deviation(&self, x: &[f64]) -> f64 {
        let monotone = matches!(
            &self.kind,
            ExponentKind::Constant { .. }
                | ExponentKind::InverseSquare { .. }
                | ExponentKind::InversePower { .. }
                | ExponentKind::InverseLog { .. }
        ) || matches!(&self.kind, ExponentKind::Conjugate { inner } if !matches!(inner.kind, ExponentKind::RadialTable { .. } | ExponentKind::StepJump { .. } | ExponentKind::Conjugate { .. }));
        if monotone {
            if let Some(d) = self.inf_deviation(x) {
                return d.abs();
            }
        }
        let p = self.eval(x);
        let (lo, hi) = self.exterior_range(norm(x));
        (p - lo).max(hi - p)
    }

    /// The limit at infinity, when the closed form has one that the clip
    /// range leaves untouched.
    pub fn p_inf(&self) -> Option<f64> {
        match &self.kind {
            ExponentKind::StepJump { .. } => None,
            ExponentKind::Conjugate { inner } => inner.p_inf().map(conj),
            ExponentKind::RadialTable { .. } => self.radial_limit().map(|v| self.clamp(v)),
            _ => {
                let v = self.radial_limit()?;
                (v >= self.clip[0] && v <= self.clip[1]).then_some(v)
            }
        }
    }
}

fn min_max(vals: &[f64]) -> (f64, f64) {
    vals.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)))
}

fn table_value(radii: &[f64], values: &[f64], r: f64) -> f64 {
    if r <= radii[0] {
        return values[0];
    }
    for k in 1..radii.len() {
        if r <= radii[k] {
            let t = (r - radii[k - 1]) / (radii[k] - radii[k - 1]);
            return values[k - 1] + t * (values[k] - values[k - 1]);
        }
    }
    *values.last().expect("nonempty table")
}

/// The conjugate exponent `p'(·)`, defined when `p⁻ > 1`.
pub fn conjugate_exponent(spec: &ExponentSpec) -> Result<ExponentSpec> {
    let (lo, hi) = (spec.p_minus(), spec.p_plus());
    if lo <= 1.0 {
        return Err(Error::UnboundedConjugate(lo));
    }
    let clip = [conj(hi), conj(lo)];
    match &spec.kind {
        ExponentKind::Conjugate { inner } => Ok((**inner).clone()),
        ExponentKind::Constant { .. } => {
            let p = conj(spec.clamp(spec.radial(0.0).expect("constant")));
            ExponentSpec::new(ExponentKind::Constant { p }, [p, p], spec.dim)
        }
        _ => ExponentSpec::new(
            ExponentKind::Conjugate {
                inner: Box::new(spec.clone()),
            },
            clip,
            spec.dim,
        ),
    }
}

/// Names of the bundled exponents.
pub const REGISTRY_NAMES: [&str; 10] = [
    "const2",
    "const3",
    "inv_square",
    "inv_square_below",
    "radial_table",
    "inv_log",
    "inv_log_below",
    "inv_linear",
    "inv_shifted",
    "step_jump",
];

/// Look up a bundled exponent by name.
pub fn registry_spec(name: &str, dim: usize) -> Result<ExponentSpec> {
    use ExponentKind::*;
    let (kind, clip) = match name {
        "const2" => (Constant { p: 2.0 }, [2.0, 2.0]),
        "const3" => (Constant { p: 3.0 }, [3.0, 3.0]),
        "inv_square" => (InverseSquare { p_inf: 2.0, c: 1.0 }, [1.5, 3.0]),
        "inv_square_below" => (InverseSquare { p_inf: 2.5, c: -2.0 }, [1.5, 2.5]),
        "radial_table" => (
            RadialTable {
                radii: vec![0.0, 1.0, 2.0, 3.0],
                values: vec![3.0, 2.0, 2.5, 2.0],
            },
            [1.5, 3.0],
        ),
        "inv_log" => (InverseLog { p_inf: 2.0, c: 1.0 }, [1.5, 3.0]),
        "inv_log_below" => (InverseLog { p_inf: 3.0, c: -1.0 }, [1.5, 3.0]),
        "inv_linear" => (
            InversePower {
                p_inf: 2.0,
                c: 1.0,
                power: 1.0,
                shift: 0.0,
            },
            [1.5, 3.0],
        ),
        "inv_shifted" => (
            InversePower {
                p_inf: 2.0,
                c: 1.0,
                power: 1.0,
                shift: E,
            },
            [1.5, 3.0],
        ),
        "step_jump" => (
            StepJump {
                axis: 0,
                offset: 0.3,
                low: 2.0,
                high: 3.0,
            },
            [2.0, 3.0],
        ),
        other => return Err(Error::UnknownName(other.to_string())),
    };
    ExponentSpec::new(kind, clip, dim)
}

/// Every bundled exponent in dimension `dim`.
pub fn registry(dim: usize) -> Vec<(&'static str, ExponentSpec)> {
    REGISTRY_NAMES
        .iter()
        .map(|n| (*n, registry_spec(n, dim).expect("bundled exponent")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn closed_forms() {
        let c = ExponentSpec::constant(2.0, 3).unwrap();
        assert_eq!(c.eval(&[5.0, -1.0, 0.2]), 2.0);
        let s = registry_spec("inv_square", 2).unwrap();
        assert_eq!(s.eval(&[1.0, 0.0]), 3.0);
        assert!((s.eval(&[1e6, 0.0]) - 2.0).abs() < 1e-11);
        assert_eq!(s.eval(&[0.0, 0.0]), 3.0);
        assert_eq!(s.p_inf(), Some(2.0));
        let t = registry_spec("radial_table", 1).unwrap();
        assert_eq!(t.eval(&[1.5]), 2.25);
        assert_eq!(t.eval(&[-10.0]), 2.0);
        let j = registry_spec("step_jump", 2).unwrap();
        assert_eq!((j.eval(&[0.3, 0.0]), j.eval(&[0.29, 9.0])), (3.0, 2.0));
        assert_eq!(j.p_inf(), None);
    }

    #[test]
    fn clipping_controls_p_inf() {
        let s = ExponentSpec::new(ExponentKind::InverseSquare { p_inf: 4.0, c: 1.0 }, [1.5, 3.0], 1).unwrap();
        assert_eq!(s.p_inf(), None);
        assert_eq!(s.eval(&[100.0]), 3.0);
        assert!(ExponentSpec::new(ExponentKind::Constant { p: 2.0 }, [0.5, 3.0], 1).is_err());
        assert!(ExponentSpec::new(ExponentKind::Constant { p: 2.0 }, [1.0, f64::INFINITY], 1).is_err());
    }

    #[test]
    fn conjugates() {
        let c = conjugate_exponent(&ExponentSpec::constant(2.0, 1).unwrap()).unwrap();
        assert_eq!(c.eval(&[0.3]), 2.0);
        let c = conjugate_exponent(&ExponentSpec::constant(4.0, 1).unwrap()).unwrap();
        assert!((c.eval(&[0.3]) - 4.0 / 3.0).abs() < 1e-15);
        let s = registry_spec("inv_square", 2).unwrap();
        let cs = conjugate_exponent(&s).unwrap();
        assert_eq!(cs.p_inf(), Some(2.0));
        assert_eq!(conjugate_exponent(&cs).unwrap(), s);
        let one = ExponentSpec::new(ExponentKind::Constant { p: 1.0 }, [1.0, 1.0], 1).unwrap();
        assert!(matches!(conjugate_exponent(&one), Err(Error::UnboundedConjugate(_))));
    }

    #[test]
    fn ball_ranges_match_dense_scan() {
        for (name, spec) in registry(2) {
            for (c, r) in [
                ([0.2, 0.1], 0.5),
                ([2.5, -0.5], 0.7),
                ([0.31, 4.0], 0.02),
                ([0.0, 0.0], 3.0),
            ] {
                let ball = Ball::new(c.to_vec(), r).unwrap();
                let (lo, hi) = spec.ball_range(&ball);
                let mut slo = f64::INFINITY;
                let mut shi = f64::NEG_INFINITY;
                for i in 0..=200 {
                    for j in 0..=200 {
                        let y = [
                            c[0] - r + 2.0 * r * i as f64 / 200.0,
                            c[1] - r + 2.0 * r * j as f64 / 200.0,
                        ];
                        if ball.contains(&y) {
                            let v = spec.eval(&y);
                            slo = slo.min(v);
                            shi = shi.max(v);
                        }
                    }
                }
                // The scan is an inner approximation of the exact range.
                assert!(lo <= slo + 1e-12 && hi >= shi - 1e-12, "{name}");
                assert!(
                    slo - lo < 0.05 && hi - shi < 0.05,
                    "{name}: [{lo},{hi}] vs [{slo},{shi}]"
                );
            }
        }
    }

    #[test]
    fn spec_serialization() {
        let s = registry_spec("inv_square", 2).unwrap();
        let json = serde_json::to_value(&s).unwrap();
        assert_eq!(json["kind"], "p_inf_plus_inverse_square");
        assert_eq!(json["params"]["c"], 1.0);
        assert_eq!(json["clip_range"][1], 3.0);
        let back: ExponentSpec = serde_json::from_value(json).unwrap();
        assert_eq!(back, s);
        let bad = serde_json::json!({"kind": "constant", "params": {"p": 2.0}, "clip_range": [0.5, 2.0], "dim": 1});
        assert!(serde_json::from_value::<ExponentSpec>(bad).is_err());
        assert!(matches!(registry_spec("nope", 1), Err(Error::UnknownName(_))));
    }

    #[test]
    fn deviation_without_cancellation() {
        let s = registry_spec("inv_square", 2).unwrap();
        let x = [1e8, 0.0];
        assert_eq!(s.inf_deviation(&x), Some(1e-16));
        assert_eq!(s.exterior_deviation(&x), 1e-16);
        let c = conjugate_exponent(&s).unwrap();
        // conj(2 + t) - 2 = -t/(1 + t).
        let d = c.inf_deviation(&[1e3, 0.0]).unwrap();
        assert!((d + 1e-6 / (1.0 + 1e-6)).abs() < 1e-20);
        assert_eq!(registry_spec("step_jump", 1).unwrap().inf_deviation(&[5.0]), None);
        let t = registry_spec("radial_table", 1).unwrap();
        assert_eq!(t.exterior_deviation(&[0.0]), 1.0);
    }

    proptest! {
        #[test]
        fn values_stay_in_clip(idx in 0usize..REGISTRY_NAMES.len(), x in -50.0..50.0f64, y in -50.0..50.0f64) {
            let s = registry_spec(REGISTRY_NAMES[idx], 2).unwrap();
            let v = s.eval(&[x, y]);
            let [lo, hi] = s.clip_range();
            prop_assert!(1.0 <= lo && lo <= v && v <= hi && hi < f64::INFINITY);
        }

        #[test]
        fn conjugate_is_involutive(idx in 0usize..REGISTRY_NAMES.len(), x in -20.0..20.0f64, y in -20.0..20.0f64) {
            let s = registry_spec(REGISTRY_NAMES[idx], 2).unwrap();
            let cc = conjugate_exponent(&conjugate_exponent(&s).unwrap()).unwrap();
            prop_assert!((cc.eval(&[x, y]) - s.eval(&[x, y])).abs() <= 1e-12);
        }

        #[test]
        fn conjugate_swaps_ball_extremes(idx in 0usize..REGISTRY_NAMES.len(), cx in -8.0..8.0f64, cy in -8.0..8.0f64, r in 1e-3..5.0f64) {
            let s = registry_spec(REGISTRY_NAMES[idx], 2).unwrap();
            let c = conjugate_exponent(&s).unwrap();
            let b = Ball::new(vec![cx, cy], r).unwrap();
            let (lo, hi) = s.ball_range(&b);
            let (clo, chi) = c.ball_range(&b);
            prop_assert!((chi - conj(lo)).abs() < 1e-12 && (clo - conj(hi)).abs() < 1e-12);
        }
    }
}
