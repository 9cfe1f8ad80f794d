//! Hermite expansions and the Ornstein-Uhlenbeck spectral calculus.
//!
//! Coefficients are stored in the orthonormal basis `h_α = H_α / ‖H_α‖` of
//! `L²(γ_d)`, where `H_α` are the physicists' Hermite polynomials. Every
//! operator in this module acts exactly on coefficients.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::gauss_hermite;

/// A multi-index `α ∈ ℕ₀^d`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    /// The unit index `e_i` (0-based axis).
    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut v = vec![0; dim];
        v[axis] = 1;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|α| = Σ α_i`.
    pub fn order(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// Every index with `|α| <= cap`, in canonical order.
    pub fn all_up_to(dim: usize, cap: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; dim];
        fn rec(pos: usize, left: usize, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if pos == cur.len() {
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for a in 0..=left {
                cur[pos] = a as u32;
                rec(pos + 1, left - a, cur, out);
            }
            cur[pos] = 0;
        }
        rec(0, cap, &mut cur, &mut out);
        out.sort();
        out
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

/// Physicists' Hermite polynomial `H_n(x)`.
pub fn hermite_eval(n: usize, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    if n == 0 {
        return h0;
    }
    for k in 1..n {
        let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// `H_α(x) = Π_i H_{α_i}(x_i)`.
pub fn hermite_eval_multi(alpha: &MultiIndex, x: &[f64]) -> f64 {
    alpha
        .0
        .iter()
        .zip(x)
        .map(|(&a, &xi)| hermite_eval(a as usize, xi))
        .product()
}

/// Normalized values `h_0(x), ..., h_n(x)` in one dimension.
pub fn hermite_normalized_table(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n == 0 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * x);
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

/// `‖H_α‖²_{L²(γ_d)} = Π_i 2^{α_i} α_i!`.
pub fn hermite_norm_sq(alpha: &MultiIndex) -> Result<f64> {
    let mut acc = 1.0f64;
    for &a in &alpha.0 {
        for k in 1..=a {
            acc *= 2.0 * k as f64;
        }
    }
    if acc.is_finite() {
        Ok(acc)
    } else {
        Err(Error::Overflow(alpha.order()))
    }
}

/// Which generator the OU calculus uses: `L` or `L̄ = L + I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuVariant {
    L,
    LBar,
}

/// "Old" operators are built on `L`, "new" ones on `L̄`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RieszVariant {
    Old,
    New,
}

/// What raising operators do when the result exceeds the degree cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CapPolicy {
    /// Grow the cap to fit the result.
    #[default]
    Raise,
    /// Signal [`Error::Truncation`].
    Strict,
}

/// Finite Hermite expansion in the orthonormal basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ExpansionRecord", try_from = "ExpansionRecord")]
pub struct HermiteExpansion {
    dim: usize,
    cap: usize,
    coeffs: BTreeMap<MultiIndex, f64>,
}

#[derive(Serialize, Deserialize)]
struct ExpansionTerm {
    index: MultiIndex,
    coeff: f64,
}

#[derive(Serialize, Deserialize)]
struct ExpansionRecord {
    dim: usize,
    cap: usize,
    terms: Vec<ExpansionTerm>,
}

impl From<HermiteExpansion> for ExpansionRecord {
    fn from(e: HermiteExpansion) -> Self {
        ExpansionRecord {
            dim: e.dim,
            cap: e.cap,
            terms: e
                .coeffs
                .into_iter()
                .map(|(index, coeff)| ExpansionTerm { index, coeff })
                .collect(),
        }
    }
}

impl TryFrom<ExpansionRecord> for HermiteExpansion {
    type Error = Error;
    fn try_from(r: ExpansionRecord) -> Result<Self> {
        let mut e = HermiteExpansion::zero(r.dim, r.cap);
        for t in r.terms {
            e.set(t.index, t.coeff)?;
        }
        Ok(e)
    }
}

impl HermiteExpansion {
    pub fn zero(dim: usize, cap: usize) -> Self {
        HermiteExpansion {
            dim,
            cap,
            coeffs: BTreeMap::new(),
        }
    }

    /// The single basis element `h_α`.
    pub fn basis(dim: usize, cap: usize, alpha: MultiIndex) -> Result<Self> {
        let mut e = Self::zero(dim, cap);
        e.set(alpha, 1.0)?;
        Ok(e)
    }

    /// Uniform random coefficients in `[-1, 1]` on every index up to `cap`.
    pub fn random<R: Rng>(dim: usize, cap: usize, zero_constant: bool, rng: &mut R) -> Self {
        let mut e = Self::zero(dim, cap);
        for a in MultiIndex::all_up_to(dim, cap) {
            if zero_constant && a.is_zero() {
                continue;
            }
            e.coeffs.insert(a, rng.random_range(-1.0..=1.0));
        }
        e
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn get(&self, alpha: &MultiIndex) -> f64 {
        self.coeffs.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, alpha: MultiIndex, c: f64) -> Result<()> {
        if alpha.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: alpha.dim(),
            });
        }
        if alpha.order() > self.cap {
            return Err(Error::Truncation {
                cap: self.cap,
                needed: alpha.order(),
            });
        }
        if c == 0.0 {
            self.coeffs.remove(&alpha);
        } else {
            self.coeffs.insert(alpha, c);
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.coeffs.iter().map(|(a, &c)| (a, c))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient-wise `self + other`; the cap is the larger of the two.
    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.cap = self.cap.max(other.cap);
        for (a, c) in &other.coeffs {
            *out.coeffs.entry(a.clone()).or_insert(0.0) += c;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_coeffs(|_, c| c * s)
    }

    /// Largest coefficient deviation over the union of supports.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut m = 0.0f64;
        for (a, c) in &self.coeffs {
            m = m.max((c - other.get(a)).abs());
        }
        for (a, c) in &other.coeffs {
            if !self.coeffs.contains_key(a) {
                m = m.max(c.abs());
            }
        }
        m
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Orthogonal projection onto constants, `π₀`.
    pub fn constant_projection(&self) -> Self {
        let mut out = Self::zero(self.dim, self.cap);
        let z = MultiIndex::zero(self.dim);
        let c = self.get(&z);
        if c != 0.0 {
            out.coeffs.insert(z, c);
        }
        out
    }

    fn map_coeffs<F: Fn(&MultiIndex, f64) -> f64>(&self, f: F) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(a, &c)| (a.clone(), f(a, c)))
            .filter(|(_, c)| *c != 0.0)
            .collect();
        HermiteExpansion {
            dim: self.dim,
            cap: self.cap,
            coeffs,
        }
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.dim {
            return Err(Error::InvalidArgument(format!(
                "axis {axis} out of range for dimension {}",
                self.dim
            )));
        }
        Ok(())
    }
}

/// `δ_i = 2^{-1/2} ∂_i`: `h_α ↦ √α_i h_{α-e_i}`. `axis` is 0-based.
pub fn apply_delta(axis: usize, e: &HermiteExpansion) -> Result<HermiteExpansion> {
    e.check_axis(axis)?;
    let mut out = HermiteExpansion::zero(e.dim, e.cap.saturating_sub(1));
    for (a, c) in e.iter() {
        let ai = a.0[axis];
        if ai == 0 {
            continue;
        }
        let mut b = a.clone();
        b.0[axis] -= 1;
        out.coeffs.insert(b, c * (ai as f64).sqrt());
    }
    Ok(out)
}

/// `δ_i*`, the `γ_d`-adjoint of `δ_i`: `h_α ↦ √(α_i+1) h_{α+e_i}`.
pub fn apply_delta_star(axis: usize, e: &HermiteExpansion, policy: CapPolicy) -> Result<HermiteExpansion> {
    e.check_axis(axis)?;
    raising_map(e, &MultiIndex::unit(e.dim, axis), policy, |_| 1.0)
}

/// Shared helper: `h_β ↦ m(β)·Π_i √((β_i+α_i)!/β_i!)·h_{β+α}`.
fn raising_map<M: Fn(&MultiIndex) -> f64>(
    e: &HermiteExpansion,
    alpha: &MultiIndex,
    policy: CapPolicy,
    multiplier: M,
) -> Result<HermiteExpansion> {
    let order = alpha.order();
    let needed = e.iter().map(|(b, _)| b.order() + order).max().unwrap_or(0);
    let cap = match policy {
        CapPolicy::Raise => e.cap + order,
        CapPolicy::Strict if needed > e.cap => {
            return Err(Error::Truncation { cap: e.cap, needed });
        }
        CapPolicy::Strict => e.cap,
    };
    let mut out = HermiteExpansion::zero(e.dim, cap);
    for (b, c) in e.iter() {
        let mut ladder = 1.0;
        let mut target = b.clone();
        for (i, &ai) in alpha.0.iter().enumerate() {
            for k in 1..=ai {
                ladder *= ((b.0[i] + k) as f64).sqrt();
            }
            target.0[i] += ai;
        }
        let v = c * ladder * multiplier(b);
        if v != 0.0 {
            out.coeffs.insert(target, v);
        }
    }
    Ok(out)
}

/// `L` (eigenvalue `|α|`) or `L̄` (eigenvalue `|α| + 1`).
pub fn apply_ou(e: &HermiteExpansion, variant: OuVariant) -> HermiteExpansion {
    let shift = shift(variant);
    e.map_coeffs(|a, c| c * (a.order() as f64 + shift))
}

/// `e^{-tL}` or `e^{-tL̄}`.
pub fn semigroup(t: f64, e: &HermiteExpansion, variant: OuVariant) -> Result<HermiteExpansion> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("semigroup time {t} < 0")));
    }
    let shift = shift(variant);
    Ok(e.map_coeffs(|a, c| c * (-(a.order() as f64 + shift) * t).exp()))
}

fn shift(variant: OuVariant) -> f64 {
    match variant {
        OuVariant::L => 0.0,
        OuVariant::LBar => 1.0,
    }
}

/// `I_β = L^{-β}` (old; the constant mode is annihilated for `β > 0`) or
/// `Ī_β = L̄^{-β}` (new).
pub fn fractional_integral(beta: f64, e: &HermiteExpansion, variant: RieszVariant) -> Result<HermiteExpansion> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidArgument(format!("fractional order {beta} < 0")));
    }
    if beta == 0.0 {
        return Ok(e.clone());
    }
    Ok(e.map_coeffs(|a, c| {
        let n = a.order() as f64;
        match variant {
            RieszVariant::Old if a.order() == 0 => 0.0,
            RieszVariant::Old => c * n.powf(-beta),
            RieszVariant::New => c * (n + 1.0).powf(-beta),
        }
    }))
}

/// Riesz transforms `R_α = δ^α I_{|α|/2}` (old) and `R*_α = δ*^α Ī_{|α|/2}` (new).
pub fn riesz(
    alpha: &MultiIndex,
    e: &HermiteExpansion,
    variant: RieszVariant,
    policy: CapPolicy,
) -> Result<HermiteExpansion> {
    if alpha.dim() != e.dim {
        return Err(Error::DimensionMismatch {
            expected: e.dim,
            got: alpha.dim(),
        });
    }
    let order = alpha.order();
    if order == 0 {
        return Err(Error::InvalidArgument("Riesz order must be nonzero".into()));
    }
    let half = order as f64 / 2.0;
    match variant {
        RieszVariant::Old => {
            let mut out = HermiteExpansion::zero(e.dim, e.cap.saturating_sub(order));
            for (b, c) in e.iter() {
                if b.0.iter().zip(&alpha.0).any(|(bi, ai)| bi < ai) {
                    continue;
                }
                let mut ladder = 1.0;
                let mut target = b.clone();
                for (i, &ai) in alpha.0.iter().enumerate() {
                    for k in 0..ai {
                        ladder *= ((b.0[i] - k) as f64).sqrt();
                    }
                    target.0[i] -= ai;
                }
                let v = c * ladder * (b.order() as f64).powf(-half);
                if v != 0.0 {
                    out.coeffs.insert(target, v);
                }
            }
            Ok(out)
        }
        RieszVariant::New => raising_map(e, alpha, policy, |b| (b.order() as f64 + 1.0).powf(-half)),
    }
}

/// Evaluate `Σ c_α h_α(x)`.
pub fn synthesize(e: &HermiteExpansion, x: &[f64]) -> Result<f64> {
    if x.len() != e.dim {
        return Err(Error::DimensionMismatch {
            expected: e.dim,
            got: x.len(),
        });
    }
    let tables: Vec<Vec<f64>> = x.iter().map(|&xi| hermite_normalized_table(e.cap, xi)).collect();
    Ok(e.iter()
        .map(|(a, c)| {
            c * a
                .0
                .iter()
                .enumerate()
                .map(|(i, &ai)| tables[i][ai as usize])
                .product::<f64>()
        })
        .sum())
}

/// Project `f` onto `{h_α : |α| <= cap}` with a tensor Gauss-Hermite rule of
/// `nodes` points per axis (exact for polynomial `f` of degree `<= cap` iff
/// `nodes >= cap + 1`).
pub fn analyze<F: Fn(&[f64]) -> f64>(f: F, dim: usize, cap: usize, nodes: usize) -> Result<HermiteExpansion> {
    if nodes < cap + 1 {
        return Err(Error::QuadratureDegree { nodes, degree: 2 * cap });
    }
    let (xs, ws) = gauss_hermite(nodes);
    let norm = std::f64::consts::PI.sqrt();
    let tables: Vec<Vec<f64>> = xs.iter().map(|&x| hermite_normalized_table(cap, x)).collect();
    let indices = MultiIndex::all_up_to(dim, cap);
    let mut acc = vec![0.0; indices.len()];
    let mut point = vec![0.0; dim];
    let mut idx = vec![0usize; dim];
    loop {
        let mut w = 1.0;
        for (k, &j) in idx.iter().enumerate() {
            point[k] = xs[j];
            w *= ws[j] / norm;
        }
        let fv = f(&point);
        for (slot, a) in acc.iter_mut().zip(&indices) {
            let mut b = 1.0;
            for (k, &ak) in a.0.iter().enumerate() {
                b *= tables[idx[k]][ak as usize];
            }
            *slot += w * fv * b;
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == dim {
                let mut out = HermiteExpansion::zero(dim, cap);
                for (a, c) in indices.into_iter().zip(acc) {
                    out.set(a, c)?;
                }
                return Ok(out);
            }
            idx[k] += 1;
            if idx[k] < nodes {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Max coefficient error of `∑_i R*_{e_i} R_{e_i} e − (e − π₀e)`.
pub fn identity_decomposition_error(e: &HermiteExpansion) -> Result<f64> {
    let mut sum = HermiteExpansion::zero(e.dim, e.cap);
    for i in 0..e.dim {
        let unit = MultiIndex::unit(e.dim, i);
        let lowered = riesz(&unit, e, RieszVariant::Old, CapPolicy::Raise)?;
        sum = sum.add(&riesz(&unit, &lowered, RieszVariant::New, CapPolicy::Raise)?);
    }
    let target = e.add(&e.constant_projection().scale(-1.0));
    Ok(sum.max_abs_diff(&target))
}

/// Coefficient errors of the ladder identities on one expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderErrors {
    /// `max_i ‖[δ_i, δ_i*]e − e‖`.
    pub commutator: f64,
    /// `‖∑ δ_i*δ_i e − Le‖`.
    pub factorization: f64,
    /// `‖I_β I_ε e − I_{β+ε} e‖`, worst of both variants.
    pub composition: f64,
}

impl LadderErrors {
    pub fn max(&self) -> f64 {
        self.commutator.max(self.factorization).max(self.composition)
    }
}

pub fn ladder_errors(e: &HermiteExpansion, beta: f64, eps: f64) -> Result<LadderErrors> {
    let mut commutator: f64 = 0.0;
    let mut sum = HermiteExpansion::zero(e.dim, e.cap);
    for i in 0..e.dim {
        let lowered = apply_delta(i, e)?;
        let down_up = apply_delta_star(i, &lowered, CapPolicy::Raise)?;
        let up_down = apply_delta(i, &apply_delta_star(i, e, CapPolicy::Raise)?)?;
        commutator = commutator.max(up_down.add(&down_up.scale(-1.0)).max_abs_diff(e));
        sum = sum.add(&down_up);
    }
    let factorization = sum.max_abs_diff(&apply_ou(e, OuVariant::L));
    let mut composition: f64 = 0.0;
    for v in [RieszVariant::Old, RieszVariant::New] {
        let two = fractional_integral(beta, &fractional_integral(eps, e, v)?, v)?;
        composition = composition.max(two.max_abs_diff(&fractional_integral(beta + eps, e, v)?));
    }
    Ok(LadderErrors {
        commutator,
        factorization,
        composition,
    })
}

/// Default degree caps used by the verification suites.
pub fn default_cap(dim: usize) -> usize {
    match dim {
        1 => 12,
        2 => 8,
        _ => 6,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, SQRT_2};

    fn gh_gamma(f: impl Fn(f64) -> f64) -> f64 {
        let (x, w) = gauss_hermite(30);
        x.iter().zip(&w).map(|(x, w)| w * f(*x)).sum::<f64>() / PI.sqrt()
    }

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    #[test]
    fn hermite_values() {
        assert_eq!(hermite_eval(0, 3.7), 1.0);
        assert_eq!(hermite_eval(2, 1.0), 2.0);
        assert_eq!(hermite_eval(3, 0.5), 8.0 * 0.125 - 12.0 * 0.5);
    }

    #[test]
    fn hermite_orthogonality_and_norms() {
        for m in 0..=8 {
            for n in 0..=8 {
                let v = gh_gamma(|x| hermite_eval(m, x) * hermite_eval(n, x));
                if m == n {
                    let expect = hermite_norm_sq(&mi(&[m as u32])).unwrap();
                    assert!((v / expect - 1.0).abs() < 1e-12);
                } else {
                    let scale = (hermite_norm_sq(&mi(&[m as u32])).unwrap()
                        * hermite_norm_sq(&mi(&[n as u32])).unwrap())
                    .sqrt();
                    assert!(v.abs() < 1e-12 * scale, "m={m} n={n} v={v}");
                }
            }
        }
        assert_eq!(hermite_norm_sq(&mi(&[0, 0])).unwrap(), 1.0);
        assert_eq!(hermite_norm_sq(&mi(&[2])).unwrap(), 8.0);
        assert_eq!(hermite_norm_sq(&mi(&[1, 1])).unwrap(), 4.0);
        assert!(matches!(hermite_norm_sq(&mi(&[400])), Err(Error::Overflow(400))));
    }

    #[test]
    fn normalized_table_matches_raw() {
        let t = hermite_normalized_table(10, 0.83);
        for (n, v) in t.iter().enumerate() {
            let raw = hermite_eval(n, 0.83) / hermite_norm_sq(&mi(&[n as u32])).unwrap().sqrt();
            assert!((v - raw).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_matches_finite_difference() {
        let e = HermiteExpansion::basis(1, 4, mi(&[2])).unwrap();
        let d = apply_delta(0, &e).unwrap();
        assert!((d.get(&mi(&[1])) - SQRT_2).abs() < 1e-15);
        for &x in &[-1.3, 0.2, 0.9] {
            let h = 1e-5;
            let fd = (synthesize(&e, &[x + h]).unwrap() - synthesize(&e, &[x - h]).unwrap()) / (2.0 * h) / SQRT_2;
            assert!((fd - synthesize(&d, &[x]).unwrap()).abs() < 1e-8);
        }
        let e2 = HermiteExpansion::basis(2, 6, mi(&[2, 3])).unwrap();
        let d2 = apply_delta(0, &e2).unwrap();
        assert!((d2.get(&mi(&[1, 3])) - SQRT_2).abs() < 1e-15);
        let zero = apply_delta(0, &HermiteExpansion::basis(1, 3, mi(&[0])).unwrap()).unwrap();
        assert!(zero.is_empty());
    }

    #[test]
    fn delta_star_matches_weighted_derivative() {
        let e = HermiteExpansion::basis(1, 3, mi(&[1])).unwrap();
        let ds = apply_delta_star(0, &e, CapPolicy::Raise).unwrap();
        assert!((ds.get(&mi(&[2])) - SQRT_2).abs() < 1e-15);
        // δ* g = -(1/√2) e^{x²} (e^{-x²} g)'
        for &x in &[-0.7, 0.4, 1.6] {
            let g = |x: f64| (-x * x).exp() * synthesize(&e, &[x]).unwrap();
            let h = 1e-5;
            let fd = -f64::exp(x * x) * (g(x + h) - g(x - h)) / (2.0 * h) / SQRT_2;
            assert!((fd - synthesize(&ds, &[x]).unwrap()).abs() < 1e-7);
        }
        let top = HermiteExpansion::basis(1, 3, mi(&[3])).unwrap();
        assert!(matches!(
            apply_delta_star(0, &top, CapPolicy::Strict),
            Err(Error::Truncation { cap: 3, needed: 4 })
        ));
    }

    #[test]
    fn suite_helpers_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for dim in 1..=3 {
            let e = HermiteExpansion::random(dim, default_cap(dim), true, &mut rng);
            assert!(identity_decomposition_error(&e).unwrap() < 1e-13);
            assert!(ladder_errors(&e, 0.3, 0.45).unwrap().max() < 1e-13);
        }
        // With a constant term only I - π₀ is recovered.
        let e = HermiteExpansion::basis(2, 3, mi(&[0, 0])).unwrap();
        assert_eq!(identity_decomposition_error(&e).unwrap(), 0.0);
    }

    #[test]
    fn spectral_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in 1..=3 {
            let cap = default_cap(dim);
            let e = HermiteExpansion::random(dim, cap, false, &mut rng);
            let le = apply_ou(&e, OuVariant::L);
            let mut sum = HermiteExpansion::zero(dim, cap);
            for i in 0..dim {
                let lowered = apply_delta(i, &e).unwrap();
                sum = sum.add(&apply_delta_star(i, &lowered, CapPolicy::Raise).unwrap());
                let up = apply_delta_star(i, &e, CapPolicy::Raise).unwrap();
                let comm = apply_delta(i, &up)
                    .unwrap()
                    .add(&apply_delta_star(i, &lowered, CapPolicy::Raise).unwrap().scale(-1.0));
                assert!(comm.max_abs_diff(&e) < 1e-13);
            }
            assert!(sum.max_abs_diff(&le) < 1e-13);
            let lbar = apply_ou(&e, OuVariant::LBar);
            assert!(lbar.max_abs_diff(&le.add(&e)) < 1e-13);
        }
        let e = HermiteExpansion::basis(2, 4, mi(&[1, 2])).unwrap();
        assert!((apply_ou(&e, OuVariant::L).get(&mi(&[1, 2])) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn semigroup_and_fractional_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let e = HermiteExpansion::random(2, 6, false, &mut rng);
        let a = semigroup(0.3, &semigroup(0.5, &e, OuVariant::L).unwrap(), OuVariant::L).unwrap();
        let b = semigroup(0.8, &e, OuVariant::L).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-13);
        assert_eq!(semigroup(0.0, &e, OuVariant::LBar).unwrap(), e);
        let far = semigroup(200.0, &e, OuVariant::L).unwrap();
        assert!(far.max_abs_diff(&e.constant_projection()) < 1e-13);

        for v in [RieszVariant::Old, RieszVariant::New] {
            let x = fractional_integral(0.4, &fractional_integral(0.7, &e, v).unwrap(), v).unwrap();
            let y = fractional_integral(1.1, &e, v).unwrap();
            assert!(x.max_abs_diff(&y) < 1e-13);
            assert_eq!(fractional_integral(0.0, &e, v).unwrap(), e);
        }
        let h0 = HermiteExpansion::basis(1, 2, mi(&[0])).unwrap();
        assert_eq!(fractional_integral(0.5, &h0, RieszVariant::New).unwrap(), h0);
        assert!(fractional_integral(0.5, &h0, RieszVariant::Old).unwrap().is_empty());
    }

    #[test]
    fn riesz_first_order_matches_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = HermiteExpansion::random(2, 6, false, &mut rng);
        for i in 0..2 {
            let a = MultiIndex::unit(2, i);
            let old = riesz(&a, &e, RieszVariant::Old, CapPolicy::Raise).unwrap();
            let comp = apply_delta(i, &fractional_integral(0.5, &e, RieszVariant::Old).unwrap()).unwrap();
            assert!(old.max_abs_diff(&comp) < 1e-14);
            let new = riesz(&a, &e, RieszVariant::New, CapPolicy::Raise).unwrap();
            let comp = apply_delta_star(
                i,
                &fractional_integral(0.5, &e, RieszVariant::New).unwrap(),
                CapPolicy::Raise,
            )
            .unwrap();
            assert!(new.max_abs_diff(&comp) < 1e-14);
        }
        // Second order: δ_0 δ_1 I_1.
        let a = mi(&[1, 1]);
        let old = riesz(&a, &e, RieszVariant::Old, CapPolicy::Raise).unwrap();
        let comp = apply_delta(
            0,
            &apply_delta(1, &fractional_integral(1.0, &e, RieszVariant::Old).unwrap()).unwrap(),
        )
        .unwrap();
        assert!(old.max_abs_diff(&comp) < 1e-14);
        let h0 = HermiteExpansion::basis(2, 3, MultiIndex::zero(2)).unwrap();
        assert!(riesz(&MultiIndex::unit(2, 0), &h0, RieszVariant::Old, CapPolicy::Raise)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn riesz_decomposes_identity_off_constants() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for dim in 1..=3 {
            let cap = default_cap(dim);
            let e = HermiteExpansion::random(dim, cap, false, &mut rng);
            let mut sum = HermiteExpansion::zero(dim, cap);
            for i in 0..dim {
                let a = MultiIndex::unit(dim, i);
                let r = riesz(&a, &e, RieszVariant::Old, CapPolicy::Raise).unwrap();
                sum = sum.add(&riesz(&a, &r, RieszVariant::New, CapPolicy::Raise).unwrap());
            }
            assert_eq!(sum.cap(), cap);
            let expect = e.add(&e.constant_projection().scale(-1.0));
            assert!(sum.max_abs_diff(&expect) < 1e-13);
        }
    }

    #[test]
    fn analyze_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let e = HermiteExpansion::random(2, 8, false, &mut rng);
        let back = analyze(|x| synthesize(&e, x).unwrap(), 2, 8, 9).unwrap();
        assert!(back.max_abs_diff(&e) < 1e-10);
        let one = analyze(|_| 1.0, 1, 4, 5).unwrap();
        assert!((one.get(&mi(&[0])) - 1.0).abs() < 1e-14);
        let h2 = analyze(|x| hermite_eval(2, x[0]) / 8f64.sqrt(), 1, 4, 5).unwrap();
        assert!((h2.get(&mi(&[2])) - 1.0).abs() < 1e-13);
        assert!(matches!(analyze(|_| 1.0, 1, 8, 8), Err(Error::QuadratureDegree { .. })));
    }

    #[test]
    fn expansion_serde_round_trip() {
        let e = HermiteExpansion::basis(2, 3, mi(&[1, 2])).unwrap().scale(0.25);
        let s = serde_json::to_string(&e).unwrap();
        assert!(s.contains("\"terms\""));
        let back: HermiteExpansion = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
    }

    proptest! {
        #[test]
        fn ladder_adjointness(axis in 0usize..2, a0 in 0u32..5, a1 in 0u32..5, b0 in 0u32..5, b1 in 0u32..5) {
            let ea = HermiteExpansion::basis(2, 10, MultiIndex(vec![a0, a1])).unwrap();
            let eb = HermiteExpansion::basis(2, 10, MultiIndex(vec![b0, b1])).unwrap();
            // <δ h_a, h_b> = <h_a, δ* h_b>
            let lhs = apply_delta(axis, &ea).unwrap().get(&eb.iter().next().unwrap().0.clone());
            let rhs = apply_delta_star(axis, &eb, CapPolicy::Raise).unwrap().get(&MultiIndex(vec![a0, a1]));
            prop_assert!((lhs - rhs).abs() < 1e-14);
        }
    }
}
