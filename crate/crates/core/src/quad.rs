//! Quadrature building blocks shared by the engines.
//!
//! * adaptive Gauss-Kronrod (7/15) with a global error queue,
//! * tanh-sinh (double exponential) rules for endpoint singularities,
//! * Gauss-Legendre and Gauss-Hermite node sets,
//! * direction rules on the unit sphere `S^{d-1}` for polar integration,
//! * a deterministic pairwise summation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, SymmetricEigen};

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Tolerances for [`gauss_kronrod`].
#[derive(Debug, Clone, Copy)]
pub struct GkOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for GkOptions {
    fn default() -> Self {
        GkOptions {
            abs_tol: 1e-14,
            rel_tol: 1e-10,
            max_intervals: 2000,
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    (kron, (kron - gauss).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
pub fn gauss_kronrod<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, opts: &GkOptions) -> QuadResult {
    gauss_kronrod_breaks(f, &[a, b], opts)
}

/// Like [`gauss_kronrod`] but starting from the panels delimited by the
/// sorted `breaks` (at least two entries).
pub fn gauss_kronrod_breaks<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], opts: &GkOptions) -> QuadResult {
    assert!(breaks.len() >= 2, "need at least one panel");
    let mut heap = BinaryHeap::new();
    let mut evals = 0;
    for w in breaks.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (value, error) = gk15(&mut f, w[0], w[1]);
        evals += 15;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    loop {
        // Sum in a fixed order (by interval start) so results do not depend on heap layout.
        let (total, err) = heap_totals(&heap);
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if err <= target || heap.is_empty() {
            return QuadResult {
                value: total,
                error: err,
                evals,
                converged: true,
            };
        }
        if heap.len() >= opts.max_intervals {
            return QuadResult {
                value: total,
                error: err,
                evals,
                converged: false,
            };
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel can no longer be split in floating point; keep it and stop.
            heap.push(worst);
            let (total, err) = heap_totals(&heap);
            return QuadResult {
                value: total,
                error: err,
                evals,
                converged: false,
            };
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gk15(&mut f, a, b);
            evals += 15;
            heap.push(Panel { a, b, value, error });
        }
    }
}

fn heap_totals(heap: &BinaryHeap<Panel>) -> (f64, f64) {
    let mut panels: Vec<(f64, f64, f64)> = heap.iter().map(|p| (p.a, p.value, p.error)).collect();
    panels.sort_by(|x, y| x.0.total_cmp(&y.0));
    let values: Vec<f64> = panels.iter().map(|p| p.1).collect();
    let errors: Vec<f64> = panels.iter().map(|p| p.2).collect();
    (pairwise_sum(&values), pairwise_sum(&errors))
}

/// Options for [`tanh_sinh`].
#[derive(Debug, Clone, Copy)]
pub struct TanhSinhOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub min_level: usize,
    pub max_level: usize,
}

impl Default for TanhSinhOptions {
    fn default() -> Self {
        TanhSinhOptions {
            abs_tol: 1e-300,
            rel_tol: 1e-10,
            min_level: 4,
            max_level: 10,
        }
    }
}

const TANH_SINH_RANGE: f64 = 3.5;

/// Tanh-sinh quadrature on `[a, b]`.
///
/// The integrand receives `(x, x - a, b - x)`; the two distances are computed
/// without cancellation so integrands with `(b - x)^{-1/2}` or `log(x - a)`
/// behaviour can be evaluated accurately next to the endpoints.
pub fn tanh_sinh<F: FnMut(f64, f64, f64) -> f64>(mut f: F, a: f64, b: f64, opts: &TanhSinhOptions) -> QuadResult {
    let half = 0.5 * (b - a);
    let mut node = |s: f64| -> f64 {
        let v = FRAC_PI_2 * s.sinh();
        let e = (-2.0 * v.abs()).exp();
        // 1 - tanh|v| = 2e/(1+e), 1/cosh^2 v = 4e/(1+e)^2
        let near = half * 2.0 * e / (1.0 + e);
        let far = 2.0 * half - near;
        let (dl, dr) = if v >= 0.0 { (far, near) } else { (near, far) };
        let w = half * FRAC_PI_2 * s.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
        if w == 0.0 || dl <= 0.0 || dr <= 0.0 {
            return 0.0;
        }
        let x = if v >= 0.0 { b - dr } else { a + dl };
        let fx = f(x, dl, dr);
        if fx.is_finite() {
            w * fx
        } else {
            0.0
        }
    };

    let mut h = 1.0;
    let mut sum = node(0.0);
    let mut evals = 1;
    let mut k = 1;
    while (k as f64) * h <= TANH_SINH_RANGE {
        let s = k as f64 * h;
        sum += node(s) + node(-s);
        evals += 2;
        k += 1;
    }
    let mut estimate = sum * h;
    let mut error = f64::INFINITY;
    for level in 1..=opts.max_level {
        h *= 0.5;
        let mut add = 0.0;
        let mut k = 1;
        while (k as f64) * h <= TANH_SINH_RANGE {
            let s = k as f64 * h;
            add += node(s) + node(-s);
            evals += 2;
            k += 2;
        }
        sum += add;
        let next = sum * h;
        error = (next - estimate).abs();
        estimate = next;
        if level >= opts.min_level && error <= opts.abs_tol.max(opts.rel_tol * estimate.abs()) {
            return QuadResult {
                value: estimate,
                error,
                evals,
                converged: true,
            };
        }
    }
    QuadResult {
        value: estimate,
        error,
        evals,
        converged: false,
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = x;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss-Hermite nodes and weights for the weight `e^{-x^2}` (Golub-Welsch).
///
/// A rule with `n` nodes integrates `p(x) e^{-x^2}` exactly for `deg p <= 2n - 1`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for i in 0..n - 1 {
        let off = ((i as f64 + 1.0) * 0.5).sqrt();
        jacobi[(i, i + 1)] = off;
        jacobi[(i + 1, i)] = off;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    // Symmetrize to remove eigen-solver noise.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[j].1 + pairs[i].1);
        pairs[i] = (-x, w);
        pairs[j] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    pairs.into_iter().unzip()
}

/// A quadrature rule on the unit sphere `S^{d-1}`; weights sum to its surface area.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub dim: usize,
    pub directions: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// `resolution` is the number of azimuthal points (d = 2) or polar nodes (d = 3);
    /// it is ignored for d = 1, where the "sphere" is `{-1, +1}`.
    pub fn new(dim: usize, resolution: usize) -> Self {
        match dim {
            1 => SphereRule {
                dim,
                directions: vec![vec![1.0], vec![-1.0]],
                weights: vec![1.0, 1.0],
            },
            2 => {
                let n = resolution.max(4);
                let directions = (0..n)
                    .map(|k| {
                        let th = 2.0 * PI * (k as f64 + 0.5) / n as f64;
                        vec![th.cos(), th.sin()]
                    })
                    .collect();
                SphereRule {
                    dim,
                    directions,
                    weights: vec![2.0 * PI / n as f64; n],
                }
            }
            3 => {
                let n = resolution.max(4);
                let (ct, wt) = gauss_legendre(n);
                let m = 2 * n;
                let mut directions = Vec::with_capacity(n * m);
                let mut weights = Vec::with_capacity(n * m);
                for (c, w) in ct.iter().zip(&wt) {
                    let s = (1.0 - c * c).sqrt();
                    for k in 0..m {
                        let ph = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                        directions.push(vec![s * ph.cos(), s * ph.sin(), *c]);
                        weights.push(w * 2.0 * PI / m as f64);
                    }
                }
                SphereRule {
                    dim,
                    directions,
                    weights,
                }
            }
            _ => panic!("sphere rules are provided for d <= 3"),
        }
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Surface area of `S^{d-1}`.
pub fn sphere_area(dim: usize) -> f64 {
    let d = dim as f64;
    2.0 * PI.powf(d / 2.0) / libm::tgamma(d / 2.0)
}

/// Lebesgue volume of the unit ball in `R^d`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    let d = dim as f64;
    PI.powf(d / 2.0) / libm::tgamma(d / 2.0 + 1.0)
}

/// Pairwise (tree) summation in a fixed order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 16 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_integrates_smooth_and_peaked_functions() {
        let r = gauss_kronrod(|x| x.cos(), 0.0, 1.0, &GkOptions::default());
        assert!((r.value - 1f64.sin()).abs() < 1e-13);
        let r = gauss_kronrod(|x| (-x * x * 400.0).exp(), -1.0, 1.0, &GkOptions::default());
        assert!((r.value - (PI / 400.0).sqrt()).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularities() {
        let r = tanh_sinh(|_, _, dr| dr.powf(-0.5), 0.0, 1.0, &TanhSinhOptions::default());
        assert!((r.value - 2.0).abs() < 1e-9, "{r:?}");
        let r = tanh_sinh(|_, dl, _| dl.ln(), 0.0, 1.0, &TanhSinhOptions::default());
        assert!((r.value + 1.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(5);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn hermite_rule_moments() {
        let (x, w) = gauss_hermite(10);
        let m0: f64 = w.iter().sum();
        let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((m0 - PI.sqrt()).abs() < 1e-13);
        assert!((m4 - 0.75 * PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sphere_rules_have_correct_area() {
        for d in 1..=3 {
            let rule = SphereRule::new(d, 16);
            assert!((rule.area() - sphere_area(d)).abs() < 1e-12, "d = {d}");
        }
        assert!((unit_ball_volume(2) - PI).abs() < 1e-14);
    }
}
