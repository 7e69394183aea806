//! Executable checks of the lower bounds on the local Hamiltonians.

use num_rational::Rational64;
use num_traits::{One, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environment::{
    h_left, h_left_no_exp, h_ln, h_middle_no_exp2, h_right, h_right_no_exp, Cycle, HamiltonianParams, Rung,
};
use crate::error::{Error, Result};
use crate::ladder::{forbidden, TreeState};
use crate::rng::RngSpec;
use crate::scalar::Energy;

type Q = Rational64;

fn q(p: i64, r: i64) -> Q {
    Q::new(p, r)
}

fn qi(b: bool) -> Q {
    if b {
        Q::one()
    } else {
        Q::zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lemma31Coefficients {
    pub alpha_lo: Q,
    pub beta_lo: Q,
    pub gamma_lo: Q,
    pub alpha_hi: Q,
    pub beta_hi: Q,
    pub gamma_hi: Q,
    pub kappa_lo: Q,
    pub kappa_hi: Q,
    pub kappa_lo2: Q,
    pub kappa_hi2: Q,
}

impl Lemma31Coefficients {
    pub fn all(&self) -> [Q; 10] {
        [
            self.alpha_lo, self.beta_lo, self.gamma_lo, self.alpha_hi, self.beta_hi, self.gamma_hi,
            self.kappa_lo, self.kappa_hi, self.kappa_lo2, self.kappa_hi2,
        ]
    }
}

pub fn lemma31_coefficients(t: TreeState, t2: TreeState) -> Result<Lemma31Coefficients> {
    use TreeState::*;
    if forbidden(t, t2) {
        return Err(Error::Domain("(A,B) carries infinite energy; nothing to certify".into()));
    }
    let is = |x: TreeState, y: TreeState| qi(t == x && t2 == y);
    let (ta, tb, tc) = (qi(t == A), qi(t == B), qi(t == C));
    let (sa, sb, sc, sd) = (qi(t2 == A), qi(t2 == B), qi(t2 == C), qi(t2 == D));
    let alpha_lo = q(1, 10) * (sa - sb + sc - is(A, D) + is(B, D) + is(C, D))
        + q(1, 5) * (q(3, 1) + ta - tb - q(2, 1) * tc + is(C, B));
    let beta_lo = q(1, 10) * (sb - sa - q(3, 1) * sc + is(A, D))
        + q(1, 5) * (q(2, 1) - ta + tb - is(B, A) + is(C, B) + is(A, C) - is(B, C) - is(B, D));
    let gamma_lo = Q::one() - alpha_lo - beta_lo;
    let alpha_hi = q(4, 5) + q(4, 5) * ta - alpha_lo;
    let beta_hi = q(2, 5) + q(4, 5) * sb - beta_lo;
    let gamma_hi = Q::one() - alpha_hi - beta_hi;
    let kappa_lo = q(1, 4) * (Q::one() + is(C, B) - sb - is(A, D) - q(1, 2) * is(D, D));
    let kappa_lo2 = q(1, 4) * (Q::one() - sb - ta + is(B, B) + is(C, B) + is(A, C)) + q(1, 8) * (is(A, D) - sd);
    Ok(Lemma31Coefficients {
        alpha_lo,
        beta_lo,
        gamma_lo,
        alpha_hi,
        beta_hi,
        gamma_hi,
        kappa_lo,
        kappa_hi: q(1, 4) - kappa_lo,
        kappa_lo2,
        kappa_hi2: q(1, 4) - kappa_lo2,
    })
}

/// Linear form over (X̲, X̄, X̲′, X̄′, Z, Γ).
type Form = [Q; 6];
pub const LEMMA31_VARIABLES: [&str; 6] = ["Xlo", "Xhi", "Xlo'", "Xhi'", "Z", "Gamma"];

fn add(a: Form, b: Form) -> Form {
    std::array::from_fn(|k| a[k] + b[k])
}
fn scale(c: Q, a: Form) -> Form {
    a.map(|v| c * v)
}
fn var(k: usize) -> Form {
    std::array::from_fn(|j| qi(j == k))
}

/// Coefficients of K + H_linear,½ + H_tree − Γ/4 − (κ̲X̲ + κ̄X̄ + κ̲′X̲′ + κ̄′X̄′),
/// with W = Γ + U′ − U eliminated.
pub fn lemma31_residuals(t: TreeState, t2: TreeState, c: &Lemma31Coefficients) -> [Q; 6] {
    use TreeState::*;
    let (xl, xh, xl2, xh2, z, g) = (var(0), var(1), var(2), var(3), var(4), var(5));
    let half = q(1, 2);
    let u = scale(half, add(xl, xh));
    let u2 = scale(half, add(xl2, xh2));
    let w = add(g, add(u2, scale(-Q::one(), u)));
    let hw = scale(half, w);
    let mhw = scale(-half, w);
    let k = scale(
        q(5, 4),
        [
            scale(c.alpha_lo, add(xl, hw)),
            scale(c.beta_lo, add(xl2, mhw)),
            scale(c.gamma_lo, z),
            scale(c.alpha_hi, add(xh, hw)),
            scale(c.beta_hi, add(xh2, mhw)),
            scale(c.gamma_hi, z),
        ]
        .into_iter()
        .fold([Q::zero(); 6], add),
    );
    let linear = scale(-Q::one(), add(u, add(u2, z)));
    let (ta, tb) = (qi(t == A), qi(t == B));
    let (sa, sb) = (qi(t2 == A), qi(t2 == B));
    let tree = [
        scale(half * qi(t == C), xl),
        scale(half * qi(t == D), xh),
        scale(half * qi(t2 == C), xl2),
        scale(half * qi(t2 == D), xh2),
        scale(sb + ta, z),
        scale(half * (sb - ta), w),
        scale(-half * (ta - tb), u),
        scale(half * (sa - sb), u2),
    ]
    .into_iter()
    .fold([Q::zero(); 6], add);
    let lhs = add(add(k, linear), add(tree, scale(-q(1, 4), g)));
    let rhs = [c.kappa_lo, c.kappa_hi, c.kappa_lo2, c.kappa_hi2, Q::zero(), Q::zero()];
    std::array::from_fn(|j| lhs[j] - rhs[j])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma31Pair {
    pub t: TreeState,
    pub t2: TreeState,
    pub coefficients: Lemma31Coefficients,
    pub residuals: [Q; 6],
    pub nonnegative: bool,
    pub sums_exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma31Report {
    pub pairs: Vec<Lemma31Pair>,
    pub passed: bool,
    pub failures: Vec<String>,
}

pub fn verify_lemma31_with(coeffs: impl Fn(TreeState, TreeState) -> Result<Lemma31Coefficients>) -> Lemma31Report {
    let mut pairs = Vec::new();
    let mut failures = Vec::new();
    for t in TreeState::ALL {
        for t2 in TreeState::ALL {
            if forbidden(t, t2) {
                continue;
            }
            let c = match coeffs(t, t2) {
                Ok(c) => c,
                Err(e) => {
                    failures.push(format!("({t:?},{t2:?}): {e}"));
                    continue;
                }
            };
            let residuals = lemma31_residuals(t, t2, &c);
            for (name, r) in LEMMA31_VARIABLES.iter().zip(&residuals) {
                if !r.is_zero() {
                    failures.push(format!("({t:?},{t2:?}) coefficient of {name}: residual {r}"));
                }
            }
            let nonnegative = c.all().iter().all(|v| *v >= Q::zero());
            if !nonnegative {
                failures.push(format!("({t:?},{t2:?}): negative coefficient"));
            }
            let sums_exact = c.alpha_lo + c.beta_lo + c.gamma_lo == Q::one()
                && c.alpha_hi + c.beta_hi + c.gamma_hi == Q::one()
                && c.kappa_lo + c.kappa_hi == q(1, 4)
                && c.kappa_lo2 + c.kappa_hi2 == q(1, 4);
            if !sums_exact {
                failures.push(format!("({t:?},{t2:?}): sums not exact"));
            }
            pairs.push(Lemma31Pair { t, t2, coefficients: c, residuals, nonnegative, sums_exact });
        }
    }
    Lemma31Report { passed: failures.is_empty() && pairs.len() == 15, pairs, failures }
}

pub fn verify_lemma31() -> Lemma31Report {
    verify_lemma31_with(lemma31_coefficients)
}

/// c₇(a) = (1/16) min{a − ½, 1}.
pub fn c7(a: f64) -> f64 {
    (a - 0.5).min(1.0) / 16.0
}

/// c₁₁(a) = ½ min{a − ¾, 1/6}.
pub fn c11(a: f64) -> f64 {
    0.5 * (a - 0.75).min(1.0 / 6.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub samples: usize,
    /// min over samples of LHS − RHS; +∞ when every sample had infinite LHS.
    pub min_margin: f64,
    /// Continuous coordinates and tree states of the worst sample.
    pub witness: Vec<f64>,
    pub witness_trees: Vec<TreeState>,
    /// Samples with margin below −10⁻⁹.
    pub violations: usize,
}

impl BoundReport {
    fn empty() -> Self {
        BoundReport { samples: 0, min_margin: f64::INFINITY, witness: vec![], witness_trees: vec![], violations: 0 }
    }
    fn push(&mut self, margin: f64, point: impl FnOnce() -> (Vec<f64>, Vec<TreeState>)) {
        self.samples += 1;
        if margin < -1e-9 {
            self.violations += 1;
        }
        if margin < self.min_margin {
            self.min_margin = margin;
            let (w, t) = point();
            self.witness = w;
            self.witness_trees = t;
        }
    }
    fn merge(mut self, other: BoundReport) -> Self {
        self.samples += other.samples;
        self.violations += other.violations;
        let tie = other.min_margin == self.min_margin && other.witness.iter().map(|v| v.to_bits()).lt(self.witness.iter().map(|v| v.to_bits()));
        if other.min_margin < self.min_margin || tie {
            self.min_margin = other.min_margin;
            self.witness = other.witness;
            self.witness_trees = other.witness_trees;
        }
        self
    }
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.min_margin >= -1e-9
    }
    /// A genuine violation: margin below −10⁻⁶.
    pub fn hard_failure(&self) -> bool {
        self.min_margin < -1e-6
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiddleSample {
    pub c: Cycle<f64>,
    pub r: Rung<f64>,
    pub c2: Cycle<f64>,
}

impl MiddleSample {
    fn coords(&self) -> (Vec<f64>, Vec<TreeState>) {
        (vec![self.c.xlo, self.c.xhi, self.r.z, self.r.gamma, self.c2.xlo, self.c2.xhi], vec![self.c.t, self.c2.t])
    }
    fn l1(&self) -> f64 {
        self.c.xlo.abs() + self.c.xhi.abs() + self.r.z.abs() + self.r.gamma.abs() + self.c2.xlo.abs() + self.c2.xhi.abs()
    }
}

fn random_cycle(r: &mut impl Rng, radius: f64) -> Cycle<f64> {
    Cycle::new(
        r.random_range(-radius..=radius),
        r.random_range(-radius..=radius),
        if r.random::<bool>() { 1 } else { -1 },
        TreeState::from_index(r.random_range(0..4)),
    )
}

/// Uniform samples on [−R, R]⁶ with uniform tree states and signs. Radii
/// are drawn log-uniformly up to R so that small scales are covered too.
pub fn uniform_middle_samples(rng: RngSpec, count: usize, radius: f64) -> Vec<MiddleSample> {
    let mut r = rng.rng();
    (0..count)
        .map(|_| {
            let rad = radius * (r.random_range(-4.0f64..0.0)).exp2().max(if r.random::<bool>() { 1.0 } else { 0.0 });
            MiddleSample {
                c: random_cycle(&mut r, rad),
                r: Rung { z: r.random_range(-rad..=rad), gamma: r.random_range(-rad..=rad) },
                c2: random_cycle(&mut r, rad),
            }
        })
        .collect()
}

/// H_middle,a,η − H_expII ≥ c₇(a)·[|X̲| + |X̄| + |Z| + |Γ| + |X̲′| + |X̄′|].
pub fn check_middle_bound(samples: &[MiddleSample], a: f64, eta: f64) -> Result<BoundReport> {
    if !(a > 0.5) {
        return Err(Error::Domain(format!("a = {a} must exceed 1/2")));
    }
    let p = HamiltonianParams::new(a, eta)?;
    let k = c7(a);
    Ok(samples
        .par_chunks(4096)
        .map(|chunk| {
            let mut rep = BoundReport::empty();
            for s in chunk {
                let m = match h_middle_no_exp2(&s.c, &s.r, &s.c2, &p) {
                    Energy::Infinite => f64::INFINITY,
                    Energy::Finite(h) => h - k * s.l1(),
                };
                rep.push(m, || s.coords());
            }
            rep
        })
        .reduce(BoundReport::empty, BoundReport::merge))
}

/// The middle bound on the full grid {lo, lo+step, …, hi}⁶ × all 16 tree pairs.
pub fn grid_middle_bound(a: f64, eta: f64, lo: f64, hi: f64, step: f64) -> Result<BoundReport> {
    let pts: Vec<f64> = (0..).map(|k| lo + step * k as f64).take_while(|&x| x <= hi + 1e-12).collect();
    let m = pts.len();
    let p = HamiltonianParams::new(a, eta)?;
    let k = c7(a);
    Ok((0..m * m)
        .into_par_iter()
        .map(|outer| {
            let mut rep = BoundReport::empty();
            let (x1, x2) = (pts[outer / m], pts[outer % m]);
            for &z in &pts {
                for &g in &pts {
                    for &y1 in &pts {
                        for &y2 in &pts {
                            for t in TreeState::ALL {
                                for t2 in TreeState::ALL {
                                    let s = MiddleSample {
                                        c: Cycle::new(x1, x2, 1, t),
                                        r: Rung { z, gamma: g },
                                        c2: Cycle::new(y1, y2, 1, t2),
                                    };
                                    let mg = match h_middle_no_exp2(&s.c, &s.r, &s.c2, &p) {
                                        Energy::Infinite => f64::INFINITY,
                                        Energy::Finite(h) => h - k * s.l1(),
                                    };
                                    rep.push(mg, || s.coords());
                                }
                            }
                        }
                    }
                }
            }
            rep
        })
        .reduce(BoundReport::empty, BoundReport::merge))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub z: f64,
    pub c: Cycle<f64>,
}

pub fn uniform_boundary_samples(rng: RngSpec, count: usize, radius: f64) -> Vec<BoundarySample> {
    let mut r = rng.rng();
    (0..count)
        .map(|_| {
            let rad = radius * (r.random_range(-4.0f64..0.0)).exp2().max(if r.random::<bool>() { 1.0 } else { 0.0 });
            BoundarySample { z: r.random_range(-rad..=rad), c: random_cycle(&mut r, rad) }
        })
        .collect()
}

pub fn grid_boundary_samples(lo: f64, hi: f64, step: f64) -> Vec<BoundarySample> {
    let pts: Vec<f64> = (0..).map(|k| lo + step * k as f64).take_while(|&x| x <= hi + 1e-12).collect();
    let mut out = Vec::new();
    for &z in &pts {
        for &x1 in &pts {
            for &x2 in &pts {
                for t in TreeState::ALL {
                    out.push(BoundarySample { z, c: Cycle::new(x1, x2, 1, t) });
                }
            }
        }
    }
    out
}

/// At a = ¾: H − H_exp ≥ Z/4. For a > ¾: H ≥ c₁₁(a)[|X̲| + |X̄| + |Z|].
pub fn boundary_margin(s: &BoundarySample, a: f64, side: Side) -> f64 {
    if a == 0.75 {
        let h = match side {
            Side::Left => h_left_no_exp(s.z, &s.c, a),
            Side::Right => h_right_no_exp(&s.c, s.z, a),
        };
        h - 0.25 * s.z
    } else {
        let h = match side {
            Side::Left => h_left(s.z, &s.c, a),
            Side::Right => h_right(&s.c, s.z, a),
        };
        h - c11(a) * (s.c.xlo.abs() + s.c.xhi.abs() + s.z.abs())
    }
}

pub fn check_boundary_bound(samples: &[BoundarySample], a: f64, side: Side) -> Result<BoundReport> {
    if a < 0.75 {
        return Err(Error::Domain(format!("a = {a} below 3/4")));
    }
    Ok(samples
        .par_chunks(4096)
        .map(|chunk| {
            let mut rep = BoundReport::empty();
            for s in chunk {
                rep.push(boundary_margin(s, a, side), || (vec![s.z, s.c.xlo, s.c.xhi], vec![s.c.t]));
            }
            rep
        })
        .reduce(BoundReport::empty, BoundReport::merge))
}

/// First and second γ-derivatives of H_middle,a,0 at (ω | Z, Γ + γ·1_{σ≠σ′} | ω′).
pub fn gamma_derivatives(s: &MiddleSample, a: f64, gamma: f64) -> (f64, f64) {
    if s.c.sigma == s.c2.sigma {
        return (0.0, 0.0);
    }
    let w = s.r.gamma + gamma + s.c2.u() - s.c.u();
    let k = 0.5 * (3.0 * a + 1.0);
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for (x, x2) in [(s.c.xlo, s.c2.xlo), (s.c.xhi, s.c2.xhi)] {
        // ln(e^{x+W/2} + e^{x′−W/2} + e^Z), normalized weights p, q, r
        let (e1, e2, e3) = (x + 0.5 * w, x2 - 0.5 * w, s.r.z);
        let m = e1.max(e2).max(e3);
        let (p, q, r) = ((e1 - m).exp(), (e2 - m).exp(), (e3 - m).exp());
        let t = p + q + r;
        let (p, q) = (p / t, q / t);
        let g1 = 0.5 * (p - q);
        d1 += k * g1;
        d2 += k * (0.25 * (p + q) - g1 * g1);
    }
    let tree = 0.5 * (if s.c2.t == TreeState::B { 1.0 } else { 0.0 } - if s.c.t == TreeState::A { 1.0 } else { 0.0 });
    d1 += tree;
    let ez = (-s.r.z).exp();
    d1 += 0.25 * ((0.5 * w).exp() - (-0.5 * w).exp()) * ez;
    d2 += 0.125 * ((0.5 * w).exp() + (-0.5 * w).exp()) * ez;
    (d1, d2)
}

/// H_middle,a,0 at the γ-shifted point, for finite-difference checks.
pub fn shifted_energy(s: &MiddleSample, a: f64, gamma: f64) -> f64 {
    let shift = if s.c.sigma != s.c2.sigma { gamma } else { 0.0 };
    let p = HamiltonianParams { a, eta: 0.0 };
    let r = Rung { z: s.r.z, gamma: s.r.gamma + shift };
    crate::environment::h_middle(&s.c, &r, &s.c2, &p).to_f64()
}

/// max over samples and a γ grid of max_j |∂ʲ| − H_expII at the unshifted point.
pub fn derivative_excess(samples: &[MiddleSample], a: f64, gammas: &[f64]) -> f64 {
    samples
        .par_iter()
        .filter(|s| !forbidden(s.c.t, s.c2.t))
        .map(|s| {
            let w = s.r.gamma + s.c2.u() - s.c.u();
            let e2 = crate::environment::h_exp2(s.c.sigma, s.r.z, w, s.c2.sigma);
            gammas
                .iter()
                .map(|&g| {
                    let (d1, d2) = gamma_derivatives(s, a, g);
                    d1.abs().max(d2.abs()) - e2
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// ĉ₈ from a pilot sample: empirical max excess plus 10% headroom.
pub fn calibrate_c8(pilot: &[MiddleSample], a: f64, gammas: &[f64]) -> f64 {
    let m = derivative_excess(pilot, a, gammas).max(0.0);
    1.1 * m
}

/// Unused by the bound but handy: the H_ln piece alone.
pub fn h_ln_only(s: &MiddleSample, a: f64) -> f64 {
    let w = s.r.gamma + s.c2.u() - s.c.u();
    h_ln(&s.c, s.r.z, w, &s.c2, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use TreeState::*;

    #[test]
    fn lemma31_examples() {
        let c = lemma31_coefficients(D, D).unwrap();
        assert_eq!((c.kappa_lo, c.kappa_hi), (q(1, 8), q(1, 8)));
        let c = lemma31_coefficients(A, A).unwrap();
        assert_eq!((c.alpha_lo, c.beta_lo, c.gamma_lo), (q(9, 10), q(1, 10), Q::zero()));
        assert!(lemma31_coefficients(A, B).is_err());
    }

    #[test]
    fn lemma31_exact() {
        let r = verify_lemma31();
        assert!(r.passed, "{:?}", r.failures);
        assert_eq!(r.pairs.len(), 15);
        for p in &r.pairs {
            assert!(p.residuals.iter().all(|v| v.is_zero()));
            assert!(p.coefficients.all().iter().all(|v| *v >= Q::zero() && *v <= Q::one()));
        }
    }

    #[test]
    fn lemma31_negative_control() {
        let r = verify_lemma31_with(|t, t2| {
            let mut c = lemma31_coefficients(t, t2)?;
            if (t, t2) == (C, D) {
                c.kappa_lo += q(1, 1000);
            }
            Ok(c)
        });
        assert!(!r.passed);
        let p = r.pairs.iter().find(|p| (p.t, p.t2) == (C, D)).unwrap();
        assert_eq!(p.residuals[0], -q(1, 1000));
        assert!(p.residuals[1..].iter().all(|v| v.is_zero()));
    }

    #[test]
    fn lemma31_numeric_spot_check() {
        let p = HamiltonianParams { a: 0.5, eta: 0.25 };
        let samples = uniform_middle_samples(RngSpec::new(31, 0), 1000, 20.0);
        for s in &samples {
            if forbidden(s.c.t, s.c2.t) {
                continue;
            }
            let c = lemma31_coefficients(s.c.t, s.c2.t).unwrap();
            let k = |v: Q| *v.numer() as f64 / *v.denom() as f64;
            let w = s.r.gamma + s.c2.u() - s.c.u();
            let lhs = h_ln(&s.c, s.r.z, w, &s.c2, 0.5) - (s.c.u() + s.c2.u() + s.r.z)
                + crate::environment::h_tree(&s.c, s.r.z, w, &s.c2)
                - 0.25 * s.r.gamma;
            let rhs = k(c.kappa_lo) * s.c.xlo + k(c.kappa_hi) * s.c.xhi + k(c.kappa_lo2) * s.c2.xlo + k(c.kappa_hi2) * s.c2.xhi;
            assert!(lhs - rhs >= -1e-9, "{lhs} < {rhs}");
            let _ = p;
        }
    }

    #[test]
    fn middle_bound_examples() {
        let zero = MiddleSample { c: Cycle::new(0.0, 0.0, 1, C), r: Rung { z: 0.0, gamma: 0.0 }, c2: Cycle::new(0.0, 0.0, 1, C) };
        let r = check_middle_bound(&[zero], 1.0, 0.25).unwrap();
        assert!((r.min_margin - (4.0 * 3f64.ln() + 1.0)).abs() < 1e-12);
        let ab = MiddleSample { c: Cycle::new(0.0, 0.0, 1, A), ..zero };
        let ab = MiddleSample { c2: Cycle::new(0.0, 0.0, 1, B), ..ab };
        assert_eq!(check_middle_bound(&[ab], 1.0, 0.25).unwrap().min_margin, f64::INFINITY);
        let samples = uniform_middle_samples(RngSpec::new(32, 0), 20_000, 50.0);
        for a in [0.8, 1.0, 5.0] {
            for eta in [-0.25, 0.0, 0.25] {
                let r = check_middle_bound(&samples, a, eta).unwrap();
                assert!(r.passed(), "a={a} eta={eta}: {r:?}");
            }
        }
        assert!(check_middle_bound(&samples, 0.5, 0.0).is_err());
    }

    #[test]
    fn boundary_examples() {
        let s = BoundarySample { z: 0.0, c: Cycle::new(0.0, 0.0, 1, C) };
        assert!((boundary_margin(&s, 1.0, Side::Left) - (2.5 * 2f64.ln() + 1.0)).abs() < 1e-12);
        let samples = uniform_boundary_samples(RngSpec::new(33, 0), 20_000, 50.0);
        for side in [Side::Left, Side::Right] {
            assert!(check_boundary_bound(&samples, 0.75, side).unwrap().passed());
            assert!(check_boundary_bound(&samples, 1.0, side).unwrap().passed());
        }
        assert!(check_boundary_bound(&samples, 0.7, Side::Left).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let samples = uniform_middle_samples(RngSpec::new(34, 0), 2000, 3.0);
        for s in samples.iter().filter(|s| !forbidden(s.c.t, s.c2.t)) {
            let g = 0.3;
            let (d1, d2) = gamma_derivatives(s, 1.0, g);
            if s.c.sigma == s.c2.sigma {
                assert_eq!((d1, d2), (0.0, 0.0));
                continue;
            }
            let f = |x: f64| shifted_energy(s, 1.0, x);
            let h = 1e-4;
            let fd1 = (f(g + h) - f(g - h)) / (2.0 * h);
            let fd2 = (f(g + h) - 2.0 * f(g) + f(g - h)) / (h * h);
            assert!((fd1 - d1).abs() <= 1e-6 * (1.0 + d1.abs()) + 1e-6 * f(g).abs(), "{fd1} vs {d1}");
            assert!((fd2 - d2).abs() <= 1e-4 * (1.0 + d2.abs()) + 1e-6 * f(g).abs(), "{fd2} vs {d2}");
        }
    }
}
