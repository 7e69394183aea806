//! The environment density Φ⁽ⁿ⁾, the spin coordinates Ψ and the local
//! Hamiltonians of the Gibbs representation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ladder::{self, EdgeKind, EdgeWeights, Normalization, SpanningTreeCode, TreeState, Vertex};
use crate::scalar::{lse2, lse3, Energy, Scalar};

/// One cycle component (X̲, X̄, σ, T).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cycle<F> {
    pub xlo: F,
    pub xhi: F,
    pub sigma: i8,
    pub t: TreeState,
}

impl<F: Scalar> Cycle<F> {
    pub fn new(xlo: F, xhi: F, sigma: i8, t: TreeState) -> Self {
        Cycle { xlo, xhi, sigma, t }
    }
    pub fn u(&self) -> F {
        F::of(0.5) * (self.xlo + self.xhi)
    }
    pub fn reflected(&self) -> Self {
        Cycle { t: self.t.reflect(), ..*self }
    }
}

/// One rung component (Z, Γ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rung<F> {
    pub z: F,
    pub gamma: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinConfig<F> {
    #[serde(rename = "Z0")]
    pub z0: F,
    #[serde(rename = "Xlo")]
    pub xlo: Vec<F>,
    #[serde(rename = "Xhi")]
    pub xhi: Vec<F>,
    pub sigma: Vec<i8>,
    #[serde(rename = "T")]
    pub tree: Vec<TreeState>,
    /// Z₁ … Z_{n−1}.
    #[serde(rename = "Z")]
    pub z: Vec<F>,
    #[serde(rename = "Gamma")]
    pub gamma: Vec<F>,
    #[serde(rename = "Zn")]
    pub zn: F,
}

impl<F: Scalar> SpinConfig<F> {
    pub fn zero(n: usize) -> Self {
        SpinConfig {
            z0: F::zero(),
            xlo: vec![F::zero(); n],
            xhi: vec![F::zero(); n],
            sigma: vec![1; n],
            tree: vec![TreeState::C; n],
            z: vec![F::zero(); n - 1],
            gamma: vec![F::zero(); n - 1],
            zn: F::zero(),
        }
    }

    pub fn n(&self) -> usize {
        self.xlo.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 || self.xhi.len() != n || self.sigma.len() != n || self.tree.len() != n {
            return Err(Error::Domain("cycle vectors must share a length n >= 1".into()));
        }
        if self.z.len() != n - 1 || self.gamma.len() != n - 1 {
            return Err(Error::Domain("rung vectors must have length n-1".into()));
        }
        if self.sigma.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Domain("signs must be +1 or -1".into()));
        }
        Ok(())
    }

    /// True when no neighbouring pair is (A, B).
    pub fn admissible(&self) -> bool {
        !self.tree.windows(2).any(|w| ladder::forbidden(w[0], w[1]))
    }

    /// Cycle i, 1-based.
    pub fn cycle(&self, i: usize) -> Cycle<F> {
        Cycle::new(self.xlo[i - 1], self.xhi[i - 1], self.sigma[i - 1], self.tree[i - 1])
    }

    /// Rung i, 1 ≤ i ≤ n−1.
    pub fn rung(&self, i: usize) -> Rung<F> {
        Rung { z: self.z[i - 1], gamma: self.gamma[i - 1] }
    }

    pub fn u(&self, i: usize) -> F {
        F::of(0.5) * (self.xlo[i - 1] + self.xhi[i - 1])
    }

    pub fn w(&self, i: usize) -> F {
        self.gamma[i - 1] + self.u(i + 1) - self.u(i)
    }

    /// Y₁ … Yₙ.
    pub fn ys(&self) -> Vec<F> {
        let n = self.n();
        let mut y = Vec::with_capacity(n);
        let mut cur = -self.z0;
        y.push(cur);
        for i in 1..n {
            cur = cur - self.w(i);
            y.push(cur);
        }
        y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentPoint<F> {
    pub x: EdgeWeights<F>,
    pub y: Vec<F>,
    pub code: SpanningTreeCode,
}

impl<F: Scalar> EnvironmentPoint<F> {
    pub fn new(x: EdgeWeights<F>, y: Vec<F>, code: SpanningTreeCode) -> Result<Self> {
        if x.rung(0) != F::one() {
            return Err(Error::Domain("z0 must equal 1".into()));
        }
        if y.len() != x.n() || code.len() != x.n() {
            return Err(Error::Domain("y and code must have length n".into()));
        }
        if y.iter().any(|v| *v == F::zero()) {
            return Err(Error::Domain("y has a zero entry".into()));
        }
        Ok(EnvironmentPoint { x, y, code })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianParams<F> {
    pub a: F,
    pub eta: F,
}

impl<F: Scalar> HamiltonianParams<F> {
    pub fn new(a: F, eta: F) -> Result<Self> {
        if !(a > F::zero()) {
            return Err(Error::Domain(format!("a = {} must be positive", a.f64())));
        }
        if eta.abs() > F::of(0.25) {
            return Err(Error::Domain(format!("eta = {} outside [-1/4, 1/4]", eta.f64())));
        }
        Ok(HamiltonianParams { a, eta })
    }
}

/// ln Φ⁽ⁿ⁾(x, y, T), unnormalized.
pub fn log_phi<F: Scalar>(x: &EdgeWeights<F>, y: &[F], code: &SpanningTreeCode, a: F) -> Result<F> {
    let n = x.n();
    let tree = ladder::tree_decode(code, n)?;
    let half = F::of(0.5);
    let mut s = F::zero();
    for (e, &v) in x.values().iter().enumerate() {
        s = s + (a - F::of(1.5)) * v.ln();
        if tree.contains(e) {
            s = s + v.ln();
        }
    }
    let lnv = |v: Vertex| x.vertex_weight(v).ln();
    s = s - (a + half) * lnv(Vertex::lower(0)) - a * lnv(Vertex::upper(0));
    let mid = (F::of(3.0) * a + F::one()) * half;
    for i in 1..n {
        s = s - mid * (lnv(Vertex::lower(i)) + lnv(Vertex::upper(i)));
    }
    s = s - (a + half) * (lnv(Vertex::lower(n)) + lnv(Vertex::upper(n)));
    Ok(s - half * ladder::cycle_form(x, y)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizeMode {
    Simplex,
    RungZeroUnit,
}

/// Rescale (x, y) ↦ (x/c, y/√c) with c the weight sum or z₀.
pub fn normalize_weights<F: Scalar>(x: &EdgeWeights<F>, y: &[F], mode: NormalizeMode) -> Result<(EdgeWeights<F>, Vec<F>)> {
    let (c, tag) = match mode {
        NormalizeMode::Simplex => (x.sum(), Normalization::Simplex),
        NormalizeMode::RungZeroUnit => (x.rung(0), Normalization::RungZeroUnit),
    };
    if x.normalization() == tag {
        return Ok((x.clone(), y.to_vec()));
    }
    let mut vals: Vec<F> = x.values().iter().map(|&v| v / c).collect();
    if mode == NormalizeMode::RungZeroUnit {
        vals[0] = F::one();
    } else {
        // absorb the rounding so the tag check passes
        let s: F = vals.iter().fold(F::zero(), |a, &b| a + b);
        for v in &mut vals {
            *v = *v / s;
        }
    }
    let sq = c.sqrt();
    Ok((EdgeWeights::new(vals, tag)?, y.iter().map(|&v| v / sq).collect()))
}

fn ind<F: Scalar>(b: bool) -> F {
    if b {
        F::one()
    } else {
        F::zero()
    }
}

/// The pieces of H_middle,a,η, each finite; `constraint` flags (T, T′) = (A, B).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiddleParts<F> {
    pub ln: F,
    pub linear: F,
    pub tree: F,
    pub exp1: F,
    pub exp2: F,
    pub eta_term: F,
    pub constraint: bool,
}

impl<F: Scalar> MiddleParts<F> {
    pub fn total(&self) -> Energy<F> {
        if self.constraint {
            Energy::Infinite
        } else {
            Energy::Finite(self.ln + self.linear + self.tree + self.exp1 + self.exp2 + self.eta_term)
        }
    }
    pub fn without_exp2(&self) -> Energy<F> {
        if self.constraint {
            Energy::Infinite
        } else {
            Energy::Finite(self.ln + self.linear + self.tree + self.exp1 + self.eta_term)
        }
    }
}

pub fn h_ln<F: Scalar>(c: &Cycle<F>, z: F, w: F, c2: &Cycle<F>, a: F) -> F {
    let half = F::of(0.5);
    let k = (F::of(3.0) * a + F::one()) * half;
    let hw = half * w;
    k * (lse3(c.xlo + hw, c2.xlo - hw, z) + lse3(c.xhi + hw, c2.xhi - hw, z))
}

pub fn h_tree<F: Scalar>(c: &Cycle<F>, z: F, w: F, c2: &Cycle<F>) -> F {
    use TreeState::*;
    let half = F::of(0.5);
    let (t, t2) = (c.t, c2.t);
    half * (ind::<F>(t == C) * c.xlo + ind::<F>(t == D) * c.xhi + ind::<F>(t2 == C) * c2.xlo + ind::<F>(t2 == D) * c2.xhi)
        + (ind::<F>(t2 == B) + ind::<F>(t == A)) * z
        + half * (ind::<F>(t2 == B) - ind::<F>(t == A)) * w
        - half * (ind::<F>(t == A) - ind::<F>(t == B)) * c.u()
        + half * (ind::<F>(t2 == A) - ind::<F>(t2 == B)) * c2.u()
}

pub fn h_exp2<F: Scalar>(sigma: i8, z: F, w: F, sigma2: i8) -> F {
    let q = F::of(0.25) * w;
    let d = F::of(sigma as f64) * q.exp() - F::of(sigma2 as f64) * (-q).exp();
    F::of(0.5) * d * d * (-z).exp()
}

pub fn middle_parts<F: Scalar>(c: &Cycle<F>, r: &Rung<F>, c2: &Cycle<F>, p: &HamiltonianParams<F>) -> MiddleParts<F> {
    let a = p.a;
    let half = F::of(0.5);
    let quarter = F::of(0.25);
    let w = r.gamma + c2.u() - c.u();
    MiddleParts {
        ln: h_ln(c, r.z, w, c2, a),
        linear: -(a + half) * (c.u() + c2.u() + r.z),
        tree: h_tree(c, r.z, w, c2),
        exp1: quarter * ((-c.xlo).exp() + (-c.xhi).exp() + (-c2.xlo).exp() + (-c2.xhi).exp()),
        exp2: h_exp2(c.sigma, r.z, w, c2.sigma),
        eta_term: -p.eta * r.gamma,
        constraint: ladder::forbidden(c.t, c2.t),
    }
}

pub fn h_middle<F: Scalar>(c: &Cycle<F>, r: &Rung<F>, c2: &Cycle<F>, p: &HamiltonianParams<F>) -> Energy<F> {
    middle_parts(c, r, c2, p).total()
}

/// H_middle − H_expII.
pub fn h_middle_no_exp2<F: Scalar>(c: &Cycle<F>, r: &Rung<F>, c2: &Cycle<F>, p: &HamiltonianParams<F>) -> Energy<F> {
    middle_parts(c, r, c2, p).without_exp2()
}

/// H_exp of the boundary pieces: ¼[e^{−X̲} + e^{−X̄}] + ½e^{−Z}.
pub fn h_boundary_exp<F: Scalar>(z: F, c: &Cycle<F>) -> F {
    F::of(0.25) * ((-c.xlo).exp() + (-c.xhi).exp()) + F::of(0.5) * (-z).exp()
}

pub fn h_left<F: Scalar>(z0: F, c: &Cycle<F>, a: F) -> F {
    h_left_no_exp(z0, c, a) + h_boundary_exp(z0, c)
}

/// H_left − H_exp.
pub fn h_left_no_exp<F: Scalar>(z0: F, c: &Cycle<F>, a: F) -> F {
    use TreeState::*;
    let half = F::of(0.5);
    let u = c.u();
    let ln = a * lse2(c.xhi, z0) + (a + half) * (lse2(c.xlo, z0) - u - z0);
    let tree = half * (ind::<F>(c.t == C) * c.xlo + ind::<F>(c.t == D) * c.xhi)
        + ind::<F>(c.t == B) * z0
        + half * (ind::<F>(c.t == A) - ind::<F>(c.t == B)) * u;
    ln + tree + F::of(0.25) * u
}

pub fn h_right<F: Scalar>(c: &Cycle<F>, zn: F, a: F) -> F {
    h_right_no_exp(c, zn, a) + h_boundary_exp(zn, c)
}

/// H_right − H_exp.
pub fn h_right_no_exp<F: Scalar>(c: &Cycle<F>, zn: F, a: F) -> F {
    use TreeState::*;
    let half = F::of(0.5);
    let u = c.u();
    let ln = (a + half) * (lse2(c.xlo, zn) + lse2(c.xhi, zn) - u - zn);
    let tree = half * (ind::<F>(c.t == C) * c.xlo + ind::<F>(c.t == D) * c.xhi) + ind::<F>(c.t == A) * zn
        - half * (ind::<F>(c.t == A) - ind::<F>(c.t == B)) * u;
    ln + tree - F::of(0.25) * u
}

/// H⁽ⁿ⁾(ω), with the first `deform_j` middle terms taken at η = 0.
pub fn h_total<F: Scalar>(w: &SpinConfig<F>, a: F, deform_j: usize) -> Result<Energy<F>> {
    w.validate()?;
    let n = w.n();
    if deform_j > n.saturating_sub(1) {
        return Err(Error::Domain(format!("deform_j = {deform_j} outside 0..={}", n - 1)));
    }
    let quarter = HamiltonianParams { a, eta: F::of(0.25) };
    let zero = HamiltonianParams { a, eta: F::zero() };
    let mut e = Energy::Finite(h_left(w.z0, &w.cycle(1), a) + h_right(&w.cycle(n), w.zn, a));
    for i in 1..n {
        let p = if i <= deform_j { &zero } else { &quarter };
        e = e + h_middle(&w.cycle(i), &w.rung(i), &w.cycle(i + 1), p);
    }
    Ok(e)
}

/// Σⱼ = ¼ Σ_{i ≤ j} Γᵢ.
pub fn sigma_shift<F: Scalar>(w: &SpinConfig<F>, j: usize) -> F {
    w.gamma[..j].iter().fold(F::zero(), |s, &g| s + g) * F::of(0.25)
}

pub fn psi_forward<F: Scalar>(w: &SpinConfig<F>) -> Result<EnvironmentPoint<F>> {
    w.validate()?;
    let code = SpanningTreeCode::new(w.tree.clone())?;
    let n = w.n();
    let ys = w.ys();
    let mut x = vec![F::zero(); 3 * n + 1];
    x[0] = F::one();
    let half = F::of(0.5);
    for i in 1..=n {
        let yi = ys[i - 1];
        x[EdgeKind::Lower(i).index()] = (w.xlo[i - 1] + yi).exp();
        x[EdgeKind::Upper(i).index()] = (w.xhi[i - 1] + yi).exp();
        x[EdgeKind::Rung(i).index()] =
            if i < n { (w.z[i - 1] + half * (yi + ys[i])).exp() } else { (w.zn + yi).exp() };
    }
    let y = (0..n).map(|i| F::of(w.sigma[i] as f64) * (half * ys[i]).exp()).collect();
    EnvironmentPoint::new(EdgeWeights::new(x, Normalization::RungZeroUnit)?, y, code)
}

pub fn psi_inverse<F: Scalar>(p: &EnvironmentPoint<F>) -> Result<SpinConfig<F>> {
    let x = &p.x;
    let n = x.n();
    if x.rung(0) != F::one() {
        return Err(Error::Domain("z0 must equal 1".into()));
    }
    if p.y.iter().any(|v| *v == F::zero()) {
        return Err(Error::Domain("y has a zero entry".into()));
    }
    let y2: Vec<F> = p.y.iter().map(|&v| v * v).collect();
    let half = F::of(0.5);
    let w = SpinConfig {
        z0: (x.rung(0) / y2[0]).ln(),
        xlo: (1..=n).map(|i| (x.lower(i) / y2[i - 1]).ln()).collect(),
        xhi: (1..=n).map(|i| (x.upper(i) / y2[i - 1]).ln()).collect(),
        sigma: p.y.iter().map(|&v| if v > F::zero() { 1 } else { -1 }).collect(),
        tree: p.code.states().to_vec(),
        z: (1..n).map(|i| (x.rung(i) / (p.y[i - 1] * p.y[i]).abs()).ln()).collect(),
        gamma: (1..n)
            .map(|i| half * ((x.lower(i) / x.lower(i + 1)).ln() + (x.upper(i) / x.upper(i + 1)).ln()))
            .collect(),
        zn: (x.rung(n) / y2[n - 1]).ln(),
    };
    let ys = w.ys();
    for i in 0..n {
        let direct = y2[i].ln();
        let tol = F::of(1e-8) * (F::one() + direct.abs());
        if (ys[i] - direct).abs() > tol {
            return Err(Error::Numerical(format!("Y_{} = {} but 2 ln|y| = {}", i + 1, ys[i].f64(), direct.f64())));
        }
    }
    Ok(w)
}

/// ln 𝒥 = −n ln 2 + Σ [Yᵢ/2 + ln x̲ᵢ + ln x̄ᵢ] + Σ_{i=0}^{n} ln zᵢ, in spin coordinates.
pub fn log_jacobian<F: Scalar>(w: &SpinConfig<F>) -> F {
    let n = w.n();
    let ys = w.ys();
    let half = F::of(0.5);
    let mut s = -F::of(n as f64) * F::of(2.0).ln();
    for i in 1..=n {
        let yi = ys[i - 1];
        s = s + half * yi + (w.xlo[i - 1] + yi) + (w.xhi[i - 1] + yi);
        s = s + if i < n { w.z[i - 1] + half * (yi + ys[i]) } else { w.zn + yi };
    }
    s
}

/// (−ln Φ(Ψω) − ln 𝒥(ω)) − H⁽ⁿ⁾(ω) − n ln 2.
pub fn gibbs_identity_residual<F: Scalar>(w: &SpinConfig<F>, a: F) -> Result<F> {
    if !w.admissible() {
        return Err(Error::InvalidCode("configuration has an adjacent (A,B) pair".into()));
    }
    let p = psi_forward(w)?;
    let lhs = -log_phi(&p.x, &p.y, &p.code, a)? - log_jacobian(w);
    let h = h_total(w, a, 0)?.finite().ok_or_else(|| Error::Numerical("infinite energy".into()))?;
    Ok(lhs - h - F::of(w.n() as f64) * F::of(2.0).ln())
}

/// Admissible configuration with continuous coordinates uniform on [−r, r].
pub fn random_spin_config(rng: &mut impl Rng, n: usize, r: f64) -> SpinConfig<f64> {
    let mut tree = Vec::with_capacity(n);
    while tree.len() < n {
        let t = TreeState::from_index(rng.random_range(0..4));
        if tree.last().is_some_and(|&l| ladder::forbidden(l, t)) {
            continue;
        }
        tree.push(t);
    }
    let mut u = |_| rng.random_range(-r..r);
    SpinConfig {
        z0: u(0),
        xlo: (0..n).map(&mut u).collect(),
        xhi: (0..n).map(&mut u).collect(),
        sigma: (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect(),
        tree,
        z: (1..n).map(|_| rng.random_range(-r..r)).collect(),
        gamma: (1..n).map(|_| rng.random_range(-r..r)).collect(),
        zn: rng.random_range(-r..r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_config(rng: &mut impl Rng, n: usize, r: f64) -> SpinConfig<f64> {
        random_spin_config(rng, n, r)
    }

    fn cyc(t: TreeState) -> Cycle<f64> {
        Cycle::new(0.0, 0.0, 1, t)
    }

    #[test]
    fn log_phi_hand_value() {
        let x = EdgeWeights::uniform(1, 1.0).unwrap();
        let v = log_phi(&x, &[0.0], &"C".parse().unwrap(), 1.0).unwrap();
        assert!((v - (-5.5 * 2f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn scaling_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let n = rng.random_range(1..6);
            let x = EdgeWeights::new((0..3 * n + 1).map(|_| rng.random_range(0.1..5.0)).collect(), Normalization::None).unwrap();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let codes = ladder::all_codes(n);
            let code = &codes[rng.random_range(0..codes.len())];
            let a = rng.random_range(0.6..3.0);
            let c: f64 = rng.random_range(0.2..5.0);
            let base = log_phi(&x, &y, code, a).unwrap();
            let ys: Vec<f64> = y.iter().map(|v| v * c.sqrt()).collect();
            let scaled = log_phi(&x.scaled(c).unwrap(), &ys, code, a).unwrap();
            let want = -(3.5 * n as f64 + 1.0) * c.ln();
            assert!(((scaled - base) - want).abs() <= 1e-12 * want.abs().max(base.abs()).max(1.0));
        }
    }

    #[test]
    fn normalize_examples() {
        let x = EdgeWeights::uniform(1, 1.0f64).unwrap();
        let (s, y) = normalize_weights(&x, &[1.0], NormalizeMode::Simplex).unwrap();
        assert!(s.values().iter().all(|&v| (v - 0.25).abs() < 1e-15));
        assert!((y[0] - 0.5).abs() < 1e-15);
        let (s2, y2) = normalize_weights(&s, &y, NormalizeMode::Simplex).unwrap();
        assert_eq!((s2, y2), (s.clone(), y.clone()));
        let (r, _) = normalize_weights(&s, &y, NormalizeMode::RungZeroUnit).unwrap();
        assert_eq!(r.values(), x.values());
        let (same, _) = normalize_weights(&x, &[1.0], NormalizeMode::RungZeroUnit).unwrap();
        assert_eq!(same, x);
    }

    #[test]
    fn middle_examples() {
        let p = HamiltonianParams::new(1.0, 0.1).unwrap();
        let r = Rung { z: 0.0, gamma: 0.0 };
        let v = h_middle(&cyc(TreeState::C), &r, &cyc(TreeState::C), &p).finite().unwrap();
        assert!((v - (4.0 * 3f64.ln() + 1.0)).abs() < 1e-14);
        assert!(h_middle(&cyc(TreeState::A), &r, &cyc(TreeState::B), &p).is_infinite());
        assert!(HamiltonianParams::new(1.0, 0.3).is_err());
    }

    #[test]
    fn reflection_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..2000 {
            let w = random_config(&mut rng, 2, 6.0);
            let (c, c2) = (w.cycle(1), w.cycle(2));
            let r = w.rung(1);
            let eta = rng.random_range(-0.25..0.25);
            let p = HamiltonianParams { a: rng.random_range(0.6..3.0), eta };
            let q = HamiltonianParams { eta: -eta, ..p };
            let lhs = h_middle(&c, &r, &c2, &p);
            let rhs = h_middle(&c2.reflected(), &Rung { z: r.z, gamma: -r.gamma }, &c.reflected(), &q);
            match (lhs, rhs) {
                (Energy::Finite(a), Energy::Finite(b)) => assert!((a - b).abs() < 1e-12 * (1.0 + a.abs())),
                (a, b) => assert_eq!(a.is_infinite(), b.is_infinite()),
            }
        }
    }

    #[test]
    fn boundary_examples() {
        let v = h_left(0.0, &cyc(TreeState::C), 1.0);
        assert!((v - (2.5 * 2f64.ln() + 1.0)).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100_000 {
            let c: Cycle<f64> = Cycle::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0), 1, TreeState::from_index(rng.random_range(0..4)));
            let z: f64 = rng.random_range(-50.0..50.0);
            let h = h_right(&c, z, 1.0);
            assert!(h.is_finite() && h_left(z, &c, 1.0).is_finite());
            assert!(h >= (c.xlo.abs() + c.xhi.abs() + z.abs()) / 12.0 - 1e-9);
        }
    }

    #[test]
    fn total_and_deformation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let n = rng.random_range(2..7);
            let w = random_config(&mut rng, n, 4.0);
            let a = 1.0;
            let p = HamiltonianParams { a, eta: 0.25 };
            let mut sum = Energy::Finite(h_left(w.z0, &w.cycle(1), a) + h_right(&w.cycle(n), w.zn, a));
            for i in 1..n {
                sum = sum + h_middle(&w.cycle(i), &w.rung(i), &w.cycle(i + 1), &p);
            }
            let h0 = h_total(&w, a, 0).unwrap();
            assert!((h0.finite().unwrap() - sum.finite().unwrap()).abs() < 1e-12 * (1.0 + h0.to_f64().abs()));
            let j = rng.random_range(0..n);
            let hj = h_total(&w, a, j).unwrap().finite().unwrap();
            assert!((hj - h0.finite().unwrap() - sigma_shift(&w, j)).abs() < 1e-10);
        }
        let mut w = SpinConfig::<f64>::zero(3);
        w.tree = vec![TreeState::C, TreeState::A, TreeState::B];
        assert!(h_total(&w, 1.0, 0).unwrap().is_infinite());
        assert!(h_total(&w, 1.0, 3).is_err());
    }

    #[test]
    fn psi_examples() {
        let w = SpinConfig::<f64>::zero(3);
        let p = psi_forward(&w).unwrap();
        assert!(p.x.values().iter().all(|&v| v == 1.0));
        assert!(p.y.iter().all(|&v| v == 1.0));
        assert_eq!(psi_inverse(&p).unwrap(), w);

        let mut w = SpinConfig::<f64>::zero(1);
        w.z0 = 2.0;
        let p = psi_forward(&w).unwrap();
        let e2 = (-2.0f64).exp();
        let p: EnvironmentPoint<f64> = p;
        assert!((p.x.lower(1) - e2).abs() < 1e-15 && (p.x.upper(1) - e2).abs() < 1e-15);
        assert!((p.x.rung(1) - e2).abs() < 1e-15);
        assert!((p.y[0] - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(p.x.rung(0), 1.0);
        assert!((log_jacobian(&w) - (0.5f64.ln() - 7.0)).abs() < 1e-14);
        assert!((log_jacobian(&SpinConfig::<f64>::zero(4)) + 4.0 * 2f64.ln()).abs() < 1e-14);

        let mut bad = SpinConfig::<f64>::zero(2);
        bad.tree = vec![TreeState::A, TreeState::B];
        assert!(psi_forward(&bad).is_err());
    }

    #[test]
    fn psi_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let n = rng.random_range(1..7);
            let w = random_config(&mut rng, n, 3.0);
            let p = psi_forward(&w).unwrap();
            let back = psi_inverse(&p).unwrap();
            let ys = w.ys();
            for i in 1..n {
                assert!((w.w(i) - (p.y[i - 1].powi(2) / p.y[i].powi(2)).ln()).abs() < 1e-10);
                assert!((w.w(i) - (ys[i - 1] - ys[i])).abs() < 1e-12);
            }
            let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-10);
            assert!((back.z0 - w.z0).abs() < 1e-10 && (back.zn - w.zn).abs() < 1e-10);
            assert!(close(&back.xlo, &w.xlo) && close(&back.xhi, &w.xhi));
            assert!(close(&back.z, &w.z) && close(&back.gamma, &w.gamma));
            assert_eq!((back.sigma, back.tree), (w.sigma.clone(), w.tree.clone()));
            let again = psi_forward(&psi_inverse(&p).unwrap()).unwrap();
            assert!(close(again.x.values(), p.x.values()) && close(&again.y, &p.y));
        }
    }

    fn jacobian_fd(w: &SpinConfig<f64>) -> f64 {
        // (Z0, X̲, X̄, Z1) ↦ (x̲, x̄, z1, y) for n = 1
        let f = |v: [f64; 4]| {
            let mut c = w.clone();
            c.z0 = v[0];
            c.xlo[0] = v[1];
            c.xhi[0] = v[2];
            c.zn = v[3];
            let p = psi_forward(&c).unwrap();
            [p.x.lower(1), p.x.upper(1), p.x.rung(1), p.y[0]]
        };
        let base = [w.z0, w.xlo[0], w.xhi[0], w.zn];
        let mut m = [[0.0; 4]; 4];
        for k in 0..4 {
            let diff = |h: f64| {
                let (mut p, mut q) = (base, base);
                p[k] += h;
                q[k] -= h;
                let (fp, fq) = (f(p), f(q));
                [0, 1, 2, 3].map(|r| (fp[r] - fq[r]) / (2.0 * h))
            };
            let (d1, d2) = (diff(1e-5), diff(5e-6));
            for r in 0..4 {
                m[r][k] = (4.0 * d2[r] - d1[r]) / 3.0;
            }
        }
        det4(m)
    }

    fn det4(m: [[f64; 4]; 4]) -> f64 {
        let mut a = m;
        let mut det = 1.0;
        for p in 0..4 {
            let piv = (p..4).max_by(|&i, &j| a[i][p].abs().total_cmp(&a[j][p].abs())).unwrap();
            if piv != p {
                a.swap(p, piv);
                det = -det;
            }
            det *= a[p][p];
            for i in p + 1..4 {
                let f = a[i][p] / a[p][p];
                for j in p..4 {
                    a[i][j] -= f * a[p][j];
                }
            }
        }
        det
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let w = random_config(&mut rng, 1, 1.5);
            let fd = jacobian_fd(&w).abs();
            let closed = log_jacobian(&w).exp();
            assert!((fd - closed).abs() < 1e-6 * closed, "{fd} vs {closed}");
        }
    }

    #[test]
    fn gibbs_identity() {
        let w = SpinConfig::<f64>::zero(1);
        assert!(gibbs_identity_residual(&w, 1.0).unwrap().abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..3000 {
            let n = [1, 2, 5][rng.random_range(0..3)];
            let a = [0.8, 1.0, 2.0][rng.random_range(0..3)];
            let mut w = random_config(&mut rng, n, 3.0);
            let r = gibbs_identity_residual(&w, a).unwrap();
            assert!(r.abs() < 1e-9, "residual {r}");
            for s in &mut w.sigma {
                *s = -*s;
            }
            assert!((gibbs_identity_residual(&w, a).unwrap() - r).abs() < 1e-9);
        }
    }

    #[test]
    fn json_field_names() {
        let s = serde_json::to_string(&SpinConfig::<f64>::zero(2)).unwrap();
        for k in ["\"Z0\"", "\"Xlo\"", "\"Xhi\"", "\"sigma\"", "\"T\"", "\"Z\"", "\"Gamma\""] {
            assert!(s.contains(k), "{k} missing in {s}");
        }
    }
}
