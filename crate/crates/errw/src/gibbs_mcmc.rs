//! Metropolis–Hastings sampler for the Gibbs measures in spin coordinates
//! and their deformations, with tail and expectation estimators.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environment::{
    h_left, h_middle, h_right, psi_forward, sigma_shift, HamiltonianParams, SpinConfig,
};
use crate::error::{Error, Result};
use crate::ladder::{forbidden, EdgeWeights, TreeState};
use crate::rng::RngSpec;
use crate::scalar::Energy;
use crate::stats::{self, Estimate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProposalScales {
    pub x: f64,
    pub z: f64,
    pub gamma: f64,
    /// Z₀ and Zₙ.
    pub boundary: f64,
    /// Probability of a σ-flip attempt per cycle per sweep.
    pub sigma_rate: f64,
    /// Probability of a T-proposal per cycle per sweep.
    pub tree_rate: f64,
}

impl Default for ProposalScales {
    fn default() -> Self {
        ProposalScales { x: 1.0, z: 1.0, gamma: 1.0, boundary: 1.0, sigma_rate: 1.0, tree_rate: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Start {
    Zero,
    /// Continuous coordinates uniform in (−r, r), random signs and admissible trees.
    Dispersed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcConfig {
    pub n: usize,
    pub a: f64,
    pub deform_j: usize,
    pub scales: ProposalScales,
    pub burn_in: usize,
    pub thin: usize,
    pub samples: usize,
    pub rng: RngSpec,
    pub adapt: bool,
    pub start: Start,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            n: 8,
            a: 1.0,
            deform_j: 0,
            scales: ProposalScales::default(),
            burn_in: 2000,
            thin: 1,
            samples: 10_000,
            rng: RngSpec::new(0, 0),
            adapt: true,
            start: Start::Zero,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Domain("n must be positive".into()));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::Domain(format!("a = {} must be positive", self.a)));
        }
        if self.deform_j > self.n - 1 {
            return Err(Error::Domain(format!("deform_j = {} outside 0..={}", self.deform_j, self.n - 1)));
        }
        let s = &self.scales;
        for (name, v) in [("x", s.x), ("z", s.z), ("gamma", s.gamma), ("boundary", s.boundary)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("proposal scale {name} = {v} must be positive")));
            }
        }
        for (name, v) in [("sigma_rate", s.sigma_rate), ("tree_rate", s.tree_rate)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if self.thin == 0 {
            return Err(Error::Domain("thin must be at least 1".into()));
        }
        if let Start::Dispersed(r) = self.start {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::Domain(format!("dispersion radius {r} invalid")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveClass {
    X,
    Z,
    Gamma,
    Boundary,
    Sigma,
    Tree,
}

impl MoveClass {
    pub const ALL: [MoveClass; 6] =
        [MoveClass::X, MoveClass::Z, MoveClass::Gamma, MoveClass::Boundary, MoveClass::Sigma, MoveClass::Tree];
    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Acceptance {
    pub proposed: u64,
    pub accepted: u64,
}

impl Acceptance {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// One logged proposal: local energy change, log proposal ratio, acceptance probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalLog {
    pub class: MoveClass,
    pub before: SpinConfig<f64>,
    /// The proposed state, kept whether or not it was accepted.
    pub after: SpinConfig<f64>,
    pub delta_energy: f64,
    pub log_q_ratio: f64,
    pub accept_prob: f64,
    pub accepted: bool,
}

/// Chain state with cached piece energies: piece 0 is H_left, pieces
/// 1..n−1 the middle terms, piece n the right term (for n = 1 only pieces 0, 1).
pub struct Chain {
    pub cfg: McmcConfig,
    pub w: SpinConfig<f64>,
    pieces: Vec<f64>,
    scales: [f64; 4],
    acc: [Acceptance; 6],
    window: [Acceptance; 4],
    rng: ChaCha8Rng,
    log: Option<Vec<ProposalLog>>,
}

fn admissible_states(prev: Option<TreeState>, next: Option<TreeState>) -> Vec<TreeState> {
    TreeState::ALL
        .into_iter()
        .filter(|&t| !prev.is_some_and(|p| forbidden(p, t)) && !next.is_some_and(|q| forbidden(t, q)))
        .collect()
}

impl Chain {
    pub fn new(cfg: McmcConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = cfg.rng.rng();
        let n = cfg.n;
        let mut w = SpinConfig::zero(n);
        if let Start::Dispersed(r) = cfg.start {
            let u = |rng: &mut ChaCha8Rng| if r > 0.0 { rng.random_range(-r..r) } else { 0.0 };
            w.z0 = u(&mut rng);
            w.zn = u(&mut rng);
            for i in 0..n {
                w.xlo[i] = u(&mut rng);
                w.xhi[i] = u(&mut rng);
                w.sigma[i] = if rng.random::<bool>() { 1 } else { -1 };
                let prev = if i > 0 { Some(w.tree[i - 1]) } else { None };
                let opts = admissible_states(prev, None);
                w.tree[i] = opts[rng.random_range(0..opts.len())];
            }
            for i in 0..n - 1 {
                w.z[i] = u(&mut rng);
                w.gamma[i] = u(&mut rng);
            }
        }
        let s = cfg.scales;
        let mut c = Chain {
            cfg,
            w,
            pieces: vec![0.0; n + 1],
            scales: [s.x, s.z, s.gamma, s.boundary],
            acc: [Acceptance::default(); 6],
            window: [Acceptance::default(); 4],
            rng,
            log: None,
        };
        for k in 0..=n {
            c.pieces[k] = c.piece(k).finite().ok_or_else(|| Error::Numerical("start has infinite energy".into()))?;
        }
        Ok(c)
    }

    pub fn enable_log(&mut self) {
        self.log = Some(Vec::new());
    }

    pub fn take_log(&mut self) -> Vec<ProposalLog> {
        self.log.take().unwrap_or_default()
    }

    fn piece(&self, k: usize) -> Energy<f64> {
        let (n, a) = (self.cfg.n, self.cfg.a);
        let w = &self.w;
        if k == 0 {
            Energy::Finite(h_left(w.z0, &w.cycle(1), a))
        } else if k == n {
            Energy::Finite(h_right(&w.cycle(n), w.zn, a))
        } else {
            let eta = if k <= self.cfg.deform_j { 0.0 } else { 0.25 };
            h_middle(&w.cycle(k), &w.rung(k), &w.cycle(k + 1), &HamiltonianParams { a, eta })
        }
    }

    /// Cached total energy, equal to h_total(w, a, deform_j).
    pub fn energy(&self) -> f64 {
        self.pieces.iter().sum()
    }

    /// Propose via `apply`, accept with probability min(1, q·e^{−ΔH}).
    fn step(&mut self, class: MoveClass, touched: &[usize], log_q: f64, apply: impl Fn(&mut SpinConfig<f64>)) {
        let before = self.log.as_ref().map(|_| self.w.clone());
        let saved = self.w.clone();
        apply(&mut self.w);
        let mut new = [0.0; 2];
        let mut delta = 0.0;
        let mut infinite = false;
        for (slot, &k) in touched.iter().enumerate() {
            match self.piece(k) {
                Energy::Finite(h) => {
                    new[slot] = h;
                    delta += h - self.pieces[k];
                }
                Energy::Infinite => infinite = true,
            }
        }
        let p = if infinite || delta.is_nan() { 0.0 } else { (log_q - delta).exp().min(1.0) };
        let accepted = p >= 1.0 || (p > 0.0 && self.rng.random::<f64>() < p);
        if accepted {
            for (slot, &k) in touched.iter().enumerate() {
                self.pieces[k] = new[slot];
            }
        }
        if let (Some(log), Some(before)) = (self.log.as_mut(), before) {
            log.push(ProposalLog {
                class,
                before,
                after: self.w.clone(),
                delta_energy: if infinite { f64::INFINITY } else { delta },
                log_q_ratio: log_q,
                accept_prob: p,
                accepted,
            });
        }
        if !accepted {
            self.w = saved;
        }
        let a = &mut self.acc[class.slot()];
        a.proposed += 1;
        a.accepted += accepted as u64;
        if class.slot() < 4 {
            let b = &mut self.window[class.slot()];
            b.proposed += 1;
            b.accepted += accepted as u64;
        }
    }

    fn gauss(&mut self, class: MoveClass) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        z * self.scales[class.slot()]
    }

    /// One sweep over every coordinate.
    pub fn sweep(&mut self) {
        let n = self.cfg.n;
        let d = self.gauss(MoveClass::Boundary);
        self.step(MoveClass::Boundary, &[0], 0.0, |w| w.z0 += d);
        for i in 1..=n {
            let touched: &[usize] = &[i - 1, i];
            let d = self.gauss(MoveClass::X);
            self.step(MoveClass::X, touched, 0.0, |w| w.xlo[i - 1] += d);
            let d = self.gauss(MoveClass::X);
            self.step(MoveClass::X, touched, 0.0, |w| w.xhi[i - 1] += d);
            if self.rng.random::<f64>() < self.cfg.scales.sigma_rate {
                self.step(MoveClass::Sigma, touched, 0.0, |w| w.sigma[i - 1] = -w.sigma[i - 1]);
            }
            if self.rng.random::<f64>() < self.cfg.scales.tree_rate {
                let prev = if i > 1 { Some(self.w.tree[i - 2]) } else { None };
                let next = if i < n { Some(self.w.tree[i]) } else { None };
                let opts = admissible_states(prev, next);
                let t = opts[self.rng.random_range(0..opts.len())];
                // the admissible set depends only on the neighbors, so q is symmetric
                self.step(MoveClass::Tree, touched, 0.0, |w| w.tree[i - 1] = t);
            }
            if i < n {
                let d = self.gauss(MoveClass::Z);
                self.step(MoveClass::Z, &[i], 0.0, |w| w.z[i - 1] += d);
                let d = self.gauss(MoveClass::Gamma);
                self.step(MoveClass::Gamma, &[i], 0.0, |w| w.gamma[i - 1] += d);
            }
        }
        let d = self.gauss(MoveClass::Boundary);
        self.step(MoveClass::Boundary, &[n], 0.0, |w| w.zn += d);
    }

    /// Robbins–Monro nudge of the continuous scales toward 0.4 acceptance.
    fn adapt(&mut self, round: usize) {
        let gain = 1.0 / (1.0 + round as f64).sqrt();
        for k in 0..4 {
            let b = self.window[k];
            if b.proposed > 0 {
                let r = b.accepted as f64 / b.proposed as f64;
                self.scales[k] = (self.scales[k] * (gain * (r - 0.4) * 2.0).exp()).clamp(1e-3, 50.0);
            }
            self.window[k] = Acceptance::default();
        }
    }

    pub fn burn_in(&mut self) {
        let mut round = 0;
        for s in 1..=self.cfg.burn_in {
            self.sweep();
            if self.cfg.adapt && s % 50 == 0 {
                self.adapt(round);
                round += 1;
            }
        }
        self.acc = [Acceptance::default(); 6];
    }

    pub fn acceptance(&self) -> Vec<(MoveClass, Acceptance)> {
        MoveClass::ALL.iter().map(|&c| (c, self.acc[c.slot()])).collect()
    }

    pub fn scales(&self) -> ProposalScales {
        ProposalScales {
            x: self.scales[0],
            z: self.scales[1],
            gamma: self.scales[2],
            boundary: self.scales[3],
            ..self.cfg.scales
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "i", rename_all = "snake_case")]
pub enum Observable {
    Z0,
    Zn,
    Z(usize),
    Gamma(usize),
    Xlo(usize),
    Xhi(usize),
    U(usize),
    W(usize),
    /// ln(x̲ᵢ / yᵢ²)
    LnXloOverY2(usize),
    /// ln|yᵢ₊₁ / yᵢ|
    LnYRatio(usize),
    /// ln x̲ᵢ in the z₀ = 1 normalization
    LnXlo(usize),
    Sigma(usize),
}

impl Observable {
    pub fn eval(&self, w: &SpinConfig<f64>) -> f64 {
        match *self {
            Observable::Z0 => w.z0,
            Observable::Zn => w.zn,
            Observable::Z(i) => w.z[i - 1],
            Observable::Gamma(i) => w.gamma[i - 1],
            Observable::Xlo(i) => w.xlo[i - 1],
            Observable::Xhi(i) => w.xhi[i - 1],
            Observable::U(i) => w.u(i),
            Observable::W(i) => w.w(i),
            Observable::LnXloOverY2(i) => match psi_forward(w) {
                Ok(p) => p.x.lower(i).ln() - 2.0 * p.y[i - 1].abs().ln(),
                Err(_) => f64::NAN,
            },
            Observable::LnYRatio(i) => match psi_forward(w) {
                Ok(p) => (p.y[i] / p.y[i - 1]).abs().ln(),
                Err(_) => f64::NAN,
            },
            Observable::LnXlo(i) => match psi_forward(w) {
                Ok(p) => p.x.lower(i).ln(),
                Err(_) => f64::NAN,
            },
            Observable::Sigma(i) => w.sigma[i - 1] as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub config: McmcConfig,
    pub samples: Vec<SpinConfig<f64>>,
    pub acceptance: Vec<(MoveClass, Acceptance)>,
    pub tuned_scales: ProposalScales,
    /// (observable, ESS) for Γ₁, Z₁, X̲₁, Z₀ and the energy.
    pub ess: Vec<(String, f64)>,
    pub diagnostics: Vec<String>,
}

impl SampleBatch {
    pub fn series(&self, o: Observable) -> Vec<f64> {
        self.samples.iter().map(|w| o.eval(w)).collect()
    }

    pub fn mean(&self, o: Observable) -> Estimate {
        stats::batch_means(&self.series(o))
    }
}

/// Run a chain, handing each retained sample to `observe`.
pub fn run_chain(cfg: McmcConfig, mut observe: impl FnMut(&SpinConfig<f64>)) -> Result<Chain> {
    let mut c = Chain::new(cfg)?;
    c.burn_in();
    for _ in 0..cfg.samples {
        for _ in 0..cfg.thin {
            c.sweep();
        }
        observe(&c.w);
    }
    Ok(c)
}

pub fn sample_chain(cfg: McmcConfig) -> Result<SampleBatch> {
    let mut samples = Vec::with_capacity(cfg.samples);
    let mut energy = Vec::with_capacity(cfg.samples);
    let chain = run_chain(cfg, |w| {
        samples.push(w.clone());
        energy.push(crate::environment::h_total(w, cfg.a, cfg.deform_j).map(|v| v.to_f64()).unwrap_or(f64::NAN));
    })?;
    let mut ess = vec![("energy".to_string(), stats::effective_sample_size(&energy))];
    let mut tracked = vec![("Z0", Observable::Z0), ("Xlo1", Observable::Xlo(1))];
    if cfg.n > 1 {
        tracked.push(("Gamma1", Observable::Gamma(1)));
        tracked.push(("Z1", Observable::Z(1)));
    }
    for (name, o) in tracked {
        let s: Vec<f64> = samples.iter().map(|w| o.eval(w)).collect();
        ess.push((name.to_string(), stats::effective_sample_size(&s)));
    }
    let acceptance = chain.acceptance();
    let diagnostics = acceptance
        .iter()
        .filter(|(_, a)| a.proposed > 0 && !(0.1..=0.9).contains(&a.rate()))
        .map(|(c, a)| format!("acceptance of {c:?} moves is {:.3}, outside [0.1, 0.9]", a.rate()))
        .collect();
    Ok(SampleBatch { config: cfg, samples, acceptance, tuned_scales: chain.scales(), ess, diagnostics })
}

/// Independent chains on streams stream, stream+1, … run in parallel.
pub fn sample_chains(cfg: McmcConfig, chains: usize) -> Result<Vec<SampleBatch>> {
    (0..chains as u64)
        .into_par_iter()
        .map(|k| sample_chain(McmcConfig { rng: cfg.rng.with_stream(cfg.rng.stream + k), ..cfg }))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub threshold: f64,
    pub count: usize,
    pub frequency: f64,
    /// ln frequency; None when the bucket is empty (censored).
    pub log_frequency: Option<f64>,
    /// Binomial standard error of the log frequency.
    pub log_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    pub points: Vec<TailPoint>,
    pub slope: f64,
    pub slope_se: f64,
    pub r2: f64,
    pub degenerate: bool,
}

impl TailCurve {
    /// Slope negative by at least `z` standard errors.
    pub fn decays(&self, z: f64) -> bool {
        !self.degenerate && self.slope + z * self.slope_se < 0.0
    }
}

/// Empirical P[|v| ≥ M] on the given thresholds with a weighted log-linear fit.
pub fn tail_estimate(values: &[f64], thresholds: &[f64]) -> Result<TailCurve> {
    if values.is_empty() {
        return Err(Error::Domain("empty batch".into()));
    }
    let m = values.len() as f64;
    let points: Vec<TailPoint> = thresholds
        .iter()
        .map(|&t| {
            let count = values.iter().filter(|v| v.abs() >= t).count();
            let f = count as f64 / m;
            let (lf, se) = if count == 0 { (None, None) } else { (Some(f.ln()), Some(((1.0 - f) / count as f64).sqrt())) };
            TailPoint { threshold: t, count, frequency: f, log_frequency: lf, log_se: se }
        })
        .collect();
    let degenerate = stats::variance(values) == 0.0 || values.len() < 2;
    let usable: Vec<&TailPoint> = points.iter().filter(|p| p.log_frequency.is_some() && p.frequency < 1.0).collect();
    if degenerate || usable.len() < 2 {
        return Ok(TailCurve { points, slope: f64::NAN, slope_se: f64::NAN, r2: f64::NAN, degenerate: true });
    }
    // weighted least squares with weights 1/se²
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in &usable {
        let wgt = 1.0 / p.log_se.unwrap().powi(2).max(1e-12);
        let (x, y) = (p.threshold, p.log_frequency.unwrap());
        sw += wgt;
        sx += wgt * x;
        sy += wgt * y;
        sxx += wgt * x * x;
        sxy += wgt * x * y;
    }
    let det = sw * sxx - sx * sx;
    let slope = (sw * sxy - sx * sy) / det;
    let slope_se = (sw / det).sqrt();
    let xs: Vec<f64> = usable.iter().map(|p| p.threshold).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.log_frequency.unwrap()).collect();
    let r2 = stats::linear_fit(&xs, &ys).r2;
    Ok(TailCurve { points, slope, slope_se, r2, degenerate: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignDisagreement {
    pub rate: Estimate,
    /// Mean of 1_{σᵢ≠σᵢ₊₁} − e^{−2e^{−Zᵢ}}·1_{σᵢ=σᵢ₊₁}, zero in expectation.
    pub identity_residual: Estimate,
}

impl SignDisagreement {
    pub fn identity_z(&self) -> f64 {
        if self.identity_residual.se > 0.0 {
            self.identity_residual.mean.abs() / self.identity_residual.se
        } else {
            0.0
        }
    }
}

pub fn sign_disagreement_rate(batch: &SampleBatch, i: usize) -> Result<SignDisagreement> {
    let n = batch.config.n;
    if i < 1 || i + 1 > n {
        return Err(Error::Domain(format!("i = {i} outside 1..={}", n.saturating_sub(1))));
    }
    let ind: Vec<f64> = batch.samples.iter().map(|w| (w.sigma[i - 1] != w.sigma[i]) as u8 as f64).collect();
    let resid: Vec<f64> = batch
        .samples
        .iter()
        .map(|w| {
            if w.sigma[i - 1] != w.sigma[i] {
                1.0
            } else {
                -(-2.0 * (-w.z[i - 1]).exp()).exp()
            }
        })
        .collect();
    Ok(SignDisagreement { rate: stats::batch_means(&ind), identity_residual: stats::batch_means(&resid) })
}

pub fn environment_from_spin(w: &SpinConfig<f64>) -> Result<EdgeWeights<f64>> {
    Ok(psi_forward(w)?.x)
}

/// Self-normalized importance estimate of E_{ν_{n,j}}[f] from a deform_j = 0 batch,
/// with a delta-method batch-means error.
pub fn reweighted_mean(batch: &SampleBatch, o: Observable, j: usize) -> Estimate {
    let j0 = batch.config.deform_j;
    let lw: Vec<f64> = batch.samples.iter().map(|w| -(sigma_shift(w, j) - sigma_shift(w, j0))).collect();
    let mx = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let wt: Vec<f64> = lw.iter().map(|l| (l - mx).exp()).collect();
    let f = batch.series(o);
    let sw: f64 = wt.iter().sum();
    let r = wt.iter().zip(&f).map(|(w, v)| w * v).sum::<f64>() / sw;
    let d: Vec<f64> = wt.iter().zip(&f).map(|(w, v)| w * (v - r)).collect();
    let se = stats::batch_means(&d).se / (sw / wt.len() as f64);
    Estimate { mean: r, se }
}

/// E[e^{−Σⱼ}] from a deform_j = 0 batch.
pub fn sigma_moment_estimate(batch: &SampleBatch, j: usize) -> Estimate {
    let s: Vec<f64> = batch.samples.iter().map(|w| (-sigma_shift(w, j)).exp()).collect();
    stats::batch_means(&s)
}

/// Potential scale reduction over chains for one observable.
pub fn gelman_rubin(batches: &[SampleBatch], o: Observable) -> f64 {
    let chains: Vec<Vec<f64>> = batches.iter().map(|b| b.series(o)).collect();
    let len = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    let chains: Vec<Vec<f64>> = chains.into_iter().map(|c| c[..len].to_vec()).collect();
    stats::gelman_rubin(&chains)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::h_total;

    fn cfg(n: usize, j: usize, samples: usize, seed: u64) -> McmcConfig {
        McmcConfig { n, deform_j: j, samples, burn_in: 500, rng: RngSpec::new(seed, 0), ..McmcConfig::default() }
    }

    #[test]
    fn config_validation() {
        assert!(cfg(4, 3, 1, 0).validate().is_ok());
        assert!(cfg(4, 4, 1, 0).validate().is_err());
        let mut c = cfg(4, 0, 1, 0);
        c.scales.x = 0.0;
        assert!(c.validate().is_err());
        let c: McmcConfig = serde_json::from_str(r#"{"n": 3, "a": 2.0}"#).unwrap();
        assert_eq!((c.n, c.a, c.thin), (3, 2.0, 1));
        assert!(serde_json::from_str::<McmcConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn logged_proposals_satisfy_hastings_ratio() {
        for (n, j) in [(1, 0), (3, 0), (4, 2)] {
            let mut c = Chain::new(McmcConfig { start: Start::Dispersed(2.0), ..cfg(n, j, 0, 7) }).unwrap();
            c.enable_log();
            for _ in 0..200 {
                c.sweep();
            }
            let log = c.take_log();
            assert!(log.len() > 1000);
            for p in &log {
                let h0 = h_total(&p.before, 1.0, j).unwrap();
                assert!(!h0.is_infinite());
                let want = p.accept_prob;
                let got = (p.log_q_ratio - p.delta_energy).exp().min(1.0);
                assert!((want - got).abs() <= 1e-12);
                match h_total(&p.after, 1.0, j).unwrap() {
                    Energy::Finite(h1) => {
                        let d = h1 - h0.to_f64();
                        assert!((d - p.delta_energy).abs() <= 1e-9 * (1.0 + h1.abs()), "{d} vs {}", p.delta_energy);
                    }
                    Energy::Infinite => assert!(!p.accepted && p.accept_prob == 0.0),
                }
                assert!(p.before.admissible());
            }
            assert!((c.energy() - h_total(&c.w, 1.0, j).unwrap().to_f64()).abs() < 1e-8);
        }
    }

    #[test]
    fn tree_moves_never_create_forbidden_pairs() {
        let mut c = Chain::new(McmcConfig { scales: ProposalScales { tree_rate: 1.0, ..Default::default() }, ..cfg(6, 0, 0, 3) }).unwrap();
        for _ in 0..500 {
            c.sweep();
            assert!(c.w.admissible());
        }
        let t = c.acceptance().into_iter().find(|(k, _)| *k == MoveClass::Tree).unwrap().1;
        assert!(t.accepted > 0);
    }

    #[test]
    fn discrete_marginal_matches_exact_weights() {
        // n = 1 with continuous coordinates frozen: T₁ and σ₁ follow e^{−H}.
        let mut c = Chain::new(McmcConfig { start: Start::Dispersed(1.0), ..cfg(1, 0, 0, 11) }).unwrap();
        let w0 = c.w.clone();
        let weight = |t: TreeState| {
            let mut w = w0.clone();
            w.tree[0] = t;
            (-h_total(&w, 1.0, 0).unwrap().to_f64()).exp()
        };
        let total: f64 = TreeState::ALL.iter().map(|&t| weight(t)).sum();
        let mut counts = [0usize; 4];
        let reps = 200_000;
        for _ in 0..reps {
            let opts = admissible_states(None, None);
            let t = opts[c.rng.random_range(0..opts.len())];
            c.step(MoveClass::Tree, &[0, 1], 0.0, |w| w.tree[0] = t);
            counts[c.w.tree[0].index()] += 1;
        }
        for t in TreeState::ALL {
            let p = weight(t) / total;
            let f = counts[t.index()] as f64 / reps as f64;
            assert!((f - p).abs() < 0.01, "{t:?}: {f} vs {p}");
        }
    }

    #[test]
    fn sign_identity_and_rates() {
        let b = sample_chain(cfg(4, 0, 20_000, 5)).unwrap();
        for i in 1..4 {
            let s = sign_disagreement_rate(&b, i).unwrap();
            assert!(s.rate.mean > 0.05 && s.rate.mean <= 1.0);
            assert!(s.identity_z() < 4.0, "i={i}: {s:?}");
        }
        assert!(sign_disagreement_rate(&b, 4).is_err());
        assert!(sign_disagreement_rate(&b, 0).is_err());
    }

    #[test]
    fn chains_from_dispersed_starts_agree() {
        let c = McmcConfig { start: Start::Dispersed(3.0), ..cfg(4, 0, 10_000, 9) };
        let b = sample_chains(c, 3).unwrap();
        for o in [Observable::Gamma(2), Observable::Z(1), Observable::Xlo(3)] {
            assert!(gelman_rubin(&b, o) < 1.1);
        }
        for x in &b {
            assert!(x.samples.iter().all(|w| w.admissible()));
        }
    }

    #[test]
    fn tails_and_degenerate_curves() {
        let b = sample_chain(cfg(6, 0, 20_000, 2)).unwrap();
        let t = tail_estimate(&b.series(Observable::Gamma(3)), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).unwrap();
        assert!(t.decays(3.0), "{t:?}");
        let flat = tail_estimate(&[2.0; 50], &[1.0, 2.0, 3.0]).unwrap();
        assert!(flat.degenerate);
        assert!(tail_estimate(&[], &[1.0]).is_err());
        let cens = tail_estimate(&[0.1, 0.2, 0.3, 1.5, 2.5], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(cens.points[3].log_frequency.is_none());
    }

    #[test]
    fn y_ratio_matches_rung_coordinates() {
        let b = sample_chain(cfg(5, 0, 500, 4)).unwrap();
        for w in &b.samples {
            for i in 1..5 {
                let direct = Observable::LnYRatio(i).eval(w);
                let comp = -0.5 * w.w(i);
                assert!((direct - comp).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn environment_from_zero_spin() {
        let x = environment_from_spin(&SpinConfig::zero(3)).unwrap();
        assert!(x.values().iter().all(|&v| v == 1.0));
        assert_eq!(x.normalization(), crate::ladder::Normalization::RungZeroUnit);
    }
}
