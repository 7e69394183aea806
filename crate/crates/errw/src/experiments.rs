//! End-to-end experiments: local-time profiles, return counts, and cross-checks
//! between the walk, the environment, the transfer operators and the sampler.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificates::{
    check_boundary_bound, check_middle_bound, grid_boundary_samples, grid_middle_bound, uniform_boundary_samples, uniform_middle_samples,
    BoundReport, Side,
};
use crate::environment::{gibbs_identity_residual, h_total, log_phi, psi_forward, random_spin_config, SpinConfig};
use crate::error::{Error, Result};
use crate::gibbs_mcmc::{environment_from_spin, run_chain, tail_estimate, McmcConfig, Observable, TailCurve};
use crate::ladder::{self, EdgeWeights, Normalization, TreeState, Vertex};
use crate::network::{effective_resistance, shorted_resistance, BoundChain};
use crate::quad::{sinh_mapped, Rule};
use crate::rng::RngSpec;
use crate::stats::{self, Estimate, LinearFit};
use crate::transfer::{TransferSystem, Upsilon};
use crate::walk::{self, errw_returns_before_exit, local_time_profile, Representative, WalkOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub n: usize,
    pub a: f64,
    pub steps: u64,
    pub replicas: usize,
    pub rng: RngSpec,
    pub representative: Representative,
    /// Levels (inclusive) of the affine fit of the median.
    pub fit_levels: (usize, usize),
    /// Levels (inclusive) used to fit ĉ.
    pub c_levels: (usize, usize),
    /// Fractions are checked from this level on.
    pub from_level: usize,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            n: 16,
            a: 1.0,
            steps: 1_000_000,
            replicas: 200,
            rng: RngSpec::new(7, 0),
            representative: Representative::Rung,
            fit_levels: (2, 12),
            c_levels: (1, 4),
            from_level: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub level: usize,
    pub median_log_ratio: f64,
    /// Replicas with k(eᵢ)/k(z₀) = 0.
    pub zeros: usize,
    /// Fraction of replicas with ratio ≤ e^{−ĉ·level}.
    pub fraction_below: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub config: ProfileConfig,
    pub rows: Vec<LevelRow>,
    pub fit: LinearFit,
    /// Least-squares rate through the origin on the ĉ levels.
    pub c_hat: f64,
    pub min_fraction: f64,
}

impl ProfileReport {
    pub fn affine_decay(&self, r2: f64) -> bool {
        self.fit.slope < 0.0 && self.fit.r2 > r2
    }
}

fn check_levels(n: usize, lo: usize, hi: usize, what: &str) -> Result<()> {
    if lo > hi || hi > n {
        return Err(Error::Domain(format!("{what} levels {lo}..={hi} outside 0..={n}")));
    }
    Ok(())
}

/// Log local-time ratios ln k(eᵢ)/k(z₀) per replica (−∞ for unvisited edges).
pub fn log_ratio_profiles(cfg: &ProfileConfig) -> Result<Vec<Vec<f64>>> {
    let g = ladder::build(cfg.n)?;
    let start = Vertex::upper(0).index();
    (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let tr = walk::errw_run(&g, cfg.a, cfg.steps, start, cfg.rng.with_stream(r), WalkOptions::default())?;
            Ok(local_time_profile(&tr, cfg.representative)?.into_iter().map(|(_, q)| q.ln()).collect())
        })
        .collect()
}

pub fn profile_experiment(cfg: ProfileConfig) -> Result<ProfileReport> {
    check_levels(cfg.n, cfg.fit_levels.0, cfg.fit_levels.1, "fit")?;
    check_levels(cfg.n, cfg.c_levels.0.max(1), cfg.c_levels.1, "ĉ")?;
    if cfg.replicas == 0 || cfg.fit_levels.1 < cfg.fit_levels.0 + 2 {
        return Err(Error::Domain("need replicas > 0 and at least three fit levels".into()));
    }
    let profiles = log_ratio_profiles(&cfg)?;
    let medians: Vec<f64> = (0..=cfg.n).map(|i| stats::median(&profiles.iter().map(|p| p[i]).collect::<Vec<_>>())).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = (cfg.fit_levels.0..=cfg.fit_levels.1).map(|i| (i as f64, medians[i])).unzip();
    let fit = if ys.iter().all(|y| y.is_finite()) {
        stats::linear_fit(&xs, &ys)
    } else {
        LinearFit { slope: f64::NAN, intercept: f64::NAN, r2: f64::NAN, slope_se: f64::NAN, points: xs.len() }
    };
    let cl = cfg.c_levels.0.max(1)..=cfg.c_levels.1;
    let num: f64 = cl.clone().map(|i| i as f64 * medians[i]).sum();
    let den: f64 = cl.map(|i| (i * i) as f64).sum();
    let c_hat = -num / den;
    let rows: Vec<LevelRow> = (0..=cfg.n)
        .map(|i| {
            let below = profiles.iter().filter(|p| p[i] <= -c_hat * i as f64).count();
            LevelRow {
                level: i,
                median_log_ratio: medians[i],
                zeros: profiles.iter().filter(|p| p[i] == f64::NEG_INFINITY).count(),
                fraction_below: below as f64 / cfg.replicas as f64,
            }
        })
        .collect();
    let min_fraction = rows[cfg.from_level.min(cfg.n)..].iter().map(|r| r.fraction_below).fold(1.0, f64::min);
    Ok(ProfileReport { config: cfg, rows, fit, c_hat, min_fraction })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReturnsConfig {
    pub a: f64,
    pub ns: Vec<usize>,
    pub ks: Vec<u64>,
    pub replicas: usize,
    pub rng: RngSpec,
}

impl Default for ReturnsConfig {
    fn default() -> Self {
        ReturnsConfig { a: 1.0, ns: vec![4, 8, 16], ks: vec![1, 2, 4], replicas: 20_000, rng: RngSpec::new(11, 0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnsRow {
    pub n: usize,
    pub k: u64,
    pub successes: usize,
    pub fraction: f64,
    pub ci: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnsTrend {
    pub config: ReturnsConfig,
    pub rows: Vec<ReturnsRow>,
    /// Nondecreasing in n for every k.
    pub monotone: bool,
    /// Pathwise: A_k at a smaller n implies A_k at every larger n.
    pub nested: bool,
}

/// P[A_k] over n with common random numbers: replica r runs on stream r for every n,
/// once with cap max k.
pub fn returns_trend(cfg: ReturnsConfig) -> Result<ReturnsTrend> {
    if cfg.ns.is_empty() || cfg.ks.is_empty() || cfg.replicas == 0 || cfg.ks.contains(&0) {
        return Err(Error::Domain("need nonempty n and k lists, k ≥ 1 and replicas > 0".into()));
    }
    let mut ns = cfg.ns.clone();
    ns.sort_unstable();
    let cap = *cfg.ks.iter().max().unwrap();
    let start = Vertex::upper(0).index();
    let counts: Vec<Vec<u64>> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|r| {
            ns.iter()
                .map(|&n| errw_returns_before_exit(n, cfg.a, start, cap, u64::MAX, cfg.rng.with_stream(r)).map(|o| o.returns))
                .collect()
        })
        .collect::<Result<_>>()?;
    let nested = counts.iter().all(|c| c.windows(2).all(|w| w[1] >= w[0]));
    let mut rows = Vec::new();
    let mut monotone = true;
    for &k in &cfg.ks {
        let mut last = 0;
        for (m, &n) in ns.iter().enumerate() {
            let s = counts.iter().filter(|c| c[m] >= k).count();
            monotone &= s >= last;
            last = s;
            rows.push(ReturnsRow {
                n,
                k,
                successes: s,
                fraction: s as f64 / cfg.replicas as f64,
                ci: stats::wilson(s, cfg.replicas, 3.0),
            });
        }
    }
    Ok(ReturnsTrend { config: ReturnsConfig { ns, ..cfg }, rows, monotone, nested })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathCheck {
    pub path: Vec<usize>,
    pub exact: String,
    pub exact_value: f64,
    pub quadrature: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub a: f64,
    pub nodes: usize,
    pub lo: f64,
    pub hi: f64,
    pub center: f64,
    pub beta: f64,
    pub max_len: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { a: 1.0, nodes: 32, lo: -6.0, hi: 40.0, center: 0.5, beta: 2.5, max_len: 3 }
    }
}

/// Path probabilities of ERRW on build(1) against the mixture of fixed-environment
/// walks under e^{−H}, integrated over (Z₀, X̲, X̄, Z₁) on a tensor rule.
pub fn rwre_quadrature_check(cfg: QuadratureConfig) -> Result<Vec<PathCheck>> {
    let g = ladder::build(1)?;
    let start = Vertex::upper(0).index();
    let paths = walk::paths_from(&g, start, cfg.max_len);
    let rule: Rule = sinh_mapped(cfg.nodes, cfg.lo, cfg.hi, cfg.center, cfg.beta);
    let m = rule.len();
    let (mass, sums) = (0..m)
        .into_par_iter()
        .map(|i0| {
            let mut mass = 0.0;
            let mut sums = vec![0.0; paths.len()];
            for i1 in 0..m {
                for i2 in 0..m {
                    for i3 in 0..m {
                        let wq = rule.weights[i0] * rule.weights[i1] * rule.weights[i2] * rule.weights[i3];
                        for t in TreeState::ALL {
                            let w = SpinConfig {
                                z0: rule.nodes[i0],
                                xlo: vec![rule.nodes[i1]],
                                xhi: vec![rule.nodes[i2]],
                                sigma: vec![1],
                                tree: vec![t],
                                z: vec![],
                                gamma: vec![],
                                zn: rule.nodes[i3],
                            };
                            let h = match h_total(&w, cfg.a, 0)?.finite() {
                                Some(h) => h,
                                None => continue,
                            };
                            let dens = wq * (-h).exp();
                            if dens == 0.0 {
                                continue;
                            }
                            let x = psi_forward(&w)?.x;
                            mass += dens;
                            for (s, p) in sums.iter_mut().zip(&paths) {
                                *s += dens * walk::path_probability_rwre(&g, p, &x)?;
                            }
                        }
                    }
                }
            }
            Ok::<_, Error>((mass, sums))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        // sequential sum keeps the result independent of the worker count
        .fold((0.0, vec![0.0; paths.len()]), |(m1, s1), (m2, s2)| (m1 + m2, s1.iter().zip(&s2).map(|(a, b)| a + b).collect()));
    paths
        .iter()
        .zip(&sums)
        .map(|(p, s)| {
            let e = walk::path_probability_errw(&g, p, cfg.a)?;
            let q = s / mass;
            Ok(PathCheck { path: p.clone(), exact: e.exact.unwrap_or_default(), exact_value: e.value, quadrature: q, error: (q - e.value).abs() })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeRow {
    pub n: usize,
    pub codes: u128,
    pub matrix_tree: i128,
    pub round_trip: bool,
}

/// Code counts against the matrix-tree count, and decode/encode round trips.
pub fn tree_bijection_check(n_max: usize) -> Result<Vec<TreeRow>> {
    (1..=n_max)
        .map(|n| {
            let mut round_trip = true;
            for code in ladder::all_codes(n) {
                let t = ladder::tree_decode(&code, n)?;
                round_trip &= ladder::is_spanning_tree(&t, n) && ladder::tree_encode(&t, n)? == code;
            }
            Ok(TreeRow { n, codes: ladder::count_codes(n), matrix_tree: ladder::matrix_tree_count(n)?, round_trip })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub samples: usize,
    pub max_residual: f64,
}

/// max |ln Φ + ln J + H + n ln 2| over random configurations for every (n, a).
pub fn gibbs_identity_check(ns: &[usize], as_: &[f64], count: usize, radius: f64, rng: RngSpec) -> Result<ResidualReport> {
    let mut r = rng.rng();
    let mut max_residual: f64 = 0.0;
    let mut samples = 0;
    for &n in ns {
        for &a in as_ {
            for _ in 0..count {
                let w = random_spin_config(&mut r, n, radius);
                max_residual = max_residual.max(gibbs_identity_residual(&w, a)?.abs());
                samples += 1;
            }
        }
    }
    Ok(ResidualReport { samples, max_residual })
}

/// Relative residual of Φ(cx, √c y) = c^{−(3.5n+1)} Φ(x, y) over random (x, y, c).
pub fn scaling_check(count: usize, rng: RngSpec) -> Result<ResidualReport> {
    use rand::Rng;
    let mut r = rng.rng();
    let mut max_residual: f64 = 0.0;
    for _ in 0..count {
        let n = r.random_range(1..6);
        let x = EdgeWeights::new((0..3 * n + 1).map(|_| r.random_range(0.1..5.0)).collect(), Normalization::None)?;
        let y: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
        let codes = ladder::all_codes(n);
        let code = &codes[r.random_range(0..codes.len())];
        let a = r.random_range(0.6..3.0);
        let c: f64 = r.random_range(0.2..5.0);
        let base = log_phi(&x, &y, code, a)?;
        let ys: Vec<f64> = y.iter().map(|v| v * c.sqrt()).collect();
        let scaled = log_phi(&x.scaled(c)?, &ys, code, a)?;
        let want = -(3.5 * n as f64 + 1.0) * c.ln();
        let res = ((scaled - base) - want).abs() / want.abs().max(base.abs()).max(1.0);
        max_residual = max_residual.max(res);
    }
    Ok(ResidualReport { samples: count, max_residual })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCase {
    /// "middle", "left" or "right".
    pub piece: String,
    pub a: f64,
    pub eta: f64,
    pub random: BoundReport,
    pub grid: BoundReport,
    pub seconds: f64,
}

impl BoundCase {
    pub fn passed(&self) -> bool {
        self.random.passed() && self.grid.passed()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSuiteConfig {
    pub middle_a: Vec<f64>,
    pub eta: Vec<f64>,
    pub boundary_a: Vec<f64>,
    pub samples: usize,
    pub radius: f64,
    /// Grid {−grid_half, …, grid_half} with spacing grid_step, per coordinate.
    pub middle_grid: (f64, f64),
    pub boundary_grid: (f64, f64),
    pub rng: RngSpec,
}

impl Default for BoundSuiteConfig {
    fn default() -> Self {
        BoundSuiteConfig {
            middle_a: vec![0.8, 1.0, 2.0],
            eta: vec![-0.25, 0.0, 0.25],
            boundary_a: vec![0.75, 0.8, 1.0, 2.0],
            samples: 100_000,
            radius: 50.0,
            middle_grid: (30.0, 5.0),
            boundary_grid: (30.0, 1.0),
            rng: RngSpec::new(5, 0),
        }
    }
}

/// The middle bound per (a, η) and the boundary bounds per (a, side), each on random samples and a grid.
pub fn bound_suite(cfg: &BoundSuiteConfig) -> Result<Vec<BoundCase>> {
    let mut out = Vec::new();
    let mut stream = cfg.rng.stream;
    let (mh, ms) = cfg.middle_grid;
    for &a in &cfg.middle_a {
        for &eta in &cfg.eta {
            let t = std::time::Instant::now();
            let samples = uniform_middle_samples(cfg.rng.with_stream(stream), cfg.samples, cfg.radius);
            stream += 1;
            let random = check_middle_bound(&samples, a, eta)?;
            let grid = grid_middle_bound(a, eta, -mh, mh, ms)?;
            out.push(BoundCase { piece: "middle".into(), a, eta, random, grid, seconds: t.elapsed().as_secs_f64() });
        }
    }
    let (bh, bs) = cfg.boundary_grid;
    let grid_pts = grid_boundary_samples(-bh, bh, bs);
    for &a in &cfg.boundary_a {
        for side in [Side::Left, Side::Right] {
            let t = std::time::Instant::now();
            let samples = uniform_boundary_samples(cfg.rng.with_stream(stream), cfg.samples, cfg.radius);
            stream += 1;
            let random = check_boundary_bound(&samples, a, side)?;
            let grid = check_boundary_bound(&grid_pts, a, side)?;
            let piece = if side == Side::Left { "left" } else { "right" };
            out.push(BoundCase { piece: piece.into(), a, eta: 0.0, random, grid, seconds: t.elapsed().as_secs_f64() });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub n: usize,
    pub j: usize,
    pub i: usize,
    pub transfer: f64,
    pub mcmc: Estimate,
    pub z: f64,
}

/// E_{ν_{n,j}}[Γᵢ] from the operator chain and from a sampler run targeting ν_{n,j}.
pub fn gamma_cross_check(sys: &TransferSystem, mcmc: McmcConfig, i: usize) -> Result<CrossCheck> {
    let (n, j) = (mcmc.n, mcmc.deform_j);
    let transfer = sys.chain_expectation(n, j, i, Upsilon::Gamma)?;
    let mut series = Vec::with_capacity(mcmc.samples);
    run_chain(mcmc, |w| series.push(w.gamma[i - 1]))?;
    let est = stats::batch_means(&series);
    let exact = Estimate { mean: transfer, se: 0.0 };
    Ok(CrossCheck { n, j, i, transfer, mcmc: est, z: est.z_score(&exact) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub observable: Observable,
    pub n: usize,
    pub curve: TailCurve,
}

/// Tail curves of the given observables from one chain.
pub fn tail_curves(mcmc: McmcConfig, observables: &[(Observable, Vec<f64>)]) -> Result<Vec<TailRow>> {
    let mut series = vec![Vec::with_capacity(mcmc.samples); observables.len()];
    run_chain(mcmc, |w| {
        for (s, (o, _)) in series.iter_mut().zip(observables) {
            s.push(o.eval(w));
        }
    })?;
    observables
        .iter()
        .zip(&series)
        .map(|((o, th), s)| Ok(TailRow { observable: *o, n: mcmc.n, curve: tail_estimate(s, th)? }))
        .collect()
}

/// Largest relative deviation of the slopes from their mean.
pub fn slope_spread(slopes: &[f64]) -> f64 {
    let m = stats::mean(slopes);
    slopes.iter().map(|s| ((s - m) / m).abs()).fold(0.0, f64::max)
}

/// Thresholds M for P[|v| ≥ M], spanning roughly the 5% to 0.1% tail.
pub fn default_thresholds(o: Observable) -> Vec<f64> {
    let (lo, hi) = match o {
        Observable::Gamma(_) | Observable::W(_) => (2.0, 7.0),
        Observable::Z(_) | Observable::Z0 | Observable::Zn => (5.0, 11.0),
        _ => (6.0, 15.0),
    };
    (0..).map(|k| lo + k as f64).take_while(|&m| m <= hi).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSuite {
    pub rows: Vec<TailRow>,
    /// (family, largest relative deviation of its slopes from their mean).
    pub spreads: Vec<(String, f64)>,
    pub all_decay: bool,
}

impl TailSuite {
    pub fn stable(&self, tol: f64) -> bool {
        self.spreads.iter().all(|(_, s)| *s <= tol)
    }
}

/// Tails of Γᵢ, Zᵢ, X̲ᵢ at i ∈ {2, n/2, n−2} for every n, one chain per n.
pub fn tail_suite(ns: &[usize], base: McmcConfig) -> Result<TailSuite> {
    let mut rows = Vec::new();
    for (k, &n) in ns.iter().enumerate() {
        if n < 4 {
            return Err(Error::Domain(format!("tail suite needs n ≥ 4, got {n}")));
        }
        let mut obs = Vec::new();
        for i in [2, n / 2, n - 2] {
            for o in [Observable::Gamma(i), Observable::Z(i), Observable::Xlo(i)] {
                obs.push((o, default_thresholds(o)));
            }
        }
        let cfg = McmcConfig { n, deform_j: 0, rng: base.rng.with_stream(base.rng.stream + k as u64), ..base };
        rows.extend(tail_curves(cfg, &obs)?);
    }
    let family = |o: &Observable| match o {
        Observable::Gamma(_) => "gamma",
        Observable::Z(_) => "z",
        _ => "xlo",
    };
    let spreads = ["gamma", "z", "xlo"]
        .iter()
        .map(|f| {
            let sl: Vec<f64> = rows.iter().filter(|r| family(&r.observable) == *f).map(|r| r.curve.slope).collect();
            (f.to_string(), slope_spread(&sl))
        })
        .collect();
    let all_decay = rows.iter().all(|r| r.curve.decays(3.0));
    Ok(TailSuite { rows, spreads, all_decay })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaSweep {
    pub n: usize,
    /// ln Z_{n,j} for j = 0..n.
    pub log_z: Vec<f64>,
    pub fit_range: (usize, usize),
    pub fit: LinearFit,
    pub z0_is_one: bool,
}

/// ln Z_{n,j} over j with an affine fit on the given range.
pub fn sigma_moment_sweep(sys: &TransferSystem, n: usize, fit_range: (usize, usize)) -> Result<SigmaSweep> {
    if !(fit_range.0 + 2 <= fit_range.1 && fit_range.1 < n) {
        return Err(Error::Domain(format!("fit range {fit_range:?} must hold three levels below n = {n}")));
    }
    let z: Vec<f64> = (0..n).map(|j| sys.sigma_moment(n, j)).collect::<Result<_>>()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = (fit_range.0..=fit_range.1).map(|j| (j as f64, z[j].ln())).unzip();
    Ok(SigmaSweep { n, z0_is_one: z[0] == 1.0, log_z: z.iter().map(|v| v.ln()).collect(), fit_range, fit: stats::linear_fit(&xs, &ys) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundChainReport {
    pub environments: usize,
    /// Violations of Q ≤ C, C ≤ 1/R̃, 1/R̃ ≤ x̲ₙ + x̄ₙ, R̃ ≤ R.
    pub violations: [usize; 4],
}

/// Evaluate the inequality chain on environments sampled from the Gibbs measure.
pub fn bound_chain_on_samples(mcmc: McmcConfig, tol: f64) -> Result<BoundChainReport> {
    let mut envs = Vec::with_capacity(mcmc.samples);
    run_chain(mcmc, |w| envs.push(w.clone()))?;
    let mut violations = [0; 4];
    for w in &envs {
        let x = environment_from_spin(w)?;
        for (v, ok) in violations.iter_mut().zip(BoundChain::evaluate(&x)?.holds(tol)) {
            *v += !ok as usize;
        }
    }
    Ok(BoundChainReport { environments: envs.len(), violations })
}

/// Count of random log-uniform weightings with R̃ > R(1 + tol).
pub fn shorted_vs_resistance(n_max: usize, count: usize, rng: RngSpec, tol: f64) -> Result<usize> {
    use rand::Rng;
    let mut r = rng.rng();
    let mut bad = 0;
    for _ in 0..count {
        let n = r.random_range(1..=n_max);
        let x: Vec<f64> = (0..3 * n + 1).map(|_| r.random_range(-5.0f64..5.0).exp()).collect();
        let x = EdgeWeights::new(x, Normalization::None)?;
        if shorted_resistance(&x) > effective_resistance(&x)?.resistance * (1.0 + tol) {
            bad += 1;
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_profile_shape() {
        let cfg = ProfileConfig { n: 6, steps: 20_000, replicas: 12, fit_levels: (1, 5), c_levels: (1, 3), from_level: 3, ..Default::default() };
        let r = profile_experiment(cfg).unwrap();
        assert_eq!(r.rows.len(), 7);
        assert_eq!(r.rows[0].median_log_ratio, 0.0);
        assert!(r.c_hat > 0.0);
        assert!(r.rows.iter().all(|row| (0.0..=1.0).contains(&row.fraction_below)));
        assert!(profile_experiment(ProfileConfig { fit_levels: (2, 20), ..cfg }).is_err());
    }

    #[test]
    fn profile_is_deterministic() {
        let cfg = ProfileConfig { n: 4, steps: 5_000, replicas: 4, fit_levels: (1, 4), c_levels: (1, 2), from_level: 2, ..Default::default() };
        let run = || serde_json::to_string(&profile_experiment(cfg).unwrap()).unwrap();
        assert_eq!(run(), run());
    }

    #[test]
    fn returns_are_nested_across_n() {
        let t = returns_trend(ReturnsConfig { ns: vec![6, 2, 4], replicas: 400, ..Default::default() }).unwrap();
        assert!(t.nested && t.monotone);
        assert_eq!(t.config.ns, vec![2, 4, 6]);
        assert_eq!(t.rows.len(), 9);
    }

    #[test]
    fn coarse_quadrature_is_close() {
        let r = rwre_quadrature_check(QuadratureConfig { nodes: 12, max_len: 2, ..Default::default() }).unwrap();
        assert_eq!(r.len(), 2 + 4);
        let total: f64 = r.iter().filter(|c| c.path.len() == 3).map(|c| c.quadrature).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(r.iter().all(|c| c.error < 0.05), "{r:?}");
    }

    #[test]
    fn small_suites_pass() {
        let t = tree_bijection_check(5).unwrap();
        assert!(t.iter().all(|r| r.round_trip && r.codes as i128 == r.matrix_tree));
        assert_eq!(t[2].codes, 56);
        assert!(gibbs_identity_check(&[1, 3], &[1.0], 50, 4.0, RngSpec::new(1, 0)).unwrap().max_residual < 1e-9);
        assert!(scaling_check(100, RngSpec::new(2, 0)).unwrap().max_residual < 1e-12);
    }

    #[test]
    fn small_bound_suite() {
        let cfg = BoundSuiteConfig {
            middle_a: vec![1.0],
            eta: vec![0.25],
            boundary_a: vec![0.75],
            samples: 2000,
            middle_grid: (10.0, 10.0),
            boundary_grid: (10.0, 5.0),
            ..Default::default()
        };
        let r = bound_suite(&cfg).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r.iter().all(|c| c.passed()), "{r:?}");
        assert_eq!(r[0].grid.samples, 3usize.pow(6) * 16);
    }

    #[test]
    fn short_tail_suite() {
        let base = McmcConfig { burn_in: 300, samples: 3000, rng: RngSpec::new(4, 0), ..McmcConfig::default() };
        let t = tail_suite(&[4], base).unwrap();
        assert_eq!(t.rows.len(), 9);
        assert_eq!(t.spreads.len(), 3);
        assert!(t.rows.iter().all(|r| r.curve.slope < 0.0 || r.curve.degenerate));
        assert!(tail_suite(&[3], base).is_err());
    }

    #[test]
    fn sigma_sweep_small_grid() {
        let sys = TransferSystem::new(
            crate::transfer::GridParams { nx: 8, nz: 12, nw: 12, nzb: 16, ..Default::default() },
            1.0,
            false,
        )
        .unwrap();
        let s = sigma_moment_sweep(&sys, 8, (1, 6)).unwrap();
        assert!(s.z0_is_one && s.log_z[0] == 0.0);
        assert!(s.fit.slope < 0.0);
        assert!(sigma_moment_sweep(&sys, 8, (5, 8)).is_err());
    }

    #[test]
    fn shorted_never_exceeds_resistance() {
        assert_eq!(shorted_vs_resistance(4, 300, RngSpec::new(3, 0), 1e-12).unwrap(), 0);
    }
}
