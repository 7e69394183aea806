//! Edge-reinforced random walk and the fixed-environment walk on the ladder.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ladder::{EdgeKind, EdgeWeights, LadderGraph, Vertex};
use crate::rng::RngSpec;
use crate::scalar::Scalar;
use crate::stats;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkTrace {
    pub start: usize,
    pub steps: u64,
    pub local_times: Vec<u64>,
    pub position: usize,
    /// Visits to the start vertex after time 0.
    pub returns: u64,
    /// Visits to {0̲, 0̄} after time 0.
    pub rung_zero_visits: u64,
    pub history: Option<Vec<u32>>,
}

impl WalkTrace {
    fn new(g: &LadderGraph, start: usize, thin: Option<u64>) -> Self {
        WalkTrace {
            start,
            steps: 0,
            local_times: vec![0; g.edge_count()],
            position: start,
            returns: 0,
            rung_zero_visits: 0,
            history: thin.map(|_| vec![start as u32]),
        }
    }

    /// α_t = k_t / t.
    pub fn alpha(&self) -> Vec<f64> {
        self.local_times.iter().map(|&k| k as f64 / self.steps as f64).collect()
    }

    /// w_t(e) = a + k_t(e).
    pub fn weight(&self, e: usize, a: f64) -> f64 {
        a + self.local_times[e] as f64
    }
}

/// Walk options shared by the two simulators.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WalkOptions {
    /// Record every s-th position.
    pub thin: Option<u64>,
}

fn check_start(g: &LadderGraph, start: usize) -> Result<()> {
    if start >= g.vertex_count() {
        return Err(Error::Domain(format!("start vertex {start} not in graph")));
    }
    Ok(())
}

#[inline]
fn record(tr: &mut WalkTrace, next: usize, e: usize, thin: Option<u64>) {
    tr.local_times[e] += 1;
    tr.steps += 1;
    tr.position = next;
    if next == tr.start {
        tr.returns += 1;
    }
    if next < 2 {
        tr.rung_zero_visits += 1;
    }
    if let (Some(s), Some(h)) = (thin, tr.history.as_mut()) {
        if tr.steps % s == 0 {
            h.push(next as u32);
        }
    }
}

/// One reinforced step from `v`, consuming one uniform.
#[inline]
fn errw_choice(g: &LadderGraph, k: &[u64], a: f64, v: usize, u: f64) -> (usize, usize) {
    let nb = g.neighbors(v);
    let total: f64 = nb.iter().map(|&(_, e)| a + k[e] as f64).sum();
    let mut r = u * total;
    for &(w, e) in &nb[..nb.len() - 1] {
        r -= a + k[e] as f64;
        if r < 0.0 {
            return (w, e);
        }
    }
    nb[nb.len() - 1]
}

pub fn errw_run(g: &LadderGraph, a: f64, steps: u64, start: usize, rng: RngSpec, opts: WalkOptions) -> Result<WalkTrace> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("initial weight a = {a} must be positive")));
    }
    check_start(g, start)?;
    let mut r = rng.rng();
    let mut tr = WalkTrace::new(g, start, opts.thin);
    for _ in 0..steps {
        let (w, e) = errw_choice(g, &tr.local_times, a, tr.position, r.random::<f64>());
        record(&mut tr, w, e, opts.thin);
    }
    Ok(tr)
}

/// Fixed-environment walk: jumps proportional to x_e, no reinforcement.
pub fn rwre_run<F: Scalar>(g: &LadderGraph, x: &EdgeWeights<F>, steps: u64, start: usize, rng: RngSpec, opts: WalkOptions) -> Result<WalkTrace> {
    check_start(g, start)?;
    if x.n() != g.n() {
        return Err(Error::Domain("weights and graph disagree on n".into()));
    }
    let table = CumTable::new(g, x);
    let mut r = rng.rng();
    let mut tr = WalkTrace::new(g, start, opts.thin);
    for _ in 0..steps {
        let (w, e) = table.pick(tr.position, r.random::<f64>());
        record(&mut tr, w, e, opts.thin);
    }
    Ok(tr)
}

/// Cumulative transition probabilities per vertex.
pub(crate) struct CumTable {
    rows: Vec<Vec<(f64, usize, usize)>>,
}

impl CumTable {
    pub(crate) fn new<F: Scalar>(g: &LadderGraph, x: &EdgeWeights<F>) -> Self {
        let rows = (0..g.vertex_count())
            .map(|v| {
                let nb = g.neighbors(v);
                let total: f64 = nb.iter().map(|&(_, e)| x.values()[e].f64()).sum();
                let mut acc = 0.0;
                nb.iter()
                    .map(|&(w, e)| {
                        acc += x.values()[e].f64() / total;
                        (acc, w, e)
                    })
                    .collect()
            })
            .collect();
        CumTable { rows }
    }

    #[inline]
    pub(crate) fn pick(&self, v: usize, u: f64) -> (usize, usize) {
        let row = &self.rows[v];
        for &(c, w, e) in &row[..row.len() - 1] {
            if u < c {
                return (w, e);
            }
        }
        let &(_, w, e) = row.last().unwrap();
        (w, e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathProbability {
    /// Exact value as "p/q" when the path is short enough.
    pub exact: Option<String>,
    pub value: f64,
}

fn check_path(g: &LadderGraph, path: &[usize]) -> Result<Vec<usize>> {
    if path.is_empty() || path.iter().any(|&v| v >= g.vertex_count()) {
        return Err(Error::Domain("path must be a nonempty vertex sequence of the graph".into()));
    }
    path.windows(2)
        .map(|w| g.edge_between(w[0], w[1]).ok_or_else(|| Error::Domain(format!("{} and {} are not adjacent", w[0], w[1]))))
        .collect()
}

/// Exact ERRW probability of following `path`, in rationals.
pub fn path_probability_exact(g: &LadderGraph, path: &[usize], a: &BigRational) -> Result<BigRational> {
    let edges = check_path(g, path)?;
    let mut k = vec![BigInt::zero(); g.edge_count()];
    let mut p = BigRational::one();
    for (s, &e) in edges.iter().enumerate() {
        let v = path[s];
        let total = g.neighbors(v).iter().fold(BigRational::zero(), |acc, &(_, f)| acc + a + BigRational::from_integer(k[f].clone()));
        p = p * (a + BigRational::from_integer(k[e].clone())) / total;
        k[e] += 1;
    }
    Ok(p)
}

/// ERRW path probability; exact (rational) for paths of at most 32 steps.
pub fn path_probability_errw(g: &LadderGraph, path: &[usize], a: f64) -> Result<PathProbability> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("initial weight a = {a} must be positive")));
    }
    let edges = check_path(g, path)?;
    if edges.len() <= 32 {
        let ar = BigRational::from_f64(a).ok_or_else(|| Error::Domain("a not finite".into()))?;
        let p = path_probability_exact(g, path, &ar)?;
        return Ok(PathProbability { value: p.to_f64().unwrap_or(f64::NAN), exact: Some(p.to_string()) });
    }
    let mut k = vec![0u64; g.edge_count()];
    let mut p = 1.0;
    for (s, &e) in edges.iter().enumerate() {
        let total: f64 = g.neighbors(path[s]).iter().map(|&(_, f)| a + k[f] as f64).sum();
        p *= (a + k[e] as f64) / total;
        k[e] += 1;
    }
    Ok(PathProbability { exact: None, value: p })
}

/// Probability of following `path` in the fixed environment x.
pub fn path_probability_rwre<F: Scalar>(g: &LadderGraph, path: &[usize], x: &EdgeWeights<F>) -> Result<F> {
    let edges = check_path(g, path)?;
    let mut p = F::one();
    for (s, &e) in edges.iter().enumerate() {
        let v = Vertex::from_index(path[s]);
        p = p * x.values()[e] / x.vertex_weight(v);
    }
    Ok(p)
}

/// All paths from `start` with 1..=max_len steps.
pub fn paths_from(g: &LadderGraph, start: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut frontier = vec![vec![start]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for p in &frontier {
            for &(w, _) in g.neighbors(*p.last().unwrap()) {
                let mut q = p.clone();
                q.push(w);
                next.push(q);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representative {
    Rung,
    Lower,
    Upper,
}

impl Representative {
    pub fn edge(self, i: usize) -> EdgeKind {
        match (self, i) {
            (_, 0) | (Representative::Rung, _) => EdgeKind::Rung(i),
            (Representative::Lower, _) => EdgeKind::Lower(i),
            (Representative::Upper, _) => EdgeKind::Upper(i),
        }
    }
}

/// (level, k_t(eᵢ)/k_t(z₀)) for every level 0..=n.
pub fn local_time_profile(tr: &WalkTrace, rep: Representative) -> Result<Vec<(usize, f64)>> {
    let k0 = tr.local_times[0];
    if k0 == 0 {
        return Err(Error::Numerical("z0 never crossed; run longer".into()));
    }
    let n = (tr.local_times.len() - 1) / 3;
    Ok((0..=n).map(|i| (i, tr.local_times[rep.edge(i).index()] as f64 / k0 as f64)).collect())
}

/// Returns to 0̄-style start vertex before the walk first hits level n, capped at `cap`.
/// Consumes one uniform per step so that runs for different n couple pathwise.
pub fn errw_returns_before_exit(n: usize, a: f64, start: usize, cap: u64, max_steps: u64, rng: RngSpec) -> Result<ReturnsOutcome> {
    let g = crate::ladder::build(n)?;
    check_start(&g, start)?;
    let mut r = rng.rng();
    let mut k = vec![0u64; g.edge_count()];
    let mut v = start;
    let mut returns = 0;
    for step in 0..max_steps {
        let (w, e) = errw_choice(&g, &k, a, v, r.random::<f64>());
        k[e] += 1;
        v = w;
        if v / 2 == n {
            return Ok(ReturnsOutcome { returns, exited: true, steps: step + 1 });
        }
        if v == start {
            returns += 1;
            if returns >= cap {
                return Ok(ReturnsOutcome { returns, exited: false, steps: step + 1 });
            }
        }
    }
    Ok(ReturnsOutcome { returns, exited: false, steps: max_steps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReturnsOutcome {
    pub returns: u64,
    pub exited: bool,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnStats {
    pub n: usize,
    pub k: u64,
    pub replicas: usize,
    pub successes: usize,
    pub fraction: f64,
    /// Wilson interval at 3σ.
    pub ci: (f64, f64),
}

/// Fraction of replicas with ≥ k returns to the start before hitting level n.
/// Replica r uses stream r of `rng`.
pub fn return_statistics(a: f64, k: u64, n: usize, rng: RngSpec, replicas: usize) -> Result<ReturnStats> {
    if k == 0 {
        return Ok(ReturnStats { n, k, replicas, successes: replicas, fraction: 1.0, ci: (1.0, 1.0) });
    }
    let start = Vertex::upper(0).index();
    let outcomes: Vec<ReturnsOutcome> = (0..replicas)
        .into_par_iter()
        .map(|r| errw_returns_before_exit(n, a, start, k, u64::MAX, rng.with_stream(r as u64)))
        .collect::<Result<_>>()?;
    let successes = outcomes.iter().filter(|o| o.returns >= k).count();
    Ok(ReturnStats {
        n,
        k,
        replicas,
        successes,
        fraction: successes as f64 / replicas as f64,
        ci: stats::wilson(successes, replicas, 3.0),
    })
}

/// Exact probability that ERRW from `start` on build(n) returns to `start`
/// before hitting level n, summed over paths of at most `max_len` steps.
/// Also returns the total mass of the enumerated paths that stopped.
pub fn exact_return_probability(n: usize, a: &BigRational, start: usize, max_len: usize) -> Result<(BigRational, BigRational)> {
    let g = crate::ladder::build(n)?;
    let mut ret = BigRational::zero();
    let mut done = BigRational::zero();
    let mut frontier = vec![vec![start]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for p in &frontier {
            for &(w, _) in g.neighbors(*p.last().unwrap()) {
                let mut q = p.clone();
                q.push(w);
                if w == start || w / 2 == n {
                    let pr = path_probability_exact(&g, &q, a)?;
                    if w == start {
                        ret += pr.clone();
                    }
                    done += pr;
                } else {
                    next.push(q);
                }
            }
        }
        frontier = next;
    }
    Ok((ret, done))
}
