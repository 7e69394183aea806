//! Perron triples of the discretized transfer operators.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kernel::TransferOperator;
use crate::error::{Error, Result};
use crate::rng::RngSpec;

pub fn dot(mu: &[f64], f: &[f64], g: &[f64]) -> f64 {
    mu.iter().zip(f).zip(g).map(|((m, a), b)| m * a * b).sum()
}

pub fn norm(mu: &[f64], f: &[f64]) -> f64 {
    dot(mu, f, f).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenTriple {
    pub lambda: f64,
    /// Left eigenfunction: vK = λv.
    pub v: Vec<f64>,
    /// Right eigenfunction: Kv* = λv*.
    pub v_star: Vec<f64>,
    /// |λ₂|/λ.
    pub gap: f64,
    pub residual: f64,
    pub residual_star: f64,
    pub iterations: usize,
}

pub const MAX_ITERATIONS: usize = 10_000;

fn power(mu: &[f64], start: Vec<f64>, apply: impl Fn(&[f64]) -> Vec<f64>) -> Result<(f64, Vec<f64>, f64, usize)> {
    let mut v = start;
    let s = norm(mu, &v);
    v.iter_mut().for_each(|x| *x /= s);
    let mut last = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let w = apply(&v);
        let lambda = dot(mu, &w, &v);
        let r: Vec<f64> = w.iter().zip(&v).map(|(a, b)| a - lambda * b).collect();
        let res = norm(mu, &r);
        let s = norm(mu, &w);
        if res <= 1e-12 * lambda.abs() || (it > 50 && res >= last && res <= 1e-10) {
            return Ok((lambda, v, res, it));
        }
        last = res;
        v = w.into_iter().map(|x| x / s).collect();
    }
    let w = apply(&v);
    let lambda = dot(mu, &w, &v);
    let r: Vec<f64> = w.iter().zip(&v).map(|(a, b)| a - lambda * b).collect();
    Err(Error::NoConvergence { iterations: MAX_ITERATIONS, residual: norm(mu, &r) })
}

/// Power iteration on f ↦ fK and g ↦ Kg, then a deflated iteration for |λ₂|.
pub fn leading_triple(op: &TransferOperator, mu: &[f64], rng: RngSpec) -> Result<EigenTriple> {
    let mut r = rng.rng();
    let d = op.dim();
    let start: Vec<f64> = (0..d).map(|_| r.random_range(0.5..1.5)).collect();
    let (lambda, mut v, res, it1) = power(mu, start.clone(), |f| op.apply_left(f))?;
    let (lambda2, mut vs, res_s, it2) = power(mu, start, |g| op.apply_right(g))?;
    if !(lambda > 0.0) || (lambda - lambda2).abs() > 1e-9 * lambda {
        return Err(Error::Numerical(format!("left and right eigenvalues disagree: {lambda} vs {lambda2}")));
    }
    if v.iter().chain(&vs).any(|x| !(*x > 0.0)) {
        return Err(Error::Numerical("eigenfunction not strictly positive".into()));
    }
    // ⟨v v*⟩ = 1 with ‖v‖ = 1
    let c = dot(mu, &v, &vs);
    vs.iter_mut().for_each(|x| *x /= c);
    let n = norm(mu, &v);
    v.iter_mut().for_each(|x| *x /= n);
    vs.iter_mut().for_each(|x| *x *= n);
    let gap = deflated_ratio(op, mu, lambda, &v, &vs, &mut r);
    Ok(EigenTriple {
        lambda,
        v,
        v_star: vs,
        gap,
        residual: res,
        residual_star: res_s,
        iterations: it1.max(it2),
    })
}

fn deflated_ratio(op: &TransferOperator, mu: &[f64], lambda: f64, v: &[f64], vs: &[f64], r: &mut impl Rng) -> f64 {
    let d = op.dim();
    let project = |f: &mut Vec<f64>| {
        let c = dot(mu, f, vs);
        f.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
    };
    let mut f: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
    project(&mut f);
    let mut logs = Vec::new();
    for _ in 0..120 {
        let s = norm(mu, &f);
        f.iter_mut().for_each(|x| *x /= s);
        logs.push(s.ln());
        f = op.apply_left(&f);
        project(&mut f);
    }
    // average growth over the last 40 steps smooths complex pairs
    let tail = &logs[logs.len() - 40..];
    (tail.iter().sum::<f64>() / tail.len() as f64).exp() / lambda
}

/// ‖λ⁻ᵐ fKᵐ − ⟨f v*⟩ v‖ for m = 1..=steps.
pub fn rank_one_errors(op: &TransferOperator, mu: &[f64], t: &EigenTriple, f: &[f64], steps: usize) -> Vec<f64> {
    let c = dot(mu, f, &t.v_star);
    let mut g = f.to_vec();
    (0..steps)
        .map(|_| {
            g = op.apply_left(&g).into_iter().map(|x| x / t.lambda).collect();
            let e: Vec<f64> = g.iter().zip(&t.v).map(|(a, b)| a - c * b).collect();
            norm(mu, &e)
        })
        .collect()
}

/// Operator norm of f ↦ fK on the weighted space.
pub fn operator_norm(op: &TransferOperator, mu: &[f64], iterations: usize) -> f64 {
    let d = op.dim();
    let mut f: Vec<f64> = (0..d).map(|k| 1.0 + (k % 7) as f64 * 0.1).collect();
    let mut est = 0.0;
    for _ in 0..iterations {
        let s = norm(mu, &f);
        f.iter_mut().for_each(|x| *x /= s);
        let g = op.apply_right(&op.apply_left(&f));
        est = dot(mu, &g, &f).sqrt();
        f = g;
    }
    est
}

#[cfg(test)]
mod tests {
    use super::super::grid::{build_grid, GridParams};
    use super::super::kernel::KernelTag;
    use super::*;

    #[test]
    fn small_grid_triple() {
        let g = build_grid(GridParams { nx: 8, nz: 12, nw: 12, nzb: 16, ..Default::default() }, 1.0).unwrap();
        let mu = g.mu_vec();
        let k = TransferOperator::assemble(&g, 1.0, 0.0, KernelTag::Plain).unwrap();
        let t = leading_triple(&k, &mu, RngSpec::new(1, 0)).unwrap();
        assert!(t.lambda > 0.0 && t.gap < 1.0 && t.gap > 0.0);
        assert!(t.residual < 1e-10 && t.residual_star < 1e-10);
        assert!((dot(&mu, &t.v, &t.v_star) - 1.0).abs() < 1e-12);
        assert!(t.v.iter().chain(&t.v_star).all(|&x| x > 0.0));
        // at η = 0 the right eigenfunction is the reflected left one
        let refl: Vec<f64> = (0..k.dim()).map(|i| t.v[g.reflect(i)]).collect();
        let c = dot(&mu, &t.v_star, &refl) / dot(&mu, &refl, &refl);
        let diff: Vec<f64> = t.v_star.iter().zip(&refl).map(|(a, b)| a - c * b).collect();
        assert!(norm(&mu, &diff) < 1e-8 * norm(&mu, &t.v_star));
        let f: Vec<f64> = (0..k.dim()).map(|i| 1.0 + (i % 5) as f64).collect();
        let e = rank_one_errors(&k, &mu, &t, &f, 12);
        let ratio = (e[11] / e[5]).powf(1.0 / 6.0);
        assert!((ratio - t.gap).abs() < 0.1 * t.gap, "{ratio} vs {}", t.gap);
    }
}
