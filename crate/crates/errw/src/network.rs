//! Electric-network view of a weighted ladder: conductance x_e on edge e.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ladder::{EdgeKind, EdgeWeights, Vertex};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResistanceResult<F> {
    /// Between 0̄ and {n̲, n̄} shorted together.
    pub resistance: F,
    pub conductance: F,
    /// Potentials with 0̄ at 1 and {n̲, n̄} at 0, indexed by vertex.
    pub potentials: Vec<F>,
    /// Largest |Σ x_e (φ_u − φ_v)| over interior nodes.
    pub harmonic_residual: F,
}

/// Node of the reduced network: n̲ and n̄ share the ground node.
fn node(v: Vertex, n: usize) -> usize {
    if v.i == n {
        2 * n
    } else {
        v.index()
    }
}

fn solve_dense<F: Scalar>(mut m: Vec<Vec<F>>, mut b: Vec<F>) -> Result<Vec<F>> {
    let k = b.len();
    for p in 0..k {
        let piv = (p..k).max_by(|&i, &j| m[i][p].abs().partial_cmp(&m[j][p].abs()).unwrap()).unwrap();
        if m[piv][p] == F::zero() {
            return Err(Error::Numerical("singular network system".into()));
        }
        m.swap(p, piv);
        b.swap(p, piv);
        for i in p + 1..k {
            let f = m[i][p] / m[p][p];
            if f != F::zero() {
                for j in p..k {
                    let t = m[p][j];
                    m[i][j] = m[i][j] - f * t;
                }
                let t = b[p];
                b[i] = b[i] - f * t;
            }
        }
    }
    let mut x = vec![F::zero(); k];
    for i in (0..k).rev() {
        let s = (i + 1..k).fold(b[i], |s, j| s - m[i][j] * x[j]);
        x[i] = s / m[i][i];
    }
    Ok(x)
}

pub fn effective_resistance<F: Scalar>(x: &EdgeWeights<F>) -> Result<ResistanceResult<F>> {
    let n = x.n();
    let source = Vertex::upper(0).index();
    let ground = 2 * n;
    // unknowns: reduced nodes other than source and ground
    let unknowns: Vec<usize> = (0..ground).filter(|&v| v != source).collect();
    let slot = |v: usize| unknowns.iter().position(|&u| u == v);
    let k = unknowns.len();
    let mut m = vec![vec![F::zero(); k]; k];
    let mut b = vec![F::zero(); k];
    let mut edges = Vec::with_capacity(3 * n + 1);
    for e in 0..3 * n + 1 {
        let kind = EdgeKind::from_index(e);
        let (u, v) = kind.endpoints();
        let (u, v) = (node(u, n), node(v, n));
        if u == v {
            continue;
        }
        let c = x.values()[e];
        edges.push((u, v, c));
        for (p, q) in [(u, v), (v, u)] {
            if let Some(i) = slot(p) {
                m[i][i] = m[i][i] + c;
                if let Some(j) = slot(q) {
                    m[i][j] = m[i][j] - c;
                } else if q == source {
                    b[i] = b[i] + c;
                }
            }
        }
    }
    let sol = if k > 0 { solve_dense(m, b)? } else { vec![] };
    let mut phi = vec![F::zero(); ground + 1];
    phi[source] = F::one();
    for (i, &u) in unknowns.iter().enumerate() {
        phi[u] = sol[i];
    }
    let mut flux = vec![F::zero(); ground + 1];
    let mut scale = vec![F::zero(); ground + 1];
    for &(u, v, c) in &edges {
        let d = c * (phi[u] - phi[v]);
        flux[u] = flux[u] + d;
        flux[v] = flux[v] - d;
        scale[u] = scale[u] + c;
        scale[v] = scale[v] + c;
    }
    let current = flux[source];
    if !(current > F::zero()) {
        return Err(Error::Numerical("nonpositive current".into()));
    }
    let harmonic_residual = unknowns.iter().map(|&u| flux[u].abs() / scale[u]).fold(F::zero(), F::max);
    let mut potentials = vec![F::zero(); 2 * (n + 1)];
    for v in 0..2 * (n + 1) {
        potentials[v] = phi[node(Vertex::from_index(v), n)];
    }
    Ok(ResistanceResult { resistance: current.recip(), conductance: current, potentials, harmonic_residual })
}

/// Σᵢ 1/(x̲ᵢ + x̄ᵢ): all rungs shorted.
pub fn shorted_resistance<F: Scalar>(x: &EdgeWeights<F>) -> F {
    (1..=x.n()).fold(F::zero(), |s, i| s + (x.lower(i) + x.upper(i)).recip())
}

/// Probability that the walk in environment x leaves 0̄ and reaches {n̲, n̄}
/// before coming back: C/x_{0̄}.
pub fn escape_probability<F: Scalar>(x: &EdgeWeights<F>) -> Result<F> {
    let r = effective_resistance(x)?;
    let p = r.conductance / x.vertex_weight(Vertex::upper(0));
    let tol = F::of(1e-10);
    if p < -tol || p > F::one() + tol {
        return Err(Error::Numerical(format!("escape probability {} outside [0, 1]", p.f64())));
    }
    Ok(p.max(F::zero()).min(F::one()))
}

/// One row of the Q ≤ C ≤ 1/R̃ ≤ x̲ₙ + x̄ₙ chain, for z₀ = 1 environments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundChain {
    pub resistance: f64,
    pub shorted: f64,
    pub conductance: f64,
    pub escape: f64,
    pub last_horizontal: f64,
}

impl BoundChain {
    pub fn evaluate<F: Scalar>(x: &EdgeWeights<F>) -> Result<Self> {
        let r = effective_resistance(x)?;
        let n = x.n();
        Ok(BoundChain {
            resistance: r.resistance.f64(),
            shorted: shorted_resistance(x).f64(),
            conductance: r.conductance.f64(),
            escape: escape_probability(x)?.f64(),
            last_horizontal: (x.lower(n) + x.upper(n)).f64(),
        })
    }

    /// The four inequalities, each with relative slack `tol`.
    pub fn holds(&self, tol: f64) -> [bool; 4] {
        let le = |a: f64, b: f64| a <= b * (1.0 + tol);
        [
            le(self.escape, self.conductance),
            le(self.conductance, 1.0 / self.shorted),
            le(1.0 / self.shorted, self.last_horizontal),
            le(self.shorted, self.resistance),
        ]
    }
}
