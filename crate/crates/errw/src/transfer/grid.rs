//! Quadrature grids for the cycle space and the rung integration.

use serde::{Deserialize, Serialize};

use crate::certificates::c7;
use crate::environment::{h_middle, Cycle, HamiltonianParams, Rung};
use crate::error::{Error, Result};
use crate::ladder::TreeState;
use crate::quad::{on_interval, sinh_mapped, Rule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridParams {
    /// Nodes per cycle axis (X̲ and X̄ share the rule).
    pub nx: usize,
    pub x_lo: f64,
    pub x_hi: f64,
    pub x_center: f64,
    pub x_beta: f64,
    pub nz: usize,
    pub z_lo: f64,
    pub z_hi: f64,
    pub z_center: f64,
    pub z_beta: f64,
    pub nw: usize,
    /// Cap on the W half-width.
    pub w_max: f64,
    /// W half-width at Z solves 2 sinh²(R/4) e^{−Z} = w_cut.
    pub w_cut: f64,
    /// Offset of the W interval; nonzero breaks the W ↦ −W symmetry.
    pub w_shift: f64,
    /// Nodes for the boundary Z integrals.
    pub nzb: usize,
    /// Requested tail mass.
    pub eps: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams {
            nx: 20,
            x_lo: -5.0,
            x_hi: 45.0,
            x_center: 1.0,
            x_beta: 3.0,
            nz: 32,
            z_lo: -25.0,
            z_hi: 55.0,
            z_center: 0.0,
            z_beta: 2.5,
            nw: 32,
            w_max: 30.0,
            w_cut: 40.0,
            w_shift: 0.0,
            nzb: 64,
            eps: 1e-8,
        }
    }
}

impl GridParams {
    /// Every node count doubled, same box.
    pub fn doubled(&self) -> Self {
        GridParams { nx: 2 * self.nx, nz: 2 * self.nz, nw: 2 * self.nw, nzb: 2 * self.nzb, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisRadius {
    pub axis: String,
    /// Box edge in use.
    pub actual: f64,
    /// Smallest edge meeting the requested tail mass under the decay model.
    pub required: f64,
    pub tail_estimate: f64,
}

/// Rung quadrature node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RungNode {
    pub z: f64,
    pub w: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridState {
    /// 0 for σ = +1, 1 for σ = −1.
    pub s: usize,
    pub t: TreeState,
    pub i1: usize,
    pub i2: usize,
}

impl GridState {
    pub fn sigma(&self) -> i8 {
        if self.s == 0 {
            1
        } else {
            -1
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferGrid {
    pub params: GridParams,
    pub x: Rule,
    pub rung: Vec<RungNode>,
    pub zb: Rule,
    pub radii: Vec<AxisRadius>,
    /// ln(1/ε)/c₇(a): the radius the generic middle bound would ask for.
    pub conservative_radius: f64,
}

/// Half-width R(Z) of the W interval.
pub fn w_half_width(z: f64, p: &GridParams) -> f64 {
    p.w_max.min(4.0 * (p.w_cut * z.exp() / 2.0).sqrt().asinh())
}

/// Smallest slope of H_middle along `axis` far out at fixed W, over tree pairs and both cycle slots.
fn directional_rate(a: f64, axis: usize) -> f64 {
    let p = HamiltonianParams { a, eta: 0.25 };
    let far = 60.0;
    let mut rate = f64::INFINITY;
    for t in TreeState::ALL {
        for t2 in TreeState::ALL {
            if crate::ladder::forbidden(t, t2) {
                continue;
            }
            for slot in 0..2 {
                let eval = |v: f64| {
                    let mut c = Cycle::new(0.0, 0.0, 1, t);
                    let mut c2 = Cycle::new(0.0, 0.0, 1, t2);
                    let mut r = Rung { z: 0.0, gamma: 0.0 };
                    match (axis, slot) {
                        (0, 0) => c.xlo = v,
                        (0, _) => c2.xlo = v,
                        (1, 0) => c.xhi = v,
                        (1, _) => c2.xhi = v,
                        _ => r.z = v,
                    }
                    // hold W = Γ + U′ − U at 0 so H_expII stays bounded
                    r.gamma = c.u() - c2.u();
                    h_middle(&c, &r, &c2, &p).to_f64()
                };
                rate = rate.min(eval(far + 1.0) - eval(far));
            }
        }
    }
    rate
}

pub fn build_grid(params: GridParams, a: f64) -> Result<TransferGrid> {
    let p = params;
    for (name, n) in [("nx", p.nx), ("nz", p.nz), ("nw", p.nw), ("nzb", p.nzb)] {
        if n < 8 {
            return Err(Error::Domain(format!("{name} = {n} below 8 nodes")));
        }
    }
    if !(p.x_lo < p.x_center && p.x_center < p.x_hi && p.z_lo < p.z_center && p.z_center < p.z_hi) {
        return Err(Error::Domain("box edges must bracket the centers".into()));
    }
    if !(p.x_beta > 0.0 && p.z_beta > 0.0 && p.w_max > 0.0 && p.w_cut > 0.0 && p.eps > 0.0 && p.eps < 1.0) {
        return Err(Error::Domain("scales, w_max, w_cut must be positive and eps in (0, 1)".into()));
    }
    if !(a > 0.5) {
        return Err(Error::Domain(format!("a = {a} must exceed 1/2")));
    }
    let x = sinh_mapped(p.nx, p.x_lo, p.x_hi, p.x_center, p.x_beta);
    let z = sinh_mapped(p.nz, p.z_lo, p.z_hi, p.z_center, p.z_beta);
    let mut rung = Vec::with_capacity(p.nz * p.nw);
    for (&zk, &wz) in z.nodes.iter().zip(&z.weights) {
        let r = w_half_width(zk, &p);
        let w = on_interval(p.nw, -r + p.w_shift, r + p.w_shift);
        for (&wk, &ww) in w.nodes.iter().zip(&w.weights) {
            rung.push(RungNode { z: zk, w: wk, weight: wz * ww });
        }
    }
    let zb = sinh_mapped(p.nzb, p.z_lo, p.z_hi, p.z_center, p.z_beta);
    let log_eps = (1.0 / p.eps).ln();
    let rx = directional_rate(a, 0).min(directional_rate(a, 1));
    let rz = directional_rate(a, 2);
    let x_lo_req = -(2.0 * log_eps).ln();
    let radii = vec![
        AxisRadius {
            axis: "x-lower".into(),
            actual: p.x_lo,
            required: x_lo_req,
            tail_estimate: (-0.5 * (-p.x_lo).exp()).exp(),
        },
        AxisRadius {
            axis: "x-upper".into(),
            actual: p.x_hi,
            required: p.x_center + log_eps / rx,
            tail_estimate: (-rx * (p.x_hi - p.x_center)).exp(),
        },
        AxisRadius {
            axis: "z-lower".into(),
            actual: p.z_lo,
            required: p.z_center - log_eps / a,
            tail_estimate: (-a * (p.z_center - p.z_lo)).exp(),
        },
        AxisRadius {
            axis: "z-upper".into(),
            actual: p.z_hi,
            required: p.z_center + log_eps / rz,
            tail_estimate: (-rz * (p.z_hi - p.z_center)).exp(),
        },
        AxisRadius {
            axis: "w".into(),
            actual: p.w_cut,
            required: log_eps,
            tail_estimate: (-p.w_cut).exp(),
        },
    ];
    for r in &radii {
        if r.tail_estimate > p.eps {
            return Err(Error::Domain(format!(
                "{} edge {} too small for tail mass {:e}; need {}",
                r.axis, r.actual, p.eps, r.required
            )));
        }
    }
    Ok(TransferGrid { params: p, x, rung, zb, radii, conservative_radius: log_eps / c7(a) })
}

impl TransferGrid {
    pub fn nx(&self) -> usize {
        self.x.len()
    }
    /// Points per (σ, T) block: nx².
    pub fn block(&self) -> usize {
        self.nx() * self.nx()
    }
    pub fn state_count(&self) -> usize {
        8 * self.block()
    }
    pub fn index(&self, st: GridState) -> usize {
        let n = self.nx();
        ((st.s * 4 + st.t.index()) * n + st.i1) * n + st.i2
    }
    pub fn state(&self, k: usize) -> GridState {
        let n = self.nx();
        let (i2, r) = (k % n, k / n);
        let (i1, r) = (r % n, r / n);
        GridState { s: r / 4, t: TreeState::from_index(r % 4), i1, i2 }
    }
    pub fn cycle(&self, k: usize) -> Cycle<f64> {
        let st = self.state(k);
        Cycle::new(self.x.nodes[st.i1], self.x.nodes[st.i2], st.sigma(), st.t)
    }
    /// Cycle-space quadrature weight μ(ω).
    pub fn mu(&self, k: usize) -> f64 {
        let st = self.state(k);
        self.x.weights[st.i1] * self.x.weights[st.i2]
    }
    pub fn mu_vec(&self) -> Vec<f64> {
        (0..self.state_count()).map(|k| self.mu(k)).collect()
    }
    /// Index of ω↔: T with A and B exchanged.
    pub fn reflect(&self, k: usize) -> usize {
        let st = self.state(k);
        self.index(GridState { t: st.t.reflect(), ..st })
    }
    /// The W nodes at each Z are symmetric about 0.
    pub fn is_symmetric(&self) -> bool {
        let nw = self.params.nw;
        self.rung.chunks(nw).all(|c| (0..nw).all(|k| c[k].w == -c[nw - 1 - k].w && c[k].weight == c[nw - 1 - k].weight))
    }
    pub fn rung_volume(&self) -> f64 {
        self.rung.iter().map(|q| q.weight).sum()
    }
    pub fn rung_box_volume(&self) -> f64 {
        let z = sinh_mapped(self.params.nz, self.params.z_lo, self.params.z_hi, self.params.z_center, self.params.z_beta);
        z.nodes.iter().zip(&z.weights).map(|(&zk, &w)| w * 2.0 * w_half_width(zk, &self.params)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let g = build_grid(GridParams::default(), 1.0).unwrap();
        assert_eq!(g.state_count(), 8 * 400);
        assert!(g.is_symmetric());
        assert!(g.x.weights.iter().all(|&w| w > 0.0));
        assert!((g.x.weight_sum() - 50.0).abs() < 1e-6);
        assert!((g.rung_volume() - g.rung_box_volume()).abs() < 1e-9 * g.rung_volume());
        assert!((g.conservative_radius - 32.0 * 1e8f64.ln()).abs() < 1e-9);
        for r in &g.radii {
            assert!(r.tail_estimate <= 1e-8, "{r:?}");
        }
        for k in [0, 17, 401, 3199] {
            assert_eq!(g.index(g.state(k)), k);
            assert_eq!(g.reflect(g.reflect(k)), k);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(build_grid(GridParams { nx: 7, ..Default::default() }, 1.0).is_err());
        let e = build_grid(GridParams { x_hi: 6.0, ..Default::default() }, 1.0).unwrap_err();
        assert!(e.to_string().contains("need"));
        assert!(build_grid(GridParams { w_shift: 0.3, ..Default::default() }, 1.0).unwrap().is_symmetric() == false);
    }
}
