//! Block-factored transfer kernels k_η and k_η^Γ on a grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::TransferGrid;
use crate::error::{Error, Result};
use crate::ladder::TreeState;
use crate::scalar::lse3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelTag {
    /// Υ = 1.
    Plain,
    /// Υ = Γ.
    Gamma,
}

/// Which rung factor the tree terms contribute: none, e^{−(Z+W/2)} (T′ = B)
/// or e^{−(Z−W/2)} (T = A).
fn kappa(t: TreeState, t2: TreeState) -> Option<usize> {
    match (t, t2) {
        (TreeState::A, TreeState::B) => None,
        (TreeState::A, _) => Some(2),
        (_, TreeState::B) => Some(1),
        _ => Some(0),
    }
}

/// Rows of one (σ, T) block are cycle nodes (i1, i2) of ω, columns (j1, j2) of ω′.
pub struct TransferOperator {
    pub a: f64,
    pub eta: f64,
    pub tag: KernelTag,
    nb: usize,
    /// [ρ = +1, ρ = −1] × [κ = 0, 1, 2], each nb × nb row-major.
    blocks: Vec<Vec<f64>>,
    /// Same with an extra factor W (Γ tag only).
    wblocks: Vec<Vec<f64>>,
    /// e^{−h} prefactors of ω (left) and ω′ (right) per tree state.
    pl: [Vec<f64>; 4],
    pr: [Vec<f64>; 4],
    u: Vec<f64>,
    mu: Vec<f64>,
}

fn block_id(rho: usize, kap: usize) -> usize {
    3 * rho + kap
}

/// Aᵀ diag(c) A reindexed from ((i1, j1), (i2, j2)) to ((i1, i2), (j1, j2)).
fn gram(a_mat: &[f64], c: &[f64], q: usize, n: usize) -> Vec<f64> {
    let nb = n * n;
    let mut ca = a_mat.to_vec();
    for (row, &ck) in ca.chunks_mut(nb).zip(c) {
        row.iter_mut().for_each(|v| *v *= ck);
    }
    let mut m = vec![0.0; nb * nb];
    // SAFETY: dimensions and strides describe the three buffers exactly.
    unsafe {
        matrixmultiply::dgemm(
            nb, q, nb, 1.0,
            a_mat.as_ptr(), 1, nb as isize,
            ca.as_ptr(), nb as isize, 1,
            0.0,
            m.as_mut_ptr(), nb as isize, 1,
        );
    }
    let mut out = vec![0.0; nb * nb];
    for i1 in 0..n {
        for j1 in 0..n {
            for i2 in 0..n {
                let src = &m[(i1 * n + j1) * nb + i2 * n..(i1 * n + j1) * nb + i2 * n + n];
                for (j2, &v) in src.iter().enumerate() {
                    out[(i1 * n + i2) * nb + j1 * n + j2] = v;
                }
            }
        }
    }
    out
}

fn vecmat_acc(x: &[f64], m: &[f64], out: &mut [f64]) {
    let d = out.len();
    for (i, &xi) in x.iter().enumerate() {
        if xi != 0.0 {
            let row = &m[i * d..(i + 1) * d];
            out.iter_mut().zip(row).for_each(|(o, &r)| *o += xi * r);
        }
    }
}

fn matvec_acc(m: &[f64], x: &[f64], out: &mut [f64]) {
    let d = x.len();
    for (o, row) in out.iter_mut().zip(m.chunks(d)) {
        *o += row.iter().zip(x).map(|(r, v)| r * v).sum::<f64>();
    }
}

impl TransferOperator {
    pub fn assemble(grid: &TransferGrid, a: f64, eta: f64, tag: KernelTag) -> Result<Self> {
        if !(-0.25..=0.25).contains(&eta) {
            return Err(Error::Domain(format!("eta = {eta} outside [-1/4, 1/4]")));
        }
        let n = grid.nx();
        let nb = n * n;
        let q = grid.rung.len();
        let x = &grid.x.nodes;
        let k = 0.5 * (3.0 * a + 1.0);
        let mut amat = vec![0.0; q * nb];
        amat.par_chunks_mut(nb).zip(&grid.rung).for_each(|(row, node)| {
            for i in 0..n {
                for j in 0..n {
                    row[i * n + j] = (-k * lse3(x[i] + 0.5 * node.w, x[j] - 0.5 * node.w, node.z)).exp();
                }
            }
        });
        let coeff = |rho: f64, kap: usize, with_w: bool| -> Vec<f64> {
            grid.rung
                .iter()
                .map(|r| {
                    let d = (0.25 * r.w).exp() - rho * (-0.25 * r.w).exp();
                    let s = -0.5 * d * d * (-r.z).exp();
                    let kf = match kap {
                        0 => 0.0,
                        1 => -(r.z + 0.5 * r.w),
                        _ => -(r.z - 0.5 * r.w),
                    };
                    let c = r.weight * (s + kf + eta * r.w + (a + 0.5) * r.z).exp();
                    if with_w {
                        c * r.w
                    } else {
                        c
                    }
                })
                .collect()
        };
        let specs: Vec<(usize, usize)> = (0..2).flat_map(|rho| (0..3).map(move |kap| (rho, kap))).collect();
        let build = |with_w: bool| -> Vec<Vec<f64>> {
            specs
                .par_iter()
                .map(|&(rho, kap)| gram(&amat, &coeff(if rho == 0 { 1.0 } else { -1.0 }, kap, with_w), q, n))
                .collect()
        };
        let blocks = build(false);
        let wblocks = if tag == KernelTag::Gamma { build(true) } else { Vec::new() };
        let mut u = vec![0.0; nb];
        let mut pl: [Vec<f64>; 4] = Default::default();
        let mut pr: [Vec<f64>; 4] = Default::default();
        for t in TreeState::ALL {
            let (ia, ib) = ((t == TreeState::A) as u8 as f64, (t == TreeState::B) as u8 as f64);
            let (ic, id) = ((t == TreeState::C) as u8 as f64, (t == TreeState::D) as u8 as f64);
            let mut l = vec![0.0; nb];
            let mut r = vec![0.0; nb];
            for i1 in 0..n {
                for i2 in 0..n {
                    let (xl, xh) = (x[i1], x[i2]);
                    let uu = 0.5 * (xl + xh);
                    u[i1 * n + i2] = uu;
                    let base = -(a + 0.5) * uu + 0.25 * ((-xl).exp() + (-xh).exp()) + 0.5 * (ic * xl + id * xh);
                    l[i1 * n + i2] = (-(base - 0.5 * (ia - ib) * uu - eta * uu)).exp();
                    r[i1 * n + i2] = (-(base + 0.5 * (ia - ib) * uu + eta * uu)).exp();
                }
            }
            pl[t.index()] = l;
            pr[t.index()] = r;
        }
        let mu = (0..nb).map(|k| grid.x.weights[k / n] * grid.x.weights[k % n]).collect();
        Ok(TransferOperator { a, eta, tag, nb, blocks, wblocks, pl, pr, u, mu })
    }

    pub fn dim(&self) -> usize {
        8 * self.nb
    }

    fn slot(&self, s: usize, t: usize) -> std::ops::Range<usize> {
        (s * 4 + t) * self.nb..(s * 4 + t + 1) * self.nb
    }

    /// k(ω, ω′) at grid states.
    pub fn entry(&self, r: usize, c: usize) -> f64 {
        let nb = self.nb;
        let (sr, tr, ir) = (r / nb / 4, (r / nb) % 4, r % nb);
        let (sc, tc, ic) = (c / nb / 4, (c / nb) % 4, c % nb);
        let Some(kap) = kappa(TreeState::from_index(tr), TreeState::from_index(tc)) else {
            return 0.0;
        };
        let b = block_id((sr != sc) as usize, kap);
        let core = match self.tag {
            KernelTag::Plain => self.blocks[b][ir * nb + ic],
            KernelTag::Gamma => {
                self.wblocks[b][ir * nb + ic] + (self.u[ir] - self.u[ic]) * self.blocks[b][ir * nb + ic]
            }
        };
        self.pl[tr][ir] * core * self.pr[tc][ic]
    }

    /// (fK)(ω′) = Σ_ω μ(ω) f(ω) k(ω, ω′).
    pub fn apply_left(&self, f: &[f64]) -> Vec<f64> {
        let nb = self.nb;
        let mut h = vec![0.0; 8 * nb];
        for s in 0..2 {
            for t in 0..4 {
                let r = self.slot(s, t);
                for ((o, &fv), (&p, &m)) in h[r.clone()].iter_mut().zip(&f[r]).zip(self.pl[t].iter().zip(&self.mu)) {
                    *o = fv * p * m;
                }
            }
        }
        // h0: sources with T ≠ A, ha: sources with T = A
        let split = |h: &[f64], s: usize| -> (Vec<f64>, Vec<f64>) {
            let mut h0 = vec![0.0; nb];
            for t in 1..4 {
                h0.iter_mut().zip(&h[self.slot(s, t)]).for_each(|(a, b)| *a += b);
            }
            (h0, h[self.slot(s, 0)].to_vec())
        };
        let parts: Vec<(Vec<f64>, Vec<f64>)> = (0..2).map(|s| split(&h, s)).collect();
        let combine = |blocks: &[Vec<f64>], parts: &[(Vec<f64>, Vec<f64>)], s2: usize| -> (Vec<f64>, Vec<f64>) {
            let mut not_b = vec![0.0; nb];
            let mut to_b = vec![0.0; nb];
            for (s, (h0, ha)) in parts.iter().enumerate() {
                let rho = (s != s2) as usize;
                vecmat_acc(h0, &blocks[block_id(rho, 0)], &mut not_b);
                vecmat_acc(ha, &blocks[block_id(rho, 2)], &mut not_b);
                vecmat_acc(h0, &blocks[block_id(rho, 1)], &mut to_b);
            }
            (not_b, to_b)
        };
        let mut g = vec![0.0; 8 * nb];
        let outs: Vec<(Vec<f64>, Vec<f64>)> = (0..2)
            .into_par_iter()
            .map(|s2| match self.tag {
                KernelTag::Plain => combine(&self.blocks, &parts, s2),
                KernelTag::Gamma => {
                    let (mut nb_, mut b_) = combine(&self.wblocks, &parts, s2);
                    let hu: Vec<(Vec<f64>, Vec<f64>)> = parts
                        .iter()
                        .map(|(h0, ha)| {
                            (h0.iter().zip(&self.u).map(|(a, b)| a * b).collect(), ha.iter().zip(&self.u).map(|(a, b)| a * b).collect())
                        })
                        .collect();
                    let (p_nb, p_b) = combine(&self.blocks, &hu, s2);
                    let (q_nb, q_b) = combine(&self.blocks, &parts, s2);
                    for k in 0..nb {
                        nb_[k] += p_nb[k] - self.u[k] * q_nb[k];
                        b_[k] += p_b[k] - self.u[k] * q_b[k];
                    }
                    (nb_, b_)
                }
            })
            .collect();
        for (s2, (not_b, to_b)) in outs.into_iter().enumerate() {
            for t2 in 0..4 {
                let src = if t2 == 1 { &to_b } else { &not_b };
                let r = self.slot(s2, t2);
                g[r].iter_mut().zip(src).zip(&self.pr[t2]).for_each(|((o, &v), &p)| *o = v * p);
            }
        }
        g
    }

    /// (Kg)(ω) = Σ_ω′ k(ω, ω′) μ(ω′) g(ω′).
    pub fn apply_right(&self, g: &[f64]) -> Vec<f64> {
        let nb = self.nb;
        let mut p = vec![0.0; 8 * nb];
        for s in 0..2 {
            for t in 0..4 {
                let r = self.slot(s, t);
                for ((o, &gv), (&pr, &m)) in p[r.clone()].iter_mut().zip(&g[r]).zip(self.pr[t].iter().zip(&self.mu)) {
                    *o = gv * pr * m;
                }
            }
        }
        // targets with T′ ≠ B and T′ = B
        let parts: Vec<(Vec<f64>, Vec<f64>)> = (0..2)
            .map(|s| {
                let mut pn = vec![0.0; nb];
                for t in [0, 2, 3] {
                    pn.iter_mut().zip(&p[self.slot(s, t)]).for_each(|(a, b)| *a += b);
                }
                (pn, p[self.slot(s, 1)].to_vec())
            })
            .collect();
        // returns (rows for T ≠ A, rows for T = A)
        let combine = |blocks: &[Vec<f64>], parts: &[(Vec<f64>, Vec<f64>)], s: usize| -> (Vec<f64>, Vec<f64>) {
            let mut not_a = vec![0.0; nb];
            let mut at_a = vec![0.0; nb];
            for (s2, (pn, pb)) in parts.iter().enumerate() {
                let rho = (s != s2) as usize;
                matvec_acc(&blocks[block_id(rho, 0)], pn, &mut not_a);
                matvec_acc(&blocks[block_id(rho, 1)], pb, &mut not_a);
                matvec_acc(&blocks[block_id(rho, 2)], pn, &mut at_a);
            }
            (not_a, at_a)
        };
        let outs: Vec<(Vec<f64>, Vec<f64>)> = (0..2)
            .into_par_iter()
            .map(|s| match self.tag {
                KernelTag::Plain => combine(&self.blocks, &parts, s),
                KernelTag::Gamma => {
                    let (mut na, mut aa) = combine(&self.wblocks, &parts, s);
                    let pu: Vec<(Vec<f64>, Vec<f64>)> = parts
                        .iter()
                        .map(|(pn, pb)| {
                            (pn.iter().zip(&self.u).map(|(a, b)| a * b).collect(), pb.iter().zip(&self.u).map(|(a, b)| a * b).collect())
                        })
                        .collect();
                    let (q_na, q_aa) = combine(&self.blocks, &parts, s);
                    let (r_na, r_aa) = combine(&self.blocks, &pu, s);
                    for k in 0..nb {
                        na[k] += self.u[k] * q_na[k] - r_na[k];
                        aa[k] += self.u[k] * q_aa[k] - r_aa[k];
                    }
                    (na, aa)
                }
            })
            .collect();
        let mut out = vec![0.0; 8 * nb];
        for (s, (not_a, at_a)) in outs.into_iter().enumerate() {
            for t in 0..4 {
                let src = if t == 0 { &at_a } else { &not_a };
                let r = self.slot(s, t);
                out[r].iter_mut().zip(src).zip(&self.pl[t]).for_each(|((o, &v), &pl)| *o = v * pl);
            }
        }
        out
    }

    /// The dense kernel k(ω, ω′), row-major.
    pub fn to_dense(&self) -> Vec<f64> {
        let d = self.dim();
        let mut m = vec![0.0; d * d];
        m.par_chunks_mut(d).enumerate().for_each(|(r, row)| {
            for (c, v) in row.iter_mut().enumerate() {
                *v = self.entry(r, c);
            }
        });
        m
    }

    /// (Σ μ(ω) μ(ω′) k(ω, ω′)²)^{1/2}.
    pub fn hs_norm(&self) -> f64 {
        let d = self.dim();
        let nb = self.nb;
        (0..d)
            .into_par_iter()
            .map(|r| {
                let mr = self.mu[r % nb];
                (0..d).map(|c| {
                    let e = self.entry(r, c);
                    mr * self.mu[c % nb] * e * e
                }).sum::<f64>()
            })
            .sum::<f64>()
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::super::grid::{build_grid, GridParams, TransferGrid};
    use super::*;
    use crate::environment::{h_middle, HamiltonianParams, Rung};

    pub(crate) fn small_grid() -> TransferGrid {
        let p = GridParams { nx: 8, nz: 12, nw: 12, nzb: 16, ..Default::default() };
        build_grid(p, 1.0).unwrap()
    }

    fn direct(g: &TransferGrid, r: usize, c: usize, eta: f64, gamma: bool) -> f64 {
        let (w, w2) = (g.cycle(r), g.cycle(c));
        let p = HamiltonianParams { a: 1.0, eta };
        g.rung
            .iter()
            .map(|q| {
                let gam = q.w - w2.u() + w.u();
                let e = h_middle(&w, &Rung { z: q.z, gamma: gam }, &w2, &p).to_f64();
                q.weight * (-e).exp() * if gamma { gam } else { 1.0 }
            })
            .sum()
    }

    #[test]
    fn factored_entries_match_direct_quadrature() {
        let g = small_grid();
        for eta in [0.0, 0.25, -0.25] {
            let k = TransferOperator::assemble(&g, 1.0, eta, KernelTag::Gamma).unwrap();
            let k1 = TransferOperator::assemble(&g, 1.0, eta, KernelTag::Plain).unwrap();
            for (r, c) in [(0, 0), (5, 300), (70, 129), (200, 400), (511, 3), (130, 64 + 7)] {
                let d = direct(&g, r, c, eta, false);
                assert!((k1.entry(r, c) - d).abs() <= 1e-12 * d.abs().max(1e-300), "{r},{c}");
                let dg = direct(&g, r, c, eta, true);
                let scale = direct(&g, r, c, eta, false) * 30.0;
                assert!((k.entry(r, c) - dg).abs() <= 1e-11 * scale.max(1e-300), "{r},{c}: {} vs {dg}", k.entry(r, c));
            }
        }
    }

    #[test]
    fn zero_pattern_and_reflection() {
        let g = small_grid();
        let kp = TransferOperator::assemble(&g, 1.0, 0.25, KernelTag::Plain).unwrap();
        let km = TransferOperator::assemble(&g, 1.0, -0.25, KernelTag::Plain).unwrap();
        let gp = TransferOperator::assemble(&g, 1.0, 0.25, KernelTag::Gamma).unwrap();
        let gm = TransferOperator::assemble(&g, 1.0, -0.25, KernelTag::Gamma).unwrap();
        let d = kp.dim();
        let dense = kp.to_dense();
        for r in 0..d {
            for c in 0..d {
                let e = dense[r * d + c];
                let ab = g.state(r).t == TreeState::A && g.state(c).t == TreeState::B;
                assert_eq!(e == 0.0, ab, "{r},{c}");
                assert!(e >= 0.0);
                let m = km.entry(g.reflect(c), g.reflect(r));
                assert!((e - m).abs() <= 1e-12 * e.abs(), "{e} vs {m}");
                let a = gp.entry(r, c);
                let b = -gm.entry(g.reflect(c), g.reflect(r));
                assert!((a - b).abs() <= 1e-11 * (e * 30.0).max(1e-300), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn apply_matches_dense() {
        let g = small_grid();
        let mu = g.mu_vec();
        for tag in [KernelTag::Plain, KernelTag::Gamma] {
            let k = TransferOperator::assemble(&g, 1.0, 0.25, tag).unwrap();
            let d = k.dim();
            let dense = k.to_dense();
            let f: Vec<f64> = (0..d).map(|i| ((i * 7919) % 13) as f64 / 13.0 - 0.3).collect();
            let left = k.apply_left(&f);
            let right = k.apply_right(&f);
            for j in 0..d {
                let want: f64 = (0..d).map(|i| mu[i] * f[i] * dense[i * d + j]).sum();
                let scale: f64 = (0..d).map(|i| (mu[i] * f[i] * dense[i * d + j]).abs()).sum::<f64>() + 1e-300;
                assert!((left[j] - want).abs() <= 1e-12 * scale);
                let want: f64 = (0..d).map(|i| dense[j * d + i] * mu[i] * f[i]).sum();
                let scale: f64 = (0..d).map(|i| (dense[j * d + i] * mu[i] * f[i]).abs()).sum::<f64>() + 1e-300;
                assert!((right[j] - want).abs() <= 1e-12 * scale);
            }
        }
    }
}
