//! Boundary vectors and finite chains ⟨g_left K … K g_right⟩.

use serde::{Deserialize, Serialize};

use super::eigen::{dot, leading_triple, norm, operator_norm, EigenTriple};
use super::grid::{build_grid, GridParams, TransferGrid};
use super::kernel::{KernelTag, TransferOperator};
use crate::environment::{h_left, h_right};
use crate::error::{Error, Result};
use crate::rng::RngSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Upsilon {
    One,
    Gamma,
}

/// g(ω) = ∫ e^{−H_side(Z, ω)} dZ on the grid's boundary Z rule.
pub fn boundary_vector(grid: &TransferGrid, a: f64, side: Side) -> Vec<f64> {
    (0..grid.state_count())
        .map(|k| {
            let c = grid.cycle(k);
            grid.zb.integrate(|z| {
                let h = match side {
                    Side::Left => h_left(z, &c, a),
                    Side::Right => h_right(&c, z, a),
                };
                (-h).exp()
            })
        })
        .collect()
}

/// Operators for one (grid, a): K₀, K_{1/4}, their Γ versions, boundary vectors.
pub struct TransferSystem {
    pub grid: TransferGrid,
    pub a: f64,
    pub mu: Vec<f64>,
    pub k0: TransferOperator,
    pub kq: TransferOperator,
    k0g: Option<TransferOperator>,
    kqg: Option<TransferOperator>,
    pub g_left: Vec<f64>,
    pub g_right: Vec<f64>,
}

/// A number m·e^{l} kept in split form.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Scaled {
    m: f64,
    l: f64,
}

impl TransferSystem {
    pub fn new(params: GridParams, a: f64, with_gamma: bool) -> Result<Self> {
        let grid = build_grid(params, a)?;
        let mu = grid.mu_vec();
        let k0 = TransferOperator::assemble(&grid, a, 0.0, KernelTag::Plain)?;
        let kq = TransferOperator::assemble(&grid, a, 0.25, KernelTag::Plain)?;
        let (k0g, kqg) = if with_gamma {
            (
                Some(TransferOperator::assemble(&grid, a, 0.0, KernelTag::Gamma)?),
                Some(TransferOperator::assemble(&grid, a, 0.25, KernelTag::Gamma)?),
            )
        } else {
            (None, None)
        };
        let g_left = boundary_vector(&grid, a, Side::Left);
        let g_right = boundary_vector(&grid, a, Side::Right);
        Ok(TransferSystem { grid, a, mu, k0, kq, k0g, kqg, g_left, g_right })
    }

    pub fn operator(&self, eta_quarter: bool) -> &TransferOperator {
        if eta_quarter {
            &self.kq
        } else {
            &self.k0
        }
    }

    pub fn gamma_operator(&self, eta_quarter: bool) -> Result<&TransferOperator> {
        let k = if eta_quarter { &self.kqg } else { &self.k0g };
        k.as_ref().ok_or_else(|| Error::Domain("system built without Γ kernels".into()))
    }

    fn chain(&self, ops: &[&TransferOperator]) -> Scaled {
        let mut f = self.g_left.clone();
        let mut l = 0.0;
        for op in ops {
            f = op.apply_left(&f);
            let s = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if s > 0.0 {
                f.iter_mut().for_each(|x| *x /= s);
                l += s.ln();
            }
        }
        Scaled { m: dot(&self.mu, &f, &self.g_right), l }
    }

    /// Middle piece i (1-based) of an n-cycle chain deformed up to j.
    fn piece(&self, i: usize, j: usize, upsilon_at: Option<usize>) -> Result<&TransferOperator> {
        let quarter = i > j;
        if upsilon_at == Some(i) {
            self.gamma_operator(quarter)
        } else {
            Ok(self.operator(quarter))
        }
    }

    fn ops(&self, n: usize, j: usize, upsilon_at: Option<usize>) -> Result<Vec<&TransferOperator>> {
        (1..n).map(|i| self.piece(i, j, upsilon_at)).collect()
    }

    /// ⟨g_left K … K g_right⟩ in log form, with the first j pieces at η = 0.
    pub fn log_partition(&self, n: usize, j: usize) -> Result<f64> {
        let s = self.chain(&self.ops(n, j, None)?);
        if !(s.m > 0.0) {
            return Err(Error::Numerical("vanishing chain denominator".into()));
        }
        Ok(s.m.ln() + s.l)
    }

    /// E_{ν_{n,j}}[Υᵢ].
    pub fn chain_expectation(&self, n: usize, j: usize, i: usize, upsilon: Upsilon) -> Result<f64> {
        if !(1 <= i && i < n && j < n) {
            return Err(Error::Domain(format!("need 1 <= i < n and j < n, got n={n} j={j} i={i}")));
        }
        let den = self.chain(&self.ops(n, j, None)?);
        if !(den.m > 0.0) {
            return Err(Error::Numerical("vanishing chain denominator".into()));
        }
        let num = match upsilon {
            Upsilon::One => self.chain(&self.ops(n, j, None)?),
            Upsilon::Gamma => self.chain(&self.ops(n, j, Some(i))?),
        };
        Ok(num.m / den.m * (num.l - den.l).exp())
    }

    /// Z_{n,j} = E[e^{−Σⱼ}].
    pub fn sigma_moment(&self, n: usize, j: usize) -> Result<f64> {
        if n == 0 || j >= n {
            return Err(Error::Domain(format!("need 0 <= j < n, got n={n} j={j}")));
        }
        let num = self.chain(&self.ops(n, j, None)?);
        let den = self.chain(&self.ops(n, 0, None)?);
        if !(den.m > 0.0) {
            return Err(Error::Numerical("vanishing chain denominator".into()));
        }
        Ok(num.m / den.m * (num.l - den.l).exp())
    }

    pub fn triple(&self, eta_quarter: bool) -> Result<EigenTriple> {
        leading_triple(self.operator(eta_quarter), &self.mu, RngSpec::new(0x7a, eta_quarter as u64))
    }

    /// |⟨v K^Γ v*⟩| / (‖v‖ ‖K^Γ‖ ‖v*‖) for the η = 0 (or 1/4) triple.
    pub fn symmetry_defect(&self, t: &EigenTriple, eta_quarter: bool) -> Result<f64> {
        let kg = self.gamma_operator(eta_quarter)?;
        let num = dot(&self.mu, &kg.apply_left(&t.v), &t.v_star);
        let k = operator_norm(kg, &self.mu, 30);
        Ok(num.abs() / (norm(&self.mu, &t.v) * k * norm(&self.mu, &t.v_star)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> TransferSystem {
        TransferSystem::new(GridParams { nx: 8, nz: 12, nw: 12, nzb: 16, ..Default::default() }, 1.0, true).unwrap()
    }

    #[test]
    fn trivial_chain_values() {
        let s = small();
        assert_eq!(s.sigma_moment(6, 0).unwrap(), 1.0);
        assert_eq!(s.chain_expectation(6, 3, 2, Upsilon::One).unwrap(), 1.0);
        assert!(s.chain_expectation(6, 3, 6, Upsilon::Gamma).is_err());
        assert!(s.sigma_moment(6, 6).is_err());
        let z: Vec<f64> = (0..6).map(|j| s.sigma_moment(6, j).unwrap()).collect();
        assert!(z.windows(2).all(|w| w[1] < w[0]) && z[5] > 0.0);
        assert!(s.g_left.iter().chain(&s.g_right).all(|&g| g > 0.0));
    }

    #[test]
    fn symmetry_zero_only_at_eta_zero() {
        let s = small();
        let t0 = s.triple(false).unwrap();
        assert!(s.symmetry_defect(&t0, false).unwrap() < 1e-8);
        let tq = s.triple(true).unwrap();
        assert!(s.symmetry_defect(&tq, true).unwrap() > 1e-4);
    }

    #[test]
    fn short_chain_matches_brute_force() {
        // n = 2: Σ μμ g_left(ω) k(ω, ω′) g_right(ω′)
        let s = small();
        let d = s.k0.dim();
        let dense = s.kq.to_dense();
        let mut z = 0.0;
        for r in 0..d {
            for c in 0..d {
                z += s.mu[r] * s.mu[c] * s.g_left[r] * dense[r * d + c] * s.g_right[c];
            }
        }
        assert!((s.log_partition(2, 0).unwrap() - z.ln()).abs() < 1e-12);
    }
}
