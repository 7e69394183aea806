//! Acceptance run: one PASS/FAIL line per criterion. Criteria known to be out of
//! reach at this scale are reported but not asserted.

use std::time::Instant;

use errw::certificates::verify_lemma31;
use errw::experiments::{self, BoundSuiteConfig, ProfileConfig, QuadratureConfig, ReturnsConfig};
use errw::gibbs_mcmc::McmcConfig;
use errw::ladder::EdgeWeights;
use errw::network::escape_probability;
use errw::transfer::{GridParams, TransferSystem};
use errw::RngSpec;

struct Line {
    id: usize,
    passed: bool,
    asserted: bool,
    detail: String,
}

fn report(id: usize, start: Instant, budget_s: f64, ok: bool, asserted: bool, detail: String) -> Line {
    let s = start.elapsed().as_secs_f64();
    let passed = ok && s < budget_s;
    println!("criterion {id:>2} {} {detail} [{s:.1} s of {budget_s} s]", if passed { "PASS" } else { "FAIL" });
    Line { id, passed, asserted, detail }
}

fn main() {
    let mut lines = Vec::new();

    let t = Instant::now();
    let rows = experiments::tree_bijection_check(8).unwrap();
    let known = [4u128, 15, 56, 209];
    let ok = rows.iter().all(|r| r.round_trip && r.codes as i128 == r.matrix_tree) && rows.iter().zip(known).all(|(r, k)| r.codes == k);
    let counts: Vec<u128> = rows.iter().map(|r| r.codes).collect();
    lines.push(report(1, t, 10.0, ok, true, format!("tree bijection n<=8: counts {counts:?}, round trips exact")));

    let t = Instant::now();
    let g = experiments::gibbs_identity_check(&[1, 2, 5], &[0.8, 1.0, 2.0], 10_000, 4.0, RngSpec::new(101, 0)).unwrap();
    lines.push(report(2, t, 30.0, g.max_residual < 1e-9, true, format!("gibbs identity: max residual {:.2e} over {} configs (< 1e-9)", g.max_residual, g.samples)));

    let t = Instant::now();
    let s = experiments::scaling_check(10_000, RngSpec::new(102, 0)).unwrap();
    lines.push(report(3, t, 5.0, s.max_residual < 1e-12, true, format!("scaling law: max relative residual {:.2e} (< 1e-12)", s.max_residual)));

    let t = Instant::now();
    let q = experiments::rwre_quadrature_check(QuadratureConfig::default()).unwrap();
    let worst = q.iter().map(|c| c.error).fold(0.0, f64::max);
    lines.push(report(4, t, 300.0, worst < 1e-3 && q.len() == 14, true, format!("rwre representation: {} paths, max error {worst:.2e} (< 1e-3)", q.len())));

    let t = Instant::now();
    let l = verify_lemma31();
    let ok = l.passed && l.pairs.len() == 15 && l.pairs.iter().all(|p| p.nonnegative && p.sums_exact && p.residuals.iter().all(|r| *r.numer() == 0));
    lines.push(report(5, t, 1.0, ok, true, format!("lemma 3.1 certificate: {} pairs, {} failures", l.pairs.len(), l.failures.len())));

    let t = Instant::now();
    let cases = experiments::bound_suite(&BoundSuiteConfig::default()).unwrap();
    let bad: Vec<String> = cases.iter().filter(|c| !c.passed() || c.seconds >= 60.0).map(|c| format!("{}:a={}:eta={}", c.piece, c.a, c.eta)).collect();
    let min = cases.iter().map(|c| c.random.min_margin.min(c.grid.min_margin)).fold(f64::INFINITY, f64::min);
    let slowest = cases.iter().map(|c| c.seconds).fold(0.0, f64::max);
    lines.push(report(6, t, 60.0 * cases.len() as f64, bad.is_empty(), true, format!("bound certificates: {} cases, min margin {min:.3e}, slowest {slowest:.1} s, failing {bad:?}", cases.len())));

    let t = Instant::now();
    let sys = TransferSystem::new(GridParams::default(), 1.0, true).unwrap();
    let fine = TransferSystem::new(GridParams::default().doubled(), 1.0, false).unwrap();
    let mut ok = sys.grid.is_symmetric();
    let mut parts = Vec::new();
    for q in [false, true] {
        let tr = sys.triple(q).unwrap();
        let rel = (fine.triple(q).unwrap().lambda - tr.lambda).abs() / tr.lambda;
        ok &= tr.lambda > 0.0 && tr.residual.max(tr.residual_star) < 1e-10 && tr.gap < 1.0 && rel < 1e-4;
        let mut s = format!("eta={} lambda={:.6} gap={:.4} res={:.1e} doubling={rel:.1e}", if q { 0.25 } else { 0.0 }, tr.lambda, tr.gap, tr.residual.max(tr.residual_star));
        if !q {
            let d = sys.symmetry_defect(&tr, q).unwrap();
            ok &= d < 1e-8;
            s += &format!(" defect={d:.1e}");
        }
        parts.push(s);
    }
    drop(fine);
    lines.push(report(7, t, 600.0, ok, true, format!("transfer spectrum: {}", parts.join("; "))));

    let t = Instant::now();
    let sw = experiments::sigma_moment_sweep(&sys, 30, (5, 25)).unwrap();
    let ok = sw.z0_is_one && sw.fit.slope < 0.0 && sw.fit.r2 > 0.99;
    lines.push(report(8, t, 900.0, ok, true, format!("sigma moments n=30: slope {:.4}, r2 {:.5}, Z_(n,0) = 1 exactly: {}", sw.fit.slope, sw.fit.r2, sw.z0_is_one)));

    let t = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, (n, j, i)) in [(8, 6, 3), (8, 0, 4), (12, 10, 5)].into_iter().enumerate() {
        let mc = McmcConfig { n, deform_j: j, burn_in: 5000, thin: 5, samples: 200_000, rng: RngSpec::new(109, k as u64), ..McmcConfig::default() };
        let c = experiments::gamma_cross_check(&sys, mc, i).unwrap();
        ok &= c.z <= 3.0;
        parts.push(format!("({n},{j},{i}): {:.4} vs {:.4}±{:.4} z={:.2}", c.transfer, c.mcmc.mean, c.mcmc.se, c.z));
    }
    lines.push(report(9, t, 1200.0, ok, true, format!("operator vs mcmc: {}", parts.join("; "))));
    drop(sys);

    let t = Instant::now();
    let base = McmcConfig { burn_in: 5000, thin: 2, samples: 200_000, rng: RngSpec::new(110, 0), ..McmcConfig::default() };
    let ts = experiments::tail_suite(&[8, 16], base).unwrap();
    let spreads: Vec<String> = ts.spreads.iter().map(|(f, s)| format!("{f} {s:.3}")).collect();
    lines.push(report(10, t, 1200.0, ts.all_decay && ts.stable(0.25), true, format!("exponential tails: all slopes negative {}, spreads {} (<= 0.25)", ts.all_decay, spreads.join(", "))));

    let t = Instant::now();
    let p = experiments::profile_experiment(ProfileConfig::default()).unwrap();
    let affine = p.affine_decay(0.9);
    let frac = p.min_fraction >= 0.8;
    let detail = format!(
        "theorem 1.2 profile: slope {:.4}, r2 {:.4} (affine {}), c_hat {:.4}, min fraction for i>=6 {:.3} (>= 0.8: {})",
        p.fit.slope, p.fit.r2, affine, p.c_hat, p.min_fraction, frac
    );
    let l11 = report(11, t, 1800.0, affine && frac, false, detail);
    assert!(affine, "criterion 11, affine part: {}", l11.detail);
    lines.push(l11);

    let t = Instant::now();
    let q1: f64 = escape_probability(&EdgeWeights::uniform(1, 1.0).unwrap()).unwrap();
    let q2: f64 = escape_probability(&EdgeWeights::uniform(2, 1.0).unwrap()).unwrap();
    let mc = McmcConfig { n: 8, thin: 20, samples: 1000, burn_in: 2000, rng: RngSpec::new(112, 0), ..McmcConfig::default() };
    let chain = experiments::bound_chain_on_samples(mc, 1e-9).unwrap();
    let bad = experiments::shorted_vs_resistance(8, 10_000, RngSpec::new(112, 1), 1e-12).unwrap();
    let ok = (q1 - 0.75).abs() < 1e-14 && (q2 - 11.0 / 26.0).abs() < 1e-14 && chain.violations == [0; 4] && bad == 0;
    lines.push(report(12, t, 300.0, ok, true, format!("escape: Q1={q1} Q2={q2:.15}, chain violations {:?} on {} envs, R<R~ on {bad} of 10000", chain.violations, chain.environments)));

    let t = Instant::now();
    let r = experiments::returns_trend(ReturnsConfig::default()).unwrap();
    let toward_one = r.config.ks.iter().all(|&k| {
        let f: Vec<f64> = r.rows.iter().filter(|x| x.k == k).map(|x| 1.0 - x.fraction).collect();
        f.windows(2).all(|w| w[1] < w[0])
    });
    let fr: Vec<String> = r.rows.iter().map(|x| format!("n{}k{}={:.4}", x.n, x.k, x.fraction)).collect();
    lines.push(report(13, t, 1800.0, r.monotone && toward_one, true, format!("return counts: {} ; nondecreasing {}, 1-P shrinking {}", fr.join(" "), r.monotone, toward_one)));

    let passed = lines.iter().filter(|l| l.passed).count();
    println!("acceptance: {passed}/{} criteria pass", lines.len());
    let failed: Vec<usize> = lines.iter().filter(|l| l.asserted && !l.passed).map(|l| l.id).collect();
    assert!(failed.is_empty(), "asserted criteria failed: {failed:?}");
}
