//! The acceptance suite: ten numbered checks, each reporting pass/fail with a short detail line.

use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::experiments::{
    default_bump_grid, fit_scaling_exponent, make_annulus_bump, scaling_sweep, verify_necessity,
    NecessityConfig, SweepKind,
};
use crate::frequency_partition::{build_bapu, AlphaParams};
use crate::nls4::{
    energy_report, gaussian_datum, gronwall_monitor, picard_solve, splitstep_solve, strichartz_pair,
    synthetic_report, with_l2_norm, Scheme, SolverConfig,
};
use crate::propagator::{decoupling_probe, multiplier_bound_probe, propagate, Flavor, ProbeWindow, TimeQuadrature};
use crate::regions::{
    fix_time_threshold, necessity_threshold, region_grid, sufficient_threshold, Regime,
};
use crate::spaces::{lp_norm, Boundary, ExponentTuple, FreqGrid, GridFunction};

const INF: f64 = f64::INFINITY;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{} [{}] {}: {} ({:.1}s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub seed: u64,
    pub criteria: Vec<CriterionResult>,
    pub pass: bool,
}

type Check = fn(u64) -> Result<(bool, String)>;

pub const CRITERIA: [(u32, &str, Check); 10] = [
    (1, "partition of unity", partition_of_unity),
    (2, "isometry and group law", isometry_and_group_law),
    (3, "gaussian oracle", gaussian_oracle),
    (4, "region engine consistency", region_consistency),
    (5, "scaling-law reproduction", scaling_law),
    (6, "necessity sandwich", necessity_sandwich),
    (7, "decoupling probe", decoupling),
    (8, "multiplier-bound probe", multiplier_growth),
    (9, "4nls conservation", conservation),
    (10, "well-posedness machinery", well_posedness),
];

/// Runs criterion `id`; errors inside a check count as a failure.
pub fn run_criterion(id: u32, seed: u64) -> Option<CriterionResult> {
    let (id, name, check) = CRITERIA.iter().find(|c| c.0 == id)?;
    let start = Instant::now();
    let (pass, detail) = match check(seed) {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    Some(CriterionResult {
        id: *id,
        name: name.to_string(),
        pass,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs the selected criteria (all of them when `only` is empty), in order.
pub fn run_acceptance(seed: u64, only: &[u32]) -> AcceptanceReport {
    let criteria: Vec<CriterionResult> = CRITERIA
        .iter()
        .filter(|c| only.is_empty() || only.contains(&c.0))
        .filter_map(|c| run_criterion(c.0, seed))
        .collect();
    let pass = criteria.iter().all(|c| c.pass);
    AcceptanceReport { seed, criteria, pass }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn rel_l2(a: &GridFunction, b: &GridFunction) -> Result<f64> {
    Ok(lp_norm(&a.sub(b)?, 2.0)? / lp_norm(b, 2.0)?)
}

fn partition_of_unity(seed: u64) -> Result<(bool, String)> {
    let grid = FreqGrid::new(1, 2048, std::f64::consts::PI * 2048.0 / 8.0)?;
    let mut rng = rng_for(seed, 1);
    let mut worst_sum: f64 = 0.0;
    let mut worst_rec: f64 = 0.0;
    let mut windows = 0;
    for alpha in [-1.0, -0.5, 0.0, 0.5, 0.75] {
        let bapu = build_bapu(AlphaParams::new(alpha, 1)?, grid)?;
        windows += bapu.len();
        worst_sum = worst_sum.max(bapu.partition_error());
        for _ in 0..50 {
            let mut f = GridFunction::random_band_limited(grid, 0.0, bapu.band, &mut rng);
            let mut spec = f.spectrum();
            for (i, z) in spec.iter_mut().enumerate() {
                if !bapu.covers(i) {
                    *z = Complex64::new(0.0, 0.0);
                }
            }
            f = GridFunction::from_spectrum(grid, spec.clone());
            let mut acc = vec![Complex64::new(0.0, 0.0); spec.len()];
            for w in &bapu.windows {
                for (&i, &v) in w.profile.support.iter().zip(&w.profile.values) {
                    acc[i] += spec[i] * v;
                }
            }
            let rebuilt = GridFunction::from_spectrum(grid, acc);
            worst_rec = worst_rec.max(rel_l2(&rebuilt, &f)?);
        }
    }
    Ok((
        worst_sum < 1e-10 && worst_rec < 1e-10,
        format!("max |sum - 1| = {worst_sum:.2e}, max reconstruction error = {worst_rec:.2e} over {windows} windows"),
    ))
}

fn isometry_and_group_law(seed: u64) -> Result<(bool, String)> {
    let grid = FreqGrid::new(1, 512, 64.0)?;
    let mut rng = rng_for(seed, 2);
    let (t1, t2) = (0.3, 0.45);
    let (mut iso, mut group): (f64, f64) = (0.0, 0.0);
    for beta in [0.5, 2.0, 4.0] {
        for _ in 0..20 {
            let f = GridFunction::random_band_limited(grid, 0.0, 8.0, &mut rng);
            let n0 = lp_norm(&f, 2.0)?;
            let moved = propagate(&f, beta, t1)?;
            iso = iso.max((lp_norm(&moved, 2.0)? - n0).abs() / n0);
            let twice = propagate(&moved, beta, t2)?;
            let once = propagate(&f, beta, t1 + t2)?;
            group = group.max(twice.sub(&once)?.max_abs() / f.max_abs());
        }
    }
    Ok((iso < 1e-10 && group < 1e-10, format!("isometry error {iso:.2e}, group law error {group:.2e}")))
}

fn gaussian_oracle(_seed: u64) -> Result<(bool, String)> {
    let f = GridFunction::from_fn(1, 2048, 40.0, |x| Complex64::new((-x[0] * x[0] / 2.0).exp(), 0.0))?;
    let mut worst: f64 = 0.0;
    for t in [0.1, 0.5, 1.0] {
        let u = propagate(&f, 2.0, t)?;
        // S(t) = e^{it|ξ|²} solves u_t = -i u_xx, so a = 1 - 2it
        let a = Complex64::new(1.0, -2.0 * t);
        let exact = GridFunction::from_fn(1, 2048, 40.0, |x| (-x[0] * x[0] / (2.0 * a)).exp() / a.sqrt())?;
        worst = worst.max(u.sub(&exact)?.max_abs());
    }
    Ok((worst < 1e-6, format!("max sup-norm error {worst:.2e}")))
}

fn region_consistency(_seed: u64) -> Result<(bool, String)> {
    let mut min_gap = INF;
    let mut sharp_gap: f64 = 0.0;
    let mut cells = 0;
    for d in [1, 2] {
        for beta in [0.5, 1.5, 2.0, 4.0] {
            let sharp = Regime::of(beta)?.sharp_labels();
            for c in region_grid(d, beta, 101)? {
                cells += 1;
                min_gap = min_gap.min(c.verdict.gap);
                if sharp.contains(&c.verdict.label) {
                    sharp_gap = sharp_gap.max(c.verdict.gap.abs());
                }
            }
        }
    }
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    let a = sufficient_threshold(1, 0.5, 6.0, INF)?;
    let b = sufficient_threshold(1, 2.0, 2.0, 2.0)?;
    let c = sufficient_threshold(1, 4.0, 6.0, INF)?;
    let golden = a.label == 'A'
        && close(a.s, 1.0 / 8.0)
        && a.boundary == Boundary::Open
        && close(b.s, 0.0)
        && c.label == 'A'
        && close(c.s, 5.0 / 6.0)
        && close(necessity_threshold(1, 2.0, 2.0, 2.0)?, 0.0)
        && close(necessity_threshold(1, 0.5, 6.0, INF)?, 1.0 / 8.0)
        && close(necessity_threshold(1, 4.0, 1.0, 1.0)?, 1.0)
        && close(fix_time_threshold(1, 2.0, 2.0, 2.0)?, 0.0)
        && close(fix_time_threshold(1, 0.5, 6.0, INF)?, 5.0 / 24.0)
        && close(fix_time_threshold(1, 4.0, 2.0, 2.0)?, 0.0)
        && sufficient_threshold(1, 1.0, 2.0, 2.0).is_err();
    Ok((
        min_gap >= -1e-12 && sharp_gap < 1e-12 && golden,
        format!("{cells} cells, min gap {min_gap:.2e}, max sharp-label gap {sharp_gap:.2e}, golden values {}", if golden { "match" } else { "differ" }),
    ))
}

fn scaling_law(_seed: u64) -> Result<(bool, String)> {
    let bump = make_annulus_bump(default_bump_grid())?;
    let quad = TimeQuadrature::new(0.0, 1.0, 64)?;
    let (beta, p, alpha) = (0.5, 4.0, 0.75);
    let scaled = ExponentTuple::new(1, beta, p, 2.0, 0.0, alpha)?;
    let sweep = scaling_sweep(SweepKind::ScaledBump, &scaled, &[4.0, 8.0, 16.0, 32.0], &quad, &bump)?;
    let lhs_target = -(beta + 1.0) / p;
    let lhs = sweep.lhs_fit.slope;
    let s = 0.3;
    let modulated = ExponentTuple::new(1, beta, p, 2.0, s, alpha)?;
    let sweep = scaling_sweep(SweepKind::ModulatedBump, &modulated, &[4.0, 8.0, 16.0, 32.0], &quad, &bump)?;
    let rhs_target = s / (1.0 - alpha);
    let rhs = sweep.rhs_fit.slope;
    let lhs_ok = (lhs - lhs_target).abs() <= 0.05;
    let rhs_ok = (rhs - rhs_target).abs() <= 0.05;
    Ok((
        lhs_ok && rhs_ok,
        format!(
            "scaled-bump lhs slope {lhs:.4} vs {lhs_target:.4} ({}), modulated-bump rhs slope {rhs:.4} vs {rhs_target:.4} ({})",
            if lhs_ok { "ok" } else { "off" },
            if rhs_ok { "ok" } else { "off" }
        ),
    ))
}

/// Six `(p, q)` points per regime, with the `β` that represents it.
pub fn necessity_points() -> Vec<(f64, [(f64, f64); 6])> {
    vec![
        (0.5, [(6.0, INF), (8.0, INF), (12.0, 2.0), (2.0, 2.0), (1.5, 6.0), (3.0, INF)]),
        (1.5, [(8.0, INF), (12.0, 2.0), (2.0, 2.0), (1.5, 6.0), (1.2, INF), (6.0, INF)]),
        (3.0, [(6.0, INF), (4.0, 2.0), (2.0, 2.0), (1.5, 1.5), (1.2, 1.0), (3.0, INF)]),
    ]
}

fn necessity_sandwich(_seed: u64) -> Result<(bool, String)> {
    let jobs: Vec<(f64, f64, f64)> = necessity_points()
        .into_iter()
        .flat_map(|(beta, pts)| pts.into_iter().map(move |(p, q)| (beta, p, q)))
        .collect();
    let reports: Result<Vec<_>> = jobs
        .par_iter()
        .map(|&(beta, p, q)| verify_necessity(1, beta, p, q, &NecessityConfig::for_beta(beta)?))
        .collect();
    let reports = reports?;
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("(β={}, p={}, q={}): {:.3} vs {:.3}", r.beta, r.p, r.q, r.max_empirical, r.necessity))
        .collect();
    let worst = reports.iter().map(|r| (r.max_empirical - r.necessity).abs()).fold(0.0, f64::max);
    let detail = if failed.is_empty() {
        format!("{} points, max |empirical - necessary| = {worst:.3}", reports.len())
    } else {
        format!("{} of {} points off: {}", failed.len(), reports.len(), failed.join("; "))
    };
    Ok((failed.is_empty(), detail))
}

fn decoupling(seed: u64) -> Result<(bool, String)> {
    let grid = FreqGrid::new(1, 1024, 1600.0)?;
    let mut rng = rng_for(seed, 7);
    let v = GridFunction::random_band_limited(grid, 0.5, 1.0, &mut rng);
    let p0 = 6.0;
    let lambdas = [4.0, 16.0, 64.0];
    let slope = |beta: f64, flavor: Flavor| -> Result<f64> {
        let ratios: Result<Vec<f64>> = lambdas
            .iter()
            .map(|&l: &f64| {
                let n_t = (l.powf(beta) / 2.0).max(64.0) as usize;
                Ok(decoupling_probe(&v, beta, p0, l, flavor, n_t)?.ratio)
            })
            .collect();
        Ok(fit_scaling_exponent(&lambdas, &ratios?)?.slope)
    };
    let l2 = slope(2.0, Flavor::L2)?;
    let lp = slope(0.5, Flavor::Lp)?;
    let lp_bound = 0.5 * (0.5 - 2.0 / p0) + 0.15;
    Ok((
        l2 <= 0.15 && lp <= lp_bound,
        format!("l2 slope {l2:.4} (bound 0.15), lp slope {lp:.4} (bound {lp_bound:.4})"),
    ))
}

fn multiplier_growth(_seed: u64) -> Result<(bool, String)> {
    let beta = 4.0;
    let ks = [4.0, 8.0, 16.0, 32.0];
    let ratios: Result<Vec<f64>> = ks
        .iter()
        .map(|&k| Ok(multiplier_bound_probe(&[k as i64], beta, INF, 1.0, ProbeWindow::Unit)?.ratio))
        .collect();
    let slope = fit_scaling_exponent(&ks, &ratios?)?.slope;
    let bound = (beta - 2.0) * 0.5 + 0.1;
    Ok((slope <= bound, format!("growth slope {slope:.4} (bound {bound:.2})")))
}

fn conservation(_seed: u64) -> Result<(bool, String)> {
    let u0 = gaussian_datum(512, 1.0, Complex64::new(1.0, 0.0))?;
    let traj = splitstep_solve(&u0, &SolverConfig::new(1e-4, 0.1, Scheme::Splitstep))?;
    let (mass, energy) = energy_report(&traj)?.relative_drifts();
    let dts = [4e-4, 2e-4, 1e-4];
    let drifts: Result<Vec<f64>> = dts
        .par_iter()
        .map(|&dt| {
            let traj = splitstep_solve(&u0, &SolverConfig::new(dt, 0.1, Scheme::Splitstep))?;
            Ok(energy_report(&traj)?.relative_drifts().1)
        })
        .collect();
    let order = fit_scaling_exponent(&dts, &drifts?)?.slope;
    Ok((
        mass < 1e-8 && energy < 1e-4 && (order - 2.0).abs() <= 0.2,
        format!("mass drift {mass:.2e}, energy drift {energy:.2e}, order {order:.3}"),
    ))
}

fn well_posedness(_seed: u64) -> Result<(bool, String)> {
    let u0 = with_l2_norm(&gaussian_datum(512, 1.0, Complex64::new(1.0, 0.0))?, 0.1);
    let picard = picard_solve(&u0, &SolverConfig::new(1e-4, 0.05, Scheme::Picard))?;
    let split = splitstep_solve(&u0, &SolverConfig::new(1e-4, 0.05, Scheme::Splitstep))?;
    let max_ratio = picard
        .picard
        .as_ref()
        .map(|d| d.ratios.iter().cloned().fold(0.0, f64::max))
        .unwrap_or(INF);
    let mut agreement: f64 = 0.0;
    for (a, b) in picard.states.iter().zip(&split.states) {
        agreement = agreement.max(lp_norm(&a.sub(b)?, 2.0)?);
    }
    let six = strichartz_pair(6.0)?;
    let ten_thirds = strichartz_pair(10.0 / 3.0)?;
    let pairs = six.a == 3.0 && six.gamma == 12.0 && ten_thirds.a == 10.0 / 3.0;
    let computed = gronwall_monitor(&energy_report(&picard)?, 0.5)?.pass;
    let fixture = gronwall_monitor(&synthetic_report(3.0, 300, |t| (t * t).exp()), 0.5)?.pass;
    Ok((
        max_ratio <= 0.5 && agreement < 1e-4 && pairs && computed && !fixture,
        format!(
            "max Picard ratio {max_ratio:.2e}, Picard vs split-step {agreement:.2e}, Strichartz pairs {}, monitor {} on trajectory and {} on fixture",
            if pairs { "exact" } else { "off" },
            if computed { "passes" } else { "fails" },
            if fixture { "passes" } else { "fails" }
        ),
    ))
}
