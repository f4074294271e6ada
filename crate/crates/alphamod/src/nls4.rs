//! Cubic fourth-order Schrödinger equation `i u_t + u_xxxx = -|u|² u` on the line,
//! approximated on a periodic box: Picard iteration of the Duhamel map,
//! Strang split-step, conserved quantities and the Gronwall monitor for `v = u - S_4(t)u_0`.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, numeric, Error, Result};
use crate::fft;
use crate::frequency_partition::{build_bapu, AlphaParams};
use crate::propagator::propagate;
use crate::spaces::norms::lp_norm_samples;
use crate::spaces::{alpha_mod_norm, ExponentTuple, FreqGrid, GridFunction};

const BETA: f64 = 4.0;
const BLOWUP: f64 = 1e6;

/// Strichartz exponents tied to a space exponent `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrichartzPair {
    pub p: f64,
    /// `1/γ = (1/2 - 1/p)/4`; infinite at `p = 2`.
    pub gamma: f64,
    /// `a = 8p/(3p - 2)`.
    pub a: f64,
    /// Whether `10/3 ≤ p ≤ 6`, where `a ≤ p` and `a ≤ γ` hold.
    pub in_range: bool,
}

pub fn strichartz_pair(p: f64) -> Result<StrichartzPair> {
    if !(p > 2.0 / 3.0) || p.is_nan() {
        return invalid(format!("a(p) has a pole at p = 2/3; need p > 2/3, got {p}"));
    }
    // 1/γ = (1/2 - 1/p)/4, written so that rational inputs stay exact
    let gamma = if p.is_infinite() {
        8.0
    } else if p == 2.0 {
        f64::INFINITY
    } else {
        8.0 * p / (p - 2.0)
    };
    let a = if p.is_infinite() { 8.0 / 3.0 } else { 8.0 * p / (3.0 * p - 2.0) };
    let in_range = (10.0 / 3.0 - 1e-12..=6.0 + 1e-12).contains(&p);
    if in_range && (a > p + 1e-12 || a > gamma + 1e-12) {
        return numeric(format!("exponent ordering fails at p={p}: a={a}, gamma={gamma}"));
    }
    Ok(StrichartzPair { p, gamma, a, in_range })
}

/// Largest `T` with `C T^{1/4} (2 M n)² ≤ 1/10`, capped at `t_max`.
pub fn contraction_time(data_norm: f64, m: f64, c: f64, t_max: f64) -> Result<f64> {
    if !(m > 0.0 && c > 0.0) || !(data_norm >= 0.0) || !(t_max > 0.0) {
        return invalid("contraction time needs M, C, t_max > 0 and a nonnegative data norm");
    }
    if data_norm == 0.0 {
        return Ok(t_max);
    }
    let t = (1.0 / (40.0 * c * m * m * data_norm * data_norm)).powi(4);
    Ok(t.min(t_max))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Picard,
    Splitstep,
}

fn default_iters() -> usize {
    60
}
fn default_tol() -> f64 {
    1e-12
}
fn unit() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_stiffness() -> f64 {
    1e4
}
fn every() -> usize {
    1
}

/// Settings of both solvers. The grid is taken from the initial datum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    #[serde(default = "default_iters")]
    pub picard_max_iters: usize,
    #[serde(default = "default_tol")]
    pub picard_tol: f64,
    /// Coefficient in front of `|u|²u`; zero gives the free flow.
    #[serde(default = "unit")]
    pub nonlinearity: f64,
    #[serde(default = "yes")]
    pub dealias: bool,
    /// Upper bound on `dt · ξ_max⁴`.
    #[serde(default = "default_stiffness")]
    pub stiffness_limit: f64,
    /// Keep every n-th time level in the trajectory.
    #[serde(default = "every")]
    pub record_every: usize,
}

impl SolverConfig {
    pub fn new(dt: f64, t_final: f64, scheme: Scheme) -> Self {
        Self {
            dt,
            t_final,
            scheme,
            picard_max_iters: default_iters(),
            picard_tol: default_tol(),
            nonlinearity: 1.0,
            dealias: true,
            stiffness_limit: default_stiffness(),
            record_every: 1,
        }
    }

    fn steps(&self, grid: &FreqGrid) -> Result<usize> {
        if !(self.dt > 0.0 && self.t_final > 0.0) || self.dt > self.t_final * (1.0 + 1e-12) {
            return invalid(format!("need 0 < dt ≤ T, got dt={} T={}", self.dt, self.t_final));
        }
        if !(self.picard_tol > 0.0) || self.picard_max_iters == 0 || self.record_every == 0 {
            return invalid("picard_tol, picard_max_iters and record_every must be positive");
        }
        if !self.nonlinearity.is_finite() {
            return invalid("nonlinearity coefficient must be finite");
        }
        let stiff = self.dt * grid.half_band().powi(4);
        if stiff > self.stiffness_limit {
            return invalid(format!(
                "dt·ξ_max⁴ = {stiff:.3e} exceeds the limit {:.3e}; refine dt or coarsen the grid",
                self.stiffness_limit
            ));
        }
        let n = (self.t_final / self.dt).round();
        if ((n * self.dt) - self.t_final).abs() > 1e-9 * self.t_final {
            return invalid("t_final must be an integer multiple of dt");
        }
        Ok(n as usize)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PicardDiagnostics {
    pub iterations: usize,
    /// Sup over time nodes of the L² distance between successive iterates.
    pub differences: Vec<f64>,
    pub ratios: Vec<f64>,
}

/// Solution samples `u(t_i)` with the free flow `w = S_4(t)u_0` and `v = u - w`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GridFunction>,
    pub linear: Vec<GridFunction>,
    pub diffs: Vec<GridFunction>,
    pub picard: Option<PicardDiagnostics>,
}

impl Trajectory {
    fn from_states(u0: &GridFunction, times: Vec<f64>, states: Vec<GridFunction>) -> Result<Self> {
        let mut linear = Vec::with_capacity(times.len());
        let mut diffs = Vec::with_capacity(times.len());
        for (t, u) in times.iter().zip(&states) {
            let w = if *t == 0.0 { u0.clone() } else { propagate(u0, BETA, *t)? };
            diffs.push(u.sub(&w)?);
            linear.push(w);
        }
        Ok(Self { times, states, linear, diffs, picard: None })
    }

    pub fn last(&self) -> &GridFunction {
        self.states.last().expect("trajectories hold at least the initial state")
    }

    /// Binary file: a JSON header line with the times, then each state in grid format.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let header = TrajectoryHeader { times: self.times.clone(), picard: self.picard.clone() };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for s in &self.states {
            let bytes = s.to_bytes();
            w.write_all(&(bytes.len() as u64).to_le_bytes())?;
            w.write_all(&bytes)?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Validation("trajectory file has no header line".into()))?;
        let header: TrajectoryHeader = serde_json::from_slice(&bytes[..nl])?;
        let mut rest = &bytes[nl + 1..];
        let mut states = Vec::with_capacity(header.times.len());
        while !rest.is_empty() {
            if rest.len() < 8 {
                return invalid("truncated trajectory record");
            }
            let len = u64::from_le_bytes(rest[..8].try_into().unwrap()) as usize;
            if rest.len() < 8 + len {
                return invalid("truncated trajectory record");
            }
            states.push(GridFunction::read_from(&rest[8..8 + len])?);
            rest = &rest[8 + len..];
        }
        if states.len() != header.times.len() || states.is_empty() {
            return invalid(format!("{} times but {} states", header.times.len(), states.len()));
        }
        let u0 = states[0].clone();
        let mut traj = Self::from_states(&u0, header.times, states)?;
        traj.picard = header.picard;
        Ok(traj)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct TrajectoryHeader {
    times: Vec<f64>,
    picard: Option<PicardDiagnostics>,
}

fn check_datum(u0: &GridFunction) -> Result<()> {
    if u0.dim() != 1 || u0.shift() != [0.0, 0.0] {
        return invalid("the quartic solver works on unshifted one-dimensional grids");
    }
    Ok(())
}

fn quartic_phase(grid: &FreqGrid, t: f64) -> Vec<Complex64> {
    (0..grid.len())
        .map(|i| Complex64::from_polar(1.0, t * grid.frequency(i)[0].powi(4)))
        .collect()
}

/// 2/3-rule: keep modes with `|m| ≤ N/3`.
fn dealias_mask(grid: &FreqGrid) -> Vec<bool> {
    let n = grid.n as i64;
    (0..grid.n).map(|i| fft::signed_index(i, grid.n).abs() * 3 <= n).collect()
}

fn to_physical(spec: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut x = spec.to_vec();
    fft::inverse(&mut x, 1, n);
    x
}

fn to_spectral(x: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut s = x.to_vec();
    fft::forward(&mut s, 1, n);
    s
}

/// `∫_0^t S_4(t - τ) f(τ) dτ` by the trapezoid rule on the given `(τ, f(τ))` nodes.
pub fn duhamel(nodes: &[(f64, GridFunction)], t: f64) -> Result<GridFunction> {
    let Some((_, first)) = nodes.first() else {
        return invalid("duhamel needs at least one node");
    };
    let grid = *first.grid();
    if nodes.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return invalid("duhamel nodes must be strictly increasing in time");
    }
    if nodes[0].0 < 0.0 || nodes.last().unwrap().0 > t + 1e-12 {
        return invalid("duhamel nodes must lie in [0, t]");
    }
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    if nodes.len() == 1 {
        return Ok(GridFunction::zeros(grid));
    }
    for (j, (tau, f)) in nodes.iter().enumerate() {
        f.ensure_same_grid(first)?;
        let left = if j > 0 { tau - nodes[j - 1].0 } else { 0.0 };
        let right = if j + 1 < nodes.len() { nodes[j + 1].0 - tau } else { 0.0 };
        let weight = 0.5 * (left + right);
        let phase = quartic_phase(&grid, t - tau);
        for ((a, z), ph) in acc.iter_mut().zip(f.spectrum()).zip(phase) {
            *a += weight * z * ph;
        }
    }
    Ok(GridFunction::from_spectrum(grid, acc))
}

fn recorded(cfg: &SolverConfig, steps: usize, i: usize) -> bool {
    i % cfg.record_every == 0 || i == steps
}

fn l2_diff(a: &[Complex64], b: &[Complex64], cell: f64) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() * cell).sqrt()
}

/// Iterates `u ↦ S_4(t)u_0 + i ∫_0^t S_4(t-τ)|u|²u dτ` on the time grid `k·dt`.
pub fn picard_solve(u0: &GridFunction, cfg: &SolverConfig) -> Result<Trajectory> {
    check_datum(u0)?;
    let grid = *u0.grid();
    let steps = cfg.steps(&grid)?;
    let n = grid.n;
    let cell = u0.cell_volume();
    let mask = dealias_mask(&grid);
    let times: Vec<f64> = (0..=steps).map(|i| i as f64 * cfg.dt).collect();
    let spec0 = u0.spectrum();
    // interaction picture: û(t) = e^{itξ⁴} (û0 + i ∫ e^{-iτξ⁴} N̂(τ) dτ)
    let free: Vec<Vec<Complex64>> = times
        .iter()
        .map(|&t| {
            let ph = quartic_phase(&grid, t);
            to_physical(&spec0.iter().zip(&ph).map(|(a, b)| a * b).collect::<Vec<_>>(), n)
        })
        .collect();
    let mut current = free.clone();
    let mut diag = PicardDiagnostics::default();
    let mut strikes = 0;
    loop {
        let mut next = Vec::with_capacity(current.len());
        let mut integral = vec![Complex64::new(0.0, 0.0); n];
        let mut prev_term: Option<Vec<Complex64>> = None;
        for (i, &t) in times.iter().enumerate() {
            let cubic: Vec<Complex64> =
                current[i].iter().map(|z| cfg.nonlinearity * z.norm_sqr() * z).collect();
            let mut nl = to_spectral(&cubic, n);
            if cfg.dealias {
                for (z, keep) in nl.iter_mut().zip(&mask) {
                    if !keep {
                        *z = Complex64::new(0.0, 0.0);
                    }
                }
            }
            let back = quartic_phase(&grid, -t);
            let term: Vec<Complex64> = nl.iter().zip(&back).map(|(a, b)| a * b).collect();
            if let Some(prev) = &prev_term {
                for ((acc, a), b) in integral.iter_mut().zip(prev).zip(&term) {
                    *acc += 0.5 * cfg.dt * (a + b);
                }
            }
            let fwd = quartic_phase(&grid, t);
            let spec: Vec<Complex64> = spec0
                .iter()
                .zip(&integral)
                .zip(&fwd)
                .map(|((a, b), ph)| (a + Complex64::i() * b) * ph)
                .collect();
            next.push(to_physical(&spec, n));
            prev_term = Some(term);
        }
        let diff = current
            .iter()
            .zip(&next)
            .map(|(a, b)| l2_diff(a, b, cell))
            .fold(0.0, f64::max);
        if let Some(&last) = diag.differences.last() {
            let ratio = if last > 0.0 { diff / last } else { 0.0 };
            diag.ratios.push(ratio);
            strikes = if ratio >= 1.0 { strikes + 1 } else { 0 };
        }
        diag.differences.push(diff);
        diag.iterations += 1;
        current = next;
        if !current.iter().flatten().all(|z| z.is_finite()) {
            return numeric("Picard iterate became non-finite");
        }
        if diff < cfg.picard_tol {
            break;
        }
        if strikes >= 3 {
            return numeric(format!(
                "Picard map is not contracting: ratios {:?}; shorten T (see contraction_time)",
                &diag.ratios[diag.ratios.len() - 3..]
            ));
        }
        if diag.iterations >= cfg.picard_max_iters {
            return numeric(format!(
                "Picard iteration did not reach tol {:.1e} in {} iterations (last difference {diff:.3e})",
                cfg.picard_tol, cfg.picard_max_iters
            ));
        }
    }
    let mut kept_t = Vec::new();
    let mut kept = Vec::new();
    for (i, (t, s)) in times.into_iter().zip(current).enumerate() {
        if recorded(cfg, steps, i) {
            kept_t.push(t);
            kept.push(GridFunction::on_grid(grid, s)?);
        }
    }
    kept[0] = u0.clone();
    let mut traj = Trajectory::from_states(u0, kept_t, kept)?;
    traj.picard = Some(diag);
    Ok(traj)
}

/// Strang splitting: half free step, exact pointwise phase `e^{i dt |u|²}`, half free step.
pub fn splitstep_solve(u0: &GridFunction, cfg: &SolverConfig) -> Result<Trajectory> {
    check_datum(u0)?;
    let grid = *u0.grid();
    let steps = cfg.steps(&grid)?;
    let n = grid.n;
    let half = quartic_phase(&grid, 0.5 * cfg.dt);
    let mask = dealias_mask(&grid);
    let mut spec = u0.spectrum();
    let mut times = vec![0.0];
    let mut states = vec![u0.clone()];
    for i in 1..=steps {
        for (z, ph) in spec.iter_mut().zip(&half) {
            *z *= ph;
        }
        if cfg.nonlinearity != 0.0 {
            let x = to_physical(&spec, n);
            let stepped: Vec<Complex64> = x
                .iter()
                .map(|z| z * Complex64::from_polar(1.0, cfg.nonlinearity * cfg.dt * z.norm_sqr()))
                .collect();
            let new = to_spectral(&stepped, n);
            for ((z, nz), keep) in spec.iter_mut().zip(new).zip(&mask) {
                if *keep || !cfg.dealias {
                    *z = nz;
                }
            }
        }
        for (z, ph) in spec.iter_mut().zip(&half) {
            *z *= ph;
        }
        if recorded(cfg, steps, i) {
            let u = GridFunction::from_spectrum(grid, spec.clone());
            let peak = u.max_abs();
            if !(peak <= BLOWUP) {
                return numeric(format!("blow-up guard: sup|u| = {peak:.3e} at t = {}", i as f64 * cfg.dt));
            }
            times.push(i as f64 * cfg.dt);
            states.push(u);
        }
    }
    Trajectory::from_states(u0, times, states)
}

pub fn solve(u0: &GridFunction, cfg: &SolverConfig) -> Result<Trajectory> {
    match cfg.scheme {
        Scheme::Picard => picard_solve(u0, cfg),
        Scheme::Splitstep => splitstep_solve(u0, cfg),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub t: f64,
    pub mass_v: f64,
    pub energy_v: f64,
    pub modified_energy_v: f64,
    /// `M_v + 1`.
    pub a_v: f64,
    pub mass_u: f64,
    pub energy_u: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub rows: Vec<EnergyRow>,
}

impl EnergyReport {
    /// Columns `t,M_u,E_u,M_v,E_v,E_tilde_v,monitored_quantity`, the last one
    /// being `Ẽ_v + 2C A_v` for the given constant.
    pub fn to_csv(&self, constant: f64) -> String {
        let mut s = String::from("t,M_u,E_u,M_v,E_v,E_tilde_v,monitored_quantity\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.t,
                r.mass_u,
                r.energy_u,
                r.mass_v,
                r.energy_v,
                r.modified_energy_v,
                r.modified_energy_v + 2.0 * constant * r.a_v
            ));
        }
        s
    }

    /// Largest `|X(t) - X(0)| / |X(0)|` over the rows, for `X = M_u` and `X = E_u`.
    pub fn relative_drifts(&self) -> (f64, f64) {
        let Some(first) = self.rows.first() else { return (0.0, 0.0) };
        let drift = |f: fn(&EnergyRow) -> f64| {
            let base = f(first).abs().max(f64::MIN_POSITIVE);
            self.rows.iter().map(|r| (f(r) - f(first)).abs() / base).fold(0.0, f64::max)
        };
        (drift(|r| r.mass_u), drift(|r| r.energy_u))
    }
}

fn second_derivative_l2(f: &GridFunction) -> f64 {
    let g = f.apply_multiplier(|xi| Complex64::new(-xi[0] * xi[0], 0.0));
    lp_norm_samples(g.samples(), f.cell_volume(), 2.0)
}

fn quartic(f: &GridFunction) -> f64 {
    f.samples().iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() * f.cell_volume()
}

fn energy(f: &GridFunction) -> f64 {
    0.5 * second_derivative_l2(f).powi(2) + 0.25 * quartic(f)
}

/// Mass and energies of `v` given the free flow `w`, and those of `u = v + w`.
pub fn functionals(v: &GridFunction, w: &GridFunction) -> Result<EnergyRow> {
    let u = v.add(w)?;
    let mass_v = 0.5 * lp_norm_samples(v.samples(), v.cell_volume(), 2.0).powi(2);
    let vxx = second_derivative_l2(v);
    let energy_v = 0.5 * vxx * vxx + 0.25 * quartic(v);
    let modified_energy_v = 0.5 * vxx * vxx + 0.25 * quartic(&u) - 0.25 * quartic(w);
    let row = EnergyRow {
        t: 0.0,
        mass_v,
        energy_v,
        modified_energy_v,
        a_v: mass_v + 1.0,
        mass_u: 0.5 * lp_norm_samples(u.samples(), u.cell_volume(), 2.0).powi(2),
        energy_u: energy(&u),
    };
    let vals = [row.mass_v, row.energy_v, row.modified_energy_v, row.mass_u, row.energy_u];
    if vals.iter().any(|x| !x.is_finite()) {
        return numeric("non-finite energy functional");
    }
    Ok(row)
}

pub fn energy_report(traj: &Trajectory) -> Result<EnergyReport> {
    let mut rows = Vec::with_capacity(traj.times.len());
    for ((t, v), w) in traj.times.iter().zip(&traj.diffs).zip(&traj.linear) {
        let mut row = functionals(v, w)?;
        row.t = *t;
        rows.push(row);
    }
    Ok(EnergyReport { rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallVerdict {
    /// Constant `C` making `Ẽ_v + 2C A_v` positive along the report.
    pub constant: f64,
    /// Least-squares slope of `log(Ẽ_v + 2C A_v)` in `t`.
    pub rate: f64,
    pub max_log_slope: f64,
    pub margin: f64,
    pub pass: bool,
}

/// Checks that `Ẽ_v + 2C A_v` grows at most exponentially: every discrete
/// log-slope stays below `rate + margin · max(1, |rate|)`.
pub fn gronwall_monitor(report: &EnergyReport, margin: f64) -> Result<GronwallVerdict> {
    let rows = &report.rows;
    if rows.len() < 3 {
        return invalid("the Gronwall monitor needs at least three rows");
    }
    if rows.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return invalid("report times must increase");
    }
    let worst = rows.iter().map(|r| -r.modified_energy_v / (2.0 * r.a_v)).fold(0.0, f64::max);
    let quantity = |c: f64| rows.iter().map(|r| r.modified_energy_v + 2.0 * c * r.a_v).collect::<Vec<f64>>();
    let mut constant = worst;
    let mut q = quantity(constant);
    if q.iter().any(|v| !(*v > 0.0)) {
        constant = worst + 1.0;
        q = quantity(constant);
    }
    if q.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return numeric("monitored quantity is not positive after calibration");
    }
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let lq: Vec<f64> = q.iter().map(|v| v.ln()).collect();
    let n = ts.len() as f64;
    let mt = ts.iter().sum::<f64>() / n;
    let ml = lq.iter().sum::<f64>() / n;
    let stt: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    let rate = ts.iter().zip(&lq).map(|(t, l)| (t - mt) * (l - ml)).sum::<f64>() / stt;
    let max_log_slope = ts
        .windows(2)
        .zip(lq.windows(2))
        .map(|(t, l)| (l[1] - l[0]) / (t[1] - t[0]))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(GronwallVerdict { constant, rate, max_log_slope, margin, pass: max_log_slope <= rate + margin * rate.abs().max(1.0) })
}

/// Report on `n + 1` equispaced times in `[0, t_final]` with `Ẽ_v = f(t)` and `M_v = 0`.
pub fn synthetic_report(t_final: f64, n: usize, f: impl Fn(f64) -> f64) -> EnergyReport {
    let rows = (0..=n)
        .map(|i| {
            let t = t_final * i as f64 / n as f64;
            EnergyRow { t, mass_v: 0.0, energy_v: 0.0, modified_energy_v: f(t), a_v: 1.0, mass_u: 0.0, energy_u: 0.0 }
        })
        .collect();
    EnergyReport { rows }
}

/// Empirical constants of the local theory: `M` bounds the free flow in
/// `L^a_t L^p_x` by the data norm in `M^s_{p,2}`, and `C` bounds the Duhamel
/// term of the cubic by `T^{1/4} ‖u‖³`. Both are measured suprema over the samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub p: f64,
    pub s: f64,
    pub t_final: f64,
    pub m: f64,
    pub c: f64,
}

fn mixed_norm(slices: &[Vec<Complex64>], cell: f64, p: f64, a: f64, dt: f64) -> f64 {
    let inner: Vec<f64> = slices.iter().map(|x| lp_norm_samples(x, cell, p)).collect();
    // trapezoid in time
    let mut acc = 0.0;
    for w in inner.windows(2) {
        acc += 0.5 * dt * (w[0].powf(a) + w[1].powf(a));
    }
    acc.powf(1.0 / a)
}

/// Data norm in `M^s_{p,2}` with unit windows.
pub fn data_norm(u0: &GridFunction, p: f64, s: f64) -> Result<f64> {
    let bapu = build_bapu(AlphaParams::new(0.0, u0.dim())?, *u0.grid())?;
    alpha_mod_norm(u0, &ExponentTuple::norm(u0.dim(), p, 2.0, s, 0.0)?, &bapu)
}

pub fn calibrate_constants(samples: &[GridFunction], p: f64, s: f64, t_final: f64, n_t: usize) -> Result<Calibration> {
    if samples.is_empty() || n_t < 2 || !(t_final > 0.0) {
        return invalid("calibration needs samples, n_t ≥ 2 and T > 0");
    }
    let pair = strichartz_pair(p)?;
    if !pair.in_range {
        return invalid(format!("p = {p} is outside [10/3, 6]"));
    }
    let dt = t_final / n_t as f64;
    let (mut m, mut c) = (0.0f64, 0.0f64);
    for u0 in samples {
        check_datum(u0)?;
        let grid = *u0.grid();
        let n = grid.n;
        let cell = u0.cell_volume();
        let spec0 = u0.spectrum();
        let mut free = Vec::with_capacity(n_t + 1);
        let mut duh = Vec::with_capacity(n_t + 1);
        let mut integral = vec![Complex64::new(0.0, 0.0); n];
        let mut prev: Option<Vec<Complex64>> = None;
        for i in 0..=n_t {
            let t = i as f64 * dt;
            let fwd = quartic_phase(&grid, t);
            let x = to_physical(&spec0.iter().zip(&fwd).map(|(a, b)| a * b).collect::<Vec<_>>(), n);
            let cubic: Vec<Complex64> = x.iter().map(|z| z.norm_sqr() * z).collect();
            let back = quartic_phase(&grid, -t);
            let term: Vec<Complex64> =
                to_spectral(&cubic, n).iter().zip(&back).map(|(a, b)| a * b).collect();
            if let Some(pr) = &prev {
                for ((acc, a), b) in integral.iter_mut().zip(pr).zip(&term) {
                    *acc += 0.5 * dt * (a + b);
                }
            }
            duh.push(to_physical(&integral.iter().zip(&fwd).map(|(a, b)| a * b).collect::<Vec<_>>(), n));
            free.push(x);
            prev = Some(term);
        }
        let x_norm = mixed_norm(&free, cell, p, pair.a, dt);
        let d = data_norm(u0, p, s)?;
        if !(d > 0.0 && x_norm > 0.0) {
            return invalid("calibration samples must be nonzero");
        }
        m = m.max(x_norm / d);
        let a_norm = mixed_norm(&duh, cell, p, pair.a, dt);
        c = c.max(a_norm / (t_final.powf(0.25) * x_norm.powi(3)));
    }
    Ok(Calibration { p, s, t_final, m, c })
}

/// Box of `50σ` with `n` points holding `amplitude · e^{-x²/(2σ²)}`.
pub fn gaussian_datum(n: usize, sigma: f64, amplitude: Complex64) -> Result<GridFunction> {
    if !(sigma > 0.0) {
        return invalid("sigma must be positive");
    }
    let f = GridFunction::from_fn(1, n, 50.0 * sigma, |x| amplitude * (-x[0] * x[0] / (2.0 * sigma * sigma)).exp())?;
    f.check_boundary_decay()?;
    Ok(f.with_tag("gaussian"))
}

/// Rescales `f` to have the given L² norm.
pub fn with_l2_norm(f: &GridFunction, target: f64) -> GridFunction {
    let cur = lp_norm_samples(f.samples(), f.cell_volume(), 2.0);
    f.scaled(Complex64::new(target / cur, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(amp: f64) -> GridFunction {
        gaussian_datum(256, 1.0, Complex64::new(amp, 0.0)).unwrap()
    }

    #[test]
    fn strichartz_values() {
        let p6 = strichartz_pair(6.0).unwrap();
        assert_eq!((p6.a, p6.gamma), (3.0, 12.0));
        let low = strichartz_pair(10.0 / 3.0).unwrap();
        assert!((low.a - 10.0 / 3.0).abs() < 1e-14);
        assert!(strichartz_pair(2.0).unwrap().gamma.is_infinite());
        assert!(!strichartz_pair(2.0).unwrap().in_range);
        assert!(strichartz_pair(0.5).is_err());
    }

    #[test]
    fn contraction_values() {
        assert!((contraction_time(1.0, 1.0, 1.0, 1.0).unwrap() - 3.90625e-7).abs() < 1e-20);
        assert_eq!(contraction_time(0.0, 1.0, 1.0, 0.5).unwrap(), 0.5);
        let a = contraction_time(0.1, 1.0, 1.0, 1e9).unwrap();
        let b = contraction_time(0.2, 1.0, 1.0, 1e9).unwrap();
        assert!((a / b - 256.0).abs() < 1e-9);
    }

    #[test]
    fn duhamel_oracles() {
        let g = gauss(1.0);
        let t = 0.01;
        let nodes: Vec<(f64, GridFunction)> =
            (0..=10).map(|j| (0.001 * j as f64, propagate(&g, 4.0, 0.001 * j as f64).unwrap())).collect();
        let d = duhamel(&nodes, t).unwrap();
        let want = propagate(&g, 4.0, t).unwrap().scaled(Complex64::new(t, 0.0));
        assert!(lp_norm_samples(d.sub(&want).unwrap().samples(), d.cell_volume(), 2.0) < 1e-6);
        let zero: Vec<(f64, GridFunction)> = (0..4).map(|j| (j as f64 * 0.1, GridFunction::zeros(*g.grid()))).collect();
        assert_eq!(duhamel(&zero, 0.3).unwrap().max_abs(), 0.0);
        assert!(duhamel(&[], 1.0).is_err());
    }

    #[test]
    fn zero_and_linear_limits() {
        let z = GridFunction::zeros(*gauss(1.0).grid());
        for scheme in [Scheme::Picard, Scheme::Splitstep] {
            let traj = solve(&z, &SolverConfig::new(1e-3, 1e-2, scheme)).unwrap();
            assert_eq!(traj.last().max_abs(), 0.0);
        }
        let g = gauss(1.0);
        let mut cfg = SolverConfig::new(1e-3, 2e-2, Scheme::Splitstep);
        cfg.nonlinearity = 0.0;
        let want = propagate(&g, 4.0, 2e-2).unwrap();
        for scheme in [Scheme::Picard, Scheme::Splitstep] {
            cfg.scheme = scheme;
            let traj = solve(&g, &cfg).unwrap();
            let err = traj.last().sub(&want).unwrap().max_abs();
            assert!(err < 1e-10, "{scheme:?}: {err}");
            assert!(traj.diffs.iter().all(|v| v.max_abs() < 1e-10));
        }
    }

    #[test]
    fn gaussian_functionals() {
        let g = gaussian_datum(1024, 1.0, Complex64::new(1.0, 0.0)).unwrap();
        let zero = GridFunction::zeros(*g.grid());
        let row = functionals(&g, &zero).unwrap();
        let pi = std::f64::consts::PI;
        assert!((row.mass_v - pi.sqrt() / 2.0).abs() < 1e-12);
        // ∫|v''|² = 3√π/4 and ∫ e^{-2x²} = √(π/2)
        let want = 0.5 * 0.75 * pi.sqrt() + 0.25 * (pi / 2.0).sqrt();
        assert!((row.energy_v - want).abs() < 1e-10);
        assert_eq!(row.modified_energy_v, row.energy_v);
        let row = functionals(&zero, &g).unwrap();
        assert_eq!((row.mass_v, row.energy_v), (0.0, 0.0));
        assert!(row.modified_energy_v.abs() < 1e-15);
    }

    fn synthetic(f: impl Fn(f64) -> f64) -> EnergyReport {
        synthetic_report(3.0, 300, f)
    }

    #[test]
    fn gronwall_fixtures() {
        let v = gronwall_monitor(&synthetic(|_| 2.0), 0.5).unwrap();
        assert!(v.pass && v.rate.abs() < 1e-12);
        let v = gronwall_monitor(&synthetic(|t| (3.0 * t).exp()), 0.5).unwrap();
        assert!(v.pass && (v.rate - 3.0).abs() < 0.1);
        let v = gronwall_monitor(&synthetic(|t| (t * t).exp()), 0.5).unwrap();
        assert!(!v.pass);
    }

    #[test]
    fn trajectory_roundtrip() {
        let g = gauss(0.5);
        let mut cfg = SolverConfig::new(1e-3, 1e-2, Scheme::Splitstep);
        cfg.record_every = 5;
        let traj = splitstep_solve(&g, &cfg).unwrap();
        assert_eq!(traj.times.len(), 3);
        assert_eq!(traj.diffs[0].max_abs(), 0.0);
        let mut buf = Vec::new();
        traj.write_to(&mut buf).unwrap();
        let back = Trajectory::read_from(&buf[..]).unwrap();
        assert_eq!(back.times, traj.times);
        assert_eq!(back.last().samples(), traj.last().samples());
    }

    #[test]
    fn config_validation() {
        let g = gauss(0.5);
        assert!(splitstep_solve(&g, &SolverConfig::new(0.2, 0.1, Scheme::Splitstep)).is_err());
        assert!(splitstep_solve(&g, &SolverConfig::new(3e-3, 1e-2, Scheme::Splitstep)).is_err());
        let mut cfg = SolverConfig::new(1e-3, 1e-2, Scheme::Splitstep);
        cfg.stiffness_limit = 1e-3;
        assert!(splitstep_solve(&g, &cfg).is_err());
    }
}
