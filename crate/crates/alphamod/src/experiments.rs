//! Extremal test families, λ-sweeps of both sides of the local smoothing
//! estimate, exponent fits, and the empirical check of the necessary conditions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, numeric, Result};
use crate::frequency_partition::{bracket, build_bapu_on_shell, bump, AlphaParams, Bapu};
use crate::propagator::{propagate, spacetime_norm, TimeQuadrature};
use crate::regions::{necessity_threshold, sufficient_threshold, Regime};
use crate::spaces::norms::lq_combine;
use crate::spaces::{alpha_mod_norm, lp_norm, ExponentTuple, FreqGrid, GridFunction};

/// Radial profile of the annulus bump: peak 1 at `|ξ| = 3/4`, support `[1/2, 1]`.
pub fn annulus_profile(r: f64) -> f64 {
    bump((r - 0.75) / 0.25)
}

/// Default grid for the annulus bump: `N = 4096` and half-band 2.
pub fn default_bump_grid() -> FreqGrid {
    bump_grid(4096, 2.0)
}

/// One-dimensional grid with `n` points and half-band `band`.
pub fn bump_grid(n: usize, band: f64) -> FreqGrid {
    FreqGrid::new(1, n, std::f64::consts::PI * n as f64 / band).expect("valid power-of-two grid")
}

/// Function with a smooth radial bump spectrum on the annulus `1/2 ≤ |ξ| ≤ 1`.
#[derive(Clone, Debug)]
pub struct AnnulusBump {
    pub phi: GridFunction,
    /// Smallest spectrum value on `0.6 ≤ |ξ| ≤ 0.9`.
    pub flatness_min: f64,
    /// `max(‖φ‖_p, 1/‖φ‖_p)` over `p ∈ {1, 2, 4, ∞}`.
    pub norm_constant: f64,
    /// Radius holding 99.99% of `∫|φ|²`.
    pub mass_radius: f64,
}

pub fn make_annulus_bump(grid: FreqGrid) -> Result<AnnulusBump> {
    if grid.shift != [0.0, 0.0] {
        return invalid("the annulus bump lives on an unshifted grid");
    }
    if grid.half_band() < 1.0 + 2.0 * grid.spacing() {
        return invalid(format!("grid half-band {:.3} does not contain the unit annulus", grid.half_band()));
    }
    if 0.5 / grid.spacing() < 32.0 {
        return invalid(format!(
            "annulus under-resolved: {:.1} samples across it, need 32",
            0.5 / grid.spacing()
        ));
    }
    let phi = GridFunction::from_continuous_spectrum(grid, |xi| {
        let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        Complex64::new(annulus_profile(r), 0.0)
    })
    .with_tag("annulus_bump");
    phi.check_boundary_decay()?;
    let flatness_min = (0..grid.len())
        .map(|i| grid.frequency_norm(i))
        .filter(|r| (0.6..=0.9).contains(r))
        .map(annulus_profile)
        .fold(f64::INFINITY, f64::min);
    let mut norm_constant = 1.0f64;
    for p in [1.0, 2.0, 4.0, f64::INFINITY] {
        let v = lp_norm(&phi, p)?;
        norm_constant = norm_constant.max(v).max(1.0 / v);
    }
    let mass_radius = mass_radius(&phi, 0.9999);
    Ok(AnnulusBump { phi, flatness_min, norm_constant, mass_radius })
}

/// Distance of every sample point from the origin, row-major.
fn radii(f: &GridFunction) -> Vec<f64> {
    let axis = f.positions();
    let n = f.n();
    if f.dim() == 1 {
        axis.iter().map(|x| x.abs()).collect()
    } else {
        (0..n * n).map(|i| axis[i / n].hypot(axis[i % n])).collect()
    }
}

/// Smallest `r` with `∫_{|x| ≤ r} |f|² ≥ fraction · ∫ |f|²`.
fn mass_radius(f: &GridFunction, fraction: f64) -> f64 {
    let mut pairs: Vec<(f64, f64)> =
        radii(f).into_iter().zip(f.samples()).map(|(r, z)| (r, z.norm_sqr())).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    for (r, m) in pairs {
        acc += m;
        if acc >= fraction * total {
            return r;
        }
    }
    f.length() / 2.0
}

/// `min |S_β(t)φ(x)|` over `|x| ≤ 0.1` and eleven times in `[0, 0.1]`.
pub fn near_origin_floor(bump: &AnnulusBump, beta: f64) -> Result<f64> {
    let near: Vec<usize> = radii(&bump.phi)
        .iter()
        .enumerate()
        .filter(|(_, r)| **r <= 0.1)
        .map(|(i, _)| i)
        .collect();
    let mut floor = f64::INFINITY;
    for j in 0..=10 {
        let u = propagate(&bump.phi, beta, 0.01 * j as f64)?;
        for &i in &near {
            floor = floor.min(u.samples()[i].norm());
        }
    }
    Ok(floor)
}

/// `c_k = ⟨k⟩^{1/(1-α)} k/|k|`, zero at `k = 0`.
pub fn carrier(k: &[i64], alpha: f64) -> [f64; 2] {
    let kf: Vec<f64> = k.iter().map(|&v| v as f64).collect();
    let n = kf.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut c = [0.0; 2];
    if n > 0.0 {
        let scale = bracket(&kf).powf(1.0 / (1.0 - alpha)) / n;
        for (a, v) in kf.iter().enumerate() {
            c[a] = v * scale;
        }
    }
    c
}

/// `{k : λ ≤ ⟨k⟩^{1/(1-α)} < 2λ}`.
pub fn lattice_shell(lambda: f64, alpha: f64, d: usize) -> Vec<Vec<i64>> {
    let e = 1.0 / (1.0 - alpha);
    let kmax = (2.0 * lambda).powf(1.0 - alpha).ceil() as i64 + 1;
    let inside = |k: &[i64]| {
        let kf: Vec<f64> = k.iter().map(|&v| v as f64).collect();
        let c = bracket(&kf).powf(e);
        c >= lambda && c < 2.0 * lambda
    };
    let mut out = Vec::new();
    if d == 1 {
        for k in -kmax..=kmax {
            if inside(&[k]) {
                out.push(vec![k]);
            }
        }
    } else {
        for a in -kmax..=kmax {
            for b in -kmax..=kmax {
                if inside(&[a, b]) {
                    out.push(vec![a, b]);
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    /// `e^{i c_k x} φ`.
    ModulatedBump { k: Vec<i64>, alpha: f64 },
    /// `φ(λx)` for `λ` a power of two.
    ScaledBump { lambda: f64 },
    /// `Σ_{k ∈ shell(λ)} φ(x - step·k) e^{i c_k (x - step·k)}`; `step` defaults
    /// to the smallest multiple of the grid spacing separating the packets.
    PacketSum { lambda: f64, alpha: f64, step: Option<f64> },
}

const PACKET_MAX_N_1D: usize = 1 << 20;
const PACKET_MAX_N_2D: usize = 1 << 11;

fn is_power_of_two(lambda: f64) -> bool {
    lambda >= 1.0 && (lambda.log2() - lambda.log2().round()).abs() < 1e-12
}

pub fn family(kind: &Family, bump: &AnnulusBump) -> Result<GridFunction> {
    let d = bump.phi.dim();
    match kind {
        Family::ModulatedBump { k, alpha } => {
            if k.len() != d {
                return invalid(format!("lattice point has {} components, grid has d={d}", k.len()));
            }
            AlphaParams::new(*alpha, d)?;
            Ok(bump.phi.modulated(carrier(k, *alpha)).with_tag("modulated_bump"))
        }
        Family::ScaledBump { lambda } => {
            if !is_power_of_two(*lambda) {
                return invalid(format!("lambda must be a power of two, got {lambda}"));
            }
            Ok(bump.phi.dilated(*lambda)?.with_tag("scaled_bump"))
        }
        Family::PacketSum { lambda, alpha, step } => packet_sum(bump, *lambda, *alpha, *step),
    }
}

fn packet_sum(bump: &AnnulusBump, lambda: f64, alpha: f64, step: Option<f64>) -> Result<GridFunction> {
    AlphaParams::new(alpha, bump.phi.dim())?;
    let d = bump.phi.dim();
    let shell = lattice_shell(lambda, alpha, d);
    if shell.is_empty() {
        return invalid(format!("no lattice point has carrier in [{lambda}, {})", 2.0 * lambda));
    }
    let dx = bump.phi.dx();
    let step = match step {
        Some(s) if s > 0.0 => s,
        Some(s) => return invalid(format!("translation step must be positive, got {s}")),
        None => (2.0 * bump.mass_radius / dx).ceil() * dx,
    };
    let kmax = shell.iter().flatten().map(|v| v.abs()).max().unwrap_or(0) as f64;
    let cmax = shell
        .iter()
        .map(|k| carrier(k, alpha).iter().map(|v| v.abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    let length = (2.0 * (kmax * step + 2.0 * bump.mass_radius)).log2().ceil().exp2();
    let band = cmax + 1.5;
    let n = ((band * length / std::f64::consts::PI).ceil() as usize).next_power_of_two();
    let cap = if d == 1 { PACKET_MAX_N_1D } else { PACKET_MAX_N_2D };
    if n > cap {
        return invalid(format!("box overflow: packet sum needs N={n} per axis, limit {cap}"));
    }
    let grid = FreqGrid::new(d, n, length)?;
    let centers: Vec<([f64; 2], [f64; 2])> = shell
        .iter()
        .map(|k| {
            let mut y = [0.0; 2];
            for (a, &v) in k.iter().enumerate() {
                y[a] = step * v as f64;
            }
            (carrier(k, alpha), y)
        })
        .collect();
    let u = GridFunction::from_continuous_spectrum(grid, |xi| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, y) in &centers {
            let r = xi.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let v = annulus_profile(r);
            if v > 0.0 {
                // packet centred at y carries the phase e^{-i(ξ - c)·y}
                let phase: f64 = xi.iter().zip(c).zip(y).map(|((a, b), yy)| (a - b) * yy).sum();
                acc += Complex64::from_polar(v, -phase);
            }
        }
        acc
    });
    Ok(u.with_tag("packet_sum"))
}

/// Nonzero spectral extent: largest `|ξ - shift|` per axis and smallest `|ξ|`.
fn spectral_extent(u: &GridFunction) -> (f64, f64) {
    let spec = u.spectrum();
    let peak = spec.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let g = u.grid();
    let (mut rel, mut low) = (0.0f64, f64::INFINITY);
    for (i, z) in spec.iter().enumerate() {
        if z.norm() > 1e-12 * peak {
            let r = g.relative_frequency(i);
            rel = r[..g.dim].iter().fold(rel, |m, v| m.max(v.abs()));
            low = low.min(g.frequency_norm(i));
        }
    }
    (rel, low)
}

/// α-BAPU covering exactly the part of the grid where `u` has spectrum.
pub fn bapu_for(u: &GridFunction, alpha: f64) -> Result<Bapu> {
    let g = *u.grid();
    let (rel, low) = spectral_extent(u);
    let margin = 4.0 * g.spacing();
    let band = (rel + margin).min(g.half_band());
    let hole = (low - margin).max(0.0) * 0.9;
    build_bapu_on_shell(AlphaParams::new(alpha, g.dim)?, g, band, hole)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
}

/// Least-squares line through `(log x, log y)`.
pub fn fit_scaling_exponent(xs: &[f64], ys: &[f64]) -> Result<ScalingFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return invalid("need at least two (x, y) pairs of equal length");
    }
    if xs.iter().chain(ys).any(|v| !(v.is_finite() && *v > 0.0)) {
        return invalid("fit needs finite positive values");
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx < 1e-24 {
        return invalid("x values must be distinct");
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    Ok(ScalingFit { slope, intercept, max_residual })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    ModulatedBump,
    ScaledBump,
    PacketSum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Sweep parameter: `k` for modulated bumps, `λ` otherwise.
    pub value: f64,
    /// Frequency scale used on the fit axis: `⟨k⟩` or `λ`.
    pub scale: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub family: SweepKind,
    pub tuple: ExponentTuple,
    pub points: Vec<SweepPoint>,
    pub lhs_fit: ScalingFit,
    pub rhs_fit: ScalingFit,
    pub ratio_fit: ScalingFit,
}

impl SweepResult {
    /// CSV with columns `value,scale,lhs,rhs,ratio,flagged`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("value,scale,lhs,rhs,ratio,flagged\n");
        for p in &self.points {
            s.push_str(&format!("{},{},{},{},{},{}\n", p.value, p.scale, p.lhs, p.rhs, p.ratio, p.flagged));
        }
        s
    }
}

fn check_sweep_values(values: &[f64]) -> Result<()> {
    if values.len() < 4 {
        return invalid(format!("need at least 4 sweep values, got {}", values.len()));
    }
    if values.windows(2).any(|w| !(w[1] > w[0])) || values[0] <= 0.0 {
        return invalid("sweep values must be positive and strictly increasing");
    }
    let r0 = values[1] / values[0];
    if values.windows(2).any(|w| ((w[1] / w[0]) / r0 - 1.0).abs() > 1e-9) {
        return invalid("sweep values must be geometrically spaced");
    }
    Ok(())
}

/// Both sides of the local smoothing estimate along a one-parameter family.
pub fn scaling_sweep(
    kind: SweepKind,
    t: &ExponentTuple,
    values: &[f64],
    quad: &TimeQuadrature,
    bump: &AnnulusBump,
) -> Result<SweepResult> {
    check_sweep_values(values)?;
    if bump.phi.dim() != t.d {
        return invalid(format!("tuple has d={} but the bump lives in d={}", t.d, bump.phi.dim()));
    }
    let mut points = Vec::with_capacity(values.len());
    for &v in values {
        let (fam, scale) = match kind {
            SweepKind::ModulatedBump => {
                if v.fract() != 0.0 {
                    return invalid(format!("modulated sweep needs integer k, got {v}"));
                }
                let mut k = vec![0i64; t.d];
                k[0] = v as i64;
                let kf: Vec<f64> = k.iter().map(|&x| x as f64).collect();
                (Family::ModulatedBump { k, alpha: t.alpha }, bracket(&kf))
            }
            SweepKind::ScaledBump => (Family::ScaledBump { lambda: v }, v),
            SweepKind::PacketSum => (Family::PacketSum { lambda: v, alpha: t.alpha, step: None }, v),
        };
        let u = family(&fam, bump)?;
        let st = spacetime_norm(&u, t.beta, t.p, quad)?;
        let bapu = bapu_for(&u, t.alpha)?;
        let rhs = alpha_mod_norm(&u, t, &bapu)?;
        if !(st.value.is_finite() && st.value > 0.0 && rhs.is_finite() && rhs > 0.0) {
            return numeric(format!("non-finite or vanishing norm at sweep value {v}"));
        }
        points.push(SweepPoint {
            value: v,
            scale,
            lhs: st.value,
            rhs,
            ratio: st.value / rhs,
            flagged: st.flagged,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.scale).collect();
    let col = |f: fn(&SweepPoint) -> f64| points.iter().map(f).collect::<Vec<f64>>();
    Ok(SweepResult {
        family: kind,
        tuple: *t,
        lhs_fit: fit_scaling_exponent(&xs, &col(|p| p.lhs))?,
        rhs_fit: fit_scaling_exponent(&xs, &col(|p| p.rhs))?,
        ratio_fit: fit_scaling_exponent(&xs, &col(|p| p.ratio))?,
        points,
    })
}

/// Settings of [`verify_necessity`]; the defaults depend on the regime.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NecessityConfig {
    /// Grid size of the bump behind the modulated and packet families.
    pub bump_n: usize,
    /// Grid size for scaled bumps and the stationary-phase profile; these
    /// travel far before dispersing.
    pub scaled_bump_n: usize,
    pub bump_band: f64,
    pub n_t: usize,
    pub grading: f64,
    pub modulated_ks: Vec<f64>,
    pub scaled_lambdas: Vec<f64>,
    pub packet_lambdas: Vec<f64>,
    /// `λ` values of the stationary-phase profile (above-two regime only).
    pub profile_lambdas: Vec<f64>,
}

impl NecessityConfig {
    pub fn for_beta(beta: f64) -> Result<Self> {
        let geo = |a: f64, n: usize| (0..n).map(|i| a * 2f64.powi(i as i32)).collect::<Vec<f64>>();
        Ok(match Regime::of(beta)? {
            Regime::BelowOne => Self {
                bump_n: 4096,
                scaled_bump_n: 16384,
                bump_band: 2.0,
                n_t: 64,
                grading: 3.0,
                modulated_ks: geo(8.0, 4),
                scaled_lambdas: (0..4).map(|i| 2f64.powi(18 + 2 * i)).collect(),
                packet_lambdas: geo(4096.0, 4).iter().map(|v| v * v).collect(),
                profile_lambdas: vec![],
            },
            Regime::UpToTwo => Self {
                bump_n: 4096,
                scaled_bump_n: 16384,
                bump_band: 2.0,
                n_t: 64,
                grading: 3.0,
                modulated_ks: geo(8.0, 4),
                scaled_lambdas: geo(32.0, 4),
                packet_lambdas: geo(64.0, 4),
                profile_lambdas: vec![],
            },
            Regime::AboveTwo => Self {
                bump_n: 16384,
                scaled_bump_n: 65536,
                bump_band: 1.5,
                n_t: 64,
                grading: 3.0,
                modulated_ks: geo(64.0, 4),
                scaled_lambdas: geo(8.0, 3),
                packet_lambdas: vec![],
                profile_lambdas: geo(4.0, 3),
            },
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchResult {
    pub family: SweepKind,
    /// Value of the branch formula this family targets.
    pub theory: f64,
    /// Fitted slope of `log(lhs / rhs at s = 0)` against the frequency scale.
    pub empirical: f64,
    pub max_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NecessityReport {
    pub d: usize,
    pub beta: f64,
    pub p: f64,
    pub q: f64,
    pub necessity: f64,
    pub sufficient: f64,
    pub branches: Vec<BranchResult>,
    pub max_empirical: f64,
    /// Stationary-phase profile slope and its target `-βd/2`, when computed.
    pub profile_slope: Option<(f64, f64)>,
    pub pass: bool,
}

fn slope_of_ratio(xs: &[f64], lhs: &[f64], rhs: &[f64]) -> Result<ScalingFit> {
    let r: Vec<f64> = lhs.iter().zip(rhs).map(|(a, b)| a / b).collect();
    fit_scaling_exponent(xs, &r)
}

/// Empirical lower bound on `s` from the modulated bumps `M_{c_k} φ`.
fn modulated_branch(
    t: &ExponentTuple,
    ks: &[f64],
    quad: &TimeQuadrature,
    bump: &AnnulusBump,
) -> Result<ScalingFit> {
    let (mut xs, mut lhs, mut rhs) = (vec![], vec![], vec![]);
    for &k in ks {
        let mut kv = vec![0i64; t.d];
        kv[0] = k as i64;
        let c = carrier(&kv, t.alpha);
        let u = family(&Family::ModulatedBump { k: kv, alpha: t.alpha }, bump)?;
        lhs.push(spacetime_norm(&u, t.beta, t.p, quad)?.value);
        rhs.push(alpha_mod_norm(&u, t, &bapu_for(&u, t.alpha)?)?);
        xs.push(c[0].hypot(c[1]));
    }
    slope_of_ratio(&xs, &lhs, &rhs)
}

fn scaled_branch(
    t: &ExponentTuple,
    lambdas: &[f64],
    quad: &TimeQuadrature,
    bump: &AnnulusBump,
) -> Result<ScalingFit> {
    let (mut lhs, mut rhs) = (vec![], vec![]);
    for &lambda in lambdas {
        let u = family(&Family::ScaledBump { lambda }, bump)?;
        lhs.push(spacetime_norm(&u, t.beta, t.p, quad)?.value);
        rhs.push(alpha_mod_norm(&u, t, &bapu_for(&u, t.alpha)?)?);
    }
    slope_of_ratio(lambdas, &lhs, &rhs)
}

/// Packet sums evaluated packet by packet: translated packets with disjoint
/// space-time supports contribute `ℓ^p` on the left and `ℓ^q` on the right.
fn packet_branch(
    t: &ExponentTuple,
    lambdas: &[f64],
    quad: &TimeQuadrature,
    bump: &AnnulusBump,
) -> Result<ScalingFit> {
    let (mut lhs, mut rhs) = (vec![], vec![]);
    let mut cache: Vec<(f64, f64, f64)> = Vec::new();
    for &lambda in lambdas {
        let shell = lattice_shell(lambda, t.alpha, t.d);
        if shell.is_empty() {
            return invalid(format!("empty lattice shell at lambda={lambda}"));
        }
        let (mut l, mut r) = (vec![], vec![]);
        for k in shell {
            // radial symmetry: the norms only depend on |c_k|
            let c = carrier(&k, t.alpha);
            let key = c[0].hypot(c[1]);
            let hit = cache.iter().find(|e| (e.0 - key).abs() <= 1e-9 * key);
            let (a, b) = match hit {
                Some(&(_, a, b)) => (a, b),
                None => {
                    let u = bump.phi.modulated([key, 0.0]);
                    let a = spacetime_norm(&u, t.beta, t.p, quad)?.value;
                    let b = alpha_mod_norm(&u, t, &bapu_for(&u, t.alpha)?)?;
                    cache.push((key, a, b));
                    (a, b)
                }
            };
            l.push(a);
            r.push(b);
        }
        lhs.push(lq_combine(&l, t.p));
        rhs.push(lq_combine(&r, t.q));
    }
    slope_of_ratio(lambdas, &lhs, &rhs)
}

/// `‖S_β(λ^β t) φ(λ^β x)‖_{L^p([1/2, 1] × ℝ^d)}` for each `λ`.
pub fn stationary_phase_profile(
    bump: &AnnulusBump,
    beta: f64,
    p: f64,
    lambdas: &[f64],
    n_t: usize,
) -> Result<(Vec<f64>, ScalingFit)> {
    let d = bump.phi.dim() as f64;
    let mut vals = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let big = lambda.powf(beta);
        let quad = TimeQuadrature::new(big / 2.0, big, n_t)?;
        let st = spacetime_norm(&bump.phi, beta, p, &quad)?;
        let v = if p.is_infinite() { st.value } else { st.value * lambda.powf(-beta * (d + 1.0) / p) };
        vals.push(v);
    }
    let fit = fit_scaling_exponent(lambdas, &vals)?;
    Ok((vals, fit))
}

/// Runs each extremal family at `(d, β, p, q)` and compares the empirical
/// lower bounds on `s` with the encoded necessary and sufficient thresholds.
pub fn verify_necessity(d: usize, beta: f64, p: f64, q: f64, cfg: &NecessityConfig) -> Result<NecessityReport> {
    if d != 1 {
        return invalid("necessity sweeps are implemented for d = 1");
    }
    let regime = Regime::of(beta)?;
    let necessity = necessity_threshold(d, beta, p, q)?;
    let sufficient = sufficient_threshold(d, beta, p, q)?.s;
    let alpha = match regime {
        Regime::AboveTwo => 0.0,
        _ => 1.0 - beta / 2.0,
    };
    let t = ExponentTuple::new(d, beta, p, q, 0.0, alpha)?;
    let bump = make_annulus_bump(bump_grid(cfg.bump_n, cfg.bump_band))?;
    let wide = make_annulus_bump(bump_grid(cfg.scaled_bump_n, cfg.bump_band))?;
    let quad = TimeQuadrature::graded(0.0, 1.0, cfg.n_t, cfg.grading)?;
    let (ip, iq) = (1.0 / p, 1.0 / q);
    let df = d as f64;
    let mut branches = Vec::new();
    let mut push = |family, theory, fit: ScalingFit| {
        branches.push(BranchResult { family, theory, empirical: fit.slope, max_residual: fit.max_residual })
    };
    let mut profile_slope = None;
    match regime {
        Regime::BelowOne | Regime::UpToTwo => {
            let fit = modulated_branch(&t, &cfg.modulated_ks, &quad, &bump)?;
            push(SweepKind::ModulatedBump, 0.0, fit);
            let fit = scaled_branch(&t, &cfg.scaled_lambdas, &quad, &wide)?;
            push(SweepKind::ScaledBump, beta * df / 2.0 * (1.0 - ip - iq) - beta * ip, fit);
            let fit = packet_branch(&t, &cfg.packet_lambdas, &quad, &bump)?;
            push(SweepKind::PacketSum, beta * df / 2.0 * (ip - iq), fit);
        }
        Regime::AboveTwo => {
            let fit = scaled_branch(&t, &cfg.scaled_lambdas, &quad, &wide)?;
            let a = df * (1.0 - ip - iq) - beta * ip;
            let b = df * (beta - 2.0) * (ip - 0.5) + df * (ip - iq);
            push(SweepKind::ScaledBump, a.max(b), fit);
            if p <= 2.0 {
                let fit = modulated_branch(&t, &cfg.modulated_ks, &quad, &bump)?;
                push(SweepKind::ModulatedBump, df * (beta - 2.0) * (ip - 0.5), fit);
            }
            if !cfg.profile_lambdas.is_empty() {
                let (_, fit) = stationary_phase_profile(&wide, beta, p, &cfg.profile_lambdas, cfg.n_t)?;
                profile_slope = Some((fit.slope, -beta * df / 2.0));
            }
        }
    }
    let max_empirical = branches.iter().map(|b| b.empirical).fold(f64::NEG_INFINITY, f64::max);
    let capped = branches.iter().all(|b| b.empirical <= necessity + 0.1 && b.empirical <= sufficient + 0.1);
    let reached = max_empirical >= necessity - 0.1;
    let profile_ok = profile_slope.map_or(true, |(m, target): (f64, f64)| (m - target).abs() <= 0.1);
    Ok(NecessityReport {
        d,
        beta,
        p,
        q,
        necessity,
        sufficient,
        branches,
        max_empirical,
        profile_slope,
        pass: capped && reached && profile_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_bump() -> AnnulusBump {
        make_annulus_bump(default_bump_grid()).unwrap()
    }

    #[test]
    fn bump_invariants() {
        let b = small_bump();
        assert!(b.flatness_min >= 0.5);
        assert_eq!(annulus_profile(0.4), 0.0);
        assert_eq!(annulus_profile(1.1), 0.0);
        let l2 = lp_norm(&b.phi, 2.0).unwrap();
        assert!((l2 - crate::spaces::norms::l2_norm_from_spectrum(&b.phi)).abs() < 1e-10 * l2);
        assert!(make_annulus_bump(bump_grid(64, 2.0)).is_err());
    }

    #[test]
    fn carrier_example() {
        assert!((carrier(&[3], 0.75)[0] - 100.0).abs() < 1e-9);
        assert_eq!(carrier(&[0], 0.5), [0.0, 0.0]);
        assert!(carrier(&[-2], 0.0)[0] < 0.0);
    }

    #[test]
    fn scaled_bump_at_one_is_phi() {
        let b = small_bump();
        let u = family(&Family::ScaledBump { lambda: 1.0 }, &b).unwrap();
        assert_eq!(u.samples(), b.phi.samples());
        assert!(family(&Family::ScaledBump { lambda: 3.0 }, &b).is_err());
    }

    #[test]
    fn modulation_keeps_norms() {
        let b = small_bump();
        let u = family(&Family::ModulatedBump { k: vec![5], alpha: 0.5 }, &b).unwrap();
        for p in [1.0, 3.0, f64::INFINITY] {
            let (a, c) = (lp_norm(&u, p).unwrap(), lp_norm(&b.phi, p).unwrap());
            assert!((a - c).abs() <= 1e-12 * c);
        }
    }

    #[test]
    fn fit_examples() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.7)).collect();
        let f = fit_scaling_exponent(&xs, &ys).unwrap();
        assert!((f.slope + 0.7).abs() < 1e-12);
        let f = fit_scaling_exponent(&[2.0, 5.0], &[1.0, 7.0]).unwrap();
        assert!(f.max_residual < 1e-12);
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| x * x * (1.0 + 0.01 * if i % 2 == 0 { 1.0 } else { -1.0 }))
            .collect();
        assert!((fit_scaling_exponent(&xs, &ys).unwrap().slope - 2.0).abs() < 0.01);
        assert!(fit_scaling_exponent(&xs, &[1.0, 0.0, 1.0, 1.0]).is_err());
        assert!(fit_scaling_exponent(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn shells() {
        // α = 0: ⟨k⟩ ∈ [4, 8) gives |k| = 4..7
        assert_eq!(lattice_shell(4.0, 0.0, 1).len(), 8);
        assert!(lattice_shell(4.0, 0.0, 2).len() > 20);
    }

    #[test]
    fn single_packet_is_a_translated_modulated_bump() {
        let b = small_bump();
        let u = family(&Family::PacketSum { lambda: 4.0, alpha: 0.0, step: None }, &b).unwrap();
        let norms: Vec<f64> = [2.0, 4.0].iter().map(|&p| lp_norm(&u, p).unwrap()).collect();
        // eight packets of equal norm
        for (p, v) in [2.0, 4.0].iter().zip(norms) {
            let one = lp_norm(&b.phi, *p).unwrap();
            assert!((v.powf(*p) / (8.0 * one.powf(*p)) - 1.0).abs() < 0.01, "p={p}");
        }
    }

    #[test]
    fn sweep_validation() {
        let b = small_bump();
        let t = ExponentTuple::new(1, 0.5, 4.0, 2.0, 0.0, 0.75).unwrap();
        let q = TimeQuadrature::default();
        assert!(scaling_sweep(SweepKind::ScaledBump, &t, &[1.0, 2.0, 4.0], &q, &b).is_err());
        assert!(scaling_sweep(SweepKind::ScaledBump, &t, &[1.0, 2.0, 3.0, 4.0], &q, &b).is_err());
    }
}
