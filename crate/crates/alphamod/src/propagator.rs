//! The fractional Schrödinger group `e^{it|ξ|^β}` on grid functions and the
//! space-time norms and probes built on it.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fft;
use crate::frequency_partition::{bracket, bump, AlphaParams, window_geometry};
use crate::spaces::norms::{lp_norm_samples, lq_combine, recip};
use crate::spaces::{FreqGrid, GridFunction};

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return invalid(format!("beta must be positive, got {beta}"));
    }
    Ok(())
}

/// `|ξ|^β` at every grid frequency, FFT order.
fn symbol(grid: &FreqGrid, beta: f64) -> Vec<f64> {
    (0..grid.len()).map(|i| grid.frequency_norm(i).powf(beta)).collect()
}

/// `S_β(t) f`.
pub fn propagate(f: &GridFunction, beta: f64, t: f64) -> Result<GridFunction> {
    check_beta(beta)?;
    if !t.is_finite() {
        return invalid("time must be finite");
    }
    let phase = symbol(f.grid(), beta);
    let mut s = f.spectrum();
    for (z, w) in s.iter_mut().zip(&phase) {
        *z *= Complex64::from_polar(1.0, t * w);
    }
    let mut out = GridFunction::from_spectrum(*f.grid(), s);
    out.tag = f.tag.clone();
    Ok(out)
}

/// Composite midpoint rule on `[t0, t1]`, optionally graded towards `t0`.
///
/// With grading `g ≥ 1` the nodes are `t0 + (t1 - t0) u^g` for midpoints `u`
/// of a uniform grid on `[0, 1]`, weighted by the Jacobian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeQuadrature {
    pub t0: f64,
    pub t1: f64,
    pub n_t: usize,
    #[serde(default = "one")]
    pub grading: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for TimeQuadrature {
    fn default() -> Self {
        Self { t0: 0.0, t1: 1.0, n_t: 64, grading: 1.0 }
    }
}

impl TimeQuadrature {
    pub fn new(t0: f64, t1: f64, n_t: usize) -> Result<Self> {
        Self::graded(t0, t1, n_t, 1.0)
    }

    pub fn graded(t0: f64, t1: f64, n_t: usize, grading: f64) -> Result<Self> {
        let q = Self { t0, t1, n_t, grading };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_t < 8 {
            return invalid(format!("need at least 8 time nodes, got {}", self.n_t));
        }
        if !(self.t1 > self.t0) || !self.t0.is_finite() || !self.t1.is_finite() {
            return invalid(format!("bad time interval [{}, {}]", self.t0, self.t1));
        }
        if !(self.grading >= 1.0) {
            return invalid("grading exponent must be at least 1");
        }
        Ok(())
    }

    pub fn refined(&self) -> Self {
        Self { n_t: 2 * self.n_t, ..*self }
    }

    /// `(node, weight)` pairs; weights sum to `t1 - t0`.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let len = self.t1 - self.t0;
        let h = 1.0 / self.n_t as f64;
        (0..self.n_t)
            .map(|i| {
                let u = (i as f64 + 0.5) * h;
                let g = self.grading;
                (self.t0 + len * u.powf(g), len * g * u.powf(g - 1.0) * h)
            })
            .collect()
    }
}

/// `‖S_β(t_i) f‖_p` at every node, computed in parallel.
fn node_norms(
    spectrum: &[Complex64],
    grid: &FreqGrid,
    cell_volume: f64,
    phase: &[f64],
    nodes: &[(f64, f64)],
    p: f64,
) -> Vec<f64> {
    nodes
        .par_iter()
        .map(|&(t, _)| {
            let mut s: Vec<Complex64> = spectrum
                .iter()
                .zip(phase)
                .map(|(z, w)| z * Complex64::from_polar(1.0, t * w))
                .collect();
            fft::inverse(&mut s, grid.dim, grid.n);
            lp_norm_samples(&s, cell_volume, p)
        })
        .collect()
}

fn combine_in_time(norms: &[f64], nodes: &[(f64, f64)], p: f64) -> f64 {
    if p.is_infinite() {
        return norms.iter().cloned().fold(0.0, f64::max);
    }
    let peak = norms.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let s: f64 = norms.iter().zip(nodes).map(|(v, &(_, w))| w * (v / peak).powf(p)).sum();
    peak * s.powf(1.0 / p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeNorm {
    pub value: f64,
    /// Same norm with twice as many nodes.
    pub refined_value: f64,
    pub relative_change: f64,
    /// Set when `relative_change > 1e-3`.
    pub flagged: bool,
    pub n_t: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
}

fn spacetime_value(
    spectrum: &[Complex64],
    grid: &FreqGrid,
    beta: f64,
    p: f64,
    quad: &TimeQuadrature,
) -> f64 {
    let phase = symbol(grid, beta);
    let cell = (grid.length / grid.n as f64).powi(grid.dim as i32);
    let nodes = quad.nodes();
    let norms = node_norms(spectrum, grid, cell, &phase, &nodes, p);
    combine_in_time(&norms, &nodes, p)
}

fn spacetime_from_spectrum(
    spectrum: &[Complex64],
    grid: &FreqGrid,
    beta: f64,
    p: f64,
    quad: &TimeQuadrature,
) -> SpaceTimeNorm {
    let value = spacetime_value(spectrum, grid, beta, p, quad);
    let refined_value = spacetime_value(spectrum, grid, beta, p, &quad.refined());
    let relative_change = if value == 0.0 && refined_value == 0.0 {
        0.0
    } else {
        (value - refined_value).abs() / value.abs().max(refined_value.abs())
    };
    SpaceTimeNorm {
        value,
        refined_value,
        relative_change,
        flagged: relative_change > 1e-3,
        n_t: quad.n_t,
        n: grid.n,
        length: grid.length,
    }
}

/// `‖S_β(t) f‖_{L^p(I × box)}`; `p = ∞` takes the maximum over nodes and grid points.
pub fn spacetime_norm(
    f: &GridFunction,
    beta: f64,
    p: f64,
    quad: &TimeQuadrature,
) -> Result<SpaceTimeNorm> {
    check_beta(beta)?;
    quad.validate()?;
    if p.is_nan() || p < 1.0 {
        return invalid(format!("p must lie in [1, ∞], got {p}"));
    }
    Ok(spacetime_from_spectrum(&f.spectrum(), f.grid(), beta, p, quad))
}

/// Which frequency window the multiplier probe packs its test function into.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "window", rename_all = "snake_case")]
pub enum ProbeWindow {
    /// Unit ball around `k`.
    Unit,
    /// The α-window at `k`, packed into its inner ball.
    Alpha { alpha: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplierProbe {
    pub k: Vec<i64>,
    pub t: f64,
    pub ratio: f64,
    pub envelope: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
}

const PROBE_MAX_N_1D: usize = 1 << 16;
const PROBE_MAX_N_2D: usize = 1 << 11;

/// `‖S_β(t) u‖_p / ‖u‖_p` for a smooth packet `u` filling one window at `k`.
///
/// The box is sized from the dispersion of the packet so the evolved packet
/// does not wrap around; the grid is baseband-shifted to the window center.
pub fn multiplier_bound_probe(
    k: &[i64],
    beta: f64,
    p: f64,
    t: f64,
    window: ProbeWindow,
) -> Result<MultiplierProbe> {
    check_beta(beta)?;
    let d = k.len();
    if d == 0 || d > 2 {
        return invalid(format!("lattice point must have 1 or 2 components, got {d}"));
    }
    if p.is_nan() || p < 1.0 {
        return invalid(format!("p must lie in [1, ∞], got {p}"));
    }
    let kf: Vec<f64> = k.iter().map(|&x| x as f64).collect();
    let (center, radius, envelope) = match window {
        ProbeWindow::Unit => {
            let kn = norm(&kf);
            let env = if kn == 0.0 { 1.0 } else { bracket(&[t * kn.powf(beta - 2.0)]) };
            (kf.clone(), 1.0, env)
        }
        ProbeWindow::Alpha { alpha } => {
            let params = AlphaParams::new(alpha, d)?;
            let spec = window_geometry(k, &params);
            (spec.center.clone(), spec.inner_radius, bracket(&[t]))
        }
    };
    let gap = (0.5 - recip(p)).abs() * d as f64;
    let envelope = envelope.powf(gap);

    // largest second derivative of |ξ|^β over the packet support sets the spread
    let cn = norm(&center);
    let lo = (cn - radius).max(0.0);
    let hi = cn + radius;
    let curvature = |r: f64| {
        if r == 0.0 {
            0.0
        } else {
            beta * (beta - 1.0).abs().max(1.0) * r.powf(beta - 2.0)
        }
    };
    let c_max = curvature(lo.max(radius * 1e-3)).max(curvature(hi));
    let spread = 2.0 * radius * t.abs() * c_max;
    let packet_width = 40.0 / radius;
    let length = (4.0 * (spread + packet_width)).max(16.0 / radius);
    let length = length.log2().ceil().exp2();
    let needed_n = (1.3 * radius * length / std::f64::consts::PI).ceil() as usize;
    let n = needed_n.next_power_of_two().max(16);
    let cap = if d == 1 { PROBE_MAX_N_1D } else { PROBE_MAX_N_2D };
    if n > cap {
        return invalid(format!("probe needs N={n} points per axis, above the limit {cap}"));
    }
    let mut shift = [0.0; 2];
    shift[..d].copy_from_slice(&center);
    let grid = FreqGrid::new(d, n, length)?.with_shift(shift);
    let u = GridFunction::from_continuous_spectrum(grid, |xi| {
        let r: f64 = xi.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        Complex64::new(bump(r / radius), 0.0)
    });
    let before = lp_norm_samples(u.samples(), u.cell_volume(), p);
    let after = propagate(&u, beta, t)?;
    let ratio = lp_norm_samples(after.samples(), after.cell_volume(), p) / before;
    Ok(MultiplierProbe { k: k.to_vec(), t, ratio, envelope, n, length })
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    L2,
    Lp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecouplingResult {
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub cubes: usize,
}

/// Compares `‖S_β(t) v‖_{L^p([0, λ^β] × box)}` with the `ℓ^r` sum over
/// frequency cubes of side about `λ^{-β/2}` tiling `[-1, 1]^d`.
///
/// The cube count per axis is `⌈λ^{β/2}⌉`, so `λ = 1` is a single cube.
pub fn decoupling_probe(
    v: &GridFunction,
    beta: f64,
    p: f64,
    lambda: f64,
    flavor: Flavor,
    n_t: usize,
) -> Result<DecouplingResult> {
    check_beta(beta)?;
    if !(lambda >= 1.0 && lambda.is_finite()) {
        return invalid(format!("lambda must be at least 1, got {lambda}"));
    }
    if p.is_nan() || p < 1.0 {
        return invalid(format!("p must lie in [1, ∞], got {p}"));
    }
    let grid = *v.grid();
    if grid.shift != [0.0, 0.0] {
        return invalid("decoupling probe expects an unshifted grid");
    }
    let spectrum = v.spectrum();
    let peak = spectrum.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let d = grid.dim;
    for (i, z) in spectrum.iter().enumerate() {
        let r = grid.frequency_norm(i);
        if z.norm() > 1e-10 * peak && !(0.5 - 1e-12..=1.0 + 1e-12).contains(&r) {
            return invalid("spectrum must lie in the annulus 1/2 ≤ |ξ| ≤ 1");
        }
    }
    let per_axis = lambda.powf(beta / 2.0).ceil().max(1.0) as usize;
    let side = 2.0 / per_axis as f64;
    if side / grid.spacing() < 4.0 && lambda > 1.0 {
        return invalid(format!(
            "cube side {side:.4} holds fewer than 4 samples at spacing {:.4}",
            grid.spacing()
        ));
    }
    let cube_of = |xi: f64| ((xi + 1.0) / side).floor().clamp(0.0, per_axis as f64 - 1.0) as usize;
    let n_cubes = per_axis.pow(d as u32);
    let mut pieces: Vec<Vec<Complex64>> = Vec::new();
    let mut owner = vec![usize::MAX; n_cubes];
    for (i, z) in spectrum.iter().enumerate() {
        if z.norm() <= 1e-14 * peak {
            continue;
        }
        let f = grid.frequency(i);
        let c = if d == 1 { cube_of(f[0]) } else { cube_of(f[0]) * per_axis + cube_of(f[1]) };
        if owner[c] == usize::MAX {
            owner[c] = pieces.len();
            pieces.push(vec![Complex64::new(0.0, 0.0); spectrum.len()]);
        }
        pieces[owner[c]][i] = *z;
    }
    if lambda > 1.0 && pieces.len() < 2 {
        return invalid("fewer than two nonempty frequency cubes");
    }
    let quad = TimeQuadrature::new(0.0, lambda.powf(beta), n_t)?;
    let lhs = spacetime_value(&spectrum, &grid, beta, p, &quad);
    let piece_norms: Vec<f64> = pieces
        .iter()
        .map(|s| spacetime_value(s, &grid, beta, p, &quad))
        .collect();
    let r = match flavor {
        Flavor::L2 => 2.0,
        Flavor::Lp => p,
    };
    let rhs = lq_combine(&piece_norms, r);
    Ok(DecouplingResult { lambda, lhs, rhs, ratio: lhs / rhs, cubes: pieces.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::lp_norm;

    fn gaussian(n: usize, l: f64) -> GridFunction {
        GridFunction::from_fn(1, n, l, |x| Complex64::new((-0.5 * x[0] * x[0]).exp(), 0.0)).unwrap()
    }

    #[test]
    fn identity_and_isometry() {
        let f = gaussian(512, 40.0);
        let g = propagate(&f, 0.5, 0.0).unwrap();
        assert!(g.sub(&f).unwrap().max_abs() < 1e-12);
        let g = propagate(&f, 4.0, 0.7).unwrap();
        let (a, b) = (lp_norm(&f, 2.0).unwrap(), lp_norm(&g, 2.0).unwrap());
        assert!((a - b).abs() < 1e-10 * a);
        assert!(propagate(&f, 0.0, 1.0).is_err());
    }

    #[test]
    fn gaussian_oracle() {
        let f = gaussian(2048, 40.0);
        for t in [0.1, 0.5, 1.0] {
            let g = propagate(&f, 2.0, t).unwrap();
            let a = Complex64::new(1.0, -2.0 * t);
            let exact = GridFunction::from_fn(1, 2048, 40.0, |x| {
                (-(x[0] * x[0]) / (2.0 * a)).exp() / a.sqrt()
            })
            .unwrap();
            assert!(g.sub(&exact).unwrap().max_abs() < 1e-6);
            let sup = (1.0 + 4.0 * t * t).powf(-0.25);
            assert!((g.max_abs() - sup).abs() < 1e-6);
        }
    }

    #[test]
    fn group_law() {
        let f = gaussian(256, 30.0).modulated([2.0, 0.0]);
        let a = propagate(&propagate(&f, 1.5, 0.3).unwrap(), 1.5, 0.4).unwrap();
        let b = propagate(&f, 1.5, 0.7).unwrap();
        assert!(a.sub(&b).unwrap().max_abs() < 1e-10 * f.max_abs());
    }

    #[test]
    fn quadrature_nodes() {
        let q = TimeQuadrature::graded(0.0, 8.0, 16, 2.0).unwrap();
        let nodes = q.nodes();
        let w: f64 = nodes.iter().map(|n| n.1).sum();
        assert!((w - 8.0).abs() < 0.1);
        assert!(nodes.iter().all(|&(t, _)| t > 0.0 && t < 8.0));
        assert!(TimeQuadrature::new(0.0, 1.0, 4).is_err());
        assert!(TimeQuadrature::new(1.0, 1.0, 8).is_err());
    }

    #[test]
    fn spacetime_isometry_and_sup() {
        let f = gaussian(1024, 60.0);
        let q = TimeQuadrature::default();
        let st = spacetime_norm(&f, 2.0, 2.0, &q).unwrap();
        assert!((st.value - lp_norm(&f, 2.0).unwrap()).abs() < 1e-8);
        let st = spacetime_norm(&f, 2.0, f64::INFINITY, &q).unwrap();
        let t0 = q.nodes()[0].0;
        assert!((st.value - (1.0 + 4.0 * t0 * t0).powf(-0.25)).abs() < 1e-6);
        let z = GridFunction::zeros(*f.grid());
        assert_eq!(spacetime_norm(&z, 2.0, 3.0, &q).unwrap().value, 0.0);
    }

    #[test]
    fn probe_isometry_and_trivial_envelope() {
        let pr = multiplier_bound_probe(&[8], 4.0, 2.0, 1.0, ProbeWindow::Unit).unwrap();
        assert!((pr.ratio - 1.0).abs() < 1e-10);
        assert!(pr.envelope >= 1.0);
        let pr = multiplier_bound_probe(&[0], 4.0, f64::INFINITY, 1.0, ProbeWindow::Unit).unwrap();
        assert_eq!(pr.envelope, 1.0);
    }

    #[test]
    fn one_cube_is_exact() {
        let grid = FreqGrid::new(1, 256, 256.0).unwrap();
        let v = GridFunction::from_continuous_spectrum(grid, |xi| {
            Complex64::new(bump((xi[0].abs() - 0.75) / 0.25), 0.0)
        });
        let r = decoupling_probe(&v, 2.0, 6.0, 1.0, Flavor::L2, 16).unwrap();
        assert_eq!(r.cubes, 1);
        assert!((r.ratio - 1.0).abs() < 1e-14);
    }
}
