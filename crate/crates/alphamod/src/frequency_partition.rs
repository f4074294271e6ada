//! α-coverings, α-BAPU window families and dyadic Littlewood–Paley windows
//! sampled on a discrete frequency grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, numeric, Result};
use crate::spaces::{FreqGrid, GridFunction};

/// `⟨x⟩ = (1 + |x|²)^{1/2}`.
pub fn bracket(x: &[f64]) -> f64 {
    (1.0 + x.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

fn euclid(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Smooth compactly supported profile `exp(1 - 1/(1 - t²))` on `|t| < 1`,
/// normalized to peak 1 at `t = 0`.
#[inline]
pub fn bump(t: f64) -> f64 {
    let t2 = t * t;
    if t2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t2)).exp()
    }
}

/// Radial cut-off equal to 1 on `r ≤ 1` and 0 on `r ≥ 2`, smooth in between.
#[inline]
pub fn smooth_cutoff(r: f64) -> f64 {
    if r <= 1.0 {
        return 1.0;
    }
    if r >= 2.0 {
        return 0.0;
    }
    let h = |t: f64| (-1.0 / t).exp();
    let a = h(2.0 - r);
    a / (a + h(r - 1.0))
}

/// Parameters of an α-covering: `alpha < 1` and the covering exponent
/// `beta_exp = alpha / (1 - alpha)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaParams {
    pub alpha: f64,
    pub beta_exp: f64,
    pub dim: usize,
}

impl AlphaParams {
    pub fn new(alpha: f64, dim: usize) -> Result<Self> {
        if !alpha.is_finite() || alpha >= 1.0 {
            return invalid(format!("alpha must be < 1, got {alpha}"));
        }
        if dim == 0 {
            return invalid("dimension must be positive");
        }
        Ok(Self { alpha, beta_exp: alpha / (1.0 - alpha), dim })
    }
}

/// Inner radius factor: windows are bounded below on `|ξ - center| < 3/4 · scale`.
pub const INNER_FACTOR: f64 = 0.75;

/// Outer radius factor for covering exponent `beta_exp`.
///
/// 3/2 for `beta_exp ≤ 1`. Consecutive centers `⟨k⟩^b k` drift apart like
/// `(b + 1)|k|^b`, so for faster-growing coverings the support radius grows
/// with `b` to keep neighbouring balls overlapping.
pub fn outer_factor(beta_exp: f64) -> f64 {
    0.75 * (beta_exp + 1.0).max(2.0)
}

/// `δ_e(x) = |x|^e x`, with `δ_e(0) = 0`.
pub fn delta_map(x: &[f64], exponent: f64) -> Vec<f64> {
    let r = euclid(x);
    if r == 0.0 {
        return vec![0.0; x.len()];
    }
    let s = r.powf(exponent);
    x.iter().map(|v| v * s).collect()
}

/// Exponent `e' = -e/(1+e)` with `δ_{e'} = δ_e^{-1}`.
pub fn inverse_delta_exponent(exponent: f64) -> f64 {
    -exponent / (1.0 + exponent)
}

/// Geometry of the window attached to lattice point `index`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub index: Vec<i64>,
    pub center: Vec<f64>,
    pub scale: f64,
    pub inner_radius: f64,
    pub outer_radius: f64,
}

/// Center, scale and radii of window `k`.
///
/// For `alpha ≥ 0` the center is `⟨k⟩^b k`; for `alpha < 0` it is `δ_b(k) = |k|^b k`.
/// The scale is `⟨k⟩^b` in both cases, which keeps `k = 0` regular when `b < 0`.
pub fn window_geometry(k: &[i64], params: &AlphaParams) -> WindowSpec {
    let kf: Vec<f64> = k.iter().map(|&v| v as f64).collect();
    let b = params.beta_exp;
    let scale = bracket(&kf).powf(b);
    let center = if params.alpha >= 0.0 {
        kf.iter().map(|v| v * scale).collect()
    } else {
        delta_map(&kf, b)
    };
    WindowSpec {
        index: k.to_vec(),
        center,
        scale,
        inner_radius: INNER_FACTOR * scale,
        outer_radius: outer_factor(b) * scale,
    }
}

/// A real frequency profile on a grid, stored on its support only.
#[derive(Clone, Debug)]
pub struct Profile {
    pub grid: FreqGrid,
    pub support: Vec<usize>,
    pub values: Vec<f64>,
}

impl Profile {
    /// Wraps a dense profile given in FFT order.
    pub fn dense(grid: FreqGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return invalid(format!(
                "window has {} samples but the grid has {}",
                values.len(),
                grid.len()
            ));
        }
        let (support, values) =
            values.into_iter().enumerate().filter(|(_, v)| *v != 0.0).unzip();
        Ok(Self { grid, support, values })
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (&i, &v) in self.support.iter().zip(&self.values) {
            out[i] = v;
        }
        out
    }

    /// Multiplies a spectrum (FFT order) by this profile.
    pub fn apply_to_spectrum(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); spectrum.len()];
        for (&i, &v) in self.support.iter().zip(&self.values) {
            out[i] = spectrum[i] * v;
        }
        out
    }
}

/// `F^{-1}(window · F f)`.
pub fn apply_window(f: &GridFunction, window: &Profile) -> Result<GridFunction> {
    if !f.grid().matches(&window.grid) {
        return invalid("window is sampled on a different grid than the function");
    }
    let spec = window.apply_to_spectrum(&f.spectrum());
    Ok(GridFunction::from_spectrum(*f.grid(), spec))
}

/// One member of an α-BAPU.
#[derive(Clone, Debug)]
pub struct Window {
    pub spec: WindowSpec,
    pub profile: Profile,
}

/// Bounded admissible partition of unity on a frequency grid.
#[derive(Clone, Debug)]
pub struct Bapu {
    pub params: AlphaParams,
    pub grid: FreqGrid,
    /// Half-width of the covered cube around the grid shift.
    pub band: f64,
    /// Frequencies with `|ξ|` below this radius are outside the covered region.
    pub hole: f64,
    pub windows: Vec<Window>,
    /// Measured `max_k sup_ξ |∂η_k(ξ)| · scale_k`.
    pub derivative_bound_constant: f64,
    /// Measured `C_g` with `⟨ξ⟩^{αd} / |supp η_k| ∈ [1/C_g, C_g]` on every support.
    pub geometry_constant: f64,
    /// Measured range of `⟨ξ⟩^{αd} / |supp η_k|`.
    pub geometry_range: (f64, f64),
    overlap: usize,
}

fn ball_volume(dim: usize, r: f64) -> f64 {
    match dim {
        1 => 2.0 * r,
        2 => std::f64::consts::PI * r * r,
        d => {
            // Γ-free recursion V_d = V_{d-2} · 2π/d
            let mut v = if d % 2 == 0 { 1.0 } else { 2.0 };
            let mut k = if d % 2 == 0 { 2 } else { 3 };
            while k <= d {
                v *= 2.0 * std::f64::consts::PI / k as f64;
                k += 2;
            }
            v * r.powi(d as i32)
        }
    }
}

/// Builds the α-BAPU covering the whole grid band.
pub fn build_bapu(params: AlphaParams, grid: FreqGrid) -> Result<Bapu> {
    build_bapu_with_band(params, grid, grid.half_band())
}

/// Builds the α-BAPU covering the cube `shift ± band` of the grid.
pub fn build_bapu_with_band(params: AlphaParams, grid: FreqGrid, band: f64) -> Result<Bapu> {
    build_bapu_on_shell(params, grid, band, 0.0)
}

/// Like [`build_bapu_with_band`] but leaves out the ball `|ξ| < hole`, so
/// spectra living on a far annulus do not pay for the fine windows near 0.
pub fn build_bapu_on_shell(params: AlphaParams, grid: FreqGrid, band: f64, hole: f64) -> Result<Bapu> {
    if !(hole >= 0.0) {
        return invalid(format!("hole radius must be nonnegative, got {hole}"));
    }
    if params.dim != grid.dim {
        return invalid(format!(
            "alpha parameters are for d={} but the grid has d={}",
            params.dim, grid.dim
        ));
    }
    if !(band > 0.0) || band > grid.half_band() * (1.0 + 1e-12) {
        return invalid(format!(
            "band {band} must be positive and inside the grid half-band {}",
            grid.half_band()
        ));
    }
    let specs: Vec<WindowSpec> = active_windows(&params, &grid, band)
        .into_iter()
        .filter(|s| euclid(&s.center) + s.outer_radius > hole)
        .collect();
    if specs.is_empty() {
        return numeric("no window meets the band");
    }
    let h = grid.spacing();
    let finest = specs.iter().map(|s| s.inner_radius).fold(f64::INFINITY, f64::min);
    if finest < 4.0 * h {
        return invalid(format!(
            "grid too coarse: smallest inner radius {finest:.4} spans fewer than 4 samples of width {h:.4}"
        ));
    }

    let dim = grid.dim;
    let mut total = vec![0.0f64; grid.len()];
    let mut raw: Vec<Profile> = Vec::with_capacity(specs.len());
    for s in &specs {
        let c = [s.center[0], if dim == 2 { s.center[1] } else { 0.0 }];
        let mut support = Vec::new();
        let mut values = Vec::new();
        for idx in grid.indices_near(c, s.outer_radius) {
            let f = grid.frequency(idx);
            let r = ((f[0] - c[0]).powi(2) + (f[1] - c[1]).powi(2)).sqrt();
            let v = bump(r / s.outer_radius);
            if v > 0.0 {
                support.push(idx);
                values.push(v);
                total[idx] += v;
            }
        }
        raw.push(Profile { grid, support, values });
    }

    // every grid point of the band must be reached by some window
    for (idx, &t) in total.iter().enumerate() {
        if t == 0.0 && in_region(&grid, idx, band, hole) {
            let f = grid.frequency(idx);
            return numeric(format!("covering leaves frequency {:?} uncovered", &f[..dim]));
        }
    }

    let mut counts = vec![0usize; grid.len()];
    let mut deriv = 0.0f64;
    let (mut gmin, mut gmax) = (f64::INFINITY, 0.0f64);
    let mut windows = Vec::with_capacity(specs.len());
    for (spec, mut prof) in specs.into_iter().zip(raw) {
        for (i, v) in prof.support.iter().zip(prof.values.iter_mut()) {
            *v /= total[*i];
            counts[*i] += 1;
        }
        let vol = ball_volume(dim, spec.outer_radius);
        for &i in &prof.support {
            let f = grid.frequency(i);
            let g = bracket(&f[..dim]).powf(params.alpha * dim as f64) / vol;
            gmin = gmin.min(g);
            gmax = gmax.max(g);
        }
        deriv = deriv.max(max_slope(&grid, &prof) * spec.scale);
        windows.push(Window { spec, profile: prof });
    }
    let overlap = counts.into_iter().max().unwrap_or(0);
    Ok(Bapu {
        params,
        grid,
        band,
        hole,
        windows,
        derivative_bound_constant: deriv,
        geometry_constant: gmax.max(1.0 / gmin),
        geometry_range: (gmin, gmax),
        overlap,
    })
}

fn in_region(grid: &FreqGrid, idx: usize, band: f64, hole: f64) -> bool {
    let r = grid.relative_frequency(idx);
    r[..grid.dim].iter().all(|v| v.abs() <= band * (1.0 + 1e-12))
        && (hole == 0.0 || grid.frequency_norm(idx) >= hole)
}

/// Largest finite-difference slope along the last axis inside the support.
fn max_slope(grid: &FreqGrid, prof: &Profile) -> f64 {
    let h = grid.spacing();
    let last = grid.dim - 1;
    let mut m = 0.0f64;
    for w in 0..prof.support.len().saturating_sub(1) {
        let (a, b) = (prof.support[w], prof.support[w + 1]);
        let fa = grid.relative_frequency(a);
        let fb = grid.relative_frequency(b);
        let same_row = grid.dim == 1 || (fa[0] - fb[0]).abs() < 0.5 * h;
        if same_row && ((fb[last] - fa[last]) - h).abs() < 0.5 * h {
            m = m.max((prof.values[w + 1] - prof.values[w]).abs() / h);
        }
    }
    // the support edge drops to zero
    if let (Some(&first), Some(&last_v)) = (prof.values.first(), prof.values.last()) {
        m = m.max(first / h).max(last_v / h);
    }
    m
}

/// Window specs whose outer ball meets the cube `shift ± band`.
fn active_windows(params: &AlphaParams, grid: &FreqGrid, band: f64) -> Vec<WindowSpec> {
    let dim = grid.dim;
    let shift = &grid.shift[..dim];
    let far = euclid(shift) + band * (dim as f64).sqrt();
    // |center_k| - outer_k increases with |k|: find the radial cut-off
    let mut kmax: i64 = 1;
    loop {
        let s = window_geometry(&vec![kmax; 1], &AlphaParams { dim: 1, ..*params });
        if euclid(&s.center) - s.outer_radius > far && kmax > 4 {
            break;
        }
        kmax = if kmax < 64 { kmax + 1 } else { kmax + kmax / 8 };
    }
    let meets = |s: &WindowSpec| -> bool {
        let mut d2 = 0.0;
        for a in 0..dim {
            let lo = shift[a] - band;
            let hi = shift[a] + band;
            let c = s.center[a];
            let e = if c < lo {
                lo - c
            } else if c > hi {
                c - hi
            } else {
                0.0
            };
            d2 += e * e;
        }
        d2.sqrt() < s.outer_radius
    };
    let mut out = Vec::new();
    match dim {
        1 => {
            for k in -kmax..=kmax {
                let s = window_geometry(&[k], params);
                if meets(&s) {
                    out.push(s);
                }
            }
        }
        _ => {
            for k0 in -kmax..=kmax {
                for k1 in -kmax..=kmax {
                    let s = window_geometry(&[k0, k1], params);
                    if meets(&s) {
                        out.push(s);
                    }
                }
            }
        }
    }
    out
}

impl Bapu {
    /// Degenerate family with one window equal to 1 on the whole grid.
    pub fn single_window(params: AlphaParams, grid: FreqGrid) -> Bapu {
        let spec = window_geometry(&vec![0; grid.dim], &params);
        let profile = Profile::dense(grid, vec![1.0; grid.len()]).expect("length matches the grid");
        Bapu {
            params,
            grid,
            band: grid.half_band(),
            hole: 0.0,
            windows: vec![Window { spec, profile }],
            derivative_bound_constant: 0.0,
            geometry_constant: 1.0,
            geometry_range: (1.0, 1.0),
            overlap: 1,
        }
    }

    /// Largest number of strictly positive windows at any grid frequency.
    pub fn overlap_count(&self) -> usize {
        self.overlap
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// `Σ_k η_k(ξ)` at every grid frequency.
    pub fn partition_sum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.grid.len()];
        for w in &self.windows {
            for (&i, &v) in w.profile.support.iter().zip(&w.profile.values) {
                s[i] += v;
            }
        }
        s
    }

    /// Largest `|Σ_k η_k - 1|` over the band.
    pub fn partition_error(&self) -> f64 {
        self.partition_sum()
            .iter()
            .enumerate()
            .filter(|(i, _)| in_region(&self.grid, *i, self.band, self.hole))
            .map(|(_, s)| (s - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Whether flat index `idx` lies in the covered region.
    pub fn covers(&self, idx: usize) -> bool {
        in_region(&self.grid, idx, self.band, self.hole)
    }

    /// Window with lattice index `k`, if active.
    pub fn window(&self, k: &[i64]) -> Option<&Window> {
        self.windows.iter().find(|w| w.spec.index == k)
    }

    /// For `alpha < 0`: `max_k |δ_{b'}(δ_b(k)) - k|` over active windows.
    pub fn delta_inversion_error(&self) -> Option<f64> {
        if self.params.alpha >= 0.0 {
            return None;
        }
        let inv = inverse_delta_exponent(self.params.beta_exp);
        let mut worst = 0.0f64;
        for w in &self.windows {
            let back = delta_map(&w.spec.center, inv);
            for (b, &k) in back.iter().zip(&w.spec.index) {
                worst = worst.max((b - k as f64).abs());
            }
        }
        Some(worst)
    }

    pub fn metadata(&self) -> BapuMetadata {
        BapuMetadata {
            alpha: self.params.alpha,
            beta_exp: self.params.beta_exp,
            d: self.grid.dim,
            n: self.grid.n,
            length: self.grid.length,
            shift: self.grid.shift,
            band: self.band,
            hole: self.hole,
            inner_factor: INNER_FACTOR,
            outer_factor: outer_factor(self.params.beta_exp),
            indices: self.windows.iter().map(|w| w.spec.index.clone()).collect(),
            centers: self.windows.iter().map(|w| w.spec.center.clone()).collect(),
            scales: self.windows.iter().map(|w| w.spec.scale).collect(),
            overlap_count: self.overlap,
            derivative_bound_constant: self.derivative_bound_constant,
            geometry_constant: self.geometry_constant,
        }
    }

    /// Dense window samples, one window after another in FFT order, as little-endian f64.
    pub fn samples_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.windows.len() * self.grid.len() * 8);
        for w in &self.windows {
            for v in w.profile.to_dense() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }
}

/// JSON companion of the binary window dump.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BapuMetadata {
    pub alpha: f64,
    pub beta_exp: f64,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
    pub shift: [f64; 2],
    pub band: f64,
    pub hole: f64,
    pub inner_factor: f64,
    pub outer_factor: f64,
    pub indices: Vec<Vec<i64>>,
    pub centers: Vec<Vec<f64>>,
    pub scales: Vec<f64>,
    pub overlap_count: usize,
    pub derivative_bound_constant: f64,
    pub geometry_constant: f64,
}

/// Dyadic windows `φ_0, …, φ_J` on a grid.
#[derive(Clone, Debug)]
pub struct DyadicWindows {
    pub grid: FreqGrid,
    pub levels: usize,
    pub profiles: Vec<Profile>,
}

impl DyadicWindows {
    pub fn partition_error(&self) -> f64 {
        let mut s = vec![0.0; self.grid.len()];
        for p in &self.profiles {
            for (&i, &v) in p.support.iter().zip(&p.values) {
                s[i] += v;
            }
        }
        s.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// `φ_j(ξ) = ψ(2^{-j}ξ) - ψ(2^{1-j}ξ)` for `1 ≤ j ≤ J` and `φ_0 = 1 - Σ_{j≥1} φ_j`,
/// with `J` the first level where `2^J` exceeds every grid frequency, so that
/// `φ_0 = ψ` and each `φ_j` sits in `2^{j-1} ≤ |ξ| ≤ 2^{j+1}`.
pub fn dyadic_windows(grid: FreqGrid) -> DyadicWindows {
    let rmax = (0..grid.len()).map(|i| grid.frequency_norm(i)).fold(0.0, f64::max);
    let mut levels = 1usize;
    while (2.0f64).powi(levels as i32) < rmax {
        levels += 1;
    }
    build_dyadic(grid, levels)
}

/// Dyadic family with an explicit top level `J`. The band must reach `2^{J+1}`
/// so the top window is fully resolved; `φ_0` still absorbs whatever lies
/// beyond `2^{J+1}`, keeping the sum exact.
pub fn dyadic_windows_with_levels(grid: FreqGrid, levels: usize) -> Result<DyadicWindows> {
    if levels == 0 {
        return invalid("at least one dyadic level is required");
    }
    let need = (2.0f64).powi(levels as i32 + 1);
    if grid.half_band() < need {
        return invalid(format!(
            "band {:.4} is smaller than 2^(J+1) = {need} for J = {levels}",
            grid.half_band()
        ));
    }
    Ok(build_dyadic(grid, levels))
}

fn build_dyadic(grid: FreqGrid, levels: usize) -> DyadicWindows {
    let norms: Vec<f64> = (0..grid.len()).map(|i| grid.frequency_norm(i)).collect();
    let mut dense: Vec<Vec<f64>> = Vec::with_capacity(levels + 1);
    let mut rest = vec![1.0; grid.len()];
    for j in 1..=levels {
        let a = (2.0f64).powi(-(j as i32));
        let b = 2.0 * a;
        let phi: Vec<f64> =
            norms.iter().map(|&r| smooth_cutoff(a * r) - smooth_cutoff(b * r)).collect();
        for (r, p) in rest.iter_mut().zip(&phi) {
            *r -= p;
        }
        dense.push(phi);
    }
    dense.insert(0, rest);
    let profiles = dense
        .into_iter()
        .map(|v| Profile::dense(grid, v).expect("length matches the grid"))
        .collect();
    DyadicWindows { grid, levels, profiles }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid_for_band(n: usize, band: f64) -> FreqGrid {
        FreqGrid::new(1, n, PI * n as f64 / band).unwrap()
    }

    #[test]
    fn bracket_values() {
        assert_eq!(bracket(&[0.0]), 1.0);
        assert!((bracket(&[1.0]) - 2f64.sqrt()).abs() < 1e-15);
        assert!((bracket(&[3.0, 4.0]) - 26f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn geometry_examples() {
        let s = window_geometry(&[5], &AlphaParams::new(0.0, 1).unwrap());
        assert_eq!(s.center, vec![5.0]);
        assert_eq!(s.scale, 1.0);
        let s = window_geometry(&[3], &AlphaParams::new(0.5, 1).unwrap());
        assert!((s.center[0] - 3.0 * 10f64.sqrt()).abs() < 1e-12);
        assert!((s.scale - 10f64.sqrt()).abs() < 1e-12);
        let s = window_geometry(&[4], &AlphaParams::new(-1.0, 1).unwrap());
        assert!((s.scale - 17f64.powf(-0.25)).abs() < 1e-12);
        assert!(s.inner_radius < s.outer_radius);
    }

    #[test]
    fn rejects_alpha_at_least_one() {
        assert!(AlphaParams::new(1.0, 1).is_err());
        assert!(AlphaParams::new(1.5, 1).is_err());
        let p = AlphaParams::new(-1.0, 1).unwrap();
        assert!(p.beta_exp > -1.0 && p.beta_exp < 0.0);
    }

    #[test]
    fn alpha_zero_partition() {
        let grid = grid_for_band(512, 8.0);
        let b = build_bapu(AlphaParams::new(0.0, 1).unwrap(), grid).unwrap();
        assert!(b.partition_error() < 1e-10);
        assert!((15..=21).contains(&b.len()), "{} windows", b.len());
        assert!(b.overlap_count() <= 3);
        for w in &b.windows {
            assert!(w.profile.values.iter().all(|&v| (0.0..=1.0 + 1e-12).contains(&v)));
        }
    }

    #[test]
    fn coarse_grid_rejected() {
        let grid = grid_for_band(16, 8.0);
        assert!(build_bapu(AlphaParams::new(0.0, 1).unwrap(), grid).is_err());
    }

    #[test]
    fn negative_alpha_inverts_delta() {
        let grid = grid_for_band(1024, 8.0);
        let b = build_bapu(AlphaParams::new(-1.0, 1).unwrap(), grid).unwrap();
        assert!(b.partition_error() < 1e-10);
        assert!(b.delta_inversion_error().unwrap() < 1e-10);
    }

    #[test]
    fn support_containment() {
        let grid = grid_for_band(1024, 20.0);
        let b = build_bapu(AlphaParams::new(0.5, 1).unwrap(), grid).unwrap();
        for w in &b.windows {
            for &i in &w.profile.support {
                let f = grid.frequency(i)[0];
                assert!((f - w.spec.center[0]).abs() <= w.spec.outer_radius);
            }
        }
    }

    #[test]
    fn two_dimensional_partition() {
        let grid = FreqGrid::new(2, 64, PI * 64.0 / 6.0).unwrap();
        let b = build_bapu(AlphaParams::new(0.0, 2).unwrap(), grid).unwrap();
        assert!(b.partition_error() < 1e-10);
    }

    #[test]
    fn shell_partition_skips_the_core() {
        let grid = grid_for_band(256, 64.0);
        assert!(build_bapu(AlphaParams::new(0.75, 1).unwrap(), grid).is_err());
        let b = build_bapu_on_shell(AlphaParams::new(0.75, 1).unwrap(), grid, 60.0, 20.0).unwrap();
        assert!(b.partition_error() < 1e-12);
        assert!(!b.covers(0));
    }

    #[test]
    fn shifted_band_partition() {
        let grid = grid_for_band(256, 4.0).with_shift([500.0, 0.0]);
        let b = build_bapu(AlphaParams::new(0.5, 1).unwrap(), grid).unwrap();
        assert!(b.partition_error() < 1e-10);
        assert!(b.len() <= 3);
    }

    #[test]
    fn dyadic_identity_and_supports() {
        let grid = grid_for_band(512, 40.0);
        let d = dyadic_windows(grid);
        assert!(d.partition_error() < 1e-12);
        for (j, p) in d.profiles.iter().enumerate() {
            for &i in &p.support {
                let r = grid.frequency_norm(i);
                if j == 0 {
                    assert!(r <= 2.0 + 1e-12);
                } else {
                    let lo = (2.0f64).powi(j as i32 - 1);
                    assert!(r >= lo - 1e-12 && r <= 4.0 * lo + 1e-12);
                }
            }
        }
    }

    #[test]
    fn dyadic_window_is_one_at_its_scale() {
        let grid = FreqGrid::new(1, 256, 2.0 * PI).unwrap();
        let d = dyadic_windows(grid);
        for j in 1..=4usize {
            let target = (2.0f64).powi(j as i32);
            let dense = d.profiles[j].to_dense();
            let idx = (0..grid.len()).find(|&i| (grid.frequency(i)[0] - target).abs() < 1e-9).unwrap();
            assert!((dense[idx] - 1.0).abs() < 1e-15);
        }
        let zero = d.profiles[0].to_dense()[0];
        assert!((zero - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dyadic_levels_need_band() {
        let grid = grid_for_band(256, 10.0);
        assert!(dyadic_windows_with_levels(grid, 4).is_err());
        let d = dyadic_windows_with_levels(grid, 2).unwrap();
        assert!(d.partition_error() < 1e-12);
    }

    #[test]
    fn apply_window_identity_and_mismatch() {
        let f = GridFunction::from_fn(1, 64, 20.0, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0)).unwrap();
        let ones = Profile::dense(*f.grid(), vec![1.0; 64]).unwrap();
        let g = apply_window(&f, &ones).unwrap();
        for (a, b) in g.samples().iter().zip(f.samples()) {
            assert!((a - b).norm() < 1e-12);
        }
        let other = Profile::dense(FreqGrid::new(1, 64, 10.0).unwrap(), vec![1.0; 64]).unwrap();
        assert!(apply_window(&f, &other).is_err());
    }

    #[test]
    fn single_window_overlap_is_one() {
        let grid = grid_for_band(64, 4.0);
        let b = Bapu::single_window(AlphaParams::new(0.0, 1).unwrap(), grid);
        assert_eq!(b.overlap_count(), 1);
        assert!(b.partition_error() < 1e-15);
    }
}
