//! Uniform periodic grids standing in for ℝ^d, and the sampled functions that live on them.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fft;

/// Frequency lattice dual to a box `[-L/2, L/2)^d` sampled with `N` points per axis.
///
/// `shift` offsets every frequency: a grid with shift `c` represents
/// functions `e^{i c·x} g(x)` whose envelope `g` is what gets sampled. This is
/// how narrow-band data at high carrier frequencies is handled without
/// resolving the carrier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreqGrid {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
    pub shift: [f64; 2],
}

impl FreqGrid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        validate_shape(dim, n, length)?;
        Ok(Self { dim, n, length, shift: [0.0; 2] })
    }

    pub fn with_shift(mut self, shift: [f64; 2]) -> Self {
        self.shift = shift;
        if self.dim == 1 {
            self.shift[1] = 0.0;
        }
        self
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Frequency step `2π/L`.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Half-width `πN/L` of the band around the shift.
    pub fn half_band(&self) -> f64 {
        PI * self.n as f64 / self.length
    }

    /// Frequency of flat index `idx`, relative to the shift.
    #[inline]
    pub fn relative_frequency(&self, idx: usize) -> [f64; 2] {
        let h = self.spacing();
        match self.dim {
            1 => [fft::signed_index(idx, self.n) as f64 * h, 0.0],
            _ => {
                let (i, j) = (idx / self.n, idx % self.n);
                [
                    fft::signed_index(i, self.n) as f64 * h,
                    fft::signed_index(j, self.n) as f64 * h,
                ]
            }
        }
    }

    /// Absolute frequency of flat index `idx`.
    #[inline]
    pub fn frequency(&self, idx: usize) -> [f64; 2] {
        let r = self.relative_frequency(idx);
        [r[0] + self.shift[0], r[1] + self.shift[1]]
    }

    /// Euclidean length of the absolute frequency at `idx`.
    #[inline]
    pub fn frequency_norm(&self, idx: usize) -> f64 {
        let f = self.frequency(idx);
        (f[0] * f[0] + f[1] * f[1]).sqrt()
    }

    /// Structural equality up to rounding in `length` and `shift`.
    pub fn matches(&self, other: &FreqGrid) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        self.dim == other.dim
            && self.n == other.n
            && close(self.length, other.length)
            && close(self.shift[0], other.shift[0])
            && close(self.shift[1], other.shift[1])
    }

    /// Flat indices whose absolute frequency lies in the axis-aligned box
    /// `center ± radius` (clipped to the grid). Used to visit only the
    /// support of a compact window.
    pub fn indices_near(&self, center: [f64; 2], radius: f64) -> Vec<usize> {
        let h = self.spacing();
        let half = (self.n / 2) as i64;
        let axis_range = |c: f64, s: f64| -> (i64, i64) {
            let lo = (((c - s) - radius) / h).ceil() as i64;
            let hi = (((c - s) + radius) / h).floor() as i64;
            (lo.max(-half), hi.min(half - 1))
        };
        let wrap = |m: i64| -> usize {
            if m < 0 {
                (m + self.n as i64) as usize
            } else {
                m as usize
            }
        };
        let (a0, b0) = axis_range(center[0], self.shift[0]);
        if a0 > b0 {
            return Vec::new();
        }
        match self.dim {
            1 => (a0..=b0).map(wrap).collect(),
            _ => {
                let (a1, b1) = axis_range(center[1], self.shift[1]);
                if a1 > b1 {
                    return Vec::new();
                }
                let mut out = Vec::with_capacity(((b0 - a0 + 1) * (b1 - a1 + 1)) as usize);
                for i in a0..=b0 {
                    for j in a1..=b1 {
                        out.push(wrap(i) * self.n + wrap(j));
                    }
                }
                out
            }
        }
    }
}

fn validate_shape(dim: usize, n: usize, length: f64) -> Result<()> {
    if dim != 1 && dim != 2 {
        return invalid(format!("dimension must be 1 or 2, got {dim}"));
    }
    if n < 2 || !n.is_power_of_two() {
        return invalid(format!("N must be a power of two >= 2, got {n}"));
    }
    if !(length > 0.0 && length.is_finite()) {
        return invalid(format!("box length must be positive, got {length}"));
    }
    Ok(())
}

/// Complex samples on the box `[-L/2, L/2)^d`, row-major with axis 0 slowest.
#[derive(Clone, Debug)]
pub struct GridFunction {
    grid: FreqGrid,
    samples: Vec<Complex64>,
    pub tag: String,
}

#[derive(Serialize, Deserialize)]
struct FileHeader {
    d: usize,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "L")]
    length: f64,
    tag: String,
    #[serde(default)]
    shift: [f64; 2],
}

impl GridFunction {
    pub fn new(dim: usize, n: usize, length: f64, samples: Vec<Complex64>) -> Result<Self> {
        let grid = FreqGrid::new(dim, n, length)?;
        Self::on_grid(grid, samples)
    }

    pub fn on_grid(grid: FreqGrid, samples: Vec<Complex64>) -> Result<Self> {
        validate_shape(grid.dim, grid.n, grid.length)?;
        if samples.len() != grid.len() {
            return invalid(format!(
                "expected {} samples for N={} d={}, got {}",
                grid.len(),
                grid.n,
                grid.dim,
                samples.len()
            ));
        }
        Ok(Self { grid, samples, tag: String::new() })
    }

    pub fn zeros(grid: FreqGrid) -> Self {
        Self { grid, samples: vec![Complex64::new(0.0, 0.0); grid.len()], tag: String::new() }
    }

    /// Samples `f` at the grid points; `f` receives the position vector.
    pub fn from_fn(
        dim: usize,
        n: usize,
        length: f64,
        f: impl Fn(&[f64]) -> Complex64,
    ) -> Result<Self> {
        let grid = FreqGrid::new(dim, n, length)?;
        let x = axis_positions(n, length);
        let samples = match dim {
            1 => x.iter().map(|&xi| f(&[xi])).collect(),
            _ => {
                let mut s = Vec::with_capacity(n * n);
                for &xi in &x {
                    for &yj in &x {
                        s.push(f(&[xi, yj]));
                    }
                }
                s
            }
        };
        Ok(Self { grid, samples, tag: String::new() })
    }

    /// Random coefficients (uniform on the unit square) on `inner ≤ |ξ - shift| ≤ outer`, zero elsewhere.
    pub fn random_band_limited(grid: FreqGrid, inner: f64, outer: f64, rng: &mut impl Rng) -> Self {
        let spectrum = (0..grid.len())
            .map(|i| {
                let r = grid.relative_frequency(i);
                let rn = r[..grid.dim].iter().map(|v| v * v).sum::<f64>().sqrt();
                let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if rn >= inner && rn <= outer {
                    z
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Self::from_spectrum(grid, spectrum).with_tag("random")
    }

    /// Builds the function whose continuous Fourier transform
    /// `∫ f(x) e^{-ix·ξ} dx` equals `hat(ξ)` at every absolute grid frequency.
    pub fn from_continuous_spectrum(grid: FreqGrid, hat: impl Fn(&[f64]) -> Complex64) -> Self {
        let dx = grid.length / grid.n as f64;
        let norm = dx.powi(grid.dim as i32);
        let mut spec: Vec<Complex64> = (0..grid.len())
            .map(|idx| {
                let f = grid.frequency(idx);
                hat(&f[..grid.dim]) * center_phase(&grid, idx) / norm
            })
            .collect();
        fft::inverse(&mut spec, grid.dim, grid.n);
        Self { grid, samples: spec, tag: String::new() }
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    pub fn grid(&self) -> &FreqGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn length(&self) -> f64 {
        self.grid.length
    }

    pub fn shift(&self) -> [f64; 2] {
        self.grid.shift
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    /// Grid step `L/N`.
    pub fn dx(&self) -> f64 {
        self.grid.length / self.grid.n as f64
    }

    /// Volume `(L/N)^d` of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.grid.dim as i32)
    }

    /// Positions along one axis.
    pub fn positions(&self) -> Vec<f64> {
        axis_positions(self.grid.n, self.grid.length)
    }

    /// Largest sample modulus.
    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Fails unless the outermost layer of samples is below `1e-10` of the peak.
    pub fn check_boundary_decay(&self) -> Result<()> {
        let peak = self.max_abs();
        if peak == 0.0 {
            return Ok(());
        }
        let edge = self.boundary_max();
        if edge >= 1e-10 * peak {
            return invalid(format!(
                "boundary layer {edge:.3e} is not below 1e-10 of peak {peak:.3e}"
            ));
        }
        Ok(())
    }

    /// Largest modulus on the outermost layer of the box.
    pub fn boundary_max(&self) -> f64 {
        let n = self.grid.n;
        match self.grid.dim {
            1 => self.samples[0].norm().max(self.samples[n - 1].norm()),
            _ => {
                let mut m = 0.0f64;
                for k in 0..n {
                    for idx in [k, (n - 1) * n + k, k * n, k * n + n - 1] {
                        m = m.max(self.samples[idx].norm());
                    }
                }
                m
            }
        }
    }

    /// Unnormalized discrete spectrum in FFT order.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut s = self.samples.clone();
        fft::forward(&mut s, self.grid.dim, self.grid.n);
        s
    }

    /// Inverse of [`GridFunction::spectrum`].
    pub fn from_spectrum(grid: FreqGrid, mut spectrum: Vec<Complex64>) -> Self {
        fft::inverse(&mut spectrum, grid.dim, grid.n);
        Self { grid, samples: spectrum, tag: String::new() }
    }

    /// Riemann approximation of the continuous Fourier transform at every
    /// absolute grid frequency.
    pub fn continuous_spectrum(&self) -> Vec<Complex64> {
        let vol = self.cell_volume();
        let mut s = self.spectrum();
        for (idx, z) in s.iter_mut().enumerate() {
            *z *= center_phase(&self.grid, idx) * vol;
        }
        s
    }

    /// Applies the Fourier multiplier `m(ξ)` (absolute frequency).
    pub fn apply_multiplier(&self, m: impl Fn(&[f64]) -> Complex64) -> GridFunction {
        let mut s = self.spectrum();
        for (idx, z) in s.iter_mut().enumerate() {
            let f = self.grid.frequency(idx);
            *z *= m(&f[..self.grid.dim]);
        }
        let mut out = Self::from_spectrum(self.grid, s);
        out.tag = self.tag.clone();
        out
    }

    /// `f(λx)`: same samples on a box shrunk by `λ`. Exact, no interpolation.
    pub fn dilated(&self, lambda: f64) -> Result<GridFunction> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return invalid(format!("dilation factor must be positive, got {lambda}"));
        }
        let mut out = self.clone();
        out.grid.length /= lambda;
        out.grid.shift = [self.grid.shift[0] * lambda, self.grid.shift[1] * lambda];
        Ok(out)
    }

    /// `e^{i c·x} f(x)`, represented exactly by moving the grid shift.
    pub fn modulated(&self, carrier: [f64; 2]) -> GridFunction {
        let mut out = self.clone();
        out.grid.shift[0] += carrier[0];
        if self.grid.dim == 2 {
            out.grid.shift[1] += carrier[1];
        }
        out
    }

    /// `f(x - y)` for `y` an integer number of grid cells per axis (periodic).
    pub fn translated_by_cells(&self, cells: [i64; 2]) -> GridFunction {
        let n = self.grid.n as i64;
        let dx = self.dx();
        let y = [cells[0] as f64 * dx, cells[1] as f64 * dx];
        let s = self.grid.shift;
        let phase = Complex64::from_polar(1.0, -(s[0] * y[0] + s[1] * y[1]));
        let mut out = vec![Complex64::new(0.0, 0.0); self.samples.len()];
        let wrap = |i: i64| i.rem_euclid(n) as usize;
        match self.grid.dim {
            1 => {
                for (i, z) in self.samples.iter().enumerate() {
                    out[wrap(i as i64 + cells[0])] = z * phase;
                }
            }
            _ => {
                let nu = self.grid.n;
                for i in 0..nu {
                    for j in 0..nu {
                        let t = wrap(i as i64 + cells[0]) * nu + wrap(j as i64 + cells[1]);
                        out[t] = self.samples[i * nu + j] * phase;
                    }
                }
            }
        }
        GridFunction { grid: self.grid, samples: out, tag: self.tag.clone() }
    }

    /// Pointwise sum; grids must match.
    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.ensure_same_grid(other)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect();
        Ok(GridFunction { grid: self.grid, samples, tag: self.tag.clone() })
    }

    /// Pointwise difference; grids must match.
    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.ensure_same_grid(other)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect();
        Ok(GridFunction { grid: self.grid, samples, tag: self.tag.clone() })
    }

    pub fn scaled(&self, c: Complex64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            samples: self.samples.iter().map(|z| z * c).collect(),
            tag: self.tag.clone(),
        }
    }

    pub(crate) fn ensure_same_grid(&self, other: &GridFunction) -> Result<()> {
        if !self.grid.matches(&other.grid) {
            return invalid(format!("grid mismatch: {:?} vs {:?}", self.grid, other.grid));
        }
        Ok(())
    }

    /// Writes the JSON header line followed by interleaved little-endian re/im pairs.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let header = FileHeader {
            d: self.grid.dim,
            n: self.grid.n,
            length: self.grid.length,
            tag: self.tag.clone(),
            shift: self.grid.shift,
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        w.write_all(&samples_to_bytes(&self.samples))?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Validation("grid file has no header line".into()))?;
        let header: FileHeader = serde_json::from_slice(&bytes[..nl])?;
        let grid = FreqGrid::new(header.d, header.n, header.length)?.with_shift(header.shift);
        let samples = samples_from_bytes(&bytes[nl + 1..])?;
        let mut f = Self::on_grid(grid, samples)?;
        f.tag = header.tag;
        Ok(f)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }
}

pub(crate) fn samples_to_bytes(samples: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * 16);
    for z in samples {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub(crate) fn samples_from_bytes(bytes: &[u8]) -> Result<Vec<Complex64>> {
    if bytes.len() % 16 != 0 {
        return invalid("binary payload length is not a multiple of 16 bytes");
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect())
}

fn axis_positions(n: usize, length: f64) -> Vec<f64> {
    let dx = length / n as f64;
    (0..n).map(|j| -0.5 * length + j as f64 * dx).collect()
}

/// `e^{iπ(m_0 + m_1)}`: the phase from the box starting at `-L/2`.
#[inline]
fn center_phase(grid: &FreqGrid, idx: usize) -> f64 {
    let parity = match grid.dim {
        1 => idx % 2,
        _ => (idx / grid.n + idx % grid.n) % 2,
    };
    if parity == 0 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(n: usize, l: f64) -> GridFunction {
        GridFunction::from_fn(1, n, l, |x| Complex64::new((-0.5 * x[0] * x[0]).exp(), 0.0)).unwrap()
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(FreqGrid::new(3, 8, 1.0).is_err());
        assert!(FreqGrid::new(1, 12, 1.0).is_err());
        assert!(FreqGrid::new(1, 8, 0.0).is_err());
        assert!(GridFunction::new(1, 8, 1.0, vec![Complex64::new(0.0, 0.0); 7]).is_err());
    }

    #[test]
    fn gaussian_transform_matches_closed_form() {
        let f = gaussian(256, 40.0);
        let hat = f.continuous_spectrum();
        let grid = *f.grid();
        for (idx, z) in hat.iter().enumerate() {
            let xi = grid.frequency(idx)[0];
            let exact = (2.0 * PI).sqrt() * (-0.5 * xi * xi).exp();
            assert!((z - Complex64::new(exact, 0.0)).norm() < 1e-12, "xi={xi}");
        }
    }

    #[test]
    fn continuous_spectrum_round_trip() {
        let grid = FreqGrid::new(1, 128, 30.0).unwrap();
        let g = GridFunction::from_continuous_spectrum(grid, |xi| {
            Complex64::new((-xi[0] * xi[0]).exp(), 0.0)
        });
        let back = g.continuous_spectrum();
        for (idx, z) in back.iter().enumerate() {
            let xi = grid.frequency(idx)[0];
            assert!((z.re - (-xi * xi).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_decay_flag() {
        assert!(gaussian(256, 40.0).check_boundary_decay().is_ok());
        assert!(gaussian(256, 8.0).check_boundary_decay().is_err());
    }

    #[test]
    fn file_round_trip() {
        let f = gaussian(32, 10.0).with_tag("g").modulated([3.0, 0.0]);
        let back = GridFunction::read_from(&f.to_bytes()[..]).unwrap();
        assert_eq!(back.tag, "g");
        assert!(back.grid().matches(f.grid()));
        assert_eq!(back.samples(), f.samples());
    }

    #[test]
    fn translation_moves_samples() {
        let f = gaussian(64, 20.0);
        let g = f.translated_by_cells([5, 0]);
        assert_eq!(g.samples()[37], f.samples()[32]);
    }

    #[test]
    fn indices_near_cover_the_box() {
        let grid = FreqGrid::new(1, 64, 2.0 * PI).unwrap();
        let idx = grid.indices_near([3.0, 0.0], 2.0);
        let freqs: Vec<f64> = idx.iter().map(|&i| grid.frequency(i)[0]).collect();
        assert_eq!(freqs, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let shifted = grid.with_shift([100.0, 0.0]);
        let idx = shifted.indices_near([101.0, 0.0], 0.5);
        assert_eq!(idx.len(), 1);
        assert!((shifted.frequency(idx[0])[0] - 101.0).abs() < 1e-12);
    }
}
