//! Lebesgue, Sobolev and α-modulation norms of grid functions.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{FreqGrid, GridFunction};
use crate::error::{invalid, Result};
use crate::fft;
use crate::frequency_partition::{bracket, Bapu, DyadicWindows, Profile};

/// `1/p` with `1/∞ = 0`.
#[inline]
pub fn recip(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

fn check_exponent(p: f64, name: &str) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return invalid(format!("{name} must lie in [1, ∞], got {p}"));
    }
    Ok(())
}

/// The parameter point `(d, β, p, q, s, α)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentTuple {
    pub d: usize,
    pub beta: f64,
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub alpha: f64,
}

impl ExponentTuple {
    pub fn new(d: usize, beta: f64, p: f64, q: f64, s: f64, alpha: f64) -> Result<Self> {
        if d == 0 {
            return invalid("dimension must be at least 1");
        }
        check_exponent(p, "p")?;
        check_exponent(q, "q")?;
        if !(beta > 0.0) {
            return invalid(format!("beta must be positive, got {beta}"));
        }
        if !(alpha < 1.0) || !s.is_finite() {
            return invalid(format!("need alpha < 1 and finite s, got alpha={alpha}, s={s}"));
        }
        Ok(Self { d, beta, p, q, s, alpha })
    }

    /// Norm-only tuple: `beta` is irrelevant and set to 2.
    pub fn norm(d: usize, p: f64, q: f64, s: f64, alpha: f64) -> Result<Self> {
        Self::new(d, 2.0, p, q, s, alpha)
    }
}

/// Riemann sum `((L/N)^d Σ |f|^p)^{1/p}` over raw samples, `max |f|` when `p = ∞`.
pub fn lp_norm_samples(samples: &[Complex64], cell_volume: f64, p: f64) -> f64 {
    let peak = samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if p.is_infinite() || peak == 0.0 {
        return peak;
    }
    let sum: f64 = if p == 2.0 {
        samples.iter().map(|z| (z.norm() / peak).powi(2)).sum()
    } else {
        samples.iter().map(|z| (z.norm() / peak).powf(p)).sum()
    };
    peak * (cell_volume * sum).powf(1.0 / p)
}

/// `‖f‖_p` on the grid.
pub fn lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    check_exponent(p, "p")?;
    Ok(lp_norm_samples(f.samples(), f.cell_volume(), p))
}

/// `‖f‖_2` computed on the frequency side via the discrete Plancherel identity.
pub fn l2_norm_from_spectrum(f: &GridFunction) -> f64 {
    let n_total = f.grid().len() as f64;
    let s: f64 = f.spectrum().iter().map(|z| z.norm_sqr()).sum();
    (f.cell_volume() * s / n_total).sqrt()
}

/// `ℓ^q` combination of nonnegative values.
pub fn lq_combine(values: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return values.iter().cloned().fold(0.0, f64::max);
    }
    let peak = values.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let s: f64 = values.iter().map(|v| (v / peak).powf(q)).sum();
    peak * s.powf(1.0 / q)
}

/// `‖F^{-1}(profile · spectrum)‖_p` for a batch of profiles, in parallel.
pub(crate) fn profile_norms(
    spectrum: &[Complex64],
    grid: &FreqGrid,
    cell_volume: f64,
    profiles: &[&Profile],
    p: f64,
) -> Vec<f64> {
    profiles
        .par_iter()
        .map(|prof| {
            let mut s = prof.apply_to_spectrum(spectrum);
            fft::inverse(&mut s, grid.dim, grid.n);
            lp_norm_samples(&s, cell_volume, p)
        })
        .collect()
}

/// Fails when more than `1e-8` of the spectral energy lies outside the BAPU band.
fn check_band(spectrum: &[Complex64], bapu: &Bapu) -> Result<()> {
    let mut inside = 0.0;
    let mut outside = 0.0;
    for (i, z) in spectrum.iter().enumerate() {
        if bapu.covers(i) {
            inside += z.norm_sqr();
        } else {
            outside += z.norm_sqr();
        }
    }
    let total = inside + outside;
    if total > 0.0 && outside > 1e-8 * total {
        return invalid(format!(
            "band violation: {:.3e} of the spectral energy lies outside the partition band",
            outside / total
        ));
    }
    Ok(())
}

fn alpha_mod_from_spectrum(
    spectrum: &[Complex64],
    grid: &FreqGrid,
    cell_volume: f64,
    t: &ExponentTuple,
    bapu: &Bapu,
) -> f64 {
    let profiles: Vec<&Profile> = bapu.windows.iter().map(|w| &w.profile).collect();
    let norms = profile_norms(spectrum, grid, cell_volume, &profiles, t.p);
    let weighted: Vec<f64> = bapu
        .windows
        .iter()
        .zip(norms)
        .map(|(w, v)| {
            let k: Vec<f64> = w.spec.index.iter().map(|&x| x as f64).collect();
            bracket(&k).powf(t.s / (1.0 - t.alpha)) * v
        })
        .collect();
    lq_combine(&weighted, t.q)
}

fn check_alpha(t: &ExponentTuple, bapu: &Bapu, f: &GridFunction) -> Result<()> {
    if (bapu.params.alpha - t.alpha).abs() > 1e-12 {
        return invalid(format!(
            "partition is built for alpha={} but the tuple has alpha={}",
            bapu.params.alpha, t.alpha
        ));
    }
    if !bapu.grid.matches(f.grid()) {
        return invalid("partition and function live on different grids");
    }
    Ok(())
}

/// `(Σ_k ⟨k⟩^{sq/(1-α)} ‖□_k f‖_p^q)^{1/q}`, supremum form when `q = ∞`.
pub fn alpha_mod_norm(f: &GridFunction, t: &ExponentTuple, bapu: &Bapu) -> Result<f64> {
    check_alpha(t, bapu, f)?;
    let spectrum = f.spectrum();
    check_band(&spectrum, bapu)?;
    Ok(alpha_mod_from_spectrum(&spectrum, f.grid(), f.cell_volume(), t, bapu))
}

/// `‖(I - Δ)^{s/2} f‖_p`.
pub fn sobolev_norm(f: &GridFunction, s: f64, p: f64) -> Result<f64> {
    check_exponent(p, "p")?;
    if s == 0.0 {
        return lp_norm(f, p);
    }
    let g = f.apply_multiplier(|xi| Complex64::new(bracket(xi).powf(s), 0.0));
    lp_norm(&g, p)
}

/// Pair `(σ(p,q), τ(p,q))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexPair {
    pub sigma: f64,
    pub tau: f64,
}

/// `σ = d·min(0, 1/q - 1/p, 1/q + 1/p - 1)`, `τ = d·max(…)` with `1/∞ = 0`.
pub fn sigma_tau(d: usize, p: f64, q: f64) -> IndexPair {
    let (ip, iq) = (recip(p), recip(q));
    let a = iq - ip;
    let b = iq + ip - 1.0;
    let df = d as f64;
    IndexPair { sigma: df * 0f64.min(a).min(b), tau: df * 0f64.max(a).max(b) }
}

/// `(‖u‖_{M^{s,α}_{p,q}}, ‖2^{js} ‖Δ_j u‖_{M^{0,α}_{p,q}}‖_{ℓ^q_j})`.
pub fn lp_equivalence_check(
    f: &GridFunction,
    t: &ExponentTuple,
    bapu: &Bapu,
    dyadic: &DyadicWindows,
) -> Result<(f64, f64)> {
    check_alpha(t, bapu, f)?;
    if !dyadic.grid.matches(f.grid()) {
        return invalid("dyadic windows live on a different grid");
    }
    let spectrum = f.spectrum();
    check_band(&spectrum, bapu)?;
    let lhs = alpha_mod_from_spectrum(&spectrum, f.grid(), f.cell_volume(), t, bapu);
    let unweighted = ExponentTuple { s: 0.0, ..*t };
    let mut pieces = Vec::with_capacity(dyadic.profiles.len());
    for (j, prof) in dyadic.profiles.iter().enumerate() {
        let piece = prof.apply_to_spectrum(&spectrum);
        let v = alpha_mod_from_spectrum(&piece, f.grid(), f.cell_volume(), &unweighted, bapu);
        pieces.push((2.0f64).powf(j as f64 * t.s) * v);
    }
    Ok((lhs, lq_combine(&pieces, t.q)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frequency_partition::{build_bapu, dyadic_windows, AlphaParams};
    use std::f64::consts::PI;

    fn gaussian(n: usize, l: f64) -> GridFunction {
        GridFunction::from_fn(1, n, l, |x| Complex64::new((-0.5 * x[0] * x[0]).exp(), 0.0)).unwrap()
    }

    #[test]
    fn gaussian_l2() {
        let f = gaussian(512, 40.0);
        let v = lp_norm(&f, 2.0).unwrap();
        assert!((v - PI.powf(0.25)).abs() < 1e-12);
        assert!((l2_norm_from_spectrum(&f) - v).abs() < 1e-12 * v);
    }

    #[test]
    fn zero_and_plateau() {
        let z = GridFunction::zeros(FreqGrid::new(1, 64, 10.0).unwrap());
        assert_eq!(lp_norm(&z, 3.0).unwrap(), 0.0);
        // plateau of height 1 over a set of measure 1
        let f = GridFunction::from_fn(1, 64, 8.0, |x| {
            Complex64::new(if (-0.5..0.5).contains(&x[0]) { 1.0 } else { 0.0 }, 0.0)
        })
        .unwrap();
        for p in [1.0, 2.0, 5.0, f64::INFINITY] {
            assert!((lp_norm(&f, p).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(lp_norm(&f, 0.5).is_err());
    }

    #[test]
    fn sigma_tau_examples() {
        assert_eq!(sigma_tau(1, 2.0, 2.0), IndexPair { sigma: 0.0, tau: 0.0 });
        assert_eq!(sigma_tau(1, 1.0, f64::INFINITY), IndexPair { sigma: -1.0, tau: 0.0 });
        assert_eq!(sigma_tau(1, f64::INFINITY, 1.0), IndexPair { sigma: 0.0, tau: 1.0 });
    }

    #[test]
    fn sobolev_matches_frequency_quadrature() {
        let f = gaussian(1024, 60.0);
        assert!((sobolev_norm(&f, 0.0, 3.0).unwrap() - lp_norm(&f, 3.0).unwrap()).abs() < 1e-14);
        // ‖f‖²_{H²} = (1/2π) ∫ ⟨ξ⟩⁴ 2π e^{-ξ²} dξ = ∫ (1 + ξ²)² e^{-ξ²} dξ
        let h = 1e-3;
        let oracle: f64 = (-20000..=20000)
            .map(|i| {
                let xi = i as f64 * h;
                (1.0 + xi * xi).powi(2) * (-xi * xi).exp() * h
            })
            .sum();
        let v = sobolev_norm(&f, 2.0, 2.0).unwrap();
        assert!((v - oracle.sqrt()).abs() < 1e-9, "{v} vs {}", oracle.sqrt());
    }

    #[test]
    fn single_window_norm_equals_lp() {
        let grid = FreqGrid::new(1, 1024, 1024.0 * PI / 16.0).unwrap();
        let bapu = Bapu::single_window(AlphaParams::new(0.0, 1).unwrap(), grid);
        let f = gaussian(1024, 1024.0 * PI / 16.0);
        let t = ExponentTuple::norm(1, 3.0, 2.0, 0.7, 0.0).unwrap();
        let m = alpha_mod_norm(&f, &t, &bapu).unwrap();
        assert!((m - lp_norm(&f, 3.0).unwrap()).abs() < 1e-12 * m);
    }

    #[test]
    fn band_violation_detected() {
        let grid = FreqGrid::new(1, 256, 256.0 * PI / 16.0).unwrap();
        let bapu =
            crate::frequency_partition::build_bapu_with_band(AlphaParams::new(0.0, 1).unwrap(), grid, 8.0)
                .unwrap();
        let f = GridFunction::from_continuous_spectrum(grid, |xi| {
            Complex64::new(crate::frequency_partition::bump((xi[0] - 12.0) / 2.0), 0.0)
        });
        let t = ExponentTuple::norm(1, 2.0, 2.0, 0.0, 0.0).unwrap();
        assert!(alpha_mod_norm(&f, &t, &bapu).is_err());
    }

    #[test]
    fn equivalence_on_one_shell() {
        let grid = FreqGrid::new(1, 1024, 1024.0 * PI / 40.0).unwrap();
        let bapu = build_bapu(AlphaParams::new(0.0, 1).unwrap(), grid).unwrap();
        let dy = dyadic_windows(grid);
        let f = GridFunction::from_continuous_spectrum(grid, |xi| {
            Complex64::new(crate::frequency_partition::bump((xi[0].abs() - 6.0) / 1.5), 0.0)
        });
        let t = ExponentTuple::norm(1, 2.0, 2.0, 0.0, 0.0).unwrap();
        let (a, b) = lp_equivalence_check(&f, &t, &bapu, &dy).unwrap();
        assert!(a / b <= 3.0 && b / a <= 3.0, "{a} {b}");
        let z = GridFunction::zeros(grid);
        assert_eq!(lp_equivalence_check(&z, &t, &bapu, &dy).unwrap(), (0.0, 0.0));
    }
}
