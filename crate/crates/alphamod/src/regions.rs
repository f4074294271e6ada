//! Piecewise-linear regularity thresholds for local smoothing as functions of `(1/p, 1/q)`.
//!
//! Three regimes: `0 < β < 1` and `1 < β ≤ 2` measure the data in
//! `M^{s,α}_{p,q}` with `α = 1 - β/2`; `β > 2` measures it in `M^s_{p,q}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, numeric, Result};
use crate::spaces::norms::recip;
use crate::spaces::{sigma_tau, Boundary};

const TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    BelowOne,
    UpToTwo,
    AboveTwo,
}

impl Regime {
    pub fn of(beta: f64) -> Result<Regime> {
        if !(beta > 0.0 && beta.is_finite()) {
            return invalid(format!("beta must be positive, got {beta}"));
        }
        if (beta - 1.0).abs() < TOL {
            return invalid("beta=1 excluded (wave case)");
        }
        Ok(if beta < 1.0 {
            Regime::BelowOne
        } else if beta <= 2.0 {
            Regime::UpToTwo
        } else {
            Regime::AboveTwo
        })
    }

    /// Labels whose thresholds coincide with the necessary condition.
    pub fn sharp_labels(self) -> &'static [char] {
        match self {
            Regime::BelowOne => &['A', 'D', 'E'],
            Regime::UpToTwo => &['A', 'C', 'D', 'E'],
            Regime::AboveTwo => &[],
        }
    }
}

/// One sufficient condition that applies at a point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub label: char,
    pub s: f64,
    pub boundary: Boundary,
}

fn open(label: char, s: f64) -> Condition {
    Condition { label, s, boundary: Boundary::Open }
}

fn closed(label: char, s: f64) -> Condition {
    Condition { label, s, boundary: Boundary::Closed }
}

fn le(a: f64, b: f64) -> bool {
    a <= b + TOL
}

/// Every condition of the regime whose `(p, q)` constraints hold at `(x, y) = (1/p, 1/q)`.
fn conditions(d: f64, beta: f64, regime: Regime, x: f64, y: f64) -> Vec<Condition> {
    let inv_p0 = d / (2.0 * d + 4.0);
    let half = 0.5;
    let mut out = Vec::new();
    match regime {
        Regime::BelowOne => {
            let line = 1.0 - (d + 4.0) * x / d;
            if le(x, inv_p0) && le(y, line) {
                out.push(open('A', beta * d / 2.0 * (1.0 - x - y) - beta * x));
            }
            if le(x, half) && le(inv_p0, x) && le(y, x) {
                out.push(open('B', beta * d / 2.0 * (half - y)));
            }
            if le(line, y) && le(x, y) && le(y, 1.0 - x) {
                out.push(open('C', beta * d / 4.0 * (1.0 - x - y)));
            }
            if le(1.0 - x, y) && le(x, y) {
                out.push(closed('D', 0.0));
            }
            if x > half + TOL && le(y, x) {
                out.push(open('E', beta * d / 2.0 * (x - y)));
            }
        }
        Regime::UpToTwo => {
            let line = 1.0 - (d + 2.0) * x / d;
            if le(x, inv_p0) && le(y, line) {
                out.push(open('A', beta * d / 2.0 * (1.0 - x - y) - beta * x));
            }
            if le(x, half) && le(inv_p0, x) && le(y, half) {
                out.push(open('B', beta * d / 2.0 * (half - y)));
            }
            if le(line, y) && le(half, y) && le(y, 1.0 - x) {
                out.push(open('C', 0.0));
            }
            if le(x, y) && le(1.0 - x, y) {
                out.push(closed('D', 0.0));
            }
            if le(half, x) && le(y, x) {
                out.push(open('E', beta * d / 2.0 * (x - y)));
            }
        }
        Regime::AboveTwo => {
            let line = 1.0 - (d + 2.0) * x / d;
            let b2 = beta - 2.0;
            if le(x, inv_p0) && le(y, line) {
                out.push(open('A', d * b2 * (half - x) - d * (x + y - 1.0) - beta * x));
            }
            if le(inv_p0, x) && le(x, half) && le(y, half) {
                out.push(open(
                    'B',
                    d * b2 * (half - x) - d * (x + y - 1.0) - beta * d / 2.0 * (half - x),
                ));
            }
            if le(x, inv_p0) && le(line, y) {
                out.push(open('C', b2 * (d / 2.0 - (d + 1.0) * x)));
            }
            if le(inv_p0, x) && le(x, half) && le(half, y) {
                out.push(open('D', d / 2.0 * b2 * (half - x)));
            }
            if le(half, x) && le(x, y) {
                out.push(closed('E', d * b2 * (x - half)));
            }
            if le(half, x) && le(y, x) {
                out.push(open('F', d * b2 * (x - half) - d * (y - x)));
            }
        }
    }
    out
}

fn check_point(d: usize, p: f64, q: f64) -> Result<(f64, f64, f64)> {
    if d == 0 {
        return invalid("dimension must be at least 1");
    }
    for (v, name) in [(p, "p"), (q, "q")] {
        if v.is_nan() || v < 1.0 {
            return invalid(format!("{name} must lie in [1, ∞], got {v}"));
        }
    }
    Ok((d as f64, recip(p), recip(q)))
}

/// Minimal applicable threshold, preferring a closed boundary on ties.
fn best(conds: &[Condition]) -> Option<Condition> {
    let mut it = conds.iter();
    let mut best = *it.next()?;
    for c in it {
        let tie = (c.s - best.s).abs() <= TOL;
        if c.s < best.s - TOL || (tie && c.boundary == Boundary::Closed && best.boundary == Boundary::Open) {
            best = *c;
        }
    }
    Some(best)
}

/// `(label, threshold, boundary)` of the weakest sufficient condition at `(p, q)`.
pub fn sufficient_threshold(d: usize, beta: f64, p: f64, q: f64) -> Result<Condition> {
    let regime = Regime::of(beta)?;
    let (df, x, y) = check_point(d, p, q)?;
    match best(&conditions(df, beta, regime, x, y)) {
        Some(c) => Ok(c),
        None => numeric(format!("no sufficient condition covers p={p}, q={q}")),
    }
}

/// All sufficient conditions applying at `(p, q)`.
pub fn applicable_conditions(d: usize, beta: f64, p: f64, q: f64) -> Result<Vec<Condition>> {
    let regime = Regime::of(beta)?;
    let (df, x, y) = check_point(d, p, q)?;
    Ok(conditions(df, beta, regime, x, y))
}

fn necessity_at(d: f64, beta: f64, regime: Regime, x: f64, y: f64) -> f64 {
    match regime {
        Regime::BelowOne | Regime::UpToTwo => 0f64
            .max(beta * d / 2.0 * (x - y))
            .max(beta * d / 2.0 * (1.0 - x - y) - beta * x),
        Regime::AboveTwo => {
            let a = d * (1.0 - x - y) - beta * x;
            let b = d * (beta - 2.0) * (x - 0.5) + d * (x - y);
            let mut s = a.max(b);
            // p ≤ 2 and p ≥ q
            if x >= 0.5 - TOL && y >= x - TOL {
                s = s.max(d * (beta - 2.0) * (x - 0.5));
            }
            s
        }
    }
}

/// Smallest `s` allowed by the necessary conditions.
pub fn necessity_threshold(d: usize, beta: f64, p: f64, q: f64) -> Result<f64> {
    let regime = Regime::of(beta)?;
    let (df, x, y) = check_point(d, p, q)?;
    Ok(necessity_at(df, beta, regime, x, y))
}

/// Threshold for the estimate at a single fixed time.
pub fn fix_time_threshold(d: usize, beta: f64, p: f64, q: f64) -> Result<f64> {
    let (df, x, _) = check_point(d, p, q)?;
    if !(beta > 0.0 && beta.is_finite()) {
        return invalid(format!("beta must be positive, got {beta}"));
    }
    let sigma = sigma_tau(d, p, q).sigma;
    Ok(if beta <= 2.0 {
        -beta * sigma / 2.0
    } else {
        df * (beta - 2.0) * (0.5 - x).abs() - sigma
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionVerdict {
    pub label: char,
    /// Every condition label that applies here.
    pub labels: Vec<char>,
    pub sufficient_s: f64,
    pub sufficient_boundary: Boundary,
    pub necessary_s: f64,
    pub gap: f64,
    pub fix_time_s: f64,
}

impl RegionVerdict {
    pub fn smoothing_gain(&self) -> f64 {
        self.fix_time_s - self.sufficient_s
    }
}

pub fn verdict(d: usize, beta: f64, p: f64, q: f64) -> Result<RegionVerdict> {
    let regime = Regime::of(beta)?;
    let (df, x, y) = check_point(d, p, q)?;
    let conds = conditions(df, beta, regime, x, y);
    let Some(b) = best(&conds) else {
        return numeric(format!("no sufficient condition covers p={p}, q={q}"));
    };
    let necessary_s = necessity_at(df, beta, regime, x, y);
    Ok(RegionVerdict {
        label: b.label,
        labels: conds.iter().map(|c| c.label).collect(),
        sufficient_s: b.s,
        sufficient_boundary: b.boundary,
        necessary_s,
        gap: b.s - necessary_s,
        fix_time_s: fix_time_threshold(d, beta, p, q)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RasterCell {
    pub inv_p: f64,
    pub inv_q: f64,
    pub verdict: RegionVerdict,
}

fn from_recip(v: f64) -> f64 {
    if v == 0.0 {
        f64::INFINITY
    } else {
        1.0 / v
    }
}

/// `resolution × resolution` raster over `(1/p, 1/q) ∈ [0, 1]²`, rows ordered by `1/p`.
pub fn region_grid(d: usize, beta: f64, resolution: usize) -> Result<Vec<RasterCell>> {
    if resolution < 11 {
        return invalid(format!("resolution must be at least 11, got {resolution}"));
    }
    Regime::of(beta)?;
    let step = 1.0 / (resolution - 1) as f64;
    let rows: Result<Vec<Vec<RasterCell>>> = (0..resolution)
        .into_par_iter()
        .map(|i| {
            let inv_p = i as f64 * step;
            (0..resolution)
                .map(|j| {
                    let inv_q = j as f64 * step;
                    let verdict = verdict(d, beta, from_recip(inv_p), from_recip(inv_q))?;
                    Ok(RasterCell { inv_p, inv_q, verdict })
                })
                .collect()
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

/// CSV with columns `inv_p,inv_q,label,sufficient_s,boundary,necessary_s,gap,fix_time_s`.
pub fn raster_csv(cells: &[RasterCell]) -> String {
    let mut out = String::from("inv_p,inv_q,label,sufficient_s,boundary,necessary_s,gap,fix_time_s\n");
    for c in cells {
        let v = &c.verdict;
        let boundary = match v.sufficient_boundary {
            Boundary::Open => "open",
            Boundary::Closed => "closed",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            c.inv_p, c.inv_q, v.label, v.sufficient_s, boundary, v.necessary_s, v.gap, v.fix_time_s
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: f64 = f64::INFINITY;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn sufficient_examples() {
        let c = sufficient_threshold(1, 0.5, 6.0, INF).unwrap();
        assert_eq!(c.label, 'A');
        assert!(close(c.s, 1.0 / 8.0));
        assert_eq!(c.boundary, Boundary::Open);

        let c = sufficient_threshold(1, 2.0, 2.0, 2.0).unwrap();
        assert!(close(c.s, 0.0));
        assert!(applicable_conditions(1, 2.0, 2.0, 2.0).unwrap().iter().any(|c| c.label == 'B'));

        let c = sufficient_threshold(1, 4.0, 6.0, INF).unwrap();
        assert_eq!(c.label, 'A');
        assert!(close(c.s, 5.0 / 6.0));
        assert!(sufficient_threshold(1, 1.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn necessity_examples() {
        assert!(close(necessity_threshold(1, 2.0, 2.0, 2.0).unwrap(), 0.0));
        assert!(close(necessity_threshold(1, 0.5, 6.0, INF).unwrap(), 1.0 / 8.0));
        // the extra p ≤ 2, p ≥ q branch gives 1 at p = q = 1
        assert!(close(necessity_threshold(1, 4.0, 1.0, 1.0).unwrap(), 1.0));
    }

    #[test]
    fn fix_time_examples() {
        assert!(close(fix_time_threshold(1, 2.0, 2.0, 2.0).unwrap(), 0.0));
        assert!(close(fix_time_threshold(1, 0.5, 6.0, INF).unwrap(), 5.0 / 24.0));
        assert!(close(fix_time_threshold(1, 4.0, 2.0, 2.0).unwrap(), 0.0));
        let v = verdict(1, 0.5, 6.0, INF).unwrap();
        assert!(close(v.smoothing_gain(), 1.0 / 12.0));
    }

    #[test]
    fn raster_layout() {
        assert!(region_grid(1, 0.5, 5).is_err());
        let cells = region_grid(1, 0.5, 11).unwrap();
        assert_eq!(cells.len(), 121);
        assert_eq!(cells[0].verdict.label, 'A');
        for beta in [0.5, 1.5, 2.0] {
            for c in region_grid(2, beta, 21).unwrap() {
                let (x, y) = (c.inv_p, c.inv_q);
                if y >= x - 1e-12 && y >= 1.0 - x - 1e-12 {
                    assert!(c.verdict.labels.contains(&'D'));
                    assert_eq!(c.verdict.sufficient_s, 0.0);
                }
            }
        }
    }

    #[test]
    fn two_is_the_limit_of_the_upper_regime() {
        for i in 0..=20 {
            for j in 0..=20 {
                let (x, y) = (i as f64 / 20.0, j as f64 / 20.0);
                let mid = best(&conditions(1.0, 2.0, Regime::UpToTwo, x, y)).unwrap();
                let high = best(&conditions(1.0, 2.0, Regime::AboveTwo, x, y)).unwrap();
                assert!(close(mid.s, high.s), "({x},{y}): {} vs {}", mid.s, high.s);
            }
        }
    }
}
