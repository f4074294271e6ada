//! Sharp regularity thresholds for embeddings between α-modulation, modulation and Lebesgue spaces.

use serde::{Deserialize, Serialize};

use super::norms::{recip, sigma_tau, ExponentTuple};
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Threshold excluded: need `s > threshold`.
    Open,
    /// Threshold included: need `s ≥ threshold`.
    Closed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmbeddingKind {
    /// `M^{s,α}_{p,q}` into `M^{target_s,α}_{p,target_q}`; the tuple carries the source.
    ModScale { target_q: f64, target_s: f64 },
    /// `M^{s,α}_{p,q}` into `L^p`.
    IntoLp,
    /// Modulation space `M^s_{p,q}` into `M^{0,α}_{p,q}`.
    MpqsIntoAlpha,
    /// `M^{s,α}_{p,q}` into `M^0_{p,q}`, only for `α < 0`.
    AlphaIntoMpq,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub s_threshold: f64,
    pub boundary: Boundary,
    /// Whether the tuple's `s` satisfies the threshold.
    pub holds: bool,
}

impl Threshold {
    fn new(s_threshold: f64, boundary: Boundary, s: f64) -> Self {
        let holds = match boundary {
            Boundary::Open => s > s_threshold + 1e-12,
            Boundary::Closed => s >= s_threshold - 1e-12,
        };
        Self { s_threshold, boundary, holds }
    }
}

pub fn embedding_threshold(kind: EmbeddingKind, t: &ExponentTuple) -> Result<Threshold> {
    let d = t.d as f64;
    match kind {
        EmbeddingKind::ModScale { target_q, target_s } => {
            if !(0.0..1.0).contains(&t.alpha) {
                return invalid("the scale embedding needs alpha in [0, 1)");
            }
            if t.q > target_q {
                let gap = d * (1.0 - t.alpha) * (recip(target_q) - recip(t.q));
                Ok(Threshold::new(target_s + gap, Boundary::Open, t.s))
            } else {
                Ok(Threshold::new(target_s, Boundary::Closed, t.s))
            }
        }
        EmbeddingKind::IntoLp => {
            if !(0.0..1.0).contains(&t.alpha) {
                return invalid("the Lebesgue embedding needs alpha in [0, 1)");
            }
            let (p, q) = (t.p, t.q);
            let thr = -(1.0 - t.alpha) * sigma_tau(t.d, p, q).sigma;
            let closed = (p.is_finite() && q <= p) || (p.is_infinite() && q == 1.0);
            let boundary = if closed { Boundary::Closed } else { Boundary::Open };
            Ok(Threshold::new(thr, boundary, t.s))
        }
        EmbeddingKind::MpqsIntoAlpha => {
            let st = sigma_tau(t.d, t.p, t.q);
            if t.alpha > 0.0 {
                Ok(Threshold::new(-t.alpha * st.sigma, Boundary::Closed, t.s))
            } else if t.alpha < 0.0 {
                Ok(Threshold::new(-t.alpha * st.tau, Boundary::Closed, t.s))
            } else {
                invalid("alpha = 0 makes both sides the same space")
            }
        }
        EmbeddingKind::AlphaIntoMpq => {
            if t.alpha >= 0.0 {
                return invalid("this embedding is only characterised for alpha < 0");
            }
            let st = sigma_tau(t.d, t.p, t.q);
            Ok(Threshold::new(t.alpha * st.sigma, Boundary::Closed, t.s))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tuple(p: f64, q: f64, s: f64, alpha: f64) -> ExponentTuple {
        ExponentTuple::norm(1, p, q, s, alpha).unwrap()
    }

    #[test]
    fn lebesgue_cases() {
        let inf = f64::INFINITY;
        let th = embedding_threshold(EmbeddingKind::IntoLp, &tuple(2.0, 1.0, 0.0, 0.5)).unwrap();
        assert_eq!(th.boundary, Boundary::Closed);
        assert!(th.holds);
        // p < q: σ(2,∞) = -1/2, threshold (1-α)/2
        let th = embedding_threshold(EmbeddingKind::IntoLp, &tuple(2.0, inf, 0.25, 0.5)).unwrap();
        assert_eq!(th.boundary, Boundary::Open);
        assert!((th.s_threshold - 0.25).abs() < 1e-15);
        assert!(!th.holds);
        let th = embedding_threshold(EmbeddingKind::IntoLp, &tuple(inf, 1.0, 0.0, 0.0)).unwrap();
        assert_eq!(th.boundary, Boundary::Closed);
        let th = embedding_threshold(EmbeddingKind::IntoLp, &tuple(inf, 2.0, 0.0, 0.0)).unwrap();
        assert_eq!(th.boundary, Boundary::Open);
        assert!(embedding_threshold(EmbeddingKind::IntoLp, &tuple(2.0, 2.0, 0.0, -0.5)).is_err());
    }

    #[test]
    fn scale_cases() {
        let k = EmbeddingKind::ModScale { target_q: 1.0, target_s: 0.0 };
        let th = embedding_threshold(k, &tuple(2.0, 2.0, 0.0, 0.5)).unwrap();
        assert_eq!(th.boundary, Boundary::Open);
        assert!((th.s_threshold - 0.25).abs() < 1e-15);
        let k = EmbeddingKind::ModScale { target_q: 4.0, target_s: 1.0 };
        let th = embedding_threshold(k, &tuple(2.0, 2.0, 1.0, 0.5)).unwrap();
        assert_eq!(th.boundary, Boundary::Closed);
        assert!(th.holds);
    }

    #[test]
    fn modulation_cases() {
        assert!(embedding_threshold(EmbeddingKind::MpqsIntoAlpha, &tuple(2.0, 2.0, 0.0, 0.0)).is_err());
        assert!(embedding_threshold(EmbeddingKind::AlphaIntoMpq, &tuple(2.0, 2.0, 0.0, 0.5)).is_err());
        // τ(1, ∞) = 0, σ(1, ∞) = -1
        let th = embedding_threshold(EmbeddingKind::MpqsIntoAlpha, &tuple(1.0, f64::INFINITY, 0.0, 0.5)).unwrap();
        assert!((th.s_threshold - 0.5).abs() < 1e-15);
        let th = embedding_threshold(EmbeddingKind::AlphaIntoMpq, &tuple(1.0, f64::INFINITY, 0.0, -1.0)).unwrap();
        assert!((th.s_threshold - 1.0).abs() < 1e-15);
    }
}
