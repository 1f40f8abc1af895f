use serde::{Deserialize, Serialize};

/// Smooth bijection between the real line (`u`) and a parameter's support (`x`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transform {
    Identity,
    /// `x = e^u` on `(0, inf)`.
    Log,
    /// `x = lo + e^u`.
    Lower { lo: f64 },
    /// `x = hi - e^u`.
    Upper { hi: f64 },
    /// `x = lo + (hi - lo) * sigmoid(u)`; a scaled inverse hyperbolic tangent.
    Interval { lo: f64, hi: f64 },
}

/// `ln(1 + e^u)` without overflow.
fn softplus(u: f64) -> f64 {
    if u > 30.0 { u + (-u).exp() } else { u.exp().ln_1p() }
}

impl Transform {
    pub fn for_support((lo, hi): (f64, f64)) -> Self {
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => Transform::Identity,
            (true, false) if lo == 0.0 => Transform::Log,
            (true, false) => Transform::Lower { lo },
            (false, true) => Transform::Upper { hi },
            (true, true) => Transform::Interval { lo, hi },
        }
    }

    pub fn to_constrained(&self, u: f64) -> f64 {
        match *self {
            Transform::Identity => u,
            Transform::Log => u.exp(),
            Transform::Lower { lo } => lo + u.exp(),
            Transform::Upper { hi } => hi - u.exp(),
            Transform::Interval { lo, hi } => {
                let s = if u >= 0.0 { 1.0 / (1.0 + (-u).exp()) } else { let e = u.exp(); e / (1.0 + e) };
                (lo + (hi - lo) * s).clamp(lo, hi)
            }
        }
    }

    /// Inverse map; points outside the support give non-finite values.
    pub fn to_unconstrained(&self, x: f64) -> f64 {
        match *self {
            Transform::Identity => x,
            Transform::Log => x.ln(),
            Transform::Lower { lo } => (x - lo).ln(),
            Transform::Upper { hi } => (hi - x).ln(),
            Transform::Interval { lo, hi } => ((x - lo) / (hi - x)).ln(),
        }
    }

    /// `ln |dx/du|`.
    pub fn log_jacobian(&self, u: f64) -> f64 {
        match *self {
            Transform::Identity => 0.0,
            Transform::Log | Transform::Lower { .. } | Transform::Upper { .. } => u,
            Transform::Interval { lo, hi } => (hi - lo).ln() - softplus(-u) - softplus(u),
        }
    }
}
