use gauss_holder::gauss::QuadExpFunction;
use gauss_holder::{Error, Result};

use crate::config::{sym, FunctionSpec};

impl FunctionSpec {
    /// Input dimension, or `None` when any dimension works.
    pub fn dim(&self) -> Option<usize> {
        match self {
            FunctionSpec::ExpLinear { alpha } => Some(alpha.len()),
            FunctionSpec::Gaussian { linear, .. } => Some(linear.len()),
            FunctionSpec::IndicatorBox { bounds } => Some(bounds.len()),
            FunctionSpec::RationalBump {} => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            FunctionSpec::ExpLinear { alpha } => alpha.iter().zip(x).map(|(a, v)| a * v).sum::<f64>().exp(),
            FunctionSpec::Gaussian { scale, linear, quad } => {
                let lin: f64 = linear.iter().zip(x).map(|(a, v)| a * v).sum();
                let q: f64 = quad
                    .iter()
                    .zip(x)
                    .map(|(row, xi)| xi * row.iter().zip(x).map(|(m, xj)| m * xj).sum::<f64>())
                    .sum();
                scale * (lin - 0.5 * q).exp()
            }
            FunctionSpec::IndicatorBox { bounds } => {
                let inside = bounds.iter().zip(x).all(|([lo, hi], v)| (*lo..=*hi).contains(v));
                if inside {
                    1.0
                } else {
                    0.0
                }
            }
            FunctionSpec::RationalBump {} => 1.0 / (1.0 + x.iter().map(|v| v * v).sum::<f64>()),
        }
    }

    /// The closed-form representation, for the two exponential kinds.
    pub fn quad_exp(&self) -> Option<Result<QuadExpFunction>> {
        match self {
            FunctionSpec::ExpLinear { alpha } => Some(Ok(QuadExpFunction::exp_linear(alpha))),
            FunctionSpec::Gaussian { scale, linear, quad } => {
                Some(sym(quad).and_then(|q| QuadExpFunction::new(*scale, linear.clone(), q)))
            }
            _ => None,
        }
    }

    /// Checks the shape against an expected input dimension.
    pub fn check(&self, dim: usize) -> Result<()> {
        if let FunctionSpec::Gaussian { quad, linear, .. } = self {
            if quad.len() != linear.len() || quad.iter().any(|r| r.len() != linear.len()) {
                return Err(Error::InvalidInput("gaussian quad must be square and match linear".into()));
            }
        }
        if let FunctionSpec::IndicatorBox { bounds } = self {
            if bounds.iter().any(|[lo, hi]| !(lo <= hi)) {
                return Err(Error::InvalidInput("indicator_box bounds need lo ≤ hi".into()));
            }
        }
        match self.dim() {
            Some(d) if d != dim => Err(Error::InvalidInput(format!("function has dimension {d}, expected {dim}"))),
            _ => Ok(()),
        }
    }
}

/// All closed forms, or `None` if any function lacks one.
pub fn all_quad_exp(fs: &[FunctionSpec]) -> Result<Option<Vec<QuadExpFunction>>> {
    let mut out = Vec::with_capacity(fs.len());
    for f in fs {
        match f.quad_exp() {
            Some(q) => out.push(q?),
            None => return Ok(None),
        }
    }
    Ok(Some(out))
}
