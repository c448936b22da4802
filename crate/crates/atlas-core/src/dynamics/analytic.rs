//! Analytic maps with known invariant sets, used to exercise the covering
//! algorithms against closed-form answers.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticMap {
    /// `x ↦ λx`; for |λ| < 1 the attractor is the origin.
    Scale { lambda: f64 },
    /// `(x, y) ↦ (λ_s x, λ_u y + c x²)` with |λ_s| < 1 < |λ_u|. The unstable
    /// manifold of the origin is exactly the y-axis: any tangency ansatz
    /// x = g(y) forces g ≡ 0, while the quadratic term makes the off-manifold
    /// dynamics nontrivial.
    Saddle2d { lambda_s: f64, lambda_u: f64, c: f64 },
    /// `(x, y) ↦ (1 - a x² + y, b x)`.
    Henon { a: f64, b: f64 },
}

impl AnalyticMap {
    /// Parse a map by name, using the conventional parameter defaults when
    /// `params` is empty.
    pub fn by_name(name: &str, params: &[f64]) -> Result<Self> {
        match name {
            "scale" => Ok(AnalyticMap::Scale { lambda: *params.first().unwrap_or(&0.5) }),
            "saddle-2d" => {
                let lambda_s = *params.first().unwrap_or(&0.4);
                let lambda_u = *params.get(1).unwrap_or(&-2.0);
                let c = *params.get(2).unwrap_or(&1.0);
                if lambda_s.abs() >= 1.0 || lambda_u.abs() <= 1.0 {
                    return Err(Error::InvalidConfig(
                        "saddle-2d requires |lambda_s| < 1 < |lambda_u|".into(),
                    ));
                }
                Ok(AnalyticMap::Saddle2d { lambda_s, lambda_u, c })
            }
            "henon" => Ok(AnalyticMap::Henon {
                a: *params.first().unwrap_or(&1.4),
                b: *params.get(1).unwrap_or(&0.3),
            }),
            other => Err(Error::UnknownMap(other.to_string())),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            AnalyticMap::Scale { .. } => 1,
            AnalyticMap::Saddle2d { .. } | AnalyticMap::Henon { .. } => 2,
        }
    }

    pub fn apply_slice(&self, x: &[f64]) -> Vec<f64> {
        match *self {
            AnalyticMap::Scale { lambda } => x.iter().map(|v| lambda * v).collect(),
            AnalyticMap::Saddle2d { lambda_s, lambda_u, c } => {
                vec![lambda_s * x[0], lambda_u * x[1] + c * x[0] * x[0]]
            }
            AnalyticMap::Henon { a, b } => {
                vec![1.0 - a * x[0] * x[0] + x[1], b * x[0]]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::analytic_map;
    use crate::state::ObservedPoint;

    #[test]
    fn scale_halves_coordinates() {
        let m = AnalyticMap::by_name("scale", &[0.5]).unwrap();
        let y = analytic_map(&ObservedPoint::new(vec![1.0, 1.0]), &m);
        assert_eq!(y.coords, vec![0.5, 0.5]);
    }

    #[test]
    fn saddle_fixes_origin() {
        let m = AnalyticMap::by_name("saddle-2d", &[]).unwrap();
        let y = analytic_map(&ObservedPoint::new(vec![0.0, 0.0]), &m);
        assert_eq!(y.coords, vec![0.0, 0.0]);
    }

    #[test]
    fn henon_maps_origin_by_formula() {
        // Oracle: direct evaluation (1 - a·0² + 0, b·0) = (1, 0).
        let m = AnalyticMap::by_name("henon", &[1.4, 0.3]).unwrap();
        let y = analytic_map(&ObservedPoint::new(vec![0.0, 0.0]), &m);
        assert_eq!(y.coords, vec![1.0, 0.0]);
    }

    #[test]
    fn unknown_name_is_rejected() {
        assert!(AnalyticMap::by_name("lorenz", &[]).is_err());
    }
}
