//! Degree distributions of LDPC ensembles.
//!
//! A [`DegreeDistribution`] stores sparse degree fractions either from the
//! node perspective (`L_i`, `R_i`: fraction of nodes of degree `i`) or from the
//! edge perspective (`lambda_i`, `rho_i`: fraction of edges attached to a node
//! of degree `i`). The two are related by `lambda_i = i L_i / sum_j j L_j`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Tolerance on the fraction sum for internally produced distributions.
pub const STRICT_TOLERANCE: f64 = 1e-9;
/// Tolerance on the fraction sum when ingesting rounded published tables.
pub const LENIENT_TOLERANCE: f64 = 2e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Perspective {
    Node,
    Edge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Variable,
    Check,
}

/// Validation policy for raw coefficient maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validation {
    pub tolerance: f64,
    /// Rescale to an exact unit sum after the tolerance check passed.
    pub normalize: bool,
    pub allow_degree_one_checks: bool,
}

impl Validation {
    pub const STRICT: Validation = Validation {
        tolerance: STRICT_TOLERANCE,
        normalize: false,
        allow_degree_one_checks: false,
    };
    pub const LENIENT: Validation = Validation {
        tolerance: LENIENT_TOLERANCE,
        normalize: true,
        allow_degree_one_checks: false,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    coeffs: BTreeMap<u32, f64>,
    perspective: Perspective,
    side: Side,
}

impl DegreeDistribution {
    /// Strict validation: the fractions must already sum to one within `1e-9`.
    pub fn validate<I>(raw: I, perspective: Perspective, side: Side) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, f64)>,
    {
        Self::validate_with(raw, perspective, side, Validation::STRICT)
    }

    pub fn validate_with<I>(
        raw: I,
        perspective: Perspective,
        side: Side,
        policy: Validation,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, f64)>,
    {
        let mut coeffs = BTreeMap::new();
        let mut seen = false;
        for (degree, fraction) in raw {
            seen = true;
            if degree == 0 {
                return Err(Error::ZeroDegree);
            }
            if !(fraction >= 0.0) {
                return Err(Error::NegativeFraction { degree, fraction });
            }
            if degree == 1 && side == Side::Check && !policy.allow_degree_one_checks && fraction > 0.0
            {
                return Err(Error::DegreeOneCheck);
            }
            if fraction > 0.0 {
                *coeffs.entry(degree).or_insert(0.0) += fraction;
            }
        }
        if !seen {
            return Err(Error::EmptyDistribution);
        }
        let sum: f64 = coeffs.values().sum();
        if (sum - 1.0).abs() > policy.tolerance {
            return Err(Error::SumNotOne {
                sum,
                tolerance: policy.tolerance,
            });
        }
        if policy.normalize {
            for v in coeffs.values_mut() {
                *v /= sum;
            }
        }
        Ok(DegreeDistribution {
            coeffs,
            perspective,
            side,
        })
    }

    /// Single-degree distribution (`{d: 1.0}`), identical in both perspectives.
    pub fn regular(degree: u32, perspective: Perspective, side: Side) -> Result<Self> {
        Self::validate([(degree, 1.0)], perspective, side)
    }

    pub fn perspective(&self) -> Perspective {
        self.perspective
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn fraction(&self, degree: u32) -> f64 {
        self.coeffs.get(&degree).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.coeffs.iter().map(|(&d, &f)| (d, f))
    }

    pub fn degrees(&self) -> impl Iterator<Item = u32> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn max_degree(&self) -> u32 {
        self.coeffs.keys().next_back().copied().unwrap_or(0)
    }

    pub fn min_degree(&self) -> u32 {
        self.coeffs.keys().next().copied().unwrap_or(0)
    }

    /// Mean node degree, regardless of the stored perspective.
    pub fn mean_degree(&self) -> f64 {
        match self.perspective {
            Perspective::Node => self.iter().map(|(d, f)| d as f64 * f).sum(),
            Perspective::Edge => 1.0 / self.iter().map(|(d, f)| f / d as f64).sum::<f64>(),
        }
    }

    pub fn node_to_edge(&self) -> Self {
        match self.perspective {
            Perspective::Edge => self.clone(),
            Perspective::Node => {
                let mean = self.mean_degree();
                DegreeDistribution {
                    coeffs: self
                        .iter()
                        .map(|(d, f)| (d, d as f64 * f / mean))
                        .collect(),
                    perspective: Perspective::Edge,
                    side: self.side,
                }
            }
        }
    }

    pub fn edge_to_node(&self) -> Self {
        match self.perspective {
            Perspective::Node => self.clone(),
            Perspective::Edge => {
                let norm: f64 = self.iter().map(|(d, f)| f / d as f64).sum();
                DegreeDistribution {
                    coeffs: self
                        .iter()
                        .map(|(d, f)| (d, f / d as f64 / norm))
                        .collect(),
                    perspective: Perspective::Node,
                    side: self.side,
                }
            }
        }
    }

    /// Evaluates the generating polynomial: `sum c_i x^i` for the node
    /// perspective, `sum c_i x^(i-1)` for the edge perspective.
    pub fn eval_poly(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::DomainError(x));
        }
        Ok(self.eval(x))
    }

    /// Unchecked polynomial evaluation for hot loops; `x` is assumed in `[0,1]`.
    pub(crate) fn eval(&self, x: f64) -> f64 {
        let shift = match self.perspective {
            Perspective::Node => 0,
            Perspective::Edge => 1,
        };
        self.iter()
            .map(|(d, f)| f * x.powi((d - shift) as i32))
            .sum()
    }

    pub(crate) fn from_parts(coeffs: BTreeMap<u32, f64>, perspective: Perspective, side: Side) -> Self {
        DegreeDistribution {
            coeffs,
            perspective,
            side,
        }
    }
}

impl fmt::Display for DegreeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, (d, c)) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{d}: {c:.6}")?;
        }
        write!(f, "}}")
    }
}

/// `1 - mean(vn)/mean(cn)`.
pub fn design_rate(vn: &DegreeDistribution, cn: &DegreeDistribution) -> Result<f64> {
    if vn.side() != Side::Variable {
        return Err(Error::SideMismatch { expected: "variable-node" });
    }
    if cn.side() != Side::Check {
        return Err(Error::SideMismatch { expected: "check-node" });
    }
    let rate = 1.0 - vn.mean_degree() / cn.mean_degree();
    if rate > 0.0 && rate < 1.0 {
        Ok(rate)
    } else {
        Err(Error::RateOutOfRange(rate))
    }
}

/// An LDPC(lambda, rho) ensemble, stored in node perspective.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub vn: DegreeDistribution,
    pub cn: DegreeDistribution,
    pub design_rate: f64,
}

impl EnsembleSpec {
    pub fn new(vn: DegreeDistribution, cn: DegreeDistribution) -> Result<Self> {
        let design_rate = design_rate(&vn, &cn)?;
        Ok(EnsembleSpec {
            vn: vn.edge_to_node(),
            cn: cn.edge_to_node(),
            design_rate,
        })
    }

    pub fn lambda(&self) -> DegreeDistribution {
        self.vn.node_to_edge()
    }

    pub fn rho(&self) -> DegreeDistribution {
        self.cn.node_to_edge()
    }

    /// Fraction `L_1` of degree-one variable nodes.
    pub fn degree_one_fraction(&self) -> f64 {
        self.vn.fraction(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vn(raw: &[(u32, f64)]) -> Result<DegreeDistribution> {
        DegreeDistribution::validate(raw.iter().copied(), Perspective::Node, Side::Variable)
    }

    #[test]
    fn validate_accepts_and_rejects() {
        assert!(vn(&[(2, 1.0)]).is_ok());
        assert!(vn(&[(1, 0.376), (2, 0.594), (5, 0.014), (6, 0.016)]).is_ok());
        assert!(matches!(
            vn(&[(2, 0.5), (3, 0.6)]),
            Err(Error::SumNotOne { .. })
        ));
        assert!(matches!(vn(&[(0, 1.0)]), Err(Error::ZeroDegree)));
        assert!(matches!(
            vn(&[(2, 1.2), (3, -0.2)]),
            Err(Error::NegativeFraction { .. })
        ));
        assert!(matches!(vn(&[]), Err(Error::EmptyDistribution)));
        assert!(matches!(
            DegreeDistribution::validate([(1, 0.5), (4, 0.5)], Perspective::Node, Side::Check),
            Err(Error::DegreeOneCheck)
        ));
    }

    #[test]
    fn strict_validation_never_renormalizes() {
        let d = DegreeDistribution::validate(
            [(2, 0.5), (3, 0.5 + 5e-10)],
            Perspective::Node,
            Side::Variable,
        )
        .unwrap();
        assert_eq!(d.fraction(3), 0.5 + 5e-10);
    }

    #[test]
    fn lenient_validation_normalizes_rounded_tables() {
        let raw = [(4, 0.586), (5, 0.188), (10, 0.227)];
        assert!(DegreeDistribution::validate(raw, Perspective::Node, Side::Check).is_err());
        let d = DegreeDistribution::validate_with(raw, Perspective::Node, Side::Check, Validation::LENIENT)
            .unwrap();
        let sum: f64 = d.iter().map(|(_, f)| f).sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn node_to_edge_examples() {
        let reg = vn(&[(2, 1.0)]).unwrap().node_to_edge();
        assert_eq!(reg.fraction(2), 1.0);

        let e = vn(&[(1, 0.5), (3, 0.5)]).unwrap().node_to_edge();
        assert!((e.fraction(1) - 0.25).abs() < 1e-15);
        assert!((e.fraction(3) - 0.75).abs() < 1e-15);

        // 0.376 / (0.376 + 2*0.594 + 5*0.014 + 6*0.016)
        let code1 = vn(&[(1, 0.376), (2, 0.594), (5, 0.014), (6, 0.016)]).unwrap();
        let lambda1 = code1.node_to_edge().fraction(1);
        assert!((lambda1 - 0.376 / 1.730).abs() < 1e-12);
        assert!((lambda1 - 0.2173).abs() < 1e-4);
    }

    #[test]
    fn design_rate_regular() {
        let v = vn(&[(2, 1.0)]).unwrap();
        let c = DegreeDistribution::regular(4, Perspective::Node, Side::Check).unwrap();
        assert!((design_rate(&v, &c).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(design_rate(&c, &v), Err(Error::SideMismatch { .. })));
        let c2 = DegreeDistribution::regular(2, Perspective::Node, Side::Check).unwrap();
        assert!(matches!(design_rate(&v, &c2), Err(Error::RateOutOfRange(_))));
    }

    #[test]
    fn eval_poly_examples() {
        let e = DegreeDistribution::regular(2, Perspective::Edge, Side::Variable).unwrap();
        assert_eq!(e.eval_poly(0.5).unwrap(), 0.5);
        assert_eq!(e.eval_poly(1.0).unwrap(), 1.0);
        assert!(matches!(e.eval_poly(1.5), Err(Error::DomainError(_))));
        assert!(matches!(e.eval_poly(-0.1), Err(Error::DomainError(_))));

        let code1 = vn(&[(1, 0.376), (2, 0.594), (5, 0.014), (6, 0.016)]).unwrap();
        let oracle = 0.376 * 0.5 + 0.594 * 0.25 + 0.014 * 0.03125 + 0.016 * 0.015625;
        assert!((code1.eval_poly(0.5).unwrap() - oracle).abs() < 1e-15);
        assert!((oracle - 0.3371).abs() < 1e-4);
        assert!((code1.eval_poly(1.0).unwrap() - 1.0).abs() < 1e-12);
    }
}
