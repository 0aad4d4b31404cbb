use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Invertible map from a parameter's domain onto the real line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Identity,
    Log,
    Logit,
}

impl Link {
    pub fn name(self) -> &'static str {
        match self {
            Link::Identity => "identity",
            Link::Log => "log",
            Link::Logit => "logit",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "identity" => Ok(Link::Identity),
            "log" => Ok(Link::Log),
            "logit" => Ok(Link::Logit),
            _ => Err(Error::Unknown {
                what: "link",
                name: name.to_string(),
            }),
        }
    }

    /// η = g(θ).
    pub fn apply(self, theta: f64) -> Result<f64> {
        let ok = match self {
            Link::Identity => theta.is_finite(),
            Link::Log => theta > 0.0 && theta.is_finite(),
            Link::Logit => theta > 0.0 && theta < 1.0,
        };
        if !ok {
            return Err(Error::Domain {
                param: format!("{} link argument", self.name()),
                value: theta,
                domain: self.domain_label(),
            });
        }
        Ok(self.apply_unchecked(theta))
    }

    pub(crate) fn apply_unchecked(self, theta: f64) -> f64 {
        match self {
            Link::Identity => theta,
            Link::Log => theta.ln(),
            Link::Logit => (theta / (1.0 - theta)).ln(),
        }
    }

    /// θ = g⁻¹(η).
    pub fn invert(self, eta: f64) -> f64 {
        match self {
            Link::Identity => eta,
            Link::Log => eta.exp(),
            Link::Logit => {
                if eta >= 0.0 {
                    1.0 / (1.0 + (-eta).exp())
                } else {
                    let e = eta.exp();
                    e / (1.0 + e)
                }
            }
        }
    }

    /// dθ/dη evaluated at θ.
    pub fn dtheta_deta(self, theta: f64) -> f64 {
        match self {
            Link::Identity => 1.0,
            Link::Log => theta,
            Link::Logit => theta * (1.0 - theta),
        }
    }

    /// d²θ/dη² evaluated at θ.
    pub fn d2theta_deta2(self, theta: f64) -> f64 {
        match self {
            Link::Identity => 0.0,
            Link::Log => theta,
            Link::Logit => theta * (1.0 - theta) * (1.0 - 2.0 * theta),
        }
    }

    fn domain_label(self) -> &'static str {
        match self {
            Link::Identity => "real line",
            Link::Log => "(0, inf)",
            Link::Logit => "(0, 1)",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn trivial_link_values() {
        assert_eq!(Link::Identity.apply(5.0).unwrap(), 5.0);
        assert_eq!(Link::Log.apply(1.0).unwrap(), 0.0);
        assert_eq!(Link::Logit.apply(0.5).unwrap(), 0.0);
    }

    #[test]
    fn domain_violations_are_rejected() {
        assert!(Link::Log.apply(0.0).is_err());
        assert!(Link::Log.apply(-1.0).is_err());
        assert!(Link::Logit.apply(1.0).is_err());
        assert!(Link::Identity.apply(f64::NAN).is_err());
    }

    #[test]
    fn names_round_trip() {
        for l in [Link::Identity, Link::Log, Link::Logit] {
            assert_eq!(Link::from_name(l.name()).unwrap(), l);
        }
        assert!(Link::from_name("probit").is_err());
    }

    proptest! {
        #[test]
        fn log_link_inverts(theta in 1e-6f64..1e6) {
            let back = Link::Log.invert(Link::Log.apply(theta).unwrap());
            prop_assert!((back - theta).abs() <= 1e-12 * theta);
        }

        #[test]
        fn logit_link_inverts(theta in 1e-6f64..(1.0 - 1e-6)) {
            let back = Link::Logit.invert(Link::Logit.apply(theta).unwrap());
            prop_assert!((back - theta).abs() <= 1e-12);
        }

        #[test]
        fn identity_link_inverts(theta in -1e6f64..1e6) {
            prop_assert_eq!(Link::Identity.invert(Link::Identity.apply(theta).unwrap()), theta);
        }
    }
}
