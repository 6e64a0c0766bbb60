//! Box embeddings, the relation and time projectors, the box intersection
//! operator, and point-to-box scoring.

pub(crate) mod boxes;
mod params;
mod plan;

pub use boxes::{distance, log_sigmoid, score, sigmoid, BoxEmbedding, Distance};
pub use params::{Block, ParamSlot, ParameterStore};
pub use plan::{QueryPlan, TimeConstraint};

use std::fmt;

use crate::error::{Error, Result};

/// How a subject is moved by a relation or timestamp embedding.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum Projector {
    /// `e + r`
    #[default]
    Translation,
    /// `e ⊙ r`
    Multiplicative,
}

/// Model variant switches. Flags combine freely.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Variant {
    pub projector: Projector,
    /// Add the point `r + t` to the center attention of the intersection.
    pub relation_time_point: bool,
    /// Train closed intervals on a sampled sub-interval (two time boxes).
    pub sample_interval: bool,
    /// Replace part of the entity negatives by time negatives.
    pub time_negatives: bool,
}

impl Variant {
    const DM: u32 = 1;
    const TR: u32 = 2;
    const SI: u32 = 4;
    const TNS: u32 = 8;

    pub fn code(&self) -> u32 {
        let mut code = 0;
        if self.projector == Projector::Multiplicative {
            code |= Self::DM;
        }
        if self.relation_time_point {
            code |= Self::TR;
        }
        if self.sample_interval {
            code |= Self::SI;
        }
        if self.time_negatives {
            code |= Self::TNS;
        }
        code
    }

    pub fn from_code(code: u32) -> Result<Variant> {
        if code & !(Self::DM | Self::TR | Self::SI | Self::TNS) != 0 {
            return Err(Error::InvalidConfig(format!("unknown variant code {code}")));
        }
        Ok(Variant {
            projector: if code & Self::DM != 0 {
                Projector::Multiplicative
            } else {
                Projector::Translation
            },
            relation_time_point: code & Self::TR != 0,
            sample_interval: code & Self::SI != 0,
            time_negatives: code & Self::TNS != 0,
        })
    }

    /// Parses a comma-separated list of `te`, `dm`, `tr`, `si`, `tns`.
    pub fn parse(list: &str) -> Result<Variant> {
        let mut variant = Variant::default();
        let (mut te, mut dm) = (false, false);
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match name.to_ascii_lowercase().as_str() {
                "te" => te = true,
                "dm" => dm = true,
                "tr" => variant.relation_time_point = true,
                "si" => variant.sample_interval = true,
                "tns" => variant.time_negatives = true,
                other => {
                    return Err(Error::InvalidConfig(format!("unknown variant `{other}`")));
                }
            }
        }
        if te && dm {
            return Err(Error::InvalidConfig("variants te and dm are exclusive".into()));
        }
        if dm {
            variant.projector = Projector::Multiplicative;
        }
        Ok(variant)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.projector {
            Projector::Translation => "te",
            Projector::Multiplicative => "dm",
        })?;
        for (on, name) in [
            (self.relation_time_point, "tr"),
            (self.sample_interval, "si"),
            (self.time_negatives, "tns"),
        ] {
            if on {
                write!(f, ",{name}")?;
            }
        }
        Ok(())
    }
}

/// Loss hyperparameters stored with the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyper {
    /// Margin.
    pub gamma: f64,
    /// Weight of the inside distance, in `[0, 1]`.
    pub alpha: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            gamma: 24.0,
            alpha: 0.2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names_and_codes() {
        let v = Variant::parse("dm,si").unwrap();
        assert_eq!(v.projector, Projector::Multiplicative);
        assert!(v.sample_interval && !v.time_negatives);
        assert_eq!(v.to_string(), "dm,si");
        assert_eq!(Variant::from_code(v.code()).unwrap(), v);
        assert_eq!(Variant::parse("te").unwrap(), Variant::default());
        assert!(Variant::parse("te,dm").is_err());
        assert!(Variant::parse("rotate").is_err());
        assert!(Variant::from_code(64).is_err());
        for code in 0..16 {
            let v = Variant::from_code(code).unwrap();
            assert_eq!(Variant::parse(&v.to_string()).unwrap(), v);
        }
    }
}
