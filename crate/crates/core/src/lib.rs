//! Distributional regression with penalized likelihood, inequality functionals of the
//! fitted conditional distributions, treatment-effect designs and resampling inference.

pub mod bootstrap;
pub mod data;
pub mod design;
pub mod diagnostics;
pub mod effects;
pub mod error;
pub mod families;
pub mod fit;
pub mod functionals;
pub mod linalg;
pub mod numeric;
pub mod rng;
pub mod sim;

pub use data::{Column, ColumnKind, Dataset, Factor};
pub use design::{Formula, FormulaSet, TermSpec};
pub use error::{Error, ErrorClass, Result};
pub use families::{Family, Link, ParamVector};
pub use fit::{fit, FitControl, FittedModel, ModelSpec};
pub use functionals::{DistSpec, FunctionalKind};
pub use effects::{CovariateProfile, EffectEstimate};
pub use bootstrap::{BootstrapResult, BootstrapRun, InferenceSummary};
