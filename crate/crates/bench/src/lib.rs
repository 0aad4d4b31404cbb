//! Shared fixtures for the benchmarks.

use distreg::sim::{simulate, DgpConfig};
use distreg::{Dataset, Family, FormulaSet, ModelSpec};

/// Treatment, two covariates and a response drawn from `family`, with every
/// parameter depending on all three regressors.
pub fn dataset(family: Family, n: usize, seed: u64) -> Dataset {
    let mut text = format!(
        "family = \"{}\"\n\
         [[covariates]]\nname = \"T\"\nkind = \"bernoulli\"\np = 0.5\n\
         [[covariates]]\nname = \"x1\"\nkind = \"normal\"\nmean = 0.0\nsd = 0.5\n\
         [[covariates]]\nname = \"x2\"\nkind = \"uniform\"\nlo = -1.0\nhi = 1.0\n",
        family.name()
    );
    for (k, p) in family.params().iter().enumerate() {
        let intercept = match (family, k) {
            (Family::SinghMaddala, 1) => 1.2,
            (Family::SinghMaddala, 2) => 0.0,
            (_, 0) => 1.0,
            _ => -0.7,
        };
        text.push_str(&format!("[coefficients.{}]\n\"(Intercept)\" = {intercept}\nT = 0.1\nx1 = 0.1\nx2 = -0.1\n", p.symbol));
    }
    let dgp: DgpConfig = toml::from_str(&text).expect("fixture DGP parses");
    simulate(&dgp, n, seed).expect("fixture simulates").0
}

/// The model that generated [`dataset`].
pub fn spec(family: Family) -> ModelSpec {
    ModelSpec::new(family, "y", FormulaSet::uniform(family, "1 + T + x1 + x2").expect("formula parses"))
}
