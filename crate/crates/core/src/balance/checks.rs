//! Hard-constraint checks over a (reaction, condition configuration) pair,
//! kept in a registry keyed by name so debate and rationale code can cite
//! individual checks.

use serde::{Deserialize, Serialize};

use super::{ByproductAnalysis, LeavingGroupTable};
use crate::condition::{ConditionConfig, SpeciesDictionary};
use crate::molgraph::ElementCounts;
use crate::reaction::{side_counts, Reaction};

pub const MASS_BALANCE: &str = "mass_balance";
pub const CHARGE_NEUTRALITY: &str = "charge_neutrality";
pub const BYPRODUCT_COMPATIBILITY: &str = "byproduct_compatibility";
pub const NO_REACTANT_IN_CONDITIONS: &str = "no_reactant_in_conditions";
pub const SOLVENT_ROLE: &str = "solvent_role";

/// Everything a check may consult besides the configuration itself.
#[derive(Debug, Clone, Copy)]
pub struct CheckContext<'a> {
    pub reaction: &'a Reaction,
    /// `None` when by-product analysis failed (products exceed reactants).
    pub byproducts: Option<&'a ByproductAnalysis>,
    pub species: &'a SpeciesDictionary,
    pub leaving_groups: &'a LeavingGroupTable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl ConstraintReport {
    pub fn from_checks(checks: Vec<CheckResult>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        ConstraintReport { checks, passed }
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn pass_fraction(&self) -> f64 {
        if self.checks.is_empty() {
            return 1.0;
        }
        self.checks.iter().filter(|c| c.passed).count() as f64 / self.checks.len() as f64
    }

    pub fn failed(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// A check returns `Ok(note)` on pass and `Err(reason)` on failure.
pub type CheckFn = fn(&CheckContext<'_>, &ConditionConfig) -> Result<String, String>;

#[derive(Debug, Clone)]
pub struct CheckRegistry {
    checks: Vec<(&'static str, CheckFn)>,
}

impl Default for CheckRegistry {
    fn default() -> Self {
        CheckRegistry {
            checks: vec![
                (MASS_BALANCE, mass_balance),
                (CHARGE_NEUTRALITY, charge_neutrality),
                (BYPRODUCT_COMPATIBILITY, byproduct_compatibility),
                (NO_REACTANT_IN_CONDITIONS, no_reactant_in_conditions),
                (SOLVENT_ROLE, solvent_role),
            ],
        }
    }
}

impl CheckRegistry {
    pub fn empty() -> Self {
        CheckRegistry { checks: Vec::new() }
    }

    pub fn register(&mut self, name: &'static str, check: CheckFn) {
        self.checks.retain(|(n, _)| *n != name);
        self.checks.push((name, check));
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.checks.iter().map(|(n, _)| *n)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.checks.iter().any(|(n, _)| *n == name)
    }

    pub fn run(&self, ctx: &CheckContext<'_>, config: &ConditionConfig) -> ConstraintReport {
        let checks = self
            .checks
            .iter()
            .map(|(name, f)| {
                let (passed, message) = match f(ctx, config) {
                    Ok(m) => (true, m),
                    Err(m) => (false, m),
                };
                CheckResult { name: name.to_string(), passed, message }
            })
            .collect();
        ConstraintReport::from_checks(checks)
    }
}

/// Runs the default registry.
pub fn run_hard_checks(ctx: &CheckContext<'_>, config: &ConditionConfig) -> ConstraintReport {
    CheckRegistry::default().run(ctx, config)
}

/// Elements the products carry beyond the reactants must be supplied by a
/// condition species of known structure.
fn mass_balance(ctx: &CheckContext<'_>, config: &ConditionConfig) -> Result<String, String> {
    let deficit: ElementCounts = (&side_counts(&ctx.reaction.products) - &side_counts(&ctx.reaction.reactants))
        .iter()
        .filter(|&(_, n)| n > 0)
        .collect();
    if deficit.is_zero() {
        return Ok("reactants cover every product element".into());
    }
    let supplied: Vec<_> = config
        .filled()
        .filter_map(|(_, name)| ctx.species.get(name)?.molecule.as_ref())
        .map(|m| m.element_counts())
        .collect();
    let missing: Vec<&str> = deficit
        .elements()
        .filter(|&e| !supplied.iter().any(|c| c.get(e) > 0))
        .map(|e| e.symbol())
        .collect();
    if missing.is_empty() {
        Ok(format!("product excess {deficit} supplied by conditions"))
    } else {
        Err(format!("no condition species supplies {}", missing.join(", ")))
    }
}

fn charge_neutrality(ctx: &CheckContext<'_>, config: &ConditionConfig) -> Result<String, String> {
    let q = |ms: &[crate::molgraph::Molecule]| ms.iter().map(|m| m.net_charge()).sum::<i32>();
    let (qr, qp) = (q(&ctx.reaction.reactants), q(&ctx.reaction.products));
    if qr != qp {
        return Err(format!("net charge {qr} on reactants vs {qp} on products"));
    }
    for (slot, name) in config.filled() {
        if let Some(m) = ctx.species.get(name).and_then(|s| s.molecule.as_ref()) {
            if m.net_charge() != 0 {
                return Err(format!("{slot} species {name} carries net charge {}", m.net_charge()));
            }
        }
    }
    Ok("all sides and condition species are neutral".into())
}

/// An acidic hydrogen-halide by-product needs a base to capture it.
fn byproduct_compatibility(ctx: &CheckContext<'_>, config: &ConditionConfig) -> Result<String, String> {
    let Some(top) = ctx.byproducts.and_then(|b| b.top()) else {
        return Ok("no by-product hypothesis".into());
    };
    if !top.is_hydrogen_halide(ctx.leaving_groups) {
        return Ok(format!("by-product {} needs no scavenger", top.label()));
    }
    match config.filled().find(|(_, name)| ctx.species.has_role(name, "base")) {
        Some((slot, name)) => Ok(format!("base {name} in {slot} captures {}", top.label())),
        None => Err(format!("base required to capture {}", top.label())),
    }
}

fn no_reactant_in_conditions(ctx: &CheckContext<'_>, config: &ConditionConfig) -> Result<String, String> {
    let keys: Vec<_> = ctx.reaction.reactants.iter().map(|m| m.key()).collect();
    for (slot, name) in config.filled() {
        if let Some(m) = ctx.species.get(name).and_then(|s| s.molecule.as_ref()) {
            if keys.contains(&m.key()) {
                return Err(format!("{slot} species {name} is also a reactant"));
            }
        }
    }
    Ok("no condition slot repeats a reactant".into())
}

fn solvent_role(ctx: &CheckContext<'_>, config: &ConditionConfig) -> Result<String, String> {
    for (slot, name) in config.filled().filter(|(s, _)| s.is_solvent()) {
        if let Some(sp) = ctx.species.get(name) {
            if !sp.roles.is_empty() && !sp.roles.contains("solvent") {
                return Err(format!("{slot} species {name} is not tagged solvent"));
            }
        }
    }
    Ok("solvent slots hold solvents".into())
}
