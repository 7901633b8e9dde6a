pub mod classical;
pub mod quantum;

use crate::error::Result;
use crate::report::Artifacts;
use crate::scenario::{Params, Scenario};

pub fn execute(scenario: &Scenario, art: &mut Artifacts) -> Result<()> {
    let seed = scenario.seed;
    match &scenario.params {
        Params::ClassicalDrift(p) => classical::classical_drift(seed, p, art),
        Params::RelevantDensity(p) => classical::relevant_density(seed, p, art),
        Params::QuantumInnerproduct(p) => quantum::quantum_innerproduct(seed, p, art),
        Params::AppendixProbe(p) => quantum::appendix(seed, p, art),
        Params::TclSplit(p) => quantum::tcl_split(seed, p, art),
        Params::DecompositionIdentity(p) => quantum::decomposition(seed, p, art),
    }
}
