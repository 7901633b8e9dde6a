//! Scenario configuration: a versioned JSON document naming one of the six
//! pipeline kinds and its parameters.
//!
//! ```json
//! { "schema": "meanforce-scenario/1", "id": "my-run", "seed": 7,
//!   "kind": "classical_drift", "params": { "beta": 1.0 } }
//! ```
//!
//! Unknown fields are rejected at every level. Physical inputs without a
//! natural default (the inverse temperature) are required; every numerical
//! parameter has the default documented on its field.

use meanforce_classical::{
    CoupledOscillators, Integrator, SamplerConfig, DEFAULT_BINS_PER_AXIS, DEFAULT_DT, DEFAULT_MIN_COUNT,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const SCHEMA: &str = "meanforce-scenario/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    ClassicalDrift,
    RelevantDensity,
    QuantumInnerproduct,
    AppendixProbe,
    TclSplit,
    DecompositionIdentity,
}

impl Kind {
    pub const ALL: [Kind; 6] = [
        Kind::ClassicalDrift,
        Kind::RelevantDensity,
        Kind::QuantumInnerproduct,
        Kind::AppendixProbe,
        Kind::TclSplit,
        Kind::DecompositionIdentity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::ClassicalDrift => "classical_drift",
            Kind::RelevantDensity => "relevant_density",
            Kind::QuantumInnerproduct => "quantum_innerproduct",
            Kind::AppendixProbe => "appendix_probe",
            Kind::TclSplit => "tcl_split",
            Kind::DecompositionIdentity => "decomposition_identity",
        }
    }
}

/// Oscillator model: one system oscillator coupled to `n_env` environment
/// oscillators of the same mass and spring. `quartic > 0` adds `λ q_S² q_E²`
/// and needs `n_env = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Model {
    /// default 1
    pub mass: f64,
    /// default 1
    pub spring: f64,
    /// bilinear coupling `c`, default 0.5
    pub coupling: f64,
    /// default 0
    pub quartic: f64,
    /// default 1
    pub n_env: usize,
}

impl Default for Model {
    fn default() -> Self {
        Self { mass: 1.0, spring: 1.0, coupling: 0.5, quartic: 0.0, n_env: 1 }
    }
}

impl Model {
    pub fn build(&self) -> Result<CoupledOscillators> {
        if self.n_env == 0 {
            return Err(Error::Validation("model.n_env must be at least 1".into()));
        }
        let sys = if self.quartic != 0.0 {
            if self.n_env != 1 {
                return Err(Error::Validation("quartic coupling needs model.n_env = 1".into()));
            }
            CoupledOscillators::quartic_pair(self.mass, self.spring, self.coupling, self.quartic)?
        } else if self.n_env == 1 {
            CoupledOscillators::harmonic_pair(self.mass, self.spring, self.coupling)?
        } else {
            CoupledOscillators::harmonic_star(self.mass, self.spring, self.coupling, self.n_env)?
        };
        Ok(sys)
    }

    /// `k - n c²/k`, the effective spring of the bilinear model.
    pub fn expected_spring(&self) -> Option<f64> {
        (self.quartic == 0.0).then(|| self.spring - self.n_env as f64 * self.coupling.powi(2) / self.spring)
    }
}

fn one_million() -> usize {
    1_000_000
}
fn default_bins() -> usize {
    DEFAULT_BINS_PER_AXIS
}
fn default_min_count() -> u64 {
    DEFAULT_MIN_COUNT
}
fn hundred() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalDriftParams {
    pub beta: f64,
    #[serde(default)]
    pub model: Model,
    /// default 10⁶
    #[serde(default = "one_million")]
    pub samples: usize,
    /// default 8 chains, burn-in 10⁴, thinning 10, tuned step
    #[serde(default)]
    pub sampler: SamplerConfig,
    /// bins per axis of the `(q_S, p_S)` grid, default 64
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// minimum count of a bin and its neighbours for residual statistics, default 25
    #[serde(default = "default_min_count")]
    pub min_count: u64,
    /// random polynomial observables for the Zwanzig/Mori norm check, default 100
    #[serde(default = "hundred")]
    pub norm_checks: usize,
}

fn default_density_bins() -> usize {
    48
}
fn default_times() -> Vec<f64> {
    vec![0.0, 0.05, 0.1]
}
fn default_dt() -> f64 {
    DEFAULT_DT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelevantDensityParams {
    pub beta: f64,
    #[serde(default)]
    pub model: Model,
    /// default 10⁶
    #[serde(default = "one_million")]
    pub samples: usize,
    #[serde(default)]
    pub sampler: SamplerConfig,
    /// default 48
    #[serde(default = "default_density_bins")]
    pub bins: usize,
    /// default 25
    #[serde(default = "default_min_count")]
    pub min_count: u64,
    /// shift of `(q_S, p_S)` applied to the equilibrium samples; empty means none
    #[serde(default)]
    pub displacement: Vec<f64>,
    /// three or more increasing times starting at 0, default [0, 0.05, 0.1]
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    /// integrator step, default 0.01
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// default yoshida4
    #[serde(default)]
    pub integrator: Integrator,
}

fn fifty() -> usize {
    50
}
fn sixteen() -> usize {
    16
}
fn four() -> usize {
    4
}
fn three() -> usize {
    3
}
fn sixty_four() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumInnerproductParams {
    /// inverse temperatures, cycled over the instances
    pub betas: Vec<f64>,
    /// random `(H, β, X)` instances for the Σ relation, default 50
    #[serde(default = "fifty")]
    pub instances: usize,
    /// largest Hilbert dimension, default 16
    #[serde(default = "sixteen")]
    pub max_dim: usize,
    /// random product-state instances for the reduced-space checks, default 50
    #[serde(default = "fifty")]
    pub factorized_instances: usize,
    /// default 4
    #[serde(default = "four")]
    pub max_system_dim: usize,
    /// default 3
    #[serde(default = "three")]
    pub max_env_dim: usize,
    /// Gauss-Legendre nodes of the α-quadrature cross-check (dimensions ≤ 4 only), default 64
    #[serde(default = "sixty_four")]
    pub quadrature_nodes: usize,
}

fn default_table() -> Vec<Vec<f64>> {
    vec![vec![0.5, 0.1], vec![0.1, 0.3]]
}
fn sigma_x() -> Vec<Vec<f64>> {
    vec![vec![0.0, 1.0], vec![1.0, 0.0]]
}
fn default_mixing() -> f64 {
    1.0
}
fn default_epsilons() -> Vec<f64> {
    vec![0.0, 0.125, 0.25, 0.5, 0.75, 1.0]
}
fn twenty() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppendixProbeParams {
    pub beta: f64,
    /// joint table `p_ij`, default [[0.5, 0.1], [0.1, 0.3]]
    #[serde(default = "default_table")]
    pub probabilities: Vec<Vec<f64>>,
    /// real symmetric system observable, default σ_x
    #[serde(default = "sigma_x")]
    pub x_system: Vec<Vec<f64>>,
    /// ε of the headline probe on `(1-ε)·p_i q_j + ε·p_ij`, default 1
    #[serde(default = "default_mixing")]
    pub mixing: f64,
    /// default [0, 0.125, 0.25, 0.5, 0.75, 1]
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    /// random product tables, default 20
    #[serde(default = "twenty")]
    pub factorized_instances: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    HilbertSchmidt,
    KuboAveraged,
    ClassicalWeighted,
    Deformed,
}

fn two() -> usize {
    2
}
fn half() -> f64 {
    0.5
}
fn default_t_max() -> f64 {
    3.0
}
fn thirty() -> usize {
    30
}
fn default_metrics() -> Vec<Metric> {
    vec![Metric::HilbertSchmidt, Metric::KuboAveraged]
}
fn milli() -> f64 {
    1e-3
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TclSplitParams {
    /// temperature of the environment state and of `H*_S`
    pub beta: f64,
    /// default 2
    #[serde(default = "two")]
    pub d_system: usize,
    /// default 2
    #[serde(default = "two")]
    pub d_env: usize,
    /// scale of the random interaction, default 0.5
    #[serde(default = "half")]
    pub coupling: f64,
    /// default 3
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    /// intervals of the uniform time grid, default 30
    #[serde(default = "thirty")]
    pub n_times: usize,
    /// default [hilbert_schmidt, kubo_averaged]; weighted metrics use the reduced Gibbs state
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    /// α of the deformed metric, default 0.5
    #[serde(default = "half")]
    pub alpha: f64,
    /// random Hamiltonian perturbations in the minimality check, default 20
    #[serde(default = "twenty")]
    pub perturbations: usize,
    /// Frobenius size of each perturbation, default 1e-3
    #[serde(default = "milli")]
    pub perturbation_size: f64,
    /// trace distance at which ρ_S(t_max) counts as equilibrated, default 1e-3
    #[serde(default = "milli")]
    pub equilibration_tol: f64,
    /// also run the same Hamiltonians with the interaction switched off, default true
    #[serde(default = "yes")]
    pub uncoupled_reference: bool,
}

fn five() -> usize {
    5
}
fn default_horizon() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionParams {
    /// temperature of the Gibbs weight behind the projector
    pub beta: f64,
    /// default 2
    #[serde(default = "two")]
    pub d_system: usize,
    /// default 2
    #[serde(default = "two")]
    pub d_env: usize,
    /// default 5
    #[serde(default = "five")]
    pub instances: usize,
    /// checkpoints at `horizon·k/checkpoints`, default 2
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// default 4, i.e. t = 0.5, 1, 1.5, 2
    #[serde(default = "four")]
    pub checkpoints: usize,
    /// add a random Lindblad term to every other generator, default true
    #[serde(default = "yes")]
    pub dissipative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    ClassicalDrift(ClassicalDriftParams),
    RelevantDensity(RelevantDensityParams),
    QuantumInnerproduct(QuantumInnerproductParams),
    AppendixProbe(AppendixProbeParams),
    TclSplit(TclSplitParams),
    DecompositionIdentity(DecompositionParams),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub schema: String,
    pub id: String,
    pub seed: u64,
    pub kind: Kind,
    pub params: Params,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema: String,
    id: String,
    #[serde(default)]
    seed: u64,
    kind: Kind,
    #[serde(default = "empty_object")]
    params: Value,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

fn invalid(e: impl std::fmt::Display) -> Error {
    Error::Validation(e.to_string())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Validation(format!("{name} must be positive and finite, got {v}")))
    }
}

fn at_least(name: &str, v: usize, min: usize) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(Error::Validation(format!("{name} must be at least {min}, got {v}")))
    }
}

fn parse_params(kind: Kind, v: Value) -> Result<Params> {
    let p = match kind {
        Kind::ClassicalDrift => Params::ClassicalDrift(serde_json::from_value(v).map_err(invalid)?),
        Kind::RelevantDensity => Params::RelevantDensity(serde_json::from_value(v).map_err(invalid)?),
        Kind::QuantumInnerproduct => Params::QuantumInnerproduct(serde_json::from_value(v).map_err(invalid)?),
        Kind::AppendixProbe => Params::AppendixProbe(serde_json::from_value(v).map_err(invalid)?),
        Kind::TclSplit => Params::TclSplit(serde_json::from_value(v).map_err(invalid)?),
        Kind::DecompositionIdentity => Params::DecompositionIdentity(serde_json::from_value(v).map_err(invalid)?),
    };
    p.validate()?;
    Ok(p)
}

impl Params {
    fn validate(&self) -> Result<()> {
        match self {
            Params::ClassicalDrift(p) => {
                positive("beta", p.beta)?;
                p.model.build()?;
                at_least("samples", p.samples, 1000)?;
                at_least("bins", p.bins, meanforce_classical::grid::MIN_BINS_PER_AXIS)?;
            }
            Params::RelevantDensity(p) => {
                positive("beta", p.beta)?;
                p.model.build()?;
                at_least("samples", p.samples, 1000)?;
                at_least("bins", p.bins, meanforce_classical::grid::MIN_BINS_PER_AXIS)?;
                if !p.displacement.is_empty() && p.displacement.len() != 2 {
                    return Err(invalid("displacement must be empty or [dq, dp]"));
                }
                at_least("times", p.times.len(), 3)?;
                if p.times[0] != 0.0 || p.times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(invalid("times must start at 0 and increase"));
                }
                positive("dt", p.dt)?;
            }
            Params::QuantumInnerproduct(p) => {
                if p.betas.is_empty() {
                    return Err(invalid("betas must not be empty"));
                }
                for &b in &p.betas {
                    positive("beta", b)?;
                }
                at_least("max_dim", p.max_dim, 2)?;
                at_least("max_system_dim", p.max_system_dim, 2)?;
                at_least("max_env_dim", p.max_env_dim, 1)?;
                at_least("quadrature_nodes", p.quadrature_nodes, 2)?;
            }
            Params::AppendixProbe(p) => {
                positive("beta", p.beta)?;
                if !(0.0..=1.0).contains(&p.mixing) || p.epsilons.iter().any(|e| !(0.0..=1.0).contains(e)) {
                    return Err(invalid("mixing parameters must lie in [0, 1]"));
                }
                let d = p.probabilities.len();
                if d == 0 || p.x_system.len() != d || p.x_system.iter().any(|r| r.len() != d) {
                    return Err(invalid("x_system must be square with one row per system level"));
                }
                for i in 0..d {
                    for j in 0..i {
                        if p.x_system[i][j] != p.x_system[j][i] {
                            return Err(invalid("x_system must be symmetric"));
                        }
                    }
                }
            }
            Params::TclSplit(p) => {
                positive("beta", p.beta)?;
                at_least("d_system", p.d_system, 2)?;
                at_least("d_env", p.d_env, 1)?;
                positive("t_max", p.t_max)?;
                at_least("n_times", p.n_times, 2)?;
                if p.metrics.is_empty() {
                    return Err(invalid("metrics must not be empty"));
                }
                if !(0.0..=1.0).contains(&p.alpha) {
                    return Err(invalid("alpha must lie in [0, 1]"));
                }
                positive("perturbation_size", p.perturbation_size)?;
                positive("equilibration_tol", p.equilibration_tol)?;
                if !p.coupling.is_finite() {
                    return Err(invalid("coupling must be finite"));
                }
            }
            Params::DecompositionIdentity(p) => {
                positive("beta", p.beta)?;
                at_least("d_system", p.d_system, 1)?;
                at_least("d_env", p.d_env, 1)?;
                at_least("checkpoints", p.checkpoints, 1)?;
                positive("horizon", p.horizon)?;
            }
        }
        Ok(())
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawScenario = serde_json::from_str(text).map_err(invalid)?;
        if raw.schema != SCHEMA {
            return Err(Error::Validation(format!("schema must be \"{SCHEMA}\", got \"{}\"", raw.schema)));
        }
        check_id(&raw.id)?;
        Ok(Self { schema: raw.schema, id: raw.id, seed: raw.seed, kind: raw.kind, params: parse_params(raw.kind, raw.params)? })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// The configuration with every default filled in.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn params_value(&self) -> Value {
        serde_json::to_value(&self.params).expect("params serialize")
    }

    /// Copy with the numeric parameter at dotted `path` (relative to
    /// `params`) set to `value`.
    pub fn with_param(&self, path: &str, value: f64) -> Result<Self> {
        let mut root = self.params_value();
        let mut slot = &mut root;
        for key in path.split('.') {
            slot = slot
                .as_object_mut()
                .and_then(|m| m.get_mut(key))
                .ok_or_else(|| Error::Validation(format!("{} has no parameter \"{path}\"", self.kind.name())))?;
        }
        let new = if slot.is_u64() || slot.is_i64() {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(Error::Validation(format!("parameter \"{path}\" takes a non-negative integer, got {value}")));
            }
            Value::from(value as u64)
        } else if slot.is_f64() || slot.is_null() {
            serde_json::Number::from_f64(value)
                .map(Value::Number)
                .ok_or_else(|| Error::Validation(format!("value {value} is not finite")))?
        } else {
            return Err(Error::Validation(format!("parameter \"{path}\" is not numeric")));
        };
        *slot = new;
        Ok(Self { params: parse_params(self.kind, root)?, ..self.clone() })
    }
}

fn check_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::Validation(format!("id \"{id}\" must be non-empty ASCII letters, digits, '-', '_' or '.'")))
    }
}

pub struct Builtin {
    pub id: &'static str,
    pub kind: Kind,
    pub verifies: &'static str,
    config: fn() -> Value,
}

impl Builtin {
    pub fn scenario(&self) -> Scenario {
        let v = serde_json::json!({
            "schema": SCHEMA,
            "id": self.id,
            "seed": 20240601u64,
            "kind": self.kind,
            "params": (self.config)(),
        });
        Scenario::from_json(&v.to_string()).expect("built-in scenarios are valid")
    }
}

pub const BUILTINS: [Builtin; 8] = [
    Builtin {
        id: "harmonic-pair-default",
        kind: Kind::ClassicalDrift,
        verifies: "classical drift term: the conditional average of {A, H} equals {A, H*} for two bilinearly \
                   coupled oscillators (m = k = 1, c = 0.5, β = 1, 10⁶ samples); effective spring k - c²/k = 0.75 \
                   from the closed-form Gaussian mean force; Zwanzig vs Mori projection norms",
        config: || serde_json::json!({ "beta": 1.0 }),
    },
    Builtin {
        id: "quartic-pair-default",
        kind: Kind::ClassicalDrift,
        verifies: "classical drift term with an anharmonic λ q_S² q_E² coupling, checked against the quadrature \
                   mean force; ‖𝒫^Z B‖ ≥ ‖𝒫^M B‖ for 100 random polynomial observables",
        config: || serde_json::json!({ "beta": 1.0, "model": { "quartic": 0.1 } }),
    },
    Builtin {
        id: "relevant-density-equilibrium",
        kind: Kind::RelevantDensity,
        verifies: "Poisson-bracket drift of the relevant density: at equilibrium {H*, p} and ∂p/∂t both vanish \
                   within statistical error (quartic pair)",
        config: || serde_json::json!({ "beta": 1.0, "model": { "quartic": 0.1 } }),
    },
    Builtin {
        id: "relevant-density-displaced",
        kind: Kind::RelevantDensity,
        verifies: "relevant density out of equilibrium: for an uncoupled oscillator displaced from equilibrium, \
                   ∂p/∂t equals {H*, p} bin by bin",
        config: || serde_json::json!({ "beta": 1.0, "model": { "coupling": 0.0 }, "displacement": [1.0, 0.5] }),
    },
    Builtin {
        id: "quantum-innerproduct-default",
        kind: Kind::QuantumInnerproduct,
        verifies: "Kubo-averaged product and the Σ map: the relation -Σ[X, H] = (1/β)[X, ϱ] on random (H, β, X) up \
                   to d = 16; the reduced-space necessary condition and the mean-force drift i[H*_S, X_S] for \
                   factorized Gibbs states; closed-form Σ against α-quadrature",
        config: || serde_json::json!({ "betas": [0.1, 1.0, 5.0] }),
    },
    Builtin {
        id: "appendix-probe-default",
        kind: Kind::AppendixProbe,
        verifies: "appendix probe for classical-classical states: reduced Kubo product (q1) against the system-space \
                   one (Q2); zero residual for factorized tables, ε-sweep toward the product state, closed form \
                   against α-quadrature; correlated residuals are reported as findings",
        config: || serde_json::json!({ "beta": 1.0 }),
    },
    Builtin {
        id: "tcl-split-default",
        kind: Kind::TclSplit,
        verifies: "time-local generator K = V̇V⁻¹ of a qubit coupled to a qubit environment and its \
                   minimal-dissipation split into -i[H_eff, ·] + D; pure commutators, orthogonality, perturbative \
                   minimality, H_SE = 0 reference, work flux and H_eff against H*_S",
        config: || serde_json::json!({ "beta": 1.0 }),
    },
    Builtin {
        id: "decomposition-identity-default",
        kind: Kind::DecompositionIdentity,
        verifies: "splitting of the full propagator into projected, memory and orthogonal parts, Heisenberg and \
                   Schrödinger side, for random two-qubit generators and Grabert projectors at t = 0.5, 1, 1.5, 2",
        config: || serde_json::json!({ "beta": 1.0 }),
    },
];

pub fn builtin(id: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.id == id)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse_and_round_trip() {
        for b in &BUILTINS {
            let s = b.scenario();
            assert_eq!(s.kind, b.kind);
            let again = Scenario::from_json(&s.to_json()).unwrap();
            assert_eq!(again, s);
        }
        let kinds: std::collections::BTreeSet<_> = BUILTINS.iter().map(|b| b.kind).collect();
        assert_eq!(kinds.len(), Kind::ALL.len());
    }

    #[test]
    fn rejects_bad_documents() {
        let base = |params: &str| {
            format!(r#"{{"schema": "{SCHEMA}", "id": "x", "kind": "classical_drift", "params": {params}}}"#)
        };
        assert!(Scenario::from_json(&base(r#"{"beta": 1.0}"#)).is_ok());
        for bad in [r#"{}"#, r#"{"beta": 1.0, "colour": 3}"#, r#"{"beta": -1.0}"#, r#"{"beta": 1.0, "bins": 2}"#] {
            assert!(matches!(Scenario::from_json(&base(bad)), Err(Error::Validation(_))), "{bad}");
        }
        let extra = format!(r#"{{"schema": "{SCHEMA}", "id": "x", "kind": "tcl_split", "params": {{"beta": 1}}, "x": 1}}"#);
        assert!(Scenario::from_json(&extra).is_err());
        let schema = r#"{"schema": "other/9", "id": "x", "kind": "tcl_split", "params": {"beta": 1}}"#;
        assert!(Scenario::from_json(schema).is_err());
        let id = format!(r#"{{"schema": "{SCHEMA}", "id": "../x", "kind": "tcl_split", "params": {{"beta": 1}}}}"#);
        assert!(Scenario::from_json(&id).is_err());
    }

    #[test]
    fn numeric_overrides() {
        let s = builtin("harmonic-pair-default").unwrap().scenario();
        let t = s.with_param("model.coupling", 0.25).unwrap();
        let Params::ClassicalDrift(p) = &t.params else { panic!() };
        assert_eq!(p.model.coupling, 0.25);
        let t = s.with_param("samples", 2e5).unwrap();
        let Params::ClassicalDrift(p) = &t.params else { panic!() };
        assert_eq!(p.samples, 200_000);
        assert!(s.with_param("samples", 2.5).is_err());
        assert!(s.with_param("model.colour", 1.0).is_err());
        assert!(s.with_param("sampler.step", 0.7).is_ok());
        assert!(s.with_param("beta", -1.0).is_err());
    }
}
