use std::path::PathBuf;

use evalexpr::{
    eval_number_with_context, ContextWithMutableFunctions, ContextWithMutableVariables,
    DefaultNumericTypes, Function, HashMapContext, Value,
};
use mqm_core::HalfInt;
use serde::{Deserialize, Serialize};

use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    /// Score of the pointer measurement against its width, `T = 0`.
    Fig1,
    /// `J ΔG` for thermal inputs.
    Fig2,
    /// Repeated weak measurement along a fixed axis.
    Fig3,
    /// `G(t)` for rounds of x, y, z weak measurements.
    Fig4,
    /// `G^max` against `N`.
    Fig5,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepTarget {
    Pointer,
    Thermal,
    Weak1d,
    Weak3d,
}

/// A pointer width, either fixed or a formula in `N` and `J = N/2`, e.g.
/// `"8*sqrt(N)"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaSpec {
    Value(f64),
    Rule(String),
}

impl DeltaSpec {
    pub fn rule(s: &str) -> Self {
        DeltaSpec::Rule(s.to_string())
    }

    pub fn eval(&self, n_particles: f64) -> Result<f64, RunError> {
        let value = match self {
            DeltaSpec::Value(v) => *v,
            DeltaSpec::Rule(expr) => eval_rule(expr, n_particles).map_err(|e| {
                RunError::Config(format!(
                    "delta: cannot evaluate \"{expr}\" at N = {n_particles}: {e}"
                ))
            })?,
        };
        if value > 0.0 && value.is_finite() {
            Ok(value)
        } else {
            Err(RunError::Config(format!(
                "delta: {self} gives {value} at N = {n_particles}, need a positive width"
            )))
        }
    }
}

impl std::fmt::Display for DeltaSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DeltaSpec::Value(v) => write!(f, "{v}"),
            DeltaSpec::Rule(r) => write!(f, "\"{r}\""),
        }
    }
}

fn eval_rule(expr: &str, n_particles: f64) -> Result<f64, evalexpr::EvalexprError> {
    let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
    ctx.set_value("N".into(), Value::from_float(n_particles))?;
    ctx.set_value("J".into(), Value::from_float(0.5 * n_particles))?;
    ctx.set_function(
        "sqrt".into(),
        Function::new(|a: &Value<DefaultNumericTypes>| {
            let x: f64 = a.as_number()?;
            Ok(Value::from_float(x.sqrt()))
        }),
    )?;
    eval_number_with_context(expr, &ctx)
}

/// Lists accept a bare scalar in place of a one-element list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

fn one_or_many<'de, D, T>(d: D) -> Result<Option<Vec<T>>, D::Error>
where
    D: serde::Deserializer<'de>,
    T: Deserialize<'de>,
{
    Ok(Option::<OneOrMany<T>>::deserialize(d)?.map(|v| match v {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(xs) => xs,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Required for `sweep`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<SweepTarget>,
    /// Particle numbers (fig4, fig5, weak3d sweeps).
    #[serde(
        default,
        deserialize_with = "one_or_many",
        skip_serializing_if = "Option::is_none"
    )]
    pub n_list: Option<Vec<u64>>,
    /// Total spins, multiples of 1/2 (fig1, fig2, fig3, pointer, thermal and
    /// weak1d sweeps).
    #[serde(
        default,
        deserialize_with = "one_or_many",
        skip_serializing_if = "Option::is_none"
    )]
    pub j_list: Option<Vec<f64>>,
    #[serde(
        default,
        deserialize_with = "one_or_many",
        skip_serializing_if = "Option::is_none"
    )]
    pub delta: Option<Vec<DeltaSpec>>,
    #[serde(
        default,
        deserialize_with = "one_or_many",
        skip_serializing_if = "Option::is_none"
    )]
    pub beta: Option<Vec<f64>>,
    /// `⟨S_z⟩/J`, an alternative to `beta`.
    #[serde(
        default,
        deserialize_with = "one_or_many",
        skip_serializing_if = "Option::is_none"
    )]
    pub polarization: Option<Vec<f64>>,
    /// Measurement counts reported by fig3 and weak1d sweeps.
    #[serde(
        default,
        deserialize_with = "one_or_many",
        skip_serializing_if = "Option::is_none"
    )]
    pub t_list: Option<Vec<u64>>,
    /// Rounds simulated per 3D curve; defaults to `max(20, ⌈12 Δ²/N⌉)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_trajectories: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

pub const DEFAULT_TRAJECTORIES: usize = 10_000;

/// Rounds needed to pass the maximum of `G(t)`: `t^max` sits near
/// `5.6 Δ²/N` for coherent inputs.
pub fn default_rounds(n_particles: u64, delta: f64) -> u64 {
    ((12.0 * delta * delta / n_particles as f64 - 1e-9).ceil() as u64).max(20)
}

fn rules(rs: &[&str]) -> Vec<DeltaSpec> {
    rs.iter().map(|r| DeltaSpec::rule(r)).collect()
}

impl ExperimentConfig {
    pub fn preset(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment,
            target: None,
            n_list: None,
            j_list: None,
            delta: None,
            beta: None,
            polarization: None,
            t_list: None,
            t_max: None,
            n_trajectories: None,
            seed: None,
            output: None,
        }
        .with_defaults()
    }

    pub fn from_json(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| RunError::Config(format!("invalid config: {e}")))
    }

    /// Fills every grid the experiment reads and leaves the rest untouched.
    pub fn with_defaults(mut self) -> Self {
        use ExperimentKind::*;
        let kind = self.experiment;
        if matches!(kind, Fig1 | Fig2 | Fig3) {
            self.j_list.get_or_insert_with(|| match kind {
                Fig1 => vec![1.0, 2.0, 3.0, 5.0, 8.0, 10.0, 14.0, 18.0],
                Fig2 => (1..=12).map(f64::from).collect(),
                _ => vec![2.0, 4.0, 8.0, 16.0],
            });
        }
        if matches!(kind, Fig4 | Fig5) {
            self.n_list.get_or_insert_with(|| match kind {
                Fig4 => vec![10, 20],
                _ => (1..=10).map(|k| 2 * k).collect(),
            });
        }
        match kind {
            Fig1 => {
                self.delta.get_or_insert_with(|| {
                    rules(&[
                        "0.25*sqrt(J/4)",
                        "0.5*sqrt(J/4)",
                        "0.75*sqrt(J/4)",
                        "sqrt(J/4)",
                        "1.25*sqrt(J/4)",
                        "1.5*sqrt(J/4)",
                        "2*sqrt(J/4)",
                        "3*sqrt(J/4)",
                    ])
                });
            }
            Fig2 => {
                if self.beta.is_none() {
                    self.polarization
                        .get_or_insert_with(|| vec![0.6, 0.8, 0.95]);
                }
            }
            Fig3 => {
                self.delta
                    .get_or_insert_with(|| vec![DeltaSpec::Value(10.0)]);
                self.t_list
                    .get_or_insert_with(|| vec![1, 4, 9, 16, 25, 49, 100, 225, 400, 900]);
            }
            Fig4 => {
                self.delta
                    .get_or_insert_with(|| rules(&["4*sqrt(N)", "8*sqrt(N)", "16*sqrt(N)"]));
            }
            Fig5 => {
                self.delta.get_or_insert_with(|| {
                    vec![DeltaSpec::rule("8*sqrt(N)"), DeltaSpec::Value(1.0)]
                });
            }
            Sweep => {}
        }
        if matches!(kind, Fig3 | Fig4 | Fig5)
            || matches!(self.target, Some(SweepTarget::Weak1d | SweepTarget::Weak3d))
        {
            self.n_trajectories.get_or_insert(DEFAULT_TRAJECTORIES);
        }
        self
    }

    /// The sweep target, or the figure's equivalent.
    pub fn target(&self) -> Result<SweepTarget, RunError> {
        Ok(match self.experiment {
            ExperimentKind::Fig1 => SweepTarget::Pointer,
            ExperimentKind::Fig2 => SweepTarget::Thermal,
            ExperimentKind::Fig3 => SweepTarget::Weak1d,
            ExperimentKind::Fig4 | ExperimentKind::Fig5 => SweepTarget::Weak3d,
            ExperimentKind::Sweep => self.target.ok_or_else(|| {
                RunError::Config(
                    "target: required for sweep (pointer | thermal | weak1d | weak3d)".into(),
                )
            })?,
        })
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let target = self.target()?;
        let err = |field: &str, msg: &str| Err(RunError::Config(format!("{field}: {msg}")));
        if self.seed.is_none() {
            return err("seed", "required (set it in the config or pass --seed)");
        }
        let spins = |this: &Self| -> Result<(), RunError> {
            match &this.j_list {
                None => err("j_list", "required"),
                Some(v) if v.is_empty() => err("j_list", "must not be empty"),
                Some(v) => {
                    for &j in v {
                        match HalfInt::from_f64(j) {
                            Ok(h) if h.twice() > 0 => {}
                            _ => {
                                return err(
                                    "j_list",
                                    &format!("{j} is not a positive multiple of 1/2"),
                                )
                            }
                        }
                    }
                    Ok(())
                }
            }
        };
        let particles = |this: &Self| -> Result<(), RunError> {
            match &this.n_list {
                None => err("n_list", "required"),
                Some(v) if v.is_empty() => err("n_list", "must not be empty"),
                Some(v) if v.contains(&0) => err("n_list", "particle numbers must be positive"),
                Some(_) => Ok(()),
            }
        };
        let widths = |this: &Self, ns: Vec<f64>| -> Result<(), RunError> {
            match &this.delta {
                None => err("delta", "required"),
                Some(v) if v.is_empty() => err("delta", "must not be empty"),
                Some(v) => {
                    for d in v {
                        for &n in &ns {
                            d.eval(n)?;
                        }
                    }
                    Ok(())
                }
            }
        };
        let trajectories = |this: &Self| -> Result<(), RunError> {
            match this.n_trajectories {
                Some(0) | None => err("n_trajectories", "must be at least 1"),
                Some(_) => Ok(()),
            }
        };
        let j_particles =
            |this: &Self| -> Vec<f64> { this.j_list.iter().flatten().map(|j| 2.0 * j).collect() };
        match target {
            SweepTarget::Pointer => {
                spins(self)?;
                widths(self, j_particles(self))?;
            }
            SweepTarget::Thermal => {
                spins(self)?;
                match (&self.beta, &self.polarization) {
                    (Some(_), Some(_)) => {
                        return err("beta", "give either beta or polarization, not both")
                    }
                    (None, None) => return err("polarization", "required (or beta)"),
                    (Some(b), None) if b.is_empty() => return err("beta", "must not be empty"),
                    (None, Some(p)) if p.is_empty() => {
                        return err("polarization", "must not be empty")
                    }
                    (Some(b), None) if b.iter().any(|x| x.is_nan()) => return err("beta", "NaN"),
                    (None, Some(p)) if p.iter().any(|x| !(0.0..=1.0).contains(x)) => {
                        return err("polarization", "values must lie in [0, 1]")
                    }
                    _ => {}
                }
            }
            SweepTarget::Weak1d => {
                spins(self)?;
                widths(self, j_particles(self))?;
                trajectories(self)?;
                match &self.t_list {
                    None => return err("t_list", "required"),
                    Some(v) if v.is_empty() => return err("t_list", "must not be empty"),
                    Some(v) if v.contains(&0) => {
                        return err("t_list", "measurement counts must be positive")
                    }
                    _ => {}
                }
            }
            SweepTarget::Weak3d => {
                particles(self)?;
                widths(
                    self,
                    self.n_list.iter().flatten().map(|&n| n as f64).collect(),
                )?;
                trajectories(self)?;
                if self.t_max == Some(0) {
                    return err("t_max", "must be positive");
                }
            }
        }
        Ok(())
    }
}
