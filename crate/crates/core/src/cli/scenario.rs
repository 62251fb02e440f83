//! JSON scenario files.
//!
//! ```json
//! {
//!   "vessel": { "length": 200, "beam": 25, "deadweight": 45000,
//!               "volume_capacity": 120000, "light_mass": 15000, "light_kg": 2 },
//!   "water_density": 1.0,
//!   "mu": 4.0,
//!   "order": "normal",
//!   "cargoes": [ { "label": "1", "density": 0.8, "freight_rate": 4.5 } ],
//!   "include_ballast": true,
//!   "solver": { "multistart_count": 32, "rng_seed": 0 }
//! }
//! ```
//!
//! `order` is `"normal"`, `"reverse"`, or an array of 1-based cargo indices
//! listed bottom to top. `water_density`, `order`, `include_ballast` and
//! `solver` are optional. Unknown fields are rejected.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{
    assemble_problem, CargoType, Environment, LoadingOrder, Problem, StabilityPolicy, Vessel,
    Warning,
};
use crate::solver::SolverOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Value", into = "Value")]
pub struct OrderSpec(pub LoadingOrder);

impl Default for OrderSpec {
    fn default() -> Self {
        OrderSpec(LoadingOrder::Normal)
    }
}

impl TryFrom<Value> for OrderSpec {
    type Error = String;

    fn try_from(value: Value) -> std::result::Result<Self, String> {
        match &value {
            Value::String(s) => parse_order(s).map_err(|e| e.to_string()),
            Value::Array(items) => {
                let mut perm = Vec::with_capacity(items.len());
                for item in items {
                    match item.as_u64() {
                        Some(i) if i >= 1 => perm.push(i as usize - 1),
                        _ => {
                            return Err(format!(
                                "order entries must be 1-based indices, got {item}"
                            ))
                        }
                    }
                }
                Ok(OrderSpec(LoadingOrder::Explicit(perm)))
            }
            other => Err(format!(
                "order must be \"normal\", \"reverse\" or an index array, got {other}"
            )),
        }
    }
}

impl From<OrderSpec> for Value {
    fn from(order: OrderSpec) -> Value {
        match order.0 {
            LoadingOrder::Normal => Value::from("normal"),
            LoadingOrder::Reverse => Value::from("reverse"),
            LoadingOrder::Explicit(perm) => perm.iter().map(|i| Value::from(i + 1)).collect(),
        }
    }
}

/// Parses `normal`, `reverse`, or `perm=i,j,k` (1-based).
pub fn parse_order(text: &str) -> Result<OrderSpec> {
    match text.trim() {
        "normal" => Ok(OrderSpec(LoadingOrder::Normal)),
        "reverse" => Ok(OrderSpec(LoadingOrder::Reverse)),
        other => {
            let list = other.strip_prefix("perm=").ok_or_else(|| {
                Error::invalid(
                    "order",
                    format!("expected normal, reverse or perm=i,j,..., got `{other}`"),
                )
            })?;
            let perm = list
                .split(',')
                .map(|s| match s.trim().parse::<usize>() {
                    Ok(i) if i >= 1 => Ok(i - 1),
                    _ => Err(Error::invalid(
                        "order",
                        format!("bad permutation entry `{s}`"),
                    )),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(OrderSpec(LoadingOrder::Explicit(perm)))
        }
    }
}

fn default_water_density() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub vessel: Vessel,
    #[serde(default = "default_water_density")]
    pub water_density: f64,
    pub mu: f64,
    #[serde(default)]
    pub order: OrderSpec,
    pub cargoes: Vec<CargoType>,
    #[serde(default = "default_true")]
    pub include_ballast: bool,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl Scenario {
    pub fn environment(&self) -> Environment {
        Environment {
            water_density: self.water_density,
        }
    }

    /// Checks every model-level invariant; returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<Warning>> {
        let warnings = self.vessel.validate()?;
        self.environment().validate()?;
        StabilityPolicy::new(self.mu).validate()?;
        self.solver.validate()?;
        // assembly covers cargo values, labels and the order permutation
        self.problem()?;
        Ok(warnings)
    }

    pub fn problem(&self) -> Result<Problem> {
        assemble_problem(
            &self.vessel,
            &self.environment(),
            &StabilityPolicy::new(self.mu),
            &self.cargoes,
            &self.order.0,
            self.include_ballast,
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario values are always serializable")
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(document: &str) -> Result<Scenario> {
    let scenario: Scenario = serde_json::from_str(document).map_err(|e| {
        use serde_json::error::Category;
        match e.classify() {
            Category::Syntax | Category::Eof | Category::Io => Error::Syntax {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            },
            Category::Data => Error::Scenario(e.to_string()),
        }
    })?;
    scenario.validate()?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BUNDLED: &str = include_str!("../../scenarios/clarkson3500.json");

    #[test]
    fn bundled_scenario_parses() {
        let s = parse_scenario(BUNDLED).unwrap();
        assert_eq!(s.cargoes.len(), 4);
        assert!(s.include_ballast);
        assert_eq!(s.water_density, 1.0);
        assert_eq!(s.order.0, LoadingOrder::Normal);
        let p = s.problem().unwrap();
        assert_eq!(p.dim(), 5);
        assert_eq!(s.vessel, crate::model::reference::vessel());
        assert_eq!(s.cargoes, crate::model::reference::cargoes());
    }

    #[test]
    fn defaults_applied() {
        let doc = r#"{"vessel": {"length": 200, "beam": 25, "deadweight": 45000,
            "volume_capacity": 120000, "light_mass": 15000, "light_kg": 2},
            "mu": 4, "cargoes": [{"label": "a", "density": 0.5, "freight_rate": 1}]}"#;
        let s = parse_scenario(doc).unwrap();
        assert_eq!(s.water_density, 1.0);
        assert!(s.include_ballast);
        assert_eq!(s.order, OrderSpec::default());
        assert_eq!(s.solver, SolverOptions::default());
    }

    #[test]
    fn missing_beam_is_named() {
        let doc = BUNDLED.replace("\"beam\": 25,", "");
        let err = parse_scenario(&doc).unwrap_err();
        assert!(err.to_string().contains("beam"), "{err}");
    }

    #[test]
    fn zero_density_is_semantic_error() {
        let doc = BUNDLED.replacen("\"density\": 0.8", "\"density\": 0", 1);
        let err = parse_scenario(&doc).unwrap_err();
        assert!(matches!(err, Error::Invalid { .. }), "{err}");
        let text = err.to_string();
        assert!(text.contains("density") && text.contains("> 0"), "{text}");
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_scenario("{\n  \"vessel\": {,\n}").unwrap_err();
        match err {
            Error::Syntax { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_field_rejected_with_location() {
        let doc = BUNDLED.replacen("\"mu\"", "\"draught\": 1, \"mu\"", 1);
        let err = parse_scenario(&doc).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("draught") && text.contains("line"), "{text}");
    }

    #[test]
    fn order_forms() {
        assert_eq!(parse_order("reverse").unwrap().0, LoadingOrder::Reverse);
        assert_eq!(
            parse_order("perm=2,1,3").unwrap().0,
            LoadingOrder::Explicit(vec![1, 0, 2])
        );
        assert!(parse_order("perm=0,1").is_err());
        assert!(parse_order("sideways").is_err());

        let doc = BUNDLED.replacen("\"normal\"", "[4, 3, 2, 1]", 1);
        let s = parse_scenario(&doc).unwrap();
        assert_eq!(s.order.0, LoadingOrder::Explicit(vec![3, 2, 1, 0]));
        let bad = BUNDLED.replacen("\"normal\"", "[1, 1, 2, 3]", 1);
        assert!(parse_scenario(&bad).is_err());
    }
}
