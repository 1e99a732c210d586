//! Report documents and the failure/exit-code contract.
//!
//! Every command produces one `ReportDocument`. In `--json` mode the
//! document is printed as a single pretty-printed JSON value (keys sorted,
//! newline-terminated); in human mode a per-command rendering of the same
//! payload is printed. `wall_clock_ms` is the only nondeterministic field,
//! so reports from identical invocations are byte-identical after dropping
//! it.
//!
//! Exit codes: 0 = success / certified verdict; 2 = inconclusive at the
//! given radius, bound, or budget; 1 = hard errors (bad arguments, bad
//! configs, violated preconditions).

use serde_json::{json, Value};
use shiftlab_core::coding::CodingError;
use shiftlab_core::config::ConfigError;
use shiftlab_core::entropy::EntropyError;
use shiftlab_core::geometry::GeometryError;
use shiftlab_core::shifts::ShiftError;
use shiftlab_core::spacetime::SpacetimeError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;

pub struct ReportDocument {
    pub command: &'static str,
    pub parameters: Value,
    pub result: Value,
    pub budget_used: u64,
    pub wall_clock_ms: u128,
}

impl ReportDocument {
    pub fn to_json(&self) -> String {
        let doc = json!({
            "command": self.command,
            "parameters": self.parameters,
            "result": self.result,
            "budget_used": self.budget_used,
            "wall_clock_ms": self.wall_clock_ms,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("report is valid JSON");
        s.push('\n');
        s
    }
}

/// A command's computed payload: the JSON result, the human rendering of
/// the same data, and the exit code its verdict maps to.
pub struct Handled {
    pub result: Value,
    pub human: Vec<String>,
    pub exit: i32,
}

impl Handled {
    pub fn ok(result: Value, human: Vec<String>) -> Handled {
        Handled {
            result,
            human,
            exit: EXIT_OK,
        }
    }

    pub fn inconclusive(result: Value, human: Vec<String>) -> Handled {
        Handled {
            result,
            human,
            exit: EXIT_INCONCLUSIVE,
        }
    }
}

/// Failures that abort a handler. `Hard` means exit 1 with a message on
/// stderr; the other variants still produce a report document with exit 2.
pub enum Failure {
    Hard(String),
    BudgetExceeded { used: u64 },
    Inconclusive(String),
}

impl Failure {
    pub fn hard(msg: impl Into<String>) -> Failure {
        Failure::Hard(msg.into())
    }

    /// The report payload for the non-hard variants.
    pub fn to_handled(&self) -> Option<Handled> {
        match self {
            Failure::Hard(_) => None,
            Failure::BudgetExceeded { used } => Some(Handled::inconclusive(
                json!({"status": "budget-exceeded", "used": used}),
                vec![format!("budget exceeded after {used} work units")],
            )),
            Failure::Inconclusive(msg) => Some(Handled::inconclusive(
                json!({"status": "inconclusive", "message": msg}),
                vec![format!("inconclusive: {msg}")],
            )),
        }
    }
}

impl From<String> for Failure {
    fn from(msg: String) -> Failure {
        Failure::Hard(msg)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Failure {
        Failure::Hard(e.to_string())
    }
}

impl From<GeometryError> for Failure {
    fn from(e: GeometryError) -> Failure {
        Failure::Hard(e.to_string())
    }
}

impl From<ShiftError> for Failure {
    fn from(e: ShiftError) -> Failure {
        match e {
            ShiftError::BudgetExceeded { used } => Failure::BudgetExceeded { used },
            other => Failure::Hard(other.to_string()),
        }
    }
}

impl From<CodingError> for Failure {
    fn from(e: CodingError) -> Failure {
        match e {
            CodingError::BudgetExceeded { used } => Failure::BudgetExceeded { used },
            other => Failure::Hard(other.to_string()),
        }
    }
}

impl From<SpacetimeError> for Failure {
    fn from(e: SpacetimeError) -> Failure {
        match e {
            SpacetimeError::BudgetExceeded { used } => Failure::BudgetExceeded { used },
            other => Failure::Hard(other.to_string()),
        }
    }
}

impl From<EntropyError> for Failure {
    fn from(e: EntropyError) -> Failure {
        match e {
            EntropyError::BudgetExceeded { used } => Failure::BudgetExceeded { used },
            EntropyError::Inconclusive(msg) => Failure::Inconclusive(msg),
            other => Failure::Hard(other.to_string()),
        }
    }
}
