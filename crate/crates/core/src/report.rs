use serde::{Deserialize, Serialize};

/// One named pass/fail verdict, the unit of the JSON verification report.
///
/// `worst_margin` is the smallest slack observed across everything the
/// check compared; negative means the inequality was violated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub pass: bool,
    pub worst_margin: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl CheckReport {
    pub fn new(check: impl Into<String>, pass: bool, worst_margin: f64) -> Self {
        Self {
            check: check.into(),
            pass,
            worst_margin,
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    /// Pass iff every margin is `>= 0`.
    pub fn from_margins(check: impl Into<String>, margins: impl IntoIterator<Item = f64>) -> Self {
        let worst = margins.into_iter().fold(f64::INFINITY, f64::min);
        Self::new(check, worst >= 0.0, worst)
    }
}

/// Entry `(i, j)` where an entrywise matrix inequality `value <= limit` fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryViolation {
    pub i: usize,
    pub j: usize,
    pub value: f64,
    pub limit: f64,
}

/// Outcome of an entrywise comparison `A_ij <= B_ij + tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntrywiseReport {
    pub violations: Vec<EntryViolation>,
    /// `min_ij (B_ij - A_ij)`.
    pub worst_margin: f64,
}

impl EntrywiseReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_check(&self, name: &str) -> CheckReport {
        CheckReport::new(name, self.pass(), self.worst_margin)
            .with_detail(format!("{} violation(s)", self.violations.len()))
    }
}
