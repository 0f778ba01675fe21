//! Pass/fail records for seeded check suites, with a deterministic JSON form.

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl CheckRecord {
    pub fn pass(name: impl Into<String>) -> CheckRecord {
        CheckRecord { name: name.into(), status: Status::Pass, witness: None }
    }

    pub fn fail(name: impl Into<String>, witness: impl Into<String>) -> CheckRecord {
        CheckRecord { name: name.into(), status: Status::Fail, witness: Some(witness.into()) }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

/// A computed value, kept in insertion order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ResultEntry {
    pub key: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub command: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub results: Vec<ResultEntry>,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
}

impl SuiteReport {
    pub fn new(command: impl Into<String>, seed: u64, checks: Vec<CheckRecord>) -> SuiteReport {
        let mut r = SuiteReport { command: command.into(), seed, results: vec![], checks, summary: Summary { total: 0, passed: 0, failed: 0 } };
        r.sort();
        r
    }

    /// Sorts checks by name and recomputes the summary.
    pub fn sort(&mut self) {
        self.checks.sort_by(|a, b| a.name.cmp(&b.name));
        let passed = self.checks.iter().filter(|c| c.passed()).count();
        self.summary = Summary { total: self.checks.len(), passed, failed: self.checks.len() - passed };
    }

    pub fn result(&mut self, key: impl Into<String>, value: impl ToString) {
        self.results.push(ResultEntry { key: key.into(), value: value.to_string() });
    }

    pub fn check(&mut self, name: impl Into<String>, ok: bool, witness: impl FnOnce() -> String) {
        self.checks.push(if ok { CheckRecord::pass(name) } else { CheckRecord::fail(name, witness()) });
        self.sort();
    }

    pub fn violations(&self) -> usize {
        self.summary.failed
    }

    pub fn extend(&mut self, other: SuiteReport) {
        self.checks.extend(other.checks);
        self.sort();
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} (seed {})\n", self.command, self.seed);
        for r in &self.results {
            out.push_str(&format!("  {} = {}\n", r.key, r.value));
        }
        for c in &self.checks {
            match &c.witness {
                None => out.push_str(&format!("  pass  {}\n", c.name)),
                Some(w) => out.push_str(&format!("  FAIL  {}: {}\n", c.name, w)),
            }
        }
        out.push_str(&format!("{} checks, {} passed, {} failed\n", self.summary.total, self.summary.passed, self.summary.failed));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_is_sorted_and_stable() {
        let r = SuiteReport::new("x", 7, vec![CheckRecord::fail("b", "w"), CheckRecord::pass("a")]);
        assert_eq!(r.checks[0].name, "a");
        assert_eq!(r.violations(), 1);
        let j = r.to_json();
        assert_eq!(j, r.clone().to_json());
        let v: serde_json::Value = serde_json::from_str(&j).unwrap();
        assert_eq!(v["summary"]["failed"], 1);
        assert!(v["checks"][0].get("witness").is_none());
    }
}
