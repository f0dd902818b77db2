//! Shared reporting for the acceptance checks.

use std::time::{Duration, Instant};

/// Outcome of one acceptance criterion.
#[derive(Debug)]
pub struct Verdict {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl Verdict {
    pub fn line(&self) -> String {
        let word = if self.passed { "PASS" } else { "FAIL" };
        format!(
            "{word} criterion {:>2} {}: {} [{:.1} s of {} s]",
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs()
        )
    }
}

/// Runs `check`, which returns whether its measurements pass and a summary
/// of them; the runtime budget is part of the verdict.
pub fn criterion<F>(id: u32, name: &'static str, budget_secs: u64, check: F) -> Verdict
where
    F: FnOnce() -> (bool, String),
{
    let start = Instant::now();
    let (ok, detail) = check();
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(budget_secs);
    Verdict { id, name, passed: ok && elapsed <= budget, detail, elapsed, budget }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_is_enforced() {
        let v = criterion(0, "sleepy", 0, || {
            std::thread::sleep(Duration::from_millis(1100));
            (true, String::new())
        });
        assert!(!v.passed);
        assert!(v.line().starts_with("FAIL criterion  0 sleepy"));
        let v = criterion(0, "quick", 5, || (true, "fine".into()));
        assert!(v.passed);
    }
}
