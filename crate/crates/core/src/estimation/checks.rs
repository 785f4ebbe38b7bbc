use serde::Serialize;

use super::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `empirical <= bound`.
    Upper,
    /// `empirical >= bound`.
    Lower,
    /// `empirical == bound`, up to the slack.
    Match,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Must hold on every sample; any violation fails.
    Deterministic,
    /// Compared in standard-error units.
    Statistical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    /// Statistical check missed by between `slack` and `slack + 1` SEs.
    Warn,
    Fail,
}

fn miss(direction: Direction, empirical: f64, bound: f64) -> f64 {
    match direction {
        Direction::Upper => empirical - bound,
        Direction::Lower => bound - empirical,
        Direction::Match => (empirical - bound).abs(),
    }
}

/// One empirical-versus-bound comparison.
///
/// `pass` is `empirical <= bound + slack * SE` for upper bounds and
/// `empirical >= bound - slack * SE` for lower bounds and
/// `|empirical - bound| <= slack * SE` for matches.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub empirical: f64,
    pub bound: f64,
    pub std_err: f64,
    pub slack_ses: f64,
    pub direction: Direction,
    pub kind: CheckKind,
    pub pass: bool,
    pub status: CheckStatus,
}

impl BoundCheck {
    pub fn statistical(name: impl Into<String>, direction: Direction, empirical: f64, bound: f64, std_err: f64, slack_ses: f64) -> Self {
        let miss = miss(direction, empirical, bound);
        let pass = miss <= slack_ses * std_err;
        let status = if pass {
            CheckStatus::Pass
        } else if miss <= (slack_ses + 1.0) * std_err {
            CheckStatus::Warn
        } else {
            CheckStatus::Fail
        };
        Self { name: name.into(), empirical, bound, std_err, slack_ses, direction, kind: CheckKind::Statistical, pass, status }
    }

    /// An exact comparison; `empirical` is the worst case over all samples.
    pub fn deterministic(name: impl Into<String>, direction: Direction, empirical: f64, bound: f64) -> Self {
        let pass = miss(direction, empirical, bound) <= 0.0;
        Self {
            name: name.into(),
            empirical,
            bound,
            std_err: 0.0,
            slack_ses: 0.0,
            direction,
            kind: CheckKind::Deterministic,
            pass,
            status: if pass { CheckStatus::Pass } else { CheckStatus::Fail },
        }
    }

    /// A boolean invariant expressed as a deterministic check.
    pub fn invariant(name: impl Into<String>, holds: bool) -> Self {
        Self::deterministic(name, Direction::Upper, if holds { 0.0 } else { 1.0 }, 0.0)
    }

    /// Distance from the bound in SE units, positive on the violating side.
    pub fn ses_from_bound(&self) -> f64 {
        let miss = miss(self.direction, self.empirical, self.bound);
        if self.std_err > 0.0 {
            miss / self.std_err
        } else if miss > 0.0 {
            f64::INFINITY
        } else if miss < 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        }
    }

    pub fn is_hard_failure(&self) -> bool {
        self.status == CheckStatus::Fail
    }

    pub fn csv_row(&self) -> [String; 5] {
        [self.name.clone(), fmt(self.empirical), fmt(self.bound), fmt(self.ses_from_bound()), self.pass.to_string()]
    }
}

pub const BOUND_CHECK_COLUMNS: [&str; 5] = ["name", "empirical", "bound", "SEs", "pass"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_iff_within_slack() {
        let c = BoundCheck::statistical("x", Direction::Upper, 1.3, 1.0, 0.1, 3.0);
        assert!(c.pass);
        let w = BoundCheck::statistical("x", Direction::Upper, 1.35, 1.0, 0.1, 3.0);
        assert_eq!(w.status, CheckStatus::Warn);
        let f = BoundCheck::statistical("x", Direction::Upper, 1.5, 1.0, 0.1, 3.0);
        assert_eq!(f.status, CheckStatus::Fail);
        let l = BoundCheck::statistical("x", Direction::Lower, 0.75, 1.0, 0.1, 3.0);
        assert!(l.pass);
        let m = BoundCheck::statistical("x", Direction::Match, 0.65, 1.0, 0.1, 3.0);
        assert_eq!(m.status, CheckStatus::Warn);
    }

    #[test]
    fn deterministic_has_no_slack() {
        assert!(!BoundCheck::deterministic("j", Direction::Upper, 1.0 + 1e-12, 1.0).pass);
        assert!(BoundCheck::invariant("i", true).pass);
    }
}
