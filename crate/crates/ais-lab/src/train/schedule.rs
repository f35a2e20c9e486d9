//! Step-size schedules and their stochastic-approximation conditions.

use serde::{Deserialize, Serialize};

/// How step sizes evolve over iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleMode {
    /// `lr * (i + 1)^(-exponent)`; the mode the convergence conditions
    /// are stated for.
    PowerLaw,
    /// Constant step sizes, mirroring practice.
    Constant,
}

pub fn step_size(base_lr: f64, exponent: f64, iteration: usize, mode: ScheduleMode) -> f64 {
    match mode {
        ScheduleMode::PowerLaw => base_lr * ((iteration + 1) as f64).powf(-exponent),
        ScheduleMode::Constant => base_lr,
    }
}

/// One named schedule condition with its verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleCheck {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

/// Validation report for a power-law schedule family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub checks: Vec<ScheduleCheck>,
}

impl ScheduleReport {
    pub fn is_valid(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    pub fn failures(&self) -> Vec<&ScheduleCheck> {
        self.checks.iter().filter(|c| !c.ok).collect()
    }
}

fn exponent_checks(checks: &mut Vec<ScheduleCheck>, name: &str, exp: f64) {
    // sum a_i = infinity needs exp <= 1; sum a_i^2 < infinity needs exp > 1/2.
    checks.push(ScheduleCheck {
        name: format!("{name}_divergent_sum"),
        ok: exp <= 1.0,
        detail: format!("sum i^(-{exp}) diverges iff {exp} <= 1"),
    });
    checks.push(ScheduleCheck {
        name: format!("{name}_square_summable"),
        ok: exp > 0.5,
        detail: format!("sum i^(-2*{exp}) converges iff {exp} > 0.5"),
    });
}

/// Symbolic check of the power-law family: divergent sums, square
/// summability, and the timescale ratio limits. `critic_exp` is `None`
/// for the two-timescale (policy-gradient) configuration.
pub fn validate_schedule(ais_exp: f64, actor_exp: f64, critic_exp: Option<f64>) -> ScheduleReport {
    let mut checks = Vec::new();
    exponent_checks(&mut checks, "ais", ais_exp);
    exponent_checks(&mut checks, "actor", actor_exp);
    checks.push(ScheduleCheck {
        name: "actor_slower_than_ais".into(),
        ok: actor_exp > ais_exp,
        detail: format!("b_i/a_i -> 0 iff actor exponent {actor_exp} > ais exponent {ais_exp}"),
    });
    if let Some(c_exp) = critic_exp {
        exponent_checks(&mut checks, "critic", c_exp);
        checks.push(ScheduleCheck {
            name: "critic_slower_than_ais".into(),
            ok: c_exp > ais_exp,
            detail: format!("c_i/a_i -> 0 iff critic exponent {c_exp} > ais exponent {ais_exp}"),
        });
        checks.push(ScheduleCheck {
            name: "actor_slower_than_critic".into(),
            ok: actor_exp > c_exp,
            detail: format!("b_i/c_i -> 0 iff actor exponent {actor_exp} > critic exponent {c_exp}"),
        });
    }
    ScheduleReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_two_timescale_06_08() {
        assert!(validate_schedule(0.6, 0.8, None).is_valid());
    }

    #[test]
    fn rejects_non_square_summable() {
        let report = validate_schedule(0.4, 0.8, None);
        assert!(!report.is_valid());
        assert!(report
            .failures()
            .iter()
            .any(|c| c.name == "ais_square_summable"));
    }

    #[test]
    fn accepts_three_timescale_06_07_09() {
        assert!(validate_schedule(0.6, 0.9, Some(0.7)).is_valid());
    }

    #[test]
    fn rejects_ratio_violations() {
        let report = validate_schedule(0.8, 0.6, None);
        assert!(!report.is_valid());
        assert!(report
            .failures()
            .iter()
            .any(|c| c.name == "actor_slower_than_ais"));

        let report = validate_schedule(0.6, 0.7, Some(0.9));
        assert!(!report.is_valid());
        assert!(report
            .failures()
            .iter()
            .any(|c| c.name == "actor_slower_than_critic"));
    }

    #[test]
    fn power_law_ratio_goes_to_zero() {
        // b_i / a_i with exponents 0.8 > 0.6 shrinks like i^(-0.2).
        let r1 = step_size(1.0, 0.8, 10, ScheduleMode::PowerLaw)
            / step_size(1.0, 0.6, 10, ScheduleMode::PowerLaw);
        let r2 = step_size(1.0, 0.8, 10_000, ScheduleMode::PowerLaw)
            / step_size(1.0, 0.6, 10_000, ScheduleMode::PowerLaw);
        assert!(r2 < r1 / 3.0);
    }
}
