use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DiagnosticsError, DiagnosticsRecord, DiagnosticsSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    Spectral,
    Ergodic,
    Semidiscrete,
    FlockSubLinear,
    FlockCritical,
    FlockExponential,
    FlockExponentialMass,
    HeavyTail,
}

/// Outcome of comparing one measured series against a decay envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub kind: EnvelopeKind,
    /// Which column is compared: `dE`, `dV` or `lambda2`.
    pub measured: String,
    pub envelope_values: Vec<f64>,
    /// Worst `measured / envelope` over the checked records (for
    /// `heavy_tail`, worst `bound / lambda2`).
    pub max_ratio: f64,
    pub worst_index: Option<usize>,
    pub tolerance: f64,
    pub violated: bool,
    /// Index of the first record that is checked.
    pub checked_from: usize,
    pub info: BTreeMap<String, f64>,
}

/// `measured / (base * exp(-decay))` without forming the envelope, so a
/// fully decayed envelope does not underflow into a division by zero.
fn log_ratio(measured: f64, base: f64, decay: f64) -> f64 {
    if measured <= 0.0 {
        0.0
    } else if base <= 0.0 {
        f64::INFINITY
    } else {
        (measured.ln() - base.ln() + decay).exp()
    }
}

struct Check {
    values: Vec<f64>,
    ratios: Vec<f64>,
}

fn finish(
    kind: EnvelopeKind,
    measured: &str,
    check: Check,
    checked_from: usize,
    anchored: bool,
    tolerance: f64,
    info: BTreeMap<String, f64>,
) -> EnvelopeReport {
    let mut max_ratio = 0.0f64;
    let mut worst_index = None;
    // the anchor record equals its envelope by construction
    let skip = if anchored && check.ratios.len() > checked_from + 1 {
        checked_from + 1
    } else {
        checked_from
    };
    for (k, r) in check.ratios.iter().enumerate().skip(skip) {
        if worst_index.is_none() || *r > max_ratio {
            max_ratio = *r;
            worst_index = Some(k);
        }
    }
    EnvelopeReport {
        kind,
        measured: measured.to_string(),
        envelope_values: check.values,
        violated: max_ratio > 1.0 + tolerance,
        max_ratio,
        worst_index,
        tolerance,
        checked_from,
        info,
    }
}

fn exp_envelope(
    records: &[DiagnosticsRecord],
    measured: impl Fn(&DiagnosticsRecord) -> f64,
    base: f64,
    decay: impl Fn(&DiagnosticsRecord) -> f64,
) -> Check {
    Check {
        values: records.iter().map(|r| base * (-decay(r)).exp()).collect(),
        ratios: records.iter().map(|r| log_ratio(measured(r), base, decay(r))).collect(),
    }
}

fn require_constant_masses(series: &DiagnosticsSeries, what: &str) -> Result<(), DiagnosticsError> {
    if series.time_dependent_masses {
        Err(DiagnosticsError::Unsupported(format!(
            "{what} envelope assumes constant masses; use the ergodic envelope for time-dependent masses"
        )))
    } else {
        Ok(())
    }
}

/// `dE(t_n) <= exp(-sum_{k<n} lambda2(t_k) dt_k) dE(0)`.
pub fn envelope_spectral(series: &DiagnosticsSeries, tolerance: f64) -> Result<EnvelopeReport, DiagnosticsError> {
    require_constant_masses(series, "spectral")?;
    let e0 = series.first()?.d_e;
    let check = exp_envelope(&series.records, |r| r.d_e, e0, |r| r.cum_lambda2);
    Ok(finish(
        EnvelopeKind::Spectral,
        "dE",
        check,
        0,
        true,
        tolerance,
        BTreeMap::new(),
    ))
}

/// `dV(t_n) <= exp(-sum_{k<n} erg(t_k) dt_k) dV(0)`; valid with
/// time-dependent masses.
pub fn envelope_ergodic(series: &DiagnosticsSeries, tolerance: f64) -> Result<EnvelopeReport, DiagnosticsError> {
    let v0 = series.first()?.d_v;
    let check = exp_envelope(&series.records, |r| r.d_v, v0, |r| r.cum_erg);
    Ok(finish(
        EnvelopeKind::Ergodic,
        "dV",
        check,
        0,
        true,
        tolerance,
        BTreeMap::new(),
    ))
}

/// `dE(t) <= exp(-int_0^t lambda2) dE(0)` with the integral by trapezoids.
pub fn envelope_semidiscrete(series: &DiagnosticsSeries, tolerance: f64) -> Result<EnvelopeReport, DiagnosticsError> {
    require_constant_masses(series, "semi-discrete")?;
    let e0 = series.first()?.d_e;
    let check = exp_envelope(&series.records, |r| r.d_e, e0, |r| r.cum_lambda2_trap);
    Ok(finish(
        EnvelopeKind::Semidiscrete,
        "dE",
        check,
        0,
        true,
        tolerance,
        BTreeMap::new(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlockParams {
    pub beta: f64,
    /// The exponential branch is anchored at `t0 = t0_fraction * T`.
    pub t0_fraction: f64,
    pub tolerance: f64,
}

fn validate_beta(beta: f64) -> Result<(), DiagnosticsError> {
    if (0.0..=1.0).contains(&beta) {
        Ok(())
    } else {
        Err(DiagnosticsError::BetaOutOfRange(beta))
    }
}

/// `int_0^t M (1 + D0 + dV0 s)^(-beta) ds`.
fn heavy_tail_integral(beta: f64, m: f64, d0: f64, v0: f64, t: f64) -> f64 {
    let a = 1.0 + d0;
    if v0 <= 0.0 {
        return m * a.powf(-beta) * t;
    }
    let b = a + v0 * t;
    if beta == 1.0 {
        m / v0 * (b / a).ln()
    } else {
        let p = 1.0 - beta;
        m / (p * v0) * (b.powf(p) - a.powf(p))
    }
}

/// Decay envelopes for heavy-tailed kernels `phi(r) = (1 + r)^(-beta)`,
/// `beta <= 1`.
///
/// * constant masses: the algebraic branch anchored at `t = 0`
///   (`flock_sub_linear` for `beta < 1`, `flock_critical` for `beta = 1`)
///   and the exponential branch `dE(t0) exp(-eta (t - t0))`, with
///   `eta = (1 + D+)^(-beta)` and `D+` the largest recorded diameter;
/// * time-dependent masses: `exp(-eta int_0^t M) dV(0)`.
pub fn flocking_envelope(
    series: &DiagnosticsSeries,
    params: &FlockParams,
) -> Result<Vec<EnvelopeReport>, DiagnosticsError> {
    let beta = params.beta;
    validate_beta(beta)?;
    let first = series.first()?;
    let t_final = series.last()?.t;
    let recs = &series.records;
    let d_plus = recs.iter().map(|r| r.diameter).fold(0.0, f64::max);
    let eta = (1.0 + d_plus).powf(-beta);
    let mut info = BTreeMap::new();
    info.insert("D_plus".to_string(), d_plus);
    info.insert("eta".to_string(), eta);
    if beta < 1.0 && series.n > 0 {
        info.insert(
            "D_plus_N".to_string(),
            (series.n as f64).powf(beta / (2.0 * (1.0 - beta))),
        );
    }

    if series.time_dependent_masses {
        let v0 = first.d_v;
        let check = exp_envelope(recs, |r| r.d_v, v0, |r| eta * r.cum_mass);
        return Ok(vec![finish(
            EnvelopeKind::FlockExponentialMass,
            "dV",
            check,
            0,
            true,
            params.tolerance,
            info,
        )]);
    }

    let (m, d0, v0, e0) = (first.total_mass, first.diameter, first.d_v, first.d_e);
    let mut a_info = info.clone();
    a_info.insert("M".to_string(), m);
    a_info.insert("D0".to_string(), d0);
    a_info.insert("dV0".to_string(), v0);
    let kind_a = if beta < 1.0 {
        EnvelopeKind::FlockSubLinear
    } else {
        EnvelopeKind::FlockCritical
    };
    let check_a = exp_envelope(
        recs,
        |r| r.d_e,
        e0,
        |r| heavy_tail_integral(beta, m, d0, v0, r.t - first.t),
    );
    let a = finish(kind_a, "dE", check_a, 0, true, params.tolerance, a_info);

    let t0 = first.t + params.t0_fraction * (t_final - first.t);
    let anchor = recs.iter().position(|r| r.t >= t0).unwrap_or(recs.len() - 1);
    let (ta, ea) = (recs[anchor].t, recs[anchor].d_e);
    let mut b_info = info;
    b_info.insert("t0".to_string(), ta);
    let check_b = exp_envelope(recs, |r| r.d_e, ea, |r| eta * (r.t - ta));
    let b = finish(
        EnvelopeKind::FlockExponential,
        "dE",
        check_b,
        anchor,
        true,
        params.tolerance,
        b_info,
    );
    Ok(vec![a, b])
}

/// Check `lambda2(t_k) >= M / (1 + D0 + dV0 t_k)^beta` on every record.
pub fn spectral_tail_bound(
    series: &DiagnosticsSeries,
    beta: f64,
    tolerance: f64,
) -> Result<EnvelopeReport, DiagnosticsError> {
    validate_beta(beta)?;
    require_constant_masses(series, "heavy-tail")?;
    let first = series.first()?;
    let (m, d0, v0) = (first.total_mass, first.diameter, first.d_v);
    let values: Vec<f64> = series
        .records
        .iter()
        .map(|r| m * (1.0 + d0 + v0 * (r.t - first.t)).powf(-beta))
        .collect();
    let ratios = series
        .records
        .iter()
        .zip(&values)
        .map(|(r, b)| if r.lambda2 > 0.0 { b / r.lambda2 } else { f64::INFINITY })
        .collect();
    Ok(finish(
        EnvelopeKind::HeavyTail,
        "lambda2",
        Check { values, ratios },
        0,
        false,
        tolerance,
        BTreeMap::new(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: f64, d_e: f64, d_v: f64, cum_l: f64, cum_erg: f64) -> DiagnosticsRecord {
        DiagnosticsRecord {
            step: 0,
            t,
            d_e,
            d_v,
            diameter: 1.0,
            enstrophy: 0.0,
            lambda2: 1.0,
            erg: 1.0,
            deg_plus: 1.0,
            dt_used: 0.0,
            cum_lambda2: cum_l,
            cum_lambda2_trap: cum_l,
            cum_erg,
            cum_mass: t,
            total_mass: 1.0,
            d_e_potential: None,
            momentum: vec![0.0],
            mean_velocity: vec![0.0],
        }
    }

    fn series(records: Vec<DiagnosticsRecord>) -> DiagnosticsSeries {
        DiagnosticsSeries {
            dim: 1,
            n: 2,
            time_dependent_masses: false,
            records,
        }
    }

    #[test]
    fn worked_step_passes_both_envelopes() {
        let s = series(vec![
            rec(0.0, 1.0, 2.0, 0.0, 0.0),
            rec(0.25, 9.0 / 16.0, 1.5, 0.25, 0.25),
        ]);
        let sp = envelope_spectral(&s, 1e-8).unwrap();
        assert!((sp.envelope_values[1] - (-0.25f64).exp()).abs() < 1e-15);
        assert!(!sp.violated);
        let er = envelope_ergodic(&s, 1e-8).unwrap();
        assert!(!er.violated);
        assert!((er.max_ratio - 1.5 / (2.0 * (-0.25f64).exp())).abs() < 1e-15);
        assert!((er.envelope_values[1] - 2.0 * (-0.25f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn zero_gap_gives_constant_envelope() {
        let s = series(vec![rec(0.0, 1.0, 1.0, 0.0, 0.0), rec(1.0, 1.0, 1.0, 0.0, 0.0)]);
        let r = envelope_spectral(&s, 1e-8).unwrap();
        assert_eq!(r.envelope_values, vec![1.0, 1.0]);
        assert!(!r.violated);
        let bad = series(vec![rec(0.0, 1.0, 1.0, 0.0, 0.0), rec(1.0, 1.1, 1.0, 0.0, 0.0)]);
        let r = envelope_spectral(&bad, 1e-8).unwrap();
        assert!(r.violated);
        assert_eq!(r.worst_index, Some(1));
    }

    #[test]
    fn consensus_never_violates_even_after_underflow() {
        let s = series(vec![rec(0.0, 0.0, 0.0, 0.0, 0.0), rec(1.0, 0.0, 0.0, 1e4, 1e4)]);
        assert!(!envelope_spectral(&s, 1e-8).unwrap().violated);
        let s = series(vec![rec(0.0, 1.0, 1.0, 0.0, 0.0), rec(1.0, 5e-305, 1.0, 700.0, 0.0)]);
        let r = envelope_spectral(&s, 1e-8).unwrap();
        assert!(!r.violated && r.max_ratio > 0.0);
    }

    #[test]
    fn flocking_branches() {
        // beta = 0, M = 1: the algebraic branch is exp(-t)
        let s = series(
            (0..5)
                .map(|k| rec(k as f64, (-(k as f64)).exp(), 1.0, 0.0, 0.0))
                .collect(),
        );
        let p = FlockParams {
            beta: 0.0,
            t0_fraction: 0.2,
            tolerance: 1e-8,
        };
        let r = flocking_envelope(&s, &p).unwrap();
        assert_eq!(r[0].kind, EnvelopeKind::FlockSubLinear);
        for (k, v) in r[0].envelope_values.iter().enumerate() {
            assert!((v - (-(k as f64)).exp()).abs() < 1e-15);
        }
        assert_eq!(r[1].kind, EnvelopeKind::FlockExponential);
        assert_eq!(r[1].checked_from, 1);
        assert!(!r[0].violated && !r[1].violated);

        let p1 = FlockParams { beta: 1.0, ..p };
        assert_eq!(flocking_envelope(&s, &p1).unwrap()[0].kind, EnvelopeKind::FlockCritical);
        let p2 = FlockParams { beta: 2.0, ..p };
        assert_eq!(
            flocking_envelope(&s, &p2).unwrap_err(),
            DiagnosticsError::BetaOutOfRange(2.0)
        );
    }

    #[test]
    fn critical_integral_is_a_power() {
        // M = 2 dV0: exp(-integral) = ((1 + D0 + dV0 t) / (1 + D0))^(-2)
        let (m, d0, v0, t) = (2.0, 1.0, 1.0, 3.0);
        let e = (-heavy_tail_integral(1.0, m, d0, v0, t)).exp();
        assert!((e - (5.0f64 / 2.0).powi(-2)).abs() < 1e-15);
        // beta -> 1 limit of the sub-linear branch
        let near = heavy_tail_integral(1.0 - 1e-7, m, d0, v0, t);
        assert!((near - heavy_tail_integral(1.0, m, d0, v0, t)).abs() < 1e-5);
    }

    #[test]
    fn time_dependent_masses_use_mass_integral() {
        let mut s = series(vec![rec(0.0, 1.0, 2.0, 0.0, 0.0), rec(1.0, 0.5, 0.5, 0.0, 0.0)]);
        s.time_dependent_masses = true;
        assert!(envelope_spectral(&s, 1e-8).is_err());
        let p = FlockParams {
            beta: 0.5,
            t0_fraction: 0.2,
            tolerance: 1e-8,
        };
        let r = flocking_envelope(&s, &p).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].kind, EnvelopeKind::FlockExponentialMass);
        let eta = 2f64.powf(-0.5);
        assert!((r[0].envelope_values[1] - 2.0 * (-eta).exp()).abs() < 1e-15);
    }
}
