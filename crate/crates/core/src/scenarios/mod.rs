//! Scenario registry and sweeps.
//!
//! A [`Scenario`] binds a probe's generator moments to its measurement model
//! and sweeps one parameter: the mean photon number for the single-mode phase
//! probes, the thermal occupation for the SU(2) probe, or the number of
//! repeated measurements for the qubit.

mod output;
mod verify;

pub use output::{emit_csv, emit_svg, emit_svg_groups, parse_csv, render_csv, render_svg, PlotStyle, RowGroup};
pub use verify::{verify, CheckResult, PerturbTarget, Perturbation, VerifyConfig, VerifyReport};

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{
    bound_report, moments_phase_cs, moments_phase_smsvs, moments_qubit_plus, moments_su2, MomentSet, PriorWindow,
};
use crate::error::{domain, Error, Result};
use crate::measurement::{
    mmse, mmse_closed_form_phase, mmse_closed_form_su2, phase_model_cs, phase_model_smsvs, qubit_model, su2_model,
    PhaseProbe,
};
use crate::quadrature::{uniform_grid, QuadratureSpec};

/// Relative slack on the bound ordering chain.
pub const ORDERING_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioId {
    PhaseCs,
    PhaseSmsvs,
    Su2CsTs,
    QubitRepeat,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 4] = [
        ScenarioId::PhaseCs,
        ScenarioId::PhaseSmsvs,
        ScenarioId::Su2CsTs,
        ScenarioId::QubitRepeat,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioId::PhaseCs => "phase-cs",
            ScenarioId::PhaseSmsvs => "phase-smsvs",
            ScenarioId::Su2CsTs => "su2-cs-ts",
            ScenarioId::QubitRepeat => "qubit-repeat",
        }
    }

    /// Name of the swept parameter.
    pub fn sweep_variable(&self) -> &'static str {
        match self {
            ScenarioId::PhaseCs | ScenarioId::PhaseSmsvs => "N",
            ScenarioId::Su2CsTs => "n_th",
            ScenarioId::QubitRepeat => "v",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ScenarioId::ALL.into_iter().find(|id| id.as_str() == s).ok_or_else(|| {
            format!("unknown scenario `{s}` (expected phase-cs, phase-smsvs, su2-cs-ts or qubit-repeat)")
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MmseMethod {
    ClosedForm,
    Quadrature,
}

/// Swept interval. For `qubit-repeat` the sweep visits every integer in
/// `[min, max]` and `points` is ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRange {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub id: ScenarioId,
    /// Prior window width.
    pub a: f64,
    /// `|beta|^2` of the SU(2) coherent input.
    pub beta_sq: f64,
    pub range: SweepRange,
    pub mmse_method: MmseMethod,
    #[serde(skip)]
    pub quadrature: QuadratureSpec,
}

impl Scenario {
    /// Defaults: `a = pi/2`, `|beta|^2 = 1`, 50 points over `[0.1, 5]`, and
    /// `v = 1..=100` for the qubit.
    pub fn default_for(id: ScenarioId) -> Self {
        let range = match id {
            ScenarioId::QubitRepeat => SweepRange {
                min: 1.0,
                max: 100.0,
                points: 100,
            },
            _ => SweepRange {
                min: 0.1,
                max: 5.0,
                points: 50,
            },
        };
        Self {
            id,
            a: FRAC_PI_2,
            beta_sq: 1.0,
            range,
            mmse_method: MmseMethod::ClosedForm,
            quadrature: QuadratureSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        PriorWindow::new(self.a)?;
        self.quadrature.validate()?;
        let SweepRange { min, max, points } = self.range;
        if !(min.is_finite() && max.is_finite()) || min > max {
            return Err(Error::InvalidProblem(format!(
                "sweep range [{min}, {max}] is empty or not finite"
            )));
        }
        if self.id == ScenarioId::QubitRepeat {
            if min.ceil() < 1.0 || min.ceil() > max.floor() {
                return Err(Error::InvalidProblem(format!(
                    "qubit-repeat needs at least one integer v >= 1 in [{min}, {max}]"
                )));
            }
            if max.floor() > u32::MAX as f64 {
                return Err(domain("max", max, "measurement count exceeds u32"));
            }
        } else if points == 0 || (points == 1 && min != max) {
            return Err(Error::InvalidProblem(format!(
                "{points} point(s) cannot cover [{min}, {max}]"
            )));
        }
        if self.id == ScenarioId::Su2CsTs && !(self.beta_sq.is_finite() && self.beta_sq > 0.0) {
            return Err(domain("beta_sq", self.beta_sq, "must be positive and finite"));
        }
        Ok(())
    }

    pub fn sweep_values(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let SweepRange { min, max, points } = self.range;
        Ok(match self.id {
            ScenarioId::QubitRepeat => (min.ceil() as u64..=max.floor() as u64).map(|v| v as f64).collect(),
            _ if points == 1 => vec![min],
            _ => uniform_grid(min, max, points),
        })
    }

    /// Generator moments at one sweep value.
    pub fn moments(&self, value: f64) -> Result<MomentSet> {
        match self.id {
            ScenarioId::PhaseCs => moments_phase_cs(value),
            ScenarioId::PhaseSmsvs => moments_phase_smsvs(value),
            ScenarioId::Su2CsTs => moments_su2(self.beta_sq, value),
            ScenarioId::QubitRepeat => moments_qubit_plus().with_shots(shots(value)?),
        }
    }

    /// MMSE of the bound measurement model at one sweep value.
    pub fn mmse(&self, value: f64) -> Result<f64> {
        let w = PriorWindow::new(self.a)?;
        let q = &self.quadrature;
        match (self.id, self.mmse_method) {
            (ScenarioId::PhaseCs, MmseMethod::ClosedForm) => {
                mmse_closed_form_phase(PhaseProbe::Coherent, value, self.a)
            }
            (ScenarioId::PhaseCs, MmseMethod::Quadrature) => mmse(&phase_model_cs(value)?, &w, q),
            (ScenarioId::PhaseSmsvs, MmseMethod::ClosedForm) => {
                mmse_closed_form_phase(PhaseProbe::SqueezedVacuum, value, self.a)
            }
            (ScenarioId::PhaseSmsvs, MmseMethod::Quadrature) => mmse(&phase_model_smsvs(value)?, &w, q),
            (ScenarioId::Su2CsTs, MmseMethod::ClosedForm) => mmse_closed_form_su2(self.beta_sq, value, self.a),
            (ScenarioId::Su2CsTs, MmseMethod::Quadrature) => mmse(&su2_model(self.beta_sq, value)?, &w, q),
            (ScenarioId::QubitRepeat, _) => mmse(&qubit_model(shots(value)?)?, &w, q),
        }
    }

    fn row(&self, value: f64) -> Result<SweepRow> {
        let w = PriorWindow::new(self.a)?;
        let b = bound_report(&self.moments(value)?, &w)?;
        let row = SweepRow {
            sweep_value: value,
            qcrb: b.qcrb,
            qobb0: b.qobb0,
            qobb1: b.qobb1,
            qobb2: b.qobb2,
            mmse: Some(self.mmse(value)?),
        };
        row.check(w.variance())?;
        Ok(row)
    }
}

fn shots(value: f64) -> Result<u32> {
    if value.fract() != 0.0 || !(1.0..=u32::MAX as f64).contains(&value) {
        return Err(domain("v", value, "measurement count must be a positive integer"));
    }
    Ok(value as u32)
}

/// One sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub qcrb: f64,
    pub qobb0: f64,
    pub qobb1: f64,
    pub qobb2: f64,
    pub mmse: Option<f64>,
}

fn le(lo: f64, hi: f64) -> bool {
    lo <= hi || lo - hi <= ORDERING_SLACK * hi.abs()
}

impl SweepRow {
    /// `qobb1 <= qobb2 <= qobb0 <= qcrb`, and `qobb0 <= mmse <= prior_variance`.
    pub fn check(&self, prior_variance: f64) -> Result<()> {
        let fail = |detail: String| {
            Err(Error::OrderingViolation {
                sweep_value: self.sweep_value,
                detail,
            })
        };
        let chain = [
            ("qobb1", self.qobb1, "qobb2", self.qobb2),
            ("qobb2", self.qobb2, "qobb0", self.qobb0),
            ("qobb0", self.qobb0, "qcrb", self.qcrb),
        ];
        for (ln, lo, hn, hi) in chain {
            if !le(lo, hi) {
                return fail(format!("{ln} = {lo} > {hn} = {hi}"));
            }
        }
        if let Some(m) = self.mmse {
            if !le(self.qobb0, m) {
                return fail(format!("mmse = {m} < qobb0 = {}", self.qobb0));
            }
            if !le(m, prior_variance) {
                return fail(format!("mmse = {m} > prior variance {prior_variance}"));
            }
        }
        Ok(())
    }
}

/// Evaluates every sweep point in parallel; rows come back in sweep order.
pub fn run_sweep(s: &Scenario) -> Result<Vec<SweepRow>> {
    let values = s.sweep_values()?;
    values
        .par_iter()
        .map(|&v| {
            s.row(v).map_err(|e| match e {
                e @ Error::OrderingViolation { .. } => e,
                e => Error::AtSweepPoint {
                    sweep_value: v,
                    source: Box::new(e),
                },
            })
        })
        .collect()
}
