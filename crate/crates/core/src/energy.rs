//! Conventional and adiabatic energy formulas, and per-transition accounting.

use serde::Serialize;
use thiserror::Error;

use crate::netlist::NodeId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    #[error("capacitance must be positive")]
    ZeroCapacitance,
    #[error("invalid supply waveform: {0}")]
    InvalidWaveform(String),
    #[error("invalid operating point: {0}")]
    InvalidOperatingPoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SupplyWaveform {
    DcStep { vdd: f64 },
    /// Linear ramp of duration `ramp_time` inside a clock period.
    Ramp { vdd: f64, ramp_time: f64, period: f64 },
    Stepwise { vdd: f64, steps: u32, period: f64 },
    ConstantCurrent { i_s: f64, duration: f64 },
}

impl SupplyWaveform {
    pub fn validate(&self) -> Result<(), EnergyError> {
        let bad = |m: &str| Err(EnergyError::InvalidWaveform(m.to_string()));
        let pos = |x: f64| x > 0.0 && x.is_finite();
        match *self {
            SupplyWaveform::DcStep { vdd } if !pos(vdd) => bad("vdd must be positive"),
            SupplyWaveform::Ramp { vdd, ramp_time, period } => {
                if !pos(vdd) || !pos(ramp_time) || !pos(period) {
                    bad("vdd, ramp time and period must be positive")
                } else if ramp_time > period / 2.0 {
                    bad("ramp time exceeds half the period")
                } else {
                    Ok(())
                }
            }
            SupplyWaveform::Stepwise { vdd, steps, period } => {
                if !pos(vdd) || !pos(period) || steps == 0 {
                    bad("vdd and period must be positive and steps at least 1")
                } else {
                    Ok(())
                }
            }
            SupplyWaveform::ConstantCurrent { i_s, duration } if !pos(i_s) || !pos(duration) => {
                bad("current and duration must be positive")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub vdd: f64,
    pub c_load: f64,
    pub f_clk: f64,
    pub activity: f64,
    pub i_sc: f64,
    pub i_leak: f64,
}

impl Default for OperatingPoint {
    fn default() -> Self {
        OperatingPoint {
            vdd: 1.8,
            c_load: 20e-15,
            f_clk: 50e6,
            activity: 1.0,
            i_sc: 0.0,
            i_leak: 0.0,
        }
    }
}

impl OperatingPoint {
    pub fn validate(&self) -> Result<(), EnergyError> {
        let fields = [self.vdd, self.c_load, self.f_clk, self.activity, self.i_sc, self.i_leak];
        if fields.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || self.activity > 1.0 {
            return Err(EnergyError::InvalidOperatingPoint(format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConventionalPower {
    pub dynamic: f64,
    pub short_circuit: f64,
    pub leakage: f64,
    pub total: f64,
}

/// Dynamic, short-circuit and leakage power of a statically supplied gate.
/// The dynamic term is α·C·V²·f; the commonly printed α·C·V·f is
/// dimensionally a current times a voltage only with the square.
pub fn conventional_power(op: &OperatingPoint) -> ConventionalPower {
    let dynamic = op.activity * op.c_load * op.vdd * op.vdd * op.f_clk;
    let short_circuit = op.i_sc * op.vdd;
    let leakage = op.i_leak * op.vdd;
    ConventionalPower {
        dynamic,
        short_circuit,
        leakage,
        total: dynamic + short_circuit + leakage,
    }
}

/// Loss of one abrupt charge or discharge through any resistance.
pub fn conventional_event_energy(c: f64, delta_v: f64) -> f64 {
    0.5 * c * delta_v * delta_v
}

/// Capacitor voltage under a constant charging current.
pub fn cc_voltage(i_s: f64, c: f64, t: f64) -> Result<f64, EnergyError> {
    if !(c > 0.0) {
        return Err(EnergyError::ZeroCapacitance);
    }
    Ok(i_s * t / c)
}

/// Heat in the series resistance over a constant-current charge.
pub fn cc_dissipation(r: f64, i_s: f64, t_total: f64) -> f64 {
    r * i_s * i_s * t_total
}

/// Loss of charging `c` to `v_final` through `r` from a linear ramp of
/// duration `t_ramp`.
pub fn ramp_dissipation(r: f64, c: f64, t_ramp: f64, v_final: f64) -> f64 {
    r * c / t_ramp * c * v_final * v_final
}

pub fn stepwise_dissipation(c: f64, vdd: f64, n: u32) -> f64 {
    c * vdd * vdd / 2.0 / f64::from(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Charge,
    Discharge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitionEvent {
    pub node: NodeId,
    pub c: f64,
    pub delta_v: f64,
    /// Infinite when no conducting path exists.
    pub r_path: f64,
    pub supply: SupplyWaveform,
    pub direction: Direction,
    /// Difference between the node level and the supply at switch-on.
    pub v_mismatch: f64,
}

/// Energy of one event split by origin.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct EventEnergy {
    pub dynamic: f64,
    pub adiabatic: f64,
    pub non_adiabatic: f64,
}

impl EventEnergy {
    pub fn total(&self) -> f64 {
        self.dynamic + self.adiabatic + self.non_adiabatic
    }
}

pub fn event_energy(e: &TransitionEvent) -> EventEnergy {
    if e.r_path.is_infinite() {
        return EventEnergy::default();
    }
    let dv = e.delta_v.abs();
    match e.supply {
        SupplyWaveform::DcStep { .. } => EventEnergy {
            dynamic: conventional_event_energy(e.c, dv),
            ..Default::default()
        },
        // Discharge into a falling ramp mirrors the charge-up loss.
        SupplyWaveform::Ramp { ramp_time, .. } => EventEnergy {
            adiabatic: ramp_dissipation(e.r_path, e.c, ramp_time, dv),
            non_adiabatic: conventional_event_energy(e.c, e.v_mismatch),
            ..Default::default()
        },
        SupplyWaveform::Stepwise { steps, .. } => EventEnergy {
            adiabatic: stepwise_dissipation(e.c, dv, steps),
            non_adiabatic: conventional_event_energy(e.c, e.v_mismatch),
            ..Default::default()
        },
        SupplyWaveform::ConstantCurrent { i_s, duration } => EventEnergy {
            adiabatic: cc_dissipation(e.r_path, i_s, duration),
            ..Default::default()
        },
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EnergyReport {
    pub total: f64,
    pub dynamic: f64,
    pub adiabatic_loss: f64,
    pub non_adiabatic_loss: f64,
    pub short_circuit: f64,
    pub leakage: f64,
    pub events: Vec<(TransitionEvent, f64)>,
}

impl EnergyReport {
    pub fn add_event(&mut self, e: TransitionEvent) -> EventEnergy {
        let en = event_energy(&e);
        self.dynamic += en.dynamic;
        self.adiabatic_loss += en.adiabatic;
        self.non_adiabatic_loss += en.non_adiabatic;
        self.events.push((e, en.total()));
        self.retotal();
        en
    }

    /// Static short-circuit and leakage energy over `duration` seconds.
    pub fn add_static(&mut self, i_sc: f64, i_leak: f64, vdd: f64, duration: f64) {
        self.short_circuit += i_sc * vdd * duration;
        self.leakage += i_leak * vdd * duration;
        self.retotal();
    }

    pub fn merge(&mut self, other: &EnergyReport) {
        self.dynamic += other.dynamic;
        self.adiabatic_loss += other.adiabatic_loss;
        self.non_adiabatic_loss += other.non_adiabatic_loss;
        self.short_circuit += other.short_circuit;
        self.leakage += other.leakage;
        self.events.extend_from_slice(&other.events);
        self.retotal();
    }

    fn retotal(&mut self) {
        self.total = self.dynamic
            + self.adiabatic_loss
            + self.non_adiabatic_loss
            + self.short_circuit
            + self.leakage;
    }

    /// Sum of per-event energies plus static terms; equals `total` up to
    /// rounding.
    pub fn event_sum(&self) -> f64 {
        self.events.iter().map(|(_, j)| j).sum::<f64>() + self.short_circuit + self.leakage
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }
}
