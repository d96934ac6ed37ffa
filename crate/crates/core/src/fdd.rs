//! Fault detection and diagnostics: the four-state supervision machine.
//!
//! The machine moves between Initialization, Normal, Warning, and PowerOff.
//! Low-impact (L1) faults degrade operation and send the machine to Warning;
//! severe (L2) faults force PowerOff from any state, and only a reboot leaves
//! PowerOff. Faults are debounced: a fault becomes active after `debounce`
//! consecutive violating readouts and clears after the same number of clean
//! ones.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::monitor::MonitoringReadout;

/// Operational state of the sensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LidarState {
    Initialization,
    Normal,
    Warning,
    PowerOff,
}

impl LidarState {
    pub fn name(&self) -> &'static str {
        match self {
            LidarState::Initialization => "initialization",
            LidarState::Normal => "normal",
            LidarState::Warning => "warning",
            LidarState::PowerOff => "power_off",
        }
    }
}

/// Fault severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaultLevel {
    /// Degraded operation is permitted.
    L1,
    /// Forces shutdown.
    L2,
}

/// Diagnosed fault kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaultCode {
    TempOutOfRange,
    VoltageOutOfRange,
    RpmDeviation,
    SelfCheckFail,
}

impl FaultCode {
    pub const ALL: [FaultCode; 4] = [
        FaultCode::TempOutOfRange,
        FaultCode::VoltageOutOfRange,
        FaultCode::RpmDeviation,
        FaultCode::SelfCheckFail,
    ];

    /// Severity is a fixed property of the code.
    pub fn level(&self) -> FaultLevel {
        match self {
            FaultCode::TempOutOfRange | FaultCode::VoltageOutOfRange => FaultLevel::L1,
            FaultCode::RpmDeviation | FaultCode::SelfCheckFail => FaultLevel::L2,
        }
    }

    /// Subsystem the fault originates from.
    pub fn source(&self) -> &'static str {
        match self {
            FaultCode::TempOutOfRange => "temperature_sensor",
            FaultCode::VoltageOutOfRange => "power_monitor",
            FaultCode::RpmDeviation => "beam_steering",
            FaultCode::SelfCheckFail => "main_board",
        }
    }

    /// Whether an active fault of this code invalidates the cycle's points.
    pub fn invalidates_points(&self) -> bool {
        matches!(
            self,
            FaultCode::TempOutOfRange | FaultCode::VoltageOutOfRange
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            FaultCode::TempOutOfRange => "temp_out_of_range",
            FaultCode::VoltageOutOfRange => "voltage_out_of_range",
            FaultCode::RpmDeviation => "rpm_deviation",
            FaultCode::SelfCheckFail => "self_check_fail",
        }
    }
}

/// One diagnosed fault instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FaultEvent {
    pub level: FaultLevel,
    pub code: FaultCode,
    /// Subsystem name.
    pub source: &'static str,
    /// Readout timestamp that confirmed the fault, seconds.
    pub timestamp: f64,
}

/// Configurable fault thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultThresholds {
    /// Acceptable temperature interval, °C.
    pub temp_min: f64,
    pub temp_max: f64,
    /// Acceptable fractional rail deviation from nominal.
    pub rail_tolerance: f64,
    /// Nominal rail voltages, volts.
    pub rail_nominals: Vec<f64>,
    /// Fractional RPM deviation that constitutes a severe fault.
    pub rpm_deviation: f64,
}

impl Default for FaultThresholds {
    fn default() -> Self {
        Self {
            temp_min: -20.0,
            temp_max: 90.0,
            rail_tolerance: 0.10,
            rail_nominals: vec![5.0, 3.3, 2.5, 1.2],
            rpm_deviation: 0.5,
        }
    }
}

/// The supervision machine. A value type: `classify_faults`, `step`, and
/// `reboot` return updated machines rather than mutating in place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FddMachine {
    pub state: LidarState,
    pub thresholds: FaultThresholds,
    /// Consecutive readouts needed to raise or clear a fault, and clean
    /// cycles needed to recover from Warning.
    pub debounce: u32,
    /// Preset rotation speed, RPM.
    pub preset_rpm: f64,
    // Debounce bookkeeping, indexed by FaultCode order in FaultCode::ALL.
    violation_streaks: [u32; 4],
    clean_streaks: [u32; 4],
    active: [bool; 4],
    /// Consecutive fault-free cycles while in Warning.
    clean_cycles: u32,
    /// Whether the last readout's RPM was within 5 % of preset (spin-up gate).
    rpm_near_preset: bool,
}

impl FddMachine {
    pub fn new(thresholds: FaultThresholds, debounce: u32, preset_rpm: f64) -> Self {
        Self {
            state: LidarState::Initialization,
            thresholds,
            debounce: debounce.max(1),
            preset_rpm,
            violation_streaks: [0; 4],
            clean_streaks: [0; 4],
            active: [false; 4],
            clean_cycles: 0,
            rpm_near_preset: false,
        }
    }

    /// A machine already spun up and supervising normally.
    pub fn running(thresholds: FaultThresholds, debounce: u32, preset_rpm: f64) -> Self {
        let mut m = Self::new(thresholds, debounce, preset_rpm);
        m.state = LidarState::Normal;
        m.rpm_near_preset = true;
        m
    }

    /// Currently active faults stamped with `timestamp`.
    pub fn active_faults(&self, timestamp: f64) -> Vec<FaultEvent> {
        FaultCode::ALL
            .iter()
            .enumerate()
            .filter(|(i, _)| self.active[*i])
            .map(|(_, code)| FaultEvent {
                level: code.level(),
                code: *code,
                source: code.source(),
                timestamp,
            })
            .collect()
    }

    fn violates(&self, code: FaultCode, readout: &MonitoringReadout) -> bool {
        match code {
            FaultCode::TempOutOfRange => {
                readout.temperature < self.thresholds.temp_min
                    || readout.temperature > self.thresholds.temp_max
            }
            FaultCode::VoltageOutOfRange => readout
                .voltage_rails
                .iter()
                .zip(self.thresholds.rail_nominals.iter())
                .any(|(v, nominal)| {
                    (v - nominal).abs() > self.thresholds.rail_tolerance * nominal.abs()
                }),
            FaultCode::RpmDeviation => {
                (readout.rpm - self.preset_rpm).abs() / self.preset_rpm
                    > self.thresholds.rpm_deviation
            }
            // The simulated self-check always passes; the code exists so the
            // machine is total over the published fault taxonomy.
            FaultCode::SelfCheckFail => false,
        }
    }
}

/// Update debounce state with one readout and report the active faults.
pub fn classify_faults(
    readout: &MonitoringReadout,
    machine: &FddMachine,
) -> (FddMachine, Vec<FaultEvent>) {
    let mut m = machine.clone();
    for (i, code) in FaultCode::ALL.iter().enumerate() {
        if m.violates(*code, readout) {
            m.violation_streaks[i] += 1;
            m.clean_streaks[i] = 0;
            if m.violation_streaks[i] >= m.debounce {
                m.active[i] = true;
            }
        } else {
            m.clean_streaks[i] += 1;
            m.violation_streaks[i] = 0;
            if m.clean_streaks[i] >= m.debounce {
                m.active[i] = false;
            }
        }
    }
    m.rpm_near_preset = (readout.rpm - m.preset_rpm).abs() <= 0.05 * m.preset_rpm;
    let faults = m.active_faults(readout.timestamp);
    (m, faults)
}

/// Advance the machine one cycle given the cycle's active faults.
pub fn step(machine: &FddMachine, faults: &[FaultEvent]) -> FddMachine {
    let mut m = machine.clone();
    if m.state == LidarState::PowerOff {
        return m; // absorbing: only reboot leaves PowerOff
    }
    if faults.iter().any(|f| f.level == FaultLevel::L2) {
        m.state = LidarState::PowerOff;
        return m;
    }
    let any_l1 = !faults.is_empty();
    match m.state {
        LidarState::Initialization => {
            if any_l1 {
                m.state = LidarState::Warning;
                m.clean_cycles = 0;
            } else if m.rpm_near_preset {
                m.state = LidarState::Normal;
            }
        }
        LidarState::Normal => {
            if any_l1 {
                m.state = LidarState::Warning;
                m.clean_cycles = 0;
            }
        }
        LidarState::Warning => {
            if any_l1 {
                m.clean_cycles = 0;
            } else {
                m.clean_cycles += 1;
                if m.clean_cycles >= m.debounce {
                    m.state = LidarState::Normal;
                    m.clean_cycles = 0;
                }
            }
        }
        LidarState::PowerOff => unreachable!(),
    }
    m
}

/// Unconditional reboot: back to Initialization with counters cleared.
pub fn reboot(machine: &FddMachine) -> FddMachine {
    let mut m = machine.clone();
    m.state = LidarState::Initialization;
    m.violation_streaks = [0; 4];
    m.clean_streaks = [0; 4];
    m.active = [false; 4];
    m.clean_cycles = 0;
    m.rpm_near_preset = false;
    m
}

/// One cycle of the supervision trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub timestamp: f64,
    pub state: LidarState,
    pub faults: Vec<FaultEvent>,
}

/// Write a state/fault trace as CSV: `timestamp_s,state,fault_code,level`.
/// Cycles with several faults emit one row per fault; clean cycles emit one
/// row with empty fault columns.
pub fn write_trace_csv<W: Write>(records: &[TraceRecord], mut w: W) -> Result<()> {
    writeln!(w, "timestamp_s,state,fault_code,level")?;
    for rec in records {
        if rec.faults.is_empty() {
            writeln!(w, "{},{},,", rec.timestamp, rec.state.name())?;
        } else {
            for f in &rec.faults {
                writeln!(
                    w,
                    "{},{},{},{}",
                    rec.timestamp,
                    rec.state.name(),
                    f.code.name(),
                    match f.level {
                        FaultLevel::L1 => "L1",
                        FaultLevel::L2 => "L2",
                    }
                )?;
            }
        }
    }
    Ok(())
}
