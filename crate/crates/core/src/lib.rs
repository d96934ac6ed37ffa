//! Signal-level simulator of a spinning time-of-flight LiDAR under
//! intentional electromagnetic interference, together with the attack-side
//! toolchain that designs injection signals, the fault-detection state
//! machine such attacks exploit, and the metrics and dataset-corruption
//! utilities used to quantify their effects.
//!
//! The pieces compose in layers:
//!
//! * [`config`], [`schedule`], [`scene`], [`cloud`] — the sensor, its firing
//!   schedule, analytic scenes, and measured point clouds;
//! * [`waveform`], [`signal`] — the waveform-level ranging pipeline (echo
//!   synthesis, interference superposition, saturation, undersampling ADC,
//!   peak detection, round-trip ranging);
//! * [`emi`], [`monitor`], [`fdd`] — the attacker's emitter, the coupling
//!   channel into each victim surface, monitoring-sensor corruption, and the
//!   four-state supervision machine;
//! * [`scan`] — the frame driver tying the above together;
//! * [`attack`] — carrier search, baseband design, AM modulation, and
//!   receive-delay-fire synchronization;
//! * [`metrics`], [`corrupt`] — effect quantification and dataset
//!   corruption with binary point cloud interchange.
//!
//! The narrative guide in `book/` walks through the concepts; its code
//! snippets compile and run as doctests of this crate.

pub mod attack;
pub mod cloud;
pub mod config;
pub mod corrupt;
pub mod emi;
pub mod error;
pub mod fdd;
pub mod kv;
pub mod metrics;
pub mod monitor;
pub mod rng;
pub mod scan;
pub mod scene;
pub mod schedule;
pub mod signal;
pub mod waveform;

pub use cloud::{Point, PointCloud};
pub use config::{AzimuthTimestamping, LidarConfig};
pub use emi::{CouplingChannel, EmiSource, Modulation, Pulse, PulseTrain, Resonance, Surface};
pub use error::{Error, Result};
pub use fdd::{FaultCode, FaultEvent, FaultLevel, FddMachine, LidarState};
pub use metrics::{EffectLabel, RayErrorStats};
pub use monitor::MonitoringReadout;
pub use scan::{scan_frame, ScanOutput};
pub use scene::{Primitive, Scene};
pub use schedule::{firing_schedule, FiringEvent};
pub use signal::{EchoDetection, SPEED_OF_LIGHT};
pub use waveform::Waveform;

// The book's code snippets double as doctests so the guide cannot drift
// from the library.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }
    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(ranging, "../../../book/src/ranging.md");
    chapter!(interference, "../../../book/src/interference.md");
    chapter!(faults, "../../../book/src/faults.md");
    chapter!(injection, "../../../book/src/injection.md");
    chapter!(metrics, "../../../book/src/metrics.md");
    chapter!(corruption, "../../../book/src/corruption.md");
    chapter!(cli, "../../../book/src/cli.md");
}
