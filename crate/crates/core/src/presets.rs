//! Named test configurations with their reference parameters.

use std::fmt;
use std::str::FromStr;

use crate::config::RunConfig;
use crate::error::Error;
use crate::grid::BoundaryKind;
use crate::systems::{euler_ideal_gas, leveque_yee, linear_system, noncons_system, System};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PresetName {
    LevequeYee,
    LinearSystem,
    Noncons,
    EulerSmooth,
}

impl PresetName {
    pub const ALL: [PresetName; 4] = [
        PresetName::LevequeYee,
        PresetName::LinearSystem,
        PresetName::Noncons,
        PresetName::EulerSmooth,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::LevequeYee => "leveque-yee",
            PresetName::LinearSystem => "linear-system",
            PresetName::Noncons => "noncons",
            PresetName::EulerSmooth => "euler-smooth",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown preset `{s}`")))
    }
}

/// A system together with its domain, mesh and run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: PresetName,
    pub system: System,
    pub domain: (f64, f64),
    pub cells: usize,
    pub config: RunConfig,
    /// Unknown reported in convergence tables.
    pub tracked_var: usize,
}

impl Preset {
    pub fn get(name: PresetName) -> Self {
        let base = RunConfig {
            cfl: 0.1,
            ..RunConfig::default()
        };
        match name {
            PresetName::LevequeYee => Preset {
                name,
                system: leveque_yee(-1000.0),
                domain: (0.0, 1.0),
                cells: 100,
                config: RunConfig {
                    order: 3,
                    alpha: 2.4,
                    t_out: 0.3,
                    boundary: BoundaryKind::Transmissive,
                    ..base
                },
                tracked_var: 0,
            },
            PresetName::LinearSystem => Preset {
                name,
                system: linear_system(1.0, -1.0),
                domain: (0.0, 1.0),
                cells: 64,
                config: RunConfig {
                    order: 3,
                    alpha: 1.9,
                    t_out: 1.0,
                    boundary: BoundaryKind::Periodic,
                    ..base
                },
                tracked_var: 0,
            },
            PresetName::Noncons => Preset {
                name,
                system: noncons_system(1.0, 0.02),
                domain: (0.0, 1.0),
                cells: 16,
                config: RunConfig {
                    order: 4,
                    alpha: 2.2,
                    t_out: 1.0,
                    boundary: BoundaryKind::Periodic,
                    ..base
                },
                tracked_var: 0,
            },
            PresetName::EulerSmooth => Preset {
                name,
                system: euler_ideal_gas(1.4),
                domain: (0.0, 1.0),
                cells: 64,
                config: RunConfig {
                    order: 5,
                    alpha: 2.0,
                    t_out: 1.0,
                    boundary: BoundaryKind::Periodic,
                    ..base
                },
                tracked_var: 0,
            },
        }
    }
}
