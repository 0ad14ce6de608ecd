//! Run configuration: one JSON document, overridden by command-line flags.
//! Every angle in a config is given in units of π.

use std::f64::consts::PI;

use clap::ValueEnum;
use polariton::kinematics::ChainParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Dispersion,
    Boundary,
    PhaseDiagram,
    ScatterPoint,
    Subradiance,
    OracleCompare,
    LlCompare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Dispersion => "dispersion",
            Command::Boundary => "boundary",
            Command::PhaseDiagram => "phase-diagram",
            Command::ScatterPoint => "scatter-point",
            Command::Subradiance => "subradiance",
            Command::OracleCompare => "oracle-compare",
            Command::LlCompare => "ll-compare",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMode {
    Subradiance,
    Residual,
    Wavepacket,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default = "one")]
    pub gamma_r: f64,
    #[serde(default = "one")]
    pub gamma_l: f64,
    #[serde(default)]
    pub gamma_s: f64,
    /// Units of π.
    #[serde(default = "half")]
    pub k0d: f64,
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self {
            gamma_r: 1.0,
            gamma_l: 1.0,
            gamma_s: 0.0,
            k0d: 0.5,
        }
    }
}

impl ParamsConfig {
    pub fn to_params(&self) -> polariton::Result<ChainParams> {
        ChainParams::with_side_loss(self.gamma_r, self.gamma_l, self.gamma_s, self.k0d * PI)
    }
}

/// Axis in units of π.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub kd: Option<AxisConfig>,
    #[serde(rename = "Kd")]
    pub big_k: Option<AxisConfig>,
    pub qd: Option<AxisConfig>,
}

/// Pair momentum in units of π.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    #[serde(rename = "Kd")]
    pub big_k: f64,
    pub qd: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<String>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub grid: GridConfig,
    pub point: Option<PointConfig>,
    #[serde(default)]
    pub points: Vec<PointConfig>,
    pub n: Option<Vec<usize>>,
    pub xi: Option<Vec<usize>>,
    pub mode: Option<OracleMode>,
    /// Wavepacket width in sites.
    pub width: Option<f64>,
    /// Number of random points for sampled commands.
    pub samples: Option<usize>,
    #[serde(default)]
    pub output: OutputConfig,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
}

/// Pole-avoiding inset applied to both ends of every axis, in rad.
pub const AXIS_INSET: f64 = 1e-6;

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("config: {e}"))
    }

    pub fn command(&self) -> Command {
        self.command.unwrap_or(Command::Dispersion)
    }

    pub fn format(&self) -> Format {
        self.output.format.unwrap_or_default()
    }

    pub fn kd_axis(&self) -> AxisConfig {
        self.grid.kd.unwrap_or(match self.command() {
            Command::Boundary => AxisConfig {
                min: 0.0,
                max: 1.0,
                count: 200,
            },
            Command::LlCompare => AxisConfig {
                min: 0.0,
                max: 0.05,
                count: 101,
            },
            _ => AxisConfig {
                min: -1.0,
                max: 1.0,
                count: 400,
            },
        })
    }

    pub fn big_k_axis(&self) -> AxisConfig {
        self.grid.big_k.unwrap_or(AxisConfig {
            min: -1.0,
            max: 1.0,
            count: 201,
        })
    }

    pub fn qd_axis(&self) -> AxisConfig {
        self.grid.qd.unwrap_or(match self.command() {
            Command::LlCompare => AxisConfig {
                min: 0.0,
                max: 0.05,
                count: 101,
            },
            _ => AxisConfig {
                min: -1.0,
                max: 1.0,
                count: 201,
            },
        })
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.n
            .clone()
            .unwrap_or_else(|| match (self.command(), self.mode()) {
                (Command::OracleCompare, OracleMode::Residual) => vec![150],
                (Command::OracleCompare, OracleMode::Wavepacket) => vec![200],
                (Command::Boundary, _) => vec![100],
                _ => vec![20, 40, 80],
            })
    }

    pub fn xis(&self) -> Vec<usize> {
        self.xi.clone().unwrap_or_else(|| vec![1, 2])
    }

    pub fn mode(&self) -> OracleMode {
        self.mode.unwrap_or(OracleMode::Subradiance)
    }

    pub fn width(&self) -> f64 {
        self.width.unwrap_or(5.0)
    }

    pub fn samples(&self) -> usize {
        self.samples.unwrap_or(5)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn output_path(&self) -> String {
        self.output.path.clone().unwrap_or_else(|| {
            let ext = match self.format() {
                Format::Csv => "csv",
                Format::Json => "json",
            };
            format!("{}.{ext}", self.command().name())
        })
    }

    /// All constraint violations; empty when the config is runnable.
    // Negated comparisons so that NaN inputs are rejected.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Vec<String> {
        let mut v = vec![];
        let p = &self.params;
        if !(p.k0d * PI > 1e-9 && p.k0d * PI < PI - 1e-9) {
            v.push("k0d must lie strictly inside (0, π)".to_string());
        }
        if p.gamma_r < 0.0 || p.gamma_l < 0.0 || p.gamma_s < 0.0 {
            v.push("decay rates must be non-negative".to_string());
        }
        if !(p.gamma_r + p.gamma_l > 0.0) {
            v.push("gamma_r + gamma_l must be positive".to_string());
        }
        let cmd = self.command();
        let mut axis = |name: &str, a: AxisConfig| {
            if a.count < 2 {
                v.push(format!("grid.{name}.count must be at least 2"));
            }
            if !(a.min < a.max) {
                v.push(format!("grid.{name}: min must be below max"));
            }
        };
        match cmd {
            Command::Dispersion | Command::Boundary => axis("kd", self.kd_axis()),
            Command::PhaseDiagram => {
                axis("Kd", self.big_k_axis());
                axis("qd", self.qd_axis());
            }
            Command::LlCompare => axis("qd", self.qd_axis()),
            _ => {}
        }
        if let Some(t) = self.threads {
            if t == 0 {
                v.push("threads must be at least 1".to_string());
            }
        }
        let needs_non_chiral = matches!(cmd, Command::Subradiance)
            || (cmd == Command::OracleCompare && self.mode() == OracleMode::Subradiance);
        if needs_non_chiral {
            if p.gamma_r != p.gamma_l {
                v.push(format!(
                    "{} requires non-chiral parameters (gamma_r == gamma_l)",
                    cmd.name()
                ));
            }
            for &n in &self.sizes() {
                if !(2..=polariton::oracle::MAX_N_ONE).contains(&n) {
                    v.push(format!(
                        "N = {n} outside 2..={}",
                        polariton::oracle::MAX_N_ONE
                    ));
                }
                for &xi in &self.xis() {
                    if xi == 0 || (xi as f64 / n as f64) >= p.k0d {
                        v.push(format!("mode xi = {xi} out of range for N = {n}"));
                    }
                }
            }
        }
        if cmd == Command::OracleCompare && self.mode() == OracleMode::Residual {
            for &n in &self.sizes() {
                if !(100..=1000).contains(&n) {
                    v.push(format!("residual check needs 100 <= N <= 1000, got {n}"));
                }
            }
        }
        if cmd == Command::OracleCompare && self.mode() == OracleMode::Wavepacket {
            for &n in &self.sizes() {
                if !(2..=polariton::oracle::MAX_N_TWO).contains(&n) {
                    v.push(format!(
                        "two-excitation chains need N <= {}, got {n}",
                        polariton::oracle::MAX_N_TWO
                    ));
                }
            }
            if self.point.is_none() && self.points.is_empty() {
                v.push("wavepacket comparison needs `point` or `points`".to_string());
            }
        }
        if cmd == Command::ScatterPoint && self.point.is_none() && self.points.is_empty() {
            v.push("scatter-point needs `point` or `points`".to_string());
        }
        v
    }
}
