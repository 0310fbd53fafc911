//! Scenario files: one chain scenario plus run parameters per TOML file.

use std::fs;
use std::path::{Path, PathBuf};

use platoon_core::analysis::FrequencyGrid;
use platoon_core::chain::{ChainScenario, Comm, Sensors};
use platoon_core::ratfun::RationalTF;
use platoon_core::simkit::{read_series_csv, DisturbanceKind, DisturbanceSpec, Target, DEFAULT_DT, DEFAULT_HORIZON};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Transfer function as ascending coefficient lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TfSpec {
    pub num: Vec<f64>,
    #[serde(default = "unit_den")]
    pub den: Vec<f64>,
}

fn unit_den() -> Vec<f64> {
    vec![1.0]
}

impl TfSpec {
    pub fn from_tf(tf: &RationalTF) -> Self {
        TfSpec {
            num: tf.num().coeffs().to_vec(),
            den: tf.den().coeffs().to_vec(),
        }
    }

    fn build(&self, field: &str) -> Result<RationalTF, CliError> {
        if self.num.iter().chain(&self.den).any(|c| !c.is_finite()) {
            return Err(CliError::Config(format!("{field}: coefficients must be finite")));
        }
        RationalTF::from_coeffs(&self.num, &self.den).map_err(|e| CliError::Config(format!("{field}: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CommSpec {
    #[default]
    None,
    Cacc {
        #[serde(rename = "B")]
        b: TfSpec,
        #[serde(rename = "H")]
        h: TfSpec,
        #[serde(rename = "W")]
        w: TfSpec,
    },
    General {
        #[serde(rename = "F")]
        f: TfSpec,
        #[serde(rename = "G")]
        g: TfSpec,
        #[serde(rename = "H")]
        h: TfSpec,
        #[serde(rename = "W")]
        w: TfSpec,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    #[serde(rename = "Kr")]
    pub kr: TfSpec,
    #[serde(rename = "Kf")]
    pub kf: TfSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSpec {
    pub dt: f64,
    pub horizon: f64,
    /// Followers behind the leader.
    pub n: usize,
    pub record_every: usize,
}

impl Default for SimSpec {
    fn default() -> Self {
        SimSpec {
            dt: DEFAULT_DT,
            horizon: DEFAULT_HORIZON,
            n: 8,
            record_every: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSpec {
    pub grid_min: f64,
    pub grid_max: f64,
    pub points_per_decade: usize,
    pub refinement_depth: usize,
    /// Chain lengths for the gain sweeps, ascending.
    pub ns: Vec<usize>,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        let g = FrequencyGrid::default();
        AnalysisSpec {
            grid_min: g.omega_min,
            grid_max: g.omega_max,
            points_per_decade: g.points_per_decade,
            refinement_depth: g.refinement_depth,
            ns: vec![1, 2, 4, 8, 16, 32, 64],
        }
    }
}

/// Disturbance entry; `type = "file"` loads a `t,value` CSV relative to the
/// config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DisturbanceKindSpec {
    Impulse,
    Sine {
        omega: f64,
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    LowpassNoise {
        cutoff: f64,
        seed: u64,
        amplitude: f64,
    },
    Series {
        t: Vec<f64>,
        value: Vec<f64>,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceEntry {
    #[serde(flatten)]
    pub kind: DisturbanceKindSpec,
    pub target: Target,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub h: f64,
    #[serde(rename = "K")]
    pub k: TfSpec,
    #[serde(default)]
    pub comm: CommSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensors: Option<SensorSpec>,
    #[serde(default)]
    pub sim: SimSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub disturbances: Vec<DisturbanceEntry>,
}

/// A parsed config together with the directory its relative paths refer to.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub config: Config,
    pub base_dir: PathBuf,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Canonical TOML with every default written out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical form, hex encoded.
    pub fn hash(&self) -> String {
        format!("{:x}", Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn from_scenario(sc: &ChainScenario) -> Self {
        let comm = match sc.comm() {
            Comm::None => CommSpec::None,
            Comm::Cacc { b, h, w } => CommSpec::Cacc {
                b: TfSpec::from_tf(b),
                h: TfSpec::from_tf(h),
                w: TfSpec::from_tf(w),
            },
            Comm::General { f, g, h, w } => CommSpec::General {
                f: TfSpec::from_tf(f),
                g: TfSpec::from_tf(g),
                h: TfSpec::from_tf(h),
                w: TfSpec::from_tf(w),
            },
        };
        let sensors = match sc.sensors() {
            Sensors::Identity => None,
            Sensors::Mounts { kr, kf } => Some(SensorSpec {
                kr: TfSpec::from_tf(kr),
                kf: TfSpec::from_tf(kf),
            }),
        };
        Config {
            h: sc.h(),
            k: TfSpec::from_tf(sc.k()),
            comm,
            sensors,
            sim: SimSpec::default(),
            analysis: AnalysisSpec::default(),
            disturbances: Vec::new(),
        }
    }

    /// Field-level checks followed by scenario construction.
    pub fn scenario(&self) -> Result<ChainScenario, CliError> {
        if !(self.h.is_finite() && self.h >= 0.0) {
            return Err(CliError::Config(format!(
                "h: must be a finite value >= 0, got {}",
                self.h
            )));
        }
        let k = self.k.build("K")?;
        if k.dc_gain().is_zero() {
            return Err(CliError::Config(
                "K.num: K(0) must be nonzero (the controller may not cancel the double integrator)".into(),
            ));
        }
        let comm = match &self.comm {
            CommSpec::None => Comm::None,
            CommSpec::Cacc { b, h, w } => Comm::Cacc {
                b: b.build("comm.B")?,
                h: h.build("comm.H")?,
                w: w.build("comm.W")?,
            },
            CommSpec::General { f, g, h, w } => Comm::General {
                f: f.build("comm.F")?,
                g: g.build("comm.G")?,
                h: h.build("comm.H")?,
                w: w.build("comm.W")?,
            },
        };
        let sensors = match &self.sensors {
            None => Sensors::Identity,
            Some(s) => Sensors::Mounts {
                kr: s.kr.build("sensors.Kr")?,
                kf: s.kf.build("sensors.Kf")?,
            },
        };
        ChainScenario::new(self.h, k, comm, sensors).map_err(|e| CliError::Config(format!("scenario: {e}")))
    }

    pub fn grid(&self) -> Result<FrequencyGrid, CliError> {
        let a = &self.analysis;
        FrequencyGrid::new(a.grid_min, a.grid_max, a.points_per_decade, a.refinement_depth)
            .map_err(|e| CliError::Config(format!("analysis.grid_min/grid_max/points_per_decade: {e}")))
    }

    pub fn chain_lengths(&self) -> Result<&[usize], CliError> {
        let ns = &self.analysis.ns;
        if ns.is_empty() || ns[0] == 0 || ns.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config(
                "analysis.ns: chain lengths must be >= 1 and strictly ascending".into(),
            ));
        }
        Ok(ns)
    }

    pub fn check_sim(&self) -> Result<(), CliError> {
        let s = &self.sim;
        if !(s.dt > 0.0 && s.dt.is_finite()) {
            return Err(CliError::Config(format!("sim.dt: must be positive, got {}", s.dt)));
        }
        if !(s.horizon > s.dt && s.horizon.is_finite()) {
            return Err(CliError::Config(format!(
                "sim.horizon: must exceed sim.dt, got {}",
                s.horizon
            )));
        }
        if s.n == 0 {
            return Err(CliError::Config("sim.n: at least one follower is needed".into()));
        }
        if s.record_every == 0 {
            return Err(CliError::Config("sim.record_every: must be >= 1".into()));
        }
        Ok(())
    }

    /// Resolves file-backed entries and validates each disturbance.
    pub fn disturbances(&self, base_dir: &Path) -> Result<Vec<DisturbanceSpec>, CliError> {
        self.disturbances
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let field = format!("disturbances[{i}]");
                let kind = match &d.kind {
                    DisturbanceKindSpec::Impulse => DisturbanceKind::Impulse,
                    &DisturbanceKindSpec::Sine {
                        omega,
                        amplitude,
                        phase,
                    } => DisturbanceKind::Sine {
                        omega,
                        amplitude,
                        phase,
                    },
                    &DisturbanceKindSpec::LowpassNoise {
                        cutoff,
                        seed,
                        amplitude,
                    } => DisturbanceKind::LowpassNoise {
                        cutoff,
                        seed,
                        amplitude,
                    },
                    DisturbanceKindSpec::Series { t, value } => DisturbanceKind::Series {
                        t: t.clone(),
                        value: value.clone(),
                    },
                    DisturbanceKindSpec::File { path } => {
                        let full = base_dir.join(path);
                        let f = fs::File::open(&full)
                            .map_err(|e| CliError::Config(format!("{field}.path: {}: {e}", full.display())))?;
                        read_series_csv(f).map_err(|e| CliError::Config(format!("{field}.path: {e}")))?
                    }
                };
                let spec = DisturbanceSpec {
                    kind,
                    target: d.target,
                    duration: d.duration,
                };
                spec.validate().map_err(|e| CliError::Config(format!("{field}: {e}")))?;
                if let Target::Vehicle(v) = spec.target {
                    if v > self.sim.n {
                        return Err(CliError::Config(format!(
                            "{field}.target: vehicle {v} does not exist with sim.n = {}",
                            self.sim.n
                        )));
                    }
                }
                Ok(spec)
            })
            .collect()
    }

    /// Replaces the seed of every noise disturbance.
    pub fn reseed(&mut self, seed: u64) {
        for d in &mut self.disturbances {
            if let DisturbanceKindSpec::LowpassNoise { seed: s, .. } = &mut d.kind {
                *s = seed;
            }
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let config = Config::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(RunConfig { config, base_dir })
    }
}
