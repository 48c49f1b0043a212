//! Run configuration in TOML.
//!
//! ```toml
//! output_dir = "out/ring"
//! history_capacity = 64
//!
//! [grid]
//! nr = 128
//! nz = 128
//! r_max = 8.0
//! z_min = -8.0
//! z_max = 8.0
//! z_boundary = "wall"        # or "periodic"
//!
//! [solver]
//! mu = 1.0
//! cfl = 0.3                  # or dt = 1e-4, exactly one of the two
//! t_end = 1.0
//! projection_tol = 1e-10
//! snapshot_every = 10
//! poisson = "spectral"       # or "red_black"
//!
//! [data]
//! kind = "vortex_ring_swirl"
//! amplitude = 1.0
//! swirl = 1.0
//! ring_r = 2.0
//! core = 0.6
//! n0 = 1.0
//!
//! [microscope]               # optional, see MicroscopeConfig
//! [invariants]               # optional, see InvariantConfig
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, ZBoundary};
use crate::initdata::DataSpec;
use crate::invariants::InvariantConfig;
use crate::microscope::MicroscopeConfig;
use crate::solver::{PoissonMethod, SolverConfig, TimeStep};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nr: usize,
    pub nz: usize,
    pub r_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    #[serde(default)]
    pub z_boundary: ZBoundary,
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid> {
        let g = Grid::new(self.nr, self.nz, self.r_max, self.z_min, self.z_max)
            .map_err(|e| Error::config("grid", e.to_string()))?;
        Ok(g.with_z_boundary(self.z_boundary))
    }
}

fn default_mu() -> f64 {
    1.0
}

fn default_tol() -> f64 {
    1e-10
}

fn default_snapshot_every() -> usize {
    10
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    pub t_end: f64,
    #[serde(default = "default_tol")]
    pub projection_tol: f64,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
    #[serde(default)]
    pub poisson: PoissonMethod,
}

impl SolverSection {
    pub fn build(&self) -> Result<SolverConfig> {
        let time_step = match (self.dt, self.cfl) {
            (Some(dt), None) => TimeStep::Fixed(dt),
            (None, Some(c)) => TimeStep::Cfl(c),
            _ => return Err(Error::config("solver", "exactly one of `dt` and `cfl` must be given")),
        };
        let c = SolverConfig {
            mu: self.mu,
            time_step,
            t_end: self.t_end,
            projection_tol: self.projection_tol,
            snapshot_every: self.snapshot_every,
            poisson: self.poisson,
        };
        c.validate()?;
        Ok(c)
    }
}

fn default_capacity() -> usize {
    64
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_capacity")]
    pub history_capacity: usize,
    pub grid: GridConfig,
    pub solver: SolverSection,
    pub data: DataSpec,
    #[serde(default)]
    pub microscope: MicroscopeConfig,
    #[serde(default)]
    pub invariants: InvariantConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.build()?;
        self.solver.build()?;
        self.data.validate()?;
        self.microscope.validate()?;
        self.invariants.validate()?;
        if self.history_capacity < 3 {
            return Err(Error::config("history_capacity", "must be at least 3"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        self.grid.build()
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        self.solver.build()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration is always representable in TOML")
    }
}

/// Parses and validates a configuration; errors name the offending key.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::config("<document>", e.to_string()))?;
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(path, e.into_inner().message().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parses an already-decoded TOML value (used by parameter sweeps).
pub fn config_from_value(value: toml::Value) -> Result<RunConfig> {
    parse_config(&toml::to_string(&value).map_err(|e| Error::config("<document>", e.to_string()))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
nr = 16
nz = 16
r_max = 2.0
z_min = -1.0
z_max = 1.0

[solver]
cfl = 0.3
t_end = 0.1

[data]
kind = "zero"
"#;

    #[test]
    fn minimal_document_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.history_capacity, 64);
        assert_eq!(c.output_dir, PathBuf::from("out"));
        let s = c.solver_config().unwrap();
        assert_eq!(s.mu, 1.0);
        assert_eq!(s.projection_tol, 1e-10);
        assert_eq!(s.snapshot_every, 10);
        assert_eq!(s.time_step, TimeStep::Cfl(0.3));
        assert_eq!(c.microscope, MicroscopeConfig::default());
        assert_eq!(c.grid.z_boundary, ZBoundary::Wall);
    }

    #[test]
    fn negative_viscosity_names_the_key() {
        let text = MINIMAL.replace("cfl = 0.3", "cfl = 0.3\nmu = -1");
        match parse_config(&text) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "solver.mu"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_and_mistyped_keys_name_the_path() {
        let text = MINIMAL.replace("t_end = 0.1", "t_end = 0.1\nt_ned = 2");
        match parse_config(&text) {
            Err(Error::Config { path, message }) => {
                assert_eq!(path, "solver.t_ned");
                assert!(message.contains("unknown field"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let text = MINIMAL.replace("nr = 16", "nr = \"sixteen\"");
        match parse_config(&text) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "grid.nr"),
            other => panic!("{other:?}"),
        }
        let text = MINIMAL.replace("nr = 16\n", "");
        match parse_config(&text) {
            Err(Error::Config { message, .. }) => assert!(message.contains("nr"), "{message}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn both_or_neither_time_step_is_rejected() {
        let both = MINIMAL.replace("cfl = 0.3", "cfl = 0.3\ndt = 0.001");
        assert!(parse_config(&both).is_err());
        let neither = MINIMAL.replace("cfl = 0.3\n", "");
        assert!(parse_config(&neither).is_err());
    }

    #[test]
    fn round_trip() {
        let text = format!(
            "{MINIMAL}\n[microscope]\nepsilon = 0.2\n[invariants]\nh0 = 0.5\n"
        )
        .replace("kind = \"zero\"", "kind = \"vortex_ring_swirl\"\namplitude = 1.0\nswirl = 0.5\nring_r = 1.0\ncore = 0.2");
        let a = parse_config(&text).unwrap();
        let b = parse_config(&a.to_toml()).unwrap();
        assert_eq!(a, b);
    }
}
