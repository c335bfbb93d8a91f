//! TOML run configuration. All values are SI; unknown keys are errors.
//!
//! ```toml
//! name = "fig3-transfer"
//! species = "Rb87"            # or a [species] table
//!
//! [trap]
//! omega_t = 5.0
//! atoms_per_site = 1e6
//! x_send = 0.0
//! x_recv = 1e-3
//!
//! [beam]
//! atoms = 5000
//! k0 = 8e6
//! var_x = 0.14
//! var_y = 7.39
//!
//! [optical]
//! delta = 6.283185307179586e9
//! waist = 1e-4
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{GridSpec, IntegratorSpec, LossSpec, MetricsSpec, Scenario, ScenarioKind, SweepSpec};
use crate::units::{
    AtomSpecies, BeamConfig, FrequencyUnits, OpticalConfig, PhysicalConfig, PhysicalConstants, TrapConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpeciesEntry {
    Builtin(String),
    Table(AtomSpecies),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    pub omega_t: f64,
    #[serde(default)]
    pub omega_units: FrequencyUnits,
    pub atoms_per_site: f64,
    pub x_send: f64,
    pub x_recv: f64,
    #[serde(default)]
    pub number_imbalance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSection {
    pub atoms: f64,
    pub k0: f64,
    #[serde(default)]
    pub center: Option<f64>,
    #[serde(default)]
    pub width: Option<f64>,
    pub var_x: f64,
    pub var_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticalSection {
    #[serde(default)]
    pub omega23: Option<f64>,
    pub delta: f64,
    #[serde(default)]
    pub omega0: Option<f64>,
    pub waist: f64,
    #[serde(default = "unit")]
    pub rabi_ratio_send: f64,
    #[serde(default = "unit")]
    pub rabi_ratio_recv: f64,
    #[serde(default)]
    pub two_photon_detuning: f64,
}

fn unit() -> f64 {
    1.0
}

/// The file layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub name: ScenarioKind,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub species: SpeciesEntry,
    #[serde(default)]
    pub constants: Option<PhysicalConstants>,
    pub trap: TrapSection,
    pub beam: BeamSection,
    pub optical: OpticalSection,
    #[serde(default = "reference_grid")]
    pub grid: GridSpec,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub metrics: MetricsSpec,
    #[serde(default)]
    pub losses: LossSpec,
    #[serde(default)]
    pub sweep: Vec<SweepSpec>,
}

fn reference_grid() -> GridSpec {
    GridSpec::REFERENCE
}

impl ConfigFile {
    pub fn into_scenario(self) -> Result<Scenario> {
        let species = match self.species {
            SpeciesEntry::Builtin(name) => AtomSpecies::builtin(&name)?,
            SpeciesEntry::Table(s) => s,
        };
        let physical = PhysicalConfig {
            constants: self.constants.unwrap_or_default(),
            species,
            trap: TrapConfig {
                omega_t: self.trap.omega_t,
                omega_units: self.trap.omega_units,
                atoms_per_site: self.trap.atoms_per_site,
                x_send: self.trap.x_send,
                x_recv: self.trap.x_recv,
                number_imbalance: self.trap.number_imbalance,
            },
            beam: BeamConfig {
                atoms: self.beam.atoms,
                k0: self.beam.k0,
                center: self.beam.center,
                width: self.beam.width,
                var_x: self.beam.var_x,
                var_y: self.beam.var_y,
            },
            optical: OpticalConfig {
                omega23: self.optical.omega23,
                delta: self.optical.delta,
                omega0: self.optical.omega0,
                waist: self.optical.waist,
                rabi_ratio_send: self.optical.rabi_ratio_send,
                rabi_ratio_recv: self.optical.rabi_ratio_recv,
                two_photon_detuning: self.optical.two_photon_detuning,
            },
        };
        let mut sweeps = self.sweep;
        if sweeps.is_empty() {
            sweeps = match self.name {
                ScenarioKind::SweepRabi => vec![SweepSpec::rabi()],
                ScenarioKind::SweepDn => vec![SweepSpec::number_imbalance()],
                _ => Vec::new(),
            };
        }
        Ok(Scenario {
            name: self.name,
            physical,
            grid: self.grid,
            integrator: self.integrator,
            metrics: self.metrics,
            losses: self.losses,
            sweeps,
            output_dir: self.output_dir,
        })
    }

    pub fn from_scenario(s: &Scenario) -> ConfigFile {
        let p = &s.physical;
        let builtin = AtomSpecies::builtin(&p.species.name).ok();
        ConfigFile {
            name: s.name,
            output_dir: s.output_dir.clone(),
            species: match builtin {
                Some(b) if b == p.species => SpeciesEntry::Builtin(p.species.name.clone()),
                _ => SpeciesEntry::Table(p.species.clone()),
            },
            constants: (p.constants != PhysicalConstants::CODATA_2018).then_some(p.constants),
            trap: TrapSection {
                omega_t: p.trap.omega_t,
                omega_units: p.trap.omega_units,
                atoms_per_site: p.trap.atoms_per_site,
                x_send: p.trap.x_send,
                x_recv: p.trap.x_recv,
                number_imbalance: p.trap.number_imbalance,
            },
            beam: BeamSection {
                atoms: p.beam.atoms,
                k0: p.beam.k0,
                center: p.beam.center,
                width: p.beam.width,
                var_x: p.beam.var_x,
                var_y: p.beam.var_y,
            },
            optical: OpticalSection {
                omega23: p.optical.omega23,
                delta: p.optical.delta,
                omega0: p.optical.omega0,
                waist: p.optical.waist,
                rabi_ratio_send: p.optical.rabi_ratio_send,
                rabi_ratio_recv: p.optical.rabi_ratio_recv,
                two_photon_detuning: p.optical.two_photon_detuning,
            },
            grid: s.grid,
            integrator: s.integrator.clone(),
            metrics: s.metrics.clone(),
            losses: s.losses.clone(),
            sweep: s.sweeps.clone(),
        }
    }
}

/// Parses and validates a configuration.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let scenario = file.into_scenario()?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn to_toml(scenario: &Scenario) -> Result<String> {
    toml::to_string(&ConfigFile::from_scenario(scenario)).map_err(|e| Error::Serialization(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
species = "Rb87"

[trap]
omega_t = 5.0
atoms_per_site = 1e6
x_send = 0.0
x_recv = 1e-3

[beam]
atoms = 5000
k0 = 8e6
var_x = 0.14
var_y = 7.39

[optical]
delta = 6.283185307179586e9
waist = 1e-4
"#;

    #[test]
    fn minimal_file_is_the_reference() {
        let s = parse_scenario(MINIMAL).unwrap();
        let r = Scenario::reference(ScenarioKind::Fig3Transfer);
        assert_eq!(s.physical.trap, r.physical.trap);
        assert_eq!(s.physical.beam, r.physical.beam);
        assert_eq!(s.physical.species, r.physical.species);
        assert!((s.physical.optical.delta - r.physical.optical.delta).abs() < 1e-3);
        assert_eq!(s.grid, r.grid);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for (section, key) in [("[trap]", "[trap]\nfrequency = 3\n"), ("[beam]", "[beam]\nbogus = 1\n")] {
            let text = MINIMAL.replace(section, key);
            assert!(matches!(parse_scenario(&text), Err(Error::Config(_))), "{key}");
        }
        let text = format!("{MINIMAL}\n[grid]\nx_min = -1e-3\nx_max = 2e-3\nn = 1024\nextra = 1\n");
        assert!(parse_scenario(&text).is_err());
        let text = format!("mystery = 1\n{MINIMAL}");
        assert!(parse_scenario(&text).is_err());
    }

    #[test]
    fn species_table_and_builtin() {
        let text = MINIMAL.replace(
            "species = \"Rb87\"",
            "[species]\nname = \"Rb87-custom\"\nmass = 1.443160648e-25\ndipole_d13 = 2.5e-29\n",
        );
        let s = parse_scenario(&text).unwrap();
        assert_eq!(s.physical.species.name, "Rb87-custom");
        assert_eq!(s.physical.species.scattering_length, None);
        assert!(parse_scenario(&MINIMAL.replace("Rb87", "Unobtainium")).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(parse_scenario(&MINIMAL.replace("x_recv = 1e-3", "x_recv = -1e-3")).is_err());
        assert!(parse_scenario(&MINIMAL.replace("var_x = 0.14", "var_x = 0.01")).is_err());
        assert!(parse_scenario(&MINIMAL.replace("omega_t = 5.0", "omega_t = -5.0")).is_err());
        let text = format!("{MINIMAL}\n[grid]\nx_min = -1.5e-3\nx_max = 2.5e-3\nn = 1000\n");
        assert!(parse_scenario(&text).is_err());
    }

    #[test]
    fn sweeps_and_sections_parse() {
        let text = format!(
            "name = \"custom\"\n{MINIMAL}\n[integrator]\noptical_solver = \"dynamic\"\nsteps_per_rabi = 800\n\
             [metrics]\nnoise_convention = \"geometric-mean\"\n\
             [[sweep]]\nparameter = \"rabi-ratio\"\nmin = 0.66\nmax = 1.33\npoints = 5\n\
             [[sweep]]\nparameter = \"number-imbalance\"\nmin = -0.5\nmax = 0.5\npoints = 3\n"
        );
        let s = parse_scenario(&text).unwrap();
        assert_eq!(s.sweeps.len(), 2);
        assert_eq!(s.integrator.steps_per_rabi, 800.0);
        assert_eq!(s.metrics.noise_convention, crate::metrics::NoiseConvention::GeometricMean);
    }

    #[test]
    fn toml_round_trip() {
        let mut s = Scenario::reference(ScenarioKind::SweepRabi);
        s.physical.optical.rabi_ratio_recv = 0.8;
        let text = to_toml(&s).unwrap();
        let back = parse_scenario(&text).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let e = load_scenario(Path::new("/nonexistent/run.toml")).unwrap_err();
        assert!(matches!(e, Error::Io { .. }));
    }
}
