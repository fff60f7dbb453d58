//! Versioned TOML scenario files.
//!
//! Lengths are written in micrometers, times in seconds and diffusion
//! coefficients in m²/s. Every dimensional key carries its unit as a
//! suffix; a bare `radius` or a `radius_nm` is rejected rather than guessed.

use std::fs;
use std::path::Path;

use mcvd_core::channel::MoleculeSpec;
use mcvd_core::scenario::{to_um, um, Scenario};
use mcvd_core::system::{Point3, Receiver, ReceiverWeights, Topology};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileScenario {
    schema_version: u32,
    slot_s: f64,
    isi_depth: i64,
    budget: f64,
    #[serde(default = "half")]
    prior1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
    molecules: Vec<FileMolecule>,
    transmitters: Vec<FileTransmitter>,
    receivers: Vec<FileReceiver>,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileMolecule {
    name: String,
    diffusion_m2_per_s: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileTransmitter {
    position_um: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileReceiver {
    center_um: [f64; 3],
    radius_um: f64,
    molecule: String,
}

/// Dimensional quantities and the only key spelling accepted for each.
const UNIT_KEYS: [(&str, &str); 5] = [
    ("slot", "slot_s"),
    ("radius", "radius_um"),
    ("center", "center_um"),
    ("position", "position_um"),
    ("diffusion", "diffusion_m2_per_s"),
];

fn check_units(table: &toml::Table, prefix: &str) -> AppResult<()> {
    for (key, value) in table {
        let field = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        for (base, expected) in UNIT_KEYS {
            if key != expected && (key == base || key.starts_with(&format!("{base}_"))) {
                return Err(AppError::Unit { field, expected });
            }
        }
        if let toml::Value::Array(items) = value {
            for (i, item) in items.iter().enumerate() {
                if let toml::Value::Table(t) = item {
                    check_units(t, &format!("{field}[{i}]"))?;
                }
            }
        }
    }
    Ok(())
}

fn invalid(field: impl AsRef<str>, message: impl std::fmt::Display) -> AppError {
    AppError::Validation(format!("{}: {message}", field.as_ref()))
}

/// Parses and validates scenario text. `origin` names the source in errors.
pub fn parse_scenario(text: &str, origin: &str) -> AppResult<Scenario> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| AppError::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    check_units(&table, "")?;
    let file: FileScenario =
        FileScenario::deserialize(toml::Value::Table(table)).map_err(|e| AppError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
    build(file)
}

fn finite_point(field: String, p: [f64; 3]) -> AppResult<Point3> {
    if p.iter().any(|x| !x.is_finite()) {
        return Err(invalid(field, "coordinates must be finite"));
    }
    Ok(Point3::new(um(p[0]), um(p[1]), um(p[2])))
}

fn build(file: FileScenario) -> AppResult<Scenario> {
    if file.schema_version != SCHEMA_VERSION {
        return Err(invalid(
            "schema_version",
            format!(
                "unsupported version {}, expected {SCHEMA_VERSION}",
                file.schema_version
            ),
        ));
    }
    if file.isi_depth < 0 {
        return Err(invalid(
            "isi_depth",
            format!("must be non-negative, got {}", file.isi_depth),
        ));
    }
    let mut molecules = Vec::with_capacity(file.molecules.len());
    for (i, m) in file.molecules.iter().enumerate() {
        let spec = MoleculeSpec::new(m.name.clone(), m.diffusion_m2_per_s)
            .map_err(|e| invalid(format!("molecules[{i}].diffusion_m2_per_s"), e))?;
        molecules.push(spec);
    }
    let mut transmitters = Vec::with_capacity(file.transmitters.len());
    for (s, t) in file.transmitters.iter().enumerate() {
        transmitters.push(finite_point(
            format!("transmitters[{s}].position_um"),
            t.position_um,
        )?);
    }
    let mut receivers = Vec::with_capacity(file.receivers.len());
    for (k, r) in file.receivers.iter().enumerate() {
        if !(r.radius_um > 0.0 && r.radius_um.is_finite()) {
            return Err(invalid(
                format!("receivers[{k}].radius_um"),
                format!("must be positive, got {}", r.radius_um),
            ));
        }
        let molecule = molecules
            .iter()
            .find(|m| m.name() == r.molecule)
            .cloned()
            .ok_or_else(|| {
                invalid(
                    format!("receivers[{k}].molecule"),
                    format!("unknown molecule `{}`", r.molecule),
                )
            })?;
        receivers.push(Receiver {
            center: finite_point(format!("receivers[{k}].center_um"), r.center_um)?,
            radius: um(r.radius_um),
            molecule,
        });
    }
    let n_rx = receivers.len();
    let topology = Topology::new(transmitters, receivers).map_err(|e| match e {
        mcvd_core::Error::Invalid { .. } => AppError::Validation(e.to_string()),
        other => invalid("topology", other),
    })?;
    let weights = match file.weights {
        Some(w) if w.len() != n_rx => {
            return Err(invalid(
                "weights",
                format!("{} weight(s) for {n_rx} receiver(s)", w.len()),
            ))
        }
        Some(w) => ReceiverWeights::new(w).map_err(|e| invalid("weights", e))?,
        None => ReceiverWeights::uniform(n_rx),
    };
    let scenario = Scenario {
        molecules,
        topology,
        slot: file.slot_s,
        isi_depth: file.isi_depth as usize,
        weights,
        budget: file.budget,
        prior1: file.prior1,
    };
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> AppResult<Scenario> {
    let text = fs::read_to_string(path).map_err(|source| AppError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text, &path.display().to_string())
}

pub fn scenario_to_toml(s: &Scenario) -> String {
    let point = |p: &Point3| [to_um(p.x), to_um(p.y), to_um(p.z)];
    let file = FileScenario {
        schema_version: SCHEMA_VERSION,
        slot_s: s.slot,
        isi_depth: s.isi_depth as i64,
        budget: s.budget,
        prior1: s.prior1,
        weights: Some(s.weights.as_slice().to_vec()),
        molecules: s
            .molecules
            .iter()
            .map(|m| FileMolecule {
                name: m.name().to_string(),
                diffusion_m2_per_s: m.diffusion(),
            })
            .collect(),
        transmitters: s
            .topology
            .transmitters()
            .iter()
            .map(|p| FileTransmitter {
                position_um: point(p),
            })
            .collect(),
        receivers: s
            .topology
            .receivers()
            .iter()
            .map(|r| FileReceiver {
                center_um: point(&r.center),
                radius_um: to_um(r.radius),
                molecule: r.molecule.name().to_string(),
            })
            .collect(),
    };
    toml::to_string(&file).expect("scenario fields are all representable")
}

pub fn save_scenario(s: &Scenario, path: &Path) -> AppResult<()> {
    fs::write(path, scenario_to_toml(s)).map_err(|source| AppError::Write {
        path: path.to_path_buf(),
        source,
    })
}
