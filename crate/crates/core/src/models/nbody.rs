use std::env;
use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use super::{MassInverse, PhaseState, Potential, SeparableSystem};
use crate::error::{Error, Result};

const EMBEDDED_SOLAR_DATA: &str = include_str!("../../data/outer_solar_system.txt");

/// File name looked up inside `GEOMINT_DATA_DIR` when that variable is set.
pub const SOLAR_DATA_FILE: &str = "outer_solar_system.txt";

/// Masses and initial conditions of a gravitational N-body problem in R^3.
#[derive(Debug, Clone, PartialEq)]
pub struct NBodyData {
    pub names: Vec<String>,
    pub masses: Vec<f64>,
    pub gravitational_constant: f64,
    pub initial_positions: Vec<[f64; 3]>,
    pub initial_momenta: Vec<[f64; 3]>,
}

impl NBodyData {
    pub fn bodies(&self) -> usize {
        self.masses.len()
    }

    pub fn total_momentum(&self) -> [f64; 3] {
        let mut s = [0.0; 3];
        for p in &self.initial_momenta {
            for k in 0..3 {
                s[k] += p[k];
            }
        }
        s
    }

    pub fn initial_state(&self) -> PhaseState {
        PhaseState {
            p: self.initial_momenta.iter().flatten().copied().collect(),
            q: self.initial_positions.iter().flatten().copied().collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.masses.len();
        if n < 2 {
            return Err(Error::contract("an N-body problem needs at least two bodies"));
        }
        if self.names.len() != n || self.initial_positions.len() != n || self.initial_momenta.len() != n {
            return Err(Error::contract("inconsistent body counts in N-body data"));
        }
        if self.masses.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(Error::contract("masses must be positive"));
        }
        if !(self.gravitational_constant > 0.0) {
            return Err(Error::contract("gravitational constant must be positive"));
        }
        let finite = self
            .initial_positions
            .iter()
            .chain(&self.initial_momenta)
            .flatten()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::contract("N-body initial data must be finite"));
        }
        Ok(())
    }
}

/// `V(q) = -G sum_{i>j} m_i m_j / |q^i - q^j|`.
#[derive(Debug, Clone)]
pub struct NBodyPotential {
    masses: Vec<f64>,
    g: f64,
}

impl NBodyPotential {
    pub fn new(masses: Vec<f64>, g: f64) -> Self {
        NBodyPotential { masses, g }
    }
}

impl Potential for NBodyPotential {
    fn dim(&self) -> usize {
        3 * self.masses.len()
    }

    fn value(&self, q: &[f64]) -> f64 {
        let n = self.masses.len();
        let mut v = 0.0;
        for i in 1..n {
            for j in 0..i {
                let r = distance(&q[3 * i..3 * i + 3], &q[3 * j..3 * j + 3]);
                v -= self.masses[i] * self.masses[j] / r;
            }
        }
        self.g * v
    }

    fn gradient(&self, q: &[f64]) -> Vec<f64> {
        let n = self.masses.len();
        let mut grad = vec![0.0; 3 * n];
        for i in 1..n {
            for j in 0..i {
                let d = [
                    q[3 * i] - q[3 * j],
                    q[3 * i + 1] - q[3 * j + 1],
                    q[3 * i + 2] - q[3 * j + 2],
                ];
                let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                let f = self.g * self.masses[i] * self.masses[j] / (r2 * r2.sqrt());
                for k in 0..3 {
                    grad[3 * i + k] += f * d[k];
                    grad[3 * j + k] -= f * d[k];
                }
            }
        }
        grad
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Parses the plain-text body table (`name mass x y z px py pz`, `#` headers,
/// one header of the form `# G = <value>`).
pub fn parse_solar_dataset(text: &str) -> Result<NBodyData> {
    let mut g = None;
    let mut data = NBodyData {
        names: Vec::new(),
        masses: Vec::new(),
        gravitational_constant: 0.0,
        initial_positions: Vec::new(),
        initial_momenta: Vec::new(),
    };
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            if let Some((key, value)) = header.split_once('=') {
                if key.trim() == "G" {
                    g = Some(parse_num(value.trim(), lineno)?);
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(Error::Parse(format!(
                "line {}: expected 8 fields (name mass x y z px py pz), got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let nums = fields[1..]
            .iter()
            .map(|f| parse_num(f, lineno))
            .collect::<Result<Vec<f64>>>()?;
        data.names.push(fields[0].to_string());
        data.masses.push(nums[0]);
        data.initial_positions.push([nums[1], nums[2], nums[3]]);
        data.initial_momenta.push([nums[4], nums[5], nums[6]]);
    }
    data.gravitational_constant =
        g.ok_or_else(|| Error::Parse("missing '# G = <value>' header".into()))?;
    data.validate()?;
    Ok(data)
}

fn parse_num(s: &str, lineno: usize) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|e| Error::Parse(format!("line {}: bad number {s:?}: {e}", lineno + 1)))
}

/// Loads the outer-solar-system table, from `$GEOMINT_DATA_DIR` if set,
/// otherwise from the copy compiled into the crate.
pub fn load_solar_dataset() -> Result<NBodyData> {
    match env::var_os("GEOMINT_DATA_DIR") {
        Some(dir) => {
            let path = PathBuf::from(dir).join(SOLAR_DATA_FILE);
            parse_solar_dataset(&fs::read_to_string(path)?)
        }
        None => parse_solar_dataset(EMBEDDED_SOLAR_DATA),
    }
}

/// Sun plus Jupiter, Saturn, Uranus, Neptune and Pluto (d = 18).
pub fn make_outer_solar_system() -> Result<(SeparableSystem, PhaseState, NBodyData)> {
    let data = load_solar_dataset()?;
    let inv_mass = data
        .masses
        .iter()
        .flat_map(|&m| [1.0 / m; 3])
        .collect();
    let sys = SeparableSystem::new(
        MassInverse::diagonal(inv_mass)?,
        Arc::new(NBodyPotential::new(
            data.masses.clone(),
            data.gravitational_constant,
        )),
    )?;
    let y0 = data.initial_state();
    Ok((sys, y0, data))
}
