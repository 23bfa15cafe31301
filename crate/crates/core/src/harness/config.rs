use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::symplectic::Method;

/// Registered experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Solar,
    KeplerLongtime,
    FpuExchange,
    FpuResonanceScan,
    KleinGordonDecay,
    LowrankExactness,
    LowrankRobustness,
    ConvergenceOrders,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Solar,
        Experiment::KeplerLongtime,
        Experiment::FpuExchange,
        Experiment::FpuResonanceScan,
        Experiment::KleinGordonDecay,
        Experiment::LowrankExactness,
        Experiment::LowrankRobustness,
        Experiment::ConvergenceOrders,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Solar => "solar",
            Experiment::KeplerLongtime => "kepler-longtime",
            Experiment::FpuExchange => "fpu-exchange",
            Experiment::FpuResonanceScan => "fpu-resonance-scan",
            Experiment::KleinGordonDecay => "klein-gordon-decay",
            Experiment::LowrankExactness => "lowrank-exactness",
            Experiment::LowrankRobustness => "lowrank-robustness",
            Experiment::ConvergenceOrders => "convergence-orders",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Experiment::Solar => "outer solar system, energy error and heliocentric distances",
            Experiment::KeplerLongtime => "Kepler problem, drift of energy and angular momentum",
            Experiment::FpuExchange => "stiff/soft FPU chain, oscillatory energy exchange",
            Experiment::FpuResonanceScan => "FPU chain, non-resonance check and energy error over a range of h",
            Experiment::KleinGordonDecay => "spectral Klein-Gordon equation, mode energies",
            Experiment::LowrankExactness => "projector splitting on an explicit low-rank family",
            Experiment::LowrankRobustness => "projector splitting versus the naive factor equations",
            Experiment::ConvergenceOrders => "observed orders of every integrator",
        }
    }

    pub fn methods(&self) -> &'static [MethodId] {
        use MethodId::*;
        match self {
            Experiment::Solar | Experiment::KeplerLongtime => {
                &[ExplicitEuler, ImplicitEuler, SymplecticEulerQp, SymplecticEulerPq, StormerVerlet]
            }
            Experiment::FpuExchange | Experiment::KleinGordonDecay => &[TrigMollified, TrigImpulse, StormerVerlet],
            Experiment::FpuResonanceScan => &[TrigMollified, TrigImpulse],
            Experiment::LowrankExactness | Experiment::LowrankRobustness => &[Ksl, KslStrang],
            Experiment::ConvergenceOrders => &[
                ExplicitEuler,
                ImplicitEuler,
                SymplecticEulerQp,
                SymplecticEulerPq,
                StormerVerlet,
                Ksl,
                KslStrang,
            ],
        }
    }

    pub fn default_method(&self) -> MethodId {
        match self {
            Experiment::Solar | Experiment::KeplerLongtime => MethodId::StormerVerlet,
            _ => self.methods()[0],
        }
    }

    /// Default step size; for the solar system it depends on the method
    /// (15 days for the Euler methods, 150 for the symplectic ones).
    pub fn default_h(&self, method: MethodId) -> f64 {
        match self {
            Experiment::Solar => match method {
                MethodId::ExplicitEuler | MethodId::ImplicitEuler => 15.0,
                _ => 150.0,
            },
            Experiment::KeplerLongtime => 0.05,
            Experiment::FpuExchange => 0.02,
            Experiment::FpuResonanceScan => 0.02,
            Experiment::KleinGordonDecay => 0.05,
            Experiment::LowrankExactness | Experiment::LowrankRobustness => 0.01,
            Experiment::ConvergenceOrders => 0.01,
        }
    }

    pub fn default_t_end(&self) -> f64 {
        match self {
            Experiment::Solar => 200_000.0,
            Experiment::KeplerLongtime => 1000.0,
            Experiment::FpuExchange => 200.0,
            Experiment::FpuResonanceScan => 20.0,
            Experiment::KleinGordonDecay => 100.0,
            Experiment::LowrankExactness | Experiment::LowrankRobustness => 1.0,
            Experiment::ConvergenceOrders => 1.0,
        }
    }

    pub fn default_record_every(&self) -> usize {
        match self {
            Experiment::Solar => 10,
            Experiment::KeplerLongtime => 20,
            Experiment::FpuExchange => 5,
            Experiment::KleinGordonDecay => 20,
            _ => 1,
        }
    }

    /// Model parameters and their defaults.
    pub fn parameters(&self) -> &'static [(&'static str, &'static str)] {
        match self {
            Experiment::Solar => &[],
            Experiment::KeplerLongtime => &[("e", "0.6")],
            Experiment::FpuExchange => &[("m", "3"), ("omega", "50")],
            Experiment::FpuResonanceScan => &[
                ("m", "3"),
                ("omega", "50"),
                ("h_min", "0.005"),
                ("h_max", "0.1"),
                ("count", "96"),
                ("n", "1"),
            ],
            Experiment::KleinGordonDecay => &[("modes", "32"), ("rho", "0.5"), ("epsilon", "0.1")],
            Experiment::LowrankExactness => &[("size", "20"), ("rank", "3"), ("substeps", "10")],
            Experiment::LowrankRobustness => &[
                ("size", "40"),
                ("rank", "8"),
                ("substeps", "10"),
                ("floors", "8,16,24,32,40"),
                ("tail_scales", "1,1e-6"),
            ],
            Experiment::ConvergenceOrders => &[("e", "0.6"), ("h_list", "0.01,0.005,0.0025,0.00125")],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::contract(format!("unknown experiment {s:?}")))
    }
}

/// Every integrator the harness can select by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodId {
    ExplicitEuler,
    ImplicitEuler,
    SymplecticEulerQp,
    SymplecticEulerPq,
    StormerVerlet,
    TrigImpulse,
    TrigMollified,
    Ksl,
    KslStrang,
}

impl MethodId {
    pub const ALL: [MethodId; 9] = [
        MethodId::ExplicitEuler,
        MethodId::ImplicitEuler,
        MethodId::SymplecticEulerQp,
        MethodId::SymplecticEulerPq,
        MethodId::StormerVerlet,
        MethodId::TrigImpulse,
        MethodId::TrigMollified,
        MethodId::Ksl,
        MethodId::KslStrang,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MethodId::TrigImpulse => "trig-impulse",
            MethodId::TrigMollified => "trig-mollified",
            MethodId::Ksl => "ksl",
            MethodId::KslStrang => "ksl-strang",
            other => other.hamiltonian().expect("canonical method").name(),
        }
    }

    /// The matching stepper of the symplectic module, if any.
    pub fn hamiltonian(&self) -> Option<Method> {
        match self {
            MethodId::ExplicitEuler => Some(Method::ExplicitEuler),
            MethodId::ImplicitEuler => Some(Method::ImplicitEuler),
            MethodId::SymplecticEulerQp => Some(Method::SymplecticEulerQp),
            MethodId::SymplecticEulerPq => Some(Method::SymplecticEulerPq),
            MethodId::StormerVerlet => Some(Method::StormerVerlet),
            _ => None,
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MethodId::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::contract(format!("unknown method {s:?}")))
    }
}

/// A fully resolved experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub method: MethodId,
    pub h: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub params: BTreeMap<String, String>,
    pub out: PathBuf,
    pub seed: u64,
    /// Set when no method was named for an experiment that compares methods.
    pub all_methods: bool,
}

/// Settings as given by the user; unset fields fall back to the
/// experiment's defaults in [`Overrides::resolve`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub experiment: Option<String>,
    pub method: Option<String>,
    pub h: Option<f64>,
    pub t_end: Option<f64>,
    pub record_every: Option<usize>,
    pub params: BTreeMap<String, String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

fn parse_number<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("invalid value {value:?} for {key}")))
}

impl Overrides {
    /// Parses the flat `key = value` configuration format. Blank lines and
    /// lines starting with `#` are ignored; unknown keys are model parameters.
    pub fn parse(text: &str) -> Result<Self> {
        let mut o = Overrides::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            o.set(key.trim(), value.trim())?;
        }
        Ok(o)
    }

    /// Sets one key; dashes and underscores are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.replace('-', "_").as_str() {
            "experiment" => self.experiment = Some(value.to_string()),
            "method" => self.method = Some(value.to_string()),
            "h" => self.h = Some(parse_number("h", value)?),
            "t_end" => self.t_end = Some(parse_number("t_end", value)?),
            "record_every" => self.record_every = Some(parse_number("record_every", value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "seed" => self.seed = Some(parse_number("seed", value)?),
            other => {
                self.params.insert(other.to_string(), value.to_string());
            }
        }
        Ok(())
    }

    /// `self` with every field set in `top` replaced.
    pub fn merged(mut self, top: Overrides) -> Overrides {
        self.experiment = top.experiment.or(self.experiment);
        self.method = top.method.or(self.method);
        self.h = top.h.or(self.h);
        self.t_end = top.t_end.or(self.t_end);
        self.record_every = top.record_every.or(self.record_every);
        self.out = top.out.or(self.out);
        self.seed = top.seed.or(self.seed);
        self.params.extend(top.params);
        self
    }

    pub fn resolve(self) -> Result<ExperimentConfig> {
        let experiment: Experiment = self
            .experiment
            .as_deref()
            .ok_or_else(|| Error::contract("no experiment given"))?
            .parse()?;
        let all_methods = experiment == Experiment::ConvergenceOrders && self.method.is_none();
        let method = match self.method.as_deref() {
            Some(m) => m.parse()?,
            None => experiment.default_method(),
        };
        if !experiment.methods().contains(&method) {
            return Err(Error::contract(format!(
                "method {method} is not available for {experiment} (choose from {})",
                experiment.methods().iter().map(|m| m.name()).collect::<Vec<_>>().join(", ")
            )));
        }
        let h = self.h.unwrap_or_else(|| experiment.default_h(method));
        let t_end = self.t_end.unwrap_or_else(|| experiment.default_t_end());
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::contract(format!("h must be positive, got {h}")));
        }
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::contract(format!("t_end must be positive, got {t_end}")));
        }
        let record_every = self.record_every.unwrap_or_else(|| experiment.default_record_every());
        if record_every == 0 {
            return Err(Error::contract("record_every must be at least 1"));
        }
        let mut params: BTreeMap<String, String> = experiment
            .parameters()
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        for (k, v) in self.params {
            if !params.contains_key(&k) {
                return Err(Error::contract(format!("unknown parameter {k:?} for {experiment}")));
            }
            params.insert(k, v);
        }
        let out = self.out.unwrap_or_else(|| {
            if all_methods {
                PathBuf::from(format!("{}.csv", experiment.name()))
            } else {
                PathBuf::from(format!("{}-{}.csv", experiment.name(), method.name()))
            }
        });
        Ok(ExperimentConfig {
            experiment,
            method,
            h,
            t_end,
            record_every,
            params,
            out,
            seed: self.seed.unwrap_or(0),
            all_methods,
        })
    }
}

impl ExperimentConfig {
    pub fn number(&self, key: &str) -> Result<f64> {
        parse_number(key, self.param(key)?)
    }

    pub fn count(&self, key: &str) -> Result<usize> {
        parse_number(key, self.param(key)?)
    }

    /// Comma-separated list of numbers.
    pub fn list(&self, key: &str) -> Result<Vec<f64>> {
        self.param(key)?
            .split(',')
            .map(|v| parse_number(key, v))
            .collect()
    }

    fn param(&self, key: &str) -> Result<&str> {
        self.params
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::contract(format!("missing parameter {key:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        for m in MethodId::ALL {
            assert_eq!(m.name().parse::<MethodId>().unwrap(), m);
        }
    }

    #[test]
    fn config_file_with_comments() {
        let o = Overrides::parse("# solar run\nexperiment = solar\nmethod=explicit-euler\n\nt-end = 2000\nh = 10\n").unwrap();
        let c = o.resolve().unwrap();
        assert_eq!(c.experiment, Experiment::Solar);
        assert_eq!(c.method, MethodId::ExplicitEuler);
        assert_eq!(c.t_end, 2000.0);
        assert_eq!(c.h, 10.0);
        assert_eq!(c.out, PathBuf::from("solar-explicit-euler.csv"));
    }

    #[test]
    fn solar_defaults_follow_the_method() {
        let base = Overrides {
            experiment: Some("solar".into()),
            ..Default::default()
        };
        assert_eq!(base.clone().resolve().unwrap().h, 150.0);
        let euler = Overrides {
            method: Some("implicit-euler".into()),
            ..base
        };
        assert_eq!(euler.resolve().unwrap().h, 15.0);
    }

    #[test]
    fn flags_override_file() {
        let file = Overrides::parse("experiment = fpu-exchange\nomega = 60\nh = 0.01").unwrap();
        let mut cli = Overrides::default();
        cli.set("h", "0.03").unwrap();
        let c = file.merged(cli).resolve().unwrap();
        assert_eq!(c.h, 0.03);
        assert_eq!(c.number("omega").unwrap(), 60.0);
        assert_eq!(c.count("m").unwrap(), 3);
    }

    #[test]
    fn bad_settings_are_rejected() {
        assert!(Overrides::parse("experiment solar").is_err());
        assert!(Overrides::parse("h = fast").is_err());
        let bad = |text: &str| Overrides::parse(text).unwrap().resolve().is_err();
        assert!(bad("experiment = orbit"));
        assert!(bad("experiment = solar\nmethod = ksl"));
        assert!(bad("experiment = solar\nh = -1"));
        assert!(bad("experiment = solar\nwidth = 3"));
        assert!(bad("experiment = solar\nrecord_every = 0"));
        assert!(bad("method = ksl"));
    }

    #[test]
    fn list_parameters() {
        let c = Overrides::parse("experiment = lowrank-robustness").unwrap().resolve().unwrap();
        assert_eq!(c.list("tail_scales").unwrap(), vec![1.0, 1e-6]);
    }
}
