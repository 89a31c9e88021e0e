//! Plain-text configuration files, `--set` overrides and figure presets.
//!
//! The format is a flat list of dotted keys (`noma.a1 = 0.8`), which is also
//! valid TOML. Keys left out keep their reference value; unknown keys are
//! rejected. SNR and the residual-interference variance are written in dB
//! and converted to linear values here and nowhere else.

use std::collections::BTreeMap;
use std::path::Path;

use toml::Value;

use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::num::{db_to_linear, linear_to_db};

pub const SCHEMA_VERSION: i64 = 1;

const KEYS: &[&str] = &[
    "schema_version",
    "system.snr_db",
    "noma.a1",
    "noma.a2",
    "noma.a3",
    "noma.a4",
    "noma.b1",
    "noma.b2",
    "noma.b3",
    "noma.b4",
    "interference.varpi1",
    "interference.varpi2",
    "sic.mode",
    "sic.omega_i_db",
    "channel.alpha",
    "channel.d1",
    "channel.d2",
    "channel.omega1",
    "channel.omega2",
    "channel.omega3",
    "channel.omega4",
    "rates.r1",
    "rates.r2",
    "rates.r3",
    "rates.r4",
    "energy.t",
    "energy.pu_w",
    "energy.pr_w",
];

/// Flattened `key -> value` entries, layered before building a config.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigDocument {
    entries: BTreeMap<String, Value>,
}

impl ConfigDocument {
    /// Parses a configuration file. `schema_version` must be present.
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        let mut doc = ConfigDocument::default();
        flatten("", &table, &mut doc.entries);
        for key in doc.entries.keys() {
            check_key(key)?;
        }
        match doc.entries.remove("schema_version") {
            Some(Value::Integer(SCHEMA_VERSION)) => {}
            Some(other) => {
                return Err(Error::Parse(format!("unsupported schema_version {other} (this build reads {SCHEMA_VERSION})")))
            }
            None => return Err(Error::Parse("missing schema_version".into())),
        }
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Applies a single `key=value` override. Values that are not valid
    /// TOML literals are taken as bare strings, so `sic.mode=psic` works.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("override `{assignment}` is not of the form key=value")))?;
        let key = key.trim();
        check_key(key)?;
        if key == "schema_version" {
            return Err(Error::Parse("schema_version cannot be overridden".into()));
        }
        let raw = raw.trim();
        let value = format!("v = {raw}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::String(raw.to_string()));
        self.entries.insert(key.to_string(), value);
        Ok(())
    }

    /// Layers `other` on top of `self`.
    pub fn merge(&mut self, other: &ConfigDocument) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key)
    }

    /// Builds and validates a config, filling gaps from the reference setup.
    pub fn build(&self) -> Result<SystemConfig<f64>> {
        let mut c = SystemConfig::<f64>::table_one();
        let num = |key: &str| -> Result<Option<f64>> {
            match self.entries.get(key) {
                None => Ok(None),
                Some(Value::Float(x)) => Ok(Some(*x)),
                Some(Value::Integer(i)) => Ok(Some(*i as f64)),
                Some(other) => Err(Error::Parse(format!("{key}: expected a number, got {other}"))),
            }
        };

        if let Some(db) = num("system.snr_db")? {
            c.rho = db_to_linear(db);
        }
        for i in 0..4 {
            if let Some(v) = num(&format!("noma.a{}", i + 1))? {
                c.a[i] = v;
            }
            if let Some(v) = num(&format!("noma.b{}", i + 1))? {
                c.b[i] = v;
            }
            if let Some(v) = num(&format!("rates.r{}", i + 1))? {
                c.rates[i] = v;
            }
        }
        if let Some(v) = num("interference.varpi1")? {
            c.varpi1 = v;
        }
        if let Some(v) = num("interference.varpi2")? {
            c.varpi2 = v;
        }
        if let Some(db) = num("sic.omega_i_db")? {
            c.omega_i = db_to_linear(db);
        }
        match self.entries.get("sic.mode") {
            None => {}
            Some(Value::String(s)) => c.sic = s.parse()?,
            Some(other) => return Err(Error::Parse(format!("sic.mode: expected \"ipsic\" or \"psic\", got {other}"))),
        }

        let distance_keys = ["channel.alpha", "channel.d1", "channel.d2"];
        let omega_keys = ["channel.omega1", "channel.omega2", "channel.omega3", "channel.omega4"];
        let has_distance = distance_keys.iter().any(|k| self.entries.contains_key(*k));
        let has_omega = omega_keys.iter().any(|k| self.entries.contains_key(*k));
        if has_distance && has_omega {
            return Err(Error::Parse(
                "channel: give either alpha/d1/d2 or omega1..omega4, not both".into(),
            ));
        }
        if has_omega {
            c.path_loss = None;
            for (i, key) in omega_keys.iter().enumerate() {
                if let Some(v) = num(key)? {
                    c.omega[i] = v;
                }
            }
        } else if has_distance {
            let mut pl = c.path_loss.expect("reference config carries a path-loss model");
            pl.alpha = num("channel.alpha")?.unwrap_or(pl.alpha);
            pl.d_near = num("channel.d1")?.unwrap_or(pl.d_near);
            pl.d_far = num("channel.d2")?.unwrap_or(pl.d_far);
            c = c.with_path_loss(pl);
        }

        if let Some(v) = num("energy.t")? {
            c.time = v;
        }
        if let Some(v) = num("energy.pu_w")? {
            c.p_user = v;
        }
        if let Some(v) = num("energy.pr_w")? {
            c.p_relay = v;
        }
        c.validate()?;
        Ok(c)
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(inner) => flatten(&key, inner, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

fn check_key(key: &str) -> Result<()> {
    if KEYS.contains(&key) {
        Ok(())
    } else {
        Err(Error::Parse(format!("unknown key `{key}`")))
    }
}

/// Parses a configuration file and applies `overrides` in order.
pub fn load_config(path: Option<&Path>, preset: Option<&Preset>, overrides: &[String]) -> Result<SystemConfig<f64>> {
    let mut doc = ConfigDocument::default();
    if let Some(p) = preset {
        doc.merge(&p.document()?);
    }
    if let Some(path) = path {
        doc.merge(&ConfigDocument::load(path)?);
    }
    for o in overrides {
        doc.set(o)?;
    }
    doc.build()
}

/// Renders `config` in the file format. Reading the output back gives the
/// same config up to the dB round trip of `rho` and `omega_I`.
pub fn render_config(config: &SystemConfig<f64>) -> String {
    let mut s = String::new();
    s.push_str(&format!("schema_version = {SCHEMA_VERSION}\n\n"));
    s.push_str("# transmit SNR at which single-point quantities are evaluated\n");
    s.push_str(&format!("system.snr_db = {}\n\n", fmt(linear_to_db(config.rho))));
    s.push_str("# uplink (a) and downlink (b) power allocation\n");
    for (i, v) in config.a.iter().enumerate() {
        s.push_str(&format!("noma.a{} = {}\n", i + 1, fmt(*v)));
    }
    for (i, v) in config.b.iter().enumerate() {
        s.push_str(&format!("noma.b{} = {}\n", i + 1, fmt(*v)));
    }
    s.push_str("\ninterference.varpi1 = ");
    s.push_str(&fmt(config.varpi1));
    s.push_str("\ninterference.varpi2 = ");
    s.push_str(&fmt(config.varpi2));
    s.push_str("\n\n");
    s.push_str(&format!("sic.mode = \"{}\"\n", config.sic.label()));
    s.push_str(&format!("sic.omega_i_db = {}\n\n", fmt(linear_to_db(config.omega_i))));
    match &config.path_loss {
        Some(pl) => {
            s.push_str("# omega_i = d^-alpha, users 1 and 3 at d1, users 2 and 4 at d2\n");
            s.push_str(&format!("channel.alpha = {}\n", fmt(pl.alpha)));
            s.push_str(&format!("channel.d1 = {}\n", fmt(pl.d_near)));
            s.push_str(&format!("channel.d2 = {}\n\n", fmt(pl.d_far)));
        }
        None => {
            for (i, v) in config.omega.iter().enumerate() {
                s.push_str(&format!("channel.omega{} = {}\n", i + 1, fmt(*v)));
            }
            s.push('\n');
        }
    }
    s.push_str("# target rates, BPCU\n");
    for (i, v) in config.rates.iter().enumerate() {
        s.push_str(&format!("rates.r{} = {}\n", i + 1, fmt(*v)));
    }
    s.push_str("\n# energy-efficiency budget only\n");
    s.push_str(&format!("energy.t = {}\n", fmt(config.time)));
    s.push_str(&format!("energy.pu_w = {}\n", fmt(config.p_user)));
    s.push_str(&format!("energy.pr_w = {}\n", fmt(config.p_relay)));
    s
}

// Keeps a decimal point so integers stay TOML floats.
fn fmt(x: f64) -> String {
    let mut s = format!("{x}");
    if x.is_finite() && !s.contains(['.', 'e', 'E']) {
        s.push_str(".0");
    }
    s
}

pub fn default_config_text() -> String {
    render_config(&SystemConfig::table_one())
}

/// Named reproduction of one published figure.
#[derive(Clone, Debug)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    /// Overrides on top of the reference configuration.
    pub settings: &'static [&'static str],
    /// Default metric, in the sweep's naming.
    pub metric: &'static str,
    pub signals: &'static str,
    pub with_oma: bool,
    pub with_asymptotic: bool,
}

impl Preset {
    pub fn document(&self) -> Result<ConfigDocument> {
        let mut doc = ConfigDocument::default();
        for s in self.settings {
            doc.set(s)?;
        }
        Ok(doc)
    }

    pub fn config(&self) -> Result<SystemConfig<f64>> {
        self.document()?.build()
    }
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig2",
        description: "outage of x1, x2 vs SNR against OMA, varpi = 0.01, omega_I = -20 dB",
        settings: &["interference.varpi1=0.01", "interference.varpi2=0.01", "sic.omega_i_db=-20"],
        metric: "outage",
        signals: "x1,x2",
        with_oma: true,
        with_asymptotic: true,
    },
    Preset {
        name: "fig3",
        description: "outage of x1, x2 at the strongest interference level, varpi = 0.1",
        settings: &["interference.varpi1=0.1", "interference.varpi2=0.1", "sic.omega_i_db=-20"],
        metric: "outage",
        signals: "x1,x2",
        with_oma: false,
        with_asymptotic: false,
    },
    Preset {
        name: "fig4",
        description: "outage of x1, x2 with the largest residual interference, omega_I = 0 dB, varpi = 0",
        settings: &["interference.varpi1=0", "interference.varpi2=0", "sic.omega_i_db=0"],
        metric: "outage",
        signals: "x1,x2",
        with_oma: false,
        with_asymptotic: false,
    },
    Preset {
        name: "fig5",
        description: "delay-limited system throughput, varpi = 0.01, omega_I = -10 dB",
        settings: &["interference.varpi1=0.01", "interference.varpi2=0.01", "sic.omega_i_db=-10"],
        metric: "throughput_dl",
        signals: "x1,x2,x3,x4",
        with_oma: true,
        with_asymptotic: false,
    },
    Preset {
        name: "fig6",
        description: "ergodic rates of x1, x2, varpi = 0.01, omega_I = -20 dB",
        settings: &["interference.varpi1=0.01", "interference.varpi2=0.01", "sic.omega_i_db=-20"],
        metric: "ergodic_rate",
        signals: "x1,x2",
        with_oma: false,
        with_asymptotic: true,
    },
    Preset {
        name: "fig7",
        description: "delay-tolerant system throughput, varpi = 0.01, omega_I = -20 dB",
        settings: &["interference.varpi1=0.01", "interference.varpi2=0.01", "sic.omega_i_db=-20"],
        metric: "throughput_dt",
        signals: "x1,x2,x3,x4",
        with_oma: false,
        with_asymptotic: false,
    },
    Preset {
        name: "fig8",
        description: "energy efficiency, Pu = Pr = 10 W, T = 1",
        settings: &["energy.pu_w=10", "energy.pr_w=10", "energy.t=1"],
        metric: "ee_dl",
        signals: "x1,x2,x3,x4",
        with_oma: false,
        with_asymptotic: false,
    },
];

pub fn preset(name: &str) -> Result<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
        Error::Parse(format!("unknown preset `{name}` (available: {})", names.join(", ")))
    })
}
