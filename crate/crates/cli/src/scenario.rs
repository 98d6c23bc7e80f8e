//! Scenario files.
//!
//! ```text
//! # standalone S1 and the S1+S3 bundle
//! [market]
//! M = 1000
//!
//! [service.S1]
//! N = 100
//! c = 0.2
//! alpha1 = 0.822
//! alpha2 = 0.004
//! alpha3 = 2.813
//!
//! [service.S3]
//! N = 100
//! c = 0.1
//! samples = s3_quality.csv   # fitted instead of alpha1..3
//!
//! [bundle]
//! members = S1, S3
//! gamma = 0.1
//! kind = complement          # optional, inferred from the sign of gamma
//!
//! [sim]
//! draws = 1000000
//! seed = 0
//! sigma_z = 1.0
//! ```
//!
//! `#` starts a comment. Keys are case-sensitive and unknown keys are
//! rejected. Sample paths are relative to the scenario file.

use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use privacy_pricing::market::{kind_for_gamma, BundleKind};
use privacy_pricing::oracle::SimulationSpec;
use privacy_pricing::utility::read_samples;
use privacy_pricing::{
    fit_quality_curve, BundleSpec, FitOptions, MarketSpec, QualityParams, ServiceSpec,
};

/// A diagnostic pointing at the offending section, key and line.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioError {
    pub file: String,
    pub line: usize,
    pub section: Option<String>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: ", self.file, self.line)?;
        if let Some(section) = &self.section {
            write!(f, "[{section}] ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "{key}: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ScenarioError {}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }
}

/// Parsed but unvalidated file contents.
#[derive(Debug, Clone, PartialEq)]
pub struct RawScenario {
    pub file: String,
    pub base_dir: PathBuf,
    pub sections: Vec<Section>,
}

const MARKET_KEYS: &[&str] = &["M"];
const SERVICE_KEYS: &[&str] = &["N", "c", "alpha1", "alpha2", "alpha3", "samples"];
const BUNDLE_KEYS: &[&str] = &["members", "gamma", "kind"];
const SIM_KEYS: &[&str] = &["draws", "seed", "sigma_z"];

fn allowed_keys(section: &str) -> Option<&'static [&'static str]> {
    match section {
        "market" => Some(MARKET_KEYS),
        "bundle" => Some(BUNDLE_KEYS),
        "sim" => Some(SIM_KEYS),
        s if s.strip_prefix("service.").is_some_and(|n| !n.is_empty()) => Some(SERVICE_KEYS),
        _ => None,
    }
}

impl RawScenario {
    pub fn read(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError {
            file: path.display().to_string(),
            line: 0,
            section: None,
            key: None,
            message: e.to_string(),
        })?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&path.display().to_string(), base_dir, &text)
    }

    pub fn parse(file: &str, base_dir: PathBuf, text: &str) -> Result<Self, ScenarioError> {
        let err = |line: usize, section: Option<&Section>, key: Option<&str>, message: String| {
            ScenarioError {
                file: file.to_string(),
                line,
                section: section.map(|s| s.name.clone()),
                key: key.map(str::to_string),
                message,
            }
        };
        let mut sections: Vec<Section> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| {
                        err(
                            line,
                            None,
                            None,
                            format!("malformed section header `{content}`"),
                        )
                    })?
                    .trim()
                    .to_string();
                if allowed_keys(&name).is_none() {
                    return Err(err(line, None, None, format!("unknown section [{name}]")));
                }
                if let Some(prev) = sections.iter().find(|s| s.name == name) {
                    return Err(err(
                        line,
                        None,
                        None,
                        format!("section [{name}] already opened on line {}", prev.line),
                    ));
                }
                sections.push(Section {
                    name,
                    line,
                    entries: Vec::new(),
                });
                continue;
            }
            let Some(section) = sections.last_mut() else {
                return Err(err(line, None, None, "key outside of any section".into()));
            };
            let Some((key, value)) = content.split_once('=') else {
                return Err(err(
                    line,
                    Some(section),
                    None,
                    format!("expected `key = value`, got `{content}`"),
                ));
            };
            let (key, value) = (key.trim(), value.trim());
            let allowed = allowed_keys(&section.name).unwrap_or(&[]);
            if !allowed.contains(&key) {
                return Err(err(
                    line,
                    Some(section),
                    Some(key),
                    format!("unknown key; expected one of {}", allowed.join(", ")),
                ));
            }
            if let Some(prev) = section.get(key) {
                return Err(err(
                    line,
                    Some(section),
                    Some(key),
                    format!("already set on line {}", prev.line),
                ));
            }
            if value.is_empty() {
                return Err(err(line, Some(section), Some(key), "missing value".into()));
            }
            section.entries.push(Entry {
                key: key.to_string(),
                value: value.to_string(),
                line,
            });
        }
        Ok(Self {
            file: file.to_string(),
            base_dir,
            sections,
        })
    }

    fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    /// Replaces (or adds) one value, addressed as `section.key` or
    /// `service.NAME.key`.
    pub fn set(&mut self, path: &str, value: String) -> Result<(), String> {
        let (section, key) = path
            .rsplit_once('.')
            .ok_or_else(|| format!("parameter `{path}` must look like section.key"))?;
        let allowed =
            allowed_keys(section).ok_or_else(|| format!("unknown section in `{path}`"))?;
        if !allowed.contains(&key) {
            return Err(format!("unknown key `{key}` for [{section}]"));
        }
        let target = self
            .sections
            .iter_mut()
            .find(|s| s.name == section)
            .ok_or_else(|| format!("scenario has no [{section}] section"))?;
        match target.entries.iter_mut().find(|e| e.key == key) {
            Some(e) => e.value = value,
            None => target.entries.push(Entry {
                key: key.to_string(),
                value,
                line: target.line,
            }),
        }
        Ok(())
    }

    fn error(
        &self,
        section: &Section,
        entry: Option<&Entry>,
        key: Option<&str>,
        message: String,
    ) -> ScenarioError {
        ScenarioError {
            file: self.file.clone(),
            line: entry.map_or(section.line, |e| e.line),
            section: Some(section.name.clone()),
            key: key.or(entry.map(|e| e.key.as_str())).map(str::to_string),
            message,
        }
    }

    fn required<'a>(&self, section: &'a Section, key: &str) -> Result<&'a Entry, ScenarioError> {
        section
            .get(key)
            .ok_or_else(|| self.error(section, None, Some(key), "required key is missing".into()))
    }

    fn number<T: FromStr>(&self, section: &Section, entry: &Entry) -> Result<T, ScenarioError> {
        entry.value.parse().map_err(|_| {
            self.error(
                section,
                Some(entry),
                None,
                format!("`{}` is not a valid number", entry.value),
            )
        })
    }

    /// Attributes a model validation error to the entry it names, falling
    /// back to the section header.
    fn model_error(&self, section: &Section, e: privacy_pricing::Error) -> ScenarioError {
        let entry = match &e {
            privacy_pricing::Error::InvalidParameter { name, .. } => section.get(name),
            _ => None,
        };
        self.error(section, entry, None, e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedService {
    pub name: String,
    pub spec: ServiceSpec,
    /// Fitted from samples rather than given.
    pub fitted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedBundle {
    pub members: [String; 2],
    pub spec: BundleSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub raw: RawScenario,
    pub market: MarketSpec,
    pub services: Vec<NamedService>,
    pub bundle: Option<NamedBundle>,
    pub sim: SimulationSpec,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Self::from_raw(RawScenario::read(path)?)
    }

    pub fn from_raw(raw: RawScenario) -> Result<Self, ScenarioError> {
        let market_section = raw.section("market").ok_or_else(|| ScenarioError {
            file: raw.file.clone(),
            line: 1,
            section: None,
            key: None,
            message: "missing [market] section".into(),
        })?;
        let m_entry = raw.required(market_section, "M")?;
        let market = MarketSpec::new(raw.number(market_section, m_entry)?)
            .map_err(|e| raw.model_error(market_section, e))?;

        let mut services = Vec::new();
        for section in raw
            .sections
            .iter()
            .filter(|s| s.name.starts_with("service."))
        {
            services.push(raw.service(section)?);
        }

        let bundle = match raw.section("bundle") {
            Some(section) => Some(raw.bundle(section, &services, market)?),
            None => None,
        };

        let mut sim = SimulationSpec::default();
        if let Some(section) = raw.section("sim") {
            if let Some(e) = section.get("draws") {
                sim.draws = raw.number(section, e)?;
            }
            if let Some(e) = section.get("seed") {
                sim.seed = raw.number(section, e)?;
            }
            if let Some(e) = section.get("sigma_z") {
                sim.sigma_z = raw.number(section, e)?;
            }
            SimulationSpec::new(sim.draws, sim.seed, sim.sigma_z)
                .map_err(|e| raw.model_error(section, e))?;
        }

        Ok(Self {
            raw,
            market,
            services,
            bundle,
            sim,
        })
    }

    pub fn service(&self, name: &str) -> Option<&NamedService> {
        self.services.iter().find(|s| s.name == name)
    }
}

impl RawScenario {
    fn service(&self, section: &Section) -> Result<NamedService, ScenarioError> {
        let name = section.name["service.".len()..].to_string();
        let n = self.number(section, self.required(section, "N")?)?;
        let c = self.number(section, self.required(section, "c")?)?;
        let alpha: Vec<&Entry> = ["alpha1", "alpha2", "alpha3"]
            .iter()
            .filter_map(|k| section.get(k))
            .collect();
        let (quality, fitted) = match (section.get("samples"), alpha.len()) {
            (Some(s), 0) => (self.fit(section, s)?, true),
            (Some(s), _) => {
                return Err(self.error(
                    section,
                    Some(s),
                    None,
                    "give either alpha1..alpha3 or samples, not both".into(),
                ))
            }
            (None, 3) => {
                let a: Vec<f64> = alpha
                    .iter()
                    .map(|e| self.number(section, e))
                    .collect::<Result<_, _>>()?;
                let q = QualityParams::new(a[0], a[1], a[2])
                    .map_err(|e| self.model_error(section, e))?;
                (q, false)
            }
            (None, _) => {
                let missing = ["alpha1", "alpha2", "alpha3"]
                    .into_iter()
                    .find(|k| section.get(k).is_none())
                    .unwrap_or("alpha1");
                return Err(self.error(
                    section,
                    None,
                    Some(missing),
                    "required key is missing (or give samples)".into(),
                ));
            }
        };
        let spec = ServiceSpec::new(quality, n, c).map_err(|e| self.model_error(section, e))?;
        Ok(NamedService { name, spec, fitted })
    }

    fn fit(&self, section: &Section, entry: &Entry) -> Result<QualityParams, ScenarioError> {
        let path = self.base_dir.join(&entry.value);
        let file = File::open(&path).map_err(|e| {
            self.error(
                section,
                Some(entry),
                None,
                format!("{}: {e}", path.display()),
            )
        })?;
        let samples = read_samples(file)
            .map_err(|e| self.error(section, Some(entry), None, e.to_string()))?;
        let fit = fit_quality_curve(&samples, &FitOptions::default())
            .map_err(|e| self.error(section, Some(entry), None, e.to_string()))?;
        Ok(fit.params)
    }

    fn bundle(
        &self,
        section: &Section,
        services: &[NamedService],
        market: MarketSpec,
    ) -> Result<NamedBundle, ScenarioError> {
        let members_entry = self.required(section, "members")?;
        let names: Vec<String> = members_entry
            .value
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let [a, b]: [String; 2] = names.try_into().map_err(|_| {
            self.error(
                section,
                Some(members_entry),
                None,
                "a bundle has exactly two members".into(),
            )
        })?;
        if a == b {
            return Err(self.error(
                section,
                Some(members_entry),
                None,
                "members must differ".into(),
            ));
        }
        let lookup = |name: &str| {
            services
                .iter()
                .find(|s| s.name == name)
                .map(|s| s.spec)
                .ok_or_else(|| {
                    self.error(
                        section,
                        Some(members_entry),
                        None,
                        format!("no [service.{name}] section"),
                    )
                })
        };
        let (first, second) = (lookup(&a)?, lookup(&b)?);
        let gamma_entry = self.required(section, "gamma")?;
        let gamma: f64 = self.number(section, gamma_entry)?;
        let kind = match section.get("kind") {
            Some(e) => BundleKind::from_str(&e.value)
                .map_err(|err| self.error(section, Some(e), None, err.to_string()))?,
            None => kind_for_gamma(gamma),
        };
        let spec = BundleSpec::new(first, second, market, gamma, kind).map_err(|e| {
            // participant mismatch concerns the members line
            let entry = match &e {
                privacy_pricing::Error::InvalidParameter { name: "N", .. } => Some(members_entry),
                _ => None,
            };
            match entry {
                Some(entry) => self.error(section, Some(entry), None, e.to_string()),
                None => self.model_error(section, e),
            }
        })?;
        Ok(NamedBundle {
            members: [a, b],
            spec,
        })
    }
}
