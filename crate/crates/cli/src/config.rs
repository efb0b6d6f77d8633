//! Run configuration: a flat `key = value` file merged with command-line
//! flags, flags taking precedence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("model {model} is not compatible with the {group} group")]
    IncompatibleModelGroup { model: String, group: String },
    #[error("command {command} needs {needs}, got model {model}")]
    IncompatibleCommand {
        command: String,
        needs: &'static str,
        model: String,
    },
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    FlowOrbit,
    FixedPoints,
    Invariance,
    Period,
    Spectrum,
    Shoot,
    FkParams,
    Weyl,
    GeneratorCheck,
    Refine,
    CertifyNonequivalence,
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::FlowOrbit => "flow-orbit",
            Command::FixedPoints => "fixed-points",
            Command::Invariance => "invariance",
            Command::Period => "period",
            Command::Spectrum => "spectrum",
            Command::Shoot => "shoot",
            Command::FkParams => "fk-params",
            Command::Weyl => "weyl",
            Command::GeneratorCheck => "generator-check",
            Command::Refine => "refine",
            Command::CertifyNonequivalence => "certify-nonequivalence",
            Command::All => "all",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    Interval,
    InverseSquare,
    Halfline,
}

impl ModelName {
    pub fn name(self) -> &'static str {
        match self {
            ModelName::Interval => "interval",
            ModelName::InverseSquare => "inverse-square",
            ModelName::Halfline => "halfline",
        }
    }

    fn natural_group(self) -> GroupKind {
        match self {
            ModelName::InverseSquare => GroupKind::Scaling,
            _ => GroupKind::Translation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupKind {
    Translation,
    Scaling,
}

impl GroupKind {
    fn name(self) -> &'static str {
        match self {
            GroupKind::Translation => "translation",
            GroupKind::Scaling => "scaling",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by every command. All optional so that a config file can
/// supply them.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Flat `key = value` configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelName>,
    /// Interval length
    #[arg(long = "l", allow_hyphen_values = true)]
    pub ell: Option<f64>,
    /// Second interval length (certify-nonequivalence)
    #[arg(long = "l2", allow_hyphen_values = true)]
    pub ell2: Option<f64>,
    /// Inverse-square coupling
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    #[arg(long, value_enum)]
    pub group: Option<GroupKind>,
    /// Translation speed `v` in `x ↦ x + vt`
    #[arg(long, allow_hyphen_values = true)]
    pub speed: Option<f64>,
    /// Group parameters
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub t: Option<Vec<f64>>,
    /// Grid sizes
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Semigroup parameter for weyl
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<f64>,
    /// Use on-grid shifts s = k·h (weyl)
    #[arg(long, conflicts_with = "off_grid")]
    pub on_grid: bool,
    /// Use the off-grid shift s = ℓ/3 (weyl)
    #[arg(long)]
    pub off_grid: bool,
    /// Boundary phase
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Modulus of the boundary coefficient ρ = |ρ|e^{iθ} (spectrum)
    #[arg(long)]
    pub rho: Option<f64>,
    /// Number of eigenvalues (shoot)
    #[arg(long)]
    pub count: Option<usize>,
    /// Starting parameter `re,im` (flow-orbit)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub v0: Option<Vec<f64>>,
    /// Spectral window `lo,hi`
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub window: Option<Vec<f64>>,
    /// Longest period searched
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Worker threads
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Include wall-clock timings in the report
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub model: Option<ModelName>,
    pub ell: f64,
    pub ell2: f64,
    pub gamma: f64,
    pub group: Option<GroupKind>,
    pub speed: f64,
    pub t: Option<Vec<f64>>,
    pub n: Option<Vec<usize>>,
    pub s: Option<f64>,
    pub on_grid: bool,
    pub theta: f64,
    pub rho: Option<f64>,
    pub count: usize,
    pub v0: [f64; 2],
    pub window: [f64; 2],
    pub t_max: Option<f64>,
    pub tol: f64,
    pub jobs: Option<usize>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    #[serde(skip)]
    pub timings: bool,
}

impl RunConfig {
    fn defaults(command: Command) -> Self {
        RunConfig {
            command,
            model: None,
            ell: 1.0,
            ell2: 2.0,
            gamma: 0.0,
            group: None,
            speed: 1.0,
            t: None,
            n: None,
            s: None,
            on_grid: true,
            theta: 0.0,
            rho: None,
            count: 4,
            v0: [0.5, 0.0],
            window: [-20.0, 20.0],
            t_max: None,
            tol: 1e-8,
            jobs: None,
            out: None,
            format: Format::Json,
            seed: 0,
            timings: false,
        }
    }

    pub fn model(&self) -> ModelName {
        self.model.expect("validated configs carry a model")
    }

    pub fn group(&self) -> GroupKind {
        self.group.unwrap_or_else(|| self.model().natural_group())
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T, ConfigError> {
    raw.trim()
        .parse()
        .map_err(|_| ConfigError::Parse(format!("invalid value {raw:?} for `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>, ConfigError> {
    raw.split(',').map(|x| parse_value(key, x)).collect()
}

fn parse_pair(key: &str, raw: &str) -> Result<[f64; 2], ConfigError> {
    match parse_list::<f64>(key, raw)?.as_slice() {
        [a, b] => Ok([*a, *b]),
        _ => Err(ConfigError::Parse(format!("`{key}` expects two comma-separated numbers, got {raw:?}"))),
    }
}

fn parse_enum<T: ValueEnum>(key: &str, raw: &str) -> Result<T, ConfigError> {
    T::from_str(raw.trim(), true).map_err(|_| ConfigError::Parse(format!("invalid value {raw:?} for `{key}`")))
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn parse_file(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Parse(format!("line {}: expected `key = value`", lineno + 1)));
        };
        let key = k.trim().replace('-', "_");
        if key.is_empty() {
            return Err(ConfigError::Parse(format!("line {}: empty key", lineno + 1)));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

fn apply_file(cfg: &mut RunConfig, entries: &BTreeMap<String, String>) -> Result<(), ConfigError> {
    for (key, raw) in entries {
        let k = key.as_str();
        match k {
            "model" => cfg.model = Some(parse_enum(k, raw)?),
            "l" | "ell" => cfg.ell = parse_value(k, raw)?,
            "l2" | "ell2" => cfg.ell2 = parse_value(k, raw)?,
            "gamma" => cfg.gamma = parse_value(k, raw)?,
            "group" => cfg.group = Some(parse_enum(k, raw)?),
            "speed" => cfg.speed = parse_value(k, raw)?,
            "t" => cfg.t = Some(parse_list(k, raw)?),
            "n" => cfg.n = Some(parse_list(k, raw)?),
            "s" => cfg.s = Some(parse_value(k, raw)?),
            "on_grid" => cfg.on_grid = parse_value(k, raw)?,
            "theta" => cfg.theta = parse_value(k, raw)?,
            "rho" => cfg.rho = Some(parse_value(k, raw)?),
            "count" => cfg.count = parse_value(k, raw)?,
            "v0" => cfg.v0 = parse_pair(k, raw)?,
            "window" => cfg.window = parse_pair(k, raw)?,
            "t_max" => cfg.t_max = Some(parse_value(k, raw)?),
            "tol" => cfg.tol = parse_value(k, raw)?,
            "jobs" => cfg.jobs = Some(parse_value(k, raw)?),
            "out" => cfg.out = Some(PathBuf::from(raw)),
            "format" => cfg.format = parse_enum(k, raw)?,
            "seed" => cfg.seed = parse_value(k, raw)?,
            "timings" => cfg.timings = parse_value(k, raw)?,
            other => return Err(ConfigError::Parse(format!("unknown key `{other}`"))),
        }
    }
    Ok(())
}

fn apply_flags(cfg: &mut RunConfig, o: &Overrides) -> Result<(), ConfigError> {
    macro_rules! take {
        ($field:ident) => {
            if let Some(v) = o.$field.clone() {
                cfg.$field = v;
            }
        };
        ($field:ident, some) => {
            if let Some(v) = o.$field.clone() {
                cfg.$field = Some(v);
            }
        };
    }
    take!(model, some);
    take!(ell);
    take!(ell2);
    take!(gamma);
    take!(group, some);
    take!(speed);
    take!(t, some);
    take!(n, some);
    take!(s, some);
    take!(theta);
    take!(rho, some);
    take!(count);
    take!(t_max, some);
    take!(tol);
    take!(jobs, some);
    take!(out, some);
    take!(format);
    take!(seed);
    if let Some(v) = &o.v0 {
        cfg.v0 = parse_pair("v0", &join(v))?;
    }
    if let Some(w) = &o.window {
        cfg.window = parse_pair("window", &join(w))?;
    }
    if o.on_grid {
        cfg.on_grid = true;
    }
    if o.off_grid {
        cfg.on_grid = false;
    }
    cfg.timings |= o.timings;
    Ok(())
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn validate(cfg: &RunConfig) -> Result<(), ConfigError> {
    let positive = |name: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(ConfigError::Parse(format!("`{name}` must be positive, got {v}")))
        }
    };
    positive("tol", cfg.tol)?;
    positive("l", cfg.ell)?;
    positive("l2", cfg.ell2)?;
    if cfg.speed == 0.0 || !cfg.speed.is_finite() {
        return Err(ConfigError::Parse("`speed` must be nonzero".into()));
    }
    if let Some(t_max) = cfg.t_max {
        positive("t_max", t_max)?;
    }
    if cfg.jobs == Some(0) {
        return Err(ConfigError::Parse("`jobs` must be at least 1".into()));
    }
    if cfg.window[0] >= cfg.window[1] {
        return Err(ConfigError::Parse("`window` needs lo < hi".into()));
    }
    if matches!(&cfg.n, Some(n) if n.is_empty()) || matches!(&cfg.t, Some(t) if t.is_empty()) {
        return Err(ConfigError::Parse("empty list".into()));
    }
    if cfg.command == Command::All {
        return Ok(());
    }
    let Some(model) = cfg.model else {
        return Err(ConfigError::Parse(format!(
            "missing field `model` (required by {})",
            cfg.command.name()
        )));
    };
    let group = cfg.group();
    let compatible = match model {
        ModelName::Interval => group == GroupKind::Translation,
        ModelName::InverseSquare => group == GroupKind::Scaling,
        ModelName::Halfline => true,
    };
    if !compatible {
        return Err(ConfigError::IncompatibleModelGroup {
            model: model.name().into(),
            group: group.name().into(),
        });
    }
    let needs = match cfg.command {
        Command::Spectrum | Command::Weyl | Command::Refine | Command::CertifyNonequivalence => {
            (model != ModelName::Interval).then_some("the interval model")
        }
        Command::Shoot | Command::FkParams => (model != ModelName::InverseSquare).then_some("the inverse-square model"),
        _ => None,
    };
    if let Some(needs) = needs {
        return Err(ConfigError::IncompatibleCommand {
            command: cfg.command.name().into(),
            needs,
            model: model.name().into(),
        });
    }
    Ok(())
}

pub fn load_config(command: Command, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::defaults(command);
    if let Some(path) = &overrides.config {
        apply_file(&mut cfg, &parse_file(&read(path)?)?)?;
    }
    apply_flags(&mut cfg, overrides)?;
    validate(&cfg)?;
    Ok(cfg)
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(model: Option<ModelName>) -> Overrides {
        Overrides {
            model,
            ..Default::default()
        }
    }

    #[test]
    fn flags_only() {
        let mut o = flags(Some(ModelName::Interval));
        o.ell = Some(1.0);
        o.group = Some(GroupKind::Translation);
        let cfg = load_config(Command::FixedPoints, &o).unwrap();
        assert_eq!(cfg.model(), ModelName::Interval);
        assert_eq!(cfg.group(), GroupKind::Translation);
    }

    #[test]
    fn incompatible_group() {
        let mut o = flags(Some(ModelName::Interval));
        o.group = Some(GroupKind::Scaling);
        assert!(matches!(
            load_config(Command::Invariance, &o),
            Err(ConfigError::IncompatibleModelGroup { .. })
        ));
        let mut o = flags(Some(ModelName::InverseSquare));
        o.group = Some(GroupKind::Translation);
        assert!(load_config(Command::Invariance, &o).is_err());
        let mut o = flags(Some(ModelName::Halfline));
        o.group = Some(GroupKind::Scaling);
        assert!(load_config(Command::Invariance, &o).is_ok());
    }

    #[test]
    fn missing_model_names_field() {
        let err = load_config(Command::Period, &flags(None)).unwrap_err();
        assert!(matches!(err, ConfigError::Parse(ref m) if m.contains("`model`")), "{err}");
        assert!(load_config(Command::All, &flags(None)).is_ok());
    }

    #[test]
    fn command_model_mismatch() {
        assert!(matches!(
            load_config(Command::Shoot, &flags(Some(ModelName::Interval))),
            Err(ConfigError::IncompatibleCommand { .. })
        ));
    }

    #[test]
    fn file_parsing() {
        let text = "# comment\nmodel = interval  # trailing\nl = 2.5\nt = 0.1, -0.2\nn=128,256\nformat = csv\n\n";
        let entries = parse_file(text).unwrap();
        let mut cfg = RunConfig::defaults(Command::Weyl);
        apply_file(&mut cfg, &entries).unwrap();
        assert_eq!(cfg.ell, 2.5);
        assert_eq!(cfg.t, Some(vec![0.1, -0.2]));
        assert_eq!(cfg.n, Some(vec![128, 256]));
        assert_eq!(cfg.format, Format::Csv);
        assert!(parse_file("model interval").is_err());
        let bad = parse_file("colour = red").unwrap();
        assert!(matches!(apply_file(&mut cfg, &bad), Err(ConfigError::Parse(m)) if m.contains("colour")));
        let bad = parse_file("l = abc").unwrap();
        assert!(matches!(apply_file(&mut cfg, &bad), Err(ConfigError::Parse(m)) if m.contains("`l`")));
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "model = interval\nl = 3\ntol = 1e-6\n").unwrap();
        let mut o = Overrides {
            config: Some(path),
            ..Default::default()
        };
        o.ell = Some(0.5);
        let cfg = load_config(Command::Period, &o).unwrap();
        assert_eq!(cfg.ell, 0.5);
        assert_eq!(cfg.tol, 1e-6);
    }

    #[test]
    fn nonpositive_tolerance_rejected() {
        let mut o = flags(Some(ModelName::Interval));
        o.tol = Some(0.0);
        assert!(load_config(Command::Period, &o).is_err());
        let mut o = flags(Some(ModelName::Interval));
        o.jobs = Some(0);
        assert!(load_config(Command::Period, &o).is_err());
    }
}
