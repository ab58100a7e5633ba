//! TOML run configuration: schema, unit-suffixed powers and resolution into
//! library types.
//!
//! ```toml
//! [system]
//! p_avg = "20 dBm"        # powers need a unit: dBm, W, mW, uW, µW or nW
//! p_peak = "30 dBm"
//! zeta = 0.5
//! sigma1_sq = "-50 dBm"
//! sigma2_sq = "-50 dBm"
//! r0 = 6.5                # bits/s/Hz
//! q_bar = "0 W"           # harvest floor for `solve`
//!
//! [geometry]
//! d_ir = 2.0              # metres
//! d_er = 2.0
//! a0 = 1e-3
//! d0 = 1.0
//! path_exp = 3.0
//!
//! [ensemble]
//! states = 10000
//! seed = 1
//! # path = "ensemble.csv" # load instead of generating
//!
//! [solver]
//! scheme = "optimal"      # optimal | alt | fixed:<alpha> | noan | nocancel
//! kind = "outage"         # outage | esc
//! tol = 1e-6
//! max_iter = 500
//! feas_tol = 1e-4
//! alpha_grid_n = 33
//! alt_max_rounds = 20
//! alt_obj_tol = 1e-6
//! alt_initial_alpha = 0.5
//!
//! [sweep]
//! q_points = 11
//! q_max_fraction = 0.98
//! ```
//!
//! Every key is optional; missing keys take the defaults above.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use secrecy_swipt::alternating::AlternatingOptions;
use secrecy_swipt::channel::GeometryConfig;
use secrecy_swipt::region::{Scheme, SweepSpec};
use secrecy_swipt::{dbm_to_watts, fmt_sci, ProblemKind, SolverOptions, SystemParams};

/// Schema violations, reported together.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} problem(s)):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// Parses `"<number> <unit>"` into watts. The space is optional.
pub fn parse_power(text: &str) -> Result<f64, String> {
    let t = text.trim();
    let split = t.trim_end_matches(|c: char| c.is_alphabetic()).len();
    if split == t.len() {
        return Err(format!("{text:?} needs a unit suffix (dBm, W, mW, uW, µW or nW)"));
    }
    let (num, unit) = t.split_at(split);
    let x: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("{text:?}: cannot read {:?} as a number", num.trim()))?;
    if !x.is_finite() {
        return Err(format!("{text:?} is not finite"));
    }
    let watts = match unit.trim() {
        "dBm" => dbm_to_watts(x),
        "W" => x,
        "mW" => x * 1e-3,
        "uW" | "µW" => x * 1e-6,
        "nW" => x * 1e-9,
        other => return Err(format!("{text:?}: unknown unit {other:?}")),
    };
    Ok(watts)
}

/// Parses a harvest floor given as bare watts or with a unit suffix.
pub fn parse_q_bar(text: &str) -> Result<f64, String> {
    match text.trim().parse::<f64>() {
        Ok(x) => Ok(x),
        Err(_) => parse_power(text),
    }
}

pub fn parse_kind(text: &str) -> Result<ProblemKind, String> {
    match text {
        "outage" => Ok(ProblemKind::OutageMin),
        "esc" => Ok(ProblemKind::EscMax),
        other => Err(format!("unknown kind {other:?}; expected outage or esc")),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawSystem {
    p_avg: Option<String>,
    p_peak: Option<String>,
    zeta: Option<f64>,
    sigma1_sq: Option<String>,
    sigma2_sq: Option<String>,
    r0: Option<f64>,
    q_bar: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawGeometry {
    d_ir: Option<f64>,
    d_er: Option<f64>,
    a0: Option<f64>,
    d0: Option<f64>,
    path_exp: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawEnsemble {
    states: Option<i64>,
    seed: Option<i64>,
    path: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawSolver {
    scheme: Option<String>,
    kind: Option<String>,
    tol: Option<f64>,
    max_iter: Option<i64>,
    feas_tol: Option<f64>,
    alpha_grid_n: Option<i64>,
    alt_max_rounds: Option<i64>,
    alt_obj_tol: Option<f64>,
    alt_initial_alpha: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawSweep {
    q_points: Option<i64>,
    q_max_fraction: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawConfig {
    system: RawSystem,
    geometry: RawGeometry,
    ensemble: RawEnsemble,
    solver: RawSolver,
    sweep: RawSweep,
}

const KNOWN: &[(&str, &[&str])] = &[
    ("system", &["p_avg", "p_peak", "zeta", "sigma1_sq", "sigma2_sq", "r0", "q_bar"]),
    ("geometry", &["d_ir", "d_er", "a0", "d0", "path_exp"]),
    ("ensemble", &["states", "seed", "path"]),
    (
        "solver",
        &[
            "scheme",
            "kind",
            "tol",
            "max_iter",
            "feas_tol",
            "alpha_grid_n",
            "alt_max_rounds",
            "alt_obj_tol",
            "alt_initial_alpha",
        ],
    ),
    ("sweep", &["q_points", "q_max_fraction"]),
];

fn unknown_keys(table: &toml::Table) -> Vec<String> {
    let mut out = Vec::new();
    for (section, value) in table {
        let Some((_, keys)) = KNOWN.iter().find(|(name, _)| name == section) else {
            out.push(format!("unknown section [{section}]"));
            continue;
        };
        match value.as_table() {
            Some(t) => {
                for key in t.keys().filter(|k| !keys.contains(&k.as_str())) {
                    out.push(format!("unknown key {section}.{key}"));
                }
            }
            None => out.push(format!("{section} must be a table")),
        }
    }
    out
}

/// Where the fading states come from.
#[derive(Debug, Clone, PartialEq)]
pub enum EnsembleSource {
    Generate { states: usize, seed: u64 },
    Load(PathBuf),
}

/// Fully resolved configuration in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: SystemParams,
    pub q_bar: f64,
    pub geometry: GeometryConfig,
    pub ensemble: EnsembleSource,
    pub scheme: Scheme,
    pub kind: ProblemKind,
    pub solver: SolverOptions,
    pub alt: AlternatingOptions,
    pub sweep: SweepSpec,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub scheme: Option<String>,
    pub kind: Option<String>,
    pub q_bar: Option<String>,
    pub r0: Option<f64>,
}

fn non_negative_int(name: &str, v: Option<i64>, default: usize, errs: &mut Vec<String>) -> usize {
    match v {
        None => default,
        Some(x) if x >= 0 => x as usize,
        Some(x) => {
            errs.push(format!("{name} must be non-negative, got {x}"));
            default
        }
    }
}

fn power(name: &str, v: &Option<String>, default: f64, errs: &mut Vec<String>) -> f64 {
    match v {
        None => default,
        Some(s) => parse_power(s).unwrap_or_else(|e| {
            errs.push(format!("{name}: {e}"));
            default
        }),
    }
}

impl RunConfig {
    /// Parses and validates the TOML text, collecting every problem.
    pub fn parse(text: &str, overrides: &Overrides) -> Result<Self, ConfigErrors> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigErrors(vec![e.to_string()]))?;
        let mut errs = unknown_keys(&table);
        let raw: RawConfig = match RawConfig::deserialize(toml::Value::Table(table)) {
            Ok(r) => r,
            Err(e) => {
                errs.push(e.to_string());
                return Err(ConfigErrors(errs));
            }
        };

        let def = SystemParams::default();
        let sys = &raw.system;
        let params = SystemParams {
            p_avg: power("system.p_avg", &sys.p_avg, def.p_avg, &mut errs),
            p_peak: power("system.p_peak", &sys.p_peak, def.p_peak, &mut errs),
            zeta: sys.zeta.unwrap_or(def.zeta),
            sigma1_sq: power("system.sigma1_sq", &sys.sigma1_sq, def.sigma1_sq, &mut errs),
            sigma2_sq: power("system.sigma2_sq", &sys.sigma2_sq, def.sigma2_sq, &mut errs),
            r0: overrides.r0.or(sys.r0).unwrap_or(def.r0),
        };
        errs.extend(params.violations().into_iter().map(|v| format!("system: {v}")));

        let q_bar = match overrides.q_bar.as_ref().or(sys.q_bar.as_ref()) {
            None => 0.0,
            Some(s) => parse_q_bar(s).unwrap_or_else(|e| {
                errs.push(format!("q_bar: {e}"));
                0.0
            }),
        };
        if !(q_bar >= 0.0 && q_bar.is_finite()) {
            errs.push(format!("q_bar must be finite and non-negative, got {q_bar}"));
        }

        let g = &raw.geometry;
        let gd = GeometryConfig::default();
        let geometry = GeometryConfig {
            d_ir: g.d_ir.unwrap_or(gd.d_ir),
            d_er: g.d_er.unwrap_or(gd.d_er),
            a0: g.a0.unwrap_or(gd.a0),
            d0: g.d0.unwrap_or(gd.d0),
            path_exp: g.path_exp.unwrap_or(gd.path_exp),
        };
        errs.extend(geometry.violations().into_iter().map(|v| format!("geometry: {v}")));

        let e = &raw.ensemble;
        let states = non_negative_int("ensemble.states", e.states, 10_000, &mut errs);
        if states == 0 {
            errs.push("ensemble.states must be at least 1".to_string());
        }
        let file_seed = match e.seed {
            None => 1,
            Some(x) if x >= 0 => x as u64,
            Some(x) => {
                errs.push(format!("ensemble.seed must be non-negative, got {x}"));
                1
            }
        };
        let ensemble = match &e.path {
            Some(p) => EnsembleSource::Load(p.clone()),
            None => EnsembleSource::Generate {
                states,
                seed: overrides.seed.unwrap_or(file_seed),
            },
        };

        let s = &raw.solver;
        let scheme_text = overrides.scheme.clone().or(s.scheme.clone()).unwrap_or_else(|| "optimal".into());
        let scheme = scheme_text.parse::<Scheme>().unwrap_or_else(|err| {
            errs.push(format!("scheme: {err}"));
            Scheme::Optimal
        });
        let kind_text = overrides.kind.clone().or(s.kind.clone()).unwrap_or_else(|| "outage".into());
        let kind = parse_kind(&kind_text).unwrap_or_else(|err| {
            errs.push(format!("kind: {err}"));
            ProblemKind::OutageMin
        });
        let sd = SolverOptions::default();
        let solver = SolverOptions {
            tol: s.tol.unwrap_or(sd.tol),
            max_iter: non_negative_int("solver.max_iter", s.max_iter, sd.max_iter, &mut errs),
            feas_tol: s.feas_tol.unwrap_or(sd.feas_tol),
            alpha_grid_n: non_negative_int("solver.alpha_grid_n", s.alpha_grid_n, 33, &mut errs),
            record_trace: false,
        };
        errs.extend(solver.violations().into_iter().map(|v| format!("solver: {v}")));
        let ad = AlternatingOptions::default();
        let alt = AlternatingOptions {
            max_rounds: non_negative_int("solver.alt_max_rounds", s.alt_max_rounds, ad.max_rounds, &mut errs),
            obj_tol: s.alt_obj_tol.unwrap_or(ad.obj_tol),
            initial_alpha: s.alt_initial_alpha.unwrap_or(ad.initial_alpha),
        };
        errs.extend(alt.violations(kind).into_iter().map(|v| format!("solver: alt {v}")));

        let mut sweep = SweepSpec::new(scheme, kind);
        sweep.q_points = non_negative_int("sweep.q_points", raw.sweep.q_points, sweep.q_points, &mut errs);
        sweep.q_max_fraction = raw.sweep.q_max_fraction.unwrap_or(sweep.q_max_fraction);
        errs.extend(sweep.violations().into_iter().map(|v| format!("sweep: {v}")));

        if errs.is_empty() {
            Ok(Self {
                params,
                q_bar,
                geometry,
                ensemble,
                scheme,
                kind,
                solver,
                alt,
                sweep,
            })
        } else {
            Err(ConfigErrors(errs))
        }
    }

    /// Reads `path`, or uses the defaults when no file is given.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> anyhow::Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| anyhow::anyhow!("cannot read {}: {e}", p.display()))?,
            None => String::new(),
        };
        Ok(Self::parse(&text, overrides)?)
    }

    /// Resolved values as `# key = value` lines for CSV headers.
    pub fn header(&self) -> String {
        let p = &self.params;
        let g = &self.geometry;
        let mut lines = vec![
            format!("# secrecy-swipt {}", env!("CARGO_PKG_VERSION")),
            format!("# system.p_avg_w = {}", fmt_sci(p.p_avg)),
            format!("# system.p_peak_w = {}", fmt_sci(p.p_peak)),
            format!("# system.zeta = {}", fmt_sci(p.zeta)),
            format!("# system.sigma1_sq_w = {}", fmt_sci(p.sigma1_sq)),
            format!("# system.sigma2_sq_w = {}", fmt_sci(p.sigma2_sq)),
            format!("# system.r0 = {}", fmt_sci(p.r0)),
            format!("# system.q_bar_w = {}", fmt_sci(self.q_bar)),
            format!("# geometry.d_ir = {}", fmt_sci(g.d_ir)),
            format!("# geometry.d_er = {}", fmt_sci(g.d_er)),
            format!("# geometry.a0 = {}", fmt_sci(g.a0)),
            format!("# geometry.d0 = {}", fmt_sci(g.d0)),
            format!("# geometry.path_exp = {}", fmt_sci(g.path_exp)),
        ];
        match &self.ensemble {
            EnsembleSource::Generate { states, seed } => {
                lines.push(format!("# ensemble.states = {states}"));
                lines.push(format!("# ensemble.seed = {seed}"));
            }
            EnsembleSource::Load(path) => lines.push(format!("# ensemble.path = {}", path.display())),
        }
        let s = &self.solver;
        lines.extend([
            format!("# solver.scheme = {}", self.scheme),
            format!("# solver.kind = {}", self.kind.label()),
            format!("# solver.tol = {}", fmt_sci(s.tol)),
            format!("# solver.max_iter = {}", s.max_iter),
            format!("# solver.feas_tol = {}", fmt_sci(s.feas_tol)),
            format!("# solver.alpha_grid_n = {}", s.alpha_grid_n),
            format!("# solver.alt_max_rounds = {}", self.alt.max_rounds),
            format!("# solver.alt_obj_tol = {}", fmt_sci(self.alt.obj_tol)),
            format!("# solver.alt_initial_alpha = {}", fmt_sci(self.alt.initial_alpha)),
            format!("# sweep.q_points = {}", self.sweep.q_points),
            format!("# sweep.q_max_fraction = {}", fmt_sci(self.sweep.q_max_fraction)),
        ]);
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_units() {
        assert!((parse_power("20 dBm").unwrap() - 0.1).abs() < 1e-15);
        assert!((parse_power("30dBm").unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(parse_power("0.1 W").unwrap(), 0.1);
        assert!((parse_power("100 mW").unwrap() - 0.1).abs() < 1e-16);
        assert!((parse_power("7 uW").unwrap() - 7e-6).abs() < 1e-21);
        assert!((parse_power("7 µW").unwrap() - 7e-6).abs() < 1e-21);
        assert!((parse_power("-50 dBm").unwrap() - 1e-8).abs() < 1e-22);
        assert!(parse_power("0.1").unwrap_err().contains("unit"));
        assert!(parse_power("3 kW").unwrap_err().contains("unknown unit"));
        assert!(parse_power("x W").is_err());
        assert_eq!(parse_power("1e-3 W").unwrap(), 1e-3);
        assert_eq!(parse_power("2.5e-6W").unwrap(), 2.5e-6);
    }

    #[test]
    fn bare_q_bar_is_watts() {
        assert_eq!(parse_q_bar("7e-6").unwrap(), 7e-6);
        assert!((parse_q_bar("7 uW").unwrap() - 7e-6).abs() < 1e-21);
    }

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::parse("", &Overrides::default()).unwrap();
        assert_eq!(c.params, SystemParams::default());
        assert_eq!(c.geometry, GeometryConfig::default());
        assert_eq!(c.ensemble, EnsembleSource::Generate { states: 10_000, seed: 1 });
        assert_eq!(c.scheme, Scheme::Optimal);
        assert_eq!(c.kind, ProblemKind::OutageMin);
        assert_eq!(c.q_bar, 0.0);
    }

    #[test]
    fn overrides_take_precedence() {
        let text = "[system]\nr0 = 3.0\nq_bar = \"1 uW\"\n[ensemble]\nseed = 4\n[solver]\nkind = \"esc\"\n";
        let o = Overrides {
            seed: Some(9),
            scheme: Some("fixed:0.25".into()),
            kind: Some("outage".into()),
            q_bar: Some("2e-6".into()),
            r0: Some(5.0),
        };
        let c = RunConfig::parse(text, &o).unwrap();
        assert_eq!(c.params.r0, 5.0);
        assert_eq!(c.q_bar, 2e-6);
        assert_eq!(c.scheme, Scheme::FixedAlpha(0.25));
        assert_eq!(c.kind, ProblemKind::OutageMin);
        assert_eq!(c.ensemble, EnsembleSource::Generate { states: 10_000, seed: 9 });
    }

    #[test]
    fn every_problem_is_listed() {
        let text = "[system]\np_avg = \"0.1\"\nzeta = 2.0\nbogus = 1\n[geometry]\nd_ir = 0.5\n\
                    [solver]\nscheme = \"best\"\n[extra]\nx = 1\n";
        let err = RunConfig::parse(text, &Overrides::default()).unwrap_err();
        let all = err.0.join("\n");
        for needle in ["unknown key system.bogus", "unknown section [extra]", "unit suffix", "zeta", "d_ir", "scheme"] {
            assert!(all.contains(needle), "missing {needle:?} in\n{all}");
        }
        assert!(err.0.len() >= 6);
    }

    #[test]
    fn type_errors_are_reported() {
        let err = RunConfig::parse("[system]\nzeta = \"half\"\n", &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("zeta"), "{err}");
    }

    #[test]
    fn header_lists_resolved_watts() {
        let c = RunConfig::parse("", &Overrides::default()).unwrap();
        let h = c.header();
        assert!(h.lines().all(|l| l.starts_with("# ")));
        let p_avg: f64 = h
            .lines()
            .find_map(|l| l.strip_prefix("# system.p_avg_w = "))
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(p_avg, c.params.p_avg);
        assert!(h.contains("# solver.scheme = optimal"));
    }
}
