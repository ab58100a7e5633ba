//! Rayleigh-fading ensembles over a distance-based path-loss model.
//!
//! Gains are exponential with mean given by [`path_loss`]. Draws use
//! ChaCha20 seeded with [`rand::SeedableRng::seed_from_u64`] and the
//! inverse-CDF transform `-mean * ln(1 - U)`, `h` before `g` for each state.
//!
//! Ensembles are stored as CSV with a `h,g` header and 17 significant
//! digits per value. Lines starting with `#` are comments; the writer records
//! the seed as `# seed=<n>`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::model::{FadingEnsemble, FadingState};
use crate::{fmt_sci, Error, Result};

/// Tx–receiver geometry and path-loss constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryConfig {
    /// Tx–IR distance (m).
    pub d_ir: f64,
    /// Tx–ER distance (m).
    pub d_er: f64,
    /// Gain at the reference distance.
    pub a0: f64,
    /// Reference distance (m).
    pub d0: f64,
    /// Path-loss exponent. Distinct from the AN split ratio.
    pub path_exp: f64,
}

impl GeometryConfig {
    /// Reference model: `A0 = 1e-3`, `d0 = 1 m`, exponent 3.
    pub fn with_distances(d_ir: f64, d_er: f64) -> Self {
        Self {
            d_ir,
            d_er,
            a0: 1e-3,
            d0: 1.0,
            path_exp: 3.0,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.d0 > 0.0 && self.d0.is_finite()) {
            out.push(format!("d0 must be positive, got {}", self.d0));
        }
        if !(self.d_ir >= self.d0 && self.d_ir.is_finite()) {
            out.push(format!("d_ir must be at least d0 ({}), got {}", self.d0, self.d_ir));
        }
        if !(self.d_er >= self.d0 && self.d_er.is_finite()) {
            out.push(format!("d_er must be at least d0 ({}), got {}", self.d0, self.d_er));
        }
        if !(self.a0 > 0.0 && self.a0.is_finite()) {
            out.push(format!("a0 must be positive, got {}", self.a0));
        }
        if !(self.path_exp > 0.0 && self.path_exp.is_finite()) {
            out.push(format!("path_exp must be positive, got {}", self.path_exp));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(v.join("; ")))
        }
    }
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self::with_distances(2.0, 2.0)
    }
}

/// Average power gain `a0 * (d / d0)^(-path_exp)`.
pub fn path_loss(d: f64, cfg: &GeometryConfig) -> Result<f64> {
    if !(d >= cfg.d0) {
        return Err(Error::BelowReferenceDistance {
            distance: d,
            reference: cfg.d0,
        });
    }
    Ok(cfg.a0 * (d / cfg.d0).powf(-cfg.path_exp))
}

/// Draws `n` independent states with exponential `h` and `g`.
pub fn generate_ensemble(cfg: &GeometryConfig, n: usize, seed: u64) -> Result<FadingEnsemble> {
    if n == 0 {
        return Err(Error::InvalidParameter("ensemble size must be at least 1".into()));
    }
    cfg.validate()?;
    let mean_h = path_loss(cfg.d_ir, cfg)?;
    let mean_g = path_loss(cfg.d_er, cfg)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut exp = |mean: f64| {
        let u: f64 = rng.gen();
        -mean * (-u).ln_1p()
    };
    let states = (0..n)
        .map(|_| {
            let h = exp(mean_h);
            let g = exp(mean_g);
            FadingState { h, g }
        })
        .collect();
    FadingEnsemble::new(states, seed)
}

pub fn write_ensemble<W: Write>(ensemble: &FadingEnsemble, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# seed={}", ensemble.seed())?;
    writeln!(out, "h,g")?;
    for s in ensemble.states() {
        writeln!(out, "{},{}", fmt_sci(s.h), fmt_sci(s.g))?;
    }
    out.flush()
}

pub fn save_ensemble(ensemble: &FadingEnsemble, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_ensemble(ensemble, BufWriter::new(file)).map_err(io_err)
}

pub fn load_ensemble(path: &Path) -> Result<FadingEnsemble> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_ensemble(&text, path)
}

/// Parses the CSV text; `path` is only used in error messages.
pub fn parse_ensemble(text: &str, path: &Path) -> Result<FadingEnsemble> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    // The seed comment must precede the header; the csv reader skips comments.
    let mut seed = 0u64;
    for line in text.lines() {
        let t = line.trim();
        if let Some(rest) = t.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("seed=") {
                seed = v.trim().parse().unwrap_or(0);
            }
        } else if !t.is_empty() {
            break;
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .has_headers(true)
        .from_reader(text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| parse_err(csv_line(&e).unwrap_or(1), e.to_string()))?
        .clone();
    let header_line = text
        .lines()
        .position(|l| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .map_or(1, |i| i as u64 + 1);
    if headers.len() != 2 || &headers[0] != "h" || &headers[1] != "g" {
        return Err(parse_err(
            header_line,
            format!("expected header `h,g`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }

    let mut states = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(csv_line(&e).unwrap_or(0), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(parse_err(line, format!("expected 2 fields, found {}", record.len())));
        }
        let field = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|e| parse_err(line, format!("field {}: `{}`: {e}", i + 1, &record[i])))
        };
        let state = FadingState::new(field(0)?, field(1)?)
            .map_err(|e| parse_err(line, e.to_string()))?;
        states.push(state);
    }
    if states.is_empty() {
        return Err(parse_err(header_line.max(1), "no fading states after header".into()));
    }
    FadingEnsemble::new(states, seed)
}

fn csv_line(e: &csv::Error) -> Option<u64> {
    e.position().map(|p| p.line())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_loss_reference_points() {
        let cfg = GeometryConfig::with_distances(2.0, 2.0);
        assert!((path_loss(1.0, &cfg).unwrap() - 1e-3).abs() < 1e-18);
        assert!((path_loss(2.0, &cfg).unwrap() - 1.25e-4).abs() < 1e-18);
        assert_eq!(path_loss(cfg.d0, &cfg).unwrap(), cfg.a0);
        assert!(matches!(
            path_loss(0.5, &cfg),
            Err(Error::BelowReferenceDistance { .. })
        ));
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = GeometryConfig::default();
        let a = generate_ensemble(&cfg, 100, 7).unwrap();
        let b = generate_ensemble(&cfg, 100, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_ensemble(&cfg, 100, 8).unwrap();
        assert_ne!(a.states()[0], c.states()[0]);
        assert!(generate_ensemble(&cfg, 0, 7).is_err());
    }

    #[test]
    fn sample_mean_matches_path_loss() {
        let cfg = GeometryConfig::with_distances(2.0, 1.0);
        let e = generate_ensemble(&cfg, 100_000, 2024).unwrap();
        let mh = e.average(|s| s.h);
        let mg = e.average(|s| s.g);
        assert!((mh / 1.25e-4 - 1.0).abs() < 0.02, "{mh}");
        assert!((mg / 1e-3 - 1.0).abs() < 0.02, "{mg}");
    }

    #[test]
    fn exponential_marginals_pass_ks() {
        let cfg = GeometryConfig::default();
        let n = 100_000;
        let e = generate_ensemble(&cfg, n, 11).unwrap();
        let mean = path_loss(cfg.d_ir, &cfg).unwrap();
        let mut xs: Vec<f64> = e.states().iter().map(|s| s.h / mean).collect();
        xs.sort_by(f64::total_cmp);
        let nf = n as f64;
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let cdf = -(-x).exp_m1();
                (cdf - i as f64 / nf).abs().max(((i + 1) as f64 / nf - cdf).abs())
            })
            .fold(0.0, f64::max);
        // 1% critical value of the one-sample KS statistic, large-n form.
        let critical = 1.628 / nf.sqrt();
        assert!(d < critical, "KS statistic {d} >= {critical}");
    }

    #[test]
    fn gains_are_uncorrelated() {
        let e = generate_ensemble(&GeometryConfig::default(), 100_000, 5).unwrap();
        let n = e.len() as f64;
        let mh = e.average(|s| s.h);
        let mg = e.average(|s| s.g);
        let cov = e.average(|s| (s.h - mh) * (s.g - mg));
        let vh = e.average(|s| (s.h - mh).powi(2));
        let vg = e.average(|s| (s.g - mg).powi(2));
        let rho = cov / (vh * vg).sqrt();
        assert!(rho.abs() < 0.02, "rho={rho} over {n} samples");
    }

    #[test]
    fn save_load_round_trip() {
        let e = generate_ensemble(&GeometryConfig::default(), 257, 99).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ens.csv");
        save_ensemble(&e, &path).unwrap();
        let back = load_ensemble(&path).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn hand_written_fixture() {
        let text = "h,g\n1.0e-4,2.5e-5\n3e-3 , 0\n0,7.25e-4\n";
        let e = parse_ensemble(text, Path::new("fixture.csv")).unwrap();
        assert_eq!(
            e.states(),
            &[
                FadingState { h: 1.0e-4, g: 2.5e-5 },
                FadingState { h: 3e-3, g: 0.0 },
                FadingState { h: 0.0, g: 7.25e-4 },
            ]
        );
        assert_eq!(e.seed(), 0);
    }

    #[test]
    fn missing_header_is_rejected() {
        let err = parse_ensemble("1e-4,2e-4\n3e-4,1e-5\n", Path::new("x.csv")).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 1);
                assert!(message.contains("header"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_value_reports_line() {
        let err = parse_ensemble("# seed=3\nh,g\n1e-4,2e-4\n1e-4,oops\n", Path::new("x.csv"))
            .unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_ensemble("h,g\n-1e-4,2e-4\n", Path::new("x.csv")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }
}
