//! Strip definition files.
//!
//! ```text
//! # comment
//! [curve]
//! name = helix-band
//! period = 2*pi          # or: charts = 2, with x2/y2/z2 for the chart at infinity
//! x = cos(s)
//! y = sin(s)
//! z = 0
//!
//! [ruling]
//! mode = explicit        # explicit: xi_x, xi_y, xi_z; frenet: p, q, r; darboux: nothing
//! xi_x = 0
//! xi_y = 0
//! xi_z = 1
//!
//! [options]
//! half_width = 0.5
//! ```
//!
//! Expression values are raw expression text. In the second chart of a
//! two-chart curve the variable is still written `s`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use striplab_core::expr::{eval, parse, NoSymbols};
use striplab_core::{CensusOptions, CurveR3, Expr, RuledStrip, RulingField};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DefinitionError {
    #[error("{path}: file not found")]
    NotFound { path: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{origin}:{line}: {message}")]
    Line { origin: String, line: usize, message: String },
    #[error("{origin}: {message}")]
    Missing { origin: String, message: String },
    #[error("{origin}: {source}")]
    Build {
        origin: String,
        source: striplab_core::StripError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurveSpec {
    Periodic { period: f64, xyz: [Expr; 3] },
    TwoChart { chart1: [Expr; 3], chart2: [Expr; 3] },
}

#[derive(Debug, Clone, PartialEq)]
pub enum RulingSpec {
    Explicit([Expr; 3]),
    Frenet { p: Expr, q: Expr, r: Expr },
    Darboux,
}

impl RulingSpec {
    pub fn mode(&self) -> &'static str {
        match self {
            RulingSpec::Explicit(_) => "explicit",
            RulingSpec::Frenet { .. } => "frenet",
            RulingSpec::Darboux => "darboux",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub half_width: f64,
    pub scan_samples: usize,
    pub rho_samples: usize,
    pub xtol: f64,
}

impl Default for Options {
    fn default() -> Self {
        let c = CensusOptions::default();
        Options {
            half_width: 0.5,
            scan_samples: c.scan_samples,
            rho_samples: c.rho_samples,
            xtol: c.xtol,
        }
    }
}

impl Options {
    pub fn census(&self) -> CensusOptions {
        CensusOptions {
            scan_samples: self.scan_samples,
            rho_samples: self.rho_samples,
            origin: None,
            xtol: self.xtol,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StripDefinition {
    pub name: String,
    pub curve: CurveSpec,
    pub ruling: RulingSpec,
    pub options: Options,
}

/// A value together with the line it came from.
struct Entry {
    value: String,
    line: usize,
}

type Section = BTreeMap<String, Entry>;

const CURVE_KEYS: &[&str] = &["name", "period", "charts", "x", "y", "z", "x2", "y2", "z2"];
const RULING_KEYS: &[&str] = &["mode", "xi_x", "xi_y", "xi_z", "p", "q", "r"];
const OPTION_KEYS: &[&str] = &["half_width", "scan_samples", "rho_samples", "xtol"];

impl StripDefinition {
    pub fn load(path: &Path) -> Result<Self, DefinitionError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => DefinitionError::NotFound { path: shown.clone() },
            _ => DefinitionError::Io {
                path: shown.clone(),
                source: e,
            },
        })?;
        Self::parse(&text, &shown)
    }

    /// Parses definition text; `origin` names the source in error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self, DefinitionError> {
        let err = |line: usize, message: String| DefinitionError::Line {
            origin: origin.to_string(),
            line,
            message,
        };
        let mut sections: BTreeMap<String, Section> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(rest) = body.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(line, format!("malformed section header `{body}`")))?
                    .trim();
                if !matches!(name, "curve" | "ruling" | "options") {
                    return Err(err(line, format!("unknown section `[{name}]`")));
                }
                if sections.contains_key(name) {
                    return Err(err(line, format!("duplicate section `[{name}]`")));
                }
                sections.insert(name.to_string(), Section::new());
                current = Some(name.to_string());
                continue;
            }
            let Some(sec) = current.as_deref() else {
                return Err(err(line, "key outside of any section".into()));
            };
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, found `{body}`")))?;
            let (k, v) = (k.trim(), v.trim());
            let allowed = match sec {
                "curve" => CURVE_KEYS,
                "ruling" => RULING_KEYS,
                _ => OPTION_KEYS,
            };
            if !allowed.contains(&k) {
                return Err(err(line, format!("unknown key `{k}` in [{sec}]")));
            }
            if v.is_empty() {
                return Err(err(line, format!("empty value for `{k}`")));
            }
            let s = sections.get_mut(sec).expect("section exists");
            if s.contains_key(k) {
                return Err(err(line, format!("duplicate key `{k}`")));
            }
            s.insert(
                k.to_string(),
                Entry {
                    value: v.to_string(),
                    line,
                },
            );
        }

        let missing = |message: String| DefinitionError::Missing {
            origin: origin.to_string(),
            message,
        };
        let empty = Section::new();
        let curve = sections.get("curve").ok_or_else(|| missing("missing [curve] section".into()))?;
        let ruling = sections.get("ruling").ok_or_else(|| missing("missing [ruling] section".into()))?;
        let options = sections.get("options").unwrap_or(&empty);

        let expr = |sec: &Section, sname: &str, key: &str| -> Result<Expr, DefinitionError> {
            let e = sec
                .get(key)
                .ok_or_else(|| missing(format!("[{sname}] requires `{key}`")))?;
            parse(&e.value).map_err(|pe| err(e.line, format!("`{key}`: {pe}")))
        };
        let triple = |sec: &Section, sname: &str, keys: [&str; 3]| -> Result<[Expr; 3], DefinitionError> {
            Ok([expr(sec, sname, keys[0])?, expr(sec, sname, keys[1])?, expr(sec, sname, keys[2])?])
        };

        let name = curve
            .get("name")
            .map(|e| e.value.clone())
            .ok_or_else(|| missing("[curve] requires `name`".into()))?;
        let curve_spec = match (curve.get("period"), curve.get("charts")) {
            (Some(_), Some(e)) => return Err(err(e.line, "`period` and `charts` are mutually exclusive".into())),
            (None, None) => return Err(missing("[curve] requires `period` or `charts = 2`".into())),
            (Some(e), None) => {
                if let Some(k) = ["x2", "y2", "z2"].iter().find_map(|k| curve.get(*k)) {
                    return Err(err(k.line, "second-chart components need `charts = 2`".into()));
                }
                let pe = parse(&e.value).map_err(|pe| err(e.line, format!("`period`: {pe}")))?;
                let period = eval(&pe, 0.0, &NoSymbols)
                    .ok()
                    .filter(|p| p.is_finite() && *p > 0.0)
                    .ok_or_else(|| err(e.line, format!("`period` must be a positive constant, got `{}`", e.value)))?;
                CurveSpec::Periodic {
                    period,
                    xyz: triple(curve, "curve", ["x", "y", "z"])?,
                }
            }
            (None, Some(e)) => {
                if e.value != "2" {
                    return Err(err(e.line, format!("only `charts = 2` is supported, got `{}`", e.value)));
                }
                CurveSpec::TwoChart {
                    chart1: triple(curve, "curve", ["x", "y", "z"])?,
                    chart2: triple(curve, "curve", ["x2", "y2", "z2"])?,
                }
            }
        };

        let mode = ruling
            .get("mode")
            .ok_or_else(|| missing("[ruling] requires `mode`".into()))?;
        let used: &[&str] = match mode.value.as_str() {
            "explicit" => &["xi_x", "xi_y", "xi_z"],
            "frenet" => &["p", "q", "r"],
            "darboux" => &[],
            other => {
                return Err(err(
                    mode.line,
                    format!("unknown ruling mode `{other}` (expected explicit, frenet or darboux)"),
                ))
            }
        };
        if let Some((k, e)) = ruling.iter().find(|(k, _)| *k != "mode" && !used.contains(&k.as_str())) {
            return Err(err(e.line, format!("`{k}` is not used by mode `{}`", mode.value)));
        }
        let ruling_spec = match mode.value.as_str() {
            "explicit" => RulingSpec::Explicit(triple(ruling, "ruling", ["xi_x", "xi_y", "xi_z"])?),
            "frenet" => RulingSpec::Frenet {
                p: expr(ruling, "ruling", "p")?,
                q: expr(ruling, "ruling", "q")?,
                r: expr(ruling, "ruling", "r")?,
            },
            _ => RulingSpec::Darboux,
        };
        // Curve components and explicit rulings are plain functions of s.
        let plain = |sec: &Section, keys: &[&str], es: &[&Expr]| -> Result<(), DefinitionError> {
            match keys.iter().zip(es).find(|(_, e)| e.mentions_any_symbol()) {
                Some((k, _)) => Err(err(
                    sec.get(*k).map_or(0, |e| e.line),
                    format!("`{k}` may not use kappa, tau, speed or sigma"),
                )),
                None => Ok(()),
            }
        };
        match &curve_spec {
            CurveSpec::Periodic { xyz, .. } => plain(curve, &["x", "y", "z"], &xyz.iter().collect::<Vec<_>>())?,
            CurveSpec::TwoChart { chart1, chart2 } => plain(
                curve,
                &["x", "y", "z", "x2", "y2", "z2"],
                &chart1.iter().chain(chart2).collect::<Vec<_>>(),
            )?,
        }
        if let RulingSpec::Explicit(x) = &ruling_spec {
            plain(ruling, &["xi_x", "xi_y", "xi_z"], &x.iter().collect::<Vec<_>>())?;
        }

        let mut opts = Options::default();
        for (k, e) in options {
            let bad = || err(e.line, format!("invalid value `{}` for `{k}`", e.value));
            match k.as_str() {
                "half_width" => {
                    opts.half_width = e.value.parse().ok().filter(|w: &f64| *w > 0.0 && w.is_finite()).ok_or_else(bad)?
                }
                "scan_samples" => opts.scan_samples = e.value.parse().ok().filter(|n| *n >= 64).ok_or_else(bad)?,
                "rho_samples" => opts.rho_samples = e.value.parse().ok().filter(|n| *n >= 16).ok_or_else(bad)?,
                _ => opts.xtol = e.value.parse().ok().filter(|x: &f64| *x > 0.0).ok_or_else(bad)?,
            }
        }

        Ok(StripDefinition {
            name,
            curve: curve_spec,
            ruling: ruling_spec,
            options: opts,
        })
    }

    /// Writes the definition back out in the file format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "[curve]\nname = {}", self.name);
        match &self.curve {
            CurveSpec::Periodic { period, xyz } => {
                let _ = writeln!(out, "period = {period:?}");
                for (k, e) in ["x", "y", "z"].iter().zip(xyz) {
                    let _ = writeln!(out, "{k} = {e}");
                }
            }
            CurveSpec::TwoChart { chart1, chart2 } => {
                let _ = writeln!(out, "charts = 2");
                for (k, e) in ["x", "y", "z", "x2", "y2", "z2"].iter().zip(chart1.iter().chain(chart2)) {
                    let _ = writeln!(out, "{k} = {e}");
                }
            }
        }
        let _ = writeln!(out, "\n[ruling]\nmode = {}", self.ruling.mode());
        match &self.ruling {
            RulingSpec::Explicit(x) => {
                for (k, e) in ["xi_x", "xi_y", "xi_z"].iter().zip(x) {
                    let _ = writeln!(out, "{k} = {e}");
                }
            }
            RulingSpec::Frenet { p, q, r } => {
                let _ = writeln!(out, "p = {p}\nq = {q}\nr = {r}");
            }
            RulingSpec::Darboux => {}
        }
        let o = &self.options;
        let _ = writeln!(
            out,
            "\n[options]\nhalf_width = {:?}\nscan_samples = {}\nrho_samples = {}\nxtol = {:?}",
            o.half_width, o.scan_samples, o.rho_samples, o.xtol
        );
        out
    }

    pub fn build(&self) -> Result<RuledStrip, DefinitionError> {
        let wrap = |e: striplab_core::StripError| DefinitionError::Build {
            origin: self.name.clone(),
            source: e,
        };
        let curve = match &self.curve {
            CurveSpec::Periodic { period, xyz } => {
                CurveR3::periodic(self.name.clone(), xyz.clone(), *period).map_err(|e| wrap(e.into()))?
            }
            CurveSpec::TwoChart { chart1, chart2 } => CurveR3::atlas(self.name.clone(), chart1.clone(), chart2.clone()),
        };
        let ruling = match &self.ruling {
            RulingSpec::Explicit(x) => RulingField::Explicit(x.clone()),
            RulingSpec::Frenet { p, q, r } => RulingField::FrenetCombination {
                p: p.clone(),
                q: q.clone(),
                r: r.clone(),
            },
            RulingSpec::Darboux => RulingField::Darboux,
        };
        RuledStrip::new(curve, ruling, self.options.half_width).map_err(wrap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CYL: &str = "[curve]\nname = c\nperiod = 2*pi\nx = cos(s)\ny = sin(s)\nz = 0\n\n[ruling]\nmode = explicit\nxi_x = 0\nxi_y = 0\nxi_z = 1\n";

    fn line_of(e: DefinitionError) -> usize {
        match e {
            DefinitionError::Line { line, .. } => line,
            other => panic!("expected a line error, got {other}"),
        }
    }

    #[test]
    fn parses_minimal_file() {
        let d = StripDefinition::parse(CYL, "t").unwrap();
        assert!(matches!(d.curve, CurveSpec::Periodic { period, .. } if (period - 2.0 * std::f64::consts::PI).abs() < 1e-15));
        assert_eq!(d.ruling.mode(), "explicit");
        assert_eq!(d.options, Options::default());
    }

    #[test]
    fn comments_and_blank_lines() {
        let t = format!("# top\n\n{}", CYL.replace("z = 0", "z = 0   # flat"));
        assert!(StripDefinition::parse(&t, "t").is_ok());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = CYL.replace("y = sin(s)", "y = sin(s");
        assert_eq!(line_of(StripDefinition::parse(&bad, "t").unwrap_err()), 5);
        let bad = CYL.replace("mode = explicit", "mode = sideways");
        assert_eq!(line_of(StripDefinition::parse(&bad, "t").unwrap_err()), 9);
        let bad = CYL.replace("z = 0", "w = 0");
        assert_eq!(line_of(StripDefinition::parse(&bad, "t").unwrap_err()), 6);
        let bad = CYL.replace("xi_z = 1", "xi_z = kappa");
        assert_eq!(line_of(StripDefinition::parse(&bad, "t").unwrap_err()), 12);
        let bad = format!("{CYL}p = 1\n");
        assert_eq!(line_of(StripDefinition::parse(&bad, "t").unwrap_err()), 13);
        let bad = format!("x = 1\n{CYL}");
        assert_eq!(line_of(StripDefinition::parse(&bad, "t").unwrap_err()), 1);
    }

    #[test]
    fn missing_keys_are_reported() {
        let bad = CYL.replace("xi_y = 0\n", "");
        let e = StripDefinition::parse(&bad, "t").unwrap_err().to_string();
        assert!(e.contains("xi_y"), "{e}");
        let bad = CYL.replace("period = 2*pi\n", "");
        assert!(StripDefinition::parse(&bad, "t").is_err());
    }

    #[test]
    fn serializer_round_trips() {
        let d = StripDefinition::parse(CYL, "t").unwrap();
        let again = StripDefinition::parse(&d.to_text(), "t").unwrap();
        assert_eq!(d, again);
    }
}
