use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use striplab_core::numeric::fmt_sig9;
use striplab_core::rectify::{check_theorem, extended_frame, geodesic_residual, sigma_hat_prime};
use striplab_core::singular::{
    check_proposition, enumerate_non_ce, p_integral, point_data, singular_arcs, xi_prime_norm, xi_zero_components,
    PointData, U_CUTOFF,
};
use striplab_core::{Census, RuledStrip, RulingField, StripError};
use thiserror::Error;

use crate::definition::{DefinitionError, StripDefinition};
use crate::examples;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;

pub const SERIES_HEADER: [&str; 9] = [
    "s",
    "u_singular",
    "rho",
    "rho_prime",
    "P",
    "nu_prime_norm",
    "xi_prime_norm",
    "sigma_hat",
    "sigma_hat_prime",
];

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Definition(#[from] DefinitionError),
    #[error("{0}")]
    Strip(#[from] StripError),
    #[error("{path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

/// A built-in example name or a path to a definition file.
pub fn load_target(target: &str) -> Result<StripDefinition, CliError> {
    match examples::source(target) {
        Some(text) => Ok(StripDefinition::parse(text, target)?),
        None => Ok(StripDefinition::load(Path::new(target))?),
    }
}

fn r9(x: f64) -> f64 {
    fmt_sig9(x).parse().unwrap_or(x)
}

#[derive(Debug, Clone, Serialize)]
pub struct Validation {
    pub is_mobius: bool,
    pub is_flat: bool,
    pub max_flatness_defect: f64,
    pub max_odd_periodicity_defect: f64,
    pub max_periodicity_defect: f64,
    pub min_independence: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geodesic_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentSummary {
    pub start: f64,
    pub end: f64,
    pub orientation: f64,
    pub non_ce: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointSummary {
    pub s: f64,
    pub chart: u8,
    pub chart_coord: f64,
    /// First-chart coordinate tan(s/2) of a two-chart curve; absent at infinity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chart1_coord: Option<f64>,
    pub u: f64,
    pub class: String,
    pub rho: f64,
    pub rho_prime: f64,
    pub nu_prime_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub count: usize,
    pub required: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extrema_components: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub name: String,
    pub mode: String,
    pub period: f64,
    pub origin: f64,
    pub validation: Validation,
    pub xi_zero_components: Vec<(f64, f64)>,
    pub components: Vec<ComponentSummary>,
    pub points: Vec<PointSummary>,
    pub non_ce_count: usize,
    pub sampled: usize,
    pub sampled_non_ce: usize,
    pub excluded_at_infinity: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proposition: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorem: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub elapsed_ms: u64,
}

impl AnalysisReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
            && self.proposition.as_ref().is_none_or(|v| v.pass) && self.theorem.as_ref().is_none_or(|v| v.pass)
    }
}

fn is_darboux(st: &RuledStrip) -> bool {
    matches!(st.ruling(), RulingField::Darboux)
}

fn proposition_verdict(st: &RuledStrip, census: &Census) -> Result<Option<Verdict>, CliError> {
    let p = check_proposition(st, Some(census))?;
    Ok(p.applicable.then(|| Verdict {
        pass: p.pass,
        count: p.non_ce_count,
        required: 1,
        extrema_components: None,
        error: None,
    }))
}

fn theorem_verdict(st: &RuledStrip, census: &Census, samples: usize) -> Verdict {
    match check_theorem(st, census, samples) {
        Ok(t) => Verdict {
            pass: t.pass,
            count: t.non_ce_count,
            required: 3,
            extrema_components: Some(t.extrema_components),
            error: None,
        },
        Err(e) => Verdict {
            pass: false,
            count: census.non_ce_count(),
            required: 3,
            extrema_components: None,
            error: Some(e.to_string()),
        },
    }
}

pub fn analyze(def: &StripDefinition) -> Result<AnalysisReport, CliError> {
    let t0 = Instant::now();
    let st = def.build()?;
    st.curve().validate(def.options.scan_samples.min(1024)).map_err(StripError::from)?;
    let m = st.validate_mobius(512)?;
    let geodesic = if is_darboux(&st) {
        Some(r9(geodesic_residual(&st, 200)?.1))
    } else {
        None
    };
    let validation = Validation {
        is_mobius: m.is_mobius,
        is_flat: m.is_flat,
        max_flatness_defect: r9(m.max_flatness_defect),
        max_odd_periodicity_defect: r9(m.max_odd_periodicity_defect),
        max_periodicity_defect: r9(m.max_periodicity_defect),
        min_independence: r9(m.min_independence),
        geodesic_residual: geodesic,
    };
    if !m.is_flat {
        // The singular-set analysis only applies to developable strips.
        return Ok(AnalysisReport {
            name: def.name.clone(),
            mode: def.ruling.mode().to_string(),
            period: r9(st.period()),
            origin: r9(st.origin()),
            validation,
            xi_zero_components: vec![],
            components: vec![],
            points: vec![],
            non_ce_count: 0,
            sampled: 0,
            sampled_non_ce: 0,
            excluded_at_infinity: 0,
            proposition: None,
            theorem: None,
            failure: Some(format!(
                "strip is not developable (flatness defect {})",
                fmt_sig9(m.max_flatness_defect)
            )),
            elapsed_ms: t0.elapsed().as_millis() as u64,
        });
    }
    let census = enumerate_non_ce(&st, &def.options.census())?;
    let proposition = proposition_verdict(&st, &census)?;
    let theorem = is_darboux(&st).then(|| theorem_verdict(&st, &census, def.options.scan_samples));
    let c = st.curve();
    Ok(AnalysisReport {
        name: def.name.clone(),
        mode: def.ruling.mode().to_string(),
        period: r9(census.period),
        origin: r9(census.origin),
        validation,
        xi_zero_components: census.xi_zero_components.iter().map(|&(a, b)| (r9(a), r9(b))).collect(),
        components: census
            .components
            .iter()
            .map(|k| ComponentSummary {
                start: r9(k.start),
                end: r9(k.end),
                orientation: k.orientation,
                non_ce: k.points.len(),
            })
            .collect(),
        points: census
            .points
            .iter()
            .map(|p| {
                let cp = c.chart_point(p.s);
                PointSummary {
                    s: r9(p.s),
                    chart: cp.chart,
                    chart_coord: r9(cp.coord),
                    chart1_coord: Some((0.5 * p.s).tan()).filter(|t| c.is_atlas() && t.abs() <= 1e6).map(r9),
                    u: r9(p.u),
                    class: p.class.to_string(),
                    rho: r9(p.rho),
                    rho_prime: r9(p.rho_prime),
                    nu_prime_norm: r9(p.nu_prime_norm),
                }
            })
            .collect(),
        non_ce_count: census.non_ce_count(),
        sampled: census.sampled,
        sampled_non_ce: census.sampled_non_ce,
        excluded_at_infinity: census.excluded_at_infinity,
        proposition,
        theorem,
        failure: None,
        elapsed_ms: t0.elapsed().as_millis() as u64,
    })
}

pub fn cmd_analyze(target: &str, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let report = match load_target(target).and_then(|d| analyze(&d)) {
        Ok(r) => r,
        Err(e) => return fail_input(err, &e),
    };
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    if report.passed() {
        EXIT_OK
    } else {
        match &report.failure {
            Some(f) => {
                let _ = writeln!(err, "verification failed: {f}");
            }
            None => {
                let _ = writeln!(err, "verification FAILED for a validated strip; see the report");
            }
        }
        EXIT_VERIFY
    }
}

fn fail_input(err: &mut dyn Write, e: &CliError) -> i32 {
    let _ = writeln!(err, "error: {e}");
    EXIT_INPUT
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Claim {
    Proposition,
    Theorem,
}

pub fn cmd_verify(target: &str, claim: Claim, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let run = || -> Result<Result<Verdict, String>, CliError> {
        let def = load_target(target)?;
        let st = def.build()?;
        if claim == Claim::Theorem && !is_darboux(&st) {
            return Ok(Err(format!(
                "theorem not applicable: not a rectifying strip (ruling mode is {})",
                def.ruling.mode()
            )));
        }
        if claim == Claim::Proposition {
            let m = st.validate_mobius(512)?;
            if !m.is_mobius {
                return Ok(Err("proposition not applicable: not a Möbius strip".into()));
            }
            if !m.is_flat {
                return Ok(Err("proposition not applicable: not a developable strip".into()));
            }
        }
        let census = enumerate_non_ce(&st, &def.options.census())?;
        Ok(Ok(match claim {
            Claim::Proposition => proposition_verdict(&st, &census)?.expect("checked above"),
            Claim::Theorem => theorem_verdict(&st, &census, def.options.scan_samples),
        }))
    };
    let name = match claim {
        Claim::Proposition => "proposition",
        Claim::Theorem => "theorem",
    };
    match run() {
        Err(e) => fail_input(err, &e),
        Ok(Err(why)) => {
            let _ = writeln!(err, "error: {why}");
            EXIT_INPUT
        }
        Ok(Ok(v)) => {
            let cmp = if v.count >= v.required { ">=" } else { "<" };
            let mut line = format!(
                "{} {name}: {} non-cuspidal-edge singular points (count {} {cmp} {})",
                if v.pass { "PASS" } else { "FAIL" },
                v.count,
                v.count,
                v.required
            );
            if let Some(k) = v.extrema_components {
                line.push_str(&format!(", {k} conical-curvature extrema components"));
            }
            if let Some(e) = &v.error {
                line.push_str(&format!(", {e}"));
            }
            let _ = writeln!(out, "{line}");
            if v.pass {
                EXIT_OK
            } else {
                let _ = writeln!(err, "FAIL on a validated strip: the {name} should hold here");
                EXIT_VERIFY
            }
        }
    }
}

/// One CSV row; `None` cells are written empty.
pub type SeriesRecord = [Option<f64>; 9];

/// Samples the singular-set quantities at `samples` evenly spaced points of
/// one period. P is measured from the first sample of each component.
pub fn series(def: &StripDefinition, samples: usize) -> Result<Vec<SeriesRecord>, CliError> {
    if samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    let st = def.build()?;
    let (o, l) = (st.origin(), st.period());
    let zeros = xi_zero_components(&st, def.options.scan_samples, o)?;
    let arcs = singular_arcs(&zeros, l);
    let darboux = is_darboux(&st);
    let xs: Vec<f64> = (0..samples).map(|i| o + l * i as f64 / samples as f64).collect();
    // Arc index and the parameter shifted into that arc.
    let placed: Vec<Option<(usize, f64)>> = xs
        .iter()
        .map(|&s| {
            arcs.iter().enumerate().find_map(|(i, &(a, b))| {
                let k = ((s - a) / l).floor();
                let t = s - k * l;
                (t > a && t < b).then_some((i, t))
            })
        })
        .collect();
    let rows: Vec<(SeriesRecord, Option<PointData>)> = xs
        .par_iter()
        .zip(&placed)
        .map(|(&s, place)| {
            let mut r: SeriesRecord = [None; 9];
            r[0] = Some(s);
            let shifted = place.and_then(|(_, t)| point_data(&st, t).ok());
            if place.is_some() {
                if let Ok(d) = point_data(&st, s) {
                    if d.u.abs() <= U_CUTOFF {
                        r[1] = Some(d.u);
                        r[2] = Some(d.rho);
                        r[3] = Some(d.rho_prime);
                    }
                }
            }
            r[5] = st.nu_prime_norm(s).ok();
            r[6] = xi_prime_norm(&st, s).ok();
            if darboux {
                r[7] = extended_frame(&st, s).ok().map(|f| f.sigma_hat);
                r[8] = sigma_hat_prime(&st, s).ok();
            }
            (r, shifted)
        })
        .collect();
    let mut records: Vec<SeriesRecord> = rows.iter().map(|(r, _)| *r).collect();
    for arc in 0..arcs.len() {
        let mut members: Vec<(f64, usize)> = placed
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.filter(|(k, _)| *k == arc).map(|(_, t)| (t, i)))
            .collect();
        members.sort_by(|a, b| a.0.total_cmp(&b.0));
        let steps: Vec<Option<f64>> = members
            .par_windows(2)
            .map(|w| p_integral(&st, w[0].0, w[1].0).ok())
            .collect();
        let mut acc = Some(0.0);
        for (j, &(_, i)) in members.iter().enumerate() {
            if j > 0 {
                acc = acc.zip(steps[j - 1]).map(|(a, b)| a + b);
            }
            if records[i][1].is_some() {
                records[i][4] = acc.zip(rows[i].1).map(|(a, d)| -d.u_bar - a);
            }
        }
    }
    Ok(records)
}

pub fn write_series_csv(records: &[SeriesRecord], sink: impl Write) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    w.write_record(SERIES_HEADER)?;
    for r in records {
        w.write_record(r.iter().map(|c| c.map(fmt_sig9).unwrap_or_default()))?;
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<std::fs::File, CliError> {
    std::fs::File::create(path).map_err(|e| CliError::Write {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn cmd_series(target: &str, samples: usize, csv_path: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut run = || -> Result<(), CliError> {
        let records = series(&load_target(target)?, samples)?;
        let to_err = |e: csv::Error, p: &str| CliError::Write {
            path: p.to_string(),
            source: std::io::Error::other(e),
        };
        match csv_path {
            Some(p) => write_series_csv(&records, create(p)?).map_err(|e| to_err(e, &p.display().to_string())),
            None => write_series_csv(&records, &mut *out).map_err(|e| to_err(e, "<stdout>")),
        }
    };
    match run() {
        Ok(()) => EXIT_OK,
        Err(e) => fail_input(err, &e),
    }
}

#[derive(Debug, Clone)]
pub struct MeshArgs {
    pub s_steps: usize,
    pub u_steps: usize,
    pub u_range: Option<(f64, f64)>,
    pub out: PathBuf,
    pub adaptive: bool,
}

pub fn cmd_mesh(target: &str, args: &MeshArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let run = || -> Result<usize, CliError> {
        let st = load_target(target)?.build()?;
        let w = st.half_width();
        let range = args.u_range.unwrap_or((-w, w));
        let mesh = if args.adaptive {
            st.make_mesh_adaptive(args.s_steps, args.u_steps, range)?
        } else {
            st.make_mesh(args.s_steps, args.u_steps, range)?
        };
        let mut f = create(&args.out)?;
        f.write_all(mesh.to_obj().as_bytes()).map_err(|e| CliError::Write {
            path: args.out.display().to_string(),
            source: e,
        })?;
        Ok(mesh.vertices.len())
    };
    match run() {
        Ok(n) => {
            let _ = writeln!(out, "wrote {n} vertices to {}", args.out.display());
            EXIT_OK
        }
        Err(e) => fail_input(err, &e),
    }
}

pub fn cmd_examples(out: &mut dyn Write) -> i32 {
    for (name, about, _) in examples::CATALOG {
        let _ = writeln!(out, "{name}\t{about}");
    }
    EXIT_OK
}
