use std::path::Path;
use std::process::Command;

use striplab::commands::{self, EXIT_INPUT, EXIT_OK, EXIT_VERIFY};
use striplab::definition::CurveSpec;
use striplab::StripDefinition;
use striplab_core::singular::singular_u;

fn striplab(args: &[&str], env: &[(&str, &str)]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_striplab"))
        .args(args)
        .envs(env.iter().copied())
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn run(args: &[&str]) -> (i32, String, String) {
    striplab(args, &[])
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

const CYLINDER: &str = "[curve]\nname = cylinder\nperiod = 2*pi\nx = cos(s)\ny = sin(s)\nz = 0\n\n[ruling]\nmode = explicit\nxi_x = 0\nxi_y = 0\nxi_z = 1\n";

#[test]
fn serializer_round_trips_to_the_same_analysis() {
    let d = commands::load_target("example-1").unwrap();
    let again = StripDefinition::parse(&d.to_text(), "serialized").unwrap();
    assert_eq!(d, again);
    let (a, b) = (commands::analyze(&d).unwrap(), commands::analyze(&again).unwrap());
    assert_eq!(a.points.len(), b.points.len());
    for (p, q) in a.points.iter().zip(&b.points) {
        assert!((p.s - q.s).abs() < 1e-9 && (p.u - q.u).abs() < 1e-9 && p.class == q.class);
    }
    let d2 = commands::load_target("example-2").unwrap();
    assert!(matches!(d2.curve, CurveSpec::TwoChart { .. }));
    assert_eq!(StripDefinition::parse(&d2.to_text(), "serialized").unwrap(), d2);
}

#[test]
fn examples_are_listed() {
    let (code, out, _) = run(&["examples"]);
    assert_eq!(code, EXIT_OK);
    let names: Vec<&str> = out.lines().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(names, ["example-1", "example-2"]);
}

#[test]
fn analyze_reports_json() {
    let (code, out, _) = run(&["analyze", "example-1"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["non_ce_count"], 1);
    assert_eq!(v["points"][0]["class"], "NonFrontPoint");
    assert_eq!(v["proposition"]["pass"], true);
    assert!(v.get("theorem").is_none(), "theorem is only reported for darboux rulings");
}

#[test]
fn cylinder_has_no_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "c.strip", CYLINDER);
    let (code, out, _) = run(&["analyze", &f]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["validation"]["is_mobius"], false);
    assert!(v.get("proposition").is_none() && v.get("theorem").is_none());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cyl = write(dir.path(), "c.strip", CYLINDER);
    let bad_mode = write(dir.path(), "m.strip", &CYLINDER.replace("explicit", "spiral"));
    let twisted = write(
        dir.path(),
        "t.strip",
        &CYLINDER
            .replace("xi_x = 0", "xi_x = cos(s/2)*cos(s)")
            .replace("xi_y = 0", "xi_y = cos(s/2)*sin(s)")
            .replace("xi_z = 1", "xi_z = sin(s/2)"),
    );
    let out = dir.path().join("o").display().to_string();
    let cases: Vec<(Vec<&str>, i32, &str)> = vec![
        (vec!["--help"], EXIT_OK, ""),
        (vec![], EXIT_INPUT, ""),
        (vec!["analyze"], EXIT_INPUT, ""),
        (vec!["analyze", "nope.strip"], EXIT_INPUT, "file not found"),
        (vec!["analyze", &bad_mode], EXIT_INPUT, "m.strip:9"),
        (vec!["analyze", &twisted], EXIT_VERIFY, "not developable"),
        (vec!["verify", &twisted, "--claim", "proposition"], EXIT_INPUT, "not a developable strip"),
        (vec!["verify", &cyl, "--claim", "theorem"], EXIT_INPUT, "not a rectifying strip"),
        (vec!["verify", "example-1", "--claim", "lemma"], EXIT_INPUT, ""),
        (vec!["series", "example-1", "--samples", "0"], EXIT_INPUT, "samples"),
        (vec!["mesh", "example-1", "--s-steps", "1", "--out", &out], EXIT_INPUT, "at least 2"),
        (vec!["mesh", "example-1", "--out", "/nonexistent/x.obj"], EXIT_INPUT, "x.obj"),
        (vec!["mesh", &cyl, "--s-steps", "8", "--u-steps", "2", "--out", &out], EXIT_OK, ""),
    ];
    for (args, want, needle) in cases {
        let (code, _, err) = run(&args);
        assert_eq!(code, want, "{args:?}: {err}");
        assert!(err.contains(needle), "{args:?}: {err}");
    }
}

#[test]
fn verify_theorem_on_example2() {
    let (code, out, _) = run(&["verify", "example-2", "--claim", "theorem"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("PASS theorem") && out.contains("count 3 >= 3"), "{out}");
}

#[test]
fn example2_rho_sign_changes() {
    let rows = commands::series(&commands::load_target("example-2").unwrap(), 2000).unwrap();
    let st = commands::load_target("example-2").unwrap().build().unwrap();
    let rho: Vec<(f64, f64)> = rows.iter().filter_map(|r| Some((r[0]?, r[2]?))).collect();
    let changes: Vec<f64> = rho
        .windows(2)
        .filter(|w| (w[0].1 < 0.0) != (w[1].1 < 0.0))
        .map(|w| (0.5 * (w[0].0 + w[1].0) * 0.5).tan())
        .collect();
    assert_eq!(changes.len(), 2, "{changes:?}");
    assert!((changes[0] + changes[1]).abs() < 1e-2 && (changes[1] - 1.4915).abs() < 1e-2);
    // The point at infinity: first row sits at the second chart's origin.
    let first = rows[0];
    assert_eq!(st.curve().chart_point(first[0].unwrap()).chart, 2);
    assert!(first[2].unwrap().abs() < 1e-9);
    assert!(rows.iter().all(|r| r[7].is_some() && r[8].is_some()));
}

#[test]
fn series_to_stdout_matches_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("s.csv");
    let (code, stdout, _) = run(&["series", "example-1", "--samples", "50"]);
    assert_eq!(code, EXIT_OK);
    run(&["series", "example-1", "--samples", "50", "--csv", f.to_str().unwrap()]);
    assert_eq!(std::fs::read_to_string(f).unwrap(), stdout);
    assert_eq!(stdout.lines().count(), 51);
}

#[test]
fn thread_count_does_not_change_output() {
    let (_, a, _) = striplab(&["series", "example-1", "--samples", "64"], &[("STRIPLAB_THREADS", "1")]);
    let (_, b, _) = striplab(&["series", "example-1", "--samples", "64"], &[("STRIPLAB_THREADS", "0")]);
    assert_eq!(a, b);
    let (code, _, err) = striplab(&["examples"], &[("STRIPLAB_THREADS", "many")]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("STRIPLAB_THREADS"));
}

fn obj_vertices(text: &str) -> Vec<[f64; 3]> {
    text.lines()
        .filter_map(|l| l.strip_prefix("v "))
        .map(|l| {
            let c: Vec<f64> = l.split(' ').map(|x| x.parse().unwrap()).collect();
            [c[0], c[1], c[2]]
        })
        .collect()
}

fn obj_faces(text: &str) -> Vec<[usize; 4]> {
    text.lines()
        .filter_map(|l| l.strip_prefix("f "))
        .map(|l| {
            let c: Vec<usize> = l.split(' ').map(|x| x.parse().unwrap()).collect();
            [c[0], c[1], c[2], c[3]]
        })
        .collect()
}

#[test]
fn cylinder_mesh_closes() {
    let dir = tempfile::tempdir().unwrap();
    let cyl = write(dir.path(), "c.strip", CYLINDER);
    let out = dir.path().join("c.obj");
    let (code, _, _) = run(&["mesh", &cyl, "--s-steps", "16", "--u-steps", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let text = std::fs::read_to_string(&out).unwrap();
    let v = obj_vertices(&text);
    let f = obj_faces(&text);
    assert_eq!((v.len(), f.len()), (48, 32));
    // Every ring is joined to the next one, the last back to the first.
    let ring = |i: usize| (i - 1) / 3;
    for q in &f {
        let rings: Vec<usize> = q.iter().map(|&i| ring(i)).collect();
        let (lo, hi) = (*rings.iter().min().unwrap(), *rings.iter().max().unwrap());
        assert!(hi - lo == 1 || (lo, hi) == (0, 15), "{q:?}");
    }
    assert!(f.iter().any(|q| q.iter().any(|&i| ring(i) == 0) && q.iter().any(|&i| ring(i) == 15)));
}

#[test]
fn mobius_mesh_seam_is_flipped() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.obj");
    let (code, _, _) = run(&["mesh", "example-1", "--s-steps", "40", "--u-steps", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let text = std::fs::read_to_string(&out).unwrap();
    let (v, f) = (obj_vertices(&text), obj_faces(&text));
    assert_eq!((v.len(), f.len()), (200, 160));
    // The seam joins u on the last ring to -u on the first.
    let seam: Vec<&[usize; 4]> = f.iter().filter(|q| q.iter().any(|&i| (i - 1) / 5 == 39) && q.iter().any(|&i| (i - 1) / 5 == 0)).collect();
    assert_eq!(seam.len(), 4);
    for q in seam {
        for w in q.windows(2) {
            let (a, b) = (w[0] - 1, w[1] - 1);
            if a / 5 != b / 5 {
                assert_eq!(a % 5 + b % 5, 4, "{q:?}");
            }
        }
    }
}

#[test]
fn adaptive_mesh_reaches_the_singular_curve() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.obj");
    let (code, _, _) = run(&[
        "mesh", "example-2", "--s-steps", "60", "--u-steps", "11", "--adaptive", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let text = std::fs::read_to_string(&out).unwrap();
    let v = obj_vertices(&text);
    assert_eq!(v.len(), 660);
    let st = commands::load_target("example-2").unwrap().build().unwrap();
    let (o, l) = (st.origin(), st.period());
    let mut checked = 0;
    for i in 0..60 {
        let s = o + l * i as f64 / 60.0;
        let Ok(u) = singular_u(&st, s) else { continue };
        if u.abs() >= 10.0 {
            continue;
        }
        // Ruling parameter of each vertex, recovered from the geometry.
        let g = st.curve().point(s).unwrap();
        let x = st.xi(s).unwrap();
        let us: Vec<f64> = (0..11)
            .map(|k| {
                let p = v[i * 11 + k];
                ((p[0] - g.x) * x.x + (p[1] - g.y) * x.y + (p[2] - g.z) * x.z) / x.norm_squared()
            })
            .collect();
        let (lo, hi) = (us[0].min(us[10]), us[0].max(us[10]));
        assert!(lo < u && u < hi, "s = {s}: u(s) = {u} outside [{lo}, {hi}]");
        checked += 1;
    }
    assert!(checked > 30);
}
