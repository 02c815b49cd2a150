use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use daqc_core::hamiltonian::{
    cross_resonance_chain, xy_chain, CouplingKey, PauliAxis, TwoBodyHamiltonian,
};
use daqc_core::optimizer::OptimizationResult;
use daqc_core::scheduler::parse_schedule;
use daqc_core::signmatrix::{subblock, SubBlockKind};
use tempfile::TempDir;

fn daqc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_daqc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_h(dir: &Path, name: &str, h: &TwoBodyHamiltonian) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, h.to_toml_string()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn axis(r: usize) -> PauliAxis {
    PauliAxis::from_rank(r).unwrap()
}

/// All 27 couplings on three qubits with strengths from a fixed formula.
fn dense3(offset: f64, bounded: bool) -> TwoBodyHamiltonian {
    let mut terms = Vec::new();
    let mut k = 0.0;
    for (i, j) in [(1, 2), (1, 3), (2, 3)] {
        for mu in 0..3 {
            for nu in 0..3 {
                k += 1.0;
                let x = (k * 0.7 + offset).sin();
                let v = if bounded {
                    x.signum() * (0.5 + x.abs())
                } else {
                    x
                };
                terms.push((CouplingKey::new(i, j, axis(mu), axis(nu)), v));
            }
        }
    }
    TwoBodyHamiltonian::from_couplings(3, terms).unwrap()
}

fn zz(n: usize, scale: f64) -> TwoBodyHamiltonian {
    let terms: Vec<_> = (1..=n)
        .flat_map(|i| (i + 1..=n).map(move |j| (i, j)))
        .enumerate()
        .map(|(k, (i, j))| {
            (
                CouplingKey::new(i, j, PauliAxis::Z, PauliAxis::Z),
                scale * (1.0 + 0.1 * k as f64),
            )
        })
        .collect();
    TwoBodyHamiltonian::from_couplings(n, terms).unwrap()
}

/// Data rows of a CSV file after the comment and header lines.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# daqc "));
    let body: Vec<&str> = lines.collect();
    let body = body.join("\n");
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn compile_self_simulation_is_one_identity_block() {
    let dir = TempDir::new().unwrap();
    let h = write_h(dir.path(), "h.toml", &dense3(0.0, true));
    let out = dir.path().join("s.toml");
    let o = daqc(&[
        "compile",
        s(&h),
        s(&h),
        "--time",
        "1",
        "--positive",
        "-o",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let sched = parse_schedule(&fs::read_to_string(&out).unwrap(), &dense3(0.0, true)).unwrap();
    assert_eq!(sched.blocks.len(), 1);
    assert!(sched.blocks[0].sandwich.is_identity());
    assert!(stdout(&o).contains("residual                        0.000e0"));
}

#[test]
fn compile_positive_emits_nonnegative_durations() {
    let dir = TempDir::new().unwrap();
    let source = dense3(0.0, true);
    let src = write_h(dir.path(), "s.toml", &source);
    let tgt = write_h(dir.path(), "t.toml", &dense3(1.3, false));
    let out = dir.path().join("sched.toml");
    let o = daqc(&[
        "compile",
        s(&src),
        s(&tgt),
        "-t",
        "0.5",
        "--positive",
        "-o",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let sched = parse_schedule(&fs::read_to_string(&out).unwrap(), &source).unwrap();
    assert!(!sched.blocks.is_empty());
    assert!(sched.blocks.iter().all(|b| b.duration >= 0.0));
}

#[test]
fn compile_error_exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o.toml");
    let z4 = write_h(dir.path(), "z4.toml", &zz(4, 1.0));
    let o = daqc(&[
        "compile",
        s(&z4),
        s(&z4),
        "-t",
        "1",
        "--protocol",
        "zz",
        "-o",
        s(&out),
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("singular"));

    let chain = write_h(dir.path(), "xy.toml", &xy_chain(3, 1.0).unwrap());
    let z3 = write_h(dir.path(), "z3.toml", &zz(3, 1.0));
    let o = daqc(&[
        "compile",
        s(&z3),
        s(&chain),
        "-t",
        "1",
        "--positive",
        "-o",
        s(&out),
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("(1, 2, x, x)"), "{}", stderr(&o));

    let src = write_h(dir.path(), "s.toml", &dense3(0.0, true));
    let tgt = write_h(dir.path(), "t.toml", &dense3(1.3, false));
    let o = daqc(&["compile", s(&src), s(&tgt), "-t", "1", "-o", s(&out)]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(stderr(&o).contains("negative block time"));

    assert_eq!(
        code(&daqc(&[
            "compile",
            s(&src),
            s(&tgt),
            "-t",
            "-1",
            "-o",
            s(&out)
        ])),
        1
    );
    assert_eq!(code(&daqc(&["frobnicate"])), 1);
    assert_eq!(
        code(&daqc(&[
            "compile",
            "/nonexistent",
            s(&tgt),
            "-t",
            "1",
            "-o",
            s(&out)
        ])),
        1
    );
    assert_eq!(code(&daqc(&["--help"])), 0);
}

#[test]
fn verify_sweep_for_commuting_schedule_is_exact() {
    let dir = TempDir::new().unwrap();
    let src = write_h(dir.path(), "s.toml", &zz(3, 1.0));
    let tgt = write_h(dir.path(), "t.toml", &zz(3, 0.4));
    let sched = dir.path().join("sched.toml");
    let csv = dir.path().join("sweep.csv");
    assert_eq!(
        code(&daqc(&[
            "compile",
            s(&src),
            s(&tgt),
            "-t",
            "1",
            "--positive",
            "-o",
            s(&sched)
        ])),
        0
    );
    let o = daqc(&[
        "verify",
        s(&sched),
        "--source",
        s(&src),
        "--target",
        s(&tgt),
        "--sweep",
        "1,2,4,8,16",
        "--csv",
        s(&csv),
        "--tolerance",
        "1e-8",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv_rows(&fs::read_to_string(&csv).unwrap());
    assert_eq!(rows.len(), 5);
    for r in rows {
        assert!(r[1].parse::<f64>().unwrap() < 1e-8, "{r:?}");
    }
}

#[test]
fn verify_sweep_is_bounded_and_decreasing() {
    let dir = TempDir::new().unwrap();
    let src = write_h(dir.path(), "s.toml", &dense3(0.0, true));
    let tgt = write_h(dir.path(), "t.toml", &dense3(1.3, false));
    let sched = dir.path().join("sched.toml");
    assert_eq!(
        code(&daqc(&[
            "compile",
            s(&src),
            s(&tgt),
            "-t",
            "0.05",
            "--positive",
            "-o",
            s(&sched)
        ])),
        0
    );
    let o = daqc(&[
        "verify",
        s(&sched),
        "--source",
        s(&src),
        "--target",
        s(&tgt),
        "--sweep",
        "1,2,4,8,16",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    // The CSV went to standard output, so the report is on standard error.
    assert!(stderr(&o).contains("distance"));
    let rows = csv_rows(&stdout(&o));
    let d: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    let bound: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(d.iter().zip(&bound).all(|(d, b)| d <= b));
    assert!(d.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)), "{d:?}");

    let o = daqc(&[
        "verify",
        s(&sched),
        "--source",
        s(&src),
        "--target",
        s(&tgt),
        "--tolerance",
        "1e-12",
    ]);
    assert_eq!(code(&o), 4);
}

#[test]
fn verify_empty_schedule_at_zero_time() {
    let dir = TempDir::new().unwrap();
    let source = dense3(0.0, true);
    let src = write_h(dir.path(), "s.toml", &source);
    let tgt = write_h(dir.path(), "t.toml", &dense3(1.3, false));
    let sched = dir.path().join("empty.toml");
    fs::write(
        &sched,
        format!(
            "n = 3\ntrotter_steps = 1\ntotal_time = 0.0\nsource_hash = \"{}\"\n",
            source.content_hash()
        ),
    )
    .unwrap();
    let o = daqc(&[
        "verify",
        s(&sched),
        "--source",
        s(&src),
        "--target",
        s(&tgt),
        "--tolerance",
        "0",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(
        stdout(&o).contains("distance                        0.000000e0"),
        "{}",
        stdout(&o)
    );
}

fn fig3_files(dir: &Path, n: usize) -> (PathBuf, PathBuf) {
    let links = vec![[1.0; 3]; n - 1];
    (
        write_h(dir, "cr.toml", &cross_resonance_chain(n, &links).unwrap()),
        write_h(dir, "xy.toml", &xy_chain(n, 1.0).unwrap()),
    )
}

#[test]
fn optimize_improves_on_baseline_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let (src, tgt) = fig3_files(dir.path(), 6);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = daqc(&[
            "optimize",
            s(&src),
            s(&tgt),
            "-t",
            "1",
            "-k",
            "4",
            "--fixed-time",
            "--runs",
            "2",
            "--bayes-steps",
            "2",
            "--gd-max-iters",
            "40",
            "--seed",
            "5",
            "-o",
            s(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        (fs::read(&out).unwrap(), stdout(&o))
    };
    let (a, summary) = run("a.toml");
    let (b, _) = run("b.toml");
    assert_eq!(a, b);
    for key in [
        "best cost",
        "baseline (4 blocks)",
        "improvement",
        "interquartile range",
    ] {
        assert!(summary.contains(key), "{summary}");
    }
    let r = OptimizationResult::from_toml_str(std::str::from_utf8(&a).unwrap()).unwrap();
    let base = r.baseline.unwrap();
    assert!(r.best_cost_exact < base.cost);
    assert!(base.improvement > 0.0);
}

#[test]
fn optimize_single_block_pairwise_reports_baseline() {
    let dir = TempDir::new().unwrap();
    let (src, tgt) = fig3_files(dir.path(), 4);
    let out = dir.path().join("r.toml");
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, "runs = 2\nbayes_steps = 2\ngd_max_iters = 20\n").unwrap();
    let o = daqc(&[
        "optimize",
        s(&src),
        s(&tgt),
        "-t",
        "1",
        "-k",
        "1",
        "--mode",
        "pairwise-trotter",
        "--config",
        s(&cfg),
        "--baseline-trotter-steps",
        "1",
        "-o",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("baseline (4 blocks)"));
    let r = OptimizationResult::from_toml_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r.runs.len(), 2);
    assert_eq!(r.blocks, 1);

    let o = daqc(&[
        "optimize",
        s(&src),
        s(&tgt),
        "-t",
        "1",
        "-k",
        "1",
        "--config",
        s(&cfg),
        "--max-cost",
        "1e-3",
        "-o",
        s(&out),
    ]);
    assert_eq!(code(&o), 4);
}

#[test]
fn baseline_table_decreases() {
    let o = daqc(&["baseline", "-n", "4", "-t", "1", "--max-trotter-steps", "6"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 6);
    let costs: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(costs.windows(2).all(|w| w[1] < w[0]));
    assert_eq!(rows[5][1], "24");
}

#[test]
fn repro_fig3_emits_all_series() {
    let dir = TempDir::new().unwrap();
    let o = daqc(&[
        "repro",
        "fig3",
        "-t",
        "1",
        "--out-dir",
        s(dir.path()),
        "-n",
        "4",
        "--max-blocks",
        "2",
        "--runs",
        "2",
        "--bayes-steps",
        "2",
        "--gd-max-iters",
        "20",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let base = csv_rows(&fs::read_to_string(dir.path().join("fig3_baseline.csv")).unwrap());
    assert_eq!(base.len(), 19);
    let blocks: Vec<usize> = base.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(blocks, (1..=19).map(|k| 4 * k).collect::<Vec<_>>());
    // The inhomogeneous source differs from the homogeneous one.
    assert_ne!(base[0][2], base[0][3]);

    let series = csv_rows(&fs::read_to_string(dir.path().join("fig3_series.csv")).unwrap());
    assert_eq!(series.len(), 2 * 2 * 2 + 2);
    for source in ["homogeneous", "inhomogeneous"] {
        for mode in ["fixed", "free"] {
            assert_eq!(
                series
                    .iter()
                    .filter(|r| r[0] == mode && r[1] == source)
                    .count(),
                2
            );
        }
    }
    assert_eq!(
        series
            .iter()
            .filter(|r| r[0] == "fixed-pairwise" && r[3] == "pairwise_trotter")
            .count(),
        2
    );
    for r in series
        .iter()
        .filter(|r| r[0] == "fixed" && r[1] == "homogeneous")
    {
        assert!(
            r[6].parse::<f64>().unwrap() <= r[12].parse::<f64>().unwrap(),
            "{r:?}"
        );
    }
}

#[test]
fn matrix_outputs_and_checks() {
    let o = daqc(&["matrix", "2"]);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&stdout(&o));
    let m2 = subblock(SubBlockKind::M2);
    assert_eq!(rows.len(), 9);
    for (r, row) in rows.iter().enumerate() {
        let entries: Vec<i8> = row[2..].iter().map(|v| v.parse().unwrap()).collect();
        assert_eq!(entries, m2[r].to_vec());
    }

    let o = daqc(&["matrix", "4", "--protocol", "zz", "--check"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("singular                        true"));

    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("m5.csv");
    let o = daqc(&[
        "matrix",
        "5",
        "--protocol",
        "general",
        "--check",
        "--csv",
        s(&csv),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = stdout(&o);
    assert!(report.contains("90 x 90") && report.contains("singular                        false"));
    assert!(!report.contains("FAILS") && report.contains("matches"));
    assert_eq!(csv_rows(&fs::read_to_string(&csv).unwrap()).len(), 90);
}
