use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bursty_cli::io::{tables, Manifest};
use bursty_core::fpt::{crossover_time, lamperti};

fn bursty(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bursty")).args(args).output().expect("binary runs")
}

fn run(cmd: &str, config: &Path, out: &Path) -> Output {
    bursty(&[cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}\nstdout: {}\nstderr: {}", o.status.code(), String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, rows) = read_csv(path);
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name} in {header:?}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn summary(dir: &Path) -> toml::Table {
    toml::from_str(&std::fs::read_to_string(dir.join("summary.toml")).unwrap()).unwrap()
}

const SIMPLE: &str = r#"
[model]
kind = "simple"
eta = 2.5
lambda = 4
x_ceiling = 1e12

[sim]
kappa = 0.1
burn_in = 0
seed = 42
"#;

fn simulate_config(count: u64) -> String {
    format!("{SIMPLE}stop = {{ bursts = {{ threshold = 2.0, count = {count} }} }}\n")
}

#[test]
fn simulate_writes_files_and_echoes_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.toml", &simulate_config(100));
    let out = dir.path().join("out");
    ok(&run("simulate", &cfg, &out));
    for f in ["config.toml", "summary.toml", "manifest.toml", "path_000.csv", "path_000.csv.meta.toml", "bursts.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let echoed: toml::Table = toml::from_str(&std::fs::read_to_string(out.join("config.toml")).unwrap()).unwrap();
    assert_eq!(echoed["command"].as_str(), Some("simulate"));
    assert_eq!(echoed["model"]["eta"].as_float(), Some(2.5));
    assert_eq!(echoed["sim"]["seed"].as_integer(), Some(42));
    let manifest = Manifest::load(&out.join("manifest.toml")).unwrap();
    let meta = std::fs::read_to_string(out.join("path_000.csv.meta.toml")).unwrap();
    assert!(meta.contains(&manifest.config_hash));
    assert!(meta.contains("seed = 42") && meta.contains("ChaCha8Rng"));
    assert_eq!(summary(&out)["total_bursts_counted"].as_integer(), Some(100));
    assert_eq!(read_csv(&out.join("path_000.csv")).0, tables::PATH.header());
}

#[test]
fn identical_configs_give_identical_checksums() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.toml", &simulate_config(200));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&run("simulate", &cfg, &a));
    ok(&run("simulate", &cfg, &b));
    let ma = Manifest::load(&a.join("manifest.toml")).unwrap();
    let mb = Manifest::load(&b.join("manifest.toml")).unwrap();
    assert_eq!(ma, mb);
    assert_eq!(std::fs::read(a.join("manifest.toml")).unwrap(), std::fs::read(b.join("manifest.toml")).unwrap());

    let other = write(dir.path(), "other.toml", &simulate_config(200).replace("seed = 42", "seed = 43"));
    let c = dir.path().join("c");
    ok(&run("simulate", &other, &c));
    assert_ne!(Manifest::load(&c.join("manifest.toml")).unwrap().config_hash, ma.config_hash);
}

#[test]
fn burst_count_in_summary_matches_a_recount_of_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.toml", &simulate_config(10_000));
    let out = dir.path().join("out");
    ok(&run("simulate", &cfg, &out));
    assert_eq!(summary(&out)["total_bursts_counted"].as_integer(), Some(10_000));

    // Recount up-crossings closed by a later down-crossing, straight from the CSV.
    let mut r = csv::Reader::from_path(out.join("path_000.csv")).unwrap();
    let (mut prev, mut open, mut closed) = (None::<bool>, false, 0u64);
    for rec in r.records() {
        let above = rec.unwrap()[1].parse::<f64>().unwrap() > 2.0;
        match prev {
            Some(false) if above => open = true,
            Some(true) if !above && open => {
                closed += 1;
                open = false;
            }
            _ => {}
        }
        prev = Some(above);
    }
    assert_eq!(closed, 10_000);
    assert_eq!(column(&out.join("bursts.csv"), "duration_s").len(), 10_000);
}

/// Twelve triangles 0 -> 4 -> 0 of half-width `w`; each crosses 2 at a
/// quarter and three quarters of its span.
fn triangles(header: &str, w: f64) -> String {
    let mut s = format!("{header},x\n");
    for k in 0..=24 {
        let v = if k % 2 == 1 { 4.0 } else { 0.0 };
        s.push_str(&format!("{},{v}\n", k as f64 * w));
    }
    s
}

#[test]
fn analyze_recovers_hand_computed_bursts() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "tri.csv", &triangles("t_s", 2.0));
    let cfg = write(dir.path(), "an.toml", "[analysis]\ninputs = [\"tri.csv\"]\nthreshold = 2.0\n");
    let out = dir.path().join("out");
    ok(&run("analyze", &cfg, &out));
    let b = out.join("bursts.csv");
    assert_eq!(read_csv(&b).0, tables::BURSTS.header());
    let (start, dur, peak, size) =
        (column(&b, "t_start_s"), column(&b, "duration_s"), column(&b, "peak"), column(&b, "size"));
    assert_eq!(dur.len(), 12);
    for i in 0..12 {
        // Up-crossing at 4i + 1, down-crossing at 4i + 3: T = 2, S = 2 * 2 / 2.
        assert!((start[i] - (4.0 * i as f64 + 1.0)).abs() < 1e-12);
        assert!((dur[i] - 2.0).abs() < 1e-12);
        assert_eq!(peak[i], 4.0);
        assert!((size[i] - 2.0).abs() < 1e-12);
    }
    let s = summary(&out);
    assert_eq!(s["bursts"].as_integer(), Some(12));
    assert!((s["histogram_mass"].as_float().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn seconds_input_is_converted_to_scaled_time() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "tri.csv", &triangles("t_seconds", 2.0));
    let cfg = write(dir.path(), "an.toml", "[analysis]\ninputs = [\"tri.csv\"]\nthreshold = 2.0\nsigma_t_sq = 0.25\n");
    let out = dir.path().join("out");
    ok(&run("analyze", &cfg, &out));
    for d in column(&out.join("bursts.csv"), "duration_s") {
        assert!((d - 0.5).abs() < 1e-12, "{d}");
    }
    for s in column(&out.join("bursts.csv"), "size") {
        assert!((s - 0.5).abs() < 1e-12, "{s}");
    }
    assert_eq!(summary(&out)["time_unit"].as_str(), Some("seconds"));
}

#[test]
fn overlay_columns_are_filled_when_model_parameters_are_given() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        "{SIMPLE}stop = {{ bursts = {{ threshold = 2.0, count = 2000 }} }}\n\n[analysis]\nthreshold = 2.0\nt_min = 1e-3\nbins_per_decade = 5\n"
    );
    let cfg = write(dir.path(), "an.toml", &cfg);
    let out = dir.path().join("out");
    ok(&run("analyze", &cfg, &out));
    let pdf = out.join("duration_pdf.csv");
    let (header, rows) = read_csv(&pdf);
    assert_eq!(header, tables::DURATION_PDF.header());
    assert!(!rows.is_empty());
    for r in &rows {
        let (series, closed): (f64, f64) = (r[5].parse().unwrap(), r[6].parse().unwrap());
        assert!(series > 0.0 && closed > 0.0, "{r:?}");
    }
    let s = summary(&out);
    assert_eq!(s["overlay"]["nu"].as_float(), Some(0.0));
    assert!(s.contains_key("cutoff_rate"));

    // Without model parameters the overlay cells stay empty.
    write(dir.path(), "tri.csv", &triangles("t_s", 2.0));
    let bare = write(dir.path(), "bare.toml", "[analysis]\ninputs = [\"tri.csv\"]\nthreshold = 2.0\n");
    let out = dir.path().join("bare");
    ok(&run("analyze", &bare, &out));
    let (header, rows) = read_csv(&out.join("duration_pdf.csv"));
    assert_eq!(header, tables::DURATION_PDF.header());
    assert!(rows.iter().all(|r| r[5].is_empty() && r[6].is_empty()));
}

#[test]
fn malformed_input_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.csv", "t_s,x\n0,1\n1,2\n2,two\n");
    let cfg = write(dir.path(), "an.toml", "[analysis]\ninputs = [\"bad.csv\"]\nthreshold = 2.0\n");
    let o = run("analyze", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.csv:4:"), "{err}");
}

fn fpt_model_config(t_min: f64, extra: &str) -> String {
    format!("[fpt]\neta = 2.5\nlambda = 4\nh_x = 2\nt_min = {t_min:e}\n{extra}")
}

#[test]
fn fpt_table_is_monotone_over_four_decades() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fpt.toml", &fpt_model_config(1e-5, "t_max = 0.1\npoints = 81\n"));
    let out = dir.path().join("out");
    ok(&run("fpt", &cfg, &out));
    let f = out.join("burst_pdf.csv");
    assert_eq!(read_csv(&f).0, tables::BURST_PDF.header());
    let t = column(&f, "t_s");
    assert!((t[80] / t[0] - 1e4).abs() < 1e-6);
    for name in ["p_series", "p_closed"] {
        let p = column(&f, name);
        assert!(p.windows(2).all(|w| w[1] < w[0]), "{name} not decreasing");
    }
    let s = summary(&out);
    assert_eq!(s["nu"].as_float(), Some(0.0));
    assert_eq!(s["n_dim"].as_float(), Some(2.0));
}

#[test]
fn fpt_series_and_closed_agree_below_the_crossover() {
    let (h_y, tc) = {
        let h = lamperti(2.0, 2.5).unwrap();
        (h, crossover_time(0.0, h).unwrap())
    };
    assert!(h_y > 0.0);
    let t_min = tc / 10f64.powf(2.5);
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fpt.toml", &fpt_model_config(t_min, &format!("t_max = {:e}\npoints = 40\n", 0.2 * tc)));
    let out = dir.path().join("out");
    ok(&run("fpt", &cfg, &out));
    let f = out.join("burst_pdf.csv");
    for (s, c) in column(&f, "p_series").into_iter().zip(column(&f, "p_closed")) {
        assert!((c / s - 1.0).abs() < 0.05, "series {s}, closed {c}");
    }
}

#[test]
fn fpt_rejects_times_below_t_min() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fpt.toml", &fpt_model_config(1e-3, "times = [1e-2, 1e-4]\n"));
    let o = run("fpt", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("below t_min"), "{err}");
}

const RETURNS: &str = r#"
[model]
kind = "complex"
eta = 2.5
lambda = 3.6
epsilon = 0.017
x_max_cap = 1000

[sim]
kappa = 0.1
burn_in = 10
seed = 1001

[returns]
r0_bar = 0.4
intervals = 20000
q_seed = 5
"#;

#[test]
fn returns_run_is_reproducible_and_verifiable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ret.toml", RETURNS);
    let out = dir.path().join("out");
    let o = bursty(&["returns", "-c", cfg.to_str().unwrap(), "-o", out.to_str().unwrap(), "--verify"]);
    ok(&o);
    assert!(String::from_utf8_lossy(&o.stdout).contains("verified"));
    let r = out.join("returns.csv");
    assert_eq!(read_csv(&r).0, tables::RETURNS.header());
    assert_eq!(read_csv(&out.join("abs_r_smoothed.csv")).0, tables::SMOOTHED.header());
    assert_eq!(read_csv(&out.join("return_bursts.csv")).0, tables::RETURN_BURSTS.header());
    assert_eq!(read_csv(&out.join("return_duration_pdf.csv")).0, tables::RETURN_DURATION_PDF.header());
    assert!(column(&r, "r0").iter().all(|&v| v >= 1.0));

    // A different q-seed redraws the returns over the same volatility path.
    let cfg2 = write(dir.path(), "ret2.toml", &RETURNS.replace("q_seed = 5", "q_seed = 6"));
    let out2 = dir.path().join("out2");
    ok(&run("returns", &cfg2, &out2));
    let r2 = out2.join("returns.csv");
    assert_eq!(column(&r, "r0"), column(&r2, "r0"));
    assert_ne!(column(&r, "r"), column(&r2, "r"));
}

#[test]
fn verify_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fpt.toml", &fpt_model_config(1e-4, "points = 20\n"));
    let out = dir.path().join("out");
    ok(&run("fpt", &cfg, &out));
    ok(&bursty(&["verify", out.to_str().unwrap()]));

    let table = out.join("burst_pdf.csv");
    let text = std::fs::read_to_string(&table).unwrap();
    std::fs::write(&table, text.replacen("0.0001,", "0.0001000001,", 1)).unwrap();
    let o = bursty(&["verify", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("burst_pdf.csv"));
}

#[test]
fn verify_detects_changed_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "tri.csv", &triangles("t_s", 2.0));
    let cfg = write(dir.path(), "an.toml", "[analysis]\ninputs = [\"tri.csv\"]\nthreshold = 2.0\n");
    let out = dir.path().join("out");
    ok(&run("analyze", &cfg, &out));
    ok(&bursty(&["verify", out.to_str().unwrap()]));
    std::fs::write(&input, triangles("t_s", 3.0)).unwrap();
    assert_eq!(bursty(&["verify", out.to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn exit_codes_follow_the_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", &simulate_config(10).replace("kappa = 0.1", "kappa = 2"));
    assert_eq!(run("simulate", &bad, &dir.path().join("o1")).status.code(), Some(2));
    let unknown = write(dir.path(), "unknown.toml", &format!("{}\nspeed = 1\n", simulate_config(10)));
    assert_eq!(run("simulate", &unknown, &dir.path().join("o2")).status.code(), Some(2));
    let wrong = write(dir.path(), "wrong.toml", &format!("command = \"fpt\"\n{}", simulate_config(10)));
    assert_eq!(run("simulate", &wrong, &dir.path().join("o3")).status.code(), Some(2));
    assert_eq!(run("simulate", &dir.path().join("missing.toml"), &dir.path().join("o4")).status.code(), Some(3));
    assert_eq!(bursty(&["verify", dir.path().join("nothing").to_str().unwrap()]).status.code(), Some(3));

    // The step budget runs out long before 10^6 bursts: a numerical failure.
    let capped = simulate_config(1_000_000).replace("seed = 42", "seed = 42\nmax_steps = 1000");
    let capped = write(dir.path(), "capped.toml", &capped);
    assert_eq!(run("simulate", &capped, &dir.path().join("o5")).status.code(), Some(4));
}

#[test]
fn help_documents_every_column() {
    let cases: [(&str, &[&bursty_cli::io::Table]); 4] = [
        ("simulate", &[&tables::PATH, &tables::BURSTS]),
        (
            "analyze",
            &[
                &tables::BURSTS,
                &tables::DURATION_PDF,
                &tables::PEAK_VS_DURATION,
                &tables::SIZE_VS_DURATION,
                &tables::SIZE_VS_PEAK,
                &tables::PSD,
            ],
        ),
        ("fpt", &[&tables::BURST_PDF]),
        ("returns", &[&tables::RETURNS, &tables::SMOOTHED, &tables::RETURN_BURSTS, &tables::RETURN_DURATION_PDF]),
    ];
    for (cmd, tabs) in cases {
        let o = bursty(&[cmd, "--help"]);
        ok(&o);
        let text = String::from_utf8_lossy(&o.stdout);
        for t in tabs {
            assert!(text.contains(t.file), "{cmd}: {}", t.file);
            for c in t.columns {
                assert!(text.contains(c.name), "{cmd}: {} column {}", t.file, c.name);
            }
        }
    }
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let cases = [
        ("simulate.toml", bursty_cli::Command::Simulate),
        ("analyze.toml", bursty_cli::Command::Analyze),
        ("analyze_file.toml", bursty_cli::Command::Analyze),
        ("fpt.toml", bursty_cli::Command::Fpt),
        ("returns.toml", bursty_cli::Command::Returns),
    ];
    for (name, cmd) in cases {
        let cfg = bursty_cli::RunConfig::load(&dir.join(name)).unwrap();
        cfg.resolve(cmd, &dir).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
