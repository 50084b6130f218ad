use std::process::{Command, Output};

fn eltract(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eltract")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const EXPSHIFT: [&str; 4] = ["--family", "expshift", "--param", "-2,0"];

fn with_map(cmd: &str, extra: &[&str]) -> Output {
    let mut args = vec![cmd];
    args.extend_from_slice(&EXPSHIFT);
    args.extend_from_slice(extra);
    eltract(&args)
}

#[test]
fn verify_expansion_reports_no_violations() {
    let o = eltract(&["verify-expansion", "--family", "cosine", "--param", "1,0", "--param", "1,0", "--samples", "2000"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("family,params,samples,violations,min_margin"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..4], &["cosine", "1+0i;1+0i", "2000", "0"]);
}

#[test]
fn find_cf_prints_threshold() {
    let o = with_map("find-cf", &["--r-max", "200"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("family,domain,C_F\nexpshift,0,"));
    let c: f64 = text.lines().nth(1).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!(c.is_finite() && c > 1.0 && c < 200.0);
}

#[test]
fn find_cf_without_threshold_is_a_numerical_failure() {
    let o = with_map("find-cf", &["--r-max", "1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn classify_orbit_rows() {
    let o = with_map("classify-orbit", &["--point", "60,0", "--point", "-1.8414,0", "--domains", "0", "--radius", "5"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "re,im,classification,n_detect,domains_visited");
    assert!(lines[1].starts_with("60,0,escaping,"), "{}", lines[1]);
    assert!(lines[2].starts_with("-1.8414,0,left_domains,"), "{}", lines[2]);
}

#[test]
fn estimate_rprime_output() {
    let o = with_map("estimate-rprime", &["--domains", "0", "--radius", "5"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "family,domains,R,probes,R_prime\nexpshift,0,5,50,5\n");
}

#[test]
fn trace_ray_csv() {
    let o = with_map("trace-ray", &["--address", "p:0", "--samples", "5"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,re,im,digit");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("1,"));
}

#[test]
fn land_ray_record_and_exit_codes() {
    let o = with_map("land-ray", &["--address", "p:0"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let f: Vec<&str> = text.trim().split(';').collect();
    assert_eq!(f[0], "p:0");
    assert_eq!(f[1], "landed");
    assert!((f[2].parse::<f64>().unwrap() - 1.146193).abs() < 1e-6);
    assert!((f[4].parse::<f64>().unwrap() - 3.14619).abs() < 1e-4);
    assert_eq!(f[5], "repelling");

    let o = eltract(&["land-ray", "--family", "expshift", "--param", "-1,0", "--address", "p:0", "--max-pullbacks", "20"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains(";no_convergence;"));

    let o = with_map("land-ray", &["--address", "1;p:0"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn fixed_points_inventory() {
    let o = with_map("fixed-points", &["--period", "1", "--box", "-3,3,-3,3", "--grid", "16"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "re,im,period,mult_re,mult_im,class");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("-1.84140566") && lines[1].ends_with(",attracting"));
    assert!(lines[2].starts_with("1.14619322") && lines[2].ends_with(",repelling"));
}

#[test]
fn render_is_deterministic_and_mode_independent() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.ppm");
    let b = dir.path().join("b.ppm");
    let base = ["render", "--family", "expaffine", "--param", "golden", "--pixels", "32", "--nmax", "300"];
    let mut first: Vec<&str> = base.to_vec();
    first.extend(["--out", a.to_str().unwrap()]);
    let mut second: Vec<&str> = base.to_vec();
    second.extend(["--sequential", "--out", b.to_str().unwrap()]);
    assert_eq!(code(&eltract(&first)), 0);
    assert_eq!(code(&eltract(&second)), 0);
    let (pa, pb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(pa, pb);
    assert!(pa.starts_with(b"P6\n32 32\n255\n"));
    assert_eq!(pa.len(), "P6\n32 32\n255\n".len() + 32 * 32 * 3);
}

#[test]
fn overlay_marks_pixels() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("plain.ppm");
    let marked = dir.path().join("marked.ppm");
    let common = ["--family", "expaffine", "--param", "golden", "--pixels", "32", "--nmax", "300"];
    let mut r = vec!["render"];
    r.extend(common);
    r.extend(["--out", plain.to_str().unwrap()]);
    let mut o = vec!["overlay"];
    o.extend(common);
    o.extend(["--orbit", "500", "--out", marked.to_str().unwrap()]);
    assert_eq!(code(&eltract(&r)), 0);
    assert_eq!(code(&eltract(&o)), 0);
    assert_ne!(std::fs::read(&plain).unwrap(), std::fs::read(&marked).unwrap());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&eltract(&["verify-expansion", "--family", "bogus"])), 1);
    assert_eq!(code(&eltract(&["verify-expansion", "--family", "expshift"])), 1);
    assert_eq!(code(&eltract(&["frobnicate"])), 1);
    assert_eq!(code(&with_map("classify-orbit", &["--point", "1,2,3"])), 1);
    assert_eq!(code(&with_map("classify-orbit", &["--point", "1,0", "--radius", "0.5"])), 1);
    assert_eq!(code(&eltract(&["--help"])), 0);
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let o = with_map("verify-expansion", &["--samples", "10", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(code(&o), 2);
}
