use std::path::Path;
use std::process::{Command, Output};

use hullprice::instance::{classify, parse_instance, GeneratorClass};

fn hullprice(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hullprice"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn gen(dir: &Path, name: &str, extra: &[&str]) -> String {
    let path = dir.join(name);
    let p = path.to_str().unwrap().to_string();
    let mut args = vec!["gen", "--out", &p];
    args.extend_from_slice(extra);
    let out = hullprice(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    p
}

#[test]
fn gen_is_parseable_deterministic_and_honours_the_mix() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "a.json", &["--seed", "9", "--mix", "5,0,1,4", "--horizon", "6"]);
    let b = gen(dir.path(), "b.json", &["--seed", "9", "--mix", "5,0,1,4", "--horizon", "6"]);
    let ta = std::fs::read_to_string(&a).unwrap();
    assert_eq!(ta, std::fs::read_to_string(&b).unwrap());
    let inst = parse_instance(&ta).unwrap();
    let count = |c| inst.generators.iter().filter(|g| classify(g) == c).count();
    assert_eq!(
        [count(GeneratorClass::G1), count(GeneratorClass::G2), count(GeneratorClass::G3), count(GeneratorClass::G4)],
        [5, 0, 1, 4]
    );
    let sized = gen(dir.path(), "c.json", &["--gens", "10", "--horizon", "6"]);
    let inst = parse_instance(&std::fs::read_to_string(sized).unwrap()).unwrap();
    assert_eq!((inst.generators.len(), inst.horizon), (10, 6));
}

#[test]
fn solve_writes_reports_tables_and_lp_files() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(dir.path(), "i.json", &["--seed", "3", "--mix", "2,0,1,2", "--horizon", "4"]);
    let out_dir = dir.path().join("out");
    let od = out_dir.to_str().unwrap();

    let opt = hullprice(&["solve", "--instance", &inst, "--algorithm", "opt", "--json", "--no-timing"]);
    assert!(opt.status.success());
    let v: serde_json::Value = serde_json::from_slice(&opt.stdout).unwrap();
    assert!(v[0]["uplift"].is_number());

    let all = hullprice(&["solve", "--instance", &inst, "--out", od, "--dump-lp", "--no-timing"]);
    assert!(all.status.success(), "{}", String::from_utf8_lossy(&all.stderr));
    let table = String::from_utf8(all.stdout).unwrap();
    for name in ["LMP", "TLP", "IA1", "IA2", "IAC1", "IAC2", "OPT"] {
        assert!(table.lines().any(|l| l.starts_with(name)), "{name} missing:\n{table}");
    }
    let stem = "synth-3";
    for f in [
        format!("{stem}.opt.json"),
        format!("{stem}.table.txt"),
        format!("{stem}.ia1.p1.lp"),
        format!("{stem}.p.lp"),
    ] {
        assert!(out_dir.join(&f).exists(), "{f} not written");
    }
    let lp = std::fs::read_to_string(out_dir.join(format!("{stem}.p.lp"))).unwrap();
    assert!(lp.contains("sys.balance.1"));
}

#[test]
fn untimed_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(dir.path(), "i.json", &["--seed", "4", "--mix", "2,0,1,2", "--horizon", "4"]);
    let run = || hullprice(&["solve", "--instance", &inst, "--json", "--no-timing"]).stdout;
    assert_eq!(run(), run());
}

#[test]
fn verify_passes_and_catches_a_corrupted_hull() {
    let ok = hullprice(&["verify", "--seed", "42", "--per-class", "10", "--synthetic", "1"]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));
    let again = hullprice(&["verify", "--seed", "42", "--per-class", "10", "--synthetic", "1"]);
    assert_eq!(ok.stdout, again.stdout);

    let bad = hullprice(&["verify", "--per-class", "200", "--synthetic", "0", "--corrupt", "aggregated-cost"]);
    assert_eq!(bad.status.code(), Some(4));
    let text = String::from_utf8(bad.stdout).unwrap();
    assert!(text.contains("FAIL hull-integrality"), "{text}");
    assert!(text.contains("fractional"));
}

#[test]
fn exit_codes_separate_usage_data_and_success() {
    assert_eq!(hullprice(&["solve"]).status.code(), Some(1));
    assert_eq!(hullprice(&["solve", "--instance", "x", "--algorithm", "simplex"]).status.code(), Some(1));
    assert_eq!(hullprice(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(hullprice(&["solve", "--instance", missing.to_str().unwrap()]).status.code(), Some(2));
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\"horizon\": 2}").unwrap();
    assert_eq!(hullprice(&["solve", "--instance", broken.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn environment_overrides_tolerances() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(dir.path(), "i.json", &["--seed", "5", "--mix", "1,0,0,1", "--horizon", "3"]);
    let out = Command::new(env!("CARGO_BIN_EXE_hullprice"))
        .args(["solve", "--instance", &inst, "--algorithm", "tlp"])
        .env("HULLPRICE_FRAC_TOL", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_hullprice"))
        .args(["solve", "--instance", &inst, "--algorithm", "tlp"])
        .env("HULLPRICE_MIP_GAP", "0")
        .output()
        .unwrap();
    assert!(out.status.success());
}
