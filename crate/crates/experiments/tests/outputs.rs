use std::fs;

use heatlab_experiments::config::parse_config;
use heatlab_experiments::output::{float, write_all, Cell, Csv, Manifest};
use heatlab_experiments::scenarios::run;

#[test]
fn floats_round_trip() {
    for v in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0, f64::MAX, 5e-324] {
        assert_eq!(float(v).parse::<f64>().unwrap().to_bits(), v.to_bits(), "{v}");
    }
    assert_eq!(float(0.25), "0.25");
}

#[test]
fn csv_quoting_and_layout() {
    let mut t = Csv::new("demo", &["a", "b", "c"]);
    t.row(&[Cell::F(0.5), Cell::S("x,y".into()), Cell::Empty]);
    t.row(&[Cell::I(-3), Cell::S("say \"hi\"".into()), Cell::S("plain".into())]);
    assert_eq!(t.rows(), 2);
    assert_eq!(t.render(), "a,b,c\n0.5,\"x,y\",\n-3,\"say \"\"hi\"\"\",plain\n");
}

#[test]
#[should_panic(expected = "row width")]
fn csv_rejects_ragged_rows() {
    Csv::new("demo", &["a", "b"]).row(&[Cell::I(1)]);
}

const KERNEL: &str = "scenario = kernel\nm = 2\nseed = 11\n[domain]\nlo = -2\nhi = 2\npoints = 120\n[kernel]\nt_count = 4\n";

#[test]
fn scenario_outputs_are_byte_identical() {
    let cfg = parse_config(KERNEL).unwrap();
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(a.verdict, b.verdict);
    assert_eq!(a.tables.len(), b.tables.len());
    for (x, y) in a.tables.iter().zip(&b.tables) {
        assert_eq!(x.render(), y.render(), "{}", x.name);
    }
    assert!(a.table("kernel").unwrap().rows() > 0);
}

#[test]
fn write_all_lays_out_the_directory() {
    let cfg = parse_config(KERNEL).unwrap();
    let outputs = run(&cfg).unwrap();
    let dir = std::env::temp_dir().join(format!("heatlab-outputs-{}", std::process::id()));
    let manifest = Manifest { scenario: "kernel", config_text: KERNEL, seed: cfg.seed, elapsed_secs: 0.0 };
    write_all(&dir, &outputs, &manifest).unwrap();
    let csv = fs::read_to_string(dir.join("kernel.csv")).unwrap();
    assert_eq!(csv, outputs.table("kernel").unwrap().render());
    assert_eq!(fs::read_to_string(dir.join("verdict.txt")).unwrap(), outputs.verdict);
    let text = fs::read_to_string(dir.join("manifest.txt")).unwrap();
    assert!(text.contains("seed: 11"));
    assert!(text.ends_with(KERNEL));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn constants_scenario_tables() {
    let cfg = parse_config("scenario = constants\nm = 1\n[domain]\nlo = 0\nhi = 1\n").unwrap();
    let out = run(&cfg).unwrap();
    let constants = out.table("constants").unwrap().render();
    assert!(constants.lines().nth(1).unwrap().starts_with("1,"));
    assert!(out.table("identity").unwrap().rows() >= 100);
}
