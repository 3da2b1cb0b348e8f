use std::process::Command;

use gsm_afdm::sim::read_csv;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gsm-afdm"))
}

const SMALL: &str = "system = (2,2,6,1,2)\npaths = 2\nk_max = 1\ninteger_doppler = true\n\
min_bit_errors = 20\nmax_frames = 200\nbatch_frames = 20\n";

#[test]
fn ber_run_writes_parsable_csv_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, SMALL).unwrap();
    let out = dir.path().join("ber.csv");
    let st = bin()
        .args(["ber", "--config"])
        .arg(&cfg)
        .args(["--snr", "4,10", "--detector", "mld,grcd:2", "--seed", "5", "--plot", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let (h, rows) = read_csv(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(h.kind, "ber");
    assert_eq!(h.seed, 5);
    assert_eq!(rows.len(), 4);
    let svg = std::fs::read_to_string(out.with_extension("svg")).unwrap();
    for r in &rows {
        assert!(svg.contains(&format!("data-snr=\"{}\"", r.snr_db)));
    }

    // same config, different worker count: identical bytes
    let again = dir.path().join("again.csv");
    let st = bin()
        .args(["ber", "--config"])
        .arg(&cfg)
        .args(["--snr", "4,10", "--detector", "mld,grcd:2", "--seed", "5", "--workers", "1", "--out"])
        .arg(&again)
        .status()
        .unwrap();
    assert!(st.success());
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn analysis_commands_print_csv() {
    let o = bin()
        .args(["bound", "--snr", "-20,20", "--set", "system=(2,1,3,1,2)", "--set", "k_max=0", "--set", "paths=2"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = read_csv(o.stdout.as_slice()).unwrap();
    assert!(rows[0].flags.contains("vacuous"));

    let o = bin()
        .args(["capacity", "--snr", "0", "--set", "system=(2,1,2,1,2)", "--set", "paths=1"])
        .args(["--set", "k_max=0", "--set", "capacity_channels=3"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(o.stdout.as_slice()).unwrap();
    assert_eq!(h.kind, "capacity");
    assert!(rows[0].value > 0.0 && rows[0].value <= 2.0);

    let o = bin()
        .args(["complexity", "--snr", "10", "--detector", "grcd:1,rscd:1", "--set", "complexity_frames=5"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = read_csv(o.stdout.as_slice()).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.frames == 5 && r.units > 0));
}

#[test]
fn config_errors_exit_with_two() {
    for args in [
        vec!["ber", "--set", "bogus=1"],
        vec!["ber", "--detector", "nonsense"],
        vec!["bound", "--set", "n=8", "--set", "paths=3"],
        vec!["ber", "--config", "/nonexistent/file.cfg"],
    ] {
        let o = bin().args(&args).output().unwrap();
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}
