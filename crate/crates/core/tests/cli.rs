mod common;

use std::fs;
use std::path::{Path, PathBuf};

use cloudlat::cli::{run, ExitCode, ParamsDocument};
use cloudlat::fixture::{FixtureConfig, ThrottledServer};
use cloudlat::model::ModelParams;
use cloudlat::probe::{self, load_records};
use cloudlat::synth::Scenario;
use cloudlat::{MeasurementRecord, Status};
use serde_json::Value;
use tempfile::TempDir;

use common::{rel, truth, unreachable_url, varied_scenarios};

const REGIONS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/regions.json");

fn cloudlat(args: &[&str]) -> (ExitCode, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("cloudlat").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_params(dir: &TempDir, name: &str, params: &ModelParams) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, ParamsDocument::from_params(params).to_json()).unwrap();
    path
}

fn write_scenarios(dir: &TempDir, scenarios: &[Scenario]) -> (PathBuf, PathBuf) {
    let mut scen = String::from("client_id,server_id,i_lan_m,i_sub_m,n_relays,bytes\n");
    let mut paths = String::from("client_id,server_id,i_lan_m,i_sub_m,n_relays\n");
    for sc in scenarios {
        let p = &sc.path;
        let row = format!(
            "{},{},{},{},{}",
            sc.client_id,
            sc.server_id,
            p.i_lan(),
            p.i_sub(),
            p.n_relays()
        );
        scen.push_str(&format!("{row},{}\n", sc.size.bytes()));
        paths.push_str(&format!("{row}\n"));
    }
    let scen_path = dir.path().join("scenarios.csv");
    let paths_path = dir.path().join("paths.csv");
    fs::write(&scen_path, scen).unwrap();
    fs::write(&paths_path, paths).unwrap();
    (scen_path, paths_path)
}

fn record(client: &str, server: &str, ms: f64) -> MeasurementRecord {
    MeasurementRecord {
        ts_unix_ms: 1_700_000_000_000,
        client_id: client.into(),
        server_id: server.into(),
        bytes: 11_200_000,
        samples_ms: vec![ms * 0.99, ms, ms * 1.02],
        status: Status::Ok,
    }
}

/// Records between a few real regions, with one direction of each European
/// pair slower than the other.
fn campaign_records() -> Vec<MeasurementRecord> {
    let europe = [
        "gae-europe-west",
        "gae-europe-west2",
        "gae-europe-west3",
        "gae-europe-west6",
    ];
    let mut records = Vec::new();
    for (i, a) in europe.iter().enumerate() {
        for (j, b) in europe.iter().enumerate() {
            if i != j {
                let base = 40.0 + 10.0 * (i + j) as f64;
                records.push(record(a, b, if i < j { base } else { base * 1.1 }));
            }
        }
    }
    for (k, client) in ["ec2-us-east-1", "ec2-ap-northeast-1", "ec2-af-south-1"]
        .iter()
        .enumerate()
    {
        for (m, server) in ["gae-us-east4", "gae-asia-northeast1", "gae-australia-southeast1"]
            .iter()
            .enumerate()
        {
            records.push(record(client, server, 100.0 + 150.0 * k as f64 + 70.0 * m as f64));
        }
    }
    records.push(MeasurementRecord {
        samples_ms: vec![],
        status: Status::Failed,
        ..record("ec2-sa-east-1", "gae-us-east4", 0.0)
    });
    records
}

fn write_records(dir: &TempDir, records: &[MeasurementRecord]) -> PathBuf {
    let path = dir.path().join("measurements.jsonl");
    probe::persist_records(records, &path).unwrap();
    path
}

#[test]
fn predict_prints_milliseconds() {
    let dir = TempDir::new().unwrap();
    let params = ModelParams::new(1.25e9, 1.0e9, 1.12e14, 1.12e14, 0.01).unwrap();
    let params = write_params(&dir, "p.json", &params);
    let (code, out, err) = cloudlat(&[
        "predict",
        "--params",
        s(&params),
        "--bytes",
        "11200000",
        "--i-lan",
        "1e6",
        "--i-sub",
        "6e6",
        "--n-relays",
        "2",
    ]);
    assert_eq!(code, ExitCode::Success, "{err}");
    assert_eq!(out, "760.320\n");
}

#[test]
fn simulate_then_fit_recovers_truth() {
    let dir = TempDir::new().unwrap();
    let scenarios = varied_scenarios(12);
    let (scen, paths) = write_scenarios(&dir, &scenarios);
    let truth_path = write_params(&dir, "truth.json", &truth());
    let meas = dir.path().join("sim.jsonl");
    let fitted = dir.path().join("fit.json");

    let (code, _, err) = cloudlat(&[
        "simulate",
        "--truth",
        s(&truth_path),
        "--scenarios",
        s(&scen),
        "--seed",
        "7",
        "--out",
        s(&meas),
    ]);
    assert_eq!(code, ExitCode::Success, "{err}");
    assert_eq!(load_records(&meas).unwrap().len(), 12);

    let meta: Value = serde_json::from_str(&fs::read_to_string(format!("{}.meta.json", s(&meas))).unwrap()).unwrap();
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["noise"], "none");
    assert!(meta["generator"].as_str().unwrap().contains("ChaCha8"));

    let (code, _, err) = cloudlat(&[
        "fit",
        "--measurements",
        s(&meas),
        "--paths",
        s(&paths),
        "--b-c",
        "1e9",
        "--out",
        s(&fitted),
    ]);
    assert_eq!(code, ExitCode::Success, "{err}");
    let doc = ParamsDocument::load(&fitted).unwrap();
    let t = truth();
    assert!(rel(doc.s_lan, t.s_lan()) < 1e-6, "{}", doc.s_lan);
    assert!(rel(doc.s_sub, t.s_sub()) < 1e-6, "{}", doc.s_sub);
    assert!(rel(doc.rho, t.rho()) < 1e-6, "{}", doc.rho);
    assert!(rel(doc.c0, t.c0()) < 1e-6, "{}", doc.c0);
    assert_eq!(doc.n_records, Some(12));
    assert_eq!(doc.rank_deficient, Some(false));
    assert!(doc.rmse.unwrap() < 1e-9);
}

#[test]
fn simulate_is_reproducible_and_truncates() {
    let dir = TempDir::new().unwrap();
    let (scen, _) = write_scenarios(&dir, &varied_scenarios(5));
    let truth_path = write_params(&dir, "truth.json", &truth());
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for out in [&a, &b, &b] {
        let (code, _, err) = cloudlat(&[
            "simulate",
            "--truth",
            s(&truth_path),
            "--scenarios",
            s(&scen),
            "--noise-sigma",
            "0.05",
            "--seed",
            "3",
            "--out",
            s(out),
        ]);
        assert_eq!(code, ExitCode::Success, "{err}");
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn fit_without_core_bandwidth_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let (_, paths) = write_scenarios(&dir, &varied_scenarios(4));
    let meas = write_records(&dir, &[]);
    let (code, _, err) = cloudlat(&[
        "fit",
        "--measurements",
        s(&meas),
        "--paths",
        s(&paths),
        "--out",
        s(&dir.path().join("f.json")),
    ]);
    assert_eq!(code, ExitCode::Usage);
    assert!(err.contains("--b-c"), "{err}");
}

#[test]
fn fit_with_only_failed_records_is_fit_failure() {
    let dir = TempDir::new().unwrap();
    let scenarios = varied_scenarios(3);
    let (_, paths) = write_scenarios(&dir, &scenarios);
    let failed: Vec<_> = scenarios
        .iter()
        .map(|sc| MeasurementRecord {
            samples_ms: vec![],
            status: Status::Failed,
            ..record(&sc.client_id, &sc.server_id, 0.0)
        })
        .collect();
    let meas = write_records(&dir, &failed);
    let (code, _, err) = cloudlat(&[
        "fit",
        "--measurements",
        s(&meas),
        "--paths",
        s(&paths),
        "--b-c",
        "1e9",
        "--out",
        s(&dir.path().join("f.json")),
    ]);
    assert_eq!(code, ExitCode::FitFailure, "{err}");
    assert_eq!(code.code(), 3);
}

#[test]
fn fit_names_pair_without_path() {
    let dir = TempDir::new().unwrap();
    let (_, paths) = write_scenarios(&dir, &varied_scenarios(2));
    let meas = write_records(&dir, &[record("nowhere", "elsewhere", 50.0)]);
    let (code, _, err) = cloudlat(&[
        "fit",
        "--measurements",
        s(&meas),
        "--paths",
        s(&paths),
        "--b-c",
        "1e9",
        "--out",
        s(&dir.path().join("f.json")),
    ]);
    assert_eq!(code, ExitCode::Io);
    assert!(err.contains("nowhere -> elsewhere"), "{err}");
}

#[test]
fn corrupted_measurements_report_line() {
    let dir = TempDir::new().unwrap();
    let meas = write_records(&dir, &[record("gae-us-east4", "gae-us-central", 10.0)]);
    let mut text = fs::read_to_string(&meas).unwrap();
    text.push_str("{\"ts_unix_ms\": oops}\n");
    fs::write(&meas, text).unwrap();
    let (code, _, err) = cloudlat(&[
        "heatmap",
        "--measurements",
        s(&meas),
        "--regions",
        REGIONS,
        "--csv",
        s(&dir.path().join("h.csv")),
    ]);
    assert_eq!(code, ExitCode::Io);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn heatmap_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let meas = write_records(&dir, &campaign_records());
    let mut outputs = Vec::new();
    for k in 0..2 {
        let csv = dir.path().join(format!("h{k}.csv"));
        let svg = dir.path().join(format!("h{k}.svg"));
        let (code, _, err) = cloudlat(&[
            "heatmap",
            "--measurements",
            s(&meas),
            "--regions",
            REGIONS,
            "--csv",
            s(&csv),
            "--svg",
            s(&svg),
        ]);
        assert_eq!(code, ExitCode::Success, "{err}");
        outputs.push((fs::read(&csv).unwrap(), fs::read(&svg).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);

    let csv = String::from_utf8(outputs[0].0.clone()).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    assert_eq!(header[0], "client_id");
    // servers nearest to Ashburn come first
    assert_eq!(header[1], "gae-us-east4");
    assert_eq!(*header.last().unwrap(), "gae-australia-southeast1");
    let first_client = csv.lines().nth(1).unwrap().split(',').next().unwrap();
    assert_eq!(first_client, "ec2-us-east-1");
    // the failed-only client has a row of absent cells
    assert!(csv
        .lines()
        .any(|l| l.starts_with("ec2-sa-east-1,") && l.split(',').skip(1).all(str::is_empty)));

    let svg = String::from_utf8(outputs[0].1.clone()).unwrap();
    assert!(svg.starts_with("<?xml") || svg.starts_with("<svg"));
    assert!(svg.contains("class=\"absent\""));
}

#[test]
fn heatmap_reference_changes_order() {
    let dir = TempDir::new().unwrap();
    let meas = write_records(&dir, &campaign_records());
    let csv = dir.path().join("h.csv");
    let (code, _, err) = cloudlat(&[
        "heatmap",
        "--measurements",
        s(&meas),
        "--regions",
        REGIONS,
        "--ref",
        "Tokyo",
        "--csv",
        s(&csv),
    ]);
    assert_eq!(code, ExitCode::Success, "{err}");
    let text = fs::read_to_string(&csv).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(header[1], "gae-asia-northeast1");

    let (code, _, _) = cloudlat(&[
        "heatmap",
        "--measurements",
        s(&meas),
        "--regions",
        REGIONS,
        "--ref",
        "Atlantis",
        "--csv",
        s(&csv),
    ]);
    assert_eq!(code, ExitCode::Usage);
}

#[test]
fn report_asymmetry_document() {
    let dir = TempDir::new().unwrap();
    let meas = write_records(&dir, &campaign_records());
    let out = dir.path().join("asym.json");
    let (code, _, err) = cloudlat(&[
        "report",
        "--measurements",
        s(&meas),
        "--regions",
        REGIONS,
        "--asymmetry",
        "--out",
        s(&out),
    ]);
    assert_eq!(code, ExitCode::Success, "{err}");
    let doc: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["format_version"], 1);
    assert_eq!(doc["kind"], "asymmetry");
    let entries = doc["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 6);
    for e in entries {
        let fwd = e["forward_ms"].as_f64().unwrap();
        let bwd = e["backward_ms"].as_f64().unwrap();
        assert!((e["delta_ms"].as_f64().unwrap() - (fwd - bwd)).abs() < 1e-9);
        assert!((e["relative"].as_f64().unwrap() - 0.1 / 1.05).abs() < 1e-9);
    }
}

#[test]
fn report_linearity_document() {
    let dir = TempDir::new().unwrap();
    let meas = write_records(&dir, &campaign_records());
    let out = dir.path().join("lin.json");
    let (code, _, err) = cloudlat(&[
        "report",
        "--measurements",
        s(&meas),
        "--regions",
        REGIONS,
        "--linearity",
        "--continent",
        "Europe",
        "--out",
        s(&out),
    ]);
    assert_eq!(code, ExitCode::Success, "{err}");
    let doc: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["kind"], "linearity");
    assert_eq!(doc["continent"], "Europe");
    assert_eq!(doc["n_points"], 12);
    let r = doc["pearson_r"].as_f64().unwrap();
    assert!((-1.0..=1.0).contains(&r));

    let (code, _, _) = cloudlat(&[
        "report",
        "--measurements",
        s(&meas),
        "--regions",
        REGIONS,
        "--linearity",
        "--out",
        s(&out),
    ]);
    assert_eq!(code, ExitCode::Usage);
}

fn fixture_regions(dir: &TempDir, up: &str, down: &str) -> PathBuf {
    let text = format!(
        r#"[
  {{"id": "home", "provider": "test", "continent": "Nowhere", "city_name": "Home", "lat_deg": 0.0, "lon_deg": 0.0}},
  {{"id": "up", "provider": "test", "continent": "Nowhere", "city_name": "Up", "lat_deg": 1.0, "lon_deg": 1.0, "endpoint_url": "{up}"}},
  {{"id": "down", "provider": "test", "continent": "Nowhere", "city_name": "Down", "lat_deg": 2.0, "lon_deg": 2.0, "endpoint_url": "{down}"}}
]"#
    );
    let path = dir.path().join("regions.json");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn measure_appends_records() {
    let fixture = ThrottledServer::start(FixtureConfig {
        payload_bytes: 50_000,
        bytes_per_sec: None,
        status: 200,
    })
    .unwrap();
    let dir = TempDir::new().unwrap();
    let regions = fixture_regions(&dir, &fixture.url(), &unreachable_url());
    let out = dir.path().join("m.jsonl");
    let args = [
        "measure",
        "--regions",
        s(&regions),
        "--client-id",
        "home",
        "--reps",
        "2",
        "--warmup",
        "0",
        "--timeout",
        "2",
        "--retries",
        "0",
        "--out",
        s(&out),
    ];
    for round in 1..=2 {
        let (code, stdout, err) = cloudlat(&args);
        assert_eq!(code, ExitCode::Success, "{err}");
        assert!(stdout.contains("home -> up"), "{stdout}");
        assert_eq!(load_records(&out).unwrap().len(), 2 * round);
    }
    let records = load_records(&out).unwrap();
    assert_eq!(records[0].server_id, "up");
    assert_eq!(records[0].status, Status::Ok);
    assert_eq!(records[1].status, Status::Failed);
    assert!(records.iter().all(|r| r.client_id == "home"));
}

#[test]
fn measure_with_every_probe_failing_exits_4() {
    let dir = TempDir::new().unwrap();
    let regions = fixture_regions(&dir, &unreachable_url(), &unreachable_url());
    let out = dir.path().join("m.jsonl");
    let (code, _, _) = cloudlat(&[
        "measure",
        "--regions",
        s(&regions),
        "--client-id",
        "home",
        "--reps",
        "1",
        "--warmup",
        "0",
        "--timeout",
        "1",
        "--retries",
        "0",
        "--out",
        s(&out),
    ]);
    assert_eq!(code, ExitCode::AllProbesFailed);
    assert_eq!(code.code(), 4);
    // failures are still recorded
    assert_eq!(load_records(&out).unwrap().len(), 2);
}

#[test]
fn measure_rejects_unknown_client() {
    let dir = TempDir::new().unwrap();
    let regions = fixture_regions(&dir, &unreachable_url(), &unreachable_url());
    let (code, _, err) = cloudlat(&[
        "measure",
        "--regions",
        s(&regions),
        "--client-id",
        "ghost",
        "--out",
        s(&dir.path().join("m.jsonl")),
    ]);
    assert_eq!(code, ExitCode::Usage);
    assert!(err.contains("ghost"));
}
