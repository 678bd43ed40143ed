use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use clap::Parser;
use rankopt::embedded_fixture_2014;
use rankopt::optimizer::{solve_all, OptimizationSpec};
use rankopt::ranking::{dominance_count, WeightVector};
use rankopt_cli::{parse_table_csv, run, Cli};
use serde_json::Value;

fn rankopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rankopt"))
        .args(args)
        .env_remove("RANKOPT_NODE_BUDGET")
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Second line of a text ranking, split on whitespace.
fn first_row(out: &Output) -> Vec<String> {
    stdout(out)
        .lines()
        .nth(1)
        .unwrap()
        .split_whitespace()
        .map(str::to_owned)
        .collect()
}

fn temp_file(suffix: &str, content: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(suffix).tempfile().unwrap();
    f.write_all(content.as_bytes()).unwrap();
    f
}

#[test]
fn rank_with_germany_weights() {
    let out = rankopt(&[
        "rank", "0", "2", "1", "0", "3", "2", "0", "0", "0", "5", "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let row = first_row(&out);
    assert_eq!(row[..2], ["1", "Germany"]);
    // The fixture carries 3-decimal values, so the 2-decimal CI may differ
    // from the published 8.07 by one unit in the last place.
    let ci: f64 = row[2].parse().unwrap();
    assert!((ci - 8.07).abs() <= 0.01 + 1e-9, "{ci}");
}

#[test]
fn rank_with_spain_weights() {
    let out = rankopt(&[
        "rank", "0", "0", "0", "0", "0", "0", "0", "5", "0", "0", "4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(first_row(&out)[..3], ["1", "Spain", "8.93"]);
}

#[test]
fn rank_rejects_wrong_arity_and_invalid_weights() {
    let ten = ["rank", "1", "1", "1", "1", "1", "1", "1", "1", "1", "1"];
    assert_eq!(rankopt(&ten).status.code(), Some(2));
    let zeros = [
        "rank", "0", "0", "0", "0", "0", "0", "0", "0", "0", "0", "0",
    ];
    assert_eq!(rankopt(&zeros).status.code(), Some(2));
    assert_eq!(rankopt(&["rank"]).status.code(), Some(2));
}

#[test]
fn rank_csv_and_json_agree() {
    let w = ["0", "2", "1", "0", "3", "2", "0", "0", "0", "5", "2"];
    let csv = stdout(&rankopt(&[&["rank", "--format", "csv"][..], &w].concat()));
    let json: Vec<Value> = serde_json::from_str(&stdout(&rankopt(
        &[&["rank", "--format", "json"][..], &w].concat(),
    )))
    .unwrap();
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 15);
    for (r, j) in rows.iter().zip(&json) {
        assert_eq!(r[1], *j["entity"].as_str().unwrap());
        assert_eq!(r[0].parse::<u64>().unwrap(), j["rank"].as_u64().unwrap());
    }
}

#[test]
fn optimize_poland() {
    let out = rankopt(&[
        "optimize", "--entity", "poland", "--mode", "integer", "--order", "2", "--format", "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["top_rank"], 1);
    assert!((v["distance"].as_f64().unwrap() - 0.102).abs() <= 0.02);
    let support: Vec<(String, f64)> = v["weights"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|w| w["raw"].as_f64().unwrap() > 0.0)
        .map(|w| {
            (
                w["dimension"].as_str().unwrap().to_owned(),
                w["raw"].as_f64().unwrap(),
            )
        })
        .collect();
    assert_eq!(
        support,
        [("Education".to_owned(), 1.0), ("Safety".to_owned(), 2.0)]
    );
}

#[test]
fn optimize_united_states_text() {
    let out = rankopt(&["optimize", "--entity", "United States"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("Top rank:   1 of 15"), "{text}");
    let nonzero: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("  ") && !l.contains("(0.000)"))
        .collect();
    assert_eq!(nonzero.len(), 1);
    assert!(nonzero[0].trim_start().starts_with("Income"));
}

#[test]
fn optimize_usage_errors() {
    assert_eq!(
        rankopt(&["optimize", "--entity", "Atlantis"]).status.code(),
        Some(2)
    );
    assert_eq!(
        rankopt(&["optimize", "--entity", "Spain", "--order", "3"])
            .status
            .code(),
        Some(2)
    );
    let worst2 = rankopt(&[
        "optimize",
        "--entity",
        "Spain",
        "--direction",
        "worst",
        "--order",
        "2",
    ]);
    assert_eq!(worst2.status.code(), Some(2));
    let wmin = rankopt(&[
        "optimize",
        "--entity",
        "Spain",
        "--mode",
        "continuous",
        "--wmin",
        "1.5",
    ]);
    assert_eq!(wmin.status.code(), Some(2));
}

#[test]
fn optimize_worst_direction() {
    let out = rankopt(&[
        "optimize",
        "--entity",
        "Korea",
        "--order",
        "1",
        "--direction",
        "worst",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(
        v["top_rank"].as_u64().unwrap(),
        v["r_star"].as_u64().unwrap() + 1
    );
    assert!(v["distance"].is_null());
}

#[test]
fn node_budget_env_marks_unproven() {
    let out = Command::new(env!("CARGO_BIN_EXE_rankopt"))
        .args(["optimize", "--entity", "Germany"])
        .env("RANKOPT_NODE_BUDGET", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).contains("not proven"));
    let bad = Command::new(env!("CARGO_BIN_EXE_rankopt"))
        .args(["optimize", "--entity", "Germany"])
        .env("RANKOPT_NODE_BUDGET", "lots")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn table_is_sorted_and_replays() {
    let out = rankopt(&["table", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let (dims, rows) = parse_table_csv(&stdout(&out)).unwrap();
    let data = embedded_fixture_2014();
    assert_eq!(dims, data.dimension_names());
    assert_eq!(rows.len(), 15);
    for pair in rows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        assert!(a.top_rank < b.top_rank || (a.top_rank == b.top_rank && a.distance >= b.distance));
    }
    for r in &rows {
        let c = data.find_entity(&r.entity).unwrap();
        let ints: Vec<u32> = r.weights.iter().map(|&w| w as u32).collect();
        let w = WeightVector::integer(&ints).unwrap();
        assert_eq!(
            data.num_entities() - dominance_count(&data, &w, c).unwrap(),
            r.top_rank.unwrap()
        );
    }
}

#[test]
fn table_csv_round_trips_in_memory_results() {
    let mut buf = Vec::new();
    let code = run(
        Cli::parse_from(["rankopt", "table", "--format", "csv"]),
        &mut buf,
    )
    .unwrap();
    assert_eq!(code, 0);
    let (_, rows) = parse_table_csv(std::str::from_utf8(&buf).unwrap()).unwrap();

    let data = embedded_fixture_2014();
    let entries = solve_all(&data, &OptimizationSpec::new(0));
    assert_eq!(rows.len(), entries.len());
    for (row, e) in rows.iter().zip(&entries) {
        let s = e.result.as_ref().unwrap();
        assert_eq!(row.entity, e.name);
        assert_eq!(row.top_rank, Some(s.rank));
        assert_eq!(row.distance, s.d_star);
        assert_eq!(row.weights, s.weights.raw());
        assert!(row.proven);
        assert!(row.error.is_none());
    }
}

#[test]
fn table_text_shows_three_decimal_distance() {
    let out = rankopt(&["table"]);
    let text = stdout(&out);
    let poland = text.lines().find(|l| l.starts_with("Poland")).unwrap();
    let cols: Vec<&str> = poland.split_whitespace().collect();
    assert_eq!(cols[1..3], ["1", "0.100"]);
}

#[test]
fn table_rejects_empty_dataset() {
    let empty = temp_file(".csv", "");
    let out = rankopt(&["table", "--data", empty.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    let missing = rankopt(&["table", "--data", "/nonexistent/data.csv"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn verify_small_synthetic_instance() {
    let f = temp_file(".csv", "entity,a,b\nx,0.4,0.5\ny,0.3,0.2\n");
    let path = f.path().to_str().unwrap();
    for mode in ["integer", "continuous"] {
        for direction in ["best", "worst"] {
            let out = rankopt(&[
                "verify",
                "--data",
                path,
                "--mode",
                mode,
                "--direction",
                direction,
            ]);
            assert_eq!(out.status.code(), Some(0), "{mode} {direction}");
            assert!(stdout(&out).contains("2/2 MATCH"));
        }
    }
}

#[test]
fn verify_seeded_bundle() {
    let out = rankopt(&[
        "verify",
        "--seed",
        "42",
        "--count",
        "10",
        "--entities",
        "6",
        "--dimensions",
        "4",
        "--cap",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("60/60 MATCH"));
}

#[test]
fn verify_refuses_full_fixture_enumeration() {
    let out = rankopt(&["verify", "--cap", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("too large"));
}

#[test]
fn reads_json_and_raw_csv_inputs() {
    let data = embedded_fixture_2014();
    let json = temp_file(".json", &serde_json::to_string(&data.to_json()).unwrap());
    let out = rankopt(&[
        "rank",
        "--data",
        json.path().to_str().unwrap(),
        "0",
        "0",
        "0",
        "0",
        "0",
        "0",
        "0",
        "5",
        "0",
        "0",
        "4",
    ]);
    assert_eq!(first_row(&out)[..3], ["1", "Spain", "8.93"]);

    // Raw values: cost is better when lower.
    let raw = temp_file(
        ".csv",
        "entity,quality,cost:lower\na,10,300\nb,20,100\nc,15,200\n",
    );
    let out = rankopt(&[
        "rank",
        "--raw",
        "--data",
        raw.path().to_str().unwrap(),
        "1",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(first_row(&out)[1], "b");
}

#[test]
fn serve_answers_dataset_requests() {
    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_rankopt"))
        .args(["serve", "--port", &port.to_string()])
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(20);
    let mut stream = loop {
        match TcpStream::connect(("127.0.0.1", port)) {
            Ok(s) => break s,
            Err(_) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(50)),
            Err(e) => {
                child.kill().ok();
                panic!("server never came up: {e}");
            }
        }
    };
    stream
        .write_all(b"GET /api/dataset HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n")
        .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    child.kill().ok();
    child.wait().ok();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains("Work-Life Balance"));
}
