//! Command-line behaviour: output formats, the JSON schema, exit codes and
//! input errors. Runs both in-process and through the built binary.

use std::path::Path;
use std::process::{Command, Output};

use nof1_serial::cli::report::Report;
use nof1_serial::cli::run;
use serde_json::Value;

fn run_in_process(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("nof1").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn nof1(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nof1")).args(args).output().unwrap()
}

fn schema() -> Value {
    serde_json::from_str(include_str!("../schema/report.schema.json")).unwrap()
}

/// Validates `value` against the subset of JSON Schema used by the bundled
/// schema: `$ref` into `$defs`, `oneOf`, `type`, `enum`, `const`,
/// `required`, `properties`, `additionalProperties: false`, `items`,
/// `minItems`, `maxItems`, `uniqueItems` and numeric bounds.
fn validate(root: &Value, schema: &Value, value: &Value, path: &str) -> Result<(), String> {
    let obj = schema
        .as_object()
        .ok_or_else(|| format!("{path}: schema is not an object"))?;
    if let Some(r) = obj.get("$ref").and_then(Value::as_str) {
        let name = r
            .strip_prefix("#/$defs/")
            .ok_or_else(|| format!("unsupported $ref {r}"))?;
        return validate(root, &root["$defs"][name], value, path);
    }
    for key in obj.keys() {
        let known = [
            "$schema",
            "title",
            "description",
            "$defs",
            "oneOf",
            "type",
            "enum",
            "const",
            "required",
            "properties",
            "additionalProperties",
            "items",
            "minItems",
            "maxItems",
            "uniqueItems",
            "minimum",
            "maximum",
            "exclusiveMinimum",
            "exclusiveMaximum",
        ];
        if !known.contains(&key.as_str()) {
            return Err(format!("validator does not support keyword {key}"));
        }
    }
    if let Some(options) = obj.get("oneOf").and_then(Value::as_array) {
        let matches = options
            .iter()
            .filter(|s| validate(root, s, value, path).is_ok())
            .count();
        if matches != 1 {
            return Err(format!("{path}: matches {matches} oneOf branches"));
        }
    }
    if let Some(t) = obj.get("type") {
        let types: Vec<&str> = match t {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(Value::as_str).collect(),
            _ => return Err(format!("{path}: bad type keyword")),
        };
        let ok = types.iter().any(|t| match *t {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "boolean" => value.is_boolean(),
            "null" => value.is_null(),
            "number" => value.is_number(),
            "integer" => value.is_u64() || value.is_i64(),
            _ => false,
        });
        if !ok {
            return Err(format!("{path}: {value} is not of type {t}"));
        }
    }
    if let Some(options) = obj.get("enum").and_then(Value::as_array) {
        if !options.contains(value) {
            return Err(format!("{path}: {value} not in {options:?}"));
        }
    }
    if let Some(c) = obj.get("const") {
        if c != value {
            return Err(format!("{path}: {value} != {c}"));
        }
    }
    if let Some(x) = value.as_f64() {
        let bound = |k: &str| obj.get(k).and_then(Value::as_f64);
        let within = bound("minimum").is_none_or(|b| x >= b)
            && bound("maximum").is_none_or(|b| x <= b)
            && bound("exclusiveMinimum").is_none_or(|b| x > b)
            && bound("exclusiveMaximum").is_none_or(|b| x < b);
        if !within {
            return Err(format!("{path}: {x} out of bounds"));
        }
    }
    if let Some(map) = value.as_object() {
        let props = obj.get("properties").and_then(Value::as_object);
        for req in obj.get("required").and_then(Value::as_array).into_iter().flatten() {
            let req = req.as_str().unwrap();
            if !map.contains_key(req) {
                return Err(format!("{path}: missing {req}"));
            }
        }
        for (k, v) in map {
            match props.and_then(|p| p.get(k)) {
                Some(s) => validate(root, s, v, &format!("{path}.{k}"))?,
                None if obj.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    return Err(format!("{path}: unexpected property {k}"));
                }
                None => {}
            }
        }
    }
    if let Some(items) = value.as_array() {
        let len = items.len() as u64;
        if obj.get("minItems").and_then(Value::as_u64).is_some_and(|n| len < n)
            || obj.get("maxItems").and_then(Value::as_u64).is_some_and(|n| len > n)
        {
            return Err(format!("{path}: {len} items out of bounds"));
        }
        if obj.get("uniqueItems") == Some(&Value::Bool(true)) {
            for (i, a) in items.iter().enumerate() {
                if items[..i].contains(a) {
                    return Err(format!("{path}: duplicate item {a}"));
                }
            }
        }
        if let Some(s) = obj.get("items") {
            for (i, v) in items.iter().enumerate() {
                validate(root, s, v, &format!("{path}[{i}]"))?;
            }
        }
    }
    Ok(())
}

/// Runs a JSON-producing command, checks it against the schema and checks
/// that it deserializes and re-serializes to the same text.
fn json_report(args: &[&str]) -> Value {
    let (code, out, err) = run_in_process(args);
    assert_eq!(code, 0, "{args:?}: {err}");
    let value: Value = serde_json::from_str(&out).unwrap();
    let root = schema();
    validate(&root, &root, &value, "$").unwrap_or_else(|e| panic!("{args:?}: {e}"));
    let report: Report = serde_json::from_str(&out).unwrap();
    assert_eq!(
        report.to_json().unwrap().trim_end(),
        out.trim_end(),
        "{args:?}: JSON round trip"
    );
    value
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn validator_rejects_bad_reports() {
    let root = schema();
    let good = json_report(&["reproduce", "table1", "--format", "json"]);
    let mut extra = good.clone();
    extra["rows"][0]["bogus"] = Value::from(1);
    assert!(validate(&root, &root, &extra, "$").is_err());
    let mut bad_p = good.clone();
    bad_p["rows"][0]["serial_p"] = Value::from(1.5);
    assert!(validate(&root, &root, &bad_p, "$").is_err());
    let mut missing = good;
    missing.as_object_mut().unwrap().remove("side");
    assert!(validate(&root, &root, &missing, "$").is_err());
}

#[test]
fn every_report_matches_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    for (kind, dataset) in [
        ("paired-level", "table1-patient18"),
        ("paired-rate", "table2-difference"),
        ("two-sample-level", "table2-pre-post"),
        ("two-sample-rate", "table2-pre-post"),
    ] {
        for method in ["serial", "usual"] {
            let v = json_report(&[
                "analyze",
                kind,
                "--dataset",
                dataset,
                "--method",
                method,
                "--format",
                "json",
            ]);
            assert_eq!(v["report"], "analyze");
        }
    }
    json_report(&[
        "analyze",
        "paired-level",
        "--dataset",
        "table1-patient9",
        "--rho-override",
        "-0.2",
        "--format",
        "json",
    ]);
    let v = json_report(&[
        "power",
        "--kind",
        "two-sample-rate",
        "--m",
        "6,12",
        "--rho",
        "-0.33,0.5",
        "--m-b",
        "8",
        "--delta",
        "1",
        "--format",
        "json",
    ]);
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
    json_report(&["reproduce", "table1", "--format", "json"]);
    json_report(&["reproduce", "table2", "--format", "json"]);
    let config = write(
        dir.path(),
        "sim.toml",
        "kind = \"two-sample-rate\"\nseed = 3\nm = [5, 8]\nreplicates = 300\neffect = 0.5\n",
    );
    let v = json_report(&["simulate", &config, "--format", "json"]);
    assert_eq!(v["cells"].as_array().unwrap().len(), 8);
    json_report(&[
        "reproduce",
        "figure-data",
        "--seed",
        "5",
        "--replicates",
        "200",
        "--kind",
        "paired-level",
        "--m",
        "5",
        "--format",
        "json",
    ]);
}

#[test]
fn text_output_matches_json() {
    let (code, text, _) = run_in_process(&[
        "analyze",
        "paired-level",
        "--dataset",
        "table1-patient23",
        "--side",
        "upper",
    ]);
    assert_eq!(code, 0);
    assert!(text.contains("p(upper) =    0.1656"), "{text}");
    let v = json_report(&[
        "analyze",
        "paired-level",
        "--dataset",
        "table1-patient23",
        "--side",
        "upper",
        "--format",
        "json",
    ]);
    assert!((v["analysis"]["result"]["p_value"].as_f64().unwrap() - 0.16555).abs() < 1e-4);
    assert_eq!(v["reject"], false);
}

#[test]
fn csv_input_and_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "pairs.csv",
        "index,a,b\n1,5.1,4.0\n2,5.9,4.2\n3,6.3,5.1\n4,5.2,4.9\n5,6.8,5.0\n6,6.1,5.5\n",
    );
    let (code, out, err) = run_in_process(&["analyze", "paired-level", &input, "--format", "csv"]);
    assert_eq!(code, 0, "{err}");
    let mut rows = csv::Reader::from_reader(out.as_bytes());
    let headers = rows.headers().unwrap().clone();
    assert!(headers.iter().any(|h| h == "p_value"), "{headers:?}");
    assert_eq!(rows.records().count(), 1);

    // The same data as explicit differences gives the same test.
    let diffs = write(dir.path(), "diffs.csv", "1,1.1\n2,1.7\n3,1.2\n4,0.3\n5,1.8\n6,0.6\n");
    let a = json_report(&["analyze", "paired-level", &input, "--format", "json"]);
    let b = json_report(&["analyze", "paired-level", &diffs, "--format", "json"]);
    let t = |v: &Value| v["analysis"]["result"]["statistic"].as_f64().unwrap();
    assert!((t(&a) - t(&b)).abs() < 1e-12);

    // Multi-table reports need a directory.
    let (code, _, err) = run_in_process(&["reproduce", "table2", "--format", "csv"]);
    assert_eq!(code, 2);
    assert!(err.contains("--out"), "{err}");
    let out_dir = dir.path().join("t2");
    let (code, out, _) = run_in_process(&[
        "reproduce",
        "table2",
        "--format",
        "csv",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let written: Vec<_> = std::fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(written.len(), 2, "{written:?}");
    assert_eq!(out.lines().count(), 2);
}

#[test]
fn input_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    for (text, needle) in [
        ("index,value\n1,0.5\n2,abc\n3,0.1\n", "line 3"),
        ("index,value\n1,0.5\n3,0.2\n4,0.1\n", "line 3"),
        ("index,value\n1,0.5\n2,0.2,0.7\n", "line 3"),
    ] {
        let path = write(dir.path(), "bad.csv", text);
        let (code, _, err) = run_in_process(&["analyze", "paired-level", &path]);
        assert_eq!(code, 2, "{text}");
        assert!(err.contains(needle), "{text}: {err}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = nof1(&["analyze", "paired-level", "--dataset", "table1-patient12"]);
    assert_eq!(ok.status.code(), Some(0));

    let usage = nof1(&["analyze", "sideways-level", "--dataset", "table1-patient12"]);
    assert_eq!(usage.status.code(), Some(2));

    let flat = write(dir.path(), "flat.csv", "1,2\n2,2\n3,2\n4,2\n5,2\n");
    let degenerate = nof1(&["analyze", "paired-level", &flat]);
    assert_eq!(degenerate.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&degenerate.stderr).contains("degenerate"));

    let short = write(dir.path(), "short.csv", "1,0.2\n2,0.4\n3,0.1\n");
    let too_short = nof1(&["analyze", "paired-level", &short]);
    assert_eq!(too_short.status.code(), Some(2));

    let bad_rho = nof1(&[
        "analyze",
        "paired-level",
        "--dataset",
        "table1-patient12",
        "--rho-override",
        "1.0",
    ]);
    assert_eq!(bad_rho.status.code(), Some(2));

    let help = nof1(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("simulate"));
}

#[test]
fn simulation_configs_are_checked() {
    let dir = tempfile::tempdir().unwrap();
    let no_seed = write(
        dir.path(),
        "no_seed.toml",
        "kind = \"paired-level\"\nm = [6]\nreplicates = 50\n",
    );
    let (code, _, err) = run_in_process(&["simulate", &no_seed]);
    assert_eq!(code, 2);
    assert!(err.contains("seed"), "{err}");
    // The command-line seed fills the gap.
    let (code, _, err) = run_in_process(&["simulate", &no_seed, "--seed", "9"]);
    assert_eq!(code, 0, "{err}");

    let unknown = write(
        dir.path(),
        "unknown.toml",
        "kind = \"paired-level\"\nseed = 1\nreplicate = 50\n",
    );
    let (code, _, err) = run_in_process(&["simulate", &unknown]);
    assert_eq!(code, 2);
    assert!(err.contains("replicate"), "{err}");

    let bad_m = write(dir.path(), "bad_m.toml", "kind = \"paired-rate\"\nseed = 1\nm = [4]\n");
    let (code, _, _) = run_in_process(&["simulate", &bad_m]);
    assert_eq!(code, 2);

    let (code, _, err) = run_in_process(&["reproduce", "figure-data"]);
    assert_eq!(code, 2);
    assert!(err.contains("--seed"), "{err}");
}

#[test]
fn datasets_are_listed_with_sources() {
    let (code, out, _) = run_in_process(&["datasets", "list"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 8);
    assert!(out.lines().all(|l| l.split_whitespace().count() > 3));
}
