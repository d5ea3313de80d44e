use shorsim_cli::{run, EXIT_FAILED, EXIT_INVALID, EXIT_OK};

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("shorsim").chain(args.iter().copied());
    let code = run(argv.map(std::ffi::OsString::from), &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

#[test]
fn factor_prints_trace_and_factors() {
    let (code, out, _) = invoke(&["factor", "--n", "15", "--base", "2", "--workers", "1"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("factors = 3x5"), "{out}");
    assert!(out.contains("succeeded = true"));
    assert!(out
        .lines()
        .any(|l| l.starts_with("attempt 1: target=15 x=2 q=256")));
}

#[test]
fn invalid_inputs_exit_two() {
    for args in [
        &["factor", "--n", "13"][..],
        &["factor", "--n", "2"],
        &["factor", "--n", "x"],
        &["factor", "--n", "15", "--base", "15"],
        &["factor", "--n", "15", "--kernel", "quantum"],
        &[
            "factor",
            "--n",
            "15",
            "--kernel",
            "dense",
            "--block-size",
            "3",
        ],
        &["factor", "--n", "143", "--kernel", "circuit"],
        &["model", "--machine", "no-such-machine"],
        &["bench", "--suite", "custom"],
    ] {
        let (code, _, err) = invoke(args);
        assert_eq!(code, EXIT_INVALID, "{args:?}: {err}");
        assert!(!err.is_empty(), "{args:?}");
    }
}

#[test]
fn exhausted_attempts_exit_one() {
    // x = n - 1 has order 2 and always ends in a trivial root or m = 0
    let (code, out, _) = invoke(&["factor", "--n", "15", "--base", "14", "--max-attempts", "1"]);
    assert_eq!(code, EXIT_FAILED);
    assert!(out.contains("succeeded = false"));
    assert!(out.contains("stop_cause = attempts_exhausted"));
}

#[test]
fn verbose_emits_one_json_object_per_attempt() {
    let (code, out, err) = invoke(&["factor", "--n", "21", "--seed", "4", "--verbose"]);
    assert_eq!(code, EXIT_OK);
    let attempts = out.lines().filter(|l| l.starts_with("attempt ")).count();
    let json: Vec<serde_json::Value> = err
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(json.len(), attempts);
    for v in &json {
        assert!(v["phase_times"]["qft"].as_f64().unwrap() >= 0.0);
        assert!(v["target"].as_u64().is_some());
    }
}

#[test]
fn dump_state_writes_register_file() {
    let path = std::env::temp_dir().join(format!("shorsim-dump-{}.bin", std::process::id()));
    let p = path.to_str().unwrap();
    let (code, _, _) = invoke(&["factor", "--n", "15", "--base", "2", "--dump-state", p]);
    assert_eq!(code, EXIT_OK);
    let bytes = std::fs::read(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(&bytes[..4], b"QREG");
    assert_eq!(bytes.len(), 16 + 256 * 16);
}

#[test]
fn model_reports_transfer_and_boundedness() {
    let (code, out, _) = invoke(&[
        "model",
        "--transfer",
        "7,8",
        "--machine",
        "gtx285",
        "--intensity",
        "256",
    ]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("7,2147745792,0.012580152"), "{out}");
    assert!(out.contains("8,34360786944,"));
    assert!(out.contains("compute_bound"));

    let (code, out, _) = invoke(&[
        "model",
        "--machine",
        "gtx285",
        "--intensity",
        "256",
        "--reuse",
        "none",
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("memory_bound"), "{out}");
}

#[test]
fn model_speedup_over_bundled_table() {
    let (code, out, _) = invoke(&[
        "model",
        "--speedup",
        "table3",
        "--reference",
        "G970m",
        "--columns",
        "FH,Liquid,G285,G970m",
    ]);
    assert_eq!(code, EXIT_OK);
    let g285: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("G285,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!((g285 - 2.1).abs() <= 0.05);
}

#[test]
fn bench_writes_reports_in_every_format() {
    let dir = std::env::temp_dir();
    for (format, needle) in [
        ("csv", "77,7x11,fft"),
        ("json", "\"cofactors\""),
        ("markdown", "| 77 |"),
    ] {
        let path = dir.join(format!("shorsim-bench-{}.{format}", std::process::id()));
        let args = [
            "bench",
            "--suite",
            "custom",
            "--targets",
            "77,231",
            "--engines",
            "fft,dense",
            "--format",
            format,
            "--output",
            path.to_str().unwrap(),
        ];
        let (code, _, err) = invoke(&args);
        assert_eq!(code, EXIT_OK, "{format}: {err}");
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert!(text.contains(needle), "{format}:\n{text}");
    }
}

#[test]
fn bench_marks_failures_and_exits_one() {
    let (code, out, _) = invoke(&[
        "bench",
        "--suite",
        "custom",
        "--targets",
        "15,13",
        "--engines",
        "fft",
    ]);
    assert_eq!(code, EXIT_FAILED);
    assert!(out.contains("15,3x5,fft,"), "{out}");
    assert!(
        out.lines()
            .any(|l| l.starts_with("13,,fft,") && l.ends_with(",false")),
        "{out}"
    );
}
