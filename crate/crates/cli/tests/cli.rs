//! End-to-end tests of the `segbench` binary: dataset evaluation, ranking,
//! bootstrap, reports, the match/tau debug commands, exit codes and
//! output determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use segbench::{encode_mask, LabelMask, MaskFormat};
use tempfile::TempDir;

fn segbench_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_segbench"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = segbench_bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "command {:?} failed with {:?}\nstdout: {}\nstderr: {}",
        args,
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(args: &[&str]) -> i32 {
    segbench_bin()
        .args(args)
        .output()
        .expect("binary runs")
        .status
        .code()
        .expect("exit code")
}

fn rect_mask(w: u32, h: u32, top: u32, left: u32, rh: u32, rw: u32, label: u16) -> LabelMask {
    let mut labels = vec![0u16; (w * h) as usize];
    for r in top..(top + rh).min(h) {
        for c in left..(left + rw).min(w) {
            labels[(r * w + c) as usize] = label;
        }
    }
    LabelMask::new(w, h, labels).unwrap()
}

fn write_mask(path: &Path, mask: &LabelMask) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, encode_mask(mask, MaskFormat::GrayscaleImage).unwrap()).unwrap();
}

/// Ten 64x48 cases, references plus two teams: `alpha` predicts perfectly,
/// `beta` predicts shifted rectangles and omits case 7.
fn binary_fixture() -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    let root = dir.path().join("data");
    for case in 0..10u32 {
        let reference = rect_mask(64, 48, 4 + case, 6 + case, 10, 12, 1);
        let id = format!("case{case:02}");
        write_mask(&root.join("references/1").join(format!("{id}.png")), &reference);
        write_mask(&root.join("alpha/1").join(format!("{id}.png")), &reference);
        if case != 7 {
            let shifted = rect_mask(64, 48, 6 + case, 8 + case, 10, 12, 1);
            write_mask(&root.join("beta/1").join(format!("{id}.png")), &shifted);
        }
    }
    (dir, root)
}

fn read_csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn evaluate_perfect_predictions_score_one() {
    let (_tmp, root) = binary_fixture();
    let out = root.parent().unwrap().join("out");
    // exit code 2: beta is missing case07
    let code = exit_code(&[
        "evaluate",
        "--data",
        root.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--task",
        "binary-seg",
    ]);
    assert_eq!(code, 2);

    let rows = read_csv_rows(&out.join("metrics.csv"));
    let alpha_dsc: Vec<&Vec<String>> = rows
        .iter()
        .filter(|r| r[0] == "alpha" && r[4] == "DSC")
        .collect();
    assert_eq!(alpha_dsc.len(), 10);
    assert!(alpha_dsc.iter().all(|r| r[5] == "1"));

    // the missing prediction is a MISSING row (empty value field)
    let missing: Vec<&Vec<String>> = rows
        .iter()
        .filter(|r| r[0] == "beta" && r[3] == "case07")
        .collect();
    assert_eq!(missing.len(), 2);
    assert!(missing.iter().all(|r| r[5].is_empty()));
}

#[test]
fn evaluate_rows_match_library_recomputation() {
    let (_tmp, root) = binary_fixture();
    let out = root.parent().unwrap().join("out");
    segbench_bin()
        .args([
            "evaluate",
            "--data",
            root.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--task",
            "binary-seg",
            "--tau",
            "2",
        ])
        .output()
        .unwrap();

    for row in read_csv_rows(&out.join("metrics.csv")) {
        if row[5].is_empty() {
            continue;
        }
        let reference = segbench::load_mask(
            &fs::read(root.join("references/1").join(format!("{}.png", row[3]))).unwrap(),
            MaskFormat::GrayscaleImage,
        )
        .unwrap();
        let prediction = segbench::load_mask(
            &fs::read(root.join(&row[0]).join("1").join(format!("{}.png", row[3]))).unwrap(),
            MaskFormat::GrayscaleImage,
        )
        .unwrap();
        let want = match row[4].as_str() {
            "DSC" => segbench::dsc(&reference, &prediction).unwrap(),
            "NSD" => segbench::nsd(&reference, &prediction, 2.0).unwrap(),
            other => panic!("unexpected metric {other}"),
        };
        let got: f64 = row[5].parse().unwrap();
        assert_eq!(got, want, "row {row:?}");
    }
}

#[test]
fn evaluate_is_deterministic_across_runs_and_jobs() {
    let (_tmp, root) = binary_fixture();
    let parent = root.parent().unwrap();
    for (dir, jobs) in [("o1", "1"), ("o2", "1"), ("o4", "4")] {
        segbench_bin()
            .args([
                "evaluate",
                "--data",
                root.to_str().unwrap(),
                "--out",
                parent.join(dir).to_str().unwrap(),
                "--task",
                "binary-seg",
                "--jobs",
                jobs,
            ])
            .output()
            .unwrap();
    }
    let m1 = fs::read(parent.join("o1/metrics.csv")).unwrap();
    let m2 = fs::read(parent.join("o2/metrics.csv")).unwrap();
    let m4 = fs::read(parent.join("o4/metrics.csv")).unwrap();
    assert_eq!(m1, m2);
    assert_eq!(m1, m4);
    let c1 = fs::read(parent.join("o1/run_config.json")).unwrap();
    let c2 = fs::read(parent.join("o2/run_config.json")).unwrap();
    assert_eq!(c1, c2);
}

#[test]
fn evaluate_survives_an_unreadable_mask() {
    let (_tmp, root) = binary_fixture();
    // corrupt one of alpha's predictions
    fs::write(root.join("alpha/1/case03.png"), b"not a png").unwrap();
    let out = root.parent().unwrap().join("out");
    let code = exit_code(&[
        "evaluate",
        "--data",
        root.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--task",
        "binary-seg",
        "--teams",
        "alpha",
    ]);
    assert_eq!(code, 2);

    // the bad case is recorded and the rest of the run completed
    let rows = read_csv_rows(&out.join("metrics.csv"));
    assert_eq!(rows.len(), 20);
    let bad: Vec<&Vec<String>> = rows.iter().filter(|r| r[3] == "case03").collect();
    assert!(bad.iter().all(|r| r[5].is_empty()));
    let good = rows.iter().filter(|r| !r[5].is_empty()).count();
    assert_eq!(good, 18);

    let errors = fs::read_to_string(out.join("errors.csv")).unwrap();
    assert!(errors.contains("case03"));
    let log = fs::read_to_string(out.join("run.log")).unwrap();
    assert!(log.contains("error: team=alpha stage=1 case=case03"));
}

#[test]
fn evaluate_multiseg_emits_mi_metrics() {
    let dir = TempDir::new().unwrap();
    let root = dir.path().join("data");
    for case in 0..3u32 {
        let mut labels = vec![0u16; 64 * 48];
        for (r, c) in (10..14u32).flat_map(|r| (10..16u32).map(move |c| (r, c))) {
            labels[(r * 64 + c) as usize] = 1;
        }
        for (r, c) in (30..34u32).flat_map(|r| (30..36u32).map(move |c| (r, c))) {
            labels[(r * 64 + c) as usize] = 2;
        }
        let reference = LabelMask::new(64, 48, labels).unwrap();
        let id = format!("case{case}");
        write_mask(&root.join("references/2").join(format!("{id}.png")), &reference);
        write_mask(&root.join("gamma/2").join(format!("{id}.png")), &reference);
    }
    let out = dir.path().join("out");
    let code = exit_code(&[
        "evaluate",
        "--data",
        root.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--task",
        "multi-seg",
    ]);
    assert_eq!(code, 0);
    let rows = read_csv_rows(&out.join("metrics.csv"));
    assert!(rows.iter().all(|r| r[1] == "multi-seg" && r[2] == "2"));
    assert_eq!(rows.iter().filter(|r| r[4] == "MI_DSC").count(), 3);
    assert!(rows
        .iter()
        .filter(|r| r[4] == "MI_DSC" || r[4] == "MI_NSD")
        .all(|r| r[5] == "1"));
}

fn write_metrics_csv(path: &Path, body: &str) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, format!("team,task,stage,case_id,metric,value\n{body}")).unwrap();
}

#[test]
fn rank_accuracy_reproduces_published_rank_column() {
    // dominance-chain fixture: aggregates k/9 match the published
    // stage-3 DSC accuracy column after 2-decimal display rounding
    let teams = [
        "fisensee",
        "haoyun",
        "CASIA_SRL",
        "Uniandes",
        "caresyntax",
        "SQUASH",
        "www",
        "Djh",
        "VIE",
        "NCT",
    ];
    let dir = TempDir::new().unwrap();
    let mut body = String::new();
    for (t, team) in teams.iter().enumerate() {
        for case in 0..20 {
            let v = 0.95 - 0.08 * t as f64 - 0.001 * case as f64;
            body.push_str(&format!("{team},binary-seg,3,case{case:02},DSC,{v}\n"));
        }
    }
    let metrics = dir.path().join("metrics.csv");
    write_metrics_csv(&metrics, &body);
    let out = dir.path().join("out");
    run_ok(&[
        "rank",
        "--metrics",
        metrics.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--mode",
        "accuracy",
    ]);

    let rows = read_csv_rows(&out.join("leaderboard_DSC_accuracy_stage3.csv"));
    let got_teams: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(got_teams, teams);
    let ranks: Vec<usize> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(ranks, (1..=10).collect::<Vec<_>>());
    assert_eq!(rows[0][1], "1.000000");
    assert_eq!(rows[1][1], "0.888889"); // displays as 0.89

    let json = fs::read_to_string(out.join("leaderboard_DSC_accuracy_stage3.json")).unwrap();
    assert!(json.contains("\"alpha\": 0.05"));
}

#[test]
fn rank_robustness_shares_the_trailing_rank() {
    // constant per-case rows make the 5% quantile equal the constant,
    // reproducing the published robustness column with its four-way tie
    let teams_values = [
        ("haoyun", 0.52),
        ("CASIA_SRL", 0.50),
        ("www", 0.49),
        ("fisensee", 0.34),
        ("Uniandes", 0.28),
        ("SQUASH", 0.22),
        ("caresyntax", 0.0),
        ("Djh", 0.0),
        ("NCT", 0.0),
        ("VIE", 0.0),
    ];
    let dir = TempDir::new().unwrap();
    let mut body = String::new();
    for (team, value) in teams_values {
        for case in 0..20 {
            body.push_str(&format!("{team},binary-seg,3,case{case:02},DSC,{value}\n"));
        }
    }
    let metrics = dir.path().join("metrics.csv");
    write_metrics_csv(&metrics, &body);
    let out = dir.path().join("out");
    run_ok(&[
        "rank",
        "--metrics",
        metrics.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--mode",
        "robustness",
    ]);
    let rows = read_csv_rows(&out.join("leaderboard_DSC_robustness_stage3.csv"));
    let ranks: Vec<usize> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(ranks, vec![1, 2, 3, 4, 5, 6, 7, 7, 7, 7]);
}

#[test]
fn rank_detection_reproduces_stage1_fixture() {
    let teams_values = [
        ("Isensee", 1.000),
        ("Uniandes", 1.000),
        ("SQUASH", 0.967),
        ("Caresyntax", 0.944),
        ("www", 0.900),
        ("VIE", 0.750),
    ];
    let dir = TempDir::new().unwrap();
    let mut body = String::new();
    for (team, value) in teams_values {
        body.push_str(&format!("{team},multi-det,1,,mAP,{value}\n"));
    }
    let metrics = dir.path().join("metrics.csv");
    write_metrics_csv(&metrics, &body);
    let out = dir.path().join("out");
    run_ok(&[
        "rank",
        "--metrics",
        metrics.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--mode",
        "detection",
    ]);
    let rows = read_csv_rows(&out.join("leaderboard_mAP_detection_stage1.csv"));
    let ranks: Vec<usize> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(ranks, vec![1, 1, 3, 4, 5, 6]);
    // mAP aggregates are exported at 3 decimals
    assert_eq!(rows[0][1], "1.000");
    assert_eq!(rows[2][1], "0.967");
}

#[test]
fn rank_single_team_is_rank_one() {
    let dir = TempDir::new().unwrap();
    let metrics = dir.path().join("metrics.csv");
    write_metrics_csv(&metrics, "solo,binary-seg,1,c0,DSC,0.8\nsolo,binary-seg,1,c1,DSC,0.9\n");
    let out = dir.path().join("out");
    run_ok(&[
        "rank",
        "--metrics",
        metrics.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--mode",
        "robustness",
    ]);
    let rows = read_csv_rows(&out.join("leaderboard_DSC_robustness_stage1.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][2], "1");
}

#[test]
fn unknown_modes_and_tasks_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    let metrics = dir.path().join("metrics.csv");
    write_metrics_csv(&metrics, "a,binary-seg,1,c0,DSC,0.5\n");
    assert_eq!(
        exit_code(&[
            "rank",
            "--metrics",
            metrics.to_str().unwrap(),
            "--out",
            dir.path().join("o").to_str().unwrap(),
            "--mode",
            "fanciness",
        ]),
        1
    );
    assert_eq!(
        exit_code(&[
            "evaluate",
            "--data",
            dir.path().to_str().unwrap(),
            "--out",
            dir.path().join("o").to_str().unwrap(),
            "--task",
            "nope",
        ]),
        1
    );
    // unreadable metrics file is a fatal I/O error
    assert_eq!(
        exit_code(&[
            "rank",
            "--metrics",
            dir.path().join("absent.csv").to_str().unwrap(),
            "--out",
            dir.path().join("o").to_str().unwrap(),
            "--mode",
            "accuracy",
        ]),
        3
    );
}

#[test]
fn bootstrap_outputs_are_seed_deterministic() {
    let dir = TempDir::new().unwrap();
    let mut body = String::new();
    for case in 0..12 {
        body.push_str(&format!("top,binary-seg,1,c{case:02},DSC,0.9\n"));
        body.push_str(&format!(
            "mid,binary-seg,1,c{case:02},DSC,{}\n",
            0.4 + 0.01 * case as f64
        ));
        body.push_str(&format!(
            "low,binary-seg,1,c{case:02},DSC,{}\n",
            0.1 + 0.01 * case as f64
        ));
    }
    let metrics = dir.path().join("metrics.csv");
    write_metrics_csv(&metrics, &body);

    for out in ["b1", "b2"] {
        run_ok(&[
            "bootstrap",
            "--metrics",
            metrics.to_str().unwrap(),
            "--out",
            dir.path().join(out).to_str().unwrap(),
            "--ranker",
            "robustness",
            "--b",
            "50",
            "--seed",
            "7",
        ]);
    }
    let csv1 = fs::read(dir.path().join("b1/bootstrap_DSC_robustness_stage1.csv")).unwrap();
    let csv2 = fs::read(dir.path().join("b2/bootstrap_DSC_robustness_stage1.csv")).unwrap();
    assert_eq!(csv1, csv2);
    let json1 = fs::read(dir.path().join("b1/bootstrap_DSC_robustness_stage1.json")).unwrap();
    let json2 = fs::read(dir.path().join("b2/bootstrap_DSC_robustness_stage1.json")).unwrap();
    assert_eq!(json1, json2);

    // dominant team: every replicate puts `top` at rank 1
    let text = String::from_utf8(csv1).unwrap();
    assert!(text.contains("top,1,50"));
    let json = String::from_utf8(json1).unwrap();
    assert!(json.contains("\"b\": 50"));
    assert!(json.contains("\"seed\": 7"));
}

#[test]
fn bootstrap_single_replicate_rows_sum_to_one() {
    let dir = TempDir::new().unwrap();
    let metrics = dir.path().join("metrics.csv");
    write_metrics_csv(
        &metrics,
        "a,binary-seg,1,c0,DSC,0.9\na,binary-seg,1,c1,DSC,0.8\n\
         b,binary-seg,1,c0,DSC,0.5\nb,binary-seg,1,c1,DSC,0.4\n",
    );
    let out = dir.path().join("out");
    run_ok(&[
        "bootstrap",
        "--metrics",
        metrics.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--ranker",
        "significance",
        "--b",
        "1",
        "--seed",
        "3",
    ]);
    let rows = read_csv_rows(&out.join("bootstrap_DSC_significance_stage1.csv"));
    for team in ["a", "b"] {
        let total: usize = rows
            .iter()
            .filter(|r| r[0] == team)
            .map(|r| r[2].parse::<usize>().unwrap())
            .sum();
        assert_eq!(total, 1);
    }
}

#[test]
fn report_kinds_produce_expected_files() {
    let dir = TempDir::new().unwrap();
    let mut body = String::new();
    // per-case value decreasing with instrument count; three stages with
    // a uniform shift between them
    let instruments = [1u32, 1, 2, 3, 4, 5];
    for stage in 1..=3u8 {
        let shift = 0.03 * (stage as f64 - 1.0);
        for (i, n) in instruments.iter().enumerate() {
            let v = 0.9 - 0.1 * (*n as f64 - 1.0) - shift;
            body.push_str(&format!("a,binary-seg,{stage},case{i},DSC,{v}\n"));
        }
    }
    let metrics = dir.path().join("metrics.csv");
    write_metrics_csv(&metrics, &body);
    let cases = dir.path().join("cases.csv");
    let mut cases_body = String::from("case_id,stage,surgery_type,instrument_count\n");
    for (i, n) in instruments.iter().enumerate() {
        cases_body.push_str(&format!("case{i},1,rectal,{n}\n"));
    }
    fs::write(&cases, cases_body).unwrap();

    // stratify: strictly decreasing bucket means on the monotone fixture
    let out = dir.path().join("strat");
    run_ok(&[
        "report",
        "--metrics",
        metrics.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--kind",
        "stratify",
        "--cases",
        cases.to_str().unwrap(),
        "--stage",
        "1",
    ]);
    let rows = read_csv_rows(&out.join("stratified_DSC_stage1.csv"));
    assert_eq!(rows.len(), 5);
    let means: Vec<f64> = rows
        .iter()
        .filter(|r| !r[2].is_empty())
        .map(|r| r[2].parse().unwrap())
        .collect();
    assert!(means.windows(2).all(|w| w[0] > w[1]), "{means:?}");

    // worst: k larger than the case count returns all, flagged
    let out = dir.path().join("worst");
    run_ok(&[
        "report",
        "--metrics",
        metrics.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--kind",
        "worst",
        "--k",
        "100",
        "--stage",
        "1",
        "--cases",
        cases.to_str().unwrap(),
    ]);
    let rows = read_csv_rows(&out.join("worst_DSC_stage1.csv"));
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0][0], "case5"); // lowest value
    let note = fs::read_to_string(out.join("worst_DSC_stage1.txt")).unwrap();
    assert!(note.contains("fewer than the requested k=100"));

    // stages: medians drop by exactly the constructed shift
    let out = dir.path().join("stages");
    run_ok(&[
        "report",
        "--metrics",
        metrics.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--kind",
        "stages",
    ]);
    let rows = read_csv_rows(&out.join("stages_DSC.csv"));
    assert_eq!(rows.len(), 3);
    let medians: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!((medians[0] - medians[1] - 0.03).abs() < 1e-12);
    assert!((medians[1] - medians[2] - 0.03).abs() < 1e-12);
}

#[test]
fn match_command_prints_assignment_and_counts() {
    let dir = TempDir::new().unwrap();
    let mut labels = vec![0u16; 32 * 32];
    for (r, c) in (4..10u32).flat_map(|r| (4..10u32).map(move |c| (r, c))) {
        labels[(r * 32 + c) as usize] = 1;
    }
    for (r, c) in (20..26u32).flat_map(|r| (20..26u32).map(move |c| (r, c))) {
        labels[(r * 32 + c) as usize] = 2;
    }
    let reference = LabelMask::new(32, 32, labels).unwrap();
    let prediction = rect_mask(32, 32, 4, 4, 6, 6, 9);
    let ref_path = dir.path().join("ref.png");
    let pred_path = dir.path().join("pred.png");
    write_mask(&ref_path, &reference);
    write_mask(&pred_path, &prediction);

    let out = run_ok(&[
        "match",
        "--reference",
        ref_path.to_str().unwrap(),
        "--prediction",
        pred_path.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("reference: 2 instance(s); prediction: 1 instance(s)"));
    assert!(stdout.contains("ref 1 -> pred 9"));
    assert!(stdout.contains("unmatched refs: [2]"));
    assert!(stdout.contains("tp=1 fp=0 fn=1"));
}

#[test]
fn tau_command_derives_the_offset() {
    let dir = TempDir::new().unwrap();
    let root = dir.path().join("ann");
    let a = rect_mask(16, 1, 0, 1, 1, 1, 1);
    let b = rect_mask(16, 1, 0, 3, 1, 1, 1);
    write_mask(&root.join("rater1/img0.png"), &a);
    write_mask(&root.join("rater2/img0.png"), &b);
    let out_dir = dir.path().join("out");
    let out = run_ok(&[
        "tau",
        "--annotations",
        root.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("tau = 2"), "stdout: {stdout}");
    let json = fs::read_to_string(out_dir.join("tau.json")).unwrap();
    assert!(json.contains("\"tau\": 2"));
    assert!(json.contains("\"quantile\": 0.95"));

    // mismatched image sets are a usage error
    write_mask(&root.join("rater1/img1.png"), &a);
    assert_eq!(
        exit_code(&["tau", "--annotations", root.to_str().unwrap()]),
        1
    );
}

#[test]
fn config_file_applies_and_flags_override() {
    let (_tmp, root) = binary_fixture();
    let parent = root.parent().unwrap();
    let config = parent.join("run.conf");
    fs::write(&config, "tau = 4\nxi = 0.5  # stricter\njobs = 2\n").unwrap();

    let out = parent.join("out");
    segbench_bin()
        .args([
            "evaluate",
            "--data",
            root.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--task",
            "binary-seg",
            "--config",
            config.to_str().unwrap(),
            "--tau",
            "6",
        ])
        .output()
        .unwrap();
    let doc = fs::read_to_string(out.join("run_config.json")).unwrap();
    assert!(doc.contains("\"tau\": 6.0"), "flag overrides config: {doc}");
    assert!(doc.contains("\"xi\": 0.5"), "config overrides default: {doc}");
    assert!(doc.contains("\"jobs\": 2"));
}

#[test]
fn multi_det_masks_and_detections_csv_agree() {
    let dir = TempDir::new().unwrap();
    let root = dir.path().join("data");
    // two cases, two reference instances each
    for case in 0..2u32 {
        let mut labels = vec![0u16; 48 * 32];
        for (r, c) in (2..8u32).flat_map(|r| (2..10u32).map(move |c| (r, c))) {
            labels[(r * 48 + c) as usize] = 1;
        }
        for (r, c) in (20..26u32).flat_map(|r| (20..30u32).map(move |c| (r, c))) {
            labels[(r * 48 + c) as usize] = 2;
        }
        let reference = LabelMask::new(48, 32, labels).unwrap();
        let id = format!("case{case}");
        write_mask(&root.join("references/1").join(format!("{id}.png")), &reference);
        // mask-based team predicts instance 1 only
        let partial = rect_mask(48, 32, 2, 2, 6, 8, 5);
        write_mask(&root.join("maskteam/1").join(format!("{id}.png")), &partial);
        // csv-based team provides the same prediction through detections.csv
        write_mask(&root.join("csvteam/1").join(format!("det_{id}.png")), &partial);
    }
    let mut det_csv = String::from("case_id,instance_label,confidence,mask_path\n");
    det_csv.push_str("case0,5,0.9,det_case0.png\n");
    det_csv.push_str("case1,5,,det_case1.png\n"); // empty confidence -> 1.0
    fs::write(root.join("csvteam/1/detections.csv"), det_csv).unwrap();

    let out = dir.path().join("out");
    let code = exit_code(&[
        "evaluate",
        "--data",
        root.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--task",
        "multi-det",
    ]);
    assert_eq!(code, 0);

    let rows = read_csv_rows(&out.join("metrics.csv"));
    for team in ["maskteam", "csvteam"] {
        let tp: Vec<&Vec<String>> = rows
            .iter()
            .filter(|r| r[0] == team && r[4] == "tp")
            .collect();
        assert_eq!(tp.len(), 2, "{team}");
        assert!(tp.iter().all(|r| r[5] == "1"), "{team}");
        let fns: Vec<&Vec<String>> = rows
            .iter()
            .filter(|r| r[0] == team && r[4] == "fn")
            .collect();
        assert!(fns.iter().all(|r| r[5] == "1"), "{team}");
        let map_row = rows
            .iter()
            .find(|r| r[0] == team && r[4] == "mAP")
            .unwrap();
        // half of the reference instances found, all detections correct:
        // interpolated AP = 0.5
        assert_eq!(map_row[5], "0.5", "{team}");
    }
}
