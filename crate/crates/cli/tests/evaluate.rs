mod common;

use cospeech::metrics::MetricReport;
use cospeech_cli::corpus::read_json;
use cospeech_cli::evaluate::{cmd_evaluate, REPORT_CSV, REPORT_JSON};

#[test]
fn ground_truth_against_itself() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::trained(dir.path());
    let (r, path) = cmd_evaluate(&cfg, "test", true).unwrap();
    assert_eq!(path, cfg.out.join(REPORT_JSON));
    assert_eq!((r.male_mm, r.maje_mm, r.mace_lm, r.mace_p), (0.0, 0.0, 0.0, 0.0));
    assert!(r.fld < 1e-6 && r.fgd < 1e-6, "{r:?}");
}

#[test]
fn report_files_in_table_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::trained(dir.path());
    let (r, _) = cmd_evaluate(&cfg, "test", false).unwrap();
    assert!(r.male_mm > 0.0 && r.maje_mm > 0.0);
    assert_eq!(read_json::<MetricReport>(&cfg.out.join(REPORT_JSON)).unwrap(), r);
    let csv = std::fs::read_to_string(cfg.out.join(REPORT_CSV)).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "MALE,MAJE,MAcE-LM,MAcE-P,FLD,FGD");
    let row: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row, r.values());
}

#[test]
fn empty_split() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = common::trained(dir.path());
    cfg.split = cospeech_cli::config::SplitRatios {
        train: 0.9,
        val: 0.1,
        test: 0.0,
    };
    std::fs::remove_file(cfg.corpus.join("manifest.json")).unwrap();
    cospeech_cli::preprocess::cmd_preprocess(&cfg).unwrap();
    let e = cmd_evaluate(&cfg, "test", false).unwrap_err();
    assert!(
        matches!(e, cospeech_cli::CliError::Core(cospeech::Error::EmptySplit(_))),
        "{e}"
    );
    assert_eq!(e.exit_code(), 2);
}
