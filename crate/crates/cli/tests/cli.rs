use std::path::Path;
use std::process::{Command, Output};

use fcore::config::ExperimentConfig;
use fcore::llm::{RecordingProvider, ScriptedProvider};
use fcore::orchestrator::{prepare_datasets, run_experiment};
use fcore::problem::Registry;

fn fcore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcore")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn verify_reports_and_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.txt", "4\n0 1\n1 2\n2 3\n");
    let yes = write(dir.path(), "yes.txt", "YES\n");
    let no = write(dir.path(), "no.txt", "NO\n");
    let junk = write(dir.path(), "junk.txt", "maybe\n");
    let ok = fcore(&["verify", "--problem", "hamiltonian-path", "--input", &input, "--candidate", &yes]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(stdout(&ok), "CORRECT\n");
    let wrong = fcore(&["verify", "--problem", "hamiltonian-path", "--input", &input, "--candidate", &no]);
    assert_eq!(wrong.status.code(), Some(1));
    assert!(stdout(&wrong).starts_with("INCORRECT: "));
    let bad = fcore(&["verify", "--problem", "hamiltonian-path", "--input", &input, "--candidate", &junk]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).starts_with("MALFORMED: "));
}

#[test]
fn solve_prints_or_reports_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let two = write(dir.path(), "q2.txt", "0 0\n0 0\n");
    let o = fcore(&["solve", "--problem", "n-queens", "--input", &two]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "INFEASIBLE\n");

    let latin = write(dir.path(), "l.txt", "1 0\n0 0\n");
    let o = fcore(&["solve", "--problem", "latin-square", "--input", &latin]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "1 2\n2 1\n");
}

#[test]
fn usage_and_domain_errors() {
    assert_eq!(fcore(&["verify", "--bogus"]).status.code(), Some(2));
    assert_eq!(fcore(&[]).status.code(), Some(2));
    let o = fcore(&["solve", "--problem", "chess", "--input", "/dev/null"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("chess"));
}

#[test]
fn gen_writes_a_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ds");
    let o = fcore(&[
        "gen",
        "--problem",
        "sudoku",
        "--train",
        "2",
        "--test",
        "2",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
        "--test-size",
        "grid_n=4",
        "--test-size",
        "grid_n=9",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let loaded = fcore::dataset::load_dataset(&Registry::builtin(), &out).unwrap();
    assert_eq!((loaded.train.len(), loaded.test.len()), (2, 4));
}

#[test]
fn run_from_cassette_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let program = std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/latin-square/symprolm.py"),
    )
    .unwrap();
    let config = write(
        dir.path(),
        "exp.conf",
        "methods = symprolm\nmodel = m\nproblems = latin-square\nruns = 2\nsolved_examples = 3\n\
         test_count = 3\ntrain_size.latin-square = grid_n=4\ntest_size.latin-square = grid_n=5\n\
         cassette = tape.jsonl\noutput_dir = out\n",
    );
    let cfg = ExperimentConfig::load(Path::new(&config)).unwrap();
    let registry = Registry::builtin();
    let datasets = prepare_datasets(&cfg, &registry).unwrap();
    let reply = format!("```python\n{program}```\n");
    let recorder =
        RecordingProvider::to_file(ScriptedProvider::new([reply.clone(), reply]), &dir.path().join("tape.jsonl"))
            .unwrap();
    run_experiment(&cfg, &registry, &datasets, &recorder).unwrap();
    drop(recorder);

    let mut reports = Vec::new();
    for _ in 0..2 {
        let o = fcore(&["run", "--config", &config]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let out_dir = stdout(&o).trim().to_string();
        reports.push(std::fs::read(Path::new(&out_dir).join("report.json")).unwrap());
        assert!(Path::new(&out_dir).join("transcripts/latin-square.symprolm.jsonl").exists());

        let md = fcore(&["report", "--dir", &out_dir]);
        assert_eq!(md.status.code(), Some(0));
        assert!(stdout(&md).contains("| m | - | - | - | - | - | 100.00 | 100.00 |"), "{}", stdout(&md));
    }
    assert_eq!(reports[0], reports[1]);
}
