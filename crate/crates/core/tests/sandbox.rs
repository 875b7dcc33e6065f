mod common;

use std::time::Duration;

use fcore::problem::{ProblemRng, Registry, Verdict};
use fcore::sandbox::{classify_parts, Interpreter, OutcomeKind, Sandbox, SandboxError};
use rand::SeedableRng;

fn sandbox(secs: u64) -> Sandbox {
    Sandbox::new(Interpreter::python(), Duration::from_secs(secs), 4)
}

#[test]
fn classification_truth_table_is_total_and_exclusive() {
    let exits = [Some(0), Some(1), Some(-3), None];
    let outputs = [None, Some("1 2\n")];
    let verdicts = [Verdict::correct(), Verdict::incorrect("row 1 repeats 2"), Verdict::malformed("junk")];
    let mut seen = std::collections::BTreeMap::new();
    for exit in exits {
        for killed in [false, true] {
            for output in outputs {
                for verdict in &verdicts {
                    let mut verifier_ran = false;
                    let outcome =
                        classify_parts(exit, killed, output, "Traceback: boom", Duration::from_secs(3), |_| {
                            verifier_ran = true;
                            verdict.clone()
                        });
                    let expected = if killed {
                        OutcomeKind::Timeout
                    } else if exit != Some(0) {
                        OutcomeKind::RuntimeError
                    } else if output.is_none() {
                        OutcomeKind::WrongOutput
                    } else if verdict.is_correct() {
                        OutcomeKind::Correct
                    } else {
                        OutcomeKind::WrongOutput
                    };
                    assert_eq!(outcome.kind, expected, "{exit:?} {killed} {output:?} {verdict:?}");
                    assert_eq!(verifier_ran, !killed && exit == Some(0) && output.is_some());
                    *seen.entry(format!("{:?}", outcome.kind)).or_insert(0) += 1;
                }
            }
        }
    }
    assert_eq!(seen.values().sum::<i32>(), 4 * 2 * 2 * 3);
    assert_eq!(seen.len(), OutcomeKind::ALL.len());
}

#[test]
fn runtime_error_detail_is_the_traceback_tail() {
    let out =
        classify_parts(Some(1), false, None, "Traceback\nValueError: bad", Duration::from_secs(1), |_| unreachable!());
    assert_eq!(out.kind, OutcomeKind::RuntimeError);
    assert!(out.detail.ends_with("ValueError: bad"));
}

#[test]
fn fixtures_classify_as_expected() {
    let registry = Registry::builtin();
    let adapter = &registry.get("latin-square").unwrap().adapter;
    let inst = adapter.instance_from_text("1 0 0\n0 0 0\n0 0 3\n").unwrap();
    let sb = sandbox(20);
    let kind = |variant: &str| sb.run(&common::fixture("latin-square", variant), &inst, adapter.as_ref()).unwrap().0;
    let crash = kind("runtime_error");
    assert_eq!(crash.kind, OutcomeKind::RuntimeError);
    assert!(crash.detail.contains("ValueError"));
    assert!(!crash.detail.contains("/tmp"));
    assert_eq!(kind("wrong_output").kind, OutcomeKind::WrongOutput);
    assert_eq!(kind("symprolm").kind, OutcomeKind::Correct);
}

#[test]
fn golden_fixtures_solve_generated_instances() {
    let registry = Registry::builtin();
    let sb = sandbox(60);
    let golden = [
        ("sudoku", "symprolm"),
        ("latin-square", "symprolm"),
        ("magic-square", "symprolm"),
        ("sujiko", "symprolm"),
        ("futoshiki", "symprolm"),
        ("survo", "symprolm"),
        ("binairo", "symprolm_fixed"),
        ("n-queens", "symprolm"),
        ("graph-coloring", "symprolm"),
        ("vertex-cover", "symprolm"),
        ("hamiltonian-path", "symprolm"),
        ("subset-sum", "symprolm"),
        ("hamiltonian-path", "pal"),
        ("subset-sum", "pal"),
    ];
    for (id, variant) in golden {
        let handle = registry.get(id).unwrap();
        let (train, test) = handle.adapter.default_sizes();
        let mut rng = ProblemRng::seed_from_u64(21);
        let instances: Vec<_> = (0..2)
            .flat_map(|_| if variant == "pal" { [&train, &train] } else { [&train, &test] })
            .map(|s| handle.adapter.generate(s, &mut rng).unwrap())
            .collect();
        let results = sb.run_all(&common::fixture(id, variant), &instances, handle.adapter.as_ref()).unwrap();
        for (inst, (outcome, _)) in instances.iter().zip(results) {
            assert_eq!(outcome.kind, OutcomeKind::Correct, "{id}/{variant} on\n{}\n{}", inst.text, outcome.detail);
        }
    }
}

#[test]
fn concurrent_runs_do_not_share_files() {
    let registry = Registry::builtin();
    let adapter = &registry.get("subset-sum").unwrap().adapter;
    let instances: Vec<_> =
        (1..=24).map(|k| adapter.instance_from_text(&format!("{k} {}\n{k}\n", k + 100)).unwrap()).collect();
    let src = "import os, time\n\
               assert sorted(os.listdir('.')) == ['input.txt'], os.listdir('.')\n\
               data = open('input.txt').read().split()\n\
               time.sleep(0.05)\n\
               open('output.txt', 'w').write(data[0] + '\\n')\n";
    let results = sandbox(20).run_all(src, &instances, adapter.as_ref()).unwrap();
    assert_eq!(results.len(), 24);
    for (outcome, _) in results {
        assert_eq!(outcome.kind, OutcomeKind::Correct, "{}", outcome.detail);
    }
}

#[test]
fn endless_program_is_killed() {
    let registry = Registry::builtin();
    let adapter = &registry.get("subset-sum").unwrap().adapter;
    let inst = adapter.instance_from_text("1 2\n3\n").unwrap();
    let started = std::time::Instant::now();
    let (outcome, _) = sandbox(1).run("while True:\n    pass\n", &inst, adapter.as_ref()).unwrap();
    assert_eq!(outcome.kind, OutcomeKind::Timeout);
    assert!(started.elapsed() < Duration::from_secs(5));
}

#[test]
fn missing_interpreter_is_an_environment_error() {
    let sb = Sandbox::new(Interpreter::parse("no-such-python-here").unwrap(), Duration::from_secs(1), 1);
    assert!(matches!(sb.execute("x = 1\n", "1\n"), Err(SandboxError::Environment(..))));
}
