mod common;

use std::collections::BTreeSet;

use fcore::problem::{Instance, ProblemAdapter, ProblemRng, Registry, SizeDescriptor, Solution, VerdictKind};
use proptest::prelude::*;
use rand::SeedableRng;

fn adapter(id: &str) -> std::sync::Arc<dyn ProblemAdapter> {
    Registry::builtin().get(id).unwrap().adapter.clone()
}

fn instance(id: &str, text: &str) -> Instance {
    adapter(id).instance_from_text(text).unwrap()
}

fn size(s: &str) -> SizeDescriptor {
    s.parse().unwrap()
}

fn small_size(id: &str) -> SizeDescriptor {
    match id {
        "futoshiki" | "latin-square" | "magic-square" | "sujiko" => size("grid_n=3"),
        "sudoku" | "binairo" => size("grid_n=4"),
        "n-queens" => size("grid_n=5"),
        "survo" => size("rows=3,cols=3"),
        "graph-coloring" => size("nodes=5,edges=6"),
        "vertex-cover" => size("nodes=6,edges=9"),
        "hamiltonian-path" => size("nodes=6,edges=8"),
        "subset-sum" => size("array_len=6"),
        other => panic!("{other}"),
    }
}

#[test]
fn solve_output_verifies_and_agrees_with_brute_checker() {
    let registry = Registry::builtin();
    for id in registry.ids() {
        let a = &registry.get(id).unwrap().adapter;
        let (train, _) = a.default_sizes();
        let mut mut_rng = ProblemRng::seed_from_u64(99);
        for seed in 0..200u64 {
            let inst = a.generate(&train, &mut ProblemRng::seed_from_u64(seed)).unwrap();
            let Solution::Found(out) = a.solve(&inst).unwrap() else {
                panic!("{id} seed {seed}: generated instance infeasible");
            };
            assert!(a.verify(&inst, &out).is_correct(), "{id} seed {seed}");
            assert!(common::brute_check(id, &inst.text, &out), "{id} seed {seed}: brute checker disagrees");
            for m in common::mutants(&out, &mut mut_rng) {
                assert_eq!(
                    a.verify(&inst, &m).is_correct(),
                    common::brute_check(id, &inst.text, &m),
                    "{id} seed {seed} mutant {m:?}"
                );
            }
        }
    }
}

#[test]
fn enumeration_matches_brute_force_on_small_instances() {
    let registry = Registry::builtin();
    for id in registry.ids() {
        let a = &registry.get(id).unwrap().adapter;
        for seed in 0..25u64 {
            let inst = a.generate(&small_size(id), &mut ProblemRng::seed_from_u64(seed)).unwrap();
            let mut brute = common::brute_solutions(id, &inst.text);
            let en = a.enumerate(&inst, 64).unwrap();
            let mut got = en.solutions.clone();
            if id == "subset-sum" {
                brute = brute.iter().map(|s| common::sorted_subset(s)).collect();
                got = got.iter().map(|s| common::sorted_subset(s)).collect();
            }
            for s in &en.solutions {
                assert!(a.verify(&inst, s).is_correct(), "{id} seed {seed}");
            }
            if brute.len() <= 64 {
                assert!(!en.truncated, "{id} seed {seed}");
                assert_eq!(got, brute, "{id} seed {seed}\n{}", inst.text);
            } else {
                assert!(en.truncated, "{id} seed {seed}");
                assert_eq!(got.len(), 64);
                assert!(got.is_subset(&brute), "{id} seed {seed}");
            }
        }
    }
}

#[test]
fn empty_three_by_three_latin_square_has_twelve_solutions() {
    let en = adapter("latin-square").enumerate(&instance("latin-square", "0 0 0\n0 0 0\n0 0 0\n"), 64).unwrap();
    assert_eq!(en.solutions.len(), 12);
    assert!(!en.truncated);
    let brute = common::brute_solutions("latin-square", "0 0 0\n0 0 0\n0 0 0\n");
    assert_eq!(en.solutions, brute);
}

#[test]
fn empty_four_by_four_latin_square_truncates_at_cap() {
    let perms: Vec<Vec<u8>> = {
        let mut all = Vec::new();
        for a in 0..4u8 {
            for b in 0..4u8 {
                for c in 0..4u8 {
                    for d in 0..4u8 {
                        let p = vec![a, b, c, d];
                        if p.iter().collect::<BTreeSet<_>>().len() == 4 {
                            all.push(p);
                        }
                    }
                }
            }
        }
        all
    };
    let mut total = 0;
    for r0 in &perms {
        for r1 in &perms {
            for r2 in &perms {
                for r3 in &perms {
                    if (0..4).all(|c| [r0[c], r1[c], r2[c], r3[c]].iter().collect::<BTreeSet<_>>().len() == 4) {
                        total += 1;
                    }
                }
            }
        }
    }
    assert_eq!(total, 576);
    let empty = instance("latin-square", "0 0 0 0\n0 0 0 0\n0 0 0 0\n0 0 0 0\n");
    let en = adapter("latin-square").enumerate(&empty, 10).unwrap();
    assert_eq!(en.solutions.len(), 10);
    assert!(en.truncated);
}

#[test]
fn fully_specified_sudoku_has_exactly_its_completion() {
    let text = "1 2 3 4\n3 4 1 2\n2 1 4 3\n4 3 2 1\n";
    let en = adapter("sudoku").enumerate(&instance("sudoku", text), 64).unwrap();
    assert_eq!(en.solutions.into_iter().collect::<Vec<_>>(), vec![text.to_string()]);
    assert!(!en.truncated);
}

#[test]
fn hamiltonian_path_sample_answers_yes() {
    let inst = instance("hamiltonian-path", "5\n0 1\n1 2\n2 3\n3 4\n");
    let a = adapter("hamiltonian-path");
    assert!(a.verify(&inst, "YES").is_correct());
    assert_eq!(a.verify(&inst, "NO").kind, VerdictKind::Incorrect);
    assert_eq!(a.verify(&inst, "yes").kind, VerdictKind::Malformed);
    assert_eq!(a.verify(&inst, "YES\nNO").kind, VerdictKind::Malformed);
}

#[test]
fn cyclic_latin_square_verifies() {
    let inst = instance("latin-square", "0 0 0\n0 0 0\n0 0 0\n");
    assert!(adapter("latin-square").verify(&inst, "1 2 3\n2 3 1\n3 1 2\n").is_correct());
}

#[test]
fn sudoku_row_duplicate_is_incorrect_with_reason() {
    let inst = instance("sudoku", "0 0 0 0\n0 0 0 0\n0 0 0 0\n0 0 0 0\n");
    let v = adapter("sudoku").verify(&inst, "1 2 3 3\n3 4 1 2\n2 1 4 3\n4 3 2 1\n");
    assert_eq!(v.kind, VerdictKind::Incorrect);
    assert!(v.reason.contains("row 1"), "{}", v.reason);
}

#[test]
fn trailing_blank_lines_tolerated_but_commentary_is_malformed() {
    let inst = instance("latin-square", "0 0\n0 0\n");
    let a = adapter("latin-square");
    assert!(a.verify(&inst, "1 2\n2 1\n\n\n").is_correct());
    assert_eq!(a.verify(&inst, "1 2\n2 1\nThat is the answer.\n").kind, VerdictKind::Malformed);
    assert_eq!(a.verify(&inst, "").kind, VerdictKind::Malformed);
}

#[test]
fn subset_sum_total_of_one_to_ten_takes_everything() {
    let text = "1 2 3 4 5 6 7 8 9 10\n55\n";
    let a = adapter("subset-sum");
    let inst = instance("subset-sum", text);
    assert_eq!(a.solve(&inst).unwrap(), Solution::Found("1 2 3 4 5 6 7 8 9 10\n".into()));
    let brute = common::brute_solutions("subset-sum", text);
    assert_eq!(brute.len(), 1);
    let en = a.enumerate(&inst, 64).unwrap();
    assert_eq!(en.solutions.len(), 1);
}

const COLORING_SAMPLE: &str = "8 3\n0 1\n0 2\n2 4\n3 4\n3 7\n6 7\n0 6\n5 1\n5 0\n5 2\n5 4\n5 3\n5 7\n5 6\n";

#[test]
fn coloring_sample_is_three_colorable() {
    // Vertex 5 touches every other vertex, so the rest must be bipartite.
    let edges: Vec<(usize, usize)> = COLORING_SAMPLE
        .lines()
        .skip(1)
        .map(|l| {
            let v: Vec<usize> = l.split(' ').map(|t| t.parse().unwrap()).collect();
            (v[0], v[1])
        })
        .filter(|(a, b)| *a != 5 && *b != 5)
        .collect();
    let mut side = [None::<bool>; 8];
    let mut bipartite = true;
    for start in (0..8).filter(|v| *v != 5) {
        if side[start].is_some() {
            continue;
        }
        side[start] = Some(false);
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for (a, b) in &edges {
                let other = if *a == v {
                    *b
                } else if *b == v {
                    *a
                } else {
                    continue;
                };
                match side[other] {
                    None => {
                        side[other] = Some(!side[v].unwrap());
                        stack.push(other);
                    }
                    Some(s) if s == side[v].unwrap() => bipartite = false,
                    _ => {}
                }
            }
        }
    }
    assert!(bipartite);
    let a = adapter("graph-coloring");
    let inst = instance("graph-coloring", COLORING_SAMPLE);
    let Solution::Found(out) = a.solve(&inst).unwrap() else { panic!("infeasible") };
    assert!(a.verify(&inst, &out).is_correct());
    assert!(common::brute_check("graph-coloring", COLORING_SAMPLE, &out));
}

#[test]
fn two_queens_is_infeasible() {
    let inst = instance("n-queens", "0 0\n0 0\n");
    assert_eq!(adapter("n-queens").solve(&inst).unwrap(), Solution::Infeasible);
    assert!(common::brute_solutions("n-queens", "0 0\n0 0\n").is_empty());
}

#[test]
fn vertex_cover_generation_matches_requested_shape() {
    let a = adapter("vertex-cover");
    let inst = a.generate(&size("nodes=6,edges=13"), &mut ProblemRng::seed_from_u64(4)).unwrap();
    let lines: Vec<&str> = inst.text.lines().collect();
    assert_eq!(lines.len(), 14);
    assert!(lines[0].starts_with("6 "));
    let truth = common::brute_solutions("vertex-cover", &inst.text);
    assert_eq!(truth.len(), 1);
}

#[test]
fn vertex_cover_and_hamiltonian_generators_emit_both_answers() {
    for id in ["vertex-cover", "hamiltonian-path", "subset-sum"] {
        let a = adapter(id);
        let (train, _) = a.default_sizes();
        let mut answers = BTreeSet::new();
        for seed in 0..40 {
            let inst = a.generate(&train, &mut ProblemRng::seed_from_u64(seed)).unwrap();
            let Solution::Found(out) = a.solve(&inst).unwrap() else { panic!() };
            answers.insert(out.trim() == "NO" || out.trim() == "None");
        }
        assert_eq!(answers.len(), 2, "{id} produced only one kind of answer");
    }
}

#[test]
fn sudoku_generation_is_four_by_four_with_blanks() {
    let a = adapter("sudoku");
    let inst = a.generate(&size("grid_n=4"), &mut ProblemRng::seed_from_u64(1)).unwrap();
    let rows: Vec<&str> = inst.text.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.split(' ').count() == 4));
    assert!(inst.text.contains('0'));
    assert!(inst.text.ends_with('\n') && !inst.text.ends_with("\n\n"));
}

#[test]
fn invalid_sizes_are_rejected() {
    let mut rng = ProblemRng::seed_from_u64(0);
    assert!(adapter("sudoku").generate(&size("grid_n=5"), &mut rng).is_err());
    assert!(adapter("binairo").generate(&size("grid_n=5"), &mut rng).is_err());
    assert!(adapter("magic-square").generate(&size("grid_n=2"), &mut rng).is_err());
    assert!(adapter("vertex-cover").generate(&size("nodes=3,edges=4"), &mut rng).is_err());
    assert!(adapter("sudoku").generate(&size("rows=4"), &mut rng).is_err());
}

#[test]
fn test_sizes_generate_and_solve() {
    let registry = Registry::builtin();
    for id in registry.ids() {
        let a = &registry.get(id).unwrap().adapter;
        let (_, test) = a.default_sizes();
        for seed in 0..5 {
            let inst = a.generate(&test, &mut ProblemRng::seed_from_u64(seed)).unwrap();
            assert_eq!(inst.size, test, "{id}");
            let Solution::Found(out) = a.solve(&inst).unwrap() else { panic!("{id}") };
            assert!(common::brute_check(id, &inst.text, &out), "{id}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn generated_text_round_trips_and_is_feasible(seed in any::<u64>(), which in 0usize..12) {
        let registry = Registry::builtin();
        let id = registry.ids().nth(which).unwrap().to_string();
        let a = &registry.get(&id).unwrap().adapter;
        let (train, _) = a.default_sizes();
        let inst = a.generate(&train, &mut ProblemRng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(a.canonicalize(&inst.text).unwrap(), inst.text.clone());
        prop_assert_eq!(a.size_of(&inst.text).unwrap(), inst.size.clone());
        let again = a.generate(&train, &mut ProblemRng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(&again, &inst);
        match a.solve(&inst).unwrap() {
            Solution::Found(out) => prop_assert!(a.verify(&inst, &out).is_correct()),
            Solution::Infeasible => prop_assert!(false, "infeasible {}", id),
        }
    }

    #[test]
    fn verdict_kinds_are_exclusive_on_arbitrary_text(which in 0usize..12, junk in "[0-9 \\n]{0,40}") {
        let registry = Registry::builtin();
        let id = registry.ids().nth(which).unwrap().to_string();
        let a = &registry.get(&id).unwrap().adapter;
        let (train, _) = a.default_sizes();
        let inst = a.generate(&train, &mut ProblemRng::seed_from_u64(7)).unwrap();
        let v = a.verify(&inst, &junk);
        prop_assert_eq!(v.is_correct(), common::brute_check(&id, &inst.text, &junk));
    }

    #[test]
    fn size_descriptor_display_round_trips(dims in proptest::collection::btree_map("[a-z_]{1,8}", 1u32..1000, 1..4)) {
        let mut s = SizeDescriptor::new();
        for (k, v) in &dims {
            s = s.with(k, *v);
        }
        prop_assert_eq!(s.to_string().parse::<SizeDescriptor>().unwrap(), s);
    }
}
