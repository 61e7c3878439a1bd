use std::collections::BTreeSet;

use memcat_core::exec::{build_candidates, verdict, RunOptions};
use memcat_core::machine::{derive_from_path, enumerate_accepted, run, witness_path, Context, MachineOptions};
use memcat_core::models::bundled_tests;
use memcat_core::{load_builtin, load_program, EvalOptions};

#[test]
fn machine_matches_power_on_bundled_tests() {
    let power = load_builtin("power").unwrap();
    for (name, text) in bundled_tests().unwrap() {
        let prog = load_program(&text).unwrap();
        let v = verdict(&prog, &power.ast, &RunOptions::default()).unwrap();
        let axiomatic: BTreeSet<usize> = v.per_candidate.iter().filter(|c| c.allowed).map(|c| c.index).collect();
        let m = enumerate_accepted(&prog, &power.ast, 8, MachineOptions::default()).unwrap();
        assert_eq!(m.accepted, axiomatic, "{name}");
        assert_eq!(m.states, v.allowed_states, "{name}");
    }
}

#[test]
fn witness_paths_are_accepted() {
    let power = load_builtin("power").unwrap();
    for (name, text) in bundled_tests().unwrap() {
        let prog = load_program(&text).unwrap();
        let v = verdict(&prog, &power.ast, &RunOptions::default()).unwrap();
        for (i, cand) in build_candidates(&prog).enumerate() {
            if !v.per_candidate[i].allowed {
                continue;
            }
            let ctx = Context::from_model(&prog, &cand, &power.ast, &EvalOptions::default(), MachineOptions::default());
            let p = witness_path(&prog, &ctx).unwrap_or_else(|e| panic!("{name} #{i}: {e}"));
            if let Err(b) = run(&prog, &ctx, &p) {
                panic!("{name} #{i}: {} blocked at {} by {}", p.render(&prog), b.index, b.premise);
            }
            assert_eq!(derive_from_path(&prog, &p).unwrap(), (cand.co.clone(), cand.rf.clone()), "{name} #{i}");
        }
    }
}

#[test]
fn literal_premises_miss_read_only_prop_cycles() {
    let power = load_builtin("power").unwrap();
    let literal = MachineOptions { corr: true, prop_closure: false };
    let mut diverging = Vec::new();
    for (name, text) in bundled_tests().unwrap() {
        let prog = load_program(&text).unwrap();
        let v = verdict(&prog, &power.ast, &RunOptions::default()).unwrap();
        let m = enumerate_accepted(&prog, &power.ast, 8, literal).unwrap();
        if m.states != v.allowed_states {
            diverging.push(name);
        }
    }
    assert_eq!(diverging, vec!["iriw+syncs", "r+syncs", "rwc+syncs", "sb+syncs"]);
}

#[test]
fn witness_paths_are_fifo_on_bundled_tests() {
    let power = load_builtin("power").unwrap();
    let mut not_fifo = Vec::new();
    for (name, text) in bundled_tests().unwrap() {
        let prog = load_program(&text).unwrap();
        let v = verdict(&prog, &power.ast, &RunOptions::default()).unwrap();
        for (i, cand) in build_candidates(&prog).enumerate() {
            if v.per_candidate[i].allowed {
                let ctx =
                    Context::from_model(&prog, &cand, &power.ast, &EvalOptions::default(), MachineOptions::default());
                if !witness_path(&prog, &ctx).unwrap().is_fifo() {
                    not_fifo.push(format!("{name}#{i}"));
                }
            }
        }
    }
    assert!(not_fifo.is_empty(), "{not_fifo:?}");
}

#[test]
fn fifo_can_be_impossible() {
    // x=2 needs the x=1 write co-before x=2 but committed after it
    let text = "nofifo Power
init { x=0; y=0; r10=&x; r11=&y; }
thread T0 {
  mov r20, 2
  st [r10], r20
}
thread T1 {
  ld r1, [r10]
  xor r21, r1, r1
  add r22, r21, r11
  mov r20, 1
  st [r22], r20
}
thread T2 {
  ld r1, [r11]
  xor r21, r1, r1
  add r22, r21, r10
  mov r20, 1
  st [r22], r20
}
final exists (T1:r1=2 /\\ T2:r1=1 /\\ x=2)
";
    let prog = load_program(text).unwrap();
    let power = load_builtin("power").unwrap();
    let v = verdict(&prog, &power.ast, &RunOptions::default()).unwrap();
    assert!(v.condition_holds);
    let mut seen = false;
    for (i, cand) in build_candidates(&prog).enumerate() {
        let st = memcat_core::final_state(&prog, &cand);
        if v.per_candidate[i].allowed && v.per_candidate[i].satisfies {
            let ctx = Context::from_model(&prog, &cand, &power.ast, &EvalOptions::default(), MachineOptions::default());
            let p = witness_path(&prog, &ctx).unwrap();
            assert!(run(&prog, &ctx, &p).is_ok());
            assert!(!p.is_fifo(), "{st:?}");
            seen = true;
        }
    }
    assert!(seen);
}
