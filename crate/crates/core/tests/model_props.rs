use memcat_core::cat::{evaluate, EvalOptions};
use memcat_core::exec::{build_candidates, sc_oracle, tso_oracle};
use memcat_core::models::bundled_tests;
use memcat_core::{load_builtin, load_program, parse_model, Arch, Program};

fn power_tests() -> Vec<(String, Program)> {
    bundled_tests()
        .unwrap()
        .into_iter()
        .map(|(n, t)| (n, load_program(&t).unwrap()))
        .filter(|(_, p)| p.arch == Arch::Power)
        .collect()
}

#[test]
fn ppo_inclusions() {
    let power = load_builtin("power").unwrap();
    for (name, prog) in power_tests() {
        for (i, cand) in build_candidates(&prog).enumerate() {
            let (_, env) = evaluate(&power.ast, &prog, &cand, &EvalOptions::default());
            let r = |n: &str| env.get(n).unwrap_or_else(|| panic!("{n} unbound"));
            assert!(r("ci").is_subset(r("ii")), "{name} #{i}: ci <= ii");
            assert!(r("ii").union(r("cc")).is_subset(r("ic")), "{name} #{i}: ii|cc <= ic");
            assert!(r("ci").is_subset(r("cc")), "{name} #{i}: ci <= cc");
            assert!(r("ii0").is_subset(r("ii")), "{name} #{i}: ii0 <= ii");
            assert!(r("cc0").is_subset(r("cc")), "{name} #{i}: cc0 <= cc");
        }
    }
}

#[test]
fn ppo_fixpoint_solves_its_equations() {
    let power = load_builtin("power").unwrap();
    for (name, prog) in power_tests() {
        for cand in build_candidates(&prog) {
            let (_, env) = evaluate(&power.ast, &prog, &cand, &EvalOptions::default());
            let r = |n: &str| env[n].clone();
            let (ii, ic, ci, cc) = (r("ii"), r("ic"), r("ci"), r("cc"));
            assert_eq!(ii, r("ii0").union(&ci).union(&ic.seq(&ci)).union(&ii.seq(&ii)), "{name}");
            assert_eq!(ic, r("ic0").union(&ii).union(&cc).union(&ic.seq(&cc)).union(&ii.seq(&ic)), "{name}");
            assert_eq!(ci, r("ci0").union(&ci.seq(&ii)).union(&cc.seq(&ci)), "{name}");
            assert_eq!(cc, r("cc0").union(&ci).union(&ci.seq(&ic)).union(&cc.seq(&cc)), "{name}");
        }
    }
}

#[test]
fn static_ppo_is_smaller() {
    let power = load_builtin("power").unwrap();
    for (name, prog) in power_tests() {
        for cand in build_candidates(&prog) {
            let (_, full) = evaluate(&power.ast, &prog, &cand, &EvalOptions::default());
            let (_, stat) = evaluate(&power.ast, &prog, &cand, &EvalOptions::static_ppo());
            assert!(stat["ppo"].is_subset(&full["ppo"]), "{name}");
            assert!(stat["rdw"].is_empty() && stat["detour"].is_empty(), "{name}");
        }
    }
}

#[test]
fn lwsync_forms_agree() {
    let m = parse_model("arch Power\nlet a = RM(lwsync)|WW(lwsync)\nlet b = lwsync \\ WR(lwsync)\n").unwrap();
    for (name, prog) in power_tests() {
        for cand in build_candidates(&prog) {
            let (_, env) = evaluate(&m, &prog, &cand, &EvalOptions::default());
            assert_eq!(env["a"], env["b"], "{name}");
        }
    }
}

#[test]
fn sc_and_tso_models_match_oracles() {
    let sc = load_builtin("sc").unwrap();
    let tso = load_builtin("tso").unwrap();
    let mut tests = 0;
    for (name, text) in bundled_tests().unwrap() {
        let prog = load_program(&text).unwrap();
        tests += 1;
        for (i, cand) in build_candidates(&prog).enumerate() {
            let (v, _) = evaluate(&sc.ast, &prog, &cand, &EvalOptions::default());
            assert_eq!(v.allowed, sc_oracle(&prog, &cand), "sc {name} #{i}");
            let (v, _) = evaluate(&tso.ast, &prog, &cand, &EvalOptions::default());
            assert_eq!(v.allowed, tso_oracle(&prog, &cand), "tso {name} #{i}");
        }
    }
    assert!(tests >= 30);
}
