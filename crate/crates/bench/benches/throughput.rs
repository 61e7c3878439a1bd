use criterion::{black_box, criterion_group, criterion_main, Criterion};
use memcat_core::models::bundled_tests;
use memcat_core::{
    build_candidates, enumerate_accepted, load_builtin, load_program, mine, verdict, MachineOptions, Program, Relation,
    RunOptions, StaticProgram,
};

fn test(name: &str) -> Program {
    let (_, text) = bundled_tests().unwrap().into_iter().find(|(n, _)| n == name).expect("bundled test");
    load_program(&text).unwrap()
}

fn relations(c: &mut Criterion) {
    // a sparse pseudo-random relation on 64 events
    let r = Relation::from_fn(64, |x, y| (x * 31 + y * 17) % 23 == 0 && x != y);
    c.bench_function("relation/plus-64", |b| b.iter(|| black_box(&r).plus()));
    c.bench_function("relation/seq-64", |b| b.iter(|| black_box(&r).seq(&r)));
    c.bench_function("relation/acyclic-64", |b| b.iter(|| black_box(&r).is_acyclic()));
}

fn models(c: &mut Criterion) {
    let power = load_builtin("power").unwrap();
    let iriw = test("iriw+syncs");
    c.bench_function("candidates/iriw+syncs", |b| b.iter(|| build_candidates(black_box(&iriw)).count()));
    c.bench_function("verdict/power/iriw+syncs", |b| {
        b.iter(|| verdict(black_box(&iriw), &power.ast, &RunOptions::default()).unwrap())
    });
    let all: Vec<Program> = bundled_tests().unwrap().iter().map(|(_, t)| load_program(t).unwrap()).collect();
    c.bench_function("verdict/power/bundled", |b| {
        b.iter(|| {
            for p in &all {
                black_box(verdict(p, &power.ast, &RunOptions::default()).unwrap());
            }
        })
    });
}

fn machine(c: &mut Criterion) {
    let power = load_builtin("power").unwrap();
    let mp = test("mp+lwsync+addr");
    let wrc = test("wrc+lwsync+addr");
    c.bench_function("machine/mp+lwsync+addr", |b| {
        b.iter(|| enumerate_accepted(black_box(&mp), &power.ast, 8, MachineOptions::default()).unwrap())
    });
    c.bench_function("machine/wrc+lwsync+addr", |b| {
        b.iter(|| enumerate_accepted(black_box(&wrc), &power.ast, 8, MachineOptions::default()).unwrap())
    });
}

fn cycles(c: &mut Criterion) {
    let sp = StaticProgram::from_program(&test("iriw+syncs"));
    c.bench_function("cycles/iriw+syncs", |b| b.iter(|| mine(black_box(&sp))));
}

criterion_group!(benches, relations, models, machine, cycles);
criterion_main!(benches);
