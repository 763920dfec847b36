//! Batch evaluation throughput: the rayon-backed `map_ordered` against a
//! plain sequential loop over the same workload. The workload mirrors the
//! differential tester: evaluate the old and new definition of `f` on a
//! batch of generated inputs and compare the results.
//!
//! Build with default features for the parallel variant; with
//! `--no-default-features` both benchmarks degenerate to sequential and
//! should read the same.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use defsimp::eval::{eval_term, gen_bindings, Bindings, EvalResult};
use defsimp::par::map_ordered;
use defsimp::sexpr::parse_sexpr;
use defsimp::term::{translate, Term, VarPolicy};
use defsimp::world::World;

fn setup() -> (World, Term, Term) {
    let mut world = World::new();
    for src in [
        "(defun f (x) (if (zp x) 0 (+ 1 1 (f (+ -1 x)))))",
        "(defun f-fast (x) (if (zp x) 0 (+ 2 (f-fast (+ -1 x)))))",
    ] {
        world = world.define(&parse_sexpr(src).unwrap()).unwrap();
    }
    let call = |s: &str| translate(&parse_sexpr(s).unwrap(), VarPolicy::AutoBind, &world).unwrap();
    let lhs = call("(f x)");
    let rhs = call("(f-fast x)");
    (world, lhs, rhs)
}

fn bench_batches(c: &mut Criterion) {
    let (world, lhs, rhs) = setup();
    let mut group = c.benchmark_group("difftest-batch");

    for &n in &[256usize, 1024] {
        let bindings = gen_bindings(&["X".to_string()], None, &world, 42, n);
        assert_eq!(bindings.len(), n);
        let fuel = 20_000;
        let agree = |b: &Bindings| -> bool {
            let l = eval_term(&world, &lhs, b, fuel);
            let r = eval_term(&world, &rhs, b, fuel);
            match (l, r) {
                (EvalResult::Value(a), EvalResult::Value(b)) => a == b,
                (EvalResult::OutOfFuel, EvalResult::OutOfFuel) => true,
                _ => false,
            }
        };

        group.bench_with_input(BenchmarkId::new("map_ordered", n), &bindings, |bch, bs| {
            bch.iter(|| {
                let results = map_ordered(bs, agree);
                assert!(results.iter().all(|ok| *ok));
            })
        });

        group.bench_with_input(BenchmarkId::new("sequential", n), &bindings, |bch, bs| {
            bch.iter(|| {
                let results: Vec<bool> = bs.iter().map(agree).collect();
                assert!(results.iter().all(|ok| *ok));
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_batches);
criterion_main!(benches);
