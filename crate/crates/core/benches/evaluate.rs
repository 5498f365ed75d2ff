use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use evalkit::corpus::{Language, Sample};
use evalkit::metrics::{EvalConfig, Evaluator};
use evalkit::parallel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const OPCODES: &[&str] = &[
    "mov", "xor", "push", "pop", "inc", "dec", "jmp", "cmp", "add", "sub",
];
const OPERANDS: &[&str] = &[
    "EAX",
    "EBX",
    "ECX",
    "EDX",
    "ESI",
    "EDI",
    "0x0b",
    "5",
    "byte [esi]",
];

fn snippet(rng: &mut ChaCha8Rng) -> String {
    let lines = rng.random_range(1..6);
    (0..lines)
        .map(|_| {
            let op = OPCODES[rng.random_range(0..OPCODES.len())];
            let a = OPERANDS[rng.random_range(0..OPERANDS.len())];
            let b = OPERANDS[rng.random_range(0..OPERANDS.len())];
            format!("{op} {a}, {b}")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn corpus(n: usize) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (0..n)
        .map(|i| Sample {
            id: format!("s{i:05}"),
            intent: String::new(),
            reference: snippet(&mut rng),
            prediction: snippet(&mut rng),
            sc: None,
            language: Language::Assembly,
        })
        .collect()
}

fn bench_evaluate(c: &mut Criterion) {
    let samples = corpus(2000);
    let evaluator = Evaluator::new(EvalConfig::default(), evalkit::metrics::CheckerSet::Builtin);
    let mut group = c.benchmark_group("evaluate_corpus");
    group.sample_size(10);

    // jobs = 1 is the sequential path; jobs = 0 uses every core when the
    // `parallel` feature is on.
    for (label, jobs) in [("sequential", 1), ("parallel", 0)] {
        if jobs != 1 && !parallel::is_parallel() {
            continue;
        }
        group.bench_with_input(BenchmarkId::new(label, samples.len()), &jobs, |b, &jobs| {
            b.iter(|| {
                let out = parallel::try_map_ordered(&samples, jobs, |s| evaluator.evaluate(s));
                black_box(out.unwrap())
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_evaluate);
criterion_main!(benches);
