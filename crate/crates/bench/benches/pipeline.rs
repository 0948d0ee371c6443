use countcheck_bench::synthetic_dataset;
use countcheck_core::adapter::{ModelAdapter, RandomAdapter};
use countcheck_core::metrics::eval_counting;
use countcheck_core::parse::{parse_number, parse_response};
use countcheck_core::question::{gen_binary, gen_compare, gen_primal, BinarySetting, CompareStyle, PairingConfig};
use countcheck_core::sampler::{double_k_uniform_sample, CapSemantics, SamplerConfig};
use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use std::hint::black_box;
use std::num::NonZeroU32;

fn bench_sampler(c: &mut Criterion) {
    let dataset = synthetic_dataset(25_000);
    let cfg = SamplerConfig {
        k: NonZeroU32::new(50).unwrap(),
        seed: 42,
        cap_semantics: CapSemantics::Prose,
    };
    let mut group = c.benchmark_group("sampler");
    group.throughput(Throughput::Elements(dataset.len() as u64));
    group.bench_function("double_k_uniform_50k", |b| {
        b.iter(|| double_k_uniform_sample(black_box(&dataset), &cfg))
    });
    group.finish();
}

fn bench_question_gen(c: &mut Criterion) {
    let dataset = synthetic_dataset(5_000);
    let mut group = c.benchmark_group("question_gen");
    group.throughput(Throughput::Elements(dataset.len() as u64));
    group.bench_function("primal_10k", |b| b.iter(|| gen_primal(black_box(&dataset))));
    group.bench_function("binary_iii_10k", |b| {
        b.iter(|| gen_binary(black_box(&dataset), BinarySetting::III, None, 7).unwrap())
    });
    group.bench_function("compare_i_10k", |b| {
        b.iter(|| gen_compare(black_box(&dataset), CompareStyle::I, &PairingConfig::default(), 7))
    });
    group.finish();
}

fn bench_adapter_and_parse(c: &mut Criterion) {
    let dataset = synthetic_dataset(2_500);
    let questions = gen_primal(&dataset);
    let adapter = RandomAdapter::new(42);
    let responses: Vec<String> = questions
        .iter()
        .map(|q| adapter.answer(q).unwrap().text)
        .collect();

    let mut group = c.benchmark_group("parse");
    group.throughput(Throughput::Elements(questions.len() as u64));
    group.bench_function("random_adapter_5k", |b| {
        b.iter(|| {
            for q in &questions {
                black_box(adapter.answer(q).unwrap());
            }
        })
    });
    group.bench_function("parse_responses_5k", |b| {
        b.iter(|| {
            for (q, raw) in questions.iter().zip(&responses) {
                black_box(parse_response(q, raw));
            }
        })
    });
    group.bench_function("parse_number_wordy", |b| {
        b.iter(|| parse_number(black_box("I think there are four dogs in this picture.")))
    });
    group.finish();
}

fn bench_metrics(c: &mut Criterion) {
    let gold: Vec<u32> = (0..100_000).map(|i| 1 + (i % 12) as u32).collect();
    let pred: Vec<Option<u32>> = (0..100_000)
        .map(|i| if i % 17 == 0 { None } else { Some(1 + ((i * 7) % 12) as u32) })
        .collect();
    let mut group = c.benchmark_group("metrics");
    group.throughput(Throughput::Elements(gold.len() as u64));
    group.bench_function("eval_counting_100k", |b| {
        b.iter(|| eval_counting(black_box(&gold), black_box(&pred)).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_sampler,
    bench_question_gen,
    bench_adapter_and_parse,
    bench_metrics
);
criterion_main!(benches);
