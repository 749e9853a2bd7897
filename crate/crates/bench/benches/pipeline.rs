use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use isac_bench::{desk_config, problem};
use isac_core::beamformer::{euclidean_gradient, procrustes_update};
use isac_core::linalg::{complex_gaussian_matrix, eye, CVec};
use isac_core::rng::rng_from;
use isac_core::selection::{count_configs, exhaustive_select, unrank_combination, Enumeration, SubarrayConfig};
use isac_core::{design_hybrid, DesignOptions};

fn kernels(c: &mut Criterion) {
    let mut rng = rng_from(1);
    let digital = complex_gaussian_matrix(&mut rng, 8, 48, 1.0);
    let f = CVec::from_column_slice(complex_gaussian_matrix(&mut rng, 64, 1, 1.0).as_slice());
    let target = CVec::from_column_slice(complex_gaussian_matrix(&mut rng, 8 * 48, 1, 1.0).as_slice());
    c.bench_function("euclidean_gradient_k8_nrf8_m16", |b| {
        b.iter(|| euclidean_gradient(black_box(&f), black_box(&digital), black_box(&target), 8))
    });

    let fs = complex_gaussian_matrix(&mut rng, 8, 3, 1.0);
    let hybrid = complex_gaussian_matrix(&mut rng, 8, 3, 1.0);
    let fc = complex_gaussian_matrix(&mut rng, 8, 3, 1.0);
    c.bench_function("procrustes_8x3", |b| {
        b.iter(|| procrustes_update(black_box(&fs), black_box(&hybrid), black_box(&fc), 0.5, &eye(3, 3)))
    });

    c.bench_function("count_configs_64_32", |b| b.iter(|| count_configs(black_box(64), black_box(32))));
    c.bench_function("unrank_16_8", |b| b.iter(|| unrank_combination(black_box(6000), 16, 8)));
}

fn pipeline(c: &mut Criterion) {
    let cfg = desk_config();
    let p = problem(&cfg);
    let sub = SubarrayConfig::from_rank(1, cfg.n, cfg.k).unwrap();
    let mut group = c.benchmark_group("desk");
    group.sample_size(10);
    for bsc in [false, true] {
        let opts = DesignOptions { bsc, ..DesignOptions::from_config(&cfg) };
        group.bench_function(format!("design_hybrid_bsc_{bsc}"), |b| {
            b.iter(|| design_hybrid(&sub, &p.fc_full, &p.fs_full, &cfg, &opts).unwrap())
        });
    }
    group.bench_function("gss_select_bsc", |b| b.iter(|| exhaustive_select(&p, &cfg, Enumeration::Gss, true).unwrap()));
    group.finish();
}

criterion_group!(benches, kernels, pipeline);
criterion_main!(benches);
