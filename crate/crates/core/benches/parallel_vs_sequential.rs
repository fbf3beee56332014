//! Sequential vs rayon execution of the two data-parallel kernels: the
//! evolution right-hand side and the trace table behind B2.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lochrig::config::RunConfig;
use lochrig::dynamics::{rhs_field, RhsMode};
use lochrig::field::{FieldDerivativeStencil, RegularizingField};
use lochrig::par::ExecPolicy;
use lochrig::rate::{RateConfig, TraceTable};
use lochrig::trace::{SampledOperators, VolumeRule};
use std::hint::black_box;

fn policies() -> [(&'static str, ExecPolicy); 2] {
    [("sequential", ExecPolicy::Sequential), ("parallel", ExecPolicy::default())]
}

fn rhs(c: &mut Criterion) {
    let cfg = RunConfig::default();
    let field = RegularizingField::from_source(cfg.spatial_grid().unwrap(), &cfg.field()).unwrap();
    let st = FieldDerivativeStencil::new(4, field.grid.spacing).unwrap();
    let mut group = c.benchmark_group("rhs_field_32");
    for (name, policy) in policies() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| rhs_field(black_box(&field), RhsMode::Full, &st, None, policy).unwrap())
        });
    }
    group.finish();
}

fn trace_table(c: &mut Criterion) {
    let cfg = RunConfig::default();
    let rc = RateConfig { trace_level: 6, omega_prime_max: 12.0, omega_step: 0.25, ..cfg.rate_config() };
    let src = cfg.field();
    let ops = SampledOperators::from_source(&src, rc.m, VolumeRule::ball(cfg.grid.support_radius, rc.trace_level), ExecPolicy::Sequential);
    let grid = rc.omega_grid().unwrap();
    let mut group = c.benchmark_group("trace_table_level6");
    group.sample_size(10);
    for (name, policy) in policies() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| TraceTable::compute(black_box(&ops), grid.clone(), &rc.spectral(), policy))
        });
    }
    group.finish();
}

criterion_group!(benches, rhs, trace_table);
criterion_main!(benches);
