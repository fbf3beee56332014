//! Run drivers behind the CLI subcommands. Each returns a [`RunRecord`] and
//! writes its CSV/JSON files through an [`OutputSink`].

use crate::config::RunConfig;
use crate::dynamics::{evolve, support_leak, EvolveOptions, Trajectory};
use crate::error::Result;
use crate::field::RegularizingField;
use crate::par::ExecPolicy;
use crate::rate::compute_rate;
use crate::record::{CsvTable, OutputSink, RunRecord, Timing, Verdict};
use crate::spectral::{f_diag, kernel_coeffs, kernel_basis};
use crate::suites;
use std::time::Instant;

pub const RECORD_FILE: &str = "record.json";

struct Clock(Vec<Timing>);

impl Clock {
    fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0.push(Timing { name: name.to_string(), seconds: start.elapsed().as_secs_f64() });
        out
    }
}

fn finish(mut rec: RunRecord, clock: Clock, sink: &mut OutputSink) -> Result<RunRecord> {
    rec.timing = clock.0;
    rec.files = sink.written.clone();
    rec.files.push(RECORD_FILE.to_string());
    if sink.dir().is_some() {
        sink.write(RECORD_FILE, &rec.to_json())?;
    } else {
        rec.files.clear();
    }
    Ok(rec)
}

/// Every oracle suite, in a fixed order.
pub fn run_verify(cfg: &RunConfig, policy: ExecPolicy, sink: &mut OutputSink) -> Result<RunRecord> {
    let mut rec = RunRecord::new("verify", cfg);
    let mut clock = Clock(Vec::new());
    let seed = cfg.seed;
    let order = cfg.spectral.sphere_order;
    let v = vec![
        clock.time("clifford", || suites::clifford(seed)),
        clock.time("cone-tensors", || suites::cone_tensors(order, seed))?,
        clock.time("round-trip", || suites::round_trip(order, seed))?,
        clock.time("transport", || suites::transport(seed))?,
        clock.time("reduction-slope", || suites::reduction_slope(cfg, policy))?,
        clock.time("kernel-identities", || suites::kernel_identities(cfg, seed)),
        clock.time("functional-calculus", || suites::functional_calculus(cfg, seed)),
        clock.time("formal-symmetry", || suites::formal_symmetry(cfg, seed, policy))?,
        clock.time("sokhotski", || suites::sokhotski(cfg, seed)),
        clock.time("first-order-rate", || suites::first_order_rate(cfg, seed, policy)),
    ];

    let mut table = CsvTable::new(&["suite", "passed", "value", "tolerance"]);
    for (i, verdict) in v.iter().enumerate() {
        table.push(vec![i as f64, f64::from(u8::from(verdict.passed)), verdict.value, verdict.tolerance]);
    }
    sink.csv("verdicts.csv", &table)?;
    rec.outputs = serde_json::json!({
        "suites": v.iter().map(|x| x.name.clone()).collect::<Vec<_>>(),
        "passed": v.iter().filter(|x| x.passed).count(),
    });
    rec.verdicts = v;
    finish(rec, clock, sink)
}

fn snapshot_table(field: &RegularizingField) -> CsvTable {
    let mut t = CsvTable::new(&["x", "y", "z", "f", "s1", "s2", "s3"]);
    for k in 0..field.grid.len() {
        let p = field.grid.position(field.grid.unlinear(k));
        let s = field.s[k];
        t.push(vec![p[0], p[1], p[2], field.f[k], s[0], s[1], s[2]]);
    }
    t
}

/// Observed temporal order from runs at dt, dt/2, dt/4 (final states compared in max norm).
pub fn richardson_order(initial: &RegularizingField, opts: &EvolveOptions, policy: ExecPolicy) -> Result<(f64, [f64; 2])> {
    let run = |div: f64| -> Result<RegularizingField> {
        let o = EvolveOptions { dt: opts.dt / div, save_every: usize::MAX, ..*opts };
        Ok(evolve(initial, &o, policy)?.last().field.clone())
    };
    let (a, b, c) = (run(1.0)?, run(2.0)?, run(4.0)?);
    let e = [a.max_abs_diff(&b), b.max_abs_diff(&c)];
    Ok(((e[0] / e[1]).log2(), e))
}

/// Integrates the configured initial data and writes one CSV per saved snapshot.
pub fn run_evolve(cfg: &RunConfig, policy: ExecPolicy, sink: &mut OutputSink) -> Result<RunRecord> {
    let mut rec = RunRecord::new("evolve", cfg);
    let mut clock = Clock(Vec::new());
    let initial = RegularizingField::from_source(cfg.spatial_grid()?, &cfg.field())?;
    let opts = cfg.evolve_options();
    let traj: Trajectory = clock.time("evolve", || evolve(&initial, &opts, policy))?;

    let mut snapshots = Vec::new();
    for (i, snap) in traj.snapshots.iter().enumerate() {
        let name = format!("snapshot_{i:04}.csv");
        sink.csv(&name, &snapshot_table(&snap.field))?;
        snapshots.push(serde_json::json!({ "t": snap.t, "file": name }));
    }
    let rv = cfg.grid.support_radius;
    let leak = support_leak(&traj, rv);
    let radius = traj.dependence_radius(rv);
    rec.verdicts.push(Verdict::below("support-confinement", leak, 0.0, format!("|u - nu| outside the cube of half-width {radius:.4}")));
    let change = traj.last().field.max_abs_diff(&initial);
    let mut outputs = serde_json::json!({
        "steps": traj.steps,
        "t_final": traj.last().t,
        "dependence_radius": radius,
        "max_change": change,
        "support_extent_initial": initial.support_extent(1e-14),
        "support_extent_final": traj.last().field.support_extent(1e-14),
        "snapshots": snapshots,
    });
    if cfg.evolution.convergence_check {
        let (order, errors) = clock.time("richardson", || richardson_order(&initial, &opts, policy))?;
        outputs["richardson_order"] = serde_json::json!(order);
        outputs["richardson_differences"] = serde_json::json!(errors);
        rec.verdicts.push(Verdict::below("time-convergence", (order - 4.0).abs(), 0.5, format!("observed order {order:.3}")));
    }
    rec.outputs = outputs;
    finish(rec, clock, sink)
}

/// B1 and B2 for the configured field, with the trace table as CSV.
pub fn run_rate(cfg: &RunConfig, policy: ExecPolicy, sink: &mut OutputSink) -> Result<RunRecord> {
    let mut rec = RunRecord::new("rate", cfg);
    let mut clock = Clock(Vec::new());
    let rc = cfg.rate_config();
    let (report, table) = clock.time("rate", || compute_rate(&cfg.field(), &rc, cfg.rate.refine, policy))?;

    let mut csv = CsvTable::new(&["omega", "omega_prime", "trace"]);
    let (neg, pos) = (table.grid.negative(), table.grid.positive());
    for (i, w) in neg.iter().enumerate() {
        for (j, wp) in pos.iter().enumerate() {
            csv.push(vec![*w, *wp, table.values[i][j]]);
        }
    }
    sink.csv("trace_table.csv", &csv)?;
    rec.verdicts.push(Verdict::below("first-order-rate", report.b1.abs(), 1e-10, "B1 for the configured field"));
    rec.outputs = serde_json::to_value(&report).expect("report serializes");
    finish(rec, clock, sink)
}

/// Finite-delta sweeps of the Sokhotski identity for five random test functions.
pub fn run_sokhotski(cfg: &RunConfig, _policy: ExecPolicy, sink: &mut OutputSink) -> Result<RunRecord> {
    let mut rec = RunRecord::new("sokhotski", cfg);
    let mut clock = Clock(Vec::new());
    let studies = clock.time("sokhotski", || suites::sokhotski_studies(cfg, cfg.seed));
    let mut csv = CsvTable::new(&["function", "delta", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "error"]);
    for (k, (_, s)) in studies.iter().enumerate() {
        for (i, d) in s.deltas.iter().enumerate() {
            csv.push(vec![k as f64, *d, s.lhs[i][0], s.lhs[i][1], s.rhs[0], s.rhs[1], s.errors[i]]);
        }
    }
    sink.csv("sokhotski.csv", &csv)?;
    rec.verdicts.push(suites::sokhotski_verdict(&studies));
    rec.outputs = serde_json::json!({
        "functions": studies.iter().map(|(f, _)| f).collect::<Vec<_>>(),
        "studies": studies.iter().map(|(_, s)| s).collect::<Vec<_>>(),
    });
    finish(rec, clock, sink)
}

/// Frequencies sampled by the kernel dump: +-(m, 1.5 m, 2 m, 4 m, 8 m).
pub fn kernel_frequencies(m: f64) -> Vec<f64> {
    [1.0, 1.5, 2.0, 4.0, 8.0].iter().flat_map(|k| [-k * m, k * m]).collect()
}

/// Kernel tables for plotting: F_w(r) along the (1,1,1) diagonal and F_w on the diagonal x = y.
pub fn run_kernels(cfg: &RunConfig, _policy: ExecPolicy, sink: &mut OutputSink) -> Result<RunRecord> {
    let mut rec = RunRecord::new("kernels", cfg);
    let mut clock = Clock(Vec::new());
    let p = cfg.spectral_params();
    let omegas = kernel_frequencies(cfg.physics.m);
    let reach = 2.0 * cfg.grid.support_radius;
    let samples = 101;
    let dir = 1.0 / 3f64.sqrt();

    let radial = clock.time("radial", || {
        let mut t = CsvTable::new(&["omega", "r", "id", "g0", "ig1g0", "ig2g0", "ig3g0"]);
        for &w in &omegas {
            for i in 0..samples {
                let r = reach * i as f64 / (samples - 1) as f64;
                let c = kernel_coeffs(w, [r * dir; 3], &p).map(|(c, _)| c.to_array()).unwrap_or([0.0; 5]);
                t.push(vec![w, r, c[0], c[1], c[2], c[3], c[4]]);
            }
        }
        t
    });
    sink.csv("kernel_radial.csv", &radial)?;

    let basis = kernel_basis();
    let mut diag = CsvTable::new(&["omega", "id", "g0"]);
    for &w in &omegas {
        // project onto Id and g0 with the trace form tr(B^dagger F) / 4
        let f = f_diag(w, &p);
        let coeff = |b: &crate::linalg::SpinorMatrix| (b.adjoint() * f).trace().re / 4.0;
        diag.push(vec![w, coeff(&basis[0]), coeff(&basis[1])]);
    }
    sink.csv("kernel_diagonal.csv", &diag)?;
    rec.outputs = serde_json::json!({ "omegas": omegas, "radial_samples": samples, "reach": reach });
    finish(rec, clock, sink)
}
