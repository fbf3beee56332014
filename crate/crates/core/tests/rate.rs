use lochrig::config::RunConfig;
use lochrig::error::Error;
use lochrig::field::AnalyticField;
use lochrig::par::ExecPolicy;
use lochrig::rate::{b2_from_table, compute_rate, CutoffFunction, RateConfig, TraceTable};
use lochrig::suites::random_field;
use lochrig::trace::{b1, SampledOperators, VolumeRule};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn coarse() -> RateConfig {
    RateConfig { trace_level: 6, omega_prime_max: 15.0, omega_step: 0.2, ..RunConfig::default().rate_config() }
}

#[test]
fn rest_field_has_zero_rates() {
    let (rep, table) = compute_rate(&AnalyticField::trivial(0.3), &coarse(), true, ExecPolicy::Sequential).unwrap();
    assert_eq!(rep.b1, 0.0);
    assert_eq!(rep.b2, 0.0);
    assert_eq!(rep.refinement_error, Some(0.0));
    assert!(table.values.iter().flatten().all(|v| *v == 0.0));
}

#[test]
fn frequency_cap_must_stay_below_the_gate() {
    let cfg = RateConfig { omega_prime_max: 200.0, ..coarse() };
    let e = compute_rate(&AnalyticField::trivial(0.3), &cfg, false, ExecPolicy::Sequential).unwrap_err();
    assert!(matches!(e, Error::InvalidParams(_)));
}

#[test]
fn tilt_breaks_the_cancellation() {
    let cfg = RunConfig::default();
    let base = coarse();
    let field = cfg.field();
    let (even, table) = compute_rate(&field, &base, false, ExecPolicy::default()).unwrap();
    assert!(even.b2.abs() <= 1e-12 * even.magnitude);
    let tilted = b2_from_table(&table, &CutoffFunction::new(base.cutoff, base.m).with_tilt(1.0));
    assert!(tilted.b2.abs() > 1e-3 * tilted.magnitude);
}

#[test]
fn analytic_table_round_trip() {
    let grid = coarse().omega_grid().unwrap();
    let t = TraceTable::from_fn(grid, |_, _| 0.0);
    let parts = b2_from_table(&t, &CutoffFunction::new(10.0, 1.0).with_tilt(0.5));
    assert_eq!(parts.b2, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn first_order_rate_vanishes(seed in any::<u64>()) {
        let cfg = RunConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let field = random_field(&mut rng, 0.3);
        let ops = SampledOperators::from_source(&field, cfg.physics.m, VolumeRule::ball(0.3, 8), ExecPolicy::Sequential);
        prop_assert!(b1(&ops, &cfg.spectral_params()).abs() < 1e-10);
    }
}
