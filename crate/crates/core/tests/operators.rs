use lochrig::config::RunConfig;
use lochrig::field::{AnalyticField, FieldDerivativeStencil, RegularizingField};
use lochrig::operators::{build_a, build_delta_a, build_dot_a, OperatorCoeffs};
use lochrig::par::ExecPolicy;
use lochrig::suites;

fn setup() -> (RunConfig, RegularizingField, FieldDerivativeStencil) {
    let cfg = RunConfig::default();
    let field = RegularizingField::from_source(cfg.spatial_grid().unwrap(), &cfg.field()).unwrap();
    let st = FieldDerivativeStencil::new(4, field.grid.spacing).unwrap();
    (cfg, field, st)
}

#[test]
fn perturbation_is_supported_in_v() {
    let (cfg, field, st) = setup();
    let da = build_delta_a(&field, &st, cfg.physics.m, ExecPolicy::Sequential).unwrap();
    assert!(!da.is_zero());
    // the stencil sees at most margin * h beyond the data, in every axis
    let reach = cfg.grid.support_radius + st.margin() as f64 * st.h * 3f64.sqrt();
    assert_eq!(da.max_outside(reach), 0.0);
}

#[test]
fn rest_field_gives_the_free_operator() {
    let (cfg, _, st) = setup();
    let rest = RegularizingField::constant(cfg.spatial_grid().unwrap(), 1.0).unwrap();
    let m = cfg.physics.m;
    let a = build_a(&rest, &st, m, ExecPolicy::Sequential).unwrap();
    assert!(a.coeffs.iter().all(|c| c.dist(&OperatorCoeffs::dirac(m)) == 0.0));
    assert!(build_delta_a(&rest, &st, m, ExecPolicy::Sequential).unwrap().is_zero());
    assert!(build_dot_a(&rest, &st, m, ExecPolicy::Sequential).unwrap().is_zero());
}

#[test]
fn parallel_and_sequential_builds_agree() {
    let (cfg, field, st) = setup();
    let m = cfg.physics.m;
    let seq = build_dot_a(&field, &st, m, ExecPolicy::Sequential).unwrap();
    let par = build_dot_a(&field, &st, m, ExecPolicy::with_workers(3)).unwrap();
    assert_eq!(seq, par);
}

#[test]
fn formal_symmetry_holds_for_other_seeds() {
    let cfg = RunConfig::default();
    for seed in [1, 2, 3] {
        let v = suites::formal_symmetry(&cfg, seed, ExecPolicy::default()).unwrap();
        assert!(v.passed, "{}", v.line());
    }
}

#[test]
fn analytic_and_sampled_fields_match_outside_support() {
    let cfg = RunConfig::default();
    let trivial = RegularizingField::from_source(cfg.spatial_grid().unwrap(), &AnalyticField::trivial(0.3)).unwrap();
    assert_eq!(trivial.deviation_outside(0.0), 0.0);
    let field = RegularizingField::from_source(cfg.spatial_grid().unwrap(), &cfg.field()).unwrap();
    assert_eq!(field.deviation_outside(cfg.grid.support_radius), 0.0);
    assert!(field.support_extent(0.0) <= cfg.grid.support_radius);
}
