//! Byte-level regression against a recorded reference trace. Any change
//! to the sampling sequence, the RNG stream derivation, or the CSV
//! format shows up here first. Regenerate deliberately with
//! `cargo run -p rbsl-core --example make_reference_trace`.

use rbsl_core::diagnostics::chain_summary;
use rbsl_core::mcmc::{run_chain, ChainOptions, MethodKind, ProposalCov};
use rbsl_core::models::normal::NormalModel;
use rbsl_core::slice::SliceOptions;
use rbsl_core::trace::Trace;
use rbsl_core::{SummaryVector, ThetaPrior};

fn reference_run() -> rbsl_core::trace::Trace {
    let model = NormalModel::new(50).unwrap();
    let eta_obs = SummaryVector::new(vec![1.0, 1.0]).unwrap();
    let prior = ThetaPrior::normal(&[(0.0, 10.0)]).unwrap();
    let opts = ChainOptions {
        method: MethodKind::Bsl,
        m: 20,
        iterations: 100,
        burn_in: 20,
        thin: 1,
        seed: 20240901,
        proposal: ProposalCov::scalar(0.02, 1).unwrap(),
        slice: SliceOptions::default(),
    };
    run_chain(&model, &eta_obs, &prior, None, &[0.0], &opts).unwrap()
}

#[test]
fn golden_trace_bytes_match() {
    let golden = include_str!("golden/normal_bsl_trace.csv");
    let trace = reference_run();
    assert_eq!(trace.to_csv_string(), golden);
}

#[test]
fn golden_trace_round_trips_through_parser() {
    let golden = include_str!("golden/normal_bsl_trace.csv");
    let parsed = Trace::from_csv_str(golden).unwrap();
    assert_eq!(parsed.to_csv_string(), golden);
    assert_eq!(parsed.rows.len(), 101);
    assert_eq!(parsed.meta.m, 20);
}

#[test]
fn golden_summary_values_match() {
    let trace = reference_run();
    let s = chain_summary(&trace).unwrap();
    assert_eq!(s.acceptance_rate, 5.0000000000000000e-1);
    assert_eq!(s.n_post_burnin, 80);
    assert_eq!(s.theta[0].mean, 8.7815496818228933e-1);
    assert_eq!(s.theta[0].median, 9.7864590891791736e-1);
    assert_eq!(s.theta[0].q025, 5.8754797101276297e-2);
    assert_eq!(s.theta[0].q975, 1.1881973895125724e0);
}
