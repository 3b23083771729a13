//! Regenerates the reference trace used by the golden-trace regression
//! test. Run from the workspace root after any deliberate change to the
//! chain's sampling sequence, then review the diff:
//!
//!   cargo run -p rbsl-core --example make_reference_trace
//!
//! The test tests/golden_trace.rs compares byte-for-byte against the
//! committed file, so accidental drift in the sampler fails loudly.

use rbsl_core::mcmc::{run_chain, ChainOptions, MethodKind, ProposalCov};
use rbsl_core::models::normal::NormalModel;
use rbsl_core::slice::SliceOptions;
use rbsl_core::{SummaryVector, ThetaPrior};

fn main() {
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
    let trace = run_chain(&model, &eta_obs, &prior, None, &[0.0], &opts).unwrap();
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/normal_bsl_trace.csv");
    trace.write_csv(std::path::Path::new(path)).unwrap();
    let summary = rbsl_core::diagnostics::chain_summary(&trace).unwrap();
    println!("wrote {path}");
    println!("acceptance_rate = {:.16e}", summary.acceptance_rate);
    println!("theta mean      = {:.16e}", summary.theta[0].mean);
    println!("theta median    = {:.16e}", summary.theta[0].median);
    println!("theta q025      = {:.16e}", summary.theta[0].q025);
    println!("theta q975      = {:.16e}", summary.theta[0].q975);
}
