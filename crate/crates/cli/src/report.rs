//! Report rendering: the nested key-value run summary and the delimited
//! tables meant for external plotting or aggregation. All floats use the
//! same 17-significant-digit form as trace files, so artifacts are stable
//! byte-for-byte and re-parse exactly.

use rbsl_core::diagnostics::{ComponentDiagnostic, ParamSummary, PredictiveSummary};
use rbsl_core::trace::fmt_float;

/// Builder for the `section:` / `  key: value` summary format.
#[derive(Default)]
pub struct KvReport {
    buf: String,
}

impl KvReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn section(&mut self, name: &str) -> &mut Self {
        self.buf.push_str(name);
        self.buf.push_str(":\n");
        self
    }

    pub fn kv(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.buf.push_str("  ");
        self.buf.push_str(key);
        self.buf.push_str(": ");
        self.buf.push_str(&value.to_string());
        self.buf.push('\n');
        self
    }

    pub fn kv_float(&mut self, key: &str, value: f64) -> &mut Self {
        self.kv(key, fmt_float(value))
    }

    /// The mean/median/quantile block used for every parameter component.
    pub fn param(&mut self, name: &str, s: &ParamSummary) -> &mut Self {
        self.section(name)
            .kv_float("mean", s.mean)
            .kv_float("median", s.median)
            .kv_float("q025", s.q025)
            .kv_float("q975", s.q975)
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

fn csv_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

/// Divergence of each adjustment component from its prior.
pub fn gamma_diagnostics_csv(rows: &[ComponentDiagnostic]) -> String {
    let mut s = String::from("component,ks_statistic,q025,q50,q975,flag\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.component + 1,
            fmt_float(r.ks_statistic),
            fmt_float(r.q025),
            fmt_float(r.q50),
            fmt_float(r.q975),
            r.flag()
        ));
    }
    s
}

/// A kernel density estimate on a regular grid.
pub fn density_csv(xs: &[f64], ys: &[f64]) -> String {
    let mut s = String::from("x,density\n");
    for (x, y) in xs.iter().zip(ys) {
        s.push_str(&fmt_float(*x));
        s.push(',');
        s.push_str(&fmt_float(*y));
        s.push('\n');
    }
    s
}

/// Posterior predictive quantile bands per summary statistic.
pub fn predictive_csv(rows: &[PredictiveSummary]) -> String {
    let mut s = String::from("statistic,q025,q50,q975,observed,observed_percentile\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.statistic + 1,
            fmt_float(r.q025),
            fmt_float(r.q50),
            fmt_float(r.q975),
            fmt_float(r.observed),
            fmt_float(r.observed_percentile),
        ));
    }
    s
}

/// One grid cell in the cross-run aggregate table. `acceptance_rate` is
/// set for chain runs, `ess` for importance-sampling runs.
pub struct AggregateRow {
    pub value: Option<f64>,
    pub replicate: usize,
    pub method: &'static str,
    pub acceptance_rate: Option<f64>,
    pub ess: Option<f64>,
    pub sim_calls: u64,
    pub sim_failures: u64,
    pub theta: Vec<ParamSummary>,
}

pub fn aggregate_csv(d_theta: usize, rows: &[AggregateRow]) -> String {
    let mut s = String::from("value,replicate,method,acceptance_rate,ess,sim_calls,sim_failures");
    for k in 1..=d_theta {
        s.push_str(&format!(
            ",theta_{k}_mean,theta_{k}_median,theta_{k}_q025,theta_{k}_q975"
        ));
    }
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}",
            csv_opt(r.value),
            r.replicate,
            r.method,
            csv_opt(r.acceptance_rate),
            csv_opt(r.ess),
            r.sim_calls,
            r.sim_failures
        ));
        for k in 0..d_theta {
            match r.theta.get(k) {
                Some(p) => s.push_str(&format!(
                    ",{},{},{},{}",
                    fmt_float(p.mean),
                    fmt_float(p.median),
                    fmt_float(p.q025),
                    fmt_float(p.q975)
                )),
                None => s.push_str(",,,,"),
            }
        }
        s.push('\n');
    }
    s
}

/// Repeated-sampling accuracy of the point estimates at one grid value.
pub struct AccuracyOutRow {
    pub value: Option<f64>,
    pub method: &'static str,
    /// 1-based parameter component.
    pub parameter: usize,
    pub bias: f64,
    pub rmse: f64,
    pub mean_length: f64,
    pub coverage: f64,
    pub n_runs: usize,
}

pub fn accuracy_csv(rows: &[AccuracyOutRow]) -> String {
    let mut s = String::from("value,method,parameter,bias,rmse,mean_length,coverage,n_runs\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            csv_opt(r.value),
            r.method,
            r.parameter,
            fmt_float(r.bias),
            fmt_float(r.rmse),
            fmt_float(r.mean_length),
            fmt_float(r.coverage),
            r.n_runs
        ));
    }
    s
}

/// Mean acceptance rate per grid value and chain method; the headline
/// picture for misspecification sweeps.
pub struct AcceptanceRow {
    pub value: f64,
    pub method: &'static str,
    pub mean_acceptance_rate: f64,
    pub n_runs: usize,
}

pub fn acceptance_rates_csv(rows: &[AcceptanceRow]) -> String {
    let mut s = String::from("value,method,mean_acceptance_rate,n_runs\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{}\n",
            fmt_float(r.value),
            r.method,
            fmt_float(r.mean_acceptance_rate),
            r.n_runs
        ));
    }
    s
}

/// Importance-sampling draws with their weights.
pub fn is_draws_csv(theta: &[Vec<f64>], log_weights: &[f64], weights: &[f64]) -> String {
    let d = theta.first().map_or(0, Vec::len);
    let mut s = String::from("draw");
    for k in 1..=d {
        s.push_str(&format!(",theta_{k}"));
    }
    s.push_str(",log_weight,weight\n");
    for (i, t) in theta.iter().enumerate() {
        s.push_str(&(i + 1).to_string());
        for v in t {
            s.push(',');
            s.push_str(&fmt_float(*v));
        }
        s.push(',');
        s.push_str(&fmt_float(log_weights[i]));
        s.push(',');
        s.push_str(&fmt_float(weights[i]));
        s.push('\n');
    }
    s
}
