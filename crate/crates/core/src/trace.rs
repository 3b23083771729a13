//! Chain traces and their CSV persistence.
//!
//! The CSV layout is stable and round-trips exactly: `#`-prefixed
//! metadata lines, a header `iter,accepted,loglike,theta_1..[,gamma_1..],
//! burnin`, then one row per recorded iteration with floats rendered at
//! 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mcmc::MethodKind;

/// Configuration echo stored with every trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceMeta {
    pub method: MethodKind,
    pub m: usize,
    pub seed: u64,
    /// Number of MCMC iterations T (the trace also holds the initial state).
    pub iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub d_theta: usize,
    /// 0 when the method carries no adjustment vector.
    pub d_gamma: usize,
}

/// One recorded chain state.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: u64,
    pub accepted: bool,
    pub log_like: f64,
    pub theta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub burnin: bool,
}

/// Ordered record of a chain run plus bookkeeping counters.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub meta: TraceMeta,
    pub rows: Vec<TraceRow>,
    /// Accepted θ proposals over all T iterations (thinning does not
    /// change this count).
    pub acceptance_count: u64,
    /// Model simulations performed, including the initial batch.
    pub sim_calls: u64,
    /// Simulations that failed (each one rejected its proposal).
    pub sim_failures: u64,
}

/// 17-significant-digit float rendering; round-trips through parse.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl Trace {
    pub fn acceptance_rate(&self) -> f64 {
        if self.meta.iterations == 0 {
            0.0
        } else {
            self.acceptance_count as f64 / self.meta.iterations as f64
        }
    }

    /// Rows after the burn-in phase (row 0 is always burn-in).
    pub fn post_burnin_rows(&self) -> impl Iterator<Item = &TraceRow> {
        self.rows.iter().filter(|r| !r.burnin)
    }

    /// Post-burn-in draws of one θ component.
    pub fn theta_component(&self, k: usize) -> Vec<f64> {
        self.post_burnin_rows().map(|r| r.theta[k]).collect()
    }

    /// Post-burn-in draws of one γ component.
    pub fn gamma_component(&self, k: usize) -> Vec<f64> {
        self.post_burnin_rows().map(|r| r.gamma[k]).collect()
    }

    fn header(&self) -> String {
        let mut h = String::from("iter,accepted,loglike");
        for k in 1..=self.meta.d_theta {
            let _ = write!(h, ",theta_{k}");
        }
        for k in 1..=self.meta.d_gamma {
            let _ = write!(h, ",gamma_{k}");
        }
        h.push_str(",burnin");
        h
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::new();
        let m = &self.meta;
        let _ = writeln!(s, "# synthetic likelihood trace v1");
        let _ = writeln!(s, "# method = {}", m.method.as_str());
        let _ = writeln!(s, "# m = {}", m.m);
        let _ = writeln!(s, "# seed = {}", m.seed);
        let _ = writeln!(s, "# iterations = {}", m.iterations);
        let _ = writeln!(s, "# burn_in = {}", m.burn_in);
        let _ = writeln!(s, "# thin = {}", m.thin);
        let _ = writeln!(s, "# d_theta = {}", m.d_theta);
        let _ = writeln!(s, "# d_gamma = {}", m.d_gamma);
        let _ = writeln!(s, "# acceptance_count = {}", self.acceptance_count);
        let _ = writeln!(s, "# sim_calls = {}", self.sim_calls);
        let _ = writeln!(s, "# sim_failures = {}", self.sim_failures);
        let _ = writeln!(s, "{}", self.header());
        for r in &self.rows {
            let _ = write!(s, "{},{},{}", r.iter, u8::from(r.accepted), fmt_float(r.log_like));
            for v in &r.theta {
                let _ = write!(s, ",{}", fmt_float(*v));
            }
            for v in &r.gamma {
                let _ = write!(s, ",{}", fmt_float(*v));
            }
            let _ = writeln!(s, ",{}", u8::from(r.burnin));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut meta_pairs = Vec::new();
        let mut lines = text.lines().enumerate().peekable();
        while let Some((_, line)) = lines.peek() {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    meta_pairs.push((k.trim().to_string(), v.trim().to_string()));
                }
                lines.next();
            } else {
                break;
            }
        }
        let lookup = |key: &str| -> Result<&str> {
            meta_pairs
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::Parse(format!("trace metadata is missing '{key}'")))
        };
        let parse_u64 = |key: &str| -> Result<u64> {
            lookup(key)?
                .parse()
                .map_err(|_| Error::Parse(format!("trace metadata '{key}' is not an integer")))
        };
        let meta = TraceMeta {
            method: MethodKind::from_str(lookup("method")?)?,
            m: parse_u64("m")? as usize,
            seed: parse_u64("seed")?,
            iterations: parse_u64("iterations")?,
            burn_in: parse_u64("burn_in")?,
            thin: parse_u64("thin")?,
            d_theta: parse_u64("d_theta")? as usize,
            d_gamma: parse_u64("d_gamma")? as usize,
        };
        let acceptance_count = parse_u64("acceptance_count")?;
        let sim_calls = parse_u64("sim_calls")?;
        let sim_failures = parse_u64("sim_failures")?;

        let mut trace = Trace {
            meta,
            rows: Vec::new(),
            acceptance_count,
            sim_calls,
            sim_failures,
        };
        let (lineno, header) = lines
            .next()
            .ok_or_else(|| Error::Parse("trace has no header line".into()))?;
        let expected = trace.header();
        if header != expected {
            return Err(Error::Parse(format!(
                "line {}: header {header:?} does not match expected {expected:?}",
                lineno + 1
            )));
        }
        let ncols = 4 + trace.meta.d_theta + trace.meta.d_gamma;
        for (lineno, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != ncols {
                return Err(Error::Parse(format!(
                    "line {}: expected {ncols} fields, got {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let err = |what: &str| Error::Parse(format!("line {}: bad {what}", lineno + 1));
            let parse_flag = |s: &str, what: &str| match s {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(err(what)),
            };
            let iter: u64 = fields[0].parse().map_err(|_| err("iteration index"))?;
            let accepted = parse_flag(fields[1], "accepted flag")?;
            let log_like: f64 = fields[2].parse().map_err(|_| err("log-likelihood"))?;
            let dt = trace.meta.d_theta;
            let mut theta = Vec::with_capacity(dt);
            for f in &fields[3..3 + dt] {
                theta.push(f.parse().map_err(|_| err("theta value"))?);
            }
            let mut gamma = Vec::with_capacity(trace.meta.d_gamma);
            for f in &fields[3 + dt..ncols - 1] {
                gamma.push(f.parse().map_err(|_| err("gamma value"))?);
            }
            let burnin = parse_flag(fields[ncols - 1], "burnin flag")?;
            trace.rows.push(TraceRow {
                iter,
                accepted,
                log_like,
                theta,
                gamma,
                burnin,
            });
        }
        if trace.rows.is_empty() {
            return Err(Error::Parse("trace has no rows".into()));
        }
        Ok(trace)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv_str(&fs::read_to_string(path)?)
    }
}
