use std::str::FromStr;

use smoothncp::analysis::{
    check_concavity, check_limit_dichotomy, check_speed_bound, check_subadditivity, v_function, AnalysisReport, Witness,
};
use smoothncp::kernels::{check_ha, HaReport};
use smoothncp::GridSpec;

use crate::{resolve_kernel, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Ha,
    Limits,
    SubaddV,
    Concavity,
    Speed,
}

impl FromStr for Check {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ha" => Ok(Check::Ha),
            "limits" => Ok(Check::Limits),
            "subadd_v" => Ok(Check::SubaddV),
            "concavity" => Ok(Check::Concavity),
            "speed" => Ok(Check::Speed),
            _ => Err(CliError::Usage(format!(
                "unknown check '{s}' (ha, limits, subadd_v, concavity, speed)"
            ))),
        }
    }
}

/// Grid and point arguments; each check reads the ones it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeArgs {
    /// Contraction factor for `ha`.
    pub a: f64,
    /// Upper end of the `ha` scan.
    pub s_max: f64,
    /// Grid range for `subadd_v` and `concavity`; check-specific default if `None`.
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    /// Log-spaced points per decade.
    pub per_decade: usize,
    pub s: f64,
    pub t: f64,
    pub r0: f64,
}

impl Default for AnalyzeArgs {
    fn default() -> Self {
        AnalyzeArgs {
            a: 0.25,
            s_max: 1e6,
            lo: None,
            hi: None,
            per_decade: 64,
            s: 1.0,
            t: 2.0,
            r0: 0.5,
        }
    }
}

impl AnalyzeArgs {
    fn grid(&self, lo: f64, hi: f64) -> GridSpec {
        GridSpec::log_per_decade(self.lo.unwrap_or(lo), self.hi.unwrap_or(hi), self.per_decade)
    }
}

/// Runs one analysis check on the kernel named by `kernel`.
pub fn run_analyze(kernel: &str, check: Check, args: &AnalyzeArgs) -> Result<AnalysisReport> {
    let k = resolve_kernel(kernel)?;
    let report = match check {
        Check::Ha => {
            let grid = format!(
                "64 points per decade on [{:e}, {:e}], a = {}",
                args.s_max * 1e-6,
                args.s_max,
                args.a
            );
            match check_ha(&k, args.a, args.s_max)? {
                HaReport::HoldsFrom(s) => {
                    let mut rep = AnalysisReport::holding("ha", grid, 0.0);
                    rep.note = Some(format!("psi(s) <= psi(a s)/2 for all scanned s >= {s:e}"));
                    rep
                }
                HaReport::ViolatedAt(s) => {
                    let (lhs, rhs) = (k.psi(s), 0.5 * k.psi(args.a * s));
                    let witness = Witness {
                        index: 0,
                        point: vec![s],
                        values: vec![lhs, rhs],
                        note: "values are psi(s) and psi(a s)/2 at the largest failing s".into(),
                    };
                    AnalysisReport::violated("ha", grid, witness, rhs - lhs)
                }
            }
        }
        Check::Limits => {
            let points: Vec<f64> = (-2..=5).map(f64::from).collect();
            check_limit_dichotomy(&k, &points)?
        }
        Check::SubaddV => check_subadditivity("subadditivity_v", |y| v_function(&k, y), &args.grid(0.01, 10.0))?,
        Check::Concavity => check_concavity(&k, &args.grid(0.1, 10.0))?,
        Check::Speed => {
            // eight points per decade from r0 down to r0 * 1e-6
            let r_seq: Vec<f64> = (0..=48).map(|i| args.r0 * 10f64.powf(-(i as f64) / 8.0)).collect();
            check_speed_bound(&k, args.s, args.t, args.r0, &r_seq)?
        }
    };
    Ok(report)
}
