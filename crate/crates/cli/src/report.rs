//! The JSON envelope shared by every subcommand.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::{CliError, Common};

/// Collects named phase timings when `--timings` is set; otherwise stays empty
/// so that reports depend only on the inputs.
pub struct Timer {
    enabled: bool,
    start: Instant,
    phases: BTreeMap<String, f64>,
}

impl Timer {
    pub fn new(common: &Common) -> Self {
        Self {
            enabled: common.timings,
            start: Instant::now(),
            phases: BTreeMap::new(),
        }
    }

    pub fn lap(&mut self, name: &str) {
        if self.enabled {
            let now = Instant::now();
            self.phases
                .insert(name.to_string(), (now - self.start).as_secs_f64() * 1e3);
            self.start = now;
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    config: &'a C,
    result: &'a R,
    timings_ms: &'a BTreeMap<String, f64>,
}

/// Writes `{"config", "result", "timings_ms"}` to the report path or stdout.
pub fn emit<C: Serialize, R: Serialize>(common: &Common, config: &C, result: &R, timer: &Timer) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(&Envelope {
        config,
        result,
        timings_ms: &timer.phases,
    })?;
    match &common.report {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

/// A rational as `"num/den"` next to its nearest double.
#[derive(Serialize)]
pub struct Exact {
    pub exact: String,
    pub value: f64,
}

impl From<num_rational::Ratio<u64>> for Exact {
    fn from(r: num_rational::Ratio<u64>) -> Self {
        Self {
            exact: format!("{}/{}", r.numer(), r.denom()),
            value: *r.numer() as f64 / *r.denom() as f64,
        }
    }
}
