//! The machine-readable run report every subcommand prints: tool version,
//! seed, a config echo, and the subcommand result. Identical inputs produce
//! byte-identical reports.

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub seed: u64,
    pub config: Value,
    pub result: Value,
}

impl Report {
    pub fn new(
        subcommand: &'static str,
        seed: u64,
        config: impl Serialize,
        result: impl Serialize,
    ) -> Report {
        Report {
            tool: "mtkit",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            seed,
            config: serde_json::to_value(config).expect("config serializes"),
            result: serde_json::to_value(result).expect("result serializes"),
        }
    }

    pub fn print(&self) {
        println!("{}", serde_json::to_string_pretty(self).expect("report serializes"));
    }
}
