use serde::Serialize;

use mtkit_core::schedule::{decay, DecayParams};

use crate::errors::{usage, CliError};
use crate::io::write_text;
use crate::report::Report;
use crate::SchedulePlotArgs;

#[derive(Serialize)]
struct PlotResult {
    rows: u64,
    columns: [&'static str; 4],
}

pub fn run(args: SchedulePlotArgs) -> Result<Report, CliError> {
    let linear = DecayParams::linear(args.linear_k, args.linear_b, args.linear_eps).map_err(usage)?;
    let exponential = DecayParams::exponential(args.exp_k).map_err(usage)?;
    let inv_sigmoid = DecayParams::inv_sigmoid(args.sig_k).map_err(usage)?;

    let mut csv = String::from("t,linear,exponential,inverse_sigmoid\n");
    for t in 0..=args.steps {
        let row = [
            decay(t, &linear).map_err(usage)?,
            decay(t, &exponential).map_err(usage)?,
            decay(t, &inv_sigmoid).map_err(usage)?,
        ];
        csv.push_str(&format!("{t},{},{},{}\n", row[0], row[1], row[2]));
    }
    write_text(&args.output, &csv)?;

    Ok(Report::new(
        "schedule-plot",
        0,
        &args,
        PlotResult {
            rows: args.steps + 1,
            columns: ["t", "linear", "exponential", "inverse_sigmoid"],
        },
    ))
}
