use mtkit_core::kernels::checks::{run_all, CheckDims};

use crate::errors::{data, CliError};
use crate::report::Report;
use crate::KernelCheckArgs;

pub fn run(args: KernelCheckArgs) -> Result<Report, CliError> {
    let dims = CheckDims {
        seq_len: args.seq_len,
        d_model: args.d_model,
        num_heads: args.heads,
        d_hidden: args.hidden,
        trials: args.trials,
    };
    if args.seq_len < 2 || args.heads == 0 || !args.d_model.is_multiple_of(args.heads) {
        return Err(CliError::Usage(format!(
            "need seq-len >= 2 and d-model ({}) divisible by heads ({})",
            args.d_model, args.heads
        )));
    }
    let results = run_all(args.seed, dims);

    // MTKIT_QUIET suppresses the human-readable table; the JSON report stays
    if std::env::var_os("MTKIT_QUIET").is_none() {
        let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
        eprintln!("{:width$}  {:>12}  status", "check", "max error");
        for r in &results {
            let err = match r.max_error {
                Some(e) => format!("{e:.3e}"),
                None => "-".to_string(),
            };
            let status = if r.passed { "PASS" } else { "FAIL" };
            eprintln!("{:width$}  {:>12}  {status}", r.name, err);
        }
    }

    let failed = results.iter().filter(|r| !r.passed).count();
    let report = Report::new("kernel-check", args.seed, &args, &results);
    if failed > 0 {
        report.print();
        return Err(data(format!("{failed} kernel checks failed")));
    }
    Ok(report)
}
