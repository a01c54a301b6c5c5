use std::process::ExitCode;

use weakkam1d::runner::{run, write_outputs, RunConfig};
use weakkam1d::scenario::list_scenarios;
use weakkam1d::Error;

const USAGE: &str = "usage: weakkam1d <run|list|check> [--config FILE] [--key value ...]

  run     run the pipeline and write report.json, CSV and .dat files
  check   run the pipeline and print one PASS/FAIL line per check
  list    list the built-in scenarios

Keys use dotted paths, e.g. --scenario E3 --lambda-min 0.0125 --grid.n 8705.
WEAKKAM1D_OUT overrides the output directory.";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(cmd) = args.first() else {
        eprintln!("{USAGE}");
        return ExitCode::from(2);
    };
    let rest = &args[1..];
    match cmd.as_str() {
        "list" => {
            print!("{}", list_scenarios());
            ExitCode::SUCCESS
        }
        "-h" | "--help" | "help" => {
            println!("{USAGE}");
            ExitCode::SUCCESS
        }
        "run" | "check" => {
            let cfg = match RunConfig::from_args(rest) {
                Ok(c) => c,
                Err(e) => return config_error(e),
            };
            let out_dir = match cfg.resolve() {
                Ok(r) => r.out_dir,
                Err(e) => return config_error(e),
            };
            let report = match run(&cfg) {
                Ok(r) => r,
                Err(e) => return config_error(e),
            };
            for c in &report.checks {
                println!("{}", c.line());
            }
            if let Some(e) = &report.error {
                eprintln!("error: {e}");
            }
            if cmd == "run" {
                match write_outputs(&report, &out_dir) {
                    Ok(files) => {
                        for f in files {
                            println!("wrote {}", f.display());
                        }
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(1);
                    }
                }
            }
            ExitCode::from(report.exit_code() as u8)
        }
        other => {
            eprintln!("unknown command '{other}'\n{USAGE}");
            ExitCode::from(2)
        }
    }
}

fn config_error(e: Error) -> ExitCode {
    eprintln!("{e}");
    match e {
        Error::Config(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}
