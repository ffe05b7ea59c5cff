use std::io::Write;
use std::process::ExitCode;

use lpf_harness::{parse_outcome, run, Parsed};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let code = match parse_outcome(&argv) {
        Parsed::Config(cfg) => {
            let stdout = std::io::stdout();
            let mut out = std::io::BufWriter::new(stdout.lock());
            let code = run(&cfg, &mut out, &mut std::io::stderr());
            if out.flush().is_err() {
                1
            } else {
                code
            }
        }
        Parsed::Display(text) => {
            print!("{text}");
            0
        }
        Parsed::Error(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
