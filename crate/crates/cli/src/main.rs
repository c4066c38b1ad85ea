use std::process::ExitCode;

use ramsey_experiments::cli::{run, Outcome};

fn main() -> ExitCode {
    let outcome = run(std::env::args_os());
    match &outcome {
        Outcome::Done(run) => println!("{}", run.dir.display()),
        Outcome::Info(text) => print!("{text}"),
        Outcome::Rejected(msg) => eprint!("{}{}", msg, if msg.ends_with('\n') { "" } else { "\n" }),
        Outcome::Failed(e) => eprintln!("error: {e:#}"),
    }
    ExitCode::from(outcome.exit_code() as u8)
}
