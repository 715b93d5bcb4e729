//! Every claim the named examples illustrate, as one pass/fail list.

use codazzi_lab::cli::{execute, Command, RunConfig};

fn main() -> codazzi_lab::Result<()> {
    let (report, _) = execute(Command::ReproducePaper, &RunConfig::default())?;
    if let Some(steps) = report.results["steps"].as_array() {
        for s in steps {
            println!("{:<32} {}", s["name"].as_str().unwrap_or("?"), s["pass"]);
        }
    }
    println!("all pass: {} ({:.1} s)", report.pass, report.wall_time_s);
    Ok(())
}
