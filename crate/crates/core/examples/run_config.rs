//! Configuration-driven runs: export a named example to TOML, reload it and
//! run the same command through the library entry point.

use codazzi_lab::cli::{execute, Command, RunConfig};

fn main() -> codazzi_lab::Result<()> {
    let base = RunConfig::from_toml("[source]\nexample = \"xy_family\"\n[grid]\nn = 6\n")?;
    let text = RunConfig::export(&base.resolve()?, &base).to_toml()?;
    println!("{text}");
    let cfg = RunConfig::from_toml(&text)?;
    for cmd in [Command::VerifyCodazzi, Command::AnalyzeEigen, Command::CheckConditions] {
        let (report, tables) = execute(cmd, &cfg)?;
        let rows: usize = tables.iter().map(|t| t.rows.len()).sum();
        println!("{:<16} pass={} ({rows} table rows)", report.command, report.pass);
    }
    Ok(())
}
