//! Drives the `validate` subcommand from a configuration string and prints
//! the text report it writes.

use minimax_infer::cli::{parse_config_str, run_command, Command, RunOptions};

fn main() -> minimax_infer::Result<()> {
    let cfg = parse_config_str(r#"{ "problem": "cone_qp", "N": 4000, "R": 400, "S": 20000, "seed": 5 }"#)?;
    let out = std::env::temp_dir().join(format!("minimax-validate-{}", std::process::id()));
    let opts = RunOptions { out: Some(out.clone()), threads: None, force: true };
    let dir = run_command(Command::Validate, &cfg, &opts)?;
    print!("{}", std::fs::read_to_string(dir.join("report.txt"))?);
    std::fs::remove_dir_all(&out)?;
    Ok(())
}
