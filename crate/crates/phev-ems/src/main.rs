use clap::Parser;

use phev_ems::cli::{Cli, Cmd};
use phev_ems::commands;

fn main() {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Simulate(a) => commands::cmd_simulate(a),
        Cmd::Dp(a) => commands::cmd_dp(a),
        Cmd::Train(a) => commands::cmd_train(a),
        Cmd::Compare(a) => commands::cmd_compare(a),
        Cmd::CycleInfo(a) => commands::cmd_cycle_info(a),
    };
    if let Err(e) = result {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
