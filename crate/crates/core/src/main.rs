use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use dualrt::kernel::bootstrap;
use dualrt::script::{run_script, RunOptions};

/// Runs object-model scripts against a freshly bootstrapped object space.
#[derive(Debug, Parser)]
#[command(name = "dualrt", version)]
struct Cli {
    /// Script file; reads stdin when absent.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Append a dump of every object after the script.
    #[arg(long)]
    dump_final: bool,
    /// Print bootstrap object and class counts, then exit.
    #[arg(long)]
    bootstrap_stats: bool,
    /// Seed for `selfcheck` commands.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.bootstrap_stats {
        let os = bootstrap();
        println!("objects {}", os.object_count());
        println!("classes {}", os.class_count());
        println!("meta classes {}", os.meta_class_count());
        println!("helix classes {}", os.helix_count());
        return ExitCode::SUCCESS;
    }
    let src = match &cli.script {
        Some(p) => std::fs::read_to_string(p),
        None => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map(|_| s)
        }
    };
    let src = match src {
        Ok(s) => s,
        Err(e) => {
            eprintln!("cannot read script: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = run_script(
        &src,
        &RunOptions {
            seed: cli.seed,
            dump_final: cli.dump_final,
        },
    );
    print!("{}", outcome.transcript);
    ExitCode::from(outcome.exit_code as u8)
}
