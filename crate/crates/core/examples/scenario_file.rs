// Driving a run from a scenario document, the same way the command-line
// tool does, and reading the written run directory back.

use std::path::PathBuf;

use satsync::cli::{self, Exit, Manifest, RunReport};
use satsync::scenario::Overrides;

const SCENARIO: &str = r#"
name = "oscillators"

[model]
a = { rows = 2, cols = 2, data = [0.0, 1.0, -1.0, 0.0] }
b = { rows = 2, cols = 1, data = [0.0, 1.0] }
c = { rows = 1, cols = 2, data = [1.0, 0.0] }

[graph]
kind = "random"
n = 8
roots = [1, 4]
seed = 11

[protocol]
kind = "P2"
rho = 2.0
gains = "auto"

[sim]
dt = 1e-3
horizon = 60.0
record_every = 20
seed = 3

[analysis]
tol = 1e-2
window = 5.0
"#;

pub fn run_example() -> satsync::Result<(Manifest, RunReport)> {
    let dir = std::env::temp_dir().join(format!("satsync-scenario-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| satsync::Error::Io { path: dir.clone(), source: e })?;
    let path: PathBuf = dir.join("input.toml");
    std::fs::write(&path, SCENARIO).map_err(|e| satsync::Error::Io { path: path.clone(), source: e })?;

    let mut stdout = std::io::stdout();
    let verdict = cli::cmd_verify(&path, &Overrides::default(), &mut stdout)?;
    assert_eq!(verdict, Exit::Success);
    let run_dir = dir.join("run");
    cli::cmd_simulate(&path, &run_dir, &Overrides::default(), &mut stdout)?;

    let read = |name: &str| {
        let p = run_dir.join(name);
        std::fs::read_to_string(&p).map_err(|e| satsync::Error::Io { path: p, source: e })
    };
    let manifest: Manifest = serde_json::from_str(&read(cli::MANIFEST_FILE)?).expect("manifest schema");
    let report: RunReport = serde_json::from_str(&read(cli::REPORT_FILE)?).expect("report schema");
    println!("wrote {:?} into {}", manifest.body.outputs, run_dir.display());
    let _ = std::fs::remove_dir_all(&dir);
    Ok((manifest, report))
}

#[allow(dead_code)]
fn main() -> satsync::Result<()> {
    run_example().map(|_| ())
}
