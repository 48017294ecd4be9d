//! Config-driven experiment pipeline, exactly as the CLI drives it.
//!
//! Parses a TOML experiment document (the same schema the `conewave`
//! binary consumes), runs the configured sweep over cone powers, and lists
//! the artifacts each sub-run leaves behind: trace CSV, fit table, decay
//! plot, and the JSON run record.  Everything lands in a temporary
//! directory printed at the end.
//!
//! Run with: `cargo run --release --example run_from_config`

use conewave::experiment::commands::cmd_sweep;
use conewave::experiment::config::ExperimentConfig;

const CONFIG: &str = r#"
[metric]
variant = "isotropic"
dimension = 3
obstacle_radius = 1.0
cone_power = 1.0          # overridden per sweep point

[[data]]
kind = "displacement"
center = 2.6
width = 1.4
amplitude = 1.0

[grid]
solver = "radial"
rho_max = 40.0
n_cells = 4000
cfl = 0.5

[observation]
radii = [2.0]
t_final = 30.0
sample_every = 4

[analysis]
window = [12.0, 27.0]

[output]
label = "dichotomy"

[sweep]
cone_powers = [1.0, 1.5, 3.0]
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    let out = std::env::temp_dir().join("conewave-example-sweep");
    std::fs::create_dir_all(&out)?;

    let output = cmd_sweep(&cfg, &out, 0)?;
    println!("{}", output.text);

    println!("artifacts under {}:", out.display());
    let mut paths: Vec<_> = walk(&out)?;
    paths.sort();
    for p in paths {
        println!("  {}", p.strip_prefix(&out).unwrap_or(&p).display());
    }
    Ok(())
}

fn walk(dir: &std::path::Path) -> std::io::Result<Vec<std::path::PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            out.extend(walk(&path)?);
        } else {
            out.push(path);
        }
    }
    Ok(out)
}
