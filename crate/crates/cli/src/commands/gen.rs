//! `simprop gen`: write synthetic datasets with their planted truth.

use std::path::Path;

use simprop_core::numcore::rng::RngSeed;
use simprop_core::synthgen::{gen_dm, gen_linear, DmSynthConfig, LinearSynthConfig};

use crate::commands::{ensure_dir, write_json};
use crate::config::{DmSynthSpec, LinearSynthSpec};
use crate::data::{write_counts_csv, write_matrix_csv, write_response_csv};
use crate::errors::{CliError, CliResult};

fn refuse_overwrite(dir: &Path, names: &[&str], force: bool) -> CliResult<()> {
    if force {
        return Ok(());
    }
    for name in names {
        let path = dir.join(name);
        if path.exists() {
            return Err(CliError::config(format!(
                "{} exists; pass --force to overwrite",
                path.display()
            )));
        }
    }
    Ok(())
}

pub fn gen_linear_files(dir: &Path, spec: &LinearSynthSpec, seed: u64, force: bool) -> CliResult<()> {
    ensure_dir(dir)?;
    refuse_overwrite(dir, &["X.csv", "y.csv", "truth.json"], force)?;
    let data = gen_linear(&LinearSynthConfig {
        n: spec.n,
        p: spec.p,
        n_active: spec.n_active,
        rho: spec.rho,
        sigma2: spec.sigma2,
        seed: RngSeed(seed),
    })?;
    write_matrix_csv(&dir.join("X.csv"), &data.x, "x")?;
    write_response_csv(&dir.join("y.csv"), &data.y)?;
    let truth = serde_json::json!({
        "kind": "linear",
        "seed": seed,
        "active": data.truth.active_indices(),
        "intercept": data.intercept,
        "coefficients": data.coefficients,
    });
    write_json(&dir.join("truth.json"), &truth)?;
    eprintln!(
        "wrote {} ({} rows, {} predictors, {} active)",
        dir.display(),
        spec.n,
        spec.p,
        spec.n_active
    );
    Ok(())
}

pub fn gen_dm_files(dir: &Path, spec: &DmSynthSpec, seed: u64, force: bool) -> CliResult<()> {
    ensure_dir(dir)?;
    refuse_overwrite(dir, &["X.csv", "Y.csv", "truth.json"], force)?;
    let data = gen_dm(&DmSynthConfig {
        n: spec.n,
        p: spec.p,
        categories: spec.categories,
        associations: spec.associations.clone(),
        rho: spec.rho,
        depth_base: spec.depth_base,
        depth_mean: spec.depth_mean,
        seed: RngSeed(seed),
    })?;
    write_counts_csv(&dir.join("Y.csv"), &data.counts)?;
    write_matrix_csv(&dir.join("X.csv"), &data.x, "x")?;
    let truth = serde_json::json!({
        "kind": "dm",
        "seed": seed,
        "associations": spec.associations,
    });
    write_json(&dir.join("truth.json"), &truth)?;
    eprintln!(
        "wrote {} ({} rows, {} predictors, {} categories, {} planted associations)",
        dir.display(),
        spec.n,
        spec.p,
        spec.categories,
        spec.associations.len()
    );
    Ok(())
}
