//! Parity-environment verification: exhaustive over sign vectors for
//! sampled permutations, or over instances loaded from a file.

use std::path::{Path, PathBuf};

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use var_core::lemma::trial_seed;
use var_core::parity::{
    all_sign_vectors, random_permutation, verify_instance, ParityInstance, VerificationReport,
};

use super::{bad_args, read_jsonl, write_jsonl, EXIT_CHECK, EXIT_OK};
use crate::config::WorkbenchConfig;

#[derive(Debug, Args)]
pub struct ParityArgs {
    #[arg(long = "n", value_delimiter = ',', default_values_t = vec![2, 4, 6])]
    pub n_list: Vec<usize>,
    /// Random permutations sampled per n (exhaustive over sign vectors).
    #[arg(long, default_value_t = 20)]
    pub permutations: u32,
    #[arg(long, default_value_t = 1.0)]
    pub penalty: f64,
    /// Flip one odd-layer weight assignment (negative control; the run is
    /// expected to fail).
    #[arg(long)]
    pub perturb: bool,
    /// Verify instances from a JSON-lines file ({n, pi, x} per line)
    /// instead of sampling.
    #[arg(long)]
    pub instances: Option<PathBuf>,
}

fn sampled_instances(args: &ParityArgs, master_seed: u64) -> anyhow::Result<Vec<ParityInstance>> {
    let mut out = Vec::new();
    for &n in &args.n_list {
        if n < 2 {
            return Err(bad_args(format!("n must be at least 2, got {n}")));
        }
        if n > 16 {
            return Err(bad_args(format!(
                "exhaustive check over 2^{n} sign vectors is too large"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(master_seed, n as u32));
        for _ in 0..args.permutations {
            let pi = random_permutation(n, &mut rng);
            for x in all_sign_vectors(n) {
                out.push(ParityInstance::new(pi.clone(), x).map_err(|e| bad_args(e.to_string()))?);
            }
        }
    }
    Ok(out)
}

pub fn run(args: &ParityArgs, config: &WorkbenchConfig, out_dir: &Path) -> anyhow::Result<i32> {
    if args.penalty <= 0.0 {
        return Err(bad_args(format!(
            "penalty must be positive, got {}",
            args.penalty
        )));
    }
    let instances = match &args.instances {
        Some(path) => {
            let loaded: Vec<ParityInstance> = read_jsonl(path)?;
            for inst in &loaded {
                inst.validate()?;
            }
            loaded
        }
        None => sampled_instances(args, config.master_seed)?,
    };

    let mut reports: Vec<VerificationReport> = Vec::with_capacity(instances.len());
    let mut failures = 0usize;
    for inst in &instances {
        let report = verify_instance(inst, args.penalty, args.perturb)?;
        if !report.passed() {
            failures += 1;
        }
        reports.push(report);
    }

    std::fs::create_dir_all(out_dir)?;
    write_jsonl(&out_dir.join("parity_report.jsonl"), &reports)?;

    println!(
        "parity: {} instance(s), {} failure(s){} -> {}",
        reports.len(),
        failures,
        if args.perturb { " [perturbed]" } else { "" },
        out_dir.display()
    );
    Ok(if failures == 0 { EXIT_OK } else { EXIT_CHECK })
}
