use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qprob::channels::{
    channel_opnorm_gap, extract_convergent_subsequence, rho_tilde, Channel, ChannelSequence,
};
use qprob::dilation::{bures_distance, naimark_continuity_check, naimark_dilate, BuresConfig};
use qprob::error::{Error, Result};
use qprob::io::{read_instance, write_instance, Instance, InstanceFile};
use qprob::modmu::{
    bw_gap_mod_mu, canonical_family, canonicalize_mod_mu, equiv_mod_mu, ucp_equiv_mod_mu, InputMeasure,
};
use qprob::qpm::metrics::{delta_distance_capped, rho_distance_capped, total_variation_capped, DEFAULT_EXACT_CAP};
use qprob::qpm::Qpm;
use qprob::random::{random_channel, random_qpm, random_sequence, Drift};

#[derive(Parser)]
#[command(name = "qprob", version, about = "Distances, dilations and channel quotients for finite POVMs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Qpm,
    Channel,
    Sequence,
}

#[derive(Clone, Copy, ValueEnum)]
enum DriftArg {
    None,
    Shrink,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Rho,
    Delta,
    Tv,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded random instance.
    Gen {
        #[arg(long, value_enum)]
        kind: GenKind,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        atoms: usize,
        #[arg(long, default_value_t = 1)]
        inputs: usize,
        #[arg(long, default_value_t = 1)]
        len: usize,
        #[arg(long, value_enum, default_value = "none")]
        drift: DriftArg,
        #[arg(long)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Check positivity and normalization.
    Validate { file: PathBuf },
    /// Distance between two measures.
    Dist {
        #[arg(long, value_enum)]
        metric: Metric,
        file1: PathBuf,
        file2: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_EXACT_CAP)]
        exact_cap: usize,
    },
    /// Bracket for the Bures-type distance.
    Bures {
        file1: PathBuf,
        file2: PathBuf,
        #[arg(long, default_value_t = 64)]
        restarts: usize,
        #[arg(long, default_value_t = 1)]
        env_mult: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Naimark dilation of a measure.
    Dilate {
        file: PathBuf,
        #[arg(long)]
        minimal: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Uniform distance between two channels, by both code paths.
    ChannelDist { file1: PathBuf, file2: PathBuf },
    /// Extract a convergent subsequence.
    Converge {
        file: PathBuf,
        #[arg(long)]
        tol: f64,
        #[arg(long)]
        mu: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Equivalence of two channels modulo an input measure.
    Equiv {
        file1: PathBuf,
        file2: PathBuf,
        #[arg(long)]
        mu: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

/// Result printed on stdout and whether it counts as a validation failure.
struct Outcome {
    report: Value,
    failed: bool,
}

impl From<Value> for Outcome {
    fn from(report: Value) -> Self {
        Outcome { report, failed: false }
    }
}

fn load_qpm(path: &Path) -> Result<Qpm> {
    match read_instance(path)?.instance {
        Instance::Qpm(e) => Ok(e),
        other => Err(Error::InvalidArgument(format!(
            "{} holds a {} instance, expected qpm",
            path.display(),
            other.kind()
        ))),
    }
}

fn load_channel(path: &Path) -> Result<Channel> {
    match read_instance(path)?.instance {
        Instance::Channel(e) | Instance::ChannelWithMeasure(e, _) => Ok(e),
        other => Err(Error::InvalidArgument(format!(
            "{} holds a {} instance, expected channel",
            path.display(),
            other.kind()
        ))),
    }
}

fn load_measure(path: &Path) -> Result<InputMeasure> {
    match read_instance(path)?.instance {
        Instance::Measure(mu) | Instance::ChannelWithMeasure(_, mu) => Ok(mu),
        other => Err(Error::InvalidArgument(format!(
            "{} holds a {} instance, expected measure",
            path.display(),
            other.kind()
        ))),
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("instance");
    path.with_file_name(format!("{stem}.{suffix}.json"))
}

fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Gen {
            kind,
            dim,
            atoms,
            inputs,
            len,
            drift,
            seed,
            output,
        } => {
            let instance = match kind {
                GenKind::Qpm => Instance::Qpm(random_qpm(dim, atoms, seed)?),
                GenKind::Channel => Instance::Channel(random_channel(dim, atoms, inputs, seed)?),
                GenKind::Sequence => {
                    let drift = match drift {
                        DriftArg::None => Drift::None,
                        DriftArg::Shrink => Drift::Shrink,
                    };
                    Instance::Sequence(random_sequence(dim, atoms, inputs, len, seed, drift)?)
                }
            };
            let kind = instance.kind();
            write_instance(&output, &InstanceFile::with_seed(instance, seed))?;
            Ok(json!({ "written": output, "kind": kind, "seed": seed }).into())
        }
        Command::Validate { file } => validate(&file),
        Command::Dist {
            metric,
            file1,
            file2,
            exact_cap,
        } => {
            let e = load_qpm(&file1)?;
            let second = || -> Result<Qpm> {
                let path = file2
                    .as_ref()
                    .ok_or_else(|| Error::InvalidArgument("this metric needs two files".into()))?;
                load_qpm(path)
            };
            let report = match metric {
                Metric::Rho => {
                    let r = rho_distance_capped(&e, &second()?, exact_cap)?;
                    json!({ "metric": "rho", "value": r.value, "upper": r.upper, "exact": r.exact, "certificate": { "signs": r.signs } })
                }
                Metric::Delta => {
                    let r = delta_distance_capped(&e, &second()?, exact_cap)?;
                    json!({ "metric": "delta", "value": r.value, "upper": r.upper, "exact": r.exact, "certificate": { "subset": r.subset } })
                }
                Metric::Tv => {
                    let mut values = vec![total_variation_capped(&e, exact_cap)?];
                    if file2.is_some() {
                        values.push(total_variation_capped(&second()?, exact_cap)?);
                    }
                    json!({ "metric": "tv", "values": values, "exact": e.num_atoms() <= exact_cap })
                }
            };
            Ok(report.into())
        }
        Command::Bures {
            file1,
            file2,
            restarts,
            env_mult,
            seed,
        } => {
            let e1 = load_qpm(&file1)?;
            let e2 = load_qpm(&file2)?;
            let config = BuresConfig {
                restarts,
                env_multiplicity: env_mult,
                seed,
                ..BuresConfig::default()
            };
            let b = bures_distance(&e1, &e2, &config)?;
            let bracket = naimark_continuity_check(&e1, &e2, &b)?;
            Ok(json!({
                "lower": b.lower,
                "upper": b.upper,
                "dual_lower": b.dual_lower,
                "converged": b.converged,
                "restarts_used": b.restarts_used,
                "bracket_holds": bracket,
            })
            .into())
        }
        Command::Dilate { file, minimal, output } => {
            let e = load_qpm(&file)?;
            let triple = naimark_dilate(&e, minimal)?;
            let residual = triple.residual(&e)?;
            let env_dim = triple.env_dim;
            let output = output.unwrap_or_else(|| sibling(&file, "dilation"));
            write_instance(&output, &InstanceFile::new(Instance::Dilation(triple)))?;
            Ok(json!({ "written": output, "env_dim": env_dim, "residual": residual }).into())
        }
        Command::ChannelDist { file1, file2 } => {
            let e = load_channel(&file1)?;
            let f = load_channel(&file2)?;
            let r = rho_tilde(&e, &f)?;
            let dual = channel_opnorm_gap(&e, &f)?;
            Ok(json!({
                "rho_tilde": r.value,
                "argmax": e.inputs().points()[r.argmax],
                "argmax_index": r.argmax,
                "exact": r.exact,
                "opnorm_gap": dual,
                "paths_agree": (r.value - dual).abs() <= 1e-9,
            })
            .into())
        }
        Command::Converge { file, tol, mu, output } => {
            let seq = match read_instance(&file)?.instance {
                Instance::Sequence(s) => s,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "{} holds a {} instance, expected sequence",
                        file.display(),
                        other.kind()
                    )))
                }
            };
            let mu = mu.map(|p| load_measure(&p)).transpose()?;
            let seq = match &mu {
                Some(mu) => ChannelSequence::new(
                    seq.terms()
                        .iter()
                        .map(|t| canonicalize_mod_mu(t, mu).map(|c| c.rep))
                        .collect::<Result<Vec<_>>>()?,
                )?,
                None => seq,
            };
            let x = extract_convergent_subsequence(&seq, tol, &[])?;
            let output = output.unwrap_or_else(|| sibling(&file, "limit"));
            let mut report = json!({
                "indices": x.indices,
                "length": x.indices.len(),
                "gaps": x.gaps,
                "tail_gaps": x.tail_gaps,
                "limit": output,
            });
            if let Some(mu) = &mu {
                let limit = canonicalize_mod_mu(&x.limit, mu)?;
                let family = canonical_family(&limit);
                let bw = x
                    .indices
                    .iter()
                    .map(|&i| bw_gap_mod_mu(&canonicalize_mod_mu(&seq.terms()[i], mu)?, &limit, &family))
                    .collect::<Result<Vec<_>>>()?;
                report["bw_gaps"] = json!(bw);
                write_instance(&output, &InstanceFile::new(Instance::ChannelWithMeasure(x.limit, mu.clone())))?;
            } else {
                write_instance(&output, &InstanceFile::new(Instance::Channel(x.limit)))?;
            }
            Ok(report.into())
        }
        Command::Equiv { file1, file2, mu, tol } => {
            let e = load_channel(&file1)?;
            let f = load_channel(&file2)?;
            let mu = load_measure(&mu)?;
            let r = equiv_mod_mu(&e, &f, &mu, tol)?;
            let ucp = ucp_equiv_mod_mu(&e, &f, &mu, tol)?;
            let witness = r.witness.map(|(a, x)| {
                json!({ "atom": e.space().atoms()[a], "input": e.inputs().points()[x] })
            });
            Ok(json!({ "equivalent": r.equivalent, "witness": witness, "ucp_equivalent": ucp }).into())
        }
    }
}

fn validate(file: &Path) -> Result<Outcome> {
    let parsed = read_instance(file)?;
    let kind = parsed.instance.kind();
    let qpm_report = |e: &Qpm| {
        let r = e.validate();
        json!({ "ok": r.ok, "sum_residual": r.sum_residual, "violations": r.summary() })
    };
    let channel_report = |e: &Channel| {
        let r = e.validate();
        json!({ "ok": r.ok, "failing_inputs": r.failing.iter().map(|&x| &e.inputs().points()[x]).collect::<Vec<_>>() })
    };
    let (ok, details) = match &parsed.instance {
        Instance::Qpm(e) => (e.is_valid(), qpm_report(e)),
        Instance::Channel(e) | Instance::ChannelWithMeasure(e, _) => (e.validate().ok, channel_report(e)),
        Instance::Sequence(s) => {
            let bad: Vec<usize> = (0..s.len()).filter(|&t| !s.terms()[t].validate().ok).collect();
            (bad.is_empty(), json!({ "failing_terms": bad }))
        }
        Instance::Measure(_) => (true, json!({})),
        Instance::Dilation(t) => {
            let residual = qprob::linalg::isometry_residual(&t.isometry);
            (residual <= 1e-9, json!({ "isometry_residual": residual }))
        }
    };
    Ok(Outcome {
        report: json!({ "kind": kind, "valid": ok, "details": details }),
        failed: !ok,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(outcome) => {
            let text = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
            // a closed pipe downstream is not an error
            let _ = writeln!(std::io::stdout(), "{text}");
            if outcome.failed {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
