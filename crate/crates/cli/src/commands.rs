use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use pselect::sim::output::{
    read_manymeans, write_experiment_files, write_manymeans_files, MANYMEANS_FILE, SUMMARY_FILE,
};
use pselect::sim::{
    ks_statistic, run_experiment, run_manymeans_experiment, ExperimentConfig, ExperimentKind, ExperimentSummary,
    ManyMeansConfig, ManyMeansSummary, ZERO_PIVOT,
};
use pselect::{infer_path, BootstrapConfig, Dataset, PathConfig, PathInference, ResponseColumn, SigmaMode};

use crate::{BootstrapArgs, Cli, CliError, Command, SigmaArg};

pub const INFERENCE_FILE: &str = "inference.csv";
pub const INFERENCE_HEADER: [&str; 12] = [
    "step",
    "variable",
    "name",
    "sign",
    "estimate",
    "lower_bound",
    "upper_bound",
    "pvalue",
    "lo",
    "hi",
    "resamples",
    "escalated",
];

pub fn run(cli: Cli) -> Result<(), CliError> {
    let threads = cli.threads.map(|t| t as usize);
    match cli.command {
        Command::Infer {
            data,
            response,
            no_header,
            normalize,
            method,
            steps,
            sigma,
            alpha,
            c,
            bootstrap,
            seed,
            out,
        } => {
            let mode = sigma_mode(sigma, c, &bootstrap, seed)?;
            let (mut ds, names) = load_dataset(&data, &response, !no_header)?;
            if normalize {
                ds.normalize_columns();
            }
            let result = infer_path(&ds, &PathConfig::new(method, steps), &mode, alpha)?;
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(pselect::Error::from)?;
                    let path = dir.join(INFERENCE_FILE);
                    write_inference(File::create(&path).map_err(pselect::Error::from)?, &result, &names)?;
                    println!("wrote {}", path.display());
                }
                None => write_inference(io::stdout().lock(), &result, &names)?,
            }
            Ok(())
        }
        Command::Simulate {
            kind,
            dist,
            reps,
            alpha,
            steps,
            method,
            null,
            c,
            bootstrap,
            seed,
            out,
        } => {
            if null && kind == ExperimentKind::Signal {
                return Err(CliError::Usage("--null contradicts the signal experiment".into()));
            }
            let mut cfg = ExperimentConfig::for_kind(kind, !null);
            if !dist.is_empty() {
                cfg.families = dist;
            }
            cfg.reps = reps.unwrap_or(cfg.reps);
            cfg.alpha = alpha.unwrap_or(cfg.alpha);
            cfg.steps = steps.unwrap_or(cfg.steps);
            cfg.method = method.unwrap_or(cfg.method);
            cfg.c = c.unwrap_or(cfg.c);
            cfg.bootstrap = bootstrap_config(&bootstrap, cfg.c, seed);
            cfg.seed = seed;
            cfg.threads = threads;
            let summary = run_experiment(&cfg)?;
            for path in write_experiment_files(&out, &summary)? {
                println!("wrote {}", path.display());
            }
            print_experiment(&summary, !cfg.beta.is_empty());
            Ok(())
        }
        Command::Manymeans { d, m, reps, seed, out } => {
            let cfg = ManyMeansConfig {
                d,
                m,
                reps,
                seed,
                threads,
            };
            let summary = run_manymeans_experiment(&cfg)?;
            for path in write_manymeans_files(&out, &summary)? {
                println!("wrote {}", path.display());
            }
            print_manymeans(&summary);
            Ok(())
        }
        Command::Report { dir } => report(&dir),
    }
}

fn bootstrap_config(args: &BootstrapArgs, c: f64, seed: u64) -> BootstrapConfig {
    let defaults = BootstrapConfig::default();
    let resamples = args.resamples.unwrap_or(defaults.resamples);
    BootstrapConfig {
        resamples,
        max_resamples: args.max_resamples.unwrap_or(defaults.max_resamples.max(resamples)),
        gamma: args.gamma.unwrap_or(defaults.gamma),
        c,
        seed,
        ..defaults
    }
}

fn sigma_mode(sigma: SigmaArg, c: f64, bootstrap: &BootstrapArgs, seed: u64) -> Result<SigmaMode, CliError> {
    let has_bootstrap_flags =
        bootstrap.resamples.is_some() || bootstrap.max_resamples.is_some() || bootstrap.gamma.is_some();
    if has_bootstrap_flags && sigma != SigmaArg::Bootstrap {
        return Err(CliError::Usage(
            "--resamples, --max-resamples and --gamma apply only with --sigma bootstrap".into(),
        ));
    }
    Ok(match sigma {
        SigmaArg::Known(s) => SigmaMode::Known(s),
        SigmaArg::Plugin => SigmaMode::Plugin { c },
        SigmaArg::Bootstrap => SigmaMode::Bootstrap(bootstrap_config(bootstrap, c, seed)),
    })
}

/// Loads the dataset and the predictor names (header names, or `x<j>`).
fn load_dataset(path: &Path, response: &ResponseColumn, header: bool) -> Result<(Dataset, Vec<String>), CliError> {
    let open = || File::open(path).map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())));
    let ds = Dataset::from_csv(open()?, response, header)?;
    let names = if header {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open()?);
        let headers = rdr.headers().map_err(pselect::Error::from)?.clone();
        let target = match response {
            ResponseColumn::Index(i) => *i,
            ResponseColumn::Name(name) => headers.iter().position(|h| h == name).expect("checked by the loader"),
        };
        headers
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != target)
            .map(|(_, h)| h.to_owned())
            .collect()
    } else {
        (0..ds.d()).map(|j| format!("x{j}")).collect()
    };
    Ok((ds, names))
}

fn write_inference<W: Write>(w: W, result: &PathInference, names: &[String]) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    let csv_err = |e: csv::Error| CliError::Core(e.into());
    out.write_record(INFERENCE_HEADER).map_err(csv_err)?;
    for s in &result.steps {
        let (lo, hi) = s.interval.unwrap_or((f64::NAN, f64::NAN));
        out.write_record([
            s.step.to_string(),
            s.variable.to_string(),
            names[s.variable].clone(),
            (if s.sign.as_f64() > 0.0 { "+" } else { "-" }).to_string(),
            s.estimate.to_string(),
            s.lower_bound.to_string(),
            s.upper_bound.to_string(),
            s.pvalue.to_string(),
            lo.to_string(),
            hi.to_string(),
            s.resamples.to_string(),
            s.escalated.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush().map_err(pselect::Error::from)?;
    Ok(())
}

fn print_table(rows: &[Vec<String>]) {
    let Some(first) = rows.first() else { return };
    let widths: Vec<usize> = (0..first.len())
        .map(|j| rows.iter().map(|r| r.get(j).map_or(0, String::len)).max().unwrap_or(0))
        .collect();
    for row in rows {
        let line: Vec<String> = row.iter().zip(&widths).map(|(v, w)| format!("{v:>w$}")).collect();
        println!("{}", line.join("  "));
    }
}

fn print_experiment(summary: &ExperimentSummary, has_signal: bool) {
    let mut rows = vec![["family", "step", "statistic", "coverage", "power", "width", "ks", "escalations", "empty"]
        .map(String::from)
        .to_vec()];
    for c in &summary.cells {
        rows.push(vec![
            c.family.to_string(),
            c.step.to_string(),
            c.statistic.to_string(),
            format!("{:.3}", c.coverage),
            format!("{:.3}", c.power),
            format!("{:.3}", c.width),
            format!("{:.4}", c.ks),
            c.escalations.to_string(),
            c.empty.to_string(),
        ]);
    }
    print_table(&rows);
    for s in summary.selection.iter().filter(|_| has_signal) {
        println!(
            "{}: signal variable first {:.3}, first two steps {:.3}",
            s.family, s.first_step, s.first_two_steps
        );
    }
    if !summary.failures.is_empty() {
        println!("{} repetitions failed and were skipped", summary.failures.len());
    }
}

fn print_manymeans(summary: &ManyMeansSummary) {
    println!("d = {}, m = {}, reps = {}", summary.config.d, summary.config.m, summary.config.reps);
    if summary.capped {
        println!("mixture weight capped at pi = 1/2, shift B = {}", summary.shift);
    } else {
        println!("mixture weight pi = {:e}, shift B = {:e}", summary.pi, summary.shift);
    }
    println!("fraction of pivots below {ZERO_PIVOT:e}: {:.4}", summary.zero_fraction);
    println!("KS distance from uniform: {:.4}", summary.ks);
}

fn report(dir: &Path) -> Result<(), CliError> {
    let summary: PathBuf = dir.join(SUMMARY_FILE);
    let manymeans: PathBuf = dir.join(MANYMEANS_FILE);
    let mut found = false;
    if summary.is_file() {
        found = true;
        let mut rdr = csv::Reader::from_path(&summary).map_err(pselect::Error::from)?;
        let mut rows = vec![rdr.headers().map_err(pselect::Error::from)?.iter().map(String::from).collect()];
        for record in rdr.records() {
            rows.push(record.map_err(pselect::Error::from)?.iter().map(String::from).collect());
        }
        println!("{}", summary.display());
        print_table(&rows);
    }
    if manymeans.is_file() {
        found = true;
        let records = read_manymeans(File::open(&manymeans).map_err(pselect::Error::from)?)?;
        let pivots: Vec<f64> = records.iter().map(|r| r.pivot).collect();
        let zero = pivots.iter().filter(|&&p| p < ZERO_PIVOT).count();
        println!("{}", manymeans.display());
        println!("repetitions: {}", pivots.len());
        println!("fraction of pivots below {ZERO_PIVOT:e}: {:.4}", zero as f64 / pivots.len().max(1) as f64);
        println!("KS distance from uniform: {:.4}", ks_statistic(&pivots));
    }
    if found {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "no {SUMMARY_FILE} or {MANYMEANS_FILE} in {}",
            dir.display()
        )))
    }
}
