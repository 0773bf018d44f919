//! `zt`: coupling coefficients, the verification suite, single detection
//! probabilities and probability grids.
//!
//! Exit codes: 0 on success, 1 when a check or a convergence test fails,
//! 2 for bad input.

mod config;
mod csv;
mod verify;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use zernike_turbulence::coupling::{a_coeff, gamma_coeff};
use zernike_turbulence::oracle::{a_coeff_numeric, gamma_coeff_numeric};
use zernike_turbulence::turbulence::{joint_probability, probability_grid, DetectionSpec};
use zernike_turbulence::Error;

use config::{parse_ints, Command, InputError, Ints, Resolved, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "zt", version, about = "Zernike coupling tensors and turbulent two-photon detection")]
struct Cli {
    #[command(subcommand)]
    command: Option<Sub>,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Sub {
    /// Print A and Gamma for one key.
    Coeff,
    /// Run the invariant suite; exit 0 iff every check passes.
    Verify,
    /// One collinear joint detection probability.
    Prob,
    /// A probability grid over (N1, N2) as CSV.
    Grid,
}

#[derive(Args, Debug, Default)]
struct Opts {
    /// JSON config file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_ints)]
    pump: Option<Ints>,
    /// "N1,M1,N2,M2" for prob, "M1,M2" for grid.
    #[arg(long, global = true, value_parser = parse_ints, allow_hyphen_values = true)]
    detectors: Option<Ints>,
    #[arg(long, global = true)]
    n_max: Option<u32>,
    #[arg(long, global = true)]
    sigma_r: Option<f64>,
    /// none, truncate or hybrid.
    #[arg(long, global = true)]
    ao_mode: Option<String>,
    #[arg(long, global = true)]
    ao_cutoff: Option<u32>,
    /// Largest n1, n2 in the probability sums.
    #[arg(long, global = true)]
    order_max: Option<u32>,
    #[arg(long, global = true)]
    n5_max: Option<u32>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// "n1,m1,n2,m2,n3,m3" for coeff.
    #[arg(long, global = true, value_parser = parse_ints, allow_hyphen_values = true)]
    key: Option<Ints>,
    /// Also print oracle values with error bounds.
    #[arg(long, global = true)]
    oracle: bool,
    /// Radial order bound for verify.
    #[arg(long, global = true)]
    order: Option<u32>,
    /// Test hook: scale one Gamma by 1 + 1e-6 before verifying.
    #[arg(long, global = true)]
    perturb: bool,
}

impl Opts {
    fn as_config(&self, command: Option<Sub>) -> RunConfig {
        RunConfig {
            command: command.map(|c| match c {
                Sub::Coeff => Command::Coeff,
                Sub::Verify => Command::Verify,
                Sub::Prob => Command::Prob,
                Sub::Grid => Command::Grid,
            }),
            pump: self.pump.clone().map(|v| v.0),
            detectors: self.detectors.clone().map(|v| v.0),
            n_max: self.n_max,
            sigma_r: self.sigma_r,
            ao_mode: self.ao_mode.clone(),
            ao_cutoff: self.ao_cutoff,
            order_max: self.order_max,
            n5_max: self.n5_max,
            output_path: self.out.clone(),
            key: self.key.clone().map(|v| v.0),
            oracle: self.oracle.then_some(true),
            order: self.order,
            perturb: self.perturb.then_some(true),
            ..Default::default()
        }
    }
}

enum Failure {
    Check(String),
    Input(String),
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Input(e.0)
    }
}

fn emit(run: &Resolved, text: &str) -> Result<(), Failure> {
    match &run.output_path {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Input(format!("cannot write to stdout: {e}"))),
    }
}

fn coeff(run: &Resolved) -> Result<(), Failure> {
    let key = run.coupling_key()?;
    let mut record = json!({
        "key": key.to_string(),
        "A": a_coeff(&key),
        "Gamma": gamma_coeff(&key),
    });
    if run.oracle {
        let a = a_coeff_numeric(&key, &run.quadrature);
        record["A_oracle"] = json!({ "value": a.value, "error_bound": a.error_bound });
        record["Gamma_oracle"] = match gamma_coeff_numeric(&key, &run.quadrature) {
            Ok(g) => json!({ "value": g.value, "error_bound": g.error_bound }),
            Err(e) => json!({ "error": e.to_string() }),
        };
    }
    emit(run, &format!("{}\n", serde_json::to_string_pretty(&record).unwrap()))
}

fn verify(run: &Resolved) -> Result<(), Failure> {
    let checks = verify::run(run.order, run.perturb, &run.quadrature);
    let mut text = String::new();
    for c in &checks {
        text.push_str(&format!(
            "{} {}: {:e} (tolerance {:e})\n",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance
        ));
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    text.push_str(&format!("{} checks, {failed} failed\n", checks.len()));
    emit(run, &text)?;
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} checks failed")));
    }
    Ok(())
}

fn prob(run: &Resolved) -> Result<(), Failure> {
    let (det1, det2) = run.detector_modes()?;
    let spec = DetectionSpec::new(run.pump, det1, det2);
    match joint_probability(&spec, &run.params, &run.ao, &run.truncation) {
        Ok(p) => {
            let record = json!({ "P_raw": p.value, "tail": p.tail, "converged": true });
            emit(run, &format!("{record}\n"))
        }
        Err(Error::NonConvergent { partial, tail }) => {
            let record = json!({ "P_raw": partial, "tail": tail, "converged": false });
            emit(run, &format!("{record}\n"))?;
            Err(Failure::Check(format!("tail estimate {tail:e} above tolerance")))
        }
        Err(e) => Err(Failure::Input(e.to_string())),
    }
}

fn grid(run: &Resolved) -> Result<(), Failure> {
    let (m1, m2) = run.detector_azimuths()?;
    let g = probability_grid(run.pump, m1, m2, run.n_max, &run.params, &run.ao, &run.truncation)
        .map_err(|e| Failure::Input(e.to_string()))?;
    let slow = g.cells.iter().filter(|c| !c.converged).count();
    if slow > 0 {
        eprintln!("warning: {slow} cells have a tail estimate above tolerance");
    }
    if g.negative_cells > 0 {
        eprintln!("warning: {} cells have negative raw values (clamped to 0)", g.negative_cells);
    }
    emit(run, &csv::render(&g))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = (|| {
        let mut cfg = match &cli.opts.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        cfg = cfg.overlay(cli.opts.as_config(cli.command));
        let run = cfg.resolve()?;
        match run.command {
            Command::Coeff => coeff(&run),
            Command::Verify => verify(&run),
            Command::Prob => prob(&run),
            Command::Grid => grid(&run),
        }
    })();
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("zt: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("zt: {msg}");
            ExitCode::from(2)
        }
    }
}
