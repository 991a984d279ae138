//! `delaystab`: certify, search, simulate and re-verify from the command line.
//!
//! Exit codes: 0 success or verified, 1 negative answer, 2 input error.

mod input;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use delaystab::analysis::{format_table, table_sweep, write_csv};
use delaystab::certificate::CertificateDoc;
use delaystab::sdp::{pose, solve, verify_certificate, Margins};
use delaystab::simulate::{constant_history, lkf_series, simulate};
use delaystab::XStructure;

use input::{parse_delays, parse_list, parse_vector, read_text, InputError, SystemFile};

#[derive(Parser)]
#[command(
    name = "delaystab",
    version,
    about = "Delay-dependent stability certificates for x(k+1) = A x(k) + Ad x(k - h(k))"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the LMIs at the file's (h1, h2) and verify the result.
    Check {
        file: PathBuf,
        #[arg(long, default_value = "full")]
        x_structure: XStructure,
        /// Write the certificate JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Largest certified h2 for each h1.
    #[command(visible_alias = "sweep")]
    Maxdelay {
        file: PathBuf,
        /// Comma-separated lower bounds; defaults to the file's h1.
        #[arg(long)]
        h1: Option<String>,
        #[arg(long, default_value_t = 200)]
        limit: usize,
        #[arg(long, default_value = "full")]
        x_structure: XStructure,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Roll out a trajectory and write it as CSV.
    Simulate {
        file: PathBuf,
        /// Adds a V column evaluated with this certificate's matrices.
        #[arg(long)]
        cert: Option<PathBuf>,
        /// constant:H, random[:SEED], sine[:OMEGA] or list:H,H,...
        #[arg(long, default_value = "sine")]
        delays: String,
        #[arg(long, default_value_t = 3000)]
        steps: usize,
        /// Initial state held constant over [-h2, 0]; all ones by default.
        #[arg(long, allow_hyphen_values = true)]
        init: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-verify a certificate against a system file.
    Verify { file: PathBuf, cert: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn output(path: Option<&Path>) -> input::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|source| InputError::Io {
            path: p.display().to_string(),
            source,
        })?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn write_out(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> input::Result<()> {
    let mut w = output(path)?;
    let name = path.map_or("stdout".to_string(), |p| p.display().to_string());
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|source| InputError::Io { path: name, source })
}

fn print_margins(m: &Margins, verified: bool) {
    let rows = m
        .positivity()
        .map(|(name, v)| (format!("min eig {name}"), v))
        .into_iter()
        .chain([
            ("min eig RCC".to_string(), m.rcc),
            ("max eig Pi(h1)".to_string(), m.pi_h1),
            ("max eig Pi(h2)".to_string(), m.pi_h2),
        ]);
    for (label, v) in rows {
        eprintln!("  {label:<15}{v:>12.4e}");
    }
    eprintln!("verified: {verified}");
}

fn run(cmd: Command) -> input::Result<bool> {
    match cmd {
        Command::Check { file, x_structure, out } => {
            let spec = SystemFile::load(&file)?;
            let sys = spec.system()?;
            let cert = solve(&pose(&sys, x_structure))?;
            eprintln!(
                "h1 = {}, h2 = {}, X {}, solver {}",
                sys.h1(),
                sys.h2(),
                x_structure,
                cert.solver_status.as_str()
            );
            print_margins(&cert.margins, cert.verified);
            if cert.verified {
                let json = CertificateDoc::from_certificate(&cert, spec.label()).to_json();
                write_out(out.as_deref(), |w| w.write_all(json.as_bytes()))?;
            }
            Ok(cert.verified)
        }
        Command::Maxdelay {
            file,
            h1,
            limit,
            x_structure,
            jobs,
            out,
        } => {
            let spec = SystemFile::load(&file)?;
            let h1s: Vec<usize> = match h1 {
                Some(s) => parse_list(&s, "h1")?,
                None => vec![spec.h1()],
            };
            if h1s.is_empty() || h1s.iter().any(|h| *h < 1) {
                return Err(InputError::Invalid("h1 values must be at least 1".into()));
            }
            let sys = spec.system_with(1, 1)?;
            let results = table_sweep(&sys, &h1s, limit, x_structure, jobs)?;
            eprint!("{}", format_table(&results));
            write_out(out.as_deref(), |w| write_csv(w, &results))?;
            Ok(true)
        }
        Command::Simulate {
            file,
            cert,
            delays,
            steps,
            init,
            out,
        } => {
            let spec = SystemFile::load(&file)?;
            let sys = spec.system()?;
            let x0 = match init {
                Some(s) => parse_vector(&s, sys.n())?,
                None => nalgebra::DVector::from_element(sys.n(), 1.0),
            };
            let seq = parse_delays(&delays, sys.h1(), sys.h2())?;
            let traj = simulate(&sys, &seq, &constant_history(&sys, &x0), steps)?;
            let lkf = match cert {
                Some(p) => {
                    let vars = CertificateDoc::from_json(&read_text(&p)?)?.vars()?;
                    Some(lkf_series(&traj, &vars)?)
                }
                None => None,
            };
            write_out(out.as_deref(), |w| traj.write_csv(w, lkf.as_deref()))?;
            Ok(true)
        }
        Command::Verify { file, cert } => {
            let spec = SystemFile::load(&file)?;
            let doc = CertificateDoc::from_json(&read_text(&cert)?)?;
            let vars = doc.vars()?;
            let sys = match spec.h2 {
                Some(_) => spec.system()?,
                None => spec.system_with(doc.h1, doc.h2)?,
            };
            if vars.n() != sys.n() {
                return Err(InputError::Invalid(format!(
                    "certificate is for n = {}, the system has n = {}",
                    vars.n(),
                    sys.n()
                )));
            }
            let v = verify_certificate(&sys, &vars)?;
            eprintln!("h1 = {}, h2 = {}, X {}", sys.h1(), sys.h2(), vars.x_structure);
            print_margins(&v.margins, v.verified);
            Ok(v.verified)
        }
    }
}
