//! `pacct-anon`: anonymize, print and generate process-accounting logs.
//!
//! Exit status: 0 success, 1 overwrite declined, 2 malformed input or I/O
//! failure, 3 policy problem, 4 anonymization failure during the run,
//! 64 command-line usage error.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, ErrorKind, Write};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pacct_anon::display::format_record;
use pacct_anon::synth;
use pacct_anon::{
    build_summary, parse_policy, relationship_warning, Anonymizer, CodecError, EngineError,
    PolicyError, RecordReader, RecordWriter,
};

#[derive(Parser)]
#[command(
    name = "pacct-anon",
    version,
    about = "Anonymize UNIX process-accounting (pacct) logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Anonymize a log according to a policy file.
    ///
    /// Also writes a key-free JSON summary next to the output (same name,
    /// extension `.summary`) and prints the summary to standard output.
    Scrub {
        /// Input pacct file.
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Output pacct file.
        #[arg(long = "out", value_name = "FILE")]
        output: PathBuf,
        /// Policy file (`field = option [param=value ...]` per line).
        #[arg(long, value_name = "FILE")]
        policy: PathBuf,
        /// PRNG seed; overrides any `seed =` line in the policy.
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
        /// Overwrite an existing output file without asking.
        #[arg(long)]
        force: bool,
    },
    /// Print one lastcomm-style line per record (CPU time at 100 ticks/s).
    Print {
        /// Input pacct file.
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
    },
    /// Write a synthetic log for testing.
    Generate {
        /// Output pacct file.
        #[arg(long = "out", value_name = "FILE")]
        output: PathBuf,
        /// Number of records (at least 1).
        #[arg(long, value_name = "N")]
        count: NonZeroUsize,
        /// PRNG seed; the same seed gives a byte-identical file.
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
    },
}

const DECLINED: u8 = 1;
const BAD_INPUT: u8 = 2;
const BAD_POLICY: u8 = 3;
const RUN_FAILED: u8 = 4;
const USAGE: u8 = 64;

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    fn io(path: &Path, err: io::Error) -> Self {
        Failure::new(BAD_INPUT, format!("{}: {err}", path.display()))
    }

    fn codec(path: &Path, err: CodecError) -> Self {
        match err {
            CodecError::Io(e) => Failure::io(path, e),
            e => Failure::new(BAD_INPUT, format!("{}: {e}", path.display())),
        }
    }

    fn engine(input: &Path, err: EngineError) -> Self {
        match err {
            EngineError::Codec(e) => Failure::codec(input, e),
            EngineError::Policy(e) => policy_failure(e),
            e @ EngineError::MissingKey { .. } => Failure::new(BAD_POLICY, e.to_string()),
            e => Failure::new(RUN_FAILED, e.to_string()),
        }
    }
}

fn policy_failure(err: PolicyError) -> Failure {
    match err {
        PolicyError::Invalid(violations) => {
            let mut msg = format!("policy has {} violation(s):", violations.len());
            for v in violations {
                msg.push_str(&format!("\n  {v}"));
            }
            Failure::new(BAD_POLICY, msg)
        }
        e => Failure::new(BAD_POLICY, format!("policy {e}")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Scrub {
            input,
            output,
            policy,
            seed,
            force,
        } => scrub(&input, &output, &policy, seed, force),
        Command::Print { input } => print(&input),
        Command::Generate {
            output,
            count,
            seed,
        } => generate(&output, count.get(), seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("pacct-anon: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// `out.pacct` -> `out.summary`; never the output path itself.
fn summary_path(output: &Path) -> PathBuf {
    let p = output.with_extension("summary");
    if p == output {
        let mut s = output.as_os_str().to_owned();
        s.push(".summary");
        PathBuf::from(s)
    } else {
        p
    }
}

fn confirm_overwrite(path: &Path) -> Result<bool, Failure> {
    eprint!("{} exists; overwrite? [y/N] ", path.display());
    let _ = io::stderr().flush();
    let mut line = String::new();
    io::stdin()
        .lock()
        .read_line(&mut line)
        .map_err(|e| Failure::new(DECLINED, format!("reading confirmation: {e}")))?;
    Ok(matches!(
        line.trim().to_ascii_lowercase().as_str(),
        "y" | "yes"
    ))
}

/// Writes via a temporary file in the target directory so a failed run
/// never leaves partial output behind.
fn write_atomically<F>(path: &Path, body: F) -> Result<(), Failure>
where
    F: FnOnce(&mut BufWriter<&File>) -> Result<(), Failure>,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut builder = tempfile::Builder::new();
    // plain umask-governed permissions, not the 0600 default for temp files
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(fs::Permissions::from_mode(0o666));
    }
    let tmp = builder.tempfile_in(dir).map_err(|e| Failure::io(path, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush().map_err(|e| Failure::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Failure::io(path, e.error))?;
    Ok(())
}

fn scrub(
    input: &Path,
    output: &Path,
    policy_path: &Path,
    seed: Option<u64>,
    force: bool,
) -> Result<(), Failure> {
    let text = fs::read_to_string(policy_path).map_err(|e| Failure::io(policy_path, e))?;
    let policy = parse_policy(&text)
        .and_then(|p| p.validated())
        .map_err(policy_failure)?;
    let source = File::open(input).map_err(|e| Failure::io(input, e))?;

    if output.exists() && !force && !confirm_overwrite(output)? {
        return Err(Failure::new(
            DECLINED,
            format!("{} left unchanged", output.display()),
        ));
    }

    let mut anon = Anonymizer::new(policy, seed).map_err(|e| Failure::engine(input, e))?;
    write_atomically(output, |sink| {
        let mut writer = RecordWriter::new(sink);
        anon.anonymize_stream(RecordReader::new(BufReader::new(source)), |r| {
            writer.write(r)
        })
        .map_err(|e| Failure::engine(input, e))?;
        writer.finish().map_err(|e| Failure::codec(output, e))?;
        Ok(())
    })?;

    let summary = build_summary(
        &anon,
        &input.display().to_string(),
        &output.display().to_string(),
    );
    let summary_file = summary_path(output);
    write_atomically(&summary_file, |w| {
        w.write_all(summary.to_json().as_bytes())
            .and_then(|()| w.write_all(b"\n"))
            .map_err(|e| Failure::io(&summary_file, e))
    })?;

    if let Some(warning) = relationship_warning(anon.policy()) {
        eprintln!("{warning}");
    }
    print!("{}", summary.render_text());
    Ok(())
}

fn print(input: &Path) -> Result<(), Failure> {
    let source = File::open(input).map_err(|e| Failure::io(input, e))?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for r in RecordReader::new(BufReader::new(source)) {
        let r = r.map_err(|e| Failure::codec(input, e))?;
        match writeln!(out, "{}", format_record(&r)) {
            Ok(()) => {}
            // reader went away (`| head`); not an error
            Err(e) if e.kind() == ErrorKind::BrokenPipe => return Ok(()),
            Err(e) => return Err(Failure::new(BAD_INPUT, format!("stdout: {e}"))),
        }
    }
    match out.flush() {
        Err(e) if e.kind() != ErrorKind::BrokenPipe => {
            Err(Failure::new(BAD_INPUT, format!("stdout: {e}")))
        }
        _ => Ok(()),
    }
}

fn generate(output: &Path, count: usize, seed: Option<u64>) -> Result<(), Failure> {
    let records = synth::generate(count, seed.unwrap_or_else(rand::random));
    write_atomically(output, |sink| {
        let mut writer = RecordWriter::new(sink);
        for r in &records {
            writer.write(r).map_err(|e| Failure::codec(output, e))?;
        }
        writer.finish().map_err(|e| Failure::codec(output, e))?;
        Ok(())
    })
}
