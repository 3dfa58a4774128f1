//! `parry`: batch front end for the parry-words library.
//!
//! Exit codes: 0 success, 1 verification failure or runtime error,
//! 2 invalid or unsupported expansion, 64 usage error.

use std::fmt::Write as _;
use std::io::Write as _;
use std::process::ExitCode;

use num_traits::ToPrimitive;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use parry_words::bispecial::{classify_returns_zn, f_image, initial_bispecials, BispecialFactor};
use parry_words::corpus;
use parry_words::critexp::{critical_exponent, mixed_fraction, verify_critical_exponent, CritExpConfig};
use parry_words::error::Error;
use parry_words::numeration::{compute_beta, parse_expansion, RenyiExpansion};
use parry_words::substitution::build_substitution;

const EXIT_OK: u8 = 0;
const EXIT_FAILED: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "parry", version, about = "Combinatorics of Parry-number fixed points")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    run: RunConfig,
}

#[derive(Args, Debug, Clone)]
struct RunConfig {
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// Length of the observed prefix of the fixed point.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    prefix_length: usize,
    #[arg(long, global = true, default_value_t = 300)]
    max_factor_length: usize,
    #[arg(long, global = true, default_value_t = 30)]
    n_max: usize,
    #[arg(long, global = true, default_value_t = 1e-14)]
    beta_precision: f64,
    /// Longest word ever materialized.
    #[arg(long, global = true, default_value_t = 1 << 24)]
    cap: usize,
    /// Also run over a built-in corpus: examples, theorem, small or simple.
    #[arg(long, global = true, num_args = 0..=1, require_equals = true, default_missing_value = "examples")]
    corpus: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Tsv,
    Human,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate and classify expansions.
    Check(Targets),
    /// Print a prefix of the fixed point.
    Generate {
        #[command(flatten)]
        targets: Targets,
        #[arg(long)]
        length: usize,
    },
    /// Print the substitution, optionally with the lengths of φ^n(a).
    Subst {
        #[command(flatten)]
        targets: Targets,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Dump the f-chains of the initial bispecial factors up to --n-max.
    Bispecial(Targets),
    /// Typed complete return words of z^(n), n defaults to m.
    Returns {
        #[command(flatten)]
        targets: Targets,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Critical and ultimate critical exponents.
    Critexp(Targets),
    /// Compare the prefix oracle with the closed forms.
    Verify(Targets),
}

#[derive(Args, Debug)]
struct Targets {
    /// Expansions such as 221(12) or 2,2,1(1,2).
    expansions: Vec<String>,
}

impl Command {
    fn targets(&self) -> &Targets {
        match self {
            Command::Check(t) | Command::Bispecial(t) | Command::Critexp(t) | Command::Verify(t) => t,
            Command::Generate { targets, .. } | Command::Subst { targets, .. } | Command::Returns { targets, .. } => {
                targets
            }
        }
    }
}

struct Output {
    text: String,
    code: u8,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, code: EXIT_OK }
    }
}

struct Failure {
    message: String,
    code: u8,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) | Error::Unsupported(_) => EXIT_INVALID,
            Error::InvalidArgument(_) | Error::PrefixTooShort { .. } | Error::MemoryCap { .. } => EXIT_USAGE,
            _ => EXIT_FAILED,
        };
        Failure {
            message: e.to_string(),
            code,
        }
    }
}

type CmdResult = Result<Output, Failure>;

impl RunConfig {
    fn validate(&self) -> Result<(), String> {
        if self.prefix_length == 0 || self.max_factor_length == 0 || self.n_max == 0 || self.cap == 0 {
            return Err("caps must be positive".into());
        }
        if !(self.beta_precision > 0.0 && self.beta_precision.is_finite()) {
            return Err("--beta-precision must be a positive number".into());
        }
        if self.prefix_length < 4 * self.max_factor_length {
            return Err(format!(
                "--prefix-length ({}) must be at least 4 * --max-factor-length ({})",
                self.prefix_length, self.max_factor_length
            ));
        }
        Ok(())
    }

    fn critexp(&self) -> CritExpConfig {
        CritExpConfig {
            n_max: self.n_max,
            prefix_length: self.prefix_length,
            max_factor_length: self.max_factor_length,
            beta_precision: self.beta_precision,
        }
    }
}

fn json_text(v: &Value) -> String {
    serde_json::to_string(v).expect("serializable") + "\n"
}

fn cmd_check(text: &str, cfg: &RunConfig) -> CmdResult {
    let e = match parse_expansion(text) {
        Ok(e) => e,
        Err(err) => {
            let out = match cfg.format {
                Format::Json => json_text(&json!({"expansion": text, "valid": false, "error": err.to_string()})),
                Format::Tsv => format!("{text}\tinvalid\t{err}\n"),
                Format::Human => format!("{text}: invalid: {err}\n"),
            };
            return Ok(Output {
                text: out,
                code: EXIT_INVALID,
            });
        }
    };
    let beta = compute_beta(&e, cfg.beta_precision)?;
    let text = match cfg.format {
        Format::Json => json_text(&json!({
            "expansion": text,
            "canonical": e.to_string(),
            "valid": true,
            "kind": e.kind().to_string(),
            "m": e.m(),
            "p": e.p(),
            "t1": e.t1(),
            "alphabet_size": e.alphabet_size(),
            "beta": {"value": beta.value, "error": beta.error},
        })),
        Format::Tsv => format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            e,
            e.kind(),
            e.m(),
            e.p(),
            e.t1(),
            beta.value
        ),
        Format::Human => format!(
            "{e}: {} m={} p={} t1={} beta={} (±{:.1e})\n",
            e.kind(),
            e.m(),
            e.p(),
            e.t1(),
            beta.value,
            beta.error
        ),
    };
    Ok(Output::ok(text))
}

fn cmd_generate(e: &RenyiExpansion, length: usize, cfg: &RunConfig) -> CmdResult {
    if length > cfg.cap {
        return Err(Error::MemoryCap {
            required: length.into(),
            cap: cfg.cap,
        }
        .into());
    }
    let u = build_substitution(e).fixed_point_prefix(length);
    let text = match cfg.format {
        Format::Json => json_text(&json!({"expansion": e.to_string(), "length": length, "prefix": u.to_string()})),
        _ if u.is_empty() => String::new(),
        _ => format!("{u}\n"),
    };
    Ok(Output::ok(text))
}

fn cmd_subst(e: &RenyiExpansion, n: Option<usize>, cfg: &RunConfig) -> CmdResult {
    let s = build_substitution(e);
    let lengths = n.map(|n| s.letter_lengths(n));
    let matrix = s.incidence_matrix();
    let text = match cfg.format {
        Format::Json => json_text(&json!({
            "expansion": e.to_string(),
            "images": s.images().iter().map(|w| w.to_string()).collect::<Vec<_>>(),
            "incidence_matrix": matrix.entries,
            "n": n,
            "lengths": lengths.as_ref().map(|l| l.iter().map(|x| x.to_string()).collect::<Vec<_>>()),
        })),
        Format::Tsv => {
            let mut out = String::new();
            for (a, img) in s.images().iter().enumerate() {
                let _ = write!(out, "{a}\t{img}");
                if let Some(l) = &lengths {
                    let _ = write!(out, "\t{}", l[a]);
                }
                out.push('\n');
            }
            out
        }
        Format::Human => {
            let mut out = format!("{e}\n");
            for (a, img) in s.images().iter().enumerate() {
                let _ = write!(out, "  {a} -> {img}");
                if let (Some(l), Some(n)) = (&lengths, n) {
                    let _ = write!(out, "    |φ^{n}({a})| = {}", l[a]);
                }
                out.push('\n');
            }
            out
        }
    };
    Ok(Output::ok(text))
}

fn factor_row(seed: usize, v: &BispecialFactor, cfg: &RunConfig) -> (Value, String) {
    let word = v
        .word
        .as_ref()
        .filter(|w| w.len() <= cfg.max_factor_length)
        .map(|w| w.to_string());
    let (a, c, b, d) = v.extension_key();
    let value = json!({
        "seed": seed,
        "n": v.iterations,
        "length": v.length.to_string(),
        "left": [a, b],
        "right": [c, d],
        "word": word,
    });
    let tsv = format!(
        "{seed}\t{}\t{}\t{a}{c}\t{b}{d}\t{}",
        v.iterations,
        v.length,
        word.as_deref().unwrap_or("-")
    );
    (value, tsv)
}

fn cmd_bispecial(e: &RenyiExpansion, cfg: &RunConfig) -> CmdResult {
    let s = build_substitution(e);
    let u = s.fixed_point_prefix(cfg.prefix_length.min(cfg.cap));
    let seeds = initial_bispecials(&s, &u)?;
    let mut rows = Vec::new();
    for (i, seed) in seeds.iter().enumerate() {
        let mut v = seed.clone();
        rows.push(factor_row(i, &v, cfg));
        for _ in 0..cfg.n_max {
            v = f_image(&v, &s, cfg.cap)?;
            rows.push(factor_row(i, &v, cfg));
        }
    }
    let text = match cfg.format {
        Format::Json => json_text(&json!({
            "expansion": e.to_string(),
            "seeds": seeds.iter().map(|b| b.seed.to_string()).collect::<Vec<_>>(),
            "chain": rows.iter().map(|r| r.0.clone()).collect::<Vec<_>>(),
        })),
        Format::Tsv => {
            let mut out = String::from("seed\tn\tlength\tleft_a_c\tright_b_d\tword\n");
            for (_, line) in &rows {
                out.push_str(line);
                out.push('\n');
            }
            out
        }
        Format::Human => {
            let mut out = format!("{e}: {} initial bispecial factors\n", seeds.len());
            for (v, _) in &rows {
                let _ = writeln!(
                    out,
                    "  seed {} n={:<3} |v|={:<12} ({}-{}, {}-{})  {}",
                    v["seed"],
                    v["n"].as_u64().unwrap_or(0),
                    v["length"].as_str().unwrap_or(""),
                    v["left"][0],
                    v["right"][0],
                    v["left"][1],
                    v["right"][1],
                    v["word"].as_str().unwrap_or("…")
                );
            }
            out
        }
    };
    Ok(Output::ok(text))
}

fn cmd_returns(e: &RenyiExpansion, n: Option<usize>, cfg: &RunConfig) -> CmdResult {
    let s = build_substitution(e);
    let u = s.fixed_point_prefix(cfg.prefix_length.min(cfg.cap));
    let r = classify_returns_zn(&s, n.unwrap_or(e.m()), &u)?;
    let groups = [("A", &r.type_a), ("B", &r.type_b), ("C", &r.type_c), ("?", &r.undetermined)];
    let text = match cfg.format {
        Format::Json => {
            let mut v = serde_json::to_value(&r).expect("serializable");
            v["expansion"] = json!(e.to_string());
            json_text(&v)
        }
        Format::Tsv => {
            let mut out = String::from("type\tlength\tword\n");
            for (name, words) in groups {
                for w in words.iter() {
                    let _ = writeln!(out, "{name}\t{}\t{w}", w.len());
                }
            }
            out
        }
        Format::Human => {
            let mut out = format!(
                "{e}: complete return words of {} (n = {}) in a prefix of {}\n",
                r.target, r.n, r.observation_prefix_length
            );
            let _ = writeln!(
                out,
                "  A×{} B×{} C×{}{}",
                r.type_a.len(),
                r.type_b.len(),
                r.type_c.len(),
                if r.undetermined.is_empty() {
                    String::new()
                } else {
                    format!(" undetermined×{}", r.undetermined.len())
                }
            );
            for (name, words) in groups {
                for w in words.iter() {
                    let _ = writeln!(out, "  {name} {w}");
                }
            }
            out
        }
    };
    Ok(Output::ok(text))
}

fn cmd_critexp(e: &RenyiExpansion, cfg: &RunConfig) -> CmdResult {
    let r = critical_exponent(e, &cfg.critexp())?;
    let text = match cfg.format {
        Format::Json => json_text(&r.to_json(None)),
        Format::Tsv => {
            let mut out = String::from("n\tnum\tden\tvalue\n");
            for (n, t) in r.e_i.terms.iter().enumerate() {
                let _ = writeln!(out, "{n}\t{}\t{}\t{}", t.numer(), t.denom(), t.to_f64().unwrap_or(f64::NAN));
            }
            out
        }
        Format::Human => {
            let mut out = String::new();
            let _ = writeln!(out, "{}: m={} p={} t={} z={}", r.expansion, r.m, r.p, r.t, r.z);
            let _ = writeln!(out, "  beta      {} (±{:.1e})", r.beta, r.beta_error);
            let _ = writeln!(out, "  branch    {}", r.theorem_branch);
            match &r.e_exact {
                Some(x) => {
                    let _ = writeln!(out, "  E         {}", mixed_fraction(x));
                }
                None => {
                    let _ = writeln!(out, "  E         in [{}, {}]", r.e_value.lower, r.e_value.upper);
                }
            }
            let sup = &r.e_i;
            let _ = writeln!(
                out,
                "  sup E_I   {}",
                if sup.attained {
                    format!("{} (attained at n = {})", mixed_fraction(&sup.finite_max), sup.argmax)
                } else {
                    format!("{} (limit)", sup.limit.value)
                }
            );
            let _ = writeln!(out, "  E_II      <= {}", r.e_ii_bound);
            let _ = writeln!(
                out,
                "  E*        {} (±{:.1e}){}",
                r.e_star.enclosure.value,
                r.e_star.enclosure.error,
                if r.e_star.conditional { " conditional" } else { "" }
            );
            if let (Some(f), Some(w)) = (&r.brute_force_floor, &r.floor_witness) {
                let _ = writeln!(
                    out,
                    "  observed  {} (root {} of length {})",
                    mixed_fraction(f),
                    if w.witness.len() <= 40 { w.witness.to_string() } else { "…".into() },
                    w.length
                );
            }
            for (n, t) in sup.terms.iter().enumerate() {
                let _ = writeln!(out, "  e_I({n:>2}) = {}", mixed_fraction(t));
            }
            out
        }
    };
    Ok(Output::ok(text))
}

fn cmd_verify(e: &RenyiExpansion, cfg: &RunConfig) -> CmdResult {
    let v = verify_critical_exponent(e, &cfg.critexp())?;
    let code = if v.passed { EXIT_OK } else { EXIT_FAILED };
    let text = match cfg.format {
        Format::Json => json_text(&serde_json::to_value(&v).expect("serializable")),
        Format::Tsv => {
            let mut out = String::from("check\tstatus\tfactor\tindex\tposition\n");
            for c in &v.checks {
                let status = status(c.passed, c.skipped);
                let _ = writeln!(out, "{}\t{status}\t-\t-\t-", c.name);
                for x in &c.counterexamples {
                    let _ = writeln!(out, "{}\tcounterexample\t{}\t{}\t{}", c.name, x.factor, x.index, x.position);
                }
            }
            out
        }
        Format::Human => {
            let mut out = format!(
                "{}: {} ({}, observed maximum {})\n",
                v.expansion,
                if v.passed { "verified" } else { "FAILED" },
                v.branch,
                mixed_fraction(&v.partial_e)
            );
            for c in &v.checks {
                let _ = writeln!(out, "  {:<7} {}: {}", status(c.passed, c.skipped), c.name, c.detail);
                for x in c.counterexamples.iter().take(10) {
                    let _ = writeln!(
                        out,
                        "          {} at {}: index {} ({})",
                        x.factor,
                        x.position,
                        mixed_fraction(&x.index),
                        x.note
                    );
                }
            }
            out
        }
    };
    Ok(Output { text, code })
}

fn status(passed: bool, skipped: bool) -> &'static str {
    match (passed, skipped) {
        (true, false) => "PASS",
        (false, false) => "FAIL",
        (true, true) => "skipped",
        (false, true) => "skipped*",
    }
}

fn run_one(command: &Command, text: &str, cfg: &RunConfig) -> CmdResult {
    if let Command::Check(_) = command {
        return cmd_check(text, cfg);
    }
    let e = parse_expansion(text).map_err(Error::from)?;
    match command {
        Command::Check(_) => unreachable!(),
        Command::Generate { length, .. } => cmd_generate(&e, *length, cfg),
        Command::Subst { n, .. } => cmd_subst(&e, *n, cfg),
        Command::Bispecial(_) => cmd_bispecial(&e, cfg),
        Command::Returns { n, .. } => cmd_returns(&e, *n, cfg),
        Command::Critexp(_) => cmd_critexp(&e, cfg),
        Command::Verify(_) => cmd_verify(&e, cfg),
    }
}

fn usage(message: &str) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(EXIT_USAGE)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    if let Err(msg) = cli.run.validate() {
        return usage(&msg);
    }
    let mut inputs: Vec<String> = Vec::new();
    if let Some(name) = &cli.run.corpus {
        match corpus::named(name) {
            Some(list) => inputs.extend(list.iter().map(|s| s.to_string())),
            None => return usage(&format!("unknown corpus {name:?}, expected one of {:?}", corpus::NAMES)),
        }
    }
    let extras = &cli.command.targets().expansions;
    if extras.iter().any(|s| s.trim().is_empty()) {
        return usage("empty expansion");
    }
    inputs.extend(extras.iter().cloned());
    if inputs.is_empty() {
        return usage("no expansion given (pass one or use --corpus)");
    }
    let mut code = EXIT_OK;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for text in &inputs {
        let result = run_one(&cli.command, text, &cli.run);
        let this = match result {
            Ok(o) => {
                let _ = out.write_all(o.text.as_bytes());
                o.code
            }
            Err(f) => {
                let _ = out.flush();
                eprintln!("error: {text}: {}", f.message);
                f.code
            }
        };
        code = code.max(this);
    }
    let _ = out.flush();
    ExitCode::from(code)
}
