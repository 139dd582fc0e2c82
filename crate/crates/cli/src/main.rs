//! `parabolic`: scenario conversion, the two functors on either side, degree checks and
//! the randomized verifier.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 input error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use parabolic_core::functors::{
    pullback_bundle, pullback_degree_formula, pullback_graded, pullback_parabolic,
    pushforward_graded, pushforward_parabolic,
};
use parabolic_core::harness::{self, Bounds, Mutation, Suite, TrialConfig, TrialReport};
use parabolic_core::pairing::{pullback_pairing, pushforward_pairing, LocalPairing};
use parabolic_core::parabolic::ParabolicPoint;
use parabolic_core::scenario::{
    decode_matrix, decode_object, encode_matrix, encode_object, weight_table, Object, PairingSpec,
    Scenario, Side,
};
use parabolic_core::{Error, Field};

#[derive(Parser)]
#[command(
    name = "parabolic",
    version,
    about = "Parabolic chains and graded modules under ramified covers"
)]
struct Cli {
    /// Coefficient field: `rational` or `prime:p`. Overrides the field named in a scenario.
    #[arg(long, global = true)]
    field: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rewrite every object on the other side (or the side given by --to).
    Convert {
        input: PathBuf,
        #[arg(long, value_enum)]
        to: Option<SideArg>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Direct image of the branch objects to the target point.
    Push {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pullback of the `target` object to one branch.
    Pull {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Degree of the pullback of a global bundle, against the line formula.
    Degree { input: PathBuf },
    /// Randomized differential verification.
    Verify(VerifyArgs),
    /// Rerun the check recorded in a counterexample file.
    Replay { input: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Parabolic,
    Graded,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Direct,
    Pull,
    Corollaries,
    Degree,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = SuiteArg::All)]
    suite: SuiteArg,
    /// Report file (JSON). Counterexamples go next to it as `<out>.<suite>.counterexample.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replay a counterexample file instead of running trials.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Seeded corruption to inject: broken-inclusion, wrong-twist, transposed-grading, flipped-symmetry.
    #[arg(long)]
    mutation: Option<String>,
    #[arg(long, default_value_t = Bounds::default().max_rank)]
    max_rank: usize,
    #[arg(long, default_value_t = Bounds::default().max_order)]
    max_order: u32,
    #[arg(long, default_value_t = Bounds::default().max_branches)]
    max_branches: usize,
}

/// A failed command: input problems exit 2, verification failures exit 1.
enum Failure {
    Input(String),
    Verify,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let field = cli.field.as_deref().map(str::parse::<Field>).transpose()?;
    match cli.command {
        Command::Convert { input, to, out } => convert(&load(&input, field)?, to, out.as_deref()),
        Command::Push { input, out } => push(&load(&input, field)?, out.as_deref()),
        Command::Pull { input, out } => pull(&load(&input, field)?, out.as_deref()),
        Command::Degree { input } => degree(&load(&input, field)?),
        Command::Verify(args) => match &args.replay {
            Some(path) => replay(&load(path, field)?),
            None => verify(&args, field.unwrap_or(Field::Rational)),
        },
        Command::Replay { input } => replay(&load(&input, field)?),
    }
}

fn load(path: &Path, field: Option<Field>) -> Result<Scenario, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let mut s =
        Scenario::parse(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    if let Some(f) = field {
        s.field = f;
    }
    s.validate()?;
    Ok(s)
}

fn write_out(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn emit_scenario(s: &Scenario, out: Option<&Path>) -> Outcome {
    match out {
        Some(p) => write_out(p, &s.to_text()),
        None => {
            print!("{}", s.to_text());
            Ok(())
        }
    }
}

fn convert(s: &Scenario, to: Option<SideArg>, out: Option<&Path>) -> Outcome {
    let side = match to {
        Some(SideArg::Parabolic) => Side::Parabolic,
        Some(SideArg::Graded) => Side::Graded,
        None => s.side.other(),
    };
    emit_scenario(&s.canonical(side)?, out)
}

fn need<T>(x: Option<T>, what: &str) -> Result<T, Failure> {
    x.ok_or_else(|| Failure::Input(format!("scenario has no {what}")))
}

fn object_table(title: &str, o: &Object) -> String {
    format!(
        "{title}: rank {}, order {}\n{}",
        o.rank(),
        o.order(),
        weight_table(&o.weights())
    )
}

fn form_table(label: &str, p: &LocalPairing) -> String {
    format!("{label} pairing ({}):\n{}\n", p.kind.name(), p.form)
}

fn value_line(s: &Scenario) -> Result<Option<(&PairingSpec, ParabolicPoint)>, Failure> {
    Ok(match &s.pairing {
        Some(p) => Some((
            p,
            decode_object(s.field, Side::Parabolic, &p.value, "pairing.value")?.to_parabolic(),
        )),
        None => None,
    })
}

fn push(s: &Scenario, out: Option<&Path>) -> Outcome {
    let profile = need(s.cover_profile()?, "cover")?;
    let objects = s.decoded_objects()?;
    let mut branch_objects = Vec::new();
    for b in profile.branches() {
        let o = objects.get(&b.label).ok_or_else(|| {
            Failure::Input(format!("objects.{}: missing object for branch", b.label))
        })?;
        branch_objects.push(o.clone());
    }
    let result = match s.side {
        Side::Parabolic => {
            let pts: Vec<_> = branch_objects.iter().map(Object::to_parabolic).collect();
            Object::Parabolic(pushforward_parabolic(&profile, &pts)?)
        }
        Side::Graded => {
            let ms: Vec<_> = branch_objects.iter().map(Object::to_graded).collect();
            Object::Graded(pushforward_graded(&profile, &ms)?)
        }
    };
    let mut table = object_table("pushforward", &result);
    let mut res = Scenario::new(s.field, s.side);
    res.cover = s.cover.clone();
    res.objects.insert("target".into(), encode_object(&result));
    if let Some((spec, value)) = value_line(s)? {
        let mut inputs = Vec::new();
        for (b, o) in profile.branches().iter().zip(&branch_objects) {
            let form = spec.forms.get(&b.label).ok_or_else(|| {
                Failure::Input(format!(
                    "pairing.forms.{}: missing form for branch",
                    b.label
                ))
            })?;
            let v = pullback_parabolic(&profile, &value, &b.label)?.point;
            inputs.push((
                o.to_parabolic(),
                LocalPairing {
                    value: v,
                    form: decode_matrix(s.field, form, &format!("pairing.forms.{}", b.label))?,
                    kind: spec.kind,
                },
            ));
        }
        let pushed = pushforward_pairing(&profile, &value, &inputs)?;
        if !pushed.check(&result.to_parabolic())? {
            return Err(Failure::Input("pushed pairing is degenerate".into()));
        }
        table.push_str(&form_table("pushed", &pushed));
        res.pairing = Some(PairingSpec {
            kind: spec.kind,
            value: spec.value.clone(),
            forms: [("target".to_string(), encode_matrix(&pushed.form))].into(),
        });
    }
    print!("{table}");
    if let Some(p) = out {
        write_out(p, &res.to_text())?;
    }
    Ok(())
}

fn pull(s: &Scenario, out: Option<&Path>) -> Outcome {
    let profile = need(s.cover_profile()?, "cover")?;
    let label = match &s.branch {
        Some(l) => l.clone(),
        None if profile.branches().len() == 1 => profile.branches()[0].label.clone(),
        None => {
            return Err(Failure::Input(
                "branch: required when the cover has several branches".into(),
            ))
        }
    };
    let objects = s.decoded_objects()?;
    let target = need(objects.get("target"), "objects.target")?;
    let (result, twist) = match s.side {
        Side::Parabolic => {
            let pulled = pullback_parabolic(&profile, &target.to_parabolic(), &label)?;
            let twist = pulled.total_twist();
            (Object::Parabolic(pulled.point), twist)
        }
        Side::Graded => {
            let f = target.to_parabolic();
            let twist = pullback_parabolic(&profile, &f, &label)?.total_twist();
            (
                Object::Graded(pullback_graded(&profile, &target.to_graded(), &label)?),
                twist,
            )
        }
    };
    let mut table = object_table(&format!("pullback to {label}"), &result);
    let _ = writeln!(table, "twist   {twist}");
    let mut res = Scenario::new(s.field, s.side);
    res.cover = s.cover.clone();
    res.branch = Some(label.clone());
    res.objects.insert(label.clone(), encode_object(&result));
    if let Some((spec, value)) = value_line(s)? {
        let form = need(spec.forms.get("target"), "pairing.forms.target")?;
        let pair = LocalPairing {
            value,
            form: decode_matrix(s.field, form, "pairing.forms.target")?,
            kind: spec.kind,
        };
        let (e, pulled) = pullback_pairing(&profile, &pair, &target.to_parabolic(), &label)?;
        if !pulled.check(&e)? {
            return Err(Failure::Input("pulled pairing is degenerate".into()));
        }
        table.push_str(&form_table("pulled", &pulled));
        res.pairing = Some(PairingSpec {
            kind: spec.kind,
            value: encode_object(&Object::Parabolic(pulled.value.clone())),
            forms: [(label.clone(), encode_matrix(&pulled.form))].into(),
        });
    }
    if s.global.is_some() {
        table.push_str(&degree_table(s)?.0);
    }
    print!("{table}");
    if let Some(p) = out {
        write_out(p, &res.to_text())?;
    }
    Ok(())
}

/// The degree block and whether both evaluations agree with `deg f * pardeg`.
fn degree_table(s: &Scenario) -> Result<(String, bool), Failure> {
    let g = need(s.global.as_ref(), "global block")?;
    let data = parabolic_core::scenario::decode_global(s.field, g)?;
    let pulled = pullback_bundle(&data.bundle, &data.cover)?;
    let (deg, pardeg) = pullback_degree_formula(&data.bundle, &data.cover)?;
    let expected = data.bundle.parabolic_degree() * data.cover.degree as i64;
    let mut t = String::new();
    let _ = writeln!(t, "deg f                 {}", data.cover.degree);
    let _ = writeln!(t, "rank                  {}", data.bundle.rank());
    let _ = writeln!(
        t,
        "degree                {}",
        data.bundle.underlying_degree()
    );
    let _ = writeln!(
        t,
        "parabolic degree      {}",
        data.bundle.parabolic_degree()
    );
    let _ = writeln!(t, "pulled degree         {}", pulled.underlying_degree());
    let _ = writeln!(t, "pulled parabolic deg  {}", pulled.parabolic_degree());
    let _ = writeln!(t, "line formula          {pardeg}");
    let _ = writeln!(t, "deg f * parabolic deg {expected}");
    let ok = pulled.underlying_degree() == deg
        && pulled.parabolic_degree() == pardeg
        && pardeg == expected;
    let _ = writeln!(
        t,
        "verdict               {}",
        if ok { "pass" } else { "fail" }
    );
    Ok((t, ok))
}

fn degree(s: &Scenario) -> Outcome {
    let (table, ok) = degree_table(s)?;
    print!("{table}");
    if ok {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    tool_version: &'a str,
    seed: u64,
    trials: usize,
    field: Field,
    suites: Vec<TrialReport>,
}

fn verify(args: &VerifyArgs, field: Field) -> Outcome {
    let mutation = args
        .mutation
        .as_deref()
        .map(str::parse::<Mutation>)
        .transpose()?;
    let suites: Vec<Suite> = match (args.suite, mutation) {
        (SuiteArg::All, Some(m)) => vec![m.suite()],
        (SuiteArg::All, None) => Suite::ALL.to_vec(),
        (SuiteArg::Direct, _) => vec![Suite::Direct],
        (SuiteArg::Pull, _) => vec![Suite::Pull],
        (SuiteArg::Corollaries, _) => vec![Suite::Corollaries],
        (SuiteArg::Degree, _) => vec![Suite::Degree],
    };
    let cfg = TrialConfig {
        seed: args.seed,
        trials: args.trials,
        bounds: Bounds {
            max_rank: args.max_rank,
            max_order: args.max_order,
            max_branches: args.max_branches,
        },
        field,
        mutation,
    };
    let mut reports = Vec::new();
    for suite in suites {
        let r = harness::run_suite(suite, &cfg)?;
        println!(
            "{:<12} {}/{} passed  seed {}  config {}",
            suite.name(),
            r.passed,
            r.trials,
            r.seed,
            &r.config_hash[..16]
        );
        if let Some(first) = r.results.iter().find(|x| x.verdict == "fail") {
            println!("  first failure: trial {}: {}", first.index, first.detail);
        }
        reports.push(r);
    }
    let all_passed = reports.iter().all(TrialReport::all_passed);
    if let Some(out) = &args.out {
        for r in &reports {
            if let Some(ce) = &r.counterexample {
                let path = PathBuf::from(format!(
                    "{}.{}.counterexample.json",
                    out.display(),
                    r.suite.name()
                ));
                write_out(&path, &ce.to_text())?;
                println!("  counterexample written to {}", path.display());
            }
        }
        let report = VerifyReport {
            tool_version: harness::TOOL_VERSION,
            seed: args.seed,
            trials: args.trials,
            field,
            suites: reports,
        };
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        write_out(out, &text)?;
    }
    if all_passed {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn replay(s: &Scenario) -> Outcome {
    let r = harness::replay(s)?;
    let verdict = if r.outcome.pass { "pass" } else { "fail" };
    println!("suite     {}", r.suite.name());
    if let Some(m) = r.mutation {
        println!("mutation  {}", m.name());
    }
    println!("recorded  {}: {}", r.recorded_verdict, r.recorded_detail);
    println!("replayed  {verdict}: {}", r.outcome.detail);
    println!(
        "{}",
        if r.reproduced {
            "reproduced"
        } else {
            "NOT reproduced"
        }
    );
    if r.reproduced {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}
