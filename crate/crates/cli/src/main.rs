use std::fs;
use std::io::{self, Read, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use glinf::chains::{
    check_point, classify_case, embed_group, normalize_signatures, project_dual, trace_invariant, ChainSpec, ChainWire,
    TruncatedPoint,
};
use glinf::graph::{incidence_rank_check, reduce, replay, Multigraph, Reduction, ReductionCertificate};
use glinf::harness::{run_lemma, run_suite, SuiteConfig, Verdict, VerificationReport};
use glinf::orbit::{
    classify_orbit_closure, degeneration_witness, raise_sum_rank, topleft_realization, tuple_rank_lift,
    ClosedSetDescriptor, OrbitClosure,
};
use glinf::pencil::{offdiag_criterion_check, pencil_rank_enumerate, shift_rank, tuple_rank_identity, CheckMode, PencilTuple};
use glinf::{seeded_rng, Error, FieldSpec, Matrix};

#[derive(Parser)]
#[command(name = "glinf", version, about = "Exact linear algebra for classical-group chains and their orbit invariants")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// gf:<p>, qq or qq_t; overrides the field recorded in matrix input.
    #[arg(long, global = true)]
    field: Option<FieldSpec>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    out: OutFormat,
    /// Input file; `-` reads stdin.
    #[arg(long = "in", global = true)]
    input: Option<String>,
    /// Report `ms` as 0 so repeated runs are byte-identical.
    #[arg(long, global = true)]
    omit_timing: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Rank of a matrix.
    Rank,
    /// Characteristic polynomial, coefficients from the constant term up.
    Charpoly,
    /// Eigenvalues in the base field with geometric multiplicities.
    Eig,
    /// Tuple rank of (P, I) and the minimizing shift.
    Tuplerank,
    /// Minimal rank of a pencil given as a JSON array of matrices.
    Pencil,
    /// Whether every conjugate has off-diagonal m x m blocks of rank at most k.
    OffdiagCheck {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum, default_value_t = Mode::Exhaustive)]
        mode: Mode,
    },
    ClassifyOrbit,
    #[command(subcommand)]
    Descriptor(DescriptorOp),
    #[command(subcommand)]
    Chain(ChainOp),
    /// Conjugator placing Q in the top-left block of P.
    Topleft { p: String, q: String },
    /// Conjugators raising the rank of a sum of equal-rank matrices.
    RaiseRank { files: Vec<String> },
    /// Level i+1 conjugator raising the tuple rank of the projection.
    LiftTupleRank {
        #[arg(long)]
        chain: String,
        #[arg(long, default_value_t = 1)]
        level: usize,
    },
    /// Degeneration curve over Q(t) for {"R","W","Q","V"}.
    Degenerate,
    #[command(subcommand)]
    Graph(GraphOp),
    /// Run one named verifier.
    Verify {
        id: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        l: Option<usize>,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        corrupt: bool,
        /// Extra parameter as key=value; the value is read as JSON when possible.
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, Value)>,
    },
    /// Run the verification suite.
    Suite {
        #[arg(long)]
        config: Option<String>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exhaustive,
    Sampled,
}

#[derive(Subcommand)]
enum DescriptorOp {
    Union { a: String, b: String },
    Intersect { a: String, b: String },
    /// Whether b is a subset of a.
    Contains { a: String, b: String },
    Canon { a: String },
}

#[derive(Subcommand)]
enum ChainOp {
    /// Case tag of the chain in the given characteristic.
    Classify {
        #[arg(long = "char")]
        characteristic: Option<u32>,
    },
    Normalize {
        #[arg(long, default_value_t = 5)]
        levels: usize,
    },
    Project {
        #[arg(long, default_value_t = 1)]
        level: usize,
        #[arg(long)]
        matrix: String,
    },
    Embed {
        #[arg(long, default_value_t = 1)]
        level: usize,
        #[arg(long)]
        matrix: String,
    },
    /// Input is {"chain": ..., "levels": [matrices]}.
    CheckPoint,
    Trace {
        #[arg(long = "char")]
        characteristic: Option<u32>,
    },
}

#[derive(Subcommand)]
enum GraphOp {
    Reduce,
    Replay {
        #[arg(long)]
        cert: String,
    },
    Incidence,
}

fn parse_param(s: &str) -> Result<(String, Value), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.to_string(), value))
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Core(#[from] Error),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("invalid JSON in {path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{0}")]
    Usage(String),
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Output plus whether a verification failed.
struct Outcome {
    value: Value,
    failed: bool,
}

impl From<Value> for Outcome {
    fn from(value: Value) -> Self {
        Outcome { value, failed: false }
    }
}

fn read_json(path: &str) -> CliResult<Value> {
    let text = if path == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(|source| CliError::Io { path: path.into(), source })?;
        s
    } else {
        fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?
    };
    serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.into(), source })
}

fn decode<T: serde::de::DeserializeOwned>(v: Value, what: &str) -> CliResult<T> {
    serde_json::from_value(v).map_err(|e| CliError::Core(Error::Parse(format!("{what}: {e}"))))
}

struct Ctx {
    global: Global,
}

impl Ctx {
    fn input(&self) -> CliResult<Value> {
        let path = self.global.input.as_deref().ok_or_else(|| CliError::Usage("missing --in".into()))?;
        read_json(path)
    }

    fn matrix_from(&self, mut v: Value) -> CliResult<Matrix> {
        if let (Some(f), Value::Object(map)) = (self.global.field, &mut v) {
            map.insert("field".into(), json!(f.to_string()));
        }
        Ok(Matrix::from_json(&v)?)
    }

    fn matrix(&self) -> CliResult<Matrix> {
        self.matrix_from(self.input()?)
    }

    fn matrix_file(&self, path: &str) -> CliResult<Matrix> {
        self.matrix_from(read_json(path)?)
    }

    fn field_or(&self, default: FieldSpec) -> FieldSpec {
        self.global.field.unwrap_or(default)
    }

    fn descriptor(&self, path: &str) -> CliResult<ClosedSetDescriptor> {
        Ok(ClosedSetDescriptor::from_json(self.field_or(FieldSpec::Rationals), &read_json(path)?)?)
    }

    fn chain_from(&self, v: Value) -> CliResult<ChainSpec> {
        Ok(ChainSpec::from_wire(&decode::<ChainWire>(v, "chain")?)?)
    }

    fn point(&self) -> CliResult<TruncatedPoint> {
        let mut v = self.input()?;
        let chain = self.chain_from(v.get_mut("chain").map(Value::take).unwrap_or_default())?;
        let levels = match v.get_mut("levels").map(Value::take) {
            Some(Value::Array(items)) => items.into_iter().map(|m| self.matrix_from(m)).collect::<CliResult<Vec<_>>>()?,
            _ => return Err(Error::Parse("point needs a \"levels\" array".into()).into()),
        };
        Ok(TruncatedPoint { chain, levels })
    }

    fn characteristic(&self, explicit: Option<u32>) -> u32 {
        explicit.or(self.global.field.map(FieldSpec::characteristic)).unwrap_or(0)
    }

    fn report(&self, mut r: VerificationReport) -> Outcome {
        if self.global.omit_timing {
            r.ms = 0;
        }
        let failed = r.verdict == Verdict::Fail;
        Outcome { value: r.to_json(), failed }
    }
}

fn closure_json(c: &OrbitClosure) -> Value {
    match c {
        OrbitClosure::Dense { level } => json!({"closure": "dense", "level": level}),
        OrbitClosure::Stratum { lambda, rank } => json!({"closure": "stratum", "lambda": lambda.to_string(), "rank": rank}),
    }
}

fn run(cmd: Command, ctx: &Ctx) -> CliResult<Outcome> {
    let mut rng = seeded_rng(ctx.global.seed);
    Ok(match cmd {
        Command::Rank => json!({"rank": ctx.matrix()?.rank()}).into(),
        Command::Charpoly => {
            let poly = ctx.matrix()?.char_poly()?;
            let coeffs: Vec<String> = poly.coeffs().iter().map(ToString::to_string).collect();
            json!({"coefficients": coeffs, "polynomial": poly.to_string()}).into()
        }
        Command::Eig => {
            let eig = ctx.matrix()?.eigen_data()?;
            let list: Vec<Value> = eig
                .iter()
                .map(|e| json!({"value": e.value.to_string(), "geometric_multiplicity": e.geometric_multiplicity}))
                .collect();
            json!({"eigenvalues": list}).into()
        }
        Command::Tuplerank => {
            let p = ctx.matrix()?;
            let sr = shift_rank(&p)?;
            json!({
                "tuple_rank": tuple_rank_identity(&p)?,
                "shift": sr.lambda.map(|l| l.to_string()),
                "shift_rank": sr.rank,
            })
            .into()
        }
        Command::Pencil => {
            let items = match ctx.input()? {
                Value::Array(items) => items,
                Value::Object(mut m) => match m.remove("matrices") {
                    Some(Value::Array(items)) => items,
                    _ => return Err(Error::Parse("expected an array of matrices".into()).into()),
                },
                _ => return Err(Error::Parse("expected an array of matrices".into()).into()),
            };
            let ms = items.into_iter().map(|v| ctx.matrix_from(v)).collect::<CliResult<Vec<_>>>()?;
            let (rank, point) = pencil_rank_enumerate(&PencilTuple::new(ms)?)?;
            let coords: Vec<String> = point.0.iter().map(ToString::to_string).collect();
            json!({"rank": rank, "point": coords}).into()
        }
        Command::OffdiagCheck { k, m, mode } => {
            let p = ctx.matrix()?;
            let mode = match mode {
                Mode::Exhaustive => CheckMode::Exhaustive,
                Mode::Sampled => CheckMode::Sampled { trials: ctx.global.trials.unwrap_or(1000) },
            };
            let v = offdiag_criterion_check(&p, k, m, mode, &mut rng)?;
            let witness = v.witness.map(|w| json!({"g": w.g.to_json(), "rows": w.rows, "cols": w.cols}));
            json!({"holds": v.holds, "witness": witness}).into()
        }
        Command::ClassifyOrbit => closure_json(&classify_orbit_closure(&ctx.matrix()?)?).into(),
        Command::Descriptor(op) => match op {
            DescriptorOp::Union { a, b } => ctx.descriptor(&a)?.union(&ctx.descriptor(&b)?)?.to_json().into(),
            DescriptorOp::Intersect { a, b } => ctx.descriptor(&a)?.intersect(&ctx.descriptor(&b)?)?.to_json().into(),
            DescriptorOp::Contains { a, b } => json!({"contains": ctx.descriptor(&a)?.contains(&ctx.descriptor(&b)?)?}).into(),
            DescriptorOp::Canon { a } => ctx.descriptor(&a)?.to_json().into(),
        },
        Command::Chain(op) => run_chain(op, ctx)?,
        Command::Topleft { p, q } => {
            let (p, q) = (ctx.matrix_file(&p)?, ctx.matrix_file(&q)?);
            let g = topleft_realization(&p, &q)?;
            let moved = &(&g * &p) * &g.inverse()?;
            json!({"g": g.to_json(), "conjugate": moved.to_json()}).into()
        }
        Command::RaiseRank { files } => {
            let ps = if files.is_empty() {
                match ctx.input()? {
                    Value::Array(items) => items.into_iter().map(|v| ctx.matrix_from(v)).collect::<CliResult<Vec<_>>>()?,
                    _ => return Err(Error::Parse("expected an array of matrices".into()).into()),
                }
            } else {
                files.iter().map(|f| ctx.matrix_file(f)).collect::<CliResult<Vec<_>>>()?
            };
            let gs = raise_sum_rank(&ps)?;
            let mut sum = Matrix::zeros(ps[0].field(), ps[0].rows(), ps[0].rows());
            for (g, p) in gs.iter().zip(&ps) {
                sum = &sum + &(&(g * p) * &g.inverse()?);
            }
            let gs: Vec<Value> = gs.iter().map(Matrix::to_json).collect();
            json!({"conjugators": gs, "rank": sum.rank(), "tuple_rank": tuple_rank_identity(&sum)?}).into()
        }
        Command::LiftTupleRank { chain, level } => {
            let chain = ctx.chain_from(read_json(&chain)?)?;
            let p = ctx.matrix()?;
            let g = tuple_rank_lift(&chain, level, &p, &mut rng)?;
            let projected = project_dual(&chain, level, &(&(&g * &p) * &g.inverse()?))?;
            json!({
                "g": g.to_json(),
                "tuple_rank_before": tuple_rank_identity(&p)?,
                "tuple_rank_after": tuple_rank_identity(&projected)?,
            })
            .into()
        }
        Command::Degenerate => {
            let mut v = ctx.input()?;
            let mut take = |key: &str| -> CliResult<Matrix> {
                let m = v.get_mut(key).map(Value::take).ok_or_else(|| Error::Parse(format!("missing {key}")))?;
                ctx.matrix_from(m)
            };
            let (r, w, q, vv) = (take("R")?, take("W")?, take("Q")?, take("V")?);
            json!({"curve": degeneration_witness(&r, &w, &q, &vv)?.to_json()}).into()
        }
        Command::Graph(op) => {
            let g = Multigraph::from_json(&ctx.input()?)?;
            match op {
                GraphOp::Reduce => match reduce(&g) {
                    Reduction::Certificate(c) => json!({"reduces": true, "certificate": c}).into(),
                    Reduction::Obstruction(comp) => json!({"reduces": false, "obstruction": comp}).into(),
                },
                GraphOp::Replay { cert } => {
                    let mut v = read_json(&cert)?;
                    if let Some(inner) = v.get_mut("certificate") {
                        v = inner.take();
                    }
                    let cert: ReductionCertificate = decode(v, "certificate")?;
                    let valid = replay(&g, &cert);
                    Outcome { value: json!({"valid": valid}), failed: !valid }
                }
                GraphOp::Incidence => {
                    let r = incidence_rank_check(&g, ctx.field_or(FieldSpec::Finite(2)));
                    json!({"surjective": r.surjective, "rank": r.rank}).into()
                }
            }
        }
        Command::Verify { id, n, m, l, mode, corrupt, params } => {
            let mut map = Map::new();
            for (k, v) in [("n", n), ("m", m), ("l", l), ("trials", ctx.global.trials)] {
                if let Some(v) = v {
                    map.insert(k.into(), json!(v));
                }
            }
            if let Some(f) = ctx.global.field {
                map.insert("field".into(), json!(f.to_string()));
            }
            if let Some(mode) = mode {
                map.insert("mode".into(), json!(mode));
            }
            if corrupt {
                map.insert("corrupt".into(), json!(true));
            }
            map.extend(params);
            ctx.report(run_lemma(&id, &map, ctx.global.seed)?)
        }
        Command::Suite { config } => {
            let config = match config {
                Some(path) => SuiteConfig::from_json(&read_json(&path)?)?,
                None => SuiteConfig::default_suite(),
            };
            let mut report = run_suite(&config, ctx.global.seed)?;
            if ctx.global.omit_timing {
                report.ms = 0;
                report.reports.iter_mut().for_each(|r| r.ms = 0);
            }
            let failed = report.verdict == Verdict::Fail;
            Outcome { value: serde_json::to_value(&report).expect("report serializes"), failed }
        }
    })
}

fn run_chain(op: ChainOp, ctx: &Ctx) -> CliResult<Outcome> {
    Ok(match op {
        ChainOp::Classify { characteristic } => {
            let chain = ctx.chain_from(ctx.input()?)?;
            let tag = classify_case(&chain, ctx.characteristic(characteristic))?;
            serde_json::to_value(tag).expect("tag serializes").into()
        }
        ChainOp::Normalize { levels } => {
            let (chain, flips) = normalize_signatures(&ctx.chain_from(ctx.input()?)?, levels);
            json!({"chain": chain.to_wire(), "flips": flips}).into()
        }
        ChainOp::Project { level, matrix } => {
            let chain = ctx.chain_from(ctx.input()?)?;
            json!({"matrix": project_dual(&chain, level, &ctx.matrix_file(&matrix)?)?.to_json()}).into()
        }
        ChainOp::Embed { level, matrix } => {
            let chain = ctx.chain_from(ctx.input()?)?;
            json!({"matrix": embed_group(&chain, level, &ctx.matrix_file(&matrix)?)?.to_json()}).into()
        }
        ChainOp::CheckPoint => {
            let ok = check_point(&ctx.point()?);
            Outcome { value: json!({"compatible": ok}), failed: !ok }
        }
        ChainOp::Trace { characteristic } => {
            let t = trace_invariant(&ctx.point()?, ctx.characteristic(characteristic))?;
            json!({"trace": t.to_string()}).into()
        }
    })
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Reports become one row each; any other object becomes a header and a row.
fn to_csv(v: &Value) -> String {
    let rows: Vec<&Map<String, Value>> = match v.get("reports") {
        Some(Value::Array(items)) => items.iter().filter_map(Value::as_object).collect(),
        _ => v.as_object().into_iter().collect(),
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    if let Some(first) = rows.first() {
        w.write_record(first.keys()).expect("in-memory write");
        for r in &rows {
            w.write_record(r.values().map(csv_cell)).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx { global: cli.global };
    match run(cli.command, &ctx) {
        Ok(out) => {
            let text = match ctx.global.out {
                OutFormat::Json => format!("{}\n", out.value),
                OutFormat::Csv => to_csv(&out.value),
            };
            let _ = io::stdout().write_all(text.as_bytes());
            ExitCode::from(u8::from(out.failed))
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
