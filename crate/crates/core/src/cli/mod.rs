//! Command-line front end. [`run`] parses arguments, executes one query,
//! prints a human summary and optionally writes a JSON report.
//!
//! Exit status: 0 conclusive, 1 unknown, 2 error.

pub mod property;
pub mod report;
pub mod sample;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::formula::{InputBox, Interval};
use crate::network::{select_label, ClampPolicy, Direction, LabelChoice, Network, SelectionRule};
use crate::partition::{propagate_partitioned, PartitionPlan};
use crate::propagation::{HeuristicRegistry, Mode, PropagationConfig};
use crate::rational::{parse_rational, to_decimal, Rational};
use crate::robustness::{
    check_delta_robustness, delta_to_epsilon, epsilon_to_delta_from, verify_io_property, PropertyVerdict,
    RobustnessOptions, Verdict,
};

pub const EXIT_CONCLUSIVE: i32 = 0;
pub const EXIT_UNKNOWN: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "qenet", version, about = "Exact range analysis and robustness queries for ReLU networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Output ranges over an input box.
    Range {
        #[command(flatten)]
        common: Common,
        /// Per-dimension bounds `lo,hi;lo,hi;...`; defaults to the input domain.
        #[arg(long = "box", allow_hyphen_values = true)]
        input_box: Option<String>,
    },
    /// δ-local robustness around a reference point.
    DeltaRobust {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        point: Point,
        #[arg(long)]
        delta: String,
        /// Also separate labels by conjoining label constraints with the encoding.
        #[arg(long)]
        label_constraints: bool,
    },
    /// Largest output deviation over a δ-box.
    DeltaToEps {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        point: Point,
        #[arg(long)]
        delta: String,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Largest input radius that keeps an output within ε.
    EpsToDelta {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        point: Point,
        #[arg(long)]
        delta0: String,
        #[arg(long)]
        eps: String,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Check an input/output property file.
    Property {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        property: PathBuf,
    },
    /// Evaluate random points of a box (diagnostic).
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long = "box", allow_hyphen_values = true)]
        input_box: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    net: PathBuf,
    /// `precise` or `over`.
    #[arg(long, default_value = "precise")]
    mode: Mode,
    /// Branching neurons kept symbolic in over-approximate mode.
    #[arg(long, default_value_t = 8)]
    budget: usize,
    /// Segments per input dimension, `c1,...,cd` or a single count for all.
    #[arg(long)]
    partition: Option<String>,
    #[arg(long, default_value_t = 10)]
    workers: usize,
    /// Seconds; 0 disables the limit.
    #[arg(long, default_value_t = 7200.0)]
    timeout: f64,
    /// Concretization heuristic for over-approximate mode.
    #[arg(long, default_value = "smallest-width")]
    heuristic: String,
    /// `argmin` or `argmax`.
    #[arg(long, default_value = "argmin")]
    rule: SelectionRule,
    /// Points and boxes are given in raw units.
    #[arg(long)]
    raw: bool,
    /// Write a JSON report here (`-` for standard output).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Include wall-clock timings in the JSON report.
    #[arg(long)]
    timings: bool,
}

#[derive(Args, Debug)]
struct Point {
    /// Reference point, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
}

#[derive(Args, Debug)]
struct OutputArg {
    /// Output name (COC, WL, ..., y0, ...) or index.
    #[arg(long, default_value = "0")]
    output: String,
}

struct Context {
    network: Network,
    config: PropagationConfig,
    raw: bool,
    partition: Option<String>,
    report: Option<PathBuf>,
    timings: bool,
    rule: SelectionRule,
    echo: Value,
}

type Outcome = Result<(i32, Value), String>;

fn parse_list(text: &str) -> Result<Vec<Rational>, String> {
    text.split(',')
        .map(|t| parse_rational(t).map_err(|e| e.to_string()))
        .collect()
}

impl Context {
    fn new(common: &Common, command: &str) -> Result<Context, String> {
        let network = Network::load(&common.net).map_err(|e| format!("{}: {e}", common.net.display()))?;
        let heuristic = HeuristicRegistry::default().get(&common.heuristic).ok_or_else(|| {
            format!(
                "unknown heuristic `{}` (known: {})",
                common.heuristic,
                HeuristicRegistry::default().names().join(", ")
            )
        })?;
        if !(common.timeout >= 0.0 && common.timeout.is_finite()) {
            return Err("timeout must be a non-negative number of seconds".into());
        }
        let config = PropagationConfig {
            mode: common.mode,
            branching_budget: common.budget,
            worker_count: common.workers.max(1),
            timeout: (common.timeout > 0.0).then(|| Duration::from_secs_f64(common.timeout)),
            heuristic,
            ..PropagationConfig::default()
        };
        let echo = json!({
            "command": command,
            "network": network.name,
            "mode": common.mode.to_string(),
            "budget": common.budget,
            "partition": common.partition,
            "heuristic": common.heuristic,
            "rule": common.rule,
        });
        Ok(Context {
            network,
            config,
            raw: common.raw,
            partition: common.partition.clone(),
            report: common.report.clone(),
            timings: common.timings,
            rule: common.rule,
            echo,
        })
    }

    fn plan(&self) -> Result<PartitionPlan, String> {
        match &self.partition {
            None => Ok(PartitionPlan::identity(self.network.input_dim())),
            Some(p) => PartitionPlan::parse(p, self.network.input_dim()).map_err(|e| e.to_string()),
        }
    }

    fn point(&self, text: &str) -> Result<Vec<Rational>, String> {
        let p = parse_list(text)?;
        if self.raw {
            self.network
                .normalize_point(&p, Direction::RawToNormalized, ClampPolicy::Clamp)
                .map_err(|e| e.to_string())
        } else {
            Ok(p)
        }
    }

    fn input_box(&self, text: Option<&str>) -> Result<InputBox, String> {
        let Some(text) = text else {
            return Ok(self.network.normalized_domain());
        };
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for dim in text.split(';').filter(|d| !d.trim().is_empty()) {
            let pair = parse_list(dim)?;
            let [l, h] = <[Rational; 2]>::try_from(pair).map_err(|_| format!("expected `lo,hi`, got `{dim}`"))?;
            lo.push(l);
            hi.push(h);
        }
        if self.raw {
            let norm = |p: &[Rational]| {
                self.network
                    .normalize_point(p, Direction::RawToNormalized, ClampPolicy::Clamp)
                    .map_err(|e| e.to_string())
            };
            lo = norm(&lo)?;
            hi = norm(&hi)?;
        }
        InputBox::new(lo.into_iter().zip(hi).collect()).map_err(|e| e.to_string())
    }

    fn output(&self, arg: &OutputArg) -> Result<usize, String> {
        arg.output
            .parse::<usize>()
            .ok()
            .filter(|i| *i < self.network.output_dim())
            .or_else(|| self.network.output_index(&arg.output))
            .ok_or_else(|| format!("unknown output `{}`", arg.output))
    }

    fn labels(&self) -> Vec<String> {
        self.network.output_labels()
    }
}

fn label_text(labels: &[String], choice: &LabelChoice) -> String {
    match choice {
        LabelChoice::Unique(l) => labels[*l].clone(),
        LabelChoice::Tie(ls) => format!("tie({})", ls.iter().map(|l| labels[*l].as_str()).collect::<Vec<_>>().join(",")),
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn run_range(ctx: &Context, input_box: Option<&str>, out: &mut dyn Write) -> Outcome {
    let b = ctx.input_box(input_box)?;
    let r = propagate_partitioned(&ctx.network, &b, &ctx.plan()?, &ctx.config).map_err(|e| e.to_string())?;
    let labels = ctx.labels();
    let _ = writeln!(out, "subspaces: {}   precise: {}", r.subspaces.len(), yes_no(r.precise));
    if r.subspaces.len() > 1 {
        for s in &r.subspaces {
            let _ = writeln!(out, "subspace {}:", s.index);
            for (l, iv) in labels.iter().zip(&s.result.outputs) {
                let _ = writeln!(out, "  {l}: {}", iv.render_decimal(report::DIGITS));
            }
        }
    }
    for (l, iv) in labels.iter().zip(&r.outputs) {
        let _ = writeln!(out, "{l}: {}", report::interval_text(iv));
    }
    let mut value = report::partitioned(&labels, &r, ctx.timings);
    if ctx.timings {
        value["elapsed_seconds"] = json!(r.elapsed.as_secs_f64());
    }
    Ok((EXIT_CONCLUSIVE, value))
}

fn run_delta_robust(ctx: &Context, x0: &str, delta: &str, label_constraints: bool, out: &mut dyn Write) -> Outcome {
    let x0 = ctx.point(x0)?;
    let delta = parse_rational(delta).map_err(|e| e.to_string())?;
    let options = RobustnessOptions {
        rule: ctx.rule,
        label_constraints,
    };
    let v = check_delta_robustness(&ctx.network, &x0, &delta, &ctx.plan()?, &ctx.config, &options)
        .map_err(|e| e.to_string())?;
    let labels = ctx.labels();
    let (code, verdict) = match v.verdict {
        Verdict::Robust(l) => (EXIT_CONCLUSIVE, format!("Robust: {}", labels[l])),
        Verdict::Unknown => (EXIT_UNKNOWN, "UNKNOWN".to_string()),
    };
    let _ = writeln!(out, "{verdict}   precise: {}", yes_no(v.precise));
    let _ = writeln!(out, "reference label: {}", label_text(&labels, &v.reference));
    for (l, iv) in labels.iter().zip(&v.outputs) {
        let _ = writeln!(out, "{l}: {}", report::interval_text(iv));
    }
    if !v.overlapping.is_empty() {
        let names: Vec<&str> = v.overlapping.iter().map(|j| labels[*j].as_str()).collect();
        let _ = writeln!(out, "overlapping: {}", names.join(", "));
    }
    let mut value = json!({
        "verdict": v.verdict,
        "reference": label_text(&labels, &v.reference),
        "outputs": report::labelled_intervals(&labels, &v.outputs),
        "overlapping": v.overlapping.iter().map(|j| labels[*j].clone()).collect::<Vec<_>>(),
        "precise": v.precise,
        "subspaces": v.subspaces,
        "x0": x0.iter().map(report::rational).collect::<Vec<_>>(),
        "delta": report::rational(&delta),
    });
    if ctx.timings {
        value["elapsed_seconds"] = json!(v.elapsed.as_secs_f64());
    }
    Ok((code, value))
}

fn run_delta_to_eps(ctx: &Context, x0: &str, delta: &str, output: &OutputArg, out: &mut dyn Write) -> Outcome {
    let started = Instant::now();
    let x0 = ctx.point(x0)?;
    let delta = parse_rational(delta).map_err(|e| e.to_string())?;
    let o = ctx.output(output)?;
    let e = delta_to_epsilon(&ctx.network, &x0, &delta, o, &ctx.plan()?, &ctx.config).map_err(|e| e.to_string())?;
    let label = &ctx.labels()[o];
    let _ = writeln!(out, "{label} range: {}", report::interval_text(&e.range));
    let _ = writeln!(out, "{label}(x0) = {}", to_decimal(&e.reference_value, report::DIGITS));
    let _ = writeln!(out, "epsilon = {}   precise: {}", to_decimal(&e.epsilon, report::DIGITS), yes_no(e.precise));
    let mut value = json!({
        "output": label,
        "range": report::interval(&e.range),
        "reference_value": report::rational(&e.reference_value),
        "epsilon": report::rational(&e.epsilon),
        "precise": e.precise,
        "delta": report::rational(&delta),
    });
    if ctx.timings {
        value["elapsed_seconds"] = json!(started.elapsed().as_secs_f64());
    }
    Ok((EXIT_CONCLUSIVE, value))
}

fn run_eps_to_delta(ctx: &Context, x0: &str, delta0: &str, eps: &str, output: &OutputArg, out: &mut dyn Write) -> Outcome {
    let started = Instant::now();
    let x0 = ctx.point(x0)?;
    let delta0 = parse_rational(delta0).map_err(|e| e.to_string())?;
    let eps = parse_rational(eps).map_err(|e| e.to_string())?;
    let o = ctx.output(output)?;
    let identity = PartitionPlan::identity(ctx.network.input_dim());
    let base = delta_to_epsilon(&ctx.network, &x0, &delta0, o, &identity, &ctx.config).map_err(|e| e.to_string())?;
    let d = epsilon_to_delta_from(&ctx.network, &base, &eps, &ctx.config).map_err(|e| e.to_string())?;
    let _ = writeln!(
        out,
        "epsilon(delta0) = {}",
        to_decimal(&d.epsilon_at_delta0, report::DIGITS)
    );
    let shown = d
        .delta_star
        .as_ref()
        .map_or("+inf".to_string(), |v| to_decimal(v, 11));
    let _ = writeln!(out, "delta* = {shown} ({})", if d.sound { "sound" } else { "unsound: exceeds delta0" });
    let mut value = json!({
        "output": ctx.labels()[o],
        "delta0": report::rational(&delta0),
        "epsilon_star": report::rational(&eps),
        "epsilon_at_delta0": report::rational(&d.epsilon_at_delta0),
        "delta_star": d.delta_star.as_ref().map_or(Value::Null, report::rational),
        "sound": d.sound,
        "precise": base.precise,
        "residual": d.residual,
    });
    if ctx.timings {
        value["elapsed_seconds"] = json!(started.elapsed().as_secs_f64());
    }
    Ok((if d.sound { EXIT_CONCLUSIVE } else { EXIT_UNKNOWN }, value))
}

fn run_property(ctx: &Context, path: &PathBuf, out: &mut dyn Write) -> Outcome {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let spec = property::parse_property(&text, &ctx.network).map_err(|e| e.to_string())?;
    let r = verify_io_property(&ctx.network, &spec, &ctx.plan()?, &ctx.config).map_err(|e| e.to_string())?;
    let labels = ctx.labels();
    let (code, verdict) = match r.verdict {
        PropertyVerdict::Holds => (EXIT_CONCLUSIVE, "Holds"),
        PropertyVerdict::Unknown => (EXIT_UNKNOWN, "UNKNOWN"),
    };
    let _ = writeln!(out, "{verdict}   precise: {}   subspaces: {}", yes_no(r.precise), r.subspaces);
    for (l, iv) in labels.iter().zip(&r.outputs) {
        let _ = writeln!(out, "{l}: {}", report::interval_text(iv));
    }
    for v in &r.violations {
        let _ = writeln!(out, "subspace {} may violate:", v.subspace);
        for s in &v.slack {
            let _ = writeln!(out, "  {}: reaches {}", s.atom, to_decimal(&s.supremum, report::DIGITS));
        }
    }
    let mut value = json!({
        "verdict": r.verdict,
        "output_space": spec.output_space,
        "predicate": spec.predicate.to_string(),
        "outputs": report::labelled_intervals(&labels, &r.outputs),
        "precise": r.precise,
        "subspaces": r.subspaces,
        "violations": r.violations.iter().map(|v| json!({
            "subspace": v.subspace,
            "outputs": report::labelled_intervals(&labels, &v.outputs),
            "witness": v.witness.iter().map(|(k, x)| (k.clone(), report::rational(x))).collect::<serde_json::Map<_, _>>(),
            "slack": v.slack.iter().map(|s| json!({"atom": s.atom, "supremum": report::rational(&s.supremum)})).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    });
    if let Some(p) = &r.partitioned {
        value["range"] = report::partitioned(&labels, p, ctx.timings);
    }
    if ctx.timings {
        value["elapsed_seconds"] = json!(r.elapsed.as_secs_f64());
    }
    Ok((code, value))
}

fn run_sample(ctx: &Context, input_box: Option<&str>, samples: usize, seed: u64, out: &mut dyn Write) -> Outcome {
    let b = ctx.input_box(input_box)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = ctx.labels();
    let mut hull: Vec<Option<Interval>> = vec![None; ctx.network.output_dim()];
    let mut counts = vec![0usize; ctx.network.output_dim()];
    let mut ties = 0usize;
    for _ in 0..samples {
        let p = sample::random_point(&b, &mut rng);
        let y = ctx.network.evaluate_exact(&p).map_err(|e| e.to_string())?;
        for (h, v) in hull.iter_mut().zip(&y) {
            let pt = Interval::point(v.clone());
            *h = Some(h.as_ref().map_or(pt.clone(), |h| h.hull(&pt)));
        }
        match select_label(&y, ctx.rule) {
            LabelChoice::Unique(l) => counts[l] += 1,
            LabelChoice::Tie(_) => ties += 1,
        }
    }
    let _ = writeln!(out, "{samples} samples, seed {seed}");
    for ((l, h), c) in labels.iter().zip(&hull).zip(&counts) {
        let range = h.as_ref().map_or("-".to_string(), |h| h.render_decimal(report::DIGITS));
        let _ = writeln!(out, "{l}: observed {range}, selected {c} times");
    }
    let observed: Vec<Value> = labels
        .iter()
        .zip(&hull)
        .zip(&counts)
        .map(|((l, h), c)| {
            json!({
                "output": l,
                "observed": h.as_ref().map_or(Value::Null, report::interval),
                "selected": c,
            })
        })
        .collect();
    Ok((
        EXIT_CONCLUSIVE,
        json!({ "samples": samples, "seed": seed, "outputs": observed, "ties": ties }),
    ))
}

/// Runs one command line; human output goes to `out`.
pub fn run<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_CONCLUSIVE };
            let _ = write!(out, "{e}");
            return code;
        }
    };
    let (common, name) = match &cli.command {
        Command::Range { common, .. } => (common, "range"),
        Command::DeltaRobust { common, .. } => (common, "delta-robust"),
        Command::DeltaToEps { common, .. } => (common, "delta-to-eps"),
        Command::EpsToDelta { common, .. } => (common, "eps-to-delta"),
        Command::Property { common, .. } => (common, "property"),
        Command::Sample { common, .. } => (common, "sample"),
    };
    let ctx = match Context::new(common, name) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            return EXIT_ERROR;
        }
    };
    let outcome = match &cli.command {
        Command::Range { input_box, .. } => run_range(&ctx, input_box.as_deref(), out),
        Command::DeltaRobust {
            point,
            delta,
            label_constraints,
            ..
        } => run_delta_robust(&ctx, &point.x0, delta, *label_constraints, out),
        Command::DeltaToEps {
            point, delta, output, ..
        } => run_delta_to_eps(&ctx, &point.x0, delta, output, out),
        Command::EpsToDelta {
            point,
            delta0,
            eps,
            output,
            ..
        } => run_eps_to_delta(&ctx, &point.x0, delta0, eps, output, out),
        Command::Property { property, .. } => run_property(&ctx, property, out),
        Command::Sample {
            input_box,
            samples,
            seed,
            ..
        } => run_sample(&ctx, input_box.as_deref(), *samples, *seed, out),
    };
    let (code, result) = match outcome {
        Ok(ok) => ok,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            (EXIT_ERROR, json!({ "error": e }))
        }
    };
    if let Some(path) = &ctx.report {
        let doc = json!({ "query": ctx.echo, "exit_status": code, "result": result });
        let text = serde_json::to_string_pretty(&doc).expect("report serializes") + "\n";
        let written = if path.as_os_str() == "-" {
            out.write_all(text.as_bytes()).map_err(|e| e.to_string())
        } else {
            fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
        };
        if let Err(e) = written {
            let _ = writeln!(out, "error: cannot write report: {e}");
            return EXIT_ERROR;
        }
    }
    code
}
