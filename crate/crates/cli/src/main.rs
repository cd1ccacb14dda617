use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use cegar_core::bench::{bench_compare, BenchConfig, BenchDetector, Corpus};
use cegar_core::cegar::{cegar, CegarOptions, CegarOutcome, DetectorChoice};
use cegar_core::gen::{gen_random_model, GenParams};
use cegar_core::path_format::parse_path_file;
use cegar_core::spurious::report::ReportDoc;
use cegar_core::{
    build_abstract_model, make_abstraction, model_check, parse_model, refine, AbstractionMap,
    CheckOutcome, Counterexample, KripkeStructure, LastStateMode, PathText, Property,
};

const EXIT_INPUT_ERROR: u8 = 2;
const EXIT_REAL: u8 = 10;
const EXIT_BUDGET: u8 = 20;

#[derive(Parser)]
#[command(
    name = "cegar",
    version,
    about = "Abstraction refinement toolkit for explicit-state models"
)]
struct Cli {
    /// Seed for generated models and benchmarks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,
    /// Suppress human-readable output; only the exit code remains.
    #[arg(long, global = true)]
    quiet: bool,
    /// Include wall-clock timings (makes output nondeterministic).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct AbstractionArgs {
    /// Model file.
    model: PathBuf,
    /// Comma-separated invisible variables.
    #[arg(long, value_delimiter = ',', default_value = "")]
    invisible: Vec<String>,
}

impl AbstractionArgs {
    fn invisible(&self) -> Vec<String> {
        self.invisible
            .iter()
            .filter(|v| !v.is_empty())
            .cloned()
            .collect()
    }

    fn load(&self) -> Result<(KripkeStructure, AbstractionMap)> {
        let model = load_model(&self.model)?;
        let map = make_abstraction(&model, &self.invisible())?;
        Ok((model, map))
    }
}

#[derive(Args)]
struct DetectorArgs {
    /// first, heaviest, par-first:N, par-heaviest:N, splitpath[:N] or oracle.
    #[arg(long, default_value = "first")]
    detector: String,
    /// Loop unwinding for splitpath.
    #[arg(long)]
    unwind: Option<usize>,
    /// Run first / heaviest on this many workers.
    #[arg(long)]
    workers: Option<usize>,
    /// Only origins reaching a deadlock count at the end of a finite path.
    #[arg(long)]
    strict_last_state: bool,
}

impl DetectorArgs {
    fn detector(&self) -> Result<BenchDetector> {
        let d: BenchDetector = self.detector.parse()?;
        Ok(match (d, self.workers, self.unwind) {
            (BenchDetector::First, Some(w), _) => BenchDetector::ParallelFirst(w.max(1)),
            (BenchDetector::Heaviest, Some(w), _) => BenchDetector::ParallelHeaviest(w.max(1)),
            (BenchDetector::SplitPath(None), _, Some(u)) => BenchDetector::SplitPath(Some(u)),
            (d, _, _) => d,
        })
    }
}

fn last_mode(strict: bool) -> LastStateMode {
    if strict {
        LastStateMode::Strict
    } else {
        LastStateMode::Unconstrained
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CegarDetector {
    First,
    Heaviest,
    Splitpath,
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorpusArg {
    Finite,
    Lasso,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a model file.
    Parse {
        model: PathBuf,
        /// Print the model back in canonical form.
        #[arg(long)]
        render: bool,
    },
    /// Show the abstraction induced by hiding variables.
    Abstract {
        #[command(flatten)]
        abs: AbstractionArgs,
        /// Print the abstract model in the model file format.
        #[arg(long)]
        dump_abstract: bool,
    },
    /// Check a property on the abstract model.
    Modelcheck {
        #[command(flatten)]
        abs: AbstractionArgs,
        /// `AG <formula>` or `GF <formula>` over visible variables.
        #[arg(long)]
        prop: String,
    },
    /// Decide whether abstract counterexamples are spurious.
    Analyze {
        #[command(flatten)]
        abs: AbstractionArgs,
        /// Path file, one `finite:` or `lasso:` path per line.
        #[arg(long)]
        path: PathBuf,
        #[command(flatten)]
        det: DetectorArgs,
    },
    /// Split the failure state of the first path in a path file.
    Refine {
        #[command(flatten)]
        abs: AbstractionArgs,
        #[arg(long)]
        path: PathBuf,
        #[command(flatten)]
        det: DetectorArgs,
        /// Print the refined abstract model.
        #[arg(long)]
        dump_abstract: bool,
    },
    /// Run the abstraction-refinement loop.
    Cegar {
        #[command(flatten)]
        abs: AbstractionArgs,
        #[arg(long)]
        prop: String,
        #[arg(long, value_enum, default_value = "first")]
        detector: CegarDetector,
        #[arg(long)]
        unwind: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        #[arg(long)]
        strict_last_state: bool,
    },
    /// Generate a random model.
    Gen {
        #[arg(long, default_value_t = 12)]
        states: usize,
        /// Variables including the group variable `g`.
        #[arg(long, default_value_t = 2)]
        vars: usize,
        #[arg(long, default_value_t = 4)]
        domain: usize,
        #[arg(long, default_value_t = 0.1)]
        density: f64,
        #[arg(long, default_value_t = 1.0)]
        invisible_fraction: f64,
        /// Write the model here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Compare detectors against the oracle on generated models.
    Bench {
        #[arg(long, default_value_t = 20)]
        models: usize,
        #[arg(long, default_value_t = 2)]
        trials: usize,
        #[arg(long, default_value_t = 6)]
        min_states: usize,
        #[arg(long, default_value_t = 60)]
        max_states: usize,
        #[arg(long, default_value_t = 0.02)]
        min_density: f64,
        #[arg(long, default_value_t = 0.1)]
        max_density: f64,
        #[arg(long, default_value_t = 3)]
        vars: usize,
        #[arg(long, default_value_t = 4)]
        domain: usize,
        #[arg(long, default_value_t = 0.5)]
        invisible_fraction: f64,
        #[arg(long, value_enum, default_value = "both")]
        corpus: CorpusArg,
        /// Comma-separated detector list.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "first,heaviest,splitpath"
        )]
        detectors: Vec<String>,
        #[arg(long)]
        strict_last_state: bool,
        /// Print every row in text mode.
        #[arg(long)]
        rows: bool,
    },
}

fn load_model(path: &Path) -> Result<KripkeStructure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_model(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_paths(path: &Path) -> Result<Vec<PathText>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let paths = parse_path_file(&text).with_context(|| format!("parsing {}", path.display()))?;
    if paths.is_empty() {
        bail!("{} contains no paths", path.display());
    }
    Ok(paths)
}

struct Output {
    json: bool,
    quiet: bool,
}

impl Output {
    fn emit(&self, value: serde_json::Value, text: impl FnOnce() -> String) {
        if self.quiet {
            return;
        }
        let body = if self.json {
            let mut s = serde_json::to_string_pretty(&value).expect("json values serialize");
            s.push('\n');
            s
        } else {
            text()
        };
        // A closed pipe (e.g. `| head`) is not an error worth reporting.
        let _ = io::stdout().lock().write_all(body.as_bytes());
    }
}

fn run(cli: Cli) -> Result<u8> {
    let out = Output {
        json: cli.json,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Parse { model, render } => {
            let k = load_model(&model)?;
            let vars: Vec<_> = k
                .vars()
                .iter()
                .map(|v| json!({"name": v.name, "domain": v.domain}))
                .collect();
            let ids = |xs: &[cegar_core::StateIdx]| -> Vec<String> {
                xs.iter().map(|&s| k.id(s).to_string()).collect()
            };
            out.emit(
                json!({
                    "vars": vars,
                    "states": k.num_states(),
                    "transitions": k.num_transitions(),
                    "initial": ids(k.initial()),
                    "deadlocks": ids(k.deadlocks()),
                }),
                || {
                    if render {
                        return k.render();
                    }
                    format!(
                        "{} vars, {} states, {} transitions\ninitial:   {}\ndeadlocks: {}\n",
                        k.vars().len(),
                        k.num_states(),
                        k.num_transitions(),
                        ids(k.initial()).join(" "),
                        ids(k.deadlocks()).join(" ")
                    )
                },
            );
        }
        Command::Abstract { abs, dump_abstract } => {
            let (k, map) = abs.load()?;
            let m = build_abstract_model(&k, &map);
            let classes: Vec<_> = (0..map.num_classes())
                .map(|c| {
                    let c = cegar_core::ClassIdx(c);
                    json!({
                        "id": format!("a{}", c.0),
                        "name": map.name(c),
                        "initial": m.is_initial(c),
                        "origins": map.h_inverse(c).iter().map(|&s| k.id(s)).collect::<Vec<_>>(),
                        "successors": m.successors(c).iter().map(|&t| map.name(t)).collect::<Vec<_>>(),
                    })
                })
                .collect();
            out.emit(
                json!({"invisible": abs.invisible(), "classes": classes}),
                || {
                    if dump_abstract {
                        return m.render();
                    }
                    let mut s = String::new();
                    for c in (0..map.num_classes()).map(cegar_core::ClassIdx) {
                        let origins: Vec<&str> =
                            map.h_inverse(c).iter().map(|&x| k.id(x)).collect();
                        let succ: Vec<&str> =
                            m.successors(c).iter().map(|&t| map.name(t)).collect();
                        s.push_str(&format!(
                            "a{:<3} {}{}  {{{}}} -> {}\n",
                            c.0,
                            map.name(c),
                            if m.is_initial(c) { " (init)" } else { "" },
                            origins.join(", "),
                            succ.join(" ")
                        ));
                    }
                    s
                },
            );
        }
        Command::Modelcheck { abs, prop } => {
            let (k, map) = abs.load()?;
            let property: Property = prop.parse()?;
            let m = build_abstract_model(&k, &map);
            match model_check(&m, &property)? {
                CheckOutcome::Verified => out
                    .emit(json!({"property": prop, "verified": true}), || {
                        "verified\n".into()
                    }),
                CheckOutcome::Violated(ce) => {
                    let path = ce.to_path(&map);
                    out.emit(
                        json!({"property": prop, "verified": false, "path": path.to_string()}),
                        || format!("{path}\n"),
                    )
                }
            }
        }
        Command::Analyze { abs, path, det } => {
            let (k, map) = abs.load()?;
            let detector = det.detector()?;
            let m = build_abstract_model(&k, &map);
            let mut docs = Vec::new();
            for (line, text) in load_paths(&path)?.iter().enumerate() {
                let ce = Counterexample::from_path(text, &map)
                    .and_then(|ce| ce.validate(&m).map(|()| ce))
                    .with_context(|| format!("path {} (`{text}`)", line + 1))?;
                let report = detector.run(&k, &map, &ce, last_mode(det.strict_last_state));
                docs.push(ReportDoc::new(&report, &k, &map, &ce, cli.timing));
            }
            out.emit(serde_json::to_value(&docs)?, || {
                docs.iter()
                    .map(|d| d.render_text())
                    .collect::<Vec<_>>()
                    .join("\n")
            });
        }
        Command::Refine {
            abs,
            path,
            det,
            dump_abstract,
        } => {
            let (k, map) = abs.load()?;
            let detector = det.detector()?;
            let m = build_abstract_model(&k, &map);
            let text = &load_paths(&path)?[0];
            let ce = Counterexample::from_path(text, &map)?;
            ce.validate(&m)?;
            let report = detector.run(&k, &map, &ce, last_mode(det.strict_last_state));
            let doc = ReportDoc::new(&report, &k, &map, &ce, cli.timing);
            let (Some(class), Some(partition)) = (report.failure_state, &report.partition) else {
                out.emit(json!({"report": doc, "refinement": null}), || {
                    format!("{}no failure state; nothing to refine\n", doc.render_text())
                });
                return Ok(0);
            };
            let (refined, step) = refine(&k, &map, class, partition)?;
            let rm = build_abstract_model(&k, &refined);
            let classes: Vec<_> = (0..refined.num_classes())
                .map(cegar_core::ClassIdx)
                .map(|c| json!({"name": refined.name(c), "origins": refined.h_inverse(c).iter().map(|&s| k.id(s)).collect::<Vec<_>>()}))
                .collect();
            out.emit(
                json!({"report": doc, "refinement": step, "classes": classes}),
                || {
                    if dump_abstract {
                        return rm.render();
                    }
                    format!(
                        "{}split {} into {}\n",
                        doc.render_text(),
                        step.failure_state,
                        step.new_classes.join(", ")
                    )
                },
            );
        }
        Command::Cegar {
            abs,
            prop,
            detector,
            unwind,
            workers,
            max_iter,
            strict_last_state,
        } => {
            let k = load_model(&abs.model)?;
            let property: Property = prop.parse()?;
            let options = CegarOptions {
                detector: match detector {
                    CegarDetector::First => DetectorChoice::First,
                    CegarDetector::Heaviest => DetectorChoice::Heaviest,
                    CegarDetector::Splitpath => DetectorChoice::SplitPath { unwind },
                    CegarDetector::Oracle => DetectorChoice::Oracle,
                },
                workers,
                last_mode: last_mode(strict_last_state),
                max_iterations: max_iter,
            };
            let result = cegar(&k, &abs.invisible(), &property, &options, cli.timing)?;
            out.emit(serde_json::to_value(&result)?, || {
                let mut s = String::new();
                for e in &result.trace {
                    s.push_str(&format!(
                        "iteration {}: {} abstract states, {} -> {}",
                        e.iteration, e.abstract_states, e.counterexample, e.report.verdict
                    ));
                    if let Some(o) = e.oracle {
                        s.push_str(&format!(" (oracle: {o})"));
                    }
                    if e.detector_incomplete {
                        s.push_str(" [detector incomplete]");
                    }
                    if let Some(r) = &e.refinement {
                        s.push_str(&format!(
                            "; split {} into {}",
                            r.failure_state,
                            r.new_classes.join(", ")
                        ));
                    }
                    s.push('\n');
                }
                match &result.outcome {
                    CegarOutcome::Verified => s.push_str(&format!(
                        "verified after {} iteration(s)\n",
                        result.iterations
                    )),
                    CegarOutcome::RealCounterexample { path, witness } => {
                        s.push_str(&format!("real counterexample {path}\nwitness {witness}\n"))
                    }
                    CegarOutcome::BudgetExhausted => s.push_str(&format!(
                        "budget of {} iteration(s) exhausted\n",
                        result.iterations
                    )),
                }
                s
            });
            return Ok(match result.outcome {
                CegarOutcome::Verified => 0,
                CegarOutcome::RealCounterexample { .. } => EXIT_REAL,
                CegarOutcome::BudgetExhausted => EXIT_BUDGET,
            });
        }
        Command::Gen {
            states,
            vars,
            domain,
            density,
            invisible_fraction,
            output,
        } => {
            let params = GenParams {
                num_states: states,
                num_vars: vars,
                domain_size: domain,
                edge_density: density,
                invisible_fraction,
                seed: cli.seed,
            };
            let generated = gen_random_model(&params)?;
            match output {
                Some(file) => fs::write(&file, &generated.text)
                    .with_context(|| format!("writing {}", file.display()))?,
                None => out.emit(
                    json!({"params": params, "invisible": generated.invisible, "model": generated.text}),
                    || generated.text.clone(),
                ),
            }
        }
        Command::Bench {
            models,
            trials,
            min_states,
            max_states,
            min_density,
            max_density,
            vars,
            domain,
            invisible_fraction,
            corpus,
            detectors,
            strict_last_state,
            rows,
        } => {
            let detectors = detectors
                .iter()
                .map(|d| d.parse::<BenchDetector>())
                .collect::<Result<Vec<_>, _>>()?;
            let config = BenchConfig {
                models,
                trials,
                min_states,
                max_states,
                min_density,
                max_density,
                num_vars: vars,
                domain_size: domain,
                invisible_fraction,
                corpus: match corpus {
                    CorpusArg::Finite => Corpus::Finite,
                    CorpusArg::Lasso => Corpus::Lasso,
                    CorpusArg::Both => Corpus::Both,
                },
                detectors,
                last_mode: last_mode(strict_last_state),
                seed: cli.seed,
                timing: cli.timing,
            };
            let report = bench_compare(&config);
            out.emit(serde_json::to_value(&report)?, || {
                let mut s = report.render_text();
                if rows {
                    for r in &report.rows {
                        s.push_str(&format!(
                            "{:>4} {:>2} {:<15} {:<9} oracle={:<9} examined={:<4} {}\n",
                            r.model,
                            r.trial,
                            r.detector.to_string(),
                            r.verdict.to_string(),
                            r.oracle.to_string(),
                            r.positions_examined,
                            r.path
                        ));
                    }
                }
                s
            });
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT_ERROR)
        }
    }
}
