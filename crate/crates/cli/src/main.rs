//! `fkf`: compute FK-Ising fermionic observables and run the verification
//! suites on small rectangles.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage error, 3 resource
//! refusal (enumeration over the configured cap).

mod report;
mod suites;

use std::sync::Arc;
use std::time::Instant;

use clap::{ArgAction, Args, Parser, Subcommand};

use fkf_core::engines::EnumOpts;
use fkf_core::lattice::{build_domain, LatticeDomain};
use fkf_core::measures::ModelParams;
use fkf_core::observables::{fermion_exact, fermion_mc, InsertionSet, ObservableValue};
use fkf_core::winding::{path_winding, winding_phase};
use fkf_core::{FkConfig, FkError};

use report::{JVal, ResultRow, RunReport};

#[derive(Parser)]
#[command(
    name = "fkf",
    version,
    about = "FK-Ising loop observables and verification suites"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[command(disable_help_flag = true)]
struct DomainArgs {
    /// Primal vertices per row.
    #[arg(short = 'w', long)]
    width: usize,
    /// Primal vertex rows.
    #[arg(short = 'h', long)]
    height: usize,
    #[arg(long, action = ArgAction::HelpLong, help = "Print help")]
    help: Option<bool>,
}

#[derive(Args)]
struct ParamArgs {
    /// Edge probability p in [0,1).
    #[arg(long, conflicts_with_all = ["beta", "t", "critical"])]
    p: Option<f64>,
    /// Inverse temperature beta >= 0.
    #[arg(long, conflicts_with_all = ["p", "t", "critical"])]
    beta: Option<f64>,
    /// Loop weight parameter t > 0.
    #[arg(long, conflicts_with_all = ["p", "beta", "critical"])]
    t: Option<f64>,
    /// Critical point t = 1, p = 2 - sqrt(2).
    #[arg(long, conflicts_with_all = ["p", "beta", "t"])]
    critical: bool,
}

impl ParamArgs {
    fn resolve(&self) -> Result<ModelParams, FkError> {
        match (self.p, self.beta, self.t) {
            (Some(p), None, None) => ModelParams::from_p(p),
            (None, Some(b), None) => ModelParams::from_beta(b),
            (None, None, Some(t)) => ModelParams::from_t(t),
            _ => Ok(ModelParams::critical()),
        }
    }
}

#[derive(Args)]
struct EngineArgs {
    /// Enumeration shards.
    #[arg(long, default_value_t = 1)]
    shards: usize,
    /// Worker threads (default: FKF_THREADS or 1).
    #[arg(long)]
    threads: Option<usize>,
    /// Refuse exact enumeration beyond this many edges.
    #[arg(long, default_value_t = fkf_core::engines::MAX_ENUM_EDGES)]
    max_edges: usize,
}

impl EngineArgs {
    fn resolve(&self) -> EnumOpts {
        let threads = self.threads.unwrap_or_else(|| {
            std::env::var("FKF_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
                .unwrap_or(1)
        });
        EnumOpts {
            shards: self.shards,
            threads,
            max_edges: self.max_edges,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build a domain and print its entity counts (and adjacency with --dump).
    Domain {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        dump: bool,
        #[arg(long)]
        json: bool,
    },
    /// Extract the corner loops of a configuration.
    Loops {
        #[command(flatten)]
        domain: DomainArgs,
        /// Hex bitmask over edges, bit i = edge i of the domain order.
        #[arg(long)]
        config: String,
        #[arg(long)]
        json: bool,
    },
    /// Winding and winding phase between two co-looped corners.
    Winding {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        config: String,
        /// Corner spec "x,y,Q" with Q in NE|NW|SW|SE.
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long)]
        json: bool,
    },
    /// The 2n-point fermionic observable, exact or Monte Carlo.
    Fermion {
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        engine: EngineArgs,
        /// Semicolon-separated corner specs "x,y,Q;x,y,Q;...".
        #[arg(long)]
        corners: String,
        /// Exact enumeration (default).
        #[arg(long, conflicts_with = "mc")]
        exact: bool,
        /// Monte Carlo estimate along the Edwards-Sokal chain.
        #[arg(long)]
        mc: bool,
        #[arg(long, default_value_t = 100_000)]
        sweeps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Accept an odd number of insertion points (value is exactly zero).
        #[arg(long)]
        allow_odd: bool,
        #[arg(long)]
        json: bool,
    },
    /// Run a named verification suite.
    Verify {
        /// One of: lemma-loop, winding, equivalence, sholo, residue,
        /// pfaffian, exploration, coupling.
        suite: String,
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long, default_value_t = 1_000_000)]
        sweeps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Sweep a parameter and emit CSV rows (param, Re f, Im f, stderr).
    Table {
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        engine: EngineArgs,
        /// Sweep variable: p or separation.
        #[arg(long, default_value = "p")]
        sweep: String,
        /// Two corners "x,y,Q;x,y,Q" (separation sweeps move the second).
        #[arg(long)]
        corners: String,
        #[arg(long, default_value_t = 0.05)]
        from: f64,
        #[arg(long, default_value_t = 0.95)]
        to: f64,
        #[arg(long, default_value_t = 11)]
        points: usize,
        #[arg(long)]
        json: bool,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                FkError::EnumerationCap { .. } | FkError::SpinCap { .. } => 3,
                _ => 2,
            }
        }
    };
    std::process::exit(code);
}

fn build(domain: &DomainArgs) -> Result<Arc<LatticeDomain>, FkError> {
    Ok(Arc::new(build_domain(domain.width, domain.height)?))
}

fn parse_corner_list(d: &LatticeDomain, spec: &str) -> Result<Vec<usize>, FkError> {
    spec.split(';').map(|s| d.parse_corner(s.trim())).collect()
}

fn observable_row(name: &str, v: &ObservableValue) -> ResultRow {
    ResultRow {
        name: name.into(),
        value_re: Some(v.value.re),
        value_im: Some(v.value.im),
        stderr: Some(v.stderr),
        n_samples: Some(v.n_samples),
        mode: Some(v.mode.name()),
        ..Default::default()
    }
}

fn emit(report: &RunReport, json: bool) {
    if json {
        print!("{}", report.to_json());
    } else {
        for r in &report.results {
            let mut line = format!("{:32}", r.name);
            if let (Some(re), Some(im)) = (r.value_re, r.value_im) {
                line.push_str(&format!(" {re:+.12e} {im:+.12e}i"));
            } else if let Some(re) = r.value_re {
                line.push_str(&format!(" {re:+.12e}"));
            }
            if let Some(se) = r.stderr {
                if se > 0.0 {
                    line.push_str(&format!(" (stderr {se:.3e})"));
                }
            }
            if let Some(res) = r.residual {
                line.push_str(&format!(" residual {res:.3e}"));
            }
            if let Some(tol) = r.tolerance {
                line.push_str(&format!(" tol {tol:.1e}"));
            }
            if let Some(p) = r.pass {
                line.push_str(if p { "  PASS" } else { "  FAIL" });
            }
            println!("{line}");
        }
        println!(
            "overall: {}",
            if report.overall_pass() {
                "PASS"
            } else {
                "FAIL"
            }
        );
    }
}

fn run(cli: Cli) -> Result<i32, FkError> {
    match cli.command {
        Command::Domain { domain, dump, json } => {
            let d = build(&domain)?;
            if json || dump {
                let mut root = std::collections::BTreeMap::new();
                root.insert("width".into(), JVal::Int(d.width() as i64));
                root.insert("height".into(), JVal::Int(d.height() as i64));
                root.insert("vertices".into(), JVal::Int(d.vertex_count() as i64));
                root.insert("edges".into(), JVal::Int(d.edge_count() as i64));
                root.insert("corners".into(), JVal::Int(d.corner_count() as i64));
                root.insert("mid_edges".into(), JVal::Int(d.mid_edges().len() as i64));
                root.insert(
                    "dual_vertices_interior".into(),
                    JVal::Int(d.interior_face_count() as i64),
                );
                root.insert(
                    "dual_vertices_ring".into(),
                    JVal::Int(d.ring_face_count() as i64),
                );
                if dump {
                    let corners: Vec<JVal> = d
                        .corners()
                        .iter()
                        .map(|c| {
                            let mut m = std::collections::BTreeMap::new();
                            m.insert("id".into(), JVal::Int(c.id as i64));
                            m.insert("spec".into(), JVal::Str(d.corner_spec(c.id).unwrap()));
                            m.insert("vertex".into(), JVal::Int(c.u as i64));
                            m.insert("dual".into(), JVal::Int(c.w as i64));
                            m.insert(
                                "orientation_eighth".into(),
                                JVal::Int(c.orientation_eighth as i64),
                            );
                            m.insert(
                                "boundary".into(),
                                JVal::Bool(d.is_boundary_corner(c.id).unwrap()),
                            );
                            JVal::Obj(m)
                        })
                        .collect();
                    root.insert("corner_table".into(), JVal::Arr(corners));
                    let mids: Vec<JVal> = d
                        .mid_edges()
                        .iter()
                        .map(|m| {
                            let mut mm = std::collections::BTreeMap::new();
                            mm.insert("edge".into(), JVal::Int(m.edge as i64));
                            mm.insert("corner_nw".into(), JVal::Int(m.corner_nw as i64));
                            mm.insert("corner_ne".into(), JVal::Int(m.corner_ne as i64));
                            mm.insert("corner_se".into(), JVal::Int(m.corner_se as i64));
                            mm.insert("corner_sw".into(), JVal::Int(m.corner_sw as i64));
                            JVal::Obj(mm)
                        })
                        .collect();
                    root.insert("mid_edge_table".into(), JVal::Arr(mids));
                }
                let mut out = String::new();
                JVal::Obj(root).write(&mut out, 0);
                println!("{out}");
            } else {
                println!(
                    "{}x{}: {} vertices, {} edges, {} corners, {} mid-edges, {} + {} dual vertices",
                    d.width(),
                    d.height(),
                    d.vertex_count(),
                    d.edge_count(),
                    d.corner_count(),
                    d.mid_edges().len(),
                    d.interior_face_count(),
                    d.ring_face_count()
                );
            }
            Ok(0)
        }
        Command::Loops {
            domain,
            config,
            json,
        } => {
            let d = build(&domain)?;
            let cfg = FkConfig::from_hex(Arc::clone(&d), &config)?;
            let loops = cfg.extract_loops();
            if json {
                let arr: Vec<JVal> = loops
                    .loops()
                    .iter()
                    .map(|l| JVal::Arr(l.iter().map(|&c| JVal::Int(c as i64)).collect()))
                    .collect();
                let mut root = std::collections::BTreeMap::new();
                root.insert("config".into(), JVal::Str(cfg.to_hex()));
                root.insert("loop_count".into(), JVal::Int(loops.len() as i64));
                root.insert("loops".into(), JVal::Arr(arr));
                let mut out = String::new();
                JVal::Obj(root).write(&mut out, 0);
                println!("{out}");
            } else {
                println!("{} loops", loops.len());
                for (i, l) in loops.loops().iter().enumerate() {
                    let specs: Vec<String> = l.iter().map(|&c| d.corner_spec(c).unwrap()).collect();
                    println!("loop {i}: {}", specs.join(" -> "));
                }
            }
            Ok(0)
        }
        Command::Winding {
            domain,
            config,
            from,
            to,
            json,
        } => {
            let d = build(&domain)?;
            let cfg = FkConfig::from_hex(Arc::clone(&d), &config)?;
            let loops = cfg.extract_loops();
            let c1 = d.parse_corner(&from)?;
            let c2 = d.parse_corner(&to)?;
            let q = path_winding(&loops, c1, c2)?;
            let phi = winding_phase(&loops, c1, c2)?;
            if json {
                let mut root = std::collections::BTreeMap::new();
                root.insert("quarter_turns".into(), JVal::Int(q.0));
                root.insert("winding_radians".into(), JVal::Float(q.radians()));
                root.insert("phase".into(), JVal::Int(phi as i64));
                let mut out = String::new();
                JVal::Obj(root).write(&mut out, 0);
                println!("{out}");
            } else {
                println!(
                    "w = {} quarter turns ({:.6} rad), phi = {phi:+}",
                    q.0,
                    q.radians()
                );
            }
            Ok(0)
        }
        Command::Fermion {
            domain,
            params,
            engine,
            corners,
            exact: _,
            mc,
            sweeps,
            seed,
            allow_odd,
            json,
        } => {
            let start = Instant::now();
            let d = build(&domain)?;
            let p = params.resolve()?;
            let corner_ids = parse_corner_list(&d, &corners)?;
            if corner_ids.len() % 2 == 1 && !allow_odd {
                eprintln!(
                    "error: odd number of insertion points ({}); pass --allow-odd to accept \
                     the identically-zero observable",
                    corner_ids.len()
                );
                return Ok(2);
            }
            let ins = InsertionSet::new(&d, corner_ids)?;
            let value = if mc {
                fermion_mc(&d, &p, &ins, sweeps, seed)?
            } else {
                fermion_exact(&d, &p, &ins, &engine.resolve())?
            };
            let mut row = observable_row("fermion", &value);
            row.pass = None;
            let report = RunReport {
                command: format!("fkf fermion --corners {corners}"),
                width: d.width(),
                height: d.height(),
                p: p.p,
                beta: p.beta,
                t: p.t,
                seed: mc.then_some(seed),
                results: vec![row],
                wall_ms: start.elapsed().as_millis(),
            };
            emit(&report, json);
            Ok(0)
        }
        Command::Verify {
            suite,
            domain,
            params,
            engine,
            sweeps,
            seed,
            json,
        } => {
            if !suites::SUITES.contains(&suite.as_str()) {
                eprintln!(
                    "error: unknown suite {suite:?}; expected one of {}",
                    suites::SUITES.join(", ")
                );
                return Ok(2);
            }
            let start = Instant::now();
            let d = build(&domain)?;
            let p = params.resolve()?;
            let ctx = suites::SuiteCtx {
                domain: Arc::clone(&d),
                params: p,
                opts: engine.resolve(),
                sweeps,
                seed,
            };
            let results = suites::run_suite(&suite, &ctx)?;
            let report = RunReport {
                command: format!("fkf verify {suite}"),
                width: d.width(),
                height: d.height(),
                p: p.p,
                beta: p.beta,
                t: p.t,
                seed: Some(seed),
                results,
                wall_ms: start.elapsed().as_millis(),
            };
            emit(&report, json);
            Ok(if report.overall_pass() { 0 } else { 1 })
        }
        Command::Table {
            domain,
            engine,
            sweep,
            corners,
            from,
            to,
            points,
            json,
        } => {
            let start = Instant::now();
            if points == 0 {
                eprintln!("error: empty sweep");
                return Ok(2);
            }
            let d = build(&domain)?;
            let opts = engine.resolve();
            let corner_ids = parse_corner_list(&d, &corners)?;
            if corner_ids.len() != 2 {
                eprintln!("error: table sweeps need exactly two corners");
                return Ok(2);
            }
            let mut rows = Vec::new();
            match sweep.as_str() {
                "p" => {
                    for i in 0..points {
                        let x = if points == 1 {
                            from
                        } else {
                            from + (to - from) * i as f64 / (points - 1) as f64
                        };
                        let p = ModelParams::from_p(x)?;
                        let ins = InsertionSet::new(&d, corner_ids.clone())?;
                        let v = fermion_exact(&d, &p, &ins, &opts)?;
                        let mut row = observable_row(&format!("p={x:.6}"), &v);
                        row.residual = Some(x);
                        rows.push(row);
                    }
                }
                "separation" => {
                    // move the second corner along the row of the first
                    let base = d.corner(corner_ids[0])?;
                    let quadrant = d.corner(corner_ids[1])?.quadrant;
                    let (x0, y0) = d.vertex_xy(base.u);
                    let p = ModelParams::critical();
                    for dx in 1..d.width() as i64 - x0 {
                        let c2 = d.corner_by_spec(x0 + dx, y0, quadrant)?;
                        if c2 == corner_ids[0] {
                            continue;
                        }
                        let ins = InsertionSet::new(&d, vec![corner_ids[0], c2])?;
                        let v = fermion_exact(&d, &p, &ins, &opts)?;
                        let mut row = observable_row(&format!("separation={dx}"), &v);
                        row.residual = Some(dx as f64);
                        rows.push(row);
                    }
                }
                other => {
                    eprintln!("error: unknown sweep variable {other:?}");
                    return Ok(2);
                }
            }
            let report = RunReport {
                command: format!("fkf table --sweep {sweep}"),
                width: d.width(),
                height: d.height(),
                p: f64::NAN,
                beta: f64::NAN,
                t: f64::NAN,
                seed: None,
                results: rows,
                wall_ms: start.elapsed().as_millis(),
            };
            if json {
                print!("{}", report.to_json());
            } else {
                print!("{}", report.to_csv());
            }
            Ok(0)
        }
    }
}
