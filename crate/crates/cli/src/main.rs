use std::io::Write;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use semigroupoid::caratheodory::{
    build_compressed_matrix, feasibility, toeplitz_level_matrices, word_label, FEASIBILITY_TOL,
};
use semigroupoid::distance::{dist_to_ideal, dist_trend, techlemma_estimate, BlockOperator, EstimateConfig};
use semigroupoid::fock::{cesaro, convention_self_test, fourier_coeffs, FockSpace, SymbolicOperator, DEFAULT_DIM_CAP};
use semigroupoid::functionals::{realize_vector_functional, FiniteRankFunctional};
use semigroupoid::graph::{isomorphic, DirectedGraph, DoubleCycleMode};
use semigroupoid::ideals::{
    commutator_ideal_range, factor_through_wandering, mu_from_generators, wandering_of_range, IdealHandle, IdealSide,
    IDEAL_TOL,
};
use semigroupoid::io::{
    complex_doc, vector_doc, AnyOperatorDoc, FunctionalDoc, IdealDoc, Loader, MatrixDoc, OperatorDoc, PathDoc,
    ProblemDoc, TupleDoc,
};
use semigroupoid::linalg::{c64, CVec, OrthoBuilder};
use semigroupoid::semigroupoid::Path;
use semigroupoid::wold::{build_intertwiner, check_dagger, decompose};
use semigroupoid::{Error, Result};

#[derive(Parser)]
#[command(
    name = "semigroupoid",
    version,
    about = "Finite-section computations for free semigroupoid algebras"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Global {
    /// Truncation depth K.
    #[arg(long, global = true, default_value_t = 4)]
    depth: usize,
    /// Interior margin m: identities are asserted on H_{K-m}.
    #[arg(long, global = true, default_value_t = 1)]
    margin: usize,
    /// Tolerance override; each command otherwise uses its own default.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Graph predicates.
    Graph {
        #[command(subcommand)]
        cmd: GraphCmd,
    },
    /// Truncated Fock spaces.
    Fock {
        #[command(subcommand)]
        cmd: FockCmd,
    },
    /// Operators given by Fourier series.
    Op {
        #[command(subcommand)]
        cmd: OpCmd,
    },
    /// Partial-isometry tuples.
    Wold {
        #[command(subcommand)]
        cmd: WoldCmd,
    },
    /// Weak-* continuous functionals.
    Functional {
        #[command(subcommand)]
        cmd: FunctionalCmd,
    },
    /// Ideals and their ranges.
    Ideal {
        #[command(subcommand)]
        cmd: IdealCmd,
    },
    /// Distance from a (block) operator to an ideal.
    Dist {
        #[arg(long)]
        op: PathBuf,
        #[arg(long)]
        ideal: PathBuf,
        /// `r,samples,seed` for the sampled lower bound.
        #[arg(long)]
        estimate: Option<String>,
    },
    /// Carathéodory interpolation.
    Cara {
        #[command(subcommand)]
        cmd: CaraCmd,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Strict,
    Relaxed,
}

#[derive(Subcommand)]
enum GraphCmd {
    Classify {
        graph: String,
        #[arg(long, value_enum, default_value_t = Mode::Strict)]
        mode: Mode,
    },
}

#[derive(Subcommand)]
enum FockCmd {
    Build { graph: String },
}

#[derive(Args)]
struct OpArgs {
    #[arg(long)]
    op: PathBuf,
}

#[derive(Subcommand)]
enum OpCmd {
    Norm(OpArgs),
    Fourier(OpArgs),
    Cesaro {
        #[command(flatten)]
        op: OpArgs,
        #[arg(long)]
        k: usize,
    },
}

#[derive(Subcommand)]
enum WoldCmd {
    Check {
        #[arg(long)]
        tuple: PathBuf,
    },
    Decompose {
        #[arg(long)]
        tuple: PathBuf,
        /// Graph the recovered graph is compared with.
        #[arg(long)]
        expect: Option<String>,
    },
    /// Emits the creation-operator tuple of a graph as a tuple document.
    Tuple { graph: String },
}

#[derive(Subcommand)]
enum FunctionalCmd {
    Realize {
        graph: String,
        #[arg(long)]
        functional: PathBuf,
    },
}

#[derive(Subcommand)]
enum IdealCmd {
    Range {
        #[arg(long)]
        ideal: PathBuf,
    },
    Member {
        #[arg(long)]
        ideal: PathBuf,
        #[arg(long)]
        op: PathBuf,
    },
    Commutator {
        graph: String,
    },
    Factor {
        #[arg(long)]
        ideal: PathBuf,
        #[arg(long)]
        op: PathBuf,
    },
}

#[derive(Subcommand)]
enum CaraCmd {
    Check {
        #[arg(long)]
        problem: PathBuf,
    },
    Matrix {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        symbolic: bool,
    },
    Levels {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        level: usize,
    },
}

/// Everything that goes into the input digest.
struct Ctx {
    global: Global,
    hasher: Sha256,
    warnings: Vec<String>,
    tolerances: serde_json::Map<String, Value>,
}

impl Ctx {
    /// The `--tol` override or `default`, recorded in the report under `name`.
    fn tol(&mut self, name: &str, default: f64) -> f64 {
        let t = self.global.tol.unwrap_or(default);
        self.tolerances.insert(name.to_string(), json!(t));
        t
    }

    fn fixed_tol(&mut self, name: &str, t: f64) {
        self.tolerances.insert(name.to_string(), json!(t));
    }

    fn read(&mut self, file: &FsPath) -> Result<String> {
        let text = std::fs::read_to_string(file).map_err(|e| Error::Malformed(format!("{}: {e}", file.display())))?;
        self.hasher.update(text.as_bytes());
        self.hasher.update([0]);
        Ok(text)
    }

    fn doc<T: serde::de::DeserializeOwned>(&mut self, file: &FsPath) -> Result<(T, Loader)> {
        let text = self.read(file)?;
        let doc = serde_json::from_str(&text).map_err(|e| Error::Malformed(format!("{}: {e}", file.display())))?;
        Ok((doc, Loader::for_file(file)))
    }

    fn graph(&mut self, arg: &str) -> Result<Arc<DirectedGraph>> {
        let p = FsPath::new(arg);
        if p.is_file() {
            let text = self.read(p)?;
            return Ok(Arc::new(DirectedGraph::parse(&text)?));
        }
        Loader::graph_arg(arg)
    }

    fn space(&self, g: &Arc<DirectedGraph>) -> Result<Arc<FockSpace>> {
        FockSpace::build_with_cap(g.clone(), self.global.depth, dim_cap())
    }
}

fn dim_cap() -> usize {
    std::env::var("SEMIGROUPOID_DIM_CAP")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_DIM_CAP)
}

fn ideal_side(two_sided: bool) -> IdealSide {
    IdealSide::from_two_sided(two_sided)
}

fn path_doc(g: &DirectedGraph, p: &Path) -> Value {
    serde_json::to_value(PathDoc::of(g, p)).expect("path documents serialize")
}

fn coefficients(g: &DirectedGraph, terms: &[(Path, num_complex::Complex64)]) -> Value {
    Value::Array(
        terms
            .iter()
            .map(|(p, a)| json!({"path": path_doc(g, p), "coeff": complex_doc(*a)}))
            .collect(),
    )
}

fn load_op(ctx: &mut Ctx, file: &FsPath) -> Result<SymbolicOperator> {
    let (doc, loader): (OperatorDoc, _) = ctx.doc(file)?;
    doc.load(&loader, None)
}

fn load_ideal(ctx: &mut Ctx, file: &FsPath) -> Result<(Arc<DirectedGraph>, Vec<SymbolicOperator>, IdealSide)> {
    let (doc, loader): (IdealDoc, _) = ctx.doc(file)?;
    let (g, gens) = doc.load(&loader)?;
    Ok((g, gens, ideal_side(doc.two_sided)))
}

fn run(cmd: Command, ctx: &mut Ctx) -> Result<Value> {
    let gl = ctx.global;
    Ok(match cmd {
        Command::Graph {
            cmd: GraphCmd::Classify { graph, mode },
        } => {
            let g = ctx.graph(&graph)?;
            let mode = match mode {
                Mode::Strict => DoubleCycleMode::StrictMinimalLength,
                Mode::Relaxed => DoubleCycleMode::AnyTwoCycles,
            };
            let c = g.classify(mode)?;
            json!({"vertices": g.num_vertices(), "edges": g.num_edges(), "classification": c})
        }
        Command::Fock {
            cmd: FockCmd::Build { graph },
        } => {
            let g = ctx.graph(&graph)?;
            let s = ctx.space(&g)?;
            let levels: Vec<usize> = (0..=gl.depth)
                .map(|l| s.interior_len(l) - if l == 0 { 0 } else { s.interior_len(l - 1) })
                .collect();
            json!({
                "dim": s.dim(),
                "level_sizes": levels,
                "interior_dim": s.interior(gl.margin)?.len(),
                "convention_defect": convention_self_test(&s)?,
            })
        }
        Command::Op { cmd } => {
            let (file, k) = match &cmd {
                OpCmd::Norm(a) | OpCmd::Fourier(a) => (a.op.clone(), None),
                OpCmd::Cesaro { op, k } => (op.op.clone(), Some(*k)),
            };
            let sym = load_op(ctx, &file)?;
            let g = sym.graph().clone();
            let s = ctx.space(&g)?;
            let a = sym.at(&s)?;
            match cmd {
                OpCmd::Norm(_) => json!({
                    "norm": a.norm()?,
                    "interior_norm": a.norm_on_columns(&s.interior(gl.margin)?)?,
                    "degree": sym.degree(),
                }),
                OpCmd::Fourier(_) => json!({"coefficients": coefficients(&g, &fourier_coeffs(&a))}),
                OpCmd::Cesaro { .. } => {
                    let k = k.expect("cesaro carries k");
                    let c = cesaro(&a, k)?;
                    let cols = s.interior(gl.margin)?;
                    json!({
                        "k": k,
                        "coefficients": coefficients(&g, &fourier_coeffs(&c)),
                        "norm": c.norm()?,
                        "defect": a.sub(&c)?.norm_on_columns(&cols)?,
                    })
                }
            }
        }
        Command::Wold { cmd } => match cmd {
            WoldCmd::Check { tuple } => {
                let (doc, _): (TupleDoc, _) = ctx.doc(&tuple)?;
                let t = doc.tuple()?;
                ctx.fixed_tol("tuple", t.tol());
                json!({"dagger": check_dagger(&t)?})
            }
            WoldCmd::Decompose { tuple, expect } => {
                let (doc, _): (TupleDoc, _) = ctx.doc(&tuple)?;
                let t = doc.tuple()?;
                ctx.fixed_tol("tuple", t.tol());
                let r = decompose(&t, None)?;
                let mut out = json!({
                    "recovered_graph": r.recovered_graph.to_doc(),
                    "multiplicities": r.multiplicities(),
                    "wandering_dim": r.wandering.rank(),
                    "pure_dim": r.pure.rank(),
                    "coisometric_dim": r.coisometric.rank(),
                    "stabilized": r.stabilized,
                    "word_orthogonality_defect": r.word_orthogonality_defect,
                    "coisometric_defect": r.coisometric_defect,
                    "coisometric_invariance_defect": r.coisometric_invariance_defect,
                });
                match build_intertwiner(&r, &t) {
                    Ok(u) => {
                        out["intertwiner"] = json!({
                            "model_depth": u.depth(),
                            "orthonormality_defect": u.orthonormality_defect,
                            "intertwining_defect": u.intertwining_defect,
                            "covers_pure_part": u.covers_pure_part,
                        })
                    }
                    Err(e) => ctx.warnings.push(format!("intertwiner: {e}")),
                }
                if let Some(g) = expect {
                    let g = ctx.graph(&g)?;
                    out["isomorphic_to_expected"] = json!(isomorphic(&g, &r.recovered_graph));
                }
                out
            }
            WoldCmd::Tuple { graph } => {
                let g = ctx.graph(&graph)?;
                let s = ctx.space(&g)?;
                serde_json::to_value(TupleDoc::generators(&s, ctx.tol("tuple", 1e-8))?)?
            }
        },
        Command::Functional {
            cmd: FunctionalCmd::Realize { graph, functional },
        } => {
            let g = ctx.graph(&graph)?;
            let s = ctx.space(&g)?;
            let (doc, _): (FunctionalDoc, _) = ctx.doc(&functional)?;
            let (x, y) = doc.vectors()?;
            let phi = FiniteRankFunctional::new(x, y)?;
            let r = realize_vector_functional(&phi, &s, None, gl.margin)?;
            if r.order > 1 {
                ctx.warnings
                    .push(format!("vectors live in the ampliation of order {}", r.order));
            }
            json!({
                "realization": r,
                "xi": vector_doc(&r.xi),
                "eta": vector_doc(&r.eta),
            })
        }
        Command::Ideal { cmd } => {
            ctx.fixed_tol("ideal", IDEAL_TOL);
            match cmd {
                IdealCmd::Range { ideal } => {
                    let (g, gens, side) = load_ideal(ctx, &ideal)?;
                    let s = ctx.space(&g)?;
                    let ops = gens.iter().map(|o| o.at(&s)).collect::<Result<Vec<_>>>()?;
                    let range = mu_from_generators(&ops, side, &s, gl.margin)?;
                    let w = wandering_of_range(&s, &range.subspace)?;
                    json!({"side": side, "range": range, "wandering": w})
                }
                IdealCmd::Member { ideal, op } => {
                    let (g, gens, side) = load_ideal(ctx, &ideal)?;
                    let s = ctx.space(&g)?;
                    let a = load_op(ctx, &op)?;
                    if **a.graph() != *g {
                        return Err(Error::SpaceMismatch);
                    }
                    let j = IdealHandle::from_symbolic(&s, &gens, side, gl.margin)?;
                    json!({"membership": j.membership(&a.at(&s)?)?})
                }
                IdealCmd::Commutator { graph } => {
                    let g = ctx.graph(&graph)?;
                    let s = ctx.space(&g)?;
                    json!({"commutator": commutator_ideal_range(&s, gl.margin)?})
                }
                IdealCmd::Factor { ideal, op } => {
                    let (g, gens, side) = load_ideal(ctx, &ideal)?;
                    let s = ctx.space(&g)?;
                    let a = load_op(ctx, &op)?;
                    let ops = gens.iter().map(|o| o.at(&s)).collect::<Result<Vec<_>>>()?;
                    let range = mu_from_generators(&ops, side, &s, gl.margin)?;
                    let w = wandering_of_range(&s, &range.subspace)?;
                    let zetas = split_by_source(&s, &w.frame);
                    let f = factor_through_wandering(&a.at(&s)?, &zetas, gl.margin)?;
                    json!({
                        "wandering": w,
                        "factors": f.factors.iter().map(|x| coefficients(&g, &fourier_coeffs(x))).collect::<Vec<_>>(),
                        "reconstruction_defect": f.reconstruction_defect,
                        "commutation_defects": f.commutation_defects,
                        "normalization_defect": f.normalization_defect,
                        "membership": f.membership,
                    })
                }
            }
        }
        Command::Dist { op, ideal, estimate } => {
            ctx.fixed_tol("ideal", IDEAL_TOL);
            let (doc, loader): (AnyOperatorDoc, _) = ctx.doc(&op)?;
            let (g, blocks) = doc.load(&loader)?;
            let (jg, gens, side) = load_ideal(ctx, &ideal)?;
            if *jg != *g {
                return Err(Error::SpaceMismatch);
            }
            let s = ctx.space(&g)?;
            let a = BlockOperator::from_symbolic(&s, &blocks, gl.margin)?;
            let j = IdealHandle::from_symbolic(&s, &gens, side, gl.margin)?;
            let dist = dist_to_ideal(&a, &j.range()?.subspace, gl.margin)?;
            let mut out = json!({"n": a.n(), "dist": dist});
            if gl.depth >= 2 {
                out["trend"] = serde_json::to_value(dist_trend(&g, &blocks, &gens, side, gl.depth, gl.margin)?)?;
            }
            if let Some(spec) = estimate {
                let cfg = parse_estimate(&spec, gl.seed, gl.margin)?;
                let rep = techlemma_estimate(&a, &j, &cfg)?;
                out["estimate_within_dist"] = json!(rep.estimate <= dist + ctx.tol("estimate", 1e-8));
                out["estimate"] = serde_json::to_value(rep)?;
            }
            out
        }
        Command::Cara { cmd } => {
            let file = match &cmd {
                CaraCmd::Check { problem } | CaraCmd::Matrix { problem, .. } | CaraCmd::Levels { problem, .. } => {
                    problem.clone()
                }
            };
            let (doc, loader): (ProblemDoc, _) = ctx.doc(&file)?;
            let p = doc.load(&loader)?;
            let g = p.graph().clone();
            let labels = |ps: &[Path]| ps.iter().map(|w| word_label(&g, w)).collect::<Vec<_>>();
            match cmd {
                CaraCmd::Check { .. } => {
                    let tol = ctx.tol("feasibility", FEASIBILITY_TOL);
                    json!({"feasibility": feasibility(&p, tol)?})
                }
                CaraCmd::Matrix { symbolic, .. } => {
                    let (pat, m) = build_compressed_matrix(&p)?;
                    let mut out = json!({
                        "rows": labels(&pat.rows),
                        "cols": labels(&pat.cols),
                        "block_size": p.block_size(),
                        "nonzero_blocks": pat.nonzero_blocks(),
                    });
                    if symbolic {
                        out["pattern"] = json!(pat.render_symbolic(&g));
                    } else {
                        out["matrix"] = serde_json::to_value(MatrixDoc::of(&m))?;
                    }
                    out
                }
                CaraCmd::Levels { level, .. } => {
                    let l = toeplitz_level_matrices(&p, level)?;
                    json!({
                        "level": level,
                        "norm_a": l.norm_a,
                        "norm_b": l.norm_b,
                        "a_rows": labels(&l.a_pattern.rows),
                        "b_rows": labels(&l.b_pattern.rows),
                        "b_cols": labels(&l.b_pattern.cols),
                        "ampliation_defect": l.ampliation_defect,
                    })
                }
            }
        }
    })
}

/// Orthonormal bases of the slices `Q_k 𝓦` of a right-wandering subspace.
fn split_by_source(s: &FockSpace, w: &semigroupoid::linalg::Subspace) -> Vec<CVec> {
    let mut out = Vec::new();
    for k in 0..s.graph().num_vertices() {
        let mut b = OrthoBuilder::new(s.dim());
        for col in w.frame().column_iter() {
            let mut v = col.into_owned();
            for i in 0..s.dim() {
                if s.path(i).src() != k {
                    v[i] = c64(0.0, 0.0);
                }
            }
            b.push(&v);
        }
        out.extend(b.finish().frame().column_iter().map(|c| c.into_owned()));
    }
    out
}

fn parse_estimate(spec: &str, default_seed: u64, margin: usize) -> Result<EstimateConfig> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    let bad = || Error::Malformed(format!("--estimate expects r,samples[,seed], got `{spec}`"));
    if !(2..=3).contains(&parts.len()) {
        return Err(bad());
    }
    let r = parts[0].parse().map_err(|_| bad())?;
    let samples = parts[1].parse().map_err(|_| bad())?;
    let seed = match parts.get(2) {
        Some(s) => s.parse().map_err(|_| bad())?,
        None => default_seed,
    };
    Ok(EstimateConfig {
        r,
        samples,
        seed,
        margin: Some(margin),
        ..EstimateConfig::default()
    })
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Graph { .. } => "graph classify",
        Command::Fock { .. } => "fock build",
        Command::Op { cmd } => match cmd {
            OpCmd::Norm(_) => "op norm",
            OpCmd::Fourier(_) => "op fourier",
            OpCmd::Cesaro { .. } => "op cesaro",
        },
        Command::Wold { cmd } => match cmd {
            WoldCmd::Check { .. } => "wold check",
            WoldCmd::Decompose { .. } => "wold decompose",
            WoldCmd::Tuple { .. } => "wold tuple",
        },
        Command::Functional { .. } => "functional realize",
        Command::Ideal { cmd } => match cmd {
            IdealCmd::Range { .. } => "ideal range",
            IdealCmd::Member { .. } => "ideal member",
            IdealCmd::Commutator { .. } => "ideal commutator",
            IdealCmd::Factor { .. } => "ideal factor",
        },
        Command::Dist { .. } => "dist",
        Command::Cara { cmd } => match cmd {
            CaraCmd::Check { .. } => "cara check",
            CaraCmd::Matrix { .. } => "cara matrix",
            CaraCmd::Levels { .. } => "cara levels",
        },
    }
}

fn emit(v: &Value) {
    let text = serde_json::to_string_pretty(v).expect("values serialize");
    // A closed pipe downstream is not an error of the computation.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut hasher = Sha256::new();
    for a in std::env::args().skip(1) {
        hasher.update(a.as_bytes());
        hasher.update([0]);
    }
    let name = command_name(&cli.command);
    let raw = matches!(
        cli.command,
        Command::Wold {
            cmd: WoldCmd::Tuple { .. }
        }
    );
    let mut ctx = Ctx {
        global: cli.global,
        hasher,
        warnings: Vec::new(),
        tolerances: serde_json::Map::new(),
    };
    match run(cli.command, &mut ctx) {
        Ok(results) if raw => {
            emit(&results);
            ExitCode::SUCCESS
        }
        Ok(results) => {
            let report = json!({
                "command": name,
                "inputs_digest": hex::encode(ctx.hasher.finalize()),
                "seed": ctx.global.seed,
                "depth": ctx.global.depth,
                "margin": ctx.global.margin,
                "tolerances": ctx.tolerances,
                "results": results,
                "warnings": ctx.warnings,
            });
            emit(&report);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}
