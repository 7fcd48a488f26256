use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use packing_forge::audit::{
    alpha_targets, audit_convexity, audit_extension, audit_global, audit_global_rigidity, audit_jacobian_lemmas,
    audit_triangle_lemmas, sample_rng, AuditReport, RigidityTarget,
};
use packing_forge::complex::{Geometry, PackingMetric, WeightedComplex};
use packing_forge::curvature::{alpha_curvature, curvature, face_areas, global_jacobian, CurvatureVector};
use packing_forge::document::{
    import_obj, load_document, save_result, AlphaBlock, LoadedDocument, ResultDocument, SolverDiagnostics,
    SCHEMA_VERSION,
};
use packing_forge::fixtures;
use packing_forge::kernel;
use packing_forge::linalg::symmetric_eigen;
use packing_forge::solver::{solve, Method, SolveConfig, SolveOutcome};
use serde_json::json;

const EXIT_INPUT: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_AUDIT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "packing-forge",
    version,
    about = "Inversive distance circle packings on closed surfaces"
)]
struct Cli {
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Newton,
    Flow,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Suite {
    Triangle,
    Jacobian,
    Global,
    Rigidity,
    Extension,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeometryArg {
    Euclidean,
    Hyperbolic,
}

impl From<GeometryArg> for Geometry {
    fn from(g: GeometryArg) -> Self {
        match g {
            GeometryArg::Euclidean => Geometry::Euclidean,
            GeometryArg::Hyperbolic => Geometry::Hyperbolic,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a document and report topology and the weight condition.
    Validate { input: PathBuf },
    /// Extended inner angles of every face.
    Angles { input: PathBuf },
    /// Per-vertex curvature, or alpha-curvature with --alpha.
    Curvature {
        input: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Nonzero entries of the curvature Jacobian.
    Jacobian {
        input: PathBuf,
        #[arg(long)]
        spectrum: bool,
    },
    /// Solve for the document's target curvature.
    Solve {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value = "newton")]
        method: MethodArg,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        /// Seed for the random start used when the document has no radii.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the explicit Ricci flow toward the document's target.
    Flow {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1e-2)]
        step: f64,
        #[arg(long, default_value_t = 1_000_000)]
        steps: usize,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Randomized property audits on a document or named fixture
    /// (tetrahedron, octahedron, torus, genus2; default: all of them).
    Audit {
        input: Option<String>,
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        /// Triangle and Jacobian samples; global audits use at most 100 metrics.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
    },
    /// Convert a triangle mesh in OBJ format into a packing document.
    ImportObj {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long = "default-I", default_value_t = 1.0)]
        default_i: f64,
        #[arg(long, value_enum, default_value = "euclidean")]
        geometry: GeometryArg,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn input_error(message: impl ToString) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.to_string(),
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Validate { input } => validate(cli, input),
        Command::Angles { input } => angles(cli, input),
        Command::Curvature { input, alpha } => curvature_cmd(cli, input, *alpha),
        Command::Jacobian { input, spectrum } => jacobian(cli, input, *spectrum),
        Command::Solve {
            input,
            output,
            method,
            tol,
            max_iters,
            seed,
        } => {
            let mut cfg = match method {
                MethodArg::Newton => SolveConfig::newton(),
                MethodArg::Flow => SolveConfig::flow(),
            };
            if let Some(t) = tol {
                cfg.grad_tol = *t;
            }
            if let Some(m) = max_iters {
                cfg.max_iters = *m;
            }
            solve_cmd(cli, input, output, cfg, *seed, "solve")
        }
        Command::Flow {
            input,
            output,
            step,
            steps,
            tol,
            seed,
        } => {
            let mut cfg = SolveConfig::flow();
            cfg.flow_step = *step;
            cfg.max_iters = *steps;
            if let Some(t) = tol {
                cfg.grad_tol = *t;
            }
            solve_cmd(cli, input, output, cfg, *seed, "flow")
        }
        Command::Audit {
            input,
            suite,
            samples,
            seed,
            restarts,
        } => audit(cli, input.as_deref(), *suite, *samples, *seed, *restarts),
        Command::ImportObj {
            input,
            output,
            default_i,
            geometry,
        } => import(input, output.as_deref(), *default_i, (*geometry).into()),
    }
}

fn load(path: &Path) -> Result<LoadedDocument, Failure> {
    load_document(path).map_err(input_error)
}

fn require_metric(doc: &LoadedDocument) -> Result<PackingMetric<f64>, Failure> {
    doc.metric
        .clone()
        .ok_or_else(|| input_error("the document has no radii"))
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json output"));
}

fn validate(cli: &Cli, input: &Path) -> Outcome {
    let doc = load(input)?;
    let c = &doc.complex;
    let report = c.validate_weight_condition();
    let failing: Vec<_> = report
        .failing()
        .map(|f| json!({ "face": f.face, "gammas": f.gammas }))
        .collect();
    let admissible = doc.metric.as_ref().map(|m| {
        (0..c.faces().len())
            .filter(|&f| {
                let r = c.faces()[f].map(|v| m.radii()[v]);
                !kernel::admissibility(m.geometry(), r, &c.face_weights(f)).admissible
            })
            .collect::<Vec<_>>()
    });
    if cli.json {
        print_json(&json!({
            "input_sha256": doc.sha256,
            "geometry": doc.document.geometry,
            "vertices": c.vertex_count(),
            "edges": c.edges().len(),
            "faces": c.faces().len(),
            "euler_characteristic": c.euler_characteristic(),
            "weight_condition": { "passes": report.passes(), "failing": failing },
            "inadmissible_faces": admissible,
        }));
    } else {
        println!("geometry  {}", doc.document.geometry);
        println!("vertices  {}", c.vertex_count());
        println!("edges     {}", c.edges().len());
        println!("faces     {}", c.faces().len());
        println!("chi={}", c.euler_characteristic());
        if report.passes() {
            println!("all gamma >= 0");
        } else {
            for f in report.failing() {
                println!("face {} violates gamma >= 0: gammas {:?}", f.face, f.gammas);
            }
        }
        match &admissible {
            Some(bad) if bad.is_empty() => println!("radii admissible on every face"),
            Some(bad) => println!("radii inadmissible on faces {bad:?}"),
            None => println!("no radii"),
        }
    }
    if report.passes() {
        Ok(())
    } else {
        Err(input_error(format!("{} faces violate gamma >= 0", failing.len())))
    }
}

fn angles(cli: &Cli, input: &Path) -> Outcome {
    let doc = load(input)?;
    let m = require_metric(&doc)?;
    let c = &doc.complex;
    let g = m.geometry();
    let mut rows = Vec::new();
    for f in 0..c.faces().len() {
        let r = c.faces()[f].map(|v| m.radii()[v]);
        let w = c.face_weights(f);
        let fa = kernel::extended_angles(g, r, &w, f).map_err(input_error)?;
        rows.push((f, c.faces()[f], fa.admissible, fa.angles));
    }
    if cli.json {
        let faces: Vec<_> = rows
            .iter()
            .map(|(f, v, a, t)| json!({ "face": f, "vertices": v, "admissible": a, "angles": t }))
            .collect();
        print_json(&json!({ "input_sha256": doc.sha256, "geometry": g, "faces": faces }));
    } else {
        println!(
            "{:>6} {:>18} {:>5} {:>20} {:>20} {:>20}",
            "face", "vertices", "adm", "theta_0", "theta_1", "theta_2"
        );
        for (f, v, a, t) in rows {
            println!(
                "{f:>6} {:>18} {:>5} {:>20.15} {:>20.15} {:>20.15}",
                format!("{v:?}"),
                if a { "yes" } else { "no" },
                t[0],
                t[1],
                t[2]
            );
        }
    }
    Ok(())
}

fn gauss_bonnet_residual(c: &WeightedComplex<f64>, m: &PackingMetric<f64>, k: &CurvatureVector<f64>) -> f64 {
    let chi = 2.0 * PI * c.euler_characteristic() as f64;
    match m.geometry() {
        Geometry::Euclidean => (k.total() - chi).abs(),
        Geometry::Hyperbolic => {
            let area: f64 = face_areas(c, m).map(|a| a.iter().sum()).unwrap_or(f64::NAN);
            (k.total() - chi - area).abs()
        }
    }
}

fn curvature_cmd(cli: &Cli, input: &Path, alpha: Option<f64>) -> Outcome {
    let doc = load(input)?;
    let m = require_metric(&doc)?;
    let c = &doc.complex;
    let use_ext = c.validate_weight_condition().passes();
    let k = curvature(c, &m, use_ext).map_err(input_error)?;
    let gb = gauss_bonnet_residual(c, &m, &k);
    let alpha_block = match alpha {
        Some(a) => {
            let r = alpha_curvature(c, &m, a).map_err(input_error)?;
            Some(AlphaBlock {
                alpha: a,
                values: r.values,
                s: r.s,
            })
        }
        None => None,
    };
    if cli.json {
        print_json(&json!({
            "input_sha256": doc.sha256,
            "geometry": m.geometry(),
            "curvatures": k.values,
            "extended_faces": k.extended_faces,
            "gauss_bonnet_residual": gb,
            "alpha": alpha_block,
        }));
    } else {
        match &alpha_block {
            Some(b) => {
                println!("{:>8} {:>24} {:>24}", "vertex", "K", format!("R (alpha={})", b.alpha));
                for (i, (ki, ri)) in k.values.iter().zip(&b.values).enumerate() {
                    println!("{i:>8} {ki:>24.17} {ri:>24.17}");
                }
            }
            None => {
                println!("{:>8} {:>24}", "vertex", "K");
                for (i, ki) in k.values.iter().enumerate() {
                    println!("{i:>8} {ki:>24.17}");
                }
            }
        }
        if !k.extended_faces.is_empty() {
            println!("extended faces: {:?}", k.extended_faces);
        }
        let bound = match m.geometry() {
            Geometry::Euclidean => 1e-10,
            Geometry::Hyperbolic => 1e-9,
        };
        if gb < bound {
            println!("Gauss-Bonnet residual < {bound:.0e} ({gb:.3e})");
        } else {
            println!("Gauss-Bonnet residual {gb:.3e}");
        }
    }
    Ok(())
}

fn jacobian(cli: &Cli, input: &Path, spectrum: bool) -> Outcome {
    let doc = load(input)?;
    let m = require_metric(&doc)?;
    let j = global_jacobian(&doc.complex, &m).map_err(input_error)?;
    let entries: Vec<(usize, usize, f64)> = j.matrix.entries().collect();
    let eig = (spectrum && j.matrix.dim() <= 2000).then(|| symmetric_eigen(&j.matrix.to_dense()).values);
    if spectrum && eig.is_none() {
        return Err(input_error("spectra are only computed for at most 2000 vertices"));
    }
    if cli.json {
        print_json(&json!({
            "input_sha256": doc.sha256,
            "dimension": j.matrix.dim(),
            "extended_faces": j.extended_faces,
            "entries": entries,
            "spectrum": eig,
        }));
    } else {
        println!("{:>6} {:>6} {:>24}", "i", "j", "value");
        for (i, k, v) in &entries {
            println!("{i:>6} {k:>6} {v:>24.17}");
        }
        if let Some(e) = eig {
            println!("eigenvalues:");
            for v in e {
                println!("  {v:.17e}");
            }
        }
    }
    Ok(())
}

fn diagnostics(out: &SolveOutcome<f64>, method: Method) -> SolverDiagnostics {
    SolverDiagnostics {
        method: match method {
            Method::Newton => "newton".into(),
            Method::Flow => "flow".into(),
        },
        status: out.status.as_str().into(),
        gauge: format!("{:?}", out.gauge),
        iterations: out.iterations,
        residual: out.residual(),
        residual_history: out.residual_history.clone(),
        extended_faces: out.extended_faces_at_end.clone(),
        message: out.message.clone(),
    }
}

fn solve_cmd(cli: &Cli, input: &Path, output: &Path, cfg: SolveConfig<f64>, seed: u64, command: &str) -> Outcome {
    let doc = load(input)?;
    let target = doc
        .target
        .clone()
        .ok_or_else(|| input_error("the document has no target"))?;
    let c = &doc.complex;
    c.require_weight_condition().map_err(input_error)?;
    let g = doc.document.geometry;
    let start = match &doc.metric {
        Some(m) => m.clone(),
        None => {
            let mut rng = sample_rng(seed, 0);
            fixtures::random_admissible_metric(c, g, &mut rng)
                .ok_or_else(|| input_error("no admissible starting metric found; supply radii"))?
        }
    };
    let out = solve(c, target.clone(), &start, &cfg).map_err(input_error)?;
    let k = curvature(c, &out.metric, true).map_err(input_error)?;
    let alpha = match &target {
        packing_forge::CurvatureTarget::Alpha { alpha, .. } => {
            let r = alpha_curvature(c, &out.metric, *alpha).map_err(input_error)?;
            Some(AlphaBlock {
                alpha: *alpha,
                values: r.values,
                s: r.s,
            })
        }
        _ => None,
    };
    let mut packing = doc.document.clone();
    packing.radii = Some(out.metric.radii().to_vec());
    let result = ResultDocument {
        schema_version: SCHEMA_VERSION.into(),
        command: command.into(),
        input_sha256: doc.sha256.clone(),
        seed: doc.metric.is_none().then_some(seed),
        radii: out.metric.radii().to_vec(),
        u: out.u.clone(),
        curvatures: k.values.clone(),
        alpha,
        solver: Some(diagnostics(&out, cfg.method)),
        audit: None,
        packing,
    };
    save_result(output, &result).map_err(|e| input_error(format!("cannot write {}: {e}", output.display())))?;
    if cli.json {
        print!("{}", result.to_json());
    } else {
        println!("status      {}", out.status.as_str());
        println!("iterations  {}", out.iterations);
        println!("residual    {:.3e}", out.residual());
        println!("gauge       {:?}", out.gauge);
        if let Some(msg) = &out.message {
            println!("message     {msg}");
        }
        println!("written     {}", output.display());
    }
    if out.converged() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_SOLVER,
            message: format!("solver did not converge: {}", out.status.as_str()),
        })
    }
}

/// A named complex and the geometries to audit it in.
type AuditTarget = (String, WeightedComplex<f64>, Vec<Geometry>);

fn audit_targets(input: Option<&str>) -> Result<Vec<AuditTarget>, Failure> {
    let both = vec![Geometry::Euclidean, Geometry::Hyperbolic];
    match input {
        None => Ok(fixtures::FIXTURE_NAMES
            .iter()
            .map(|n| (n.to_string(), fixtures::by_name(n).unwrap(), both.clone()))
            .collect()),
        Some(s) => match fixtures::by_name::<f64>(s) {
            Some(c) => Ok(vec![(s.to_string(), c, both)]),
            None => {
                let doc = load(Path::new(s))?;
                doc.complex.require_weight_condition().map_err(input_error)?;
                let name = Path::new(s)
                    .file_stem()
                    .map_or_else(|| s.to_string(), |f| f.to_string_lossy().into_owned());
                Ok(vec![(name, doc.complex, vec![doc.document.geometry])])
            }
        },
    }
}

fn audit(cli: &Cli, input: Option<&str>, suite: Suite, samples: usize, seed: u64, restarts: usize) -> Outcome {
    let targets = audit_targets(input)?;
    let geometries: Vec<Geometry> = {
        let mut g: Vec<Geometry> = targets.iter().flat_map(|t| t.2.clone()).collect();
        g.dedup();
        g.sort_by_key(|g| *g == Geometry::Hyperbolic);
        g.dedup();
        g
    };
    let wants = |s: Suite| suite == s || (suite == Suite::All && s != Suite::Extension);
    let mut report = AuditReport::new(
        match suite {
            Suite::Triangle => "triangle",
            Suite::Jacobian => "jacobian",
            Suite::Global => "global",
            Suite::Rigidity => "rigidity",
            Suite::Extension => "extension",
            Suite::All => "all",
        },
        seed,
    );
    if wants(Suite::Triangle) {
        for &g in &geometries {
            report.merge(audit_triangle_lemmas(g, samples, seed));
        }
    }
    if wants(Suite::Jacobian) {
        for &g in &geometries {
            report.merge(audit_jacobian_lemmas(g, samples, seed));
        }
    }
    if wants(Suite::Global) {
        for (name, c, gs) in &targets {
            for &g in gs {
                report.merge(audit_global(c, name, g, samples.clamp(1, 100), seed));
                report.merge(audit_convexity(c, name, g, samples.clamp(1, 25), seed));
            }
        }
    }
    if wants(Suite::Rigidity) {
        for (name, c, gs) in &targets {
            for &g in gs {
                report.merge(audit_global_rigidity(
                    c,
                    name,
                    g,
                    RigidityTarget::Curvature,
                    restarts,
                    seed,
                ));
                for t in alpha_targets(c, g) {
                    report.merge(audit_global_rigidity(c, name, g, t, restarts, seed));
                }
            }
        }
    }
    if suite == Suite::Extension {
        for &g in &geometries {
            report.merge(audit_extension(g, samples.clamp(1, 10_000), seed));
        }
    }
    if cli.json {
        print_json(&serde_json::to_value(&report).expect("report serializes"));
    } else {
        println!("suite {} seed {}", report.suite, report.seed);
        if !report.fixtures.is_empty() {
            println!("fixtures {}", report.fixtures.join(", "));
        }
        println!(
            "{:<4} {:<56} {:>9} {:>13} {:>10}",
            "", "check", "samples", "worst", "tolerance"
        );
        for c in &report.checks {
            println!(
                "{:<4} {:<56} {:>9} {:>13.4e} {:>10.0e}",
                if c.pass { "ok" } else { "FAIL" },
                c.name,
                c.samples,
                c.worst_residual,
                c.tolerance
            );
        }
        for n in &report.notes {
            println!("note: {n}");
        }
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_AUDIT,
            message: format!("{} audit checks failed", report.failures().count()),
        })
    }
}

fn import(input: &Path, output: Option<&Path>, default_i: f64, geometry: Geometry) -> Outcome {
    let text =
        std::fs::read_to_string(input).map_err(|e| input_error(format!("cannot read {}: {e}", input.display())))?;
    let doc = import_obj(&text, geometry, default_i).map_err(input_error)?;
    match output {
        Some(p) => {
            std::fs::write(p, doc.to_json()).map_err(|e| input_error(format!("cannot write {}: {e}", p.display())))
        }
        None => {
            print!("{}", doc.to_json());
            Ok(())
        }
    }
}
