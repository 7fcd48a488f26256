//! Randomized numerical audits of the triangle, Jacobian, global-spectrum
//! and rigidity properties. Every audit is deterministic in its seed.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::complex::{FaceWeightTriple, Geometry, PackingMetric, WeightedComplex};
use crate::curvature::{curvature, face_areas, global_jacobian};
use crate::euclidean::lengths_admissible;
use crate::fixtures;
use crate::hyperbolic::{hyperbolic_admissible, uniform_radius_bound};
use crate::kernel;
use crate::linalg::{eigen3, symmetric_eigen};
use crate::parallel::map_indexed;
use crate::potential::CurvatureTarget;
use crate::solver::{solve, Gauge, SolveConfig};

/// Upper end of the disjoint-circle weight stratum for triangle audits.
pub const TRIANGLE_WEIGHT_UPPER: f64 = 10.0;
/// Upper end of the weight strata for whole-surface audits.
pub const SURFACE_WEIGHT_UPPER: f64 = 2.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditCheck {
    pub name: String,
    pub property: String,
    pub samples: usize,
    pub worst_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl AuditCheck {
    /// Passes when `worst_residual <= tolerance`; a NaN residual fails.
    pub fn new(name: &str, property: &str, samples: usize, worst_residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            property: property.into(),
            samples,
            worst_residual,
            tolerance,
            pass: worst_residual <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub suite: String,
    pub seed: u64,
    pub fixtures: Vec<String>,
    pub checks: Vec<AuditCheck>,
    /// Informational observations that are not pass/fail.
    pub notes: Vec<String>,
}

impl AuditReport {
    pub fn new(suite: &str, seed: u64) -> Self {
        Self {
            suite: suite.into(),
            seed,
            fixtures: Vec::new(),
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn merge(&mut self, other: AuditReport) {
        for f in other.fixtures {
            if !self.fixtures.contains(&f) {
                self.fixtures.push(f);
            }
        }
        self.checks.extend(other.checks);
        self.notes.extend(other.notes);
    }
}

/// Independent generator for sample `k` of a run seeded with `seed`.
pub fn sample_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

fn max_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(f64::NEG_INFINITY, |m, x| {
        if x.is_nan() || m.is_nan() {
            f64::NAN
        } else {
            m.max(x)
        }
    })
}

fn random_radii<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    [0; 3].map(|_| fixtures::log_uniform(rng, 1e-3, 1e3))
}

/// Radii for Jacobian samples. Hyperbolic u = ln tanh(r/2) is within
/// 2e^{-r} of 0, so differences in u lose all precision for large r;
/// hyperbolic samples stop at r = 10.
fn jacobian_radii<R: Rng + ?Sized>(g: Geometry, rng: &mut R) -> [f64; 3] {
    let hi = match g {
        Geometry::Euclidean => 1e3,
        Geometry::Hyperbolic => 10.0,
    };
    [0; 3].map(|_| fixtures::log_uniform(rng, 1e-3, hi))
}

fn unstratified_weights<R: Rng + ?Sized>(rng: &mut R) -> FaceWeightTriple<f64> {
    FaceWeightTriple::new(
        fixtures::stratified_weight(rng, TRIANGLE_WEIGHT_UPPER),
        fixtures::stratified_weight(rng, TRIANGLE_WEIGHT_UPPER),
        fixtures::stratified_weight(rng, TRIANGLE_WEIGHT_UPPER),
    )
}

/// Admissible `(r, w)` with `γ ≥ 0` and stratified weights.
fn admissible_sample<R: Rng + ?Sized>(g: Geometry, rng: &mut R) -> ([f64; 3], FaceWeightTriple<f64>) {
    loop {
        let w = fixtures::random_face_weights(rng, TRIANGLE_WEIGHT_UPPER);
        for _ in 0..32 {
            let r = jacobian_radii(g, rng);
            if kernel::admissibility(g, r, &w).admissible {
                return (r, w);
            }
        }
    }
}

fn u_of(g: Geometry, r: f64) -> f64 {
    crate::complex::radius_to_u(g, r)
}

/// Centered-difference step in u: 1e-6, shrunk to 1e-2·|u| when the
/// hyperbolic u is close to 0.
fn fd_step(g: Geometry, u: f64) -> f64 {
    match g {
        Geometry::Euclidean => 1e-6,
        Geometry::Hyperbolic => (1e-2 * u.abs()).min(1e-6),
    }
}

/// Richardson-extrapolated centered difference of the angles in `u_b`.
fn angle_difference(g: Geometry, r: [f64; 3], w: &FaceWeightTriple<f64>, b: usize) -> Option<[f64; 3]> {
    let u = u_of(g, r[b]);
    let h = fd_step(g, u);
    let central = |h: f64| -> Option<[f64; 3]> {
        let mut rp = r;
        let mut rm = r;
        rp[b] = r_of(g, u + h);
        rm[b] = r_of(g, u - h);
        let tp = kernel::inner_angles(g, rp, w).ok()?;
        let tm = kernel::inner_angles(g, rm, w).ok()?;
        Some([0, 1, 2].map(|a| (tp[a] - tm[a]) / (2.0 * h)))
    };
    let (d1, d2) = (central(h)?, central(h / 2.0)?);
    Some([0, 1, 2].map(|a| (4.0 * d2[a] - d1[a]) / 3.0))
}

fn r_of(g: Geometry, u: f64) -> f64 {
    crate::complex::u_to_radius(g, u).expect("perturbed u stays in the domain")
}

pub fn audit_triangle_lemmas(g: Geometry, n_samples: usize, seed: u64) -> AuditReport {
    let mut report = AuditReport::new("triangle", seed);
    let n = n_samples.max(1);

    let disagreements: usize = map_indexed(n, |k| {
        let mut rng = sample_rng(seed, k);
        let r = random_radii(&mut rng);
        let w = unstratified_weights(&mut rng);
        let cert = kernel::admissibility(g, r, &w).admissible;
        let direct = lengths_admissible(kernel::lengths(g, r, &w));
        usize::from(cert != direct)
    })
    .into_iter()
    .sum();
    report.checks.push(AuditCheck::new(
        &format!("{g}.certificate_vs_lengths"),
        "triangle inequality lemma: certificate sign equals the strict length test",
        n,
        disagreements as f64,
        0.0,
    ));

    let zhou_failures: usize = map_indexed(n, |k| {
        let mut rng = sample_rng(seed ^ 0x5a5a, k);
        let r = random_radii(&mut rng);
        let w = fixtures::random_zhou_weights(&mut rng);
        usize::from(!kernel::admissibility(g, r, &w).admissible)
    })
    .into_iter()
    .sum();
    report.checks.push(AuditCheck::new(
        &format!("{g}.zhou_regime"),
        "I in (-1, 1] with gamma >= 0 is admissible for all radii",
        n,
        zhou_failures as f64,
        0.0,
    ));

    if g == Geometry::Hyperbolic {
        let bound_failures: usize = map_indexed(n, |k| {
            let mut rng = sample_rng(seed ^ 0xb0b0, k);
            let w = fixtures::random_face_weights(&mut rng, TRIANGLE_WEIGHT_UPPER);
            let s = uniform_radius_bound(&w).expect("gamma >= 0") + 1e-3;
            usize::from(!hyperbolic_admissible([s; 3], &w).admissible)
        })
        .into_iter()
        .sum();
        report.checks.push(AuditCheck::new(
            "hyperbolic.large_radius_bound",
            "(s, s, s) is admissible for s above the uniform radius bound",
            n,
            bound_failures as f64,
            0.0,
        ));
    }
    report
}

struct JacobianSample {
    symmetry: f64,
    fd: f64,
    eig: [f64; 3],
    norm: f64,
    kernel_angle: f64,
    negative_offdiag: usize,
}

fn jacobian_sample(g: Geometry, r: [f64; 3], w: &FaceWeightTriple<f64>) -> JacobianSample {
    let j = kernel::angle_jacobian(g, r, w);
    let norm = j.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut symmetry = 0.0f64;
    let mut negative_offdiag = 0;
    for a in 0..3 {
        for b in 0..3 {
            symmetry = symmetry.max((j[a][b] - j[b][a]).abs() / norm.max(1.0));
            if a != b && j[a][b] < 0.0 {
                negative_offdiag += 1;
            }
        }
    }
    let mut fd = 0.0f64;
    for b in 0..3 {
        match angle_difference(g, r, w, b) {
            Some(d) => {
                for a in 0..3 {
                    fd = fd.max((d[a] - j[a][b]).abs() / norm.max(1.0));
                }
            }
            None => fd = f64::INFINITY,
        }
    }
    let e = eigen3(&j);
    let k = e.vector(2);
    let s = 1.0 / 3f64.sqrt();
    let dotk = (k[0] + k[1] + k[2]) * s;
    let perp = ((k[0] - dotk * s).powi(2) + (k[1] - dotk * s).powi(2) + (k[2] - dotk * s).powi(2)).sqrt();
    JacobianSample {
        symmetry,
        fd,
        eig: [e.values[0], e.values[1], e.values[2]],
        norm: e.spectral_norm(),
        kernel_angle: perp.atan2(dotk.abs()),
        negative_offdiag,
    }
}

pub fn audit_jacobian_lemmas(g: Geometry, n_samples: usize, seed: u64) -> AuditReport {
    let mut report = AuditReport::new("jacobian", seed);
    let n = n_samples.max(1);
    let samples = map_indexed(n, |k| {
        let mut rng = sample_rng(seed, k);
        let (r, w) = admissible_sample(g, &mut rng);
        jacobian_sample(g, r, &w)
    });
    report.checks.push(AuditCheck::new(
        &format!("{g}.jacobian_symmetry"),
        "symmetry lemma: d theta_i / d u_j = d theta_j / d u_i",
        n,
        max_of(samples.iter().map(|s| s.symmetry)),
        1e-10,
    ));
    report.checks.push(AuditCheck::new(
        &format!("{g}.jacobian_finite_difference"),
        "analytic Jacobian matches centered differences of the angles (h = 1e-6)",
        n,
        max_of(samples.iter().map(|s| s.fd)),
        1e-6,
    ));
    match g {
        Geometry::Euclidean => {
            report.checks.push(AuditCheck::new(
                "euclidean.face_negative_eigenvalues",
                "face Jacobian is negative semidefinite: two strictly negative eigenvalues",
                n,
                max_of(samples.iter().map(|s| s.eig[1] / s.norm)),
                -1e-12,
            ));
            report.checks.push(AuditCheck::new(
                "euclidean.face_zero_eigenvalue",
                "face Jacobian has rank 2: one eigenvalue vanishes",
                n,
                max_of(samples.iter().map(|s| s.eig[2].abs() / s.norm)),
                1e-9,
            ));
            report.checks.push(AuditCheck::new(
                "euclidean.face_kernel_direction",
                "face Jacobian kernel is spanned by (1, 1, 1), angle in radians",
                n,
                max_of(samples.iter().map(|s| s.kernel_angle)),
                1e-7,
            ));
        }
        Geometry::Hyperbolic => {
            report.checks.push(AuditCheck::new(
                "hyperbolic.face_negative_definite",
                "face Jacobian is negative definite: largest eigenvalue < 0 (scaled by norm)",
                n,
                max_of(samples.iter().map(|s| s.eig[2] / s.norm)),
                0.0,
            ));
        }
    }
    let neg: usize = samples.iter().map(|s| s.negative_offdiag).sum();
    report.notes.push(format!(
        "{g}: {neg} of {} off-diagonal Jacobian entries are negative over the full weight range",
        6 * n
    ));
    report
}

fn fixture_label(name: &str, g: Geometry) -> String {
    format!("{name}/{g}")
}

/// Spectral and Gauss–Bonnet audit of the assembled Jacobian at `n_samples`
/// random admissible metrics with random weights (`γ ≥ 0`). Sample 0 uses
/// the complex as given at a uniform metric.
pub fn audit_global(c: &WeightedComplex<f64>, name: &str, g: Geometry, n_samples: usize, seed: u64) -> AuditReport {
    let mut report = AuditReport::new("global", seed);
    report.fixtures.push(fixture_label(name, g));
    let n = n_samples.max(1);
    let chi = c.euler_characteristic() as f64;
    let uniform = match g {
        Geometry::Euclidean => 1.0,
        Geometry::Hyperbolic => 1.0f64.max(
            (0..c.faces().len())
                .filter_map(|f| uniform_radius_bound(&c.face_weights(f)).ok())
                .fold(0.0, f64::max)
                + 0.2,
        ),
    };
    struct Row {
        symmetry: f64,
        kernel_eig: f64,
        second_eig: f64,
        kernel_angle: f64,
        min_eig: f64,
        gauss_bonnet: f64,
        failed: bool,
    }
    let rows: Vec<Row> = (0..n)
        .map(|k| {
            let mut rng = sample_rng(seed, k);
            let (wc, m) = if k == 0 {
                (
                    c.clone(),
                    PackingMetric::new(g, vec![uniform; c.vertex_count()]).unwrap(),
                )
            } else {
                fixtures::random_instance(c, g, &mut rng, SURFACE_WEIGHT_UPPER).unwrap()
            };
            let failed_row = Row {
                symmetry: f64::NAN,
                kernel_eig: f64::NAN,
                second_eig: f64::NAN,
                kernel_angle: f64::NAN,
                min_eig: f64::NAN,
                gauss_bonnet: f64::NAN,
                failed: true,
            };
            let (Ok(k), Ok(j)) = (curvature(&wc, &m, false), global_jacobian(&wc, &m)) else {
                return failed_row;
            };
            let gb = match g {
                Geometry::Euclidean => (k.total() - 2.0 * PI * chi).abs(),
                Geometry::Hyperbolic => {
                    let area: f64 = face_areas(&wc, &m).unwrap().iter().sum();
                    (k.total() - 2.0 * PI * chi - area).abs()
                }
            };
            let dense = j.matrix.to_dense();
            let e = symmetric_eigen(&dense);
            let norm = e.spectral_norm();
            let v = e.vector(0);
            let nn = v.len() as f64;
            let s: f64 = v.iter().sum::<f64>() / nn.sqrt();
            let perp = v.iter().map(|x| (x - s / nn.sqrt()).powi(2)).sum::<f64>().sqrt();
            Row {
                symmetry: j.matrix.asymmetry() / norm,
                kernel_eig: e.values[0].abs() / norm,
                second_eig: e.values[1] / norm,
                kernel_angle: perp.atan2(s.abs()),
                min_eig: e.values[0] / norm,
                gauss_bonnet: gb,
                failed: false,
            }
        })
        .collect();
    let failed = rows.iter().filter(|r| r.failed).count();
    report.checks.push(AuditCheck::new(
        &format!("{name}.{g}.sampling"),
        "every sampled metric is admissible",
        n,
        failed as f64,
        0.0,
    ));
    report.checks.push(AuditCheck::new(
        &format!("{name}.{g}.global_symmetry"),
        "assembled Jacobian is symmetric (scaled by spectral norm)",
        n,
        max_of(rows.iter().map(|r| r.symmetry)),
        1e-12,
    ));
    match g {
        Geometry::Euclidean => {
            report.checks.push(AuditCheck::new(
                &format!("{name}.{g}.kernel_eigenvalue"),
                "Lambda is positive semidefinite with a one-dimensional kernel: |lambda_1| < 1e-9 ||Lambda||",
                n,
                max_of(rows.iter().map(|r| r.kernel_eig)),
                1e-9,
            ));
            report.checks.push(AuditCheck::new(
                &format!("{name}.{g}.rank"),
                "remaining eigenvalues are positive: -lambda_2 / ||Lambda|| below -1e-9",
                n,
                max_of(rows.iter().map(|r| -r.second_eig)),
                -1e-9,
            ));
            report.checks.push(AuditCheck::new(
                &format!("{name}.{g}.kernel_direction"),
                "kernel spanned by the constant vector, angle in radians",
                n,
                max_of(rows.iter().map(|r| r.kernel_angle)),
                1e-7,
            ));
            report.checks.push(AuditCheck::new(
                &format!("{name}.{g}.gauss_bonnet"),
                "sum of curvatures equals 2 pi chi",
                n,
                max_of(rows.iter().map(|r| r.gauss_bonnet)),
                1e-10,
            ));
        }
        Geometry::Hyperbolic => {
            report.checks.push(AuditCheck::new(
                &format!("{name}.{g}.positive_definite"),
                "Lambda is positive definite: -lambda_min / ||Lambda|| < 0",
                n,
                max_of(rows.iter().map(|r| -r.min_eig)),
                0.0,
            ));
            report.checks.push(AuditCheck::new(
                &format!("{name}.{g}.gauss_bonnet"),
                "sum of curvatures equals 2 pi chi plus the total area",
                n,
                max_of(rows.iter().map(|r| r.gauss_bonnet)),
                1e-9,
            ));
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RigidityTarget {
    Curvature,
    Alpha { alpha: f64 },
}

/// A target together with the metric known to realize it.
pub struct RigidityFixture {
    pub complex: WeightedComplex<f64>,
    pub known: PackingMetric<f64>,
    pub target: CurvatureTarget<f64>,
}

/// Uniform classical curvature whose sign makes `α·R̄ ≤ 0` at its solution.
fn sign_matched_uniform(c: &WeightedComplex<f64>, g: Geometry, alpha: f64) -> Option<f64> {
    let n = c.vertex_count() as f64;
    let mean = 2.0 * PI * c.euler_characteristic() as f64 / n;
    let kappa = match g {
        Geometry::Euclidean => mean,
        // the hyperbolic total exceeds 2 pi chi by the area
        Geometry::Hyperbolic => {
            if alpha > 0.0 {
                mean + 0.2 * mean.abs()
            } else {
                mean.max(0.0) + 0.5
            }
        }
    };
    (alpha * kappa <= 0.0).then_some(kappa)
}

/// Draws random weights and a known metric, and evaluates the target there.
///
/// For α-targets the known metric is itself found by solving a uniform
/// classical target with the sign that satisfies `α·R̄ ≤ 0`; the target is
/// then recomputed from that metric.
pub fn rigidity_fixture<R: Rng + ?Sized>(
    c: &WeightedComplex<f64>,
    g: Geometry,
    target: RigidityTarget,
    rng: &mut R,
) -> Option<RigidityFixture> {
    match target {
        RigidityTarget::Curvature => {
            let (wc, m) = fixtures::random_instance(c, g, rng, SURFACE_WEIGHT_UPPER).ok()?;
            let k = curvature(&wc, &m, false).ok()?;
            Some(RigidityFixture {
                complex: wc,
                known: m,
                target: CurvatureTarget::Curvature(k.values),
            })
        }
        RigidityTarget::Alpha { alpha } => {
            let kappa = sign_matched_uniform(c, g, alpha)?;
            for _ in 0..8 {
                let (wc, start) = fixtures::random_instance(c, g, rng, SURFACE_WEIGHT_UPPER).ok()?;
                let out = solve(
                    &wc,
                    CurvatureTarget::Curvature(vec![kappa; c.vertex_count()]),
                    &start,
                    &SolveConfig::newton(),
                )
                .ok()?;
                if !out.converged() {
                    continue;
                }
                let k = curvature(&wc, &out.metric, false).ok()?;
                let s = out.metric.s();
                let values: Vec<f64> = if kappa == 0.0 {
                    vec![0.0; c.vertex_count()]
                } else {
                    k.values.iter().zip(&s).map(|(ki, si)| ki / si.powf(alpha)).collect()
                };
                if values.iter().any(|v| alpha * v > 0.0) {
                    continue;
                }
                return Some(RigidityFixture {
                    complex: wc,
                    known: out.metric,
                    target: CurvatureTarget::Alpha { alpha, values },
                });
            }
            None
        }
    }
}

fn gap(a: &[f64], b: &[f64], gauge: Gauge) -> f64 {
    let shift = match gauge {
        Gauge::SumUZero => (a.iter().sum::<f64>() - b.iter().sum::<f64>()) / a.len() as f64,
        Gauge::None => 0.0,
    };
    max_of(a.iter().zip(b).map(|(x, y)| (x - y - shift).abs()))
}

/// Recovers a target generated from a known metric from `n_restarts`
/// random admissible starts and checks that all solutions coincide.
pub fn audit_global_rigidity(
    c: &WeightedComplex<f64>,
    name: &str,
    g: Geometry,
    target: RigidityTarget,
    n_restarts: usize,
    seed: u64,
) -> AuditReport {
    let mut report = AuditReport::new("rigidity", seed);
    report.fixtures.push(fixture_label(name, g));
    let label = match target {
        RigidityTarget::Curvature => format!("{name}.{g}.curvature"),
        RigidityTarget::Alpha { alpha } => format!("{name}.{g}.alpha({alpha})"),
    };
    let mut rng = sample_rng(seed, 0);
    let Some(fx) = rigidity_fixture(c, g, target, &mut rng) else {
        report.checks.push(AuditCheck::new(
            &format!("{label}.construction"),
            "a known metric realizing the target could be constructed",
            1,
            1.0,
            0.0,
        ));
        return report;
    };
    let gauge = Gauge::select(g, &fx.target);
    let n = n_restarts.max(1);
    let runs = map_indexed(n, |k| {
        let mut rng = sample_rng(seed, k + 1);
        let start = fixtures::random_admissible_metric(&fx.complex, g, &mut rng)?;
        solve(&fx.complex, fx.target.clone(), &start, &SolveConfig::newton()).ok()
    });
    let mut failures = Vec::new();
    let mut sols = Vec::new();
    for (k, run) in runs.into_iter().enumerate() {
        match run {
            Some(out) if out.converged() => sols.push(out.u),
            Some(out) => failures.push(format!(
                "restart {k}: {} (residual {:e})",
                out.status.as_str(),
                out.residual()
            )),
            None => failures.push(format!("restart {k}: no admissible start or solver error")),
        }
    }
    report.notes.extend(failures.iter().map(|f| format!("{label}: {f}")));
    report.checks.push(AuditCheck::new(
        &format!("{label}.converged"),
        "every restart converges to the target",
        n,
        failures.len() as f64,
        0.0,
    ));
    let mut worst = if sols.len() < 2 { f64::NAN } else { 0.0f64 };
    for i in 0..sols.len() {
        for j in i + 1..sols.len() {
            worst = worst.max(gap(&sols[i], &sols[j], gauge));
        }
    }
    report.checks.push(AuditCheck::new(
        &format!("{label}.uniqueness"),
        "all restarts agree in u (up to an additive constant under the scaling gauge)",
        n,
        worst,
        1e-7,
    ));
    let known = fx.known.to_u();
    report.checks.push(AuditCheck::new(
        &format!("{label}.recovers_known"),
        "solutions coincide with the metric the target was generated from",
        sols.len(),
        max_of(sols.iter().map(|s| gap(s, &known, gauge))),
        1e-7,
    ));
    report
}

/// Locates a boundary crossing of face admissibility along a straight
/// segment in u and returns `(u_in, direction, t0)` with unit `direction`.
fn boundary_crossing<R: Rng + ?Sized>(
    g: Geometry,
    w: &FaceWeightTriple<f64>,
    rng: &mut R,
) -> Option<([f64; 3], [f64; 3], f64)> {
    let adm = |u: [f64; 3]| -> Option<bool> {
        let r = [0, 1, 2].map(|a| crate::complex::u_to_radius(g, u[a]));
        Some(kernel::admissibility(g, [r[0]?, r[1]?, r[2]?], w).admissible)
    };
    let radii = |rng: &mut R| match g {
        Geometry::Euclidean => [0; 3].map(|_| fixtures::log_uniform(rng, 1e-2, 1e2)),
        Geometry::Hyperbolic => [0; 3].map(|_| fixtures::log_uniform(rng, 1e-2, 5.0)),
    };
    for _ in 0..256 {
        let a = radii(rng).map(|r| u_of(g, r));
        let b = radii(rng).map(|r| u_of(g, r));
        let (ia, ib) = (adm(a)?, adm(b)?);
        if ia == ib {
            continue;
        }
        let (start, end) = if ia { (a, b) } else { (b, a) };
        let d = [0, 1, 2].map(|k| end[k] - start[k]);
        let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let dir = d.map(|x| x / len);
        let at = |t: f64| [0, 1, 2].map(|k| start[k] + t * dir[k]);
        let (mut lo, mut hi) = (0.0, len);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            if adm(at(mid))? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Some((start, dir, 0.5 * (lo + hi)));
    }
    None
}

/// Largest change of the extended angles between `t0 - h` and `t0 + h`.
fn extended_jump(g: Geometry, w: &FaceWeightTriple<f64>, start: [f64; 3], dir: [f64; 3], t0: f64, h: f64) -> f64 {
    let angles = |t: f64| {
        let r = [0, 1, 2].map(|k| r_of(g, start[k] + t * dir[k]));
        kernel::extended_angles(g, r, w, 0).map(|fa| fa.angles)
    };
    match (angles(t0 - h), angles(t0 + h)) {
        (Ok(a), Ok(b)) => max_of((0..3).map(|k| (a[k] - b[k]).abs())),
        _ => f64::NAN,
    }
}

/// Continuity of the extended angles across the admissibility boundary,
/// probed with a step of `1e-8` in u on random crossings.
pub fn audit_extension(g: Geometry, n_samples: usize, seed: u64) -> AuditReport {
    let mut report = AuditReport::new("extension", seed);
    let n = n_samples.max(1);
    let rows = map_indexed(n, |k| {
        let mut rng = sample_rng(seed, k);
        loop {
            let w = fixtures::random_face_weights(&mut rng, TRIANGLE_WEIGHT_UPPER);
            if let Some((start, dir, t0)) = boundary_crossing(g, &w, &mut rng) {
                return (
                    extended_jump(g, &w, start, dir, t0, 1e-8),
                    extended_jump(g, &w, start, dir, t0, 1e-10),
                );
            }
        }
    });
    let worst = max_of(rows.iter().map(|r| r.0));
    report.checks.push(AuditCheck::new(
        &format!("{g}.extension_continuity"),
        "extended angles jump by less than 1e-6 across the boundary at step 1e-8",
        n,
        worst,
        1e-6,
    ));
    let ratios: Vec<f64> = rows
        .iter()
        .filter(|r| r.0 > 1e-12 && r.1 > 0.0)
        .map(|r| r.0 / r.1)
        .collect();
    if !ratios.is_empty() {
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        report.notes.push(format!(
            "{g}: jump(1e-8) / jump(1e-10) averages {mean:.2} over {} crossings (square-root scaling gives 10)",
            ratios.len()
        ));
    }
    report
}

/// Second differences of the extended potential along random segments in
/// u, with random weights (`γ ≥ 0`) and endpoints that need not be
/// admissible. Each segment is split into 16 pieces.
pub fn audit_convexity(c: &WeightedComplex<f64>, name: &str, g: Geometry, n_segments: usize, seed: u64) -> AuditReport {
    use crate::potential::{Potential, PotentialSpec};
    let mut report = AuditReport::new("convexity", seed);
    report.fixtures.push(fixture_label(name, g));
    let n = n_segments.max(1);
    let pieces = 16;
    let worst = map_indexed(n, |k| {
        let mut rng = sample_rng(seed, k);
        let Ok((wc, m)) = fixtures::random_instance(c, g, &mut rng, SURFACE_WEIGHT_UPPER) else {
            return f64::NAN;
        };
        let Ok(kv) = curvature(&wc, &m, false) else {
            return f64::NAN;
        };
        let (lo, hi) = match g {
            Geometry::Euclidean => (0.1, 10.0),
            Geometry::Hyperbolic => (0.05, 4.0),
        };
        let ua: Vec<f64> = (0..c.vertex_count())
            .map(|_| u_of(g, fixtures::log_uniform(&mut rng, lo, hi)))
            .collect();
        let ub: Vec<f64> = (0..c.vertex_count())
            .map(|_| u_of(g, fixtures::log_uniform(&mut rng, lo, hi)))
            .collect();
        let spec = PotentialSpec {
            geometry: g,
            target: CurvatureTarget::Curvature(kv.values),
            base_point: ua.clone(),
        };
        let Ok(p) = Potential::new(&wc, spec) else {
            return f64::NAN;
        };
        let at = |t: f64| -> Vec<f64> { ua.iter().zip(&ub).map(|(a, b)| a + t * (b - a)).collect() };
        let mut incs = Vec::with_capacity(pieces);
        for i in 0..pieces {
            let (t0, t1) = (i as f64 / pieces as f64, (i + 1) as f64 / pieces as f64);
            match p.increment(&at(t0), &at(t1)) {
                Ok(v) => incs.push(v),
                Err(_) => return f64::NAN,
            }
        }
        let mut value = 0.0f64;
        let mut scale = 1.0f64;
        for v in &incs {
            value += v;
            scale = scale.max(value.abs());
        }
        max_of(incs.windows(2).map(|w| -(w[1] - w[0]) / scale))
    });
    report.checks.push(AuditCheck::new(
        &format!("{name}.{g}.potential_convexity"),
        "second differences of the extended potential along segments are >= -1e-8 scale",
        n,
        max_of(worst.into_iter()),
        1e-8,
    ));
    report
}

/// The α-targets exercised for a fixture: one per sign regime it admits.
pub fn alpha_targets(c: &WeightedComplex<f64>, g: Geometry) -> Vec<RigidityTarget> {
    [1.0, -1.0]
        .into_iter()
        .filter(|&a| sign_matched_uniform(c, g, a).is_some())
        .map(|alpha| RigidityTarget::Alpha { alpha })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_audit_small() {
        for g in [Geometry::Euclidean, Geometry::Hyperbolic] {
            let r = audit_triangle_lemmas(g, 2000, 1);
            assert!(r.passed(), "{:#?}", r.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn jacobian_audit_small() {
        for g in [Geometry::Euclidean, Geometry::Hyperbolic] {
            let r = audit_jacobian_lemmas(g, 1000, 2);
            assert!(r.passed(), "{:#?}", r.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let a = audit_jacobian_lemmas(Geometry::Hyperbolic, 50, 9);
        let b = audit_jacobian_lemmas(Geometry::Hyperbolic, 50, 9);
        assert_eq!(a, b);
        let c = audit_jacobian_lemmas(Geometry::Hyperbolic, 50, 10);
        assert_ne!(a.checks[1].worst_residual, c.checks[1].worst_residual);
    }

    #[test]
    fn global_audit_tetrahedron() {
        let c = fixtures::tetrahedron::<f64>(1.0);
        for g in [Geometry::Euclidean, Geometry::Hyperbolic] {
            let r = audit_global(&c, "tetrahedron", g, 10, 3);
            assert!(r.passed(), "{:#?}", r.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn rigidity_tetrahedron() {
        let c = fixtures::tetrahedron::<f64>(1.0);
        let r = audit_global_rigidity(&c, "tetrahedron", Geometry::Euclidean, RigidityTarget::Curvature, 5, 4);
        assert!(r.passed(), "{:#?}\n{:?}", r.failures().collect::<Vec<_>>(), r.notes);
    }

    #[test]
    fn convexity_tetrahedron() {
        let c = fixtures::tetrahedron::<f64>(1.0);
        for g in [Geometry::Euclidean, Geometry::Hyperbolic] {
            let r = audit_convexity(&c, "tetrahedron", g, 10, 5);
            assert!(r.passed(), "{:#?}", r.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn boundary_jump_follows_square_root() {
        let r = audit_extension(Geometry::Euclidean, 20, 6);
        assert!(r.checks[0].worst_residual > 1e-6);
        assert!(r.checks[0].worst_residual < 1e-2);
        assert!(r.notes[0].contains("averages"));
    }

    #[test]
    fn failing_check_is_reported() {
        let c = AuditCheck::new("x", "y", 1, f64::NAN, 1.0);
        assert!(!c.pass);
        let mut r = AuditReport::new("t", 0);
        r.checks.push(c);
        assert!(!r.passed());
    }
}
