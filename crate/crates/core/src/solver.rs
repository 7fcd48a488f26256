//! Prescribed-curvature solver: damped Newton on the extended potential and
//! an explicit Euler Ricci flow.

use std::f64::consts::PI;

use crate::complex::{Geometry, PackingMetric, WeightedComplex};
use crate::curvature::{check_len, curvature};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, pcg, Cholesky, SparseSymmetric};
use crate::potential::{check_u, CurvatureTarget, Potential, PotentialSpec};
use crate::scalar::Real;

/// Largest system solved by dense Cholesky; larger ones go through PCG.
const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Newton,
    Flow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gauge {
    /// Iterates are kept at `Σu = 0`.
    SumUZero,
    None,
}

impl Gauge {
    /// Euclidean metrics with a `u`-independent target are only determined
    /// up to scaling.
    pub fn select<T: Real>(geometry: Geometry, target: &CurvatureTarget<T>) -> Self {
        if geometry == Geometry::Euclidean && target.is_constant() {
            Gauge::SumUZero
        } else {
            Gauge::None
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveConfig<T> {
    pub method: Method,
    /// Tolerance on `‖K̃ - target‖_∞`.
    pub grad_tol: T,
    pub max_iters: usize,
    pub armijo_c1: T,
    pub backtrack: T,
    /// Relative Tikhonov shift, scaled by `trace(Λ̃)/N`.
    pub tikhonov: T,
    pub flow_step: T,
}

impl<T: Real> SolveConfig<T> {
    pub fn newton() -> Self {
        Self {
            method: Method::Newton,
            grad_tol: T::lit(1e-10),
            max_iters: 200,
            armijo_c1: T::lit(1e-4),
            backtrack: T::lit(0.5),
            tikhonov: T::lit(1e-12),
            flow_step: T::lit(1e-2),
        }
    }

    pub fn flow() -> Self {
        Self {
            method: Method::Flow,
            max_iters: 1_000_000,
            ..Self::newton()
        }
    }
}

impl<T: Real> Default for SolveConfig<T> {
    fn default() -> Self {
        Self::newton()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    LeftDomain,
    /// The target violates Gauss–Bonnet in the scaling gauge.
    Refused,
    /// Line search could not make progress, even with gradient steps.
    Stalled,
    /// The residual vanished but some faces are still extended.
    Degenerate,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIters => "max_iters",
            SolveStatus::LeftDomain => "left_domain",
            SolveStatus::Refused => "refused",
            SolveStatus::Stalled => "stalled",
            SolveStatus::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome<T> {
    pub status: SolveStatus,
    pub gauge: Gauge,
    pub metric: PackingMetric<T>,
    pub u: Vec<T>,
    /// `‖K̃ - target‖_∞` before each iteration and at the end.
    pub residual_history: Vec<T>,
    pub extended_faces_at_end: Vec<usize>,
    pub iterations: usize,
    pub message: Option<String>,
}

impl<T: Real> SolveOutcome<T> {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    pub fn residual(&self) -> T {
        self.residual_history.last().copied().unwrap_or_else(T::nan)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport<T> {
    pub step_length: T,
    pub direction_norm: T,
    pub gradient_norm: T,
    pub extended_faces: usize,
    /// The Newton direction failed and a gradient step was taken.
    pub gradient_fallback: bool,
}

fn project_mean<T: Real>(v: &mut [T]) {
    let mean = v.iter().copied().sum::<T>() / T::lit(v.len() as f64);
    v.iter_mut().for_each(|x| *x = *x - mean);
}

fn gauss_bonnet_target<T: Real>(c: &WeightedComplex<T>, target: &CurvatureTarget<T>, u: &[T]) -> Option<String> {
    let t = target.at(u);
    let sum: T = t.iter().copied().sum();
    let want = T::lit(2.0 * PI * c.euler_characteristic() as f64);
    let scale = T::one() + t.iter().map(|x| x.abs()).sum::<T>();
    if (sum - want).abs() > T::lit(1e-9) * scale {
        Some(format!(
            "target sums to {sum} but Gauss-Bonnet requires 2*pi*chi = {want}"
        ))
    } else {
        None
    }
}

/// Solves `(H + τI + ρ·𝟙𝟙ᵀ/N) d = rhs`, with `ρ = 0` outside the gauge.
fn solve_shifted<T: Real>(h: &SparseSymmetric<T>, tau: T, rho: T, rhs: &[T]) -> Result<Vec<T>> {
    let n = h.dim();
    let nn = T::lit(n as f64);
    if n <= DENSE_LIMIT {
        let mut a = h.to_dense();
        for i in 0..n {
            a[(i, i)] = a[(i, i)] + tau;
            if rho != T::zero() {
                for j in 0..n {
                    a[(i, j)] = a[(i, j)] + rho / nn;
                }
            }
        }
        Ok(Cholesky::factor(&a)?.solve(rhs))
    } else {
        let diag: Vec<T> = h.diagonal().into_iter().map(|d| d + tau + rho / nn).collect();
        let apply = |v: &[T]| {
            let mut out = h.matvec(v);
            let s = v.iter().copied().sum::<T>() * rho / nn;
            for (o, vi) in out.iter_mut().zip(v) {
                *o = *o + tau * *vi + s;
            }
            out
        };
        pcg(apply, &diag, rhs, T::lit(1e-12), 10 * n + 100)
    }
}

/// Largest step `≤ 1` that keeps hyperbolic iterates below `-1e-12`,
/// truncated at 90% of the distance to the boundary.
fn domain_step<T: Real>(g: Geometry, u: &[T], d: &[T]) -> T {
    if g == Geometry::Euclidean {
        return T::one();
    }
    let guard = T::lit(-1e-12);
    let mut t = T::one();
    for (ui, di) in u.iter().zip(d) {
        if *di > T::zero() && *ui + *di >= guard {
            t = t.min(T::lit(0.9) * (guard - *ui) / *di);
        }
    }
    t.max(T::zero())
}

/// Size of `K̃ - target` that is indistinguishable from rounding.
fn gradient_floor<T: Real>(p: &Potential<'_, T>, u: &[T]) -> T {
    let max_deg = p.complex().vertex_degrees().into_iter().max().unwrap_or(0);
    T::lit(16.0) * T::epsilon() * (T::lit(2.0 * PI * (max_deg + 1) as f64) + norm_inf(&p.spec().target.at(u)))
}

fn armijo<T: Real>(p: &Potential<'_, T>, u: &[T], g: &[T], d: &[T], t0: T, cfg: &SolveConfig<T>) -> Result<T> {
    let gd = dot(g, d);
    let spec = p.spec();
    let target = spec.target.at(u);
    let max_deg = p.complex().vertex_degrees().into_iter().max().unwrap_or(0);
    // rounding floor of the integrand ⟨K̃ - target, d⟩
    let floor = T::lit(100.0)
        * T::epsilon()
        * d.iter().map(|x| x.abs()).sum::<T>()
        * (T::lit(2.0 * PI * (max_deg + 1) as f64) + norm_inf(&target));
    let stall = T::lit(1e-16);
    let mut t = t0;
    while t >= stall {
        let cand: Vec<T> = u.iter().zip(d).map(|(a, b)| *a + t * *b).collect();
        if let Ok(inc) = p.increment(u, &cand) {
            if inc <= cfg.armijo_c1 * t * gd + floor * t {
                return Ok(t);
            }
        }
        t = t * cfg.backtrack;
    }
    Err(Error::LineSearchStalled { step: t.to_f64_lossy() })
}

/// One damped Newton step from `u`.
pub fn newton_step<T: Real>(p: &Potential<'_, T>, u: &[T], cfg: &SolveConfig<T>) -> Result<(Vec<T>, StepReport<T>)> {
    let spec = p.spec();
    let gauge = Gauge::select(spec.geometry, &spec.target);
    let (eval, h) = p.evaluate_with_hessian(u)?;
    let g = eval.gradient;
    let gnorm = norm_inf(&g);
    let extended = eval.curvature.extended_faces.len();
    let mut report = StepReport {
        step_length: T::zero(),
        direction_norm: T::zero(),
        gradient_norm: gnorm,
        extended_faces: extended,
        gradient_fallback: false,
    };
    if gnorm <= gradient_floor(p, u) {
        return Ok((u.to_vec(), report));
    }
    let n = u.len();
    let scale = (h.trace() / T::lit(n as f64)).abs().max(T::min_positive_value());
    let rho = if gauge == Gauge::SumUZero { scale } else { T::zero() };
    let rhs: Vec<T> = g.iter().map(|x| -*x).collect();
    let mut tau = cfg.tikhonov * scale;
    let mut d = None;
    let mut last_err = None;
    for _ in 0..6 {
        match solve_shifted(&h, tau, rho, &rhs) {
            Ok(x) if x.iter().all(|v| v.is_finite()) => {
                d = Some(x);
                break;
            }
            Ok(_) => last_err = Some(Error::LinearSolveFailure("non-finite Newton direction".into())),
            Err(e) => last_err = Some(e),
        }
        tau = tau * T::lit(1e3) + scale * T::lit(1e-10);
    }
    let mut d = match d {
        Some(d) => d,
        None => return Err(last_err.unwrap()),
    };
    if gauge == Gauge::SumUZero {
        project_mean(&mut d);
    }
    let newton = if dot(&g, &d) < T::zero() {
        let t0 = domain_step(spec.geometry, u, &d).min(max_move::<T>() / norm_inf(&d));
        armijo(p, u, &g, &d, t0, cfg)
    } else {
        Err(Error::LineSearchStalled { step: 0.0 })
    };
    let t = match newton {
        Ok(t) => t,
        Err(e) => {
            if extended == 0 && tau == cfg.tikhonov * scale {
                return Err(e);
            }
            d = rhs.clone();
            if gauge == Gauge::SumUZero {
                project_mean(&mut d);
            }
            report.gradient_fallback = true;
            let t0 = domain_step(spec.geometry, u, &d).min(max_move::<T>() / norm_inf(&d));
            armijo(p, u, &g, &d, t0, cfg)?
        }
    };
    let mut next: Vec<T> = u.iter().zip(&d).map(|(a, b)| *a + t * *b).collect();
    if gauge == Gauge::SumUZero {
        project_mean(&mut next);
    }
    report.step_length = t;
    report.direction_norm = norm_inf(&d);
    Ok((next, report))
}

/// One explicit Euler step `u - h·(K̃ - target)`.
pub fn flow_step<T: Real>(p: &Potential<'_, T>, u: &[T], cfg: &SolveConfig<T>) -> Result<Vec<T>> {
    let spec = p.spec();
    let g = p.gradient(u)?;
    let mut next: Vec<T> = u.iter().zip(&g).map(|(a, b)| *a - cfg.flow_step * *b).collect();
    if Gauge::select(spec.geometry, &spec.target) == Gauge::SumUZero {
        project_mean(&mut next);
    }
    for (i, x) in next.iter().enumerate() {
        let out = !x.is_finite() || (spec.geometry == Geometry::Hyperbolic && *x >= T::lit(-1e-12));
        if out {
            return Err(Error::LeftDomain { vertex: i });
        }
    }
    // radii that under- or overflow are outside the representable domain
    match PackingMetric::from_u(spec.geometry, &next) {
        Ok(_) => Ok(next),
        Err(Error::UDomainViolation { vertex, .. } | Error::InvalidRadius { vertex, .. }) => {
            Err(Error::LeftDomain { vertex })
        }
        Err(e) => Err(e),
    }
}

/// Finds a metric whose extended curvature equals `target`.
///
/// Structural problems (dimension mismatch, a face with `γ < 0`) are errors;
/// non-convergence is reported through [`SolveOutcome::status`].
pub fn solve<T: Real>(
    c: &WeightedComplex<T>,
    target: CurvatureTarget<T>,
    initial: &PackingMetric<T>,
    cfg: &SolveConfig<T>,
) -> Result<SolveOutcome<T>> {
    check_len(c, initial.len())?;
    check_len(c, target.len())?;
    let geometry = initial.geometry();
    let gauge = Gauge::select(geometry, &target);
    let mut u = initial.to_u();
    check_u(geometry, &u)?;
    if gauge == Gauge::SumUZero {
        project_mean(&mut u);
    }
    let refusal = match gauge {
        Gauge::SumUZero => gauss_bonnet_target(c, &target, &u),
        Gauge::None => None,
    };
    let p = Potential::new(
        c,
        PotentialSpec {
            geometry,
            target,
            base_point: u.clone(),
        },
    )?;
    let finish = |status, u: Vec<T>, history: Vec<T>, iterations, message: Option<String>| -> Result<SolveOutcome<T>> {
        let metric = PackingMetric::from_u(geometry, &u)?;
        let extended = p.evaluate(&u)?.curvature.extended_faces;
        Ok(SolveOutcome {
            status,
            gauge,
            metric,
            u,
            residual_history: history,
            extended_faces_at_end: extended,
            iterations,
            message,
        })
    };
    if let Some(msg) = refusal {
        let r = norm_inf(&p.gradient(&u)?);
        return finish(SolveStatus::Refused, u, vec![r], 0, Some(msg));
    }

    let mut history = Vec::new();
    for it in 0..cfg.max_iters {
        let eval = p.evaluate(&u)?;
        let r = norm_inf(&eval.gradient);
        history.push(r);
        if r <= cfg.grad_tol {
            return if eval.curvature.extended_faces.is_empty() {
                confirm(c, &p, u, history, it, &finish)
            } else {
                finish(SolveStatus::Degenerate, u, history, it, None)
            };
        }
        let step = match cfg.method {
            Method::Newton => newton_step(&p, &u, cfg).map(|(next, _)| next),
            Method::Flow => flow_step(&p, &u, cfg),
        };
        match step {
            Ok(next) => {
                u = next;
                if let Some(i) = u.iter().position(|x| x.abs() > degenerate_u::<T>()) {
                    let msg = format!("u[{i}] = {:.3}: radii collapsed or blew up", u[i].to_f64_lossy());
                    return finish(SolveStatus::Degenerate, u, history, it + 1, Some(msg));
                }
            }
            Err(Error::LeftDomain { vertex }) => {
                let msg = format!("vertex {vertex} left the domain");
                return finish(SolveStatus::LeftDomain, u, history, it, Some(msg));
            }
            Err(e @ (Error::LineSearchStalled { .. } | Error::LinearSolveFailure(_))) => {
                let status = if geometry == Geometry::Hyperbolic
                    && domain_step(geometry, &u, &p.gradient(&u)?.iter().map(|x| -*x).collect::<Vec<_>>())
                        < T::lit(1e-16)
                {
                    SolveStatus::LeftDomain
                } else {
                    SolveStatus::Stalled
                };
                return finish(status, u, history, it, Some(e.to_string()));
            }
            Err(e) => return Err(e),
        }
    }
    let r = norm_inf(&p.gradient(&u)?);
    history.push(r);
    if r <= cfg.grad_tol && p.evaluate(&u)?.curvature.extended_faces.is_empty() {
        let n = cfg.max_iters;
        return confirm(c, &p, u, history, n, &finish);
    }
    finish(SolveStatus::MaxIters, u, history, cfg.max_iters, None)
}

/// Largest |u| the solver continues from (radius ratios near e^64).
fn degenerate_u<T: Real>() -> T {
    T::lit(64.0).min(T::lit(0.4) * T::max_value().ln())
}

/// Largest sup-norm change of u in one Newton step.
fn max_move<T: Real>() -> T {
    T::lit(8.0)
}

/// Recomputes the inner curvature at the final metric; the solve only counts
/// as converged when every face is admissible and the residual holds.
fn confirm<T: Real, F>(
    c: &WeightedComplex<T>,
    p: &Potential<'_, T>,
    u: Vec<T>,
    history: Vec<T>,
    iterations: usize,
    finish: &F,
) -> Result<SolveOutcome<T>>
where
    F: Fn(SolveStatus, Vec<T>, Vec<T>, usize, Option<String>) -> Result<SolveOutcome<T>>,
{
    let spec = p.spec();
    let m = PackingMetric::from_u(spec.geometry, &u)?;
    let ok = match curvature(c, &m, false) {
        Ok(k) => {
            let t = spec.target.at(&u);
            k.values
                .iter()
                .zip(&t)
                .all(|(a, b)| (*a - *b).abs() <= *history.last().unwrap() * T::lit(1.0 + 1e-6))
        }
        Err(_) => false,
    };
    let status = if ok {
        SolveStatus::Converged
    } else {
        SolveStatus::Degenerate
    };
    finish(status, u, history, iterations, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn euclid(r: &[f64]) -> PackingMetric<f64> {
        PackingMetric::new(Geometry::Euclidean, r.to_vec()).unwrap()
    }

    #[test]
    fn tetrahedron_symmetric_target() {
        let c = fixtures::tetrahedron::<f64>(1.0);
        let out = solve(
            &c,
            CurvatureTarget::Curvature(vec![PI; 4]),
            &euclid(&[1.0, 2.0, 0.5, 3.0]),
            &SolveConfig::newton(),
        )
        .unwrap();
        assert!(out.converged(), "{:?}", out.status);
        assert!(out.residual() < 1e-10);
        assert!(out.u.iter().all(|x| x.abs() < 1e-8), "{:?}", out.u);
    }

    #[test]
    fn tetrahedron_two_starts_agree() {
        let c = fixtures::tetrahedron::<f64>(1.0);
        let target = vec![PI + 0.1, PI - 0.1, PI, PI];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut sols = Vec::new();
        for _ in 0..2 {
            let r: Vec<f64> = (0..4).map(|_| fixtures::log_uniform(&mut rng, 0.3, 3.0)).collect();
            let out = solve(
                &c,
                CurvatureTarget::Curvature(target.clone()),
                &euclid(&r),
                &SolveConfig::newton(),
            )
            .unwrap();
            assert!(out.converged());
            assert!(out.u.iter().sum::<f64>().abs() < 1e-12);
            sols.push(out.u);
        }
        let gap = sols[0]
            .iter()
            .zip(&sols[1])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(gap < 1e-8, "{gap}");
    }

    #[test]
    fn gauss_bonnet_violation_refused() {
        let c = fixtures::tetrahedron::<f64>(1.0);
        let out = solve(
            &c,
            CurvatureTarget::Curvature(vec![3.0; 4]),
            &euclid(&[1.0; 4]),
            &SolveConfig::newton(),
        )
        .unwrap();
        assert_eq!(out.status, SolveStatus::Refused);
        assert!(out.message.unwrap().contains("Gauss-Bonnet"));
    }

    #[test]
    fn critical_point_is_fixed() {
        let c = fixtures::tetrahedron::<f64>(1.0);
        let p = Potential::new(
            &c,
            PotentialSpec {
                geometry: Geometry::Euclidean,
                target: CurvatureTarget::Curvature(vec![PI; 4]),
                base_point: vec![0.0; 4],
            },
        )
        .unwrap();
        let (next, rep) = newton_step(&p, &[0.0; 4], &SolveConfig::newton()).unwrap();
        assert_eq!(next, vec![0.0; 4]);
        assert_eq!(rep.step_length, 0.0);
        assert_eq!(flow_step(&p, &[0.0; 4], &SolveConfig::flow()).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn newton_converges_quadratically() {
        let c = fixtures::tetrahedron::<f64>(1.0);
        let out = solve(
            &c,
            CurvatureTarget::Curvature(vec![PI + 0.3, PI - 0.2, PI + 0.1, PI - 0.2]),
            &euclid(&[1.0, 2.0, 0.5, 3.0]),
            &SolveConfig::newton(),
        )
        .unwrap();
        assert!(out.converged());
        let h = &out.residual_history;
        for w in h.windows(2) {
            assert!(w[1] < w[0], "{h:?}");
            if w[0] < 1e-3 && w[1] > 1e-13 {
                assert!(w[1] / (w[0] * w[0]) < 10.0, "{h:?}");
            }
        }
    }

    #[test]
    fn flow_reaches_tolerance() {
        let c = fixtures::tetrahedron::<f64>(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r: Vec<f64> = (0..4).map(|_| rng.random_range(0.5..2.0)).collect();
        let cfg = SolveConfig {
            grad_tol: 1e-6,
            max_iters: 100_000,
            ..SolveConfig::flow()
        };
        let out = solve(
            &c,
            CurvatureTarget::Curvature(vec![PI + 0.2, PI - 0.1, PI, PI - 0.1]),
            &euclid(&r),
            &cfg,
        )
        .unwrap();
        assert!(out.converged(), "{:?} {}", out.status, out.residual());
    }

    #[test]
    fn flow_decreases_potential() {
        let c = fixtures::tetrahedron::<f64>(1.0);
        let target = CurvatureTarget::Curvature(vec![PI + 0.4, PI - 0.3, PI + 0.1, PI - 0.2]);
        let p = Potential::new(
            &c,
            PotentialSpec {
                geometry: Geometry::Euclidean,
                target,
                base_point: vec![0.0; 4],
            },
        )
        .unwrap();
        let cfg = SolveConfig {
            flow_step: 1e-3,
            ..SolveConfig::flow()
        };
        let mut u: Vec<f64> = vec![0.5, -0.2, 0.1, -0.4];
        for _ in 0..50 {
            let next = flow_step(&p, &u, &cfg).unwrap();
            assert!(p.increment(&u, &next).unwrap() <= 1e-15);
            u = next;
        }
    }

    #[test]
    fn hyperbolic_target_recovered() {
        let c = fixtures::octahedron::<f64>(1.0);
        let known = PackingMetric::new(Geometry::Hyperbolic, vec![0.8, 1.1, 0.9, 1.3, 0.7, 1.0]).unwrap();
        let k = curvature(&c, &known, false).unwrap();
        let start = PackingMetric::new(Geometry::Hyperbolic, vec![1.0; 6]).unwrap();
        let out = solve(&c, CurvatureTarget::Curvature(k.values), &start, &SolveConfig::newton()).unwrap();
        assert!(out.converged(), "{:?}", out.status);
        assert_eq!(out.gauge, Gauge::None);
        for (a, b) in out.metric.radii().iter().zip(known.radii()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn flow_leaving_hyperbolic_domain() {
        let c = fixtures::octahedron::<f64>(1.0);
        // all-negative curvature target pushes every radius to infinity
        let start = PackingMetric::new(Geometry::Hyperbolic, vec![1.0; 6]).unwrap();
        let cfg = SolveConfig {
            flow_step: 0.5,
            max_iters: 10_000,
            ..SolveConfig::flow()
        };
        let out = solve(&c, CurvatureTarget::Curvature(vec![-1.0; 6]), &start, &cfg).unwrap();
        assert_ne!(out.status, SolveStatus::Converged);
    }
}
