//! Extended Ricci potential.
//!
//! The potential is the integral of the closed 1-form
//! `Σ (K̃_i - target_i) du_i`, taken along the straight segment from the base
//! point. Its gradient is the curvature residual and its Hessian is
//! `Λ̃ - diag(α R̄_i s_i^α)`.

use crate::complex::{FaceWeightTriple, Geometry, PackingMetric, WeightedComplex};
use crate::curvature::{check_len, curvature_and_jacobian, CurvatureVector};
use crate::error::{Error, Result};
use crate::kernel;
use crate::linalg::{dot, norm2, SparseSymmetric};
use crate::quadrature::{integrate, QuadratureConfig};
use crate::scalar::Real;

/// Samples per segment used to bracket admissibility changes.
const BRACKET_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum CurvatureTarget<T> {
    /// Prescribed classical curvature `K̄`.
    Curvature(Vec<T>),
    /// Prescribed α-curvature `R̄`; the target curvature is `R̄_i s_i^α`.
    Alpha { alpha: T, values: Vec<T> },
}

impl<T: Real> CurvatureTarget<T> {
    pub fn len(&self) -> usize {
        match self {
            CurvatureTarget::Curvature(v) => v.len(),
            CurvatureTarget::Alpha { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Target curvature at `u` (with `s = e^u`).
    pub fn at(&self, u: &[T]) -> Vec<T> {
        match self {
            CurvatureTarget::Curvature(v) => v.clone(),
            CurvatureTarget::Alpha { alpha, values } => values
                .iter()
                .zip(u)
                .map(|(rb, ui)| *rb * (*alpha * *ui).exp())
                .collect(),
        }
    }

    /// Diagonal of `∂ target / ∂u`.
    pub fn derivative(&self, u: &[T]) -> Vec<T> {
        match self {
            CurvatureTarget::Curvature(v) => vec![T::zero(); v.len()],
            CurvatureTarget::Alpha { alpha, values } => values
                .iter()
                .zip(u)
                .map(|(rb, ui)| *alpha * *rb * (*alpha * *ui).exp())
                .collect(),
        }
    }

    /// True when the target does not move with `u` (classical curvature,
    /// `α = 0`, or `R̄ ≡ 0`).
    pub fn is_constant(&self) -> bool {
        match self {
            CurvatureTarget::Curvature(_) => true,
            CurvatureTarget::Alpha { alpha, values } => *alpha == T::zero() || values.iter().all(|v| *v == T::zero()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec<T> {
    pub geometry: Geometry,
    pub target: CurvatureTarget<T>,
    pub base_point: Vec<T>,
}

/// Checks that `u` lies in the u-domain of `g`.
pub fn check_u<T: Real>(g: Geometry, u: &[T]) -> Result<()> {
    for (i, ui) in u.iter().enumerate() {
        let bad = !ui.is_finite() || (g == Geometry::Hyperbolic && *ui >= T::zero());
        if bad {
            return Err(Error::UDomainViolation {
                vertex: i,
                value: ui.to_f64_lossy(),
            });
        }
    }
    Ok(())
}

/// Curvature and residual at one point.
#[derive(Debug, Clone)]
pub struct Evaluation<T> {
    pub curvature: CurvatureVector<T>,
    pub target: Vec<T>,
    pub gradient: Vec<T>,
}

/// Potential bound to a complex.
#[derive(Debug, Clone)]
pub struct Potential<'a, T> {
    complex: &'a WeightedComplex<T>,
    spec: PotentialSpec<T>,
}

impl<'a, T: Real> Potential<'a, T> {
    pub fn new(complex: &'a WeightedComplex<T>, spec: PotentialSpec<T>) -> Result<Self> {
        check_len(complex, spec.target.len())?;
        check_len(complex, spec.base_point.len())?;
        check_u(spec.geometry, &spec.base_point)?;
        complex.require_weight_condition()?;
        Ok(Self { complex, spec })
    }

    pub fn spec(&self) -> &PotentialSpec<T> {
        &self.spec
    }

    pub fn complex(&self) -> &'a WeightedComplex<T> {
        self.complex
    }

    fn metric(&self, u: &[T]) -> Result<PackingMetric<T>> {
        check_len(self.complex, u.len())?;
        check_u(self.spec.geometry, u)?;
        PackingMetric::from_u(self.spec.geometry, u)
    }

    pub fn evaluate(&self, u: &[T]) -> Result<Evaluation<T>> {
        let m = self.metric(u)?;
        let (k, _) = curvature_and_jacobian(self.complex, &m, false)?;
        let target = self.spec.target.at(u);
        let gradient = k.values.iter().zip(&target).map(|(a, b)| *a - *b).collect();
        Ok(Evaluation {
            curvature: k,
            target,
            gradient,
        })
    }

    /// `K̃(u) - target(u)`.
    pub fn gradient(&self, u: &[T]) -> Result<Vec<T>> {
        Ok(self.evaluate(u)?.gradient)
    }

    /// Evaluation together with the Hessian `Λ̃ - diag(∂ target/∂u)`.
    pub fn evaluate_with_hessian(&self, u: &[T]) -> Result<(Evaluation<T>, SparseSymmetric<T>)> {
        let m = self.metric(u)?;
        let (k, j) = curvature_and_jacobian(self.complex, &m, true)?;
        let mut h = j.expect("jacobian requested");
        let d: Vec<T> = self.spec.target.derivative(u).into_iter().map(|x| -x).collect();
        h.add_diagonal(&d);
        let target = self.spec.target.at(u);
        let gradient = k.values.iter().zip(&target).map(|(a, b)| *a - *b).collect();
        Ok((
            Evaluation {
                curvature: k,
                target,
                gradient,
            },
            h,
        ))
    }

    pub fn hessian(&self, u: &[T]) -> Result<SparseSymmetric<T>> {
        Ok(self.evaluate_with_hessian(u)?.1)
    }

    /// Parameters in `[0, 1]` where some face changes admissibility along
    /// the segment `from → to`.
    pub fn breakpoints(&self, from: &[T], to: &[T]) -> Result<Vec<T>> {
        let g = self.spec.geometry;
        let c = self.complex;
        let point = |t: T| -> Vec<T> { from.iter().zip(to).map(|(a, b)| *a + t * (*b - *a)).collect() };
        let n = T::lit(BRACKET_SAMPLES as f64);
        let samples: Vec<PackingMetric<T>> = (0..=BRACKET_SAMPLES)
            .map(|k| self.metric(&point(T::lit(k as f64) / n)))
            .collect::<Result<_>>()?;
        let mut out = Vec::new();
        for f in 0..c.faces().len() {
            let w = c.face_weights(f);
            let adm = |m: &PackingMetric<T>| {
                let r = c.faces()[f].map(|v| m.radii()[v]);
                kernel::admissibility(g, r, &w).admissible
            };
            let flags: Vec<bool> = samples.iter().map(adm).collect();
            for k in 0..BRACKET_SAMPLES {
                if flags[k] != flags[k + 1] {
                    let mut lo = T::lit(k as f64) / n;
                    let mut hi = T::lit((k + 1) as f64) / n;
                    for _ in 0..60 {
                        let mid = (lo + hi) / T::lit(2.0);
                        if !(mid > lo && mid < hi) {
                            break;
                        }
                        if adm(&self.metric(&point(mid))?) == flags[k] {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    out.push((lo + hi) / T::lit(2.0));
                }
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        Ok(out)
    }

    pub fn default_quadrature(&self, from: &[T], to: &[T]) -> QuadratureConfig<T> {
        let d: Vec<T> = from.iter().zip(to).map(|(a, b)| *b - *a).collect();
        QuadratureConfig {
            abs_tol: T::lit(1e-10) * (T::one() + norm2(&d)),
            max_intervals: 2000,
        }
    }

    /// `Ẽ(to) - Ẽ(from)`.
    pub fn increment(&self, from: &[T], to: &[T]) -> Result<T> {
        self.increment_with(from, to, self.default_quadrature(from, to))
    }

    pub fn increment_with(&self, from: &[T], to: &[T], cfg: QuadratureConfig<T>) -> Result<T> {
        check_len(self.complex, from.len())?;
        check_len(self.complex, to.len())?;
        let d: Vec<T> = from.iter().zip(to).map(|(a, b)| *b - *a).collect();
        if d.iter().all(|x| *x == T::zero()) {
            return Ok(T::zero());
        }
        let mut pts = vec![T::zero()];
        pts.extend(self.breakpoints(from, to)?);
        pts.push(T::one());
        let f = |t: T| -> Result<T> {
            let u: Vec<T> = from.iter().zip(&d).map(|(a, di)| *a + t * *di).collect();
            Ok(dot(&self.gradient(&u)?, &d))
        };
        Ok(integrate(f, &pts, cfg)?.value)
    }

    /// `Ẽ(u)`, normalized to vanish at the base point.
    pub fn value(&self, u: &[T]) -> Result<T> {
        self.increment(&self.spec.base_point, u)
    }
}

pub fn potential_gradient<T: Real>(c: &WeightedComplex<T>, spec: &PotentialSpec<T>, u: &[T]) -> Result<Vec<T>> {
    Potential::new(c, spec.clone())?.gradient(u)
}

pub fn potential_value<T: Real>(c: &WeightedComplex<T>, spec: &PotentialSpec<T>, u: &[T]) -> Result<T> {
    Potential::new(c, spec.clone())?.value(u)
}

/// `∫ θ̃ · du` over the segment `u0_face → u_face` for a single face.
pub fn face_extended_energy<T: Real>(
    g: Geometry,
    w: &FaceWeightTriple<T>,
    u_face: [T; 3],
    u0_face: [T; 3],
) -> Result<T> {
    w.check_condition(0)?;
    check_u(g, &u_face)?;
    check_u(g, &u0_face)?;
    let d = [0, 1, 2].map(|a| u_face[a] - u0_face[a]);
    if d.iter().all(|x| *x == T::zero()) {
        return Ok(T::zero());
    }
    let radii = |t: T| -> Result<[T; 3]> {
        let u: Vec<T> = (0..3).map(|a| u0_face[a] + t * d[a]).collect();
        let m = PackingMetric::from_u(g, &u)?;
        Ok([m.radii()[0], m.radii()[1], m.radii()[2]])
    };
    let adm = |t: T| -> Result<bool> { Ok(kernel::admissibility(g, radii(t)?, w).admissible) };
    let n = T::lit(BRACKET_SAMPLES as f64);
    let mut pts = vec![T::zero()];
    let mut prev = adm(T::zero())?;
    for k in 1..=BRACKET_SAMPLES {
        let t = T::lit(k as f64) / n;
        let cur = adm(t)?;
        if cur != prev {
            let (mut lo, mut hi) = (T::lit((k - 1) as f64) / n, t);
            for _ in 0..60 {
                let mid = (lo + hi) / T::lit(2.0);
                if !(mid > lo && mid < hi) {
                    break;
                }
                if adm(mid)? == prev {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            pts.push((lo + hi) / T::lit(2.0));
        }
        prev = cur;
    }
    pts.push(T::one());
    let f = |t: T| -> Result<T> {
        let th = kernel::extended_angles(g, radii(t)?, w, 0)?.angles;
        Ok(th[0] * d[0] + th[1] * d[1] + th[2] * d[2])
    };
    let cfg = QuadratureConfig {
        abs_tol: T::lit(1e-10) * (T::one() + norm2(&d)),
        max_intervals: 2000,
    };
    Ok(integrate(f, &pts, cfg)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use std::f64::consts::PI;

    fn tet_spec(target: Vec<f64>) -> PotentialSpec<f64> {
        PotentialSpec {
            geometry: Geometry::Euclidean,
            target: CurvatureTarget::Curvature(target),
            base_point: vec![0.0; 4],
        }
    }

    #[test]
    fn symmetric_solution_is_critical() {
        let c = fixtures::tetrahedron(1.0);
        let p = Potential::new(&c, tet_spec(vec![PI; 4])).unwrap();
        let g = p.gradient(&[0.0; 4]).unwrap();
        assert!(g.iter().all(|x| x.abs() < 1e-14));
        assert_eq!(p.value(&[0.0; 4]).unwrap(), 0.0);
    }

    #[test]
    fn gauge_direction() {
        let c = fixtures::tetrahedron(1.0);
        let p = Potential::new(&c, tet_spec(vec![PI + 0.1, PI - 0.1, PI, PI])).unwrap();
        let g = p.gradient(&[0.3, -0.2, 0.1, 0.0]).unwrap();
        assert!(g.iter().sum::<f64>().abs() < 1e-13);
        let p = Potential::new(&c, tet_spec(vec![PI + 0.5; 4])).unwrap();
        let g = p.gradient(&[0.3, -0.2, 0.1, 0.0]).unwrap();
        assert!((g.iter().sum::<f64>() + 2.0).abs() < 1e-13);
    }

    #[test]
    fn hyperbolic_domain_enforced() {
        let c = fixtures::octahedron(1.0);
        let spec = PotentialSpec {
            geometry: Geometry::Hyperbolic,
            target: CurvatureTarget::Curvature(vec![0.0; 6]),
            base_point: vec![-1.0; 6],
        };
        let p = Potential::new(&c, spec).unwrap();
        assert!(matches!(
            p.gradient(&[-1.0, -1.0, -1.0, -1.0, -1.0, 0.0]),
            Err(Error::UDomainViolation { vertex: 5, .. })
        ));
    }

    #[test]
    fn face_energy_constant_region_is_linear() {
        // every point on this segment has l_k > l_i + l_j
        let w = FaceWeightTriple::new(0.0, 0.0, 10.0);
        let u0 = [0.0, 0.0, (0.1f64).ln()];
        let u1 = [0.2, -0.1, (0.05f64).ln()];
        let e = face_extended_energy(Geometry::Euclidean, &w, u1, u0).unwrap();
        assert!((e - PI * (u1[2] - u0[2])).abs() < 1e-12);
        assert_eq!(face_extended_energy(Geometry::Euclidean, &w, u0, u0).unwrap(), 0.0);
    }

    #[test]
    fn face_energy_gradient_is_angles() {
        let w = FaceWeightTriple::new(-0.4, 1.0, 2.0);
        for g in [Geometry::Euclidean, Geometry::Hyperbolic] {
            let u0: [f64; 3] = [-0.9, -0.7, -1.3];
            let u: [f64; 3] = [-0.5, -1.1, -0.8];
            let r = PackingMetric::from_u(g, &u).unwrap();
            let th = kernel::extended_angles(g, [r.radii()[0], r.radii()[1], r.radii()[2]], &w, 0)
                .unwrap()
                .angles;
            let h = 1e-5;
            for a in 0..3 {
                let mut up = u;
                let mut um = u;
                up[a] += h;
                um[a] -= h;
                let ep = face_extended_energy(g, &w, up, u0).unwrap();
                let em = face_extended_energy(g, &w, um, u0).unwrap();
                let fd = (ep - em) / (2.0 * h);
                assert!((fd - th[a]).abs() < 1e-5, "{g}: {fd} vs {}", th[a]);
            }
        }
    }
}
