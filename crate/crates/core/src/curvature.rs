//! Vertex curvatures and the global curvature Jacobian.

use crate::complex::{Geometry, PackingMetric, WeightedComplex};
use crate::error::{Error, Result};
use crate::euclidean::Mat3;
use crate::kernel;
use crate::linalg::SparseSymmetric;
use crate::parallel::map_indexed;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureVector<T> {
    pub geometry: Geometry,
    pub values: Vec<T>,
    /// Faces evaluated with extension values instead of inner angles.
    pub extended_faces: Vec<usize>,
}

impl<T: Real> CurvatureVector<T> {
    pub fn extended(&self) -> bool {
        !self.extended_faces.is_empty()
    }

    pub fn total(&self) -> T {
        self.values.iter().copied().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaCurvatureVector<T> {
    pub alpha: T,
    pub values: Vec<T>,
    pub s: Vec<T>,
}

impl<T: Real> AlphaCurvatureVector<T> {
    /// `R_i = K_i / s_i^α`.
    pub fn from_curvature(k: &CurvatureVector<T>, m: &PackingMetric<T>, alpha: T) -> Self {
        let s = m.s();
        let values = k.values.iter().zip(&s).map(|(ki, si)| *ki / si.powf(alpha)).collect();
        Self { alpha, values, s }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalJacobian<T> {
    pub geometry: Geometry,
    /// `∂K/∂u`.
    pub matrix: SparseSymmetric<T>,
    pub extended_faces: Vec<usize>,
}

pub(crate) fn check_len<T: Real>(c: &WeightedComplex<T>, len: usize) -> Result<()> {
    if len == c.vertex_count() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: c.vertex_count(),
            actual: len,
        })
    }
}

pub fn face_radii<T: Real>(c: &WeightedComplex<T>, radii: &[T], f: usize) -> [T; 3] {
    c.faces()[f].map(|v| radii[v])
}

struct FaceEval<T> {
    angles: [T; 3],
    admissible: bool,
    jacobian: Option<Mat3<T>>,
}

fn evaluate_faces<T: Real>(
    c: &WeightedComplex<T>,
    m: &PackingMetric<T>,
    use_extension: bool,
    with_jacobian: bool,
) -> Result<Vec<FaceEval<T>>> {
    check_len(c, m.len())?;
    let g = m.geometry();
    let radii = m.radii();
    let evals = map_indexed(c.faces().len(), |f| -> Result<FaceEval<T>> {
        let r = face_radii(c, radii, f);
        let w = c.face_weights(f);
        let (angles, admissible) = if use_extension {
            let a = kernel::extended_angles(g, r, &w, f)?;
            (a.angles, a.admissible)
        } else {
            let a = kernel::inner_angles(g, r, &w).map_err(|_| Error::InadmissibleFace { face: f })?;
            (a, true)
        };
        let jacobian = (with_jacobian && admissible).then(|| kernel::angle_jacobian(g, r, &w));
        Ok(FaceEval {
            angles,
            admissible,
            jacobian,
        })
    });
    evals.into_iter().collect()
}

fn sum_angles<T: Real>(c: &WeightedComplex<T>, g: Geometry, evals: &[FaceEval<T>]) -> CurvatureVector<T> {
    let two_pi = T::lit(2.0) * T::PI();
    let mut values = vec![two_pi; c.vertex_count()];
    let mut extended_faces = Vec::new();
    for (f, (tri, e)) in c.faces().iter().zip(evals).enumerate() {
        for a in 0..3 {
            values[tri[a]] = values[tri[a]] - e.angles[a];
        }
        if !e.admissible {
            extended_faces.push(f);
        }
    }
    CurvatureVector {
        geometry: g,
        values,
        extended_faces,
    }
}

fn assemble_jacobian<T: Real>(c: &WeightedComplex<T>, evals: &[FaceEval<T>]) -> SparseSymmetric<T> {
    let mut m = SparseSymmetric::with_pattern(c.vertex_count(), c.edges().iter().map(|e| (e.0, e.1)));
    for (tri, e) in c.faces().iter().zip(evals) {
        if let Some(j) = &e.jacobian {
            for a in 0..3 {
                m.add_sym(tri[a], tri[a], -j[a][a]);
                for b in (a + 1)..3 {
                    m.add_sym(tri[a], tri[b], -j[a][b]);
                }
            }
        }
    }
    m
}

/// `K_i = 2π - Σ θ_i` over the faces at `i`.
///
/// Without extension every face must be admissible; with extension every
/// face must satisfy the weight condition.
pub fn curvature<T: Real>(
    c: &WeightedComplex<T>,
    m: &PackingMetric<T>,
    use_extension: bool,
) -> Result<CurvatureVector<T>> {
    let evals = evaluate_faces(c, m, use_extension, false)?;
    Ok(sum_angles(c, m.geometry(), &evals))
}

/// α-curvature. Extension values are used when the complex satisfies the
/// weight condition; otherwise every face must be admissible.
pub fn alpha_curvature<T: Real>(
    c: &WeightedComplex<T>,
    m: &PackingMetric<T>,
    alpha: T,
) -> Result<AlphaCurvatureVector<T>> {
    let use_ext = c.validate_weight_condition().passes();
    let k = curvature(c, m, use_ext)?;
    Ok(AlphaCurvatureVector::from_curvature(&k, m, alpha))
}

/// `Λ = ∂K/∂u = -Σ_faces Λ_face`, with zero blocks for extended faces.
pub fn global_jacobian<T: Real>(c: &WeightedComplex<T>, m: &PackingMetric<T>) -> Result<GlobalJacobian<T>> {
    let use_ext = c.validate_weight_condition().passes();
    let evals = evaluate_faces(c, m, use_ext, true)?;
    let extended_faces = evals
        .iter()
        .enumerate()
        .filter(|(_, e)| !e.admissible)
        .map(|(f, _)| f)
        .collect();
    Ok(GlobalJacobian {
        geometry: m.geometry(),
        matrix: assemble_jacobian(c, &evals),
        extended_faces,
    })
}

/// Extended curvature and Jacobian from one sweep over the faces.
pub(crate) fn curvature_and_jacobian<T: Real>(
    c: &WeightedComplex<T>,
    m: &PackingMetric<T>,
    with_jacobian: bool,
) -> Result<(CurvatureVector<T>, Option<SparseSymmetric<T>>)> {
    let evals = evaluate_faces(c, m, true, with_jacobian)?;
    let k = sum_angles(c, m.geometry(), &evals);
    let j = with_jacobian.then(|| assemble_jacobian(c, &evals));
    Ok((k, j))
}

/// Per-face areas (zero for non-admissible faces).
pub fn face_areas<T: Real>(c: &WeightedComplex<T>, m: &PackingMetric<T>) -> Result<Vec<T>> {
    check_len(c, m.len())?;
    let g = m.geometry();
    Ok(map_indexed(c.faces().len(), |f| {
        kernel::area(g, face_radii(c, m.radii(), f), &c.face_weights(f))
    }))
}

/// `Σ K_i - 2π χ`, which vanishes for Euclidean metrics and equals the total
/// area for hyperbolic ones.
pub fn gauss_bonnet_defect<T: Real>(c: &WeightedComplex<T>, k: &CurvatureVector<T>) -> T {
    let chi = T::from_i64(c.euler_characteristic()).unwrap();
    k.total() - T::lit(2.0) * T::PI() * chi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::Edge;
    use crate::fixtures;
    use crate::linalg::symmetric_eigen;
    use std::f64::consts::PI;

    fn tet(i: f64) -> WeightedComplex<f64> {
        fixtures::tetrahedron(i)
    }

    #[test]
    fn tetrahedron_curvature_is_pi() {
        let c = tet(1.0);
        for scale in [1.0, 10.0] {
            let m = PackingMetric::new(Geometry::Euclidean, vec![scale; 4]).unwrap();
            let k = curvature(&c, &m, false).unwrap();
            for v in &k.values {
                assert!((v - PI).abs() < 1e-14);
            }
            assert!(gauss_bonnet_defect(&c, &k).abs() < 1e-13);
        }
    }

    #[test]
    fn octahedron_hyperbolic_defect() {
        let c = fixtures::octahedron(1.0);
        let m = PackingMetric::new(Geometry::Hyperbolic, vec![1.0; 6]).unwrap();
        let k = curvature(&c, &m, false).unwrap();
        let c2 = 2f64.cosh();
        let theta = (c2 / (c2 + 1.0)).acos();
        let expected = 8.0 * (PI - 3.0 * theta);
        assert!((gauss_bonnet_defect(&c, &k) - expected).abs() < 1e-12);
        let areas: f64 = face_areas(&c, &m).unwrap().iter().sum();
        assert!((areas - expected).abs() < 1e-12);
    }

    #[test]
    fn alpha_examples() {
        let c = tet(1.0);
        let m = PackingMetric::new(Geometry::Euclidean, vec![1.0; 4]).unwrap();
        let r0 = alpha_curvature(&c, &m, 0.0).unwrap();
        let k = curvature(&c, &m, true).unwrap();
        assert_eq!(r0.values, k.values);
        let r2 = alpha_curvature(&c, &m, 2.0).unwrap();
        assert!(r2.values.iter().all(|v| (v - PI).abs() < 1e-14));

        let m2 = PackingMetric::new(Geometry::Euclidean, vec![2.0; 4]).unwrap();
        let r1 = alpha_curvature(&c, &m2, 1.0).unwrap();
        assert!(r1.values.iter().all(|v| (v - PI / 2.0).abs() < 1e-14));
    }

    #[test]
    fn global_spectra() {
        let c = tet(1.0);
        let m = PackingMetric::new(Geometry::Euclidean, vec![1.0; 4]).unwrap();
        let j = global_jacobian(&c, &m).unwrap();
        let e = symmetric_eigen(&j.matrix.to_dense());
        let norm = e.spectral_norm();
        assert!(e.values[0].abs() < 1e-9 * norm);
        assert!(e.values[1] > 0.0);
        let v = e.vector(0);
        for x in &v {
            assert!((x.abs() - 0.5).abs() < 1e-9);
        }
        let ones = j.matrix.matvec(&[1.0; 4]);
        assert!(ones.iter().all(|x| x.abs() < 1e-9));

        let c = fixtures::octahedron(1.0);
        let m = PackingMetric::new(Geometry::Hyperbolic, vec![1.0; 6]).unwrap();
        let j = global_jacobian(&c, &m).unwrap();
        assert!(symmetric_eigen(&j.matrix.to_dense()).values[0] > 0.0);
    }

    #[test]
    fn inadmissible_without_extension() {
        let faces = fixtures::tetrahedron_faces();
        let w = [
            (Edge(0, 1), 0.0),
            (Edge(0, 2), 0.0),
            (Edge(0, 3), 0.0),
            (Edge(1, 2), 10.0),
            (Edge(1, 3), 0.0),
            (Edge(2, 3), 0.0),
        ];
        let c = WeightedComplex::<f64>::new(4, faces, w).unwrap();
        let m = PackingMetric::new(Geometry::Euclidean, vec![0.1, 1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(curvature(&c, &m, false), Err(Error::InadmissibleFace { .. })));
        let k = curvature(&c, &m, true).unwrap();
        assert!(k.extended());
        assert!(gauss_bonnet_defect(&c, &k).abs() < 1e-12);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for g in [Geometry::Euclidean, Geometry::Hyperbolic] {
            let c = fixtures::torus(4, 4, 0.5);
            let m = fixtures::random_admissible_metric(&c, g, &mut rng).unwrap();
            let j = global_jacobian(&c, &m).unwrap().matrix.to_dense();
            let u = m.to_u();
            let h = 1e-6;
            for b in 0..c.vertex_count() {
                let mut up = u.clone();
                let mut um = u.clone();
                up[b] += h;
                um[b] -= h;
                let kp = curvature(&c, &PackingMetric::from_u(g, &up).unwrap(), false).unwrap();
                let km = curvature(&c, &PackingMetric::from_u(g, &um).unwrap(), false).unwrap();
                for a in 0..c.vertex_count() {
                    let fd = (kp.values[a] - km.values[a]) / (2.0 * h);
                    assert!((fd - j[(a, b)]).abs() < 1e-5 * (1.0 + j[(a, b)].abs()));
                }
            }
        }
    }
}
