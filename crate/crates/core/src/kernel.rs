//! Geometry-dispatched per-face evaluation.

use crate::complex::{FaceWeightTriple, Geometry};
use crate::error::Result;
use crate::euclidean::{self, Admissibility, FaceAngles, Mat3};
use crate::hyperbolic;
use crate::scalar::{sqrt_pos, Real};

pub fn lengths<T: Real>(g: Geometry, r: [T; 3], w: &FaceWeightTriple<T>) -> [T; 3] {
    match g {
        Geometry::Euclidean => euclidean::euclidean_lengths(r, w),
        Geometry::Hyperbolic => hyperbolic::hyperbolic_lengths(r, w),
    }
}

pub fn admissibility<T: Real>(g: Geometry, r: [T; 3], w: &FaceWeightTriple<T>) -> Admissibility<T> {
    match g {
        Geometry::Euclidean => euclidean::euclidean_admissible(r, w),
        Geometry::Hyperbolic => hyperbolic::hyperbolic_admissible(r, w),
    }
}

/// Certificate divided by its term scale; the sign decides admissibility.
pub fn relative_certificate<T: Real>(g: Geometry, r: [T; 3], w: &FaceWeightTriple<T>) -> T {
    let a = admissibility(g, r, w);
    if a.scale > T::zero() {
        a.certificate / a.scale
    } else {
        T::zero()
    }
}

/// Extended angles of face `face`; errors if the face has some `γ < 0`.
pub fn extended_angles<T: Real>(g: Geometry, r: [T; 3], w: &FaceWeightTriple<T>, face: usize) -> Result<FaceAngles<T>> {
    match g {
        Geometry::Euclidean => euclidean::euclidean_face(r, w, face),
        Geometry::Hyperbolic => hyperbolic::hyperbolic_face(r, w, face),
    }
}

/// Inner angles at an admissible point, no weight condition required.
pub fn inner_angles<T: Real>(g: Geometry, r: [T; 3], w: &FaceWeightTriple<T>) -> Result<[T; 3]> {
    match g {
        Geometry::Euclidean => euclidean::euclidean_inner_angles(r, w),
        Geometry::Hyperbolic => hyperbolic::hyperbolic_inner_angles(r, w),
    }
}

pub fn angle_jacobian<T: Real>(g: Geometry, r: [T; 3], w: &FaceWeightTriple<T>) -> Mat3<T> {
    match g {
        Geometry::Euclidean => euclidean::euclidean_angle_jacobian(r, w),
        Geometry::Hyperbolic => hyperbolic::hyperbolic_angle_jacobian(r, w),
    }
}

/// Area of an admissible face (zero outside the admissible set).
pub fn area<T: Real>(g: Geometry, r: [T; 3], w: &FaceWeightTriple<T>) -> T {
    match g {
        Geometry::Euclidean => {
            let a = euclidean::euclidean_admissible(r, w);
            if a.admissible {
                sqrt_pos(a.certificate) / T::lit(2.0)
            } else {
                T::zero()
            }
        }
        Geometry::Hyperbolic => hyperbolic::hyperbolic_area(r, w),
    }
}

/// Everything known about one face at one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleReport<T> {
    pub lengths: [T; 3],
    pub admissible: bool,
    pub certificate: T,
    /// Extended angles; `None` when the face violates the weight condition
    /// and is not admissible.
    pub angles: Option<[T; 3]>,
    pub jacobian: Mat3<T>,
    pub area: T,
}

pub fn triangle_report<T: Real>(g: Geometry, r: [T; 3], w: &FaceWeightTriple<T>) -> TriangleReport<T> {
    let adm = admissibility(g, r, w);
    let angles = match extended_angles(g, r, w, 0) {
        Ok(a) => Some(a.angles),
        Err(_) => inner_angles(g, r, w).ok(),
    };
    TriangleReport {
        lengths: lengths(g, r, w),
        admissible: adm.admissible,
        certificate: adm.certificate,
        angles,
        jacobian: angle_jacobian(g, r, w),
        area: area(g, r, w),
    }
}
