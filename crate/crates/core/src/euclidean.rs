//! Euclidean triangle kernel in radius/u coordinates.

use crate::complex::FaceWeightTriple;
use crate::error::{Error, Result};
use crate::scalar::{sqrt_pos, Real};

pub type Mat3<T> = [[T; 3]; 3];

/// Admissibility verdict together with the certificate that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility<T> {
    pub admissible: bool,
    /// Certificate evaluated on the given radii (positive iff admissible).
    pub certificate: T,
    /// Sum of absolute values of the certificate terms, same units.
    pub scale: T,
}

/// Lengths opposite each vertex; `l_i² = r_j² + r_k² + 2 r_j r_k I_i`.
pub fn euclidean_lengths<T: Real>(r: [T; 3], w: &FaceWeightTriple<T>) -> [T; 3] {
    let two = T::lit(2.0);
    let len = |a: usize| {
        let (rj, rk) = (r[(a + 1) % 3], r[(a + 2) % 3]);
        let d = rj - rk;
        (d * d + two * rj * rk * (T::one() + w.w[a])).sqrt()
    };
    [len(0), len(1), len(2)]
}

fn max3<T: Real>(r: [T; 3]) -> T {
    r[0].max(r[1]).max(r[2])
}

/// Certificate terms on radii already scaled to `max r = 1`.
fn certificate_terms<T: Real>(r: [T; 3], w: &FaceWeightTriple<T>) -> (T, T) {
    let two = T::lit(2.0);
    let [ri, rj, rk] = r;
    let [ii, ij, ik] = w.w;
    let [g_ijk, g_jik, g_kij] = w.gammas();
    let (ri2, rj2, rk2) = (ri * ri, rj * rj, rk * rk);
    let terms = [
        ri2 * rj2 * (T::one() - ik * ik),
        ri2 * rk2 * (T::one() - ij * ij),
        rj2 * rk2 * (T::one() - ii * ii),
        two * ri2 * rj * rk * g_ijk,
        two * ri * rj2 * rk * g_jik,
        two * ri * rj * rk2 * g_kij,
    ];
    let sum = terms.iter().fold(T::zero(), |a, &t| a + t);
    let scale = terms.iter().fold(T::zero(), |a, &t| a + t.abs());
    (sum, scale)
}

fn classify<T: Real>(cert: T, scale: T) -> bool {
    cert > T::boundary_tol() * scale
}

/// Strict triangle inequalities decided by the quartic certificate in `r`.
pub fn euclidean_admissible<T: Real>(r: [T; 3], w: &FaceWeightTriple<T>) -> Admissibility<T> {
    let m = max3(r);
    let (c, s) = certificate_terms(r.map(|x| x / m), w);
    let m4 = m * m * m * m;
    Admissibility {
        admissible: classify(c, s),
        certificate: c * m4,
        scale: s * m4,
    }
}

/// Angles from side lengths (`l[a]` opposite vertex `a`).
pub fn euclidean_angles<T: Real>(l: [T; 3]) -> Result<[T; 3]> {
    let degenerate = || Error::DegenerateTriangle {
        lengths: l.map(Real::to_f64_lossy),
    };
    if l.iter().any(|x| !(*x > T::zero()) || !x.is_finite()) {
        return Err(degenerate());
    }
    let mut s = l;
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let [a, b, c] = s;
    let slack = c - (a - b);
    if !(slack > T::zero()) {
        return Err(degenerate());
    }
    // Kahan's area formula; `twice_area` = l_j l_k sin θ_i.
    let p = (a + (b + c)) * slack * (c + (a - b)) * (a + (b - c));
    let twice_area = p.sqrt() / T::lit(2.0);
    let half = T::lit(0.5);
    let ang = |x: usize| {
        let (li, lj, lk) = (l[x], l[(x + 1) % 3], l[(x + 2) % 3]);
        let cos_part = half * ((lj - li) * (lj + li) + lk * lk);
        twice_area.atan2(cos_part)
    };
    let m = longest(l);
    let mut t = [ang(0), ang(1), ang(2)];
    t[m] = T::PI() - t[(m + 1) % 3] - t[(m + 2) % 3];
    Ok(t)
}

/// Angles of an admissible face straight from radii, with `A = l_j l_k sin θ_i`.
fn interior_angles<T: Real>(rn: [T; 3], w: &FaceWeightTriple<T>, cert: T) -> [T; 3] {
    let a = cert.sqrt();
    let ang = |x: usize| {
        let (ri, rj, rk) = (rn[x], rn[(x + 1) % 3], rn[(x + 2) % 3]);
        let (ii, ij, ik) = (w.w[x], w.w[(x + 1) % 3], w.w[(x + 2) % 3]);
        let e = ri * ri + ri * (rk * ij + rj * ik) - rj * rk * ii;
        a.atan2(e)
    };
    [ang(0), ang(1), ang(2)]
}

/// Inner angles of an admissible face computed from radii.
pub fn euclidean_inner_angles<T: Real>(r: [T; 3], w: &FaceWeightTriple<T>) -> Result<[T; 3]> {
    let m = max3(r);
    let rn = r.map(|x| x / m);
    let (cert, scale) = certificate_terms(rn, w);
    if classify(cert, scale) {
        Ok(interior_angles(rn, w, cert))
    } else {
        Err(Error::DegenerateTriangle {
            lengths: euclidean_lengths(r, w).map(Real::to_f64_lossy),
        })
    }
}

/// Index of the longest side, i.e. the vertex that receives π outside the
/// admissible set.
pub(crate) fn longest<T: Real>(l: [T; 3]) -> usize {
    let mut m = 0;
    for a in 1..3 {
        if l[a] > l[m] {
            m = a;
        }
    }
    m
}

pub(crate) fn degenerate_angles<T: Real>(m: usize) -> [T; 3] {
    let mut t = [T::zero(); 3];
    t[m] = T::PI();
    t
}

/// Inner angles continued by constants outside the admissible set.
pub fn euclidean_extended_angles<T: Real>(r: [T; 3], w: &FaceWeightTriple<T>) -> Result<[T; 3]> {
    Ok(euclidean_face(r, w, 0)?.angles)
}

/// Angles and admissibility of one face; `face` is only used in errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceAngles<T> {
    pub admissible: bool,
    pub angles: [T; 3],
}

pub(crate) fn euclidean_face<T: Real>(r: [T; 3], w: &FaceWeightTriple<T>, face: usize) -> Result<FaceAngles<T>> {
    w.check_condition(face)?;
    let m = max3(r);
    let rn = r.map(|x| x / m);
    let (cert, scale) = certificate_terms(rn, w);
    if classify(cert, scale) {
        Ok(FaceAngles {
            admissible: true,
            angles: interior_angles(rn, w, cert),
        })
    } else {
        let l = euclidean_lengths(rn, w);
        Ok(FaceAngles {
            admissible: false,
            angles: degenerate_angles(longest(l)),
        })
    }
}

/// `∂θ/∂u` for one face with `u = ln r`; zero outside the admissible set.
pub fn euclidean_angle_jacobian<T: Real>(r: [T; 3], w: &FaceWeightTriple<T>) -> Mat3<T> {
    let m = max3(r);
    let rn = r.map(|x| x / m);
    let (cert, scale) = certificate_terms(rn, w);
    let mut jac = [[T::zero(); 3]; 3];
    if !classify(cert, scale) {
        return jac;
    }
    let a = cert.sqrt();
    let l = euclidean_lengths(rn, w);
    let g = w.gammas();
    for x in 0..3 {
        let y = (x + 1) % 3;
        let z = (x + 2) % 3;
        let (ri, rj, rk) = (rn[x], rn[y], rn[z]);
        let ik = w.w[z];
        // gammas()[x] = γ_xyz, gammas()[y] = γ_yxz
        let num = ri * ri * rj * rj * (T::one() - ik * ik) + ri * ri * rj * rk * g[x] + ri * rj * rj * rk * g[y];
        let v = num / (a * l[z] * l[z]);
        jac[x][y] = v;
        jac[y][x] = v;
    }
    for x in 0..3 {
        let y = (x + 1) % 3;
        let z = (x + 2) % 3;
        jac[x][x] = -(jac[x][y] + jac[x][z]);
    }
    jac
}

/// Direct strict triangle inequality test on lengths.
pub fn lengths_admissible<T: Real>(l: [T; 3]) -> bool {
    l[0] < l[1] + l[2] && l[1] < l[0] + l[2] && l[2] < l[0] + l[1]
}

/// Twice the area, `l_j l_k sin θ_i`, of an admissible face; zero otherwise.
pub fn euclidean_area2<T: Real>(r: [T; 3], w: &FaceWeightTriple<T>) -> T {
    let adm = euclidean_admissible(r, w);
    if adm.admissible {
        sqrt_pos(adm.certificate)
    } else {
        T::zero()
    }
}
