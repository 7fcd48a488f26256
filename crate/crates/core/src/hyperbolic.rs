//! Hyperbolic triangle kernel.
//!
//! Everything is evaluated through `t = tanh r` and `c = sech r`, which keeps
//! the certificate and the angles finite for arbitrarily large radii. The
//! certificate used internally is the usual one divided by
//! `cosh² r_i cosh² r_j cosh² r_k`.

use crate::complex::FaceWeightTriple;
use crate::error::{Error, Result};
use crate::euclidean::{degenerate_angles, longest, Admissibility, FaceAngles, Mat3};
use crate::scalar::{acosh_1p, ln_cosh, sech, Real};

struct Tc<T> {
    t: [T; 3],
    c: [T; 3],
}

fn tc<T: Real>(r: [T; 3]) -> Tc<T> {
    Tc {
        t: r.map(|x| x.tanh()),
        c: r.map(sech),
    }
}

/// `cosh l_a - 1` for the edge opposite local vertex `a`.
fn cosh_minus_one<T: Real>(rj: T, rk: T, ia: T) -> T {
    let two = T::lit(2.0);
    let h = ((rj - rk) / two).sinh();
    two * h * h + (T::one() + ia) * rj.sinh() * rk.sinh()
}

/// Lengths with `cosh l_i = cosh r_j cosh r_k + I_i sinh r_j sinh r_k`.
pub fn hyperbolic_lengths<T: Real>(r: [T; 3], w: &FaceWeightTriple<T>) -> [T; 3] {
    let len = |a: usize| {
        let (rj, rk) = (r[(a + 1) % 3], r[(a + 2) % 3]);
        let x = cosh_minus_one(rj, rk, w.w[a]);
        if x.is_finite() && x < T::lit(1e12) {
            acosh_1p(x)
        } else {
            let ln_p = ln_cosh(rj) + ln_cosh(rk) + (w.w[a] * rj.tanh() * rk.tanh()).ln_1p();
            ln_p + sqrt_one_minus_exp(-(ln_p + ln_p)).ln_1p()
        }
    };
    [len(0), len(1), len(2)]
}

fn sqrt_one_minus_exp<T: Real>(x: T) -> T {
    (-x.exp_m1()).max(T::zero()).sqrt()
}

fn certificate_terms<T: Real>(v: &Tc<T>, w: &FaceWeightTriple<T>) -> (T, T) {
    let two = T::lit(2.0);
    let [ti, tj, tk] = v.t;
    let [ci, cj, ck] = v.c;
    let [ii, ij, ik] = w.w;
    let [g_ijk, g_jik, g_kij] = w.gammas();
    let (ti2, tj2, tk2) = (ti * ti, tj * tj, tk * tk);
    let terms = [
        two * ti2 * tj2 * tk2 * (T::one() + ii * ij * ik),
        ti2 * tj2 * ck * ck * (T::one() - ik * ik),
        ti2 * tk2 * cj * cj * (T::one() - ij * ij),
        tj2 * tk2 * ci * ci * (T::one() - ii * ii),
        two * ti2 * tj * tk * g_ijk,
        two * ti * tj2 * tk * g_jik,
        two * ti * tj * tk2 * g_kij,
    ];
    let sum = terms.iter().fold(T::zero(), |a, &t| a + t);
    let scale = terms.iter().fold(T::zero(), |a, &t| a + t.abs());
    (sum, scale)
}

/// Strict triangle inequalities decided by the (normalized) certificate.
pub fn hyperbolic_admissible<T: Real>(r: [T; 3], w: &FaceWeightTriple<T>) -> Admissibility<T> {
    let (c, s) = certificate_terms(&tc(r), w);
    Admissibility {
        admissible: c > T::boundary_tol() * s,
        certificate: c,
        scale: s,
    }
}

/// Radius above which `(s, s, s)` is admissible for the weights `w`.
pub fn uniform_radius_bound<T: Real>(w: &FaceWeightTriple<T>) -> Result<T> {
    w.check_condition(0)?;
    let one = T::one();
    let [a, b, c] = w.w;
    let num = a * a + b * b + c * c - T::lit(3.0);
    let den = T::lit(2.0) * (one + a) * (one + b) * (one + c);
    Ok((num / den).max(T::zero()).sqrt().asinh())
}

/// Angles from side lengths via the half-angle formula
/// `tan²(θ_i/2) = sinh(p - l_j) sinh(p - l_k) / (sinh p sinh(p - l_i))`.
pub fn hyperbolic_angles<T: Real>(l: [T; 3]) -> Result<[T; 3]> {
    let degenerate = || Error::DegenerateTriangle {
        lengths: l.map(Real::to_f64_lossy),
    };
    if l.iter().any(|x| !(*x > T::zero()) || !x.is_finite()) {
        return Err(degenerate());
    }
    let half = T::lit(0.5);
    let d = [
        half * (l[1] + l[2] - l[0]),
        half * (l[0] + l[2] - l[1]),
        half * (l[0] + l[1] - l[2]),
    ];
    if d.iter().any(|x| !(*x > T::zero())) {
        return Err(degenerate());
    }
    let p = half * (l[0] + l[1] + l[2]);
    let sp = p.sinh();
    let sd = d.map(|x| x.sinh());
    let two = T::lit(2.0);
    let ang = |a: usize| {
        let num = (sd[(a + 1) % 3] * sd[(a + 2) % 3]).sqrt();
        let den = (sp * sd[a]).sqrt();
        two * num.atan2(den)
    };
    Ok([ang(0), ang(1), ang(2)])
}

/// `N_a = (cosh l_b cosh l_c - cosh l_a) / (cosh² r_a cosh r_b cosh r_c)`.
fn cos_numerators<T: Real>(v: &Tc<T>, w: &FaceWeightTriple<T>) -> [T; 3] {
    let n = |x: usize| {
        let (ti, tj, tk) = (v.t[x], v.t[(x + 1) % 3], v.t[(x + 2) % 3]);
        let (ii, ij, ik) = (w.w[x], w.w[(x + 1) % 3], w.w[(x + 2) % 3]);
        ij * ti * tk + ik * ti * tj + ij * ik * ti * ti * tj * tk - ii * tj * tk + ti * ti + ii * ti * ti * tj * tk
    };
    [n(0), n(1), n(2)]
}

/// `sinh² l_c / (cosh² r_a cosh² r_b)` for the edge opposite `c`.
fn q<T: Real>(v: &Tc<T>, w: &FaceWeightTriple<T>, c: usize) -> T {
    let (ti, tj) = (v.t[(c + 1) % 3], v.t[(c + 2) % 3]);
    let ik = w.w[c];
    let two = T::lit(2.0);
    ti * ti + tj * tj + two * ik * ti * tj + (ik * ik - T::one()) * ti * ti * tj * tj
}

fn interior_angles<T: Real>(v: &Tc<T>, w: &FaceWeightTriple<T>, cert: T) -> [T; 3] {
    let a = cert.sqrt();
    let n = cos_numerators(v, w);
    [0, 1, 2].map(|x| (v.c[x] * a).atan2(n[x]))
}

/// Inner angles of an admissible face computed from radii.
pub fn hyperbolic_inner_angles<T: Real>(r: [T; 3], w: &FaceWeightTriple<T>) -> Result<[T; 3]> {
    let v = tc(r);
    let (cert, scale) = certificate_terms(&v, w);
    if cert > T::boundary_tol() * scale {
        Ok(interior_angles(&v, w, cert))
    } else {
        Err(Error::DegenerateTriangle {
            lengths: hyperbolic_lengths(r, w).map(Real::to_f64_lossy),
        })
    }
}

pub(crate) fn hyperbolic_face<T: Real>(r: [T; 3], w: &FaceWeightTriple<T>, face: usize) -> Result<FaceAngles<T>> {
    w.check_condition(face)?;
    let v = tc(r);
    let (cert, scale) = certificate_terms(&v, w);
    if cert > T::boundary_tol() * scale {
        Ok(FaceAngles {
            admissible: true,
            angles: interior_angles(&v, w, cert),
        })
    } else {
        Ok(FaceAngles {
            admissible: false,
            angles: degenerate_angles(longest(hyperbolic_lengths(r, w))),
        })
    }
}

/// Inner angles continued by constants outside the admissible set.
pub fn hyperbolic_extended_angles<T: Real>(r: [T; 3], w: &FaceWeightTriple<T>) -> Result<[T; 3]> {
    Ok(hyperbolic_face(r, w, 0)?.angles)
}

/// `π - θ_i - θ_j - θ_k` on admissible faces, zero otherwise.
pub fn hyperbolic_area<T: Real>(r: [T; 3], w: &FaceWeightTriple<T>) -> T {
    let v = tc(r);
    let (cert, scale) = certificate_terms(&v, w);
    if cert > T::boundary_tol() * scale {
        let t = interior_angles(&v, w, cert);
        T::PI() - t[0] - t[1] - t[2]
    } else {
        T::zero()
    }
}

/// `∂θ/∂u` for one face with `u = ln tanh(r/2)`; zero outside the
/// admissible set.
pub fn hyperbolic_angle_jacobian<T: Real>(r: [T; 3], w: &FaceWeightTriple<T>) -> Mat3<T> {
    let v = tc(r);
    let (cert, scale) = certificate_terms(&v, w);
    let mut jac = [[T::zero(); 3]; 3];
    if !(cert > T::boundary_tol() * scale) {
        return jac;
    }
    let a = cert.sqrt();
    let g = w.gammas();
    let qs = [q(&v, w, 0), q(&v, w, 1), q(&v, w, 2)];
    for x in 0..3 {
        let y = (x + 1) % 3;
        let z = (x + 2) % 3;
        let (ti, tj, tk) = (v.t[x], v.t[y], v.t[z]);
        let ik = w.w[z];
        let num = ti * tj * (ti * tj * (T::one() - ik * ik) + tj * tk * g[y] + ti * tk * g[x]);
        let val = num * v.c[x] * v.c[y] / (a * qs[z]);
        jac[x][y] = val;
        jac[y][x] = val;
    }
    // u_x enters l_y and l_z; chain rule through the cosine law.
    let n = cos_numerators(&v, w);
    for x in 0..3 {
        let y = (x + 1) % 3;
        let z = (x + 2) % 3;
        let (ti, tj, tk) = (v.t[x], v.t[y], v.t[z]);
        let (iy, iz) = (w.w[y], w.w[z]);
        jac[x][x] = -(ti / a) * (n[z] * (ti + iy * tk) / qs[y] + n[y] * (ti + iz * tj) / qs[z]);
    }
    jac
}

pub use crate::euclidean::lengths_admissible;
