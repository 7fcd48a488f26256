//! Adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights on the odd Kronrod nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult<T> {
    pub value: T,
    pub error: T,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig<T> {
    pub abs_tol: T,
    pub max_intervals: usize,
}

struct Piece<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn gk15<T: Real, F>(f: &F, a: T, b: T) -> Result<Piece<T>>
where
    F: Fn(T) -> Result<T>,
{
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    let fc = f(mid)?;
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for k in 0..7 {
        let dx = half * T::lit(XGK[k]);
        let s = f(mid - dx)? + f(mid + dx)?;
        kron = kron + s * T::lit(WGK[k]);
        if k % 2 == 1 {
            gauss = gauss + s * T::lit(WG[k / 2]);
        }
    }
    Ok(Piece {
        a,
        b,
        value: kron * half,
        error: ((kron - gauss) * half).abs(),
    })
}

/// Integrates `f` over each `[points[k], points[k+1]]`, bisecting the piece
/// with the largest error estimate until the total estimate is below
/// `abs_tol`.
pub fn integrate<T: Real, F>(f: F, points: &[T], cfg: QuadratureConfig<T>) -> Result<QuadratureResult<T>>
where
    F: Fn(T) -> Result<T>,
{
    let mut pieces = Vec::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            pieces.push(gk15(&f, w[0], w[1])?);
        }
    }
    loop {
        let err: T = pieces.iter().map(|p| p.error).sum();
        if err <= cfg.abs_tol || pieces.is_empty() {
            return Ok(QuadratureResult {
                value: pieces.iter().map(|p| p.value).sum(),
                error: err,
                intervals: pieces.len(),
            });
        }
        if pieces.len() >= cfg.max_intervals {
            return Err(Error::QuadratureFailure {
                tolerance: cfg.abs_tol.to_f64_lossy(),
                estimate: err.to_f64_lossy(),
            });
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let p = pieces.swap_remove(worst);
        let m = (p.a + p.b) * T::lit(0.5);
        if !(m > p.a && m < p.b) {
            return Err(Error::QuadratureFailure {
                tolerance: cfg.abs_tol.to_f64_lossy(),
                estimate: err.to_f64_lossy(),
            });
        }
        pieces.push(gk15(&f, p.a, m)?);
        pieces.push(gk15(&f, m, p.b)?);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(tol: f64) -> QuadratureConfig<f64> {
        QuadratureConfig {
            abs_tol: tol,
            max_intervals: 4000,
        }
    }

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x: f64| Ok(x.powi(7) - 3.0 * x * x), &[0.0, 2.0], cfg(1e-14)).unwrap();
        assert!((r.value - (32.0 - 8.0)).abs() < 1e-12);
        assert_eq!(r.intervals, 1);
    }

    #[test]
    fn sqrt_kink_converges() {
        let f = |x: f64| Ok((x - 0.3).abs().sqrt());
        let exact = (2.0 / 3.0) * (0.3f64.powf(1.5) + 0.7f64.powf(1.5));
        let r = integrate(f, &[0.0, 0.3, 1.0], cfg(1e-11)).unwrap();
        assert!((r.value - exact).abs() < 1e-11);
    }

    #[test]
    fn failure_reported() {
        let tight = QuadratureConfig {
            abs_tol: 1e-30,
            max_intervals: 8,
        };
        assert!(integrate(|x: f64| Ok(x.sin() * 1e3), &[0.0, 50.0], tight).is_err());
    }
}
