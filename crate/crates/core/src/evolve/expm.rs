//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants (degrees 3, 5, 7, 9, 13), after Higham (2005).
//!
//! The result is returned as `e^{log_scale} · matrix` so that strongly
//! amplifying propagators stay representable through the squaring phase.

use faer::linalg::solvers::Solve;
use faer::{c64, Mat};

use crate::error::{Error, Result};

const THETA: [(usize, f64); 5] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
    (13, 5.371_920_351_148_152),
];

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1512.0,
    56.0,
    1.0,
];
const B9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// `exp(A) = e^{log_scale} · matrix`.
#[derive(Clone, Debug)]
pub struct ScaledExp {
    pub matrix: Mat<c64>,
    pub log_scale: f64,
}

pub fn norm_1(a: &Mat<c64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
fn identity(n: usize) -> Mat<c64> {
    Mat::from_fn(n, n, |i, j| {
        if i == j {
            c64::new(1.0, 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    })
}

fn max_abs(a: &Mat<c64>) -> f64 {
    let mut m = 0.0_f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

/// `Σ c_k · P_k` over a list of (coefficient, matrix) pairs plus `c0 · I`.
fn combine(n: usize, c0: f64, terms: &[(f64, &Mat<c64>)]) -> Mat<c64> {
    Mat::from_fn(n, n, |i, j| {
        let mut v = if i == j {
            c64::new(c0, 0.0)
        } else {
            c64::new(0.0, 0.0)
        };
        for (c, p) in terms {
            v += p[(i, j)] * *c;
        }
        v
    })
}

/// Numerator/denominator parts `(U, V)` of the degree-`m` approximant with
/// `r_m(A) = (V - U)⁻¹ (V + U)`.
fn pade_parts(a: &Mat<c64>, m: usize) -> (Mat<c64>, Mat<c64>) {
    let n = a.nrows();
    let a2 = a * a;
    match m {
        3 | 5 | 7 | 9 => {
            let b: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            let mut powers = vec![a2];
            while powers.len() < (m - 1) / 2 {
                let next = powers.last().unwrap() * &powers[0];
                powers.push(next);
            }
            // powers[k] = A^{2(k+1)}
            let odd_terms: Vec<(f64, &Mat<c64>)> = powers
                .iter()
                .enumerate()
                .map(|(k, p)| (b[2 * k + 3], p))
                .collect();
            let even_terms: Vec<(f64, &Mat<c64>)> = powers
                .iter()
                .enumerate()
                .map(|(k, p)| (b[2 * k + 2], p))
                .collect();
            let u = a * combine(n, b[1], &odd_terms);
            let v = combine(n, b[0], &even_terms);
            (u, v)
        }
        13 => {
            let b = &B13;
            let a4 = &a2 * &a2;
            let a6 = &a4 * &a2;
            let inner_u = combine(n, 0.0, &[(b[13], &a6), (b[11], &a4), (b[9], &a2)]);
            let outer_u = combine(n, b[1], &[(b[7], &a6), (b[5], &a4), (b[3], &a2)]);
            let u = a * (&a6 * &inner_u + outer_u);
            let inner_v = combine(n, 0.0, &[(b[12], &a6), (b[10], &a4), (b[8], &a2)]);
            let outer_v = combine(n, b[0], &[(b[6], &a6), (b[4], &a4), (b[2], &a2)]);
            let v = &a6 * &inner_v + outer_v;
            (u, v)
        }
        _ => unreachable!("unsupported Padé degree {m}"),
    }
}

pub fn expm(a: &Mat<c64>) -> Result<ScaledExp> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    if n == 0 {
        return Ok(ScaledExp {
            matrix: Mat::zeros(0, 0),
            log_scale: 0.0,
        });
    }
    let norm = norm_1(a);
    if !norm.is_finite() {
        return Err(Error::NumericalOverflow("matrix exponential input"));
    }

    let (degree, squarings) = match THETA.iter().find(|(_, theta)| norm <= *theta) {
        Some(&(m, _)) if m < 13 => (m, 0),
        _ => {
            let theta13 = THETA[4].1;
            let s = if norm > theta13 {
                (norm / theta13).log2().ceil().max(0.0) as u32
            } else {
                0
            };
            (13, s)
        }
    };
    let scaled;
    let a_s = if squarings > 0 {
        scaled = a * faer::Scale(c64::new(0.5_f64.powi(squarings as i32), 0.0));
        &scaled
    } else {
        a
    };

    let (u, v) = pade_parts(a_s, degree);
    let denom = &v - &u;
    let numer = &v + &u;
    let mut r = denom.partial_piv_lu().solve(&numer);

    let mut log_scale = 0.0_f64;
    for _ in 0..squarings {
        r = &r * &r;
        log_scale *= 2.0;
        let peak = max_abs(&r);
        if !peak.is_finite() || peak == 0.0 {
            return Err(Error::NumericalOverflow("matrix exponential squaring"));
        }
        if !(1e-50..=1e50).contains(&peak) {
            r = &r * faer::Scale(c64::new(1.0 / peak, 0.0));
            log_scale += peak.ln();
        }
    }
    if !max_abs(&r).is_finite() {
        return Err(Error::NumericalOverflow("matrix exponential"));
    }
    Ok(ScaledExp {
        matrix: r,
        log_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expand(e: &ScaledExp) -> Mat<c64> {
        &e.matrix * faer::Scale(c64::new(e.log_scale.exp(), 0.0))
    }

    #[test]
    fn zero_matrix_gives_identity() {
        let z = Mat::<c64>::zeros(4, 4);
        let e = expand(&expm(&z).unwrap());
        assert!(max_abs(&(&e - &identity(4))) < 1e-15);
    }

    #[test]
    fn nilpotent_series_truncates() {
        // exp(-i N) with N = [[0,1],[0,0]] is I - iN.
        let mut a = Mat::<c64>::zeros(2, 2);
        a[(0, 1)] = c64::new(0.0, -1.0);
        let e = expand(&expm(&a).unwrap());
        assert!((e[(0, 0)] - c64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((e[(0, 1)] - c64::new(0.0, -1.0)).norm() < 1e-15);
        assert!(e[(1, 0)].norm() < 1e-15);
        assert!((e[(1, 1)] - c64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn diagonal_matches_scalar_exponential_at_every_degree() {
        // norms straddle each θ threshold so every approximant is exercised
        for scale in [1e-3, 0.1, 0.5, 1.5, 4.0, 40.0, 400.0] {
            let d = [
                c64::new(scale, 0.3),
                c64::new(-scale, 0.0),
                c64::new(0.0, scale),
            ];
            let a = Mat::from_fn(3, 3, |i, j| if i == j { d[i] } else { c64::new(0.0, 0.0) });
            let e = expm(&a).unwrap();
            for i in 0..3 {
                let got = e.matrix[(i, i)] * e.log_scale.exp();
                let want = d[i].exp();
                assert!(
                    (got - want).norm() <= 1e-12 * want.norm().max(1.0),
                    "scale {scale}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn rotation_generator() {
        // exp(θ [[0,-1],[1,0]]) is a rotation by θ.
        let theta = 7.3;
        let mut a = Mat::<c64>::zeros(2, 2);
        a[(0, 1)] = c64::new(-theta, 0.0);
        a[(1, 0)] = c64::new(theta, 0.0);
        let e = expand(&expm(&a).unwrap());
        assert!((e[(0, 0)].re - theta.cos()).abs() < 1e-12);
        assert!((e[(1, 0)].re - theta.sin()).abs() < 1e-12);
    }

    #[test]
    fn huge_growth_is_carried_in_log_scale() {
        let mut a = Mat::<c64>::zeros(2, 2);
        a[(0, 0)] = c64::new(2000.0, 0.0);
        a[(1, 1)] = c64::new(1990.0, 0.0);
        let e = expm(&a).unwrap();
        assert!(e.log_scale > 1900.0);
        let ratio = e.matrix[(1, 1)].norm() / e.matrix[(0, 0)].norm();
        assert!((ratio.ln() + 10.0).abs() < 1e-9);
        assert!((e.matrix[(0, 0)].norm().ln() + e.log_scale - 2000.0).abs() < 1e-9);
    }
}
