//! Special functions used by the kernel evaluations: real Bessel
//! functions of the first and second kind, Hankel functions of the
//! first kind at complex argument, and Gauss-Legendre quadrature rules.
//!
//! Real-argument Bessel functions come from the system C math library,
//! which exposes the POSIX `j0`, `j1`, `y0`, `y1` routines. The complex
//! Hankel functions combine the ascending series at small modulus with
//! the large-argument asymptotic expansion; the crossover at `|z| = 13`
//! keeps the worst-case relative error near `2e-11`, which is ample for
//! the truncated-kernel multipliers built on top of them.

use num_complex::Complex64;

#[link(name = "m")]
extern "C" {
    fn j0(x: f64) -> f64;
    fn j1(x: f64) -> f64;
    fn y0(x: f64) -> f64;
    fn y1(x: f64) -> f64;
}

/// Bessel function of the first kind, order zero, real argument.
pub fn bessel_j0(x: f64) -> f64 {
    unsafe { j0(x) }
}

/// Bessel function of the first kind, order one, real argument.
pub fn bessel_j1(x: f64) -> f64 {
    unsafe { j1(x) }
}

/// Bessel function of the second kind, order zero, positive argument.
pub fn bessel_y0(x: f64) -> f64 {
    unsafe { y0(x) }
}

/// Bessel function of the second kind, order one, positive argument.
pub fn bessel_y1(x: f64) -> f64 {
    unsafe { y1(x) }
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_ASYMPTOTIC_CROSSOVER: f64 = 13.0;

/// Hankel function of the first kind, order zero, complex argument with
/// `Re z > 0`.
pub fn hankel1_0(z: Complex64) -> Complex64 {
    if z.norm() <= SERIES_ASYMPTOTIC_CROSSOVER {
        hankel1_series(0, z)
    } else {
        hankel1_asymptotic(0, z)
    }
}

/// Hankel function of the first kind, order one, complex argument with
/// `Re z > 0`.
pub fn hankel1_1(z: Complex64) -> Complex64 {
    if z.norm() <= SERIES_ASYMPTOTIC_CROSSOVER {
        hankel1_series(1, z)
    } else {
        hankel1_asymptotic(1, z)
    }
}

/// Ascending series for `H^(1)_nu = J_nu + i Y_nu`, `nu` in `{0, 1}`.
fn hankel1_series(nu: u32, z: Complex64) -> Complex64 {
    let q = z * z * 0.25;
    let logz2 = (z * 0.5).ln();
    let (jnu, ynu);
    match nu {
        0 => {
            let mut term = Complex64::new(1.0, 0.0);
            let mut jsum = term;
            let mut hsum = Complex64::new(0.0, 0.0);
            let mut hk = 0.0;
            for k in 1..200 {
                let kf = k as f64;
                term *= -q / (kf * kf);
                hk += 1.0 / kf;
                jsum += term;
                hsum += -term * hk;
                if term.norm() < 1e-18 * jsum.norm().max(1.0) {
                    break;
                }
            }
            jnu = jsum;
            ynu = ((logz2 + EULER_GAMMA) * jsum + hsum) * (2.0 / std::f64::consts::PI);
        }
        1 => {
            let mut term = Complex64::new(1.0, 0.0);
            let mut jsum = term;
            let mut psum = term * (1.0 - 2.0 * EULER_GAMMA);
            let mut hk = 0.0;
            let mut hk1 = 1.0;
            for k in 1..200 {
                let kf = k as f64;
                term *= -q / (kf * (kf + 1.0));
                hk += 1.0 / kf;
                hk1 += 1.0 / (kf + 1.0);
                jsum += term;
                psum += term * (hk + hk1 - 2.0 * EULER_GAMMA);
                if term.norm() < 1e-18 * jsum.norm().max(1.0) {
                    break;
                }
            }
            let half_z = z * 0.5;
            jnu = half_z * jsum;
            ynu = (2.0 * logz2 * jnu - 2.0 / z - half_z * psum) / std::f64::consts::PI;
        }
        _ => unreachable!("only orders 0 and 1 are provided"),
    }
    jnu + Complex64::i() * ynu
}

/// Large-argument asymptotic expansion of `H^(1)_nu`, truncated at the
/// smallest term.
fn hankel1_asymptotic(nu: u32, z: Complex64) -> Complex64 {
    let mu = 4.0 * (nu as f64) * (nu as f64);
    let phase = z - (0.5 * nu as f64 + 0.25) * std::f64::consts::PI;
    let prefactor = (2.0 / (std::f64::consts::PI * z)).sqrt()
        * (Complex64::i() * phase).exp();
    let mut sum = Complex64::new(1.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    let mut last_norm = f64::INFINITY;
    for k in 1..40 {
        let kf = k as f64;
        let factor = mu - (2.0 * kf - 1.0) * (2.0 * kf - 1.0);
        term *= Complex64::i() * factor / (kf * 8.0 * z);
        let n = term.norm();
        if n > last_norm {
            break;
        }
        sum += term;
        last_norm = n;
        if n < 1e-17 {
            break;
        }
    }
    prefactor * sum
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
///
/// Newton iteration on the Legendre recurrence, seeded by the Chebyshev
/// angle approximation; exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Reference values generated with an independent implementation.

    #[test]
    fn real_bessel_reference_values() {
        let cases = [
            (1e-3, 9.999_997_500_000_155e-1, 4.999_999_375_000_026e-4,
             -4.471_416_611_375_923, -6.366_221_672_311_395e2),
            (0.5, 9.384_698_072_408_13e-1, 2.422_684_576_748_738_7e-1,
             -4.445_187_335_067_066e-1, -1.471_472_392_670_243_3),
            (2.0, 2.238_907_791_412_356e-1, 5.767_248_077_568_734e-1,
             5.103_756_726_497_451_5e-1, -1.070_324_315_409_375_6e-1),
            (5.0, -1.775_967_713_143_383e-1, -3.275_791_375_914_653e-1,
             -3.085_176_252_490_330_3e-1, 1.478_631_433_912_269_1e-1),
            (10.0, -2.459_357_644_513_483_2e-1, 4.347_274_616_886_141e-2,
             5.567_116_728_359_961e-2, 2.490_154_242_069_539e-1),
            (100.0, 1.998_585_030_422_333e-2, -7.714_535_201_411_23e-2,
             -7.724_431_336_508_31e-2, -2.037_231_200_275_932e-2),
        ];
        for (x, j0v, j1v, y0v, y1v) in cases {
            assert_relative_eq!(bessel_j0(x), j0v, max_relative = 1e-13, epsilon = 1e-15);
            assert_relative_eq!(bessel_j1(x), j1v, max_relative = 1e-13, epsilon = 1e-15);
            assert_relative_eq!(bessel_y0(x), y0v, max_relative = 1e-13, epsilon = 1e-15);
            assert_relative_eq!(bessel_y1(x), y1v, max_relative = 1e-13, epsilon = 1e-15);
        }
    }

    #[test]
    fn real_bessel_near_j1_zero() {
        assert_relative_eq!(
            bessel_j1(7.015_586_67),
            5.533_581_708_264_123e-11,
            max_relative = 1e-4,
            epsilon = 1e-18
        );
        assert_relative_eq!(bessel_j0(7.015_586_67), 3.001_157_525_261_326e-1, max_relative = 1e-13);
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hankel_reference_values_series_branch() {
        let cases = [
            (c(0.7, 0.1),
             c(7.734_470_799_169_582e-1, -2.167_406_549_049_240e-1),
             c(1.941_569_457_180_064e-1, -1.046_807_188_098_060_5)),
            (c(2.0, 0.0),
             c(2.238_907_791_412_357e-1, 5.103_756_726_497_453e-1),
             c(5.767_248_077_568_734e-1, -1.070_324_315_409_375e-1)),
            (c(2.0, 0.3),
             c(1.897_508_429_328_214e-1, 3.609_789_650_707_177_5e-1),
             c(4.249_572_093_585_970e-1, -1.178_072_265_236_665_8e-1)),
            (c(9.3, 0.01),
             c(-1.559_735_059_439_685_5e-1, 2.065_754_182_030_007_7e-1),
             c(1.985_189_272_447_657_5e-1, 1.672_786_030_390_461_2e-1)),
            (c(5.0, 3.0),
             c(-1.149_147_154_325_051e-2, -1.150_470_257_779_589_5e-2),
             c(-1.283_521_968_280_830e-2, 1.120_220_213_651_539_4e-2)),
        ];
        for (z, h0v, h1v) in cases {
            assert_relative_eq!(hankel1_0(z).re, h0v.re, max_relative = 1e-11, epsilon = 1e-13);
            assert_relative_eq!(hankel1_0(z).im, h0v.im, max_relative = 1e-11, epsilon = 1e-13);
            assert_relative_eq!(hankel1_1(z).re, h1v.re, max_relative = 1e-11, epsilon = 1e-13);
            assert_relative_eq!(hankel1_1(z).im, h1v.im, max_relative = 1e-11, epsilon = 1e-13);
        }
    }

    #[test]
    fn hankel_reference_values_asymptotic_branch() {
        let cases = [
            (c(14.2, 0.5),
             c(8.735_625_414_063_926e-2, 9.397_533_616_201_273e-2),
             c(9.721_353_161_178_541e-2, -8.422_073_273_018_829e-2)),
            (c(30.0, 2.0),
             c(-1.219_311_337_895_195_5e-2, -1.545_541_903_379_433_7e-2),
             c(-1.567_665_789_298_123_4e-2, 1.195_216_016_564_150_9e-2)),
            (c(370.0, 0.04),
             c(3.068_599_808_653_801e-3, -3.973_525_572_511_152e-2),
             c(-3.973_115_106_267_535e-2, -3.122_299_243_773_023e-3)),
        ];
        for (z, h0v, h1v) in cases {
            assert_relative_eq!(hankel1_0(z).re, h0v.re, max_relative = 5e-11, epsilon = 1e-13);
            assert_relative_eq!(hankel1_0(z).im, h0v.im, max_relative = 5e-11, epsilon = 1e-13);
            assert_relative_eq!(hankel1_1(z).re, h1v.re, max_relative = 5e-11, epsilon = 1e-13);
            assert_relative_eq!(hankel1_1(z).im, h1v.im, max_relative = 5e-11, epsilon = 1e-13);
        }
    }

    #[test]
    fn hankel_crossover_continuity() {
        // Either side of |z| = 13 must match the reference to the stated
        // accuracy, so the branch switch cannot introduce a jump.
        let below = c(13.9, 0.0);
        let above = c(14.1, 0.0);
        assert_relative_eq!(hankel1_0(below).re, 1.835_798_554_578_696_5e-1, max_relative = 5e-11);
        assert_relative_eq!(hankel1_0(below).im, 1.098_591_894_595_265_5e-1, max_relative = 5e-11);
        assert_relative_eq!(hankel1_0(above).re, 1.569_528_770_326_012_5e-1, max_relative = 5e-11);
        assert_relative_eq!(hankel1_0(above).im, 1.431_362_286_225_445_8e-1, max_relative = 5e-11);
        assert_relative_eq!(hankel1_1(below).re, 1.165_248_903_690_564_2e-1, max_relative = 5e-11);
        assert_relative_eq!(hankel1_1(below).im, -1.797_509_510_695_483e-1, max_relative = 5e-11);
        assert_relative_eq!(hankel1_1(above).re, 1.487_843_512_973_938_7e-1, max_relative = 5e-11);
        assert_relative_eq!(hankel1_1(above).im, -1.519_813_334_678_177_2e-1, max_relative = 5e-11);
    }

    #[test]
    fn hankel_matches_real_bessel_combination() {
        for &x in &[0.5, 2.0, 5.0, 9.3, 12.9] {
            let h = hankel1_0(c(x, 0.0));
            assert_relative_eq!(h.re, bessel_j0(x), max_relative = 1e-10, epsilon = 1e-12);
            assert_relative_eq!(h.im, bessel_y0(x), max_relative = 1e-10, epsilon = 1e-12);
            let h = hankel1_1(c(x, 0.0));
            assert_relative_eq!(h.re, bessel_j1(x), max_relative = 1e-10, epsilon = 1e-12);
            assert_relative_eq!(h.im, bessel_y1(x), max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn bessel_wronskian() {
        for &x in &[0.3, 1.7, 6.2, 24.9] {
            let w = bessel_j1(x) * bessel_y0(x) - bessel_j0(x) * bessel_y1(x);
            assert_relative_eq!(w, 2.0 / (std::f64::consts::PI * x), max_relative = 1e-12);
        }
    }

    #[test]
    fn gauss_legendre_eight_point_reference() {
        let (x, w) = gauss_legendre(8);
        let xr = [
            -9.602_898_564_975_362e-1,
            -7.966_664_774_136_267e-1,
            -5.255_324_099_163_29e-1,
            -1.834_346_424_956_498e-1,
            1.834_346_424_956_498e-1,
            5.255_324_099_163_29e-1,
            7.966_664_774_136_267e-1,
            9.602_898_564_975_362e-1,
        ];
        let wr = [
            1.012_285_362_903_767e-1,
            2.223_810_344_533_743_4e-1,
            3.137_066_458_778_870_5e-1,
            3.626_837_833_783_617_7e-1,
            3.626_837_833_783_617_7e-1,
            3.137_066_458_778_870_5e-1,
            2.223_810_344_533_743_4e-1,
            1.012_285_362_903_767e-1,
        ];
        for i in 0..8 {
            assert_relative_eq!(x[i], xr[i], max_relative = 1e-13, epsilon = 1e-14);
            assert_relative_eq!(w[i], wr[i], max_relative = 1e-13);
        }
    }

    #[test]
    fn gauss_legendre_polynomial_exactness() {
        let (x, w) = gauss_legendre(6);
        for degree in 0..=11u32 {
            let quad: f64 = x
                .iter()
                .zip(&w)
                .map(|(&xi, &wi)| wi * xi.powi(degree as i32))
                .sum();
            let exact = if degree % 2 == 1 {
                0.0
            } else {
                2.0 / (degree as f64 + 1.0)
            };
            assert_relative_eq!(quad, exact, epsilon = 1e-13);
        }
    }
}
