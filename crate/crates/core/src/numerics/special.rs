//! Normal distribution special functions.
//!
//! `erf`/`erfc` follow W. J. Cody's rational Chebyshev approximations
//! (Math. Comp. 23, 1969; the CALERF scheme), accurate to a few ulps.
//! `normal_quantile` is Wichura's algorithm AS 241 (PPND16).

use super::NumericsError;

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_286_95;
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_94;

// Cody region 1 (|x| <= 0.46875): erf(x) = x * P(x^2) / Q(x^2).
const ERF_A: [f64; 5] = [
    3.161_123_743_870_565_6e0,
    1.138_641_541_510_501_56e2,
    3.774_852_376_853_020_2e2,
    3.209_377_589_138_469_47e3,
    1.857_777_061_846_031_53e-1,
];
const ERF_B: [f64; 4] = [
    2.360_129_095_234_412_09e1,
    2.440_246_379_344_441_73e2,
    1.282_616_526_077_372_28e3,
    2.844_236_833_439_170_62e3,
];

// Cody region 2 (0.46875 < |x| <= 4): erfc(x) = exp(-x^2) * P(x) / Q(x).
const ERFC_C: [f64; 9] = [
    5.641_884_969_886_700_89e-1,
    8.883_149_794_388_375_94e0,
    6.611_919_063_714_162_95e1,
    2.986_351_381_974_001_31e2,
    8.819_522_212_417_690_9e2,
    1.712_047_612_634_070_58e3,
    2.051_078_377_826_071_47e3,
    1.230_339_354_797_997_25e3,
    2.153_115_354_744_038_46e-8,
];
const ERFC_D: [f64; 8] = [
    1.574_492_611_070_983_47e1,
    1.176_939_508_913_124_99e2,
    5.371_811_018_620_098_58e2,
    1.621_389_574_566_690_19e3,
    3.290_799_235_733_459_63e3,
    4.362_619_090_143_247_16e3,
    3.439_367_674_143_721_64e3,
    1.230_339_354_803_749_42e3,
];

// Cody region 3 (|x| > 4): erfc(x) = exp(-x^2)/x * (1/sqrt(pi) - r(1/x^2)).
const ERFC_P: [f64; 6] = [
    3.053_266_349_612_323_44e-1,
    3.603_448_999_498_044_39e-1,
    1.257_817_261_112_292_46e-1,
    1.608_378_514_874_227_66e-2,
    6.587_491_615_298_378_03e-4,
    1.631_538_713_730_209_78e-2,
];
const ERFC_Q: [f64; 5] = [
    2.568_520_192_289_822_42e0,
    1.872_952_849_923_460_47e0,
    5.279_051_029_514_284_12e-1,
    6.051_834_131_244_131_91e-2,
    2.335_204_976_268_691_85e-3,
];

/// exp(-x^2) with the argument split to limit rounding in the tails,
/// as in CALERF: x^2 = ysq^2 + (x - ysq)(x + ysq) with ysq on a 1/16 grid.
fn exp_neg_x2(x: f64) -> f64 {
    let ysq = (x * 16.0).trunc() / 16.0;
    let del = (x - ysq) * (x + ysq);
    (-ysq * ysq).exp() * (-del).exp()
}

fn erfc_positive(y: f64) -> f64 {
    debug_assert!(y >= 0.0);
    if y <= 0.46875 {
        return 1.0 - erf_small(y);
    }
    if y <= 4.0 {
        let mut num = ERFC_C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + ERFC_C[i]) * y;
            den = (den + ERFC_D[i]) * y;
        }
        return exp_neg_x2(y) * (num + ERFC_C[7]) / (den + ERFC_D[7]);
    }
    // erfc underflows to 0 around x = 26.5; cut off well past that.
    if y >= 28.0 {
        return 0.0;
    }
    let z = 1.0 / (y * y);
    let mut num = ERFC_P[5] * z;
    let mut den = z;
    for i in 0..4 {
        num = (num + ERFC_P[i]) * z;
        den = (den + ERFC_Q[i]) * z;
    }
    let r = z * (num + ERFC_P[4]) / (den + ERFC_Q[4]);
    exp_neg_x2(y) * (FRAC_1_SQRT_PI - r) / y
}

fn erf_small(x: f64) -> f64 {
    debug_assert!(x.abs() <= 0.46875);
    let z = x * x;
    let mut num = ERF_A[4] * z;
    let mut den = z;
    for i in 0..3 {
        num = (num + ERF_A[i]) * z;
        den = (den + ERF_B[i]) * z;
    }
    x * (num + ERF_A[3]) / (den + ERF_B[3])
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.abs() <= 0.46875 {
        erf_small(x)
    } else if x > 0.0 {
        1.0 - erfc_positive(x)
    } else {
        erfc_positive(-x) - 1.0
    }
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x >= 0.0 {
        erfc_positive(x)
    } else {
        2.0 - erfc_positive(-x)
    }
}

/// Standard normal CDF. Absolute error below 1e-14 over the real line.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

// AS 241 (PPND16) coefficient tables.
const PPND_A: [f64; 8] = [
    3.387_132_872_796_366_608e0,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
const PPND_B: [f64; 7] = [
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561e3,
];
const PPND_C: [f64; 8] = [
    1.423_437_110_749_683_577_34e0,
    4.630_337_846_156_545_295_9e0,
    5.769_497_221_460_691_405_5e0,
    3.647_848_324_763_204_605_04e0,
    1.270_458_252_452_368_382_58e0,
    2.417_807_251_774_506_117_7e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_4e-4,
];
const PPND_D: [f64; 7] = [
    2.053_191_626_637_758_821_87e0,
    1.676_384_830_183_803_849_4e0,
    6.897_673_349_851_000_045_5e-1,
    1.481_039_764_274_800_745_9e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
const PPND_E: [f64; 8] = [
    6.657_904_643_501_103_777_2e0,
    5.463_784_911_164_114_369_9e0,
    1.784_826_539_917_291_335_8e0,
    2.965_605_718_285_048_912_3e-1,
    2.653_218_952_657_612_309_3e-2,
    1.242_660_947_388_078_438_6e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
const PPND_F: [f64; 7] = [
    5.998_322_065_558_879_376_9e-1,
    1.369_298_809_227_358_053_1e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

fn ppnd_rational(r: f64, num: &[f64; 8], den: &[f64; 7]) -> f64 {
    let mut n = num[7];
    for c in num[..7].iter().rev() {
        n = n * r + c;
    }
    let mut d = den[6];
    for c in den[..6].iter().rev() {
        d = d * r + c;
    }
    n / (d * r + 1.0)
}

/// Standard normal quantile, Wichura's AS 241. Requires `0 < p < 1`.
pub fn normal_quantile(p: f64) -> Result<f64, NumericsError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(NumericsError::Domain(format!(
            "normal_quantile requires p in (0, 1), got {p}"
        )));
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return Ok(q * ppnd_rational(r, &PPND_A, &PPND_B));
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        ppnd_rational(r - 1.6, &PPND_C, &PPND_D)
    } else {
        ppnd_rational(r - 5.0, &PPND_E, &PPND_F)
    };
    Ok(if q < 0.0 { -x } else { x })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Taylor series for erf, accurate to ~1e-15 for |x| <= 2 where the
    /// alternating terms stay small relative to the result.
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        let mut k = 0.0;
        while term.abs() > 1e-18 * sum.abs().max(1e-300) {
            k += 1.0;
            term *= -x * x / k;
            sum += term / (2.0 * k + 1.0);
        }
        sum * 2.0 * FRAC_1_SQRT_PI
    }

    /// Continued fraction for erfc (Lentz), accurate in the tail x >= 2.
    fn erfc_cf(x: f64) -> f64 {
        let mut f = x;
        let mut c = f;
        let mut d = 0.0;
        let mut n = 0.5;
        for _ in 0..200 {
            let (a, b) = (n, x);
            d = b + a * d;
            c = b + a / c;
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-17 {
                break;
            }
            n += 0.5;
        }
        // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + 1/2/(x + 1/(x + 3/2/(x + ...))))
        (-x * x).exp() * FRAC_1_SQRT_PI / f
    }

    #[test]
    fn erf_matches_series_oracle_in_core() {
        let mut x = -2.0;
        while x <= 2.0 {
            let got = erf(x);
            let want = erf_series(x);
            assert!(
                (got - want).abs() < 1e-14,
                "erf({x}) = {got}, series {want}"
            );
            x += 0.0173;
        }
    }

    #[test]
    fn erfc_matches_continued_fraction_in_tail() {
        let mut x = 2.0;
        while x <= 9.0 {
            let got = erfc(x);
            let want = erfc_cf(x);
            assert!(
                ((got - want) / want).abs() < 1e-13,
                "erfc({x}) = {got:e}, cf {want:e}"
            );
            x += 0.217;
        }
    }

    #[test]
    fn cdf_reference_points() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.959964) - 0.975).abs() < 1e-6);
        // Known high-precision values.
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-13);
        assert!((normal_cdf(-1.0) - 0.158_655_253_931_457_05).abs() < 1e-13);
        assert!((normal_cdf(2.0) - 0.977_249_868_051_820_8).abs() < 1e-13);
        assert!((normal_cdf(3.0) - 0.998_650_101_968_369_9).abs() < 1e-13);
        assert!((normal_cdf(-6.0) - 9.865_876_450_376_94e-10).abs() < 1e-18);
    }

    #[test]
    fn cdf_symmetry() {
        let mut x = -6.0;
        while x <= 6.0 {
            let s = normal_cdf(x) + normal_cdf(-x);
            assert!((s - 1.0).abs() < 1e-14, "x = {x}: {s}");
            x += 0.31;
        }
    }

    #[test]
    fn quantile_reference_points() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        assert!((normal_quantile(0.975).unwrap() - 1.959964).abs() < 1e-5);
        assert!((normal_quantile(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-9);
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
        assert!(normal_quantile(-0.1).is_err());
        assert!(normal_quantile(f64::NAN).is_err());
    }

    #[test]
    fn quantile_matches_bisection_inverse() {
        // Independent inversion of normal_cdf by bisection.
        let bisect = |p: f64| -> f64 {
            let (mut lo, mut hi) = (-10.0, 10.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if normal_cdf(mid) < p {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        for &p in &[0.001, 0.025, 0.1, 0.3, 0.5, 0.7, 0.9, 0.975, 0.999] {
            let got = normal_quantile(p).unwrap();
            assert!((got - bisect(p)).abs() < 1e-9, "p = {p}");
        }
    }

    #[test]
    fn quantile_symmetry_and_roundtrip() {
        let mut p = 0.0005;
        while p < 0.5 {
            let a = normal_quantile(p).unwrap();
            let b = normal_quantile(1.0 - p).unwrap();
            assert!((a + b).abs() < 1e-12, "p = {p}");
            p += 0.0071;
        }
        // |Phi(Phi^{-1}(p)) - p| < 1e-10 and the x-space roundtrip on [-6, 6].
        let mut x = -6.0;
        while x <= 6.0 {
            let p = normal_cdf(x);
            let back = normal_quantile(p).unwrap();
            assert!((back - x).abs() < 1e-8, "x = {x}, back = {back}");
            assert!((normal_cdf(back) - p).abs() < 1e-10);
            x += 0.093;
        }
    }
}
