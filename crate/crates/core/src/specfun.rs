//! Bessel functions of integer order 0 and 1 and the 2-D outgoing Helmholtz
//! kernel.
//!
//! Cephes-style approximations: on [0, 5] a rational function in x^2 with
//! the first two zeros factored out; beyond 5 the Hankel asymptotic form
//! with rational approximations of the modulus functions P and Q.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::{Error, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const RATIONAL_LIMIT: f64 = 5.0;
// Squares of the first two zeros of J0 and J1.
const J0_ZERO1_SQ: f64 = 5.783_185_962_946_784;
const J0_ZERO2_SQ: f64 = 30.471_262_343_662_087;
const J1_ZERO1_SQ: f64 = 1.468_197_064_212_389_3e1;
const J1_ZERO2_SQ: f64 = 4.921_845_632_169_46e1;
const SQRT_FRAC_2_PI: f64 = 0.797_884_560_802_865_4;

fn check_finite(x: f64, name: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name}: non-finite argument {x}")))
    }
}

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> Result<f64> {
    check_finite(x, "bessel_j0")?;
    Ok(j0(x))
}

/// Bessel function of the first kind, order one.
pub fn bessel_j1(x: f64) -> Result<f64> {
    check_finite(x, "bessel_j1")?;
    Ok(j1(x))
}

/// Bessel function of the second kind, order zero. Defined for x > 0 only.
pub fn bessel_y0(x: f64) -> Result<f64> {
    check_finite(x, "bessel_y0")?;
    if x <= 0.0 {
        return Err(Error::Domain(format!("bessel_y0: argument {x} <= 0")));
    }
    Ok(y0(x))
}

/// Bessel function of the second kind, order one. Defined for x > 0 only.
pub fn bessel_y1(x: f64) -> Result<f64> {
    check_finite(x, "bessel_y1")?;
    if x <= 0.0 {
        return Err(Error::Domain(format!("bessel_y1: argument {x} <= 0")));
    }
    Ok(y1(x))
}

/// Outgoing free-space Green function of the 2-D Helmholtz operator,
/// `(i/4) H0(k rho) = (i/4) (J0(k rho) + i Y0(k rho))`.
///
/// The logarithmic singularity at `rho = 0` is not evaluated here; boundary
/// integral code handles the diagonal through its own limit.
pub fn helmholtz_kernel(k: f64, rho: f64) -> Result<Complex64> {
    check_finite(k, "helmholtz_kernel")?;
    check_finite(rho, "helmholtz_kernel")?;
    if k <= 0.0 {
        return Err(Error::Domain(format!("helmholtz_kernel: k = {k} <= 0")));
    }
    if rho <= 0.0 {
        return Err(Error::Domain(format!("helmholtz_kernel: rho = {rho} <= 0")));
    }
    let z = k * rho;
    Ok(Complex64::new(-0.25 * y0(z), 0.25 * j0(z)))
}

// Unchecked evaluators used in hot loops. Callers guarantee a valid domain.

pub(crate) fn j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= RATIONAL_LIMIT {
        j0_small(x)
    } else {
        hankel0(x).0
    }
}

pub(crate) fn j1(x: f64) -> f64 {
    if x < 0.0 {
        return -j1(-x);
    }
    if x <= RATIONAL_LIMIT {
        j1_small(x)
    } else {
        hankel1(x).0
    }
}

pub(crate) fn y0(x: f64) -> f64 {
    if x <= RATIONAL_LIMIT {
        y0_small(x, j0_small(x))
    } else {
        hankel0(x).1
    }
}

pub(crate) fn y1(x: f64) -> f64 {
    if x <= RATIONAL_LIMIT {
        y1_small(x, j1_small(x))
    } else {
        hankel1(x).1
    }
}

/// Both J0 and Y0 at one argument (x > 0).
pub(crate) fn j0_y0(x: f64) -> (f64, f64) {
    if x <= RATIONAL_LIMIT {
        let j = j0_small(x);
        (j, y0_small(x, j))
    } else {
        hankel0(x)
    }
}

/// Both J1 and Y1 at one argument (x > 0).
pub(crate) fn j1_y1(x: f64) -> (f64, f64) {
    if x <= RATIONAL_LIMIT {
        let j = j1_small(x);
        (j, y1_small(x, j))
    } else {
        hankel1(x)
    }
}

fn j0_small(x: f64) -> f64 {
    let z = x * x;
    if x < 1e-5 {
        return 1.0 - 0.25 * z;
    }
    (z - J0_ZERO1_SQ) * (z - J0_ZERO2_SQ) * polevl(z, &RP0) / p1evl(z, &RQ0)
}

fn j1_small(x: f64) -> f64 {
    let z = x * x;
    x * (z - J1_ZERO1_SQ) * (z - J1_ZERO2_SQ) * polevl(z, &RP1) / p1evl(z, &RQ1)
}

fn y0_small(x: f64, j0x: f64) -> f64 {
    let z = x * x;
    polevl(z, &YP0) / p1evl(z, &YQ0) + 2.0 / PI * x.ln() * j0x
}

fn y1_small(x: f64, j1x: f64) -> f64 {
    let z = x * x;
    x * (polevl(z, &YP1) / p1evl(z, &YQ1)) + 2.0 / PI * (j1x * x.ln() - 1.0 / x)
}

/// `(J0, Y0)` from the large-argument Hankel form.
fn hankel0(x: f64) -> (f64, f64) {
    let (p, q) = pq0(x);
    let (s, c) = (x - FRAC_PI_4).sin_cos();
    let scale = SQRT_FRAC_2_PI / x.sqrt();
    ((p * c - q * s) * scale, (p * s + q * c) * scale)
}

fn hankel1(x: f64) -> (f64, f64) {
    let (p, q) = pq1(x);
    let (s, c) = (x - 3.0 * FRAC_PI_4).sin_cos();
    let scale = SQRT_FRAC_2_PI / x.sqrt();
    ((p * c - q * s) * scale, (p * s + q * c) * scale)
}

fn polevl(x: f64, coef: &[f64]) -> f64 {
    coef.iter().fold(0.0, |acc, &c| acc * x + c)
}

/// Polynomial with an implied leading coefficient of one.
fn p1evl(x: f64, coef: &[f64]) -> f64 {
    coef.iter().fold(1.0, |acc, &c| acc * x + c)
}

/// Hankel modulus functions for order zero, returned as `(P, w Q)` with
/// `w = 5/x`, ready to combine with the phase `x - pi/4`.
fn pq0(x: f64) -> (f64, f64) {
    let w = 5.0 / x;
    let z = w * w;
    let p = polevl(z, &PP0) / polevl(z, &PQ0);
    let q = polevl(z, &QP0) / p1evl(z, &QQ0);
    (p, w * q)
}

fn pq1(x: f64) -> (f64, f64) {
    let w = 5.0 / x;
    let z = w * w;
    let p = polevl(z, &PP1) / polevl(z, &PQ1);
    let q = polevl(z, &QP1) / p1evl(z, &QQ1);
    (p, w * q)
}

const RP0: [f64; 4] = [
    -4.794_432_209_782_018e9,
    1.956_174_919_465_565_7e12,
    -2.492_483_443_609_677_2e14,
    9.708_622_510_473_064e15,
];
const RQ0: [f64; 8] = [
    4.995_631_471_526_51e2,
    1.737_854_016_763_747e5,
    4.844_096_583_399_621e7,
    1.118_555_370_453_568_3e10,
    2.112_775_201_154_892e12,
    3.105_182_298_574_225_6e14,
    3.181_219_559_432_049_6e16,
    1.710_862_940_810_431_5e18,
];
const YP0: [f64; 8] = [
    1.559_243_678_552_357_4e4,
    -1.466_392_959_039_716e7,
    5.435_264_770_518_765e9,
    -9.821_360_657_179_115e11,
    8.759_063_943_953_67e13,
    -3.466_283_033_847_297e15,
    4.427_332_685_725_698_4e16,
    -1.849_508_004_369_866_8e16,
];
const YQ0: [f64; 7] = [
    1.041_283_536_642_598_4e3,
    6.261_073_301_371_35e5,
    2.689_196_333_938_141_5e8,
    8.640_024_871_039_35e10,
    2.029_796_127_501_055_5e13,
    3.171_577_528_429_750_5e15,
    2.505_962_561_726_530_6e17,
];
const RP1: [f64; 4] = [
    -8.999_712_257_055_594e8,
    4.522_282_979_981_940_3e11,
    -7.274_942_452_218_183e13,
    3.682_957_328_638_529e15,
];
const RQ1: [f64; 8] = [
    6.208_364_781_180_543e2,
    2.569_872_567_577_488_4e5,
    8.351_467_914_319_493e7,
    2.215_115_954_797_925e10,
    4.749_141_220_799_914e12,
    7.843_696_078_762_359e14,
    8.952_223_361_846_274e16,
    5.322_786_203_326_801e18,
];
const YP1: [f64; 6] = [
    1.263_204_747_901_780_4e9,
    -6.473_558_763_791_603e11,
    1.145_095_115_418_237_3e14,
    -8.127_702_555_013_251e15,
    2.024_394_757_135_949e17,
    -7.788_771_962_659_501e17,
];
const YQ1: [f64; 8] = [
    5.943_015_923_461_282e2,
    2.355_640_929_430_685_6e5,
    7.348_119_444_597_217e7,
    1.876_013_161_087_061_7e10,
    3.882_312_774_962_385_7e12,
    6.205_577_271_469_538e14,
    6.871_410_873_553_005e16,
    3.972_706_081_165_606_4e18,
];

const PP0: [f64; 7] = [
    7.969_367_292_973_471e-4,
    8.283_523_921_074_408e-2,
    1.239_533_716_464_143,
    5.447_250_030_587_687,
    8.747_165_001_998_17,
    5.303_240_382_353_949,
    1.0,
];
const PQ0: [f64; 7] = [
    9.244_088_105_588_637e-4,
    8.562_884_743_544_745e-2,
    1.253_527_439_010_589_5,
    5.470_977_403_304_171,
    8.761_908_832_370_695,
    5.306_052_882_353_947,
    1.0,
];
const QP0: [f64; 8] = [
    -1.136_638_388_984_691_6e-2,
    -1.282_527_186_705_093_1,
    -1.955_395_442_577_359_7e1,
    -9.320_601_521_237_683e1,
    -1.776_811_679_804_880_6e2,
    -1.470_775_051_549_511_8e2,
    -5.141_053_267_665_993e1,
    -6.050_143_506_007_285,
];
const QQ0: [f64; 7] = [
    6.431_782_561_181_78e1,
    8.564_300_259_769_806e2,
    3.882_401_836_054_016_3e3,
    7.240_467_741_956_525e3,
    5.930_727_011_873_169e3,
    2.062_093_316_603_278_3e3,
    2.420_057_402_402_914e2,
];

const PP1: [f64; 7] = [
    7.621_256_162_081_731e-4,
    7.313_970_569_409_176e-2,
    1.127_196_081_296_849_3,
    5.112_079_511_468_076,
    8.424_045_901_417_724,
    5.214_515_986_823_615,
    1.0,
];
const PQ1: [f64; 7] = [
    5.713_231_280_725_487e-4,
    6.884_559_087_544_954e-2,
    1.105_142_326_340_617,
    5.073_863_861_286_015,
    8.399_855_543_276_042,
    5.209_828_486_823_619,
    1.0,
];
const QP1: [f64; 8] = [
    5.108_625_947_501_766e-2,
    4.982_138_729_512_334,
    7.582_382_841_325_453e1,
    3.667_796_093_601_508e2,
    7.108_563_049_989_261e2,
    5.974_896_124_006_136e2,
    2.116_887_571_005_721_3e2,
    2.520_702_058_580_237_2e1,
];
const QQ1: [f64; 7] = [
    7.423_732_770_356_752e1,
    1.056_448_860_382_628_3e3,
    4.986_410_583_376_536e3,
    9.562_318_924_047_562e3,
    7.997_041_604_473_507e3,
    2.826_192_785_176_390_8e3,
    3.360_936_078_106_983e2,
];
