//! Modified Bessel functions of order zero.
//!
//! `K0` is evaluated with Clenshaw-summed Chebyshev expansions on two
//! intervals: `(0, 2]` uses `K0(x) = P(x^2 - 2) - ln(x/2) I0(x)`, and `x > 2`
//! uses `K0(x) = exp(-x) P(8/x - 2) / sqrt(x)`. Relative error stays below
//! 1e-14 over the range the thermal model uses.

use crate::error::{domain, Result};

/// Chebyshev coefficients for exp(-x) I0(x), x in [0, 8].
const I0_SMALL: [f64; 30] = [
    -4.415_341_646_479_339_5E-18,
    3.330_794_518_822_238_4E-17,
    -2.431_279_846_547_955E-16,
    1.715_391_285_555_133E-15,
    -1.168_533_287_799_345_1E-14,
    7.676_185_498_604_936E-14,
    -4.856_446_783_111_929E-13,
    2.955_052_663_129_64E-12,
    -1.726_826_291_441_556E-11,
    9.675_809_035_373_237E-11,
    -5.189_795_601_635_263E-10,
    2.659_823_724_682_386_6E-9,
    -1.300_025_009_986_248E-8,
    6.046_995_022_541_919E-8,
    -2.670_793_853_940_612E-7,
    1.117_387_539_120_103_7E-6,
    -4.416_738_358_458_750_5E-6,
    1.644_844_807_072_889_6E-5,
    -5.754_195_010_082_104E-5,
    1.885_028_850_958_416_5E-4,
    -5.763_755_745_385_824E-4,
    1.639_475_616_941_335_7E-3,
    -4.324_309_995_050_576E-3,
    1.054_646_039_459_499_8E-2,
    -2.373_741_480_589_947E-2,
    4.930_528_423_967_071E-2,
    -9.490_109_704_804_764E-2,
    1.716_209_015_222_087_7E-1,
    -3.046_826_723_431_984E-1,
    6.767_952_744_094_761E-1,
];

/// Chebyshev coefficients for exp(-x) sqrt(x) I0(x), x > 8.
const I0_LARGE: [f64; 25] = [
    -7.233_180_487_874_754E-18,
    -4.830_504_485_944_182E-18,
    4.465_621_420_296_76E-17,
    3.461_222_867_697_461E-17,
    -2.827_623_980_516_583_6E-16,
    -3.425_485_619_677_219E-16,
    1.772_560_133_056_526_3E-15,
    3.811_680_669_352_622_4E-15,
    -9.554_846_698_828_307E-15,
    -4.150_569_347_287_222E-14,
    1.540_086_217_521_41E-14,
    3.852_778_382_742_142_6E-13,
    7.180_124_451_383_666E-13,
    -1.794_178_531_506_806_2E-12,
    -1.321_581_184_044_771_3E-11,
    -3.149_916_527_963_241_6E-11,
    1.188_914_710_784_643_9E-11,
    4.940_602_388_224_97E-10,
    3.396_232_025_708_386_5E-9,
    2.266_668_990_498_178E-8,
    2.048_918_589_469_063_8E-7,
    2.891_370_520_834_756_7E-6,
    6.889_758_346_916_825E-5,
    3.369_116_478_255_694_3E-3,
    8.044_904_110_141_088E-1,
];

/// Chebyshev coefficients for K0(x) + ln(x/2) I0(x), x in (0, 2].
const K0_SMALL: [f64; 10] = [
    1.374_465_435_613_523_1e-16,
    4.259_816_142_796_610_2e-14,
    1.034_969_525_763_384_2e-11,
    1.904_516_377_220_208_9e-9,
    2.534_791_079_026_149_5e-7,
    2.286_212_103_119_451_8e-5,
    1.264_615_411_446_925_9e-3,
    3.597_993_651_536_150_2e-2,
    3.442_898_999_246_284_9e-1,
    -5.353_273_932_339_027_7e-1,
];

/// Chebyshev coefficients for exp(x) sqrt(x) K0(x), x > 2.
const K0_LARGE: [f64; 25] = [
    5.300_433_772_686_262_8e-18,
    -1.647_580_430_152_421_3e-17,
    5.210_391_505_039_027_6e-17,
    -1.678_231_096_805_412_1e-16,
    5.512_055_978_524_319_4e-16,
    -1.848_593_377_343_779_1e-15,
    6.340_076_477_405_070_6e-15,
    -2.227_513_326_991_669_9e-14,
    8.032_890_775_363_575_2e-14,
    -2.980_096_923_172_730_4e-13,
    1.140_340_588_208_475e-12,
    -4.514_597_883_373_944e-12,
    1.855_949_114_954_717_9e-11,
    -7.957_489_244_477_107e-11,
    3.577_397_281_400_301e-10,
    -1.697_534_509_389_059_9e-9,
    8.584_034_011_535_096e-9,
    -4.660_489_897_687_947_8e-8,
    2.766_813_639_445_015e-7,
    -1.831_755_522_719_119_5e-6,
    1.394_981_371_887_649_9e-5,
    -1.284_954_958_162_780_3e-4,
    1.569_883_885_730_053_4e-3,
    -3.144_810_131_196_450_1e-2,
    2.440_303_082_065_955_5,
];

fn chbevl(x: f64, coeffs: &[f64]) -> f64 {
    let mut b0 = coeffs[0];
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in &coeffs[1..] {
        b2 = b1;
        b1 = b0;
        b0 = x * b1 + c - b2;
    }
    0.5 * (b0 - b2)
}

/// Modified Bessel function of the first kind, order zero.
pub fn bessel_i0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 8.0 {
        ax.exp() * chbevl(0.5 * ax - 2.0, &I0_SMALL)
    } else {
        ax.exp() * chbevl(32.0 / ax - 2.0, &I0_LARGE) / ax.sqrt()
    }
}

fn check_arg(op: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(domain(op, format!("x = {x}, expected finite x > 0")))
    }
}

/// Modified Bessel function of the second kind, order zero.
pub fn bessel_k0(x: f64) -> Result<f64> {
    check_arg("bessel_k0", x)?;
    if x <= 2.0 {
        Ok(chbevl(x * x - 2.0, &K0_SMALL) - (0.5 * x).ln() * bessel_i0(x))
    } else {
        Ok((-x).exp() * chbevl(8.0 / x - 2.0, &K0_LARGE) / x.sqrt())
    }
}

/// Exponentially scaled `exp(x) K0(x)`; finite for arguments where `K0`
/// itself underflows.
pub fn bessel_k0e(x: f64) -> Result<f64> {
    check_arg("bessel_k0e", x)?;
    if x <= 2.0 {
        Ok(bessel_k0(x)? * x.exp())
    } else {
        Ok(chbevl(8.0 / x - 2.0, &K0_LARGE) / x.sqrt())
    }
}
