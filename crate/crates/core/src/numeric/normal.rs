//! Standard normal distribution function, its inverse, and multivariate normal
//! orthant probabilities for the Gaussian copula.

use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use libm::erfc;

use super::quad::{integrate, QuadTol};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        1.0
    } else if x == f64::NEG_INFINITY {
        0.0
    } else {
        0.5 * erfc(-x / SQRT_2)
    }
}

/// Wichura's AS241 (PPND16), relative accuracy about 1e-16.
pub fn ppf(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_813e4) * r
                + 6.726_577_092_700_87e4)
                * r
                + 4.592_195_393_154_987e4)
                * r
                + 1.373_169_376_550_946e4)
                * r
                + 1.971_590_950_306_551_3e3)
                * r
                + 1.331_416_678_917_843_8e2)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((5.226_495_278_852_854e3 * r + 2.872_908_573_572_194_3e4) * r
                + 3.930_789_580_009_271e4)
                * r
                + 2.121_379_430_158_659_7e4)
                * r
                + 5.394_196_021_424_751e3)
                * r
                + 6.871_870_074_920_579e2)
                * r
                + 4.231_333_070_160_091e1)
                * r
                + 1.0);
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        (((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_5)
            / (((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
                + 1.519_866_656_361_645_7e-2)
                * r
                + 1.481_039_764_274_800_8e-1)
                * r
                + 6.897_673_349_851e-1)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_759)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103)
            / (((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
                + 1.846_318_317_510_054_8e-5)
                * r
                + 7.868_691_311_456_133e-4)
                * r
                + 1.487_536_129_085_061_5e-2)
                * r
                + 1.369_298_809_227_358e-1)
                * r
                + 5.998_322_065_558_88e-1)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

// Gauss–Legendre half-rules used by the bivariate normal integral.
const GL6_W: [f64; 3] = [0.171_324_492_379_170_5, 0.360_761_573_048_138_4, 0.467_913_934_572_690_4];
const GL6_X: [f64; 3] = [0.932_469_514_203_152_2, 0.661_209_386_466_264_7, 0.238_619_186_083_197];
const GL12_W: [f64; 6] = [
    0.047_175_336_386_511_77,
    0.106_939_325_995_318_3,
    0.160_078_328_543_346_4,
    0.203_167_426_723_065_9,
    0.233_492_536_538_354_7,
    0.249_147_045_813_402_9,
];
const GL12_X: [f64; 6] = [
    0.981_560_634_246_719_1,
    0.904_117_256_370_475,
    0.769_902_674_194_305,
    0.587_317_954_286_617_1,
    0.367_831_498_998_180_2,
    0.125_233_408_511_469_2,
];
const GL20_W: [f64; 10] = [
    0.017_614_007_139_152_12,
    0.040_601_429_800_386_94,
    0.062_672_048_334_109_06,
    0.083_276_741_576_704_75,
    0.101_930_119_817_240_4,
    0.118_194_531_961_518_4,
    0.131_688_638_449_176_6,
    0.142_096_109_318_382_1,
    0.149_172_986_472_603_7,
    0.152_753_387_130_725_9,
];
const GL20_X: [f64; 10] = [
    0.993_128_599_185_094_9,
    0.963_971_927_277_913_8,
    0.912_234_428_251_325_9,
    0.839_116_971_822_218_8,
    0.746_331_906_460_150_8,
    0.636_053_680_726_515,
    0.510_867_001_950_827_1,
    0.373_706_088_715_419_6,
    0.227_785_851_141_645_1,
    0.076_526_521_133_497_33,
];

/// Upper orthant probability `P(X > h, Y > k)` for a standard bivariate normal with
/// correlation `r` (Drezner–Wesolowsky as refined by Genz, about 1e-15 absolute).
pub fn bvn_upper(h: f64, k: f64, r: f64) -> f64 {
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return if k == f64::NEG_INFINITY { 1.0 } else { cdf(-k) };
    }
    if k == f64::NEG_INFINITY {
        return cdf(-h);
    }
    if r == 0.0 {
        return cdf(-h) * cdf(-k);
    }
    let (w, x): (&[f64], &[f64]) = if r.abs() < 0.3 {
        (&GL6_W, &GL6_X)
    } else if r.abs() < 0.75 {
        (&GL12_W, &GL12_X)
    } else {
        (&GL20_W, &GL20_X)
    };
    let tp = 2.0 * PI;
    let mut k = k;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin() / 2.0;
        for i in 0..w.len() {
            for sign in [-1.0, 1.0] {
                let sn = (asr * (1.0 + sign * x[i])).sin();
                bvn += w[i] * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        bvn = bvn * asr / tp + cdf(-h) * cdf(-k);
    } else {
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        if r.abs() < 1.0 {
            let as_ = 1.0 - r * r;
            let mut a = as_.sqrt();
            let bs = (h - k) * (h - k);
            let c = (4.0 - hk) / 8.0;
            let d = (12.0 - hk) / 80.0;
            let asr = -(bs / as_ + hk) / 2.0;
            if asr > -100.0 {
                bvn = a * asr.exp() * (1.0 - c * (bs - as_) * (1.0 - d * bs) / 3.0 + c * d * as_ * as_);
            }
            if hk > -100.0 {
                let b = bs.sqrt();
                let sp = tp.sqrt() * cdf(-b / a);
                bvn -= (-hk / 2.0).exp() * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
            }
            a /= 2.0;
            for i in 0..w.len() {
                for sign in [-1.0, 1.0] {
                    let xs = (a * (1.0 + sign * x[i])).powi(2);
                    let asr = -(bs / xs + hk) / 2.0;
                    if asr > -100.0 {
                        let sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
                        let rs = (1.0 - xs).sqrt();
                        let ep = (-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))).exp() / rs;
                        bvn += a * w[i] * asr.exp() * (ep - sp);
                    }
                }
            }
            bvn = -bvn / tp;
        }
        if r > 0.0 {
            bvn += cdf(-h.max(k));
        } else if h >= k {
            bvn = -bvn;
        } else {
            let l = if h < 0.0 { cdf(k) - cdf(h) } else { cdf(-h) - cdf(-k) };
            bvn = l - bvn;
        }
    }
    bvn.clamp(0.0, 1.0)
}

/// `P(X ≤ a, Y ≤ b)` for a standard bivariate normal with correlation `r`.
pub fn bvn_cdf(a: f64, b: f64, r: f64) -> f64 {
    bvn_upper(-a, -b, r)
}

/// `P(X1 ≤ b1, X2 ≤ b2, X3 ≤ b3)` for a standard trivariate normal, computed by
/// adaptive quadrature over the first coordinate of the conditional bivariate law.
pub fn tvn_cdf(b: [f64; 3], r12: f64, r13: f64, r23: f64) -> f64 {
    if b.contains(&f64::NEG_INFINITY) {
        return 0.0;
    }
    if b[0] == f64::INFINITY {
        return bvn_cdf(b[1], b[2], r23);
    }
    if b[1] == f64::INFINITY {
        return bvn_cdf(b[0], b[2], r13);
    }
    if b[2] == f64::INFINITY {
        return bvn_cdf(b[0], b[1], r12);
    }
    // integrate over the coordinate with the smallest bound: shortest effective range
    let (b, r12, r13, r23) = {
        let idx = (0..3).min_by(|&i, &j| b[i].total_cmp(&b[j])).unwrap();
        match idx {
            0 => (b, r12, r13, r23),
            1 => ([b[1], b[0], b[2]], r12, r23, r13),
            _ => ([b[2], b[0], b[1]], r13, r23, r12),
        }
    };
    let s12 = (1.0 - r12 * r12).sqrt();
    let s13 = (1.0 - r13 * r13).sqrt();
    let rho = ((r23 - r12 * r13) / (s12 * s13)).clamp(-1.0, 1.0);
    let lower = -9.0_f64;
    let upper = b[0].min(9.0);
    if upper <= lower {
        return 0.0;
    }
    let integrand = |x: f64| pdf(x) * bvn_cdf((b[1] - r12 * x) / s12, (b[2] - r13 * x) / s13, rho);
    let tol = QuadTol { abs: 1e-14, rel: 1e-12, max_intervals: 400 };
    match integrate(integrand, lower, upper, tol) {
        Ok(r) => r.value.clamp(0.0, 1.0),
        Err(_) => f64::NAN,
    }
}

/// Orthant probability `P(X ≤ b)` in general dimension by Genz's separation of
/// variables with randomly shifted Richtmyer lattice points from a fixed seed.
pub fn mvn_cdf_qmc(b: &[f64], chol: &[Vec<f64>], abs_tol: f64) -> f64 {
    let n = b.len();
    if b.contains(&f64::NEG_INFINITY) {
        return 0.0;
    }
    const PRIMES: [f64; 10] = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0, 23.0, 29.0];
    let m = n - 1;
    let alpha: Vec<f64> = PRIMES[..m.max(1)].iter().map(|p| p.sqrt().fract()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de);
    let shifts = 12;
    let mut points = 1024usize;
    let e1 = cdf(b[0] / chol[0][0]);
    let mut estimate = f64::NAN;
    while points <= 1 << 18 {
        let mut means = Vec::with_capacity(shifts);
        for _ in 0..shifts {
            let shift: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let mut acc = 0.0;
            let mut y = vec![0.0; n];
            for j in 1..=points {
                let mut e = e1;
                let mut f = e1;
                for i in 1..n {
                    let raw = (j as f64 * alpha[i - 1] + shift[i - 1]).fract();
                    let w = (2.0 * raw - 1.0).abs(); // tent periodization
                    y[i - 1] = ppf((w * e).clamp(1e-300, 1.0 - 1e-16));
                    let s: f64 = (0..i).map(|k| chol[i][k] * y[k]).sum();
                    e = cdf((b[i] - s) / chol[i][i]);
                    f *= e;
                }
                acc += f;
            }
            means.push(acc / points as f64);
        }
        let mean = means.iter().sum::<f64>() / shifts as f64;
        let var = means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / ((shifts - 1) * shifts) as f64;
        estimate = mean;
        if 3.0 * var.sqrt() <= abs_tol {
            break;
        }
        points *= 2;
    }
    estimate.clamp(0.0, 1.0)
}
