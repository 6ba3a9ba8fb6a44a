//! Distribution tail functions used by the hypothesis tests.
//!
//! Student-t, chi-square, F and normal tails come from `statrs`; the
//! studentized range distribution (for Tukey HSD) is integrated here with
//! Gauss-Legendre quadrature.

use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Normal, StudentsT};
use statrs::function::gamma::ln_gamma;

/// Two-sided p-value of a Student-t statistic.
pub fn t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_nan() || df <= 0.0 {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("valid t parameters");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df).expect("df > 0").sf(x).clamp(0.0, 1.0)
}

pub fn f_sf(x: f64, df1: f64, df2: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    FisherSnedecor::new(df1, df2)
        .expect("valid F parameters")
        .sf(x)
        .clamp(0.0, 1.0)
}

pub fn normal_cdf(x: f64) -> f64 {
    standard_normal().cdf(x)
}

pub fn normal_sf(x: f64) -> f64 {
    standard_normal().sf(x)
}

pub fn normal_quantile(p: f64) -> f64 {
    standard_normal().inverse_cdf(p)
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

fn normal_cdf_shifted(x: f64, mean: f64) -> f64 {
    normal_cdf(x - mean)
}

/// Probability that the range of `cc` standard normals is below `w`
/// (the `df -> inf` limit of the studentized range), raised to `rr`.
fn range_prob(w: f64, rr: f64, cc: f64) -> f64 {
    const NLEG: usize = 12;
    const IHALF: usize = 6;
    const C1: f64 = -30.0;
    const C2: f64 = -50.0;
    const C3: f64 = 60.0;
    const BB: f64 = 8.0;
    const WLAR: f64 = 3.0;
    const XLEG: [f64; IHALF] = [
        0.981_560_634_246_719_2,
        0.904_117_256_370_474_9,
        0.769_902_674_194_304_7,
        0.587_317_954_286_617_5,
        0.367_831_498_998_180_2,
        0.125_233_408_511_468_9,
    ];
    const ALEG: [f64; IHALF] = [
        0.047_175_336_386_511_83,
        0.106_939_325_995_318_43,
        0.160_078_328_543_346_22,
        0.203_167_426_723_065_92,
        0.233_492_536_538_354_8,
        0.249_147_045_813_402_77,
    ];

    let qsqz = w * 0.5;
    if qsqz >= BB {
        return 1.0;
    }
    let mut pr_w = 2.0 * normal_cdf(qsqz) - 1.0;
    pr_w = if pr_w >= (C2 / cc).exp() { pr_w.powf(cc) } else { 0.0 };

    let wincr = if w > WLAR { 2.0 } else { 3.0 };
    let mut blb = qsqz;
    let binc = (BB - qsqz) / wincr;
    let mut bub = blb + binc;
    let mut einsum = 0.0;
    let cc1 = cc - 1.0;
    let mut wi = 1.0;
    while wi <= wincr {
        let mut elsum = 0.0;
        let a = 0.5 * (bub + blb);
        let b = 0.5 * (bub - blb);
        for jj in 1..=NLEG {
            let (j, xx) = if IHALF < jj {
                let j = NLEG - jj + 1;
                (j, XLEG[j - 1])
            } else {
                (jj, -XLEG[jj - 1])
            };
            let ac = a + b * xx;
            let qexpo = ac * ac;
            if qexpo > C3 {
                break;
            }
            let pplus = 2.0 * normal_cdf(ac);
            let pminus = 2.0 * normal_cdf_shifted(ac, w);
            let rinsum = pplus * 0.5 - pminus * 0.5;
            if rinsum >= (C1 / cc1).exp() {
                elsum += ALEG[j - 1] * (-(0.5 * qexpo)).exp() * rinsum.powf(cc1);
            }
        }
        elsum *= 2.0 * b * cc / (2.0 * std::f64::consts::PI).sqrt();
        einsum += elsum;
        blb = bub;
        bub += binc;
        wi += 1.0;
    }
    pr_w += einsum;
    if pr_w <= (C1 / rr).exp() {
        return 0.0;
    }
    pr_w.powf(rr).min(1.0)
}

/// CDF of the studentized range for `groups` means and `df` error degrees
/// of freedom.
pub fn studentized_range_cdf(q: f64, groups: f64, df: f64) -> f64 {
    const NLEGQ: usize = 16;
    const IHALFQ: usize = 8;
    const EPS1: f64 = -30.0;
    const EPS2: f64 = 1.0e-14;
    const XLEGQ: [f64; IHALFQ] = [
        0.989_400_934_991_649_9,
        0.944_575_023_073_232_6,
        0.865_631_202_387_831_8,
        0.755_404_408_355_003,
        0.617_876_244_402_643_8,
        0.458_016_777_657_227_37,
        0.281_603_550_779_258_9,
        9.501_250_983_763_744e-2,
    ];
    const ALEGQ: [f64; IHALFQ] = [
        2.715_245_941_175_409_6e-2,
        6.225_352_393_864_789_4e-2,
        9.515_851_168_249_279e-2,
        0.124_628_971_255_533_88,
        0.149_595_988_816_576_74,
        0.169_156_519_395_002_54,
        0.182_603_415_044_923_58,
        0.189_450_610_455_068_5,
    ];
    let rr = 1.0;
    let cc = groups;
    if q <= 0.0 {
        return 0.0;
    }
    if df < 2.0 || cc < 2.0 {
        return f64::NAN;
    }
    if q.is_infinite() {
        return 1.0;
    }
    if df > 25000.0 {
        return range_prob(q, rr, cc);
    }

    let f2 = df * 0.5;
    let mut f2lf = f2 * df.ln() - df * std::f64::consts::LN_2 - ln_gamma(f2);
    let f21 = f2 - 1.0;
    let ff4 = df * 0.25;
    let ulen = if df <= 100.0 {
        1.0
    } else if df <= 800.0 {
        0.5
    } else if df <= 5000.0 {
        0.25
    } else {
        0.125
    };
    f2lf += f64::ln(ulen);

    let mut ans = 0.0;
    for i in 1..=50 {
        let mut otsum = 0.0;
        let twa1 = (2 * i - 1) as f64 * ulen;
        for jj in 1..=NLEGQ {
            let (j, t1) = if IHALFQ < jj {
                let j = jj - IHALFQ - 1;
                let t1 = f2lf + f21 * (twa1 + XLEGQ[j] * ulen).ln() - (XLEGQ[j] * ulen + twa1) * ff4;
                (j, t1)
            } else {
                let j = jj - 1;
                let t1 = f2lf + f21 * (twa1 - XLEGQ[j] * ulen).ln() + (XLEGQ[j] * ulen - twa1) * ff4;
                (j, t1)
            };
            if t1 >= EPS1 {
                let qsqz = if IHALFQ < jj {
                    q * ((XLEGQ[j] * ulen + twa1) * 0.5).sqrt()
                } else {
                    q * ((-(XLEGQ[j] * ulen) + twa1) * 0.5).sqrt()
                };
                otsum += range_prob(qsqz, rr, cc) * ALEGQ[j] * t1.exp();
            }
        }
        if i as f64 * ulen >= 1.0 && otsum <= EPS2 {
            break;
        }
        ans += otsum;
    }
    ans.min(1.0)
}

pub fn studentized_range_sf(q: f64, groups: f64, df: f64) -> f64 {
    (1.0 - studentized_range_cdf(q, groups, df)).clamp(0.0, 1.0)
}
