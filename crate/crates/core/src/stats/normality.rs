//! Shapiro-Wilk normality test (Royston's approximation, valid for
//! 3 <= n <= 5000) and the routing gate built on it.

use super::dist::{normal_quantile, normal_sf};
use crate::error::{Error, Result};

pub const NORMALITY_ALPHA: f64 = 0.05;
pub const MIN_GATE_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapiroWilk {
    pub w: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normality {
    Normal,
    NonNormal,
}

fn poly(c: &[f64], x: f64) -> f64 {
    let mut ret = c[0];
    if c.len() > 1 {
        let mut p = x * c[c.len() - 1];
        for j in (1..c.len() - 1).rev() {
            p = (p + c[j]) * x;
        }
        ret += p;
    }
    ret
}

pub fn shapiro_wilk(x: &[f64]) -> Result<ShapiroWilk> {
    const SMALL: f64 = 1e-19;
    const G: [f64; 2] = [-2.273, 0.459];
    const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
    const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
    const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
    const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
    const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
    const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];

    let n = x.len();
    if n < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: n });
    }
    if n > 5000 {
        return Err(Error::Data("shapiro_wilk supports at most 5000 samples".into()));
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let range = sorted[n - 1] - sorted[0];
    if range < SMALL {
        return Err(Error::DegenerateVariance("all values identical".into()));
    }

    let nn2 = n / 2;
    // half[i] is the coefficient for the (i+1)-th largest order statistic
    let mut half = vec![0.0; nn2];
    let an = n as f64;
    if n == 3 {
        half[0] = 0.5f64.sqrt();
    } else {
        let an25 = an + 0.25;
        let m: Vec<f64> = (1..=nn2)
            .map(|i| normal_quantile((i as f64 - 0.375) / an25))
            .collect();
        let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
        let ssumm2 = summ2.sqrt();
        let rsn = 1.0 / an.sqrt();
        let a1 = poly(&C1, rsn) - m[0] / ssumm2;
        let (first_scaled, fac) = if n > 5 {
            let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
            let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1])
                / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
                .sqrt();
            half[1] = a2;
            (2, fac)
        } else {
            let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
            (1, fac)
        };
        half[0] = a1;
        for i in first_scaled..nn2 {
            half[i] = -m[i] / fac;
        }
    }

    let mut coef = vec![0.0; n];
    for i in 0..nn2 {
        coef[i] = -half[i];
        coef[n - 1 - i] = half[i];
    }
    let sa = coef.iter().sum::<f64>() / an;
    let sx = sorted.iter().map(|v| v / range).sum::<f64>() / an;
    let (mut ssa, mut ssx, mut sax) = (0.0, 0.0, 0.0);
    for (c, v) in coef.iter().zip(&sorted) {
        let asa = c - sa;
        let xsx = v / range - sx;
        ssa += asa * asa;
        ssx += xsx * xsx;
        sax += asa * xsx;
    }
    let ssassx = (ssa * ssx).sqrt();
    let w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    let w = 1.0 - w1;

    if n == 3 {
        let pi6 = 6.0 / std::f64::consts::PI;
        let stqr = std::f64::consts::PI / 3.0;
        let p = (pi6 * (w.sqrt().asin() - stqr)).max(0.0);
        return Ok(ShapiroWilk { w, p_value: p.min(1.0) });
    }
    let mut y = w1.ln();
    let (m, s) = if n <= 11 {
        let gamma = poly(&G, an);
        if y >= gamma {
            return Ok(ShapiroWilk { w, p_value: 1e-99 });
        }
        y = -(gamma - y).ln();
        (poly(&C3, an), poly(&C4, an).exp())
    } else {
        let xx = an.ln();
        (poly(&C5, xx), poly(&C6, xx).exp())
    };
    Ok(ShapiroWilk {
        w,
        p_value: normal_sf((y - m) / s).clamp(0.0, 1.0),
    })
}

/// Routes a feature to the parametric or rank-based test: Shapiro-Wilk at
/// alpha = 0.05.
pub fn normality_gate(x: &[f64]) -> Result<Normality> {
    if x.len() < MIN_GATE_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_GATE_SAMPLES,
            got: x.len(),
        });
    }
    match shapiro_wilk(x) {
        Ok(sw) if sw.p_value >= NORMALITY_ALPHA => Ok(Normality::Normal),
        Ok(_) => Ok(Normality::NonNormal),
        // constant samples are not normal in any useful sense
        Err(Error::DegenerateVariance(_)) => Ok(Normality::NonNormal),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn too_few_samples() {
        assert_eq!(
            normality_gate(&[1.0; 7]),
            Err(Error::TooFewSamples { needed: 8, got: 7 })
        );
    }

    #[test]
    fn n3_exact_p() {
        // equally spaced triple is as normal as three points get
        let r = shapiro_wilk(&[1.0, 2.0, 3.0]).unwrap();
        assert!((r.w - 1.0).abs() < 1e-12);
        assert!((r.p_value - 1.0).abs() < 1e-9);
    }
}
