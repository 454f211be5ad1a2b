//! Real roots of polynomials up to degree three.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `c3·x³ + c2·x² + c1·x + c0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicCoefficients {
    pub c3: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealRoot {
    pub value: f64,
    pub multiplicity: u8,
}

const DEGENERATE_LEADING: f64 = 1e-14;
const MERGE_REL: f64 = 1e-9;
const NEWTON_STEPS: usize = 5;

impl CubicCoefficients {
    pub fn new(c3: f64, c2: f64, c1: f64, c0: f64) -> Self {
        CubicCoefficients { c3, c2, c1, c0 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        ((self.c3 * x + self.c2) * x + self.c1) * x + self.c0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (3.0 * self.c3 * x + 2.0 * self.c2) * x + self.c1
    }

    fn max_abs(&self) -> f64 {
        self.c3.abs().max(self.c2.abs()).max(self.c1.abs()).max(self.c0.abs())
    }

    /// Newton refinement; keeps the best iterate seen.
    pub fn polish(&self, x0: f64) -> f64 {
        let mut best = x0;
        let mut best_res = self.eval(x0).abs();
        let mut x = x0;
        for _ in 0..NEWTON_STEPS {
            if best_res == 0.0 {
                break;
            }
            let d = self.derivative(x);
            if d == 0.0 || !d.is_finite() {
                break;
            }
            x -= self.eval(x) / d;
            let res = self.eval(x).abs();
            if res < best_res {
                best = x;
                best_res = res;
            }
        }
        best
    }
}

/// All real roots in ascending order, with multiplicities.
///
/// Closed form (trigonometric for three real roots, Cardano otherwise),
/// Newton-polished. A negligible leading coefficient drops the degree.
pub fn real_roots(c: &CubicCoefficients) -> Result<Vec<RealRoot>> {
    let scale = c.max_abs();
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::ZeroPolynomial);
    }
    let raw = if c.c3.abs() <= DEGENERATE_LEADING * scale {
        quadratic(c.c2, c.c1, c.c0, scale)
    } else {
        cubic(c)
    };
    let mut polished: Vec<f64> = raw.into_iter().map(|x| c.polish(x)).collect();
    polished.sort_by(f64::total_cmp);
    Ok(merge(&polished))
}

/// Distinct root values, multiplicities collapsed.
pub fn distinct_real_roots(c: &CubicCoefficients) -> Result<Vec<f64>> {
    Ok(real_roots(c)?.into_iter().map(|r| r.value).collect())
}

fn merge(sorted: &[f64]) -> Vec<RealRoot> {
    let mut out: Vec<RealRoot> = Vec::with_capacity(sorted.len());
    for &x in sorted {
        match out.last_mut() {
            Some(last) if (x - last.value).abs() <= MERGE_REL * x.abs().max(last.value.abs()).max(1e-300) => {
                last.multiplicity += 1;
            }
            _ => out.push(RealRoot {
                value: x,
                multiplicity: 1,
            }),
        }
    }
    out
}

fn quadratic(a: f64, b: f64, c: f64, scale: f64) -> Vec<f64> {
    if a.abs() <= DEGENERATE_LEADING * scale {
        return if b.abs() <= DEGENERATE_LEADING * scale {
            Vec::new()
        } else {
            vec![-c / b]
        };
    }
    let disc = b * b - 4.0 * a * c;
    let tiny = 1e-14 * (b * b).max((4.0 * a * c).abs());
    if disc.abs() <= tiny {
        let x = -b / (2.0 * a);
        return vec![x, x];
    }
    if disc < 0.0 {
        return Vec::new();
    }
    // cancellation-free pair
    let q = -0.5 * (b + disc.sqrt().copysign(b));
    if q == 0.0 {
        return vec![0.0, 0.0];
    }
    vec![q / a, c / q]
}

fn cubic(c: &CubicCoefficients) -> Vec<f64> {
    let a = c.c2 / c.c3;
    let b = c.c1 / c.c3;
    let d = c.c0 / c.c3;
    // depressed: t³ + p·t + q, x = t − a/3
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + d;
    let half_q = q / 2.0;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;
    let tiny = 1e-14 * (half_q * half_q).max((third_p * third_p * third_p).abs());

    let ts: Vec<f64> = if disc.abs() <= tiny {
        if p == 0.0 {
            vec![0.0; 3]
        } else {
            let single = 3.0 * q / p;
            let double = -1.5 * q / p;
            vec![single, double, double]
        }
    } else if disc < 0.0 {
        // three distinct real roots
        let r = (-third_p).sqrt();
        let cos_arg = (-half_q / (r * r * r)).clamp(-1.0, 1.0);
        let theta = cos_arg.acos() / 3.0;
        (0..3)
            .map(|k| 2.0 * r * (theta - 2.0 * PI * k as f64 / 3.0).cos())
            .collect()
    } else {
        let s = disc.sqrt();
        // pick the sign that avoids cancellation
        let u = (-half_q - s.copysign(half_q)).cbrt();
        let t = if u == 0.0 { 0.0 } else { u - third_p / u };
        vec![t]
    };
    ts.into_iter().map(|t| t - shift).collect()
}
