//! Real roots of polynomials up to degree four.
//!
//! Quartics go through Ferrari's reduction (depressed quartic plus resolvent
//! cubic). Degenerate leading coefficients drop to the cubic, quadratic or
//! linear solvers. Every root is Newton-polished against the original
//! polynomial. When the resolvent step is numerically unreliable, or the
//! polished roots fail the residual check, the roots are recomputed by
//! bracketing between the critical points of the polynomial.

use crate::{Error, Result};

/// Relative size below which a leading coefficient counts as zero.
const DEGENERATE_LEAD: f64 = 1e-12;

/// All real roots of `c4 t⁴ + c3 t³ + c2 t² + c1 t + c0`, ascending, with
/// (numerically) repeated roots reported once.
pub fn solve_quartic(c4: f64, c3: f64, c2: f64, c1: f64, c0: f64) -> Result<Vec<f64>> {
    solve_poly(&[c0, c1, c2, c3, c4])
}

/// Real roots of a cubic `c3 t³ + c2 t² + c1 t + c0`.
pub fn solve_cubic(c3: f64, c2: f64, c1: f64, c0: f64) -> Result<Vec<f64>> {
    solve_poly(&[c0, c1, c2, c3])
}

/// Real roots of `c2 t² + c1 t + c0`.
pub fn solve_quadratic(c2: f64, c1: f64, c0: f64) -> Result<Vec<f64>> {
    solve_poly(&[c0, c1, c2])
}

/// Evaluates the polynomial with ascending coefficients at `t`.
///
/// Uses compensated Horner evaluation, so the result is as accurate as if
/// computed in twice the working precision.
#[inline]
pub fn eval_poly(coeffs: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    let mut err = 0.0;
    for &c in coeffs.iter().rev() {
        let (prod, prod_err) = two_prod(acc, t);
        let (sum, sum_err) = two_sum(prod, c);
        acc = sum;
        err = err * t + (prod_err + sum_err);
    }
    acc + err
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Real roots for ascending coefficients `[c0, c1, ..., c_deg]`, `deg ≤ 4`.
fn solve_poly(coeffs: &[f64]) -> Result<Vec<f64>> {
    debug_assert!(coeffs.len() <= 5);
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return if scale == 0.0 {
            Err(Error::ZeroPolynomial)
        } else {
            Err(Error::Parameter("non-finite polynomial coefficient".into()))
        };
    }
    let mut a: Vec<f64> = coeffs.iter().map(|c| c / scale).collect();
    while a.len() > 1 && a.last().is_some_and(|c| c.abs() < DEGENERATE_LEAD) {
        a.pop();
    }
    let mut roots = match a.len() {
        1 => Vec::new(),
        2 => vec![-a[0] / a[1]],
        3 => quadratic_roots(a[2], a[1], a[0]),
        4 => cubic_roots(a[3], a[2], a[1], a[0]),
        _ => match ferrari(&a) {
            Some(r) => r,
            None => bracketed_roots(&a),
        },
    };
    // Polish against the caller's coefficients; normalizing perturbs them.
    let orig = &coeffs[..a.len()];
    for r in roots.iter_mut() {
        *r = polish(orig, *r);
    }
    finalize(&mut roots);
    if a.len() == 5 && !roots_acceptable(&a, &roots) {
        roots = bracketed_roots(&a);
        for r in roots.iter_mut() {
            *r = polish(orig, *r);
        }
        finalize(&mut roots);
    }
    Ok(roots)
}

fn finalize(roots: &mut Vec<f64>) {
    roots.retain(|r| r.is_finite());
    roots.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-10 * (1.0 + y.abs()));
}

/// Sum of `|c_k t^k|`, the natural scale of rounding in `p(t)`.
fn magnitude(a: &[f64], t: f64) -> f64 {
    let at = t.abs();
    a.iter().rev().fold(0.0, |acc, &c| acc * at + c.abs())
}

fn roots_acceptable(a: &[f64], roots: &[f64]) -> bool {
    let ok_residuals = roots
        .iter()
        .all(|&r| eval_poly(a, r).abs() <= 1e-10 * magnitude(a, r).max(1.0));
    // Every simple real root produces a sign change between consecutive
    // critical points; Ferrari must not have dropped any of them.
    ok_residuals && roots.len() >= sign_change_count(a)
}

fn sign_change_count(a: &[f64]) -> usize {
    let pts = bracket_points(a);
    let vals: Vec<f64> = pts.iter().map(|&t| eval_poly(a, t)).collect();
    vals.windows(2).filter(|w| w[0] * w[1] < 0.0).count()
}

/// Ascending `[-bound, critical points..., bound]` for the polynomial.
fn bracket_points(a: &[f64]) -> Vec<f64> {
    let deg = a.len() - 1;
    let lead = a[deg];
    // Cauchy bound on the modulus of any root.
    let bound = 1.0 + a[..deg].iter().fold(0.0f64, |m, c| m.max((c / lead).abs()));
    let deriv: Vec<f64> = (1..=deg).map(|k| k as f64 * a[k]).collect();
    let mut crit = match deriv.len() {
        0 | 1 => Vec::new(),
        2 => vec![-deriv[0] / deriv[1]],
        3 => quadratic_roots(deriv[2], deriv[1], deriv[0]),
        _ => bracketed_roots(&deriv),
    };
    crit.retain(|c| c.is_finite() && c.abs() < bound);
    let mut pts = Vec::with_capacity(crit.len() + 2);
    pts.push(-bound);
    crit.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    pts.extend(crit);
    pts.push(bound);
    pts
}

/// Real roots by bisection between consecutive critical points. Critical
/// points where the polynomial vanishes (multiple roots) are kept as roots.
fn bracketed_roots(a: &[f64]) -> Vec<f64> {
    let pts = bracket_points(a);
    let mut roots = Vec::new();
    for (k, &t) in pts.iter().enumerate() {
        if k > 0 && k + 1 < pts.len() {
            let v = eval_poly(a, t);
            if v.abs() <= 1e-12 * magnitude(a, t).max(1.0) {
                roots.push(t);
            }
        }
    }
    for w in pts.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (mut flo, fhi) = (eval_poly(a, lo), eval_poly(a, hi));
        if flo == 0.0 {
            roots.push(lo);
            continue;
        }
        if flo * fhi > 0.0 || fhi == 0.0 {
            if fhi == 0.0 {
                roots.push(hi);
            }
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = eval_poly(a, mid);
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if flo * fm < 0.0 {
                hi = mid;
            } else {
                lo = mid;
                flo = fm;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots
}

/// Newton refinement that only accepts steps reducing `|p(t)|`.
fn polish(a: &[f64], mut t: f64) -> f64 {
    let deriv: Vec<f64> = (1..a.len()).map(|k| k as f64 * a[k]).collect();
    let mut ft = eval_poly(a, t).abs();
    for _ in 0..8 {
        if ft == 0.0 {
            break;
        }
        let d = eval_poly(&deriv, t);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let cand = t - eval_poly(a, t) / d;
        let fc = eval_poly(a, cand).abs();
        if fc < ft {
            t = cand;
            ft = fc;
        } else {
            break;
        }
    }
    // Newton stalls within a few ulps; finish by walking to the best neighbour.
    for _ in 0..16 {
        let up = next_toward(t, f64::INFINITY);
        let down = next_toward(t, f64::NEG_INFINITY);
        let (fu, fd) = (eval_poly(a, up).abs(), eval_poly(a, down).abs());
        if fu < ft && fu <= fd {
            t = up;
            ft = fu;
        } else if fd < ft {
            t = down;
            ft = fd;
        } else {
            break;
        }
    }
    t
}

fn next_toward(t: f64, dir: f64) -> f64 {
    if t == 0.0 {
        return if dir > 0.0 { f64::from_bits(1) } else { -f64::from_bits(1) };
    }
    let bits = t.to_bits();
    let away = (dir > 0.0) == (t > 0.0);
    f64::from_bits(if away { bits + 1 } else { bits - 1 })
}

/// Stable real roots of `a t² + b t + c` with `a ≠ 0`. A slightly negative
/// discriminant (relative to the coefficients) counts as a double root.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b != 0.0 { vec![-c / b] } else { Vec::new() };
    }
    let disc = b * b - 4.0 * a * c;
    let tol = 4.0 * f64::EPSILON * (b * b + (4.0 * a * c).abs());
    if disc < -tol {
        return Vec::new();
    }
    if disc <= tol {
        return vec![-b / (2.0 * a)];
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

/// Real roots of `a t³ + b t² + c t + d` with `a ≠ 0` (trigonometric /
/// Cardano split on the depressed cubic).
fn cubic_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    let (b, c, d) = (b / a, c / a, d / a);
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let half_q = q / 2.0;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;
    let mut ys = if p == 0.0 && q == 0.0 {
        vec![0.0]
    } else if disc > 0.0 {
        let sq = disc.sqrt();
        let u = (-half_q + if half_q >= 0.0 { -sq } else { sq }).cbrt();
        let v = if u != 0.0 { -third_p / u } else { 0.0 };
        vec![u + v]
    } else {
        // Three real roots (possibly repeated).
        let r = (-third_p).sqrt();
        let cos_arg = if r == 0.0 { 0.0 } else { (-half_q / (r * r * r)).clamp(-1.0, 1.0) };
        let phi = cos_arg.acos();
        (0..3)
            .map(|k| 2.0 * r * ((phi + 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos())
            .collect()
    };
    let monic = [d, c, b, 1.0];
    for y in ys.iter_mut() {
        *y = polish(&monic, *y - shift);
    }
    ys
}

/// Ferrari's method on ascending coefficients with a nonzero quartic term.
/// Returns `None` when the resolvent step loses too much precision.
fn ferrari(a: &[f64]) -> Option<Vec<f64>> {
    let lead = a[4];
    let (b3, b2, b1, b0) = (a[3] / lead, a[2] / lead, a[1] / lead, a[0] / lead);
    let shift = b3 / 4.0;
    let b3sq = b3 * b3;
    let p = b2 - 3.0 * b3sq / 8.0;
    let q = b1 - b3 * b2 / 2.0 + b3sq * b3 / 8.0;
    let r = b0 - b3 * b1 / 4.0 + b3sq * b2 / 16.0 - 3.0 * b3sq * b3sq / 256.0;
    let size = 1.0 + p.abs() + q.abs().sqrt() + r.abs().sqrt();

    let mut ys = Vec::with_capacity(4);
    if q.abs() <= 1e-14 * size * size * size {
        // Biquadratic: z² + p z + r = 0 with z = y².
        for z in quadratic_roots(1.0, p, r) {
            if z > 0.0 {
                ys.push(z.sqrt());
                ys.push(-z.sqrt());
            } else if z > -1e-14 * size * size {
                ys.push(0.0);
            }
        }
    } else {
        // Resolvent 8m³ + 8p m² + (2p² − 8r) m − q² = 0 has a positive root.
        let m = cubic_roots(8.0, 8.0 * p, 2.0 * p * p - 8.0 * r, -q * q)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        if !(m > 1e-12 * size * size) {
            return None;
        }
        let s = (2.0 * m).sqrt();
        let off = q / (2.0 * s);
        // y² ∓ s·y + (p/2 + m ± q/(2s)) = 0
        ys.extend(quadratic_roots(1.0, -s, p / 2.0 + m + off));
        ys.extend(quadratic_roots(1.0, s, p / 2.0 + m - off));
    }
    Some(ys.into_iter().map(|y| y - shift).collect())
}
