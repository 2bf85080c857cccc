//! Double-exponential (tanh-sinh / exp-sinh) quadrature.
//!
//! Integrands are vector-valued so families of integrals that share an
//! expensive kernel (Bessel evaluations at the same abscissa) are computed in
//! one pass. Endpoint singularities of log or algebraic type at 0 are handled
//! by the substitution itself; the semi-infinite rule assumes exponential
//! decay with a caller-supplied rate used to cut off the node ladder.

use rayon::prelude::*;
use rug::ops::Pow;
use rug::Float;

use crate::error::{Error, Result};
use crate::num::{pi, real};

/// Vector integrand: given an abscissa, return all component values.
pub type VecIntegrand<'a> = &'a (dyn Fn(&Float) -> Vec<Float> + Sync);

const MAX_LEVEL: u32 = 14;

fn add_assign_vec(acc: &mut [Float], term: &[Float]) {
    for (a, t) in acc.iter_mut().zip(term) {
        *a += t;
    }
}

/// Abscissa/weight pairs of the tanh-sinh rule on (0,1) at step `h`,
/// restricted to `k` odd when `odd_only` (level refinement reuses the rest).
/// The abscissa is returned together with the weight; both keep full relative
/// precision near the endpoint x -> 0.
fn ts_nodes(h: &Float, odd_only: bool, bits: u32, cutoff: &Float) -> Vec<(Float, Float)> {
    let half_pi = pi(bits) / 2u32;
    let mut nodes = Vec::new();
    let mut k: i64 = if odd_only { 1 } else { 0 };
    let step = if odd_only { 2 } else { 1 };
    loop {
        for sign in [1i64, -1] {
            if k == 0 && sign < 0 {
                continue;
            }
            let u = real(bits, k * sign) * h.clone();
            let s: Float = u.clone().sinh() * &half_pi;
            // x = 1/(1 + e^(-2s)) computed from the small exponential so the
            // endpoint approach keeps relative accuracy.
            let e: Float = (-(s.clone() * 2u32)).exp();
            let x: Float = (Float::with_val(bits, 1) + &e).recip();
            let w: Float = half_pi.clone() * u.cosh()
                / s.cosh().square()
                / 2u32;
            if sign > 0 && w < *cutoff {
                return nodes;
            }
            if w >= *cutoff {
                nodes.push((x, w));
            }
        }
        if k == 0 && !odd_only {
            k = 1;
            continue;
        }
        k += step;
        if k > 1 << 24 {
            return nodes;
        }
    }
}

/// Integrate a vector integrand over (0,1) to absolute tolerance `tol`.
pub fn integrate_01(f: VecIntegrand, dim: usize, bits: u32, tol: &Float) -> Result<Vec<Float>> {
    // The ladder stops on the weight alone, so leave enough headroom for
    // integrands that blow up at 0: a x^(-1/2) singularity costs a factor
    // 1/sqrt(w), hence the squared tolerance plus margin for log powers.
    let cutoff: Float = tol.clone().square() * Float::with_val(bits, 2).pow(-80i32);
    let mut h = real(bits, 1);
    let mut total: Option<Vec<Float>> = None;
    for level in 0..=MAX_LEVEL {
        let nodes = ts_nodes(&h, level > 0, bits, &cutoff);
        let partial: Vec<Vec<Float>> = nodes
            .par_iter()
            .map(|(x, w)| {
                let mut v = f(x);
                for c in v.iter_mut() {
                    *c *= w;
                }
                v
            })
            .collect();
        let mut sum = vec![Float::new(bits); dim];
        for p in &partial {
            add_assign_vec(&mut sum, p);
        }
        for c in sum.iter_mut() {
            *c *= &h;
        }
        let new_total = match &total {
            None => sum,
            Some(prev) => {
                let mut t = sum;
                for (c, p) in t.iter_mut().zip(prev) {
                    *c += Float::with_val(bits, p) / 2u32;
                }
                t
            }
        };
        if let Some(prev) = &total {
            let mut diff = Float::new(bits);
            for (a, b) in new_total.iter().zip(prev) {
                let d: Float = Float::with_val(bits, a - b).abs();
                if d > diff {
                    diff = d;
                }
            }
            if level >= 3 && diff < *tol {
                return Ok(new_total);
            }
        }
        total = Some(new_total);
        h /= 2u32;
    }
    Err(Error::SearchBudget(
        "tanh-sinh quadrature did not stabilize within the level budget".into(),
    ))
}

/// Integrate a vector integrand over (1,oo) to absolute tolerance `tol`.
/// `decay` is a lower bound on the exponential decay rate of the integrand;
/// nodes past the point where e^(-decay x) is negligible are skipped.
pub fn integrate_1_inf(
    f: VecIntegrand,
    dim: usize,
    bits: u32,
    tol: &Float,
    decay: f64,
) -> Result<Vec<Float>> {
    if !(decay > 0.0) {
        return Err(Error::Domain(
            "semi-infinite quadrature requires a positive decay rate".into(),
        ));
    }
    // Beyond t_cut the integrand is below tol by the decay bound; the factor
    // absorbs slowly varying prefactors such as powers of x.
    let tol_f = tol.to_f64();
    let ln_tol = if tol_f > 0.0 { -tol_f.ln() } else { bits as f64 * 0.7 };
    let t_cut = (ln_tol + 80.0) / decay;
    let half_pi = pi(bits) / 2u32;
    let cutoff: Float = tol.clone().square() * Float::with_val(bits, 2).pow(-80i32);

    let mut h = real(bits, 1);
    let mut total: Option<Vec<Float>> = None;
    for level in 0..=MAX_LEVEL {
        // Node set at this step: t = exp((pi/2) sinh(kh)), weight t (pi/2) cosh(kh).
        let mut nodes: Vec<(Float, Float)> = Vec::new();
        let mut pos_done = false;
        let mut neg_done = false;
        let mut k: i64 = if level > 0 { 1 } else { 0 };
        let step = if level > 0 { 2 } else { 1 };
        while !(pos_done && neg_done) {
            for sign in [1i64, -1] {
                if k == 0 && sign < 0 {
                    continue;
                }
                let u = real(bits, k * sign) * h.clone();
                let s: Float = u.clone().sinh() * &half_pi;
                let t = s.exp();
                let w: Float = t.clone() * u.cosh() * &half_pi;
                if sign > 0 {
                    if t.to_f64() > t_cut {
                        pos_done = true;
                        continue;
                    }
                } else if w < cutoff {
                    neg_done = true;
                    continue;
                }
                nodes.push((t, w));
            }
            if k == 0 {
                k = 1;
                continue;
            }
            k += step;
            if k > 1 << 24 {
                break;
            }
        }
        let partial: Vec<Vec<Float>> = nodes
            .par_iter()
            .map(|(t, w)| {
                let x: Float = Float::with_val(bits, 1) + t;
                let mut v = f(&x);
                for c in v.iter_mut() {
                    *c *= w;
                }
                v
            })
            .collect();
        let mut sum = vec![Float::new(bits); dim];
        for p in &partial {
            add_assign_vec(&mut sum, p);
        }
        for c in sum.iter_mut() {
            *c *= &h;
        }
        let new_total = match &total {
            None => sum,
            Some(prev) => {
                let mut t = sum;
                for (c, p) in t.iter_mut().zip(prev) {
                    *c += Float::with_val(bits, p) / 2u32;
                }
                t
            }
        };
        if let Some(prev) = &total {
            let mut diff = Float::new(bits);
            for (a, b) in new_total.iter().zip(prev) {
                let d: Float = Float::with_val(bits, a - b).abs();
                if d > diff {
                    diff = d;
                }
            }
            if level >= 3 && diff < *tol {
                return Ok(new_total);
            }
        }
        total = Some(new_total);
        h /= 2u32;
    }
    Err(Error::SearchBudget(
        "exp-sinh quadrature did not stabilize within the level budget".into(),
    ))
}

/// Integrate over (0,oo): tanh-sinh on (0,1) plus exp-sinh on (1,oo).
pub fn integrate_0_inf(
    f: VecIntegrand,
    dim: usize,
    bits: u32,
    tol: &Float,
    decay: f64,
) -> Result<Vec<Float>> {
    let half: Float = tol.clone() / 2u32;
    let lo = integrate_01(f, dim, bits, &half)?;
    let hi = integrate_1_inf(f, dim, bits, &half, decay)?;
    Ok(lo
        .into_iter()
        .zip(hi)
        .map(|(a, b)| a + b)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{bessel_k0, bits_for_digits, parse_real};

    fn tol_digits(bits: u32, digits: i32) -> Float {
        Float::with_val(bits, 10).pow(-digits)
    }

    #[test]
    fn log_endpoint_singularity() {
        let bits = bits_for_digits(50);
        let tol = tol_digits(bits, 50);
        let f = |x: &Float| vec![-Float::with_val(bits, x.clone().ln())];
        let got = integrate_01(&f, 1, bits, &tol).unwrap();
        let err: Float = (got[0].clone() - 1u32).abs();
        assert!(err < tol_digits(bits, 48), "int ln(1/x) = {}", got[0]);
    }

    #[test]
    fn inverse_sqrt_singularity() {
        let bits = bits_for_digits(50);
        let tol = tol_digits(bits, 50);
        let f = |x: &Float| vec![Float::with_val(bits, x.clone().sqrt().recip())];
        let got = integrate_01(&f, 1, bits, &tol).unwrap();
        let err: Float = (got[0].clone() - 2u32).abs();
        assert!(err < tol_digits(bits, 48), "int x^-1/2 = {}", got[0]);
    }

    #[test]
    fn exponential_tail() {
        let bits = bits_for_digits(50);
        let tol = tol_digits(bits, 50);
        let f = |x: &Float| vec![(-x.clone()).exp()];
        let got = integrate_0_inf(&f, 1, bits, &tol, 1.0).unwrap();
        let err: Float = (got[0].clone() - 1u32).abs();
        assert!(err < tol_digits(bits, 47), "int e^-x = {}", got[0]);
    }

    #[test]
    fn bessel_k0_first_moments() {
        // int_0^oo K0(x) x^(s-1) dx = 2^(s-2) Gamma(s/2)^2: equals pi/2 at
        // s=1 and 1 at s=2. Both components ride one shared K0 evaluation.
        let bits = bits_for_digits(40);
        let tol = tol_digits(bits, 40);
        let f = |x: &Float| {
            let k0 = bessel_k0(x, bits);
            vec![k0.clone(), k0 * x]
        };
        let got = integrate_0_inf(&f, 2, bits, &tol, 0.9).unwrap();
        let e0: Float = (got[0].clone() - pi(bits) / 2u32).abs();
        let e1: Float = (got[1].clone() - 1u32).abs();
        assert!(e0 < tol_digits(bits, 37), "K0 moment s=1: {}", got[0]);
        assert!(e1 < tol_digits(bits, 37), "K0 moment s=2: {}", got[1]);
    }

    #[test]
    fn precision_scales_to_eighty_digits() {
        let bits = bits_for_digits(80);
        let tol = tol_digits(bits, 80);
        let f = |x: &Float| vec![(-x.clone().square()).exp()];
        let got = integrate_0_inf(&f, 1, bits, &tol, 1.0).unwrap();
        let want: Float = pi(bits).sqrt() / 2u32;
        let err: Float = (got[0].clone() - want).abs();
        assert!(err < tol_digits(bits, 77), "gaussian = {}", got[0]);
    }

    #[test]
    fn known_bessel_cube_moment() {
        // Frozen from an independent arbitrary-precision evaluation of
        // int_0^oo K0^3(x) x dx.
        let bits = bits_for_digits(45);
        let tol = tol_digits(bits, 45);
        let f = |x: &Float| {
            let k0 = bessel_k0(x, bits);
            vec![k0.clone().square() * k0 * x]
        };
        let got = integrate_0_inf(&f, 1, bits, &tol, 2.9).unwrap();
        let want = parse_real(
            "0.58597680967236472265039057221806926727385075240896406516658",
            bits,
        );
        let err: Float = (got[0].clone() - want).abs();
        assert!(err < tol_digits(bits, 42), "K0^3 moment: {}", got[0]);
    }
}
