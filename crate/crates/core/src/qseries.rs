//! Exact arithmetic on truncated q-expansions with fractional leading
//! exponents (multiples of 1/24), plus the series builders used throughout:
//! eta functions, theta and Lambert-type sums, and numerical evaluation at a
//! nome.
//!
//! Coefficients are exact rationals. A series is known modulo
//! q^(offset24/24 + K) where K = coeffs.len(); trailing zeros are kept so the
//! truncation order stays explicit.

use crate::error::{Error, Result};
use crate::num::BigComplex;
use rug::ops::Pow;
use rug::{Complete, Float, Integer, Rational};

/// Truncated formal power series sum_k c_k q^(offset24/24 + k).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QSeries {
    /// Leading exponent in 24ths of q.
    pub offset24: i64,
    /// c_k = coefficient of q^(offset24/24 + k); length is the order K.
    pub coeffs: Vec<Rational>,
}

impl QSeries {
    pub fn new(offset24: i64, coeffs: Vec<Rational>) -> Self {
        QSeries { offset24, coeffs }
    }

    /// Truncation order K: the series is known modulo q^(offset24/24 + K).
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// The constant series c (exponent 0), known to order K.
    pub fn constant(c: Rational, k: usize) -> Self {
        let mut coeffs = vec![Rational::new(); k];
        if k > 0 {
            coeffs[0] = c;
        }
        QSeries {
            offset24: 0,
            coeffs,
        }
    }

    pub fn one(k: usize) -> Self {
        Self::constant(Rational::from(1), k)
    }

    /// The series q, known to order K.
    pub fn q(k: usize) -> Self {
        let mut coeffs = vec![Rational::new(); k];
        if k > 0 {
            coeffs[0] = Rational::from(1);
        }
        QSeries {
            offset24: 24,
            coeffs,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.cmp0() == std::cmp::Ordering::Equal)
    }

    /// Exponent of the lowest-order nonzero coefficient, in 24ths,
    /// or None for an (apparently) zero series.
    pub fn valuation24(&self) -> Option<i64> {
        self.coeffs
            .iter()
            .position(|c| c.cmp0() != std::cmp::Ordering::Equal)
            .map(|i| self.offset24 + 24 * i as i64)
    }

    /// Coefficient of q^(e24/24); zero below the leading exponent,
    /// None at or beyond the truncation order.
    pub fn coeff24(&self, e24: i64) -> Option<Rational> {
        let d = e24 - self.offset24;
        if d % 24 != 0 {
            return if e24 < self.offset24 + 24 * self.order() as i64 {
                Some(Rational::new())
            } else {
                None
            };
        }
        let k = d / 24;
        if k < 0 {
            Some(Rational::new())
        } else if (k as usize) < self.coeffs.len() {
            Some(self.coeffs[k as usize].clone())
        } else {
            None
        }
    }

    /// Coefficient of the integer power q^n (requires offset24 % 24 == 0
    /// series alignment; zero when n is below the offset).
    pub fn coeff_int(&self, n: i64) -> Option<Rational> {
        self.coeff24(24 * n)
    }

    /// Drop leading zero coefficients, raising offset24 accordingly.
    /// Keeps the truncation end fixed, so the order shrinks.
    pub fn normalized(mut self) -> Self {
        let lead = self
            .coeffs
            .iter()
            .position(|c| c.cmp0() != std::cmp::Ordering::Equal)
            .unwrap_or(0);
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.offset24 += 24 * lead as i64;
        }
        self
    }

    /// Truncate to at most K coefficients.
    pub fn truncated(mut self, k: usize) -> Self {
        self.coeffs.truncate(k);
        self
    }

    fn all_integer(&self) -> bool {
        self.coeffs.iter().all(|c| c.denom() == &1)
    }

    fn add_signed(&self, other: &QSeries, negate_other: bool) -> Result<QSeries> {
        if (self.offset24 - other.offset24).rem_euclid(24) != 0 {
            return Err(Error::ExponentMismatch(self.offset24, other.offset24));
        }
        let off = self.offset24.min(other.offset24);
        let end = (self.offset24 + 24 * self.order() as i64)
            .min(other.offset24 + 24 * other.order() as i64);
        let k = (((end - off) / 24).max(0)) as usize;
        let mut coeffs = vec![Rational::new(); k];
        let sa = ((self.offset24 - off) / 24) as usize;
        for (i, c) in self.coeffs.iter().enumerate() {
            let j = i + sa;
            if j < k {
                coeffs[j] += c;
            }
        }
        let sb = ((other.offset24 - off) / 24) as usize;
        for (i, c) in other.coeffs.iter().enumerate() {
            let j = i + sb;
            if j < k {
                if negate_other {
                    coeffs[j] -= c;
                } else {
                    coeffs[j] += c;
                }
            }
        }
        Ok(QSeries {
            offset24: off,
            coeffs,
        })
    }

    pub fn add(&self, other: &QSeries) -> Result<QSeries> {
        self.add_signed(other, false)
    }

    pub fn sub(&self, other: &QSeries) -> Result<QSeries> {
        self.add_signed(other, true)
    }

    pub fn neg(&self) -> QSeries {
        QSeries {
            offset24: self.offset24,
            coeffs: self.coeffs.iter().map(|c| (-c).complete()).collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> QSeries {
        QSeries {
            offset24: self.offset24,
            coeffs: self.coeffs.iter().map(|x| (x * c).complete()).collect(),
        }
    }

    pub fn mul(&self, other: &QSeries) -> QSeries {
        let k = self.order().min(other.order());
        let off = self.offset24 + other.offset24;
        if k == 0 {
            return QSeries {
                offset24: off,
                coeffs: vec![],
            };
        }
        if self.all_integer() && other.all_integer() {
            let a: Vec<Integer> = self.coeffs[..k.min(self.order())]
                .iter()
                .map(|c| c.numer().clone())
                .collect();
            let b: Vec<Integer> = other.coeffs[..k.min(other.order())]
                .iter()
                .map(|c| c.numer().clone())
                .collect();
            let mut out = vec![Integer::new(); k];
            // Sparse-aware schoolbook: eta factors are mostly zeros.
            for (i, ai) in a.iter().enumerate() {
                if ai.cmp0() == std::cmp::Ordering::Equal {
                    continue;
                }
                for (j, bj) in b.iter().enumerate().take(k - i) {
                    if bj.cmp0() == std::cmp::Ordering::Equal {
                        continue;
                    }
                    out[i + j] += (ai * bj).complete();
                }
            }
            QSeries {
                offset24: off,
                coeffs: out.into_iter().map(Rational::from).collect(),
            }
        } else {
            let mut out = vec![Rational::new(); k];
            for (i, ai) in self.coeffs.iter().enumerate().take(k) {
                if ai.cmp0() == std::cmp::Ordering::Equal {
                    continue;
                }
                for (j, bj) in other.coeffs.iter().enumerate().take(k - i) {
                    if bj.cmp0() == std::cmp::Ordering::Equal {
                        continue;
                    }
                    out[i + j] += (ai * bj).complete();
                }
            }
            QSeries {
                offset24: off,
                coeffs: out,
            }
        }
    }

    /// Division; the divisor's leading coefficient must be nonzero after
    /// normalization (its leading zeros are stripped first).
    pub fn div(&self, other: &QSeries) -> Result<QSeries> {
        let b = other.clone().normalized();
        if b.coeffs.is_empty() || b.coeffs[0].cmp0() == std::cmp::Ordering::Equal {
            return Err(Error::ZeroLeadingCoefficient);
        }
        let k = self.order().min(b.order());
        let off = self.offset24 - b.offset24;
        let mut out = vec![Rational::new(); k];
        let b0 = &b.coeffs[0];
        for n in 0..k {
            let mut acc = self.coeffs[n].clone();
            for j in 0..n {
                if out[j].cmp0() == std::cmp::Ordering::Equal {
                    continue;
                }
                let idx = n - j;
                if idx < b.coeffs.len() && b.coeffs[idx].cmp0() != std::cmp::Ordering::Equal
                {
                    acc -= (&out[j] * &b.coeffs[idx]).complete();
                }
            }
            out[n] = acc / b0;
        }
        Ok(QSeries {
            offset24: off,
            coeffs: out,
        })
    }

    /// Integer power (negative exponents via division into 1).
    pub fn pow(&self, e: i64) -> Result<QSeries> {
        if e == 0 {
            return Ok(QSeries::one(self.order()));
        }
        let base = if e > 0 {
            self.clone()
        } else {
            QSeries::one(self.order()).div(self)?
        };
        let mut acc = base.clone();
        for _ in 1..e.unsigned_abs() {
            acc = acc.mul(&base);
        }
        Ok(acc)
    }

    /// The operator q d/dq: multiplies c_k by (offset24/24 + k).
    pub fn qdq(&self) -> QSeries {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let e = Rational::from((self.offset24 + 24 * k as i64, 24));
                c * e
            })
            .collect();
        QSeries {
            offset24: self.offset24,
            coeffs,
        }
    }

    /// Substitute q -> q^d (dilation by the positive integer d).
    pub fn dilate(&self, d: u64) -> QSeries {
        assert!(d >= 1);
        let d = d as usize;
        let k = self.order() * d;
        let mut coeffs = vec![Rational::new(); k];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i * d] = c.clone();
        }
        QSeries {
            offset24: self.offset24 * d as i64,
            coeffs,
        }
    }
}

/// Dedekind eta of q^d to order K: offset 24ths = d, pentagonal sparsity
/// eta(q) = q^(1/24) sum_{m in Z} (-1)^m q^(m(3m-1)/2).
pub fn eta_series(d: u64, k: usize) -> QSeries {
    assert!(d >= 1 && k >= 1);
    let mut coeffs = vec![Rational::new(); k];
    let mut m: i64 = 0;
    loop {
        let mut hit = false;
        for mm in [m, -m] {
            let pent = mm * (3 * mm - 1) / 2;
            let idx = (d as i64) * pent;
            if pent >= 0 && (idx as u128) < k as u128 {
                hit = true;
                let sign = if mm.rem_euclid(2) == 0 { 1 } else { -1 };
                coeffs[idx as usize] = Rational::from(sign);
            }
            if mm == 0 {
                break;
            }
        }
        if !hit && m > 0 {
            break;
        }
        m += 1;
    }
    QSeries {
        offset24: d as i64,
        coeffs,
    }
}

/// theta_{a,b} = sum_{n in Z} (-q^a)^((n^2+n)/2) (-q^b)^((n^2-n)/2),
/// truncated so every dropped term has exponent >= K.
pub fn theta_series(a: u64, b: u64, k: usize) -> QSeries {
    assert!(a >= 1 && b >= 1 && k >= 1);
    let mut coeffs = vec![Rational::new(); k];
    let mut n: i64 = 0;
    loop {
        let mut any = false;
        for nn in [n, -n] {
            let e = (a as i64) * (nn * nn + nn) / 2 + (b as i64) * (nn * nn - nn) / 2;
            if e >= 0 && (e as usize) < k {
                any = true;
                let sign = if nn.rem_euclid(2) == 0 { 1 } else { -1 };
                coeffs[e as usize] += Rational::from(sign);
            }
            if nn == 0 {
                break;
            }
        }
        if !any && n > 0 {
            break;
        }
        n += 1;
    }
    QSeries {
        offset24: 0,
        coeffs,
    }
}

/// Lambert-type sum sum_{n>0} n^p (sum_j s_j q^(a_j n)) / (1 - q^(m n)),
/// with `terms` the list of (shift a_j, sign/weight s_j).
pub fn lambert_series(m: u64, terms: &[(u64, i64)], p: u32, k: usize) -> QSeries {
    let mut coeffs = vec![Rational::new(); k];
    if terms.is_empty() {
        return QSeries {
            offset24: 0,
            coeffs,
        };
    }
    for n in 1..k as u64 {
        let np = Integer::from(n).pow(p);
        for &(a, s) in terms {
            let mut e = a * n;
            while (e as usize) < k {
                coeffs[e as usize] += Rational::from((&np * s).complete());
                e += m * n;
            }
        }
    }
    QSeries {
        offset24: 0,
        coeffs,
    }
}

/// Outcome of a numerical series evaluation.
pub struct EvalOutcome {
    pub value: BigComplex,
    /// Geometric estimate of the dropped tail: C |q0|^(offset/24 + K) / (1-|q0|)
    /// with C the largest magnitude among the last few kept coefficients.
    pub error_estimate: Float,
}

fn rational_to_float(c: &Rational, bits: u32) -> Float {
    Float::with_val(bits, c)
}

/// Evaluate at a complex nome q0, |q0| < 1, including the fractional
/// prefactor q0^(offset24/24) on the principal branch.
pub fn eval_series(s: &QSeries, q0: &BigComplex, tol: Option<&Float>) -> Result<EvalOutcome> {
    let bits = q0.prec();
    let absq = q0.abs();
    if absq >= 1 {
        return Err(Error::Domain(format!("|q0| = {absq} >= 1")));
    }
    let k = s.order();
    // Horner over the integer-step part.
    let mut acc = BigComplex::zero(bits);
    for c in s.coeffs.iter().rev() {
        acc = acc.mul(q0);
        if c.cmp0() != std::cmp::Ordering::Equal {
            acc.re += rational_to_float(c, bits);
        }
    }
    // Fractional prefactor q0^(offset24/24), principal branch. For real
    // positive q0 this is the real root; for negative real q0 with offset
    // divisible by 24 it is an exact integer power.
    let prefactor = if s.offset24 == 0 {
        BigComplex::one(bits)
    } else if s.offset24 % 24 == 0 {
        let e = s.offset24 / 24;
        let p = q0.powi(e.unsigned_abs() as u32);
        if e < 0 {
            p.recip()
        } else {
            p
        }
    } else {
        let ex = Float::with_val(bits, s.offset24) / 24u32;
        q0.ln().mul_real(&ex).exp()
    };
    let value = acc.mul(&prefactor);

    let mut cmax = Float::with_val(bits, 1);
    for c in s.coeffs.iter().rev().take(8) {
        let m = rational_to_float(c, bits).abs();
        if m > cmax {
            cmax = m;
        }
    }
    let tail_pow = Float::with_val(bits, s.offset24) / 24u32 + k as u64;
    let err: Float = cmax * absq.clone().pow(&tail_pow) / (Float::with_val(bits, 1) - &absq);
    if let Some(t) = tol {
        if err > *t {
            // Conservative required order from the geometric model.
            let need = (Float::with_val(53, t).ln() / Float::with_val(53, &absq).ln())
                .to_f64()
                .ceil() as usize;
            return Err(Error::OrderTooSmall {
                needed: need.max(k + 1),
                have: k,
            });
        }
    }
    Ok(EvalOutcome {
        value,
        error_estimate: err,
    })
}

/// Real-nome fast path. For q0 < 0 the fractional prefactor must be an
/// integer power (offset24 divisible by 24), else fall back to eval_series.
pub fn eval_series_real(s: &QSeries, q0: &Float) -> Result<Float> {
    let bits = q0.prec();
    let absq = q0.clone().abs();
    if absq >= 1 {
        return Err(Error::Domain(format!("|q0| = {absq} >= 1")));
    }
    if q0.is_sign_negative() && s.offset24 % 24 != 0 {
        return Err(Error::Domain(
            "negative nome with fractional leading exponent".into(),
        ));
    }
    let mut acc = Float::with_val(bits, 0);
    for c in s.coeffs.iter().rev() {
        acc *= q0;
        if c.cmp0() != std::cmp::Ordering::Equal {
            acc += rational_to_float(c, bits);
        }
    }
    let pre = if s.offset24 % 24 == 0 {
        let e = s.offset24 / 24;
        q0.clone().pow(e as i32)
    } else {
        let ex = Float::with_val(bits, s.offset24) / 24u32;
        q0.clone().pow(&ex)
    };
    Ok(acc * pre)
}

/// The psi builder psi_n = eta(2n)^2 / eta(n).
pub fn psi_series(n: u64, k: usize) -> Result<QSeries> {
    eta_series(2 * n, k).pow(2)?.div(&eta_series(n, k))
}

/// The phi builder phi_n = eta(2n)^5 / (eta(n)^2 eta(4n)^2).
pub fn phi_series(n: u64, k: usize) -> Result<QSeries> {
    eta_series(2 * n, k)
        .pow(5)?
        .div(&eta_series(n, k).pow(2)?)?
        .div(&eta_series(4 * n, k).pow(2)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| Rational::from(x)).collect()
    }

    #[test]
    fn eta1_first_coefficients() {
        // Direct product expansion of prod (1 - q^k).
        let e = eta_series(1, 8);
        assert_eq!(e.offset24, 1);
        assert_eq!(e.coeffs, ints(&[1, -1, -1, 0, 0, 1, 0, 1]));
    }

    #[test]
    fn eta_substitution_law() {
        // eta_series(d,K) = eta_series(1, ceil(K/d)) with q -> q^d, truncated.
        for d in [2u64, 3, 6, 7] {
            let k = 40usize;
            let direct = eta_series(d, k);
            let sub = eta_series(1, k.div_ceil(d as usize)).dilate(d).truncated(k);
            assert_eq!(direct.offset24, sub.offset24);
            assert_eq!(direct.coeffs[..k.min(sub.order())], sub.coeffs[..]);
        }
    }

    #[test]
    fn pentagonal_sparsity() {
        let e = eta_series(1, 500);
        for (k, c) in e.coeffs.iter().enumerate() {
            let v = 24 * k as u64 + 1;
            let r = (v as f64).sqrt().round() as u64;
            let square = r * r == v;
            if c.cmp0() != std::cmp::Ordering::Equal {
                assert!(square, "nonzero coefficient at non-pentagonal index {k}");
            } else {
                assert!(!square, "zero coefficient at pentagonal index {k}");
            }
        }
    }

    #[test]
    fn hauptmodul_level6() {
        // eta2 eta6^5 / (eta1^5 eta3) = q + 5q^2 + 19q^3 + 61q^4 + 174q^5 + ...
        let k = 12;
        let h = eta_series(2, k)
            .mul(&eta_series(6, k).pow(5).unwrap())
            .div(&eta_series(1, k).pow(5).unwrap())
            .unwrap()
            .div(&eta_series(3, k))
            .unwrap();
        assert_eq!(h.offset24, 24);
        assert_eq!(h.coeffs[..5], ints(&[1, 5, 19, 61, 174])[..]);
    }

    #[test]
    fn product_of_level6_etas() {
        // (eta1 eta2 eta3 eta6)^2 = q - 2q^2 - 3q^3 + 4q^4 + 6q^5 ...
        let k = 40;
        let f = eta_series(1, k)
            .mul(&eta_series(2, k))
            .mul(&eta_series(3, k))
            .mul(&eta_series(6, k))
            .pow(2)
            .unwrap();
        assert_eq!(f.offset24, 24);
        assert_eq!(f.coeffs[..5], ints(&[1, -2, -3, 4, 6])[..]);
        // Coefficient multiplicativity spot check: A(6) = A(2) A(3).
        let a2 = &f.coeffs[1];
        let a3 = &f.coeffs[2];
        let a6 = &f.coeffs[5];
        assert_eq!((a2 * a3).complete(), *a6);
    }

    #[test]
    fn w_t_relation_level6() {
        // -64 (eta2 eta6/(eta1 eta3))^6 = 10 - w^2 - 9/w^2,
        // w = 3 eta2^2 eta3^4 / (eta1^4 eta6^2).
        let k = 30;
        let lhs = eta_series(2, k)
            .mul(&eta_series(6, k))
            .div(&eta_series(1, k))
            .unwrap()
            .div(&eta_series(3, k))
            .unwrap()
            .pow(6)
            .unwrap()
            .scale(&Rational::from(-64));
        let w = eta_series(2, k)
            .pow(2)
            .unwrap()
            .mul(&eta_series(3, k).pow(4).unwrap())
            .div(&eta_series(1, k).pow(4).unwrap())
            .unwrap()
            .div(&eta_series(6, k).pow(2).unwrap())
            .unwrap()
            .scale(&Rational::from(3));
        let w2 = w.pow(2).unwrap();
        let rhs = QSeries::constant(Rational::from(10), k)
            .sub(&w2)
            .unwrap()
            .sub(&w2.pow(-1).unwrap().scale(&Rational::from(9)))
            .unwrap();
        let diff = lhs.sub(&rhs).unwrap();
        assert!(diff.is_zero(), "difference: {:?}", diff.valuation24());
    }

    #[test]
    fn theta_basics_and_f49() {
        let t = theta_series(3, 5, 30);
        assert_eq!(t.coeffs[0], Rational::from(1));
        // Truncation consistency.
        let t2 = theta_series(3, 5, 60);
        assert_eq!(t.coeffs[..], t2.coeffs[..30]);

        // f49 = theta_{7,14}^3 (q theta_{21,28} + q^2 theta_{14,35} - q^4 theta_{7,42})
        //     = q + q^2 - q^4 - 3q^8 - 3q^9 + 4q^11 + ...
        let k = 12;
        let inner = QSeries::q(k)
            .mul(&theta_series(21, 28, k))
            .add(&QSeries::q(k).pow(2).unwrap().mul(&theta_series(14, 35, k)))
            .unwrap()
            .sub(&QSeries::q(k).pow(4).unwrap().mul(&theta_series(7, 42, k)))
            .unwrap();
        let f49 = theta_series(7, 14, k).pow(3).unwrap().mul(&inner);
        let want = ints(&[1, 1, 0, -1, 0, 0, 0, -3, -3, 0, 4]);
        assert_eq!(f49.offset24, 24);
        assert_eq!(f49.coeffs[..11], want[..]);
    }

    #[test]
    fn lambert_g_equals_eta_quotient() {
        // g = sum n^2 (q^n - q^5n)/(1 - q^6n) = eta2^5 eta3^4 eta6 / eta1^4.
        let k = 120;
        let g = lambert_series(6, &[(1, 1), (5, -1)], 2, k);
        let rhs = eta_series(2, k)
            .pow(5)
            .unwrap()
            .mul(&eta_series(3, k).pow(4).unwrap())
            .mul(&eta_series(6, k))
            .div(&eta_series(1, k).pow(4).unwrap())
            .unwrap();
        assert!(g.sub(&rhs).unwrap().is_zero());
    }

    #[test]
    fn lambert_h_equals_eta_combination() {
        // h = sum n^3 (q^n - 8q^3n + q^5n)/(1-q^6n)
        //   = eta2^16/eta1^8 - 9 eta6^16/eta3^8.
        let k = 120;
        let h = lambert_series(6, &[(1, 1), (3, -8), (5, 1)], 3, k);
        let rhs = eta_series(2, k)
            .pow(16)
            .unwrap()
            .div(&eta_series(1, k).pow(8).unwrap())
            .unwrap()
            .sub(
                &eta_series(6, k)
                    .pow(16)
                    .unwrap()
                    .div(&eta_series(3, k).pow(8).unwrap())
                    .unwrap()
                    .scale(&Rational::from(9)),
            )
            .unwrap();
        assert!(h.sub(&rhs).unwrap().is_zero());
    }

    #[test]
    fn lambert_empty_is_zero() {
        assert!(lambert_series(6, &[], 2, 10).is_zero());
    }

    #[test]
    fn eval_eta_at_exp_minus_2pi() {
        // eta(i) = Gamma(1/4) / (2 pi^(3/4)), via q0 = exp(-2 pi).
        use crate::num::{parse_real, pi};
        let bits = 220;
        let q0 = (-pi(bits) * 2u32).exp();
        let e = eta_series(1, 60);
        let got = eval_series_real(&e, &q0).unwrap();
        let want = parse_real(
            "0.768225422326056659002594179576180644517866914464805014676703",
            bits,
        );
        let diff: Float = (got - want).abs();
        assert!(diff < Float::with_val(64, 1e-55), "diff {diff}");
    }

    #[test]
    fn eval_complex_matches_real_path() {
        use crate::num::{parse_real, BigComplex};
        let bits = 200;
        let s = eta_series(1, 80).div(&eta_series(2, 80)).unwrap();
        let q0r = parse_real("0.11", bits);
        let real = eval_series_real(&s, &q0r).unwrap();
        let q0c = BigComplex::from_real(q0r);
        let cplx = eval_series(&s, &q0c, None).unwrap();
        let diff: Float = (cplx.value.re.clone() - &real).abs();
        assert!(diff < Float::with_val(64, 1e-50));
        assert!(cplx.value.im.clone().abs() < Float::with_val(64, 1e-50));
    }

    #[test]
    fn eval_rejects_big_nome_and_short_order() {
        use crate::num::real;
        let s = eta_series(1, 10);
        let q0 = BigComplex::from_real(real(64, 2));
        assert!(matches!(
            eval_series(&s, &q0, None),
            Err(Error::Domain(_))
        ));
        let q0 = BigComplex::from_real(real(64, 0.5));
        let tol = real(64, 1e-30);
        assert!(matches!(
            eval_series(&s, &q0, Some(&tol)),
            Err(Error::OrderTooSmall { .. })
        ));
    }

    #[test]
    fn qdq_and_dilate() {
        // q d/dq on eta1: coefficient k picks up (1 + 24k)/24.
        let e = eta_series(1, 6).qdq();
        assert_eq!(e.coeffs[0], Rational::from((1, 24)));
        assert_eq!(e.coeffs[1], Rational::from((-25, 24)));
        // dilation consistency with exponents
        let s = QSeries::q(4).dilate(3);
        assert_eq!(s.offset24, 72);
    }

    #[test]
    fn division_errors_and_exponent_mismatch() {
        let z = QSeries::constant(Rational::new(), 5);
        assert!(matches!(
            QSeries::one(5).div(&z),
            Err(Error::ZeroLeadingCoefficient)
        ));
        let a = eta_series(1, 5); // offset 1/24
        let b = eta_series(2, 5); // offset 2/24
        assert!(matches!(a.add(&b), Err(Error::ExponentMismatch(_, _))));
        // but eta1^24 and q align fine
        assert!(eta_series(1, 5).pow(24).unwrap().add(&QSeries::q(5)).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn inverse_round_trip(exps in proptest::collection::vec(-3i64..=3, 4)) {
            // a * (1/a) = 1 + O(q^K) for eta quotients on level 6.
            let k = 25;
            let divisors = [1u64, 2, 3, 6];
            let mut a = QSeries::one(k);
            for (d, e) in divisors.iter().zip(exps.iter()) {
                a = a.mul(&eta_series(*d, k).pow(*e).unwrap());
            }
            let inv = QSeries::one(k).div(&a).unwrap();
            let prod = a.mul(&inv);
            let diff = prod.sub(&QSeries::one(k)).unwrap();
            prop_assert!(diff.is_zero());
        }

        #[test]
        fn mul_commutes_and_associates(
            a in proptest::collection::vec(-9i64..=9, 6),
            b in proptest::collection::vec(-9i64..=9, 6),
            c in proptest::collection::vec(-9i64..=9, 6),
        ) {
            let qa = QSeries::new(0, a.iter().map(|&x| Rational::from(x)).collect());
            let qb = QSeries::new(24, b.iter().map(|&x| Rational::from(x)).collect());
            let qc = QSeries::new(48, c.iter().map(|&x| Rational::from(x)).collect());
            prop_assert_eq!(qa.mul(&qb), qb.mul(&qa));
            prop_assert_eq!(qa.mul(&qb).mul(&qc), qa.mul(&qb.mul(&qc)));
        }
    }
}
