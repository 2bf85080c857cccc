//! Eta quotients as symbolic objects: expansion to QSeries, direct numerical
//! evaluation by the defining product, cusp orders on Gamma_0(N) (Ligozat's
//! formula), and budget-limited enumeration of weight-0 quotients counted by
//! the tally generating functions.

use crate::arith::{divisors, euler_phi, gcd};
use crate::error::{Error, Result};
use crate::num::BigComplex;
use crate::qseries::{eta_series, QSeries};
use rug::ops::Pow;
use rug::{Float, Rational};
use std::collections::BTreeMap;

/// Symbolic product prod_d eta(d z)^(r_d) with nonzero integer exponents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EtaQuotient {
    pub exponents: BTreeMap<u64, i64>,
}

impl EtaQuotient {
    pub fn new(pairs: &[(u64, i64)]) -> Self {
        let mut exponents = BTreeMap::new();
        for &(d, r) in pairs {
            if r != 0 {
                *exponents.entry(d).or_insert(0) += r;
            }
        }
        exponents.retain(|_, r| *r != 0);
        EtaQuotient { exponents }
    }

    pub fn unit() -> Self {
        EtaQuotient {
            exponents: BTreeMap::new(),
        }
    }

    /// Twice the weight: sum of exponents.
    pub fn weight2(&self) -> i64 {
        self.exponents.values().sum()
    }

    /// Leading exponent in 24ths: sum d * r_d.
    pub fn offset24(&self) -> i64 {
        self.exponents.iter().map(|(&d, &r)| d as i64 * r).sum()
    }

    /// q-expansion to order K (in integer steps above the leading exponent).
    pub fn expansion(&self, k: usize) -> Result<QSeries> {
        let mut num = QSeries::one(k);
        let mut den = QSeries::one(k);
        for (&d, &r) in &self.exponents {
            let e = eta_series(d, k);
            if r > 0 {
                num = num.mul(&e.pow(r)?);
            } else {
                den = den.mul(&e.pow(-r)?);
            }
        }
        num.div(&den)
    }

    /// Order of vanishing at the cusp 1/c of Gamma_0(N), for c | N, in the
    /// local parameter (Ligozat):
    /// ord_c = N / (24 gcd(c, N/c) c) * sum_d gcd(c,d)^2 r_d / d.
    pub fn cusp_order(&self, level: u64, c: u64) -> Result<Rational> {
        if level % c != 0 {
            return Err(Error::Domain(format!("{c} does not divide level {level}")));
        }
        for &d in self.exponents.keys() {
            if level % d != 0 {
                return Err(Error::Domain(format!(
                    "divisor {d} does not divide level {level}"
                )));
            }
        }
        let mut s = Rational::new();
        for (&d, &r) in &self.exponents {
            let g = gcd(c, d);
            s += Rational::from((g as i64 * g as i64 * r, d));
        }
        s *= Rational::from((level, 24 * gcd(c, level / c) * c));
        Ok(s)
    }

    /// Orders at all cusp classes (one representative divisor per class).
    pub fn cusp_orders(&self, level: u64) -> Result<BTreeMap<u64, Rational>> {
        divisors(level)
            .into_iter()
            .map(|c| self.cusp_order(level, c).map(|o| (c, o)))
            .collect()
    }

    /// Ligozat modularity conditions for a modular function (weight 0,
    /// trivial character) on Gamma_0(N).
    pub fn is_modular_function_on(&self, level: u64) -> bool {
        if self.weight2() != 0 {
            return false;
        }
        if self.exponents.keys().any(|&d| level % d != 0) {
            return false;
        }
        let s1: i64 = self.offset24();
        let s2: i64 = self
            .exponents
            .iter()
            .map(|(&d, &r)| (level / d) as i64 * r)
            .sum();
        if s1.rem_euclid(24) != 0 || s2.rem_euclid(24) != 0 {
            return false;
        }
        // prod d^(r_d) must be a perfect rational square.
        let mut sq = Rational::from(1);
        for (&d, &r) in &self.exponents {
            sq *= Rational::from((d, 1)).pow(r as i32);
        }
        sq.numer().is_perfect_square() && sq.denom().is_perfect_square()
    }

    /// Direct numerical evaluation of eta(q0^d) factors by the defining
    /// product q^(d/24) prod (1 - q^(dk)); independent of series expansion.
    pub fn eval_product(&self, q0: &BigComplex) -> Result<BigComplex> {
        let bits = q0.prec();
        if q0.abs() >= 1 {
            return Err(Error::Domain("|q0| >= 1".into()));
        }
        let mut out = BigComplex::one(bits);
        for (&d, &r) in &self.exponents {
            let e = eta_product_complex(q0, d);
            let p = e.powi(r.unsigned_abs() as u32);
            out = if r < 0 { out.div(&p) } else { out.mul(&p) };
        }
        Ok(out)
    }
}

/// eta(q^d) by the defining product, complex nome, principal branch for the
/// fractional power q^(d/24).
pub fn eta_product_complex(q0: &BigComplex, d: u64) -> BigComplex {
    let bits = q0.prec();
    let qd = q0.powi(d as u32);
    let mut prod = BigComplex::one(bits);
    let mut qk = qd.clone();
    let one = BigComplex::one(bits);
    loop {
        let factor = one.sub(&qk);
        prod = prod.mul(&factor);
        qk = qk.mul(&qd);
        if qk.abs().get_exp().map_or(true, |e| e < -(bits as i32) - 8) {
            break;
        }
    }
    let ex = Float::with_val(bits, d) / 24u32;
    let pre = q0.ln().mul_real(&ex).exp();
    prod.mul(&pre)
}

/// Count and list weight-0 eta quotients on Gamma_0(N), holomorphic at every
/// cusp except a pole of order <= m at infinity, with |r_d| <= 24.
///
/// The search is a DFS over divisor exponents. Each cusp order is a linear
/// form in the exponents; every form is scaled to integers, and nodes are
/// pruned when the partial value plus the best-possible remaining contribution
/// cannot reach the form's admissible interval. `node_budget` bounds the
/// explored nodes.
pub fn enumerate_quotients(level: u64, m: i64, node_budget: u64) -> Result<Vec<EtaQuotient>> {
    const BOUND: i64 = 24;
    // Largest divisors first: the pole at infinity is controlled mostly by
    // the high divisors, so deciding them early prunes harder.
    let mut ds = divisors(level);
    ds.reverse();
    let nd = ds.len();

    // For each cusp c: integer-scaled form a[d], bounds [lo, hi], and suffix
    // slack s[i] = BOUND * sum_{j >= i} |a[j]|.
    struct Form {
        a: Vec<i64>,
        lo: i64,
        hi: i64,
        slack: Vec<i64>,
    }
    let mut forms: Vec<Form> = Vec::new();
    for &c in &divisors(level) {
        let phi = euler_phi(gcd(c, level / c)) as i64;
        let pref = Rational::from((level, 24 * gcd(c, level / c) * c));
        let row: Vec<Rational> = ds
            .iter()
            .map(|&d| {
                let g = gcd(c, d);
                Rational::from((g * g, d)) * &pref
            })
            .collect();
        // Bounds: 0 <= ord_c for c != N; -m <= ord_N <= 0. The valence
        // formula (degree of the divisor is zero) caps ord_c <= m / phi_c,
        // which supplies the upper bound used for two-sided pruning.
        let (lo_r, hi_r) = if c == level {
            (Rational::from(-m), Rational::from(0))
        } else {
            (Rational::from(0), Rational::from((m, phi)))
        };
        let mut scale = rug::Integer::from(1);
        for x in row.iter().chain([&lo_r, &hi_r]) {
            scale.lcm_mut(x.denom());
        }
        let to_int = |x: &Rational| -> i64 {
            let v = x * Rational::from(&scale);
            debug_assert_eq!(v.denom(), &1);
            v.numer().to_i64().expect("scaled form fits i64")
        };
        let a: Vec<i64> = row.iter().map(to_int).collect();
        let mut slack = vec![0i64; nd + 1];
        for i in (0..nd).rev() {
            slack[i] = slack[i + 1] + BOUND * a[i].abs();
        }
        forms.push(Form {
            lo: to_int(&lo_r),
            hi: to_int(&hi_r),
            a,
            slack,
        });
    }

    struct Dfs<'a> {
        ds: &'a [u64],
        forms: &'a [Form],
        level: u64,
        nodes: u64,
        budget: u64,
        out: Vec<EtaQuotient>,
    }
    impl Dfs<'_> {
        fn go(&mut self, idx: usize, r: &mut Vec<i64>, partial: &[i64], wsum: i64) -> Result<()> {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(Error::SearchBudget(format!(
                    "enumeration at level {} exceeded {} nodes",
                    self.level, self.budget
                )));
            }
            let nd = self.ds.len();
            if idx == nd {
                if wsum != 0 {
                    return Ok(());
                }
                let pairs: Vec<(u64, i64)> =
                    self.ds.iter().zip(r.iter()).map(|(&d, &e)| (d, e)).collect();
                let eq = EtaQuotient::new(&pairs);
                if eq.is_modular_function_on(self.level) {
                    self.out.push(eq);
                }
                return Ok(());
            }
            let rem = nd - idx - 1;
            let mut upd = vec![0i64; self.forms.len()];
            'values: for v in -BOUND..=BOUND {
                let w = wsum + v;
                if w.abs() > BOUND * rem as i64 {
                    continue;
                }
                for (fi, f) in self.forms.iter().enumerate() {
                    let val = partial[fi] + f.a[idx] * v;
                    let s = f.slack[idx + 1];
                    if val + s < f.lo || val - s > f.hi {
                        continue 'values;
                    }
                    upd[fi] = val;
                }
                r.push(v);
                self.go(idx + 1, r, &upd, w)?;
                r.pop();
            }
            Ok(())
        }
    }

    let mut dfs = Dfs {
        ds: &ds,
        forms: &forms,
        level,
        nodes: 0,
        budget: node_budget,
        out: Vec::new(),
    };
    let partial = vec![0i64; forms.len()];
    dfs.go(0, &mut Vec::with_capacity(nd), &partial, 0)?;
    // Deterministic presentation order regardless of search order.
    dfs.out.sort_by(|a, b| {
        let ka: Vec<(u64, i64)> = a.exponents.iter().map(|(&d, &r)| (d, r)).collect();
        let kb: Vec<(u64, i64)> = b.exponents.iter().map(|(&d, &r)| (d, r)).collect();
        ka.cmp(&kb)
    });
    Ok(dfs.out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{pi, real};

    #[test]
    fn expansion_matches_factorwise_build() {
        // Round trip: single-pass expansion equals product of factor powers.
        let eq = EtaQuotient::new(&[(2, 1), (6, 5), (1, -5), (3, -1)]);
        let k = 60;
        let a = eq.expansion(k).unwrap();
        let b = eta_series(2, k)
            .mul(&eta_series(6, k).pow(5).unwrap())
            .div(&eta_series(1, k).pow(5).unwrap())
            .unwrap()
            .div(&eta_series(3, k))
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(eq.offset24(), 24);
        assert_eq!(eq.weight2(), 0);
    }

    #[test]
    fn cusp_orders_level6_hauptmodul() {
        let eq = EtaQuotient::new(&[(2, 1), (6, 5), (1, -5), (3, -1)]);
        let o = eq.cusp_orders(6).unwrap();
        assert_eq!(o[&1], Rational::from(-1)); // pole at cusp 0
        assert_eq!(o[&2], Rational::from(0));
        assert_eq!(o[&3], Rational::from(0));
        assert_eq!(o[&6], Rational::from(1)); // vanishes at infinity
    }

    #[test]
    fn cusp_orders_eta25_over_eta1() {
        // Derived via the order formula plus Fricke symmetry: the quotient
        // eta25/eta1 has a pole at 0 and a zero at infinity.
        let eq = EtaQuotient::new(&[(25, 1), (1, -1)]);
        let o = eq.cusp_orders(25).unwrap();
        assert_eq!(o[&1], Rational::from(-1));
        assert_eq!(o[&25], Rational::from(1));
        assert_eq!(o[&5], Rational::from(0));
    }

    #[test]
    fn unit_quotient_orders_vanish() {
        let u = EtaQuotient::unit();
        for (_, o) in u.cusp_orders(36).unwrap() {
            assert_eq!(o, Rational::from(0));
        }
        assert!(u.is_modular_function_on(36));
    }

    #[test]
    fn valence_degree_zero_for_weight0_quotients() {
        // Degree of the divisor of a modular function is zero:
        // sum over cusp classes of phi(gcd(c, N/c)) * ord_c = 0.
        for (level, pairs) in [
            (6u64, vec![(2i64, 1i64), (6, 5), (1, -5), (3, -1)]),
            (25, vec![(25, 1), (1, -1)]),
            (21, vec![(3, 1), (7, 3), (1, -3), (21, -1)]),
            (50, vec![(2, 1), (25, 2), (1, -2), (50, -1)]),
        ] {
            let pairs: Vec<(u64, i64)> = pairs.iter().map(|&(d, r)| (d as u64, r)).collect();
            let eq = EtaQuotient::new(&pairs);
            let mut total = Rational::new();
            for (c, o) in eq.cusp_orders(level).unwrap() {
                total += o * Rational::from(euler_phi(gcd(c, level / c)));
            }
            assert_eq!(total, Rational::from(0), "level {level}");
        }
    }

    #[test]
    fn divisor_outside_level_is_error() {
        let eq = EtaQuotient::new(&[(4, 1), (1, -1)]);
        assert!(matches!(eq.cusp_orders(6), Err(Error::Domain(_))));
    }

    #[test]
    fn eval_product_agrees_with_expansion() {
        let bits = 200;
        let eq = EtaQuotient::new(&[(2, 1), (6, 5), (1, -5), (3, -1)]);
        let q0 = BigComplex::from_real(real(bits, 0.04));
        let direct = eq.eval_product(&q0).unwrap();
        let series = eq.expansion(80).unwrap();
        let via_series = crate::qseries::eval_series(&series, &q0, None).unwrap().value;
        assert!(direct.sub(&via_series).abs() < Float::with_val(64, 1e-50));
    }

    #[test]
    fn eta_product_at_exp_minus_2pi() {
        let bits = 220;
        let q0 = BigComplex::from_real((-pi(bits) * 2u32).exp());
        let got = eta_product_complex(&q0, 1);
        let want = crate::num::parse_real(
            "0.768225422326056659002594179576180644517866914464805014676703",
            bits,
        );
        let diff: Float = (got.re.clone() - want).abs();
        assert!(diff < Float::with_val(64, 1e-55));
    }

    #[test]
    fn enumerate_level21_matches_tally_series() {
        // Independent oracle: coefficients of T21(x) = (1-x+x^2-x^3+2x^4)
        // / ((1-x)^2 (1-x^4)^2) computed separately: 1,1,2,2,6,8,12 for
        // m = 0..6. The count is cumulative in the pole order at infinity.
        let want = [1usize, 1, 2, 2, 6, 8, 12];
        for (m, &w) in want.iter().enumerate() {
            let list = enumerate_quotients(21, m as i64, 50_000_000).unwrap();
            assert_eq!(list.len(), w, "m = {m}");
        }
        // m = 0 yields exactly the unit quotient.
        let unit = enumerate_quotients(21, 0, 1_000_000).unwrap();
        assert_eq!(unit, vec![EtaQuotient::unit()]);
    }

    #[test]
    fn enumerate_other_levels_match_tally_series() {
        // Counts frozen from exact rational-function expansions of the tally
        // generating functions, computed by an independent implementation.
        // Level 36 is omitted: with nine divisors the search tree needs
        // hundreds of CPU seconds even at m = 0, so its counts are exercised
        // only through the tally generating function.
        let cases: [(u64, &[usize]); 3] = [
            (14, &[1, 1, 2, 4, 7, 9]),
            (15, &[1, 1, 2, 2, 6, 8, 12]),
            (32, &[1, 1, 4, 7, 18]),
        ];
        for (level, want) in cases {
            for (m, &w) in want.iter().enumerate() {
                let list = enumerate_quotients(level, m as i64, 2_000_000_000).unwrap();
                assert_eq!(list.len(), w, "level {level}, m = {m}");
            }
        }
    }

    #[test]
    fn enumerate_level27_overcounts_tally_from_order_three() {
        // Known discrepancy: the membership criterion (weight 0, holomorphic
        // at every cusp except a pole of order at most m at infinity) admits
        // one quotient more than the tally series 1,1,2,3,4,6 from m = 3 on.
        // The extra member at m = 3 is (eta_3/eta_27)^3, which is genuinely
        // modular on level 27, holomorphic at the finite cusps, and lies in
        // the span of the quotients counted at m <= 3, so whatever finer rule
        // the tally encodes is not recoverable from the counts alone. We
        // assert the actual behaviour and report the mismatch rather than
        // patch the criterion to fit.
        let tally_row = [1usize, 1, 2, 3, 4, 6];
        let enumerated = [1usize, 1, 2, 4, 5, 7];
        for m in 0..tally_row.len() {
            let list = enumerate_quotients(27, m as i64, 2_000_000_000).unwrap();
            assert_eq!(list.len(), enumerated[m], "m = {m}");
        }
        assert_eq!(tally_row[..3], enumerated[..3]);
        let extra = EtaQuotient::new(&[(3, 3), (27, -3)]);
        let at_order_3 = enumerate_quotients(27, 3, 2_000_000_000).unwrap();
        assert!(at_order_3.contains(&extra));
    }

    #[test]
    fn enumerate_budget_error() {
        assert!(matches!(
            enumerate_quotients(36, 4, 10),
            Err(Error::SearchBudget(_))
        ));
    }
}
