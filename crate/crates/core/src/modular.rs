//! Modular-function layer on top of the Rademacher and q-series kernels:
//! the genus of Gamma_0(N), cusp-form coefficient tables with dual-source
//! cross-validation, subtraction schemes that turn Rademacher rows into
//! integer series, identity and curve verification against the bundled
//! registry, eta-quotient tallies, and the Hauptmodul parity law.
//!
//! The central type is [`Workspace`]: it owns a registry, a working
//! precision and a truncation policy, caches every Rademacher row and
//! coefficient table it computes, and implements [`SeriesProvider`] so that
//! registry expressions can mix eta quotients with `R(N,M)` and `G(N,M)`
//! atoms transparently.
//!
//! Snapping discipline: raw Rademacher values carry an absolute truncation
//! uncertainty reported as `tail_estimate` (the c-sum converges too slowly
//! for fixed tolerances like 1e-10 to be meaningful at feasible cutoffs).
//! Every conversion to an exact integer therefore uses a margin derived
//! from the accumulated tail estimates of the values entering the linear
//! combination, capped well below 1/2. Anything outside the margin is a
//! hard `NotNearInteger` error, never a silent round.

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;
use rug::{Complete, Float, Integer, Rational};

use crate::arith::{divisors, euler_phi, factor, gcd, kronecker, squarefree_part};
use crate::curve::curve_an;
use crate::error::{Error, Result};
use crate::expr::{Bindings, SeriesProvider};
use crate::qseries::QSeries;
use crate::rademacher::{rademacher_sum, RademacherQuery, RademacherResult, TruncationPolicy};
use crate::registry::{CurveEntry, IdentityEntry, Registry, SchemeKind};

/// Genus of the modular curve X_0(N), from the classical index and
/// elliptic-point counts:
/// g = 1 + mu/12 - nu2/4 - nu3/3 - nuinf/2 with
/// mu = N prod (1 + 1/p), nu2 = prod (1 + (-4|p)) (0 when 4 | N),
/// nu3 = prod (1 + (-3|p)) (0 when 9 | N), nuinf = sum phi(gcd(d, N/d)).
pub fn genus(level: u64) -> Result<u32> {
    if level == 0 {
        return Err(Error::Domain("genus: level must be positive".into()));
    }
    let fac = factor(level);
    let mut mu: i64 = level as i64;
    for &(p, _) in &fac {
        mu = mu / p as i64 * (p as i64 + 1);
    }
    let nu2: i64 = if level % 4 == 0 {
        0
    } else {
        fac.iter()
            .map(|&(p, _)| 1 + kronecker(-4, p) as i64)
            .product()
    };
    let nu3: i64 = if level % 9 == 0 {
        0
    } else {
        fac.iter()
            .map(|&(p, _)| 1 + kronecker(-3, p) as i64)
            .product()
    };
    let nuinf: i64 = divisors(level)
        .iter()
        .map(|&d| euler_phi(gcd(d, level / d)) as i64)
        .sum();
    let twelve_g = 12 + mu - 3 * nu2 - 4 * nu3 - 6 * nuinf;
    if twelve_g < 0 || twelve_g % 12 != 0 {
        return Err(Error::Domain(format!(
            "genus formula gave non-integer 12g = {twelve_g} at level {level}"
        )));
    }
    Ok((twelve_g / 12) as u32)
}

/// Parity of the coefficients of the level-6 Hauptmodul: the n-th
/// coefficient is odd exactly when the square-free part of n divides 6.
pub fn hauptmodul_parity(n: u64) -> Result<bool> {
    if n == 0 {
        return Err(Error::Domain("hauptmodul_parity: n must be positive".into()));
    }
    Ok(6 % squarefree_part(n) == 0)
}

/// Coefficients 0..=m of the tally generating function T_N(x), by exact
/// long division of the numerator polynomial by prod (1 - x^k).
pub fn tally_row(registry: &Registry, level: u64, m: usize) -> Result<Vec<Integer>> {
    let entry = registry
        .tallies
        .get(&level)
        .ok_or_else(|| Error::Registry(format!("no tally generating function for level {level}")))?;
    let mut c = vec![Integer::from(0); m + 1];
    for (i, v) in entry.numerator.iter().enumerate() {
        if i <= m {
            c[i] = v.clone();
        }
    }
    // Dividing by (1 - x^k) is a running sum with stride k.
    for &k in &entry.den_factors {
        let k = k as usize;
        for i in k..=m {
            let prev = c[i - k].clone();
            c[i] += prev;
        }
    }
    Ok(c)
}

/// Number of eta quotients on Gamma_0(N) whose coefficients are determined
/// by Rademacher sums with index at most m: the coefficient of x^m in
/// T_N(x). At N = 36 the polynomial-interpolation closed form is evaluated
/// as well and any disagreement is an error.
pub fn tally(registry: &Registry, level: u64, m: usize) -> Result<Integer> {
    let row = tally_row(registry, level, m)?;
    let value = row[m].clone();
    if level == 36 {
        let closed = tally36_closed(m as u64)?;
        if closed != value {
            return Err(Error::VerificationFailed(format!(
                "tally(36, {m}): series gives {value}, closed form gives {closed}"
            )));
        }
    }
    Ok(value)
}

/// Closed form for the coefficient of x^M in T_36(x): 1 + c(M) with
/// c(M) = p(M) + q_r(M)/12 for M = r mod 12, where p is a fixed degree-8
/// polynomial and the q_r are at most quadratic.
pub fn tally36_closed(m: u64) -> Result<Integer> {
    let n = Rational::from(m);
    let lin = |a: u64| -> Rational { n.clone() + Rational::from(a) };
    let p: Rational = lin(1) * lin(3) * lin(5) * lin(7) * lin(9) * lin(11)
        * (lin(6).square() - Rational::from(7))
        / Rational::from(1_935_360)
        - Rational::from(1);
    let q2: Rational =
        (lin(6).square() * Rational::from(2) - Rational::from(5)) / Rational::from(512);
    let q3: Rational = lin(3) * lin(9) / Rational::from(9);
    let q4: Rational = q2.clone() + lin(4) * lin(8) / Rational::from(16);
    let q = match m % 12 {
        0 => q3.clone() + q4.clone() + Rational::from(5),
        1 | 5 | 7 | 11 => Rational::new(),
        2 | 10 => q2,
        3 | 9 => q3,
        4 | 8 => q4,
        6 => q2 + q3 + Rational::from(1),
        _ => unreachable!(),
    };
    let count = p + q / Rational::from(12) + Rational::from(1);
    if !count.is_integer() {
        return Err(Error::VerificationFailed(format!(
            "tally36 closed form non-integral at M = {m}: {count}"
        )));
    }
    Ok(count.numer().clone())
}

/// Outcome of an identity or curve check: `passed` with a human-readable
/// `detail` naming the first mismatching power on failure.
#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub name: String,
    pub order: usize,
    pub passed: bool,
    pub detail: String,
}

struct Caches {
    /// Raw Rademacher rows: (value, tail_estimate) for n = 1.. at (N, M).
    rows: HashMap<(u64, u64), Vec<(Float, Float)>>,
    /// Cusp-form coefficient tables a_0..a_len, a_0 = 0.
    forms: HashMap<String, Vec<Integer>>,
    /// Calibrated subtraction vectors, aligned with the scheme indices.
    kappas: HashMap<(u64, u64), Vec<Rational>>,
}

/// Evaluation context tying a registry to a working precision, a truncation
/// policy and shared caches. Cheap to query repeatedly: rows and tables are
/// computed once, in parallel, and reused.
pub struct Workspace {
    pub registry: Registry,
    pub prec_digits: u32,
    pub policy: TruncationPolicy,
    cache: Mutex<Caches>,
}

/// Snap margins never exceed this: a distance close to 1/2 can never
/// certify an integer.
const SNAP_CAP: f64 = 0.45;
/// Accumulated tail estimates are inflated by this factor before use as a
/// snap margin; the estimator tracks the real error within a small factor.
const SNAP_SLACK: f64 = 8.0;

impl Workspace {
    pub fn new(registry: Registry) -> Self {
        Self::with_precision(registry, 30)
    }

    pub fn with_precision(registry: Registry, prec_digits: u32) -> Self {
        Workspace {
            registry,
            prec_digits,
            policy: TruncationPolicy::default(),
            cache: Mutex::new(Caches {
                rows: HashMap::new(),
                forms: HashMap::new(),
                kappas: HashMap::new(),
            }),
        }
    }

    /// Single raw Rademacher evaluation at the workspace precision.
    pub fn raw_rademacher(&self, level: u64, m: u64, n: u64) -> Result<RademacherResult> {
        rademacher_sum(&RademacherQuery {
            level,
            m,
            n,
            prec_digits: self.prec_digits,
            policy: self.policy.clone(),
        })
    }

    /// Raw row (value, tail_estimate) for n = 1..=len, cached and extended
    /// on demand; fresh entries are computed in parallel.
    fn float_row(&self, level: u64, m: u64, len: usize) -> Result<Vec<(Float, Float)>> {
        let have = {
            let cache = self.cache.lock().unwrap();
            match cache.rows.get(&(level, m)) {
                Some(row) if row.len() >= len => return Ok(row[..len].to_vec()),
                Some(row) => row.len(),
                None => 0,
            }
        };
        let fresh: Vec<(Float, Float)> = ((have + 1)..=len)
            .into_par_iter()
            .map(|n| {
                let r = self.raw_rademacher(level, m, n as u64)?;
                Ok((r.value, r.tail_estimate))
            })
            .collect::<Result<_>>()?;
        let mut cache = self.cache.lock().unwrap();
        let row = cache.rows.entry((level, m)).or_default();
        if row.len() == have {
            row.extend(fresh);
        } else if row.len() < len {
            // Another thread extended the row meanwhile; recompute the gap
            // serially rather than splicing possibly misaligned segments.
            for n in (row.len() + 1)..=len {
                let r = self.raw_rademacher(level, m, n as u64)?;
                row.push((r.value, r.tail_estimate));
            }
        }
        Ok(row[..len].to_vec())
    }

    /// Cusp-form coefficients a_0..a_n_max (a_0 = 0) from the registry
    /// entry, cross-validating the eta expression against the curve
    /// L-series whenever both sources are present.
    pub fn cuspform_coeffs(&self, name: &str, n_max: usize) -> Result<Vec<Integer>> {
        {
            let cache = self.cache.lock().unwrap();
            if let Some(t) = cache.forms.get(name) {
                if t.len() > n_max {
                    return Ok(t[..=n_max].to_vec());
                }
            }
        }
        let entry = self.registry.form(name)?.clone();
        let from_expr: Option<Vec<Integer>> = match &entry.expr {
            Some(expr) => {
                let series = expr.eval(self, n_max + 2, &Bindings { x: None, y: None })?;
                let mut table = vec![Integer::from(0); n_max + 1];
                for (n, slot) in table.iter_mut().enumerate().skip(1) {
                    let c = series.coeff_int(n as i64).ok_or(Error::OrderTooSmall {
                        needed: n,
                        have: n.saturating_sub(1),
                    })?;
                    if !c.is_integer() {
                        return Err(Error::Domain(format!(
                            "form {name}: non-integer coefficient {c} at q^{n}"
                        )));
                    }
                    *slot = c.numer().clone();
                }
                Some(table)
            }
            None => None,
        };
        let from_curve: Option<Vec<Integer>> = match &entry.curve {
            Some(curve) => {
                // curve_an yields a_1..a_n; align to the a_0-based table.
                let mut a = vec![Integer::from(0)];
                a.extend(curve_an(curve, n_max.max(1))?);
                a.truncate(n_max + 1);
                a.resize(n_max + 1, Integer::from(0));
                Some(a)
            }
            None => None,
        };
        let table = match (from_expr, from_curve) {
            (Some(e), Some(c)) => {
                if e != c {
                    let n = e.iter().zip(&c).position(|(x, y)| x != y).unwrap_or(0);
                    return Err(Error::VerificationFailed(format!(
                        "form {name}: eta expansion gives a_{n} = {}, curve gives {}",
                        e[n], c[n]
                    )));
                }
                e
            }
            (Some(e), None) => e,
            (None, Some(c)) => c,
            (None, None) => {
                return Err(Error::Registry(format!("form {name} has no source")));
            }
        };
        let mut cache = self.cache.lock().unwrap();
        let slot = cache.forms.entry(name.to_string()).or_default();
        if slot.len() < table.len() {
            *slot = table.clone();
        }
        Ok(table)
    }

    /// Prime indices p < bound with vanishing coefficient C_{N,p} in the
    /// named form; by the integrality law these are exactly the primes
    /// whose raw Rademacher rows are already integral.
    pub fn vanishing_primes(&self, name: &str, bound: u64) -> Result<Vec<u64>> {
        let table = self.cuspform_coeffs(name, bound as usize)?;
        let mut out = Vec::new();
        for p in 2..bound {
            if factor(p).len() == 1 && factor(p)[0].1 == 1 && table[p as usize] == 0 {
                out.push(p);
            }
        }
        Ok(out)
    }

    /// Subtraction vector for G_{N,M} as (base index r, kappa_r) pairs with
    /// G_{N,M}(n) = R_{N,M}(n) - sum kappa_r R_{N,r}(n).
    fn scheme_kappa(&self, level: u64, m: u64) -> Result<Vec<(u64, Rational)>> {
        let scheme = self.registry.scheme(level)?.clone();
        match &scheme.kind {
            SchemeKind::Genus1 { form } => {
                let table = self.cuspform_coeffs(form, m as usize)?;
                Ok(vec![(1, Rational::from(&table[m as usize]))])
            }
            SchemeKind::Fifty { form } => {
                let d = &self.cuspform_coeffs(form, m as usize)?[m as usize];
                Ok(match m % 5 {
                    1 | 4 => vec![(1, Rational::from(d))],
                    2 | 3 => vec![(2, -Rational::from(d))],
                    _ => vec![],
                })
            }
            SchemeKind::SixtyFour { form } => {
                let r = (m - 1) % 8 + 1;
                let k = (m - r) / 8;
                let table = self.cuspform_coeffs(form, m as usize)?;
                let c = match r {
                    1 => Rational::from(&table[m as usize]),
                    2 => Rational::from(&table[(4 * k + 1) as usize]),
                    5 => -Rational::from(&table[m as usize]) / Rational::from(2),
                    _ => Rational::new(),
                };
                Ok(vec![(r, c)])
            }
            SchemeKind::Echelon { indices, sources } => {
                // kappa_r(M) is the q^M coefficient of the echelonized
                // source attached to pivot r; verify the normalization
                // p_s(r) = delta once per call (tables are cached).
                let max_idx = *indices.iter().max().unwrap() as usize;
                let need = (m as usize).max(max_idx);
                let mut kappa = Vec::new();
                for (i, (&r, src)) in indices.iter().zip(sources).enumerate() {
                    let table = self.cuspform_coeffs(src, need)?;
                    for (j, &rj) in indices.iter().enumerate() {
                        let expect = u64::from(i == j);
                        if table[rj as usize] != expect {
                            return Err(Error::Registry(format!(
                                "echelon source {src} not normalized: a_{rj} = {}",
                                table[rj as usize]
                            )));
                        }
                    }
                    kappa.push((r, Rational::from(&table[m as usize])));
                }
                Ok(kappa)
            }
            SchemeKind::Calibrated { indices } => {
                let kappa = self.calibrated_kappa(level, indices, m)?;
                Ok(indices.iter().copied().zip(kappa).collect())
            }
        }
    }

    /// Integer series G_{N,M}(n) for n = 1..=n_max: the raw row minus the
    /// scheme-weighted base rows, each value snapped with a margin built
    /// from the accumulated tail estimates.
    pub fn subtracted_row(&self, level: u64, m: u64, n_max: usize) -> Result<Vec<Integer>> {
        if m == 0 || n_max == 0 {
            return Err(Error::Domain("subtracted_row: M and n_max must be positive".into()));
        }
        let scheme = self.registry.scheme(level)?;
        if scheme.indices().contains(&m) {
            // Base rows vanish by construction of the subtraction scheme.
            return Ok(vec![Integer::from(0); n_max]);
        }
        let kappa = self.scheme_kappa(level, m)?;
        let target = self.float_row(level, m, n_max)?;
        let mut bases = Vec::new();
        for (r, c) in &kappa {
            if *c != 0 {
                bases.push((self.float_row(level, *r, n_max)?, c.clone()));
            }
        }
        let mut out = Vec::with_capacity(n_max);
        for n in 0..n_max {
            let (v, vt) = &target[n];
            let bits = v.prec();
            let mut value = v.clone();
            let mut tail = vt.clone();
            for (row, c) in &bases {
                let cf = Float::with_val(bits, c);
                let cf_abs = cf.clone().abs();
                value -= Float::with_val(bits, &row[n].0 * &cf);
                tail += Float::with_val(bits, &row[n].1 * &cf_abs);
            }
            out.push(snap_integer((n + 1) as u64, &value, &tail)?);
        }
        Ok(out)
    }

    /// Calibrated subtraction vector: an integer relation between the
    /// target row and the pivot rows, found by lattice reduction on a few
    /// leading coefficients and validated on extra rows.
    fn calibrated_kappa(&self, level: u64, indices: &[u64], m: u64) -> Result<Vec<Rational>> {
        {
            let cache = self.cache.lock().unwrap();
            if let Some(k) = cache.kappas.get(&(level, m)) {
                return Ok(k.clone());
            }
        }
        let g = indices.len();
        let fit_rows = g + 8;
        let total_rows = fit_rows + 4;
        let target = self.float_row(level, m, total_rows)?;
        let bases: Vec<Vec<(Float, Float)>> = indices
            .iter()
            .map(|&r| self.float_row(level, r, total_rows))
            .collect::<Result<_>>()?;

        for scale in [10_000u64, 1_000, 100_000] {
            let dim = 1 + g + fit_rows;
            let col = |values: &[Integer]| -> Vec<Integer> {
                let mut v = vec![Integer::from(0); dim];
                v[(dim - fit_rows)..].clone_from_slice(values);
                v
            };
            let scaled = |row: &[(Float, Float)]| -> Vec<Integer> {
                row[..fit_rows]
                    .iter()
                    .map(|(v, _)| {
                        (v.clone() * scale).round().to_integer().unwrap_or_default()
                    })
                    .collect()
            };
            let mut basis: Vec<Vec<Integer>> = Vec::with_capacity(dim);
            let mut b0 = col(&scaled(&target));
            b0[0] = Integer::from(1);
            basis.push(b0);
            for (i, row) in bases.iter().enumerate() {
                let mut b = col(&scaled(row));
                b[1 + i] = Integer::from(1);
                basis.push(b);
            }
            for n in 0..fit_rows {
                let mut unit = vec![Integer::from(0); fit_rows];
                unit[n] = Integer::from(scale);
                basis.push(col(&unit));
            }
            lll_reduce(&mut basis);
            let mut order: Vec<usize> = (0..dim).collect();
            order.sort_by_key(|&i| basis[i].iter().map(|x| Integer::from(x.square_ref())).sum::<Integer>());
            for &i in &order {
                let w = &basis[i];
                let lead = w[0].clone();
                if lead == 0 || lead.clone().abs() > 16 {
                    continue;
                }
                let kappa: Vec<Rational> = (0..g)
                    .map(|j| -Rational::from((w[1 + j].clone(), lead.clone())))
                    .collect();
                if self.validate_kappa(&target, &bases, &kappa) {
                    let mut cache = self.cache.lock().unwrap();
                    cache.kappas.insert((level, m), kappa.clone());
                    return Ok(kappa);
                }
            }
        }
        Err(Error::SearchBudget(format!(
            "no subtraction vector found for level {level}, M = {m}"
        )))
    }

    /// A candidate kappa is accepted only if every available row of the
    /// combination sits within the tail-derived margin of an integer,
    /// including the rows held back from the lattice fit.
    fn validate_kappa(
        &self,
        target: &[(Float, Float)],
        bases: &[Vec<(Float, Float)>],
        kappa: &[Rational],
    ) -> bool {
        for n in 0..target.len() {
            let (v, vt) = &target[n];
            let bits = v.prec();
            let mut value = v.clone();
            let mut tail = vt.clone();
            for (row, c) in bases.iter().zip(kappa) {
                let cf = Float::with_val(bits, c);
                let cf_abs = cf.clone().abs();
                value -= Float::with_val(bits, &row[n].0 * &cf);
                tail += Float::with_val(bits, &row[n].1 * &cf_abs);
            }
            if snap_integer((n + 1) as u64, &value, &tail).is_err() {
                return false;
            }
        }
        true
    }

    /// Check one registry identity through the given order (default: the
    /// order recorded in the registry).
    pub fn verify_identity(
        &self,
        entry: &IdentityEntry,
        order_override: Option<usize>,
    ) -> Result<VerifyReport> {
        let order = order_override.unwrap_or(entry.order);
        let k = order + 2;
        let bind = Bindings { x: None, y: None };
        let lhs = entry.lhs.eval(self, k, &bind)?;
        let rhs = entry.rhs.eval(self, k, &bind)?;
        let diff = lhs.sub(&rhs)?;
        report_vanishing(&entry.name, order, &diff)
    }

    /// Substitute the recipe series into the curve polynomial and check
    /// that it vanishes through the given order.
    pub fn verify_curve(
        &self,
        entry: &CurveEntry,
        order_override: Option<usize>,
    ) -> Result<VerifyReport> {
        let order = order_override.unwrap_or(entry.order);
        let k = order + 2;
        let none = Bindings { x: None, y: None };
        let x = entry.x.eval(self, k, &none)?;
        let y = entry.y.eval(self, k, &none)?;
        let bound = Bindings {
            x: Some(&x),
            y: Some(&y),
        };
        let p = entry.poly.eval(self, k, &bound)?;
        report_vanishing(&format!("curve {}", entry.level), order, &p)
    }
}

impl SeriesProvider for Workspace {
    fn rademacher_series(&self, level: u64, m: u64, k: usize) -> Result<QSeries> {
        let row = self.float_row(level, m, k)?;
        let coeffs = row
            .iter()
            .enumerate()
            .map(|(n, (v, t))| Ok(Rational::from(snap_integer((n + 1) as u64, v, t)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(QSeries::new(24, coeffs))
    }

    fn subtracted_series(&self, level: u64, m: u64, k: usize) -> Result<QSeries> {
        let row = self.subtracted_row(level, m, k)?;
        Ok(QSeries::new(24, row.into_iter().map(Rational::from).collect()))
    }

    fn form_series(&self, name: &str, k: usize) -> Result<QSeries> {
        let table = self.cuspform_coeffs(name, k)?;
        Ok(QSeries::new(
            24,
            table[1..=k].iter().map(Rational::from).collect(),
        ))
    }
}

/// Snap a float with an absolute uncertainty estimate to an integer; the
/// accepted distance is SNAP_SLACK times the estimate, capped at SNAP_CAP.
fn snap_integer(n: u64, value: &Float, tail: &Float) -> Result<Integer> {
    let bits = value.prec();
    let mut margin = Float::with_val(bits, tail * SNAP_SLACK);
    let floor = Float::with_val(bits, 1e-10);
    if margin < floor {
        margin = floor;
    }
    let cap = Float::with_val(bits, SNAP_CAP);
    if margin > cap {
        margin = cap;
    }
    let nearest = value.clone().round();
    let distance: Float = (value.clone() - &nearest).abs();
    if distance < margin {
        Ok(nearest.to_integer().ok_or_else(|| {
            Error::Domain(format!("snap: value at n = {n} is not finite"))
        })?)
    } else {
        Err(Error::NotNearInteger {
            n,
            value: format!("{:e}", value.to_f64()),
            distance: format!("{:e}", distance.to_f64()),
        })
    }
}

/// Shared tail of verify_identity and verify_curve: the difference series
/// must be known through 24*order and vanish there.
fn report_vanishing(name: &str, order: usize, diff: &QSeries) -> Result<VerifyReport> {
    let want = 24 * order as i64;
    let top = diff.offset24 + 24 * (diff.coeffs.len() as i64 - 1);
    if diff.coeffs.is_empty() || top < want {
        return Err(Error::OrderTooSmall {
            needed: order,
            have: (top.max(0) / 24) as usize,
        });
    }
    for (i, c) in diff.coeffs.iter().enumerate() {
        let e24 = diff.offset24 + 24 * i as i64;
        if e24 > want {
            break;
        }
        if *c != 0 {
            let exp = Rational::from((e24, 24));
            return Ok(VerifyReport {
                name: name.to_string(),
                order,
                passed: false,
                detail: format!("first mismatch at q^{exp}: difference {c}"),
            });
        }
    }
    Ok(VerifyReport {
        name: name.to_string(),
        order,
        passed: true,
        detail: format!("all coefficients agree through q^{order}"),
    })
}

/// Lenstra-Lenstra-Lovasz reduction (delta = 99/100) on integer row
/// vectors, in place. Incremental Gram-Schmidt bookkeeping over rationals;
/// dimensions here stay below ~40, so the textbook variant is plenty.
fn lll_reduce(b: &mut [Vec<Integer>]) {
    let n = b.len();
    if n < 2 {
        return;
    }
    let dot = |x: &[Integer], y: &[Integer]| -> Integer {
        x.iter().zip(y).map(|(a, c)| (a * c).complete()).sum()
    };
    // mu[i][j] for j < i and squared Gram-Schmidt norms, via the Gram
    // matrix so the orthogonal vectors themselves are never stored.
    let mut mu = vec![vec![Rational::new(); n]; n];
    let mut bn = vec![Rational::new(); n];
    for i in 0..n {
        for j in 0..i {
            let mut s = Rational::from(dot(&b[i], &b[j]));
            for l in 0..j {
                s -= (mu[j][l].clone() * &mu[i][l]) * &bn[l];
            }
            mu[i][j] = s / &bn[j];
        }
        let mut s = Rational::from(dot(&b[i], &b[i]));
        for l in 0..i {
            s -= mu[i][l].clone().square() * &bn[l];
        }
        bn[i] = s;
    }
    let delta = Rational::from((99, 100));
    let half = Rational::from((1, 2));
    let mut k = 1;
    while k < n {
        // Size-reduce b_k against b_j, nearest-integer style.
        for j in (0..k).rev() {
            if mu[k][j].clone().abs() > half {
                let q = mu[k][j].clone().round();
                let qi = q.numer().clone();
                for t in 0..b[k].len() {
                    let sub = (&qi * &b[j][t]).complete();
                    b[k][t] -= sub;
                }
                for l in 0..j {
                    let sub = q.clone() * &mu[j][l];
                    mu[k][l] -= sub;
                }
                mu[k][j] -= q;
            }
        }
        let lovasz = (delta.clone() - mu[k][k - 1].clone().square()) * &bn[k - 1];
        if bn[k] >= lovasz {
            k += 1;
            continue;
        }
        b.swap(k, k - 1);
        let mu_kk = mu[k][k - 1].clone();
        let big_b = bn[k].clone() + mu_kk.clone().square() * &bn[k - 1];
        let new_mu_kk = mu_kk.clone() * &bn[k - 1] / &big_b;
        let new_bn_k = bn[k - 1].clone() * &bn[k] / &big_b;
        mu[k][k - 1] = new_mu_kk.clone();
        bn[k] = new_bn_k;
        bn[k - 1] = big_b;
        for j in 0..k - 1 {
            let upper = std::mem::take(&mut mu[k][j]);
            let lower = std::mem::replace(&mut mu[k - 1][j], upper);
            mu[k][j] = lower;
        }
        for i in k + 1..n {
            let t = mu[i][k].clone();
            let new_ik = mu[i][k - 1].clone() - mu_kk.clone() * &t;
            let new_ik1 = t + new_mu_kk.clone() * &new_ik;
            mu[i][k] = new_ik;
            mu[i][k - 1] = new_ik1;
        }
        k = k.max(2) - 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::qseries::eta_series;
    use proptest::prelude::*;

    fn registry() -> Registry {
        Registry::bundled().unwrap()
    }

    fn workspace() -> Workspace {
        Workspace::new(registry())
    }

    #[test]
    fn genus_matches_every_registry_assertion() {
        for (level, entry) in &registry().levels {
            assert_eq!(genus(*level).unwrap(), entry.genus, "level {level}");
        }
        assert_eq!(genus(1).unwrap(), 0);
        assert_eq!(genus(11).unwrap(), 1);
        assert_eq!(genus(144).unwrap(), 13);
        assert!(matches!(genus(0), Err(Error::Domain(_))));
    }

    #[test]
    fn genus_formula_always_integral() {
        for level in 1..=2000 {
            genus(level).unwrap();
        }
    }

    #[test]
    fn tally_reproduces_frozen_counts() {
        let reg = registry();
        assert_eq!(tally(&reg, 21, 50).unwrap(), 2938);
        let t14: Vec<Integer> = tally_row(&reg, 14, 5).unwrap();
        assert_eq!(t14, [1, 1, 2, 4, 7, 9].map(Integer::from));
        let t32 = tally_row(&reg, 32, 4).unwrap();
        assert_eq!(t32, [1, 1, 4, 7, 18].map(Integer::from));
        assert!(matches!(tally(&reg, 23, 5), Err(Error::Registry(_))));
    }

    #[test]
    fn tally36_closed_form_agrees_with_series() {
        let reg = registry();
        let row = tally_row(&reg, 36, 60).unwrap();
        for (m, want) in row.iter().enumerate() {
            assert_eq!(&tally36_closed(m as u64).unwrap(), want, "M = {m}");
        }
    }

    proptest! {
        #[test]
        fn tally36_closed_form_is_integral(m in 0u64..2000) {
            tally36_closed(m).unwrap();
        }
    }

    #[test]
    fn parity_law_matches_exact_hauptmodul_coefficients() {
        // Level-6 Hauptmodul numerator/denominator pair, expanded exactly.
        let k = 400;
        let h = eta_series(2, k)
            .mul(&eta_series(6, k).pow(5).unwrap())
            .div(&eta_series(1, k).pow(5).unwrap().mul(&eta_series(3, k)))
            .unwrap();
        for n in 1..=300i64 {
            let c = h.coeff_int(n).unwrap();
            assert!(c.is_integer());
            let odd = c.numer().is_odd();
            assert_eq!(odd, hauptmodul_parity(n as u64).unwrap(), "n = {n}");
        }
        assert!(hauptmodul_parity(1).unwrap());
        assert!(hauptmodul_parity(4).unwrap());
        assert!(!hauptmodul_parity(5).unwrap());
    }

    #[test]
    fn cuspform_tables_cross_validate_and_hit_known_zeros() {
        let ws = workspace();
        let f11 = ws.cuspform_coeffs("f11", 20).unwrap();
        assert_eq!(f11[2], -2);
        assert_eq!(f11[3], -1);
        let f14 = ws.cuspform_coeffs("f14", 120).unwrap();
        assert_eq!(f14[5], 0);
        let f36 = ws.cuspform_coeffs("f36", 120).unwrap();
        for m in (5..=120).step_by(6) {
            assert_eq!(f36[m], 0, "M = {m}");
        }
        let f49 = ws.cuspform_coeffs("f49", 10).unwrap();
        assert_eq!(f49[2], 1);
    }

    #[test]
    fn vanishing_primes_for_f14() {
        let ws = workspace();
        assert_eq!(
            ws.vanishing_primes("f14", 510).unwrap(),
            vec![5, 11, 23, 71, 101, 263, 503]
        );
    }

    #[test]
    fn genus1_scheme_reproduces_level21_eta_quotient() {
        let ws = workspace();
        let k = 10;
        let row = ws.subtracted_row(21, 2, k).unwrap();
        let quot = eta_series(3, k + 2)
            .mul(&eta_series(7, k + 2).pow(3).unwrap())
            .div(&eta_series(1, k + 2).pow(3).unwrap().mul(&eta_series(21, k + 2)))
            .unwrap();
        for n in 1..=k as i64 {
            let want = quot.coeff_int(n).unwrap() * Rational::from(7);
            assert_eq!(Rational::from(&row[n as usize - 1]), want, "n = {n}");
        }
        // Base row vanishes by construction.
        assert!(ws.subtracted_row(21, 1, 5).unwrap().iter().all(|v| *v == 0));
    }

    #[test]
    fn fifty_scheme_reproduces_eta_quotients() {
        let ws = workspace();
        let k = 8;
        let g3 = ws.subtracted_row(50, 3, k).unwrap();
        let q3 = eta_series(2, k + 2)
            .mul(&eta_series(25, k + 2).pow(2).unwrap())
            .div(&eta_series(1, k + 2).pow(2).unwrap().mul(&eta_series(50, k + 2)))
            .unwrap();
        for n in 1..=k as i64 {
            let want = q3.coeff_int(n).unwrap() * Rational::from(5);
            assert_eq!(Rational::from(&g3[n as usize - 1]), want, "n = {n}");
        }
        let g5 = ws.subtracted_row(50, 5, k).unwrap();
        let q5 = eta_series(2, k + 2)
            .mul(&eta_series(10, k + 2).pow(3).unwrap())
            .div(&eta_series(1, k + 2).pow(3).unwrap().mul(&eta_series(5, k + 2)))
            .unwrap();
        for n in 1..=k as i64 {
            let want = q5.coeff_int(n).unwrap() * Rational::from(20);
            assert_eq!(Rational::from(&g5[n as usize - 1]), want, "n = {n}");
        }
    }

    #[test]
    fn sixtyfour_scheme_reproduces_eta_quotient() {
        let ws = workspace();
        let k = 8;
        let g4 = ws.subtracted_row(64, 4, k).unwrap();
        let q4 = eta_series(2, k + 2)
            .mul(&eta_series(16, k + 2).pow(2).unwrap())
            .div(&eta_series(1, k + 2).pow(2).unwrap().mul(&eta_series(8, k + 2)))
            .unwrap();
        for n in 1..=k as i64 {
            let want = q4.coeff_int(n).unwrap() * Rational::from(8);
            assert_eq!(Rational::from(&g4[n as usize - 1]), want, "n = {n}");
        }
    }

    #[test]
    fn echelon_scheme_verifies_level72_identity_at_low_order() {
        let ws = workspace();
        let entry = ws.registry.identity("g72-4").unwrap().clone();
        let report = ws.verify_identity(&entry, Some(8)).unwrap();
        assert!(report.passed, "{}", report.detail);
    }

    #[test]
    fn calibrated_scheme_certifies_genus2_curve_at_low_order() {
        let ws = workspace();
        let entry = ws.registry.curves.get(&22).unwrap().clone();
        let report = ws.verify_curve(&entry, Some(10)).unwrap();
        assert!(report.passed, "{}", report.detail);
    }

    #[test]
    fn eta_exact_curves_pass_at_moderate_order() {
        let ws = workspace();
        for level in [50u64, 64, 72, 144, 169] {
            let entry = ws.registry.curves.get(&level).unwrap().clone();
            let report = ws.verify_curve(&entry, Some(40)).unwrap();
            assert!(report.passed, "level {level}: {}", report.detail);
        }
    }

    #[test]
    fn rademacher_curve_passes_at_low_order() {
        let ws = workspace();
        let entry = ws.registry.curves.get(&11).unwrap().clone();
        let report = ws.verify_curve(&entry, Some(10)).unwrap();
        assert!(report.passed, "{}", report.detail);
    }

    #[test]
    fn identity_mismatch_is_reported_not_swallowed() {
        let ws = workspace();
        let entry = IdentityEntry {
            name: "broken".into(),
            lhs: Expr::parse("eta(1)^24").unwrap(),
            rhs: Expr::parse("eta(2)^24").unwrap(),
            order: 10,
            note: String::new(),
        };
        let report = ws.verify_identity(&entry, None).unwrap();
        assert!(!report.passed);
        assert!(report.detail.contains("q^1"), "{}", report.detail);
    }

    #[test]
    fn lll_finds_planted_relation() {
        // v = 3 u1 - 2 u2 + noise below the scale; the reduced basis must
        // contain (1, -3, 2, ...) up to sign.
        let scale = 10_000i64;
        let u1 = [417_312i64, 93_114, 771_005, 12_345, 550_001];
        let u2 = [101_377i64, 45_008, 230_119, 99_120, 812_733];
        let z: Vec<i64> = (0..5).map(|i| 3 * u1[i] - 2 * u2[i] + (i as i64 % 3) - 1).collect();
        let dim = 3 + 5;
        let mut basis: Vec<Vec<Integer>> = Vec::new();
        let mut row0 = vec![Integer::from(0); dim];
        row0[0] = Integer::from(1);
        for i in 0..5 {
            row0[3 + i] = Integer::from(z[i]);
        }
        basis.push(row0);
        for (j, u) in [u1, u2].iter().enumerate() {
            let mut row = vec![Integer::from(0); dim];
            row[1 + j] = Integer::from(1);
            for i in 0..5 {
                row[3 + i] = Integer::from(u[i]);
            }
            basis.push(row);
        }
        for i in 0..5 {
            let mut row = vec![Integer::from(0); dim];
            row[3 + i] = Integer::from(scale);
            basis.push(row);
        }
        lll_reduce(&mut basis);
        let found = basis.iter().any(|w| {
            let s = if w[0] == 1 {
                1
            } else if w[0] == -1 {
                -1
            } else {
                return false;
            };
            w[1] == -3 * s && w[2] == 2 * s
        });
        assert!(found);
    }
}
