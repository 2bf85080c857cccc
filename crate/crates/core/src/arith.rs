//! Small integer number theory: gcd, modular inverses, factorization,
//! divisor functions and quadratic symbols. Everything here is exact `u64`/`i64`
//! arithmetic; the big-number work lives elsewhere.

/// Greatest common divisor.
pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Inverse of `a` modulo `m` when `gcd(a, m) = 1`, else `None`. `m >= 1`.
pub fn mod_inv(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(t0.rem_euclid(m as i128) as u64)
}

/// Prime factorization by trial division, as (prime, exponent) pairs in
/// increasing prime order.
pub fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// All positive divisors of `n`, sorted increasing.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    for (p, e) in factor(n) {
        let prev = out.clone();
        let mut pk = 1u64;
        for _ in 0..e {
            pk *= p;
            out.extend(prev.iter().map(|d| d * pk));
        }
    }
    out.sort_unstable();
    out
}

/// Euler totient.
pub fn euler_phi(n: u64) -> u64 {
    let mut phi = n;
    for (p, _) in factor(n) {
        phi = phi / p * (p - 1);
    }
    phi
}

/// Kronecker symbol (a|n) for n >= 1.
pub fn kronecker(mut a: i64, mut n: u64) -> i32 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut sign = 1i32;
    // Factor out 2s from n: (a|2) = 0 if a even, 1 if a = ±1 mod 8, -1 if ±3 mod 8.
    while n % 2 == 0 {
        n /= 2;
        if a % 2 == 0 {
            return 0;
        }
        let r = a.rem_euclid(8);
        if r == 3 || r == 5 {
            sign = -sign;
        }
    }
    // Jacobi symbol for odd n by quadratic reciprocity.
    a = a.rem_euclid(n as i64);
    let mut num = a as u64;
    while num != 0 {
        while num % 2 == 0 {
            num /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                sign = -sign;
            }
        }
        std::mem::swap(&mut num, &mut n);
        if num % 4 == 3 && n % 4 == 3 {
            sign = -sign;
        }
        num %= n;
    }
    if n == 1 {
        sign
    } else {
        0
    }
}

/// Square-free part of `n` (the "core").
pub fn squarefree_part(n: u64) -> u64 {
    let mut core = 1u64;
    for (p, e) in factor(n) {
        if e % 2 == 1 {
            core *= p;
        }
    }
    core
}
