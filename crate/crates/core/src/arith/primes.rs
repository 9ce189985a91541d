//! Prime generation, primality testing, factorization of u64 moduli, and
//! prime sets defined by arithmetic progressions or explicit lists.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sieve of Eratosthenes. Returns all primes `<= limit` in increasing order.
pub fn sieve_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for p in 2..=n {
        if !composite[p] {
            primes.push(p as u64);
            let mut k = p * p;
            while k <= n {
                composite[k] = true;
                k += p;
            }
        }
    }
    primes
}

/// Smallest-prime-factor table for 0..=limit; spf[0] = spf[1] = 0.
pub fn spf_sieve(limit: usize) -> Vec<u32> {
    let mut spf = vec![0u32; limit + 1];
    for i in 2..=limit {
        if spf[i] == 0 {
            let mut k = i;
            while k <= limit {
                if spf[k] == 0 {
                    spf[k] = i as u32;
                }
                k += i;
            }
        }
    }
    spf
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn add_mod(a: u64, b: u64, m: u64) -> u64 {
    let s = a as u128 + b as u128;
    (s % m as u128) as u64
}

pub fn sub_mod(a: u64, b: u64, m: u64) -> u64 {
    let (a, b) = (a % m, b % m);
    if a >= b {
        a - b
    } else {
        a + m - b
    }
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Inverse of `a` mod `m` when gcd(a, m) = 1.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (m as i128, (a % m) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    if r != 1 {
        return None;
    }
    let mut t = t % m as i128;
    if t < 0 {
        t += m as i128;
    }
    Some(t as u64)
}

/// Deterministic Miller–Rabin for u64.
///
/// The witness set {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37} is known to
/// be correct for all n < 3.3 * 10^24, which covers the full u64 range.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d & 1 == 0 {
        d >>= 1;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Pollard's rho (Brent variant) for splitting composites whose factors all
/// exceed the trial-division bound.
fn pollard_rho(n: u64) -> u64 {
    debug_assert!(n > 1 && !is_prime(n) && n % 2 == 1);
    let mut c = 1u64;
    loop {
        let f = |x: u64| add_mod(mul_mod(x, x, n), c, n);
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Full factorization of n >= 2 as sorted (prime, exponent) pairs.
pub fn factor_u64(n: u64) -> Result<Vec<(u64, u32)>> {
    if n < 2 {
        return Err(Error::domain(format!("cannot factor {n}: need n >= 2")));
    }
    let mut n = n;
    let mut factors: Vec<(u64, u32)> = Vec::new();
    let push = |p: u64, e: u32, factors: &mut Vec<(u64, u32)>| {
        if let Some(last) = factors.last_mut() {
            if last.0 == p {
                last.1 += e;
                return;
            }
        }
        factors.push((p, e));
    };
    for p in [2u64, 3, 5] {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        if e > 0 {
            push(p, e, &mut factors);
        }
    }
    // 6k +- 1 wheel up to 10^6, then Miller-Rabin + rho on what remains.
    let mut d = 7u64;
    let mut step = 4u64; // alternates 4, 2 to hit 7, 11, 13, 17, ...
    while d <= 1_000_000 && d * d <= n {
        let mut e = 0;
        while n % d == 0 {
            n /= d;
            e += 1;
        }
        if e > 0 {
            push(d, e, &mut factors);
        }
        d += step;
        step = 6 - step;
    }
    let mut stack = vec![n];
    let mut large: Vec<u64> = Vec::new();
    while let Some(v) = stack.pop() {
        if v == 1 {
            continue;
        }
        if is_prime(v) {
            large.push(v);
        } else {
            let d = pollard_rho(v);
            stack.push(d);
            stack.push(v / d);
        }
    }
    large.sort_unstable();
    for p in large {
        push(p, 1, &mut factors);
    }
    factors.sort_unstable();
    // Merge any duplicates produced by the rho splits.
    let mut merged: Vec<(u64, u32)> = Vec::new();
    for (p, e) in factors {
        if let Some(last) = merged.last_mut() {
            if last.0 == p {
                last.1 += e;
                continue;
            }
        }
        merged.push((p, e));
    }
    Ok(merged)
}

/// Membership rule of a prime set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrimeSetRule {
    /// p belongs iff p mod q lies in `classes`.
    Progressions { modulus: u64, classes: Vec<u64> },
    /// Explicit finite list.
    List(Vec<u64>),
}

/// A set of primes with decidable membership and a nominal density.
///
/// Progression-defined sets have Dirichlet density
/// (number of allowed unit classes)/phi(q); explicit lists have density 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeSet {
    pub label: String,
    pub rule: PrimeSetRule,
}

impl PrimeSet {
    pub fn progressions(label: impl Into<String>, modulus: u64, classes: &[u64]) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::config("progression modulus must be positive"));
        }
        let mut cls: Vec<u64> = classes.iter().map(|&c| c % modulus).collect();
        cls.sort_unstable();
        cls.dedup();
        if cls.is_empty() {
            return Err(Error::config("progression prime set needs at least one class"));
        }
        Ok(PrimeSet {
            label: label.into(),
            rule: PrimeSetRule::Progressions { modulus, classes: cls },
        })
    }

    pub fn list(label: impl Into<String>, primes: &[u64]) -> Self {
        let mut v = primes.to_vec();
        v.sort_unstable();
        v.dedup();
        PrimeSet { label: label.into(), rule: PrimeSetRule::List(v) }
    }

    /// All primes (residue 0 mod 1).
    pub fn all(label: impl Into<String>) -> Self {
        PrimeSet {
            label: label.into(),
            rule: PrimeSetRule::Progressions { modulus: 1, classes: vec![0] },
        }
    }

    pub fn contains(&self, p: u64) -> bool {
        match &self.rule {
            PrimeSetRule::Progressions { modulus, classes } => {
                classes.binary_search(&(p % modulus)).is_ok()
            }
            PrimeSetRule::List(v) => v.binary_search(&p).is_ok(),
        }
    }

    /// Nominal density alpha: (#allowed unit classes)/phi(q) for progressions,
    /// 0 for finite lists.
    pub fn density(&self) -> f64 {
        match &self.rule {
            PrimeSetRule::Progressions { modulus, classes } => {
                let phi = super::FactoredModulus::new(*modulus)
                    .map(|f| f.phi)
                    .unwrap_or(1); // modulus 1
                let units = classes.iter().filter(|&&c| gcd(c, *modulus) == 1 || *modulus == 1).count();
                units as f64 / phi as f64
            }
            PrimeSetRule::List(_) => 0.0,
        }
    }
}

/// Partition of a prime list across declared-disjoint prime sets.
#[derive(Debug, Clone)]
pub struct Classification {
    /// assigned[i] = primes matched by sets[i], in increasing order.
    pub assigned: Vec<Vec<u64>>,
    pub leftovers: Vec<u64>,
}

/// Assigns every prime to at most one set. Two sets matching the same prime
/// falsify the disjointness declaration and yield a configuration error.
pub fn classify(primes: &[u64], sets: &[PrimeSet]) -> Result<Classification> {
    let mut assigned = vec![Vec::new(); sets.len()];
    let mut leftovers = Vec::new();
    for &p in primes {
        let mut hit: Option<usize> = None;
        for (i, s) in sets.iter().enumerate() {
            if s.contains(p) {
                if let Some(j) = hit {
                    return Err(Error::config(format!(
                        "prime sets '{}' and '{}' overlap at p = {p}",
                        sets[j].label, s.label
                    )));
                }
                hit = Some(i);
            }
        }
        match hit {
            Some(i) => assigned[i].push(p),
            None => leftovers.push(p),
        }
    }
    Ok(Classification { assigned, leftovers })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sieve_small_and_pi_1e5() {
        assert_eq!(sieve_primes(20), vec![2, 3, 5, 7, 11, 13, 17, 19]);
        // Independent oracle: count u64 primes by Miller-Rabin one by one.
        let by_mr = (2u64..=1000).filter(|&n| is_prime(n)).count();
        assert_eq!(sieve_primes(1000).len(), by_mr);
        assert_eq!(sieve_primes(100_000).len(), 9592);
    }

    #[test]
    fn factor_basics() {
        assert_eq!(factor_u64(12).unwrap(), vec![(2, 2), (3, 1)]);
        assert_eq!(factor_u64(11).unwrap(), vec![(11, 1)]);
        assert_eq!(factor_u64(1_073_741_827).unwrap(), vec![(1_073_741_827, 1)]);
        assert!(factor_u64(1).is_err());
        // Semiprime past the trial-division bound forces the rho path.
        let p = 1_000_003u64;
        let q = 1_000_033u64;
        assert_eq!(factor_u64(p * q).unwrap(), vec![(p, 1), (q, 1)]);
    }

    #[test]
    fn miller_rabin_vs_trial_division() {
        for n in 2u64..5000 {
            let trial = (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0);
            assert_eq!(is_prime(n), trial, "disagree at {n}");
        }
    }

    #[test]
    fn classify_mod4_up_to_20() {
        let s1 = PrimeSet::progressions("1mod4", 4, &[1]).unwrap();
        let s2 = PrimeSet::progressions("3mod4", 4, &[3]).unwrap();
        let primes = sieve_primes(20);
        let c = classify(&primes, &[s1, s2]).unwrap();
        assert_eq!(c.assigned[0], vec![5, 13, 17]);
        assert_eq!(c.assigned[1], vec![3, 7, 11, 19]);
        assert_eq!(c.leftovers, vec![2]);
    }

    #[test]
    fn classify_rejects_overlap() {
        let s1 = PrimeSet::progressions("odd", 2, &[1]).unwrap();
        let s2 = PrimeSet::progressions("1mod4", 4, &[1]).unwrap();
        assert!(classify(&sieve_primes(30), &[s1, s2]).is_err());
    }

    #[test]
    fn mod4_density_near_half_at_1e5() {
        let s1 = PrimeSet::progressions("1mod4", 4, &[1]).unwrap();
        let primes = sieve_primes(100_000);
        let count = primes.iter().filter(|&&p| s1.contains(p)).count();
        let ratio = count as f64 / primes.len() as f64;
        assert!((ratio - 0.5).abs() < 0.02, "ratio {ratio}");
        assert_eq!(s1.density(), 0.5);
    }

    #[test]
    fn inverse_and_pow() {
        for m in [7u64, 12, 101, 1_000_003] {
            for a in 1..50u64 {
                if gcd(a, m) == 1 {
                    let inv = inv_mod(a, m).unwrap();
                    assert_eq!(mul_mod(a, inv, m), 1 % m);
                }
            }
        }
        assert_eq!(pow_mod(3, 100, 101), 1); // Fermat
    }
}
