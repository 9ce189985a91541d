//! Exact modular and multiplicative arithmetic shared by every module:
//! factored moduli, CRT splitting, Legendre symbols, square classes in
//! Z/l^e Z, and k-th power subgroups of the unit group.

pub mod primes;

pub use primes::{
    add_mod, classify, factor_u64, gcd, inv_mod, is_prime, mul_mod, pow_mod, sieve_primes,
    spf_sieve, sub_mod, Classification, PrimeSet, PrimeSetRule,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A positive integer together with its full prime-power factorization and
/// the derived quantities every census needs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactoredModulus {
    pub m: u64,
    /// Sorted (prime, exponent) pairs whose product is m.
    pub factors: Vec<(u64, u32)>,
    pub phi: u64,
    pub omega: usize,
    /// Smallest prime factor.
    pub least_prime: u64,
    /// Largest prime factor.
    pub largest_prime: u64,
    pub squarefree: bool,
}

impl FactoredModulus {
    pub fn new(m: u64) -> Result<Self> {
        let factors = factor_u64(m)?;
        let mut phi: u64 = 1;
        for &(p, e) in &factors {
            phi = phi
                .checked_mul(p.pow(e - 1) * (p - 1))
                .ok_or_else(|| Error::resource("phi(m) overflows u64"))?;
        }
        Ok(FactoredModulus {
            m,
            omega: factors.len(),
            phi,
            least_prime: factors.first().map(|f| f.0).unwrap_or(m),
            largest_prime: factors.last().map(|f| f.0).unwrap_or(m),
            squarefree: factors.iter().all(|&(_, e)| e == 1),
            factors,
        })
    }

    /// The prime-power components l^e of m, in increasing prime order.
    pub fn prime_powers(&self) -> Vec<u64> {
        self.factors.iter().map(|&(p, e)| p.pow(e)).collect()
    }

    /// Residue of x in each Z/l^e Z component.
    pub fn crt_split(&self, x: u64) -> Vec<u64> {
        self.prime_powers().iter().map(|&q| x % q).collect()
    }

    /// Inverse of `crt_split`: the unique x mod m with the given residues.
    pub fn crt_combine(&self, residues: &[u64]) -> Result<u64> {
        let qs = self.prime_powers();
        if residues.len() != qs.len() {
            return Err(Error::domain(format!(
                "crt_combine: got {} residues for {} prime-power factors",
                residues.len(),
                qs.len()
            )));
        }
        let mut x: u64 = 0;
        for (&r, &q) in residues.iter().zip(&qs) {
            let big = self.m / q;
            let inv = inv_mod(big % q, q)
                .expect("prime-power components of m are pairwise coprime");
            // x += r * big * (big^-1 mod q), all mod m
            let term = mul_mod(mul_mod(r % q, big % self.m, self.m), inv, self.m);
            x = primes::add_mod(x, term, self.m);
        }
        Ok(x)
    }
}

/// Classification of a residue x in Z/l^e Z, l an odd prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SquareClass {
    /// x = 0 in Z/l^e Z.
    Zero,
    /// l does not divide x and x is a quadratic residue mod l.
    NonzeroSquare,
    /// l does not divide x and x is a non-residue mod l.
    NonSquare,
    /// l-adic valuation t with 0 < t < e.
    Intermediate(u32),
}

/// Legendre symbol (a/p) via Euler's criterion, p an odd prime.
pub fn legendre_symbol(a: u64, p: u64) -> i32 {
    let a = a % p;
    if a == 0 {
        return 0;
    }
    let r = pow_mod(a, (p - 1) / 2, p);
    if r == 1 {
        1
    } else {
        -1
    }
}

/// Square class of x in Z/l^e Z for odd l. See [`SquareClass`].
pub fn square_class(x: u64, l: u64, e: u32) -> Result<SquareClass> {
    if l == 2 {
        return Err(Error::domain("square classes mod powers of 2 are unsupported"));
    }
    if e == 0 || !is_prime(l) {
        return Err(Error::domain(format!("square_class needs an odd prime power, got {l}^{e}")));
    }
    let q = l
        .checked_pow(e)
        .ok_or_else(|| Error::resource("l^e overflows u64"))?;
    let x = x % q;
    if x == 0 {
        return Ok(SquareClass::Zero);
    }
    let mut t = 0u32;
    let mut y = x;
    while y % l == 0 {
        y /= l;
        t += 1;
    }
    if t > 0 {
        debug_assert!(t < e);
        return Ok(SquareClass::Intermediate(t));
    }
    Ok(if legendre_symbol(y, l) == 1 {
        SquareClass::NonzeroSquare
    } else {
        SquareClass::NonSquare
    })
}

/// The subgroup of (Z/mZ)* of k-th powers, listed in increasing order.
/// Exhaustive; intended for desk-scale m.
pub fn kth_power_subgroup(m: u64, k: u64) -> Vec<u64> {
    let mut v: Vec<u64> = (1..m)
        .filter(|&x| gcd(x, m) == 1)
        .map(|x| pow_mod(x, k, m))
        .collect();
    if m == 1 {
        v.push(0);
    }
    v.sort_unstable();
    v.dedup();
    v
}

/// Order of the subgroup of k-th powers in (Z/mZ)*:
/// the product over l^e || m of phi(l^e)/gcd(k, phi(l^e)).
///
/// Valid whenever each unit group (Z/l^e Z)* is cyclic, which holds for the
/// odd prime powers this library targets (and for 2 and 4).
pub fn kth_power_subgroup_order(m: &FactoredModulus, k: u64) -> u64 {
    m.factors
        .iter()
        .map(|&(p, e)| {
            let phi = p.pow(e - 1) * (p - 1);
            phi / gcd(k, phi)
        })
        .product()
}
