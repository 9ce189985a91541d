//! Truncated q-series arithmetic mod m, and exact integer reconstruction.
//!
//! The discriminant form is expanded as q * P(q)^8 where
//! P(q) = sum_{j>=0} (-1)^j (2j+1) q^{j(j+1)/2} is the cube of the Dedekind
//! eta product without its q^{1/8} prefactor. P is sparse (support ~ sqrt(2N)
//! up to index N), so each of the seven multiplications costs O(N sqrt N)
//! instead of the O(N^2) of a dense product.
//!
//! Exact (arbitrary-precision) tables are produced by running the identical
//! mod-m pipeline over a fixed basis of 61-bit primes and reconstructing the
//! signed coefficients by the Chinese remainder theorem.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::arith::primes::{add_mod, is_prime, mul_mod, pow_mod};
use crate::error::{Error, Result};

/// Dense series length limit for the O(N^2) products behind weights > 12.
pub const DENSE_LIMIT: usize = 30_000;
/// Sparse series length limit for the weight-12 eta-product pipeline.
pub const SPARSE_LIMIT: usize = 2_000_000;
/// Exact-backend length limit (coefficient growth, not time, is the issue).
pub const EXACT_LIMIT: usize = 10_000;

/// Support of P(q): pairs (exponent j(j+1)/2, coefficient (-1)^j (2j+1))
/// with exponent < n_terms.
pub fn eta3_support(n_terms: usize) -> Vec<(usize, i64)> {
    let mut v = Vec::new();
    let mut j = 0i64;
    loop {
        let exp = (j * (j + 1) / 2) as usize;
        if exp >= n_terms {
            break;
        }
        let c = if j % 2 == 0 { 2 * j + 1 } else { -(2 * j + 1) };
        v.push((exp, c));
        j += 1;
    }
    v
}

fn reduce_signed(c: i64, m: u64) -> u64 {
    let r = c.rem_euclid(m as i64);
    r as u64
}

/// out = dense * sparse, truncated to dense.len() coefficients.
pub fn sparse_mul_mod(dense: &[u64], sparse: &[(usize, i64)], m: u64) -> Vec<u64> {
    let n = dense.len();
    let mut out = vec![0u64; n];
    let small = m <= u32::MAX as u64;
    for &(t, c) in sparse {
        if t >= n {
            break;
        }
        let cm = reduce_signed(c, m);
        if cm == 0 {
            continue;
        }
        if small {
            for i in 0..n - t {
                let v = dense[i];
                if v != 0 {
                    out[i + t] = (out[i + t] + v * cm) % m;
                }
            }
        } else {
            for i in 0..n - t {
                let v = dense[i];
                if v != 0 {
                    out[i + t] = add_mod(out[i + t], mul_mod(v, cm, m), m);
                }
            }
        }
    }
    out
}

/// Dense product truncated to `len` coefficients.
pub fn dense_mul_mod(a: &[u64], b: &[u64], len: usize, m: u64) -> Vec<u64> {
    let mut out = vec![0u64; len];
    if m <= u32::MAX as u64 {
        // Products fit in u64; a u128 accumulator absorbs ~2^64 of them.
        for (n, slot) in out.iter_mut().enumerate() {
            let lo = n.saturating_sub(b.len() - 1).min(a.len());
            let hi = (n + 1).min(a.len());
            let mut acc: u128 = 0;
            for i in lo..hi {
                acc += (a[i] * b[n - i]) as u128;
            }
            *slot = (acc % m as u128) as u64;
        }
    } else {
        for (n, slot) in out.iter_mut().enumerate() {
            let lo = n.saturating_sub(b.len() - 1).min(a.len());
            let hi = (n + 1).min(a.len());
            let mut acc: u128 = 0;
            let mut budget = 0u32;
            for i in lo..hi {
                acc += a[i] as u128 * b[n - i] as u128;
                budget += 1;
                if budget == 32 {
                    acc %= m as u128;
                    budget = 0;
                }
            }
            *slot = (acc % m as u128) as u64;
        }
    }
    out
}

/// sigma_r(n) mod m for n = 0..=n_max (index 0 is unused and left 0).
pub fn sigma_sieve_mod(n_max: usize, r: u32, m: u64) -> Vec<u64> {
    let mut out = vec![0u64; n_max + 1];
    for d in 1..=n_max {
        let dr = pow_mod(d as u64, r as u64, m);
        let mut k = d;
        while k <= n_max {
            out[k] = add_mod(out[k], dr, m);
            k += d;
        }
    }
    out
}

/// tau(n) mod m for n = 1..=n_max; returned vector is indexed by n with
/// slot 0 unused.
pub fn delta_mod(n_max: usize, m: u64) -> Result<Vec<u64>> {
    if n_max > SPARSE_LIMIT {
        return Err(Error::resource(format!(
            "weight-12 expansion beyond N = {SPARSE_LIMIT} (requested {n_max})"
        )));
    }
    let support = eta3_support(n_max.max(1));
    // p8[d] = coefficient of q^d in P(q)^8; tau(n) = p8[n-1].
    let mut p8 = vec![0u64; n_max.max(1)];
    for &(t, c) in &support {
        p8[t] = reduce_signed(c, m);
    }
    for _ in 0..7 {
        p8 = sparse_mul_mod(&p8, &support, m);
    }
    let mut out = vec![0u64; n_max + 1];
    for n in 1..=n_max {
        out[n] = p8[n - 1];
    }
    Ok(out)
}

/// Eisenstein series of weight 4, 6, 8, 10 or 14, mod m, indexed 0..=n_max.
/// E4 and E6 come from divisor sieves; E8 = E4^2, E10 = E4*E6, E14 = E8*E6.
pub fn eisenstein_mod(weight: u32, n_max: usize, m: u64) -> Result<Vec<u64>> {
    let len = n_max + 1;
    let sieve_based = |r: u32, scale: i64| -> Vec<u64> {
        let sig = sigma_sieve_mod(n_max, r, m);
        let sc = reduce_signed(scale, m);
        let mut e = vec![0u64; len];
        e[0] = 1 % m;
        for n in 1..len {
            e[n] = mul_mod(sig[n], sc, m);
        }
        e
    };
    match weight {
        4 => Ok(sieve_based(3, 240)),
        6 => Ok(sieve_based(5, -504)),
        8 => {
            let e4 = eisenstein_mod(4, n_max, m)?;
            Ok(dense_mul_mod(&e4, &e4, len, m))
        }
        10 => {
            let e4 = eisenstein_mod(4, n_max, m)?;
            let e6 = eisenstein_mod(6, n_max, m)?;
            Ok(dense_mul_mod(&e4, &e6, len, m))
        }
        14 => {
            let e8 = eisenstein_mod(8, n_max, m)?;
            let e6 = eisenstein_mod(6, n_max, m)?;
            Ok(dense_mul_mod(&e8, &e6, len, m))
        }
        w => Err(Error::domain(format!("no Eisenstein construction for weight {w}"))),
    }
}

/// a(n) mod m for the normalized level-1 cusp form of the given weight,
/// indexed by n with slot 0 unused.
pub fn level1_mod(weight: u32, n_max: usize, m: u64) -> Result<Vec<u64>> {
    let delta = delta_mod(n_max, m)?;
    if weight == 12 {
        return Ok(delta);
    }
    if n_max > DENSE_LIMIT {
        return Err(Error::resource(format!(
            "weight-{weight} expansion uses dense products; N is capped at {DENSE_LIMIT} \
             (requested {n_max})"
        )));
    }
    let e = eisenstein_mod(weight - 12, n_max, m)?;
    // f = Delta * E; Delta has no constant term so out[0] = 0 falls out.
    Ok(dense_mul_mod(&delta, &e, n_max + 1, m))
}

/// Fixed basis of four 61-bit primes for exact reconstruction.
pub fn rns_primes() -> &'static [u64; 4] {
    static PRIMES: OnceLock<[u64; 4]> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let mut found = [0u64; 4];
        let mut n = (1u64 << 61) + 1;
        let mut i = 0;
        while i < 4 {
            if is_prime(n) {
                found[i] = n;
                i += 1;
            }
            n += 2;
        }
        found
    })
}

/// Precomputed CRT data over [`rns_primes`].
pub struct RnsBasis {
    pub primes: [u64; 4],
    modulus: BigInt,
    half: BigInt,
    /// mults[i] = (P/p_i) * ((P/p_i)^-1 mod p_i), ready to scale by r_i.
    mults: Vec<BigInt>,
}

impl RnsBasis {
    pub fn new() -> Self {
        let primes = *rns_primes();
        let modulus: BigInt = primes.iter().map(|&p| BigInt::from(p)).product();
        let mut mults = Vec::with_capacity(4);
        for &p in &primes {
            let rest = &modulus / BigInt::from(p);
            let rest_mod_p = u64::try_from(&rest % BigInt::from(p)).expect("residue fits u64");
            let inv = crate::arith::inv_mod(rest_mod_p, p).expect("basis primes are distinct");
            mults.push(rest * BigInt::from(inv));
        }
        let half = &modulus >> 1;
        RnsBasis { primes, modulus, half, mults }
    }

    /// Signed value congruent to r_i mod p_i with |value| < P/2.
    pub fn reconstruct(&self, residues: [u64; 4]) -> BigInt {
        let mut x = BigInt::zero();
        for (i, &r) in residues.iter().enumerate() {
            x += &self.mults[i] * BigInt::from(r);
        }
        x %= &self.modulus;
        if x > self.half {
            x -= &self.modulus;
        }
        x
    }
}

impl Default for RnsBasis {
    fn default() -> Self {
        Self::new()
    }
}

/// Exact a(n) table for a level-1 form, produced by running the mod-m
/// pipeline over the RNS basis and CRT-reconstructing each coefficient.
pub fn level1_exact(weight: u32, n_max: usize) -> Result<Vec<BigInt>> {
    if n_max > EXACT_LIMIT {
        return Err(Error::resource(format!(
            "exact backend is capped at N = {EXACT_LIMIT} (requested {n_max})"
        )));
    }
    let basis = RnsBasis::new();
    let tables: Vec<Vec<u64>> = basis
        .primes
        .iter()
        .map(|&p| level1_mod(weight, n_max, p))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(BigInt::zero());
    for n in 1..=n_max {
        out.push(basis.reconstruct([tables[0][n], tables[1][n], tables[2][n], tables[3][n]]));
    }
    Ok(out)
}

/// Exact truncated product of `a` and `b` (test oracles and charpoly work).
pub fn dense_mul_exact(a: &[BigInt], b: &[BigInt], len: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); len];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() || i >= len {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            if i + j >= len {
                break;
            }
            if !bj.is_zero() {
                out[i + j] += ai * bj;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn eta3_first_terms() {
        // 1, -3, 0, 5, 0, 0, -7, ...
        let mut dense = vec![0i64; 12];
        for (t, c) in eta3_support(12) {
            dense[t] = c;
        }
        assert_eq!(dense, vec![1, -3, 0, 5, 0, 0, -7, 0, 0, 0, 9, 0]);
        // Support size up to index N is about sqrt(2N).
        let n = 10_000;
        let sup = eta3_support(n).len() as f64;
        assert!((sup - (2.0 * n as f64).sqrt()).abs() < 2.0);
    }

    /// Naive oracle: q * prod_{n<=N} (1 - q^n)^24 by direct polynomial
    /// multiplication, entirely independent of the sparse-eta pipeline.
    fn tau_oracle(n_max: usize) -> Vec<BigInt> {
        let len = n_max; // exponents 0..n_max-1 of the product, tau(n) at n-1
        let mut prod = vec![BigInt::zero(); len];
        prod[0] = BigInt::one();
        for n in 1..len {
            let mut factor = vec![BigInt::zero(); len.min(n + 1)];
            factor[0] = BigInt::one();
            factor[n] = BigInt::from(-1);
            for _ in 0..24 {
                prod = dense_mul_exact(&prod, &factor, len);
            }
        }
        let mut out = vec![BigInt::zero(); n_max + 1];
        for n in 1..=n_max {
            out[n] = prod[n - 1].clone();
        }
        out
    }

    #[test]
    fn delta_matches_naive_eta_product() {
        let oracle = tau_oracle(40);
        let exact = level1_exact(12, 40).unwrap();
        assert_eq!(&exact[..=40], &oracle[..=40]);
        assert_eq!(exact[1], BigInt::one());
    }

    #[test]
    fn tau_fixture_values() {
        let exact = level1_exact(12, 12).unwrap();
        let expect: [(usize, i64); 6] =
            [(2, -24), (3, 252), (4, -1472), (5, 4830), (6, -6048), (12, -370944)];
        for (n, v) in expect {
            assert_eq!(exact[n], BigInt::from(v), "tau({n})");
        }
    }

    #[test]
    fn weight16_first_coefficients() {
        let f16 = level1_exact(16, 6).unwrap();
        assert_eq!(f16[1], BigInt::one());
        assert_eq!(f16[2], BigInt::from(216));
        // Independent small check: coefficient of q^2 in Delta*E4 is
        // tau(2) + 240*sigma3(1).
        assert_eq!(f16[2], BigInt::from(-24 + 240));
        assert_eq!(f16[3], BigInt::from(-3348));
    }

    #[test]
    fn sigma_sieve_matches_divisor_loop() {
        let m = 1_000_003u64;
        let s3 = sigma_sieve_mod(200, 3, m);
        for n in 1..=200u64 {
            let direct: u64 = (1..=n).filter(|d| n % d == 0).map(|d| d.pow(3) % m).sum::<u64>() % m;
            assert_eq!(s3[n as usize], direct);
        }
    }

    #[test]
    fn mod_table_agrees_with_exact_reduction() {
        let exact = level1_exact(16, 500).unwrap();
        for m in [11u64, 101, 691] {
            let modt = level1_mod(16, 500, m).unwrap();
            for n in 1..=500usize {
                let red = ((&exact[n]) % BigInt::from(m) + BigInt::from(m)) % BigInt::from(m);
                assert_eq!(BigInt::from(modt[n]), red, "n={n} m={m}");
            }
        }
    }

    #[test]
    fn rns_basis_reconstructs_signed_values() {
        let basis = RnsBasis::new();
        for v in [0i64, 1, -1, 123456789, -987654321] {
            let residues = basis.primes.map(|p| (v as i128).rem_euclid(p as i128) as u64);
            assert_eq!(basis.reconstruct(residues), BigInt::from(v));
        }
    }
}
