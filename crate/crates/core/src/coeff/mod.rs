//! Fourier coefficients a(n) for the computable rational-eigenform families:
//! the six one-dimensional level-1 weights, weight-2 point-count forms given
//! by an integral cubic, and rational linear combinations of those.
//!
//! Level-1 coefficients come from the q-expansion pipeline in [`crate::series`];
//! weight-2 prime coefficients are quadratic-character sums over F_p; prime
//! powers follow the Hecke relation a(p^{e+1}) = a(p) a(p^e) - p^{k-1} a(p^{e-1});
//! composite indices are filled multiplicatively.

pub mod cache;
pub mod symfunc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{
    factor_u64, inv_mod, is_prime, mul_mod, pow_mod, sieve_primes, sub_mod, PrimeSet,
};
use crate::error::{Error, Result};
use crate::series;

pub use crate::series::eta3_support as eta3_expansion;

/// Largest prime admitted by the weight-2 character-sum backend.
pub const WEIGHT2_PRIME_LIMIT: u64 = 100_000;

/// One of the six weights where dim S_k(SL2(Z)) = 1, so the normalized cusp
/// form is automatically a Hecke eigenform with integer coefficients.
pub const LEVEL1_WEIGHTS: [u32; 6] = [12, 16, 18, 20, 22, 26];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EigenformSpec {
    pub weight: u32,
}

impl EigenformSpec {
    pub fn new(weight: u32) -> Result<Self> {
        if !LEVEL1_WEIGHTS.contains(&weight) {
            return Err(Error::config(format!(
                "level-1 weight must be one of {LEVEL1_WEIGHTS:?}, got {weight}"
            )));
        }
        Ok(EigenformSpec { weight })
    }

    pub fn delta() -> Self {
        EigenformSpec { weight: 12 }
    }

    pub fn label(&self) -> String {
        if self.weight == 12 {
            "delta".to_string()
        } else {
            format!("f{}", self.weight)
        }
    }

    /// Primes where the mod-l Galois image of this form is classically known
    /// to be small; census predictions exclude moduli touching these.
    pub fn exceptional_primes(&self) -> &'static [u64] {
        match self.weight {
            12 => &[2, 3, 5, 7, 23, 691],
            16 => &[2, 3, 5, 7, 11, 31, 59, 3617],
            18 => &[2, 3, 5, 7, 11, 13, 43867],
            20 => &[2, 3, 5, 7, 11, 13, 283, 617],
            22 => &[2, 3, 5, 7, 13, 17, 131, 593],
            26 => &[2, 3, 5, 7, 11, 17, 19, 657931],
            _ => unreachable!(),
        }
    }
}

/// Weight-2 form attached to the cubic g(x) = x^3 + a x + b: at a good odd
/// prime, a(p) = -sum_x legendre(g(x), p).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Weight2Spec {
    pub a: i64,
    pub b: i64,
}

impl Weight2Spec {
    pub fn new(a: i64, b: i64) -> Result<Self> {
        let spec = Weight2Spec { a, b };
        if spec.disc() == 0 {
            return Err(Error::config(format!(
                "cubic x^3 + {a}x + {b} is singular (discriminant 0)"
            )));
        }
        Ok(spec)
    }

    /// -16 (4 a^3 + 27 b^2).
    pub fn disc(&self) -> i128 {
        let a = self.a as i128;
        let b = self.b as i128;
        -16 * (4 * a * a * a + 27 * b * b)
    }

    pub fn label(&self) -> String {
        format!("w2[{},{}]", self.a, self.b)
    }

    /// Primes of bad reduction for this model (always includes 2).
    pub fn bad_primes(&self) -> Vec<u64> {
        let d = self.disc().unsigned_abs();
        let mut ps = vec![2u64];
        let mut rest = d;
        while rest % 2 == 0 {
            rest /= 2;
        }
        if rest > 1 {
            // The discriminant of an i64 cubic fits well within u64 factoring range.
            for (p, _) in factor_u64(rest as u64).expect("rest >= 2") {
                ps.push(p);
            }
        }
        ps.sort_unstable();
        ps.dedup();
        ps
    }

    pub fn is_good_prime(&self, p: u64) -> bool {
        p > 2 && self.disc().unsigned_abs() % (p as u128) != 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrimitiveForm {
    Level1(EigenformSpec),
    Weight2(Weight2Spec),
}

impl PrimitiveForm {
    pub fn delta() -> Self {
        PrimitiveForm::Level1(EigenformSpec::delta())
    }

    pub fn weight(&self) -> u32 {
        match self {
            PrimitiveForm::Level1(s) => s.weight,
            PrimitiveForm::Weight2(_) => 2,
        }
    }

    pub fn label(&self) -> String {
        match self {
            PrimitiveForm::Level1(s) => s.label(),
            PrimitiveForm::Weight2(s) => s.label(),
        }
    }

    pub fn is_good_prime(&self, p: u64) -> bool {
        match self {
            PrimitiveForm::Level1(_) => true,
            PrimitiveForm::Weight2(s) => s.is_good_prime(p),
        }
    }

    /// Exact a(p). Level-1 forms run the exact expansion up to p.
    pub fn ap_exact(&self, p: u64) -> Result<BigInt> {
        if !is_prime(p) {
            return Err(Error::domain(format!("{p} is not prime")));
        }
        match self {
            PrimitiveForm::Level1(s) => {
                let table = series::level1_exact(s.weight, p as usize)?;
                Ok(table[p as usize].clone())
            }
            PrimitiveForm::Weight2(s) => Ok(BigInt::from(weight2_ap(s, p)?)),
        }
    }

    /// a(p) mod m.
    pub fn ap_mod(&self, p: u64, m: u64) -> Result<u64> {
        if !is_prime(p) {
            return Err(Error::domain(format!("{p} is not prime")));
        }
        match self {
            PrimitiveForm::Level1(s) => {
                let table = series::level1_mod(s.weight, p as usize, m)?;
                Ok(table[p as usize])
            }
            PrimitiveForm::Weight2(s) => {
                let ap = weight2_ap(s, p)?;
                Ok(ap.rem_euclid(m as i64) as u64)
            }
        }
    }
}

/// Rational linear combination of primitive forms.
///
/// a(n) = sum_i c_i a_i(n); operations that rely on eigenform structure
/// (multiplicativity, power-sum inversion) additionally require equal
/// weights or unit coefficients and check for them.
#[derive(Debug, Clone, PartialEq)]
pub struct CuspformCombo {
    pub terms: Vec<(BigRational, PrimitiveForm)>,
}

impl CuspformCombo {
    pub fn new(terms: Vec<(BigRational, PrimitiveForm)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::config("combo needs at least one term"));
        }
        Ok(CuspformCombo { terms })
    }

    pub fn label(&self) -> String {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(c, f)| {
                if c.is_one() {
                    f.label()
                } else {
                    format!("{}*{}", c, f.label())
                }
            })
            .collect();
        format!("combo({})", parts.join("+"))
    }

    pub fn equal_weight(&self) -> Option<u32> {
        let k = self.terms[0].1.weight();
        self.terms.iter().all(|(_, f)| f.weight() == k).then_some(k)
    }

    /// Coefficients reduced mod m; fails when a denominator is not a unit.
    pub fn coefficients_mod(&self, m: u64) -> Result<Vec<u64>> {
        self.terms
            .iter()
            .map(|(c, _)| {
                let den = c.denom().mod_floor_u64(m);
                let num = c.numer().mod_floor_u64(m);
                let inv = inv_mod(den, m).ok_or_else(|| {
                    Error::domain(format!(
                        "combo coefficient {c} has denominator not invertible mod {m}"
                    ))
                })?;
                Ok(mul_mod(num, inv, m))
            })
            .collect()
    }
}

trait ModFloor {
    fn mod_floor_u64(&self, m: u64) -> u64;
}

impl ModFloor for BigInt {
    fn mod_floor_u64(&self, m: u64) -> u64 {
        let r = self % BigInt::from(m);
        let r = if r.is_negative() { r + BigInt::from(m) } else { r };
        r.to_u64().expect("reduced residue fits u64")
    }
}

/// Any coefficient source: a primitive eigenform or a rational combination.
#[derive(Debug, Clone, PartialEq)]
pub enum FormSource {
    Primitive(PrimitiveForm),
    Combo(CuspformCombo),
}

impl FormSource {
    pub fn delta() -> Self {
        FormSource::Primitive(PrimitiveForm::delta())
    }

    pub fn label(&self) -> String {
        match self {
            FormSource::Primitive(f) => f.label(),
            FormSource::Combo(c) => c.label(),
        }
    }

    pub fn primitives(&self) -> Vec<&PrimitiveForm> {
        match self {
            FormSource::Primitive(f) => vec![f],
            FormSource::Combo(c) => c.terms.iter().map(|(_, f)| f).collect(),
        }
    }

    pub fn is_good_prime(&self, p: u64) -> bool {
        self.primitives().iter().all(|f| f.is_good_prime(p))
    }
}

/// Values held by a coefficient table.
#[derive(Debug, Clone, PartialEq)]
pub enum TableValues {
    Exact(Vec<BigInt>),
    Mod { m: u64, values: Vec<u64> },
}

/// a(n) for n = 1..=n_max from one source, exact or reduced mod a stated m.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub label: String,
    pub n_max: usize,
    pub values: TableValues,
}

impl CoefficientTable {
    pub fn residue(&self, n: usize) -> Option<u64> {
        match &self.values {
            TableValues::Mod { values, .. } => values.get(n).copied(),
            TableValues::Exact(_) => None,
        }
    }

    pub fn exact(&self, n: usize) -> Option<&BigInt> {
        match &self.values {
            TableValues::Exact(v) => v.get(n),
            TableValues::Mod { .. } => None,
        }
    }

    pub fn modulus(&self) -> Option<u64> {
        match &self.values {
            TableValues::Mod { m, .. } => Some(*m),
            TableValues::Exact(_) => None,
        }
    }
}

/// q-expansion of a level-1 eigenform: exact when `modulus` is None
/// (N <= 10^4), residues mod m otherwise.
pub fn level1_expansion(
    spec: &EigenformSpec,
    n_max: usize,
    modulus: Option<u64>,
) -> Result<CoefficientTable> {
    if n_max < 1 {
        return Err(Error::domain("table length must be at least 1"));
    }
    let values = match modulus {
        None => TableValues::Exact(series::level1_exact(spec.weight, n_max)?),
        Some(m) => {
            if m < 2 {
                return Err(Error::domain("modulus must be at least 2"));
            }
            TableValues::Mod { m, values: series::level1_mod(spec.weight, n_max, m)? }
        }
    };
    Ok(CoefficientTable { label: spec.label(), n_max, values })
}

/// a(p) for a weight-2 point-count form at an odd prime of good reduction:
/// -sum_{x mod p} legendre(x^3 + a x + b, p), checked against the Hasse bound.
pub fn weight2_ap(spec: &Weight2Spec, p: u64) -> Result<i64> {
    if p > WEIGHT2_PRIME_LIMIT {
        return Err(Error::resource(format!(
            "weight-2 coefficients are capped at p <= {WEIGHT2_PRIME_LIMIT}"
        )));
    }
    if !is_prime(p) {
        return Err(Error::domain(format!("{p} is not prime")));
    }
    if !spec.is_good_prime(p) {
        return Err(Error::domain(format!(
            "{} has bad reduction at p = {p}",
            spec.label()
        )));
    }
    // Character table: chi[v] = +1 for nonzero squares, -1 for non-squares.
    let pu = p as usize;
    let mut is_sq = vec![false; pu];
    for x in 1..p {
        is_sq[mul_mod(x, x, p) as usize] = true;
    }
    let a = (spec.a).rem_euclid(p as i64) as u64;
    let b = (spec.b).rem_euclid(p as i64) as u64;
    let mut sum: i64 = 0;
    for x in 0..p {
        let x2 = mul_mod(x, x, p);
        let g = (mul_mod(x2, x, p) + mul_mod(a, x, p) + b) % p;
        if g != 0 {
            sum += if is_sq[g as usize] { 1 } else { -1 };
        }
    }
    let ap = -sum;
    let hasse = 2.0 * (p as f64).sqrt();
    if (ap as f64).abs() > hasse {
        return Err(Error::internal(format!(
            "Hasse bound violated: |a({p})| = {} > 2 sqrt({p}) for {}",
            ap.abs(),
            spec.label()
        )));
    }
    Ok(ap)
}

/// a(p^e) from a(p) by the Hecke relation, exact.
pub fn hecke_prime_power_exact(ap: &BigInt, p: u64, k: u32, e: u32) -> BigInt {
    if e == 0 {
        return BigInt::one();
    }
    let pk1 = BigInt::from(p).pow(k - 1);
    let mut prev = BigInt::one();
    let mut cur = ap.clone();
    for _ in 1..e {
        let next = ap * &cur - &pk1 * &prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// a(p^e) from a(p) by the Hecke relation, mod m.
pub fn hecke_prime_power_mod(ap: u64, p: u64, k: u32, e: u32, m: u64) -> u64 {
    if e == 0 {
        return 1 % m;
    }
    let pk1 = pow_mod(p % m, (k - 1) as u64, m);
    let mut prev = 1 % m;
    let mut cur = ap % m;
    for _ in 1..e {
        let next = sub_mod(mul_mod(ap, cur, m), mul_mod(pk1, prev, m), m);
        prev = cur;
        cur = next;
    }
    cur
}

/// Exact a(n): multiplicative over the factorization of n for primitive
/// sources, the rational combination for combos.
pub fn coefficient_at_exact(source: &FormSource, n: u64) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::domain("coefficients are indexed from n = 1"));
    }
    match source {
        FormSource::Primitive(f) => Ok(BigRational::from(primitive_at_exact(f, n)?)),
        FormSource::Combo(c) => {
            let mut acc = BigRational::zero();
            for (coef, f) in &c.terms {
                acc += coef * BigRational::from(primitive_at_exact(f, n)?);
            }
            Ok(acc)
        }
    }
}

fn primitive_at_exact(f: &PrimitiveForm, n: u64) -> Result<BigInt> {
    if n == 1 {
        return Ok(BigInt::one());
    }
    let mut acc = BigInt::one();
    for (p, e) in factor_u64(n)? {
        let ap = f.ap_exact(p)?;
        acc *= hecke_prime_power_exact(&ap, p, f.weight(), e);
    }
    Ok(acc)
}

/// a(n) mod m.
pub fn coefficient_at_mod(source: &FormSource, n: u64, m: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::domain("coefficients are indexed from n = 1"));
    }
    match source {
        FormSource::Primitive(f) => primitive_at_mod(f, n, m),
        FormSource::Combo(c) => {
            let coefs = c.coefficients_mod(m)?;
            let mut acc = 0u64;
            for (cm, (_, f)) in coefs.iter().zip(&c.terms) {
                acc = crate::arith::primes::add_mod(acc, mul_mod(*cm, primitive_at_mod(f, n, m)?, m), m);
            }
            Ok(acc)
        }
    }
}

fn primitive_at_mod(f: &PrimitiveForm, n: u64, m: u64) -> Result<u64> {
    if n == 1 {
        return Ok(1 % m);
    }
    let mut acc = 1 % m;
    for (p, e) in factor_u64(n)? {
        let ap = f.ap_mod(p, m)?;
        acc = mul_mod(acc, hecke_prime_power_mod(ap, p, f.weight(), e, m), m);
    }
    Ok(acc)
}

/// Per-prime residues a(p^e) mod m for e = 1..=max_e, over a prime list.
///
/// Level-1 sources read a(p) off a single shared expansion; weight-2 sources
/// do one character sum per prime. Bad-reduction primes are skipped and the
/// skipped list is returned alongside.
pub struct PrimePowerResidues {
    pub primes: Vec<u64>,
    /// values[i][e-1] = a(primes[i]^e) mod m.
    pub values: Vec<Vec<u64>>,
    pub skipped: Vec<u64>,
}

pub fn prime_power_residues(
    source: &FormSource,
    m: u64,
    primes: &[u64],
    max_e: u32,
) -> Result<PrimePowerResidues> {
    let max_p = primes.iter().copied().max().unwrap_or(1);
    // Shared level-1 tables keyed by weight.
    let mut tables: Vec<(u32, Vec<u64>)> = Vec::new();
    for f in source.primitives() {
        if let PrimitiveForm::Level1(s) = f {
            if !tables.iter().any(|(k, _)| *k == s.weight) {
                tables.push((s.weight, series::level1_mod(s.weight, max_p as usize, m)?));
            }
        }
    }
    let combo_coefs = match source {
        FormSource::Combo(c) => Some(c.coefficients_mod(m)?),
        FormSource::Primitive(_) => None,
    };
    let mut out_primes = Vec::new();
    let mut values = Vec::new();
    let mut skipped = Vec::new();
    for &p in primes {
        if !source.is_good_prime(p) {
            skipped.push(p);
            continue;
        }
        let mut per_power = vec![0u64; max_e as usize];
        let mut terms: Vec<(u64, u32, u64)> = Vec::new(); // (ap, weight, coef)
        let prims = source.primitives();
        for (idx, f) in prims.iter().enumerate() {
            let ap = match f {
                PrimitiveForm::Level1(s) => {
                    let t = &tables.iter().find(|(k, _)| *k == s.weight).unwrap().1;
                    t[p as usize]
                }
                PrimitiveForm::Weight2(s) => weight2_ap(s, p)?.rem_euclid(m as i64) as u64,
            };
            let coef = combo_coefs.as_ref().map(|c| c[idx]).unwrap_or(1 % m);
            terms.push((ap, f.weight(), coef));
        }
        for e in 1..=max_e {
            let mut acc = 0u64;
            for &(ap, k, coef) in &terms {
                let v = hecke_prime_power_mod(ap, p, k, e, m);
                acc = crate::arith::primes::add_mod(acc, mul_mod(coef, v, m), m);
            }
            per_power[(e - 1) as usize] = acc;
        }
        out_primes.push(p);
        values.push(per_power);
    }
    Ok(PrimePowerResidues { primes: out_primes, values, skipped })
}

/// Distinct-residue census N_{f,m,S}(x): the classes a(p^i) mod m hit by
/// p in S, p <= sqrt(x), i = 1..=max_power.
#[derive(Debug, Clone, Serialize)]
pub struct DistinctClassCensus {
    pub modulus: u64,
    pub prime_bound: u64,
    pub primes_used: usize,
    /// per_power[i-1] = #{a(p^i) mod m}.
    pub per_power: Vec<usize>,
    pub union_size: usize,
}

pub fn distinct_class_census(
    source: &FormSource,
    m: u64,
    set: &PrimeSet,
    x: u64,
    max_power: u32,
) -> Result<DistinctClassCensus> {
    if max_power == 0 {
        return Err(Error::domain("max_power must be at least 1"));
    }
    let bound = x.isqrt();
    let primes: Vec<u64> = sieve_primes(bound).into_iter().filter(|&p| set.contains(p)).collect();
    let res = prime_power_residues(source, m, &primes, max_power)?;
    let mut union: std::collections::BTreeSet<u64> = Default::default();
    let mut per_power = Vec::new();
    for i in 0..max_power as usize {
        let classes: std::collections::BTreeSet<u64> =
            res.values.iter().map(|v| v[i]).collect();
        per_power.push(classes.len());
        union.extend(classes);
    }
    Ok(DistinctClassCensus {
        modulus: m,
        prime_bound: bound,
        primes_used: res.primes.len(),
        per_power,
        union_size: union.len(),
    })
}
