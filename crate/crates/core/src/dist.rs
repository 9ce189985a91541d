//! Residue-distribution constants and censuses: the number of ordered
//! M-tuples over Z/mZ with prescribed product (three independent routes),
//! almost-prime counts with prescribed prime-set memberships, and empirical
//! coefficient distributions compared against census predictions.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::{gcd, sieve_primes, FactoredModulus, PrimeSet};
use crate::census::{joint_predicted_density, predicted_density, Census};
use crate::coeff::{prime_power_residues, FormSource};
use crate::error::{Error, Result};

/// Budget: m^2 * M multiply-adds for the convolution routes.
const CONV_BUDGET: u128 = 2_000_000_000;
/// Budget: number of multisets the orbit route may enumerate.
const ORBIT_BUDGET: u128 = 4_000_000;
/// Budget for almost-prime scans.
pub const ALMOST_PRIME_LIMIT: u64 = 10_000_000;

/// Query for counts of M-column matrices over Z/mZ with prescribed row
/// products; r = row_targets.len() rows (r = 1 is the plain tuple count).
#[derive(Debug, Clone, Serialize)]
pub struct ProductCountQuery {
    pub modulus: u64,
    pub tuple_len: u32,
    pub row_targets: Vec<u64>,
}

/// Pointwise product convolution: out[w] = sum_{u v = w} a[u] b[v].
fn mult_conv(a: &[u128], b: &[u128], m: u64) -> Vec<u128> {
    let mut out = vec![0u128; m as usize];
    for (u, &au) in a.iter().enumerate() {
        if au == 0 {
            continue;
        }
        for (v, &bv) in b.iter().enumerate() {
            if bv != 0 {
                out[((u as u64 * v as u64) % m) as usize] += au * bv;
            }
        }
    }
    out
}

/// Distribution of products of M independent uniform elements of Z/mZ,
/// as exact counts: out[w] = #{(b_1..b_M) : prod b_i = w}. Uses the
/// meet-in-the-middle structure (binary splitting of M, joining halves on
/// their product distributions).
pub fn product_distribution(m: u64, tuple_len: u32) -> Result<Vec<u128>> {
    if m < 2 {
        return Err(Error::domain("modulus must be at least 2"));
    }
    if tuple_len == 0 {
        return Err(Error::domain("tuple length must be at least 1"));
    }
    let cost = m as u128 * m as u128 * tuple_len as u128;
    if cost > CONV_BUDGET {
        return Err(Error::resource(format!(
            "product distribution for m = {m}, M = {tuple_len} exceeds the convolution budget"
        )));
    }
    let base = vec![1u128; m as usize];
    let mut acc: Option<Vec<u128>> = None;
    let mut sq = base;
    let mut left = tuple_len;
    while left > 0 {
        if left & 1 == 1 {
            acc = Some(match acc {
                None => sq.clone(),
                Some(a) => mult_conv(&a, &sq, m),
            });
        }
        left >>= 1;
        if left > 0 {
            sq = mult_conv(&sq, &sq, m);
        }
    }
    Ok(acc.unwrap())
}

/// #{(b_1..b_M) in (Z/mZ)^M : prod b_i = a}.
pub fn ordered_product_count(m: u64, tuple_len: u32, target: u64) -> Result<u128> {
    Ok(product_distribution(m, tuple_len)?[(target % m) as usize])
}

/// Ordered count for an r-row query: columns are free coordinatewise, so
/// the matrix count is the product of the per-row tuple counts.
pub fn ordered_product_count_rows(query: &ProductCountQuery) -> Result<u128> {
    if query.row_targets.is_empty() {
        return Err(Error::domain("need at least one row target"));
    }
    let dist = product_distribution(query.modulus, query.tuple_len)?;
    Ok(query
        .row_targets
        .iter()
        .map(|&a| dist[(a % query.modulus) as usize])
        .product())
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitContribution {
    /// Multiset representative: M columns, each of length r, sorted.
    pub representative: Vec<Vec<u64>>,
    /// n_A = product of the factorials of the column multiplicities.
    pub stabilizer_factor: u128,
    /// M! / n_A.
    pub contribution: u128,
}

/// The density constant as an ordered count plus its orbit decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct DensityConstant {
    pub d: u128,
    pub orbit_breakdown: Vec<OrbitContribution>,
}

fn factorial(n: u32) -> u128 {
    (1..=n as u128).product::<u128>().max(1)
}

/// Orbit-formula route: enumerate S_M-orbits of column multisets, filter by
/// row products, and sum M!/n_A. The result is asserted equal to the
/// ordered count; a mismatch would falsify the orbit formula and raises an
/// internal error.
pub fn orbit_formula_count(query: &ProductCountQuery) -> Result<DensityConstant> {
    let m = query.modulus;
    let r = query.row_targets.len();
    let big_m = query.tuple_len;
    if m < 2 || big_m == 0 || r == 0 {
        return Err(Error::domain("need m >= 2, M >= 1, r >= 1"));
    }
    let n_columns = (m as u128).pow(r as u32);
    if n_columns > 1_000_000 {
        return Err(Error::resource("column space too large for orbit enumeration"));
    }
    // Column c encoded as an integer in base m; decode lazily.
    let decode = |mut c: u128| -> Vec<u64> {
        let mut col = vec![0u64; r];
        for slot in col.iter_mut() {
            *slot = (c % m as u128) as u64;
            c /= m as u128;
        }
        col
    };
    let mut breakdown = Vec::new();
    let mut d: u128 = 0;
    let mut visited: u128 = 0;
    // Depth-first over non-decreasing column-code sequences = multisets.
    fn rec(
        start: u128,
        chosen: &mut Vec<u128>,
        n_columns: u128,
        big_m: u32,
        m: u64,
        r: usize,
        targets: &[u64],
        decode: &dyn Fn(u128) -> Vec<u64>,
        d: &mut u128,
        breakdown: &mut Vec<OrbitContribution>,
        visited: &mut u128,
    ) -> Result<()> {
        if chosen.len() == big_m as usize {
            *visited += 1;
            if *visited > ORBIT_BUDGET {
                return Err(Error::resource("orbit enumeration budget exceeded"));
            }
            // Row products.
            let mut prods = vec![1u64; r];
            for &c in chosen.iter() {
                let col = decode(c);
                for (i, &v) in col.iter().enumerate() {
                    prods[i] = (prods[i] * v) % m;
                }
            }
            if prods != targets {
                return Ok(());
            }
            // n_A = prod of multiplicities!.
            let mut n_a: u128 = 1;
            let mut run = 1u32;
            for w in 1..chosen.len() {
                if chosen[w] == chosen[w - 1] {
                    run += 1;
                } else {
                    n_a *= factorial(run);
                    run = 1;
                }
            }
            n_a *= factorial(run);
            let contribution = factorial(big_m) / n_a;
            *d += contribution;
            breakdown.push(OrbitContribution {
                representative: chosen.iter().map(|&c| decode(c)).collect(),
                stabilizer_factor: n_a,
                contribution,
            });
            return Ok(());
        }
        for c in start..n_columns {
            chosen.push(c);
            rec(c, chosen, n_columns, big_m, m, r, targets, decode, d, breakdown, visited)?;
            chosen.pop();
        }
        Ok(())
    }
    let mut chosen = Vec::new();
    rec(
        0,
        &mut chosen,
        n_columns,
        big_m,
        m,
        r,
        &query.row_targets,
        &decode,
        &mut d,
        &mut breakdown,
        &mut visited,
    )?;

    let ordered = ordered_product_count_rows(query)?;
    if d != ordered {
        return Err(Error::internal(format!(
            "orbit formula ({d}) disagrees with ordered count ({ordered}) for {query:?}"
        )));
    }
    Ok(DensityConstant { d, orbit_breakdown: breakdown })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProductCountMethod {
    /// C(n + M - 1, M - 1) * phi(l^e)^{M-1} for target u * l^n, n < e.
    ClosedForm,
    /// Target 0 mod l^e: not covered by the unit-times-power normal form.
    Routed,
}

#[derive(Debug, Clone, Serialize)]
pub struct PrimePowerProductCount {
    pub count: u128,
    pub method: ProductCountMethod,
    /// Valuation n of the target, when the closed form applies.
    pub valuation: Option<u32>,
}

fn binomial_u128(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Number of ordered M-tuples over Z/(l^e)Z with product u * l^n (u a unit,
/// n < e): the weak compositions of n into M parts times phi(l^e)^{M-1}.
/// Target 0 is routed to the convolution count. Cross-asserted against
/// [`ordered_product_count`] whenever the budget allows.
pub fn prime_power_product_count(
    l: u64,
    e: u32,
    target: u64,
    tuple_len: u32,
) -> Result<PrimePowerProductCount> {
    if !crate::arith::is_prime(l) {
        return Err(Error::domain(format!("{l} is not prime")));
    }
    let q = l
        .checked_pow(e)
        .ok_or_else(|| Error::resource("l^e overflows u64"))?;
    if tuple_len == 0 {
        return Err(Error::domain("tuple length must be at least 1"));
    }
    let target = target % q;
    let result = if target == 0 {
        PrimePowerProductCount {
            count: ordered_product_count(q, tuple_len, 0)?,
            method: ProductCountMethod::Routed,
            valuation: None,
        }
    } else {
        let mut n = 0u32;
        let mut t = target;
        while t % l == 0 {
            t /= l;
            n += 1;
        }
        let phi = (q - q / l) as u128;
        let compositions = binomial_u128((n + tuple_len - 1) as u64, (tuple_len - 1) as u64);
        PrimePowerProductCount {
            count: compositions * phi.pow(tuple_len - 1),
            method: ProductCountMethod::ClosedForm,
            valuation: Some(n),
        }
    };
    if (q as u128 * q as u128 * tuple_len as u128) <= CONV_BUDGET {
        let ordered = ordered_product_count(q, tuple_len, target)?;
        if ordered != result.count {
            return Err(Error::internal(format!(
                "prime-power closed form ({}) disagrees with ordered count ({ordered}) \
                 for l^e = {q}, target {target}, M = {tuple_len}",
                result.count
            )));
        }
    }
    Ok(result)
}

/// One membership constraint: exactly `count` of the M prime factors lie in
/// `set`.
#[derive(Debug, Clone)]
pub struct Membership {
    pub set: PrimeSet,
    pub count: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlmostPrimeCensus {
    pub x: u64,
    pub m_factors: u32,
    /// n <= x that are products of exactly M primes counted with
    /// multiplicity, meeting every membership constraint.
    pub product_count: u64,
    /// n <= x with exactly M distinct prime factors (no constraint),
    /// cross-checked by two independent enumeration routes.
    pub distinct_count: u64,
    /// M (prod alpha_j^{a_j} / a_j!) x (log log x)^{M-1} / log x.
    pub main_term: f64,
    /// product_count / main_term.
    pub ratio: f64,
}

/// Exact census of almost-primes up to x.
///
/// `memberships` constrain the multiset of prime factors (with
/// multiplicity); the constraint counts must sum to M and the sets must be
/// pairwise disjoint on the primes encountered. An empty list means no
/// constraint.
pub fn almost_prime_census(
    x: u64,
    m_factors: u32,
    memberships: &[Membership],
) -> Result<AlmostPrimeCensus> {
    if x > ALMOST_PRIME_LIMIT {
        return Err(Error::resource(format!("almost-prime census capped at x = {ALMOST_PRIME_LIMIT}")));
    }
    if m_factors == 0 {
        return Err(Error::domain("M must be at least 1"));
    }
    if !memberships.is_empty() {
        let total: u32 = memberships.iter().map(|c| c.count).sum();
        if total != m_factors {
            return Err(Error::config(format!(
                "membership counts sum to {total}, expected M = {m_factors}"
            )));
        }
    }
    let prime_bound = x >> (m_factors as usize - 1).min(63);
    let primes = sieve_primes(prime_bound.max(2));

    // Route A for the product count: DFS over non-decreasing prime tuples.
    let set_of = |p: u64| -> Result<Option<usize>> {
        let mut hit = None;
        for (i, mem) in memberships.iter().enumerate() {
            if mem.set.contains(p) {
                if hit.is_some() {
                    return Err(Error::config(format!("membership sets overlap at p = {p}")));
                }
                hit = Some(i);
            }
        }
        Ok(hit)
    };
    let mut product_count = 0u64;
    let mut tallies = vec![0u32; memberships.len()];
    // Iterative DFS stack: (prime index, remaining depth, budget).
    fn dfs_products(
        primes: &[u64],
        start: usize,
        depth_left: u32,
        budget: u64,
        memberships: &[Membership],
        tallies: &mut Vec<u32>,
        set_of: &dyn Fn(u64) -> Result<Option<usize>>,
        out: &mut u64,
    ) -> Result<()> {
        if depth_left == 0 {
            if tallies.iter().zip(memberships).all(|(&t, m)| t == m.count) {
                *out += 1;
            }
            return Ok(());
        }
        for i in start..primes.len() {
            let p = primes[i];
            if p > budget {
                break;
            }
            let slot = set_of(p)?;
            // With constraints active, a prime outside every set cannot
            // appear (the membership counts must sum to M).
            if memberships.is_empty() || slot.is_some() {
                if let Some(s) = slot {
                    tallies[s] += 1;
                }
                dfs_products(primes, i, depth_left - 1, budget / p, memberships, tallies, set_of, out)?;
                if let Some(s) = slot {
                    tallies[s] -= 1;
                }
            }
        }
        Ok(())
    }
    dfs_products(&primes, 0, m_factors, x, memberships, &mut tallies, &set_of, &mut product_count)?;

    // Distinct count, route 1: full omega sieve over 1..=x.
    let all_primes = sieve_primes(x.max(2));
    let mut omega = vec![0u8; (x + 1) as usize];
    for &p in &all_primes {
        let mut k = p;
        while k <= x {
            omega[k as usize] += 1;
            k += p;
        }
    }
    let distinct_sieve =
        (2..=x as usize).filter(|&n| omega[n] as u32 == m_factors).count() as u64;

    // Distinct count, route 2: recursive product construction over strictly
    // increasing primes with exponents.
    fn dfs_distinct(
        primes: &[u64],
        start: usize,
        depth_left: u32,
        budget: u64,
        out: &mut u64,
    ) {
        if depth_left == 0 {
            *out += 1;
            return;
        }
        for i in start..primes.len() {
            let p = primes[i];
            if p > budget {
                break;
            }
            let mut b = budget / p;
            loop {
                dfs_distinct(primes, i + 1, depth_left - 1, b, out);
                if b >= p {
                    b /= p;
                } else {
                    break;
                }
            }
        }
    }
    let mut distinct_recursive = 0u64;
    dfs_distinct(&all_primes, 0, m_factors, x, &mut distinct_recursive);

    if distinct_sieve != distinct_recursive {
        return Err(Error::internal(format!(
            "omega-sieve count ({distinct_sieve}) disagrees with recursive count \
             ({distinct_recursive}) at x = {x}, M = {m_factors}"
        )));
    }

    // Asymptotic main term.
    let xf = x as f64;
    let alpha_part: f64 = if memberships.is_empty() {
        1.0 / (1..=m_factors as u64).product::<u64>() as f64
    } else {
        memberships
            .iter()
            .map(|mem| {
                let a = mem.count;
                mem.set.density().powi(a as i32) / (1..=a as u64).product::<u64>().max(1) as f64
            })
            .product()
    };
    let main_term = m_factors as f64 * alpha_part * xf / xf.ln() * xf.ln().ln().powi(m_factors as i32 - 1);
    Ok(AlmostPrimeCensus {
        x,
        m_factors,
        product_count,
        distinct_count: distinct_sieve,
        main_term,
        ratio: product_count as f64 / main_term,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassRow {
    pub residues: Vec<u64>,
    pub count: u64,
    pub freq: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistributionReport {
    pub modulus: u64,
    pub m_factors: u32,
    pub sample_size: u64,
    pub classes: Vec<ClassRow>,
    pub max_abs_dev: f64,
    pub chi_square: f64,
    pub insufficient_sample: bool,
}

/// Empirical joint distribution of (a_1(n), ..., a_r(n)) mod m over
/// squarefree n <= x with exactly M prime factors (primes dividing m or of
/// bad reduction are excluded from the tuples), against the census-backed
/// prediction: the per-prime joint density composed M-fold multiplicatively.
pub fn empirical_coefficient_distribution(
    forms: &[FormSource],
    m: u64,
    m_factors: u32,
    x: u64,
) -> Result<DistributionReport> {
    if forms.is_empty() {
        return Err(Error::domain("need at least one form"));
    }
    if m_factors == 0 || m_factors > 4 {
        return Err(Error::domain("M must be in 1..=4"));
    }
    let r = forms.len();
    let fm = FactoredModulus::new(m)?;
    // Equal weight across every primitive constituent.
    let weights: Vec<u32> = forms
        .iter()
        .flat_map(|f| f.primitives().into_iter().map(|p| p.weight()))
        .collect();
    if !weights.iter().all(|&k| k == weights[0]) {
        return Err(Error::domain(
            "joint distribution predictions need all constituent forms of one weight",
        ));
    }
    let weight = weights[0];

    let prime_bound = x >> (m_factors as usize - 1).min(63);
    let primes: Vec<u64> = sieve_primes(prime_bound.max(2))
        .into_iter()
        .filter(|&p| m % p != 0 && forms.iter().all(|f| f.is_good_prime(p)))
        .collect();

    // Per-prime residues for each coordinate form.
    let mut per_form: Vec<Vec<u64>> = Vec::with_capacity(r);
    for f in forms {
        let res = prime_power_residues(f, m, &primes, 1)?;
        per_form.push(res.values.iter().map(|v| v[0]).collect());
    }

    // Enumerate squarefree n = p_{i1} < ... < p_{iM}, product <= x.
    let mut counts: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
    let mut sample: u64 = 0;
    fn dfs(
        primes: &[u64],
        per_form: &[Vec<u64>],
        start: usize,
        depth_left: u32,
        budget: u64,
        m: u64,
        tuple: &mut Vec<u64>,
        counts: &mut BTreeMap<Vec<u64>, u64>,
        sample: &mut u64,
    ) {
        if depth_left == 0 {
            *counts.entry(tuple.clone()).or_insert(0) += 1;
            *sample += 1;
            return;
        }
        for i in start..primes.len() {
            if primes[i] > budget {
                break;
            }
            let saved = tuple.clone();
            for (c, col) in tuple.iter_mut().enumerate() {
                *col = (*col * per_form[c][i]) % m;
            }
            dfs(primes, per_form, i + 1, depth_left - 1, budget / primes[i], m, tuple, counts, sample);
            *tuple = saved;
        }
    }
    let mut tuple = vec![1 % m; r];
    dfs(&primes, &per_form, 0, m_factors, x, m, &mut tuple, &mut counts, &mut sample);

    // Prediction: per-prime joint density over (Z/m)^r, composed M-fold.
    let census = Census::build(&fm, weight)?;
    let tuple_space: Vec<Vec<u64>> = {
        let mut v: Vec<Vec<u64>> = vec![vec![]];
        for _ in 0..r {
            v = v
                .into_iter()
                .flat_map(|t| {
                    (0..m).map(move |a| {
                        let mut t2 = t.clone();
                        t2.push(a);
                        t2
                    })
                })
                .collect();
        }
        v
    };
    let mut base: BTreeMap<Vec<u64>, BigRational> = BTreeMap::new();
    for t in &tuple_space {
        let d = match (r, &forms[0]) {
            (1, FormSource::Combo(c)) => {
                // Density of {p : sum c_i a_i(p) = t} as a sum of joint
                // densities over constituent trace tuples.
                let coefs = c.coefficients_mod(m)?;
                let rr = c.terms.len();
                let mut acc = BigRational::zero();
                let mut idx = vec![0u64; rr];
                loop {
                    let s: u64 = idx
                        .iter()
                        .zip(&coefs)
                        .map(|(&a, &cm)| (a as u128 * cm as u128 % m as u128) as u64)
                        .sum::<u64>()
                        % m;
                    if s == t[0] {
                        acc += joint_predicted_density(&census, &idx)?;
                    }
                    // Odometer.
                    let mut pos = 0;
                    loop {
                        if pos == rr {
                            break;
                        }
                        idx[pos] += 1;
                        if idx[pos] < m {
                            break;
                        }
                        idx[pos] = 0;
                        pos += 1;
                    }
                    if pos == rr {
                        break;
                    }
                }
                acc
            }
            (1, FormSource::Primitive(_)) => predicted_density(&census, t[0])?,
            _ => {
                // r >= 2: plain trace tuples (combos rejected above r = 1).
                if forms.iter().any(|f| matches!(f, FormSource::Combo(_))) {
                    return Err(Error::domain(
                        "joint r >= 2 distributions take primitive forms only",
                    ));
                }
                joint_predicted_density(&census, t)?
            }
        };
        base.insert(t.clone(), d);
    }
    // M-fold multiplicative composition of the per-prime density.
    let mut pred = base.clone();
    for _ in 1..m_factors {
        let mut next: BTreeMap<Vec<u64>, BigRational> = BTreeMap::new();
        for (t1, d1) in &pred {
            for (t2, d2) in &base {
                let key: Vec<u64> =
                    t1.iter().zip(t2).map(|(&a, &b)| (a as u128 * b as u128 % m as u128) as u64).collect();
                *next.entry(key).or_insert_with(BigRational::zero) += d1 * d2;
            }
        }
        pred = next;
    }

    let n_classes = tuple_space.len() as u64;
    let mut classes = Vec::with_capacity(tuple_space.len());
    let mut max_abs_dev: f64 = 0.0;
    let mut chi_square = 0.0;
    for t in &tuple_space {
        let count = counts.get(t).copied().unwrap_or(0);
        let freq = if sample > 0 { count as f64 / sample as f64 } else { 0.0 };
        let p = pred[t].to_f64().unwrap_or(0.0);
        max_abs_dev = max_abs_dev.max((freq - p).abs());
        let expected = sample as f64 * p;
        if expected > 0.0 {
            chi_square += (count as f64 - expected).powi(2) / expected;
        }
        classes.push(ClassRow { residues: t.clone(), count, freq, predicted: p });
    }
    // Mass sanity on the prediction itself.
    let mass = pred.values().fold(BigRational::zero(), |acc, v| acc + v);
    if !mass.is_one() {
        return Err(Error::internal(format!("composed prediction has mass {mass}, not 1")));
    }
    Ok(DistributionReport {
        modulus: m,
        m_factors,
        sample_size: sample,
        classes,
        max_abs_dev,
        chi_square,
        insufficient_sample: sample < 30 * n_classes,
    })
}

/// d is invariant under multiplying the target by a unit (coordinate
/// rescaling is a bijection on tuples); exposed for the property suite.
pub fn unit_orbit_invariance(m: u64, tuple_len: u32) -> Result<bool> {
    let dist = product_distribution(m, tuple_len)?;
    for a in 0..m {
        for u in 1..m {
            if gcd(u, m) == 1 && dist[((a * u) % m) as usize] != dist[(a % m) as usize] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
