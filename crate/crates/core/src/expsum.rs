//! Exponential sums over Z/mZ with multiplicative structure, the T_s(a)
//! representation counts (computed by two independent routes), the bilinear
//! bound max_lambda |sum e(lambda a1 a2 / m)| <= sqrt(m |A1| |A2|),
//! multilinear bound reports, sumset/productset growth, and solution counts
//! of power-sum systems over prime fields.
//!
//! Every sum S(lambda) is evaluated through the m-bin product distribution
//! N(v) = #{tuples with product v}, never by raw tuple enumeration, so the
//! cost scales with m * sum |A_i| instead of prod |A_i|.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::arith::{gcd, is_prime, mul_mod, FactoredModulus};
use crate::error::{Error, Result};

/// Modulus ceiling for full per-lambda scans (cost O(m^2)).
pub const LAMBDA_SCAN_LIMIT: u64 = 4096;
/// Mass ceiling below which the DFT route must round to the exact integer.
/// Above it f64 cannot represent the counts exactly and only relative
/// agreement is enforced.
pub const EXACT_ROUNDING_MASS: f64 = (1u64 << 50) as f64;

/// A subset of Z/mZ, sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResidueSubset {
    pub modulus: u64,
    pub elements: Vec<u64>,
    pub unit_only: bool,
}

impl ResidueSubset {
    pub fn new(modulus: u64, elements: &[u64]) -> Result<Self> {
        if modulus < 2 {
            return Err(Error::domain("modulus must be at least 2"));
        }
        let mut v: Vec<u64> = elements.iter().map(|&x| x % modulus).collect();
        v.sort_unstable();
        v.dedup();
        if v.is_empty() {
            return Err(Error::domain("residue subset must be nonempty"));
        }
        let unit_only = v.iter().all(|&x| gcd(x, modulus) == 1);
        Ok(ResidueSubset { modulus, elements: v, unit_only })
    }

    pub fn full(modulus: u64) -> Self {
        ResidueSubset {
            modulus,
            elements: (0..modulus).collect(),
            unit_only: modulus == 1,
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn reduce_mod(&self, l: u64) -> ResidueSubset {
        ResidueSubset::new(l, &self.elements.iter().map(|&x| x % l).collect::<Vec<_>>())
            .expect("nonempty stays nonempty")
    }
}

fn check_same_modulus(sets: &[&ResidueSubset], m: u64) -> Result<()> {
    if sets.is_empty() {
        return Err(Error::domain("need at least one set"));
    }
    for s in sets {
        if s.modulus != m {
            return Err(Error::domain(format!(
                "set has modulus {}, expected {m}",
                s.modulus
            )));
        }
    }
    Ok(())
}

/// N(v) = number of tuples (a_1..a_w) with prod a_i = v, exact.
pub fn product_counts(sets: &[&ResidueSubset], m: u64) -> Result<Vec<u128>> {
    check_same_modulus(sets, m)?;
    let mut counts = vec![0u128; m as usize];
    for &a in &sets[0].elements {
        counts[a as usize] += 1;
    }
    for set in &sets[1..] {
        let mut next = vec![0u128; m as usize];
        for (v, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for &a in &set.elements {
                next[mul_mod(v as u64, a, m) as usize] += c;
            }
        }
        counts = next;
    }
    Ok(counts)
}

/// S(lambda) = sum over tuples of e(lambda a^(1)...a^(w) / m), through the
/// product distribution.
pub fn exp_sum(lambda: u64, sets: &[&ResidueSubset], m: u64) -> Result<Complex64> {
    let counts = product_counts(sets, m)?;
    Ok(exp_sum_from_counts(lambda, &counts, m))
}

fn exp_sum_from_counts(lambda: u64, counts: &[u128], m: u64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (v, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let phase = TAU * ((lambda % m) as u128 * v as u128 % m as u128) as f64 / m as f64;
        acc += Complex64::new(phase.cos(), phase.sin()) * c as f64;
    }
    acc
}

/// |S(lambda)| for every lambda in [0, m).
pub fn exp_sum_magnitudes(sets: &[&ResidueSubset], m: u64) -> Result<Vec<f64>> {
    if m > LAMBDA_SCAN_LIMIT {
        return Err(Error::resource(format!(
            "per-lambda scan is capped at m <= {LAMBDA_SCAN_LIMIT}"
        )));
    }
    let counts = product_counts(sets, m)?;
    Ok((0..m).map(|l| exp_sum_from_counts(l, &counts, m).norm()).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpSumReport {
    pub modulus: u64,
    pub set_sizes: Vec<usize>,
    /// |S(lambda)| for lambda = 0..m-1 (the CLI elides this for m > 10^3).
    pub per_lambda: Vec<f64>,
    /// argmax over lambda in [1, m).
    pub argmax: u64,
    pub max_magnitude: f64,
    pub bound: f64,
    pub bound_satisfied: bool,
}

/// Checks the bilinear estimate max_{lambda != 0} |S(lambda)| <=
/// sqrt(m |A1| |A2|) with 1e-6 relative slack. A violation is reported as an
/// internal error: it would falsify a classical inequality and is treated as
/// an implementation bug first.
pub fn bilinear_bound_check(a1: &ResidueSubset, a2: &ResidueSubset, m: u64) -> Result<ExpSumReport> {
    let sets = [a1, a2];
    let per_lambda = exp_sum_magnitudes(&sets, m)?;
    let (argmax, max_magnitude) = per_lambda
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &v)| (i as u64, v))
        .fold((1u64, 0.0f64), |best, cur| if cur.1 > best.1 { cur } else { best });
    let bound = (m as f64 * a1.len() as f64 * a2.len() as f64).sqrt();
    let bound_satisfied = max_magnitude <= bound * (1.0 + 1e-6);
    let report = ExpSumReport {
        modulus: m,
        set_sizes: vec![a1.len(), a2.len()],
        per_lambda,
        argmax,
        max_magnitude,
        bound,
        bound_satisfied,
    };
    if !bound_satisfied {
        return Err(Error::internal(format!(
            "bilinear bound violated at m = {m}, lambda = {argmax}: |S| = {max_magnitude} > {bound}; \
             witness sets {:?} / {:?}",
            a1.elements, a2.elements
        )));
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct MultilinearReport {
    pub modulus: u64,
    pub omega: usize,
    pub set_sizes: Vec<usize>,
    /// Prime factor of m realizing the size hypothesis (None when it fails
    /// everywhere).
    pub factor: Option<u64>,
    pub beta: f64,
    pub hypothesis_failed: bool,
    /// beta / (8 ln(8/beta) + 4) for omega = 3, 0.45 beta / 2^omega above.
    pub exponent: f64,
    /// prod |A_i| / l^exponent.
    pub theoretical_scale: f64,
    pub max_over_units: f64,
    pub max_over_nonzero: f64,
    /// max_over_units / theoretical_scale; report-only, the cited bounds
    /// carry unspecified absolute constants.
    pub realized_ratio: f64,
}

/// Report the realized multilinear cancellation against the omega = 3 and
/// omega >= 4 bound shapes. No assertion is made: the compared bounds hold
/// up to absolute constants the source does not make explicit.
pub fn multilinear_bound_report(
    sets: &[&ResidueSubset],
    m: u64,
    beta: Option<f64>,
) -> Result<MultilinearReport> {
    let omega = sets.len();
    if omega < 3 {
        return Err(Error::domain("multilinear report needs omega >= 3"));
    }
    check_same_modulus(sets, m)?;
    let fm = FactoredModulus::new(m)?;
    if fm.omega > 1 && !fm.squarefree {
        return Err(Error::domain("composite path needs squarefree m"));
    }
    if fm.omega > 1 && !sets.iter().all(|s| s.unit_only) {
        return Err(Error::domain("composite path needs unit-only sets"));
    }

    // Hypothesis per prime factor l: component sizes satisfy
    //   |A1||A2||A3|            >= l^{1+beta}   (omega = 3)
    //   |A1||A2| (|A3|...)^{1/81} > l^{1+beta}  (omega >= 4)
    // realized beta_l = log_l(product) - 1; pick the best factor.
    let mut best: Option<(u64, f64)> = None;
    for &(l, _) in &fm.factors {
        let comp_sizes: Vec<f64> =
            sets.iter().map(|s| s.reduce_mod(l).len() as f64).collect();
        let hyp_product: f64 = if omega == 3 {
            comp_sizes.iter().product()
        } else {
            comp_sizes[0]
                * comp_sizes[1]
                * comp_sizes[2..].iter().product::<f64>().powf(1.0 / 81.0)
        };
        let beta_l = hyp_product.ln() / (l as f64).ln() - 1.0;
        if best.map(|(_, b)| beta_l > b).unwrap_or(true) {
            best = Some((l, beta_l));
        }
    }
    let (factor, realized_beta) = best.expect("m >= 2 has a prime factor");
    let beta = beta.unwrap_or(realized_beta);
    let hypothesis_failed = realized_beta <= 0.0 || beta <= 0.0;

    let exponent = if hypothesis_failed {
        0.0
    } else if omega == 3 {
        beta / (8.0 * (8.0 / beta).ln() + 4.0)
    } else {
        0.45 * beta / 2f64.powi(omega as i32)
    };
    let sizes_product: f64 = sets.iter().map(|s| s.len() as f64).product();
    let theoretical_scale = sizes_product / (factor as f64).powf(exponent);

    let mags = exp_sum_magnitudes(sets, m)?;
    let mut max_units = 0.0f64;
    let mut max_nonzero = 0.0f64;
    for (l, &v) in mags.iter().enumerate().skip(1) {
        max_nonzero = max_nonzero.max(v);
        if gcd(l as u64, m) == 1 {
            max_units = max_units.max(v);
        }
    }
    Ok(MultilinearReport {
        modulus: m,
        omega,
        set_sizes: sets.iter().map(|s| s.len()).collect(),
        factor: (!hypothesis_failed).then_some(factor),
        beta,
        hypothesis_failed,
        exponent,
        theoretical_scale,
        max_over_units: max_units,
        max_over_nonzero: max_nonzero,
        realized_ratio: if theoretical_scale > 0.0 { max_units / theoretical_scale } else { f64::NAN },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TsReport {
    pub modulus: u64,
    pub s: u32,
    pub set_sizes: Vec<usize>,
    /// T_s(a) for a = 0..m-1, from the exact convolution route.
    pub counts: Vec<u128>,
    /// Largest |DFT - exact| over a.
    pub max_route_deviation: f64,
    /// (1/m) sum_{lambda != 0} |S(lambda)|^s, the exact error radius around
    /// the main term (prod |A_i|)^s / m.
    pub error_radius: f64,
    /// max_a |T_s(a) m / (prod |A_i|)^s - 1|; < 1 certifies T_s(a) > 0
    /// everywhere.
    pub max_relative_deviation: f64,
    pub equidistribution_certified: bool,
}

/// T_s(a) for all a, by exact s-fold additive convolution of the product
/// distribution, cross-checked against the DFT identity
/// T_s(a) = (1/m) sum_lambda S(lambda)^s e(-lambda a / m), and bounded by
/// the exact error radius behind the counting formula.
pub fn t_s_report(sets: &[&ResidueSubset], s: u32, m: u64) -> Result<TsReport> {
    if s == 0 {
        return Err(Error::domain("s must be at least 1"));
    }
    if m > LAMBDA_SCAN_LIMIT {
        return Err(Error::resource(format!("T_s scan capped at m <= {LAMBDA_SCAN_LIMIT}")));
    }
    let n = product_counts(sets, m)?;
    let sizes_product: f64 = sets.iter().map(|s| s.len() as f64).product();
    let mass = sizes_product.powi(s as i32);
    if mass > u128::MAX as f64 / 2.0 {
        return Err(Error::resource("(prod |A_i|)^s overflows the exact route"));
    }

    // Route 1: additive convolution, exact integers.
    let mut counts = n.clone();
    for _ in 1..s {
        let mut next = vec![0u128; m as usize];
        for (a, &ca) in counts.iter().enumerate() {
            if ca == 0 {
                continue;
            }
            for (b, &cb) in n.iter().enumerate() {
                if cb != 0 {
                    next[(a + b) % m as usize] += ca * cb;
                }
            }
        }
        counts = next;
    }

    // Route 2: DFT.
    let spectra: Vec<Complex64> = (0..m).map(|l| exp_sum_from_counts(l, &n, m)).collect();
    let mut max_route_deviation = 0.0f64;
    for a in 0..m {
        let mut acc = Complex64::new(0.0, 0.0);
        for (l, sval) in spectra.iter().enumerate() {
            let phase = -TAU * (l as u128 * a as u128 % m as u128) as f64 / m as f64;
            acc += sval.powu(s) * Complex64::new(phase.cos(), phase.sin());
        }
        let dft = acc.re / m as f64;
        max_route_deviation = max_route_deviation.max((dft - counts[a as usize] as f64).abs());
    }
    let route_slack = if mass <= EXACT_ROUNDING_MASS { 0.5 } else { mass * 1e-10 };
    if max_route_deviation > route_slack {
        return Err(Error::internal(format!(
            "T_s routes disagree: max deviation {max_route_deviation} exceeds slack {route_slack} \
             (m = {m}, s = {s})"
        )));
    }

    // Exact error bound behind the counting formula.
    let error_radius: f64 =
        spectra.iter().skip(1).map(|sv| sv.norm().powi(s as i32)).sum::<f64>() / m as f64;
    let main = mass / m as f64;
    for (a, &c) in counts.iter().enumerate() {
        let dev = (c as f64 - main).abs();
        if dev > error_radius * (1.0 + 1e-6) + 0.5 {
            return Err(Error::internal(format!(
                "T_s({a}) deviates {dev} from the main term, beyond the exact radius {error_radius}"
            )));
        }
    }
    let max_relative_deviation = counts
        .iter()
        .map(|&c| (c as f64 * m as f64 / mass - 1.0).abs())
        .fold(0.0f64, f64::max);
    Ok(TsReport {
        modulus: m,
        s,
        set_sizes: sets.iter().map(|s| s.len()).collect(),
        counts,
        max_route_deviation,
        error_radius,
        max_relative_deviation,
        equidistribution_certified: max_relative_deviation < 1.0,
    })
}

/// Certifies sums of s products from A1 x A2 hit every residue class:
/// requires |A1||A2| >= m^{1+beta} with beta > 0 and s > 2/beta, then
/// demands max_a |T_s(a) m / (|A1||A2|)^s - 1| < 1 (a hard assertion on the
/// instances the solver feeds it).
#[derive(Debug, Clone, Serialize)]
pub struct EquidistributionCertificate {
    pub modulus: u64,
    pub beta: f64,
    pub s_threshold: f64,
    pub s: u32,
    pub max_relative_deviation: f64,
    pub certified: bool,
}

pub fn equidistribution_certificate(
    a1: &ResidueSubset,
    a2: &ResidueSubset,
    s: u32,
    m: u64,
) -> Result<EquidistributionCertificate> {
    let beta =
        ((a1.len() as f64 * a2.len() as f64).ln() / (m as f64).ln()) - 1.0;
    if beta <= 0.0 {
        return Err(Error::domain(format!(
            "|A1||A2| = {} is below m^{{1+beta}} for any beta > 0 (m = {m})",
            a1.len() * a2.len()
        )));
    }
    let s_threshold = 2.0 / beta;
    if (s as f64) <= s_threshold {
        return Err(Error::domain(format!(
            "s = {s} does not exceed 2/beta = {s_threshold}"
        )));
    }
    let report = t_s_report(&[a1, a2], s, m)?;
    let cert = EquidistributionCertificate {
        modulus: m,
        beta,
        s_threshold,
        s,
        max_relative_deviation: report.max_relative_deviation,
        certified: report.equidistribution_certified,
    };
    if !cert.certified {
        return Err(Error::internal(format!(
            "equidistribution certificate failed: relative deviation {} >= 1 at m = {m}, s = {s}",
            cert.max_relative_deviation
        )));
    }
    Ok(cert)
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub prime: u64,
    pub set_size: usize,
    pub sumset_size: usize,
    pub productset_size: usize,
    pub max_size: usize,
    /// log(max) / log |A|, the realized growth exponent.
    pub exponent: f64,
}

pub fn sumset(a: &ResidueSubset) -> ResidueSubset {
    let m = a.modulus;
    let mut seen = vec![false; m as usize];
    for &x in &a.elements {
        for &y in &a.elements {
            seen[((x + y) % m) as usize] = true;
        }
    }
    let elems: Vec<u64> = (0..m).filter(|&v| seen[v as usize]).collect();
    ResidueSubset::new(m, &elems).expect("sumset of nonempty set is nonempty")
}

pub fn productset(a: &ResidueSubset) -> ResidueSubset {
    let m = a.modulus;
    let mut seen = vec![false; m as usize];
    for &x in &a.elements {
        for &y in &a.elements {
            seen[mul_mod(x, y, m) as usize] = true;
        }
    }
    let elems: Vec<u64> = (0..m).filter(|&v| seen[v as usize]).collect();
    ResidueSubset::new(m, &elems).expect("productset of nonempty set is nonempty")
}

/// Exact |A+A|, |A.A| over F_l with the realized growth exponent. The
/// Cauchy-Davenport floor |A+A| >= min(l, 2|A|-1) and the unit floor
/// |A.A| >= |A| (0 not in A) are theorems over prime fields; violations are
/// internal errors.
pub fn growth_report(a: &ResidueSubset, l: u64) -> Result<GrowthReport> {
    if !is_prime(l) {
        return Err(Error::domain(format!("{l} is not prime")));
    }
    if a.modulus != l {
        return Err(Error::domain("set modulus must equal l"));
    }
    let sum = sumset(a);
    let prod = productset(a);
    let floor = (2 * a.len() - 1).min(l as usize);
    if sum.len() < floor {
        return Err(Error::internal(format!(
            "|A+A| = {} beats the Cauchy-Davenport floor {floor} for A = {:?} in F_{l}",
            sum.len(),
            a.elements
        )));
    }
    if !a.elements.contains(&0) && prod.len() < a.len() {
        return Err(Error::internal(format!(
            "|A.A| = {} < |A| = {} without 0 in A",
            prod.len(),
            a.len()
        )));
    }
    let max_size = sum.len().max(prod.len());
    Ok(GrowthReport {
        prime: l,
        set_size: a.len(),
        sumset_size: sum.len(),
        productset_size: prod.len(),
        max_size,
        exponent: if a.len() > 1 { (max_size as f64).ln() / (a.len() as f64).ln() } else { f64::NAN },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerSumReport {
    pub prime: u64,
    pub r: usize,
    /// Solutions of sum_i c_i x_i^j = a_j for j = 1..=r+1, by full scan.
    pub solution_count: u64,
    /// Solutions of the first r equations only.
    pub partial_count: u64,
    /// Whether sum_{i in S} c_i != 0 for every nonempty S (the
    /// zero-dimensionality condition).
    pub subset_sum_condition: bool,
}

/// Exhaustive count of solutions x in F_l^r of the system
/// c_1 x_1^j + ... + c_r x_r^j = a_j, j = 1..=r+1.
pub fn power_sum_solution_count(c: &[u64], targets: &[u64], l: u64) -> Result<PowerSumReport> {
    let r = c.len();
    if targets.len() != r + 1 {
        return Err(Error::domain(format!(
            "need r+1 = {} targets, got {}",
            r + 1,
            targets.len()
        )));
    }
    if !is_prime(l) {
        return Err(Error::domain(format!("{l} is not prime")));
    }
    if l > 31 || r > 3 || r == 0 {
        return Err(Error::resource("power-sum scan capped at l <= 31, 1 <= r <= 3"));
    }
    let mut subset_sum_condition = true;
    for mask in 1u32..(1 << r) {
        let mut sum = 0u64;
        for (i, &ci) in c.iter().enumerate() {
            if mask & (1 << i) != 0 {
                sum = (sum + ci) % l;
            }
        }
        if sum == 0 {
            subset_sum_condition = false;
        }
    }
    let total = (l as u64).pow(r as u32);
    let mut solution_count = 0u64;
    let mut partial_count = 0u64;
    for code in 0..total {
        let mut x = vec![0u64; r];
        let mut cc = code;
        for slot in x.iter_mut() {
            *slot = cc % l;
            cc /= l;
        }
        let mut ok_partial = true;
        let mut ok_full = true;
        for (j, &aj) in targets.iter().enumerate() {
            let mut sum = 0u64;
            for (i, &ci) in c.iter().enumerate() {
                sum = (sum + mul_mod(ci % l, crate::arith::pow_mod(x[i], (j + 1) as u64, l), l)) % l;
            }
            if sum != aj % l {
                if j < r {
                    ok_partial = false;
                }
                ok_full = false;
                break;
            }
        }
        if ok_partial {
            partial_count += 1;
        }
        if ok_full {
            solution_count += 1;
        }
    }
    Ok(PowerSumReport { prime: l, r, solution_count, partial_count, subset_sum_condition })
}

/// Parseval identity sum_lambda |S(lambda)|^2 = m sum_v N(v)^2, evaluated
/// with 1e-6 relative slack; exposed for the property suite.
pub fn parseval_check(sets: &[&ResidueSubset], m: u64) -> Result<f64> {
    let counts = product_counts(sets, m)?;
    let mags = exp_sum_magnitudes(sets, m)?;
    let lhs: f64 = mags.iter().map(|&v| v * v).sum();
    let rhs: f64 = m as f64 * counts.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>();
    let rel = (lhs - rhs).abs() / rhs.max(1.0);
    if rel > 1e-6 {
        return Err(Error::internal(format!("Parseval identity off by relative {rel}")));
    }
    Ok(rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn set(m: u64, elems: &[u64]) -> ResidueSubset {
        ResidueSubset::new(m, elems).unwrap()
    }

    /// Raw tuple-enumeration oracle for S(lambda), independent of the
    /// product-distribution path.
    fn exp_sum_oracle(lambda: u64, sets: &[&ResidueSubset], m: u64) -> Complex64 {
        fn rec(
            sets: &[&ResidueSubset],
            idx: usize,
            prod: u64,
            lambda: u64,
            m: u64,
            acc: &mut Complex64,
        ) {
            if idx == sets.len() {
                let phase = TAU * (lambda as f64) * (prod as f64) / m as f64;
                *acc += Complex64::new(phase.cos(), phase.sin());
                return;
            }
            for &a in &sets[idx].elements {
                rec(sets, idx + 1, mul_mod(prod, a, m), lambda, m, acc);
            }
        }
        let mut acc = Complex64::new(0.0, 0.0);
        rec(sets, 0, 1 % m, lambda, m, &mut acc);
        acc
    }

    #[test]
    fn exp_sum_matches_tuple_oracle() {
        let a1 = set(12, &[1, 3, 5, 8]);
        let a2 = set(12, &[2, 7, 11]);
        let a3 = set(12, &[4, 6]);
        for lambda in 0..12 {
            let fast = exp_sum(lambda, &[&a1, &a2, &a3], 12).unwrap();
            let slow = exp_sum_oracle(lambda, &[&a1, &a2, &a3], 12);
            assert!((fast - slow).norm() < 1e-9, "lambda={lambda}");
        }
    }

    #[test]
    fn exp_sum_lambda_zero_and_conjugate_symmetry() {
        let a1 = set(11, &[1, 2, 3, 4]);
        let a2 = set(11, &[5, 6, 7]);
        let s0 = exp_sum(0, &[&a1, &a2], 11).unwrap();
        assert!((s0.re - 12.0).abs() < 1e-9 && s0.im.abs() < 1e-12);
        let mags = exp_sum_magnitudes(&[&a1, &a2], 11).unwrap();
        for l in 1..11u64 {
            assert!((mags[l as usize] - mags[(11 - l) as usize]).abs() < 1e-9);
        }
    }

    #[test]
    fn full_group_orthogonality() {
        // A1 = A2 = Z/7: |S(1)| = 7.
        let a = ResidueSubset::full(7);
        let v = exp_sum(1, &[&a, &a], 7).unwrap();
        assert!((v.norm() - 7.0).abs() < 1e-9);
        // And the bilinear bound holds: 7 <= sqrt(343).
        let rep = bilinear_bound_check(&a, &a, 7).unwrap();
        assert!(rep.bound_satisfied);
        assert!((rep.max_magnitude - 7.0).abs() < 1e-9);
        assert!((rep.bound - 343f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bilinear_bound_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        // Singletons: |S| = |A2| always; inequality still holds.
        for _ in 0..50 {
            let m = rng.gen_range(5..200u64);
            let x = rng.gen_range(0..m);
            let a1 = set(m, &[x]);
            let elems: Vec<u64> = (0..rng.gen_range(1..=m.min(30))).map(|_| rng.gen_range(0..m)).collect();
            let a2 = set(m, &elems);
            bilinear_bound_check(&a1, &a2, m).unwrap();
        }
        // Random pairs in Z/101 of size 10.
        for _ in 0..20 {
            let m = 101u64;
            let mk = |rng: &mut ChaCha8Rng| {
                let elems: Vec<u64> = (0..10).map(|_| rng.gen_range(0..m)).collect();
                set(m, &elems)
            };
            let a1 = mk(&mut rng);
            let a2 = mk(&mut rng);
            bilinear_bound_check(&a1, &a2, m).unwrap();
        }
    }

    #[test]
    fn t2_fixture_mod_3() {
        let a = set(3, &[1, 2]);
        let rep = t_s_report(&[&a, &a], 2, 3).unwrap();
        assert_eq!(rep.counts, vec![8, 4, 4]);
        assert!(rep.max_route_deviation < 0.5);
    }

    #[test]
    fn t_s_mass_and_degenerate_cases() {
        let a1 = set(10, &[1, 3, 7, 9, 2]);
        let a2 = set(10, &[4, 5, 6]);
        let rep = t_s_report(&[&a1, &a2], 3, 10).unwrap();
        let mass: u128 = rep.counts.iter().sum();
        assert_eq!(mass, 15u128.pow(3));
        // s = 1, omega = 1, A = Z/m: every class hit exactly once.
        let full = ResidueSubset::full(9);
        let rep = t_s_report(&[&full], 1, 9).unwrap();
        assert!(rep.counts.iter().all(|&c| c == 1));
    }

    #[test]
    fn t_s_randomized_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..30 {
            let m = rng.gen_range(5..300u64);
            let omega = rng.gen_range(1..=3usize);
            let s = rng.gen_range(1..=4u32);
            let sets: Vec<ResidueSubset> = (0..omega)
                .map(|_| {
                    let size = rng.gen_range(1..=12u64);
                    let elems: Vec<u64> = (0..size).map(|_| rng.gen_range(0..m)).collect();
                    set(m, &elems)
                })
                .collect();
            let refs: Vec<&ResidueSubset> = sets.iter().collect();
            let rep = t_s_report(&refs, s, m).unwrap();
            let mass: u128 = rep.counts.iter().sum();
            let expect: u128 = refs.iter().map(|s| s.len() as u128).product::<u128>().pow(s);
            assert_eq!(mass, expect);
        }
    }

    #[test]
    fn parseval_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let m = rng.gen_range(4..250u64);
            let omega = rng.gen_range(1..=3usize);
            let sets: Vec<ResidueSubset> = (0..omega)
                .map(|_| {
                    let size = rng.gen_range(1..=15u64);
                    let elems: Vec<u64> = (0..size).map(|_| rng.gen_range(0..m)).collect();
                    set(m, &elems)
                })
                .collect();
            let refs: Vec<&ResidueSubset> = sets.iter().collect();
            parseval_check(&refs, m).unwrap();
        }
    }

    #[test]
    fn multilinear_report_shapes() {
        // omega = 3 over F_11^* three times.
        let units = set(11, &(1..11).collect::<Vec<_>>());
        let rep = multilinear_bound_report(&[&units, &units, &units], 11, None).unwrap();
        assert!(!rep.hypothesis_failed);
        assert_eq!(rep.factor, Some(11));
        assert!(rep.beta > 0.0 && rep.realized_ratio.is_finite());

        // Squarefree m = 77: hypothesis named per factor.
        let u77: Vec<u64> = (1..77).filter(|&x| gcd(x, 77) == 1).collect();
        let a = set(77, &u77);
        let rep = multilinear_bound_report(&[&a, &a, &a], 77, None).unwrap();
        assert!(!rep.hypothesis_failed);
        assert!(rep.factor == Some(7) || rep.factor == Some(11));

        // Tiny sets: hypothesis fails and is flagged.
        let tiny = set(77, &[1]);
        let rep = multilinear_bound_report(&[&tiny, &tiny, &tiny], 77, None).unwrap();
        assert!(rep.hypothesis_failed);
    }

    #[test]
    fn sumset_productset_examples() {
        // A = {1,2} in F_5.
        let a = set(5, &[1, 2]);
        assert_eq!(sumset(&a).elements, vec![2, 3, 4]);
        assert_eq!(productset(&a).elements, vec![1, 2, 4]);
        let rep = growth_report(&a, 5).unwrap();
        assert_eq!(rep.max_size, 3); // = 2|A| - 1

        // Arithmetic progression of length 10 in F_101: |A+A| = 19.
        let ap = set(101, &(1..=10).collect::<Vec<_>>());
        let rep = growth_report(&ap, 101).unwrap();
        assert_eq!(rep.sumset_size, 19);
        assert!(rep.max_size >= 19);
        assert!(rep.productset_size > 19); // products spread out

        // A = F_l saturates both.
        let full = ResidueSubset::full(13);
        let rep = growth_report(&full, 13).unwrap();
        assert_eq!(rep.sumset_size, 13);
        assert_eq!(rep.productset_size, 13);
    }

    #[test]
    fn growth_floors_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for &l in &[11u64, 31, 101, 199] {
            for _ in 0..20 {
                let size = rng.gen_range(1..=l.min(40));
                let elems: Vec<u64> = (0..size).map(|_| rng.gen_range(0..l)).collect();
                let a = set(l, &elems);
                // Floors are asserted inside; Err would mean a violation.
                growth_report(&a, l).unwrap();
            }
        }
    }

    #[test]
    fn power_sum_system_examples() {
        // l = 5, r = 2, c = (1,1): x + y = 2, x^2 + y^2 = 4 has solutions
        // {(0,2),(2,0)}; the third equation filters further.
        let rep = power_sum_solution_count(&[1, 1], &[2, 4, 3], 5).unwrap();
        assert_eq!(rep.partial_count, 2);
        assert!(rep.solution_count <= 2);
        let rep = power_sum_solution_count(&[1, 1], &[2, 4, 8], 5).unwrap();
        // x^3 + y^3 = 8 = 3: (0,2): 8 = 3 mod 5 yes. (2,0) same. Both pass.
        assert_eq!(rep.solution_count, 2);
        assert!(rep.subset_sum_condition);

        // c with a vanishing subset sum is flagged.
        let rep = power_sum_solution_count(&[2, 3], &[0, 0, 0], 5).unwrap();
        assert!(!rep.subset_sum_condition);

        // r = 1: x^j = a_j has at most one solution once a_1 fixes x.
        for a1 in 0..7u64 {
            let rep = power_sum_solution_count(&[1], &[a1, (a1 * a1) % 7], 7).unwrap();
            assert_eq!(rep.solution_count, 1);
        }
    }
}
