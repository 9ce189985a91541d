//! Characteristic polynomials of prime-power coefficient sequences, linear
//! recurrence verification, Newton's identities, and the triangular relation
//! between sums-of-eigenforms coefficients and power sums of the a_i(p).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::arith::primes::{inv_mod, mul_mod, pow_mod, sub_mod};
use crate::error::{Error, Result};

use super::{hecke_prime_power_exact, CuspformCombo, PrimitiveForm};

/// Coefficients (index = power of T) of prod_i (T^2 - a_i(p) T + p^{k_i - 1}),
/// the characteristic polynomial of the recurrence satisfied by
/// sum_i a_i(p^n). Degree is always 2r.
pub fn charpoly_product(forms: &[PrimitiveForm], p: u64) -> Result<Vec<BigInt>> {
    if forms.is_empty() {
        return Err(Error::domain("charpoly_product needs at least one form"));
    }
    let mut poly = vec![BigInt::one()];
    for f in forms {
        let ap = f.ap_exact(p)?;
        let pk1 = BigInt::from(p).pow(f.weight() - 1);
        // Multiply poly by T^2 - ap T + pk1.
        let mut next = vec![BigInt::zero(); poly.len() + 2];
        for (i, c) in poly.iter().enumerate() {
            next[i + 2] += c;
            next[i + 1] -= &ap * c;
            next[i] += &pk1 * c;
        }
        poly = next;
    }
    Ok(poly)
}

/// True iff every full window of `seq` satisfies the linear recurrence with
/// the given characteristic polynomial (monic, index = power of T).
pub fn verify_linear_recurrence(seq: &[BigRational], charpoly: &[BigInt]) -> bool {
    let d = charpoly.len() - 1;
    if seq.len() < d + 1 {
        return false;
    }
    for w in 0..=(seq.len() - d - 1) {
        let mut acc = BigRational::zero();
        for (j, c) in charpoly.iter().enumerate() {
            acc += BigRational::from(c.clone()) * &seq[w + j];
        }
        if !acc.is_zero() {
            return false;
        }
    }
    true
}

/// The sequence a(p^n), n = 0..len-1, for a rational combination of forms.
pub fn combo_prime_power_sequence(
    combo: &CuspformCombo,
    p: u64,
    len: usize,
) -> Result<Vec<BigRational>> {
    let mut seq = vec![BigRational::zero(); len];
    for (c, f) in &combo.terms {
        let ap = f.ap_exact(p)?;
        for (n, slot) in seq.iter_mut().enumerate() {
            let v = hecke_prime_power_exact(&ap, p, f.weight(), n as u32);
            *slot += c * BigRational::from(v);
        }
    }
    Ok(seq)
}

/// Newton's identities over Q: given power sums s_1..s_r, the coefficients
/// (q_1..q_r) of the monic polynomial x^r + q_1 x^{r-1} + ... + q_r whose
/// roots realize them. e_k = (1/k) sum_{i=1}^{k} (-1)^{i-1} e_{k-i} s_i and
/// q_k = (-1)^k e_k.
pub fn newton_power_sums_to_elementary(s: &[BigRational]) -> Vec<BigRational> {
    let r = s.len();
    let mut e = vec![BigRational::zero(); r + 1];
    e[0] = BigRational::one();
    for k in 1..=r {
        let mut acc = BigRational::zero();
        for i in 1..=k {
            let term = &e[k - i] * &s[i - 1];
            if i % 2 == 1 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        e[k] = acc / BigRational::from(BigInt::from(k));
    }
    (1..=r)
        .map(|k| if k % 2 == 0 { e[k].clone() } else { -e[k].clone() })
        .collect()
}

/// Newton's identities over F_l. The division by k requires k invertible,
/// so l must be a prime exceeding r.
pub fn newton_power_sums_to_elementary_mod(s: &[u64], l: u64) -> Result<Vec<u64>> {
    let r = s.len() as u64;
    if !crate::arith::is_prime(l) {
        return Err(Error::domain(format!("{l} is not prime")));
    }
    if l <= r {
        return Err(Error::domain(format!(
            "k! is not invertible mod {l} for k up to {r}"
        )));
    }
    let r = r as usize;
    let mut e = vec![0u64; r + 1];
    e[0] = 1;
    for k in 1..=r {
        let mut acc = 0u64;
        for i in 1..=k {
            let term = mul_mod(e[k - i], s[i - 1] % l, l);
            if i % 2 == 1 {
                acc = crate::arith::add_mod(acc, term, l);
            } else {
                acc = sub_mod(acc, term, l);
            }
        }
        let kinv = inv_mod(k as u64, l).expect("0 < k < l");
        e[k] = mul_mod(acc, kinv, l);
    }
    Ok((1..=r)
        .map(|k| if k % 2 == 0 { e[k] } else { sub_mod(0, e[k], l) })
        .collect())
}

fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Power sums A_j = sum_i a_i(p)^j for j = 1..=terms, for a unit-coefficient
/// sum of eigenforms, computed two ways and cross-checked:
/// directly from the a_i(p), and by inverting the triangular relation
/// a(p^n) = sum_t (-1)^t C(n-t, t) p^{(k-1)t} A_{n-2t}  (A_0 = r)
/// where the a(p^n) themselves come from the Hecke recursion.
///
/// The triangular relation collapses the per-form weight factors into a
/// single p^{(k-1)t}, so beyond A_2 it needs all forms of one weight; A_2
/// only needs the constant correction sum_i p^{k_i - 1}.
pub fn power_sums_from_coefficients(
    forms: &[PrimitiveForm],
    p: u64,
    terms: usize,
) -> Result<Vec<BigInt>> {
    if forms.is_empty() || terms == 0 {
        return Err(Error::domain("need at least one form and one term"));
    }
    let aps: Vec<BigInt> = forms.iter().map(|f| f.ap_exact(p)).collect::<Result<_>>()?;

    // Route 1: direct powers.
    let mut direct = Vec::with_capacity(terms);
    for j in 1..=terms {
        let mut acc = BigInt::zero();
        for ap in &aps {
            acc += ap.pow(j as u32);
        }
        direct.push(acc);
    }

    // Route 2: triangular inversion from the combo values a(p^n).
    let mut combo_vals = Vec::with_capacity(terms + 1);
    for n in 0..=terms {
        let mut acc = BigInt::zero();
        for (f, ap) in forms.iter().zip(&aps) {
            acc += hecke_prime_power_exact(ap, p, f.weight(), n as u32);
        }
        combo_vals.push(acc);
    }
    let weights: Vec<u32> = forms.iter().map(|f| f.weight()).collect();
    let equal_weight = weights.iter().all(|&k| k == weights[0]);
    if !equal_weight && terms > 2 {
        return Err(Error::domain(
            "power-sum inversion past A_2 needs all forms of equal weight",
        ));
    }
    let mut inverted: Vec<BigInt> = Vec::with_capacity(terms);
    let r = forms.len() as i64;
    for n in 1..=terms {
        let mut a_n = combo_vals[n].clone();
        if equal_weight {
            let pk1 = BigInt::from(p).pow(weights[0] - 1);
            for t in 1..=(n / 2) {
                let coeff = binomial((n - t) as u64, t as u64) * pk1.pow(t as u32);
                let lower: BigInt = if n == 2 * t {
                    BigInt::from(r)
                } else {
                    inverted[n - 2 * t - 1].clone()
                };
                let term = coeff * lower;
                if t % 2 == 1 {
                    a_n += term;
                } else {
                    a_n -= term;
                }
            }
        } else if n == 2 {
            // a(p^2) = A_2 - sum_i p^{k_i - 1}.
            for &k in &weights {
                a_n += BigInt::from(p).pow(k - 1);
            }
        }
        inverted.push(a_n);
    }

    if direct != inverted {
        return Err(Error::internal(format!(
            "power-sum routes disagree at p = {p}: direct {direct:?}, inverted {inverted:?}"
        )));
    }
    Ok(direct)
}

/// a(p^n) as an explicit polynomial in a(p):
/// sum_{t=0}^{floor(n/2)} (-1)^t C(n-t, t) p^{(k-1)t} a(p)^{n-2t}, mod m.
/// Exposed as a second route for recursion tests.
pub fn prime_power_binomial_expansion_mod(ap: u64, p: u64, k: u32, n: u32, m: u64) -> u64 {
    let pk1 = pow_mod(p % m, (k - 1) as u64, m);
    let mut acc = 0u64;
    for t in 0..=(n / 2) {
        let c = binomial((n - t) as u64, t as u64);
        let cm = {
            let r = (&c % BigInt::from(m)) + BigInt::from(m);
            u64::try_from(r % BigInt::from(m)).unwrap()
        };
        let term = mul_mod(
            mul_mod(cm, pow_mod(pk1, t as u64, m), m),
            pow_mod(ap, (n - 2 * t) as u64, m),
            m,
        );
        if t % 2 == 0 {
            acc = crate::arith::add_mod(acc, term, m);
        } else {
            acc = sub_mod(acc, term, m);
        }
    }
    acc
}
