//! Polynomial q-expansion model of weight-k sheaf sections: elements
//! `Σ γ_i(q)·V_{k,i}`, the derivation ∇, its p-adic power ∇^s, and the
//! projection to the V_{k,0} line.
//!
//! The derivation acts on a single slot by
//! `∇(a·V_{k,i}) = θ(a)·V_{k+2,i} + a(u_k − i)·V_{k+2,i+1}`
//! with `u_k` the scalar of the weight character. Iterating formally and
//! interpolating the exponent gives
//! `∇^s(w) = Σ_h Σ_j binom(u_s, j)·∏_{i<j}(u_k+u_s−h−1−i)·θ^{s−j}(γ_h)·V_{k+2s, h+j}`,
//! a finite sum whenever the factor chain hits an exact zero and a
//! convergent one under the wild-part valuation hypotheses.
//!
//! The projection `H†` recovers the slot-0 coefficient of the unique
//! representative modulo ∇-images:
//! `H†(w) = Σ_i (−1)^i θ^i(γ_i) / [(u_k−1−i)(u_k−i)⋯(u_k−2)]`.
//! Denominators are exact scalar products, so the sum is evaluated over
//! the common denominator; the division at the end is the only lossy step
//! and is skipped by the `_parts` variant.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{invalid, Error, Result};
use crate::padic::{Context, ExponentChar, PadicNum};
use crate::qseries::{deplete, theta_pow, QSeries};

/// `Σ γ_i(q)·V_{k,i}` with weight character k and a Tate-twist tag that
/// never touches coefficients.
#[derive(Clone, Debug)]
pub struct WElement {
    weight: ExponentChar,
    twist: i64,
    comps: Vec<QSeries>,
}

impl WElement {
    pub fn new(weight: ExponentChar, comps: Vec<QSeries>) -> Result<WElement> {
        if comps.is_empty() {
            return Err(invalid("an element needs at least the slot-0 component"));
        }
        let ctx = comps[0].ctx().clone();
        if comps.iter().any(|c| *c.ctx() != ctx) {
            return Err(invalid("components must share one context"));
        }
        Ok(WElement {
            weight,
            twist: 0,
            comps,
        })
    }

    /// A form sitting in slot 0.
    pub fn from_form(f: QSeries, weight: ExponentChar) -> WElement {
        WElement {
            weight,
            twist: 0,
            comps: vec![f],
        }
    }

    pub fn with_twist(mut self, twist: i64) -> WElement {
        self.twist = twist;
        self
    }

    /// Same components viewed at another weight (e.g. a degree-r symmetric
    /// element read inside the weight-(r+2) model before projecting).
    pub fn reweighted(mut self, weight: ExponentChar) -> WElement {
        self.weight = weight;
        self
    }

    pub fn ctx(&self) -> &Context {
        self.comps[0].ctx()
    }

    pub fn weight(&self) -> &ExponentChar {
        &self.weight
    }

    pub fn twist(&self) -> i64 {
        self.twist
    }

    /// Filtration index: the largest occupied slot.
    pub fn fil(&self) -> usize {
        self.comps.len() - 1
    }

    pub fn comp(&self, i: usize) -> &QSeries {
        &self.comps[i]
    }

    pub fn comps(&self) -> &[QSeries] {
        &self.comps
    }

    pub fn is_zero(&self) -> bool {
        self.comps
            .iter()
            .all(|c| c.coeffs().iter().all(|x| x.is_zero()))
    }

    /// True when every component is supported on `p ∤ n`.
    pub fn is_depleted(&self) -> bool {
        self.comps.iter().all(|c| c.is_depleted())
    }

    pub fn scale(&self, s: &PadicNum) -> WElement {
        WElement {
            weight: self.weight.clone(),
            twist: self.twist,
            comps: self.comps.iter().map(|c| c.scale(s)).collect(),
        }
    }

    /// Component-wise congruence mod p^k after padding the shorter
    /// filtration with zeros. Weight bookkeeping is not compared.
    pub fn congruent_mod(&self, other: &WElement, k: u32) -> Result<bool> {
        let ctx = self.ctx();
        let zero = QSeries::zero(ctx);
        let m = self.comps.len().max(other.comps.len());
        for i in 0..m {
            let a = self.comps.get(i).unwrap_or(&zero);
            let b = other.comps.get(i).unwrap_or(&zero);
            if !a.congruent_mod(b, k)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Multiply by a fil-0 form of the given weight: each slot is multiplied
/// by the series, weights add.
pub fn mul_by_form(w: &WElement, h: &QSeries, h_weight: &ExponentChar) -> WElement {
    let ctx = w.ctx();
    WElement {
        weight: ctx.char_add(&w.weight, h_weight),
        twist: w.twist,
        comps: w.comps.iter().map(|c| c.mul(h)).collect(),
    }
}

/// One Gauss–Manin step: weight rises by 2, filtration by 1.
pub fn nabla(w: &WElement) -> WElement {
    let ctx = w.ctx().clone();
    let u_k = ctx.char_scalar(&w.weight);
    let m = w.fil();
    let one = ctx.classical_char(1);
    let mut comps = Vec::with_capacity(m + 2);
    for i in 0..=m + 1 {
        let mut acc = QSeries::zero(&ctx);
        if i <= m {
            // θ works at exponent 1 on any series.
            acc = theta_pow(w.comp(i), &one).unwrap();
        }
        if i >= 1 && i <= m + 1 {
            let factor = ctx.sub(&u_k, &ctx.from_i64(i as i64 - 1));
            acc = acc.add(&w.comp(i - 1).scale(&factor));
        }
        comps.push(acc);
    }
    WElement {
        weight: ctx.char_shift(&w.weight, 2),
        twist: w.twist,
        comps,
    }
}

/// ∇^s on a depleted element.
///
/// The j-sum per slot is cut exactly when the coefficient chain hits a
/// structural zero (classical parameters), and otherwise under the wild
/// valuation hypotheses once three consecutive terms vanish at working
/// precision.
pub fn nabla_pow(w: &WElement, s: &ExponentChar) -> Result<WElement> {
    let ctx = w.ctx().clone();
    if !w.is_depleted() {
        return Err(Error::ThetaRequiresDepleted);
    }
    let out_weight = ctx.char_add(&w.weight, &ctx.char_scale(s, 2));
    let classical = w.weight.is_classical(&ctx) && s.is_classical(&ctx);
    if !classical {
        // Convergence needs the wild parts small: s in p²Λ, k in pΛ.
        let ok_s = s.wild.is_zero() || ctx.val_lb(&s.wild) >= 2;
        let ok_k = w.weight.wild.is_zero() || ctx.val_lb(&w.weight.wild) >= 1;
        if !ok_s || !ok_k {
            return Err(Error::IterationDiverges);
        }
    }
    let cap = 4 * (ctx.p() as usize - 1) * ctx.prec() as usize + 64;
    let u_k = ctx.char_scalar(&w.weight);
    let u_s = ctx.char_scalar(s);
    let mut out: Vec<QSeries> = Vec::new();

    for h in 0..=w.fil() {
        // A component that is zero at full precision contributes nothing,
        // whatever its chain does.
        if w.comp(h).coeffs().iter().all(|c| c.is_zero() && c.prec() == ctx.prec()) {
            continue;
        }
        // θ^{s−j} chains down one inverse power of n per j.
        let mut cur = theta_pow(w.comp(h), s)?;
        let a_int = w.weight.int_part + s.int_part - h as i64 - 1;

        // Exact integer coefficients when both characters are classical.
        let mut big_binom = BigInt::one();
        let mut big_prod = BigInt::one();
        // Running p-adic coefficients otherwise.
        let mut pad_prod = ctx.one();

        let mut zero_streak = 0usize;
        let mut j = 0usize;
        loop {
            // Coefficient of θ^{s−j}(γ_h) together with a flag that the
            // factor chain has hit an exact zero it can never recover from.
            let (coef, chain_dead) = if classical {
                let big = &big_binom * &big_prod;
                (ctx.from_bigint(&big), big.is_zero())
            } else {
                // The factor chain dying at full precision ends the sum
                // whether or not the binomial is still representable.
                if pad_prod.is_zero() && pad_prod.prec() == ctx.prec() {
                    break;
                }
                let b = ctx
                    .binom_u(&u_s, j as u64)
                    .map_err(|_| Error::IterationDiverges)?;
                (ctx.mul(&b, &pad_prod), false)
            };
            if chain_dead {
                break;
            }
            if !coef.is_zero() {
                let slot = h + j;
                while out.len() <= slot {
                    out.push(QSeries::zero(&ctx));
                }
                out[slot] = out[slot].add(&cur.scale(&coef));
                zero_streak = 0;
            } else {
                zero_streak += 1;
                if zero_streak >= 3 && j >= ctx.p() as usize {
                    break;
                }
            }
            j += 1;
            if j > cap {
                return Err(Error::IterationDiverges);
            }
            // Advance the coefficient chain to exponent j.
            let jm = j as i64 - 1;
            if classical {
                big_binom = big_binom * BigInt::from(s.int_part - jm) / BigInt::from(j);
                big_prod *= BigInt::from(a_int - jm);
            } else {
                let f = ctx.sub(&ctx.add(&u_k, &u_s), &ctx.from_i64(h as i64 + 1 + jm));
                pad_prod = ctx.mul(&pad_prod, &f);
            }
            // θ^{s−j} from θ^{s−j+1}: one inverse power of n per coefficient.
            cur = crate::qseries::theta_inv_step(&cur);
        }
    }
    if out.is_empty() {
        out.push(QSeries::zero(&ctx));
    }
    Ok(WElement {
        weight: out_weight,
        twist: w.twist,
        comps: out,
    })
}

/// Numerator and common denominator of the slot-0 projection: returns
/// `(N, D)` with `H†(w) = N/D`, where `D = (u_k−1−m)⋯(u_k−2)` is the
/// longest denominator chain and N is denominator-free.
pub fn oc_project_parts(w: &WElement) -> Result<(QSeries, PadicNum)> {
    let ctx = w.ctx().clone();
    let u_k = ctx.char_scalar(&w.weight);
    let m = w.fil();
    // tail[i] = D_m / D_i = ∏_{l=i+1..m} (u_k−1−l), accumulated backwards.
    let mut num = QSeries::zero(&ctx);
    let mut tail = ctx.one();
    let mut sign_theta: Vec<(usize, QSeries)> = Vec::new();
    for i in 0..=m {
        let theta_i = theta_pow(w.comp(i), &ctx.classical_char(i as i64))?;
        sign_theta.push((i, theta_i));
    }
    for (i, theta_i) in sign_theta.into_iter().rev() {
        let signed = if i % 2 == 0 {
            theta_i.scale(&tail)
        } else {
            theta_i.scale(&ctx.neg(&tail))
        };
        num = num.add(&signed);
        if i > 0 {
            // Slot i−1 picks up this slot's innermost factor (u_k−1−i).
            let f = ctx.sub(&u_k, &ctx.from_i64(1 + i as i64));
            tail = ctx.mul(&tail, &f);
        }
    }
    // After the loop `tail` is D_m/D_0, that is D_m itself.
    let denom = tail;
    if m > 0 && denom.is_zero() {
        return Err(Error::DenominatorVanishes);
    }
    Ok((num, denom))
}

/// Overconvergent projection: slot-0 coefficient of the representative
/// modulo ∇-images. Exact for fil 0; otherwise the common-denominator sum
/// divided out coefficient-wise.
pub fn oc_project(w: &WElement) -> Result<QSeries> {
    let ctx = w.ctx().clone();
    if w.fil() == 0 {
        return Ok(w.comp(0).clone());
    }
    let (num, denom) = oc_project_parts(w)?;
    let mut out = QSeries::zero(&ctx);
    for n in 0..=ctx.qprec() {
        out.set_coeff(n, ctx.div(num.coeff(n), &denom)?);
    }
    Ok(out)
}

/// A depleted series with pseudo-random unit coefficients, for tests.
pub fn depleted_sample(ctx: &Context, seed: u64) -> QSeries {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut f = QSeries::zero(ctx);
    for n in 1..=ctx.qprec() {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        f.set_coeff(n, ctx.from_i64((state >> 16) as i64));
    }
    deplete(&f)
}
