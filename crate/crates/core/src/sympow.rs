//! Symmetric-power calculus: the explicit ∇-primitive of a depleted form,
//! the contraction `Sym^{r2} ⊗ Sym^{r3} → Sym^{r1}` along `t−1` pairing
//! slots, and the two q-expansion pipelines whose agreement is the key
//! coefficient identity.
//!
//! A symmetric element of degree r is a [`WElement`] with classical weight
//! r, components read against `ω_can^{r−i}η_can^i`. The primitive is
//! `G^{[p]} = Σ_i (−1)^i i!·binom(r2,i)·θ^{−i−1}(g^{[p]})·ω^{r2−i}η^i`,
//! satisfying `∇G^{[p]} = g^{[p]}·V_{r2+2,0}` by a telescoping check.
//!
//! The contraction embeds both factors into `ℋ^{⊗(r2+r3−t+1)}` over the
//! index sets `{1..r2}` and `{r2−t+2..r}`, pairs the `t−1` shared slots
//! with `⟨η,ω⟩ = +1 = −⟨ω,η⟩`, and symmetrizes. That orientation makes the
//! pure-ω×primitive case reproduce the displayed coefficients
//! `(−1)^{α+t−1}(α+t−1)!·binom(b−1,α)` with global constant exactly 1; the
//! opposite orientation would scale slot coefficients by a t-dependent
//! sign, which no single constant can repair.
//!
//! Both Lemma pipelines clear the projection denominator: they return the
//! numerator `N` with `H† = N/D`, `D` the slot-count product shared by the
//! two sides, so the comparison stays exact in Z_p even where the true
//! projection acquires bounded p-denominators.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{invalid, Error, Result};
use crate::padic::Context;
use crate::qseries::{theta_inv_step, theta_pow, QSeries};
use crate::wmodel::{mul_by_form, nabla_pow, oc_project_parts, WElement};

/// Exact binomial for any integer upper argument.
pub fn big_binom(n: i64, k: u64) -> BigInt {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k {
        num *= BigInt::from(n - i as i64);
        den *= BigInt::from(i + 1);
    }
    num / den
}

pub fn big_factorial(k: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=k {
        acc *= BigInt::from(i);
    }
    acc
}

/// `G^{[p]}`: the degree-r2 primitive of a depleted form, slot i carrying
/// `(−1)^i i!·binom(r2,i)·θ^{−i−1}(g)`.
pub fn primitive_depleted(g: &QSeries, r2: usize) -> Result<WElement> {
    if !g.is_depleted() {
        return Err(Error::ThetaRequiresDepleted);
    }
    let ctx = g.ctx().clone();
    let mut comps = Vec::with_capacity(r2 + 1);
    let mut cur = theta_pow(g, &ctx.classical_char(-1))?;
    let mut scalar = BigInt::one();
    for i in 0..=r2 {
        comps.push(cur.scale(&ctx.from_bigint(&scalar)));
        if i < r2 {
            // (i+1)!·binom(r2,i+1) = i!·binom(r2,i)·(r2−i); sign alternates.
            scalar *= BigInt::from(-((r2 - i) as i64));
            cur = theta_inv_step(&cur);
        }
    }
    WElement::new(ctx.classical_char(r2 as i64), comps)
}

/// One contraction coefficient: the mass of all pairings sending
/// `ω^{r2−i}η^i ⊗ ω^{r3−j}η^j` to the slot `i+j−(t−1)`.
fn contraction_coef(r2: usize, r3: usize, t: usize, i: usize, j: usize) -> BigRational {
    let free2 = (r2 - (t - 1)) as i64;
    let free3 = (r3 - (t - 1)) as i64;
    let mut acc = BigInt::zero();
    for i1 in 0..t {
        let j1 = t - 1 - i1;
        if i1 > i || j1 > j {
            continue;
        }
        if (i - i1) as i64 > free2 || (j - j1) as i64 > free3 {
            continue;
        }
        let mut term = big_binom((t - 1) as i64, i1 as u64)
            * big_binom(free2, (i - i1) as u64)
            * big_binom(free3, (j - j1) as u64);
        if j1 % 2 == 1 {
            term = -term;
        }
        acc += term;
    }
    let den = big_binom(r2 as i64, i as u64) * big_binom(r3 as i64, j as u64);
    BigRational::new(acc, den)
}

/// Contract `t−1` slots of `A ⊗ B` with the symplectic pairing and
/// symmetrize into degree `r1 = r2+r3−2(t−1)`; `t = 1` is plain
/// multiplication. Output carries the twist tag `1−t`.
pub fn pr_project(a: &WElement, b: &WElement, t: usize) -> Result<WElement> {
    let ctx = a.ctx().clone();
    let (r2, r3) = (sym_degree(a, &ctx)?, sym_degree(b, &ctx)?);
    if t < 1 {
        return Err(invalid("overlap parameter t must be at least 1"));
    }
    if t - 1 > r2.min(r3) {
        return Err(Error::OverlapExceedsSymmetricPower);
    }
    let r1 = r2 + r3 - 2 * (t - 1);

    // Collect the rational coefficient of every surviving (i, j) pair,
    // grouped by output slot m = i+j−(t−1).
    let mut slots: BTreeMap<usize, Vec<(BigRational, usize, usize)>> = BTreeMap::new();
    for i in 0..=a.fil().min(r2) {
        if a.comp(i).coeffs().iter().all(|c| c.is_zero()) {
            continue;
        }
        for j in 0..=b.fil().min(r3) {
            if i + j < t - 1 || b.comp(j).coeffs().iter().all(|c| c.is_zero()) {
                continue;
            }
            let k = contraction_coef(r2, r3, t, i, j);
            if !k.is_zero() {
                slots.entry(i + j - (t - 1)).or_default().push((k, i, j));
            }
        }
    }

    let top = slots.keys().next_back().copied().unwrap_or(0);
    let mut comps = vec![QSeries::zero(&ctx); top + 1];
    for (m, terms) in slots {
        // Shared denominator per slot keeps the division to one exact step.
        let mut den = BigInt::one();
        for (k, _, _) in &terms {
            den = den.lcm(k.denom());
        }
        let mut num = QSeries::zero(&ctx);
        for (k, i, j) in &terms {
            let scalar = (k * BigRational::from(den.clone())).to_integer();
            let prod = a.comp(*i).mul(b.comp(*j));
            num = num.add(&prod.scale(&ctx.from_bigint(&scalar)));
        }
        if den.is_one() {
            comps[m] = num;
        } else {
            let d = ctx.from_bigint(&den);
            let mut out = QSeries::zero(&ctx);
            for n in 0..=ctx.qprec() {
                out.set_coeff(n, ctx.div(num.coeff(n), &d)?);
            }
            comps[m] = out;
        }
    }
    let out = WElement::new(ctx.classical_char(r1 as i64), comps)?;
    Ok(out.with_twist(a.twist() + b.twist() + 1 - t as i64))
}

fn sym_degree(w: &WElement, ctx: &Context) -> Result<usize> {
    let wt = w.weight();
    if !wt.is_classical(ctx) || wt.int_part < 0 {
        return Err(invalid("symmetric elements need a classical weight ≥ 0"));
    }
    let r = wt.int_part as usize;
    if w.fil() > r {
        return Err(invalid("filtration exceeds the symmetric degree"));
    }
    Ok(r)
}

/// Weight bookkeeping for a balanced triple.
pub struct LemmaParams {
    pub y: i64,
    pub z: i64,
    pub t: i64,
    pub x: i64,
    /// b = y − t; slots run 0..b−1 on both sides.
    pub b: i64,
}

pub fn lemma_params(y: i64, z: i64, t: i64) -> Result<LemmaParams> {
    if y < 2 || z < 2 {
        return Err(invalid("weights y, z must be at least 2"));
    }
    if t < 1 {
        return Err(invalid("t must be at least 1"));
    }
    if t >= y.min(z) {
        return Err(invalid("weights must be balanced: t < min(y, z)"));
    }
    let x = y + z - 2 * t;
    Ok(LemmaParams { y, z, t, x, b: y - t })
}

/// Pre-projection left side: `(−1)^{t−1}(t−1)!·[∇^{−t}(g·V_{y,0}) × h·V_{z,0}]`,
/// a weight-x element with slots 0..b−1.
pub fn lemma_lhs_element(
    g_dep: &QSeries,
    h: &QSeries,
    y: i64,
    z: i64,
    t: i64,
) -> Result<WElement> {
    let p = lemma_params(y, z, t)?;
    let ctx = g_dep.ctx().clone();
    let w = WElement::from_form(g_dep.clone(), ctx.classical_char(p.y));
    let moved = nabla_pow(&w, &ctx.classical_char(-p.t))?;
    let prod = mul_by_form(&moved, h, &ctx.classical_char(p.z));
    let mut scalar = big_factorial((p.t - 1) as u64);
    if (p.t - 1) % 2 == 1 {
        scalar = -scalar;
    }
    Ok(prod.scale(&ctx.from_bigint(&scalar)))
}

/// Pre-projection right side: `pr_{r1}(G^{[p]} × h·ω^{r3})`, read at
/// weight x for the projection step.
pub fn lemma_rhs_element(
    g_dep: &QSeries,
    h: &QSeries,
    y: i64,
    z: i64,
    t: i64,
) -> Result<WElement> {
    let p = lemma_params(y, z, t)?;
    let ctx = g_dep.ctx().clone();
    let big_g = primitive_depleted(g_dep, (p.y - 2) as usize)?;
    let hw = WElement::from_form(h.clone(), ctx.classical_char(p.z - 2));
    let pr = pr_project(&big_g, &hw, p.t as usize)?;
    Ok(pr.reweighted(ctx.classical_char(p.x)))
}

/// Left side of the coefficient identity, denominator-cleared: the slot-0
/// projection numerator of `lemma_lhs_element`, over the common
/// denominator `D = (u_x−1−(b−1))⋯(u_x−2)` both sides share.
pub fn lemma_lhs(g_dep: &QSeries, h: &QSeries, y: i64, z: i64, t: i64) -> Result<QSeries> {
    let elt = lemma_lhs_element(g_dep, h, y, z, t)?;
    Ok(oc_project_parts(&elt)?.0)
}

/// Right side of the coefficient identity, denominator-cleared likewise.
pub fn lemma_rhs(g_dep: &QSeries, h: &QSeries, y: i64, z: i64, t: i64) -> Result<QSeries> {
    let elt = lemma_rhs_element(g_dep, h, y, z, t)?;
    Ok(oc_project_parts(&elt)?.0)
}
