//! Euler factors, the interpolation scalar, isotypic-coefficient
//! extraction, the L-value-numerator pipeline, and final assembly.
//!
//! Scalars here live in Q_p rather than Z_p: with c = (x+y+z−2)/2 the
//! products β_f·s_g·s_h·p^{−c} routinely carry negative valuation inside
//! the allowed weight range, so every Euler factor is a [`Qp`].
//!
//! Two independently stated formulations of the Euler factors must agree:
//! the direct one in terms of Hecke roots and p^{−c}, and the primed one
//! with β = p^{x+t−2}/α_{f*} and s′ = s·p^{1−k}. Their equality encodes
//! the consistency α·β = χ(p)p^{k−1} of each factor's data plus the
//! self-duality χ_f·χ_g·χ_h(p) = 1 of the triple; a mismatch therefore
//! signals inconsistent input, not roundoff.

use num_rational::{BigRational, Rational64};

use crate::error::{invalid, Error, Result};
use crate::padic::{Context, PadicNum, Qp};
use crate::qseries::{deplete, p_stabilize, u_op, EigenData, QSeries};
use crate::slope::{slope_projector, PadicMatrix};
use crate::sympow::{big_factorial, lemma_rhs};
use crate::wmodel::{mul_by_form, nabla_pow, oc_project_parts, WElement};

/// Weight bookkeeping for a triple (x, y, z).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TripleWeights {
    pub x: i64,
    pub y: i64,
    pub z: i64,
    pub t: i64,
    pub c: i64,
    pub r1: i64,
    pub r2: i64,
    pub r3: i64,
    pub b: i64,
    pub balanced: bool,
}

impl TripleWeights {
    pub fn new(x: i64, y: i64, z: i64) -> Result<TripleWeights> {
        if x < 1 || y < 1 || z < 1 {
            return Err(invalid("weights must be positive"));
        }
        if (x + y + z) % 2 != 0 {
            return Err(invalid("x + y + z must be even"));
        }
        let t = (y + z - x) / 2;
        let c = (x + y + z - 2) / 2;
        let balanced = x < y + z && y < x + z && z < x + y;
        if balanced && t < 1 {
            return Err(invalid("balanced weights need t ≥ 1"));
        }
        Ok(TripleWeights {
            x,
            y,
            z,
            t,
            c,
            r1: x - 2,
            r2: y - 2,
            r3: z - 2,
            b: y - t,
            balanced,
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EulerFactors {
    pub e0: Qp,
    pub e1: Qp,
    pub e: Qp,
}

fn qp_ppow(ctx: &Context, v: i64) -> Qp {
    Qp {
        valuation: v,
        unit: ctx.one(),
    }
}

/// ∏ over the four sign choices of (1 − β·s_g·s_h·p^shift).
fn euler_product(
    ctx: &Context,
    beta: &Qp,
    roots_g: (&Qp, &Qp),
    roots_h: (&Qp, &Qp),
    shift: i64,
) -> Qp {
    let one = ctx.qp_one();
    let mut acc = one;
    for sg in [roots_g.0, roots_g.1] {
        for sh in [roots_h.0, roots_h.1] {
            let term = ctx.qp_mul(&ctx.qp_mul(beta, sg), &ctx.qp_mul(sh, &qp_ppow(ctx, shift)));
            acc = ctx.qp_mul(&acc, &ctx.qp_sub(&one, &term));
        }
    }
    acc
}

fn qp_seen_digits(x: &Qp) -> i64 {
    x.valuation + x.unit.prec() as i64
}

fn cross_check(ctx: &Context, name: &str, a: &Qp, b: &Qp) -> Result<()> {
    let k = qp_seen_digits(a).min(qp_seen_digits(b));
    if ctx.qp_congruent_mod(a, b, k) {
        Ok(())
    } else {
        Err(Error::FormulationMismatch(format!(
            "{name}: {} vs {}",
            ctx.fmt_qp(a),
            ctx.fmt_qp(b)
        )))
    }
}

/// Both formulations of the three Euler factors, direct first, with no
/// agreement check applied.
pub fn euler_factors_formulations(
    ctx: &Context,
    f: &EigenData,
    g: &EigenData,
    h: &EigenData,
    w: &TripleWeights,
) -> Result<(EulerFactors, EulerFactors)> {
    if f.weight != w.x || g.weight != w.y || h.weight != w.z {
        return Err(invalid("weights of the eigen data must match the triple"));
    }
    let one = ctx.qp_one();
    let bf = ctx.qp_from_padic(&f.beta);
    let af = ctx.qp_from_padic(&f.alpha);
    let chi_f_inv = ctx
        .qp_inv(&ctx.qp_from_padic(&f.chi_p))
        .map_err(|_| invalid("χ_f(p) must be a unit"))?;
    let ag = ctx.qp_from_padic(&g.alpha);
    let bg = ctx.qp_from_padic(&g.beta);
    let ah = ctx.qp_from_padic(&h.alpha);
    let bh = ctx.qp_from_padic(&h.beta);

    let bf2chi = ctx.qp_mul(&ctx.qp_mul(&bf, &bf), &chi_f_inv);
    let e0 = ctx.qp_sub(&one, &ctx.qp_mul(&bf2chi, &qp_ppow(ctx, 1 - w.x)));
    let e1 = ctx.qp_sub(&one, &ctx.qp_mul(&bf2chi, &qp_ppow(ctx, -w.x)));
    let e = euler_product(ctx, &bf, (&ag, &bg), (&ah, &bh), -w.c);

    // Primed formulation: β = p^{x−1+t−1}/α_{f*} with α_{f*} = χ_f(p)^{−1}α_f,
    // and s′ = s·p^{1−k} for the outer roots at weights y and z.
    let alpha_fstar = ctx.qp_mul(&chi_f_inv, &af);
    let beta_primed = ctx.qp_mul(
        &qp_ppow(ctx, w.x - 1 + w.t - 1),
        &ctx
            .qp_inv(&alpha_fstar)
            .map_err(|_| invalid("α_{f*} must be invertible"))?,
    );
    let shift_g = qp_ppow(ctx, 1 - w.y);
    let shift_h = qp_ppow(ctx, 1 - w.z);
    let agp = ctx.qp_mul(&ag, &shift_g);
    let bgp = ctx.qp_mul(&bg, &shift_g);
    let ahp = ctx.qp_mul(&ah, &shift_h);
    let bhp = ctx.qp_mul(&bh, &shift_h);

    // ℰ₀ in the primed language is 1 − β_{f*}/α_{f*} = 1 − β_f/α_f.
    let e0_cross = ctx.qp_sub(
        &one,
        &ctx.qp_mul(
            &bf,
            &ctx.qp_inv(&af).map_err(|_| invalid("α_f must be invertible"))?,
        ),
    );
    let prod4 = ctx.qp_mul(&ctx.qp_mul(&agp, &bgp), &ctx.qp_mul(&ahp, &bhp));
    let e1_cross = ctx.qp_sub(&one, &ctx.qp_mul(&ctx.qp_mul(&beta_primed, &beta_primed), &prod4));
    let e_cross = euler_product(ctx, &beta_primed, (&agp, &bgp), (&ahp, &bhp), 0);

    Ok((
        EulerFactors { e0, e1, e },
        EulerFactors {
            e0: e0_cross,
            e1: e1_cross,
            e: e_cross,
        },
    ))
}

/// The three Euler factors of a triple, computed by both stated
/// formulations and cross-checked before the direct form is returned.
pub fn euler_factors(
    ctx: &Context,
    f: &EigenData,
    g: &EigenData,
    h: &EigenData,
    w: &TripleWeights,
) -> Result<EulerFactors> {
    let (direct, primed) = euler_factors_formulations(ctx, f, g, h, w)?;
    cross_check(ctx, "E0", &direct.e0, &primed.e0)?;
    cross_check(ctx, "E1", &direct.e1, &primed.e1)?;
    cross_check(ctx, "E", &direct.e, &primed.e)?;
    Ok(direct)
}

/// The interpolation scalar `(p−1)·α_f·(1 − β_fα_gα_h p^{−c})/(1 − α_fβ_gβ_h p^{−c})`
/// times `(−1)^{c−x}/(c−x)!` in the balanced region and `(x−c−1)!` outside it.
pub fn interp_factor_balanced(
    ctx: &Context,
    f: &EigenData,
    g: &EigenData,
    h: &EigenData,
    w: &TripleWeights,
) -> Result<Qp> {
    let one = ctx.qp_one();
    let pm_c = qp_ppow(ctx, -w.c);
    let af = ctx.qp_from_padic(&f.alpha);
    let num = ctx.qp_sub(
        &one,
        &ctx.qp_mul(
            &ctx.qp_mul(&ctx.qp_from_padic(&f.beta), &ctx.qp_from_padic(&g.alpha)),
            &ctx.qp_mul(&ctx.qp_from_padic(&h.alpha), &pm_c),
        ),
    );
    let den = ctx.qp_sub(
        &one,
        &ctx.qp_mul(
            &ctx.qp_mul(&af, &ctx.qp_from_padic(&g.beta)),
            &ctx.qp_mul(&ctx.qp_from_padic(&h.beta), &pm_c),
        ),
    );
    if den.is_zero() {
        return Err(Error::ExceptionalPoint);
    }
    let lead = ctx.qp_mul(&ctx.qp_from_padic(&ctx.from_i64(ctx.p() as i64 - 1)), &af);
    let tail = if w.balanced {
        let k = (w.c - w.x) as u64;
        let mut r = BigRational::new(1.into(), big_factorial(k));
        if k % 2 == 1 {
            r = -r;
        }
        ctx.qp_from_rational(&r)
    } else {
        if w.x - w.c - 1 < 0 {
            return Err(invalid("unbalanced branch needs x − c − 1 ≥ 0"));
        }
        ctx.qp_from_rational(&BigRational::from_integer(big_factorial(
            (w.x - w.c - 1) as u64,
        )))
    };
    let ratio = ctx.qp_mul(&num, &ctx.qp_inv(&den)?);
    Ok(ctx.qp_mul(&ctx.qp_mul(&lead, &ratio), &tail))
}

// --- Coordinates in a finite span ---------------------------------------------

/// Coordinates of ω in the span of `basis`, determined on a greedily chosen
/// set of unit-pivot coefficient rows and certified against the whole
/// window `0..=upto`. Row selection runs a column echelon pass, so bases
/// whose members first differ far out (eigenseries agreeing up to q^{p−1},
/// say) still resolve.
pub fn span_coordinates(
    omega: &QSeries,
    basis: &[QSeries],
    upto: usize,
) -> Result<Vec<PadicNum>> {
    if basis.is_empty() {
        return Err(invalid("basis must be nonempty"));
    }
    let ctx = omega.ctx().clone();
    let d = basis.len();
    if upto >= omega.coeffs().len() || basis.iter().any(|b| upto >= b.coeffs().len()) {
        return Err(invalid("window exceeds the available q-precision"));
    }
    let mut cols: Vec<Vec<PadicNum>> = basis
        .iter()
        .map(|b| b.coeffs()[..=upto].to_vec())
        .collect();
    let mut pivot_rows: Vec<usize> = Vec::with_capacity(d);
    for j in 0..d {
        let row = (1..=upto)
            .find(|n| !pivot_rows.contains(n) && ctx.val_lb(&cols[j][*n]) == 0)
            .ok_or(Error::BasisDoesNotResolve)?;
        pivot_rows.push(row);
        let piv_inv = ctx.inv(&cols[j][row])?;
        for j2 in (j + 1)..d {
            let f = ctx.mul(&cols[j2][row], &piv_inv);
            for m in 0..=upto {
                let t = ctx.mul(&f, &cols[j][m]);
                let cur = cols[j2][m];
                cols[j2][m] = ctx.sub(&cur, &t);
            }
        }
    }
    let mut entries = Vec::with_capacity(d * d);
    for &n in &pivot_rows {
        for b in basis {
            entries.push(*b.coeff(n));
        }
    }
    let mat = PadicMatrix::new(&ctx, d, entries)?;
    let inv = mat.inv().map_err(|_| Error::BasisDoesNotResolve)?;
    let rhs: Vec<PadicNum> = pivot_rows.iter().map(|&n| *omega.coeff(n)).collect();
    let coords = inv.mul_vec(&rhs);
    let mut recon = QSeries::zero(&ctx);
    for (c, b) in coords.iter().zip(basis) {
        recon = recon.add(&b.scale(c));
    }
    let k = omega.min_prec().min(recon.min_prec());
    if !omega.congruent_upto(&recon, k, upto)? {
        return Err(Error::OutsideBasisSpan);
    }
    Ok(coords)
}

/// Coefficient of `basis[target]` in the expansion of ω over the basis.
pub fn isotypic_extract(
    omega: &QSeries,
    basis: &[QSeries],
    target: usize,
) -> Result<PadicNum> {
    if target >= basis.len() {
        return Err(invalid("target index out of range"));
    }
    let upto = omega.coeffs().len() - 1;
    let coords = span_coordinates(omega, basis, upto)?;
    Ok(coords[target])
}

/// Matrix of U on a finite U-closed span, assembled column by column; the
/// certification window is ⌊Q/p⌋ since U divides the usable range by p.
pub fn span_u_matrix(span: &[QSeries]) -> Result<PadicMatrix> {
    if span.is_empty() {
        return Err(invalid("span must be nonempty"));
    }
    let ctx = span[0].ctx().clone();
    let window = (span[0].coeffs().len() - 1) / ctx.p() as usize;
    if window < span.len() {
        return Err(invalid("q-precision too small for the span size"));
    }
    let d = span.len();
    let mut m = PadicMatrix::zero(&ctx, d);
    for (j, s) in span.iter().enumerate() {
        let us = u_op(s);
        let coords = span_coordinates(&us, span, window)?;
        for i in 0..d {
            m.set(i, j, coords[i]);
        }
    }
    Ok(m)
}

/// Slope-≤a projection of f through a finite U-closed spanning set.
pub fn span_slope_projection(
    f: &QSeries,
    span: &[QSeries],
    a: Rational64,
) -> Result<QSeries> {
    let ctx = f.ctx().clone();
    let u_mat = span_u_matrix(span)?;
    let e = slope_projector(&u_mat, a)?;
    let window = (f.coeffs().len() - 1) / ctx.p() as usize;
    let coords = span_coordinates(f, span, window)?;
    let image = e.mul_vec(&coords);
    let mut out = QSeries::zero(&ctx);
    for (c, b) in image.iter().zip(span) {
        out = out.add(&b.scale(c));
    }
    Ok(out)
}

/// Synthetic U-eigenseries `q + αq^p + α²q^{p²} + …` with `U s = α·s`.
pub fn u_eigen_series(ctx: &Context, alpha: &PadicNum) -> QSeries {
    let mut s = QSeries::zero(ctx);
    let mut idx = 1usize;
    let mut coef = ctx.one();
    while idx <= ctx.qprec() {
        s.set_coeff(idx, coef);
        coef = ctx.mul(&coef, alpha);
        match idx.checked_mul(ctx.p() as usize) {
            Some(next) => idx = next,
            None => break,
        }
    }
    s
}

// --- The L-value numerator pipeline ------------------------------------------

/// Weight-x q-expansion of `H†(∇^{−t}(g_y^{[p]}) × h_z)` from stabilized
/// input forms, returned denominator-cleared as (numerator, denominator).
/// The projection identity against the `pr∘primitive` pipeline is checked
/// en route and a disagreement is reported with the first offending index.
pub fn lvalue_numerator(
    g: &EigenData,
    h: &EigenData,
    w: &TripleWeights,
) -> Result<(QSeries, PadicNum)> {
    if !w.balanced {
        return Err(invalid("the numerator pipeline needs balanced weights"));
    }
    if g.weight != w.y || h.weight != w.z {
        return Err(invalid("weights of the eigen data must match the triple"));
    }
    let gq = g
        .coeffs
        .as_ref()
        .ok_or_else(|| invalid("g needs q-expansion coefficients"))?;
    let hq = h
        .coeffs
        .as_ref()
        .ok_or_else(|| invalid("h needs q-expansion coefficients"))?;
    let ctx = gq.ctx().clone();
    if ctx.qprec() < ctx.p() as usize {
        return Err(invalid("q-precision too small for the U/V depth"));
    }
    // Depletion swallows the stabilization: (1 − β_g V)g and g have the
    // same p-depletion, so the depleted side is built from g directly.
    let g_dep = deplete(&p_stabilize(gq, &g.beta));
    let h_stab = p_stabilize(hq, &h.beta);
    let moved = nabla_pow(
        &WElement::from_form(g_dep.clone(), ctx.classical_char(w.y)),
        &ctx.classical_char(-w.t),
    )?;
    let prod = mul_by_form(&moved, &h_stab, &ctx.classical_char(w.z));
    let (direct, den) = oc_project_parts(&prod)?;
    // Lemma check: (−1)^{t−1}(t−1)!·direct must equal the pr∘primitive side.
    let mut scalar = big_factorial((w.t - 1) as u64);
    if (w.t - 1) % 2 == 1 {
        scalar = -scalar;
    }
    let scaled = direct.scale(&ctx.from_bigint(&scalar));
    let other = lemma_rhs(&g_dep, &h_stab, w.y, w.z, w.t)?;
    let k = scaled.min_prec().min(other.min_prec());
    if let Some(n) = scaled.first_difference(&other, k)? {
        return Err(Error::FormulationMismatch(format!(
            "numerator pipelines differ first at q^{n}"
        )));
    }
    Ok((direct, den))
}

// --- Assembly -----------------------------------------------------------------

fn gz_prefactor(ctx: &Context, ef: &EulerFactors, t: i64) -> Result<Qp> {
    if t < 1 {
        return Err(invalid("assembly needs t ≥ 1"));
    }
    let mut r = BigRational::new(1.into(), big_factorial((t - 1) as u64));
    if (t - 1) % 2 == 1 {
        r = -r;
    }
    let sc = ctx.qp_from_rational(&r);
    Ok(ctx.qp_mul(
        &sc,
        &ctx.qp_mul(&ef.e, &ctx.qp_inv(&ctx.qp_mul(&ef.e0, &ef.e1))?),
    ))
}

/// `ℒ = (−1)^{t−1}·ℰ/((t−1)!·ℰ₀·ℰ₁) · AJ`.
pub fn gz_assemble(
    ctx: &Context,
    aj_value: &Qp,
    f: &EigenData,
    g: &EigenData,
    h: &EigenData,
    w: &TripleWeights,
) -> Result<Qp> {
    let ef = euler_factors(ctx, f, g, h, w)?;
    if ef.e0.is_zero() || ef.e1.is_zero() {
        return Err(Error::ExceptionalEulerFactor);
    }
    let pref = gz_prefactor(ctx, &ef, w.t)?;
    Ok(ctx.qp_mul(&pref, aj_value))
}

/// Inverse of [`gz_assemble`] on scalars.
pub fn gz_disassemble(
    ctx: &Context,
    l_value: &Qp,
    f: &EigenData,
    g: &EigenData,
    h: &EigenData,
    w: &TripleWeights,
) -> Result<Qp> {
    let ef = euler_factors(ctx, f, g, h, w)?;
    if ef.e.is_zero() || ef.e0.is_zero() || ef.e1.is_zero() {
        return Err(Error::ExceptionalEulerFactor);
    }
    let pref = gz_prefactor(ctx, &ef, w.t)?;
    Ok(ctx.qp_mul(l_value, &ctx.qp_inv(&pref)?))
}
