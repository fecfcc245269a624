//! Finite-dimensional slope theory: Fredholm determinants, Newton
//! polygons, slope-≤a projectors, Riesz generalized-eigenspace
//! decomposition, and the adjoint-pairing check.
//!
//! Slopes of a square matrix U are the valuations of its nonzero
//! eigenvalues, read off the lower Newton polygon of `det(1 − TU)`. The
//! projector onto the slope-≤a part is built from the canonical integer
//! lift: raise `U^v` (v clearing slope denominators) to a power high
//! enough that the slope gap dominates Jordan defects, split the lattice
//! along the Smith normal form of that power, and conjugate the 0/1
//! projector back. Everything runs in exact integer arithmetic at a
//! working modulus far above p^M, so the identities `e² = e`, `eU = Ue`
//! and `e|ker U = 0` hold at the full tracked precision of the result.
//!
//! The Riesz projector for a resolvent pole λ is the same split applied
//! to powers of `1 − λU`, keeping the near-kernel side.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};
use crate::padic::{Context, PadicNum};

/// Square matrix over Z_p; precision is the minimum entry precision.
#[derive(Clone, Debug)]
pub struct PadicMatrix {
    ctx: Context,
    n: usize,
    entries: Vec<PadicNum>,
}

impl PadicMatrix {
    pub fn new(ctx: &Context, n: usize, entries: Vec<PadicNum>) -> Result<PadicMatrix> {
        if n == 0 || entries.len() != n * n {
            return Err(invalid("matrix needs n×n entries with n ≥ 1"));
        }
        Ok(PadicMatrix {
            ctx: ctx.clone(),
            n,
            entries,
        })
    }

    pub fn zero(ctx: &Context, n: usize) -> PadicMatrix {
        PadicMatrix {
            ctx: ctx.clone(),
            n,
            entries: vec![ctx.zero(); n * n],
        }
    }

    pub fn identity(ctx: &Context, n: usize) -> PadicMatrix {
        let mut m = PadicMatrix::zero(ctx, n);
        for i in 0..n {
            m.set(i, i, ctx.one());
        }
        m
    }

    pub fn from_i64(ctx: &Context, n: usize, vals: &[i64]) -> Result<PadicMatrix> {
        let entries = vals.iter().map(|&v| ctx.from_i64(v)).collect();
        PadicMatrix::new(ctx, n, entries)
    }

    pub fn ctx(&self) -> &Context {
        &self.ctx
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &PadicNum {
        &self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: PadicNum) {
        self.entries[i * self.n + j] = v;
    }

    pub fn entries(&self) -> &[PadicNum] {
        &self.entries
    }

    pub fn min_prec(&self) -> u32 {
        self.entries.iter().map(|e| e.prec()).min().unwrap()
    }

    pub fn add(&self, other: &PadicMatrix) -> PadicMatrix {
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| self.ctx.add(a, b))
            .collect();
        PadicMatrix {
            ctx: self.ctx.clone(),
            n: self.n,
            entries,
        }
    }

    pub fn sub(&self, other: &PadicMatrix) -> PadicMatrix {
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| self.ctx.sub(a, b))
            .collect();
        PadicMatrix {
            ctx: self.ctx.clone(),
            n: self.n,
            entries,
        }
    }

    pub fn scale(&self, s: &PadicNum) -> PadicMatrix {
        let entries = self.entries.iter().map(|a| self.ctx.mul(a, s)).collect();
        PadicMatrix {
            ctx: self.ctx.clone(),
            n: self.n,
            entries,
        }
    }

    pub fn mul(&self, other: &PadicMatrix) -> PadicMatrix {
        let c = &self.ctx;
        let n = self.n;
        let mut out = PadicMatrix::zero(c, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = c.zero();
                for k in 0..n {
                    acc = c.add(&acc, &c.mul(self.get(i, k), other.get(k, j)));
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[PadicNum]) -> Vec<PadicNum> {
        let c = &self.ctx;
        (0..self.n)
            .map(|i| {
                let mut acc = c.zero();
                for k in 0..self.n {
                    acc = c.add(&acc, &c.mul(self.get(i, k), &v[k]));
                }
                acc
            })
            .collect()
    }

    pub fn transpose(&self) -> PadicMatrix {
        let mut out = PadicMatrix::zero(&self.ctx, self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(j, i, *self.get(i, j));
            }
        }
        out
    }

    pub fn trace(&self) -> PadicNum {
        let c = &self.ctx;
        let mut acc = c.zero();
        for i in 0..self.n {
            acc = c.add(&acc, self.get(i, i));
        }
        acc
    }

    pub fn congruent_mod(&self, other: &PadicMatrix, k: u32) -> Result<bool> {
        for (a, b) in self.entries.iter().zip(&other.entries) {
            if !self.ctx.congruent_mod(a, b, k)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Inverse of a matrix whose determinant is a unit, by pivoted
    /// elimination; errors when no unit pivot exists.
    pub fn inv(&self) -> Result<PadicMatrix> {
        let c = &self.ctx;
        let n = self.n;
        let mut a = self.clone();
        let mut inv = PadicMatrix::identity(c, n);
        for col in 0..n {
            let pivot_row = (col..n)
                .find(|&r| c.val_lb(a.get(r, col)) == 0)
                .ok_or(Error::NotInvertible)?;
            if pivot_row != col {
                for j in 0..n {
                    let tmp = *a.get(col, j);
                    a.set(col, j, *a.get(pivot_row, j));
                    a.set(pivot_row, j, tmp);
                    let tmp = *inv.get(col, j);
                    inv.set(col, j, *inv.get(pivot_row, j));
                    inv.set(pivot_row, j, tmp);
                }
            }
            let piv_inv = c.inv(a.get(col, col))?;
            for j in 0..n {
                a.set(col, j, c.mul(a.get(col, j), &piv_inv));
                inv.set(col, j, c.mul(inv.get(col, j), &piv_inv));
            }
            for r in 0..n {
                if r == col || a.get(r, col).is_zero() {
                    continue;
                }
                let f = *a.get(r, col);
                for j in 0..n {
                    let sa = c.sub(a.get(r, j), &c.mul(&f, a.get(col, j)));
                    a.set(r, j, sa);
                    let si = c.sub(inv.get(r, j), &c.mul(&f, inv.get(col, j)));
                    inv.set(r, j, si);
                }
            }
        }
        Ok(inv)
    }
}

/// Coefficients of `det(1 − TU)`, constant term 1.
#[derive(Clone, Debug)]
pub struct CharSeries {
    ctx: Context,
    coeffs: Vec<PadicNum>,
}

impl CharSeries {
    pub fn coeffs(&self) -> &[PadicNum] {
        &self.coeffs
    }

    /// Highest index with a visibly nonzero coefficient.
    pub fn degree(&self) -> usize {
        (0..self.coeffs.len())
            .rev()
            .find(|&k| !self.coeffs[k].is_zero())
            .unwrap_or(0)
    }

    /// Evaluate at a scalar.
    pub fn eval(&self, x: &PadicNum) -> PadicNum {
        let c = &self.ctx;
        let mut acc = c.zero();
        for k in (0..self.coeffs.len()).rev() {
            acc = c.add(&c.mul(&acc, x), &self.coeffs[k]);
        }
        acc
    }
}

fn det_rect(u: &PadicMatrix, rows: &[usize], cols: &[usize]) -> PadicNum {
    let c = u.ctx();
    if rows.is_empty() {
        return c.one();
    }
    let mut acc = c.zero();
    for (pos, &col) in cols.iter().enumerate() {
        let mut rest: Vec<usize> = cols.to_vec();
        rest.remove(pos);
        let term = c.mul(u.get(rows[0], col), &det_rect(u, &rows[1..], &rest));
        if pos % 2 == 0 {
            acc = c.add(&acc, &term);
        } else {
            acc = c.sub(&acc, &term);
        }
    }
    acc
}

/// `det(1 − TU)` via principal minors: the T^k coefficient is
/// `(−1)^k Σ_{|S|=k} det(U_S)`.
pub fn fredholm_det(u: &PadicMatrix) -> CharSeries {
    let c = u.ctx().clone();
    let n = u.dim();
    let mut coeffs = vec![c.zero(); n + 1];
    coeffs[0] = c.one();
    for mask in 1u32..(1 << n) {
        let rows: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let k = rows.len();
        let d = det_rect(u, &rows, &rows);
        if k % 2 == 0 {
            coeffs[k] = c.add(&coeffs[k], &d);
        } else {
            coeffs[k] = c.sub(&coeffs[k], &d);
        }
    }
    CharSeries { ctx: c, coeffs }
}

/// Ascending lower-hull slopes of the Newton polygon of P, with
/// multiplicities: the valuations of the nonzero U-eigenvalues.
pub fn newton_slopes(p_ser: &CharSeries) -> Result<Vec<(Rational64, usize)>> {
    let c = &p_ser.ctx;
    // Resolved points (k, val); residue-zero coefficients carry only the
    // bound val ≥ prec and stay off the polygon.
    let mut pts: Vec<(i64, i64)> = Vec::new();
    let mut bounds: Vec<(i64, i64)> = Vec::new();
    for (k, coef) in p_ser.coeffs.iter().enumerate() {
        if coef.is_zero() {
            bounds.push((k as i64, coef.prec() as i64));
        } else {
            pts.push((k as i64, c.val_lb(coef) as i64));
        }
    }
    // Lower convex hull, left to right (monotone chain).
    let mut hull: Vec<(i64, i64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // Drop b when it lies on or above the segment a→p.
            if (b.1 - a.1) * (p.0 - a.0) >= (p.1 - a.1) * (b.0 - a.0) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    // A residue-zero coefficient whose precision bound dips below the hull
    // could change the polygon: unresolved.
    for &(k, bound) in &bounds {
        for w in hull.windows(2) {
            let (a, b) = (w[0], w[1]);
            if k > a.0 && k < b.0 {
                // hull height at k: a.1 + (b.1−a.1)(k−a.0)/(b.0−a.0)
                let lhs = bound * (b.0 - a.0);
                let rhs = a.1 * (b.0 - a.0) + (b.1 - a.1) * (k - a.0);
                if lhs < rhs {
                    return Err(Error::NewtonPolygonUnresolved);
                }
            }
        }
    }
    let mut out = Vec::new();
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        let slope = Rational64::new(b.1 - a.1, b.0 - a.0);
        out.push((slope, (b.0 - a.0) as usize));
    }
    Ok(out)
}

// --- Exact integer-lift machinery -------------------------------------------

#[derive(Clone)]
struct BigMat {
    n: usize,
    e: Vec<BigInt>,
}

impl BigMat {
    fn zero(n: usize) -> BigMat {
        BigMat {
            n,
            e: vec![BigInt::zero(); n * n],
        }
    }

    fn identity(n: usize) -> BigMat {
        let mut m = BigMat::zero(n);
        for i in 0..n {
            m.e[i * n + i] = BigInt::one();
        }
        m
    }

    fn from_padic(u: &PadicMatrix) -> BigMat {
        let n = u.dim();
        let mut m = BigMat::zero(n);
        for i in 0..n {
            for j in 0..n {
                m.e[i * n + j] = BigInt::from_biguint(Sign::Plus, u.ctx().lift(u.get(i, j)));
            }
        }
        m
    }

    fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.e[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.e[i * self.n + j] = v;
    }

    fn reduce(&mut self, m: &BigInt) {
        for v in &mut self.e {
            *v = v.mod_floor(m);
        }
    }

    fn mul(&self, other: &BigMat, m: &BigInt) -> BigMat {
        let n = self.n;
        let mut out = BigMat::zero(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = BigInt::zero();
                for k in 0..n {
                    acc += self.get(i, k) * other.get(k, j);
                }
                out.set(i, j, acc.mod_floor(m));
            }
        }
        out
    }

    fn pow(&self, mut e: u64, m: &BigInt) -> BigMat {
        let mut base = self.clone();
        base.reduce(m);
        let mut acc = BigMat::identity(self.n);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base, m);
            }
            base = base.mul(&base, m);
            e >>= 1;
        }
        acc
    }
}

fn big_val(x: &BigInt, p: u64, cap: u32) -> u32 {
    if x.is_zero() {
        return cap;
    }
    let pb = BigInt::from(p);
    let mut v = 0;
    let mut r = x.clone();
    while v < cap && (&r % &pb).is_zero() {
        r /= &pb;
        v += 1;
    }
    v
}

fn big_inv_unit(x: &BigInt, modulus: &BigInt) -> BigInt {
    // Unit inverse mod p^w by extended Euclid.
    let e = x.extended_gcd(modulus);
    e.x.mod_floor(modulus)
}

/// Smith-style decomposition over Z/p^w: returns (L, R^{-1}, vals) with
/// the input ≡ L·D·R, D diagonal with val(D_ii) = vals[i], and the column
/// operations mirrored onto R^{-1}.
fn smith_split(mut b: BigMat, p: u64, w: u32, modulus: &BigInt) -> (BigMat, BigMat, Vec<u32>) {
    let n = b.n;
    let mut l = BigMat::identity(n);
    let mut rinv = BigMat::identity(n);
    let mut vals = vec![w; n];
    for k in 0..n {
        // Global minimum-valuation pivot in the trailing submatrix.
        let mut best: Option<(usize, usize, u32)> = None;
        for i in k..n {
            for j in k..n {
                let v = big_val(b.get(i, j), p, w);
                if best.map_or(true, |(_, _, bv)| v < bv) {
                    best = Some((i, j, v));
                }
            }
        }
        let (pi, pj, pv) = best.unwrap();
        if pv >= w {
            break;
        }
        // Move pivot to (k,k): row swap mirrors onto L columns, column swap
        // onto R^{-1} columns.
        if pi != k {
            for j in 0..n {
                b.e.swap(k * n + j, pi * n + j);
            }
            for i in 0..n {
                l.e.swap(i * n + k, i * n + pi);
            }
        }
        if pj != k {
            for i in 0..n {
                b.e.swap(i * n + k, i * n + pj);
            }
            for i in 0..n {
                rinv.e.swap(i * n + k, i * n + pj);
            }
        }
        vals[k] = pv;
        let p_pow: BigInt = BigInt::from(p).pow(pv);
        let unit = (b.get(k, k) / &p_pow).mod_floor(modulus);
        let unit_inv = big_inv_unit(&unit, modulus);
        // Clear column k below and row k to the right; every entry there
        // has valuation ≥ pv, so the factors are exact.
        for i in k + 1..n {
            let v = b.get(i, k).clone();
            if v.is_zero() {
                continue;
            }
            let f = ((&v / &p_pow) * &unit_inv).mod_floor(modulus);
            for j in 0..n {
                let nv = (b.get(i, j) - &f * b.get(k, j)).mod_floor(modulus);
                b.set(i, j, nv);
            }
            // Row op E on B mirrors as L ← L·E^{-1}: col_k += f·col_i.
            for r in 0..n {
                let nv = (l.get(r, k) + &f * l.get(r, i)).mod_floor(modulus);
                l.set(r, k, nv);
            }
        }
        for j in k + 1..n {
            let v = b.get(k, j).clone();
            if v.is_zero() {
                continue;
            }
            let f = ((&v / &p_pow) * &unit_inv).mod_floor(modulus);
            for i in 0..n {
                let nv = (b.get(i, j) - &f * b.get(i, k)).mod_floor(modulus);
                b.set(i, j, nv);
            }
            // Column op mirrored identically onto R^{-1}.
            for i in 0..n {
                let nv = (rinv.get(i, j) - &f * rinv.get(i, k)).mod_floor(modulus);
                rinv.set(i, j, nv);
            }
        }
    }
    (l, rinv, vals)
}

/// Solve C·X = I over Z/p^w by valuation-pivoted elimination; exact when
/// the true inverse is p-integral, error otherwise.
fn big_inv_matrix(c: &BigMat, p: u64, w: u32, modulus: &BigInt) -> Result<BigMat> {
    let n = c.n;
    let mut a = c.clone();
    let mut x = BigMat::identity(n);
    for col in 0..n {
        let mut best: Option<(usize, u32)> = None;
        for r in col..n {
            let v = big_val(a.get(r, col), p, w);
            if best.map_or(true, |(_, bv)| v < bv) {
                best = Some((r, v));
            }
        }
        let (pr, pv) = best.unwrap();
        if pv >= w {
            return Err(Error::NoSlopeGap(
                "subspace basis is singular at working precision".into(),
            ));
        }
        if pr != col {
            for j in 0..n {
                a.e.swap(col * n + j, pr * n + j);
                x.e.swap(col * n + j, pr * n + j);
            }
        }
        let p_pow: BigInt = BigInt::from(p).pow(pv);
        let unit = (a.get(col, col) / &p_pow).mod_floor(modulus);
        let unit_inv = big_inv_unit(&unit, modulus);
        if pv > 0 {
            // Divide the pivot row by p^pv exactly; a remainder means the
            // inverse is not p-integral.
            for j in 0..n {
                let va = a.get(col, j).clone();
                let vx = x.get(col, j).clone();
                if !(&va % &p_pow).is_zero() || !(&vx % &p_pow).is_zero() {
                    return Err(Error::NonIntegralOutput);
                }
                a.set(col, j, va / &p_pow);
                x.set(col, j, vx / &p_pow);
            }
        }
        for j in 0..n {
            let nv = (a.get(col, j) * &unit_inv).mod_floor(modulus);
            a.set(col, j, nv);
            let nv = (x.get(col, j) * &unit_inv).mod_floor(modulus);
            x.set(col, j, nv);
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a.get(r, col).clone();
            if f.is_zero() {
                continue;
            }
            for j in 0..n {
                let nv = (a.get(r, j) - &f * a.get(col, j)).mod_floor(modulus);
                a.set(r, j, nv);
                let nv = (x.get(r, j) - &f * x.get(col, j)).mod_floor(modulus);
                x.set(r, j, nv);
            }
        }
    }
    Ok(x)
}

/// Core split: SNF of `base^power` at working precision, keep `d_keep`
/// directions (the small-valuation side when `keep_small`, the
/// near-kernel side otherwise), return the projector onto the kept part
/// along the other.
fn snf_projector(
    ctx: &Context,
    base: &BigMat,
    power: u64,
    w: u32,
    d_keep: usize,
    keep_small: bool,
    min_gap: u32,
) -> Result<PadicMatrix> {
    let n = base.n;
    let modulus = BigInt::from(ctx.p()).pow(w);
    let powered = base.pow(power, &modulus);
    let (l, rinv, vals) = smith_split(powered, ctx.p(), w, &modulus);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| vals[i]);
    let d_small = if keep_small { d_keep } else { n - d_keep };
    if d_small > 0 && d_small < n {
        let lo = vals[order[d_small - 1]];
        let hi = vals[order[d_small]];
        if hi < lo.saturating_add(min_gap) {
            return Err(Error::NoSlopeGap(format!(
                "valuation spectrum does not separate: {lo} vs {hi} at working precision"
            )));
        }
    }
    // Basis: image directions (columns of L) for the small side, stable
    // directions (columns of R^{-1}) for the large side.
    let mut c = BigMat::zero(n);
    for (pos, &idx) in order.iter().enumerate() {
        for r in 0..n {
            let v = if pos < d_small {
                l.get(r, idx).clone()
            } else {
                rinv.get(r, idx).clone()
            };
            c.set(r, pos, v);
        }
    }
    let c_inv = big_inv_matrix(&c, ctx.p(), w, &modulus)?;
    // Projector = C · diag(kept) · C^{-1}.
    let mut proj = BigMat::zero(n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = BigInt::zero();
            for k in 0..n {
                let kept = if keep_small { k < d_small } else { k >= d_small };
                if kept {
                    acc += c.get(i, k) * c_inv.get(k, j);
                }
            }
            proj.set(i, j, acc.mod_floor(&modulus));
        }
    }
    let mut out = PadicMatrix::zero(ctx, n);
    for i in 0..n {
        for j in 0..n {
            let big = proj.get(i, j).to_biguint().unwrap_or_else(BigUint::zero);
            out.set(i, j, ctx.from_biguint(&big));
        }
    }
    Ok(out)
}

/// Projector onto the span of generalized eigenspaces with slope ≤ a
/// (boundary included), commuting with U and vanishing on ker U.
pub fn slope_projector(u: &PadicMatrix, a: Rational64) -> Result<PadicMatrix> {
    if a < Rational64::zero() {
        return Err(invalid("slope bound must be nonnegative"));
    }
    let ctx = u.ctx().clone();
    let n = u.dim();
    let slopes = newton_slopes(&fredholm_det(u))?;
    let d: usize = slopes
        .iter()
        .filter(|(s, _)| *s <= a)
        .map(|(_, m)| m)
        .sum();
    if d == 0 {
        return Ok(PadicMatrix::zero(&ctx, n));
    }
    if d == n {
        return Ok(PadicMatrix::identity(&ctx, n));
    }
    let mut v: u64 = 1;
    for (s, _) in &slopes {
        v = v.lcm(&(*s.denom() as u64));
    }
    // Power high enough that slope gaps dominate Jordan and basis defects.
    let m_steps: u64 = 32;
    let included_max = slopes
        .iter()
        .filter(|(s, _)| *s <= a)
        .map(|(s, _)| *s)
        .max()
        .unwrap();
    let u_int = (included_max * Rational64::from_integer(v as i64))
        .to_integer()
        .to_u64()
        .unwrap();
    let w = (v * m_steps * (u_int + 2) + ctx.prec() as u64 + 64) as u32;
    let base = BigMat::from_padic(u);
    snf_projector(&ctx, &base, v * m_steps, w, d, true, (m_steps / 2) as u32)
}

/// Riesz projector onto N(λ) = ker(1−λU)^h along its complement, with the
/// order h of the pole. λ must be a unit with P(λ) ≡ 0 at precision.
pub fn riesz_projector(u: &PadicMatrix, lambda: &PadicNum) -> Result<(PadicMatrix, usize)> {
    let ctx = u.ctx().clone();
    let n = u.dim();
    let p_ser = fredholm_det(u);
    let at_lambda = p_ser.eval(lambda);
    if !at_lambda.is_zero() {
        return Err(Error::NotResolventPole);
    }
    // B = 1 − λU as an exact lift.
    let mut b = BigMat::identity(n);
    let lam = BigInt::from_biguint(Sign::Plus, ctx.lift(lambda));
    let ub = BigMat::from_padic(u);
    let w = 32 * ctx.prec() + 64;
    let modulus = BigInt::from(ctx.p()).pow(w);
    for i in 0..n {
        for j in 0..n {
            let v = (b.get(i, j) - &lam * ub.get(i, j)).mod_floor(&modulus);
            b.set(i, j, v);
        }
    }
    // Classify: the cluster directions are those where B^32 nearly
    // vanishes; the data resolves them down to radius p².
    let power: u64 = 32;
    let mmod = BigInt::from(ctx.p()).pow(w);
    let powered = b.pow(power, &mmod);
    let (_, _, vals) = smith_split(powered, ctx.p(), w, &mmod);
    let tau = (power as u32) * 2 - (power as u32) / 4;
    let h = vals.iter().filter(|&&v| v >= tau).count();
    if h == 0 {
        return Err(Error::NotResolventPole);
    }
    if h == n {
        return Ok((PadicMatrix::identity(&ctx, n), n));
    }
    let proj = snf_projector(&ctx, &b, power, w, h, false, (power / 2) as u32)?;
    Ok((proj, h))
}

// --- Pairing lemma harness ---------------------------------------------------

/// Outcome of the adjoint-pairing check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PairingStatus {
    Pass,
    Fail,
    /// val(α) > a: the hypothesis fails and no conclusion is claimed.
    NotApplicable,
}

#[derive(Clone, Debug)]
pub struct PairingReport {
    pub status: PairingStatus,
    pub alpha: PadicNum,
    pub alpha_val: u32,
    /// Worst (smallest) valuation of ⟨η,m⟩ − ⟨η,e m⟩ over the test vectors.
    pub worst_discrepancy_val: u32,
    /// Index of the first test vector violating the congruence, if any.
    pub witness: Option<usize>,
}

fn pair(ctx: &Context, x: &[PadicNum], phi: &PadicMatrix, y: &[PadicNum]) -> PadicNum {
    let py = phi.mul_vec(y);
    let mut acc = ctx.zero();
    for (a, b) in x.iter().zip(&py) {
        acc = ctx.add(&acc, &ctx.mul(a, b));
    }
    acc
}

/// Check `⟨η, m⟩ = ⟨η, e^{≤a} m⟩` for a φ-eigenvector η of slope ≤ a,
/// given the adjointness `⟨m₁, U m₂⟩ = ⟨φ m₁, m₂⟩`.
pub fn verify_pairing_lemma(
    u: &PadicMatrix,
    big_phi: &PadicMatrix,
    small_phi: &PadicMatrix,
    eta: &[PadicNum],
    a: Rational64,
    test_vectors: &[Vec<PadicNum>],
    cmp_prec: u32,
) -> Result<PairingReport> {
    let ctx = u.ctx().clone();
    // Adjointness is the matrix identity Φ·U = φᵀ·Φ.
    let lhs = big_phi.mul(u);
    let rhs = small_phi.transpose().mul(big_phi);
    let k = lhs.min_prec().min(rhs.min_prec()).min(cmp_prec);
    if !lhs.congruent_mod(&rhs, k)? {
        return Err(Error::NotAdjointPair);
    }
    // Recover α from the first visible component of η.
    let image = small_phi.mul_vec(eta);
    let lead = eta
        .iter()
        .position(|c| ctx.val_lb(c) == 0)
        .ok_or_else(|| invalid("eigenvector must have a unit coordinate"))?;
    let alpha = ctx.div(&image[lead], &eta[lead])?;
    for i in 0..eta.len() {
        let expect = ctx.mul(&alpha, &eta[i]);
        let kk = expect.prec().min(image[i].prec()).min(cmp_prec);
        if !ctx.congruent_mod(&image[i], &expect, kk)? {
            return Err(invalid("eta is not a phi-eigenvector at this precision"));
        }
    }
    let alpha_val = ctx.val_lb(&alpha);
    let applicable = Rational64::from_integer(alpha_val as i64) <= a;
    let e = slope_projector(u, a)?;
    let mut worst = ctx.prec();
    let mut witness = None;
    for (idx, m) in test_vectors.iter().enumerate() {
        let direct = pair(&ctx, eta, big_phi, m);
        let em = e.mul_vec(m);
        let through = pair(&ctx, eta, big_phi, &em);
        let delta = ctx.sub(&direct, &through);
        let val = ctx.val_lb(&delta);
        if val < worst {
            worst = val;
            if val < cmp_prec && witness.is_none() {
                witness = Some(idx);
            }
        }
    }
    let status = if !applicable {
        PairingStatus::NotApplicable
    } else if worst >= cmp_prec {
        PairingStatus::Pass
    } else {
        PairingStatus::Fail
    };
    Ok(PairingReport {
        status,
        alpha,
        alpha_val,
        worst_discrepancy_val: worst,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> Context {
        Context::new(5, 12, 4).unwrap()
    }

    #[test]
    fn fredholm_of_diagonal() {
        let c = ctx();
        let u = PadicMatrix::from_i64(&c, 2, &[1, 0, 0, 5]).unwrap();
        let p = fredholm_det(&u);
        // (1−T)(1−5T) = 1 − 6T + 5T².
        assert_eq!(p.coeffs()[0], c.one());
        assert_eq!(p.coeffs()[1], c.from_i64(-6));
        assert_eq!(p.coeffs()[2], c.from_i64(5));
        assert_eq!(p.degree(), 2);
    }

    #[test]
    fn fredholm_of_nilpotent_is_one() {
        let c = ctx();
        let u = PadicMatrix::from_i64(&c, 3, &[0, 1, 2, 0, 0, 3, 0, 0, 0]).unwrap();
        let p = fredholm_det(&u);
        assert_eq!(p.degree(), 0);
        assert_eq!(p.coeffs()[0], c.one());
    }

    #[test]
    fn newton_polygon_examples() {
        let c = ctx();
        let u = PadicMatrix::from_i64(&c, 2, &[1, 0, 0, 5]).unwrap();
        let s = newton_slopes(&fredholm_det(&u)).unwrap();
        assert_eq!(
            s,
            vec![
                (Rational64::from_integer(0), 1),
                (Rational64::from_integer(1), 1)
            ]
        );
        let u = PadicMatrix::from_i64(&c, 2, &[5, 0, 0, 5]).unwrap();
        let s = newton_slopes(&fredholm_det(&u)).unwrap();
        assert_eq!(s, vec![(Rational64::from_integer(1), 2)]);
        // Companion block with slope-1/2 pair.
        let u = PadicMatrix::from_i64(&c, 2, &[0, 1, 10, 0]).unwrap();
        let s = newton_slopes(&fredholm_det(&u)).unwrap();
        assert_eq!(s, vec![(Rational64::new(1, 2), 2)]);
    }

    #[test]
    fn slope_projector_on_diagonal() {
        let c = ctx();
        let u = PadicMatrix::from_i64(&c, 2, &[1, 0, 0, 5]).unwrap();
        let e0 = slope_projector(&u, Rational64::from_integer(0)).unwrap();
        let expect = PadicMatrix::from_i64(&c, 2, &[1, 0, 0, 0]).unwrap();
        assert!(e0.congruent_mod(&expect, 12).unwrap());
        let e1 = slope_projector(&u, Rational64::from_integer(1)).unwrap();
        assert!(e1
            .congruent_mod(&PadicMatrix::identity(&c, 2), 12)
            .unwrap());
    }

    #[test]
    fn slope_projector_kills_nilpotent() {
        let c = ctx();
        let u = PadicMatrix::from_i64(&c, 2, &[0, 1, 0, 0]).unwrap();
        let e = slope_projector(&u, Rational64::from_integer(0)).unwrap();
        assert!(e.congruent_mod(&PadicMatrix::zero(&c, 2), 12).unwrap());
    }

    #[test]
    fn slope_projector_mixed_with_conjugation() {
        let c = ctx();
        // P · diag(2, 5, 0-block…) with a slope-1/2 companion, conjugated.
        let d = PadicMatrix::from_i64(
            &c,
            4,
            &[2, 0, 0, 0, 0, 0, 1, 0, 0, 10, 0, 0, 0, 0, 0, 25],
        )
        .unwrap();
        let p_mat = PadicMatrix::from_i64(
            &c,
            4,
            &[1, 2, 0, 1, 0, 1, 3, 0, 1, 0, 1, 2, 2, 1, 0, 1],
        )
        .unwrap();
        let p_inv = p_mat.inv().unwrap();
        let u = p_mat.mul(&d).mul(&p_inv);
        // Slopes are {0, 1/2, 1/2, 2}.
        let s = newton_slopes(&fredholm_det(&u)).unwrap();
        assert_eq!(
            s,
            vec![
                (Rational64::from_integer(0), 1),
                (Rational64::new(1, 2), 2),
                (Rational64::from_integer(2), 1)
            ]
        );
        for (a, d_expect) in [
            (Rational64::from_integer(0), 1usize),
            (Rational64::new(1, 2), 3),
            (Rational64::from_integer(2), 4),
        ] {
            let e = slope_projector(&u, a).unwrap();
            // Idempotent, commutes, correct trace.
            assert!(e.mul(&e).congruent_mod(&e, 10).unwrap(), "a = {a}");
            assert!(e.mul(&u).congruent_mod(&u.mul(&e), 10).unwrap());
            let tr = e.trace();
            assert!(c
                .congruent_mod(&tr, &c.from_i64(d_expect as i64), 10)
                .unwrap());
        }
    }

    #[test]
    fn riesz_on_distinct_diagonal() {
        let c = ctx();
        let u = PadicMatrix::from_i64(&c, 2, &[2, 0, 0, 3]).unwrap();
        let lam = c.inv(&c.from_i64(2)).unwrap();
        let (pr, h) = riesz_projector(&u, &lam).unwrap();
        assert_eq!(h, 1);
        let expect = PadicMatrix::from_i64(&c, 2, &[1, 0, 0, 0]).unwrap();
        assert!(pr.congruent_mod(&expect, 10).unwrap());
    }

    #[test]
    fn riesz_on_scalar_and_jordan() {
        let c = ctx();
        let u = PadicMatrix::from_i64(&c, 2, &[2, 0, 0, 2]).unwrap();
        let lam = c.inv(&c.from_i64(2)).unwrap();
        let (pr, h) = riesz_projector(&u, &lam).unwrap();
        assert_eq!(h, 2);
        assert!(pr.congruent_mod(&PadicMatrix::identity(&c, 2), 10).unwrap());
        let u = PadicMatrix::from_i64(&c, 2, &[2, 1, 0, 2]).unwrap();
        let (pr, h) = riesz_projector(&u, &lam).unwrap();
        assert_eq!(h, 2);
        assert!(pr.congruent_mod(&PadicMatrix::identity(&c, 2), 10).unwrap());
    }

    #[test]
    fn riesz_rejects_non_pole() {
        let c = ctx();
        let u = PadicMatrix::from_i64(&c, 2, &[2, 0, 0, 3]).unwrap();
        assert!(matches!(
            riesz_projector(&u, &c.from_i64(2)),
            Err(Error::NotResolventPole)
        ));
    }

    #[test]
    fn pairing_lemma_worked_example() {
        let c = ctx();
        let u = PadicMatrix::from_i64(&c, 2, &[1, 0, 0, 5]).unwrap();
        let phi = PadicMatrix::from_i64(&c, 2, &[0, 1, -1, 0]).unwrap();
        // φ = (Φ U Φ^{-1})ᵀ = diag(5, 1).
        let small = PadicMatrix::from_i64(&c, 2, &[5, 0, 0, 1]).unwrap();
        let eta = vec![c.zero(), c.one()];
        let vectors = vec![
            vec![c.from_i64(3), c.from_i64(7)],
            vec![c.from_i64(1), c.from_i64(0)],
            vec![c.from_i64(4), c.from_i64(9)],
        ];
        let report = verify_pairing_lemma(
            &u,
            &phi,
            &small,
            &eta,
            Rational64::from_integer(0),
            &vectors,
            10,
        )
        .unwrap();
        assert_eq!(report.status, PairingStatus::Pass);
        assert_eq!(report.alpha, c.one());
        // The slope-1 eigenvector of φ fails the hypothesis: not applicable.
        let eta_bad = vec![c.one(), c.zero()];
        let report = verify_pairing_lemma(
            &u,
            &phi,
            &small,
            &eta_bad,
            Rational64::from_integer(0),
            &vectors,
            10,
        )
        .unwrap();
        assert_eq!(report.status, PairingStatus::NotApplicable);
        assert!(report.worst_discrepancy_val < 10);
    }

    #[test]
    fn pairing_lemma_rejects_non_adjoint() {
        let c = ctx();
        let u = PadicMatrix::from_i64(&c, 2, &[1, 0, 0, 5]).unwrap();
        let phi = PadicMatrix::from_i64(&c, 2, &[0, 1, -1, 0]).unwrap();
        let wrong = PadicMatrix::from_i64(&c, 2, &[1, 0, 0, 5]).unwrap();
        let eta = vec![c.zero(), c.one()];
        assert!(matches!(
            verify_pairing_lemma(
                &u,
                &phi,
                &wrong,
                &eta,
                Rational64::from_integer(0),
                &[],
                10
            ),
            Err(Error::NotAdjointPair)
        ));
    }
}
