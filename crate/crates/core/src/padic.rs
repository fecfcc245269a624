//! Truncated arithmetic in Z_p and weight characters t ↦ t^a·exp(u·log⟨t⟩).
//!
//! Every value lives in a [`Context`] fixing the prime `p ≥ 5`, a single
//! absolute precision `M` (all residues are canonical representatives in
//! `[0, p^M)`), and the q-expansion truncation order `Q`. A [`PadicNum`]
//! additionally tracks `prec ≤ M`, the number of digits actually guaranteed
//! after divisions; its residue is always reduced modulo `p^prec`.
//!
//! Weight characters are pairs `(a, u)` with `a ∈ Z` and `u ∈ p·Z_p`,
//! realizing `n ↦ n^a · exp(u · log⟨n⟩)` on units, where `⟨n⟩ = n/ω(n)` and
//! `ω` is the Teichmüller lift. The wild part is restricted to valuation
//! ≥ 1 (characters of the fixed radius-one disk); this makes `log⟨n⟩·u`
//! land in `p²·Z_p`, inside the convergence disk of `exp` for `p ≥ 5`.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};

/// Arithmetic context: prime, absolute precision, truncation order.
///
/// Cheap to clone; series and matrices own a copy. Two contexts are
/// interchangeable iff `(p, prec, qprec)` agree.
#[derive(Clone)]
pub struct Context {
    p: u64,
    prec: u32,
    qprec: usize,
    modulus: u128,
    inv_table: Arc<OnceLock<Vec<u128>>>,
}

impl PartialEq for Context {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.prec == other.prec && self.qprec == other.qprec
    }
}
impl Eq for Context {}

impl fmt::Debug for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Context(p={}, M={}, Q={})", self.p, self.prec, self.qprec)
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

impl Context {
    /// `p ≥ 5` prime, `prec = M ≥ 1`, `qprec = Q ≥ 1`. `p^M` must fit in 120 bits.
    pub fn new(p: u64, prec: u32, qprec: usize) -> Result<Context> {
        if !is_prime(p) {
            return Err(invalid(format!("p = {p} is not prime")));
        }
        if p < 5 {
            return Err(invalid("p must be at least 5"));
        }
        if prec == 0 {
            return Err(invalid("precision M must be at least 1"));
        }
        if qprec == 0 {
            return Err(invalid("q-expansion order Q must be at least 1"));
        }
        let mut modulus: u128 = 1;
        for _ in 0..prec {
            modulus = modulus
                .checked_mul(p as u128)
                .filter(|m| *m < (1u128 << 120))
                .ok_or_else(|| invalid("p^M exceeds the supported 120-bit range"))?;
        }
        Ok(Context {
            p,
            prec,
            qprec,
            modulus,
            inv_table: Arc::new(OnceLock::new()),
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Absolute precision M.
    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// q-expansion truncation order Q.
    pub fn qprec(&self) -> usize {
        self.qprec
    }

    /// p^M.
    pub fn modulus(&self) -> u128 {
        self.modulus
    }

    /// p^k for k ≤ M.
    pub fn p_pow(&self, k: u32) -> u128 {
        debug_assert!(k <= self.prec);
        (self.p as u128).pow(k)
    }

    #[inline]
    fn mul_mod(&self, a: u128, b: u128, m: u128) -> u128 {
        if m <= u64::MAX as u128 {
            (a * b) % m
        } else {
            // Only reached for very large M; exactness over speed.
            let big = BigUint::from(a) * BigUint::from(b) % BigUint::from(m);
            big.to_u128().unwrap()
        }
    }
}

/// Element of Z_p known modulo `p^prec`; residue reduced into `[0, p^prec)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PadicNum {
    residue: u128,
    prec: u32,
}

impl PadicNum {
    pub fn residue(&self) -> u128 {
        self.residue
    }

    /// Guaranteed absolute precision of this value.
    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn is_zero(&self) -> bool {
        self.residue == 0
    }
}

impl Context {
    pub(crate) fn make(&self, residue: u128, prec: u32) -> PadicNum {
        let prec = prec.min(self.prec);
        let m = self.p_pow(prec);
        PadicNum {
            residue: residue % m,
            prec,
        }
    }

    /// Forget digits: the same value, guaranteed only modulo `p^prec`.
    pub fn with_prec(&self, x: &PadicNum, prec: u32) -> PadicNum {
        self.make(x.residue, prec.min(x.prec))
    }

    pub fn zero(&self) -> PadicNum {
        self.make(0, self.prec)
    }

    pub fn one(&self) -> PadicNum {
        self.make(1, self.prec)
    }

    pub fn from_i64(&self, n: i64) -> PadicNum {
        self.from_i128(n as i128)
    }

    pub fn from_i128(&self, n: i128) -> PadicNum {
        let m = self.modulus as i128;
        let mut r = n % m;
        if r < 0 {
            r += m;
        }
        self.make(r as u128, self.prec)
    }

    pub fn from_biguint(&self, n: &BigUint) -> PadicNum {
        let r = n % BigUint::from(self.modulus);
        self.make(r.to_u128().unwrap(), self.prec)
    }

    pub fn from_bigint(&self, n: &BigInt) -> PadicNum {
        let m = BigInt::from(self.modulus);
        let mut r = n % &m;
        if r.is_negative() {
            r += &m;
        }
        self.make(r.to_u128().unwrap(), self.prec)
    }

    /// Canonical integer lift of the residue.
    pub fn lift(&self, x: &PadicNum) -> BigUint {
        BigUint::from(x.residue)
    }

    /// Lower bound for the valuation visible at the tracked precision;
    /// a zero residue yields `prec` (the true valuation is at least that).
    pub fn val_lb(&self, x: &PadicNum) -> u32 {
        if x.residue == 0 {
            return x.prec;
        }
        let mut v = 0;
        let mut r = x.residue;
        while r % self.p as u128 == 0 {
            r /= self.p as u128;
            v += 1;
        }
        v
    }

    /// Exact valuation if resolved below the tracked precision.
    pub fn val(&self, x: &PadicNum) -> Option<u32> {
        if x.residue == 0 {
            None
        } else {
            Some(self.val_lb(x))
        }
    }

    pub fn add(&self, a: &PadicNum, b: &PadicNum) -> PadicNum {
        let prec = a.prec.min(b.prec);
        let m = self.p_pow(prec);
        self.make((a.residue % m + b.residue % m) % m, prec)
    }

    pub fn neg(&self, a: &PadicNum) -> PadicNum {
        let m = self.p_pow(a.prec);
        self.make((m - a.residue % m) % m, a.prec)
    }

    pub fn sub(&self, a: &PadicNum, b: &PadicNum) -> PadicNum {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &PadicNum, b: &PadicNum) -> PadicNum {
        // Absolute precision of a product: each factor's unknown tail is
        // scaled by the other factor's valuation.
        let prec = (a.prec + self.val_lb(b))
            .min(b.prec + self.val_lb(a))
            .min(self.prec);
        let m = self.p_pow(prec);
        self.make(self.mul_mod(a.residue % m, b.residue % m, m), prec)
    }

    pub fn mul_i64(&self, a: &PadicNum, k: i64) -> PadicNum {
        self.mul(a, &self.from_i64(k))
    }

    /// x^e for e ≥ 0 by repeated squaring.
    pub fn pow(&self, x: &PadicNum, e: u128) -> PadicNum {
        let mut base = *x;
        let mut acc = self.make(1, x.prec);
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// Inverse of a unit; errors when the argument is visibly divisible by p
    /// or vanishes at its precision.
    pub fn inv(&self, x: &PadicNum) -> Result<PadicNum> {
        if x.residue == 0 || self.val_lb(x) > 0 {
            return Err(Error::NotInvertible);
        }
        let m = self.p_pow(x.prec);
        // Unit group of Z/p^prec has order p^(prec-1)(p-1).
        let order = (self.p as u128).pow(x.prec - 1) * (self.p as u128 - 1);
        let mut base = x.residue % m;
        let mut acc: u128 = 1;
        let mut e = order - 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_mod(acc, base, m);
            }
            base = self.mul_mod(base, base, m);
            e >>= 1;
        }
        Ok(self.make(acc, x.prec))
    }

    /// x / y with precision bookkeeping: the result is guaranteed modulo
    /// `p^(min(prec_x, prec_y) - val(y))`.
    pub fn div(&self, x: &PadicNum, y: &PadicNum) -> Result<PadicNum> {
        if y.residue == 0 {
            return Err(Error::NotInvertible);
        }
        let v = self.val_lb(y);
        let prec = x.prec.min(y.prec);
        if prec <= v {
            return Err(Error::PrecisionUnderflow);
        }
        let pv = self.p_pow(v);
        if x.residue % pv != 0 {
            // The quotient exists in Q_p but not in Z_p at this precision.
            return Err(Error::NonIntegralOutput);
        }
        let unit = self.make(y.residue / pv, y.prec - v);
        let xs = self.make(x.residue / pv, x.prec.saturating_sub(v));
        let u_inv = self.inv(&unit)?;
        Ok(self.mul(&xs, &u_inv))
    }

    /// Congruence modulo p^k, certified: errors when either side carries
    /// fewer than k guaranteed digits.
    pub fn congruent_mod(&self, a: &PadicNum, b: &PadicNum, k: u32) -> Result<bool> {
        if a.prec < k || b.prec < k {
            return Err(Error::PrecisionUnderflow);
        }
        let m = self.p_pow(k);
        Ok(a.residue % m == b.residue % m)
    }

    pub fn fmt_num(&self, x: &PadicNum) -> String {
        if x.prec == self.prec {
            format!("{}", x.residue)
        } else {
            format!("{}~{}", x.residue, x.prec)
        }
    }
}

// --- Teichmüller lift, log, exp ------------------------------------------

impl Context {
    /// Teichmüller representative ω(n): the unique (p-1)-st root of unity
    /// congruent to n mod p. Fixed point of x ↦ x^p.
    pub fn teichmuller(&self, n: i64) -> Result<PadicNum> {
        let x = self.from_i64(n);
        if self.val_lb(&x) > 0 {
            return Err(Error::NotUnit);
        }
        self.teichmuller_of(&x)
    }

    pub fn teichmuller_of(&self, x: &PadicNum) -> Result<PadicNum> {
        if x.residue == 0 || self.val_lb(x) > 0 {
            return Err(Error::NotUnit);
        }
        let mut cur = self.make(x.residue, self.prec);
        // Each Frobenius application gains at least one digit of agreement
        // with the fixed point, so M iterations always suffice.
        for _ in 0..=self.prec {
            let next = self.pow(&cur, self.p as u128);
            if next == cur {
                break;
            }
            cur = next;
        }
        Ok(cur)
    }

    fn phi_biguint(&self, digits: u32) -> BigUint {
        BigUint::from(self.p).pow(digits - 1) * BigUint::from(self.p - 1)
    }

    /// Reduce an exact rational with p-free denominator modulo p^prec.
    pub fn reduce_rational(&self, r: &BigRational, prec: u32) -> Result<PadicNum> {
        let prec = prec.min(self.prec);
        let m = BigInt::from(self.p_pow(prec));
        let den = r.denom();
        if (den % BigInt::from(self.p)).is_zero() {
            return Err(Error::NonIntegralOutput);
        }
        let mut den_red = den % &m;
        if den_red.is_negative() {
            den_red += &m;
        }
        let den_inv = den_red
            .to_biguint()
            .unwrap()
            .modpow(&(self.phi_biguint(prec) - BigUint::one()), &m.to_biguint().unwrap());
        let mut num = r.numer() % &m;
        if num.is_negative() {
            num += &m;
        }
        let res = (num.to_biguint().unwrap() * den_inv) % m.to_biguint().unwrap();
        Ok(self.make(res.to_u128().unwrap(), prec))
    }

    /// Iwasawa logarithm on the 1-units: log(1+z) = Σ (-1)^(i+1) z^i / i.
    /// Requires x ≡ 1 mod p.
    pub fn plog(&self, x: &PadicNum) -> Result<PadicNum> {
        let z = self.sub(x, &self.one());
        if z.residue != 0 && self.val_lb(&z) == 0 {
            return Err(Error::OutsideConvergenceDisk);
        }
        if z.residue == 0 {
            return Ok(self.make(0, x.prec));
        }
        // Exact partial sum: each term z^i/i is p-integral (val ≥ i - log_p i),
        // and terms with i > M + 8 vanish mod p^M for p ≥ 5.
        let zb = BigInt::from(z.residue);
        let terms = (self.prec + 8) as i64;
        let mut sum = BigRational::zero();
        let mut zpow = BigInt::one();
        for i in 1..=terms {
            zpow *= &zb;
            let term = BigRational::new(zpow.clone(), BigInt::from(i));
            if i % 2 == 1 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        self.reduce_rational(&sum, x.prec)
    }

    /// exp(y) = Σ y^i / i! for val(y) ≥ 1 (convergent since p ≥ 5).
    pub fn pexp(&self, y: &PadicNum) -> Result<PadicNum> {
        if y.residue != 0 && self.val_lb(y) == 0 {
            return Err(Error::OutsideConvergenceDisk);
        }
        if y.residue == 0 {
            return Ok(self.make(1, y.prec));
        }
        // val(y^i/i!) ≥ i - (i-1)/(p-1) ≥ 3i/4 + 1/4 for p ≥ 5.
        let yb = BigInt::from(y.residue);
        let terms = (4 * self.prec / 3 + 4) as i64;
        let mut sum = BigRational::one();
        let mut ypow = BigInt::one();
        let mut fact = BigInt::one();
        for i in 1..=terms {
            ypow *= &yb;
            fact *= BigInt::from(i);
            sum += BigRational::new(ypow.clone(), fact.clone());
        }
        self.reduce_rational(&sum, y.prec)
    }

    /// ⟨n⟩ = n / ω(n), a 1-unit.
    pub fn one_unit_part(&self, n: i64) -> Result<PadicNum> {
        let omega = self.teichmuller(n)?;
        let omega_inv = self.inv(&omega)?;
        Ok(self.mul(&self.from_i64(n), &omega_inv))
    }

    /// n^σ = n^a · exp(u · log⟨n⟩) for a unit n and σ = (a, u).
    pub fn unit_pow(&self, n: i64, sigma: &ExponentChar) -> Result<PadicNum> {
        let x = self.from_i64(n);
        if x.residue == 0 || self.val_lb(&x) > 0 {
            return Err(Error::NotUnit);
        }
        let int_pow = if sigma.int_part >= 0 {
            self.pow(&x, sigma.int_part as u128)
        } else {
            let xi = self.inv(&x)?;
            self.pow(&xi, (-sigma.int_part) as u128)
        };
        if sigma.wild.is_zero() && sigma.wild.prec == self.prec {
            return Ok(int_pow);
        }
        let l = self.plog(&self.one_unit_part(n)?)?;
        let arg = self.mul(&sigma.wild, &l);
        let wild_pow = self.pexp(&arg)?;
        Ok(self.mul(&int_pow, &wild_pow))
    }

    /// Generalized binomial coefficient binom(u, j) = u(u-1)⋯(u-j+1)/j!.
    /// Division by j! lowers the guaranteed precision by val(j!).
    pub fn binom_u(&self, u: &PadicNum, j: u64) -> Result<PadicNum> {
        if j == 0 {
            return Ok(self.make(1, u.prec));
        }
        let mut num = self.make(1, self.prec);
        for i in 0..j {
            let f = self.sub(u, &self.from_i64(i as i64));
            num = self.mul(&num, &f);
        }
        // Split j! into p-power and unit exactly.
        let mut vj: u32 = 0;
        let mut unit = self.one();
        for i in 1..=j {
            let mut i_red = i;
            while i_red % self.p == 0 {
                i_red /= self.p;
                vj += 1;
            }
            unit = self.mul(&unit, &self.from_i64(i_red as i64));
        }
        if num.prec <= vj {
            return Err(Error::PrecisionUnderflow);
        }
        let pv = self.p_pow(vj);
        if num.residue % pv != 0 {
            return Err(Error::PrecisionUnderflow);
        }
        let shifted = self.make(num.residue / pv, num.prec - vj);
        let u_inv = self.inv(&unit)?;
        Ok(self.mul(&shifted, &u_inv))
    }

    /// Inverses of 1..=Q (0 at indices divisible by p), built once per context.
    pub fn unit_inverses(&self) -> &[u128] {
        self.inv_table.get_or_init(|| {
            let mut t = vec![0u128; self.qprec + 1];
            for n in 1..=self.qprec {
                if n as u64 % self.p != 0 {
                    t[n] = self.inv(&self.from_i64(n as i64)).unwrap().residue;
                }
            }
            t
        })
    }
}

// --- Weight characters -----------------------------------------------------

/// Character σ = (a, u): integer part `a`, wild part `u ∈ p·Z_p`.
/// Acts on units by n^σ = n^a · exp(u · log⟨n⟩).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExponentChar {
    pub int_part: i64,
    pub wild: PadicNum,
}

impl Context {
    /// Constructor enforcing val(u) ≥ 1 (characters of the radius-one disk).
    pub fn exponent_char(&self, int_part: i64, wild: PadicNum) -> Result<ExponentChar> {
        if !wild.is_zero() && self.val_lb(&wild) == 0 {
            return Err(invalid(
                "wild part of a weight character must lie in p·Z_p",
            ));
        }
        Ok(ExponentChar { int_part, wild })
    }

    /// Classical integer weight: wild part zero at full precision.
    pub fn classical_char(&self, k: i64) -> ExponentChar {
        ExponentChar {
            int_part: k,
            wild: self.zero(),
        }
    }

    /// The scalar a + u entering the connection and projection formulas;
    /// at a classical weight ℓ this is ℓ itself.
    pub fn char_scalar(&self, sigma: &ExponentChar) -> PadicNum {
        self.add(&self.from_i64(sigma.int_part), &sigma.wild)
    }

    pub fn char_add(&self, a: &ExponentChar, b: &ExponentChar) -> ExponentChar {
        ExponentChar {
            int_part: a.int_part + b.int_part,
            wild: self.add(&a.wild, &b.wild),
        }
    }

    pub fn char_neg(&self, a: &ExponentChar) -> ExponentChar {
        ExponentChar {
            int_part: -a.int_part,
            wild: self.neg(&a.wild),
        }
    }

    pub fn char_shift(&self, a: &ExponentChar, delta: i64) -> ExponentChar {
        ExponentChar {
            int_part: a.int_part + delta,
            wild: a.wild,
        }
    }

    pub fn char_scale(&self, a: &ExponentChar, k: i64) -> ExponentChar {
        ExponentChar {
            int_part: a.int_part * k,
            wild: self.mul_i64(&a.wild, k),
        }
    }
}

impl ExponentChar {
    /// True when the wild part vanishes at full precision.
    pub fn is_classical(&self, ctx: &Context) -> bool {
        self.wild.is_zero() && self.wild.prec() == ctx.prec()
    }
}

// --- Q_p scalars -----------------------------------------------------------

/// Element of Q_p as p^valuation · unit. Needed for Euler-factor products,
/// which can carry negative valuation inside the allowed parameter range.
#[derive(Clone, Copy, Debug)]
pub struct Qp {
    pub valuation: i64,
    pub unit: PadicNum,
}

impl Qp {
    pub fn is_zero(&self) -> bool {
        self.unit.is_zero()
    }
}

impl Context {
    pub fn qp_zero(&self) -> Qp {
        Qp {
            valuation: 0,
            unit: self.zero(),
        }
    }

    pub fn qp_from_padic(&self, x: &PadicNum) -> Qp {
        if x.is_zero() {
            return Qp {
                valuation: 0,
                unit: self.make(0, x.prec),
            };
        }
        let v = self.val_lb(x);
        Qp {
            valuation: v as i64,
            unit: self.make(x.residue / self.p_pow(v), x.prec - v),
        }
    }

    /// Exact rational → p^v · unit; the reported unit keeps full precision.
    pub fn qp_from_rational(&self, r: &BigRational) -> Qp {
        if r.is_zero() {
            return self.qp_zero();
        }
        let p = BigInt::from(self.p);
        let mut num = r.numer().clone();
        let mut den = r.denom().clone();
        let mut v: i64 = 0;
        while (&num % &p).is_zero() {
            num /= &p;
            v += 1;
        }
        while (&den % &p).is_zero() {
            den /= &p;
            v -= 1;
        }
        let unit = self
            .reduce_rational(&BigRational::new(num, den), self.prec)
            .expect("denominator is p-free by construction");
        Qp { valuation: v, unit }
    }

    pub fn qp_to_padic(&self, x: &Qp) -> Result<PadicNum> {
        if x.is_zero() {
            return Ok(self.make(0, x.unit.prec()));
        }
        if x.valuation < 0 {
            return Err(Error::NonIntegralOutput);
        }
        let v = x.valuation as u32;
        if v >= self.prec {
            return Ok(self.make(0, self.prec));
        }
        Ok(self.make(
            x.unit.residue() * self.p_pow(v),
            (x.unit.prec() + v).min(self.prec),
        ))
    }

    pub fn qp_one(&self) -> Qp {
        Qp {
            valuation: 0,
            unit: self.one(),
        }
    }

    /// Sum with renormalized valuation; cancellation is detected through
    /// the tracked precision of the aligned units.
    pub fn qp_add(&self, a: &Qp, b: &Qp) -> Qp {
        if a.is_zero() {
            return *b;
        }
        if b.is_zero() {
            return *a;
        }
        let v = a.valuation.min(b.valuation);
        let (sa, sb) = ((a.valuation - v) as u32, (b.valuation - v) as u32);
        let lift = |x: &PadicNum, shift: u32| -> PadicNum {
            if shift == 0 {
                *x
            } else if shift >= self.prec {
                self.make(0, self.prec)
            } else {
                let target = self.prec.min(x.prec + shift);
                let head = x.residue % self.p_pow(target - shift);
                self.make(head * self.p_pow(shift), target)
            }
        };
        let sum = self.add(&lift(&a.unit, sa), &lift(&b.unit, sb));
        let q = self.qp_from_padic(&sum);
        Qp {
            valuation: q.valuation + v,
            unit: q.unit,
        }
    }

    pub fn qp_neg(&self, a: &Qp) -> Qp {
        Qp {
            valuation: a.valuation,
            unit: self.neg(&a.unit),
        }
    }

    pub fn qp_sub(&self, a: &Qp, b: &Qp) -> Qp {
        self.qp_add(a, &self.qp_neg(b))
    }

    /// Congruence mod p^k of possibly non-integral scalars: the difference
    /// must vanish at every digit both sides can see below k.
    pub fn qp_congruent_mod(&self, a: &Qp, b: &Qp, k: i64) -> bool {
        let d = self.qp_sub(a, b);
        if d.is_zero() {
            return d.valuation + d.unit.prec() as i64 >= k;
        }
        d.valuation >= k
    }

    pub fn qp_mul(&self, a: &Qp, b: &Qp) -> Qp {
        if a.is_zero() || b.is_zero() {
            return self.qp_zero();
        }
        let prod = self.mul(&a.unit, &b.unit);
        Qp {
            valuation: a.valuation + b.valuation,
            unit: prod,
        }
    }

    pub fn qp_inv(&self, a: &Qp) -> Result<Qp> {
        if a.is_zero() {
            return Err(Error::NotInvertible);
        }
        Ok(Qp {
            valuation: -a.valuation,
            unit: self.inv(&a.unit)?,
        })
    }

    pub fn fmt_qp(&self, x: &Qp) -> String {
        if x.is_zero() {
            return "0".into();
        }
        if x.valuation == 0 {
            self.fmt_num(&x.unit)
        } else {
            format!("p^{}*{}", x.valuation, self.fmt_num(&x.unit))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(p: u64, m: u32) -> Context {
        Context::new(p, m, 8).unwrap()
    }

    #[test]
    fn teichmuller_fixed_point_small() {
        // Oracle: iterate x -> x^5 mod 25 from 2: 2^5 = 32 ≡ 7, 7^5 = 16807 ≡ 7.
        let c = ctx(5, 2);
        let w = c.teichmuller(2).unwrap();
        assert_eq!(w.residue(), 7);
        let c3 = ctx(5, 3);
        let w3 = c3.teichmuller(2).unwrap();
        assert_eq!(
            c3.pow(&w3, 5).residue(),
            w3.residue(),
            "Teichmüller lift must be Frobenius-fixed"
        );
    }

    #[test]
    fn teichmuller_rejects_non_units() {
        let c = ctx(5, 2);
        assert!(matches!(c.teichmuller(10), Err(Error::NotUnit)));
    }

    #[test]
    fn teichmuller_roots_of_unity() {
        let c = ctx(7, 6);
        for n in 1..7 {
            let w = c.teichmuller(n).unwrap();
            let pw = c.pow(&w, 6);
            assert_eq!(pw, c.one(), "ω({n})^6 = 1 at full precision");
        }
    }

    #[test]
    fn plog_of_six_mod_25() {
        // Oracle: log(1+5) = 5 - 25/2 + ... ≡ 5 mod 25.
        let c = ctx(5, 2);
        let l = c.plog(&c.from_i64(6)).unwrap();
        assert_eq!(l.residue(), 5);
        assert_eq!(l.prec(), 2);
    }

    #[test]
    fn plog_rejects_outside_disk() {
        let c = ctx(5, 2);
        assert!(matches!(
            c.plog(&c.from_i64(2)),
            Err(Error::OutsideConvergenceDisk)
        ));
    }

    #[test]
    fn exp_log_round_trip() {
        let c = ctx(5, 8);
        for n in [6i64, 11, 26, 126, 3131] {
            let x = c.from_i64(n);
            let back = c.pexp(&c.plog(&x).unwrap()).unwrap();
            assert_eq!(back, x, "exp(log({n})) differs");
        }
        for v in [5i64, 30, 125, 650] {
            let y = c.from_i64(v);
            let back = c.plog(&c.pexp(&y).unwrap()).unwrap();
            assert_eq!(back, y, "log(exp({v})) differs");
        }
    }

    #[test]
    fn unit_pow_integer_exponents() {
        let c = ctx(5, 2);
        // (a=3, u=0) on n=2: 2^3 = 8.
        let s = c.classical_char(3);
        assert_eq!(c.unit_pow(2, &s).unwrap().residue(), 8);
        // (a=-1, u=0) on n=2: inverse of 2 mod 25 is 13.
        let s = c.classical_char(-1);
        assert_eq!(c.unit_pow(2, &s).unwrap().residue(), 13);
    }

    #[test]
    fn unit_pow_wild_matches_exact_power() {
        // σ = (0, 5) on n = 6 at p=5, M=2: 6^5 = 7776 ≡ 1 mod 25.
        let c = ctx(5, 2);
        let s = c.exponent_char(0, c.from_i64(5)).unwrap();
        assert_eq!(c.unit_pow(6, &s).unwrap().residue(), 1);
        assert_eq!(7776u128 % 25, 1);
        // Same comparison at higher precision for several integer wild parts;
        // for u ≡ 0 mod p the character (0,u) agrees with n ↦ ⟨n⟩^u ω(n)^0 …
        // on 1-units it is the plain power.
        let c = ctx(5, 7);
        for u in [5i64, 10, 25] {
            for n in [6i64, 26, 31] {
                let s = c.exponent_char(0, c.from_i64(u)).unwrap();
                let got = c.unit_pow(n, &s).unwrap();
                // n is a 1-unit here, so n^σ is the honest power n^u.
                let expect = c.pow(&c.from_i64(n), u as u128);
                assert_eq!(got, expect, "n={n}, u={u}");
            }
        }
    }

    #[test]
    fn unit_pow_is_multiplicative_in_sigma() {
        let c = ctx(5, 6);
        let s1 = c.exponent_char(2, c.from_i64(15)).unwrap();
        let s2 = c.exponent_char(-3, c.from_i64(10)).unwrap();
        let s12 = c.char_add(&s1, &s2);
        for n in [2i64, 3, 7, 12] {
            let lhs = c.mul(&c.unit_pow(n, &s1).unwrap(), &c.unit_pow(n, &s2).unwrap());
            let rhs = c.unit_pow(n, &s12).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn unit_pow_inverse_pairs() {
        let c = ctx(7, 5);
        let s = c.exponent_char(4, c.from_i64(21)).unwrap();
        let sneg = c.char_neg(&s);
        for n in [2i64, 3, 5, 11] {
            let prod = c.mul(&c.unit_pow(n, &s).unwrap(), &c.unit_pow(n, &sneg).unwrap());
            assert_eq!(prod, c.one());
        }
    }

    #[test]
    fn binom_u_small_values() {
        let c = ctx(5, 4);
        // binom(-1, 2) = (-1)(-2)/2 = 1.
        let b = c.binom_u(&c.from_i64(-1), 2).unwrap();
        assert_eq!(b, c.one());
        // binom(-2, 1) = -2.
        let b = c.binom_u(&c.from_i64(-2), 1).unwrap();
        assert_eq!(b, c.from_i64(-2));
        // binom(u, 0) = 1.
        assert_eq!(c.binom_u(&c.from_i64(17), 0).unwrap(), c.one());
    }

    #[test]
    fn binom_u_matches_pascal_on_integers() {
        let c = ctx(5, 9);
        for u in 0..12i64 {
            for j in 0..=u as u64 {
                let got = c.binom_u(&c.from_i64(u), j).unwrap();
                let mut exact: i128 = 1;
                for i in 0..j as i128 {
                    exact = exact * (u as i128 - i) / (i + 1);
                }
                let expect = c.from_i128(exact);
                assert!(
                    c.congruent_mod(&got, &expect, got.prec()).unwrap(),
                    "binom({u},{j})"
                );
            }
        }
    }

    #[test]
    fn binom_u_precision_loss_is_val_of_factorial() {
        let c = ctx(5, 6);
        // val(5!) = 1, so one digit is lost.
        let b = c.binom_u(&c.from_i64(7), 5).unwrap();
        assert_eq!(b.prec(), 5);
        assert_eq!(b.residue(), 21 % c.p_pow(5));
        // Underflow once val(j!) eats the whole budget: val(25!) = 6 ≥ M.
        assert!(matches!(
            c.binom_u(&c.from_i64(30), 25),
            Err(Error::PrecisionUnderflow)
        ));
    }

    #[test]
    fn division_tracks_precision() {
        let c = ctx(5, 4);
        let x = c.from_i64(50);
        let y = c.from_i64(5);
        let q = c.div(&x, &y).unwrap();
        assert_eq!(q.residue(), 10);
        assert_eq!(q.prec(), 3);
        assert!(matches!(
            c.div(&c.from_i64(3), &c.from_i64(5)),
            Err(Error::NonIntegralOutput)
        ));
        assert!(matches!(c.div(&x, &c.zero()), Err(Error::NotInvertible)));
    }

    #[test]
    fn qp_round_trips() {
        let c = ctx(5, 6);
        let r = BigRational::new(BigInt::from(12), BigInt::from(25));
        let q = c.qp_from_rational(&r);
        assert_eq!(q.valuation, -2);
        assert_eq!(q.unit.residue(), 12);
        assert!(c.qp_to_padic(&q).is_err());
        let r = BigRational::new(BigInt::from(75), BigInt::from(2));
        let q = c.qp_from_rational(&r);
        assert_eq!(q.valuation, 2);
        let x = c.qp_to_padic(&q).unwrap();
        // 75/2 = 25 · 3/2, and 3/2 ≡ 3 · inverse(2) mod 5^6.
        let three_halves = c.div(&c.from_i64(3), &c.from_i64(2)).unwrap();
        assert_eq!(
            x,
            c.mul(&three_halves, &c.from_i64(25)),
            "p-power and unit recombine"
        );
    }
}
