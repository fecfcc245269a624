//! Randomized invariants of the calculus, one block per layer.
//!
//! Structured inputs (series, operators, eigen data) come from the seeded
//! generators in `selftest`, driven by a proptest-chosen seed, so every
//! failure replays from its seed alone.

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use proptest::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nocq_core::gz::{euler_factors, gz_assemble, gz_disassemble, TripleWeights};
use nocq_core::padic::{Context, Qp};
use nocq_core::qseries::{deplete, p_stabilize, theta_pow, u_op, v_op, QSeries};
use nocq_core::selftest::{
    rand_depleted, rand_eigen_triple, rand_padic, rand_pairing_sample, rand_series,
    rand_slope_sample, rand_unimodular,
};
use nocq_core::slope::{
    fredholm_det, newton_slopes, riesz_projector, slope_projector, verify_pairing_lemma,
    PadicMatrix, PairingStatus,
};
use nocq_core::sympow::{lemma_lhs, lemma_rhs, pr_project, primitive_depleted};
use nocq_core::wmodel::{nabla, nabla_pow, oc_project, WElement};

fn ctx(prec: u32, qprec: usize) -> Context {
    Context::new(5, prec, qprec).unwrap()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// --- Scalar layer ------------------------------------------------------------

proptest! {
    #[test]
    fn unit_powers_invert(n in 1i64..10_000, a in -6i64..7, w in 0i64..3_000) {
        prop_assume!(n % 5 != 0);
        let c = ctx(8, 1);
        let sigma = c.exponent_char(a, c.from_i64(5 * w)).unwrap();
        let neg = c.char_neg(&sigma);
        let prod = c.mul(
            &c.unit_pow(n, &sigma).unwrap(),
            &c.unit_pow(n, &neg).unwrap(),
        );
        prop_assert!(c.congruent_mod(&prod, &c.one(), prod.prec()).unwrap());
    }

    #[test]
    fn unit_pow_integer_is_exact_power(n in 1i64..600, a in 0u32..9) {
        prop_assume!(n % 5 != 0);
        let c = ctx(8, 1);
        let got = c.unit_pow(n, &c.classical_char(a as i64)).unwrap();
        let expect = c.pow(&c.from_i64(n), a as u128);
        prop_assert!(c.congruent_mod(&got, &expect, c.prec()).unwrap());
    }

    #[test]
    fn teichmuller_is_root_of_unity(n in 1i64..100_000) {
        prop_assume!(n % 5 != 0);
        let c = ctx(10, 1);
        let t = c.teichmuller(n).unwrap();
        let mut acc = c.one();
        for _ in 0..4 {
            acc = c.mul(&acc, &t);
        }
        prop_assert!(c.congruent_mod(&acc, &c.one(), c.prec()).unwrap());
    }

    #[test]
    fn binom_satisfies_pascal(u in -30i64..31, j in 1u64..8) {
        let c = ctx(10, 1);
        let lhs = c.binom_u(&c.from_i64(u), j).unwrap();
        let rhs = c.add(
            &c.binom_u(&c.from_i64(u - 1), j - 1).unwrap(),
            &c.binom_u(&c.from_i64(u - 1), j).unwrap(),
        );
        prop_assert!(c.congruent_mod(&lhs, &rhs, lhs.prec().min(rhs.prec())).unwrap());
    }

    #[test]
    fn qp_inverse_and_subtraction(num in -3_000i64..3_000, den in 1i64..3_000, off in -50i64..50) {
        prop_assume!(num != 0);
        let c = ctx(8, 1);
        let x = c.qp_from_rational(&BigRational::new(BigInt::from(num), BigInt::from(den)));
        let prod = c.qp_mul(&x, &c.qp_inv(&x).unwrap());
        prop_assert!(c.qp_congruent_mod(&prod, &c.qp_one(), seen_digits(&prod)));

        let y = c.qp_from_rational(&BigRational::new(BigInt::from(off), BigInt::from(7)));
        let back = c.qp_add(&c.qp_sub(&x, &y), &y);
        let k = seen_digits(&back).min(seen_digits(&x));
        prop_assert!(c.qp_congruent_mod(&back, &x, k));
    }
}

// A zero residue is still only certified to val + prec digits: a sum that
// cancelled at reduced precision must not claim exactness.
fn seen_digits(x: &Qp) -> i64 {
    x.valuation + x.unit.prec() as i64
}

// --- q-series operators ------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn operator_algebra(seed in any::<u64>()) {
        let c = ctx(8, 40);
        let mut r = rng(seed);
        let f = rand_series(&c, &mut r);
        let window = c.qprec() / 5;

        let uv = u_op(&v_op(&f));
        prop_assert!(uv.congruent_upto(&f, c.prec(), window).unwrap());

        // V∘U keeps exactly the p | n part.
        let vu = v_op(&u_op(&f));
        for n in 0..=c.qprec() {
            let expect = if n % 5 == 0 { *f.coeff(n) } else { c.zero() };
            prop_assert!(c.congruent_mod(vu.coeff(n), &expect, c.prec()).unwrap());
        }

        let dep = deplete(&f);
        prop_assert!(deplete(&dep).congruent_mod(&dep, c.prec()).unwrap());
        for n in 0..=window {
            prop_assert!(u_op(&dep).coeff(n).is_zero());
        }
    }

    #[test]
    fn theta_powers_compose(
        seed in any::<u64>(),
        a1 in -5i64..6,
        a2 in -5i64..6,
        w1 in 0i64..300,
        w2 in 0i64..300,
    ) {
        let c = ctx(8, 40);
        let mut r = rng(seed);
        let f = rand_depleted(&c, &mut r);
        let s1 = c.exponent_char(a1, c.from_i64(5 * w1)).unwrap();
        let s2 = c.exponent_char(a2, c.from_i64(5 * w2)).unwrap();
        let composed = theta_pow(&theta_pow(&f, &s1).unwrap(), &s2).unwrap();
        let joint = theta_pow(&f, &c.char_add(&s1, &s2)).unwrap();
        prop_assert!(composed.congruent_mod(&joint, c.prec() - 2).unwrap());
    }

    #[test]
    fn theta_integer_powers_cancel(seed in any::<u64>(), t in 1i64..4) {
        let c = ctx(8, 40);
        let mut r = rng(seed);
        let f = rand_depleted(&c, &mut r);
        let down = theta_pow(&f, &c.classical_char(-t)).unwrap();
        let back = theta_pow(&down, &c.classical_char(t)).unwrap();
        prop_assert!(back.congruent_mod(&f, c.prec()).unwrap());
    }

    #[test]
    fn stabilization_depletes_identically(seed in any::<u64>()) {
        let c = ctx(8, 40);
        let mut r = rng(seed);
        let f = rand_series(&c, &mut r);
        let beta = rand_padic(&c, &mut r);
        let stab = p_stabilize(&f, &beta);
        prop_assert!(deplete(&stab).congruent_mod(&deplete(&f), c.prec()).unwrap());
    }
}

// --- Connection powers and the overconvergent projection ---------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn nabla_pow_semigroup_classical(
        seed in any::<u64>(),
        s1 in -3i64..0,
        s2 in -3i64..0,
        k in 3i64..7,
    ) {
        let c = ctx(10, 16);
        let mut r = rng(seed);
        let w = WElement::from_form(rand_depleted(&c, &mut r), c.classical_char(k));
        let step = nabla_pow(&nabla_pow(&w, &c.classical_char(s1)).unwrap(), &c.classical_char(s2)).unwrap();
        let joint = nabla_pow(&w, &c.classical_char(s1 + s2)).unwrap();
        prop_assert!(step.congruent_mod(&joint, 7).unwrap());
    }

    #[test]
    fn nabla_pow_specializes_to_iteration(seed in any::<u64>(), ell in 1i64..4, k in 2i64..7) {
        let c = ctx(10, 12);
        let mut r = rng(seed);
        let w = WElement::from_form(rand_depleted(&c, &mut r), c.classical_char(k));
        let powed = nabla_pow(&w, &c.classical_char(ell)).unwrap();
        let mut iter = w.clone();
        for _ in 0..ell {
            iter = nabla(&iter);
        }
        prop_assert_eq!(iter.fil(), ell as usize);
        prop_assert!(powed.congruent_mod(&iter, c.prec()).unwrap());
    }

    #[test]
    fn oc_project_kills_nabla_images(seed in any::<u64>()) {
        let c = ctx(10, 12);
        let mut r = rng(seed);
        let w = WElement::new(
            c.classical_char(5),
            vec![rand_series(&c, &mut r), rand_series(&c, &mut r)],
        ).unwrap();
        let moved = nabla(&w);
        prop_assert_eq!(moved.fil(), w.fil() + 1);
        let projected = oc_project(&moved).unwrap();
        prop_assert!(projected.congruent_mod(&QSeries::zero(&c), 8).unwrap());
    }

    #[test]
    fn oc_project_is_identity_on_fil_zero(seed in any::<u64>(), k in -4i64..9) {
        let c = ctx(10, 12);
        let mut r = rng(seed);
        let f = rand_series(&c, &mut r);
        let w = WElement::from_form(f.clone(), c.classical_char(k));
        prop_assert!(oc_project(&w).unwrap().congruent_mod(&f, c.prec()).unwrap());
    }
}

// --- Symmetric-power contraction ----------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pr_at_t1_is_multiplication(seed in any::<u64>(), r2 in 1i64..5, r3 in 1i64..5) {
        let c = ctx(8, 30);
        let mut r = rng(seed);
        let f = rand_series(&c, &mut r);
        let g = rand_series(&c, &mut r);
        let a = WElement::from_form(f.clone(), c.classical_char(r2));
        let b = WElement::from_form(g.clone(), c.classical_char(r3));
        let out = pr_project(&a, &b, 1).unwrap();
        prop_assert_eq!(out.fil(), 0);
        prop_assert_eq!(out.twist(), 0);
        prop_assert!(out.comp(0).congruent_mod(&f.mul(&g), c.prec()).unwrap());
    }

    #[test]
    fn pr_is_bilinear(seed in any::<u64>(), t in 1usize..4, s in -20i64..20) {
        let c = ctx(8, 30);
        let mut r = rng(seed);
        let f1 = rand_series(&c, &mut r);
        let f2 = rand_series(&c, &mut r);
        let g = rand_series(&c, &mut r);
        let wa = c.classical_char(3);
        let wb = c.classical_char(3);
        let b = WElement::from_form(g, wb);

        let lhs = pr_project(
            &WElement::from_form(f1.scale_i64(s).add(&f2), wa.clone()),
            &b,
            t,
        ).unwrap();
        let p1 = pr_project(&WElement::from_form(f1, wa.clone()), &b, t).unwrap();
        let p2 = pr_project(&WElement::from_form(f2, wa), &b, t).unwrap();
        let scaled = p1.scale(&c.from_i64(s));
        let mut comps = Vec::new();
        for i in 0..=scaled.fil().max(p2.fil()) {
            let x = if i <= scaled.fil() { scaled.comp(i).clone() } else { QSeries::zero(&c) };
            let y = if i <= p2.fil() { p2.comp(i).clone() } else { QSeries::zero(&c) };
            comps.push(x.add(&y));
        }
        let rhs = WElement::new(lhs.weight().clone(), comps).unwrap();
        prop_assert!(lhs.congruent_mod(&rhs, c.prec()).unwrap());
    }

    #[test]
    fn primitive_is_a_nabla_section(seed in any::<u64>(), r2 in 0usize..7) {
        let c = ctx(8, 40);
        let mut r = rng(seed);
        let g = rand_depleted(&c, &mut r);
        let big = primitive_depleted(&g, r2).unwrap();
        prop_assert_eq!(big.fil(), r2);
        let back = nabla(&big);
        prop_assert!(back.comp(0).congruent_mod(&g, c.prec()).unwrap());
        for i in 1..=back.fil() {
            prop_assert!(back.comp(i).congruent_mod(&QSeries::zero(&c), c.prec()).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn lemma_pipelines_agree(seed in any::<u64>(), y in 3i64..7, z in 3i64..7, t in 1i64..3) {
        prop_assume!(t < y.min(z));
        let c = ctx(10, 40);
        let mut r = rng(seed);
        let g = rand_depleted(&c, &mut r);
        let h = rand_series(&c, &mut r);
        let lhs = lemma_lhs(&g, &h, y, z, t).unwrap();
        let rhs = lemma_rhs(&g, &h, y, z, t).unwrap();
        prop_assert!(lhs.congruent_mod(&rhs, 8).unwrap());
    }
}

// --- Slope decomposition ------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn slope_projector_properties(seed in any::<u64>(), pick in 0usize..3) {
        let c = ctx(8, 8);
        let mut r = rng(seed);
        let specs = [
            Some(Rational64::new(0, 1)),
            Some(Rational64::new(1, 2)),
            Some(Rational64::new(2, 1)),
            None,
        ];
        let sample = rand_slope_sample(&c, &mut r, &specs).unwrap();
        prop_assert_eq!(
            newton_slopes(&fredholm_det(&sample.u)).unwrap(),
            sample.finite_slopes.clone()
        );

        let bound = [Rational64::new(0, 1), Rational64::new(1, 2), Rational64::new(1, 1)][pick];
        let e = slope_projector(&sample.u, bound).unwrap();
        let k = (c.prec() - 2).min(e.min_prec());
        prop_assert!(e.mul(&e).congruent_mod(&e, k).unwrap());
        prop_assert!(e.mul(&sample.u).congruent_mod(&sample.u.mul(&e), k).unwrap());

        let count: usize = sample
            .finite_slopes
            .iter()
            .filter(|(s, _)| *s <= bound)
            .map(|(_, m)| m)
            .sum();
        let trace = e.trace();
        prop_assert!(c.congruent_mod(&trace, &c.from_i64(count as i64), k.min(trace.prec())).unwrap());

        // Kernel directions of U die under every finite-slope projector.
        for col in &sample.kernel_cols {
            let v: Vec<_> = (0..sample.u.dim()).map(|i| *sample.conjugator.get(i, *col)).collect();
            for entry in e.mul_vec(&v) {
                prop_assert!(c.val_lb(&entry) >= k);
            }
        }
    }

    #[test]
    fn riesz_projectors_resolve_identity(seed in any::<u64>()) {
        let c = ctx(8, 8);
        let mut r = rng(seed);
        let mut d = PadicMatrix::zero(&c, 3);
        for (i, mu) in [1i64, 2, 3].iter().enumerate() {
            d.set(i, i, c.from_i64(*mu));
        }
        let conj = rand_unimodular(&c, &mut r, 3);
        let u = conj.mul(&d).mul(&conj.inv().unwrap());
        let mut total = PadicMatrix::zero(&c, 3);
        for mu in [1i64, 2, 3] {
            let lambda = c.inv(&c.from_i64(mu)).unwrap();
            let (e, h) = riesz_projector(&u, &lambda).unwrap();
            prop_assert_eq!(h, 1);
            let k = (c.prec() - 2).min(e.min_prec());
            prop_assert!(e.mul(&e).congruent_mod(&e, k).unwrap());
            // (1 - λU) annihilates the pole image at index 1.
            let nil = PadicMatrix::identity(&c, 3).sub(&u.scale(&lambda)).mul(&e);
            prop_assert!(nil.congruent_mod(&PadicMatrix::zero(&c, 3), k.min(nil.min_prec())).unwrap());
            total = total.add(&e);
        }
        let k = (c.prec() - 2).min(total.min_prec());
        prop_assert!(total.congruent_mod(&PadicMatrix::identity(&c, 3), k).unwrap());
    }

    #[test]
    fn pairing_lemma_passes(seed in any::<u64>(), n in 3usize..7) {
        let c = ctx(8, 8);
        let mut r = rng(seed);
        let s = rand_pairing_sample(&c, &mut r, n, 4).unwrap();
        let report = verify_pairing_lemma(
            &s.u,
            &s.big_phi,
            &s.small_phi,
            &s.eta,
            Rational64::new(0, 1),
            &s.vectors,
            c.prec() - 2,
        ).unwrap();
        prop_assert_eq!(report.status, PairingStatus::Pass);
    }
}

// --- Euler factors and assembly -------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn euler_cross_formulation_agrees(seed in any::<u64>(), pick in 0usize..5) {
        let c = ctx(10, 1);
        let mut r = rng(seed);
        let (x, y, z) = [(2i64, 2i64, 2i64), (4, 3, 3), (2, 4, 4), (4, 4, 4), (3, 4, 3)][pick];
        let w = TripleWeights::new(x, y, z).unwrap();
        let (f, g, h) = rand_eigen_triple(&c, &mut r, &w).unwrap();
        // euler_factors cross-checks both formulations internally.
        prop_assert!(euler_factors(&c, &f, &g, &h, &w).is_ok());
    }

    #[test]
    fn gz_assembly_is_linear_and_invertible(seed in any::<u64>(), n1 in -40i64..40, n2 in -40i64..40) {
        let c = ctx(10, 1);
        let mut r = rng(seed);
        let w = TripleWeights::new(2, 2, 2).unwrap();
        let (f, g, h) = rand_eigen_triple(&c, &mut r, &w).unwrap();
        let ef = euler_factors(&c, &f, &g, &h, &w).unwrap();
        prop_assume!(!ef.e.is_zero() && !ef.e0.is_zero() && !ef.e1.is_zero());

        let aj1 = c.qp_from_rational(&BigRational::new(BigInt::from(n1), BigInt::from(7)));
        let aj2 = c.qp_from_rational(&BigRational::new(BigInt::from(n2), BigInt::from(11)));
        let joint = gz_assemble(&c, &c.qp_add(&aj1, &aj2), &f, &g, &h, &w).unwrap();
        let split = c.qp_add(
            &gz_assemble(&c, &aj1, &f, &g, &h, &w).unwrap(),
            &gz_assemble(&c, &aj2, &f, &g, &h, &w).unwrap(),
        );
        let k = seen_digits(&joint).min(seen_digits(&split));
        prop_assert!(c.qp_congruent_mod(&joint, &split, k));

        let l = gz_assemble(&c, &aj1, &f, &g, &h, &w).unwrap();
        let back = gz_disassemble(&c, &l, &f, &g, &h, &w).unwrap();
        let k = seen_digits(&back).min(seen_digits(&aj1));
        prop_assert!(c.qp_congruent_mod(&back, &aj1, k));
    }
}
