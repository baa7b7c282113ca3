//! Acceptance criteria 1-10. Each test prints one PASS/FAIL line.

use std::collections::BTreeMap;
use std::time::Instant;

use gelfand::catalog::builtin;
use gelfand::invariant::{enumerate_graded_up_to, GelfandPair, SpecialAssumption};
use gelfand::poly::GaussianRational;
use gelfand::poly::{factorial, indices_of_degree, rat, MultiIndex, Polynomial, Rational, Scalar};
use gelfand::spherical::{
    build_h_series, eval_h_series, eval_spherical_direct, verify_eigenfunction, verify_symmetry,
    CoefficientTable, EigenPoint,
};
use gelfand::transform::{
    ball_points, corollary_h_from_g, fourier_forward, gelfand_transform, verify_schwarz, BoxQuadrature,
    HOptions, InvariantFunction,
};
use num_bigint::BigInt;
use num_complex::Complex;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: u32, pass: bool, detail: impl AsRef<str>) {
    println!(
        "criterion {criterion:>2}: {} {}",
        if pass { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
}

fn int(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `Γ(z + k) / Γ(z)` from `Γ(z + 1) = z Γ(z)`.
fn gamma_shift(z: &Rational, k: u32) -> Rational {
    let mut acc = Rational::one();
    let mut w = z.clone();
    for _ in 0..k {
        acc *= w.clone();
        w += Rational::one();
    }
    acc
}

#[test]
fn criterion_01_gamma_identity() {
    let start = Instant::now();
    let mut mismatches = Vec::new();
    for n in 2u64..=8 {
        let half_n = Rational::new(BigInt::from(n), BigInt::from(2));
        for k in 0u32..=25 {
            // Γ(n/2) / (Γ(k + n/2) k! 2^{2k})
            let lhs = Rational::one()
                / (gamma_shift(&half_n, k) * Rational::from_integer(factorial(k).into()) * int(4u64.pow(k)));
            // 1 / ((2k)!! n (n+2) ... (n + 2(k-1)))
            let mut den = Rational::one();
            for j in 1..=k as u64 {
                den *= int(2 * j);
            }
            for j in 0..k as u64 {
                den *= int(n + 2 * j);
            }
            if lhs != Rational::one() / den {
                mismatches.push((n, k));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = mismatches.is_empty() && elapsed < 1.0;
    report(
        1,
        pass,
        format!("mismatches={mismatches:?} runtime={elapsed:.3}s"),
    );
    assert!(pass);
}

#[test]
fn criterion_02_laplacian_pairing() {
    let mut bad = Vec::new();
    for n in [2usize, 3] {
        let mut rho = Polynomial::<Rational>::zero(n);
        for k in 0..n {
            rho.add_term(
                MultiIndex::unit(n, k).add(&MultiIndex::unit(n, k)),
                Rational::one(),
            );
        }
        for k in 0..=10u32 {
            let p = rho.pow(k);
            let got = gelfand::poly::derivative_at_zero_pairing(&p, &p).unwrap();
            let mut want = Rational::one();
            for j in 1..=k as u64 {
                want *= int(2 * j);
            }
            for j in 0..k as u64 {
                want *= int(n as u64 + 2 * j);
            }
            if got != want {
                bad.push((n, k));
            }
        }
    }
    report(2, bad.is_empty(), format!("mismatches={bad:?}"));
    assert!(bad.is_empty());
}

#[test]
fn criterion_03_so2_series_matches_direct() {
    let start = Instant::now();
    let pair = builtin("so2").unwrap();
    let table = CoefficientTable::build(&pair, 30).unwrap();
    let mut xis = ball_points(2, 2.0, 48, 31);
    let mut xs = ball_points(2, 2.0, 48, 32);
    // include the rim of the validated ball
    xis.extend([vec![2.0, 0.0], vec![0.0, -2.0]]);
    xs.extend([vec![-1.2, 1.6], vec![2.0, 0.0]]);
    let mut worst = 0.0f64;
    for (xi, x) in xis.iter().zip(&xs) {
        let h = build_h_series(&table, xi).unwrap();
        let s = eval_h_series(&h, &pair.rho(x).unwrap()).unwrap().value;
        let d = eval_spherical_direct(&pair, xi, x).unwrap();
        worst = worst.max((s - d).norm());
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-10 && elapsed < 5.0;
    report(
        3,
        pass,
        format!("max_diff={worst:e} points=50 runtime={elapsed:.2}s"),
    );
    assert!(pass);
}

/// Minimum-norm canonical form for the sign-group pair, computed directly:
/// every `rho^J` is the single monomial `x1^(2a+w) x2^(w+2b)` for
/// `J = (a, w, b)`, so `A^+` spreads a monomial evenly over its preimages.
fn z2_preimages(i: &MultiIndex) -> Vec<MultiIndex> {
    let (p, q) = (i.exponents()[0], i.exponents()[1]);
    (0..=p.min(q))
        .filter(|w| (p - w) % 2 == 0 && (q - w) % 2 == 0)
        .map(|w| MultiIndex::from([(p - w) / 2, w, (q - w) / 2]))
        .collect()
}

fn z2_canonical(p: &Polynomial<GaussianRational>) -> Polynomial<GaussianRational> {
    let mut out = Polynomial::zero(3);
    for (i, c) in p.terms() {
        let pre = z2_preimages(i);
        assert!(!pre.is_empty(), "odd monomial {i} in an invariant");
        let share = c.clone() / GaussianRational::from_rational(&int(pre.len() as u64));
        for j in pre {
            out.add_term(j, share.clone());
        }
    }
    out
}

/// Coefficient of `x^I` in `cos<x, xi>`, as a polynomial in `xi`:
/// `(-1)^s xi^I / I!` when `|I| = 2s`, from the multinomial expansion of
/// `(-1)^s <x, xi>^{2s} / (2s)!`.
fn cos_coefficient(i: &MultiIndex) -> Polynomial<GaussianRational> {
    let m = i.degree();
    if m % 2 == 1 {
        return Polynomial::zero(2);
    }
    // multinomial coefficient (2s)! / I!, divided by (2s)!
    let multinomial = Rational::new(factorial(m).into(), i.factorial().into());
    let val = multinomial / Rational::from_integer(factorial(m).into());
    let sign = if (m / 2).is_multiple_of(2) { 1 } else { -1 };
    let c = val * rat(sign, 1);
    Polynomial::monomial(i.clone(), Complex::new(c, Rational::zero()))
}

#[test]
fn criterion_04_z2_coefficient_oracle() {
    let pair = builtin("z2-r2").unwrap();
    let table = CoefficientTable::build(&pair, 16).unwrap();
    let gens: Vec<Polynomial<GaussianRational>> = pair.generators_as();
    let mut b_bad = Vec::new();
    let mut a_bad = Vec::new();
    let mut oracle_b: BTreeMap<MultiIndex, Polynomial<GaussianRational>> = BTreeMap::new();
    for m in 0..=16 {
        for i in indices_of_degree(2, m) {
            let oracle = z2_canonical(&cos_coefficient(&i));
            // canonicalize the library side again, from its xi-polynomial
            let lib_xi = table.b(&i).unwrap().substitute(&gens).unwrap();
            let lib = z2_canonical(&lib_xi);
            if &lib != table.b(&i).unwrap() || lib != oracle {
                b_bad.push(i.clone());
            }
            oracle_b.insert(i, oracle);
        }
    }
    for j in enumerate_graded_up_to(16, pair.degrees()) {
        // the unique monomial row of column J, and its preimage count
        let e = j.exponents();
        let row = MultiIndex::from([2 * e[0] + e[1], e[1] + 2 * e[2]]);
        let count = z2_preimages(&row).len() as u64;
        let want = oracle_b[&row].scale(&GaussianRational::from_rational(&Rational::new(
            1.into(),
            count.into(),
        )));
        if table.a(&j).unwrap() != &want {
            a_bad.push(j);
        }
    }
    let pass = b_bad.is_empty() && a_bad.is_empty();
    report(
        4,
        pass,
        format!("b mismatches={} a mismatches={} (M=16)", b_bad.len(), a_bad.len()),
    );
    assert!(pass, "b: {b_bad:?} a: {a_bad:?}");
}

#[test]
fn criterion_05_eigenfunction_identity() {
    let start = Instant::now();
    let mut details = Vec::new();
    let mut pass = true;
    for name in ["trivial", "z2-r2", "so2", "so3"] {
        let pair = builtin(name).unwrap();
        let table = CoefficientTable::build(&pair, 20).unwrap();
        for j in 0..pair.len() {
            let r = verify_eigenfunction(&table, &EigenPoint::Symbolic, j).unwrap();
            pass &= r.is_zero();
            details.push(format!("{name}/rho{j}={r}"));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        5,
        pass,
        format!("residuals [{}] runtime={elapsed:.1}s", details.join(" ")),
    );
    assert!(pass);
}

#[test]
fn criterion_06_symmetry() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut finite_max = 0.0f64;
    for name in ["trivial", "z2-r2"] {
        let pair = builtin(name).unwrap();
        for _ in 0..100 {
            let xi: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
            finite_max = finite_max.max(verify_symmetry(&pair, &xi, &x).unwrap());
        }
    }
    let so2 = builtin("so2").unwrap();
    let mut so2_max = 0.0f64;
    for _ in 0..100 {
        let xi: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
        so2_max = so2_max.max(verify_symmetry(&so2, &xi, &x).unwrap());
    }
    let pass = finite_max == 0.0 && so2_max <= 1e-10;
    report(
        6,
        pass,
        format!("finite max defect={finite_max:e} so2 max defect={so2_max:e}"),
    );
    assert!(pass);
}

fn random_index(rng: &mut ChaCha8Rng, pair: &GelfandPair, max_graded: u32) -> MultiIndex {
    loop {
        let e: Vec<u32> = (0..pair.len()).map(|_| rng.gen_range(0..4)).collect();
        let j = MultiIndex::new(e);
        if pair.graded_degree(&j).unwrap() <= max_graded {
            return j;
        }
    }
}

#[test]
fn criterion_07_graded_vanishing() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pairs: Vec<GelfandPair> = ["trivial", "z2-r2", "so2", "so3"]
        .iter()
        .map(|n| builtin(n).unwrap())
        .collect();
    let mut tested = 0;
    let mut nonzero = 0;
    while tested < 200 {
        let pair = &pairs[tested % pairs.len()];
        let j = random_index(&mut rng, pair, 12);
        let jp = random_index(&mut rng, pair, 12);
        if pair.graded_degree(&j).unwrap() == pair.graded_degree(&jp).unwrap() {
            continue;
        }
        if !pair.pairing(&j, &jp).unwrap().is_zero() {
            nonzero += 1;
        }
        tested += 1;
    }
    report(7, nonzero == 0, format!("pairs={tested} nonzero={nonzero}"));
    assert_eq!(nonzero, 0);
}

#[test]
fn criterion_08_special_assumption_detector() {
    let so2 = builtin("so2").unwrap().check_special_assumption(30).unwrap();
    let z2 = builtin("z2-r2").unwrap().check_special_assumption(30).unwrap();
    let want = SpecialAssumption::Fails {
        j: MultiIndex::from([1, 0, 1]),
        j_prime: MultiIndex::from([0, 2, 0]),
        value: rat(4, 1),
    };
    let pass = so2 == SpecialAssumption::Holds { up_to: 30 } && z2 == want;
    report(8, pass, format!("so2={so2:?} z2={z2:?}"));
    assert!(pass);
}

#[test]
fn criterion_09_schwarz_reconstruction() {
    let start = Instant::now();
    let quad = BoxQuadrature::new(2, 1.5, 64).unwrap();
    let mut points = vec![vec![0.0, 0.0]];
    points.extend(ball_points(2, 3.0, 99, 9));
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, fhat) in [
        ("z2-r2", InvariantFunction::even_bump(2, 1.0)),
        ("so2", InvariantFunction::bump(2, 1.0)),
    ] {
        let pair = builtin(name).unwrap();
        let table = CoefficientTable::build(&pair, 30).unwrap();
        let opts = HOptions {
            target_radius: 3.0,
            tol: 1e-8,
            check_nodes: true,
        };
        let rep = verify_schwarz(name, &table, &fhat, &quad, &points, &opts).unwrap();
        let bound = 1e-6 * rep.max_abs_f;
        let ok = rep.max_abs_error <= bound;
        pass &= ok;
        lines.push(format!(
            "{name}: max_err={:e} bound={bound:e} dM={:e} dN={:e}",
            rep.max_abs_error,
            rep.degree_delta.unwrap_or(f64::NAN),
            rep.node_delta.unwrap_or(f64::NAN)
        ));
    }
    let elapsed = start.elapsed().as_secs_f64();
    pass &= elapsed < 300.0;
    report(9, pass, format!("{} runtime={elapsed:.1}s", lines.join("; ")));
    assert!(pass);
}

#[test]
fn criterion_10_gelfand_equals_classical_and_corollary() {
    let quad = BoxQuadrature::new(2, 1.0, 64).unwrap();
    let xis = ball_points(2, 2.0, 20, 10);
    let opts = HOptions {
        target_radius: 2.0,
        tol: 1e-8,
        check_nodes: false,
    };
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, g) in [
        ("z2-r2", InvariantFunction::even_bump(2, 1.0)),
        ("so2", InvariantFunction::bump(2, 1.0)),
    ] {
        let pair = builtin(name).unwrap();
        let table = CoefficientTable::build(&pair, 30).unwrap();
        let h = corollary_h_from_g(&table, &g, &quad, &opts).unwrap();
        let (mut gc, mut cor) = (0.0f64, 0.0f64);
        for xi in &xis {
            let gel = gelfand_transform(&pair, &g, &quad, xi).unwrap();
            let cls = fourier_forward(&g, &quad, xi).unwrap();
            let hr = h.eval(&pair.rho(xi).unwrap()).unwrap().value;
            gc = gc.max((gel - cls).norm());
            cor = cor.max((hr - gel).norm());
        }
        pass &= gc <= 1e-6 && cor <= 1e-6;
        lines.push(format!("{name}: gelfand-classical={gc:e} corollary={cor:e}"));
    }
    let pair = builtin("trivial").unwrap();
    let table = CoefficientTable::build(&pair, 30).unwrap();
    let g = InvariantFunction::even_bump(2, 1.0);
    let h = corollary_h_from_g(&table, &g, &quad, &opts).unwrap();
    let mut triv = 0.0f64;
    for xi in &xis {
        let hr = h.eval(&pair.rho(xi).unwrap()).unwrap().value;
        triv = triv.max((hr - fourier_forward(&g, &quad, xi).unwrap()).norm());
    }
    pass &= triv <= 1e-8;
    lines.push(format!("trivial: corollary-forward={triv:e}"));
    report(10, pass, lines.join("; "));
    assert!(pass);
}
