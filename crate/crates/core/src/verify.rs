//! Randomised exact invariant suite.
//!
//! Every case draws a space, three random rational operators supported in a
//! tube, and a random partial translation inside the same tube, then runs
//! each check in exact arithmetic. A failing case is shrunk greedily by
//! dropping operator entries and translation pairs while the failure
//! persists, and the shrunk case is reported.

use std::fmt::Write as _;
use std::sync::Arc;

use num::Zero;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::colouring::{colour_permutations, decompose_translation, edge_colouring, verify_decomposition};
use crate::families;
use crate::kazhdan::{averaging_from_colouring, kazhdan_projection, restrict};
use crate::scalar::{format_rational, rational, Rational};
use crate::space::{tube, FiniteSpace, GraphBlock};
use crate::transalg::{in_a_x, theta, FinitePropOp, PartialTranslation};

type Entries = Vec<(usize, usize, Rational)>;

#[derive(Debug, Clone)]
pub struct Case {
    pub space: Arc<FiniteSpace>,
    pub radius: Rational,
    pub ops: [Entries; 3],
    /// `(y, t(y))`.
    pub translation: Vec<(usize, usize)>,
}

impl Case {
    fn op(&self, i: usize) -> FinitePropOp<Rational> {
        FinitePropOp::from_entries(&self.space, self.ops[i].iter().cloned()).expect("entries drawn inside a tube")
    }

    fn translation(&self) -> PartialTranslation {
        PartialTranslation::new(&self.space, self.translation.iter().copied()).expect("drawn injective")
    }

    /// Plain-text dump of the case.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let s = &self.space;
        let _ = writeln!(out, "space {} ({} points, components {:?})", s.name(), s.len(), s.component_sizes());
        let _ = writeln!(out, "radius {}", format_rational(&self.radius));
        for (i, ops) in self.ops.iter().enumerate() {
            let _ = writeln!(out, "op {i}:");
            for (x, y, v) in ops {
                let _ = writeln!(out, "  entry {x} {y} {}", format_rational(v));
            }
        }
        let _ = writeln!(out, "translation:");
        for (y, x) in &self.translation {
            let _ = writeln!(out, "  {y} -> {x}");
        }
        out
    }
}

pub type Check = fn(&Case) -> Result<(), String>;

fn ensure(ok: bool, what: &str) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.to_string())
    }
}

fn check_algebra(c: &Case) -> Result<(), String> {
    let (s, t, u) = (c.op(0), c.op(1), c.op(2));
    let mul = |a: &FinitePropOp<Rational>, b: &FinitePropOp<Rational>| a.try_mul(b).expect("same space");
    ensure(mul(&mul(&s, &t), &u) == mul(&s, &mul(&t, &u)), "(ST)U != S(TU)")?;
    ensure(mul(&s.try_add(&t).unwrap(), &u) == mul(&s, &u).try_add(&mul(&t, &u)).unwrap(), "(S+T)U != SU+TU")?;
    ensure(mul(&s, &t).adjoint() == mul(&t.adjoint(), &s.adjoint()), "(ST)* != T*S*")?;
    ensure(s.adjoint().adjoint() == s, "S** != S")?;
    ensure(mul(&s, &FinitePropOp::identity(&c.space)) == s, "S I != S")
}

fn check_propagation(c: &Case) -> Result<(), String> {
    let (s, t) = (c.op(0), c.op(1));
    let st = s.try_mul(&t).unwrap();
    ensure(st.propagation() <= &(s.propagation() + t.propagation()), "prop(ST) > prop(S) + prop(T)")?;
    ensure(s.try_add(&t).unwrap().propagation() <= s.propagation().max(t.propagation()), "prop(S+T) > max")?;
    ensure(s.adjoint().propagation() == s.propagation(), "prop(S*) != prop(S)")?;
    ensure(st.check_invariants(), "cached propagation disagrees with support")
}

fn check_colouring(c: &Case) -> Result<(), String> {
    let col = edge_colouring(&c.space, &c.radius).map_err(|e| e.to_string())?;
    ensure(col.is_proper(), "adjacent edges share a colour")?;
    ensure(col.colour_count() <= col.max_degree() + 1, "more than max degree + 1 colours")?;
    for (i, p) in colour_permutations(&col).iter().enumerate() {
        let a: FinitePropOp<Rational> = p.to_op();
        ensure(p.is_symmetric(), &format!("A_{i} is not symmetric"))?;
        ensure(a.try_mul(&a).unwrap() == FinitePropOp::identity(&c.space), &format!("A_{i}^2 != I"))?;
        ensure(in_a_x(&a, 0.0).ok().flatten() == Some(rational(1, 1)), &format!("A_{i} is not doubly stochastic"))?;
    }
    Ok(())
}

fn check_decomposition(c: &Case) -> Result<(), String> {
    let col = edge_colouring(&c.space, &c.radius).map_err(|e| e.to_string())?;
    let t = c.translation();
    let dec = decompose_translation(&t, &col).map_err(|e| e.to_string())?;
    ensure(verify_decomposition(&t, &dec), "v != Σ f_i A_i or vv* != Σ f_i")
}

fn check_projection(c: &Case) -> Result<(), String> {
    let col = edge_colouring(&c.space, &c.radius).map_err(|e| e.to_string())?;
    let a = averaging_from_colouring(&col);
    let p = kazhdan_projection(&c.space).to_op::<Rational>();
    ensure(p.adjoint() == p, "P* != P")?;
    ensure(p.try_mul(&p).unwrap() == p, "P^2 != P")?;
    ensure(p.try_mul(a.op()).unwrap() == p, "PA != P")?;
    ensure(a.op().try_mul(&p).unwrap() == p, "AP != P")?;
    ensure(theta(a.op()).ok() == Some(rational(1, 1)), "theta(A) != 1")?;
    let d = a.op().try_sub(&p).unwrap();
    let (mut ak, mut dk) = (a.op().clone(), d.clone());
    for k in 1..=4 {
        ensure(ak.try_sub(&p).unwrap() == dk, &format!("A^{k} - P != (A - P)^{k}"))?;
        ak = ak.try_mul(a.op()).unwrap();
        dk = dk.try_mul(&d).unwrap();
    }
    Ok(())
}

fn check_restriction(c: &Case) -> Result<(), String> {
    let (s, t) = (c.op(0), c.op(1));
    let p = kazhdan_projection(&c.space).to_op::<Rational>();
    for m in 0..c.space.component_count() {
        let q = |x: &FinitePropOp<Rational>| restrict(x, m).expect("valid component");
        let qs = q(&s);
        let target = qs.space().clone();
        ensure(q(&FinitePropOp::identity(&c.space)) == FinitePropOp::identity(&target), "Q(I) != I")?;
        ensure(q(&s.try_mul(&t).unwrap()) == qs.try_mul(&q(&t)).unwrap(), "Q(ST) != Q(S)Q(T)")?;
        ensure(q(&s.adjoint()) == qs.adjoint(), "Q(S*) != Q(S)*")?;
        ensure(q(&s.try_add(&t).unwrap()) == qs.try_add(&q(&t)).unwrap(), "Q(S+T) != Q(S)+Q(T)")?;
        ensure(q(&p) == kazhdan_projection(&target).to_op(), "Q(P) is not the component projection")?;
    }
    Ok(())
}

fn check_theta(c: &Case) -> Result<(), String> {
    let col = edge_colouring(&c.space, &c.radius).map_err(|e| e.to_string())?;
    let perms = colour_permutations(&col);
    let a = averaging_from_colouring(&col);
    let b: FinitePropOp<Rational> = perms.last().expect("identity always present").to_op();
    let mixed = a.op().scale(&rational(2, 3)).try_add(&b.scale(&rational(1, 3))).unwrap();
    let ab = a.op().try_mul(&mixed).unwrap();
    let th = |x: &FinitePropOp<Rational>| theta(x).map_err(|e| e.to_string());
    ensure(th(&ab)? == th(a.op())? * th(&mixed)?, "theta(AB) != theta(A) theta(B)")?;
    ensure(th(&mixed.adjoint())? == th(&mixed)?, "theta(B*) != theta(B)")?;
    let phi = crate::transalg::phi(&ab);
    ensure(phi == FinitePropOp::identity(&c.space).scale(&th(&ab)?), "phi(T) != theta(T) I")
}

pub const CHECKS: &[(&str, Check)] = &[
    ("algebra", check_algebra),
    ("propagation", check_propagation),
    ("colouring", check_colouring),
    ("decomposition", check_decomposition),
    ("projection", check_projection),
    ("restriction", check_restriction),
    ("theta", check_theta),
];

/// Drops operator entries and translation pairs one at a time while
/// `fails` stays true.
pub fn minimize(mut case: Case, fails: impl Fn(&Case) -> bool) -> Case {
    loop {
        let mut changed = false;
        for i in 0..3 {
            let mut j = 0;
            while j < case.ops[i].len() {
                let mut trial = case.clone();
                trial.ops[i].remove(j);
                if fails(&trial) {
                    case = trial;
                    changed = true;
                } else {
                    j += 1;
                }
            }
        }
        let mut j = 0;
        while j < case.translation.len() {
            let mut trial = case.clone();
            trial.translation.remove(j);
            if fails(&trial) {
                case = trial;
                changed = true;
            } else {
                j += 1;
            }
        }
        if !changed {
            return case;
        }
    }
}

fn random_small_rational(rng: &mut impl Rng) -> Rational {
    let mut v = Rational::zero();
    while v.is_zero() {
        v = rational(rng.random_range(-3..=3), rng.random_range(1..=3));
    }
    v
}

fn random_graph(rng: &mut impl Rng) -> FiniteSpace {
    let blocks = rng.random_range(1..=3);
    let blocks = (0..blocks)
        .map(|b| {
            let n = rng.random_range(1..=6);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.random_bool(0.45) {
                        edges.push((u, v));
                    }
                }
            }
            GraphBlock::unit(format!("b{b}"), n, edges)
        })
        .collect();
    FiniteSpace::from_blocks("random", blocks).expect("valid random graph")
}

fn corpus_space(rng: &mut impl Rng, index: usize) -> FiniteSpace {
    match index % 6 {
        0 => families::make_cycle(rng.random_range(3..=9)).unwrap(),
        1 => families::make_complete(rng.random_range(1..=6)).unwrap(),
        2 => families::make_margulis(rng.random_range(2..=3)).unwrap(),
        3 => families::make_box_space_z(&[3, 4, 6]).unwrap(),
        _ => random_graph(rng),
    }
}

fn random_case(space: Arc<FiniteSpace>, rng: &mut impl Rng) -> Case {
    let max = space.max_finite_distance();
    let radius = if rng.random_bool(0.7) || max.is_zero() { rational(1, 1) } else { max };
    let pairs: Vec<(usize, usize)> = tube(&space, &radius).expect("nonnegative").pairs().collect();
    let ops = std::array::from_fn(|_| {
        let k = rng.random_range(0..=pairs.len().min(12));
        pairs.choose_multiple(rng, k).map(|&(x, y)| (x, y, random_small_rational(rng))).collect()
    });
    let mut domain: Vec<usize> = (0..space.len()).collect();
    domain.shuffle(rng);
    let mut used = vec![false; space.len()];
    let mut translation = Vec::new();
    for y in domain {
        if !rng.random_bool(0.7) {
            continue;
        }
        let options: Vec<usize> = space.ball(y, &radius).expect("nonnegative").into_iter().filter(|&x| !used[x]).collect();
        if let Some(&x) = options.choose(rng) {
            used[x] = true;
            translation.push((y, x));
        }
    }
    Case { space, radius, ops, translation }
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub check: String,
    pub case: usize,
    pub message: String,
    pub counterexample: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub cases: usize,
    pub seed: u64,
    pub checks_run: usize,
    pub failures: Vec<Failure>,
    pub warnings: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs every check on `cases` random cases. With `space` the cases are
/// drawn over that space; otherwise from a built-in corpus of small graphs.
pub fn run_suite(space: Option<Arc<FiniteSpace>>, cases: usize, seed: u64) -> VerifyReport {
    run_checks(space, cases, seed, CHECKS)
}

pub fn run_checks(space: Option<Arc<FiniteSpace>>, cases: usize, seed: u64, checks: &[(&str, Check)]) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerifyReport { cases, seed, checks_run: 0, failures: Vec::new(), warnings: Vec::new() };
    if cases == 0 {
        report.warnings.push("no cases requested; the pass is vacuous".into());
        return report;
    }
    for i in 0..cases {
        let s = match &space {
            Some(s) => s.clone(),
            None => Arc::new(corpus_space(&mut rng, i)),
        };
        let case = random_case(s, &mut rng);
        for (name, check) in checks {
            report.checks_run += 1;
            if let Err(message) = check(&case) {
                let shrunk = minimize(case.clone(), |c| check(c).is_err());
                report.failures.push(Failure {
                    check: name.to_string(),
                    case: i,
                    message,
                    counterexample: shrunk.dump(),
                });
            }
        }
    }
    report
}
