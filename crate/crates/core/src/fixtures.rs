//! Builders for the bundled example algebras, each with a manifest of
//! machine-checkable expected properties. Running every manifest is the
//! reproduction suite for the documented values.

use std::collections::HashMap;

use crate::algebra::{Algebra, FiniteAlgebra, Operation, Term};
use crate::freealg::free_algebra;
use crate::malcev::{solve_identity_system, IdentitySystem, MnAnalysis, MnStatus};
use crate::relations::{classify, BinRel};
use crate::tolim::refute_tolim;
use crate::witnesses::is_malcev_term;
use crate::{Error, Limits, Result};

/// An algebra together with optional named relations and a manifest of
/// expected properties.
#[derive(Clone, Debug)]
pub struct NamedFixture {
    pub name: String,
    pub algebra: FiniteAlgebra,
    pub relations: Vec<(String, BinRel)>,
    pub manifest: Vec<Claim>,
}

impl NamedFixture {
    pub fn relation(&self, name: &str) -> Option<&BinRel> {
        self.relations
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, r)| r)
    }
}

/// A machine-checkable expected property of a fixture.
#[derive(Clone, Debug)]
pub enum Claim {
    /// The named relation classifies as a tolerance.
    IsTolerance { rel: String },
    /// The named relation is / is not a congruence.
    IsCongruence { rel: String, expected: bool },
    /// Every basic operation is idempotent.
    Idempotent,
    /// `lhs ≈ rhs` holds at the given arity.
    IdentityHolds {
        label: String,
        lhs: Term,
        rhs: Term,
        arity: usize,
    },
    /// A majority term exists / does not exist.
    MajorityTerm { exists: bool },
    /// A Mal'cev term exists / does not exist.
    MalcevTerm { exists: bool },
    /// `M(n)` holds / fails.
    Mn { n: usize, holds: bool },
    /// Permutability degree up to the bound.
    Permutability {
        max_n: usize,
        degree: Option<usize>,
    },
    /// Refuting the named tolerance at level `n` yields exactly this image
    /// and assignment.
    RefuteTolim {
        rel: String,
        n: usize,
        image: (usize, usize),
        assignment: Vec<(usize, usize)>,
    },
    /// The free algebra on `k` generators has exactly `size` elements.
    FreeSize { k: usize, size: usize },
    /// The named binary operations satisfy the lattice axioms.
    LatticeAxioms { meet: String, join: String },
}

/// Outcome of checking a single claim.
#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub fixture: String,
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

/// Checks every claim of a fixture's manifest. `M(n)` analyses are shared
/// between claims of the same level.
pub fn verify_fixture(fx: &NamedFixture, limits: &Limits) -> Result<Vec<CheckOutcome>> {
    let alg = &fx.algebra;
    let mut analyses: HashMap<usize, MnAnalysis> = HashMap::new();
    for claim in &fx.manifest {
        if let Claim::Mn { n, .. } = claim {
            if !analyses.contains_key(n) {
                analyses.insert(*n, MnAnalysis::new(alg, *n, limits)?);
            }
        }
    }
    let analysis = |n: usize| -> &MnAnalysis { &analyses[&n] };
    let mut outcomes = Vec::new();
    let mut push = |label: String, passed: bool, detail: String| {
        outcomes.push(CheckOutcome {
            fixture: fx.name.clone(),
            label,
            passed,
            detail,
        });
    };
    for claim in &fx.manifest {
        match claim {
            Claim::IsTolerance { rel } => {
                let r = fx.relation(rel).expect("manifest names a relation");
                let flags = classify(alg, r);
                push(
                    format!("{rel} is a tolerance"),
                    flags.tolerance,
                    format!("{flags:?}"),
                );
            }
            Claim::IsCongruence { rel, expected } => {
                let r = fx.relation(rel).expect("manifest names a relation");
                let flags = classify(alg, r);
                push(
                    format!("{rel} congruence: expected {expected}"),
                    flags.congruence == *expected,
                    format!("{flags:?}"),
                );
            }
            Claim::Idempotent => {
                let mut ok = true;
                'ops: for op in 0..alg.op_count() {
                    for a in 0..alg.size() {
                        let args = vec![a; alg.op_arity(op)];
                        if alg.apply(op, &args) != a {
                            ok = false;
                            break 'ops;
                        }
                    }
                }
                push("all operations idempotent".into(), ok, String::new());
            }
            Claim::IdentityHolds {
                label,
                lhs,
                rhs,
                arity,
            } => {
                let holds = crate::freealg::identity_holds(alg, lhs, rhs, *arity, limits)?;
                push(label.clone(), holds, String::new());
            }
            Claim::MajorityTerm { exists } => {
                let found = solve_identity_system(alg, &IdentitySystem::majority(), limits);
                let (ok, detail) = match (&found, exists) {
                    (Ok(t), true) => (true, t.display(alg)),
                    (Err(Error::NotFound), false) => (true, "no term".into()),
                    (Ok(t), false) => (false, t.display(alg)),
                    (Err(Error::NotFound), true) => (false, "no term".into()),
                    (Err(e), _) => return Err(e.clone()),
                };
                push(format!("majority term exists: {exists}"), ok, detail);
            }
            Claim::MalcevTerm { exists } => {
                let found = solve_identity_system(alg, &IdentitySystem::malcev(), limits);
                let (ok, detail) = match (&found, exists) {
                    (Ok(t), true) => (
                        is_malcev_term(alg, t, limits)?,
                        t.display(alg),
                    ),
                    (Err(Error::NotFound), false) => (true, "no term".into()),
                    (Ok(t), false) => (false, t.display(alg)),
                    (Err(Error::NotFound), true) => (false, "no term".into()),
                    (Err(e), _) => return Err(e.clone()),
                };
                push(format!("Mal'cev term exists: {exists}"), ok, detail);
            }
            Claim::Mn { n, holds } => {
                let verdict = analysis(*n).verdict();
                let ok = (verdict.status == MnStatus::Holds) == *holds;
                let detail = match &verdict.counterexample {
                    Some((f, g)) => format!(
                        "counterexample f = {}, g = {}",
                        f.display(alg),
                        g.display(alg)
                    ),
                    None => format!("|F({})| = {}", 2 * n, verdict.free_size),
                };
                push(
                    format!("M({n}) {}", if *holds { "holds" } else { "fails" }),
                    ok,
                    detail,
                );
            }
            Claim::Permutability { max_n, degree } => {
                let found = crate::malcev::permutability_degree(alg, *max_n, limits)?;
                let found_degree = found.as_ref().map(|c| c.degree);
                let mut ok = found_degree == *degree;
                if let Some(chain) = &found {
                    ok = ok && crate::malcev::verify_hm_chain(alg, &chain.terms, limits)?;
                }
                push(
                    format!("permutability degree (up to {max_n}): {degree:?}"),
                    ok,
                    format!("found {found_degree:?}"),
                );
            }
            Claim::RefuteTolim {
                rel,
                n,
                image,
                assignment,
            } => {
                let tau = fx.relation(rel).expect("manifest names a relation");
                let refutation = refute_tolim(alg, tau, *n, limits)?;
                let (ok, detail) = match refutation {
                    Some(r) => {
                        let matches = r.image == *image
                            && r.assignment == *assignment
                            && r.verify(alg, tau, limits)?;
                        (
                            matches,
                            format!("image {:?}, assignment {:?}", r.image, r.assignment),
                        )
                    }
                    None => (false, "no refutation found".into()),
                };
                push(format!("refute {rel} at n = {n}"), ok, detail);
            }
            Claim::FreeSize { k, size } => {
                let free = free_algebra(alg, *k, limits)?;
                push(
                    format!("|F({k})| = {size}"),
                    free.len() == *size,
                    format!("found {}", free.len()),
                );
            }
            Claim::LatticeAxioms { meet, join } => {
                let m = alg.op_index(meet).expect("manifest names an operation");
                let j = alg.op_index(join).expect("manifest names an operation");
                let ok = lattice_axioms_hold(alg, m, j, limits)?;
                push("lattice axioms".into(), ok, String::new());
            }
        }
    }
    Ok(outcomes)
}

fn lattice_axioms_hold(
    alg: &FiniteAlgebra,
    meet: usize,
    join: usize,
    limits: &Limits,
) -> Result<bool> {
    let x = Term::var(0);
    let y = Term::var(1);
    let z = Term::var(2);
    let app = |op: usize, a: &Term, b: &Term| Term::app(op, vec![a.clone(), b.clone()]);
    let pairs = [
        // commutativity
        (app(meet, &x, &y), app(meet, &y, &x), 2),
        (app(join, &x, &y), app(join, &y, &x), 2),
        // associativity
        (
            app(meet, &app(meet, &x, &y), &z),
            app(meet, &x, &app(meet, &y, &z)),
            3,
        ),
        (
            app(join, &app(join, &x, &y), &z),
            app(join, &x, &app(join, &y, &z)),
            3,
        ),
        // absorption
        (app(meet, &x, &app(join, &x, &y)), x.clone(), 2),
        (app(join, &x, &app(meet, &x, &y)), x.clone(), 2),
    ];
    for (lhs, rhs, arity) in pairs {
        if !crate::freealg::identity_holds(alg, &lhs, &rhs, arity, limits)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Runs every bundled manifest; the returned outcomes are the full
/// documented-value reproduction suite.
pub fn verify_all(limits: &Limits) -> Result<Vec<CheckOutcome>> {
    let mut outcomes = Vec::new();
    for fx in all_fixtures()? {
        outcomes.extend(verify_fixture(&fx, limits)?);
    }
    Ok(outcomes)
}

/// All bundled fixtures, including the separating algebra at n = 1.
pub fn all_fixtures() -> Result<Vec<NamedFixture>> {
    let mut fixtures = vec![prop5()];
    fixtures.push(separating_algebra(1)?);
    fixtures.extend(standard_fixtures());
    Ok(fixtures)
}

/// The three-element idempotent algebra with a majority term whose
/// tolerance `tau` (everything except the pairs relating 1 and 2) is not a
/// homomorphic image of any congruence: `M(2)` fails, witnessed by the pair
/// of basic operations `f`, `g`.
pub fn prop5() -> NamedFixture {
    let f = Operation::from_fn("f", 4, 3, |args| match args {
        [1, 1, 1, 1] | [1, 0, 0, 2] => 1,
        [2, 2, 2, 2] => 2,
        _ => 0,
    });
    let g = Operation::from_fn("g", 4, 3, |args| match args {
        [2, 2, 2, 2] | [1, 0, 0, 2] => 2,
        [1, 1, 1, 1] => 1,
        _ => 0,
    });
    let m = Operation::from_fn("m", 3, 3, |args| {
        if args[0] == args[1] || args[0] == args[2] {
            args[0]
        } else if args[1] == args[2] {
            args[1]
        } else {
            0
        }
    });
    let algebra = FiniteAlgebra::new(3, vec![f, g, m]).expect("fixture tables are valid");
    let mut tau = BinRel::full(3);
    tau.remove(1, 2);
    tau.remove(2, 1);

    let f = algebra.op_index("f").unwrap();
    let g = algebra.op_index("g").unwrap();
    let m = algebra.op_index("m").unwrap();
    let v = Term::var;
    let diag_f = Term::app(f, vec![v(0), v(0), v(1), v(1)]);
    let diag_g = Term::app(g, vec![v(0), v(0), v(1), v(1)]);
    let manifest = vec![
        Claim::IsTolerance { rel: "tau".into() },
        Claim::IsCongruence {
            rel: "tau".into(),
            expected: false,
        },
        Claim::Idempotent,
        Claim::IdentityHolds {
            label: "f(x,x,y,y) ≈ g(x,x,y,y)".into(),
            lhs: diag_f,
            rhs: diag_g,
            arity: 2,
        },
        Claim::IdentityHolds {
            label: "m(x,x,y) ≈ x".into(),
            lhs: Term::app(m, vec![v(0), v(0), v(1)]),
            rhs: v(0),
            arity: 2,
        },
        Claim::IdentityHolds {
            label: "m(x,y,x) ≈ x".into(),
            lhs: Term::app(m, vec![v(0), v(1), v(0)]),
            rhs: v(0),
            arity: 2,
        },
        Claim::IdentityHolds {
            label: "m(y,x,x) ≈ x".into(),
            lhs: Term::app(m, vec![v(1), v(0), v(0)]),
            rhs: v(0),
            arity: 2,
        },
        Claim::MajorityTerm { exists: true },
        Claim::FreeSize { k: 2, size: 9 },
        Claim::Mn { n: 1, holds: true },
        Claim::Mn { n: 2, holds: false },
        Claim::RefuteTolim {
            rel: "tau".into(),
            n: 2,
            image: (1, 2),
            assignment: vec![(1, 0), (0, 2)],
        },
    ];
    NamedFixture {
        name: "prop5".into(),
        algebra,
        relations: vec![("tau".into(), tau)],
        manifest,
    }
}

/// The separating algebra at level `n`: `2n+3` elements with two
/// `(2n+2)`-ary operations that map argument tuples covering all nonzero
/// elements to 1 and 2 respectively, and everything else to 0. `M(n)`
/// holds but `M(n+1)` fails in the generated variety.
pub fn separating_algebra(n: usize) -> Result<NamedFixture> {
    if n == 0 {
        return Err(Error::InvalidN);
    }
    let size = 2 * n + 3;
    let arity = 2 * n + 2;
    let table_len = (size as u128).pow(arity as u32);
    let default = Limits::default();
    if table_len * 2 > default.max_entries as u128 {
        return Err(Error::ResourceExceeded {
            needed: table_len * 2,
            cap: default.max_entries,
        });
    }
    // the argument set equals {1, .., 2n+2} iff all slots are distinct and
    // nonzero
    let covers = |args: &[usize]| -> bool {
        let mut mask = 0usize;
        for &a in args {
            mask |= 1 << a;
        }
        mask == ((1 << size) - 1) & !1
    };
    let f = Operation::from_fn("f", arity, size, |args| if covers(args) { 1 } else { 0 });
    let g = Operation::from_fn("g", arity, size, |args| if covers(args) { 2 } else { 0 });
    let algebra = FiniteAlgebra::new(size, vec![f, g])?;
    let manifest = vec![
        Claim::Mn { n, holds: true },
        Claim::Mn {
            n: n + 1,
            holds: false,
        },
    ];
    Ok(NamedFixture {
        name: format!("separating{n}"),
        algebra,
        relations: Vec::new(),
        manifest,
    })
}

/// Two-element meet semilattice.
pub fn semilattice2() -> NamedFixture {
    let algebra = FiniteAlgebra::new(2, vec![Operation::new("meet", 2, vec![0, 0, 0, 1])])
        .expect("fixture tables are valid");
    NamedFixture {
        name: "semilattice2".into(),
        algebra,
        relations: Vec::new(),
        manifest: vec![
            Claim::Idempotent,
            Claim::MajorityTerm { exists: false },
            Claim::MalcevTerm { exists: false },
            Claim::Permutability {
                max_n: 6,
                degree: None,
            },
            Claim::FreeSize { k: 2, size: 3 },
            Claim::Mn { n: 1, holds: true },
            Claim::Mn { n: 2, holds: true },
        ],
    }
}

/// Two-element lattice.
pub fn lattice2() -> NamedFixture {
    let algebra = FiniteAlgebra::new(
        2,
        vec![
            Operation::new("meet", 2, vec![0, 0, 0, 1]),
            Operation::new("join", 2, vec![0, 1, 1, 1]),
        ],
    )
    .expect("fixture tables are valid");
    NamedFixture {
        name: "lattice2".into(),
        algebra,
        relations: Vec::new(),
        manifest: vec![
            Claim::Idempotent,
            Claim::LatticeAxioms {
                meet: "meet".into(),
                join: "join".into(),
            },
            Claim::MajorityTerm { exists: true },
            Claim::Mn { n: 1, holds: true },
            Claim::Mn { n: 2, holds: true },
        ],
    }
}

/// Two-element implication algebra: `x -> y = max(1 - x, y)`.
pub fn implication2() -> NamedFixture {
    let algebra = FiniteAlgebra::new(2, vec![Operation::new("imp", 2, vec![1, 1, 0, 1])])
        .expect("fixture tables are valid");
    NamedFixture {
        name: "implication2".into(),
        algebra,
        relations: Vec::new(),
        manifest: vec![
            Claim::Permutability {
                max_n: 6,
                degree: Some(3),
            },
            Claim::MalcevTerm { exists: false },
            Claim::Mn { n: 1, holds: true },
            Claim::Mn { n: 2, holds: false },
        ],
    }
}

/// Two-element affine algebra with the single ternary operation
/// `p(x,y,z) = x + y + z (mod 2)`: congruence permutable.
pub fn z2_affine() -> NamedFixture {
    let algebra = FiniteAlgebra::new(
        2,
        vec![Operation::from_fn("p", 3, 2, |a| a[0] ^ a[1] ^ a[2])],
    )
    .expect("fixture tables are valid");
    NamedFixture {
        name: "z2affine".into(),
        algebra,
        relations: Vec::new(),
        manifest: vec![
            Claim::MalcevTerm { exists: true },
            Claim::Permutability {
                max_n: 6,
                degree: Some(2),
            },
            Claim::Mn { n: 1, holds: true },
            Claim::Mn { n: 2, holds: true },
        ],
    }
}

/// The five-element nondistributive lattice with elements
/// `0 < 1 < 2 < 4` and `0 < 3 < 4`.
pub fn n5() -> NamedFixture {
    // order matrix: leq[a][b] iff a <= b
    let leq: [[bool; 5]; 5] = {
        let mut leq = [[false; 5]; 5];
        let pairs = [
            (0, 0),
            (0, 1),
            (0, 2),
            (0, 3),
            (0, 4),
            (1, 1),
            (1, 2),
            (1, 4),
            (2, 2),
            (2, 4),
            (3, 3),
            (3, 4),
            (4, 4),
        ];
        for (a, b) in pairs {
            leq[a][b] = true;
        }
        leq
    };
    let glb = move |x: usize, y: usize| -> usize {
        (0..5).fold(0, |best, z| {
            if leq[z][x] && leq[z][y] && leq[best][z] {
                z
            } else {
                best
            }
        })
    };
    let lub = move |x: usize, y: usize| -> usize {
        (0..5).rev().fold(4, |best, z| {
            if leq[x][z] && leq[y][z] && leq[z][best] {
                z
            } else {
                best
            }
        })
    };
    let algebra = FiniteAlgebra::new(
        5,
        vec![
            Operation::from_fn("meet", 2, 5, |a| glb(a[0], a[1])),
            Operation::from_fn("join", 2, 5, |a| lub(a[0], a[1])),
        ],
    )
    .expect("fixture tables are valid");
    NamedFixture {
        name: "n5".into(),
        algebra,
        relations: Vec::new(),
        manifest: vec![
            Claim::Idempotent,
            Claim::LatticeAxioms {
                meet: "meet".into(),
                join: "join".into(),
            },
            Claim::MajorityTerm { exists: true },
            Claim::FreeSize { k: 2, size: 4 },
            Claim::Mn { n: 1, holds: true },
        ],
    }
}

/// The fixtures other than the two purpose-built counterexample algebras.
pub fn standard_fixtures() -> Vec<NamedFixture> {
    vec![
        semilattice2(),
        lattice2(),
        implication2(),
        z2_affine(),
        n5(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Tuples;

    #[test]
    fn prop5_table_values() {
        let fx = prop5();
        let alg = &fx.algebra;
        let f = alg.op_index("f").unwrap();
        let g = alg.op_index("g").unwrap();
        let m = alg.op_index("m").unwrap();
        assert_eq!(alg.apply(f, &[2, 2, 2, 2]), 2);
        assert_eq!(alg.apply(g, &[1, 1, 1, 1]), 1);
        assert_eq!(alg.apply(m, &[1, 1, 0]), 1);
    }

    #[test]
    fn prop5_g_is_the_reversed_dual_of_f() {
        // transcription cross-check: g(a,b,c,d) arises from f(d,c,b,a) by
        // exchanging the values 1 and 2
        let fx = prop5();
        let alg = &fx.algebra;
        let f = alg.op_index("f").unwrap();
        let g = alg.op_index("g").unwrap();
        let swap = |v: usize| match v {
            1 => 2,
            2 => 1,
            other => other,
        };
        let mut tuples = crate::algebra::Tuples::new(3, 4);
        while let Some(args) = tuples.next_tuple() {
            let reversed: Vec<usize> = args.iter().rev().map(|&a| swap(a)).collect();
            assert_eq!(
                alg.apply(g, args),
                swap(alg.apply(f, &reversed)),
                "at {args:?}"
            );
        }
    }

    #[test]
    fn separating_table_values() {
        let fx = separating_algebra(1).unwrap();
        let alg = &fx.algebra;
        let f = alg.op_index("f").unwrap();
        let g = alg.op_index("g").unwrap();
        assert_eq!(alg.apply(f, &[1, 2, 3, 4]), 1);
        assert_eq!(alg.apply(f, &[1, 1, 2, 3]), 0);
        assert_eq!(alg.apply(g, &[4, 3, 2, 1]), 2);
    }

    #[test]
    fn separating_rejects_zero() {
        assert_eq!(separating_algebra(0).unwrap_err(), Error::InvalidN);
    }

    #[test]
    fn larger_separating_algebras_build_within_cap() {
        // n = 2: 7 elements, two 6-ary operations; construction only,
        // the M(n) claims for it are beyond the default test budget
        let fx = separating_algebra(2).unwrap();
        let alg = &fx.algebra;
        assert_eq!(alg.size(), 7);
        let f = alg.op_index("f").unwrap();
        assert_eq!(alg.apply(f, &[1, 2, 3, 4, 5, 6]), 1);
        assert_eq!(alg.apply(f, &[1, 1, 2, 3, 4, 5]), 0);
        // far past the cap the builder reports the resource failure
        assert!(matches!(
            separating_algebra(6),
            Err(Error::ResourceExceeded { .. })
        ));
    }

    #[test]
    fn standard_fixture_tables() {
        let semilattice = semilattice2();
        assert_eq!(semilattice.algebra.apply(0, &[0, 1]), 0);
        let implication = implication2();
        assert_eq!(implication.algebra.apply(0, &[0, 1]), 1);
        assert_eq!(implication.algebra.apply(0, &[1, 0]), 0);
        let z2 = z2_affine();
        assert_eq!(z2.algebra.apply(0, &[1, 1, 0]), 0);
    }

    #[test]
    fn n5_is_a_lattice() {
        let fx = n5();
        let alg = &fx.algebra;
        let ok = lattice_axioms_hold(
            alg,
            alg.op_index("meet").unwrap(),
            alg.op_index("join").unwrap(),
            &Limits::default(),
        )
        .unwrap();
        assert!(ok);
        // nondistributive: meet(2, join(1, 3)) != join(meet(2,1), meet(2,3))
        let meet = alg.op_index("meet").unwrap();
        let join = alg.op_index("join").unwrap();
        let lhs = alg.apply(meet, &[2, alg.apply(join, &[1, 3])]);
        let rhs = alg.apply(join, &[alg.apply(meet, &[2, 1]), alg.apply(meet, &[2, 3])]);
        assert_ne!(lhs, rhs);
    }

    #[test]
    fn small_manifests_verify() {
        // the heavyweight fixtures are covered by the acceptance suite
        let limits = Limits::default();
        for fx in [semilattice2(), z2_affine(), n5()] {
            for outcome in verify_fixture(&fx, &limits).unwrap() {
                assert!(
                    outcome.passed,
                    "{}: {} ({})",
                    outcome.fixture, outcome.label, outcome.detail
                );
            }
        }
    }

    #[test]
    fn tuples_iterator_covers_all_points() {
        let mut count = 0;
        let mut t = Tuples::new(3, 2);
        while t.next_tuple().is_some() {
            count += 1;
        }
        assert_eq!(count, 9);
    }
}
