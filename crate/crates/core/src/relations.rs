//! Binary relations on finite algebras: classification, generation of
//! tolerances and congruences with derivation records, images under
//! homomorphisms, and witness-term extraction.
//!
//! A tolerance is a reflexive, symmetric, compatible relation; transitive
//! tolerances are congruences. The generated tolerance is the least fixed
//! point of diagonal + generators + symmetric closure, closed under
//! coordinatewise application of all operations. Every derived pair carries
//! a record of how it was first produced, and a term reproducing any pair of
//! a generated tolerance can be extracted from those records.

use std::collections::BTreeSet;

use crate::algebra::{Algebra, FiniteAlgebra, Term};
use crate::closure::FxMap;
use crate::{Error, Result};

/// A set of ordered pairs over the universe `0..size`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinRel {
    size: usize,
    pairs: BTreeSet<(usize, usize)>,
}

impl BinRel {
    pub fn new(size: usize) -> Self {
        BinRel {
            size,
            pairs: BTreeSet::new(),
        }
    }

    pub fn from_pairs<I>(size: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut rel = BinRel::new(size);
        for (a, b) in pairs {
            rel.insert(a, b)?;
        }
        Ok(rel)
    }

    pub fn diagonal(size: usize) -> Self {
        BinRel {
            size,
            pairs: (0..size).map(|a| (a, a)).collect(),
        }
    }

    pub fn full(size: usize) -> Self {
        BinRel {
            size,
            pairs: (0..size)
                .flat_map(|a| (0..size).map(move |b| (a, b)))
                .collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn insert(&mut self, a: usize, b: usize) -> Result<()> {
        if a >= self.size || b >= self.size {
            return Err(Error::ElementOutOfRange {
                value: a.max(b),
                size: self.size,
            });
        }
        self.pairs.insert((a, b));
        Ok(())
    }

    pub fn remove(&mut self, a: usize, b: usize) {
        self.pairs.remove(&(a, b));
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.pairs.contains(&(a, b))
    }

    /// Pairs in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn is_subset(&self, other: &BinRel) -> bool {
        self.pairs.is_subset(&other.pairs)
    }
}

/// Classification flags of a binary relation on an algebra.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RelFlags {
    pub reflexive: bool,
    pub symmetric: bool,
    pub transitive: bool,
    pub compatible: bool,
    pub tolerance: bool,
    pub congruence: bool,
}

/// Classifies a relation: a tolerance is reflexive, symmetric and
/// compatible; a congruence is additionally transitive. Compatibility is
/// checked directly: for every operation and every coordinatewise-related
/// tuple of arguments, the images must be related.
pub fn classify<A: Algebra + ?Sized>(alg: &A, rel: &BinRel) -> RelFlags {
    let reflexive = (0..alg.size()).all(|a| rel.contains(a, a));
    let symmetric = rel.iter().all(|(a, b)| rel.contains(b, a));
    let transitive = rel.iter().all(|(a, b)| {
        rel.iter()
            .filter(|&(c, _)| c == b)
            .all(|(_, d)| rel.contains(a, d))
    });
    let compatible = (0..alg.op_count()).all(|op| op_preserves(alg, op, rel));
    let tolerance = reflexive && symmetric && compatible;
    let congruence = tolerance && transitive;
    RelFlags {
        reflexive,
        symmetric,
        transitive,
        compatible,
        tolerance,
        congruence,
    }
}

fn op_preserves<A: Algebra + ?Sized>(alg: &A, op: usize, rel: &BinRel) -> bool {
    let arity = alg.op_arity(op);
    let pairs: Vec<(usize, usize)> = rel.iter().collect();
    if arity == 0 || pairs.is_empty() {
        return true;
    }
    let mut stack = vec![0usize; arity];
    let mut lefts = vec![0usize; arity];
    let mut rights = vec![0usize; arity];
    loop {
        for (i, &p) in stack.iter().enumerate() {
            lefts[i] = pairs[p].0;
            rights[i] = pairs[p].1;
        }
        if !rel.contains(alg.apply(op, &lefts), alg.apply(op, &rights)) {
            return false;
        }
        let mut pos = arity;
        loop {
            if pos == 0 {
                return true;
            }
            pos -= 1;
            stack[pos] += 1;
            if stack[pos] < pairs.len() {
                break;
            }
            stack[pos] = 0;
        }
    }
}

/// How a pair of a generated relation was first derived.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DerivStep {
    /// The `i`-th generator pair.
    Generator(usize),
    /// The reflexive pair `(a, a)`.
    Diagonal(usize),
    /// Flip of an earlier pair.
    Symmetry(u32),
    /// Coordinatewise application of an operation to earlier pairs.
    OpStep { op: usize, children: Vec<u32> },
    /// Composition of `(a, b)` and `(b, c)` (congruence closure only).
    TransStep { left: u32, right: u32 },
}

/// Provenance records for every pair produced during closure, in insertion
/// order. Acyclic by construction: records only reference earlier records.
#[derive(Clone, Debug)]
pub struct DerivationDag {
    gens: Vec<(usize, usize)>,
    pairs: Vec<(usize, usize)>,
    steps: Vec<DerivStep>,
    index: FxMap<(usize, usize), u32>,
}

impl DerivationDag {
    fn new(gens: &[(usize, usize)]) -> Self {
        DerivationDag {
            gens: gens.to_vec(),
            pairs: Vec::new(),
            steps: Vec::new(),
            index: FxMap::default(),
        }
    }

    fn insert(&mut self, pair: (usize, usize), step: DerivStep) -> Option<u32> {
        if self.index.contains_key(&pair) {
            return None;
        }
        let id = self.pairs.len() as u32;
        self.pairs.push(pair);
        self.steps.push(step);
        self.index.insert(pair, id);
        Some(id)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn generators(&self) -> &[(usize, usize)] {
        &self.gens
    }

    pub fn pair(&self, id: u32) -> (usize, usize) {
        self.pairs[id as usize]
    }

    pub fn step(&self, id: u32) -> &DerivStep {
        &self.steps[id as usize]
    }

    pub fn lookup(&self, pair: (usize, usize)) -> Option<u32> {
        self.index.get(&pair).copied()
    }

    /// Recomputes the pair of a record from its children; used to check that
    /// replaying a derivation reproduces its pair.
    pub fn replay<A: Algebra + ?Sized>(&self, alg: &A, id: u32) -> (usize, usize) {
        match &self.steps[id as usize] {
            DerivStep::Generator(g) => self.gens[*g],
            DerivStep::Diagonal(a) => (*a, *a),
            DerivStep::Symmetry(q) => {
                let (a, b) = self.replay(alg, *q);
                (b, a)
            }
            DerivStep::OpStep { op, children } => {
                let mut lefts = Vec::with_capacity(children.len());
                let mut rights = Vec::with_capacity(children.len());
                for &c in children {
                    let (a, b) = self.replay(alg, c);
                    lefts.push(a);
                    rights.push(b);
                }
                (alg.apply(*op, &lefts), alg.apply(*op, &rights))
            }
            DerivStep::TransStep { left, right } => {
                let (a, b) = self.replay(alg, *left);
                let (b2, c) = self.replay(alg, *right);
                debug_assert_eq!(b, b2);
                (a, c)
            }
        }
    }
}

struct PairClosure {
    dag: DerivationDag,
}

impl PairClosure {
    fn seed(size: usize, gens: &[(usize, usize)]) -> Result<Self> {
        for &(a, b) in gens {
            if a >= size || b >= size {
                return Err(Error::ElementOutOfRange {
                    value: a.max(b),
                    size,
                });
            }
        }
        let mut dag = DerivationDag::new(gens);
        for (g, &(a, b)) in gens.iter().enumerate() {
            dag.insert((a, b), DerivStep::Generator(g));
        }
        for &(a, b) in gens {
            if let Some(&fwd) = dag.index.get(&(a, b)) {
                dag.insert((b, a), DerivStep::Symmetry(fwd));
            }
        }
        for a in 0..size {
            dag.insert((a, a), DerivStep::Diagonal(a));
        }
        Ok(PairClosure { dag })
    }

    /// Worklist closure under coordinatewise operation application: each new
    /// pair is combined, in every coordinate position, with all pairs
    /// discovered before it.
    fn compatible_closure<A: Algebra + ?Sized>(&mut self, alg: &A, from: usize) {
        let mut z = from;
        while z < self.dag.pairs.len() {
            for op in 0..alg.op_count() {
                let arity = alg.op_arity(op);
                if arity == 0 {
                    // constants only yield diagonal pairs, already seeded
                    continue;
                }
                let mut children = vec![0u32; arity];
                self.op_tuples(alg, op, arity, z as u32, &mut children, 0, false);
            }
            z += 1;
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn op_tuples<A: Algebra + ?Sized>(
        &mut self,
        alg: &A,
        op: usize,
        arity: usize,
        z: u32,
        children: &mut Vec<u32>,
        pos: usize,
        seen_z: bool,
    ) {
        if pos == arity {
            if !seen_z {
                return;
            }
            let mut lefts = Vec::with_capacity(arity);
            let mut rights = Vec::with_capacity(arity);
            for &c in children.iter() {
                let (a, b) = self.dag.pairs[c as usize];
                lefts.push(a);
                rights.push(b);
            }
            let pair = (alg.apply(op, &lefts), alg.apply(op, &rights));
            self.dag.insert(
                pair,
                DerivStep::OpStep {
                    op,
                    children: children.clone(),
                },
            );
            return;
        }
        for v in 0..=z {
            if !seen_z && pos == arity - 1 && v != z {
                continue;
            }
            children[pos] = v;
            self.op_tuples(alg, op, arity, z, children, pos + 1, seen_z || v == z);
        }
    }

    /// One transitive sweep to fixpoint, composing pairs through shared
    /// middle elements.
    fn transitive_closure(&mut self) {
        let mut z = 0;
        while z < self.dag.pairs.len() {
            let (a, b) = self.dag.pairs[z];
            // compose (a,b) with every (b,c) and every (c,a) seen so far
            for q in 0..self.dag.pairs.len() {
                let (c, d) = self.dag.pairs[q];
                if c == b {
                    self.dag.insert(
                        (a, d),
                        DerivStep::TransStep {
                            left: z as u32,
                            right: q as u32,
                        },
                    );
                }
                if d == a {
                    self.dag.insert(
                        (c, b),
                        DerivStep::TransStep {
                            left: q as u32,
                            right: z as u32,
                        },
                    );
                }
            }
            z += 1;
        }
    }

    fn into_parts(self, size: usize) -> (BinRel, DerivationDag) {
        let mut rel = BinRel::new(size);
        for &(a, b) in &self.dag.pairs {
            rel.pairs.insert((a, b));
        }
        (rel, self.dag)
    }
}

/// Generates the smallest tolerance containing the given pairs: the least
/// fixed point of diagonal + generators + symmetric closure under
/// coordinatewise operation application. Returns derivation records for
/// every pair of the result.
pub fn gen_tolerance<A: Algebra + ?Sized>(
    alg: &A,
    gens: &[(usize, usize)],
) -> Result<(BinRel, DerivationDag)> {
    let mut closure = PairClosure::seed(alg.size(), gens)?;
    closure.compatible_closure(alg, 0);
    Ok(closure.into_parts(alg.size()))
}

/// Generates the smallest congruence containing the given pairs by
/// alternating full compatible-closure sweeps with transitive-closure sweeps
/// until stable.
pub fn gen_congruence<A: Algebra + ?Sized>(
    alg: &A,
    gens: &[(usize, usize)],
) -> Result<(BinRel, DerivationDag)> {
    let mut closure = PairClosure::seed(alg.size(), gens)?;
    let mut from = 0;
    loop {
        closure.compatible_closure(alg, from);
        let before = closure.dag.pairs.len();
        closure.transitive_closure();
        if closure.dag.pairs.len() == before {
            break;
        }
        from = before;
    }
    Ok(closure.into_parts(alg.size()))
}

/// A homomorphism between finite algebras of the same signature, validated
/// on construction.
#[derive(Clone, Debug)]
pub struct Homomorphism {
    source: FiniteAlgebra,
    target: FiniteAlgebra,
    map: Vec<usize>,
}

impl Homomorphism {
    pub fn new(source: FiniteAlgebra, target: FiniteAlgebra, map: Vec<usize>) -> Result<Self> {
        if source.op_count() != target.op_count() {
            return Err(Error::InvalidHomomorphism(
                "signatures have different lengths".into(),
            ));
        }
        for op in 0..source.op_count() {
            if source.op_arity(op) != target.op_arity(op)
                || source.op_name(op) != target.op_name(op)
            {
                return Err(Error::InvalidHomomorphism(format!(
                    "operation {} differs between source and target",
                    source.op_name(op)
                )));
            }
        }
        if map.len() != source.size() {
            return Err(Error::InvalidHomomorphism(format!(
                "map has {} entries for a source of size {}",
                map.len(),
                source.size()
            )));
        }
        for &v in &map {
            if v >= target.size() {
                return Err(Error::ElementOutOfRange {
                    value: v,
                    size: target.size(),
                });
            }
        }
        for op in 0..source.op_count() {
            let arity = source.op_arity(op);
            let mut tuples = crate::algebra::Tuples::new(source.size(), arity);
            let mut mapped = vec![0usize; arity];
            while let Some(args) = tuples.next_tuple() {
                for (m, &a) in mapped.iter_mut().zip(args) {
                    *m = map[a];
                }
                if map[source.apply(op, args)] != target.apply(op, &mapped) {
                    return Err(Error::InvalidHomomorphism(format!(
                        "operation {} is not preserved at {:?}",
                        source.op_name(op),
                        args
                    )));
                }
            }
        }
        Ok(Homomorphism {
            source,
            target,
            map,
        })
    }

    pub fn source(&self) -> &FiniteAlgebra {
        &self.source
    }

    pub fn target(&self) -> &FiniteAlgebra {
        &self.target
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn is_surjective(&self) -> bool {
        let mut hit = vec![false; self.target.size()];
        for &v in &self.map {
            hit[v] = true;
        }
        hit.iter().all(|&h| h)
    }
}

/// Elementwise image of a relation on the source under a homomorphism.
pub fn rel_image(hom: &Homomorphism, rel: &BinRel) -> BinRel {
    let mut image = BinRel::new(hom.target.size());
    for (a, b) in rel.iter() {
        image.pairs.insert((hom.map[a], hom.map[b]));
    }
    image
}

/// Extracts a term reproducing `target` from a tolerance derivation.
///
/// The term is over `2g + s` variables, where `g` is the number of
/// generator pairs and `s` the universe size: variables `2i` and `2i + 1`
/// stand for the two sides of generator `i`, and variable `2g + c` for the
/// universe element `c` (the whole universe serves as the generating
/// constant block). Substituting `(a_i, b_i; c_j)` yields `target.0` and
/// substituting `(b_i, a_i; c_j)` yields `target.1`; both evaluations are
/// checked before returning.
pub fn tolerance_witness<A: Algebra + ?Sized>(
    alg: &A,
    gens: &[(usize, usize)],
    dag: &DerivationDag,
    target: (usize, usize),
) -> Result<Term> {
    let id = dag
        .lookup(target)
        .ok_or(Error::PairNotInTolerance(target.0, target.1))?;
    let g = gens.len();
    let mut memo: FxMap<u32, Term> = FxMap::default();
    let term = witness_term(dag, id, g, &mut memo);

    let mut env_fwd = Vec::with_capacity(2 * g + alg.size());
    let mut env_rev = Vec::with_capacity(2 * g + alg.size());
    for &(a, b) in gens {
        env_fwd.extend_from_slice(&[a, b]);
        env_rev.extend_from_slice(&[b, a]);
    }
    env_fwd.extend(0..alg.size());
    env_rev.extend(0..alg.size());
    let fwd = term.eval(alg, &env_fwd)?;
    let rev = term.eval(alg, &env_rev)?;
    assert_eq!(
        (fwd, rev),
        target,
        "extracted witness failed re-verification"
    );
    Ok(term)
}

fn witness_term(dag: &DerivationDag, id: u32, g: usize, memo: &mut FxMap<u32, Term>) -> Term {
    if let Some(hit) = memo.get(&id) {
        return hit.clone();
    }
    let term = match dag.step(id) {
        DerivStep::Generator(i) => Term::var(2 * i),
        DerivStep::Diagonal(a) => Term::var(2 * g + a),
        DerivStep::Symmetry(q) => {
            let inner = witness_term(dag, *q, g, memo);
            swap_generator_block(&inner, g)
        }
        DerivStep::OpStep { op, children } => {
            let args = children
                .iter()
                .map(|&c| witness_term(dag, c, g, memo))
                .collect();
            Term::app(*op, args)
        }
        DerivStep::TransStep { .. } => {
            unreachable!("tolerance derivations never contain transitivity steps")
        }
    };
    memo.insert(id, term.clone());
    term
}

/// Swaps variables `2i <-> 2i + 1` below `2g`, fixing the constant block.
fn swap_generator_block(term: &Term, g: usize) -> Term {
    match term {
        Term::Var(v) => {
            if *v < 2 * g {
                Term::var(*v ^ 1)
            } else {
                Term::var(*v)
            }
        }
        Term::App(op, args) => Term::app(
            *op,
            args.iter().map(|a| swap_generator_block(a, g)).collect(),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Operation;
    use crate::fixtures;

    fn semilattice2() -> FiniteAlgebra {
        FiniteAlgebra::new(2, vec![Operation::new("meet", 2, vec![0, 0, 0, 1])]).unwrap()
    }

    #[test]
    fn classify_prop5_tau() {
        let fx = fixtures::prop5();
        let tau = fx.relation("tau").unwrap();
        let flags = classify(&fx.algebra, tau);
        assert!(flags.tolerance);
        assert!(!flags.congruence);
        assert!(!flags.transitive);
    }

    #[test]
    fn classify_diagonal_is_congruence() {
        let fx = fixtures::prop5();
        let flags = classify(&fx.algebra, &BinRel::diagonal(3));
        assert!(flags.congruence);
    }

    #[test]
    fn classify_empty_relation() {
        // vacuously symmetric, transitive and compatible, but not reflexive
        let alg = semilattice2();
        let flags = classify(&alg, &BinRel::new(2));
        assert!(!flags.reflexive);
        assert!(flags.symmetric && flags.transitive && flags.compatible);
        assert!(!flags.tolerance);
    }

    #[test]
    fn classify_asymmetric_is_not_tolerance() {
        let alg = semilattice2();
        let rel = BinRel::from_pairs(2, [(0, 0), (1, 1), (0, 1)]).unwrap();
        let flags = classify(&alg, &rel);
        assert!(flags.reflexive);
        assert!(!flags.symmetric);
        assert!(!flags.tolerance);
    }

    #[test]
    fn empty_generators_give_diagonal() {
        let alg = semilattice2();
        let (tol, _) = gen_tolerance(&alg, &[]).unwrap();
        assert_eq!(tol, BinRel::diagonal(2));
        let (cong, _) = gen_congruence(&alg, &[]).unwrap();
        assert_eq!(cong, BinRel::diagonal(2));
    }

    #[test]
    fn semilattice_single_pair_generates_full() {
        let alg = semilattice2();
        let (tol, _) = gen_tolerance(&alg, &[(0, 1)]).unwrap();
        assert_eq!(tol, BinRel::full(2));
        let (cong, _) = gen_congruence(&alg, &[(0, 1)]).unwrap();
        assert_eq!(cong, BinRel::full(2));
    }

    #[test]
    fn tau_is_its_own_tolerance_closure() {
        let fx = fixtures::prop5();
        let tau = fx.relation("tau").unwrap();
        let gens: Vec<_> = tau.iter().collect();
        let (tol, _) = gen_tolerance(&fx.algebra, &gens).unwrap();
        assert_eq!(&tol, tau);
    }

    #[test]
    fn congruence_of_tau_collapses_everything() {
        // transitivity through 0 links 1 and 2
        let fx = fixtures::prop5();
        let tau = fx.relation("tau").unwrap();
        let gens: Vec<_> = tau.iter().collect();
        let (cong, _) = gen_congruence(&fx.algebra, &gens).unwrap();
        assert!(cong.contains(1, 2));
        let flags = classify(&fx.algebra, &cong);
        assert!(flags.congruence);
    }

    #[test]
    fn identity_image_is_identity() {
        let alg = semilattice2();
        let hom = Homomorphism::new(alg.clone(), alg.clone(), vec![0, 1]).unwrap();
        let rel = BinRel::from_pairs(2, [(0, 1), (1, 1)]).unwrap();
        assert_eq!(rel_image(&hom, &rel), rel);
    }

    #[test]
    fn non_homomorphism_is_rejected() {
        let alg = semilattice2();
        let err = Homomorphism::new(alg.clone(), alg.clone(), vec![1, 0]).unwrap_err();
        assert!(matches!(err, Error::InvalidHomomorphism(_)));
    }

    #[test]
    fn image_of_diagonal_is_diagonal() {
        // constant-to-join map from the 4-element semilattice chain onto the
        // 2-element one
        let chain4 = FiniteAlgebra::new(
            4,
            vec![Operation::from_fn("meet", 2, 4, |a| a[0].min(a[1]))],
        )
        .unwrap();
        let hom = Homomorphism::new(chain4, semilattice2(), vec![0, 0, 1, 1]).unwrap();
        assert!(hom.is_surjective());
        assert_eq!(rel_image(&hom, &BinRel::diagonal(4)), BinRel::diagonal(2));
    }

    #[test]
    fn witness_for_generator_is_a_variable() {
        let alg = semilattice2();
        let gens = [(0, 1)];
        let (_, dag) = gen_tolerance(&alg, &gens).unwrap();
        let t = tolerance_witness(&alg, &gens, &dag, (0, 1)).unwrap();
        assert_eq!(t, Term::var(0));
        let t = tolerance_witness(&alg, &gens, &dag, (1, 0)).unwrap();
        assert_eq!(t, Term::var(1));
    }

    #[test]
    fn witness_for_diagonal_is_a_constant_variable() {
        let alg = semilattice2();
        let gens = [(0, 1)];
        let (_, dag) = gen_tolerance(&alg, &gens).unwrap();
        let t = tolerance_witness(&alg, &gens, &dag, (1, 1)).unwrap();
        // variable 2g + 1 picks the universe element 1
        assert_eq!(t, Term::var(3));
    }

    #[test]
    fn witness_outside_tolerance_is_rejected() {
        let fx = fixtures::prop5();
        let gens = [(0, 1)];
        let (tol, dag) = gen_tolerance(&fx.algebra, &gens).unwrap();
        if !tol.contains(1, 2) {
            let err = tolerance_witness(&fx.algebra, &gens, &dag, (1, 2)).unwrap_err();
            assert_eq!(err, Error::PairNotInTolerance(1, 2));
        }
    }

    #[test]
    fn op_derived_witness_re_verifies() {
        let fx = fixtures::prop5();
        let gens = [(1, 0), (0, 2)];
        let (tol, dag) = gen_tolerance(&fx.algebra, &gens).unwrap();
        for (a, b) in tol.iter() {
            let t = tolerance_witness(&fx.algebra, &gens, &dag, (a, b)).unwrap();
            // re-verification happens inside tolerance_witness; spot-check shape
            assert!(t.max_var().unwrap_or(0) < 2 * gens.len() + 3);
        }
    }

    #[test]
    fn derivations_replay() {
        let fx = fixtures::prop5();
        let gens = [(1, 0), (0, 2)];
        let (_, dag) = gen_congruence(&fx.algebra, &gens).unwrap();
        for id in 0..dag.len() as u32 {
            assert_eq!(dag.replay(&fx.algebra, id), dag.pair(id));
        }
    }

    mod properties {
        use super::*;
        use crate::algebra::Operation;
        use proptest::prelude::*;

        /// A random algebra with one binary operation plus generator pairs.
        fn instance() -> impl Strategy<Value = (FiniteAlgebra, Vec<(usize, usize)>)> {
            (2usize..=3).prop_flat_map(|size| {
                let table = prop::collection::vec(0..size as u32, size * size);
                let gens = prop::collection::vec((0..size, 0..size), 0..3);
                (table, gens).prop_map(move |(table, gens)| {
                    let alg =
                        FiniteAlgebra::new(size, vec![Operation::new("f", 2, table)]).unwrap();
                    (alg, gens)
                })
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn closures_are_idempotent_and_nested((alg, gens) in instance()) {
                let (tol, _) = gen_tolerance(&alg, &gens).unwrap();
                prop_assert!(classify(&alg, &tol).tolerance);
                let regen: Vec<_> = tol.iter().collect();
                let (tol2, _) = gen_tolerance(&alg, &regen).unwrap();
                prop_assert_eq!(&tol, &tol2);

                let (cong, _) = gen_congruence(&alg, &gens).unwrap();
                prop_assert!(classify(&alg, &cong).congruence);
                prop_assert!(tol.is_subset(&cong));
            }
        }
    }
}
