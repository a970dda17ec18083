//! Free algebras of the variety generated by a finite algebra, realized as
//! clones of term functions.
//!
//! `F(k)` is the subalgebra of `A^(A^k)` generated by the `k` projections:
//! its elements are exactly the `k`-ary term functions of `A`, each carrying
//! the first term that produced it. Identities of the generated variety are
//! identities of `A`, so two terms denote the same element of `F(k)` exactly
//! when their value tables agree.

use crate::algebra::{check_power_len, term_function, Algebra, FiniteAlgebra, Term, TermFunction};
use crate::closure::{FxMap, Subpower};
use crate::{Error, Limits, Result};

/// The free algebra on `k` generators, as a deduplicated list of term
/// functions closed under the base operations applied pointwise. The first
/// `k` elements are the projections. Implements [`Algebra`], so relation
/// generation runs on it directly; lifted operation tables are materialized
/// when they fit the resource cap and applied on demand otherwise.
pub struct FreeAlgebra {
    base: FiniteAlgebra,
    k: usize,
    elements: Vec<TermFunction>,
    index: FxMap<Vec<u32>, usize>,
    lifted: Option<Vec<Vec<u32>>>,
}

/// Projection tables of the `k` generators over `A^k`, in lexicographic
/// point order.
pub(crate) fn projection_tables(size: usize, k: usize, points: usize) -> Vec<Vec<u32>> {
    (0..k)
        .map(|i| {
            let stride = size.pow((k - 1 - i) as u32);
            (0..points)
                .map(|p| ((p / stride) % size) as u32)
                .collect()
        })
        .collect()
}

/// Restriction of a `k`-ary value table to the pairwise diagonal
/// `x_{2i} = x_{2i+1}`, indexed by `A^(k/2)` in lexicographic order.
pub(crate) fn diag_restrict(table: &[u32], size: usize, k: usize) -> Vec<u32> {
    debug_assert!(k.is_multiple_of(2));
    let n = k / 2;
    let mut mult = vec![0usize; n];
    for (j, m) in mult.iter_mut().enumerate() {
        let high = size.pow((k - 1 - 2 * j) as u32);
        let low = size.pow((k - 2 - 2 * j) as u32);
        *m = high + low;
    }
    let points = size.pow(n as u32);
    let mut out = Vec::with_capacity(points);
    let mut args = vec![0usize; n];
    for _ in 0..points {
        let full: usize = args.iter().zip(&mult).map(|(&a, &m)| a * m).sum();
        out.push(table[full]);
        let mut pos = n;
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            args[pos] += 1;
            if args[pos] < size {
                break;
            }
            args[pos] = 0;
        }
    }
    out
}

/// Builds `F(k)` by fixed-point closure from the `k` projections.
pub fn free_algebra(alg: &FiniteAlgebra, k: usize, limits: &Limits) -> Result<FreeAlgebra> {
    if k == 0 {
        return Err(Error::InvalidArity);
    }
    let points = check_power_len(alg.size(), k, limits)?;
    let gens = projection_tables(alg.size(), k, points);
    let sub = Subpower::generate(alg, points, &gens, limits)?;
    FreeAlgebra::from_subpower(alg, k, &sub, limits)
}

impl FreeAlgebra {
    /// Assembles a free algebra from a completed closure of the `k`
    /// projections.
    pub(crate) fn from_subpower(
        alg: &FiniteAlgebra,
        k: usize,
        sub: &Subpower,
        limits: &Limits,
    ) -> Result<FreeAlgebra> {
        let mut elements = Vec::with_capacity(sub.len());
        let mut index = FxMap::default();
        for i in 0..sub.len() {
            let table = sub.element(i);
            index.insert(table.clone(), i);
            elements.push(TermFunction::from_parts(k, table, sub.witness(i)));
        }
        let mut free = FreeAlgebra {
            base: alg.clone(),
            k,
            elements,
            index,
            lifted: None,
        };
        free.lifted = free.lift_tables(limits);
        Ok(free)
    }

    pub fn base(&self) -> &FiniteAlgebra {
        &self.base
    }

    /// Number of generators.
    pub fn rank(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, i: usize) -> &TermFunction {
        &self.elements[i]
    }

    pub fn elements(&self) -> &[TermFunction] {
        &self.elements
    }

    pub fn index_of_table(&self, table: &[u32]) -> Option<usize> {
        self.index.get(table).copied()
    }

    /// Element denoted by a term, via its value table.
    pub fn index_of_term(&self, t: &Term) -> Result<usize> {
        let tf = term_function(&self.base, t, self.k, &Limits::default())?;
        self.index_of_table(tf.table()).ok_or(Error::NotFound)
    }

    fn lift_tables(&self, limits: &Limits) -> Option<Vec<Vec<u32>>> {
        let n = self.elements.len();
        let mut total: u128 = 0;
        for op in self.base.ops() {
            total += (n as u128).pow(op.arity() as u32);
            if total > limits.max_entries as u128 {
                return None;
            }
        }
        let mut tables = Vec::with_capacity(self.base.op_count());
        let mut args = Vec::new();
        for op in 0..self.base.op_count() {
            let arity = self.base.op_arity(op);
            let len = n.pow(arity as u32);
            let mut table = Vec::with_capacity(len);
            for idx in 0..len {
                args.clear();
                let mut r = idx;
                for _ in 0..arity {
                    args.push(r % n);
                    r /= n;
                }
                args.reverse();
                table.push(self.apply_pointwise(op, &args) as u32);
            }
            tables.push(table);
        }
        Some(tables)
    }

    fn apply_pointwise(&self, op: usize, args: &[usize]) -> usize {
        let points = self.elements.first().map_or(0, |e| e.table().len());
        let mut result = Vec::with_capacity(points);
        let mut buf = vec![0usize; args.len()];
        for p in 0..points {
            for (slot, &a) in buf.iter_mut().zip(args) {
                *slot = self.elements[a].table()[p] as usize;
            }
            result.push(self.base.apply(op, &buf) as u32);
        }
        *self
            .index
            .get(&result)
            .expect("free algebra is closed under its operations")
    }

    /// Value table of the element restricted to the pairwise diagonal
    /// `x_{2i} = x_{2i+1}`; requires even rank. The result is indexed by
    /// `A^(k/2)` in lexicographic order.
    pub fn diagonal_table(&self, i: usize) -> Vec<u32> {
        assert!(self.k.is_multiple_of(2), "diagonal restriction needs an even rank");
        diag_restrict(self.elements[i].table(), self.base.size(), self.k)
    }

    /// Groups element indices by their diagonal restriction, ordered by
    /// first occurrence.
    pub fn diagonal_classes(&self) -> Vec<Vec<usize>> {
        let mut class_of: FxMap<Vec<u32>, usize> = FxMap::default();
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for i in 0..self.len() {
            let diag = self.diagonal_table(i);
            let next = classes.len();
            let c = *class_of.entry(diag).or_insert(next);
            if c == classes.len() {
                classes.push(Vec::new());
            }
            classes[c].push(i);
        }
        classes
    }
}

impl Algebra for FreeAlgebra {
    fn size(&self) -> usize {
        self.elements.len()
    }

    fn op_count(&self) -> usize {
        self.base.op_count()
    }

    fn op_arity(&self, op: usize) -> usize {
        self.base.op_arity(op)
    }

    fn op_name(&self, op: usize) -> &str {
        self.base.op_name(op)
    }

    fn apply(&self, op: usize, args: &[usize]) -> usize {
        if let Some(tables) = &self.lifted {
            let n = self.elements.len();
            let mut idx = 0usize;
            for &a in args {
                idx = idx * n + a;
            }
            tables[op][idx] as usize
        } else {
            self.apply_pointwise(op, args)
        }
    }
}

/// Do two terms induce the same `k`-ary function, i.e. does `s ≈ t` hold in
/// the variety generated by the algebra?
pub fn identity_holds(
    alg: &FiniteAlgebra,
    s: &Term,
    t: &Term,
    k: usize,
    limits: &Limits,
) -> Result<bool> {
    let ts = term_function(alg, s, k, limits)?;
    let tt = term_function(alg, t, k, limits)?;
    Ok(ts.table() == tt.table())
}

/// All pairs of elements of an even-rank free algebra whose tables agree
/// under the pairwise diagonal substitution `x_{2i} = x_{2i+1}`. This is
/// exactly the congruence generated by the pairs of adjacent generators
/// `(x_{2i}, x_{2i+1})`, which the test suite asserts against an independent
/// congruence-closure computation.
pub fn diagonal_pairs(free: &FreeAlgebra) -> Result<Vec<(usize, usize)>> {
    if !free.rank().is_multiple_of(2) {
        return Err(Error::InvalidArity);
    }
    let mut pairs = Vec::new();
    let classes = free.diagonal_classes();
    let mut class_of = vec![0usize; free.len()];
    for (c, members) in classes.iter().enumerate() {
        for &m in members {
            class_of[m] = c;
        }
    }
    for s in 0..free.len() {
        for t in 0..free.len() {
            if class_of[s] == class_of[t] {
                pairs.push((s, t));
            }
        }
    }
    Ok(pairs)
}
