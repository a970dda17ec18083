//! Finite algebras as flat operation tables, terms over their signatures,
//! and term evaluation.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::{Error, Limits, Result};

/// Number of points of `A^k`, checked against overflow.
pub(crate) fn power_len(size: usize, k: usize) -> u128 {
    (size as u128).pow(k as u32)
}

pub(crate) fn check_power_len(size: usize, k: usize, limits: &Limits) -> Result<usize> {
    let needed = power_len(size, k);
    if needed > limits.max_entries as u128 {
        return Err(Error::ResourceExceeded {
            needed,
            cap: limits.max_entries,
        });
    }
    Ok(needed as usize)
}

/// Row-major index of an argument tuple: the leftmost argument is the most
/// significant digit, so iterating indices `0..size^k` walks the tuples in
/// lexicographic order.
pub fn encode_args(size: usize, args: &[usize]) -> usize {
    let mut idx = 0usize;
    for &a in args {
        idx = idx * size + a;
    }
    idx
}

/// Inverse of [`encode_args`]; writes the tuple into `out`.
pub fn decode_args(size: usize, k: usize, mut idx: usize, out: &mut [usize]) {
    debug_assert_eq!(out.len(), k);
    for slot in out.iter_mut().rev() {
        *slot = idx % size;
        idx /= size;
    }
}

/// Iterator over all tuples of `A^k` in lexicographic order.
pub struct Tuples {
    size: usize,
    current: Vec<usize>,
    done: bool,
    started: bool,
}

impl Tuples {
    pub fn new(size: usize, k: usize) -> Self {
        Tuples {
            size,
            current: vec![0; k],
            done: size == 0,
            started: false,
        }
    }

    /// Advances to the next tuple and returns it, or `None` when exhausted.
    pub fn next_tuple(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.current);
        }
        let mut pos = self.current.len();
        loop {
            if pos == 0 {
                self.done = true;
                return None;
            }
            pos -= 1;
            self.current[pos] += 1;
            if self.current[pos] < self.size {
                break;
            }
            self.current[pos] = 0;
        }
        Some(&self.current)
    }
}

/// A finitary operation on `0..size`, stored as a flat row-major table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Operation {
    name: String,
    arity: usize,
    table: Vec<u32>,
}

impl Operation {
    /// Creates an operation from an explicit table. The table is validated
    /// against the universe size when the algebra is assembled.
    pub fn new(name: impl Into<String>, arity: usize, table: Vec<u32>) -> Self {
        Operation {
            name: name.into(),
            arity,
            table,
        }
    }

    /// Tabulates `f` over all argument tuples of `0..size` in lexicographic
    /// order.
    pub fn from_fn(
        name: impl Into<String>,
        arity: usize,
        size: usize,
        mut f: impl FnMut(&[usize]) -> usize,
    ) -> Self {
        let len = power_len(size, arity);
        assert!(len <= usize::MAX as u128, "operation table too large");
        let mut table = Vec::with_capacity(len as usize);
        let mut tuples = Tuples::new(size, arity);
        while let Some(args) = tuples.next_tuple() {
            table.push(f(args) as u32);
        }
        Operation {
            name: name.into(),
            arity,
            table,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }
}

/// Uniform access to an algebra: a universe `0..size` together with indexed
/// finitary operations. Implemented by [`FiniteAlgebra`] (table lookup) and
/// by [`crate::freealg::FreeAlgebra`] (pointwise application of the base
/// operations).
pub trait Algebra {
    fn size(&self) -> usize;
    fn op_count(&self) -> usize;
    fn op_arity(&self, op: usize) -> usize;
    fn op_name(&self, op: usize) -> &str;

    /// Applies operation `op` to `args`. Arguments must be in range and of
    /// the right arity; this is the unchecked hot path.
    fn apply(&self, op: usize, args: &[usize]) -> usize;
}

/// A finite algebra: universe `0..size` plus named operations as flat
/// tables. This is the single semantic ground for every check in the crate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteAlgebra {
    size: usize,
    ops: Vec<Operation>,
}

impl FiniteAlgebra {
    /// Validates and assembles an algebra: every table must have length
    /// `size^arity`, every entry must be below `size`, and operation names
    /// must be unique. Constants are ordinary operations of arity 0 with a
    /// one-entry table.
    pub fn new(size: usize, ops: Vec<Operation>) -> Result<Self> {
        if size == 0 {
            return Err(Error::EmptyUniverse);
        }
        if size > u32::MAX as usize {
            return Err(Error::UniverseTooLarge(size));
        }
        for (i, op) in ops.iter().enumerate() {
            let expected = power_len(size, op.arity);
            if op.table.len() as u128 != expected {
                return Err(Error::TableLengthMismatch {
                    op: op.name.clone(),
                    expected,
                    got: op.table.len(),
                });
            }
            for (index, &value) in op.table.iter().enumerate() {
                if value as usize >= size {
                    return Err(Error::EntryOutOfRange {
                        op: op.name.clone(),
                        index,
                        value: value as usize,
                        size,
                    });
                }
            }
            if ops[..i].iter().any(|other| other.name == op.name) {
                return Err(Error::DuplicateOpName(op.name.clone()));
            }
        }
        Ok(FiniteAlgebra { size, ops })
    }

    pub fn ops(&self) -> &[Operation] {
        &self.ops
    }

    pub fn op_index(&self, name: &str) -> Option<usize> {
        self.ops.iter().position(|op| op.name == name)
    }

    /// Checked application: validates arity and argument range.
    pub fn apply_op(&self, op: usize, args: &[usize]) -> Result<usize> {
        let operation = &self.ops[op];
        if args.len() != operation.arity {
            return Err(Error::ArityMismatch {
                expected: operation.arity,
                got: args.len(),
            });
        }
        for &a in args {
            if a >= self.size {
                return Err(Error::ElementOutOfRange {
                    value: a,
                    size: self.size,
                });
            }
        }
        Ok(operation.table[encode_args(self.size, args)] as usize)
    }
}

impl Algebra for FiniteAlgebra {
    fn size(&self) -> usize {
        self.size
    }

    fn op_count(&self) -> usize {
        self.ops.len()
    }

    fn op_arity(&self, op: usize) -> usize {
        self.ops[op].arity
    }

    fn op_name(&self, op: usize) -> &str {
        &self.ops[op].name
    }

    fn apply(&self, op: usize, args: &[usize]) -> usize {
        self.ops[op].table[encode_args(self.size, args)] as usize
    }
}

/// An ordered term tree over operation indices and variable indices — the
/// syntactic currency for witnesses and identities. Terms are immutable;
/// equality is structural, and subtrees are shared through `Arc`, so clones
/// are cheap.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(usize),
    App(usize, Arc<[Term]>),
}

impl Term {
    pub fn var(i: usize) -> Term {
        Term::Var(i)
    }

    pub fn app(op: usize, args: Vec<Term>) -> Term {
        Term::App(op, args.into())
    }

    /// Largest variable index occurring in the term, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Term::Var(i) => Some(*i),
            Term::App(_, args) => args.iter().filter_map(Term::max_var).max(),
        }
    }

    /// Checks that every application matches the arity of its operation and
    /// every operation index is valid for the signature.
    pub fn check_signature(&self, alg: &dyn Algebra) -> Result<()> {
        match self {
            Term::Var(_) => Ok(()),
            Term::App(op, args) => {
                if *op >= alg.op_count() {
                    return Err(Error::ArityMismatch {
                        expected: 0,
                        got: args.len(),
                    });
                }
                if args.len() != alg.op_arity(*op) {
                    return Err(Error::ArityMismatch {
                        expected: alg.op_arity(*op),
                        got: args.len(),
                    });
                }
                for arg in args.iter() {
                    arg.check_signature(alg)?;
                }
                Ok(())
            }
        }
    }

    /// Evaluates the term under an assignment of elements to variables.
    pub fn eval<A: Algebra + ?Sized>(&self, alg: &A, env: &[usize]) -> Result<usize> {
        match self {
            Term::Var(i) => env.get(*i).copied().ok_or(Error::UnboundVariable(*i)),
            Term::App(op, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for arg in args.iter() {
                    vals.push(arg.eval(alg, env)?);
                }
                Ok(alg.apply(*op, &vals))
            }
        }
    }

    /// Substitutes `map[i]` for variable `i`.
    pub fn subst(&self, map: &[Term]) -> Result<Term> {
        match self {
            Term::Var(i) => map.get(*i).cloned().ok_or(Error::UnboundVariable(*i)),
            Term::App(op, args) => {
                let new_args = args
                    .iter()
                    .map(|a| a.subst(map))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Term::app(*op, new_args))
            }
        }
    }

    /// Prefix notation with operation names taken from the algebra, e.g.
    /// `(m x0 x1 x2)`.
    pub fn display<A: Algebra + ?Sized>(&self, alg: &A) -> String {
        let mut out = String::new();
        self.write_prefix(alg, &mut out);
        out
    }

    fn write_prefix<A: Algebra + ?Sized>(&self, alg: &A, out: &mut String) {
        match self {
            Term::Var(i) => {
                let _ = write!(out, "x{i}");
            }
            Term::App(op, args) => {
                out.push('(');
                out.push_str(alg.op_name(*op));
                for arg in args.iter() {
                    out.push(' ');
                    arg.write_prefix(alg, out);
                }
                out.push(')');
            }
        }
    }
}

/// A `k`-ary function on the universe stored as a flat table plus the term
/// that induces it. One element of the free algebra on `k` generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermFunction {
    arity: usize,
    table: Vec<u32>,
    witness: Term,
}

impl TermFunction {
    pub(crate) fn from_parts(arity: usize, table: Vec<u32>, witness: Term) -> Self {
        TermFunction {
            arity,
            table,
            witness,
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }

    pub fn witness(&self) -> &Term {
        &self.witness
    }

    pub fn value(&self, size: usize, args: &[usize]) -> usize {
        self.table[encode_args(size, args)] as usize
    }

    /// Re-evaluates the witness term pointwise and compares with the stored
    /// table.
    pub fn verify_witness<A: Algebra + ?Sized>(&self, alg: &A) -> Result<bool> {
        let recomputed = term_function(alg, &self.witness, self.arity, &Limits::default())?;
        Ok(recomputed.table == self.table)
    }
}

/// Tabulates the function a term induces on the algebra, over all tuples of
/// `A^k` in lexicographic order.
///
/// Distinct subterms are evaluated once over the whole table, so terms with
/// heavy subtree sharing stay cheap.
pub fn term_function<A: Algebra + ?Sized>(
    alg: &A,
    t: &Term,
    k: usize,
    limits: &Limits,
) -> Result<TermFunction> {
    if let Some(v) = t.max_var() {
        if v >= k {
            return Err(Error::VariableOutOfArity { var: v, arity: k });
        }
    }
    let points = check_power_len(alg.size(), k, limits)?;
    let mut memo: std::collections::HashMap<(usize, usize), Arc<Vec<u32>>> =
        std::collections::HashMap::new();
    let table = eval_table(alg, t, k, points, &mut memo);
    Ok(TermFunction {
        arity: k,
        table: table.as_ref().clone(),
        witness: t.clone(),
    })
}

/// Bottom-up tabulation with memoization keyed on subterm identity
/// (operation index plus argument-slice address).
fn eval_table<A: Algebra + ?Sized>(
    alg: &A,
    t: &Term,
    k: usize,
    points: usize,
    memo: &mut std::collections::HashMap<(usize, usize), Arc<Vec<u32>>>,
) -> Arc<Vec<u32>> {
    match t {
        Term::Var(i) => {
            let size = alg.size();
            // projection table: value of coordinate i at each lex point
            let stride = size.pow((k - 1 - i) as u32);
            let mut table = Vec::with_capacity(points);
            for p in 0..points {
                table.push(((p / stride) % size) as u32);
            }
            Arc::new(table)
        }
        Term::App(op, args) => {
            let key = (*op, args.as_ptr() as usize);
            if let Some(hit) = memo.get(&key) {
                return hit.clone();
            }
            let arg_tables: Vec<Arc<Vec<u32>>> = args
                .iter()
                .map(|a| eval_table(alg, a, k, points, memo))
                .collect();
            let mut table = Vec::with_capacity(points);
            let mut buf = vec![0usize; args.len()];
            for p in 0..points {
                for (slot, at) in buf.iter_mut().zip(&arg_tables) {
                    *slot = at[p] as usize;
                }
                table.push(alg.apply(*op, &buf) as u32);
            }
            let table = Arc::new(table);
            memo.insert(key, table.clone());
            table
        }
    }
}
