//! Explicit, closed-form constructions of `M(n)` witness terms, and the
//! chain-shortening reduction for Hagemann-Mitschke chains.
//!
//! All constructions are syntactic (`Term -> Term`). None of them is
//! trusted: callers verify every output by evaluation through
//! [`crate::malcev::verify_mn_witness`], and the test suite does so
//! exhaustively. Variable layout for all `4n`-ary witness terms is
//! `(u_0, v_0, .., u_{n-1}, v_{n-1}, x_0, y_0, .., x_{n-1}, y_{n-1})`,
//! mirroring the two defining identities left to right; the `2n`-ary input
//! terms use the interleaved layout `(x_0, y_0, .., x_{n-1}, y_{n-1})`.

use crate::algebra::{Algebra, FiniteAlgebra, Term};
use crate::freealg::identity_holds;
use crate::malcev::{find_h_witness, verify_hm_chain};
use crate::{Error, Limits, Result};

fn var_u(i: usize) -> Term {
    Term::var(2 * i)
}

fn var_v(i: usize) -> Term {
    Term::var(2 * i + 1)
}

fn var_x(n: usize, i: usize) -> Term {
    Term::var(2 * n + 2 * i)
}

fn var_y(n: usize, i: usize) -> Term {
    Term::var(2 * n + 2 * i + 1)
}

/// Witness for varieties with lattice terms and monotone operations:
///
/// ```text
/// h = f(x_i ∧ u_i, y_i ∧ v_i : i<n)  ∨  g(x_i ∧ v_i, y_i ∧ u_i : i<n)
/// ```
///
/// `meet` and `join` are binary terms over variables `x0, x1` that satisfy
/// the lattice axioms on the target algebra; all operations must be
/// monotone with respect to that lattice order, and the diagonal identity
/// must hold for `(f, g)`. Verification is the caller's job.
pub fn h_lattice(f: &Term, g: &Term, n: usize, meet: &Term, join: &Term) -> Result<Term> {
    let mut f_args = Vec::with_capacity(2 * n);
    let mut g_args = Vec::with_capacity(2 * n);
    for i in 0..n {
        f_args.push(meet.subst(&[var_x(n, i), var_u(i)])?);
        f_args.push(meet.subst(&[var_y(n, i), var_v(i)])?);
        g_args.push(meet.subst(&[var_x(n, i), var_v(i)])?);
        g_args.push(meet.subst(&[var_y(n, i), var_u(i)])?);
    }
    join.subst(&[f.subst(&f_args)?, g.subst(&g_args)?])
}

/// A semilattice term up to equivalence: the set of variables occurring in
/// it. `flags[v]` records whether variable `v` occurs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarOccurrence {
    flags: Vec<bool>,
}

impl VarOccurrence {
    pub fn new(flags: Vec<bool>) -> Self {
        VarOccurrence { flags }
    }

    /// Occurrence set of a term (syntactic), padded to `arity` variables.
    pub fn of_term(t: &Term, arity: usize) -> Self {
        let mut flags = vec![false; arity];
        fn walk(t: &Term, flags: &mut [bool]) {
            match t {
                Term::Var(v) => flags[*v] = true,
                Term::App(_, args) => args.iter().for_each(|a| walk(a, flags)),
            }
        }
        walk(t, &mut flags);
        VarOccurrence { flags }
    }

    pub fn arity(&self) -> usize {
        self.flags.len()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.flags[v]
    }

    pub fn is_empty(&self) -> bool {
        self.flags.iter().all(|&f| !f)
    }

    /// The left-associated meet of the present variables; `None` when no
    /// variable is present (the empty set is not a term).
    pub fn to_term(&self, meet_op: usize) -> Option<Term> {
        let mut vars = self.flags.iter().enumerate().filter(|(_, &f)| f);
        let first = Term::var(vars.next()?.0);
        Some(vars.fold(first, |acc, (v, _)| {
            Term::app(meet_op, vec![acc, Term::var(v)])
        }))
    }
}

/// Witness for the variety of semilattices, where a term is just its set of
/// variables. The output occurrence set over
/// `(u_0, v_0, .., x_0, y_0, ..)` is determined pairwise:
///
/// | f has      | g has      | h gets     |
/// |------------|------------|------------|
/// | —          | —          | —          |
/// | x          | x          | x          |
/// | y          | y          | y          |
/// | x          | y          | u          |
/// | y          | x          | v          |
/// | x, y       | x, y       | x, y       |
/// | x, y       | x          | v, x       |
/// | x, y       | y          | u, y       |
/// | x          | x, y       | u, x       |
/// | y          | x, y       | v, y       |
///
/// Rows where one side has a variable of a pair and the other has none are
/// impossible under the diagonal identity and are rejected.
pub fn h_semilattice(f: &VarOccurrence, g: &VarOccurrence) -> Result<VarOccurrence> {
    assert_eq!(f.arity(), g.arity(), "occurrence arities differ");
    assert!(f.arity().is_multiple_of(2), "occurrences must cover variable pairs");
    let n = f.arity() / 2;
    let mut flags = vec![false; 4 * n];
    for i in 0..n {
        let fx = f.contains(2 * i);
        let fy = f.contains(2 * i + 1);
        let gx = g.contains(2 * i);
        let gy = g.contains(2 * i + 1);
        let (u, v, x, y) = match (fx, fy, gx, gy) {
            (false, false, false, false) => (false, false, false, false),
            (true, false, true, false) => (false, false, true, false),
            (false, true, false, true) => (false, false, false, true),
            (true, false, false, true) => (true, false, false, false),
            (false, true, true, false) => (false, true, false, false),
            (true, true, true, true) => (false, false, true, true),
            (true, true, true, false) => (false, true, true, false),
            (true, true, false, true) => (true, false, false, true),
            (true, false, true, true) => (true, false, true, false),
            (false, true, true, true) => (false, true, false, true),
            _ => return Err(Error::IncompatibleOccurrence(i)),
        };
        flags[2 * i] = u;
        flags[2 * i + 1] = v;
        flags[2 * n + 2 * i] = x;
        flags[2 * n + 2 * i + 1] = y;
    }
    Ok(VarOccurrence { flags })
}

/// Witness for balanced (absolutely free) settings, where only trivial
/// identities hold: `f` and `g` must have the same tree shape and their
/// leaves must pair up within the same variable pair. Leaves are mapped
/// position by position: equal leaves go to the corresponding second-block
/// variable, and an `x_i/y_i` mismatch goes to `u_i` or `v_i`.
pub fn h_balanced(f: &Term, g: &Term, n: usize) -> Result<Term> {
    match (f, g) {
        (Term::Var(a), Term::Var(b)) => {
            if a / 2 != b / 2 {
                return Err(Error::ShapeMismatch);
            }
            if a == b {
                Ok(Term::var(2 * n + a))
            } else {
                Ok(Term::var(*a))
            }
        }
        (Term::App(op_f, args_f), Term::App(op_g, args_g)) => {
            if op_f != op_g || args_f.len() != args_g.len() {
                return Err(Error::ShapeMismatch);
            }
            let children = args_f
                .iter()
                .zip(args_g.iter())
                .map(|(a, b)| h_balanced(a, b, n))
                .collect::<Result<Vec<_>>>()?;
            Ok(Term::app(*op_f, children))
        }
        _ => Err(Error::ShapeMismatch),
    }
}

/// Shifts every variable of a `2n`-ary term into the second block of the
/// `4n`-ary layout.
fn shift_to_second_block(t: &Term, n: usize) -> Result<Term> {
    let map: Vec<Term> = (0..2 * n).map(|j| Term::var(2 * n + j)).collect();
    t.subst(&map)
}

/// Witness for unary signatures. A term over an at-most-unary signature has
/// at most one variable; whether the term actually depends on it is decided
/// semantically. If neither side depends on its variable both sides are the
/// same constant and `h` is `f` over the second block; otherwise both sides
/// depend on a variable of the same pair and `h` is `f` with its leaf
/// renamed:
///
/// | f depends on | g depends on | h          |
/// |--------------|--------------|------------|
/// | x_j          | x_j          | f'(x_j)    |
/// | x_j          | y_j          | f'(u_j)    |
/// | y_j          | x_j          | f'(v_j)    |
/// | y_j          | y_j          | f'(y_j)    |
pub fn h_unary(
    alg: &FiniteAlgebra,
    f: &Term,
    g: &Term,
    n: usize,
    limits: &Limits,
) -> Result<Term> {
    if alg.ops().iter().any(|op| op.arity() > 1) {
        return Err(Error::InvalidArity);
    }
    if !crate::malcev::diagonal_identity_holds(alg, f, g, n, limits)? {
        return Err(Error::DiagonalIdentityFails);
    }
    let dep_f = essential_slot(alg, f, 2 * n)?;
    let dep_g = essential_slot(alg, g, 2 * n)?;
    match (dep_f, dep_g) {
        (None, None) => shift_to_second_block(f, n),
        (Some(a), Some(b)) => {
            if a / 2 != b / 2 {
                // both sides depend on different pairs yet agree on the
                // diagonal: impossible
                return Err(Error::DiagonalIdentityFails);
            }
            if a % 2 == b % 2 {
                // same orientation: h uses the second-block copy
                shift_to_second_block(f, n)
            } else {
                // crossed orientation: f's leaf index already names the
                // first-block slot (u_j or v_j)
                Ok(f.clone())
            }
        }
        // one side constant, the other dependent: impossible under the
        // diagonal identity
        _ => Err(Error::DiagonalIdentityFails),
    }
}

/// The variable slot a term's function actually depends on, decided by
/// evaluation. Terms over unary signatures have at most one leaf variable.
fn essential_slot(alg: &FiniteAlgebra, t: &Term, k: usize) -> Result<Option<usize>> {
    let slot = match t.max_var() {
        None => return Ok(None),
        Some(v) => {
            if v >= k {
                return Err(Error::VariableOutOfArity { var: v, arity: k });
            }
            v
        }
    };
    let mut env = vec![0usize; k];
    let base = t.eval(alg, &env)?;
    for c in 1..alg.size() {
        env[slot] = c;
        if t.eval(alg, &env)? != base {
            return Ok(Some(slot));
        }
    }
    Ok(None)
}

/// Witness for congruence permutable varieties, from a Mal'cev term `p`:
///
/// ```text
/// h = p( f(x_i, y_i : i<n), f(x_i, u_i : i<n), g(x_i, u_i : i<n) )
/// ```
pub fn h_malcev(p: &Term, f: &Term, g: &Term, n: usize) -> Result<Term> {
    let mut straight = Vec::with_capacity(2 * n);
    let mut crossed = Vec::with_capacity(2 * n);
    for i in 0..n {
        straight.push(var_x(n, i));
        straight.push(var_y(n, i));
        crossed.push(var_x(n, i));
        crossed.push(var_u(i));
    }
    p.subst(&[
        f.subst(&straight)?,
        f.subst(&crossed)?,
        g.subst(&crossed)?,
    ])
}

/// Transforms a level-`n+1` witness for the padded pair into a level-`n`
/// witness, by duplicating the last variable pair of each block:
///
/// ```text
/// h(u_i,v_i : i<n ; x_i,y_i : i<n) =
///   ĥ(u_i,v_i : i<n ; u_{n-1},v_{n-1} ; x_i,y_i : i<n ; x_{n-1},y_{n-1})
/// ```
pub fn pad_mn_witness(h_big: &Term, n: usize) -> Result<Term> {
    if n == 0 {
        return Err(Error::InvalidN);
    }
    let big_block = 2 * (n + 1);
    let mut map = Vec::with_capacity(2 * big_block);
    for j in 0..big_block {
        if j < 2 * n {
            map.push(Term::var(j));
        } else {
            map.push(Term::var(j - 2));
        }
    }
    for j in 0..big_block {
        if j < 2 * n {
            map.push(Term::var(2 * n + j));
        } else {
            map.push(Term::var(2 * n + j - 2));
        }
    }
    h_big.subst(&map)
}

/// Shortens a verified Hagemann-Mitschke chain by one: from `p_1, .., p_k`
/// (k >= 3) it builds the pair
///
/// ```text
/// f(x,u,v,y) = p_1(x,u,y),    g(x,u,v,y) = p_2(x,v,y),
/// ```
///
/// obtains an 8-ary witness `h` from the `M(2)` check, and returns the
/// chain `p, p_3, .., p_k` where `p(a,b,c) = h(a,b,c,b,a,b,b,c)`. Chains of
/// length at most 2 are returned unchanged. Fails with [`Error::MnFails`]
/// when no witness exists (the variety is n-permutable but not congruence
/// permutable), and iterating the reduction on a permutable variety
/// terminates in a chain of length 2 headed by a Mal'cev term.
pub fn hm_reduce(alg: &FiniteAlgebra, chain: &[Term], limits: &Limits) -> Result<Vec<Term>> {
    for t in chain {
        if t.max_var().is_some_and(|v| v >= 3) {
            return Err(Error::ChainInvalid("chain terms must be ternary".into()));
        }
    }
    if !verify_hm_chain(alg, chain, limits)? {
        return Err(Error::ChainInvalid(
            "the chain identities do not hold".into(),
        ));
    }
    if chain.len() <= 2 {
        return Ok(chain.to_vec());
    }
    let f = chain[0].subst(&[Term::var(0), Term::var(1), Term::var(3)])?;
    let g = chain[1].subst(&[Term::var(0), Term::var(2), Term::var(3)])?;
    let h = match find_h_witness(alg, 2, &f, &g, limits) {
        Ok(h) => h,
        Err(Error::NotFound) => return Err(Error::MnFails { n: 2 }),
        Err(e) => return Err(e),
    };
    let p = h.subst(&[
        Term::var(0),
        Term::var(1),
        Term::var(2),
        Term::var(1),
        Term::var(0),
        Term::var(1),
        Term::var(1),
        Term::var(2),
    ])?;

    let x = Term::var(0);
    let y = Term::var(1);
    assert!(
        identity_holds(
            alg,
            &x,
            &p.subst(&[x.clone(), y.clone(), y.clone()])?,
            2,
            limits
        )?,
        "reduced head lost the left chain identity"
    );
    assert!(
        identity_holds(
            alg,
            &p.subst(&[x.clone(), x.clone(), y.clone()])?,
            &chain[2].subst(&[x.clone(), y.clone(), y.clone()])?,
            2,
            limits
        )?,
        "reduced head lost the link identity"
    );

    let mut reduced = Vec::with_capacity(chain.len() - 1);
    reduced.push(p);
    reduced.extend_from_slice(&chain[2..]);
    Ok(reduced)
}

/// Convenience check used by tests: does a term satisfy the Mal'cev
/// identities `p(x,x,y) ≈ y ≈ p(y,x,x)`?
pub fn is_malcev_term(alg: &FiniteAlgebra, p: &Term, limits: &Limits) -> Result<bool> {
    let x = Term::var(0);
    let y = Term::var(1);
    let xxy = p.subst(&[x.clone(), x.clone(), y.clone()])?;
    let yxx = p.subst(&[y.clone(), x.clone(), x.clone()])?;
    Ok(identity_holds(alg, &xxy, &y, 2, limits)?
        && identity_holds(alg, &yxx, &y, 2, limits)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::malcev::verify_mn_witness;

    fn limits() -> Limits {
        Limits::default()
    }

    #[test]
    fn h_lattice_on_n5_join_pair() {
        let fx = fixtures::n5();
        let alg = &fx.algebra;
        let meet_op = alg.op_index("meet").unwrap();
        let join_op = alg.op_index("join").unwrap();
        let meet = Term::app(meet_op, vec![Term::var(0), Term::var(1)]);
        let join = Term::app(join_op, vec![Term::var(0), Term::var(1)]);
        let f = Term::app(join_op, vec![Term::var(0), Term::var(1)]);
        let g = Term::app(join_op, vec![Term::var(1), Term::var(0)]);
        let h = h_lattice(&f, &g, 1, &meet, &join).unwrap();
        assert!(verify_mn_witness(alg, 1, &f, &g, &h, &limits()).unwrap());
    }

    #[test]
    fn h_lattice_identity_case() {
        let fx = fixtures::lattice2();
        let alg = &fx.algebra;
        let meet = Term::app(alg.op_index("meet").unwrap(), vec![Term::var(0), Term::var(1)]);
        let join = Term::app(alg.op_index("join").unwrap(), vec![Term::var(0), Term::var(1)]);
        let f = Term::var(0);
        let h = h_lattice(&f, &f, 1, &meet, &join).unwrap();
        assert!(verify_mn_witness(alg, 1, &f, &f, &h, &limits()).unwrap());
    }

    #[test]
    fn h_semilattice_single_rows() {
        // f: x_0 only; g: y_0 only -> u_0 only
        let f = VarOccurrence::new(vec![true, false]);
        let g = VarOccurrence::new(vec![false, true]);
        let h = h_semilattice(&f, &g).unwrap();
        assert_eq!(h, VarOccurrence::new(vec![true, false, false, false]));

        // f, g: both x_0, y_0 -> x_0, y_0
        let fg = VarOccurrence::new(vec![true, true]);
        let h = h_semilattice(&fg, &fg).unwrap();
        assert_eq!(h, VarOccurrence::new(vec![false, false, true, true]));
    }

    #[test]
    fn h_semilattice_rejects_incompatible() {
        let f = VarOccurrence::new(vec![true, false]);
        let g = VarOccurrence::new(vec![false, false]);
        assert_eq!(
            h_semilattice(&f, &g).unwrap_err(),
            Error::IncompatibleOccurrence(0)
        );
    }

    #[test]
    fn h_balanced_crossed_leaves() {
        // one binary operation; f = x0 * y0, g = y0 * x0 -> h = u0 * v0
        let op = 0;
        let f = Term::app(op, vec![Term::var(0), Term::var(1)]);
        let g = Term::app(op, vec![Term::var(1), Term::var(0)]);
        let h = h_balanced(&f, &g, 1).unwrap();
        assert_eq!(h, Term::app(op, vec![Term::var(0), Term::var(1)]));
    }

    #[test]
    fn h_balanced_equal_terms_shift_to_second_block() {
        let op = 0;
        let f = Term::app(op, vec![Term::var(0), Term::var(1)]);
        let h = h_balanced(&f, &f, 1).unwrap();
        assert_eq!(h, Term::app(op, vec![Term::var(2), Term::var(3)]));
    }

    #[test]
    fn h_balanced_rejects_shape_mismatch() {
        let op = 0;
        let f = Term::app(op, vec![Term::var(0), Term::var(1)]);
        let g = Term::var(0);
        assert_eq!(h_balanced(&f, &g, 1).unwrap_err(), Error::ShapeMismatch);
        // different pair index
        let f = Term::app(op, vec![Term::var(0), Term::var(0)]);
        let g = Term::app(op, vec![Term::var(0), Term::var(2)]);
        assert_eq!(h_balanced(&f, &g, 2).unwrap_err(), Error::ShapeMismatch);
    }

    #[test]
    fn h_balanced_verifies_on_prop5() {
        // syntactic identities hold in every algebra; check by evaluation
        let fx = fixtures::prop5();
        let m = fx.algebra.op_index("m").unwrap();
        let f = Term::app(m, vec![Term::var(0), Term::var(3), Term::var(0)]);
        let g = Term::app(m, vec![Term::var(1), Term::var(3), Term::var(0)]);
        let h = h_balanced(&f, &g, 2).unwrap();
        assert!(verify_mn_witness(&fx.algebra, 2, &f, &g, &h, &limits()).unwrap());
    }

    #[test]
    fn h_malcev_on_z2() {
        let fx = fixtures::z2_affine();
        let alg = &fx.algebra;
        let p_op = alg.op_index("p").unwrap();
        let p = Term::app(p_op, vec![Term::var(0), Term::var(1), Term::var(2)]);
        assert!(is_malcev_term(alg, &p, &limits()).unwrap());

        // f = x0 + y0 + x1, g = x1 + y1 + x0: equal under the diagonal?
        // f(x,x,y,y) = x+x+y = y, g(x,x,y,y) = y+y+x = x — not a valid pair;
        // use g = f so the diagonal identity trivially holds, plus a
        // genuinely crossed pair below.
        let f = Term::app(p_op, vec![Term::var(0), Term::var(1), Term::var(2)]);
        let h = h_malcev(&p, &f, &f, 2).unwrap();
        assert!(verify_mn_witness(alg, 2, &f, &f, &h, &limits()).unwrap());

        // crossed pair: f = x0 + y0 + y1, g = x0 + y0 + x1
        // diagonal: x0 + x0 + x1 = x1 on both sides
        let f = Term::app(p_op, vec![Term::var(0), Term::var(1), Term::var(3)]);
        let g = Term::app(p_op, vec![Term::var(0), Term::var(1), Term::var(2)]);
        let h = h_malcev(&p, &f, &g, 2).unwrap();
        assert!(verify_mn_witness(alg, 2, &f, &g, &h, &limits()).unwrap());
    }

    #[test]
    fn h_malcev_requires_a_malcev_term() {
        // with a projection instead of a Mal'cev term the construction fails
        // verification for some pair
        let fx = fixtures::z2_affine();
        let alg = &fx.algebra;
        let p_op = alg.op_index("p").unwrap();
        let not_malcev = Term::var(0);
        let f = Term::app(p_op, vec![Term::var(0), Term::var(1), Term::var(3)]);
        let g = Term::app(p_op, vec![Term::var(0), Term::var(1), Term::var(2)]);
        let h = h_malcev(&not_malcev, &f, &g, 2).unwrap();
        assert!(!verify_mn_witness(alg, 2, &f, &g, &h, &limits()).unwrap());
    }

    #[test]
    fn pad_preserves_witnesses_on_semilattice() {
        let fx = fixtures::semilattice2();
        let alg = &fx.algebra;
        let meet = alg.op_index("meet").unwrap();
        // level 1 pair, padded to level 2
        let f = Term::app(meet, vec![Term::var(0), Term::var(1)]);
        let g = Term::app(meet, vec![Term::var(1), Term::var(0)]);
        let h_big = find_h_witness(alg, 2, &f, &g, &limits()).unwrap();
        let h = pad_mn_witness(&h_big, 1).unwrap();
        assert!(verify_mn_witness(alg, 1, &f, &g, &h, &limits()).unwrap());
    }

    #[test]
    fn hm_reduce_on_artificial_z2_chain() {
        let fx = fixtures::z2_affine();
        let alg = &fx.algebra;
        let p_op = alg.op_index("p").unwrap();
        let p1 = Term::app(p_op, vec![Term::var(0), Term::var(1), Term::var(2)]);
        let chain = vec![p1, Term::var(2), Term::var(2)];
        assert!(verify_hm_chain(alg, &chain, &limits()).unwrap());
        let reduced = hm_reduce(alg, &chain, &limits()).unwrap();
        assert_eq!(reduced.len(), 2);
        assert!(verify_hm_chain(alg, &reduced, &limits()).unwrap());
        assert!(is_malcev_term(alg, &reduced[0], &limits()).unwrap());
    }

    #[test]
    fn hm_reduce_iterates_down_to_a_malcev_chain() {
        // reduction strictly shortens; iterating a length-4 chain on a
        // permutable algebra ends in a 2-term chain headed by a Mal'cev term
        let fx = fixtures::z2_affine();
        let alg = &fx.algebra;
        let p_op = alg.op_index("p").unwrap();
        let p1 = Term::app(p_op, vec![Term::var(0), Term::var(1), Term::var(2)]);
        let mut chain = vec![p1, Term::var(2), Term::var(2), Term::var(2)];
        assert!(verify_hm_chain(alg, &chain, &limits()).unwrap());
        while chain.len() > 2 {
            let reduced = hm_reduce(alg, &chain, &limits()).unwrap();
            assert_eq!(reduced.len(), chain.len() - 1);
            assert!(verify_hm_chain(alg, &reduced, &limits()).unwrap());
            chain = reduced;
        }
        assert!(is_malcev_term(alg, &chain[0], &limits()).unwrap());
    }

    #[test]
    fn hm_reduce_leaves_short_chains_unchanged() {
        let fx = fixtures::z2_affine();
        let alg = &fx.algebra;
        let p_op = alg.op_index("p").unwrap();
        let p1 = Term::app(p_op, vec![Term::var(0), Term::var(1), Term::var(2)]);
        let chain = vec![p1, Term::var(2)];
        let reduced = hm_reduce(alg, &chain, &limits()).unwrap();
        assert_eq!(reduced, chain);
    }

    #[test]
    fn hm_reduce_rejects_invalid_chains() {
        let fx = fixtures::z2_affine();
        let chain = vec![Term::var(0), Term::var(0)];
        let err = hm_reduce(&fx.algebra, &chain, &limits()).unwrap_err();
        assert!(matches!(err, Error::ChainInvalid(_)));
    }

    #[test]
    fn hm_reduce_fails_on_implication_algebra() {
        use crate::malcev::permutability_degree;
        let fx = fixtures::implication2();
        let alg = &fx.algebra;
        let chain = permutability_degree(alg, 6, &limits()).unwrap().unwrap();
        assert_eq!(chain.degree, 3);
        let err = hm_reduce(alg, &chain.terms, &limits()).unwrap_err();
        assert_eq!(err, Error::MnFails { n: 2 });
    }

    #[test]
    fn h_unary_cases() {
        // two unary operations over a 3-element universe, one of them
        // constant, plus an inverting one
        use crate::algebra::Operation;
        let alg = FiniteAlgebra::new(
            3,
            vec![
                Operation::new("s", 1, vec![1, 2, 0]),
                Operation::new("c", 1, vec![1, 1, 1]),
            ],
        )
        .unwrap();
        let s = 0;
        let c = 1;

        // row 1: both sides depend on x_0
        let f = Term::app(s, vec![Term::var(0)]);
        let h = h_unary(&alg, &f, &f, 1, &limits()).unwrap();
        assert!(verify_mn_witness(&alg, 1, &f, &f, &h, &limits()).unwrap());
        assert_eq!(h, Term::app(s, vec![Term::var(2)]));

        // row 2: f depends on x_0, g on y_0 -> h = f'(u_0)
        let g = Term::app(s, vec![Term::var(1)]);
        let h = h_unary(&alg, &f, &g, 1, &limits()).unwrap();
        assert!(verify_mn_witness(&alg, 1, &f, &g, &h, &limits()).unwrap());
        assert_eq!(h, Term::app(s, vec![Term::var(0)]));

        // row 3: f depends on y_0, g on x_0 -> h = f'(v_0)
        let h = h_unary(&alg, &g, &f, 1, &limits()).unwrap();
        assert!(verify_mn_witness(&alg, 1, &g, &f, &h, &limits()).unwrap());
        assert_eq!(h, Term::app(s, vec![Term::var(1)]));

        // constant case: both sides induce the same constant through c
        let f = Term::app(c, vec![Term::var(0)]);
        let g = Term::app(c, vec![Term::var(3)]);
        let h = h_unary(&alg, &f, &g, 2, &limits()).unwrap();
        assert!(verify_mn_witness(&alg, 2, &f, &g, &h, &limits()).unwrap());
    }

    #[test]
    fn h_unary_rejects_wide_signatures() {
        let fx = fixtures::semilattice2();
        let err = h_unary(&fx.algebra, &Term::var(0), &Term::var(0), 1, &limits()).unwrap_err();
        assert_eq!(err, Error::InvalidArity);
    }
}
