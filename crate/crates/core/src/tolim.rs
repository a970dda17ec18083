//! Sound refutation and bounded affirmation of the tolerance-image property
//! for a concrete tolerance on a concrete finite algebra.
//!
//! A tolerance of an algebra in a variety is a homomorphic image of a
//! congruence exactly when every condition `M(n)` holds; a failing `M(n)`
//! instance can be turned into a concrete refutation: a term pair `(f, g)`
//! agreeing on the diagonal and an assignment of tolerance pairs whose
//! image `(f(..), g(..))` escapes the tolerance, which no congruence
//! preimage could produce.

use std::fmt;

use crate::algebra::{FiniteAlgebra, Term};
use crate::malcev::{check_mn, MnAnalysis, MnStatus, MnVerdict};
use crate::relations::{classify, BinRel};
use crate::{Error, Limits, Result};

/// A concrete refutation: evaluating the term pair at the assignment of
/// tolerance pairs produces a pair outside the tolerance. All components
/// re-verify by plain evaluation.
#[derive(Clone, Debug)]
pub struct Refutation {
    pub n: usize,
    /// `2n`-ary terms satisfying the diagonal identity.
    pub f: Term,
    pub g: Term,
    /// The tolerance pairs `(a_i, b_i)` substituted for `(x_i, y_i)`.
    pub assignment: Vec<(usize, usize)>,
    /// `(f(a_i, b_i : i<n), g(a_i, b_i : i<n))`, not in the tolerance.
    pub image: (usize, usize),
}

impl Refutation {
    /// End-to-end re-verification by raw evaluation, independent of the
    /// closure machinery that produced the refutation.
    pub fn verify(&self, alg: &FiniteAlgebra, tau: &BinRel, limits: &Limits) -> Result<bool> {
        if !crate::malcev::diagonal_identity_holds(alg, &self.f, &self.g, self.n, limits)? {
            return Ok(false);
        }
        let mut env = Vec::with_capacity(2 * self.n);
        for &(a, b) in &self.assignment {
            if !tau.contains(a, b) {
                return Ok(false);
            }
            env.push(a);
            env.push(b);
        }
        let image = (self.f.eval(alg, &env)?, self.g.eval(alg, &env)?);
        Ok(image == self.image && !tau.contains(image.0, image.1))
    }
}

/// Searches for a refutation of the tolerance-image property for `tau` at
/// level `n`: for every diagonal pair `(f, g)` without a witness term and
/// every assignment of `n` tolerance pairs (in lexicographic order over the
/// sorted pair list), evaluates the image and returns the first escape.
///
/// `None` means no refutation was found at this level; that is evidence,
/// not proof, since larger `n` may still refute. On large varieties the
/// search is certificate-guided and bounded (it evaluates the first few
/// hundred certified counterexample pairs); on small ones it is exhaustive.
pub fn refute_tolim(
    alg: &FiniteAlgebra,
    tau: &BinRel,
    n: usize,
    limits: &Limits,
) -> Result<Option<Refutation>> {
    if n == 0 {
        return Err(Error::InvalidN);
    }
    if !classify(alg, tau).tolerance {
        return Err(Error::NotATolerance);
    }
    let tau_pairs: Vec<(usize, usize)> = tau.iter().collect();

    // The documented candidate order tries pairs of basic operations in
    // identity variable layout first; these are the canonical candidates,
    // and an escaping image is by itself proof that the pair has no witness
    // term (a pair with a witness maps tolerance pairs into the tolerance).
    if let Some(refutation) = refute_basic_pairs(alg, tau, &tau_pairs, n, limits)? {
        return Ok(Some(refutation));
    }

    let contains = |a: usize, b: usize| tau.contains(a, b);
    match crate::malcev::refutation_scan(alg, n, &tau_pairs, &contains, limits)? {
        crate::malcev::RefuteScanOutcome::Found {
            s,
            t,
            assignment,
            image,
        } => {
            return Ok(Some(Refutation {
                n,
                f: s,
                g: t,
                assignment,
                image,
            }))
        }
        crate::malcev::RefuteScanOutcome::NoneConclusive
        | crate::malcev::RefuteScanOutcome::NoneBounded => return Ok(None),
        crate::malcev::RefuteScanOutcome::NeedExact
        | crate::malcev::RefuteScanOutcome::Unavailable => {}
    }

    // exact tier: exhaustive lexicographic search over all counterexamples
    let analysis = MnAnalysis::new_exact(alg, n, limits)?;
    for (s, t) in analysis.counterexamples(usize::MAX) {
        let f = analysis.element_witness(s);
        let g = analysis.element_witness(t);
        let mut stack = vec![0usize; n];
        let mut env = vec![0usize; 2 * n];
        loop {
            for (i, &p) in stack.iter().enumerate() {
                env[2 * i] = tau_pairs[p].0;
                env[2 * i + 1] = tau_pairs[p].1;
            }
            let image = (f.eval(alg, &env)?, g.eval(alg, &env)?);
            if !tau.contains(image.0, image.1) {
                let assignment = stack.iter().map(|&p| tau_pairs[p]).collect();
                return Ok(Some(Refutation {
                    n,
                    f,
                    g,
                    assignment,
                    image,
                }));
            }
            let mut pos = n;
            let mut done = false;
            loop {
                if pos == 0 {
                    done = true;
                    break;
                }
                pos -= 1;
                stack[pos] += 1;
                if stack[pos] < tau_pairs.len() {
                    break;
                }
                stack[pos] = 0;
            }
            if done {
                break;
            }
        }
    }
    Ok(None)
}

/// Tries the pairs of distinct basic operations of arity at most `2n`, each
/// applied to the identity variable layout `x0, .., x_{arity-1}`, against
/// all assignments of `n` tolerance pairs in lexicographic order.
fn refute_basic_pairs(
    alg: &FiniteAlgebra,
    tau: &BinRel,
    tau_pairs: &[(usize, usize)],
    n: usize,
    limits: &Limits,
) -> Result<Option<Refutation>> {
    use crate::algebra::{term_function, Algebra};
    for i in 0..alg.op_count() {
        for j in 0..alg.op_count() {
            if i == j || alg.op_arity(i) > 2 * n || alg.op_arity(j) > 2 * n {
                continue;
            }
            let f = Term::app(i, (0..alg.op_arity(i)).map(Term::var).collect());
            let g = Term::app(j, (0..alg.op_arity(j)).map(Term::var).collect());
            if !crate::malcev::diagonal_identity_holds(alg, &f, &g, n, limits)? {
                continue;
            }
            let tf = term_function(alg, &f, 2 * n, limits)?;
            let tg = term_function(alg, &g, 2 * n, limits)?;
            let size = alg.size();
            let mut stack = vec![0usize; n];
            loop {
                let mut env_idx = 0usize;
                for &p in &stack {
                    let (a, b) = tau_pairs[p];
                    env_idx = (env_idx * size + a) * size + b;
                }
                let image = (
                    tf.table()[env_idx] as usize,
                    tg.table()[env_idx] as usize,
                );
                if !tau.contains(image.0, image.1) {
                    return Ok(Some(Refutation {
                        n,
                        f,
                        g,
                        assignment: stack.iter().map(|&p| tau_pairs[p]).collect(),
                        image,
                    }));
                }
                let mut pos = n;
                let mut done = false;
                loop {
                    if pos == 0 {
                        done = true;
                        break;
                    }
                    pos -= 1;
                    stack[pos] += 1;
                    if stack[pos] < tau_pairs.len() {
                        break;
                    }
                    stack[pos] = 0;
                }
                if done {
                    break;
                }
            }
        }
    }
    Ok(None)
}

/// Per-level report of `M(n)` checks. Computation stops at the first
/// failure: a failing level forces every higher level to fail as well.
#[derive(Clone, Debug)]
pub struct TolimReport {
    pub n_max: usize,
    /// Verdicts for `n = 1, ..` up to `n_max` or the first failure.
    pub verdicts: Vec<MnVerdict>,
    pub first_failure: Option<usize>,
}

impl TolimReport {
    pub fn all_hold(&self) -> bool {
        self.first_failure.is_none()
    }
}

impl fmt::Display for TolimReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.verdicts {
            match v.status {
                MnStatus::Holds => writeln!(f, "M({}): holds", v.n)?,
                MnStatus::Fails => writeln!(f, "M({}): fails", v.n)?,
            }
        }
        match self.first_failure {
            Some(n) => writeln!(
                f,
                "M({n}) fails, so M(m) fails for every m >= {n}: tolerances of this variety \
                 are not all images of congruences"
            ),
            None => writeln!(
                f,
                "all M(n) hold up to n = {}; bounded evidence only — no finite family of \
                 M(n) checks is equivalent to the tolerance-image property",
                self.n_max
            ),
        }
    }
}

/// Runs `check_mn` for `n = 1..=n_max`, stopping at the first failure.
pub fn check_tolim_up_to(
    alg: &FiniteAlgebra,
    n_max: usize,
    limits: &Limits,
) -> Result<TolimReport> {
    if n_max == 0 {
        return Err(Error::InvalidN);
    }
    let mut verdicts = Vec::new();
    let mut first_failure = None;
    for n in 1..=n_max {
        let verdict = check_mn(alg, n, limits)?;
        let failed = verdict.status == MnStatus::Fails;
        verdicts.push(verdict);
        if failed {
            first_failure = Some(n);
            break;
        }
    }
    Ok(TolimReport {
        n_max,
        verdicts,
        first_failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn limits() -> Limits {
        Limits::default()
    }

    #[test]
    fn prop5_refutation_matches_documented_values() {
        let fx = fixtures::prop5();
        let tau = fx.relation("tau").unwrap();
        let refutation = refute_tolim(&fx.algebra, tau, 2, &limits())
            .unwrap()
            .expect("tau must be refuted at n = 2");
        assert_eq!(refutation.image, (1, 2));
        assert_eq!(refutation.assignment, vec![(1, 0), (0, 2)]);
        assert!(refutation.verify(&fx.algebra, tau, &limits()).unwrap());
    }

    #[test]
    fn diagonal_is_never_refuted() {
        let fx = fixtures::prop5();
        let diag = BinRel::diagonal(3);
        assert!(refute_tolim(&fx.algebra, &diag, 2, &limits())
            .unwrap()
            .is_none());
    }

    #[test]
    fn holds_algebras_are_never_refuted() {
        // when M(n) holds the counterexample set is empty and the search is
        // vacuous
        let fx = fixtures::z2_affine();
        let full = BinRel::full(2);
        assert!(refute_tolim(&fx.algebra, &full, 1, &limits())
            .unwrap()
            .is_none());
        assert!(refute_tolim(&fx.algebra, &full, 2, &limits())
            .unwrap()
            .is_none());
    }

    #[test]
    fn non_tolerances_are_rejected() {
        let fx = fixtures::prop5();
        let bad = BinRel::from_pairs(3, [(0, 0), (1, 1), (2, 2), (0, 1)]).unwrap();
        let err = refute_tolim(&fx.algebra, &bad, 1, &limits()).unwrap_err();
        assert_eq!(err, Error::NotATolerance);
    }

    #[test]
    fn report_semilattice_all_hold() {
        let fx = fixtures::semilattice2();
        let report = check_tolim_up_to(&fx.algebra, 2, &limits()).unwrap();
        assert!(report.all_hold());
        assert_eq!(report.verdicts.len(), 2);
        let text = report.to_string();
        assert!(text.contains("bounded evidence"));
    }

    #[test]
    fn report_prop5_stops_at_first_failure() {
        let fx = fixtures::prop5();
        let report = check_tolim_up_to(&fx.algebra, 3, &limits()).unwrap();
        assert_eq!(report.first_failure, Some(2));
        assert_eq!(report.verdicts.len(), 2);
        assert!(report.to_string().contains("fails for every"));
    }

    #[test]
    fn separating_report() {
        let fx = fixtures::separating_algebra(1).unwrap();
        let report = check_tolim_up_to(&fx.algebra, 2, &limits()).unwrap();
        assert_eq!(report.first_failure, Some(2));
    }
}
