//! Addition reduction by greedy pairwise common-subexpression elimination.
//!
//! A scheme has three independent families of linear forms: the `A`-side
//! operand of each product (columns of `U`), the `B`-side operand (columns
//! of `V`) and the output combinations (rows of `W`, over the products).
//! Within a family the reducer repeatedly finds the two-variable pattern
//! `nx·x + ny·y` shared by the most forms, computes it once as a new
//! temporary and substitutes it everywhere it occurs. Each substitution into
//! `k` forms saves `k` additions and costs one, so the total strictly drops
//! until no pattern occurs twice.
//!
//! Patterns are normalized to a primitive integer pair with a positive first
//! entry, so `A3 + A6`, `-A3 - A6` and `2A3 + 2A6` are the same pattern.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::coeff::{primitive_part, Coefficient};
use crate::io::slp_text::lead_with_positive;
use crate::scheme::{naive_addition_count, BilinearScheme};
use crate::slp::{slp_addition_count, Line, LineRhs, StraightLineProgram, Term, Var};
use crate::verify::verify_scheme;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FormKind {
    ALinear,
    BLinear,
    /// Combinations of products.
    MCombination,
}

/// Sparse linear forms over variables `0..var_count`. Variables at or beyond
/// the original count are temporaries introduced by [`greedy_cse`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearFormSet {
    pub kind: FormKind,
    pub var_count: usize,
    pub forms: Vec<BTreeMap<usize, Coefficient>>,
}

impl LinearFormSet {
    pub fn new(kind: FormKind, var_count: usize, forms: Vec<BTreeMap<usize, Coefficient>>) -> Self {
        for form in &forms {
            assert!(
                form.iter().all(|(&i, c)| i < var_count && !c.is_zero()),
                "form out of range or with a zero coefficient"
            );
        }
        LinearFormSet {
            kind,
            var_count,
            forms,
        }
    }

    /// Builds forms from dense coefficient vectors, dropping zeros.
    pub fn from_dense(kind: FormKind, var_count: usize, dense: &[Vec<Coefficient>]) -> Self {
        let forms = dense
            .iter()
            .map(|v| {
                v.iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(i, c)| (i, c.clone()))
                    .collect()
            })
            .collect();
        Self::new(kind, var_count, forms)
    }

    /// `Σ (nnz − 1)` over the non-empty forms.
    pub fn additions(&self) -> usize {
        self.forms.iter().map(|f| f.len().saturating_sub(1)).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TieBreak {
    /// Lexicographically smallest `(x, y, nx, ny)` among the best patterns.
    Deterministic,
    /// A seeded uniform choice among the best patterns.
    SeededRandom(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Policy {
    /// Most frequent pairwise pattern first.
    PairwiseGreedy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReductionConfig {
    pub policy: Policy,
    pub tie_break: TieBreak,
    /// Number of seeds tried for [`TieBreak::SeededRandom`], starting at its
    /// seed and counting up. Must be 1 for [`TieBreak::Deterministic`].
    pub restarts: usize,
}

impl ReductionConfig {
    pub fn deterministic() -> Self {
        ReductionConfig {
            policy: Policy::PairwiseGreedy,
            tie_break: TieBreak::Deterministic,
            restarts: 1,
        }
    }

    pub fn seeded(seed: u64, restarts: usize) -> Self {
        ReductionConfig {
            policy: Policy::PairwiseGreedy,
            tie_break: TieBreak::SeededRandom(seed),
            restarts,
        }
    }
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self::deterministic()
    }
}

/// `var = nx·x + ny·y`, where `var` is the next free variable index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TempDef {
    pub var: usize,
    pub x: usize,
    pub nx: Coefficient,
    pub y: usize,
    pub ny: Coefficient,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CseResult {
    pub temps: Vec<TempDef>,
    pub rewritten: LinearFormSet,
}

impl CseResult {
    /// Additions after reduction: one per temporary plus the rewritten forms.
    pub fn additions(&self) -> usize {
        self.temps.len() + self.rewritten.additions()
    }
}

type Pattern = (usize, usize, Coefficient, Coefficient);

fn count_patterns(forms: &[BTreeMap<usize, Coefficient>]) -> HashMap<Pattern, usize> {
    let mut counts = HashMap::new();
    for form in forms {
        let entries: Vec<_> = form.iter().collect();
        for (k, (&x, cx)) in entries.iter().enumerate() {
            for (&y, cy) in &entries[k + 1..] {
                let (norm, _) = primitive_part(&[(*cx).clone(), (*cy).clone()]);
                let [nx, ny]: [Coefficient; 2] = norm.try_into().expect("pair");
                *counts.entry((x, y, nx, ny)).or_insert(0) += 1;
            }
        }
    }
    counts
}

/// Scale `λ` with `(cx, cy) = λ·(nx, ny)`, if the form matches the pattern.
fn match_scale(form: &BTreeMap<usize, Coefficient>, p: &Pattern) -> Option<Coefficient> {
    let cx = form.get(&p.0)?;
    let cy = form.get(&p.1)?;
    let lambda = cx / &p.2;
    (*cy == &lambda * &p.3).then_some(lambda)
}

/// Greedy pairwise elimination on one family of forms.
pub fn greedy_cse(forms: &LinearFormSet, tie_break: TieBreak) -> CseResult {
    let mut rng = match tie_break {
        TieBreak::SeededRandom(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        TieBreak::Deterministic => None,
    };
    greedy_cse_with(forms, rng.as_mut())
}

fn greedy_cse_with(forms: &LinearFormSet, mut rng: Option<&mut ChaCha8Rng>) -> CseResult {
    let mut work = forms.forms.clone();
    let mut temps = Vec::new();
    let mut next_var = forms.var_count;
    loop {
        let counts = count_patterns(&work);
        let best = counts.values().copied().max().unwrap_or(0);
        if best < 2 {
            break;
        }
        let mut tied: Vec<&Pattern> = counts
            .iter()
            .filter(|(_, &n)| n == best)
            .map(|(p, _)| p)
            .collect();
        tied.sort();
        let chosen = match rng.as_deref_mut() {
            Some(r) => (*tied.choose(r).expect("nonempty")).clone(),
            None => tied[0].clone(),
        };
        let var = next_var;
        next_var += 1;
        for form in work.iter_mut() {
            if let Some(lambda) = match_scale(form, &chosen) {
                form.remove(&chosen.0);
                form.remove(&chosen.1);
                form.insert(var, lambda);
            }
        }
        temps.push(TempDef {
            var,
            x: chosen.0,
            nx: chosen.2,
            y: chosen.1,
            ny: chosen.3,
        });
    }
    CseResult {
        temps,
        rewritten: LinearFormSet {
            kind: forms.kind,
            var_count: next_var,
            forms: work,
        },
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReduceError {
    #[error("scheme `{0}` does not compute matrix multiplication; refusing to reduce it")]
    InvalidScheme(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionReport {
    pub input_naive_additions: usize,
    pub output_additions: usize,
    /// Temporaries created in the A, B and output families.
    pub temporaries: (usize, usize, usize),
    pub seed_used: Option<u64>,
    /// Substitutions performed (equal to the total number of temporaries).
    pub iterations: usize,
    pub restarts: usize,
}

impl std::fmt::Display for ReductionReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "additions: {} -> {} (temporaries A:{} B:{} C:{}; restarts: {}",
            self.input_naive_additions,
            self.output_additions,
            self.temporaries.0,
            self.temporaries.1,
            self.temporaries.2,
            self.restarts
        )?;
        match self.seed_used {
            Some(seed) => write!(f, ", best seed: {seed})"),
            None => write!(f, ", deterministic)"),
        }
    }
}

fn family_var(kind: FormKind, inputs: usize, index: usize) -> Var {
    let temp = index.checked_sub(inputs);
    match (kind, temp) {
        (FormKind::ALinear, None) => Var::A(index),
        (FormKind::ALinear, Some(t)) => Var::T(t),
        (FormKind::BLinear, None) => Var::B(index),
        (FormKind::BLinear, Some(t)) => Var::U(t),
        (FormKind::MCombination, None) => Var::M(index),
        (FormKind::MCombination, Some(t)) => Var::V(t),
    }
}

fn form_terms(kind: FormKind, inputs: usize, form: &BTreeMap<usize, Coefficient>) -> Vec<Term> {
    form.iter()
        .map(|(&i, c)| Term::new(c.clone(), family_var(kind, inputs, i)))
        .collect()
}

fn temp_lines(kind: FormKind, inputs: usize, temps: &[TempDef]) -> Vec<Line> {
    temps
        .iter()
        .map(|t| Line {
            dst: family_var(kind, inputs, t.var),
            rhs: LineRhs::Combination(vec![
                Term::new(t.nx.clone(), family_var(kind, inputs, t.x)),
                Term::new(t.ny.clone(), family_var(kind, inputs, t.y)),
            ]),
        })
        .collect()
}

/// Moves an operand's overall scale into the product's output column when
/// the operand is a lone non-unit term or has no positive term, so the
/// operand needs no scaling or negation.
fn absorb_operand_scales(form: &mut BTreeMap<usize, Coefficient>) -> Coefficient {
    let lone_scaled = form.len() == 1 && !form.values().next().expect("nonempty").is_one();
    let all_negative = form.values().all(Coefficient::is_negative);
    let factor = if lone_scaled {
        form.values().next().expect("nonempty").clone()
    } else if all_negative {
        Coefficient::minus_one()
    } else {
        return Coefficient::one();
    };
    for c in form.values_mut() {
        *c = &*c / &factor;
    }
    factor
}

struct Attempt {
    slp: StraightLineProgram,
    additions: usize,
    temporaries: (usize, usize, usize),
}

fn reduce_once(scheme: &BilinearScheme, mut rng: Option<&mut ChaCha8Rng>) -> Attempt {
    let dims = scheme.dims();
    let rank = scheme.rank();
    let u_cols: Vec<_> = (0..rank).map(|r| scheme.u_column(r)).collect();
    let v_cols: Vec<_> = (0..rank).map(|r| scheme.v_column(r)).collect();
    let a_set = LinearFormSet::from_dense(FormKind::ALinear, dims.a_len(), &u_cols);
    let b_set = LinearFormSet::from_dense(FormKind::BLinear, dims.b_len(), &v_cols);
    let mut a_res = greedy_cse_with(&a_set, rng.as_deref_mut());
    let mut b_res = greedy_cse_with(&b_set, rng.as_deref_mut());

    let mut w: Vec<Vec<Coefficient>> = scheme.w().to_vec();
    for r in 0..rank {
        let fa = absorb_operand_scales(&mut a_res.rewritten.forms[r]);
        let fb = absorb_operand_scales(&mut b_res.rewritten.forms[r]);
        let factor = &fa * &fb;
        if !factor.is_one() {
            for row in w.iter_mut() {
                row[r] = &row[r] * &factor;
            }
        }
    }
    let m_set = LinearFormSet::from_dense(FormKind::MCombination, rank, &w);
    let m_res = greedy_cse_with(&m_set, rng);

    let mut lines = temp_lines(FormKind::ALinear, dims.a_len(), &a_res.temps);
    lines.extend(temp_lines(FormKind::BLinear, dims.b_len(), &b_res.temps));
    for r in 0..rank {
        lines.push(Line {
            dst: Var::M(r),
            rhs: LineRhs::Product(
                form_terms(FormKind::ALinear, dims.a_len(), &a_res.rewritten.forms[r]),
                form_terms(FormKind::BLinear, dims.b_len(), &b_res.rewritten.forms[r]),
            ),
        });
    }
    lines.extend(temp_lines(FormKind::MCombination, rank, &m_res.temps));
    for (c, form) in m_res.rewritten.forms.iter().enumerate() {
        lines.push(Line {
            dst: Var::C(c),
            rhs: LineRhs::Combination(form_terms(FormKind::MCombination, rank, form)),
        });
    }
    for line in lines.iter_mut() {
        rotate_line(line);
    }
    let slp = StraightLineProgram::from_lines(dims, &lines)
        .expect("reduction of a valid scheme yields a well-formed program");
    let additions = a_res.additions() + b_res.additions() + m_res.additions();
    debug_assert_eq!(additions, slp_addition_count(&slp).adds_total);
    Attempt {
        slp,
        additions,
        temporaries: (a_res.temps.len(), b_res.temps.len(), m_res.temps.len()),
    }
}

fn rotate_line(line: &mut Line) -> bool {
    match &mut line.rhs {
        LineRhs::Combination(terms) => lead_with_positive(terms),
        LineRhs::Product(a, b) => {
            let ok_a = lead_with_positive(a);
            let ok_b = lead_with_positive(b);
            ok_a && ok_b
        }
    }
}

/// Reduces the additions of a valid scheme and returns the resulting
/// program in implementation order: A-side temporaries, B-side temporaries,
/// products, output temporaries, outputs.
///
/// With [`TieBreak::SeededRandom`] every seed in `seed..seed + restarts` is
/// tried (concurrently) and the lowest count wins, ties going to the lower
/// seed.
pub fn reduce_scheme(
    scheme: &BilinearScheme,
    config: &ReductionConfig,
) -> Result<(StraightLineProgram, ReductionReport), ReduceError> {
    if config.restarts == 0 {
        return Err(ReduceError::Config("restarts must be at least 1".into()));
    }
    if config.tie_break == TieBreak::Deterministic && config.restarts != 1 {
        return Err(ReduceError::Config(
            "deterministic tie-breaking allows exactly one run".into(),
        ));
    }
    if !verify_scheme(scheme).is_valid() {
        return Err(ReduceError::InvalidScheme(scheme.name().to_string()));
    }
    let input_naive_additions = naive_addition_count(scheme).adds_total;
    let (attempt, seed_used) = match config.tie_break {
        TieBreak::Deterministic => (reduce_once(scheme, None), None),
        TieBreak::SeededRandom(start) => {
            let seeds: Vec<u64> = (0..config.restarts as u64)
                .map(|k| start.wrapping_add(k))
                .collect();
            let (seed, attempt) = seeds
                .par_iter()
                .map(|&seed| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    (seed, reduce_once(scheme, Some(&mut rng)))
                })
                .min_by_key(|(seed, a)| (a.additions, *seed))
                .expect("at least one restart");
            (attempt, Some(seed))
        }
    };
    let t = attempt.temporaries;
    let report = ReductionReport {
        input_naive_additions,
        output_additions: attempt.additions,
        temporaries: t,
        seed_used,
        iterations: t.0 + t.1 + t.2,
        restarts: config.restarts,
    };
    Ok((attempt.slp, report))
}

/// Result of [`rebalance_negations`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rebalanced {
    pub slp: StraightLineProgram,
    /// Lines with no positive term; they keep their order.
    pub flagged: Vec<Var>,
}

/// Reorders every multi-term combination so it starts with a positive term
/// where one exists. Semantics and addition count are unchanged.
pub fn rebalance_negations(slp: &StraightLineProgram) -> Rebalanced {
    let mut lines = slp.lines();
    let mut flagged = Vec::new();
    for line in lines.iter_mut() {
        if !rotate_line(line) {
            flagged.push(line.dst);
        }
    }
    let slp = StraightLineProgram::from_lines(slp.dims(), &lines)
        .expect("reordering terms keeps a valid program valid");
    Rebalanced { slp, flagged }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn form(entries: &[(usize, i64)]) -> BTreeMap<usize, Coefficient> {
        entries
            .iter()
            .map(|&(i, c)| (i, Coefficient::from_int(c)))
            .collect()
    }

    #[test]
    fn shared_pair_becomes_one_temporary() {
        // A3 + A6 + x, A3 + A6 + y, A3 + A6 with x = 0, y = 1
        let set = LinearFormSet::new(
            FormKind::ALinear,
            9,
            vec![
                form(&[(3, 1), (6, 1), (0, 1)]),
                form(&[(3, 1), (6, 1), (1, 1)]),
                form(&[(3, 1), (6, 1)]),
            ],
        );
        assert_eq!(set.additions(), 5);
        let res = greedy_cse(&set, TieBreak::Deterministic);
        assert_eq!(res.temps.len(), 1);
        let t = &res.temps[0];
        assert_eq!((t.x, t.y), (3, 6));
        assert_eq!(
            (t.nx.clone(), t.ny.clone()),
            (Coefficient::one(), Coefficient::one())
        );
        assert_eq!(res.additions(), 3);
    }

    #[test]
    fn negated_and_scaled_occurrences_match() {
        let set = LinearFormSet::new(
            FormKind::ALinear,
            4,
            vec![form(&[(0, 1), (1, -1)]), form(&[(0, -2), (1, 2), (2, 1)])],
        );
        let res = greedy_cse(&set, TieBreak::Deterministic);
        assert_eq!(res.temps.len(), 1);
        assert_eq!(res.rewritten.forms[1], form(&[(2, 1), (4, -2)]));
    }

    #[test]
    fn no_shared_pair_is_a_fixpoint() {
        let set = LinearFormSet::new(
            FormKind::BLinear,
            4,
            vec![
                form(&[(0, 1), (1, 1)]),
                form(&[(2, 1), (3, 1)]),
                form(&[(0, 1), (1, -1)]),
            ],
        );
        let res = greedy_cse(&set, TieBreak::Deterministic);
        assert!(res.temps.is_empty());
        assert_eq!(res.rewritten, set);
    }

    #[test]
    fn config_validation() {
        let s = BilinearScheme::from_integers(
            "u",
            crate::scheme::Dims::square(1),
            &[vec![1]],
            &[vec![1]],
            &[vec![1]],
        )
        .unwrap();
        let bad = ReductionConfig {
            restarts: 2,
            ..ReductionConfig::deterministic()
        };
        assert!(matches!(
            reduce_scheme(&s, &bad),
            Err(ReduceError::Config(_))
        ));
        assert!(matches!(
            reduce_scheme(&s, &ReductionConfig::seeded(0, 0)),
            Err(ReduceError::Config(_))
        ));
        let wrong = BilinearScheme::from_integers(
            "w",
            crate::scheme::Dims::square(1),
            &[vec![1]],
            &[vec![1]],
            &[vec![2]],
        )
        .unwrap();
        assert!(matches!(
            reduce_scheme(&wrong, &ReductionConfig::default()),
            Err(ReduceError::InvalidScheme(_))
        ));
    }

    #[test]
    fn scalar_scheme_needs_no_additions() {
        let s = BilinearScheme::from_integers(
            "u",
            crate::scheme::Dims::square(1),
            &[vec![1]],
            &[vec![1]],
            &[vec![1]],
        )
        .unwrap();
        let (slp, report) = reduce_scheme(&s, &ReductionConfig::default()).unwrap();
        assert_eq!(report.output_additions, 0);
        assert_eq!(slp.mul_count(), 1);
    }

    #[test]
    fn absorbs_lone_negative_operand() {
        // M0 = (-A0)·B0, C0 = -M0
        let s = BilinearScheme::from_integers(
            "neg",
            crate::scheme::Dims::square(1),
            &[vec![-1]],
            &[vec![1]],
            &[vec![-1]],
        )
        .unwrap();
        let (slp, _) = reduce_scheme(&s, &ReductionConfig::default()).unwrap();
        assert_eq!(slp_addition_count(&slp).scalings, 0);
        assert_eq!(slp.instructions().len(), 1);
    }
}
