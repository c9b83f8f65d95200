mod common;

use std::collections::BTreeMap;

use mmscheme::builtins;
use mmscheme::reduce::{FormKind, LinearFormSet, TieBreak};
use mmscheme::slp::{LineRhs, Term};
use mmscheme::{
    emit_slp, extract_scheme, greedy_cse, naive_addition_count, rebalance_negations, reduce_scheme,
    slp_addition_count, verify_scheme, verify_slp, BilinearScheme, Coefficient, ReductionConfig,
    Var,
};
use proptest::prelude::*;

fn corpus() -> Vec<BilinearScheme> {
    let mut schemes = vec![
        builtins::stapleton59_file(),
        builtins::stapleton59_naive(),
        extract_scheme(&builtins::stapleton59_slp())
            .unwrap()
            .with_name("stapleton59-slp"),
        builtins::strassen(),
    ];
    schemes.extend(common::random_valid_schemes(50, 1));
    schemes
}

fn check_reduction(s: &BilinearScheme, config: &ReductionConfig) {
    let (slp, report) = reduce_scheme(s, config).unwrap();
    assert!(verify_slp(&slp).unwrap().is_valid(), "{}", s.name());
    assert!(
        verify_scheme(&extract_scheme(&slp).unwrap()).is_valid(),
        "{}",
        s.name()
    );
    let naive = naive_addition_count(s).adds_total;
    assert_eq!(report.input_naive_additions, naive);
    assert!(report.output_additions <= naive, "{}", s.name());
    assert_eq!(slp_addition_count(&slp).adds_total, report.output_additions);
    assert_eq!(slp.mul_count(), s.rank());
}

#[test]
fn reduction_preserves_semantics() {
    for s in corpus() {
        check_reduction(&s, &ReductionConfig::deterministic());
        check_reduction(&s, &ReductionConfig::seeded(5, 4));
    }
}

#[test]
fn deterministic_reduction_of_the_rank_23_scheme() {
    let (_, report) = reduce_scheme(
        &builtins::stapleton59_naive(),
        &ReductionConfig::deterministic(),
    )
    .unwrap();
    println!("deterministic: {report}");
    assert!(report.output_additions <= 75);
}

#[test]
fn strassen_does_not_grow() {
    let (_, report) =
        reduce_scheme(&builtins::strassen(), &ReductionConfig::deterministic()).unwrap();
    assert!(report.output_additions <= 18);
}

#[test]
fn scalar_scheme_reduces_to_nothing() {
    let s = BilinearScheme::from_integers(
        "unit",
        mmscheme::Dims::square(1),
        &[vec![1]],
        &[vec![1]],
        &[vec![1]],
    )
    .unwrap();
    let (slp, report) = reduce_scheme(&s, &ReductionConfig::deterministic()).unwrap();
    assert_eq!(report.output_additions, 0);
    assert!(verify_slp(&slp).unwrap().is_valid());
}

#[test]
fn reduction_is_deterministic() {
    let s = builtins::stapleton59_file();
    for config in [
        ReductionConfig::deterministic(),
        ReductionConfig::seeded(17, 8),
    ] {
        let (p1, r1) = reduce_scheme(&s, &config).unwrap();
        let (p2, r2) = reduce_scheme(&s, &config).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(r1, r2);
        assert_eq!(emit_slp(&p1), emit_slp(&p2));
    }
}

#[test]
fn restarts_never_lose_to_their_first_seed() {
    let s = builtins::stapleton59_naive();
    let (_, single) = reduce_scheme(&s, &ReductionConfig::seeded(40, 1)).unwrap();
    let (_, many) = reduce_scheme(&s, &ReductionConfig::seeded(40, 16)).unwrap();
    assert!(many.output_additions <= single.output_additions);
    let seed = many.seed_used.unwrap();
    assert!((40..56).contains(&seed));
    let (_, again) = reduce_scheme(&s, &ReductionConfig::seeded(seed, 1)).unwrap();
    assert_eq!(again.output_additions, many.output_additions);
}

#[test]
fn invalid_scheme_is_refused() {
    let s = builtins::strassen()
        .with_entry('W', 0, 0, Coefficient::from_int(-1))
        .unwrap();
    assert!(reduce_scheme(&s, &ReductionConfig::deterministic()).is_err());
}

#[test]
fn output_is_in_implementation_order() {
    let (slp, _) = reduce_scheme(
        &builtins::stapleton59_file(),
        &ReductionConfig::deterministic(),
    )
    .unwrap();
    let rank = |v: &Var| match v {
        Var::T(_) => 0,
        Var::U(_) => 1,
        Var::M(_) => 2,
        Var::V(_) => 3,
        Var::C(_) => 4,
        _ => unreachable!(),
    };
    let order: Vec<_> = slp.lines().iter().map(|l| rank(&l.dst)).collect();
    assert!(order.windows(2).all(|w| w[0] <= w[1]), "{order:?}");
    let products: Vec<_> = slp
        .lines()
        .iter()
        .filter_map(|l| match l.dst {
            Var::M(r) => Some(r),
            _ => None,
        })
        .collect();
    assert_eq!(products, (0..23).collect::<Vec<_>>());
}

/// Expands a temporary of the B family into its coefficients on `B_0..B_8`.
fn expand_b(lines: &[mmscheme::slp::Line], var: Var) -> BTreeMap<usize, Coefficient> {
    match var {
        Var::B(i) => BTreeMap::from([(i, Coefficient::one())]),
        _ => {
            let line = lines.iter().find(|l| l.dst == var).unwrap();
            let LineRhs::Combination(terms) = &line.rhs else {
                unreachable!()
            };
            let mut acc: BTreeMap<usize, Coefficient> = BTreeMap::new();
            for t in terms {
                for (i, c) in expand_b(lines, t.var) {
                    let e = acc.entry(i).or_insert_with(Coefficient::zero);
                    *e = &*e + &(&c * &t.coeff);
                }
            }
            acc.retain(|_, c| !c.is_zero());
            acc
        }
    }
}

#[test]
fn b_side_finds_the_four_term_chain() {
    let (slp, _) = reduce_scheme(
        &builtins::stapleton59_file(),
        &ReductionConfig::deterministic(),
    )
    .unwrap();
    let lines = slp.lines();
    let target: BTreeMap<usize, Coefficient> = [1, 2, 4, 5]
        .iter()
        .map(|&i| (i, Coefficient::one()))
        .collect();
    let found = lines
        .iter()
        .filter(|l| matches!(l.dst, Var::U(_)))
        .any(|l| {
            let e = expand_b(&lines, l.dst);
            e == target || e.values().all(|c| c.is_minus_one()) && e.keys().eq(target.keys())
        });
    assert!(found, "no B-side temporary expands to B1 + B2 + B4 + B5");
}

#[test]
fn reducing_rewritten_forms_again_is_a_fixpoint() {
    for s in corpus().into_iter().take(20) {
        for (kind, var_count, forms) in [
            (
                FormKind::ALinear,
                s.dims().a_len(),
                (0..s.rank()).map(|r| s.u_column(r)).collect::<Vec<_>>(),
            ),
            (
                FormKind::BLinear,
                s.dims().b_len(),
                (0..s.rank()).map(|r| s.v_column(r)).collect(),
            ),
            (FormKind::MCombination, s.rank(), s.w().to_vec()),
        ] {
            let set = LinearFormSet::from_dense(kind, var_count, &forms);
            let first = greedy_cse(&set, TieBreak::Deterministic);
            let again = greedy_cse(&first.rewritten, TieBreak::Deterministic);
            assert!(again.temps.is_empty());
            assert!(first.additions() + first.temps.len() <= set.additions());
        }
    }
}

#[test]
fn rebalance_moves_a_positive_term_first() {
    let slp = builtins::stapleton59_slp();
    let balanced = rebalance_negations(&slp);
    assert!(balanced.flagged.is_empty());
    assert!(verify_slp(&balanced.slp).unwrap().is_valid());
    assert_eq!(slp_addition_count(&balanced.slp), slp_addition_count(&slp));
    let c6 = balanced
        .slp
        .lines()
        .into_iter()
        .find(|l| l.dst == Var::C(6))
        .unwrap();
    let LineRhs::Combination(terms) = c6.rhs else {
        unreachable!()
    };
    assert_eq!(terms[0], Term::unit(Var::M(22)));
    // Lines that already lead positively are unchanged.
    let before = slp.lines();
    for (a, b) in before.iter().zip(balanced.slp.lines()) {
        if let LineRhs::Combination(t) = &a.rhs {
            if t[0].coeff.is_positive() {
                assert_eq!(*a, b);
            }
        }
    }
}

#[test]
fn all_negative_line_is_flagged_and_kept() {
    let s = BilinearScheme::from_integers(
        "neg",
        mmscheme::Dims::new(1, 2, 1),
        &[vec![1, 0], vec![0, 1]],
        &[vec![1, 0], vec![0, 1]],
        &[vec![1, 1]],
    )
    .unwrap();
    let negated = mmscheme::scheme_to_naive_slp(
        &BilinearScheme::from_integers(
            "neg",
            s.dims(),
            &[vec![-1, 0], vec![0, -1]],
            &[vec![1, 0], vec![0, 1]],
            &[vec![-1, -1]],
        )
        .unwrap(),
    );
    let balanced = rebalance_negations(&negated);
    assert_eq!(balanced.flagged, vec![Var::C(0)]);
    assert_eq!(balanced.slp, negated);
    assert!(verify_slp(&balanced.slp).unwrap().is_valid());
}

fn small_forms() -> impl Strategy<Value = LinearFormSet> {
    let coeff = prop_oneof![Just(-2i64), Just(-1), Just(1), Just(2), Just(3)];
    let form = proptest::collection::btree_map(0usize..6, coeff, 1..5);
    proptest::collection::vec(form, 1..8).prop_map(|forms| {
        let forms = forms
            .into_iter()
            .map(|f| {
                f.into_iter()
                    .map(|(i, c)| (i, Coefficient::from_int(c)))
                    .collect()
            })
            .collect();
        LinearFormSet::new(FormKind::ALinear, 6, forms)
    })
}

fn expand(
    result: &mmscheme::reduce::CseResult,
    form: &BTreeMap<usize, Coefficient>,
    base: usize,
) -> BTreeMap<usize, Coefficient> {
    let mut acc: BTreeMap<usize, Coefficient> = BTreeMap::new();
    let mut stack: Vec<(usize, Coefficient)> = form.iter().map(|(&i, c)| (i, c.clone())).collect();
    while let Some((i, c)) = stack.pop() {
        if i < base {
            let e = acc.entry(i).or_insert_with(Coefficient::zero);
            *e = &*e + &c;
        } else {
            let t = result.temps.iter().find(|t| t.var == i).unwrap();
            stack.push((t.x, &c * &t.nx));
            stack.push((t.y, &c * &t.ny));
        }
    }
    acc.retain(|_, c| !c.is_zero());
    acc
}

proptest! {
    #[test]
    fn cse_preserves_every_form(set in small_forms(), seed in any::<u64>()) {
        for tie in [TieBreak::Deterministic, TieBreak::SeededRandom(seed)] {
            let result = greedy_cse(&set, tie);
            prop_assert!(result.additions() <= set.additions());
            // Each temporary saves at least one addition.
            prop_assert!(result.additions() + result.temps.len() <= set.additions());
            for (orig, new) in set.forms.iter().zip(&result.rewritten.forms) {
                prop_assert_eq!(&expand(&result, new, set.var_count), orig);
                prop_assert!(new.values().all(|c| !c.is_zero()));
            }
            prop_assert!(greedy_cse(&result.rewritten, TieBreak::Deterministic).temps.is_empty());
        }
    }
}
