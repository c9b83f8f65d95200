mod common;

use mmscheme::builtins::{self, BuiltinValue, CATALOG};
use mmscheme::io::{parse_scheme, serialize_scheme};
use mmscheme::{
    matmul_tensor, naive_addition_count, scheme_to_naive_slp, slp_addition_count, Dims, Instr,
};
use proptest::prelude::*;

#[test]
fn naive_program_costs_the_naive_count() {
    let mut corpus = vec![
        builtins::stapleton59_file(),
        builtins::stapleton59_naive(),
        builtins::strassen(),
    ];
    corpus.extend(common::random_valid_schemes(50, 11));
    for s in corpus {
        let slp = scheme_to_naive_slp(&s);
        let lin = slp
            .instructions()
            .iter()
            .filter(|i| matches!(i, Instr::Lin { .. }))
            .count();
        let naive = naive_addition_count(&s);
        assert_eq!(
            slp_addition_count(&slp).adds_total,
            naive.adds_total,
            "{}",
            s.name()
        );
        assert_eq!(lin, naive.adds_total);
        assert_eq!(slp.mul_count(), s.rank());
    }
}

#[test]
fn builtins_satisfy_program_invariants() {
    for entry in CATALOG {
        let slp = match entry.load() {
            BuiltinValue::Scheme(s) => scheme_to_naive_slp(&s),
            BuiltinValue::Program(p) => p,
        };
        slp.validate()
            .unwrap_or_else(|e| panic!("{}: {e}", entry.name));
    }
}

#[test]
fn square_3_tensor_spot_entry() {
    let t = matmul_tensor(Dims::square(3));
    assert!(t.get(1, 3, 0));
    assert_eq!(t.nonzero_count(), 27);
    assert_eq!(t.len(), 729);
}

proptest! {
    #[test]
    fn tensor_has_nmp_ones(n in 1usize..5, m in 1usize..5, p in 1usize..5) {
        let dims = Dims::new(n, m, p);
        let t = matmul_tensor(dims);
        prop_assert_eq!(t.nonzero_count(), n * m * p);
        prop_assert_eq!(t.len(), dims.equation_count());
    }

    #[test]
    fn scheme_file_roundtrips(seed in any::<u64>()) {
        for s in common::random_valid_schemes(2, seed) {
            let text = serialize_scheme(&s).unwrap();
            let back = parse_scheme(&text, Some(s.dims())).unwrap();
            prop_assert_eq!(back.u(), s.u());
            prop_assert_eq!(back.v(), s.v());
            prop_assert_eq!(back.w(), s.w());
            prop_assert_eq!(serialize_scheme(&back).unwrap(), text);
        }
    }

    #[test]
    fn program_text_roundtrips(seed in any::<u64>()) {
        for s in common::random_valid_schemes(2, seed) {
            let slp = mmscheme::rebalance_negations(&scheme_to_naive_slp(&s)).slp;
            let text = mmscheme::emit_slp(&slp);
            prop_assert_eq!(mmscheme::parse_slp(&text, None).unwrap(), slp);
        }
    }
}
