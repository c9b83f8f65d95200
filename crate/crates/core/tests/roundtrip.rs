use mmscheme::builtins::{self, STAPLETON59_FILE, STAPLETON59_SLP};
use mmscheme::io::{normalize_whitespace, parse_scheme, serialize_scheme, SchemeFileDocument};
use mmscheme::slp::LineRhs;
use mmscheme::{
    emit_slp, parse_slp, rebalance_negations, reduce_scheme, slp_addition_count, verify_slp, Dims,
    ReductionConfig,
};

#[test]
fn coefficient_file_roundtrips() {
    let s = parse_scheme(STAPLETON59_FILE, None).unwrap();
    assert_eq!(s.dims(), Dims::square(3));
    let text = serialize_scheme(&s).unwrap();
    assert_eq!(
        normalize_whitespace(&text),
        normalize_whitespace(STAPLETON59_FILE)
    );
    assert_eq!(parse_scheme(&text, None).unwrap().u(), s.u());
}

#[test]
fn coefficient_file_tolerates_layout_noise() {
    let noisy = STAPLETON59_FILE.replace('\n', "\r\n").replace(' ', "  \t");
    let s = parse_scheme(&format!("\n{noisy}\n\n"), None).unwrap();
    assert_eq!(s.u(), builtins::stapleton59_file().u());
    let doc = SchemeFileDocument::parse(STAPLETON59_FILE).unwrap();
    assert_eq!(doc.row_counts(), (9, 9, 9));
}

#[test]
fn schedule_emits_its_listing_with_positive_leaders() {
    let slp = builtins::stapleton59_slp();
    let emitted = emit_slp(&slp);
    let expected = format!(
        "# dims 3 3 3\n{}",
        STAPLETON59_SLP
            .replace("C6 = -M7 + M22 - v3 - v8", "C6 = M22 - v3 - v8 - M7")
            .replace("C8 = -M7 + v5", "C8 = v5 - M7")
    );
    assert_eq!(emitted, expected);
    // Only the two negatively-led lines change.
    let changed = emitted
        .lines()
        .skip(1)
        .zip(STAPLETON59_SLP.lines())
        .filter(|(a, b)| a != b)
        .count();
    assert_eq!(changed, 2);
}

#[test]
fn parse_emit_is_identity_on_balanced_programs() {
    let balanced = rebalance_negations(&builtins::stapleton59_slp()).slp;
    let text = emit_slp(&balanced);
    assert_eq!(parse_slp(&text, None).unwrap(), balanced);
    assert_eq!(emit_slp(&parse_slp(&text, None).unwrap()), text);
    let raw = builtins::stapleton59_slp();
    let reparsed = parse_slp(&emit_slp(&raw), None).unwrap();
    assert_eq!(slp_addition_count(&reparsed), slp_addition_count(&raw));
    assert!(verify_slp(&reparsed).unwrap().is_valid());
}

#[test]
fn emitted_lines_lead_positively() {
    let programs = [
        builtins::stapleton59_slp(),
        reduce_scheme(
            &builtins::stapleton59_naive(),
            &ReductionConfig::deterministic(),
        )
        .unwrap()
        .0,
        mmscheme::scheme_to_naive_slp(&builtins::stapleton59_naive()),
    ];
    for slp in programs {
        let text = emit_slp(&slp);
        let reparsed = parse_slp(&text, None).unwrap();
        for line in reparsed.lines() {
            let parts: Vec<&[mmscheme::slp::Term]> = match &line.rhs {
                LineRhs::Combination(t) => vec![t],
                LineRhs::Product(a, b) => vec![a, b],
            };
            for terms in parts {
                if terms.iter().any(|t| t.coeff.is_positive()) {
                    assert!(terms[0].coeff.is_positive(), "{}", line.dst);
                }
            }
        }
        for line in text.lines().skip(1) {
            let rhs = line.split_once(" = ").unwrap().1;
            let chunks: Vec<&str> = rhs.split(" * ").collect();
            for chunk in chunks {
                // A chain with a positive term after the first must not start negated.
                let chunk = chunk.trim_start_matches('(');
                assert!(!(chunk.starts_with('-') && chunk.contains(" + ")), "{line}");
            }
        }
    }
}

#[test]
fn scheme_file_export_of_extracted_schedule() {
    let s = mmscheme::extract_scheme(&builtins::stapleton59_slp()).unwrap();
    let text = serialize_scheme(&s).unwrap();
    let back = parse_scheme(&text, None).unwrap();
    assert!(mmscheme::verify_scheme(&back).is_valid());
}
