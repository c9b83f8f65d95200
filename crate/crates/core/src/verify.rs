//! Exact and randomized checks that a scheme or program computes `C = AB`.
//!
//! [`verify_scheme`] evaluates every Brent equation over the rationals.
//! [`verify_slp`] evaluates a program symbolically without going through a
//! scheme, so the two routes check each other. [`random_check`] is a cheap
//! probabilistic filter over a prime field.

use std::collections::HashMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::coeff::Coefficient;
use crate::engine::{
    eval_slp, naive_multiply, BlockMatrix, EngineError, ModP, RingError, ScalarRing,
};
use crate::scheme::{matmul_tensor, BilinearScheme, Dims, SchemeError};
use crate::slp::{Instr, Kind, SlpError, StraightLineProgram, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("malformed program: {0}")]
    Malformed(SlpError),
    #[error("instruction {index}: product of non-linear operands; the program is not bilinear")]
    NonBilinear { index: usize },
    #[error("extracted scheme is invalid: {0}")]
    Extraction(#[from] SchemeError),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

impl From<SlpError> for VerifyError {
    fn from(e: SlpError) -> Self {
        match e {
            SlpError::MulOperandKind { index, left, right }
                if left == Kind::Bilinear || right == Kind::Bilinear =>
            {
                VerifyError::NonBilinear { index }
            }
            other => VerifyError::Malformed(other),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Invalid,
}

/// One violated Brent equation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub computed: Coefficient,
    pub expected: u8,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(A{}, B{}, C{}): got {}, expected {}",
            self.a, self.b, self.c, self.computed, self.expected
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub dims: Dims,
    pub verdict: Verdict,
    /// Every failing equation in `(a, b, c)` order.
    pub failures: Vec<Failure>,
    pub equations_checked: usize,
}

impl VerificationReport {
    fn from_failures(dims: Dims, failures: Vec<Failure>, equations_checked: usize) -> Self {
        let verdict = if failures.is_empty() && equations_checked == dims.equation_count() {
            Verdict::Valid
        } else {
            Verdict::Invalid
        };
        VerificationReport {
            dims,
            verdict,
            failures,
            equations_checked,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.verdict == Verdict::Valid
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let total = self.dims.equation_count();
        match self.verdict {
            Verdict::Valid => write!(f, "Valid ({}/{} equations)", self.equations_checked, total),
            Verdict::Invalid => write!(
                f,
                "Invalid ({}/{} equations hold)",
                self.equations_checked - self.failures.len(),
                total
            ),
        }
    }
}

/// Checks `Σ_r U[a][r]·V[b][r]·W[c][r] = T[a][b][c]` for every triple.
pub fn verify_scheme(scheme: &BilinearScheme) -> VerificationReport {
    let dims = scheme.dims();
    let tensor = matmul_tensor(dims);
    let per_a: Vec<Vec<Failure>> = (0..dims.a_len())
        .into_par_iter()
        .map(|a| {
            let mut failures = Vec::new();
            for b in 0..dims.b_len() {
                for c in 0..dims.c_len() {
                    let computed = scheme.brent_sum(a, b, c);
                    let expected = tensor.coefficient(a, b, c);
                    if computed != expected {
                        failures.push(Failure {
                            a,
                            b,
                            c,
                            computed,
                            expected: u8::from(tensor.get(a, b, c)),
                        });
                    }
                }
            }
            failures
        })
        .collect();
    let failures = per_a.into_iter().flatten().collect();
    VerificationReport::from_failures(dims, failures, dims.equation_count())
}

/// Symbolic value of a program variable.
#[derive(Clone, Debug)]
enum Symbolic {
    /// Coefficients over the entries of `A` or of `B`.
    Linear(Vec<Coefficient>),
    /// `(n·m)×(m·p)` coefficients of `A_a·B_b`, row-major.
    Bilinear(Vec<Coefficient>),
}

impl Symbolic {
    fn coeffs(&self) -> &[Coefficient] {
        match self {
            Symbolic::Linear(v) | Symbolic::Bilinear(v) => v,
        }
    }

    fn rebuild(&self, coeffs: Vec<Coefficient>) -> Symbolic {
        match self {
            Symbolic::Linear(_) => Symbolic::Linear(coeffs),
            Symbolic::Bilinear(_) => Symbolic::Bilinear(coeffs),
        }
    }
}

fn unit_vector(len: usize, index: usize) -> Vec<Coefficient> {
    let mut v = vec![Coefficient::zero(); len];
    v[index] = Coefficient::one();
    v
}

/// Evaluates the program symbolically and compares each output's bilinear
/// form with the matrix-multiplication tensor.
pub fn verify_slp(slp: &StraightLineProgram) -> Result<VerificationReport, VerifyError> {
    slp.validate()?;
    let dims = slp.dims();
    let mut values: HashMap<Var, Symbolic> = HashMap::new();
    let value = |values: &HashMap<Var, Symbolic>, v: &Var| -> Symbolic {
        match *v {
            Var::A(i) => Symbolic::Linear(unit_vector(dims.a_len(), i)),
            Var::B(i) => Symbolic::Linear(unit_vector(dims.b_len(), i)),
            other => values[&other].clone(),
        }
    };
    for instr in slp.instructions() {
        let out = match instr {
            Instr::Lin {
                c1, src1, c2, src2, ..
            } => {
                let x = value(&values, src1);
                let y = value(&values, src2);
                let sum = x
                    .coeffs()
                    .iter()
                    .zip(y.coeffs())
                    .map(|(p, q)| &(c1 * p) + &(c2 * q))
                    .collect();
                x.rebuild(sum)
            }
            Instr::Scale { c, src, .. } => {
                let x = value(&values, src);
                let scaled = x.coeffs().iter().map(|p| c * p).collect();
                x.rebuild(scaled)
            }
            Instr::Mul { a, b, .. } => {
                let x = value(&values, a);
                let y = value(&values, b);
                let mut prod = Vec::with_capacity(dims.a_len() * dims.b_len());
                for p in x.coeffs() {
                    for q in y.coeffs() {
                        prod.push(p * q);
                    }
                }
                Symbolic::Bilinear(prod)
            }
        };
        values.insert(instr.dst(), out);
    }
    let tensor = matmul_tensor(dims);
    let mut failures = Vec::new();
    let outputs: Vec<Vec<Coefficient>> = slp
        .outputs()
        .iter()
        .map(|v| value(&values, v).coeffs().to_vec())
        .collect();
    for a in 0..dims.a_len() {
        for b in 0..dims.b_len() {
            for (c, form) in outputs.iter().enumerate() {
                let computed = form[a * dims.b_len() + b].clone();
                if computed != tensor.coefficient(a, b, c) {
                    failures.push(Failure {
                        a,
                        b,
                        c,
                        computed,
                        expected: u8::from(tensor.get(a, b, c)),
                    });
                }
            }
        }
    }
    Ok(VerificationReport::from_failures(
        dims,
        failures,
        dims.equation_count(),
    ))
}

/// Reads the scheme a program realizes: `U`/`V` columns from the operands of
/// the `r`-th product (in instruction order), `W` rows from the outputs.
pub fn extract_scheme(slp: &StraightLineProgram) -> Result<BilinearScheme, VerifyError> {
    slp.validate()?;
    let dims = slp.dims();
    let rank = slp.mul_count();
    let mut linear: HashMap<Var, Vec<Coefficient>> = HashMap::new();
    let mut u_cols = Vec::with_capacity(rank);
    let mut v_cols = Vec::with_capacity(rank);
    // Linear values and bilinear combinations (over products) share the map;
    // kinds keep them apart.
    let get = |linear: &HashMap<Var, Vec<Coefficient>>, v: &Var| -> Vec<Coefficient> {
        match *v {
            Var::A(i) => unit_vector(dims.a_len(), i),
            Var::B(i) => unit_vector(dims.b_len(), i),
            other => linear[&other].clone(),
        }
    };
    for instr in slp.instructions() {
        match instr {
            Instr::Lin {
                dst,
                c1,
                src1,
                c2,
                src2,
            } => {
                let x = get(&linear, src1);
                let y = get(&linear, src2);
                let sum = x
                    .iter()
                    .zip(&y)
                    .map(|(p, q)| &(c1 * p) + &(c2 * q))
                    .collect();
                linear.insert(*dst, sum);
            }
            Instr::Scale { dst, c, src } => {
                let x = get(&linear, src);
                linear.insert(*dst, x.iter().map(|p| c * p).collect());
            }
            Instr::Mul { dst, a, b } => {
                let r = u_cols.len();
                u_cols.push(get(&linear, a));
                v_cols.push(get(&linear, b));
                linear.insert(*dst, unit_vector(rank, r));
            }
        }
    }
    let w: Vec<Vec<Coefficient>> = slp.outputs().iter().map(|v| get(&linear, v)).collect();
    let transpose = |cols: &[Vec<Coefficient>], rows: usize| -> Vec<Vec<Coefficient>> {
        (0..rows)
            .map(|i| cols.iter().map(|col| col[i].clone()).collect())
            .collect()
    };
    let u = transpose(&u_cols, dims.a_len());
    let v = transpose(&v_cols, dims.b_len());
    Ok(BilinearScheme::new("extracted", dims, u, v, w)?)
}

/// What [`random_check`] examines.
#[derive(Clone, Copy, Debug)]
pub enum CheckTarget<'a> {
    Scheme(&'a BilinearScheme),
    Program(&'a StraightLineProgram),
}

/// Inputs on which the target and naive multiplication disagree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub trial: usize,
    pub a: Vec<u64>,
    pub b: Vec<u64>,
    pub expected: Vec<u64>,
    pub computed: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RandomCheckOutcome {
    Pass { trials: usize },
    Fail(Box<Witness>),
}

impl RandomCheckOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, RandomCheckOutcome::Pass { .. })
    }
}

fn eval_scheme_mod(
    scheme: &BilinearScheme,
    a: &[u64],
    b: &[u64],
    field: &ModP,
) -> Result<Vec<u64>, RingError> {
    let dims = scheme.dims();
    let lift = |rows: &[Vec<Coefficient>]| -> Result<Vec<Vec<u64>>, RingError> {
        rows.iter()
            .map(|row| row.iter().map(|c| field.constant(c)).collect())
            .collect()
    };
    let (u, v, w) = (lift(scheme.u())?, lift(scheme.v())?, lift(scheme.w())?);
    let mut products = Vec::with_capacity(scheme.rank());
    for r in 0..scheme.rank() {
        let mut left = 0;
        for (i, x) in a.iter().enumerate() {
            left = field.add(&left, &field.mul(&u[i][r], x)?)?;
        }
        let mut right = 0;
        for (i, y) in b.iter().enumerate() {
            right = field.add(&right, &field.mul(&v[i][r], y)?)?;
        }
        products.push(field.mul(&left, &right)?);
    }
    (0..dims.c_len())
        .map(|c| {
            products.iter().enumerate().try_fold(0u64, |acc, (r, m)| {
                field.add(&acc, &field.mul(&w[c][r], m)?)
            })
        })
        .collect()
}

/// Compares the target against naive multiplication on one forced all-zero
/// trial plus `trials` uniformly random pairs over `F_p`. Deterministic in
/// `seed`. A wrong scheme passes one random trial with probability at most
/// `2/p` (the error is a nonzero polynomial of degree 2).
pub fn random_check(
    target: CheckTarget<'_>,
    modulus: u64,
    trials: usize,
    seed: u64,
) -> Result<RandomCheckOutcome, VerifyError> {
    let field = ModP::new(modulus).map_err(|e| VerifyError::Parameter(e.to_string()))?;
    if trials == 0 {
        return Err(VerifyError::Parameter("trials must be at least 1".into()));
    }
    let dims = match target {
        CheckTarget::Scheme(s) => s.dims(),
        CheckTarget::Program(p) => {
            p.validate()?;
            p.dims()
        }
    };
    let to_param = |e: EngineError| VerifyError::Parameter(e.to_string());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..=trials {
        let (a, b) = if trial == 0 {
            (
                BlockMatrix::zeros(dims.n, dims.m, &field),
                BlockMatrix::zeros(dims.m, dims.p, &field),
            )
        } else {
            (
                BlockMatrix::random(dims.n, dims.m, &field, &mut rng),
                BlockMatrix::random(dims.m, dims.p, &field, &mut rng),
            )
        };
        let expected = naive_multiply(&a, &b, &field, None).map_err(to_param)?;
        let computed = match target {
            CheckTarget::Scheme(s) => eval_scheme_mod(s, a.as_slice(), b.as_slice(), &field)
                .map_err(|e| VerifyError::Parameter(e.to_string()))?,
            CheckTarget::Program(p) => eval_slp(p, &a, &b, &field, None)
                .map_err(to_param)?
                .as_slice()
                .to_vec(),
        };
        if computed != expected.as_slice() {
            return Ok(RandomCheckOutcome::Fail(Box::new(Witness {
                trial,
                a: a.as_slice().to_vec(),
                b: b.as_slice().to_vec(),
                expected: expected.as_slice().to_vec(),
                computed,
            })));
        }
    }
    Ok(RandomCheckOutcome::Pass { trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;

    #[test]
    fn scalar_scheme_is_valid() {
        let s =
            BilinearScheme::from_integers("u", Dims::square(1), &[vec![1]], &[vec![1]], &[vec![1]])
                .unwrap();
        let r = verify_scheme(&s);
        assert!(r.is_valid());
        assert_eq!(r.equations_checked, 1);
        assert_eq!(r.to_string(), "Valid (1/1 equations)");
    }

    #[test]
    fn wrong_sign_reports_every_failure() {
        let s = BilinearScheme::from_integers(
            "u",
            Dims::square(1),
            &[vec![1]],
            &[vec![1]],
            &[vec![-1]],
        )
        .unwrap();
        let r = verify_scheme(&s);
        assert_eq!(r.verdict, Verdict::Invalid);
        assert_eq!(
            r.failures,
            vec![Failure {
                a: 0,
                b: 0,
                c: 0,
                computed: Coefficient::from_int(-1),
                expected: 1
            }]
        );
    }

    #[test]
    fn product_of_products_is_not_extractable() {
        let slp = StraightLineProgram::new(
            Dims::square(1),
            vec![
                Instr::Mul {
                    dst: Var::M(0),
                    a: Var::A(0),
                    b: Var::B(0),
                },
                Instr::Mul {
                    dst: Var::M(1),
                    a: Var::M(0),
                    b: Var::M(0),
                },
            ],
            vec![Var::M(1)],
        );
        assert_eq!(
            extract_scheme(&slp).unwrap_err(),
            VerifyError::NonBilinear { index: 1 }
        );
        assert!(matches!(
            verify_slp(&slp),
            Err(VerifyError::NonBilinear { .. })
        ));
    }

    #[test]
    fn random_check_parameters() {
        let s = builtins::strassen();
        assert!(matches!(
            random_check(CheckTarget::Scheme(&s), 15, 3, 0),
            Err(VerifyError::Parameter(_))
        ));
        assert!(matches!(
            random_check(CheckTarget::Scheme(&s), 2, 3, 0),
            Err(VerifyError::Parameter(_))
        ));
        assert!(matches!(
            random_check(CheckTarget::Scheme(&s), 101, 0, 0),
            Err(VerifyError::Parameter(_))
        ));
    }

    #[test]
    fn zero_trial_agrees_even_for_wrong_schemes() {
        // Both sides vanish on zero inputs, so a wrong scheme is caught at trial ≥ 1.
        let s = builtins::strassen()
            .with_entry('W', 0, 0, Coefficient::from_int(-1))
            .unwrap();
        match random_check(CheckTarget::Scheme(&s), 1_000_003, 5, 9).unwrap() {
            RandomCheckOutcome::Fail(w) => assert!(w.trial >= 1),
            other => panic!("expected failure, got {other:?}"),
        }
    }
}
