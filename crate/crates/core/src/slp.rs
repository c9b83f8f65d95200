//! Straight-line programs: branch-free SSA schedules realizing a scheme.
//!
//! Instructions are binary linear combinations ([`Instr::Lin`]), scalings
//! ([`Instr::Scale`]) and products ([`Instr::Mul`]). Every value carries a
//! [`Kind`]: linear in the entries of `A`, linear in the entries of `B`, or
//! bilinear (a combination of products). Products take one value of each
//! linear kind; everything else combines values of a single kind.
//!
//! Besides the named variables (`A_i`, `B_i`, `t_i`, `u_i`, `v_i`, `M_i`,
//! `C_i`) a program may use anonymous temporaries ([`Var::Tmp`]). Each is
//! consumed exactly once and exists only to fold a multi-term line into a
//! chain of binary instructions. The textual form never shows them: a chain
//! is rendered as the flat combination it computes (see [`Line`]).

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::coeff::Coefficient;
use crate::scheme::{BilinearScheme, Dims, OpCountReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    A(usize),
    B(usize),
    T(usize),
    U(usize),
    V(usize),
    M(usize),
    C(usize),
    Tmp(usize),
}

impl Var {
    pub fn is_tmp(&self) -> bool {
        matches!(self, Var::Tmp(_))
    }

    pub fn is_input(&self) -> bool {
        matches!(self, Var::A(_) | Var::B(_))
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::A(i) => write!(f, "A{i}"),
            Var::B(i) => write!(f, "B{i}"),
            Var::T(i) => write!(f, "t{i}"),
            Var::U(i) => write!(f, "u{i}"),
            Var::V(i) => write!(f, "v{i}"),
            Var::M(i) => write!(f, "M{i}"),
            Var::C(i) => write!(f, "C{i}"),
            Var::Tmp(i) => write!(f, "_{i}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    /// Linear form in the entries of `A`.
    ALinear,
    /// Linear form in the entries of `B`.
    BLinear,
    /// Linear combination of products.
    Bilinear,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::ALinear => "A-linear",
            Kind::BLinear => "B-linear",
            Kind::Bilinear => "bilinear",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instr {
    /// `dst := c1·src1 + c2·src2`, both coefficients nonzero.
    Lin {
        dst: Var,
        c1: Coefficient,
        src1: Var,
        c2: Coefficient,
        src2: Var,
    },
    /// `dst := c·src` with `c ∉ {0, 1}`.
    Scale { dst: Var, c: Coefficient, src: Var },
    /// `dst := a · b`.
    Mul { dst: Var, a: Var, b: Var },
}

impl Instr {
    pub fn dst(&self) -> Var {
        match self {
            Instr::Lin { dst, .. } | Instr::Scale { dst, .. } | Instr::Mul { dst, .. } => *dst,
        }
    }

    pub fn sources(&self) -> Vec<Var> {
        match self {
            Instr::Lin { src1, src2, .. } => vec![*src1, *src2],
            Instr::Scale { src, .. } => vec![*src],
            Instr::Mul { a, b, .. } => vec![*a, *b],
        }
    }
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instr::Lin {
                dst,
                c1,
                src1,
                c2,
                src2,
            } => write!(f, "{dst} = {c1}*{src1} + {c2}*{src2}"),
            Instr::Scale { dst, c, src } => write!(f, "{dst} = {c}*{src}"),
            Instr::Mul { dst, a, b } => write!(f, "{dst} = {a} * {b}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SlpError {
    #[error("instruction {index}: `{var}` used before definition")]
    UseBeforeDefinition { index: usize, var: Var },
    #[error("instruction {index}: `{var}` assigned more than once")]
    DuplicateDefinition { index: usize, var: Var },
    #[error("instruction {index}: `{var}` is a predefined input")]
    AssignsInput { index: usize, var: Var },
    #[error("instruction {index}: input `{var}` out of range for {dims}")]
    InputOutOfRange { index: usize, var: Var, dims: Dims },
    #[error("instruction {index}: combines {left} `{src1}` with {right} `{src2}`")]
    KindMismatch {
        index: usize,
        src1: Var,
        left: Kind,
        src2: Var,
        right: Kind,
    },
    #[error(
        "instruction {index}: product needs (A-linear, B-linear) operands, got ({left}, {right})"
    )]
    MulOperandKind {
        index: usize,
        left: Kind,
        right: Kind,
    },
    #[error("instruction {index}: product destination `{var}` must be an M variable")]
    MulDestination { index: usize, var: Var },
    #[error("instruction {index}: coefficient {coeff} not allowed here")]
    BadCoefficient { index: usize, coeff: Coefficient },
    #[error("temporary `{var}` must be used exactly once, used {uses} times")]
    TemporaryUse { var: Var, uses: usize },
    #[error("program has {found} outputs, expected {expected}")]
    OutputCount { expected: usize, found: usize },
    #[error("output C{index} refers to undefined `{var}`")]
    UndefinedOutput { index: usize, var: Var },
    #[error("output C{index} is {kind}, expected bilinear")]
    OutputKind { index: usize, kind: Kind },
    #[error("`{0}` defined more than once")]
    DuplicateLine(Var),
    #[error("`{0}` = single unit term is a copy; only outputs may alias another value")]
    TrivialCopy(Var),
    #[error("zero coefficient on `{0}`")]
    ZeroTerm(Var),
    #[error("output C{0} is never defined")]
    MissingOutput(usize),
}

/// A straight-line program over the inputs `A_0..A_{nm-1}`, `B_0..B_{mp-1}`.
///
/// Construction with [`StraightLineProgram::new`] performs no checking;
/// [`StraightLineProgram::validate`] checks the SSA and kind rules in one
/// pass and [`StraightLineProgram::try_new`] combines the two.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StraightLineProgram {
    dims: Dims,
    instrs: Vec<Instr>,
    outputs: Vec<Var>,
}

impl StraightLineProgram {
    pub fn new(dims: Dims, instrs: Vec<Instr>, outputs: Vec<Var>) -> Self {
        StraightLineProgram {
            dims,
            instrs,
            outputs,
        }
    }

    pub fn try_new(dims: Dims, instrs: Vec<Instr>, outputs: Vec<Var>) -> Result<Self, SlpError> {
        let slp = Self::new(dims, instrs, outputs);
        slp.validate()?;
        Ok(slp)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn instructions(&self) -> &[Instr] {
        &self.instrs
    }

    /// Source of each output `C_0..C_{np-1}`.
    pub fn outputs(&self) -> &[Var] {
        &self.outputs
    }

    pub fn mul_count(&self) -> usize {
        self.instrs
            .iter()
            .filter(|i| matches!(i, Instr::Mul { .. }))
            .count()
    }

    fn input_kind(&self, var: Var) -> Option<Kind> {
        match var {
            Var::A(i) if i < self.dims.a_len() => Some(Kind::ALinear),
            Var::B(i) if i < self.dims.b_len() => Some(Kind::BLinear),
            _ => None,
        }
    }

    /// Checks SSA form, kinds, temporaries and outputs; returns the kind of
    /// every defined value.
    pub fn validate(&self) -> Result<HashMap<Var, Kind>, SlpError> {
        let dims = self.dims;
        let mut kinds: HashMap<Var, Kind> = HashMap::new();
        let mut tmp_uses: HashMap<Var, usize> = HashMap::new();
        let lookup =
            |kinds: &HashMap<Var, Kind>, index: usize, var: Var| -> Result<Kind, SlpError> {
                match var {
                    Var::A(_) | Var::B(_) => self
                        .input_kind(var)
                        .ok_or(SlpError::InputOutOfRange { index, var, dims }),
                    _ => kinds
                        .get(&var)
                        .copied()
                        .ok_or(SlpError::UseBeforeDefinition { index, var }),
                }
            };
        for (index, instr) in self.instrs.iter().enumerate() {
            let dst = instr.dst();
            if dst.is_input() {
                return Err(SlpError::AssignsInput { index, var: dst });
            }
            if kinds.contains_key(&dst) {
                return Err(SlpError::DuplicateDefinition { index, var: dst });
            }
            for src in instr.sources() {
                if src.is_tmp() {
                    *tmp_uses.entry(src).or_default() += 1;
                }
            }
            let kind = match instr {
                Instr::Lin {
                    c1, src1, c2, src2, ..
                } => {
                    for c in [c1, c2] {
                        if c.is_zero() {
                            return Err(SlpError::BadCoefficient {
                                index,
                                coeff: c.clone(),
                            });
                        }
                    }
                    let left = lookup(&kinds, index, *src1)?;
                    let right = lookup(&kinds, index, *src2)?;
                    if left != right {
                        return Err(SlpError::KindMismatch {
                            index,
                            src1: *src1,
                            left,
                            src2: *src2,
                            right,
                        });
                    }
                    left
                }
                Instr::Scale { c, src, .. } => {
                    if c.is_zero() || c.is_one() {
                        return Err(SlpError::BadCoefficient {
                            index,
                            coeff: c.clone(),
                        });
                    }
                    lookup(&kinds, index, *src)?
                }
                Instr::Mul { dst, a, b } => {
                    if !matches!(dst, Var::M(_)) {
                        return Err(SlpError::MulDestination { index, var: *dst });
                    }
                    let left = lookup(&kinds, index, *a)?;
                    let right = lookup(&kinds, index, *b)?;
                    if left != Kind::ALinear || right != Kind::BLinear {
                        return Err(SlpError::MulOperandKind { index, left, right });
                    }
                    Kind::Bilinear
                }
            };
            kinds.insert(dst, kind);
        }
        for (&var, &uses) in &tmp_uses {
            if uses != 1 {
                return Err(SlpError::TemporaryUse { var, uses });
            }
        }
        for var in kinds.keys().filter(|v| v.is_tmp()) {
            if !tmp_uses.contains_key(var) {
                return Err(SlpError::TemporaryUse { var: *var, uses: 0 });
            }
        }
        if self.outputs.len() != dims.c_len() {
            return Err(SlpError::OutputCount {
                expected: dims.c_len(),
                found: self.outputs.len(),
            });
        }
        for (index, &var) in self.outputs.iter().enumerate() {
            if var.is_tmp() {
                return Err(SlpError::TemporaryUse { var, uses: 2 });
            }
            let kind = match self.input_kind(var) {
                Some(k) => k,
                None => *kinds
                    .get(&var)
                    .ok_or(SlpError::UndefinedOutput { index, var })?,
            };
            if kind != Kind::Bilinear {
                return Err(SlpError::OutputKind { index, kind });
            }
        }
        Ok(kinds)
    }

    /// Best-effort kinds for counting; tolerates programs that fail validation.
    fn lenient_kinds(&self) -> HashMap<Var, Kind> {
        let mut kinds = HashMap::new();
        for instr in &self.instrs {
            let kind = match instr {
                Instr::Mul { .. } => Kind::Bilinear,
                _ => instr
                    .sources()
                    .into_iter()
                    .find_map(|s| self.input_kind(s).or_else(|| kinds.get(&s).copied()))
                    .unwrap_or(Kind::Bilinear),
            };
            kinds.insert(instr.dst(), kind);
        }
        kinds
    }

    /// Converts the program into one [`Line`] per named definition, expanding
    /// anonymous temporaries into the flat combination they compute.
    /// Outputs that alias another value become trailing `C_i = x` lines.
    pub fn lines(&self) -> Vec<Line> {
        let defs: HashMap<Var, &Instr> = self
            .instrs
            .iter()
            .filter(|i| i.dst().is_tmp())
            .map(|i| (i.dst(), i))
            .collect();
        fn expand_instr(
            instr: &Instr,
            scale: &Coefficient,
            defs: &HashMap<Var, &Instr>,
            out: &mut Vec<Term>,
        ) {
            match instr {
                Instr::Lin {
                    c1, src1, c2, src2, ..
                } => {
                    expand(*src1, &(scale * c1), defs, out);
                    expand(*src2, &(scale * c2), defs, out);
                }
                Instr::Scale { c, src, .. } => expand(*src, &(scale * c), defs, out),
                Instr::Mul { dst, .. } => out.push(Term::new(scale.clone(), *dst)),
            }
        }
        fn expand(var: Var, scale: &Coefficient, defs: &HashMap<Var, &Instr>, out: &mut Vec<Term>) {
            match defs.get(&var) {
                Some(instr) => expand_instr(instr, scale, defs, out),
                None => out.push(Term::new(scale.clone(), var)),
            }
        }
        let flat = |var: Var| {
            let mut terms = Vec::new();
            expand(var, &Coefficient::one(), &defs, &mut terms);
            terms
        };
        let mut lines = Vec::new();
        for instr in &self.instrs {
            let dst = instr.dst();
            if dst.is_tmp() {
                continue;
            }
            let rhs = match instr {
                Instr::Lin { .. } | Instr::Scale { .. } => {
                    let mut terms = Vec::new();
                    expand_instr(instr, &Coefficient::one(), &defs, &mut terms);
                    LineRhs::Combination(terms)
                }
                Instr::Mul { a, b, .. } => LineRhs::Product(flat(*a), flat(*b)),
            };
            lines.push(Line { dst, rhs });
        }
        for (c, &src) in self.outputs.iter().enumerate() {
            if src != Var::C(c) {
                lines.push(Line {
                    dst: Var::C(c),
                    rhs: LineRhs::Combination(vec![Term::new(Coefficient::one(), src)]),
                });
            }
        }
        lines
    }

    /// Builds a program from lines, folding each multi-term combination into
    /// a left-to-right chain of [`Instr::Lin`], then validates it.
    pub fn from_lines(dims: Dims, lines: &[Line]) -> Result<Self, SlpError> {
        let mut builder = SlpBuilder::new();
        let mut outputs: Vec<Option<Var>> = vec![None; dims.c_len()];
        let mut seen = HashSet::new();
        for line in lines {
            if !seen.insert(line.dst) {
                return Err(SlpError::DuplicateLine(line.dst));
            }
            match &line.rhs {
                LineRhs::Combination(terms) => {
                    let value = builder.chain(terms, Some(line.dst))?;
                    if value != line.dst && !matches!(line.dst, Var::C(_)) {
                        return Err(SlpError::TrivialCopy(line.dst));
                    }
                }
                LineRhs::Product(a, b) => {
                    let a = builder.chain(a, None)?;
                    let b = builder.chain(b, None)?;
                    builder.push(Instr::Mul {
                        dst: line.dst,
                        a,
                        b,
                    });
                }
            }
            if let Var::C(c) = line.dst {
                if c >= dims.c_len() {
                    return Err(SlpError::OutputCount {
                        expected: dims.c_len(),
                        found: c + 1,
                    });
                }
                outputs[c] = Some(match &line.rhs {
                    LineRhs::Combination(terms) if terms.len() == 1 && terms[0].coeff.is_one() => {
                        terms[0].var
                    }
                    _ => line.dst,
                });
            }
        }
        let outputs = outputs
            .into_iter()
            .enumerate()
            .map(|(c, v)| v.ok_or(SlpError::MissingOutput(c)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::try_new(dims, builder.finish(), outputs)
    }
}

/// One coefficient-variable pair of a line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub coeff: Coefficient,
    pub var: Var,
}

impl Term {
    pub fn new(coeff: Coefficient, var: Var) -> Self {
        Term { coeff, var }
    }

    pub fn unit(var: Var) -> Self {
        Term::new(Coefficient::one(), var)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LineRhs {
    Combination(Vec<Term>),
    Product(Vec<Term>, Vec<Term>),
}

/// A source-level definition such as `t3 = A7 - t0` or `M7 = (t1) * (u0)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Line {
    pub dst: Var,
    pub rhs: LineRhs,
}

/// Appends chains of instructions, numbering temporaries in creation order.
#[derive(Debug, Default)]
pub(crate) struct SlpBuilder {
    instrs: Vec<Instr>,
    next_tmp: usize,
}

impl SlpBuilder {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    fn fresh(&mut self) -> Var {
        self.next_tmp += 1;
        Var::Tmp(self.next_tmp - 1)
    }

    pub(crate) fn push(&mut self, instr: Instr) {
        self.instrs.push(instr);
    }

    /// Emits `Σ terms` as a left fold. Returns the variable holding the
    /// result: `dst` when given and at least one instruction was needed,
    /// otherwise the lone unit term itself or a fresh temporary.
    pub(crate) fn chain(&mut self, terms: &[Term], dst: Option<Var>) -> Result<Var, SlpError> {
        if let Some(t) = terms.iter().find(|t| t.coeff.is_zero()) {
            return Err(SlpError::ZeroTerm(t.var));
        }
        let last = terms.len().saturating_sub(1);
        match terms {
            [] => panic!("empty linear combination"),
            [only] if only.coeff.is_one() => Ok(only.var),
            [only] => {
                let out = dst.unwrap_or_else(|| self.fresh());
                self.push(Instr::Scale {
                    dst: out,
                    c: only.coeff.clone(),
                    src: only.var,
                });
                Ok(out)
            }
            [first, rest @ ..] => {
                let mut acc: Option<Var> = None;
                for (k, term) in rest.iter().enumerate() {
                    let out = match dst {
                        Some(d) if k + 1 == last => d,
                        _ => self.fresh(),
                    };
                    let instr = match acc {
                        None => Instr::Lin {
                            dst: out,
                            c1: first.coeff.clone(),
                            src1: first.var,
                            c2: term.coeff.clone(),
                            src2: term.var,
                        },
                        Some(prev) => Instr::Lin {
                            dst: out,
                            c1: Coefficient::one(),
                            src1: prev,
                            c2: term.coeff.clone(),
                            src2: term.var,
                        },
                    };
                    self.push(instr);
                    acc = Some(out);
                }
                Ok(acc.expect("at least two terms"))
            }
        }
    }

    pub(crate) fn finish(self) -> Vec<Instr> {
        self.instrs
    }
}

/// Terms of a dense coefficient vector, in index order.
pub(crate) fn dense_terms(coeffs: &[Coefficient], var: impl Fn(usize) -> Var) -> Vec<Term> {
    coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, c)| Term::new(c.clone(), var(i)))
        .collect()
}

/// Additions, products and scalings a program performs. Each [`Instr::Lin`]
/// is one addition, attributed to the side given by its destination's kind.
pub fn slp_addition_count(slp: &StraightLineProgram) -> OpCountReport {
    let kinds = slp.lenient_kinds();
    let (mut a, mut b, mut c, mut muls, mut scalings) = (0, 0, 0, 0, 0);
    for instr in slp.instructions() {
        match instr {
            Instr::Lin { dst, c1, c2, .. } => {
                match kinds[dst] {
                    Kind::ALinear => a += 1,
                    Kind::BLinear => b += 1,
                    Kind::Bilinear => c += 1,
                }
                scalings += [c1, c2].iter().filter(|k| !k.is_unit()).count();
            }
            Instr::Scale { .. } => scalings += 1,
            Instr::Mul { .. } => muls += 1,
        }
    }
    OpCountReport::new(a, b, c, muls, scalings)
}

/// Evaluates every linear form of `scheme` separately, accumulating left to
/// right in index order.
pub fn scheme_to_naive_slp(scheme: &BilinearScheme) -> StraightLineProgram {
    let dims = scheme.dims();
    let mut lines = Vec::with_capacity(scheme.rank() + dims.c_len());
    for r in 0..scheme.rank() {
        lines.push(Line {
            dst: Var::M(r),
            rhs: LineRhs::Product(
                dense_terms(&scheme.u_column(r), Var::A),
                dense_terms(&scheme.v_column(r), Var::B),
            ),
        });
    }
    for (c, row) in scheme.w().iter().enumerate() {
        let terms = dense_terms(row, Var::M);
        debug_assert!(!terms.is_empty(), "output C{c} has no products");
        lines.push(Line {
            dst: Var::C(c),
            rhs: LineRhs::Combination(terms),
        });
    }
    StraightLineProgram::from_lines(dims, &lines)
        .expect("a valid scheme always yields a well-formed program")
}
