//! Bilinear schemes and the matrix-multiplication tensor they must reproduce.
//!
//! Matrix entries use row-major compact indexing: for an `n×m` matrix `A`,
//! entry `(i, j)` is `A_{m·i + j}`, so a `3×3` matrix is numbered
//! `A_0 .. A_8` across rows.

use std::fmt;

use thiserror::Error;

use crate::coeff::Coefficient;

/// Shape `⟨n, m, p⟩` of the product of an `n×m` and an `m×p` matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dims {
    pub n: usize,
    pub m: usize,
    pub p: usize,
}

impl Dims {
    pub const fn new(n: usize, m: usize, p: usize) -> Self {
        Dims { n, m, p }
    }

    pub const fn square(s: usize) -> Self {
        Dims { n: s, m: s, p: s }
    }

    /// Number of entries of `A` (`n·m`).
    pub const fn a_len(&self) -> usize {
        self.n * self.m
    }

    /// Number of entries of `B` (`m·p`).
    pub const fn b_len(&self) -> usize {
        self.m * self.p
    }

    /// Number of entries of `C` (`n·p`).
    pub const fn c_len(&self) -> usize {
        self.n * self.p
    }

    /// Number of Brent equations, one per `(a, b, c)` triple.
    pub const fn equation_count(&self) -> usize {
        self.a_len() * self.b_len() * self.c_len()
    }

    pub const fn is_square(&self) -> bool {
        self.n == self.m && self.m == self.p
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{},{}>", self.n, self.m, self.p)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemeError {
    #[error("dimensions must be positive, got {0}")]
    ZeroDimension(Dims),
    #[error("rank must be positive")]
    ZeroRank,
    #[error("{matrix} has {found} rows, expected {expected} for {dims}")]
    RowCount {
        matrix: char,
        dims: Dims,
        expected: usize,
        found: usize,
    },
    #[error("{matrix} row {row} has {found} columns, expected rank {rank}")]
    ColumnCount {
        matrix: char,
        row: usize,
        rank: usize,
        found: usize,
    },
    #[error("{matrix} column {column} is all zero; product M{column} would be unused")]
    ZeroColumn { matrix: char, column: usize },
}

/// A rank-`R` bilinear algorithm for `⟨n, m, p⟩`.
///
/// Product `M_r = (Σ_a U[a][r]·A_a) · (Σ_b V[b][r]·B_b)` and output
/// `C_c = Σ_r W[c][r]·M_r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BilinearScheme {
    name: String,
    dims: Dims,
    rank: usize,
    u: Vec<Vec<Coefficient>>,
    v: Vec<Vec<Coefficient>>,
    w: Vec<Vec<Coefficient>>,
}

impl BilinearScheme {
    pub fn new(
        name: impl Into<String>,
        dims: Dims,
        u: Vec<Vec<Coefficient>>,
        v: Vec<Vec<Coefficient>>,
        w: Vec<Vec<Coefficient>>,
    ) -> Result<Self, SchemeError> {
        if dims.n == 0 || dims.m == 0 || dims.p == 0 {
            return Err(SchemeError::ZeroDimension(dims));
        }
        let rank = u.first().map(Vec::len).unwrap_or(0);
        if rank == 0 {
            return Err(SchemeError::ZeroRank);
        }
        for (label, matrix, rows) in [
            ('U', &u, dims.a_len()),
            ('V', &v, dims.b_len()),
            ('W', &w, dims.c_len()),
        ] {
            if matrix.len() != rows {
                return Err(SchemeError::RowCount {
                    matrix: label,
                    dims,
                    expected: rows,
                    found: matrix.len(),
                });
            }
            for (row, entries) in matrix.iter().enumerate() {
                if entries.len() != rank {
                    return Err(SchemeError::ColumnCount {
                        matrix: label,
                        row,
                        rank,
                        found: entries.len(),
                    });
                }
            }
            for column in 0..rank {
                if matrix.iter().all(|row| row[column].is_zero()) {
                    return Err(SchemeError::ZeroColumn {
                        matrix: label,
                        column,
                    });
                }
            }
        }
        Ok(BilinearScheme {
            name: name.into(),
            dims,
            rank,
            u,
            v,
            w,
        })
    }

    /// Builds a scheme from integer matrices.
    pub fn from_integers(
        name: impl Into<String>,
        dims: Dims,
        u: &[Vec<i64>],
        v: &[Vec<i64>],
        w: &[Vec<i64>],
    ) -> Result<Self, SchemeError> {
        let lift = |m: &[Vec<i64>]| -> Vec<Vec<Coefficient>> {
            m.iter()
                .map(|row| row.iter().map(|&x| Coefficient::from_int(x)).collect())
                .collect()
        };
        Self::new(name, dims, lift(u), lift(v), lift(w))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn u(&self) -> &[Vec<Coefficient>] {
        &self.u
    }

    pub fn v(&self) -> &[Vec<Coefficient>] {
        &self.v
    }

    pub fn w(&self) -> &[Vec<Coefficient>] {
        &self.w
    }

    /// Column `r` of `U`: the A-side linear form of product `M_r`.
    pub fn u_column(&self, r: usize) -> Vec<Coefficient> {
        self.u.iter().map(|row| row[r].clone()).collect()
    }

    /// Column `r` of `V`: the B-side linear form of product `M_r`.
    pub fn v_column(&self, r: usize) -> Vec<Coefficient> {
        self.v.iter().map(|row| row[r].clone()).collect()
    }

    /// `Σ_r U[a][r]·V[b][r]·W[c][r]`, the left-hand side of one Brent equation.
    pub fn brent_sum(&self, a: usize, b: usize, c: usize) -> Coefficient {
        let (ua, vb, wc) = (&self.u[a], &self.v[b], &self.w[c]);
        let mut acc = Coefficient::zero();
        for r in 0..self.rank {
            if ua[r].is_zero() || vb[r].is_zero() || wc[r].is_zero() {
                continue;
            }
            acc = acc + &(&ua[r] * &vb[r]) * &wc[r];
        }
        acc
    }

    /// `true` when every coefficient is an integer (required by the file format).
    pub fn is_integral(&self) -> bool {
        [&self.u, &self.v, &self.w]
            .iter()
            .all(|m| m.iter().flatten().all(Coefficient::is_integer))
    }

    /// Returns a copy with entry `(row, column)` of `U`, `V` or `W` replaced.
    /// Fails if the replacement empties a column.
    pub fn with_entry(
        &self,
        matrix: char,
        row: usize,
        column: usize,
        value: Coefficient,
    ) -> Result<Self, SchemeError> {
        let mut u = self.u.clone();
        let mut v = self.v.clone();
        let mut w = self.w.clone();
        let target = match matrix {
            'U' => &mut u,
            'V' => &mut v,
            'W' => &mut w,
            other => panic!("unknown scheme matrix {other}"),
        };
        target[row][column] = value;
        Self::new(self.name.clone(), self.dims, u, v, w)
    }
}

/// The `⟨n, m, p⟩` matrix-multiplication tensor.
///
/// `T[a][b][c] = 1` exactly when `a = m·i + j`, `b = p·j + l`, `c = p·i + l`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatMulTensor {
    dims: Dims,
    entries: Vec<bool>,
}

impl MatMulTensor {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> bool {
        let d = self.dims;
        self.entries[(a * d.b_len() + b) * d.c_len() + c]
    }

    /// Coefficient view of `T[a][b][c]` (0 or 1).
    pub fn coefficient(&self, a: usize, b: usize, c: usize) -> Coefficient {
        if self.get(a, b, c) {
            Coefficient::one()
        } else {
            Coefficient::zero()
        }
    }

    pub fn nonzero_count(&self) -> usize {
        self.entries.iter().filter(|&&e| e).count()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Closed-form test for `T[a][b][c]` without materializing the tensor.
pub fn matmul_tensor_entry(dims: Dims, a: usize, b: usize, c: usize) -> bool {
    let (i, j) = (a / dims.m, a % dims.m);
    let (k, l) = (b / dims.p, b % dims.p);
    let (s, t) = (c / dims.p, c % dims.p);
    j == k && i == s && l == t
}

pub fn matmul_tensor(dims: Dims) -> MatMulTensor {
    assert!(
        dims.n > 0 && dims.m > 0 && dims.p > 0,
        "matmul tensor needs positive dimensions, got {dims}"
    );
    let mut entries = vec![false; dims.equation_count()];
    for i in 0..dims.n {
        for j in 0..dims.m {
            for l in 0..dims.p {
                let (a, b, c) = (dims.m * i + j, dims.p * j + l, dims.p * i + l);
                entries[(a * dims.b_len() + b) * dims.c_len() + c] = true;
            }
        }
    }
    MatMulTensor { dims, entries }
}

/// Additions split by the side they happen on, plus the multiplication count.
///
/// `scalings` counts multiplications by constants other than `±1`; they are
/// not additions and are never folded into `adds_total`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct OpCountReport {
    pub adds_a: usize,
    pub adds_b: usize,
    pub adds_c: usize,
    pub adds_total: usize,
    pub muls: usize,
    pub scalings: usize,
}

impl OpCountReport {
    pub fn new(adds_a: usize, adds_b: usize, adds_c: usize, muls: usize, scalings: usize) -> Self {
        OpCountReport {
            adds_a,
            adds_b,
            adds_c,
            adds_total: adds_a + adds_b + adds_c,
            muls,
            scalings,
        }
    }
}

impl fmt::Display for OpCountReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "additions: {} (A:{} B:{} C:{}), multiplications: {}",
            self.adds_total, self.adds_a, self.adds_b, self.adds_c, self.muls
        )?;
        if self.scalings > 0 {
            write!(f, ", scalings: {}", self.scalings)?;
        }
        Ok(())
    }
}

/// Scalar multiplications a single linear form costs when accumulated left to
/// right: one per non-unit coefficient, plus a negation for a lone `-1` term.
pub(crate) fn form_scalings<'a>(coeffs: impl Iterator<Item = &'a Coefficient>) -> usize {
    let nonzero: Vec<_> = coeffs.filter(|c| !c.is_zero()).collect();
    let mut count = nonzero.iter().filter(|c| !c.is_unit()).count();
    if nonzero.len() == 1 && nonzero[0].is_minus_one() {
        count += 1;
    }
    count
}

/// Additions needed to evaluate every linear form of `scheme` independently.
pub fn naive_addition_count(scheme: &BilinearScheme) -> OpCountReport {
    let nnz_minus_one = |col: Vec<&Coefficient>| col.iter().filter(|c| !c.is_zero()).count() - 1;
    let mut adds_a = 0;
    let mut adds_b = 0;
    let mut scalings = 0;
    for r in 0..scheme.rank() {
        let ucol: Vec<_> = scheme.u().iter().map(|row| &row[r]).collect();
        let vcol: Vec<_> = scheme.v().iter().map(|row| &row[r]).collect();
        scalings += form_scalings(ucol.iter().copied()) + form_scalings(vcol.iter().copied());
        adds_a += nnz_minus_one(ucol);
        adds_b += nnz_minus_one(vcol);
    }
    let mut adds_c = 0;
    for row in scheme.w() {
        let nnz = row.iter().filter(|c| !c.is_zero()).count();
        // An output with no contributing product is the constant 0: no additions.
        adds_c += nnz.saturating_sub(1);
        scalings += form_scalings(row.iter());
    }
    OpCountReport::new(adds_a, adds_b, adds_c, scheme.rank(), scalings)
}
