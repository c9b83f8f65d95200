//! Test-only oracles and generators, written independently of the library's
//! verification code.
#![allow(dead_code)]

use mmscheme::{BilinearScheme, Coefficient, Dims};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type IntMatrix = Vec<Vec<i64>>;

/// Integer copy of a scheme's `U`, `V`, `W`.
pub fn to_int(scheme: &BilinearScheme) -> (IntMatrix, IntMatrix, IntMatrix) {
    let conv = |m: &[Vec<Coefficient>]| -> IntMatrix {
        m.iter()
            .map(|row| row.iter().map(|c| c.to_i64().expect("integral")).collect())
            .collect()
    };
    (conv(scheme.u()), conv(scheme.v()), conv(scheme.w()))
}

/// Exhaustive Brent check in machine integers, indexing the tensor directly
/// by `(i, j, l)` rather than through the library's tensor type.
pub fn brent_oracle(dims: Dims, u: &IntMatrix, v: &IntMatrix, w: &IntMatrix) -> bool {
    let (n, m, p) = (dims.n, dims.m, dims.p);
    let rank = u[0].len();
    for i in 0..n {
        for j in 0..m {
            for j2 in 0..m {
                for l in 0..p {
                    for i2 in 0..n {
                        for l2 in 0..p {
                            let a = i * m + j;
                            let b = j2 * p + l;
                            let c = i2 * p + l2;
                            let lhs: i64 = (0..rank).map(|r| u[a][r] * v[b][r] * w[c][r]).sum();
                            let rhs = i64::from(j == j2 && i == i2 && l == l2);
                            if lhs != rhs {
                                return false;
                            }
                        }
                    }
                }
            }
        }
    }
    true
}

/// Plain triple-loop product of row-major integer matrices.
pub fn naive_i64(a: &[i64], b: &[i64], n: usize, m: usize, p: usize) -> Vec<i64> {
    let mut c = vec![0; n * p];
    for i in 0..n {
        for l in 0..p {
            c[i * p + l] = (0..m).map(|j| a[i * m + j] * b[j * p + l]).sum();
        }
    }
    c
}

/// The rank-`nmp` definitional scheme: one product `A_ij·B_jl` per triple.
pub fn standard_scheme(dims: Dims) -> IntMatrix3 {
    let (n, m, p) = (dims.n, dims.m, dims.p);
    let rank = n * m * p;
    let mut u = vec![vec![0; rank]; n * m];
    let mut v = vec![vec![0; rank]; m * p];
    let mut w = vec![vec![0; rank]; n * p];
    let mut r = 0;
    for i in 0..n {
        for j in 0..m {
            for l in 0..p {
                u[i * m + j][r] = 1;
                v[j * p + l][r] = 1;
                w[i * p + l][r] = 1;
                r += 1;
            }
        }
    }
    (u, v, w)
}

pub type IntMatrix3 = (IntMatrix, IntMatrix, IntMatrix);

pub fn strassen_int() -> IntMatrix3 {
    // M0=(A0+A3)(B0+B3) M1=(A2+A3)B0 M2=A0(B1-B3) M3=A3(B2-B0)
    // M4=(A0+A1)B3 M5=(A2-A0)(B0+B1) M6=(A1-A3)(B2+B3)
    let u = vec![
        vec![1, 0, 1, 0, 1, -1, 0],
        vec![0, 0, 0, 0, 1, 0, 1],
        vec![0, 1, 0, 0, 0, 1, 0],
        vec![1, 1, 0, 1, 0, 0, -1],
    ];
    let v = vec![
        vec![1, 1, 0, -1, 0, 1, 0],
        vec![0, 0, 1, 0, 0, 1, 0],
        vec![0, 0, 0, 1, 0, 0, 1],
        vec![1, 0, -1, 0, 1, 0, 1],
    ];
    let w = vec![
        vec![1, 0, 0, 1, -1, 0, 1],
        vec![0, 0, 1, 0, 1, 0, 0],
        vec![0, 1, 0, 1, 0, 0, 0],
        vec![1, -1, 1, 0, 0, 1, 0],
    ];
    (u, v, w)
}

/// A random unimodular matrix and its inverse, as a product of a few
/// elementary row operations.
fn unimodular(size: usize, rng: &mut ChaCha8Rng) -> (IntMatrix, IntMatrix) {
    let identity = |s: usize| -> IntMatrix {
        (0..s)
            .map(|i| (0..s).map(|j| i64::from(i == j)).collect())
            .collect()
    };
    let mut x = identity(size);
    let mut inv = identity(size);
    if size < 2 {
        if rng.gen_bool(0.5) {
            x[0][0] = -1;
            inv[0][0] = -1;
        }
        return (x, inv);
    }
    for _ in 0..rng.gen_range(0..3) {
        let i = rng.gen_range(0..size);
        let mut j = rng.gen_range(0..size - 1);
        if j >= i {
            j += 1;
        }
        let e = if rng.gen_bool(0.5) { 1 } else { -1 };
        // x := E·x adds e·(row j) to row i; inv := inv·E⁻¹ subtracts e·(column i) from column j.
        let row_j = x[j].clone();
        for (xi, xj) in x[i].iter_mut().zip(row_j) {
            *xi += e * xj;
        }
        for row in inv.iter_mut() {
            row[j] -= e * row[i];
        }
    }
    (x, inv)
}

/// `AB = X⁻¹ ((X A Y)(Y⁻¹ B Z)) Z⁻¹`: rewrites a scheme for `A'B'` into one
/// for `AB`, then rescales each product by `±1` on its two operands.
pub fn random_equivalent(dims: Dims, base: &IntMatrix3, rng: &mut ChaCha8Rng) -> IntMatrix3 {
    let (n, m, p) = (dims.n, dims.m, dims.p);
    let (u0, v0, w0) = base;
    let rank = u0[0].len();
    let (x, xinv) = unimodular(n, rng);
    let (y, yinv) = unimodular(m, rng);
    let (z, zinv) = unimodular(p, rng);
    let mut u = vec![vec![0; rank]; n * m];
    let mut v = vec![vec![0; rank]; m * p];
    let mut w = vec![vec![0; rank]; n * p];
    for r in 0..rank {
        // A'_{i'j'} = Σ X[i'][i] A_ij Y[j][j']
        for (i2, j2) in (0..n).flat_map(|i| (0..m).map(move |j| (i, j))) {
            let coeff = u0[i2 * m + j2][r];
            if coeff == 0 {
                continue;
            }
            for i in 0..n {
                for j in 0..m {
                    u[i * m + j][r] += coeff * x[i2][i] * y[j][j2];
                }
            }
        }
        // B'_{j'l'} = Σ Y⁻¹[j'][j] B_jl Z[l][l']
        for (j2, l2) in (0..m).flat_map(|j| (0..p).map(move |l| (j, l))) {
            let coeff = v0[j2 * p + l2][r];
            if coeff == 0 {
                continue;
            }
            for j in 0..m {
                for l in 0..p {
                    v[j * p + l][r] += coeff * yinv[j2][j] * z[l][l2];
                }
            }
        }
        // C_il = Σ X⁻¹[i][i'] C'_{i'l'} Z⁻¹[l'][l]
        for i in 0..n {
            for l in 0..p {
                let mut acc = 0;
                for i2 in 0..n {
                    for l2 in 0..p {
                        acc += xinv[i][i2] * w0[i2 * p + l2][r] * zinv[l2][l];
                    }
                }
                w[i * p + l][r] = acc;
            }
        }
        let su = if rng.gen_bool(0.5) { 1 } else { -1 };
        let sv = if rng.gen_bool(0.5) { 1 } else { -1 };
        for row in u.iter_mut() {
            row[r] *= su;
        }
        for row in v.iter_mut() {
            row[r] *= sv;
        }
        for row in w.iter_mut() {
            row[r] *= su * sv;
        }
    }
    (u, v, w)
}

/// `count` seeded valid small schemes: transformed definitional schemes for
/// shapes up to `⟨2,3,2⟩` and transformed Strassen.
pub fn random_valid_schemes(count: usize, seed: u64) -> Vec<BilinearScheme> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shapes = [
        Dims::new(1, 2, 1),
        Dims::new(2, 1, 2),
        Dims::new(2, 2, 1),
        Dims::new(1, 2, 2),
        Dims::new(2, 2, 2),
        Dims::new(2, 3, 2),
        Dims::new(3, 2, 2),
    ];
    (0..count)
        .map(|k| {
            let (dims, base) = if k % 3 == 0 {
                (Dims::square(2), strassen_int())
            } else {
                let dims = shapes[rng.gen_range(0..shapes.len())];
                (dims, standard_scheme(dims))
            };
            let (u, v, w) = random_equivalent(dims, &base, &mut rng);
            assert!(
                brent_oracle(dims, &u, &v, &w),
                "generator produced an invalid scheme"
            );
            BilinearScheme::from_integers(format!("random-{k}"), dims, &u, &v, &w)
                .expect("transformed scheme has no empty column")
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Mutation {
    pub matrix: char,
    pub row: usize,
    pub column: usize,
    pub value: i64,
}

/// `count` seeded single-entry mutations of nonzero entries: sign flip,
/// zeroing, or a ±1 perturbation (skipping perturbations that yield zero).
pub fn random_mutations(scheme: &BilinearScheme, count: usize, seed: u64) -> Vec<Mutation> {
    let (u, v, w) = to_int(scheme);
    let mut nonzero = Vec::new();
    for (label, mat) in [('U', &u), ('V', &v), ('W', &w)] {
        for (row, entries) in mat.iter().enumerate() {
            for (column, &x) in entries.iter().enumerate() {
                if x != 0 {
                    nonzero.push((label, row, column, x));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let (matrix, row, column, x) = nonzero[rng.gen_range(0..nonzero.len())];
            let value = match rng.gen_range(0..3) {
                0 => -x,
                1 => 0,
                _ => {
                    let d = if rng.gen_bool(0.5) { 1 } else { -1 };
                    if x + d == 0 {
                        x - d
                    } else {
                        x + d
                    }
                }
            };
            Mutation {
                matrix,
                row,
                column,
                value,
            }
        })
        .collect()
}

pub fn apply_int(base: &IntMatrix3, mutation: &Mutation) -> IntMatrix3 {
    let (mut u, mut v, mut w) = base.clone();
    let target = match mutation.matrix {
        'U' => &mut u,
        'V' => &mut v,
        _ => &mut w,
    };
    target[mutation.row][mutation.column] = mutation.value;
    (u, v, w)
}
