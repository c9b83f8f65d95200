//! Dense row-major matrices with zero-padding metadata.

use rand::Rng;

use super::ring::ScalarRing;

/// Dense matrix whose stored size may exceed its logical size; the extra
/// rows and columns are zero padding.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockMatrix<E> {
    rows: usize,
    cols: usize,
    logical_rows: usize,
    logical_cols: usize,
    data: Vec<E>,
}

impl<E: Clone> BlockMatrix<E> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<E>) -> Self {
        assert_eq!(
            data.len(),
            rows * cols,
            "data length does not match {rows}x{cols}"
        );
        BlockMatrix {
            rows,
            cols,
            logical_rows: rows,
            logical_cols: cols,
            data,
        }
    }

    pub fn filled(rows: usize, cols: usize, value: E) -> Self {
        Self::from_vec(rows, cols, vec![value; rows * cols])
    }

    pub fn zeros<R: ScalarRing<Elem = E>>(rows: usize, cols: usize, ring: &R) -> Self {
        Self::filled(rows, cols, ring.zero())
    }

    pub fn identity<R: ScalarRing<Elem = E>>(size: usize, ring: &R, one: E) -> Self {
        let mut m = Self::zeros(size, size, ring);
        for i in 0..size {
            m.set(i, i, one.clone());
        }
        m
    }

    pub fn random<R: ScalarRing<Elem = E>, G: Rng + ?Sized>(
        rows: usize,
        cols: usize,
        ring: &R,
        rng: &mut G,
    ) -> Self {
        let data = (0..rows * cols).map(|_| ring.sample(rng)).collect();
        Self::from_vec(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Size before padding.
    pub fn logical_dims(&self) -> (usize, usize) {
        (self.logical_rows, self.logical_cols)
    }

    pub fn is_padded(&self) -> bool {
        self.rows != self.logical_rows || self.cols != self.logical_cols
    }

    pub fn get(&self, r: usize, c: usize) -> &E {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: E) {
        self.data[r * self.cols + c] = value;
    }

    pub fn as_slice(&self) -> &[E] {
        &self.data
    }

    /// Embeds the matrix in the top-left corner of a `rows×cols` zero matrix.
    pub fn pad_to(&self, rows: usize, cols: usize, zero: E) -> Self {
        assert!(
            rows >= self.rows && cols >= self.cols,
            "padding cannot shrink"
        );
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                if r < self.rows && c < self.cols {
                    data.push(self.get(r, c).clone());
                } else {
                    data.push(zero.clone());
                }
            }
        }
        BlockMatrix {
            rows,
            cols,
            logical_rows: self.logical_rows,
            logical_cols: self.logical_cols,
            data,
        }
    }

    /// Drops the padding region.
    pub fn strip(&self) -> Self {
        self.submatrix(0, 0, self.logical_rows, self.logical_cols)
    }

    /// Same storage, with the logical size reset to `rows×cols`.
    pub fn with_logical_dims(mut self, rows: usize, cols: usize) -> Self {
        assert!(rows <= self.rows && cols <= self.cols);
        self.logical_rows = rows;
        self.logical_cols = cols;
        self
    }

    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in r0..r0 + rows {
            data.extend_from_slice(&self.data[r * self.cols + c0..r * self.cols + c0 + cols]);
        }
        Self::from_vec(rows, cols, data)
    }

    /// Splits into a `grid_rows × grid_cols` grid of equal blocks, row-major.
    pub fn split(&self, grid_rows: usize, grid_cols: usize) -> Vec<Self> {
        let (h, w) = (self.rows / grid_rows, self.cols / grid_cols);
        let mut blocks = Vec::with_capacity(grid_rows * grid_cols);
        for i in 0..grid_rows {
            for j in 0..grid_cols {
                blocks.push(self.submatrix(i * h, j * w, h, w));
            }
        }
        blocks
    }

    /// Inverse of [`BlockMatrix::split`].
    pub fn assemble(blocks: &[Self], grid_rows: usize, grid_cols: usize) -> Self {
        assert_eq!(blocks.len(), grid_rows * grid_cols);
        let (h, w) = (blocks[0].rows, blocks[0].cols);
        let (rows, cols) = (h * grid_rows, w * grid_cols);
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..grid_rows {
            for r in 0..h {
                for j in 0..grid_cols {
                    let b = &blocks[i * grid_cols + j];
                    data.extend_from_slice(&b.data[r * w..(r + 1) * w]);
                }
            }
        }
        Self::from_vec(rows, cols, data)
    }

    pub fn map<F: Fn(&E) -> T, T: Clone>(&self, f: F) -> BlockMatrix<T> {
        BlockMatrix {
            rows: self.rows,
            cols: self.cols,
            logical_rows: self.logical_rows,
            logical_cols: self.logical_cols,
            data: self.data.iter().map(f).collect(),
        }
    }
}
