//! Executing programs over matrices: one level ([`eval_slp`]), full
//! recursion ([`recursive_multiply`]) and the closed-form operation counts
//! the recursion must match.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::matrix::BlockMatrix;
use super::ring::{RingError, ScalarRing};
use crate::coeff::Coefficient;
use crate::slp::{Instr, Kind, SlpError, StraightLineProgram, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("malformed program: {0}")]
    Program(#[from] SlpError),
    #[error("recursion needs a square base scheme, got {0}")]
    NonSquareScheme(crate::scheme::Dims),
    #[error("degenerate recursion (rank = base²): muls = {muls}, adds = {adds}")]
    DegenerateRecursion { muls: u128, adds: u128 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

/// Exact counters of ring operations. Shared by reference between threads.
#[derive(Debug, Default)]
pub struct OpMeter {
    adds: AtomicU64,
    muls: AtomicU64,
    scales: AtomicU64,
    wall_nanos: AtomicU64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MeterCounts {
    pub scalar_adds: u64,
    pub scalar_muls: u64,
    pub scalar_scales: u64,
    pub wall_time: Duration,
}

impl OpMeter {
    pub fn new() -> Self {
        Self::default()
    }

    fn add(&self, n: u64) {
        self.adds.fetch_add(n, Ordering::Relaxed);
    }

    fn mul(&self, n: u64) {
        self.muls.fetch_add(n, Ordering::Relaxed);
    }

    fn scale(&self, n: u64) {
        self.scales.fetch_add(n, Ordering::Relaxed);
    }

    pub fn record_time(&self, elapsed: Duration) {
        self.wall_nanos
            .fetch_add(elapsed.as_nanos() as u64, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> MeterCounts {
        MeterCounts {
            scalar_adds: self.adds.load(Ordering::Relaxed),
            scalar_muls: self.muls.load(Ordering::Relaxed),
            scalar_scales: self.scales.load(Ordering::Relaxed),
            wall_time: Duration::from_nanos(self.wall_nanos.load(Ordering::Relaxed)),
        }
    }
}

/// Schoolbook product: `rows·inner·cols` multiplications and
/// `rows·cols·(inner − 1)` additions.
pub fn naive_multiply<R: ScalarRing>(
    a: &BlockMatrix<R::Elem>,
    b: &BlockMatrix<R::Elem>,
    ring: &R,
    meter: Option<&OpMeter>,
) -> Result<BlockMatrix<R::Elem>, EngineError> {
    if a.cols() != b.rows() {
        return Err(EngineError::Shape(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let (n, k, p) = (a.rows(), a.cols(), b.cols());
    let mut data = Vec::with_capacity(n * p);
    for i in 0..n {
        for j in 0..p {
            let mut acc = ring.mul(a.get(i, 0), b.get(0, j))?;
            for l in 1..k {
                acc = ring.add(&acc, &ring.mul(a.get(i, l), b.get(l, j))?)?;
            }
            data.push(acc);
        }
    }
    if let Some(m) = meter {
        m.mul((n * k * p) as u64);
        m.add((n * p * (k - 1)) as u64);
    }
    Ok(BlockMatrix::from_vec(n, p, data))
}

type Block<R> = BlockMatrix<<R as ScalarRing>::Elem>;

/// A program coefficient as the engine applies it.
#[derive(Clone, Debug)]
enum Factor<E> {
    One,
    MinusOne,
    Other(E),
}

impl<E: Clone> Factor<E> {
    fn new<R: ScalarRing<Elem = E>>(ring: &R, c: &Coefficient) -> Result<Self, RingError> {
        Ok(if c.is_one() {
            Factor::One
        } else if c.is_minus_one() {
            Factor::MinusOne
        } else {
            Factor::Other(ring.constant(c)?)
        })
    }
}

/// `f·x`; free for `f = 1`, otherwise one scaling (a negation counts as one).
fn scale_elem<R: ScalarRing>(
    ring: &R,
    f: &Factor<R::Elem>,
    x: &R::Elem,
) -> Result<R::Elem, RingError> {
    match f {
        Factor::One => Ok(x.clone()),
        Factor::MinusOne => ring.neg(x),
        Factor::Other(c) => ring.mul(c, x),
    }
}

/// `f1·x + f2·y` with one addition; `±1` factors become add/sub.
fn lin_elem<R: ScalarRing>(
    ring: &R,
    f1: &Factor<R::Elem>,
    x: &R::Elem,
    f2: &Factor<R::Elem>,
    y: &R::Elem,
) -> Result<R::Elem, RingError> {
    use Factor::*;
    match (f1, f2) {
        (One, One) => ring.add(x, y),
        (One, MinusOne) => ring.sub(x, y),
        (MinusOne, One) => ring.sub(y, x),
        (MinusOne, MinusOne) => ring.sub(&ring.neg(x)?, y),
        (MinusOne, Other(_)) => ring.sub(&scale_elem(ring, f2, y)?, x),
        (_, MinusOne) => ring.sub(&scale_elem(ring, f1, x)?, y),
        _ => ring.add(&scale_elem(ring, f1, x)?, &scale_elem(ring, f2, y)?),
    }
}

/// Scalings [`lin_elem`] performs per element.
fn lin_scalings<E>(f1: &Factor<E>, f2: &Factor<E>) -> u64 {
    use Factor::*;
    match (f1, f2) {
        (One | MinusOne, One | MinusOne) => u64::from(matches!((f1, f2), (MinusOne, MinusOne))),
        (Other(_), Other(_)) => 2,
        _ => 1,
    }
}

/// One non-product instruction over value slots.
#[derive(Clone, Debug)]
enum Step<E> {
    Lin {
        dst: usize,
        f1: Factor<E>,
        src1: usize,
        f2: Factor<E>,
        src2: usize,
    },
    Scale {
        dst: usize,
        f: Factor<E>,
        src: usize,
    },
}

/// A validated program compiled for one ring: variables become slot indices
/// (inputs first) and coefficients become ring elements. Built once and
/// reused at every recursion level.
#[derive(Clone, Debug)]
struct Plan<E> {
    dims: crate::scheme::Dims,
    slots: usize,
    linear: Vec<Step<E>>,
    products: Vec<(usize, usize, usize)>,
    bilinear: Vec<Step<E>>,
    outputs: Vec<usize>,
}

impl<E: Clone> Plan<E> {
    fn new<R: ScalarRing<Elem = E>>(
        slp: &StraightLineProgram,
        ring: &R,
    ) -> Result<Self, EngineError> {
        let kinds = slp.validate()?;
        let dims = slp.dims();
        let inputs = dims.a_len() + dims.b_len();
        let mut index: HashMap<Var, usize> = HashMap::new();
        let slot = |v: Var, index: &mut HashMap<Var, usize>| -> usize {
            match v {
                Var::A(i) => i,
                Var::B(i) => dims.a_len() + i,
                other => {
                    let next = inputs + index.len();
                    *index.entry(other).or_insert(next)
                }
            }
        };
        let mut plan = Plan {
            dims,
            slots: 0,
            linear: Vec::new(),
            products: Vec::new(),
            bilinear: Vec::new(),
            outputs: Vec::new(),
        };
        for instr in slp.instructions() {
            let step = match instr {
                Instr::Mul { dst, a, b } => {
                    let (a, b) = (slot(*a, &mut index), slot(*b, &mut index));
                    plan.products.push((slot(*dst, &mut index), a, b));
                    continue;
                }
                Instr::Lin {
                    dst,
                    c1,
                    src1,
                    c2,
                    src2,
                } => Step::Lin {
                    src1: slot(*src1, &mut index),
                    src2: slot(*src2, &mut index),
                    dst: slot(*dst, &mut index),
                    f1: Factor::new(ring, c1)?,
                    f2: Factor::new(ring, c2)?,
                },
                Instr::Scale { dst, c, src } => Step::Scale {
                    src: slot(*src, &mut index),
                    dst: slot(*dst, &mut index),
                    f: Factor::new(ring, c)?,
                },
            };
            if kinds[&instr.dst()] == Kind::Bilinear {
                plan.bilinear.push(step);
            } else {
                plan.linear.push(step);
            }
        }
        plan.outputs = slp.outputs().iter().map(|v| slot(*v, &mut index)).collect();
        plan.slots = inputs + index.len();
        Ok(plan)
    }
}

fn run_step<R: ScalarRing>(
    ring: &R,
    step: &Step<R::Elem>,
    values: &mut [Option<Block<R>>],
    meter: Option<&OpMeter>,
) -> Result<(), EngineError> {
    let get = |i: usize| values[i].as_ref().expect("plan defines every source first");
    let (dst, out) = match step {
        Step::Lin {
            dst,
            f1,
            src1,
            f2,
            src2,
        } => {
            let (x, y) = (get(*src1), get(*src2));
            let data = x
                .as_slice()
                .iter()
                .zip(y.as_slice())
                .map(|(a, b)| lin_elem(ring, f1, a, f2, b))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(m) = meter {
                m.add(data.len() as u64);
                m.scale(data.len() as u64 * lin_scalings(f1, f2));
            }
            (*dst, BlockMatrix::from_vec(x.rows(), x.cols(), data))
        }
        Step::Scale { dst, f, src } => {
            let x = get(*src);
            let data = x
                .as_slice()
                .iter()
                .map(|a| scale_elem(ring, f, a))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(m) = meter {
                m.scale(data.len() as u64 * u64::from(!matches!(f, Factor::One)));
            }
            (*dst, BlockMatrix::from_vec(x.rows(), x.cols(), data))
        }
    };
    values[dst] = Some(out);
    Ok(())
}

/// Smallest block size at which products of one level run on the rayon pool.
const PARALLEL_BLOCK_MIN: usize = 9;

/// One level of the program over block-partitioned operands. `A` is cut into
/// an `n×m` grid and `B` into an `m×p` grid; products are delegated to `sub`.
///
/// Values of the two linear kinds never depend on products, so all linear
/// instructions run first, then every product (concurrently for large
/// blocks), then the bilinear instructions. The result is identical to
/// sequential execution.
fn apply_level<R, F>(
    plan: &Plan<R::Elem>,
    a: &Block<R>,
    b: &Block<R>,
    ring: &R,
    meter: Option<&OpMeter>,
    sub: &F,
) -> Result<Block<R>, EngineError>
where
    R: ScalarRing,
    F: Fn(&Block<R>, &Block<R>) -> Result<Block<R>, EngineError> + Sync,
{
    let d = plan.dims;
    if !a.rows().is_multiple_of(d.n)
        || !a.cols().is_multiple_of(d.m)
        || !b.rows().is_multiple_of(d.m)
        || !b.cols().is_multiple_of(d.p)
    {
        return Err(EngineError::Shape(format!(
            "{}x{} times {}x{} does not split into a {} grid",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols(),
            d
        )));
    }
    if a.cols() / d.m != b.rows() / d.m {
        return Err(EngineError::Shape(format!(
            "inner block sizes differ: {} vs {}",
            a.cols() / d.m,
            b.rows() / d.m
        )));
    }
    let mut values: Vec<Option<Block<R>>> = a
        .split(d.n, d.m)
        .into_iter()
        .chain(b.split(d.m, d.p))
        .map(Some)
        .collect();
    values.resize(plan.slots, None);
    for step in &plan.linear {
        run_step(ring, step, &mut values, meter)?;
    }
    let get = |i: usize| {
        values[i]
            .as_ref()
            .expect("plan defines every operand first")
    };
    let results: Vec<Block<R>> = if a.rows() / d.n >= PARALLEL_BLOCK_MIN {
        plan.products
            .par_iter()
            .map(|&(_, x, y)| sub(get(x), get(y)))
            .collect::<Result<_, _>>()?
    } else {
        plan.products
            .iter()
            .map(|&(_, x, y)| sub(get(x), get(y)))
            .collect::<Result<_, _>>()?
    };
    for (&(dst, _, _), value) in plan.products.iter().zip(results) {
        values[dst] = Some(value);
    }
    for step in &plan.bilinear {
        run_step(ring, step, &mut values, meter)?;
    }
    let c_blocks: Vec<Block<R>> = plan
        .outputs
        .iter()
        .map(|&i| values[i].clone().expect("outputs are defined"))
        .collect();
    Ok(BlockMatrix::assemble(&c_blocks, d.n, d.p))
}

/// Runs the program once over `A` (split `n×m`) and `B` (split `m×p`),
/// multiplying blocks naively.
pub fn eval_slp<R: ScalarRing>(
    slp: &StraightLineProgram,
    a: &Block<R>,
    b: &Block<R>,
    ring: &R,
    meter: Option<&OpMeter>,
) -> Result<Block<R>, EngineError> {
    let plan = Plan::new(slp, ring)?;
    apply_level(&plan, a, b, ring, meter, &|x: &Block<R>, y: &Block<R>| {
        naive_multiply(x, y, ring, meter)
    })
}

/// Smallest power of `base` that is at least `size`.
pub fn padded_size(size: usize, base: usize) -> usize {
    let mut padded = 1;
    while padded < size {
        padded *= base;
    }
    padded
}

/// Multiplies square matrices by applying a square program recursively.
/// Sizes above `threshold` are zero-padded to the next power of the base
/// dimension; blocks of size `≤ threshold` are multiplied naively.
pub fn recursive_multiply<R: ScalarRing>(
    a: &Block<R>,
    b: &Block<R>,
    slp: &StraightLineProgram,
    threshold: usize,
    ring: &R,
    meter: &OpMeter,
) -> Result<Block<R>, EngineError> {
    let started = Instant::now();
    let d = slp.dims();
    if !d.is_square() || d.n < 2 {
        return Err(EngineError::NonSquareScheme(d));
    }
    if threshold == 0 {
        return Err(EngineError::Parameter(
            "threshold must be at least 1".into(),
        ));
    }
    let size = a.rows();
    if a.cols() != size || b.rows() != size || b.cols() != size {
        return Err(EngineError::Shape(format!(
            "recursion needs equal square operands, got {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let plan = Plan::new(slp, ring)?;
    let result = if size <= threshold {
        naive_multiply(a, b, ring, Some(meter))?
    } else {
        let padded = padded_size(size, d.n);
        let pa = a.pad_to(padded, padded, ring.zero());
        let pb = b.pad_to(padded, padded, ring.zero());
        let product = recurse(&pa, &pb, &plan, threshold, ring, meter)?;
        product.with_logical_dims(size, size).strip()
    };
    meter.record_time(started.elapsed());
    Ok(result)
}

fn recurse<R: ScalarRing>(
    a: &Block<R>,
    b: &Block<R>,
    plan: &Plan<R::Elem>,
    threshold: usize,
    ring: &R,
    meter: &OpMeter,
) -> Result<Block<R>, EngineError> {
    if a.rows() <= threshold || a.rows() < plan.dims.n {
        return naive_multiply(a, b, ring, Some(meter));
    }
    apply_level(
        plan,
        a,
        b,
        ring,
        Some(meter),
        &|x: &Block<R>, y: &Block<R>| recurse(x, y, plan, threshold, ring, meter),
    )
}

/// Closed-form counts for `levels` recursion levels of a rank-`rank` scheme
/// with `slp_adds` additions on `base×base` blocks, bottoming out at scalars:
/// `muls = R^k`, `adds = q·(R^k − s^{2k})/(R − s²)`.
///
/// When `R = s²` the geometric sum degenerates; the error then carries the
/// alternative form `adds = q·k·s^{2(k−1)}`.
pub fn count_formula(
    slp_adds: u64,
    rank: u64,
    base: u64,
    levels: u32,
) -> Result<(u128, u128), EngineError> {
    let (q, r, s2) = (slp_adds as i128, rank as i128, (base * base) as i128);
    let muls = (rank as u128).pow(levels);
    if r == s2 {
        let adds = if levels == 0 {
            0
        } else {
            (q * levels as i128 * s2.pow(levels - 1)) as u128
        };
        return Err(EngineError::DegenerateRecursion { muls, adds });
    }
    let adds = q * (r.pow(levels) - s2.pow(levels)) / (r - s2);
    Ok((muls, adds as u128))
}

/// One benchmark measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub size: usize,
    pub padded: usize,
    pub adds: u64,
    pub muls: u64,
    pub scales: u64,
    pub median_ns: u128,
    pub baseline_median_ns: u128,
    /// Whether the recursive result equals the naive one (exactly, or within
    /// rounding tolerance for inexact rings).
    pub agrees: bool,
    /// Comparison against [`count_formula`] when it applies (threshold 1).
    pub formula_match: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
    pub threshold: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes: vec![3, 9, 27, 81],
            repetitions: 3,
            seed: 0,
            threshold: 1,
        }
    }
}

pub const BENCH_HEADER: &str = "size,padded,adds,muls,time_ns,baseline_time_ns";

impl BenchRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.size, self.padded, self.adds, self.muls, self.median_ns, self.baseline_median_ns
        )
    }
}

fn median(mut xs: Vec<u128>) -> u128 {
    xs.sort_unstable();
    xs[xs.len() / 2]
}

/// Two random `size×size` operands, reproducible from `seed`.
pub fn seeded_operands<R: ScalarRing>(size: usize, ring: &R, seed: u64) -> (Block<R>, Block<R>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = BlockMatrix::random(size, size, ring, &mut rng);
    let b = BlockMatrix::random(size, size, ring, &mut rng);
    (a, b)
}

/// Times recursive against naive multiplication on seeded random inputs.
/// Operation counts come from the first repetition.
pub fn bench<R, C>(
    slp: &StraightLineProgram,
    config: &BenchConfig,
    ring: &R,
    close: C,
) -> Result<Vec<BenchRow>, EngineError>
where
    R: ScalarRing,
    C: Fn(&BlockMatrix<R::Elem>, &BlockMatrix<R::Elem>) -> bool,
{
    if config.repetitions == 0 {
        return Err(EngineError::Parameter(
            "repetitions must be at least 1".into(),
        ));
    }
    let d = slp.dims();
    let slp_adds = crate::slp::slp_addition_count(slp).adds_total as u64;
    let mut rows = Vec::new();
    for (index, &size) in config.sizes.iter().enumerate() {
        if size == 0 {
            return Err(EngineError::Parameter("sizes must be positive".into()));
        }
        let (a, b) = seeded_operands(size, ring, config.seed.wrapping_add(index as u64));
        let mut times = Vec::with_capacity(config.repetitions);
        let mut baseline = Vec::with_capacity(config.repetitions);
        let mut counts = None;
        let mut agrees = true;
        for _ in 0..config.repetitions {
            let meter = OpMeter::new();
            let t0 = Instant::now();
            let fast = recursive_multiply(&a, &b, slp, config.threshold, ring, &meter)?;
            times.push(t0.elapsed().as_nanos());
            let t1 = Instant::now();
            let slow = naive_multiply(&a, &b, ring, None)?;
            baseline.push(t1.elapsed().as_nanos());
            agrees &= close(&fast, &slow);
            counts.get_or_insert(meter.snapshot());
        }
        let counts = counts.expect("at least one repetition");
        let padded = if size <= config.threshold {
            size
        } else {
            padded_size(size, d.n)
        };
        let formula_match = (config.threshold == 1).then(|| {
            let levels = (padded as f64).log(d.n as f64).round() as u32;
            match count_formula(slp_adds, slp.mul_count() as u64, d.n as u64, levels) {
                Ok((muls, adds)) | Err(EngineError::DegenerateRecursion { muls, adds }) => {
                    counts.scalar_muls as u128 == muls && counts.scalar_adds as u128 == adds
                }
                Err(_) => false,
            }
        });
        rows.push(BenchRow {
            size,
            padded,
            adds: counts.scalar_adds,
            muls: counts.scalar_muls,
            scales: counts.scalar_scales,
            median_ns: median(times),
            baseline_median_ns: median(baseline),
            agrees,
            formula_match,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::ring::CheckedI64;

    #[test]
    fn naive_counts() {
        let ring = CheckedI64;
        let a = BlockMatrix::from_vec(2, 3, vec![1, 2, 3, 4, 5, 6]);
        let b = BlockMatrix::from_vec(3, 1, vec![1, 0, -1]);
        let meter = OpMeter::new();
        let c = naive_multiply(&a, &b, &ring, Some(&meter)).unwrap();
        assert_eq!(c.as_slice(), &[-2, -2]);
        let s = meter.snapshot();
        assert_eq!((s.scalar_muls, s.scalar_adds), (6, 4));
    }

    #[test]
    fn formula_values() {
        assert_eq!(count_formula(59, 23, 3, 1).unwrap(), (23, 59));
        assert_eq!(count_formula(59, 23, 3, 0).unwrap(), (1, 0));
        assert_eq!(count_formula(18, 7, 2, 2).unwrap(), (49, 198));
        assert_eq!(count_formula(59, 23, 3, 2).unwrap(), (529, 1888));
        assert!(matches!(
            count_formula(4, 4, 2, 3),
            Err(EngineError::DegenerateRecursion {
                muls: 64,
                adds: 192
            })
        ));
    }

    #[test]
    fn padded_sizes() {
        assert_eq!(padded_size(10, 3), 27);
        assert_eq!(padded_size(9, 3), 9);
        assert_eq!(padded_size(1, 3), 1);
        assert_eq!(padded_size(5, 2), 8);
    }
}
