//! Block-partitioned parallel products: the one-dimensional ring
//! schedule for sparse-times-dense multiplication, and the two-step
//! gradient (never forming the dense covariance) for the n << p regime.
//!
//! The left operand is split into P row blocks and the dense operand
//! into P column slabs; worker k keeps its slab resident and forwards
//! only left-operand blocks around the ring, so each worker performs
//! exactly P - 1 sends and P - 1 receives per multiply. Every output row
//! is produced by exactly one worker with the same inner loop as the
//! serial kernel, so results are bit-identical for every worker count.
//!
//! Workers are threads inside one process connected by channels; the
//! transport is a trait so a multi-process backend can slot in.

use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{DenseData, SparseSquare};

/// Balanced split of `[0, len)` into at most `workers` blocks whose
/// sizes differ by at most one. Worker counts above `len` degenerate to
/// one index per block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    len: usize,
    boundaries: Vec<usize>,
}

impl BlockPartition {
    pub fn new(len: usize, workers: usize) -> Result<Self> {
        if len == 0 || workers == 0 {
            return Err(Error::InvalidParameter(
                "partition needs a positive length and worker count".into(),
            ));
        }
        let w = workers.min(len);
        let boundaries = (0..=w).map(|k| k * len / w).collect();
        Ok(BlockPartition { len, boundaries })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn workers(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn range(&self, k: usize) -> std::ops::Range<usize> {
        self.boundaries[k]..self.boundaries[k + 1]
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }
}

/// Communication tally of one ring multiply.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CommStats {
    /// Block sends per worker (P - 1 each).
    pub sends_per_worker: Vec<usize>,
    /// Block receives per worker (P - 1 each).
    pub recvs_per_worker: Vec<usize>,
    /// In-memory payload size of every block that traveled.
    pub bytes_sent: u64,
}

impl CommStats {
    fn merge(mut self, other: CommStats) -> CommStats {
        self.sends_per_worker
            .iter_mut()
            .zip(&other.sends_per_worker)
            .for_each(|(a, b)| *a += b);
        self.recvs_per_worker
            .iter_mut()
            .zip(&other.recvs_per_worker)
            .for_each(|(a, b)| *a += b);
        self.bytes_sent += other.bytes_sent;
        self
    }
}

/// A row block of the traveling operand.
enum RowBlock {
    /// Rows [start, start + nrows) of a sparse matrix, compressed.
    Sparse {
        start: usize,
        row_ptr: Vec<usize>,
        cols: Vec<usize>,
        vals: Vec<f64>,
    },
    /// Rows [start, start + nrows) of a dense matrix with `width` columns.
    Dense {
        start: usize,
        width: usize,
        values: Vec<f64>,
    },
}

impl RowBlock {
    fn payload_bytes(&self) -> u64 {
        match self {
            RowBlock::Sparse {
                row_ptr,
                cols,
                vals,
                ..
            } => (row_ptr.len() * 8 + cols.len() * 8 + vals.len() * 8) as u64,
            RowBlock::Dense { values, .. } => (values.len() * 8) as u64,
        }
    }

    fn rows(&self) -> usize {
        match self {
            RowBlock::Sparse { row_ptr, .. } => row_ptr.len() - 1,
            RowBlock::Dense { values, width, .. } => {
                if *width == 0 {
                    0
                } else {
                    values.len() / width
                }
            }
        }
    }

    fn start(&self) -> usize {
        match self {
            RowBlock::Sparse { start, .. } => *start,
            RowBlock::Dense { start, .. } => *start,
        }
    }

    /// out holds rows [start, start + nrows) x [c0, c1) of the product,
    /// row-major with width c1 - c0.
    fn multiply_slab(&self, operand: &[f64], op_cols: usize, c0: usize, c1: usize, out: &mut [f64]) {
        let width = c1 - c0;
        match self {
            RowBlock::Sparse {
                row_ptr,
                cols,
                vals,
                ..
            } => {
                for r in 0..self.rows() {
                    let orow = &mut out[r * width..(r + 1) * width];
                    for e in row_ptr[r]..row_ptr[r + 1] {
                        let k = cols[e];
                        let v = vals[e];
                        let oprow = &operand[k * op_cols + c0..k * op_cols + c1];
                        for (o, &m) in orow.iter_mut().zip(oprow) {
                            *o += v * m;
                        }
                    }
                }
            }
            RowBlock::Dense {
                width: inner,
                values,
                ..
            } => {
                for r in 0..self.rows() {
                    let orow = &mut out[r * width..(r + 1) * width];
                    let yrow = &values[r * inner..(r + 1) * inner];
                    for (k, &y) in yrow.iter().enumerate() {
                        let oprow = &operand[k * op_cols + c0..k * op_cols + c1];
                        for (o, &m) in orow.iter_mut().zip(oprow) {
                            *o += y * m;
                        }
                    }
                }
            }
        }
    }
}

/// One hop of the ring. Implemented by in-process channels below.
trait RingTransport {
    fn send_left(&self, block: Arc<RowBlock>) -> std::result::Result<(), String>;
    fn recv_right(&self) -> std::result::Result<Arc<RowBlock>, String>;
}

struct ChannelRing {
    to_left: Sender<Arc<RowBlock>>,
    from_right: Receiver<Arc<RowBlock>>,
}

impl RingTransport for ChannelRing {
    fn send_left(&self, block: Arc<RowBlock>) -> std::result::Result<(), String> {
        self.to_left
            .send(block)
            .map_err(|_| "ring neighbor hung up".to_string())
    }

    fn recv_right(&self) -> std::result::Result<Arc<RowBlock>, String> {
        self.from_right
            .recv()
            .map_err(|_| "ring neighbor vanished before sending".to_string())
    }
}

struct WorkerOut {
    slab: Vec<f64>, // full-height column slab of the product
    sends: usize,
    recvs: usize,
    bytes: u64,
}

/// Runs the ring schedule over pre-split row blocks against a resident
/// dense operand, returning the row-major product and the tally.
fn ring_run(
    blocks: Vec<RowBlock>,
    rows_total: usize,
    operand: &[f64],
    op_rows: usize,
    op_cols: usize,
) -> Result<(Vec<f64>, CommStats)> {
    if operand.len() != op_rows * op_cols {
        return Err(Error::DimensionMismatch {
            expected: op_rows * op_cols,
            got: operand.len(),
            context: "ring operand buffer",
        });
    }
    let workers = blocks.len();
    let col_part = BlockPartition::new(op_cols.max(1), workers)?;
    // ring wiring: worker k sends into channel k, whose receiver lives
    // at worker k-1, so traffic flows leftward while blocks from the
    // right arrive on channel k+1
    let mut senders: Vec<Option<Sender<Arc<RowBlock>>>> = (0..workers).map(|_| None).collect();
    let mut receivers: Vec<Option<Receiver<Arc<RowBlock>>>> = (0..workers).map(|_| None).collect();
    for k in 0..workers {
        let (tx, rx) = channel();
        senders[k] = Some(tx);
        receivers[(k + workers - 1) % workers] = Some(rx);
    }

    let block_starts: Vec<usize> = blocks.iter().map(|b| b.start()).collect();
    let block_rows: Vec<usize> = blocks.iter().map(|b| b.rows()).collect();
    let mut outputs: Vec<Option<WorkerOut>> = (0..workers).map(|_| None).collect();

    std::thread::scope(|scope| -> Result<()> {
        let mut handles = Vec::with_capacity(workers);
        for (k, block) in blocks.into_iter().enumerate() {
            let ring = ChannelRing {
                to_left: senders[k].take().expect("sender wired once"),
                from_right: receivers[k].take().expect("receiver wired once"),
            };
            // workers beyond the column partition own an empty slab but
            // still forward blocks to keep the ring closed
            let (c0, c1) = if k < col_part.workers() {
                let r = col_part.range(k);
                (r.start, r.end)
            } else {
                (0, 0)
            };
            let starts = &block_starts;
            let rows = &block_rows;
            handles.push(scope.spawn(move || -> std::result::Result<WorkerOut, String> {
                let width = c1 - c0;
                let mut slab = vec![0.0f64; rows_total * width];
                let mut current = Arc::new(block);
                let mut sends = 0usize;
                let mut recvs = 0usize;
                let mut bytes = 0u64;
                for step in 0..workers {
                    let b = (k + step) % workers;
                    debug_assert_eq!(current.start(), starts[b]);
                    if width > 0 {
                        let lo = starts[b];
                        let hi = lo + rows[b];
                        current.multiply_slab(
                            operand,
                            op_cols,
                            c0,
                            c1,
                            &mut slab[lo * width..hi * width],
                        );
                    }
                    if step + 1 < workers {
                        bytes += current.payload_bytes();
                        ring.send_left(Arc::clone(&current))?;
                        sends += 1;
                        current = ring.recv_right()?;
                        recvs += 1;
                    }
                }
                Ok(WorkerOut {
                    slab,
                    sends,
                    recvs,
                    bytes,
                })
            }));
        }
        for (k, h) in handles.into_iter().enumerate() {
            match h.join() {
                Ok(Ok(out)) => outputs[k] = Some(out),
                Ok(Err(msg)) => {
                    return Err(Error::DegenerateData(format!("ring worker {k} failed: {msg}")))
                }
                Err(_) => {
                    return Err(Error::DegenerateData(format!("ring worker {k} panicked")))
                }
            }
        }
        Ok(())
    })?;

    // assemble the column slabs into one row-major matrix
    let mut result = vec![0.0f64; rows_total * op_cols];
    let mut stats = CommStats {
        sends_per_worker: vec![0; workers],
        recvs_per_worker: vec![0; workers],
        bytes_sent: 0,
    };
    for (k, out) in outputs.into_iter().enumerate() {
        let out = out.expect("every worker reported");
        if k < col_part.workers() {
            let range = col_part.range(k);
            let width = range.len();
            for r in 0..rows_total {
                result[r * op_cols + range.start..r * op_cols + range.end]
                    .copy_from_slice(&out.slab[r * width..(r + 1) * width]);
            }
        }
        stats.sends_per_worker[k] = out.sends;
        stats.recvs_per_worker[k] = out.recvs;
        stats.bytes_sent += out.bytes;
    }
    Ok((result, stats))
}

fn split_sparse(omega: &SparseSquare, partition: &BlockPartition) -> Vec<RowBlock> {
    (0..partition.workers())
        .map(|k| {
            let range = partition.range(k);
            let mut row_ptr = Vec::with_capacity(range.len() + 1);
            let mut cols = Vec::new();
            let mut vals = Vec::new();
            row_ptr.push(0);
            for i in range.clone() {
                let (rc, rv) = omega.row(i);
                cols.extend_from_slice(rc);
                vals.extend_from_slice(rv);
                row_ptr.push(cols.len());
            }
            RowBlock::Sparse {
                start: range.start,
                row_ptr,
                cols,
                vals,
            }
        })
        .collect()
}

fn split_dense(values: &[f64], width: usize, partition: &BlockPartition) -> Vec<RowBlock> {
    (0..partition.workers())
        .map(|k| {
            let range = partition.range(k);
            RowBlock::Dense {
                start: range.start,
                width,
                values: values[range.start * width..range.end * width].to_vec(),
            }
        })
        .collect()
}

/// Sparse-times-dense product over the ring: omega (p-by-p) times a
/// row-major operand with p rows. Equals the serial kernel bit for bit;
/// only the sparse blocks travel.
pub fn ring_multiply(
    omega: &SparseSquare,
    operand: &[f64],
    op_cols: usize,
    partition: &BlockPartition,
) -> Result<(Vec<f64>, CommStats)> {
    let p = omega.dim();
    if partition.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: partition.len(),
            context: "partition length vs matrix dimension",
        });
    }
    if operand.len() != p * op_cols {
        return Err(Error::DimensionMismatch {
            expected: p * op_cols,
            got: operand.len(),
            context: "ring operand",
        });
    }
    let blocks = split_sparse(omega, partition);
    ring_run(blocks, p, operand, p, op_cols)
}

/// Smooth-part gradient (1/n) (Omega X') X computed in two ring
/// multiplies without ever forming the covariance: advantageous when n
/// is much smaller than p. Returns the dense p-by-p gradient and the
/// combined communication tally.
pub fn two_step_gradient(
    omega: &SparseSquare,
    data: &DenseData,
    partition: &BlockPartition,
) -> Result<(Vec<f64>, CommStats)> {
    if !data.is_centered() {
        return Err(Error::InvalidParameter(
            "data must be column-centered".into(),
        ));
    }
    let p = data.p();
    let n = data.n();
    if omega.dim() != p || partition.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: omega.dim().min(partition.len()),
            context: "two-step gradient dimensions",
        });
    }
    // step 1: Y = Omega X' (p-by-n), X' column-partitioned over n
    let (mut y, stats1) = ring_multiply(omega, data.transposed(), n, partition)?;
    // step 2: (1/n) Y X, Y row blocks travel, X column-partitioned over p
    let inv_n = 1.0 / n as f64;
    y.iter_mut().for_each(|v| *v *= inv_n);
    let blocks = split_dense(&y, n, partition);
    let (grad, stats2) = ring_run(blocks, p, data.values(), n, p)?;
    Ok((grad, stats1.merge(stats2)))
}

/// Fraction `n / p` below which the two-step route is preferred over a
/// product against a precomputed dense covariance.
pub const TWO_STEP_RATIO: f64 = 0.25;
