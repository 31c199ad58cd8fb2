//! Extrinsic erasure transfer functions of the component BCJR decoder.
//!
//! Under the all-zero codeword, the set of trellis states consistent with
//! the past (forward set) evolves as a finite Markov chain driven by the
//! i.i.d. erasure pattern of each step; the same holds for the future
//! (backward set). In the infinite-trellis limit the two sets at a given
//! section are independent and distributed according to the stationary
//! laws of their chains, which gives `f_p` and `f_q` exactly.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::trellis::{
    bcjr_erasure_decode, build_trellis, rsc_encode, GeneratorSpec, Ternary, Trellis,
};

/// Extrinsic erasure probabilities `(f_p, f_q)` on systematic and parity
/// positions given average input erasure probabilities `(p̄, q̄)`.
pub trait Transfer: Send + Sync {
    fn eval(&self, p: f64, q: f64) -> (f64, f64);

    fn f_p(&self, p: f64, q: f64) -> f64 {
        self.eval(p, q).0
    }

    fn f_q(&self, p: f64, q: f64) -> f64 {
        self.eval(p, q).1
    }
}

/// Erasure pattern of one trellis section: bit 1 = systematic erased,
/// bit 0 = parity erased.
const PATTERNS: usize = 4;

#[inline]
fn pattern_symbols(pattern: usize) -> (Ternary, Ternary) {
    let sym = |erased: bool| {
        if erased {
            Ternary::Erased
        } else {
            Ternary::Known0
        }
    };
    (sym(pattern & 2 != 0), sym(pattern & 1 != 0))
}

#[inline]
fn pattern_prob(pattern: usize, p: f64, q: f64) -> f64 {
    let ps = if pattern & 2 != 0 { p } else { 1.0 - p };
    let pq = if pattern & 1 != 0 { q } else { 1.0 - q };
    ps * pq
}

/// Reachable state sets of one direction and their pattern-driven
/// transitions.
#[derive(Clone, Debug)]
pub struct SubsetChain {
    pub sets: Vec<u64>,
    /// `next[i][pattern]` = index of the successor set.
    pub next: Vec<[usize; PATTERNS]>,
    /// Index of the singleton zero-state set.
    pub zero: usize,
}

impl SubsetChain {
    fn build(trellis: &Trellis, step: impl Fn(u64, Ternary, Ternary) -> u64) -> Self {
        let mut sets = vec![1u64, trellis.full_mask()];
        let mut next = Vec::new();
        let mut i = 0;
        while i < sets.len() {
            let mut row = [0usize; PATTERNS];
            for (pattern, slot) in row.iter_mut().enumerate() {
                let (s, p) = pattern_symbols(pattern);
                let succ = step(sets[i], s, p);
                *slot = match sets.iter().position(|&x| x == succ) {
                    Some(j) => j,
                    None => {
                        sets.push(succ);
                        sets.len() - 1
                    }
                };
            }
            next.push(row);
            i += 1;
        }
        SubsetChain {
            sets,
            next,
            zero: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Row-stochastic transition matrix at `(p̄, q̄)`, row-major.
    pub fn matrix(&self, p: f64, q: f64) -> Vec<f64> {
        let n = self.len();
        let mut m = vec![0.0; n * n];
        for (i, row) in self.next.iter().enumerate() {
            for (pattern, &j) in row.iter().enumerate() {
                m[i * n + j] += pattern_prob(pattern, p, q);
            }
        }
        m
    }

    /// Stationary law at `(p̄, q̄)`.
    ///
    /// Interior points have a single recurrent class containing the zero
    /// set and are solved directly. On the boundary of the unit square the
    /// chain can be reducible; the law is then the limit reached from the
    /// zero-state set (a trellis started in a known state), found by
    /// repeated squaring.
    pub fn stationary(&self, p: f64, q: f64) -> Result<Vec<f64>> {
        let m = self.matrix(p, q);
        let interior = p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0;
        if interior {
            if let Some(pi) = solve_stationary(&m, self.len()) {
                return Ok(pi);
            }
        }
        limit_from(&m, self.len(), self.zero)
    }
}

/// Solves `π (P - I) = 0`, `Σ π = 1` by Gaussian elimination.
fn solve_stationary(m: &[f64], n: usize) -> Option<Vec<f64>> {
    // Rows of A = (P - I)^T, last equation replaced by normalization.
    let mut a = vec![0.0; n * (n + 1)];
    for i in 0..n {
        for j in 0..n {
            a[i * (n + 1) + j] = m[j * n + i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[(n - 1) * (n + 1) + j] = 1.0;
    }
    a[(n - 1) * (n + 1) + n] = 1.0;
    let w = n + 1;
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| {
            a[x * w + col]
                .abs()
                .partial_cmp(&a[y * w + col].abs())
                .unwrap()
        })?;
        if a[piv * w + col].abs() < 1e-13 {
            return None;
        }
        if piv != col {
            for k in 0..w {
                a.swap(piv * w + k, col * w + k);
            }
        }
        let d = a[col * w + col];
        for r in 0..n {
            if r != col {
                let f = a[r * w + col] / d;
                if f != 0.0 {
                    for k in col..w {
                        a[r * w + k] -= f * a[col * w + k];
                    }
                }
            }
        }
    }
    let pi: Vec<f64> = (0..n)
        .map(|i| (a[i * w + n] / a[i * w + i]).max(0.0))
        .collect();
    let s: f64 = pi.iter().sum();
    Some(pi.into_iter().map(|x| x / s).collect())
}

fn limit_from(m: &[f64], n: usize, start: usize) -> Result<Vec<f64>> {
    let mut pw = m.to_vec();
    let row = |pw: &[f64]| pw[start * n..(start + 1) * n].to_vec();
    let mut prev = row(&pw);
    for _ in 0..64 {
        let mut sq = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let x = pw[i * n + k];
                if x != 0.0 {
                    for j in 0..n {
                        sq[i * n + j] += x * pw[k * n + j];
                    }
                }
            }
        }
        pw = sq;
        let cur = row(&pw);
        let diff = cur
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        prev = cur;
        if diff < 1e-12 {
            return Ok(prev);
        }
    }
    Err(Error::Numeric(
        "stationary distribution did not converge".into(),
    ))
}

/// Exact transfer functions of a trellis in the infinite-length limit.
#[derive(Clone, Debug)]
pub struct ExactTransfer {
    forward: SubsetChain,
    backward: SubsetChain,
    /// `sys_amb[(i * nb + j) * 2 + par_erased]`: branches from forward set
    /// `i` into backward set `j` leave the input undetermined.
    sys_amb: Vec<bool>,
    par_amb: Vec<bool>,
}

pub fn exact_transfer(trellis: &Trellis) -> ExactTransfer {
    let forward = SubsetChain::build(trellis, |m, s, p| trellis.forward(m, s, p));
    let backward = SubsetChain::build(trellis, |m, s, p| trellis.backward(m, s, p));
    let nb = backward.len();
    let mut sys_amb = vec![false; forward.len() * nb * 2];
    let mut par_amb = vec![false; forward.len() * nb * 2];
    for (i, &a) in forward.sets.iter().enumerate() {
        for (j, &b) in backward.sets.iter().enumerate() {
            for e in 0..2 {
                let sym = if e == 1 {
                    Ternary::Erased
                } else {
                    Ternary::Known0
                };
                sys_amb[(i * nb + j) * 2 + e] = trellis.sys_extrinsic(a, b, sym).is_erased();
                par_amb[(i * nb + j) * 2 + e] = trellis.par_extrinsic(a, b, sym).is_erased();
            }
        }
    }
    ExactTransfer {
        forward,
        backward,
        sys_amb,
        par_amb,
    }
}

impl ExactTransfer {
    pub fn forward_chain(&self) -> &SubsetChain {
        &self.forward
    }

    pub fn backward_chain(&self) -> &SubsetChain {
        &self.backward
    }

    pub fn try_eval(&self, p: f64, q: f64) -> Result<(f64, f64)> {
        let p = p.clamp(0.0, 1.0);
        let q = q.clamp(0.0, 1.0);
        let pf = self.forward.stationary(p, q)?;
        let pb = self.backward.stationary(p, q)?;
        let nb = self.backward.len();
        let (mut fp, mut fq) = (0.0, 0.0);
        for (i, &wf) in pf.iter().enumerate() {
            if wf == 0.0 {
                continue;
            }
            for (j, &wb) in pb.iter().enumerate() {
                let w = wf * wb;
                if w == 0.0 {
                    continue;
                }
                let k = (i * nb + j) * 2;
                let amb_u =
                    q * self.sys_amb[k + 1] as u8 as f64 + (1.0 - q) * self.sys_amb[k] as u8 as f64;
                let amb_v =
                    p * self.par_amb[k + 1] as u8 as f64 + (1.0 - p) * self.par_amb[k] as u8 as f64;
                fp += w * amb_u;
                fq += w * amb_v;
            }
        }
        Ok((fp.clamp(0.0, 1.0), fq.clamp(0.0, 1.0)))
    }
}

impl Transfer for ExactTransfer {
    fn eval(&self, p: f64, q: f64) -> (f64, f64) {
        self.try_eval(p, q)
            .expect("stationary law of a finite subset chain")
    }
}

/// Transfer functions tabulated on a tensor grid over `[0,1]²` with local
/// cubic interpolation.
///
/// Nodes sit at `x = (1 - cos(π s)) / 2` for uniform `s`, so they crowd
/// towards the edges of the square where the functions bend sharply (both
/// are discontinuous at the corners `(0,1)` and `(1,0)`).
#[derive(Clone, Debug)]
pub struct GridTransfer {
    cells: usize,
    /// Interleaved `(f_p, f_q)` per node, row index over `p̄`.
    table: Vec<[f64; 2]>,
}

pub const DEFAULT_GRID_CELLS: usize = 1024;

/// Grid for the default (1, 5/7) component code, built on first use.
pub fn default_grid() -> &'static GridTransfer {
    static GRID: OnceLock<GridTransfer> = OnceLock::new();
    GRID.get_or_init(|| {
        let trellis = build_trellis(GeneratorSpec::default()).expect("default generator is valid");
        GridTransfer::new(&exact_transfer(&trellis), DEFAULT_GRID_CELLS)
            .expect("default trellis has a stationary law everywhere")
    })
}

#[inline]
fn node_coord(s: f64) -> f64 {
    0.5 * (1.0 - (std::f64::consts::PI * s).cos())
}

#[inline]
fn grid_coord(x: f64) -> f64 {
    (1.0 - 2.0 * x.clamp(0.0, 1.0)).acos() / std::f64::consts::PI
}

/// Stencil start and Lagrange weights on nodes `base..base+4` for grid
/// coordinate `u` in cell units.
#[inline]
fn stencil(u: f64, cells: usize) -> (usize, [f64; 4]) {
    let i = (u as usize).min(cells - 1);
    let base = i.saturating_sub(1).min(cells - 3);
    let x = u - base as f64;
    let (a, b, c, d) = (x, x - 1.0, x - 2.0, x - 3.0);
    (
        base,
        [
            -b * c * d / 6.0,
            a * c * d / 2.0,
            -a * b * d / 2.0,
            a * b * c / 6.0,
        ],
    )
}

impl GridTransfer {
    pub fn new(exact: &ExactTransfer, cells: usize) -> Result<Self> {
        if cells < 3 {
            return Err(Error::config("grid needs at least three cells"));
        }
        let nodes = cells + 1;
        let coords: Vec<f64> = (0..nodes)
            .map(|i| node_coord(i as f64 / cells as f64))
            .collect();
        let rows: Vec<Vec<[f64; 2]>> = coords
            .par_iter()
            .map(|&p| {
                coords
                    .iter()
                    .map(|&q| exact.try_eval(p, q).map(|(a, b)| [a, b]))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(GridTransfer {
            cells,
            table: rows.into_iter().flatten().collect(),
        })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }
}

impl Transfer for GridTransfer {
    #[inline]
    fn eval(&self, p: f64, q: f64) -> (f64, f64) {
        let n = self.cells as f64;
        let (bi, wi) = stencil(grid_coord(p) * n, self.cells);
        let (bj, wj) = stencil(grid_coord(q) * n, self.cells);
        let w = self.cells + 1;
        let (mut a, mut b) = (0.0, 0.0);
        for (di, &xi) in wi.iter().enumerate() {
            let row = &self.table[(bi + di) * w + bj..(bi + di) * w + bj + 4];
            let (mut ra, mut rb) = (0.0, 0.0);
            for (v, &xj) in row.iter().zip(&wj) {
                ra += xj * v[0];
                rb += xj * v[1];
            }
            a += xi * ra;
            b += xi * rb;
        }
        (a.clamp(0.0, 1.0), b.clamp(0.0, 1.0))
    }
}

/// Monte-Carlo estimate of the transfer functions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McTransfer {
    pub f_p: f64,
    pub f_q: f64,
    pub se_p: f64,
    pub se_q: f64,
}

/// Batches used for the batch-means standard error; neighbouring trellis
/// sections are correlated, so per-position variances would understate it.
const MC_BATCHES: usize = 100;

/// Encodes random information, erases systematic bits with probability `p`
/// and parity bits with probability `q`, decodes, and reports the fraction
/// of erased extrinsics away from the trellis ends.
pub fn mc_transfer(
    trellis: &Trellis,
    p: f64,
    q: f64,
    trellis_len: usize,
    seed: u64,
) -> Result<McTransfer> {
    let margin = 10 * trellis.memory();
    if trellis_len < 10_000 {
        return Err(Error::config("mc_transfer needs trellis_len >= 10^4"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let info: Vec<u8> = (0..trellis_len).map(|_| rng.gen_range(0..2u8)).collect();
    let parity = rsc_encode(trellis, &info, false).parity;
    let mut observe = |bit: u8, erase: f64| {
        if rng.gen::<f64>() < erase {
            Ternary::Erased
        } else {
            Ternary::known(bit)
        }
    };
    let sys: Vec<Ternary> = info.iter().map(|&b| observe(b, p)).collect();
    let par: Vec<Ternary> = parity.iter().map(|&b| observe(b, q)).collect();
    let (se, pe) = bcjr_erasure_decode(trellis, &sys, &par, false, false)?;
    let interior = margin..trellis_len - margin;
    let n = interior.len();
    let batch = n / MC_BATCHES;
    let mut means_p = Vec::with_capacity(MC_BATCHES);
    let mut means_q = Vec::with_capacity(MC_BATCHES);
    for b in 0..MC_BATCHES {
        let r = margin + b * batch..margin + (b + 1) * batch;
        let ep = se[r.clone()].iter().filter(|s| s.is_erased()).count();
        let eq = pe[r].iter().filter(|s| s.is_erased()).count();
        means_p.push(ep as f64 / batch as f64);
        means_q.push(eq as f64 / batch as f64);
    }
    let stats = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        (m, (var / v.len() as f64).sqrt())
    };
    let (f_p, se_p) = stats(&means_p);
    let (f_q, se_q) = stats(&means_q);
    Ok(McTransfer {
        f_p,
        f_q,
        se_p,
        se_q,
    })
}
