//! Coupled chains of turbo code blocks.
//!
//! Every distinct bit of a chain is a *variable*, numbered in transmission
//! order. Each block maps the positions of its turbo encoder (information,
//! upper parity, lower parity) to variables; a coupled bit is one variable
//! that occupies a slot in two blocks. Zero padding and termination bits
//! map to [`ZERO`].

mod decode;
mod rate;
mod trace;

use std::ops::Range;
use std::sync::Arc;

use rand::seq::{index, SliceRandom};

use crate::config::{to_f64, CouplingConfig, Family, Rational};
use crate::error::{Error, Result};
use crate::rng::{block_stream, Role};
use crate::trellis::{build_trellis, GeneratorSpec, Ternary, Trellis};
use crate::turbo::{turbo_encode, Interleaver, TurboConfig};

pub use decode::{
    ff_fb_decode, window_decode, ChainDecoder, DecodeOptions, DecodeOutcome, WindowOutcome,
};
pub use rate::{asymptotic_rate, lambda_for_rho, rate_of, rho_for_rate};
pub use trace::{read_trace, write_trace, Trace};

/// Slot holding a known zero (padding or termination).
pub const ZERO: u32 = u32::MAX;

/// One of the three length-`K` streams of a turbo codeword.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Stream {
    Info = 0,
    ParityUpper = 1,
    ParityLower = 2,
}

impl Stream {
    pub const ALL: [Stream; 3] = [Stream::Info, Stream::ParityUpper, Stream::ParityLower];
}

/// A coupled slot of a block and the other occurrence of its variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Link {
    pub stream: Stream,
    pub pos: u32,
    pub block: u32,
    pub partner_stream: Stream,
    pub partner_pos: u32,
}

/// Position maps of one code block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockMap {
    /// `slots[stream][pos]` is the variable at an encoder position.
    pub slots: [Vec<u32>; 3],
    pub links: Vec<Link>,
    /// Fresh information variables (`u'_t` without padding).
    pub fresh: Range<u32>,
    /// Variables transmitted with this block.
    pub owned: Range<u32>,
}

impl BlockMap {
    #[inline]
    pub fn var(&self, stream: Stream, pos: usize) -> u32 {
        self.slots[stream as usize][pos]
    }
}

/// One realization of a coupled chain: layout, interleavers and puncturing
/// pattern.
#[derive(Clone, Debug)]
pub struct ChainCode {
    cfg: CouplingConfig,
    blocks: Vec<BlockMap>,
    turbo: Vec<TurboConfig>,
    punctured: Vec<bool>,
    num_vars: usize,
}

/// Where the interleavers of a chain come from.
#[derive(Clone, Debug)]
pub enum InterleaverChoice {
    /// Fresh uniformly random permutation per block.
    Random,
    /// The same permutation in every block.
    Fixed(Interleaver),
}

/// Origin occurrence of a coupled variable.
#[derive(Clone, Copy)]
struct Origin {
    var: u32,
    stream: Stream,
    pos: u32,
}

impl ChainCode {
    /// Draws a chain with random interleavers, placement and puncturing
    /// from the streams of `(seed, chain)`.
    pub fn sample(cfg: &CouplingConfig, seed: u64, chain: u64) -> Result<Self> {
        Self::build(cfg, seed, chain, InterleaverChoice::Random)
    }

    pub fn build(
        cfg: &CouplingConfig,
        seed: u64,
        chain: u64,
        interleavers: InterleaverChoice,
    ) -> Result<Self> {
        let trellis = Arc::new(build_trellis(GeneratorSpec::default())?);
        Self::build_with(cfg, trellis, seed, chain, interleavers)
    }

    pub fn build_with(
        cfg: &CouplingConfig,
        trellis: Arc<Trellis>,
        seed: u64,
        chain: u64,
        interleavers: InterleaverChoice,
    ) -> Result<Self> {
        cfg.validate_code()?;
        let k = cfg.k;
        let l = cfg.chain_len;
        let m = cfg.m;
        let d = cfg.segment_len();
        let lambda_k = (cfg.lambda * k as i64).to_integer() as usize;
        let (du, dl) = match cfg.family {
            Family::Pic => (0, 0),
            Family::Ppc => {
                let (u, lo) = cfg.split();
                (
                    (u * k as i64 / m as i64).to_integer() as usize,
                    (lo * k as i64 / m as i64).to_integer() as usize,
                )
            }
        };
        if let InterleaverChoice::Fixed(p) = &interleavers {
            if p.len() != k {
                return Err(Error::config(format!(
                    "fixed interleaver has length {} but K = {k}",
                    p.len()
                )));
            }
        }
        let total = l as u64 * 3 * k as u64;
        if total >= ZERO as u64 {
            return Err(Error::config("chain too long for 32-bit variable indices"));
        }

        let mut blocks: Vec<BlockMap> = Vec::with_capacity(l);
        let mut turbo = Vec::with_capacity(l);
        // out[t][j - 1]: variables coupled from block t into block t + j.
        let mut out: Vec<Vec<Vec<Origin>>> = Vec::with_capacity(l);
        let mut next = 0u32;
        let punct_count = cfg.punctured_per_block();
        let mut punctured = Vec::new();

        for t in 0..l {
            let placement = |role_len: usize, salt: u64| -> Vec<u32> {
                let mut p: Vec<u32> = (0..role_len as u32).collect();
                if cfg.random_placement {
                    let mut rng = block_stream(seed ^ salt, chain, t, Role::Placement);
                    p.shuffle(&mut rng);
                }
                p
            };
            let sigma = placement(k, 0);
            let tau_u = placement(k, 1);
            let tau_l = placement(k, 2);

            let mut logical: Vec<u32> = Vec::with_capacity(k);
            let mut pending: Vec<(usize, usize, Origin)> = Vec::new();
            for j in (1..=m).rev() {
                if t >= j {
                    for o in &out[t - j][j - 1] {
                        pending.push((logical.len(), t - j, *o));
                        logical.push(o.var);
                    }
                } else {
                    logical.extend(std::iter::repeat_n(ZERO, d));
                }
            }
            debug_assert_eq!(logical.len(), lambda_k);

            let fresh_start = next;
            let mut outs: Vec<Vec<Origin>> = vec![Vec::new(); m];
            match cfg.family {
                Family::Pic => {
                    for _ in 0..k - 2 * lambda_k {
                        logical.push(next);
                        next += 1;
                    }
                    for (j, seg) in outs.iter_mut().enumerate() {
                        if t + j + 1 < l {
                            for _ in 0..d {
                                seg.push(Origin {
                                    var: next,
                                    stream: Stream::Info,
                                    pos: sigma[logical.len()],
                                });
                                logical.push(next);
                                next += 1;
                            }
                        } else {
                            logical.extend(std::iter::repeat_n(ZERO, d));
                        }
                    }
                }
                Family::Ppc => {
                    let term = ppc_termination_len(cfg, t);
                    for _ in 0..k - lambda_k - term {
                        logical.push(next);
                        next += 1;
                    }
                    logical.extend(std::iter::repeat_n(ZERO, term));
                }
            }
            let fresh = fresh_start..next;
            debug_assert_eq!(logical.len(), k);

            let mut slots = [vec![ZERO; k], vec![ZERO; k], vec![ZERO; k]];
            for (i, &v) in logical.iter().enumerate() {
                slots[0][sigma[i] as usize] = v;
            }
            let pu_start = next;
            for i in 0..k {
                slots[1][tau_u[i] as usize] = pu_start + i as u32;
            }
            let pl_start = pu_start + k as u32;
            for i in 0..k {
                slots[2][tau_l[i] as usize] = pl_start + i as u32;
            }
            next = pl_start + k as u32;
            let mut coupled_parity = Vec::new();
            if cfg.family == Family::Ppc {
                for (j, seg) in outs.iter_mut().enumerate() {
                    let mut take = |start: u32, len: usize, tau: &[u32], stream: Stream| {
                        for i in 0..len {
                            let logical_pos = k - len * m + j * len + i;
                            let var = start + logical_pos as u32;
                            coupled_parity.push(var);
                            if t + j + 1 < l {
                                seg.push(Origin {
                                    var,
                                    stream,
                                    pos: tau[logical_pos],
                                });
                            }
                        }
                    };
                    take(pu_start, du, &tau_u, Stream::ParityUpper);
                    take(pl_start, dl, &tau_l, Stream::ParityLower);
                }
            }

            let mut links = Vec::with_capacity(2 * lambda_k);
            for (i, from, o) in pending {
                let link = Link {
                    stream: Stream::Info,
                    pos: sigma[i],
                    block: from as u32,
                    partner_stream: o.stream,
                    partner_pos: o.pos,
                };
                blocks[from].links.push(Link {
                    stream: o.stream,
                    pos: o.pos,
                    block: t as u32,
                    partner_stream: Stream::Info,
                    partner_pos: sigma[i],
                });
                links.push(link);
            }

            // Puncturing over the parity of this block.
            punctured.resize(next as usize, false);
            if punct_count > 0 {
                let eligible: Vec<u32> = if cfg.family == Family::Ppc && !cfg.puncture_coupled {
                    coupled_parity.sort_unstable();
                    (pu_start..next)
                        .filter(|v| coupled_parity.binary_search(v).is_err())
                        .collect()
                } else {
                    (pu_start..next).collect()
                };
                if eligible.len() < punct_count {
                    return Err(Error::config(format!(
                        "cannot puncture {punct_count} of {} eligible parity bits",
                        eligible.len()
                    )));
                }
                let mut rng = block_stream(seed, chain, t, Role::Puncture);
                for i in index::sample(&mut rng, eligible.len(), punct_count) {
                    punctured[eligible[i] as usize] = true;
                }
            }

            let interleaver = match &interleavers {
                InterleaverChoice::Random => {
                    Interleaver::random(k, &mut block_stream(seed, chain, t, Role::Interleaver))
                }
                InterleaverChoice::Fixed(p) => p.clone(),
            };
            let mut tc = TurboConfig::with_trellis(trellis.clone(), interleaver);
            tc.terminate = cfg.terminate;
            turbo.push(tc);
            blocks.push(BlockMap {
                slots,
                links,
                fresh,
                owned: fresh_start..next,
            });
            out.push(outs);
        }
        Ok(ChainCode {
            cfg: cfg.clone(),
            blocks,
            turbo,
            punctured,
            num_vars: next as usize,
        })
    }

    pub fn config(&self) -> &CouplingConfig {
        &self.cfg
    }

    pub fn blocks(&self) -> &[BlockMap] {
        &self.blocks
    }

    pub fn block(&self, t: usize) -> &BlockMap {
        &self.blocks[t]
    }

    pub fn turbo(&self, t: usize) -> &TurboConfig {
        &self.turbo[t]
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    #[inline]
    pub fn is_punctured(&self, var: u32) -> bool {
        self.punctured[var as usize]
    }

    /// Information bits carried by the chain.
    pub fn info_len(&self) -> usize {
        self.blocks.iter().map(|b| b.fresh.len()).sum()
    }

    /// Transmitted bits of block `t`, tails excluded.
    pub fn block_transmitted(&self, t: usize) -> usize {
        self.blocks[t]
            .owned
            .clone()
            .filter(|&v| !self.is_punctured(v))
            .count()
    }

    /// Transmitted bits of the chain, tails excluded.
    pub fn transmitted_len(&self) -> usize {
        (0..self.blocks.len())
            .map(|t| self.block_transmitted(t))
            .sum()
    }

    /// Tail bits sent with every block.
    pub fn tail_bits_per_block(&self) -> usize {
        4 * self.turbo[0].tail_len()
    }

    /// Measured rate `info / transmitted`, tails excluded.
    pub fn measured_rate(&self) -> Rational {
        Rational::new(self.info_len() as i64, self.transmitted_len() as i64)
    }

    /// Variables of the information stream, in order.
    pub fn info_vars(&self) -> impl Iterator<Item = u32> + '_ {
        self.blocks.iter().flat_map(|b| b.fresh.clone())
    }

    /// Encodes an information stream of length [`Self::info_len`].
    pub fn encode(&self, info: &[u8]) -> Result<ChainCodeword> {
        if info.len() != self.info_len() {
            return Err(Error::config(format!(
                "information stream has {} bits, chain carries {}",
                info.len(),
                self.info_len()
            )));
        }
        let k = self.cfg.k;
        let mut bits = vec![0u8; self.num_vars];
        for (v, &b) in self.info_vars().zip(info) {
            bits[v as usize] = b & 1;
        }
        let mut tails = Vec::with_capacity(self.blocks.len());
        let mut u = vec![0u8; k];
        for (t, block) in self.blocks.iter().enumerate() {
            for (x, &v) in u.iter_mut().zip(&block.slots[0]) {
                *x = if v == ZERO { 0 } else { bits[v as usize] };
            }
            let cw = turbo_encode(&self.turbo[t], &u)?;
            for pos in 0..k {
                bits[block.slots[1][pos] as usize] = cw.parity_upper[pos];
                bits[block.slots[2][pos] as usize] = cw.parity_lower[pos];
            }
            tails.push([cw.tail_upper, cw.tail_lower]);
        }
        Ok(ChainCodeword { bits, tails })
    }

    /// Channel output with the erasure pattern chosen by `erase` for every
    /// transmitted variable and tail bit; punctured variables are erased.
    pub fn receive(
        &self,
        cw: &ChainCodeword,
        mut erase: impl FnMut(usize) -> bool,
    ) -> ReceivedChain {
        let mut symbols = vec![Ternary::Erased; self.num_vars];
        let mut tails = Vec::with_capacity(self.blocks.len());
        for (t, block) in self.blocks.iter().enumerate() {
            for v in block.owned.clone() {
                if !self.is_punctured(v) && !erase(t) {
                    symbols[v as usize] = Ternary::known(cw.bits[v as usize]);
                }
            }
            let mut obs = |tail: &[[u8; 2]]| -> Vec<[Ternary; 2]> {
                tail.iter()
                    .map(|pair| {
                        let mut o = [Ternary::Erased; 2];
                        for (x, &b) in o.iter_mut().zip(pair) {
                            if !erase(t) {
                                *x = Ternary::known(b);
                            }
                        }
                        o
                    })
                    .collect()
            };
            tails.push([obs(&cw.tails[t][0]), obs(&cw.tails[t][1])]);
        }
        ReceivedChain { symbols, tails }
    }

    /// Noise-free reception.
    pub fn receive_clean(&self, cw: &ChainCodeword) -> ReceivedChain {
        self.receive(cw, |_| false)
    }
}

/// Termination zeros at the end of the input of PPC block `t`.
pub fn ppc_termination_len(cfg: &CouplingConfig, t: usize) -> usize {
    let (l, m) = (cfg.chain_len, cfg.m);
    if t + 1 + m <= l {
        return 0;
    }
    let depth = (t + 1 + m - l) as i64;
    let k = cfg.k as i64;
    let lk = (cfg.lambda * k).to_integer();
    (depth * lk / m as i64).min(k - lk) as usize
}

/// Values of every chain variable plus the tails of every block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainCodeword {
    pub bits: Vec<u8>,
    /// `[upper, lower]` tail `(systematic, parity)` pairs per block.
    pub tails: Vec<[Vec<[u8; 2]>; 2]>,
}

impl ChainCodeword {
    /// The transmitted word `c_t` of block `t` (punctured bits dropped,
    /// tails appended).
    pub fn block_bits(&self, code: &ChainCode, t: usize) -> Vec<u8> {
        let mut v: Vec<u8> = code
            .block(t)
            .owned
            .clone()
            .filter(|&x| !code.is_punctured(x))
            .map(|x| self.bits[x as usize])
            .collect();
        for tail in &self.tails[t] {
            for pair in tail {
                v.extend_from_slice(pair);
            }
        }
        v
    }

    pub fn info(&self, code: &ChainCode) -> Vec<u8> {
        code.info_vars().map(|v| self.bits[v as usize]).collect()
    }
}

/// Channel observations of a chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReceivedChain {
    pub symbols: Vec<Ternary>,
    pub tails: Vec<[Vec<[Ternary; 2]>; 2]>,
}

/// Checks a configuration for encoding and returns the chain's asymptotic
/// parameters as floats, for reporting.
pub fn describe_rate(cfg: &CouplingConfig) -> Result<(f64, f64)> {
    Ok((
        to_f64(rate_of(cfg)?),
        to_f64(asymptotic_rate(cfg.lambda, cfg.rho)),
    ))
}

pub fn pic_encode(code: &ChainCode, info: &[u8]) -> Result<ChainCodeword> {
    if code.cfg.family != Family::Pic {
        return Err(Error::config("pic_encode needs a PIC chain"));
    }
    code.encode(info)
}

pub fn ppc_encode(code: &ChainCode, info: &[u8]) -> Result<ChainCodeword> {
    if code.cfg.family != Family::Ppc {
        return Err(Error::config("ppc_encode needs a PPC chain"));
    }
    code.encode(info)
}

#[cfg(test)]
mod tests;
