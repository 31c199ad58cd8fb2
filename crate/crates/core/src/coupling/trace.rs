//! Flat binary format for chain codewords and received chains.
//!
//! Layout: the magic `CTTRACE1`, a little-endian `u32` header length, a
//! UTF-8 header of `key = value` lines, then the packed body. Each symbol
//! takes two bits (`00` known 0, `01` known 1, `10` erased), four symbols
//! per byte, least significant pair first.

use std::io::{Read, Write};

use crate::config::CouplingConfig;
use crate::coupling::{ChainCode, ChainCodeword, ReceivedChain};
use crate::error::{Error, Result};
use crate::trellis::Ternary;

const MAGIC: &[u8; 8] = b"CTTRACE1";

/// Everything needed to replay one decoding: the chain is rebuilt from
/// `(config, seed, chain)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub config: CouplingConfig,
    pub seed: u64,
    pub chain: u64,
    pub codeword: Option<ChainCodeword>,
    pub received: ReceivedChain,
}

impl Trace {
    /// Rebuilds the chain code the trace was produced with.
    pub fn code(&self) -> Result<ChainCode> {
        ChainCode::sample(&self.config, self.seed, self.chain)
    }
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn code(x: Ternary) -> u8 {
    match x {
        Ternary::Known0 => 0,
        Ternary::Known1 => 1,
        Ternary::Erased => 2,
    }
}

fn decode_sym(c: u8) -> Result<Ternary> {
    match c {
        0 => Ok(Ternary::Known0),
        1 => Ok(Ternary::Known1),
        2 => Ok(Ternary::Erased),
        _ => Err(format_err("invalid symbol code 3")),
    }
}

struct Packer {
    bytes: Vec<u8>,
    n: usize,
}

impl Packer {
    fn push(&mut self, x: Ternary) {
        if self.n.is_multiple_of(4) {
            self.bytes.push(0);
        }
        *self.bytes.last_mut().unwrap() |= code(x) << (2 * (self.n % 4));
        self.n += 1;
    }
}

struct Unpacker<'a> {
    bytes: &'a [u8],
    n: usize,
}

impl Unpacker<'_> {
    fn next(&mut self) -> Result<Ternary> {
        let byte = *self
            .bytes
            .get(self.n / 4)
            .ok_or_else(|| format_err("body too short"))?;
        let x = decode_sym((byte >> (2 * (self.n % 4))) & 3)?;
        self.n += 1;
        Ok(x)
    }
}

fn tail_len_of(tails: &[[Vec<[Ternary; 2]>; 2]]) -> usize {
    tails.first().map_or(0, |t| t[0].len())
}

pub fn write_trace(mut w: impl Write, trace: &Trace) -> Result<()> {
    let rx = &trace.received;
    let tail_len = tail_len_of(&rx.tails);
    let mut header = String::new();
    for (k, v) in trace.config.describe() {
        header.push_str(&format!("{k} = {v}\n"));
    }
    header.push_str(&format!("seed = {}\n", trace.seed));
    header.push_str(&format!("chain = {}\n", trace.chain));
    header.push_str(&format!("num_vars = {}\n", rx.symbols.len()));
    header.push_str(&format!("blocks = {}\n", rx.tails.len()));
    header.push_str(&format!("tail_len = {tail_len}\n"));
    header.push_str(&format!("codeword = {}\n", trace.codeword.is_some()));

    let mut p = Packer {
        bytes: Vec::new(),
        n: 0,
    };
    if let Some(cw) = &trace.codeword {
        if cw.bits.len() != rx.symbols.len() || cw.tails.len() != rx.tails.len() {
            return Err(Error::config("codeword and received chain differ in size"));
        }
        cw.bits.iter().for_each(|&b| p.push(Ternary::known(b)));
        for t in &cw.tails {
            for half in t {
                if half.len() != tail_len {
                    return Err(Error::config("ragged tails"));
                }
                half.iter()
                    .flatten()
                    .for_each(|&b| p.push(Ternary::known(b)));
            }
        }
    }
    rx.symbols.iter().for_each(|&x| p.push(x));
    for t in &rx.tails {
        for half in t {
            if half.len() != tail_len {
                return Err(Error::config("ragged tails"));
            }
            half.iter().flatten().for_each(|&x| p.push(x));
        }
    }

    let ctx = "writing trace";
    w.write_all(MAGIC).map_err(|e| Error::io(ctx, e))?;
    w.write_all(&(header.len() as u32).to_le_bytes())
        .map_err(|e| Error::io(ctx, e))?;
    w.write_all(header.as_bytes())
        .map_err(|e| Error::io(ctx, e))?;
    w.write_all(&p.bytes).map_err(|e| Error::io(ctx, e))?;
    Ok(())
}

pub fn read_trace(mut r: impl Read) -> Result<Trace> {
    let ctx = "reading trace";
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|e| Error::io(ctx, e))?;
    if &magic != MAGIC {
        return Err(format_err("bad magic"));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len).map_err(|e| Error::io(ctx, e))?;
    let len = u32::from_le_bytes(len) as usize;
    if len > 1 << 20 {
        return Err(format_err("header too long"));
    }
    let mut header = vec![0u8; len];
    r.read_exact(&mut header).map_err(|e| Error::io(ctx, e))?;
    let header = String::from_utf8(header).map_err(|_| format_err("header is not UTF-8"))?;

    let mut config = CouplingConfig::default();
    let (mut seed, mut chain, mut num_vars, mut blocks, mut tail_len, mut has_cw) =
        (None, None, None, None, None, None);
    for line in header.lines() {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format_err(format!("bad header line {line:?}")))?;
        let (k, v) = (k.trim(), v.trim());
        let num = || {
            v.parse::<u64>()
                .map_err(|_| format_err(format!("{k}: not an integer {v:?}")))
        };
        match k {
            "seed" => seed = Some(num()?),
            "chain" => chain = Some(num()?),
            "num_vars" => num_vars = Some(num()? as usize),
            "blocks" => blocks = Some(num()? as usize),
            "tail_len" => tail_len = Some(num()? as usize),
            "codeword" => {
                has_cw = Some(
                    v.parse::<bool>()
                        .map_err(|_| format_err(format!("codeword: {v:?}")))?,
                )
            }
            _ => config
                .set(k, v)
                .map_err(|e| format_err(format!("header: {e}")))?,
        }
    }
    let missing = |k: &str| format_err(format!("header lacks {k}"));
    let seed = seed.ok_or_else(|| missing("seed"))?;
    let chain = chain.ok_or_else(|| missing("chain"))?;
    let num_vars = num_vars.ok_or_else(|| missing("num_vars"))?;
    let blocks = blocks.ok_or_else(|| missing("blocks"))?;
    let tail_len = tail_len.ok_or_else(|| missing("tail_len"))?;
    let has_cw = has_cw.ok_or_else(|| missing("codeword"))?;
    if blocks != config.chain_len {
        return Err(format_err("block count disagrees with chain_len"));
    }

    let per_copy = num_vars as u64 + blocks as u64 * 4 * tail_len as u64;
    let symbols = per_copy * if has_cw { 2 } else { 1 };
    let mut body = Vec::new();
    r.read_to_end(&mut body).map_err(|e| Error::io(ctx, e))?;
    if body.len() as u64 != symbols.div_ceil(4) {
        return Err(format_err(format!(
            "body has {} bytes, expected {}",
            body.len(),
            symbols.div_ceil(4)
        )));
    }
    let mut u = Unpacker { bytes: &body, n: 0 };
    let read_tails = |u: &mut Unpacker<'_>| -> Result<Vec<[Vec<[Ternary; 2]>; 2]>> {
        let mut tails = Vec::with_capacity(blocks);
        for _ in 0..blocks {
            let mut half = || -> Result<Vec<[Ternary; 2]>> {
                (0..tail_len).map(|_| Ok([u.next()?, u.next()?])).collect()
            };
            let up = half()?;
            let lo = half()?;
            tails.push([up, lo]);
        }
        Ok(tails)
    };
    let bit = |x: Ternary| x.bit().ok_or_else(|| format_err("erased codeword symbol"));
    let codeword = if has_cw {
        let bits = (0..num_vars)
            .map(|_| bit(u.next()?))
            .collect::<Result<Vec<u8>>>()?;
        let tails = read_tails(&mut u)?
            .into_iter()
            .map(|[a, b]| -> Result<[Vec<[u8; 2]>; 2]> {
                let conv = |h: Vec<[Ternary; 2]>| -> Result<Vec<[u8; 2]>> {
                    h.into_iter().map(|[x, y]| Ok([bit(x)?, bit(y)?])).collect()
                };
                Ok([conv(a)?, conv(b)?])
            })
            .collect::<Result<Vec<_>>>()?;
        Some(ChainCodeword { bits, tails })
    } else {
        None
    };
    let symbols = (0..num_vars)
        .map(|_| u.next())
        .collect::<Result<Vec<Ternary>>>()?;
    let tails = read_tails(&mut u)?;
    Ok(Trace {
        config,
        seed,
        chain,
        codeword,
        received: ReceivedChain { symbols, tails },
    })
}
