use std::ops::Range;

use crate::coupling::{ChainCode, ReceivedChain, Stream, ZERO};
use crate::error::{Error, Result};
use crate::trellis::Ternary;
use crate::turbo::{TurboDecoder, TurboReceived, TurboSymbols};

/// Iteration budget of the chain decoders.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecodeOptions {
    /// FF-FB sweeps (per window for the window decoder).
    pub max_sweeps: usize,
    /// Turbo iterations per block visit; `None` runs each visit to stall.
    pub inner_iterations: Option<usize>,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        DecodeOptions {
            max_sweeps: 100,
            inner_iterations: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeOutcome {
    /// Decoded information stream.
    pub info: Vec<Ternary>,
    /// Erased information bits left in each block.
    pub erased_per_block: Vec<usize>,
    pub sweeps: usize,
    /// Turbo decoder runs.
    pub visits: usize,
}

impl DecodeOutcome {
    pub fn erased(&self) -> usize {
        self.erased_per_block.iter().sum()
    }
}

pub type WindowOutcome = DecodeOutcome;

#[inline]
fn extrinsic(dec: &TurboDecoder, stream: Stream, pos: usize) -> Ternary {
    match stream {
        Stream::Info => dec.info_extrinsic(pos),
        Stream::ParityUpper => dec.parity_upper_extrinsic(pos),
        Stream::ParityLower => dec.parity_lower_extrinsic(pos),
    }
}

/// Block-wise decoding state of a received chain.
///
/// A block is revisited only when an extrinsic it receives from a coupled
/// block has changed since its last run.
pub struct ChainDecoder<'a> {
    code: &'a ChainCode,
    rx: &'a ReceivedChain,
    channel: Vec<Option<TurboReceived>>,
    decoders: Vec<TurboDecoder>,
    dirty: Vec<bool>,
    external: TurboSymbols,
    before: Vec<Ternary>,
    inner: Option<usize>,
    visits: usize,
}

impl<'a> ChainDecoder<'a> {
    pub fn new(code: &'a ChainCode, rx: &'a ReceivedChain, inner: Option<usize>) -> Result<Self> {
        let l = code.blocks().len();
        if rx.symbols.len() != code.num_vars() || rx.tails.len() != l {
            return Err(Error::config("received chain does not match the code"));
        }
        Ok(ChainDecoder {
            code,
            rx,
            channel: vec![None; l],
            decoders: (0..l)
                .map(|_| {
                    let mut d = TurboDecoder::new();
                    d.reset(code.config().k);
                    d
                })
                .collect(),
            dirty: vec![true; l],
            external: TurboSymbols::erased(code.config().k),
            before: Vec::new(),
            inner,
            visits: 0,
        })
    }

    fn channel_of(&mut self, t: usize) -> &TurboReceived {
        let (code, rx) = (self.code, self.rx);
        self.channel[t].get_or_insert_with(|| {
            let block = code.block(t);
            let pick = |s: Stream| -> Vec<Ternary> {
                block.slots[s as usize]
                    .iter()
                    .map(|&v| {
                        if v == ZERO {
                            Ternary::Known0
                        } else {
                            rx.symbols[v as usize]
                        }
                    })
                    .collect()
            };
            TurboReceived {
                symbols: TurboSymbols {
                    info: pick(Stream::Info),
                    parity_upper: pick(Stream::ParityUpper),
                    parity_lower: pick(Stream::ParityLower),
                },
                tail_upper: rx.tails[t][0].clone(),
                tail_lower: rx.tails[t][1].clone(),
            }
        })
    }

    /// Runs the turbo decoder of block `t` with the current extrinsics of
    /// its coupled blocks as external priors.
    pub fn visit(&mut self, t: usize) -> Result<()> {
        let block = self.code.block(t);
        for v in [
            &mut self.external.info,
            &mut self.external.parity_upper,
            &mut self.external.parity_lower,
        ] {
            v.fill(Ternary::Erased);
        }
        self.before.clear();
        for link in &block.links {
            let x = extrinsic(
                &self.decoders[link.block as usize],
                link.partner_stream,
                link.partner_pos as usize,
            );
            let slot = match link.stream {
                Stream::Info => &mut self.external.info,
                Stream::ParityUpper => &mut self.external.parity_upper,
                Stream::ParityLower => &mut self.external.parity_lower,
            };
            slot[link.pos as usize] = x;
            self.before
                .push(extrinsic(&self.decoders[t], link.stream, link.pos as usize));
        }
        self.channel_of(t);
        let channel = self.channel[t].as_ref().expect("channel built above");
        self.decoders[t].run(self.code.turbo(t), channel, &self.external, self.inner)?;
        self.visits += 1;
        self.dirty[t] = false;
        for (link, &old) in block.links.iter().zip(&self.before) {
            if extrinsic(&self.decoders[t], link.stream, link.pos as usize) != old {
                self.dirty[link.block as usize] = true;
            }
        }
        Ok(())
    }

    /// Whether any block in `range` is waiting for a visit.
    pub fn pending(&self, range: Range<usize>) -> bool {
        self.dirty[range].iter().any(|&d| d)
    }

    /// One feed-forward and one feedback pass over `range`, visiting only
    /// blocks with changed inputs. Returns `false` if nothing was pending.
    pub fn sweep(&mut self, range: Range<usize>) -> Result<bool> {
        if !self.pending(range.clone()) {
            return Ok(false);
        }
        for t in range.clone() {
            if self.dirty[t] {
                self.visit(t)?;
            }
        }
        for t in range.rev() {
            if self.dirty[t] {
                self.visit(t)?;
            }
        }
        Ok(true)
    }

    pub fn visits(&self) -> usize {
        self.visits
    }

    /// A-posteriori values of the fresh information of block `t` under the
    /// current extrinsics.
    pub fn block_decisions(&self, t: usize) -> Result<Vec<Ternary>> {
        let block = self.code.block(t);
        let start = block.fresh.start;
        let mut out: Vec<Ternary> = block
            .fresh
            .clone()
            .map(|v| self.rx.symbols[v as usize])
            .collect();
        let dec = &self.decoders[t];
        for (pos, &v) in block.slots[Stream::Info as usize].iter().enumerate() {
            if v != ZERO && block.fresh.contains(&v) {
                let i = (v - start) as usize;
                out[i] = out[i].combine(dec.info_extrinsic(pos))?;
            }
        }
        for link in &block.links {
            let v = block.var(link.stream, link.pos as usize);
            if link.stream == Stream::Info && block.fresh.contains(&v) {
                let i = (v - start) as usize;
                let x = extrinsic(
                    &self.decoders[link.block as usize],
                    link.partner_stream,
                    link.partner_pos as usize,
                );
                out[i] = out[i].combine(x)?;
            }
        }
        Ok(out)
    }

    /// Current a-posteriori values of every chain variable.
    pub fn all_decisions(&self) -> Result<Vec<Ternary>> {
        let mut post = self.rx.symbols.clone();
        for (t, block) in self.code.blocks().iter().enumerate() {
            let dec = &self.decoders[t];
            for s in Stream::ALL {
                for (pos, &v) in block.slots[s as usize].iter().enumerate() {
                    if v != ZERO {
                        post[v as usize] = post[v as usize].combine(extrinsic(dec, s, pos))?;
                    }
                }
            }
        }
        Ok(post)
    }
}

fn collect(
    dec: &ChainDecoder<'_>,
    blocks: Range<usize>,
    info: &mut Vec<Ternary>,
    erased: &mut Vec<usize>,
) -> Result<()> {
    for t in blocks {
        let d = dec.block_decisions(t)?;
        erased.push(d.iter().filter(|x| x.is_erased()).count());
        info.extend(d);
    }
    Ok(())
}

/// Feed-forward/feedback decoding of the whole chain until no block has
/// new inputs or `opts.max_sweeps` sweeps have run.
pub fn ff_fb_decode(
    code: &ChainCode,
    rx: &ReceivedChain,
    opts: &DecodeOptions,
) -> Result<DecodeOutcome> {
    let l = code.blocks().len();
    let mut dec = ChainDecoder::new(code, rx, opts.inner_iterations)?;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps && dec.sweep(0..l)? {
        sweeps += 1;
    }
    let mut info = Vec::with_capacity(code.info_len());
    let mut erased = Vec::with_capacity(l);
    collect(&dec, 0..l, &mut info, &mut erased)?;
    Ok(DecodeOutcome {
        info,
        erased_per_block: erased,
        sweeps,
        visits: dec.visits(),
    })
}

/// Sliding-window decoding: FF-FB restricted to `w` consecutive blocks,
/// committing the first block of the window before sliding by one.
pub fn window_decode(
    code: &ChainCode,
    rx: &ReceivedChain,
    w: usize,
    opts: &DecodeOptions,
) -> Result<WindowOutcome> {
    let l = code.blocks().len();
    let m = code.config().m;
    if w < m + 1 {
        return Err(Error::config(format!(
            "window size {w} must be at least m + 1 = {}",
            m + 1
        )));
    }
    let w = w.min(l);
    let mut dec = ChainDecoder::new(code, rx, opts.inner_iterations)?;
    let mut info = Vec::with_capacity(code.info_len());
    let mut erased = Vec::with_capacity(l);
    let mut sweeps = 0;
    for start in 0..=l - w {
        let window = start..start + w;
        let mut used = 0;
        while used < opts.max_sweeps && dec.sweep(window.clone())? {
            used += 1;
        }
        sweeps += used;
        if start < l - w {
            collect(&dec, start..start + 1, &mut info, &mut erased)?;
        } else {
            collect(&dec, window, &mut info, &mut erased)?;
        }
    }
    Ok(DecodeOutcome {
        info,
        erased_per_block: erased,
        sweeps,
        visits: dec.visits(),
    })
}
