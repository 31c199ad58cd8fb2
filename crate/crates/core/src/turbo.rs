//! Rate-1/3 parallel concatenated (turbo) code built from two identical RSC
//! encoders, and its iterative erasure decoder.
//!
//! The decoder accepts an external prior on every information and parity
//! position and reports extrinsics that exclude both the channel value and
//! the external prior of the emitting position, which is what a coupled
//! chain needs to exchange messages between blocks.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::trellis::{
    build_trellis, decode_into, rsc_encode, BcjrScratch, GeneratorSpec, Ternary, TernaryVec,
    Trellis,
};

/// Permutation feeding the lower encoder: its `i`-th input is `u[perm[i]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<u32>,
}

impl Interleaver {
    pub fn identity(k: usize) -> Self {
        Interleaver {
            perm: (0..k as u32).collect(),
        }
    }

    /// Uniformly random permutation.
    pub fn random(k: usize, rng: &mut impl Rng) -> Self {
        let mut perm: Vec<u32> = (0..k as u32).collect();
        perm.shuffle(rng);
        Interleaver { perm }
    }

    pub fn from_perm(perm: Vec<usize>) -> Result<Self> {
        let k = perm.len();
        let mut seen = vec![false; k];
        for &p in &perm {
            if p >= k || std::mem::replace(&mut seen[p], true) {
                return Err(Error::config(format!(
                    "interleaver is not a permutation of 0..{k}"
                )));
            }
        }
        Ok(Interleaver {
            perm: perm.into_iter().map(|p| p as u32).collect(),
        })
    }

    /// Whitespace-separated indices, `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut perm = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("");
            for tok in line.split_whitespace() {
                perm.push(
                    tok.parse::<usize>()
                        .map_err(|_| Error::config(format!("bad interleaver index {tok:?}")))?,
                );
            }
        }
        Self::from_perm(perm)
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> usize {
        self.perm[i] as usize
    }

    pub fn apply<T: Copy>(&self, x: &[T]) -> Vec<T> {
        self.perm.iter().map(|&p| x[p as usize]).collect()
    }
}

/// A turbo code of information length `K`.
#[derive(Clone, Debug)]
pub struct TurboConfig {
    pub k: usize,
    pub interleaver: Interleaver,
    /// Cap on decoder iterations; `None` iterates until nothing changes.
    pub inner_iterations: Option<usize>,
    /// Drive both encoders back to the zero state with tail steps.
    pub terminate: bool,
    trellis: Arc<Trellis>,
}

impl TurboConfig {
    pub fn new(generator: GeneratorSpec, interleaver: Interleaver) -> Result<Self> {
        Ok(Self::with_trellis(
            Arc::new(build_trellis(generator)?),
            interleaver,
        ))
    }

    pub fn with_trellis(trellis: Arc<Trellis>, interleaver: Interleaver) -> Self {
        TurboConfig {
            k: interleaver.len(),
            interleaver,
            inner_iterations: None,
            terminate: true,
            trellis,
        }
    }

    pub fn trellis(&self) -> &Trellis {
        &self.trellis
    }

    pub fn shared_trellis(&self) -> Arc<Trellis> {
        self.trellis.clone()
    }

    /// Tail steps per encoder.
    pub fn tail_len(&self) -> usize {
        if self.terminate {
            self.trellis.memory()
        } else {
            0
        }
    }

    /// Transmitted bits including both tails.
    pub fn n(&self) -> usize {
        3 * self.k + 4 * self.tail_len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TurboCodeword {
    pub systematic: Vec<u8>,
    pub parity_upper: Vec<u8>,
    pub parity_lower: Vec<u8>,
    /// `(systematic, parity)` of the termination steps of each encoder.
    pub tail_upper: Vec<[u8; 2]>,
    pub tail_lower: Vec<[u8; 2]>,
}

pub fn turbo_encode(cfg: &TurboConfig, u: &[u8]) -> Result<TurboCodeword> {
    if u.len() != cfg.k {
        return Err(Error::config(format!(
            "information length {} does not match K = {}",
            u.len(),
            cfg.k
        )));
    }
    let upper = rsc_encode(cfg.trellis(), u, cfg.terminate);
    let lower = rsc_encode(cfg.trellis(), &cfg.interleaver.apply(u), cfg.terminate);
    Ok(TurboCodeword {
        systematic: u.to_vec(),
        parity_upper: upper.parity,
        parity_lower: lower.parity,
        tail_upper: upper.tail,
        tail_lower: lower.tail,
    })
}

/// Ternary messages on the `3K` non-tail positions of a turbo codeword.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TurboSymbols {
    pub info: TernaryVec,
    pub parity_upper: TernaryVec,
    pub parity_lower: TernaryVec,
}

/// Extrinsic output of the turbo decoder.
pub type TurboExtrinsics = TurboSymbols;

impl TurboSymbols {
    pub fn erased(k: usize) -> Self {
        TurboSymbols {
            info: vec![Ternary::Erased; k],
            parity_upper: vec![Ternary::Erased; k],
            parity_lower: vec![Ternary::Erased; k],
        }
    }

    pub fn known(cw: &TurboCodeword) -> Self {
        let map = |v: &[u8]| v.iter().map(|&b| Ternary::known(b)).collect();
        TurboSymbols {
            info: map(&cw.systematic),
            parity_upper: map(&cw.parity_upper),
            parity_lower: map(&cw.parity_lower),
        }
    }

    pub fn len(&self) -> usize {
        self.info.len()
    }

    pub fn is_empty(&self) -> bool {
        self.info.is_empty()
    }
}

/// Channel observations of a turbo codeword, tails included.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TurboReceived {
    pub symbols: TurboSymbols,
    pub tail_upper: Vec<[Ternary; 2]>,
    pub tail_lower: Vec<[Ternary; 2]>,
}

impl TurboReceived {
    /// Noise-free observation of a codeword.
    pub fn clean(cw: &TurboCodeword) -> Self {
        let tail = |t: &[[u8; 2]]| {
            t.iter()
                .map(|&[a, b]| [Ternary::known(a), Ternary::known(b)])
                .collect()
        };
        TurboReceived {
            symbols: TurboSymbols::known(cw),
            tail_upper: tail(&cw.tail_upper),
            tail_lower: tail(&cw.tail_lower),
        }
    }

    pub fn erased(cfg: &TurboConfig) -> Self {
        let tail = vec![[Ternary::Erased; 2]; cfg.tail_len()];
        TurboReceived {
            symbols: TurboSymbols::erased(cfg.k),
            tail_upper: tail.clone(),
            tail_lower: tail,
        }
    }
}

fn combine_into(out: &mut Vec<Ternary>, a: &[Ternary], b: &[Ternary]) -> Result<()> {
    out.clear();
    for (&x, &y) in a.iter().zip(b) {
        out.push(x.combine(y)?);
    }
    Ok(())
}

fn check_len(name: &str, v: &[Ternary], k: usize) -> Result<()> {
    if v.len() != k {
        return Err(Error::config(format!(
            "{name} has length {} but K = {k}",
            v.len()
        )));
    }
    Ok(())
}

/// Iterative decoder holding the extrinsics of its last run, so that a
/// block revisited with more knowledge resumes where it stopped.
///
/// Extrinsics derived from fewer known priors are always implied by the
/// current ones, so resuming reaches the same fixed point as starting over.
#[derive(Clone, Debug, Default)]
pub struct TurboDecoder {
    scratch: BcjrScratch,
    base_info: TernaryVec,
    base_pu: TernaryVec,
    base_pl: TernaryVec,
    sys_prior: TernaryVec,
    par_prior: TernaryVec,
    sys_out: TernaryVec,
    par_out: TernaryVec,
    /// Upper-decoder extrinsic on information bit `t`.
    ext_upper: TernaryVec,
    /// Lower-decoder extrinsic on information bit `t` (natural order).
    ext_lower: TernaryVec,
    par_ext_upper: TernaryVec,
    par_ext_lower: TernaryVec,
}

impl TurboDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Forgets the extrinsics of previous runs.
    pub fn reset(&mut self, k: usize) {
        for v in [
            &mut self.ext_upper,
            &mut self.ext_lower,
            &mut self.par_ext_upper,
            &mut self.par_ext_lower,
        ] {
            v.clear();
            v.resize(k, Ternary::Erased);
        }
    }

    /// Runs the decoder; returns the number of iterations performed.
    pub fn run(
        &mut self,
        cfg: &TurboConfig,
        channel: &TurboReceived,
        external: &TurboSymbols,
        iterations: Option<usize>,
    ) -> Result<usize> {
        let k = cfg.k;
        let nu = cfg.tail_len();
        for (name, v) in [
            ("channel info", &channel.symbols.info),
            ("channel upper parity", &channel.symbols.parity_upper),
            ("channel lower parity", &channel.symbols.parity_lower),
            ("external info", &external.info),
            ("external upper parity", &external.parity_upper),
            ("external lower parity", &external.parity_lower),
        ] {
            check_len(name, v, k)?;
        }
        if channel.tail_upper.len() != nu || channel.tail_lower.len() != nu {
            return Err(Error::config(format!("tails must have {nu} steps")));
        }
        if self.ext_upper.len() != k {
            self.reset(k);
        }
        combine_into(&mut self.base_info, &channel.symbols.info, &external.info)?;
        combine_into(
            &mut self.base_pu,
            &channel.symbols.parity_upper,
            &external.parity_upper,
        )?;
        combine_into(
            &mut self.base_pl,
            &channel.symbols.parity_lower,
            &external.parity_lower,
        )?;
        let trellis = cfg.trellis();
        let n = k + nu;
        let cap = iterations.unwrap_or(usize::MAX);
        let mut done = 0;
        while done < cap {
            done += 1;
            // Upper decoder.
            self.sys_prior.clear();
            for t in 0..k {
                self.sys_prior
                    .push(self.base_info[t].combine(self.ext_lower[t])?);
            }
            self.par_prior.clear();
            self.par_prior.extend_from_slice(&self.base_pu);
            for &[s, p] in &channel.tail_upper {
                self.sys_prior.push(s);
                self.par_prior.push(p);
            }
            self.sys_out.resize(n, Ternary::Erased);
            self.par_out.resize(n, Ternary::Erased);
            decode_into(
                trellis,
                &self.sys_prior,
                &self.par_prior,
                true,
                cfg.terminate,
                &mut self.scratch,
                &mut self.sys_out,
                &mut self.par_out,
            )?;
            self.ext_upper.copy_from_slice(&self.sys_out[..k]);
            self.par_ext_upper.copy_from_slice(&self.par_out[..k]);

            // Lower decoder, in interleaved order.
            self.sys_prior.clear();
            for i in 0..k {
                let t = cfg.interleaver.get(i);
                self.sys_prior
                    .push(self.base_info[t].combine(self.ext_upper[t])?);
            }
            self.par_prior.clear();
            self.par_prior.extend_from_slice(&self.base_pl);
            for &[s, p] in &channel.tail_lower {
                self.sys_prior.push(s);
                self.par_prior.push(p);
            }
            decode_into(
                trellis,
                &self.sys_prior,
                &self.par_prior,
                true,
                cfg.terminate,
                &mut self.scratch,
                &mut self.sys_out,
                &mut self.par_out,
            )?;
            let mut changed = false;
            for i in 0..k {
                let t = cfg.interleaver.get(i);
                let new = self.sys_out[i];
                if new != self.ext_lower[t] {
                    changed = true;
                    self.ext_lower[t] = new;
                }
            }
            self.par_ext_lower.copy_from_slice(&self.par_out[..k]);
            if !changed {
                break;
            }
        }
        Ok(done)
    }

    /// Extrinsic on information bit `t` from both component decoders.
    #[inline]
    pub fn info_extrinsic(&self, t: usize) -> Ternary {
        self.ext_upper[t].or(self.ext_lower[t])
    }

    #[inline]
    pub fn parity_upper_extrinsic(&self, t: usize) -> Ternary {
        self.par_ext_upper[t]
    }

    #[inline]
    pub fn parity_lower_extrinsic(&self, t: usize) -> Ternary {
        self.par_ext_lower[t]
    }

    pub fn extrinsics(&self) -> TurboExtrinsics {
        let k = self.ext_upper.len();
        TurboSymbols {
            info: (0..k).map(|t| self.info_extrinsic(t)).collect(),
            parity_upper: self.par_ext_upper.clone(),
            parity_lower: self.par_ext_lower.clone(),
        }
    }
}

/// Decodes one turbo codeword from scratch.
pub fn turbo_decode(
    cfg: &TurboConfig,
    channel: &TurboReceived,
    external: &TurboSymbols,
    iterations: Option<usize>,
) -> Result<TurboExtrinsics> {
    let mut dec = TurboDecoder::new();
    dec.run(cfg, channel, external, iterations)?;
    Ok(dec.extrinsics())
}

/// Channel, external prior and extrinsic combined.
pub fn a_posteriori(
    channel: &TurboSymbols,
    external: &TurboSymbols,
    ext: &TurboExtrinsics,
) -> Result<TurboSymbols> {
    let three = |a: &[Ternary], b: &[Ternary], c: &[Ternary]| -> Result<TernaryVec> {
        a.iter()
            .zip(b)
            .zip(c)
            .map(|((&x, &y), &z)| x.combine(y)?.combine(z))
            .collect()
    };
    Ok(TurboSymbols {
        info: three(&channel.info, &external.info, &ext.info)?,
        parity_upper: three(
            &channel.parity_upper,
            &external.parity_upper,
            &ext.parity_upper,
        )?,
        parity_lower: three(
            &channel.parity_lower,
            &external.parity_lower,
            &ext.parity_lower,
        )?,
    })
}
