//! Rate-1/2 recursive systematic convolutional (RSC) component code and its
//! exact symbol-wise MAP decoder on the binary erasure channel.
//!
//! On the erasure channel a BCJR decoder never has to deal with soft values:
//! every message is either a known bit or an erasure. The forward and
//! backward recursions reduce to propagating the *set* of trellis states
//! that are consistent with the known symbols, and an extrinsic bit is known
//! exactly when every surviving branch carries the same value. State sets are
//! bitmasks, so the whole decoder is table lookups for small codes.

use crate::error::{Error, Result};

/// Erasure-channel message about one bit.
///
/// A log-likelihood ratio on the BEC is either `0` (erased) or `±∞` (known),
/// and adding LLRs reduces to "any known source wins".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
#[repr(u8)]
pub enum Ternary {
    Known0 = 0,
    Known1 = 1,
    #[default]
    Erased = 2,
}

pub type TernaryVec = Vec<Ternary>;

impl Ternary {
    #[inline]
    pub fn known(bit: u8) -> Self {
        if bit & 1 == 0 {
            Ternary::Known0
        } else {
            Ternary::Known1
        }
    }

    #[inline]
    pub fn is_known(self) -> bool {
        self != Ternary::Erased
    }

    #[inline]
    pub fn is_erased(self) -> bool {
        self == Ternary::Erased
    }

    /// The known bit value, if any.
    #[inline]
    pub fn bit(self) -> Option<u8> {
        match self {
            Ternary::Known0 => Some(0),
            Ternary::Known1 => Some(1),
            Ternary::Erased => None,
        }
    }

    /// Whether a transmitted `bit` is compatible with this message.
    #[inline]
    pub fn admits(self, bit: u8) -> bool {
        self == Ternary::Erased || self as u8 == bit
    }

    /// Known-wins combination of two messages about the same bit.
    #[inline]
    pub fn combine(self, other: Ternary) -> Result<Ternary> {
        match (self, other) {
            (Ternary::Erased, x) | (x, Ternary::Erased) => Ok(x),
            (a, b) if a == b => Ok(a),
            _ => Err(Error::Inconsistent(
                "known symbols about the same bit disagree".into(),
            )),
        }
    }

    /// Known-wins combination without the conflict check.
    #[inline]
    pub(crate) fn or(self, other: Ternary) -> Ternary {
        if self.is_known() {
            self
        } else {
            other
        }
    }

    #[inline]
    fn index(self) -> usize {
        self as usize
    }

    fn from_index(i: usize) -> Self {
        match i {
            0 => Ternary::Known0,
            1 => Ternary::Known1,
            _ => Ternary::Erased,
        }
    }
}

/// Generator of a rate-1/2 RSC code in octal notation, most significant bit
/// first (the leading bit is the tap on the current register input).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GeneratorSpec {
    pub feedback: u32,
    pub feedforward: u32,
    /// Number of delay elements.
    pub memory: usize,
}

impl Default for GeneratorSpec {
    /// The 4-state (1, 5/7) code.
    fn default() -> Self {
        GeneratorSpec {
            feedback: 0o7,
            feedforward: 0o5,
            memory: 2,
        }
    }
}

/// Largest supported memory; state sets are `u64` masks.
pub const MAX_MEMORY: usize = 6;
/// Codes up to this many states get precomputed mask tables.
const TABLE_STATES: usize = 8;

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.memory == 0 || self.memory > MAX_MEMORY {
            return Err(Error::config(format!(
                "generator memory must be in 1..={MAX_MEMORY}, got {}",
                self.memory
            )));
        }
        let limit = 1u32 << (self.memory + 1);
        if self.feedback >= limit || self.feedforward >= limit {
            return Err(Error::config(format!(
                "generator polynomials {:o}/{:o} do not fit in {} taps",
                self.feedforward,
                self.feedback,
                self.memory + 1
            )));
        }
        if self.feedback & (1 << self.memory) == 0 {
            return Err(Error::config(format!(
                "feedback polynomial {:o} has no constant term",
                self.feedback
            )));
        }
        Ok(())
    }

    /// Coefficient of `D^i` in a polynomial.
    fn tap(poly: u32, memory: usize, i: usize) -> u8 {
        ((poly >> (memory - i)) & 1) as u8
    }
}

/// Explicit state-transition tables of an RSC code.
///
/// State bit `i - 1` holds the register content delayed by `i` steps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trellis {
    spec: GeneratorSpec,
    pub num_states: usize,
    pub next_state: Vec<[usize; 2]>,
    pub parity_out: Vec<[u8; 2]>,
    pub prev_branches: Vec<Vec<(usize, u8)>>,
    /// Input that drives the feedback bit to zero (used for termination).
    tail_input: Vec<u8>,
    tables: Option<MaskTables>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct MaskTables {
    fwd: Vec<u8>,
    bwd: Vec<u8>,
    sys_ext: Vec<Ternary>,
    par_ext: Vec<Ternary>,
}

/// Output of [`rsc_encode`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RscOutput {
    pub parity: Vec<u8>,
    /// `(systematic, parity)` pairs of the termination steps.
    pub tail: Vec<[u8; 2]>,
    pub final_state: usize,
}

pub fn build_trellis(spec: GeneratorSpec) -> Result<Trellis> {
    spec.validate()?;
    let nu = spec.memory;
    let num_states = 1usize << nu;
    let mut next_state = vec![[0usize; 2]; num_states];
    let mut parity_out = vec![[0u8; 2]; num_states];
    let mut tail_input = vec![0u8; num_states];
    let mut prev_branches = vec![Vec::with_capacity(2); num_states];
    for s in 0..num_states {
        let delayed = |i: usize| ((s >> (i - 1)) & 1) as u8;
        let mut fb = 0u8;
        let mut ff = 0u8;
        for i in 1..=nu {
            fb ^= GeneratorSpec::tap(spec.feedback, nu, i) & delayed(i);
            ff ^= GeneratorSpec::tap(spec.feedforward, nu, i) & delayed(i);
        }
        tail_input[s] = fb;
        for u in 0..2u8 {
            let a = u ^ fb;
            let v = (GeneratorSpec::tap(spec.feedforward, nu, 0) & a) ^ ff;
            let ns = ((s << 1) | a as usize) & (num_states - 1);
            next_state[s][u as usize] = ns;
            parity_out[s][u as usize] = v;
            prev_branches[ns].push((s, u));
        }
    }
    let mut trellis = Trellis {
        spec,
        num_states,
        next_state,
        parity_out,
        prev_branches,
        tail_input,
        tables: None,
    };
    if num_states <= TABLE_STATES {
        trellis.tables = Some(trellis.build_tables());
    }
    Ok(trellis)
}

const SYMS: usize = 3;

impl Trellis {
    pub fn spec(&self) -> GeneratorSpec {
        self.spec
    }

    pub fn memory(&self) -> usize {
        self.spec.memory
    }

    #[inline]
    fn all_states(&self) -> u64 {
        if self.num_states == 64 {
            u64::MAX
        } else {
            (1u64 << self.num_states) - 1
        }
    }

    fn states(mask: u64) -> impl Iterator<Item = usize> {
        let mut m = mask;
        std::iter::from_fn(move || {
            if m == 0 {
                None
            } else {
                let s = m.trailing_zeros() as usize;
                m &= m - 1;
                Some(s)
            }
        })
    }

    fn forward_generic(&self, mask: u64, sys: Ternary, par: Ternary) -> u64 {
        let mut out = 0u64;
        for s in Self::states(mask) {
            for u in 0..2u8 {
                if sys.admits(u) && par.admits(self.parity_out[s][u as usize]) {
                    out |= 1 << self.next_state[s][u as usize];
                }
            }
        }
        out
    }

    fn backward_generic(&self, mask: u64, sys: Ternary, par: Ternary) -> u64 {
        let mut out = 0u64;
        for s in 0..self.num_states {
            for u in 0..2u8 {
                if mask & (1 << self.next_state[s][u as usize]) != 0
                    && sys.admits(u)
                    && par.admits(self.parity_out[s][u as usize])
                {
                    out |= 1 << s;
                }
            }
        }
        out
    }

    /// Ternary value shared by the inputs of all branches `a -> b` whose
    /// parity is compatible with `par`.
    fn sys_extrinsic_generic(&self, a: u64, b: u64, par: Ternary) -> Ternary {
        let mut seen = [false; 2];
        for s in Self::states(a) {
            for u in 0..2u8 {
                if b & (1 << self.next_state[s][u as usize]) != 0
                    && par.admits(self.parity_out[s][u as usize])
                {
                    seen[u as usize] = true;
                }
            }
        }
        Self::agreed(seen)
    }

    fn par_extrinsic_generic(&self, a: u64, b: u64, sys: Ternary) -> Ternary {
        let mut seen = [false; 2];
        for s in Self::states(a) {
            for u in 0..2u8 {
                if b & (1 << self.next_state[s][u as usize]) != 0 && sys.admits(u) {
                    seen[self.parity_out[s][u as usize] as usize] = true;
                }
            }
        }
        Self::agreed(seen)
    }

    fn agreed(seen: [bool; 2]) -> Ternary {
        match seen {
            [true, false] => Ternary::Known0,
            [false, true] => Ternary::Known1,
            // An empty branch set only arises from inconsistent priors,
            // which the state-set passes have already rejected.
            _ => Ternary::Erased,
        }
    }

    fn build_tables(&self) -> MaskTables {
        let nm = 1usize << self.num_states;
        let mut fwd = vec![0u8; nm * SYMS * SYMS];
        let mut bwd = vec![0u8; nm * SYMS * SYMS];
        for mask in 0..nm {
            for s in 0..SYMS {
                for p in 0..SYMS {
                    let (ts, tp) = (Ternary::from_index(s), Ternary::from_index(p));
                    let i = (mask * SYMS + s) * SYMS + p;
                    fwd[i] = self.forward_generic(mask as u64, ts, tp) as u8;
                    bwd[i] = self.backward_generic(mask as u64, ts, tp) as u8;
                }
            }
        }
        let mut sys_ext = vec![Ternary::Erased; nm * nm * SYMS];
        let mut par_ext = vec![Ternary::Erased; nm * nm * SYMS];
        for a in 0..nm {
            for b in 0..nm {
                for x in 0..SYMS {
                    let i = (a * nm + b) * SYMS + x;
                    let t = Ternary::from_index(x);
                    sys_ext[i] = self.sys_extrinsic_generic(a as u64, b as u64, t);
                    par_ext[i] = self.par_extrinsic_generic(a as u64, b as u64, t);
                }
            }
        }
        MaskTables {
            fwd,
            bwd,
            sys_ext,
            par_ext,
        }
    }

    /// States reachable in one step from `mask` along branches compatible
    /// with the priors.
    #[inline]
    pub fn forward(&self, mask: u64, sys: Ternary, par: Ternary) -> u64 {
        match &self.tables {
            Some(t) => t.fwd[(mask as usize * SYMS + sys.index()) * SYMS + par.index()] as u64,
            None => self.forward_generic(mask, sys, par),
        }
    }

    /// States with a compatible branch into `mask`.
    #[inline]
    pub fn backward(&self, mask: u64, sys: Ternary, par: Ternary) -> u64 {
        match &self.tables {
            Some(t) => t.bwd[(mask as usize * SYMS + sys.index()) * SYMS + par.index()] as u64,
            None => self.backward_generic(mask, sys, par),
        }
    }

    #[inline]
    pub fn sys_extrinsic(&self, a: u64, b: u64, par: Ternary) -> Ternary {
        match &self.tables {
            Some(t) => {
                let nm = 1usize << self.num_states;
                t.sys_ext[(a as usize * nm + b as usize) * SYMS + par.index()]
            }
            None => self.sys_extrinsic_generic(a, b, par),
        }
    }

    #[inline]
    pub fn par_extrinsic(&self, a: u64, b: u64, sys: Ternary) -> Ternary {
        match &self.tables {
            Some(t) => {
                let nm = 1usize << self.num_states;
                t.par_ext[(a as usize * nm + b as usize) * SYMS + sys.index()]
            }
            None => self.par_extrinsic_generic(a, b, sys),
        }
    }

    pub(crate) fn full_mask(&self) -> u64 {
        self.all_states()
    }
}

/// Encodes `info` from the zero state. With `terminate`, `memory` extra
/// steps drive the register back to zero and are returned in `tail`.
pub fn rsc_encode(trellis: &Trellis, info: &[u8], terminate: bool) -> RscOutput {
    let mut state = 0usize;
    let mut parity = Vec::with_capacity(info.len());
    for &u in info {
        let u = (u & 1) as usize;
        parity.push(trellis.parity_out[state][u]);
        state = trellis.next_state[state][u];
    }
    let mut tail = Vec::new();
    if terminate {
        for _ in 0..trellis.memory() {
            let u = trellis.tail_input[state];
            tail.push([u, trellis.parity_out[state][u as usize]]);
            state = trellis.next_state[state][u as usize];
        }
    }
    RscOutput {
        parity,
        tail,
        final_state: state,
    }
}

/// Reusable scratch space for [`decode_into`].
#[derive(Default, Debug, Clone)]
pub struct BcjrScratch {
    alpha: Vec<u64>,
}

/// Exact erasure-channel BCJR returning `(systematic, parity)` extrinsics.
///
/// The systematic extrinsic at `t` ignores the systematic prior at `t`; the
/// parity extrinsic ignores the parity prior at `t`.
pub fn bcjr_erasure_decode(
    trellis: &Trellis,
    sys_prior: &[Ternary],
    par_prior: &[Ternary],
    start_known: bool,
    end_known: bool,
) -> Result<(TernaryVec, TernaryVec)> {
    let mut sys_out = vec![Ternary::Erased; sys_prior.len()];
    let mut par_out = vec![Ternary::Erased; par_prior.len()];
    decode_into(
        trellis,
        sys_prior,
        par_prior,
        start_known,
        end_known,
        &mut BcjrScratch::default(),
        &mut sys_out,
        &mut par_out,
    )?;
    Ok((sys_out, par_out))
}

/// Allocation-free form of [`bcjr_erasure_decode`].
#[allow(clippy::too_many_arguments)]
pub fn decode_into(
    trellis: &Trellis,
    sys_prior: &[Ternary],
    par_prior: &[Ternary],
    start_known: bool,
    end_known: bool,
    scratch: &mut BcjrScratch,
    sys_out: &mut [Ternary],
    par_out: &mut [Ternary],
) -> Result<()> {
    let n = sys_prior.len();
    if par_prior.len() != n || sys_out.len() != n || par_out.len() != n {
        return Err(Error::config(format!(
            "prior/output lengths differ: sys {n}, par {}",
            par_prior.len()
        )));
    }
    let full = trellis.full_mask();
    let alpha = &mut scratch.alpha;
    alpha.clear();
    alpha.reserve(n + 1);
    let mut a = if start_known { 1 } else { full };
    alpha.push(a);
    for t in 0..n {
        a = trellis.forward(a, sys_prior[t], par_prior[t]);
        if a == 0 {
            return Err(Error::Inconsistent(format!(
                "no trellis state is consistent with the priors at step {t}"
            )));
        }
        alpha.push(a);
    }
    let mut b = if end_known { 1 } else { full };
    if a & b == 0 {
        return Err(Error::Inconsistent(
            "trellis path does not terminate in the zero state".into(),
        ));
    }
    for t in (0..n).rev() {
        let at = alpha[t];
        sys_out[t] = trellis.sys_extrinsic(at, b, par_prior[t]);
        par_out[t] = trellis.par_extrinsic(at, b, sys_prior[t]);
        b = trellis.backward(b, sys_prior[t], par_prior[t]);
        if b == 0 {
            return Err(Error::Inconsistent(format!(
                "backward state set empty at step {t}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod oracle {
    use super::*;

    /// Brute-force consistency marginals: enumerate every (start state,
    /// info word), keep those matching every known prior except the one at
    /// the emitting position, and report agreement.
    pub fn brute_force(
        trellis: &Trellis,
        sys: &[Ternary],
        par: &[Ternary],
        start_known: bool,
        end_known: bool,
    ) -> (TernaryVec, TernaryVec) {
        let n = sys.len();
        let starts: Vec<usize> = if start_known {
            vec![0]
        } else {
            (0..trellis.num_states).collect()
        };
        // seen[t][0|1] for systematic, parity
        let mut sys_seen = vec![[false; 2]; n];
        let mut par_seen = vec![[false; 2]; n];
        for &s0 in &starts {
            for word in 0..(1u32 << n) {
                let mut state = s0;
                let mut us = Vec::with_capacity(n);
                let mut vs = Vec::with_capacity(n);
                for t in 0..n {
                    let u = ((word >> t) & 1) as usize;
                    us.push(u as u8);
                    vs.push(trellis.parity_out[state][u]);
                    state = trellis.next_state[state][u];
                }
                if end_known && state != 0 {
                    continue;
                }
                let mut mismatches = Vec::new();
                for t in 0..n {
                    if !sys[t].admits(us[t]) {
                        mismatches.push((t, 0));
                    }
                    if !par[t].admits(vs[t]) {
                        mismatches.push((t, 1));
                    }
                }
                match mismatches.as_slice() {
                    [] => {
                        for t in 0..n {
                            sys_seen[t][us[t] as usize] = true;
                            par_seen[t][vs[t] as usize] = true;
                        }
                    }
                    [(t, 0)] => sys_seen[*t][us[*t] as usize] = true,
                    [(t, 1)] => par_seen[*t][vs[*t] as usize] = true,
                    _ => {}
                }
            }
        }
        let fold = |seen: Vec<[bool; 2]>| seen.into_iter().map(Trellis::agreed).collect();
        (fold(sys_seen), fold(par_seen))
    }
}
