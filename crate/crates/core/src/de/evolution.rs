//! Density evolution of PIC and PPC chains on the erasure channel.
//!
//! Positions are 0-based here (`t = 0..L`). Reads outside the chain follow
//! the boundary conditions of the construction: coupled bits before the
//! first block and (for PIC) after the last block are known zeros; coupled
//! parity of the last PPC blocks that has no downstream block only sees its
//! channel observation.

use crate::config::{to_f64, CouplingConfig, Family};
use crate::de::transfer::Transfer;

/// Per-position extrinsic erasure probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct DeChainState {
    pub p_u: Vec<f64>,
    pub p_l: Vec<f64>,
    pub q_u: Vec<f64>,
    pub q_l: Vec<f64>,
    pub iteration: usize,
}

impl DeChainState {
    /// Start of decoding: nothing known.
    pub fn erased(chain_len: usize) -> Self {
        DeChainState {
            p_u: vec![1.0; chain_len],
            p_l: vec![1.0; chain_len],
            q_u: vec![1.0; chain_len],
            q_l: vec![1.0; chain_len],
            iteration: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.p_u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_u.is_empty()
    }

    /// A-posteriori erasure probability of the fresh information of each block.
    pub fn a_posteriori(&self, eps: f64) -> Vec<f64> {
        self.p_u
            .iter()
            .zip(&self.p_l)
            .map(|(u, l)| eps * u * l)
            .collect()
    }

    #[inline]
    fn coupled_pair(&self, t: isize) -> f64 {
        if t < 0 || t as usize >= self.len() {
            0.0
        } else {
            self.p_u[t as usize] * self.p_l[t as usize]
        }
    }
}

/// Order in which neighbouring positions are refreshed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Schedule {
    /// In place, sweeping `t` upwards; upper then lower decoder per position.
    #[default]
    Serial,
    /// Every term from the previous iteration (Jacobi).
    Parallel,
}

/// Effective parity erasure probability after random puncturing.
#[inline]
pub fn punctured_erasure(eps: f64, rho: f64) -> f64 {
    1.0 - (1.0 - eps) * rho
}

/// One iteration of PIC density evolution.
pub fn de_step_pic(
    state: &mut DeChainState,
    eps: f64,
    lambda: f64,
    m: usize,
    rho: f64,
    transfer: &dyn Transfer,
    schedule: Schedule,
) {
    let eps_rho = punctured_erasure(eps, rho);
    let len = state.len();
    let prev = match schedule {
        Schedule::Parallel => Some(state.clone()),
        Schedule::Serial => None,
    };
    let w = lambda / m as f64;
    let uncoupled = 1.0 - 2.0 * lambda;
    for t in 0..len {
        let coupled = |s: &DeChainState| -> f64 {
            (1..=m)
                .map(|j| s.coupled_pair(t as isize - j as isize) + s.coupled_pair((t + j) as isize))
                .sum::<f64>()
        };
        let neighbours = coupled(prev.as_ref().unwrap_or(&*state));
        let pbar_l = eps * state.p_l[t] * (w * neighbours + uncoupled);
        let (pu, qu) = transfer.eval(pbar_l, eps_rho);
        state.p_u[t] = pu;
        state.q_u[t] = qu;
        let own_u = prev.as_ref().map_or(pu, |s| s.p_u[t]);
        let pbar_u = eps * own_u * (w * neighbours + uncoupled);
        let (pl, ql) = transfer.eval(pbar_u, eps_rho);
        state.p_l[t] = pl;
        state.q_l[t] = ql;
    }
    state.iteration += 1;
}

/// Fraction of the turbo input of block `t` filled with termination zeros.
pub fn ppc_termination_fraction(t: usize, chain_len: usize, lambda: f64, m: usize) -> f64 {
    let t1 = t + 1;
    if t1 + m > chain_len {
        let depth = (t1 + m - chain_len) as f64;
        (depth * lambda / m as f64).min(1.0 - lambda)
    } else {
        0.0
    }
}

/// One iteration of PPC density evolution with split `(λ^U, λ^L)`.
#[allow(clippy::too_many_arguments)]
pub fn de_step_ppc(
    state: &mut DeChainState,
    eps: f64,
    lambda_u: f64,
    lambda_l: f64,
    m: usize,
    rho: f64,
    transfer: &dyn Transfer,
    schedule: Schedule,
) {
    let eps_rho = punctured_erasure(eps, rho);
    let len = state.len();
    let lambda = lambda_u + lambda_l;
    let mf = m as f64;
    let prev = match schedule {
        Schedule::Parallel => Some(state.clone()),
        Schedule::Serial => None,
    };
    for t in 0..len {
        let fresh = (1.0 - lambda - ppc_termination_fraction(t, len, lambda, m)).max(0.0);
        // Coupled-in parity from blocks t-j; before the chain it is zero padding.
        let coupled_in = |s: &DeChainState| -> f64 {
            (1..=m)
                .filter(|&j| j <= t)
                .map(|j| (lambda_u * s.q_u[t - j] + lambda_l * s.q_l[t - j]) / mf)
                .sum::<f64>()
        };
        // Extrinsic from blocks t+j on this block's coupled-out parity.
        let coupled_out = |s: &DeChainState| -> f64 {
            (1..=m)
                .map(|j| {
                    if t + j < len {
                        s.p_u[t + j] * s.p_l[t + j]
                    } else {
                        1.0
                    }
                })
                .sum::<f64>()
                / mf
        };
        let src = prev.as_ref().unwrap_or(&*state);
        let cin = coupled_in(src);
        let cout = coupled_out(src);
        let pbar_l = state.p_l[t] * (eps_rho * cin + eps * fresh);
        let qbar_u = eps_rho * ((1.0 - lambda_u) + lambda_u * cout);
        let (pu, qu) = transfer.eval(pbar_l, qbar_u);
        state.p_u[t] = pu;
        state.q_u[t] = qu;

        let src = prev.as_ref().unwrap_or(&*state);
        let cin = coupled_in(src);
        let cout = coupled_out(src);
        let own_u = prev.as_ref().map_or(pu, |s| s.p_u[t]);
        let pbar_u = own_u * (eps_rho * cin + eps * fresh);
        let qbar_l = eps_rho * ((1.0 - lambda_l) + lambda_l * cout);
        let (pl, ql) = transfer.eval(pbar_u, qbar_l);
        state.p_l[t] = pl;
        state.q_l[t] = ql;
    }
    state.iteration += 1;
}

/// Stopping constants of [`de_run`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeOptions {
    pub max_iter: usize,
    /// Success once every a-posteriori erasure probability is below this.
    pub conv: f64,
    /// Failure once no position improves by more than this in an iteration.
    pub stall: f64,
    pub schedule: Schedule,
}

impl Default for DeOptions {
    fn default() -> Self {
        DeOptions {
            max_iter: 5000,
            conv: 1e-8,
            stall: 1e-12,
            schedule: Schedule::Serial,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeOutcome {
    pub converged: bool,
    pub state: DeChainState,
    pub iterations: usize,
}

/// Chain length used for density evolution at coupling memory `m`.
pub fn default_de_chain_len(m: usize) -> usize {
    if m <= 15 {
        100
    } else {
        10 * m
    }
}

/// Runs density evolution of the ensemble in `cfg` at erasure probability
/// `eps` over `cfg.chain_len` positions.
pub fn de_run(
    cfg: &CouplingConfig,
    eps: f64,
    transfer: &dyn Transfer,
    opts: &DeOptions,
) -> DeOutcome {
    let mut state = DeChainState::erased(cfg.chain_len);
    let lambda = to_f64(cfg.lambda);
    let (lu, ll) = cfg.split();
    let (lu, ll) = (to_f64(lu), to_f64(ll));
    let rho = to_f64(cfg.rho);
    let mut last = vec![eps; cfg.chain_len];
    for it in 1..=opts.max_iter {
        match cfg.family {
            Family::Pic => {
                de_step_pic(&mut state, eps, lambda, cfg.m, rho, transfer, opts.schedule)
            }
            Family::Ppc => {
                de_step_ppc(&mut state, eps, lu, ll, cfg.m, rho, transfer, opts.schedule)
            }
        }
        let post = state.a_posteriori(eps);
        let worst = post.iter().cloned().fold(0.0, f64::max);
        if worst < opts.conv {
            return DeOutcome {
                converged: true,
                state,
                iterations: it,
            };
        }
        let progress = post
            .iter()
            .zip(&last)
            .map(|(now, before)| before - now)
            .fold(f64::NEG_INFINITY, f64::max);
        if progress < opts.stall {
            return DeOutcome {
                converged: false,
                state,
                iterations: it,
            };
        }
        last = post;
    }
    DeOutcome {
        converged: false,
        iterations: opts.max_iter,
        state,
    }
}
