//! Monte-Carlo bit erasure rate experiments on the BEC.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::config::{to_f64, CouplingConfig};
use crate::coupling::{
    ff_fb_decode, rate_of, window_decode, ChainCode, ChainCodeword, DecodeOptions, DecodeOutcome,
    ReceivedChain,
};
use crate::error::{Error, Result};
use crate::rng::{block_stream, Role};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decoder {
    FfFb,
    Window(usize),
}

impl Decoder {
    pub fn name(&self) -> &'static str {
        match self {
            Decoder::FfFb => "ff-fb",
            Decoder::Window(_) => "window",
        }
    }

    pub fn window(&self) -> usize {
        match self {
            Decoder::FfFb => 0,
            Decoder::Window(w) => *w,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub config: CouplingConfig,
    pub eps: Vec<f64>,
    pub decoder: Decoder,
    pub decode: DecodeOptions,
    /// Stop a point once this many erased information bits were seen.
    pub min_errors: u64,
    pub max_chains: u64,
    /// Chains decoded between two stopping checks; fixing it keeps the
    /// result independent of the thread count.
    pub batch: u64,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn new(config: CouplingConfig, eps: Vec<f64>) -> Self {
        ExperimentSpec {
            config,
            eps,
            decoder: Decoder::FfFb,
            decode: DecodeOptions::default(),
            min_errors: 50,
            max_chains: 10_000,
            batch: 8,
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate_code()?;
        if let Some(e) = self.eps.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::config(format!(
                "erasure probability {e} outside [0, 1]"
            )));
        }
        if self.max_chains == 0 || self.batch == 0 {
            return Err(Error::config("max_chains and batch must be positive"));
        }
        if let Decoder::Window(w) = self.decoder {
            if w < self.config.m + 1 {
                return Err(Error::config(format!(
                    "window size {w} must be at least m + 1 = {}",
                    self.config.m + 1
                )));
            }
        }
        Ok(())
    }

    /// `key = value` description of the run, for output headers.
    pub fn describe(&self) -> Vec<(String, String)> {
        let mut v = self.config.describe();
        let eps: Vec<String> = self.eps.iter().map(|e| e.to_string()).collect();
        v.extend([
            ("eps".into(), eps.join(",")),
            ("decoder".into(), self.decoder.name().into()),
            ("window".into(), self.decoder.window().to_string()),
            ("max_sweeps".into(), self.decode.max_sweeps.to_string()),
            (
                "inner_iterations".into(),
                self.decode
                    .inner_iterations
                    .map_or("stall".into(), |n| n.to_string()),
            ),
            ("min_errors".into(), self.min_errors.to_string()),
            ("max_chains".into(), self.max_chains.to_string()),
            ("batch".into(), self.batch.to_string()),
            ("seed".into(), self.seed.to_string()),
        ]);
        v
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BerRecord {
    pub eps: f64,
    /// Information bits sent.
    pub bits: u64,
    /// Information bits still erased after decoding.
    pub errors: u64,
    pub ber: f64,
    pub chains: u64,
    pub seconds: f64,
}

impl BerRecord {
    /// Same measurement, ignoring wall time.
    pub fn same_counts(&self, other: &BerRecord) -> bool {
        self.eps == other.eps
            && self.bits == other.bits
            && self.errors == other.errors
            && self.chains == other.chains
    }
}

/// Erases each transmitted bit independently with probability `eps`;
/// punctured bits always arrive erased.
pub fn bec_transmit(
    code: &ChainCode,
    cw: &ChainCodeword,
    eps: f64,
    rng: &mut impl Rng,
) -> ReceivedChain {
    code.receive(cw, |_| rng.gen::<f64>() < eps)
}

/// Result of decoding one chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainResult {
    pub bits: u64,
    pub errors: u64,
}

/// Information bits of chain `chain`.
pub fn chain_info(code: &ChainCode, seed: u64, chain: u64) -> Vec<u8> {
    let mut rng = block_stream(seed, chain, 0, Role::Info);
    (0..code.info_len()).map(|_| rng.gen_range(0..2)).collect()
}

pub fn decode_with(
    code: &ChainCode,
    rx: &ReceivedChain,
    decoder: Decoder,
    opts: &DecodeOptions,
) -> Result<DecodeOutcome> {
    match decoder {
        Decoder::FfFb => ff_fb_decode(code, rx, opts),
        Decoder::Window(w) => window_decode(code, rx, w, opts),
    }
}

/// Samples chain `chain` of the experiment at erasure probability `eps`,
/// decodes it and checks that every decided bit is correct.
///
/// The code, the information and the uniform variates of the channel depend
/// only on `(seed, chain)`, so a chain sees nested erasure patterns as `eps`
/// grows and both decoders see identical inputs.
pub fn simulate_chain(
    cfg: &CouplingConfig,
    decoder: Decoder,
    opts: &DecodeOptions,
    eps: f64,
    seed: u64,
    chain: u64,
) -> Result<ChainResult> {
    let code = ChainCode::sample(cfg, seed, chain)?;
    let info = chain_info(&code, seed, chain);
    let cw = code.encode(&info)?;
    let rx = bec_transmit(
        &code,
        &cw,
        eps,
        &mut block_stream(seed, chain, 0, Role::Channel),
    );
    let out = decode_with(&code, &rx, decoder, opts)?;
    let mut errors = 0;
    for (i, (x, &b)) in out.info.iter().zip(&info).enumerate() {
        match x.bit() {
            None => errors += 1,
            Some(d) if d != b => {
                return Err(Error::Inconsistent(format!(
                    "chain {chain}: decoded bit {i} is {d}, sent {b}"
                )))
            }
            Some(_) => {}
        }
    }
    Ok(ChainResult {
        bits: info.len() as u64,
        errors,
    })
}

/// Runs every erasure probability of `spec`, handing each record to `sink`
/// as soon as it is complete.
pub fn run_ber(
    spec: &ExperimentSpec,
    mut sink: impl FnMut(&BerRecord) -> Result<()>,
) -> Result<Vec<BerRecord>> {
    spec.validate()?;
    let mut records = Vec::with_capacity(spec.eps.len());
    for &eps in &spec.eps {
        let start = Instant::now();
        let (mut bits, mut errors, mut chains) = (0u64, 0u64, 0u64);
        while chains < spec.max_chains && errors < spec.min_errors {
            let end = (chains + spec.batch).min(spec.max_chains);
            let results = (chains..end)
                .into_par_iter()
                .map(|c| {
                    simulate_chain(&spec.config, spec.decoder, &spec.decode, eps, spec.seed, c)
                })
                .collect::<Result<Vec<_>>>()?;
            for r in results {
                bits += r.bits;
                errors += r.errors;
            }
            chains = end;
        }
        let rec = BerRecord {
            eps,
            bits,
            errors,
            ber: if bits == 0 {
                0.0
            } else {
                errors as f64 / bits as f64
            },
            chains,
            seconds: start.elapsed().as_secs_f64(),
        };
        sink(&rec)?;
        records.push(rec);
    }
    Ok(records)
}

pub const CSV_COLUMNS: &str =
    "eps,rate,family,lambda,m,rho,decoder,W,bits,errors,ber,chains,seconds";

/// Streams [`BerRecord`]s as CSV rows after a commented header holding
/// the full configuration.
pub struct BerCsv<W: Write> {
    out: W,
    prefix: String,
}

impl<W: Write> BerCsv<W> {
    pub fn new(mut out: W, spec: &ExperimentSpec) -> Result<Self> {
        let cfg = &spec.config;
        let rate = to_f64(rate_of(cfg)?);
        let mut head = String::new();
        for (k, v) in spec.describe() {
            let _ = writeln!(head, "# {k} = {v}");
        }
        let _ = writeln!(head, "{CSV_COLUMNS}");
        out.write_all(head.as_bytes())
            .map_err(|e| Error::io("writing CSV header", e))?;
        let prefix = format!(
            "{rate},{},{},{},{},{},{}",
            cfg.family,
            cfg.lambda,
            cfg.m,
            cfg.rho,
            spec.decoder.name(),
            spec.decoder.window()
        );
        Ok(BerCsv { out, prefix })
    }

    pub fn write(&mut self, r: &BerRecord) -> Result<()> {
        writeln!(
            self.out,
            "{},{},{},{},{:e},{},{:.3}",
            r.eps, self.prefix, r.bits, r.errors, r.ber, r.chains, r.seconds
        )
        .and_then(|_| self.out.flush())
        .map_err(|e| Error::io("writing CSV row", e))?;
        Ok(())
    }
}

/// Writes a gnuplot script plotting BER against ε from `csv`.
pub fn write_gnuplot(script: &Path, csv: &Path, title: &str) -> Result<()> {
    let png = csv.with_extension("png");
    let text = format!(
        "set datafile separator ','\n\
         set datafile commentschars '#'\n\
         set key autotitle columnhead\n\
         set logscale y\n\
         set format y '10^{{%L}}'\n\
         set xlabel 'erasure probability'\n\
         set ylabel 'bit erasure rate'\n\
         set grid\n\
         set title '{title}'\n\
         set terminal pngcairo size 800,600\n\
         set output '{}'\n\
         plot '{}' using 1:11 with linespoints title 'BER'\n",
        png.display(),
        csv.display()
    );
    std::fs::write(script, text).map_err(|e| Error::io(format!("writing {}", script.display()), e))
}

/// ε at which a BER curve crosses `target`, interpolated linearly in
/// log-BER between the last point above and the first point below it.
pub fn crossing(records: &[BerRecord], target: f64) -> Option<f64> {
    let mut sorted: Vec<&BerRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    let last_good = sorted.iter().rposition(|r| r.ber < target)?;
    let next = sorted.get(last_good + 1)?;
    let lo = sorted[last_good];
    let floor = 0.5 / lo.bits.max(1) as f64;
    let (y0, y1) = (lo.ber.max(floor).ln(), next.ber.ln());
    let t = (target.ln() - y0) / (y1 - y0);
    Some(lo.eps + t.clamp(0.0, 1.0) * (next.eps - lo.eps))
}
