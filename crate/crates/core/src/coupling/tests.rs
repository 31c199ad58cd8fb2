use super::*;
use crate::config::Rational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn r(a: i64, b: i64) -> Rational {
    Rational::new(a, b)
}

fn cfg(family: Family, lambda: Rational, m: usize, l: usize, k: usize) -> CouplingConfig {
    CouplingConfig {
        chain_len: l,
        k,
        ..CouplingConfig::new(family, lambda, m)
    }
}

fn random_info(code: &ChainCode, rng: &mut impl Rng) -> Vec<u8> {
    (0..code.info_len()).map(|_| rng.gen_range(0..2)).collect()
}

fn erase_at(code: &ChainCode, cw: &ChainCodeword, eps: f64, rng: &mut impl Rng) -> ReceivedChain {
    code.receive(cw, |_| rng.gen_bool(eps))
}

#[test]
fn ppc_example_lengths() {
    let c = cfg(Family::Ppc, r(1, 4), 1, 10, 1000);
    let code = ChainCode::sample(&c, 1, 0).unwrap();
    assert_eq!(code.info_len(), 7250);
    assert_eq!(code.transmitted_len(), 27250);
    let info = vec![0u8; 7250];
    let cw = ppc_encode(&code, &info).unwrap();
    let tails = code.tail_bits_per_block();
    let sent: usize = (0..10).map(|t| cw.block_bits(&code, t).len() - tails).sum();
    assert_eq!(sent, 27250);
    assert_eq!(rate_of(&c).unwrap(), r(7250, 27250));
}

#[test]
fn pic_rate_formula() {
    let c = cfg(Family::Pic, r(1, 8), 1, 100, 64);
    let k = 64i64;
    let expect = Rational::new(100 * 7 * k / 8 - k / 8, 100 * (3 * k - k / 8) - k / 8);
    assert_eq!(rate_of(&c).unwrap(), expect);
    let code = ChainCode::sample(&c, 2, 0).unwrap();
    assert_eq!(code.measured_rate(), expect);
}

#[test]
fn rates_agree_with_counted_bits() {
    let k = 48;
    for family in [Family::Pic, Family::Ppc] {
        let lambdas: &[Rational] = match family {
            Family::Pic => &[r(0, 1), r(1, 8), r(1, 4), r(1, 2)],
            Family::Ppc => &[r(0, 1), r(1, 4), r(1, 2), r(3, 4)],
        };
        for &lambda in lambdas {
            for m in 1..=3 {
                for l in [2 * m, 5, 9] {
                    for rho in [r(1, 1), r(3, 4)] {
                        let mut c = cfg(family, lambda, m, l.max(2 * m), k);
                        c.rho = rho;
                        let code = ChainCode::sample(&c, 3, 0).unwrap();
                        assert_eq!(
                            rate_of(&c).unwrap(),
                            code.measured_rate(),
                            "{family} λ={lambda} m={m} L={l} ρ={rho}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn asymptotic_rates() {
    assert_eq!(asymptotic_rate(r(1, 2), r(1, 1)), r(1, 5));
    assert_eq!(asymptotic_rate(r(1, 3), r(1, 1)), r(1, 4));
    assert_eq!(asymptotic_rate(r(1, 2), r(1, 4)), r(1, 2));
    assert_eq!(asymptotic_rate(r(7, 9), r(1, 1)), r(1, 10));
    assert_eq!(asymptotic_rate(r(0, 1), r(1, 1)), r(1, 3));
    assert_eq!(rho_for_rate(r(1, 2), r(1, 2)), r(1, 4));
    assert_eq!(lambda_for_rho(r(1, 10), r(1, 1)).unwrap(), r(7, 9));
    // A long chain approaches the limit.
    let c = cfg(Family::Pic, r(1, 2), 1, 10_000, 2);
    let gap = to_f64(rate_of(&c).unwrap()) - 0.2;
    assert!(gap.abs() < 1e-4, "{gap}");
}

#[test]
fn uncoupled_chain_is_independent_turbo_codes() {
    let c = cfg(Family::Pic, r(0, 1), 1, 4, 30);
    let code = ChainCode::sample(&c, 4, 0).unwrap();
    assert_eq!(code.measured_rate(), r(1, 3));
    assert!(code.blocks().iter().all(|b| b.links.is_empty()));
}

#[test]
fn each_variable_owned_once_and_links_symmetric() {
    for family in [Family::Pic, Family::Ppc] {
        for m in 1..=3 {
            let mut c = cfg(family, r(1, 2), m, 7, 48);
            c.random_placement = true;
            let code = ChainCode::sample(&c, 5, 1).unwrap();
            let mut owner = vec![0usize; code.num_vars()];
            for b in code.blocks() {
                for v in b.owned.clone() {
                    owner[v as usize] += 1;
                }
            }
            assert!(owner.iter().all(|&n| n == 1));
            let mut uses = vec![0usize; code.num_vars()];
            for (t, b) in code.blocks().iter().enumerate() {
                for s in Stream::ALL {
                    for &v in &b.slots[s as usize] {
                        if v != ZERO {
                            uses[v as usize] += 1;
                        }
                    }
                }
                for link in &b.links {
                    let v = b.var(link.stream, link.pos as usize);
                    let other = code.block(link.block as usize);
                    assert_eq!(v, other.var(link.partner_stream, link.partner_pos as usize));
                    assert!(other.links.iter().any(|x| x.block as usize == t
                        && x.stream == link.partner_stream
                        && x.pos == link.partner_pos));
                }
            }
            let coupled: usize = code.blocks().iter().map(|b| b.links.len()).sum();
            assert_eq!(uses.iter().filter(|&&n| n == 2).count() * 2, coupled);
            assert!(uses.iter().all(|&n| n == 1 || n == 2));
        }
    }
}

#[test]
fn pic_padding_layout() {
    let c = cfg(Family::Pic, r(1, 2), 2, 6, 40);
    let code = ChainCode::sample(&c, 6, 0).unwrap();
    let zeros = |t: usize| {
        code.block(t).slots[0]
            .iter()
            .filter(|&&v| v == ZERO)
            .count()
    };
    // Segment length 10; the first and last m blocks carry zero segments.
    assert_eq!(
        (0..6).map(zeros).collect::<Vec<_>>(),
        vec![20, 10, 0, 0, 10, 20]
    );
}

#[test]
fn ppc_termination_lengths() {
    let c = cfg(Family::Ppc, r(1, 2), 3, 8, 60);
    let got: Vec<usize> = (0..8).map(|t| ppc_termination_len(&c, t)).collect();
    assert_eq!(got, vec![0, 0, 0, 0, 0, 10, 20, 30]);
    let c = cfg(Family::Ppc, r(3, 4), 1, 4, 60);
    assert_eq!(ppc_termination_len(&c, 3), 15);
}

#[test]
fn clean_round_trip_all_memories() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for family in [Family::Pic, Family::Ppc] {
        for m in 1..=3 {
            for lambda in [r(1, 4), r(1, 2)] {
                let c = cfg(family, lambda, m, 2 * m + 2, 48);
                let code = ChainCode::sample(&c, 8, m as u64).unwrap();
                let info = random_info(&code, &mut rng);
                let cw = code.encode(&info).unwrap();
                assert_eq!(cw.info(&code), info);
                let rx = code.receive_clean(&cw);
                let out = ff_fb_decode(&code, &rx, &DecodeOptions::default()).unwrap();
                assert_eq!(out.sweeps, 1);
                assert_eq!(out.erased(), 0);
                let bits: Vec<u8> = out.info.iter().map(|x| x.bit().unwrap()).collect();
                assert_eq!(bits, info);
                let w = window_decode(&code, &rx, m + 1, &DecodeOptions::default()).unwrap();
                assert_eq!(w.info, out.info);
            }
        }
    }
}

#[test]
fn window_must_cover_memory() {
    let c = cfg(Family::Pic, r(1, 2), 2, 6, 40);
    let code = ChainCode::sample(&c, 9, 0).unwrap();
    let cw = code.encode(&vec![0; code.info_len()]).unwrap();
    let rx = code.receive_clean(&cw);
    assert!(window_decode(&code, &rx, 2, &DecodeOptions::default()).is_err());
    assert!(window_decode(&code, &rx, 3, &DecodeOptions::default()).is_ok());
}

#[test]
fn encode_rejects_wrong_length_and_family() {
    let c = cfg(Family::Pic, r(1, 2), 1, 4, 40);
    let code = ChainCode::sample(&c, 10, 0).unwrap();
    assert!(code.encode(&[0, 1]).is_err());
    assert!(ppc_encode(&code, &vec![0; code.info_len()]).is_err());
    assert!(pic_encode(&code, &vec![0; code.info_len()]).is_ok());
}

#[test]
fn punctured_bits_are_parity_and_counted() {
    let mut c = cfg(Family::Ppc, r(1, 2), 1, 5, 40);
    c.rho = r(3, 4);
    for coupled in [true, false] {
        c.puncture_coupled = coupled;
        let code = ChainCode::sample(&c, 11, 0).unwrap();
        for b in code.blocks() {
            for v in b.fresh.clone() {
                assert!(!code.is_punctured(v));
            }
            let punct = b.owned.clone().filter(|&v| code.is_punctured(v)).count();
            assert_eq!(punct, 20);
            if !coupled {
                for link in &b.links {
                    if link.stream != Stream::Info {
                        assert!(!code.is_punctured(b.var(link.stream, link.pos as usize)));
                    }
                }
            }
        }
    }
}

fn decode_sound(family: Family, eps: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = cfg(family, r(1, 2), 2, 8, 64);
    let code = ChainCode::sample(&c, seed, 0).unwrap();
    let info = random_info(&code, &mut rng);
    let cw = code.encode(&info).unwrap();
    let rx = erase_at(&code, &cw, eps, &mut rng);
    let mut dec = ChainDecoder::new(&code, &rx, None).unwrap();
    let mut known = dec.all_decisions().unwrap();
    while dec.sweep(0..8).unwrap() {
        let next = dec.all_decisions().unwrap();
        for (a, b) in known.iter().zip(&next) {
            if a.is_known() {
                assert_eq!(a, b, "known symbols must persist");
            }
        }
        known = next;
    }
    for (v, x) in known.iter().enumerate() {
        if let Some(b) = x.bit() {
            assert_eq!(b, cw.bits[v]);
        }
    }
    let out = ff_fb_decode(&code, &rx, &DecodeOptions::default()).unwrap();
    for (x, &b) in out.info.iter().zip(&info) {
        assert!(x.admits(b));
    }
    let full = window_decode(&code, &rx, 8, &DecodeOptions::default()).unwrap();
    assert_eq!(full, out);
}

#[test]
fn monotone_and_sound_under_erasures() {
    for (i, eps) in [0.3, 0.6, 0.75].into_iter().enumerate() {
        decode_sound(Family::Pic, eps, 20 + i as u64);
        decode_sound(Family::Ppc, eps, 30 + i as u64);
    }
}

#[test]
fn trace_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut c = cfg(Family::Ppc, r(1, 2), 1, 4, 20);
    c.rho = r(9, 10);
    let code = ChainCode::sample(&c, 13, 2).unwrap();
    let info = random_info(&code, &mut rng);
    let cw = code.encode(&info).unwrap();
    let rx = erase_at(&code, &cw, 0.4, &mut rng);
    for codeword in [Some(cw.clone()), None] {
        let trace = Trace {
            config: c.clone(),
            seed: 13,
            chain: 2,
            codeword,
            received: rx.clone(),
        };
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace).unwrap();
        let back = read_trace(&buf[..]).unwrap();
        assert_eq!(back, trace);
        assert_eq!(back.code().unwrap().num_vars(), code.num_vars());
        buf[3] ^= 1;
        assert!(matches!(read_trace(&buf[..]), Err(Error::Format(_))));
        buf[3] ^= 1;
        buf.pop();
        assert!(read_trace(&buf[..]).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn window_of_full_length_matches_ff_fb(
        seed in any::<u64>(),
        m in 1usize..=3,
        ppc in any::<bool>(),
        eps in 0.2f64..0.8,
    ) {
        let family = if ppc { Family::Ppc } else { Family::Pic };
        let l = 2 * m + 1;
        let mut c = cfg(family, r(1, 2), m, l, 24);
        c.random_placement = seed % 2 == 0;
        let code = ChainCode::sample(&c, seed, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let info = random_info(&code, &mut rng);
        let cw = code.encode(&info).unwrap();
        let rx = erase_at(&code, &cw, eps, &mut rng);
        let opts = DecodeOptions::default();
        let a = ff_fb_decode(&code, &rx, &opts).unwrap();
        let b = window_decode(&code, &rx, l, &opts).unwrap();
        prop_assert_eq!(&a, &b);
        for (x, &bit) in a.info.iter().zip(&info) {
            prop_assert!(x.admits(bit));
        }
        // A narrower window never decodes more than the full chain.
        let w = window_decode(&code, &rx, m + 1, &opts).unwrap();
        prop_assert!(w.erased() >= a.erased());
    }
}
