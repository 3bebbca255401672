use bec_sim::channel::{enumerate_round_patterns, RoundPattern};
use bec_sim::simulator::{self, Noise, SimConfig};
use bec_sim::{make_random_spec, BitString, PartyInput};

/// Three-state reward chain written out edge by edge: returns the total
/// reward of the walk driven by `erased`.
fn chain_total(erased: &[bool]) -> u64 {
    let mut state = 1;
    let mut total = 0;
    for &e in erased {
        let (next, r) = match (state, e) {
            (1, false) => (1, 2),
            (1, true) => (2, 1),
            (2, _) => (3, 0),
            (3, false) => (1, 1),
            (3, true) => (2, 0),
            _ => unreachable!(),
        };
        state = next;
        total += r;
    }
    total
}

fn inputs(a: u64, b: u64) -> (PartyInput, PartyInput) {
    let bits =
        |s: u64| PartyInput::new(BitString::from_bits((0..64).map(move |i| s >> i & 1 == 1)));
    (bits(a), bits(b))
}

#[test]
fn total_reward_follows_chain_on_every_pattern() {
    for n0 in [1usize, 2, 3, 5] {
        let spec = make_random_spec(n0, 100 + n0 as u64).unwrap();
        let (x_a, x_b) = inputs(0xdead_beef, 0x1234_5678);
        let rounds = 12;
        for pattern in enumerate_round_patterns(rounds, 0.5).unwrap() {
            let expected = chain_total(&pattern.erased);
            let cfg = SimConfig::new(spec.clone(), x_a.clone(), x_b.clone(), rounds, 0.5, 0)
                .with_noise(Noise::Fixed(pattern));
            let r = simulator::run(&cfg).unwrap();
            assert_eq!(r.total_reward, expected);
            assert!(simulator::trace_matches_chain(&r));
        }
    }
}

#[test]
fn long_sampled_runs_match_chain() {
    for seed in 0..20u64 {
        let n0 = 200;
        let spec = make_random_spec(n0, seed).unwrap();
        let (x_a, x_b) = inputs(seed, !seed);
        let cfg = SimConfig::new(spec, x_a, x_b, 3 * n0, 0.2, seed);
        let r = simulator::run(&cfg).unwrap();
        let erased: Vec<bool> = r.trace.iter().map(|rec| rec.erased).collect();
        assert_eq!(r.total_reward, chain_total(&erased));
        assert_eq!(r.total_reward, (r.final_len_a + r.final_len_b) as u64);
    }
}

#[test]
fn all_erased_pattern_stalls() {
    let spec = make_random_spec(4, 1).unwrap();
    let (x_a, x_b) = inputs(1, 2);
    let pattern = RoundPattern::new(vec![true; 16], 1.0);
    let cfg = SimConfig::new(spec, x_a, x_b, 16, 1.0, 0).with_noise(Noise::Fixed(pattern));
    let r = simulator::run(&cfg).unwrap();
    assert!(!r.success);
    assert_eq!(r.total_reward, chain_total(&[true; 16]));
}
