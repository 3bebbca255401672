"""Smoke test for the bec_sim_py extension module.

Build and install first, e.g.:

    cd crates/python && maturin develop --release
"""

import math

import bec_sim_py as bs


def main():
    spec = bs.ProtocolSpec.random(16, 7)
    x_a, x_b = "1011" * 16, "0110" * 16
    reference = spec.reference_transcript(x_a, x_b)
    assert len(reference) == 16

    clean = bs.simulate(spec, x_a, x_b, rounds=32, epsilon=0.0, seed=1, trace=True)
    assert clean["success"] and clean["out_a"] == clean["out_b"] == reference
    assert len(clean["trace"]) == 32
    assert set(clean["trace"][0]) == {"i", "sender", "fresh", "erased", "lenA", "lenB", "state", "chain", "reward"}

    again = bs.ProtocolSpec.from_json(spec.to_json())
    assert again.reference_transcript(x_a, x_b) == reference

    tiny = bs.ProtocolSpec.random(1, 3)
    for eps in (0.1, 0.5):
        exact = bs.exact_error_prob(tiny, "1", "0", 2, eps)
        assert abs(exact - (1 - (1 - eps) ** 2)) < 1e-12

    est = bs.monte_carlo_error(spec, x_a, x_b, rounds=48, epsilon=0.2, trials=2000, seed=5)
    assert est["trials"] == 2000 and 0.0 <= est["estimate"] <= 1.0

    p = bs.round_erasure_prob(0.2)
    assert abs(p - 0.36) < 1e-12
    assert abs(bs.expected_reward_closed_form(1, p) - (2 - p)) < 1e-12
    assert bs.expected_reward_dp(200, p) >= 400 * (1 - p) / (1 + p)
    hits = bs.hitting_times(p)
    assert len(hits["supported_states"]) == 5 and len(hits["expected_hits"]) == 25
    assert math.isfinite(hits["hit_tr"])
    assert 0.0 < bs.error_upper_bound(1600, 3.0, 0.2, hits["hit_tr"]) < 2.0
    assert abs(bs.min_k(0.2) - 2.125) < 1e-12

    assert bs.direct_lb(0.0) == 0.5
    assert 0.3766 <= bs.direct_lb(bs.DEFAULT_EPS_PRIME) <= 0.3768
    assert abs(bs.direct_threshold() - 0.614853) < 1e-5
    worst = min(bs.best_lb(i / 1000)["ratio"] for i in range(1, 1000))
    assert worst >= bs.CAPACITY_RATIO_CONSTANT

    assert sum(bs.verify(50, seed=1).values()) == 0

    try:
        bs.direct_lb(1.5)
    except ValueError:
        pass
    else:
        raise AssertionError("out-of-range epsilon accepted")

    print(f"ok: min capacity ratio {worst:.5f}, hit_tr {hits['hit_tr']:.4f}, p_hat {est['estimate']:.4f}")


if __name__ == "__main__":
    main()
