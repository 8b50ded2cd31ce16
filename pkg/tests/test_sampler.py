import math
from collections import Counter, deque

import pytest

from bandperm import (
    INFINITY,
    ChainSummary,
    InitialState,
    ModelParams,
    Permutation,
    SamplerConfig,
    cycle_of,
    energy,
    enumerate_permutations,
    exact_distribution,
    in_support,
    metropolis_acceptance,
    run_chain,
    sample_cycle_observables,
    spawn_chain_seed,
    swap_images,
)


def empirical_distribution(params, config):
    counts = Counter()
    run_chain(params, config, lambda pi: counts.update([pi]))
    total = sum(counts.values())
    return {pi: c / total for pi, c in counts.items()}


def tv_distance(a, b):
    keys = set(a) | set(b)
    return 0.5 * sum(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in keys)


class TestConfig:
    def test_defaults_rule(self):
        params = ModelParams(p=1.0, W=2, n=3)
        cfg = SamplerConfig.with_defaults(params, seed=1, steps=10_000)
        assert cfg.burn_in == 10 * 7 * 2
        assert cfg.thinning == 7

    def test_burn_in_clamped_for_short_chains(self):
        params = ModelParams(p=1.0, W=2, n=3)
        cfg = SamplerConfig.with_defaults(params, seed=1, steps=10)
        assert cfg.burn_in == 10

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(seed=-1, steps=10),
            dict(seed=2**64, steps=10),
            dict(seed=1, steps=-1),
            dict(seed=1, steps=10, burn_in=11),
            dict(seed=1, steps=10, burn_in=-1),
            dict(seed=1, steps=10, thinning=0),
        ],
    )
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            SamplerConfig(**kwargs)

    def test_zero_steps_allowed(self):
        cfg = SamplerConfig(seed=1, steps=0)
        assert cfg.retained_count == 0


class TestChainBasics:
    def test_zero_steps_identity(self):
        params = ModelParams(p=1.0, W=1, n=2)
        summary = run_chain(params, SamplerConfig(seed=3, steps=0))
        assert summary == ChainSummary(0, 0.0, Permutation.identity(2))

    def test_retained_count_formula(self):
        params = ModelParams(p=1.0, W=1, n=1)
        for steps, burn, thin in ((100, 10, 7), (50, 50, 3), (1000, 0, 1)):
            cfg = SamplerConfig(seed=5, steps=steps, burn_in=burn, thinning=thin)
            summary = run_chain(params, cfg)
            assert summary.retained_samples == (steps - burn) // thin

    def test_deterministic_streams(self):
        params = ModelParams(p=1.5, W=2, n=3)
        cfg = SamplerConfig(seed=42, steps=5_000, burn_in=500, thinning=5)
        streams = []
        for _ in range(2):
            seen = []
            summary = run_chain(params, cfg, seen.append)
            streams.append((seen, summary))
        assert streams[0] == streams[1]

    def test_seeds_give_different_streams(self):
        params = ModelParams(p=1.0, W=1, n=2)
        finals = {
            run_chain(params, SamplerConfig(seed=s, steps=2_000)).final_state
            for s in range(6)
        }
        assert len(finals) > 1

    def test_retained_states_valid_and_in_band(self):
        params = ModelParams(p=INFINITY, W=2, n=4)
        seen = []
        run_chain(
            params,
            SamplerConfig(seed=9, steps=20_000, burn_in=100, thinning=50),
            seen.append,
        )
        assert seen
        for pi in seen:  # constructor already validated bijectivity
            assert in_support(pi, 2)

    def test_random_in_support_start(self):
        params = ModelParams(p=INFINITY, W=3, n=10)
        cfg = SamplerConfig(
            seed=4, steps=0, initial_state=InitialState.RANDOM_IN_SUPPORT
        )
        summary = run_chain(params, cfg)
        assert in_support(summary.final_state, 3)
        again = run_chain(params, cfg)
        assert again.final_state == summary.final_state

    def test_debug_energy_check_clean(self):
        params = ModelParams(p=1.7, W=2, n=3)
        cfg = SamplerConfig(
            seed=8, steps=20_000, burn_in=0, thinning=100, debug_energy_check=True
        )
        run_chain(params, cfg)

    def test_spawn_chain_seed(self):
        a = spawn_chain_seed(7, 0)
        b = spawn_chain_seed(7, 1)
        assert a != b
        assert a == spawn_chain_seed(7, 0)
        assert 0 <= a < 2**64


class TestDetailedBalance:
    @pytest.mark.parametrize("p", [1.0, 2.0, 2.5])
    def test_explicit_three_point_states(self, p):
        # flow balance P(x) q acc(x->y) == P(y) q acc(y->x) for every pair
        # of states one image-swap apart, with both sides from raw energies
        params = ModelParams(p=p, W=1, n=1)
        states = list(enumerate_permutations(ModelParams(p=1.0, W=1, n=1)))
        for x in states:
            for a in range(-1, 2):
                for b in range(a + 1, 2):
                    y = swap_images(x, a, b)
                    gibbs_x = math.exp(-energy(x, params))
                    gibbs_y = math.exp(-energy(y, params))
                    fwd = gibbs_x * metropolis_acceptance(params, x, a, b)
                    bwd = gibbs_y * metropolis_acceptance(params, y, a, b)
                    assert fwd == pytest.approx(bwd, rel=1e-12)

    def test_band_acceptance_is_indicator(self):
        params = ModelParams(p=INFINITY, W=1, n=1)
        ident = Permutation.identity(1)
        assert metropolis_acceptance(params, ident, 0, 1) == 1.0
        assert metropolis_acceptance(params, ident, -1, 1) == 0.0


class TestIrreducibility:
    @pytest.mark.parametrize("n,W", [(1, 1), (2, 1), (2, 2), (3, 1), (3, 2)])
    def test_band_graph_connected(self, n, W):
        # image-swap moves that stay in S_W connect every band permutation
        # to the identity
        params = ModelParams(p=INFINITY, W=W, n=n)
        members = {pi: k for k, pi in enumerate(enumerate_permutations(params))}
        start = Permutation.identity(n)
        seen = {start}
        queue = deque([start])
        pairs = [
            (a, b) for a in range(-n, n + 1) for b in range(a + 1, n + 1)
        ]
        while queue:
            pi = queue.popleft()
            for a, b in pairs:
                nxt = swap_images(pi, a, b)
                if nxt in members and nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        assert len(seen) == len(members)


class TestTargetsGibbs:
    def test_finite_p_matches_exact_oracle(self):
        params = ModelParams(p=1.0, W=1, n=1)
        cfg = SamplerConfig(seed=7, steps=200_000, burn_in=5_000, thinning=10)
        emp = empirical_distribution(params, cfg)
        exact = exact_distribution(params).as_dict()
        assert tv_distance(emp, exact) < 0.03

    def test_band_uniformity(self):
        params = ModelParams(p=INFINITY, W=1, n=1)
        cfg = SamplerConfig(seed=13, steps=200_000, burn_in=5_000, thinning=10)
        emp = empirical_distribution(params, cfg)
        assert len(emp) == 3
        for freq in emp.values():
            assert freq == pytest.approx(1 / 3, abs=0.02)

    def test_tv_decreases_with_chain_length(self):
        params = ModelParams(p=1.0, W=1, n=2)
        exact = exact_distribution(params).as_dict()
        tvs = []
        for steps in (10_000, 100_000, 1_000_000):
            cfg = SamplerConfig(seed=17, steps=steps, burn_in=1_000, thinning=5)
            tvs.append(tv_distance(empirical_distribution(params, cfg), exact))
        assert tvs[2] < tvs[1] < tvs[0]


class TestObservables:
    def test_records_match_rerun_states(self):
        # same seed, two drivers: records must equal statistics recomputed
        # from the retained permutations of an identical chain
        params = ModelParams(p=INFINITY, W=2, n=5)
        cfg = SamplerConfig(seed=21, steps=30_000, burn_in=1_000, thinning=100)
        for j in (0, 2, -3):
            records = []
            s1 = sample_cycle_observables(params, cfg, j, records.append)
            states = []
            s2 = run_chain(params, cfg, states.append)
            assert s1 == s2
            assert len(records) == len(states)
            for rec, pi in zip(records, states):
                cj = cycle_of(pi, j)
                c0 = cycle_of(pi, 0)
                assert rec.diam == cj.diam
                assert rec.displacement0 == abs(pi(0))
                assert (rec.max_c0, rec.min_c0) == (c0.max, c0.min)

    def test_step_indices(self):
        params = ModelParams(p=1.0, W=1, n=1)
        cfg = SamplerConfig(seed=2, steps=100, burn_in=10, thinning=30)
        records = []
        sample_cycle_observables(params, cfg, 0, records.append)
        assert [r.step_index for r in records] == [40, 70, 100]

    def test_stuck_chain_reports_zeros(self):
        # seed 15 makes every proposal the rejected distance-2 pair
        # (self-validating via the acceptance rate)
        params = ModelParams(p=INFINITY, W=1, n=1)
        cfg = SamplerConfig(seed=15, steps=5, burn_in=0, thinning=1)
        records = []
        summary = sample_cycle_observables(params, cfg, 0, records.append)
        assert summary.acceptance_rate == 0.0
        assert len(records) == 5
        for rec in records:
            assert (rec.diam, rec.displacement0) == (0, 0)

    def test_rejects_bad_base_point(self):
        params = ModelParams(p=1.0, W=1, n=1)
        with pytest.raises(ValueError):
            sample_cycle_observables(
                params, SamplerConfig(seed=1, steps=10), 3, lambda r: None
            )

    def test_empirical_band_tail_matches_oracle(self):
        # P(diam C(0) >= 1) = 2/3 at W=1, n=1
        params = ModelParams(p=INFINITY, W=1, n=1)
        cfg = SamplerConfig(seed=31, steps=150_000, burn_in=5_000, thinning=10)
        diams = []
        sample_cycle_observables(params, cfg, 0, lambda r: diams.append(r.diam))
        frac = sum(1 for d in diams if d >= 1) / len(diams)
        assert frac == pytest.approx(2 / 3, abs=0.01)

    def test_mean_displacement_matches_oracle(self):
        from bandperm import exact_expectation

        params = ModelParams(p=1.0, W=1, n=1)
        oracle = exact_expectation(params, lambda pi: abs(pi(0)))
        cfg = SamplerConfig(seed=29, steps=400_000, burn_in=5_000, thinning=10)
        disps = []
        sample_cycle_observables(params, cfg, 0, lambda r: disps.append(r.displacement0))
        assert sum(disps) / len(disps) == pytest.approx(oracle, abs=0.01)
