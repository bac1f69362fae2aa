import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvboost import landscape as ls
from curvboost.tensorcore import ConfigError


def single_lump_snapshot(center=(0.0, 0.0), q=0.05, lump=None):
    lumps = [lump] if lump is not None else []
    return ls.Snapshot(np.array(center), q, lumps)


def fd_gradient(theta, snap, h=1e-5):
    out = np.zeros(2)
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        out[i] = (ls.value(theta + e, snap) - ls.value(theta - e, snap)) / (2 * h)
    return out


def fd_hessian(theta, snap, h=1e-4):
    out = np.zeros((2, 2))
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        gp = ls.gradient(theta + e, snap)
        gm = ls.gradient(theta - e, snap)
        out[:, i] = (gp - gm) / (2 * h)
    return 0.5 * (out + out.T)


def random_snapshot(rng):
    lumps = [ls.Lump(rng.uniform(-4, 4, 2), rng.uniform(1, 6),
                     rng.uniform(0.3, 1.0), 1 if rng.random() < 0.5 else -1)
             for _ in range(rng.integers(1, 6))]
    return ls.Snapshot(rng.uniform(-2, 2, 2), rng.uniform(0.02, 0.08), lumps)


class TestValue:
    def test_quadratic_center_no_lumps(self):
        snap = single_lump_snapshot(center=(1.0, -2.0))
        assert ls.value(np.array([1.0, -2.0]), snap) == 0.0

    def test_single_lump_at_shared_center(self):
        lump = ls.Lump(np.array([0.5, 0.5]), 3.0, 0.7, 1)
        snap = single_lump_snapshot(center=(0.5, 0.5), lump=lump)
        assert ls.value(np.array([0.5, 0.5]), snap) == pytest.approx(3.0)

    def test_far_field_is_quadratic(self):
        lump = ls.Lump(np.array([0.0, 0.0]), 6.0, 1.0, 1)
        snap = ls.Snapshot(np.array([10.0, 0.0]), 0.05, [lump])
        theta = np.array([20.0, 0.0])  # 20 lump scales away from the lump center
        v = ls.value(theta, snap)
        quad = 0.05 * 100.0
        assert abs(v - quad) / quad < 1e-6

    def test_lump_permutation_invariance(self):
        rng = np.random.default_rng(3)
        snap = random_snapshot(rng)
        perm = ls.Snapshot(snap.center, snap.quad, snap.lumps[::-1])
        theta = rng.normal(size=2)
        assert ls.value(theta, snap) == pytest.approx(ls.value(theta, perm), rel=1e-14)

    def test_coercivity(self):
        rng = np.random.default_rng(4)
        snap = random_snapshot(rng)
        far = np.array([1e3, 1e3])
        assert ls.value(far, snap) > ls.value(snap.center, snap)


class TestDerivatives:
    def test_gradient_at_center_no_lumps(self):
        snap = single_lump_snapshot(center=(1.0, 1.0))
        np.testing.assert_array_equal(ls.gradient(np.array([1.0, 1.0]), snap), [0.0, 0.0])

    def test_gradient_vanishes_at_lump_center(self):
        lump = ls.Lump(np.array([2.0, 0.0]), 3.0, 0.7, 1)
        snap = ls.Snapshot(np.array([0.0, 0.0]), 0.05, [lump])
        g = ls.gradient(np.array([2.0, 0.0]), snap)
        np.testing.assert_allclose(g, 2 * 0.05 * np.array([2.0, 0.0]), atol=1e-14)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            snap = random_snapshot(rng)
            theta = rng.uniform(-5, 5, 2)
            g = ls.gradient(theta, snap)
            fd = fd_gradient(theta, snap)
            np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-7)

    def test_hessian_no_lumps(self):
        snap = single_lump_snapshot(q=0.07)
        np.testing.assert_allclose(ls.hessian(np.zeros(2), snap), 2 * 0.07 * np.eye(2))

    def test_hessian_concave_cap_at_lump_center(self):
        lump = ls.Lump(np.array([0.0, 0.0]), 3.0, 0.5, 1)
        snap = ls.Snapshot(np.array([0.0, 0.0]), 0.05, [lump])
        H = ls.hessian(np.zeros(2), snap)
        expected = 2 * 0.05 * np.eye(2) - (3.0 / 0.25) * np.eye(2)
        np.testing.assert_allclose(H, expected, atol=1e-12)

    def test_hessian_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            snap = random_snapshot(rng)
            theta = rng.uniform(-5, 5, 2)
            H = ls.hessian(theta, snap)
            fd = fd_hessian(theta, snap)
            np.testing.assert_allclose(H, fd, rtol=1e-4, atol=1e-6)


class TestDrift:
    def test_zero_sigmas_identity(self):
        rng = np.random.default_rng(2)
        snap = random_snapshot(rng)
        out = ls.drift(snap, 0.0, 0.0, 0.0, rng)
        for a, b in zip(snap.lumps, out.lumps):
            assert np.array_equal(a.center, b.center)
            assert a.amplitude == b.amplitude and a.scale == b.scale

    def test_amplitude_drift_mean_preserving(self):
        rng = np.random.default_rng(5)
        lump = ls.Lump(np.zeros(2), 2.0, 0.5, 1)
        snap = ls.Snapshot(np.zeros(2), 0.05, [lump])
        n = 100_000
        draws = np.array([ls.drift(snap, 0.0, 0.1, 0.0, rng).lumps[0].amplitude
                          for _ in range(n)])
        se = draws.std() / np.sqrt(n)
        assert abs(draws.mean() - 2.0) < 3 * se

    def test_drift_changes_value(self):
        rng = np.random.default_rng(6)
        snap = random_snapshot(rng)
        theta = np.array([0.3, -0.7])
        out = ls.drift(snap, 0.05, 0.03, 0.03, rng)
        assert ls.value(theta, out) != ls.value(theta, snap)

    def test_floors_prevent_sign_flips(self):
        rng = np.random.default_rng(7)
        lump = ls.Lump(np.zeros(2), 1e-6, 1e-6, 1)
        snap = ls.Snapshot(np.zeros(2), 0.05, [lump])
        for _ in range(200):
            snap = ls.drift(snap, 0.0, 5.0, 5.0, rng)
            assert snap.lumps[0].amplitude >= 1e-6
            assert snap.lumps[0].scale >= 1e-6

    def test_quadratic_part_fixed(self):
        rng = np.random.default_rng(8)
        snap = random_snapshot(rng)
        out = ls.drift(snap, 0.1, 0.1, 0.1, rng)
        assert np.array_equal(out.center, snap.center)
        assert out.quad == snap.quad


class TestSequence:
    def test_observe_cycles(self):
        gen = ls.GenConfig(n_train=3, n_test=2)
        seq = ls.build_sequence(gen, 0)
        theta = np.zeros(2)
        expected = [ls.value(theta, seq.train[i]) for i in (0, 1, 2, 0)]
        got = [seq.observe(theta)[0] for _ in range(4)]
        assert got == expected

    def test_stationary_sequence_is_constant(self):
        gen = ls.stationary(ls.GenConfig(n_train=4, n_test=2))
        seq = ls.build_sequence(gen, 0)
        theta = np.array([0.5, 0.5])
        vals = {seq.observe(theta)[0] for _ in range(8)}
        assert len(vals) == 1

    def test_metrics_match_brute_force(self):
        seq = ls.build_sequence(ls.GenConfig(), 3)
        rng = np.random.default_rng(9)
        for _ in range(20):
            theta = rng.uniform(-5, 5, 2)
            l_avg, e_avg, gap = seq.metrics(theta)
            l_brute = np.mean([ls.value(theta, s) for s in seq.train])
            e_brute = np.mean([ls.value(theta, s) for s in seq.test])
            assert l_avg == pytest.approx(l_brute, rel=1e-12)
            assert e_avg == pytest.approx(e_brute, rel=1e-12)
            assert gap == pytest.approx(e_brute - l_brute, rel=1e-9, abs=1e-12)

    def test_values_over_cycle_average_to_l_avg(self):
        seq = ls.build_sequence(ls.GenConfig(n_train=5, n_test=2), 1)
        theta = np.array([1.0, -1.0])
        vals = [seq.observe(theta)[0] for _ in range(5)]
        assert np.mean(vals) == pytest.approx(seq.metrics(theta)[0], rel=1e-12)

    def test_identical_test_train_zero_gap(self):
        seq = ls.build_sequence(ls.GenConfig(), 0)
        twin = ls.LandscapeSequence(seq.train, list(seq.train))
        assert twin.metrics(np.array([0.2, 0.4]))[2] == pytest.approx(0.0, abs=1e-12)

    def test_build_deterministic(self):
        a = ls.build_sequence(ls.GenConfig(), 11)
        b = ls.build_sequence(ls.GenConfig(), 11)
        for sa, sb in zip(a.train + a.test, b.train + b.test):
            assert np.array_equal(sa.center, sb.center) and sa.quad == sb.quad
            for la, lb in zip(sa.lumps, sb.lumps):
                assert np.array_equal(la.center, lb.center)
                assert (la.amplitude, la.scale, la.sign) == (lb.amplitude, lb.scale, lb.sign)

    def test_zero_lumps_pure_quadratic(self):
        gen = ls.GenConfig(n_lumps=0)
        seq = ls.build_sequence(gen, 0)
        snap = seq.train[0]
        theta = np.array([3.0, 3.0])
        assert ls.value(theta, snap) == pytest.approx(
            snap.quad * float((theta - snap.center) @ (theta - snap.center)))

    def test_both_lump_signs_occur(self):
        signs = set()
        for seed in range(100):
            seq = ls.build_sequence(ls.GenConfig(), seed)
            signs |= {l.sign for l in seq.train[0].lumps}
        assert signs == {-1, 1}

    def test_invalid_gen_config(self):
        with pytest.raises(ConfigError):
            ls.GenConfig(quad_range=(0.0, 0.1)).validate()
        with pytest.raises(ConfigError):
            ls.GenConfig(n_test=40, n_train=30).validate()
        with pytest.raises(ConfigError):
            ls.GenConfig(sigma_c=-0.1).validate()

    def test_dump_load_round_trip(self, tmp_path):
        seq = ls.build_sequence(ls.GenConfig(n_train=4, n_test=2), 5)
        path = tmp_path / "seq.json"
        ls.dump_sequence(seq, path)
        loaded = ls.load_sequence(path)
        theta = np.array([0.1, 0.2])
        assert loaded.metrics(theta) == seq.metrics(theta)
        assert len(loaded.train) == 4 and len(loaded.test) == 2
