import numpy as np
import pytest

import prescribed_curvature.continuation as cont
from prescribed_curvature.continuation import (
    ContinuationSchedule,
    Monitors,
    PreconditionError,
    continue_path,
    default_schedule,
    run_branches,
    seed_circle,
    two_branch_run,
)
from prescribed_curvature.curve import aligned_distance, geodesic_curvature, length
from prescribed_curvature.errors import DomainError
from prescribed_curvature.geometry import ConformalMetric
from prescribed_curvature.solver import CurvatureSpec

from conftest import PERTURBED_TERMS

EZ = (0.0, 0.0, 1.0)
EX = (1.0, 0.0, 0.0)
ROUND = ConformalMetric.round(1.0)


def polar_radius(curve, axis=EZ):
    return float(np.arccos(np.clip(np.mean(curve.nodes @ np.asarray(axis)), -1, 1)))


class TestSeedCircle:
    def test_great_circle(self):
        c = seed_circle(0.0, EZ, 256)
        assert length(c, ROUND) == pytest.approx(2 * np.pi, abs=1e-6)
        assert np.allclose(c.nodes[:, 2], 0.0, atol=1e-15)

    def test_unit_curvature(self):
        c = seed_circle(1.0, EX, 256)
        assert length(c, ROUND) == pytest.approx(np.pi * np.sqrt(2), abs=1e-6)
        assert np.allclose(geodesic_curvature(c, ROUND), 1.0, atol=1e-7)

    def test_large_curvature(self):
        c = seed_circle(1e3, EZ, 64)
        assert length(c, ROUND) == pytest.approx(2 * np.pi / 1e3, rel=1e-5)

    def test_domain(self):
        with pytest.raises(DomainError):
            seed_circle(1.0, EZ, 8)
        with pytest.raises(DomainError):
            seed_circle(-1.0, EZ, 64)


class TestSchedule:
    def test_default_shape(self):
        sch = default_schedule(2.0, s_steps=5, t_steps=3)
        assert sch.path[0] == (0.0, 0.0)
        assert sch.path[4] == (0.0, 2.0)
        assert sch.path[-1] == (1.0, 2.0)
        assert len(sch.path) == 7

    @pytest.mark.parametrize("kwargs", [
        dict(path=[]),
        dict(path=[(0.5, 0.0)]),
        dict(path=[(0.0, 0.0), (1.5, 0.0)]),
        dict(path=[(0.0, -1.0)]),
        dict(path=[(0.0, 0.0)], min_step=0.1, max_step=0.01),
    ])
    def test_validation(self, kwargs):
        with pytest.raises(DomainError):
            ContinuationSchedule(**kwargs)

    def test_small_curvature_threshold(self):
        sch = ContinuationSchedule([(0.0, 0.0), (0.0, 2.0)], small_curvature_threshold=1.0)
        with pytest.raises(DomainError, match="small-curvature"):
            sch.check_small_curvature(CurvatureSpec.constant(1.0))
        sch.check_small_curvature(CurvatureSpec.constant(0.4))


class TestRoundSweep:
    def test_s_sweep_tracks_latitudes(self):
        sch = ContinuationSchedule([(0.0, 0.0), (0.0, 1.0)], max_step=0.25)
        br = continue_path(seed_circle(0.0, EZ, 256), ROUND, CurvatureSpec.constant(1.0), sch)
        assert br.complete and br.terminal.s == 1.0
        # the continuity threshold forces smaller steps near s = 0, where circles move fastest
        assert br.states[1].s < 0.25
        for st in br.states:
            assert abs(polar_radius(st.curve) - np.arctan2(1.0, st.s)) < 1e-6
            assert st.diagnostics.all_ok

    def test_flat_phi_keeps_seed(self):
        # t-homotopy with phi = 0 is the constant family
        sch = ContinuationSchedule([(0.0, 1.0), (1.0, 1.0)], max_step=0.25)
        metric = ConformalMetric(((2, 0, 0.0),))
        seed = seed_circle(1.0, EX, 128)
        br = continue_path(seed, metric, CurvatureSpec.constant(1.0), sch)
        assert br.complete
        for st in br.states:
            assert aligned_distance(st.curve, seed) < 1e-6


class TestPerturbed:
    @pytest.fixture
    def short(self):
        return default_schedule(0.8, s_steps=5, t_steps=5, max_step=0.25)

    def test_deterministic(self, short):
        metric = ConformalMetric(PERTURBED_TERMS)
        spec = CurvatureSpec.constant(1.0)
        runs = [continue_path(seed_circle(0.0, EX, 128), metric, spec, short) for _ in range(2)]
        assert runs[0].status == runs[1].status == "complete"
        assert [(s.t, s.s) for s in runs[0].states] == [(s.t, s.s) for s in runs[1].states]
        for a, b in zip(runs[0].states, runs[1].states):
            assert np.array_equal(a.curve.nodes, b.curve.nodes)

    def test_reversal(self):
        metric = ConformalMetric(PERTURBED_TERMS)
        spec = CurvatureSpec.constant(0.8)
        fwd = continue_path(seed_circle(0.8, EX, 128), metric, spec,
                            ContinuationSchedule([(0.0, 1.0), (1.0, 1.0)], max_step=0.1))
        back = continue_path(fwd.terminal.curve, metric, spec,
                             ContinuationSchedule([(1.0, 1.0), (0.0, 1.0)], max_step=0.1, start_at_round=False))
        assert fwd.complete and back.complete
        assert aligned_distance(back.terminal.curve, fwd.states[0].curve) < 1e-5

    def test_threads_match_serial(self, short):
        metric = ConformalMetric(PERTURBED_TERMS)
        spec = CurvatureSpec.constant(1.0)
        seeds = [("b", seed_circle(0.0, EX, 64)), ("a", seed_circle(0.0, EZ, 64))]
        serial = run_branches(seeds, metric, spec, short, threads=1)
        threaded = run_branches(seeds, metric, spec, short, threads=2)
        assert [b.seed_id for b in serial] == ["a", "b"]
        for x, y in zip(serial, threaded):
            assert x.status == y.status
            assert np.array_equal(x.terminal.curve.nodes, y.terminal.curve.nodes)


class TestFailureModes:
    def test_step_collapse(self):
        sch = ContinuationSchedule([(0.0, 0.0), (0.0, 3.0)], max_step=3.0, min_step=3.0)
        br = continue_path(seed_circle(0.0, EZ, 64), ROUND, CurvatureSpec.constant(1.0), sch)
        assert br.status == "step-collapse"
        assert br.forensics["last_accepted"] == (0.0, 0.0)
        assert len(br.states) == 1

    def test_precondition(self):
        sch = ContinuationSchedule([(0.0, 1.0)])
        with pytest.raises(PreconditionError):
            continue_path(seed_circle(0.0, EZ, 64), ROUND, CurvatureSpec.constant(3.0), sch)
        branches = run_branches([("x", seed_circle(0.0, EZ, 64))], ROUND, CurvatureSpec.constant(3.0), sch)
        assert branches[0].status == "precondition-failure"

    def test_monitor_violation(self, monkeypatch):
        real = cont.certify

        def flaky(curve, metric, spec=None):
            d = real(curve, metric, spec)
            if spec is not None and spec.scale > 0.4:
                d.embedded = False
            return d

        monkeypatch.setattr(cont, "certify", flaky)
        sch = ContinuationSchedule([(0.0, 0.0), (0.0, 1.0)], max_step=0.25)
        br = continue_path(seed_circle(0.0, EZ, 64), ROUND, CurvatureSpec.constant(1.0), sch)
        assert br.status == "monitor-violation"
        assert br.forensics["violations"] == ["embeddedness"]
        assert br.forensics["s"] > 0.4
        assert all(st.s <= 0.4 for st in br.states)

    def test_monitor_can_be_disabled(self, monkeypatch):
        real = cont.certify

        def flaky(curve, metric, spec=None):
            d = real(curve, metric, spec)
            d.embedded = False
            return d

        monkeypatch.setattr(cont, "certify", flaky)
        sch = ContinuationSchedule([(0.0, 0.0), (0.0, 0.5)], max_step=0.25, monitors=Monitors(embeddedness=False))
        assert continue_path(seed_circle(0.0, EZ, 64), ROUND, CurvatureSpec.constant(1.0), sch).complete


class TestTwoBranch:
    def test_round_distinct(self):
        sch = ContinuationSchedule([(0.0, 0.0), (0.0, 1.0)], max_step=0.5)
        res = two_branch_run(ROUND, CurvatureSpec.constant(1.0), schedule=sch, N=64)
        assert res.success and not res.merged
        assert res.distinctness > 0.5

    def test_identical_seeds_merge(self):
        sch = ContinuationSchedule([(0.0, 0.0), (0.0, 1.0)], max_step=0.5)
        res = two_branch_run(ROUND, CurvatureSpec.constant(1.0), axes=(EZ, EZ), schedule=sch, N=64)
        assert res.distinctness < 1e-12
        assert res.merged and not res.success
