"""First-principles protocol simulation: reports, averages, invariants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybrid_teleport import formulas
from hybrid_teleport.encoding import BlochAngles, DynamicBasis, HybridType, logical_ket
from hybrid_teleport.engine import COHERENT_ALGEBRA, TRUNCATED_FOCK, trace_distance
from hybrid_teleport.loss import LossParameter
from hybrid_teleport.measurement import FAIL, success_outcomes
from hybrid_teleport.protocol import (
    SphereQuadrature,
    average_fidelity,
    average_success,
    group_statistics,
    teleport_once,
)

ANGLES = BlochAngles(1.1, 2.3)
HYBRIDS = (HybridType.TYPE_I, HybridType.TYPE_II)


class TestSphereQuadrature:
    def test_weights_sum_to_one(self):
        for quad in (SphereQuadrature(8, 16), SphereQuadrature()):
            total = sum(w for _, _, w in quad.nodes())
            assert math.isclose(total, 1.0, rel_tol=1e-13)

    def test_fourth_moment(self):
        # sphere average of |mu|^4 = integral of cos^4(u/2) over the sphere,
        # which is 1/3; Gauss-Legendre in cos u is exact for it
        m, w = SphereQuadrature(8, 8).mu_nu_grid()
        got = float(np.dot(w, np.abs(m[:, 0]) ** 4))
        assert math.isclose(got, 1.0 / 3.0, rel_tol=1e-12)

    def test_cross_moment(self):
        # average of |mu nu|^2 = 1/6; average of mu nu* = 0 by phase symmetry
        m, w = SphereQuadrature(8, 8).mu_nu_grid()
        cross = float(np.dot(w, (np.abs(m[:, 0]) * np.abs(m[:, 1])) ** 2))
        assert math.isclose(cross, 1.0 / 6.0, rel_tol=1e-12)
        phase = np.dot(w, m[:, 0] * m[:, 1].conj())
        assert abs(phase) < 1e-14

    def test_validation(self):
        with pytest.raises(ValueError):
            SphereQuadrature(0, 4)


class TestLossless:
    @pytest.mark.parametrize("hybrid", HYBRIDS)
    def test_success_outcomes_teleport_perfectly(self, hybrid):
        report = teleport_once(hybrid, 1.0, LossParameter(0.0), ANGLES)
        succ = set(success_outcomes(hybrid))
        for e in report.entries:
            if e.label in succ and e.probability > 1e-12:
                assert abs(e.fidelity - 1.0) < 1e-10, e.label

    @pytest.mark.parametrize("hybrid", HYBRIDS)
    def test_total_success_probability(self, hybrid):
        report = teleport_once(hybrid, 1.0, LossParameter(0.0), ANGLES,
                               include_states=False)
        want = 1.0 - 0.5 * math.exp(-2.0)
        assert math.isclose(report.success_probability, want, abs_tol=1e-12)

    @pytest.mark.parametrize("hybrid", HYBRIDS)
    def test_probabilities_sum_to_one(self, hybrid):
        report = teleport_once(hybrid, 1.0, LossParameter(0.0), ANGLES,
                               include_states=False)
        total = sum(e.probability for e in report.entries)
        assert math.isclose(total, 1.0, abs_tol=1e-10)

    def test_specific_outcome_probabilities(self):
        # frozen from an independent run of this engine, angles (pi/3, pi/5);
        # the three distinct nonzero success weights and the double-vacuum
        report = teleport_once(
            HybridType.TYPE_II, 1.0, LossParameter(0.0),
            BlochAngles(math.pi / 3, math.pi / 5), include_states=False,
        )
        assert report.entry("1", "1").probability == pytest.approx(
            0.0934556340519386, abs=1e-12)
        assert report.entry("1", "2").probability == pytest.approx(
            0.12271054513890826, abs=1e-12)
        assert report.entry("1", "e").probability == pytest.approx(
            0.03383382080915316, abs=1e-12)
        assert report.entry("e", "e").probability == pytest.approx(
            0.06766764161830638, abs=1e-12)


class TestLossyInvariants:
    @pytest.mark.parametrize("hybrid", HYBRIDS)
    @pytest.mark.parametrize("r", [0.3, 0.7])
    def test_probabilities_sum_to_one(self, hybrid, r):
        report = teleport_once(hybrid, 1.0, LossParameter(r), ANGLES,
                               include_states=False)
        total = sum(e.probability for e in report.entries)
        assert math.isclose(total, 1.0, abs_tol=1e-10)

    def test_type_i_excluded_outcomes_stay_empty(self):
        # patterns inconsistent with photon-number conservation of the
        # type-I dual-rail circuit never fire, with or without loss
        excluded = [("1", "3"), ("1", "4"), ("2", "1"), ("2", "2")]
        report = teleport_once(HybridType.TYPE_I, 1.0, LossParameter(0.3), ANGLES,
                               include_states=False)
        for s, a in excluded:
            assert report.entry(s, a).probability < 1e-12
        for s in ("1", "2", "e", "other"):
            assert report.entry(s, "both").probability < 1e-12

    @pytest.mark.parametrize("hybrid", HYBRIDS)
    def test_states_normalized_and_hermitian(self, hybrid):
        report = teleport_once(hybrid, 1.0, LossParameter(0.4), ANGLES)
        for e in report.entries:
            if e.correction == FAIL or e.probability < 1e-9:
                assert e.state is None or e.correction == FAIL
                continue
            tr = e.state.trace(COHERENT_ALGEBRA)
            assert math.isclose(tr.real, 1.0, abs_tol=1e-9), e.label
            assert trace_distance(e.state, e.state.adjoint(), COHERENT_ALGEBRA) < 1e-9

    def test_report_entry_lookup(self):
        report = teleport_once(HybridType.TYPE_II, 1.0, LossParameter(0.2), ANGLES,
                               include_states=False)
        assert report.entry("1", "2").correction == "I"
        with pytest.raises(KeyError):
            report.entry("1", "5")

    def test_relabel_flags(self):
        report = teleport_once(HybridType.TYPE_II, 1.0, LossParameter(0.2), ANGLES,
                               include_states=False)
        assert report.entry("1", "1").relabel  # Z correction
        assert not report.entry("1", "2").relabel  # identity
        report1 = teleport_once(HybridType.TYPE_I, 1.0, LossParameter(0.2), ANGLES,
                                include_states=False)
        assert not report1.entry("1", "1").relabel  # type-I Z is physical


class TestAverages:
    @pytest.mark.parametrize("hybrid", HYBRIDS)
    def test_agree_with_closed_forms(self, hybrid):
        loss = LossParameter(0.3)
        t = loss.t
        quad = SphereQuadrature(12, 24)
        f_sim = average_fidelity(hybrid, 1.0, loss, quad)
        p_sim = average_success(hybrid, 1.0, loss, quad)
        f_closed = (
            formulas.average_fidelity(hybrid, 1.0, t)
            if hybrid is HybridType.TYPE_I
            else formulas.average_fidelity_quadrature(1.0, t, quad)
        )
        p_closed = formulas.success_probability(hybrid, 1.0, t)
        assert abs(f_sim - f_closed) < 1e-8
        assert abs(p_sim - p_closed) < 1e-8

    def test_success_average_is_angle_weighted(self):
        # the sphere average must lie between the per-angle extremes
        loss = LossParameter(0.4)
        quad = SphereQuadrature(8, 16)
        avg = average_success(HybridType.TYPE_II, 1.0, loss, quad)
        per_angle = [
            teleport_once(HybridType.TYPE_II, 1.0, loss, BlochAngles(u, v),
                          include_states=False).success_probability
            for u, v, _ in SphereQuadrature(3, 4).nodes()
        ]
        assert min(per_angle) - 1e-12 <= avg <= max(per_angle) + 1e-12


class TestGroupStatistics:
    def test_matches_formulas(self):
        loss = LossParameter(0.6)
        groups = {
            g.index: [(m.s_outcome, m.alpha_outcome) for m in g.members]
            for g in formulas.OUTCOME_GROUPS
        }
        stats = group_statistics(HybridType.TYPE_II, 1.0, loss, ANGLES, groups)
        for i, (p, f, state) in stats.items():
            assert math.isclose(
                p, formulas.group_probability(i, 1.0, loss.t, ANGLES), abs_tol=1e-10
            )
            assert math.isclose(
                f, formulas.group_fidelity(i, 1.0, loss.t, ANGLES), abs_tol=1e-10
            )
            closed = formulas.group_state(i, 1.0, loss.t, ANGLES)
            assert trace_distance(state, closed, COHERENT_ALGEBRA) < 1e-10

    def test_rejects_failure_members(self):
        with pytest.raises(ValueError):
            group_statistics(
                HybridType.TYPE_II, 1.0, LossParameter(0.2), ANGLES,
                {"bad": [("e", "e")]},
            )


class TestBackends:
    def test_fock_backend_matches_coherent(self):
        loss = LossParameter(0.3)
        rc = teleport_once(HybridType.TYPE_II, 1.0, loss, ANGLES,
                           backend=COHERENT_ALGEBRA, include_states=False)
        rf = teleport_once(HybridType.TYPE_II, 1.0, loss, ANGLES,
                           backend=TRUNCATED_FOCK, include_states=False)
        assert math.isclose(rc.success_probability, rf.success_probability,
                            abs_tol=1e-8)
        assert math.isclose(rc.conditional_fidelity, rf.conditional_fidelity,
                            abs_tol=1e-8)
        for ec, ef in zip(rc.entries, rf.entries):
            assert abs(ec.probability - ef.probability) < 1e-8


class TestTypeIOutcomeIndependence:
    @pytest.mark.parametrize("r", [0.2, 0.8])
    def test_all_success_states_identical(self, r):
        report = teleport_once(HybridType.TYPE_I, 1.0, LossParameter(r), ANGLES)
        states = [
            e.state for e in report.entries
            if e.correction != FAIL and e.probability > 1e-12
        ]
        assert len(states) == 10
        base = states[0]
        for s in states[1:]:
            assert trace_distance(base, s, COHERENT_ALGEBRA) < 1e-10
