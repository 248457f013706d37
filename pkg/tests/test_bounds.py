"""Bound evaluators against hand arithmetic and 80-digit fixtures."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from sparsesv import bounds
from sparsesv.bounds import UniversalConstants
from sparsesv.errors import HypothesisViolation, InvalidInputError

FIXTURES = json.loads((Path(__file__).parent / "fixtures" / "constants.json").read_text())
REL = 1e-12


def close(got, ref, rel=REL):
    return abs(got - ref) <= rel * abs(ref)


class TestTallConstants:
    def test_reference_values(self):
        b1, b2 = bounds.prop_tall_constants(3, 1, 1)
        assert close(b1, 2.0**-20) and close(b2, 2.0**-18)

    def test_r0_reduction(self):
        assert bounds.prop_tall_constants(4, 1, 1) == bounds.prop_tall_constants(3, 1, 1)
        assert bounds.r0_of(7.5) == 3.0 and bounds.r0_of(2.5) == 2.5

    @pytest.mark.parametrize("r,mu", [(3, 1), (2.5, 2.0), (2.1, 1.5)])
    def test_increasing_in_a3(self, r, mu):
        grid = np.linspace(0.05, mu * 0.99, 40)
        vals = np.array([bounds.prop_tall_constants(r, mu, a3) for a3 in grid])
        assert np.all(np.diff(vals, axis=0) > 0)

    def test_domain(self):
        for args in [(2, 1, 1), (3, 0.5, 0.4), (3, 1, 0), (3, 1, 1.5)]:
            with pytest.raises(InvalidInputError):
                bounds.prop_tall_constants(*args)

    def test_delta0_when_first_term_vanishes(self):
        a1, b2 = 0.5, 0.01
        assert close(bounds.teo_tall_delta0(6 * a1, b2, a1), 2 / b2 * math.log(3))

    def test_delta0_reference(self):
        d0 = bounds.teo_tall_delta0(2.0**-20, 2.0**-18, 2)
        assert close(d0, 2**19 * math.log(12 * 2**20))
        assert d0 == pytest.approx(8.57e6, rel=1e-3)

    def test_delta0_decreasing_in_b2(self):
        vals = [bounds.teo_tall_delta0(1e-6, b2, 2) for b2 in np.geomspace(1e-6, 1e-1, 30)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_delta_gate(self):
        assert bounds.tall_delta_gate(300, 100, 2.0).holds
        gate = bounds.tall_delta_gate(200, 100, 2.0)
        assert not gate.holds and gate.name == bounds.GATE_TALL_DELTA
        with pytest.raises(HypothesisViolation, match="delta >= delta0"):
            gate.require()


class TestSmallBall:
    def test_reference_value(self):
        assert close(bounds.small_ball_lower(0.5, 1.0, 1.0, 3), (0.75 / 8) ** 3)
        assert bounds.small_ball_lower(0.5, 1.0, 1.0, 3) == pytest.approx(8.240e-4, rel=1e-4)

    def test_clamp(self):
        assert bounds.small_ball_lower(1.0, 1.0, 1.0, 3) == 0.0
        assert bounds.small_ball_lower(2.0, 1.0, 1.0, 2.5) == 0.0

    def test_monotonicity(self):
        lams = np.linspace(0, 1, 21)
        A2s = np.linspace(0, 1, 21)
        for r in (2.3, 3, 5):
            v = [bounds.small_ball_lower(0.3, A2, 1.0, r) for A2 in A2s]
            assert all(a <= b for a, b in zip(v, v[1:]))
            v = [bounds.small_ball_lower(lam, 1.0, 1.0, r) for lam in lams]
            assert all(a >= b for a, b in zip(v, v[1:]))
            v = [bounds.small_ball_lower(0.3, 1.0, mu, r) for mu in (1, 1.5, 2, 4)]
            assert all(a >= b for a, b in zip(v, v[1:]))
            assert max(v) <= 1


class TestSmallBallUpper:
    def test_interval_reference(self):
        got = bounds.sbp_interval_upper(-1, 1, 1.0, 1.0, 1.0, 3)
        assert close(got, 2 / math.sqrt(2 * math.pi) + 1)
        assert got == pytest.approx(1.7979, abs=1e-4)

    def test_degenerate_interval(self):
        assert close(bounds.sbp_interval_upper(0.3, 0.3, 2.0, 0.5, 1.2, 3), (0.5 * 1.2 / 2.0) ** 3)

    def test_interval_monotone_in_width(self):
        v = [bounds.sbp_interval_upper(0, w, 1.0, 0.3, 1.0, 3) for w in np.linspace(0, 2, 11)]
        assert all(a < b for a, b in zip(v, v[1:]))

    def test_zero_scale_is_vacuous(self):
        assert bounds.sbp_interval_upper(0, 1, 0.0, 0.0, 1.0, 3) == 1.0
        assert bounds.sbp_levy_upper(0.1, 0.0, 0.0, 1.0, 3) == 1.0

    def test_levy_at_zero_radius(self):
        u = UniversalConstants(c_sbp=2.5)
        assert close(bounds.sbp_levy_upper(0.0, 2.0, 0.7, 1.5, 3, u), 2.5 * (0.7 * 1.5 / 2.0) ** 3)

    def test_corollary_prefactor(self):
        C = 1.7
        got = bounds.coro_upper(0.2, 0.5, 0.5, 4, 1.0, 3, C=C)
        assert close(got, C / 2 * (0.2 / 0.5 + 1.0))

    def test_corollary_flat_coordinates(self):
        for r in (2.5, 3):
            got = bounds.coro_upper(0.0, 0.3, 0.3, 9, 1.4, r, C=1.0)
            assert close(got, 1.4**r / 9 ** (r / 2 - 1))

    @pytest.mark.parametrize("c_sbp", [0.3, 1.0, 4.0])
    def test_corollary_dominates_levy_on_flat_vectors(self, c_sbp):
        u = UniversalConstants(c_sbp=c_sbp)
        for r in (2.2, 2.6, 3.0, 4.0):
            r0 = bounds.r0_of(r)
            for k in (1, 2, 5, 16, 100):
                for mu in (1.0, 1.7):
                    for t in (0.0, 0.01, 0.5):
                        x = np.full(k, k**-0.5)  # unit-variance weights, so A_sigma = 1
                        rnorm = float(np.sum(np.abs(x) ** r0) ** (1 / r0))
                        levy = bounds.sbp_levy_upper(t, 1.0, rnorm, mu, r, u)
                        coro = bounds.coro_upper(t, k**-0.5, k**-0.5, k, mu, r, u)
                        assert coro >= levy * (1 - 1e-12)

    def test_corollary_domain(self):
        with pytest.raises(InvalidInputError):
            bounds.coro_upper(0.1, 0.5, 0.4, 3, 1.0, 3)
        with pytest.raises(InvalidInputError):
            bounds.coro_upper(0.1, 0.5, 0.5, 0, 1.0, 3)


class TestIncompressible:
    def test_r3_form(self):
        c0, c = bounds.incomp_sbp_constant(0.5, 0.25, 1.0, 3)
        got = bounds.incomp_sbp_upper(0.1, 64, 1.3, 3, 0.5, 0.25, 1.0)
        assert close(got, c * (0.1 + 1.3**3 / 8))
        assert close(c0, 0.25**2 * 0.5 / 2)

    def test_violation(self):
        # rho^2 gamma = 0.1 with a4 = 0.9 leaves c0 = -0.05
        with pytest.raises(HypothesisViolation) as err:
            bounds.incomp_sbp_upper(0.1, 10, 1.0, 3, 0.4, 0.5, 0.9)
        assert err.value.gate == bounds.GATE_INCOMP
        gate = bounds.incomp_gate(0.4, 0.5, 0.9)
        assert not gate.holds and gate.margin == pytest.approx(-0.05, abs=1e-15)

    def test_decreasing_in_n(self):
        v = [bounds.incomp_sbp_upper(0.0, n, 1.0, 2.5, 0.5, 0.25, 1.0) for n in (1, 4, 16, 64, 256)]
        assert all(a > b for a, b in zip(v, v[1:]))


class TestAlmostSquare:
    def test_reference_rho_gamma(self):
        tc = bounds.almost_square_constants(3, 1, 2, 0.01, 1, 1)
        assert close(tc.rho, 2.0**-20 / 10)
        assert tc.rho == pytest.approx(9.537e-8, rel=1e-4)
        assert tc.gamma == pytest.approx(3.0e-8, rel=0.02)
        assert tc.r0 == 3 and tc.gamma0 == tc.gamma
        assert tc.invariant_failures() == []

    def test_rho_never_exceeds_quarter(self):
        for a1 in (1e-12, 1e-6, 1.0, 10.0):
            assert bounds.almost_square_constants(3, 1, a1, 0.01, 1, 1).rho <= 0.25

    def test_threshold_t(self):
        tc = bounds.almost_square_constants(3, 1, 2, 0.01, 1, 1)
        ts = [tc.t(d) for d in (0.5, 1, 4, 19, 1000)]
        assert all(0 < t <= 1 for t in ts)
        assert all(a < b for a, b in zip(ts, ts[1:]))

    def test_a4_gate_fires(self):
        tc = bounds.almost_square_constants(3, 1, 2, 0.01, 1, 0.999)
        gate = tc.gate(bounds.GATE_ALMOST_A4)
        assert not gate.holds
        assert not tc.gate(bounds.GATE_SQUARE_A4).holds
        assert tc.c_tilde2 < 0 and tc.log_c_tilde2 == -math.inf
        assert "c_tilde2 > 0" in tc.invariant_failures()
        with pytest.raises(HypothesisViolation, match="a4 > 1 - gamma"):
            gate.require()

    def test_a4_gate_holds_at_one(self):
        tc = bounds.almost_square_constants(3, 1, 2, 0.01, 1, 1)
        gate = tc.gate(bounds.GATE_ALMOST_A4)
        assert gate.holds and gate.margin == pytest.approx(tc.gamma, rel=1e-12)

    def test_delta_gate(self):
        tc = bounds.almost_square_constants(3, 1, 2, 0.01, 1, 1)
        a4_gate, delta_gate = tc.almost_square_gates(200, 100)
        assert a4_gate.holds
        # c~2 n is far below 1 at any desk-scale n, so the threshold is infinite
        assert tc.delta_threshold(100) == math.inf and not delta_gate.holds

    def test_report_mentions_conventions(self):
        d = bounds.almost_square_constants(3, 1, 2, 0.01, 1, 1).to_dict()
        assert d["params"]["r0"] == 3
        assert d["universal_constants"] == {"c_sbp": 1.0, "c_be": 1.0, "c_abs": 1.0}
        assert "convention" in d["universal_constants_note"]
        assert {g["gate"] for g in d["gates"]} == {bounds.GATE_ALMOST_A4, bounds.GATE_SQUARE_A4}


@pytest.mark.parametrize("case", FIXTURES["cases"], ids=lambda c: "-".join(c["params"].values()))
class TestFixtures:
    """Double-precision evaluators against the stored high-precision references."""

    def _constants(self, case):
        p = {k: float(v) for k, v in case["params"].items()}
        u = UniversalConstants(c_abs=p.pop("c_abs"))
        return bounds.almost_square_constants(u=u, **p), p

    def test_tall(self, case):
        tc, p = self._constants(case)
        ref = case["values"]
        b1, b2 = bounds.prop_tall_constants(p["r"], p["mu"], p["a3"])
        assert close(b1, float(ref["b1"])) and close(b2, float(ref["b2"]))
        assert close(bounds.teo_tall_delta0(b1, b2, p["a1"]), float(ref["delta0"]))

    def test_almost_square(self, case):
        tc, _ = self._constants(case)
        ref = case["values"]
        for name in ("b1", "b2", "delta0", "rho", "gamma", "c3", "c_tilde1"):
            assert close(getattr(tc, name), float(ref[name])), name
        for delta, t in ref["t"].items():
            assert close(tc.t(float(delta)), float(t))

    def test_c_tilde2(self, case):
        tc, _ = self._constants(case)
        ref = case["values"]
        if ref["log_c_tilde2"] is None:
            # the reference is negative; its magnitude may sit below the double range
            assert math.copysign(1.0, tc.c_tilde2) == -1.0 and tc.log_c_tilde2 == -math.inf
            assert not tc.gate(bounds.GATE_ALMOST_A4).holds
        else:
            assert close(tc.log_c_tilde2, float(ref["log_c_tilde2"]))
            assert close(tc.c_tilde2, float(ref["c_tilde2"]))
            assert tc.gate(bounds.GATE_ALMOST_A4).holds

    def test_incompressible_constant(self, case):
        tc, p = self._constants(case)
        ref = case["values"]
        gate = bounds.incomp_gate(tc.gamma, tc.rho, p["a4"])
        assert close(gate.margin, float(ref["c0"]))
        if "c_incomp" in ref:
            _, c = bounds.incomp_sbp_constant(tc.gamma, tc.rho, p["a4"], p["r"])
            assert close(c, float(ref["c_incomp"]))
        else:
            with pytest.raises(HypothesisViolation):
                bounds.incomp_sbp_constant(tc.gamma, tc.rho, p["a4"], p["r"])


class TestSquare:
    def test_reference_value(self):
        assert close(bounds.square_bound(0.1, 100, 3, 1.0), 0.2)

    def test_zero_eps(self):
        assert close(bounds.square_bound(0.0, 49, 2.5, 3.0), 3.0 * 49**-0.25)

    def test_decreasing_in_n(self):
        v = [bounds.square_bound(0.05, n, 2.4, 1.0) for n in (1, 10, 100, 1000)]
        assert all(a > b for a, b in zip(v, v[1:]))

    def test_aggregate(self):
        assert bounds.invert_via_distance_aggregate([0.0] * 5, 0.3) == (0.0, 0.0)
        clamped, raw = bounds.invert_via_distance_aggregate([0.3] * 7, 0.3)
        assert clamped == 1.0 and raw == pytest.approx(1.0, rel=1e-15)
        assert bounds.invert_via_distance_aggregate([0.1, 0.1, 0.2, 0.0], 0.5)[0] == pytest.approx(0.2)
        clamped, raw = bounds.invert_via_distance_aggregate([0.9, 0.9], 0.5)
        assert clamped == 1.0 and raw == pytest.approx(1.8)

    def test_aggregate_domain(self):
        with pytest.raises(InvalidInputError):
            bounds.invert_via_distance_aggregate([1.2], 0.5)
        with pytest.raises(InvalidInputError):
            bounds.invert_via_distance_aggregate([0.2], 1.0)


class TestUniversalConstants:
    def test_positive(self):
        with pytest.raises(InvalidInputError):
            UniversalConstants(c_be=0.0)
        with pytest.raises(InvalidInputError):
            UniversalConstants(c_sbp=math.nan)

    def test_corollary_constant(self):
        assert bounds.corollary_constant() == 1.0
        assert bounds.corollary_constant(UniversalConstants(c_sbp=0.1)) == pytest.approx(math.sqrt(2 / math.pi))
