import math

import numpy as np
import pytest

from gastrodose.errors import IntegrationError, InvariantViolation
from gastrodose.integrator import (
    TRACE_COLUMNS, IntegratorConfig, SimulationTrace, max_corpal_acid, run_in, simulate,
)
from gastrodose.model import IDX, FoodProfile, GastricState, ModelParams, cold_start, default_params
from gastrodose.pharmacokinetics import DoseEvent, DoseSchedule

P = default_params()
MEALS = (7.0, 13.0, 19.0)


@pytest.fixture(scope="module")
def baseline():
    state = run_in(P, days=5)
    return state, simulate(state, 0.0, 72.0, None, P)


def zero_dynamics_params():
    d = {k: 0.0 for k in P.to_dict()}
    # Michaelis and dissociation constants stay positive so every ratio is defined
    for k in P.to_dict():
        if k.startswith("alpha") or k in ("k_SG", "k_AG", "k_SS", "k_NS", "k_SH", "k_SA",
                                          "k1_Fd", "k2_Fd", "k_AN1", "k_AN2", "V", "m"):
            d[k] = 1.0
    return ModelParams(**d)


def rk4_order_errors(state, steps, ref_step, span=24.0):
    def run(h):
        cfg = IntegratorConfig(method="rk4", step=h, sample_interval=1.0)
        return simulate(state, 0.0, span, None, P, config=cfg).states
    ref = run(ref_step)
    scale = np.abs(ref).max(axis=0)
    return [float(np.max(np.abs(run(h) - ref) / scale)) for h in steps]


def test_zero_dynamics_keep_state_constant():
    p = zero_dynamics_params()
    s = GastricState(1e-3, 2e-3, 3e-4, 4e-4, 5e-4, 0.02, 0.01, 1e-3, 2e-3, 0.3, 0.4, 0.7)
    for cfg in (IntegratorConfig(), IntegratorConfig(method="rk4", step=0.1)):
        tr = simulate(s, 0.0, 24.0, None, p, FoodProfile.none(), cfg)
        np.testing.assert_array_equal(tr.states, np.broadcast_to(s.to_array(), tr.states.shape))


def test_rk4_fourth_order(baseline):
    state, _ = baseline
    e = rk4_order_errors(state, (0.1, 0.05), 0.0125)
    order = math.log2(e[0] / e[1])
    assert order >= 3.8


def test_neural_peaks_follow_meals(baseline):
    _, tr = baseline
    t = tr.times
    for day in range(3):
        for meal in MEALS:
            center = 24.0 * day + meal
            m = (t >= center - 2) & (t <= center + 3)
            for name in ("n_c", "n_e"):
                lag = t[m][np.argmax(tr.column(name)[m])] - center
                assert 0.0 <= lag <= 1.0


def test_gastrin_peaks_before_somatostatin(baseline):
    _, tr = baseline
    t = tr.times
    for day in range(3):
        m = (t >= 24 * day) & (t < 24 * (day + 1))
        assert t[m][np.argmax(tr.column("gtn_a")[m])] < t[m][np.argmax(tr.column("s_a")[m])]


def test_run_in_is_periodic_and_untreated():
    state, tr = run_in(P, days=5, return_trace=True)
    assert state.pp_n == 1.0
    nxt = simulate(state, 0.0, 24.0, None, P)
    last = tr.window(96.0, 120.0)
    rel = np.abs(nxt.states - last.states).max(axis=0) / np.abs(last.states).max(axis=0)
    assert rel.max() <= 1e-3
    assert 0.045 <= max_corpal_acid(last) <= 0.051
    assert max_corpal_acid(last) == pytest.approx(0.048, abs=5e-4)


def test_run_in_requires_a_day():
    with pytest.raises(ValueError):
        run_in(P, days=0)


class TestMaxCorpalAcid:
    def make(self, values):
        n = len(values)
        states = np.zeros((n, 12))
        states[:, IDX["a_c"]] = values
        t = np.arange(n, dtype=float)
        return SimulationTrace(t, states, np.zeros(n), np.zeros(n), t.copy(), states.copy())

    def test_constant(self):
        assert max_corpal_acid(self.make([0.02] * 5), (0, 4)) == 0.02

    def test_single_sample_window(self):
        assert max_corpal_acid(self.make([0.01, 0.03, 0.02]), (1, 1)) == 0.03

    def test_errors(self):
        tr = self.make([0.01, 0.03, 0.02])
        with pytest.raises(ValueError):
            max_corpal_acid(tr, (0.2, 0.8))
        with pytest.raises(ValueError):
            max_corpal_acid(tr, (1, 5))

    def test_untreated_full_day(self, baseline):
        _, tr = baseline
        assert max_corpal_acid(tr, (24.0, 48.0)) == pytest.approx(0.048, abs=5e-4)


class TestSegmentation:
    schedule = DoseSchedule((DoseEvent(5.0, 30.0, 1, 1), DoseEvent(17.0, 20.0, 1, 2)))

    def test_deterministic(self, baseline):
        state, _ = baseline
        a = simulate(state, 0.0, 30.0, self.schedule, P)
        b = simulate(state, 0.0, 30.0, self.schedule, P)
        np.testing.assert_array_equal(a.states, b.states)
        assert a.to_csv() == b.to_csv()

    def test_zero_dose_insertion_changes_nothing(self, baseline):
        state, _ = baseline
        extra = self.schedule.merge(DoseSchedule((DoseEvent(11.37, 0.0),)))
        a = simulate(state, 0.0, 30.0, self.schedule, P)
        b = simulate(state, 0.0, 30.0, extra, P)
        np.testing.assert_allclose(b.states, a.states, rtol=1e-6, atol=1e-9)

    def test_continuous_across_split(self, baseline):
        state, _ = baseline
        first = simulate(state, 0.0, 5.0, self.schedule, P)
        second = simulate(first.final_state, 5.0, 17.0, self.schedule, P)
        whole = simulate(state, 0.0, 17.0, self.schedule, P)
        assert np.array_equal(second.states[0], first.states[-1])
        np.testing.assert_array_equal(whole.states[-1], second.states[-1])

    def test_dose_reduces_pumps_and_acid(self, baseline):
        state, untreated = baseline
        tr = simulate(state, 0.0, 24.0, self.schedule, P)
        pp = tr.column("pp_n")
        assert pp[tr.times < 5.0].min() == 1.0
        assert pp.min() < 0.9
        assert tr.peak_acid() < untreated.window(0, 24).peak_acid()
        # the PPI column uses the right limit at dose times
        i = int(np.flatnonzero(np.isclose(tr.times, 5.0))[0])
        assert tr.ppi[i] == pytest.approx(30.0 / (P.V * P.m))
        assert tr.ppi[i - 1] == 0.0

    def test_rk4_and_rk45_agree(self, baseline):
        state, _ = baseline
        a = simulate(state, 0.0, 24.0, self.schedule, P)
        b = simulate(state, 0.0, 24.0, self.schedule, P, config=IntegratorConfig(method="rk4"))
        scale = np.abs(a.states).max(axis=0)
        assert np.max(np.abs(a.states - b.states) / scale) < 1e-5

    def test_invariants_hold_along_trace(self, baseline):
        state, _ = baseline
        tr = simulate(state, 0.0, 48.0, self.schedule, P)
        assert tr.states.min() >= -1e-9
        assert tr.column("pp_n").max() <= 1.0 + 1e-9


def test_grid_spacing_and_end_point(baseline):
    state, _ = baseline
    tr = simulate(state, 2.0, 3.005, None, P)
    assert tr.times[0] == 2.0 and tr.times[-1] == 3.005
    assert np.all(np.diff(tr.times) > 0)
    np.testing.assert_allclose(np.diff(tr.times)[:-1], 0.01, rtol=1e-9)


def test_step_failure_is_reported(baseline):
    state, _ = baseline
    with pytest.raises(IntegrationError):
        simulate(state, 0.0, 24.0, None, P, config=IntegratorConfig(min_step=1.0))


def test_inadmissible_initial_state_rejected(baseline):
    with pytest.raises(InvariantViolation):
        simulate(GastricState(a_c=-1e-3), 0.0, 1.0, None, P)
    with pytest.raises(InvariantViolation):
        simulate(GastricState(pp_n=1.1), 0.0, 1.0, None, P)


def test_invalid_interval():
    with pytest.raises(ValueError):
        simulate(cold_start(P), 5.0, 5.0, None, P)


def test_trace_csv(tmp_path, baseline):
    _, tr = baseline
    short = tr.window(0, 1)
    text = short.to_csv(tmp_path / "t.csv")
    assert text.splitlines()[0] == ",".join(TRACE_COLUMNS)
    assert TRACE_COLUMNS[1:13] == ("Gtn_A", "Gtn_C", "S_A", "S_C", "H_C", "A_C", "A_A", "B_C",
                                   "B_A", "N_C", "N_E", "PP_n")
    back = SimulationTrace.from_csv(tmp_path / "t.csv")
    np.testing.assert_array_equal(back.states, short.states)
    np.testing.assert_allclose(back.times, short.times, atol=1e-6)
