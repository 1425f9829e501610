"""Independent reference implementations used only by the tests.

The right-hand side here is transcribed a second time from the model
equations, built from the two generic kinetic forms (saturating stimulation
and reciprocal inhibition), and vectorised over a leading batch axis. It shares
no code with ``gastrodose.model.rhs``. ``batch_rk4`` integrates many dose
candidates at once with a fixed step so grid searches over doses are cheap.
"""
import math

import numpy as np


def stim(k_max, x, alpha):
    return k_max * x / (x + alpha)


def inhib(x, k):
    return 1.0 / (1.0 + x / k)


def acid_gate(a, k):
    return 1.0 / (1.0 + a ** 2 / (a ** 2 + k ** 2))


def reference_rhs(y, fd, ppi, P):
    """y has shape (..., 12); P is a plain dict of parameters."""
    y = np.asarray(y, dtype=float)
    Ga, Gc, Sa, Sc, H, Ac, Aa, Bc, Ba, Nc, Ne, PP = np.moveaxis(y, -1, 0)

    g_common = P["N_G"] * inhib(Sa, P["k_SG"]) * acid_gate(Ac, P["k_AG"])
    dGa = g_common * (
        stim(P["K_NG1"], Ne, P["alpha_NG1"]) + stim(P["K_NG2"], Nc, P["alpha_NG2"])
        + stim(P["K_FG"], fd, P["alpha_FD"])
    ) - (P["k_G"] + P["beta_G"]) * Ga
    dGc = P["beta_G"] * Ga - P["k_G"] * Gc

    dSa = P["N_DA"] * inhib(Sa, P["k_SS"]) * inhib(Nc, P["k_NS"]) * (
        stim(P["K_AS"], Aa, P["alpha_AS"]) + stim(P["K_NS1"], Ne, P["alpha_NS1"])
    ) - P["k_S"] * Sa
    dSc = P["N_DC"] * inhib(Sc, P["k_SS"]) * inhib(Nc, P["k_NS"]) * (
        stim(P["K_GS"], Gc, P["alpha_GS"]) + stim(P["K_NS2"], Ne, P["alpha_NS2"])
    ) - P["k_S"] * Sc

    dH = P["N_E"] * inhib(Sc, P["k_SH"]) * (
        stim(P["K_NH"], Ne, P["alpha_NH"]) + stim(P["K_GH"], Gc, P["alpha_GH"])
    ) - P["k_H"] * H

    pc = PP * P["N_P"] * inhib(Sc, P["k_SA"])
    hist_term = pc * stim(P["K_HA"], H, P["alpha_HA"])
    cns_term = pc * stim(P["K_NA"], Nc, P["alpha_NA"])
    gastrin_term = (H / (H + P["alpha_H"])) * pc * stim(P["K_GA"], Gc, P["alpha_GA"])
    dAc = hist_term + cns_term + gastrin_term - P["hb"] * Ac * Bc - P["beta_A"] * Ac
    dAa = P["beta_A"] * Ac - P["k_A"] * Aa

    dBc = stim(P["k_bc"], Nc, P["alpha_NB"]) - P["hb"] * Ac * Bc - P["k_B"] * Bc
    dBa = stim(P["k_ba"], Nc, P["alpha_NB"]) - P["hb"] * Aa * Ba - P["k_B"] * Ba

    dNc = stim(P["N_1"], fd, P["k1_Fd"]) * acid_gate(Ac, P["k_AN1"]) - P["k_NC"] * Nc + P["Bas_1"]
    dNe = stim(P["N_2"], fd, P["k2_Fd"]) * acid_gate(Ac, P["k_AN2"]) - P["k_NE"] * Ne + P["Bas_2"]

    dPP = P["K_deg"] * (1.0 - PP) - P["K_r"] * ppi * PP
    return np.stack([dGa, dGc, dSa, dSc, dH, dAc, dAa, dBc, dBa, dNc, dNe, dPP], axis=-1)


def reference_food(t, day=None):
    """Three-meal profile written out term by term."""
    if day is None:
        day = 24.0 * math.floor(t / 24.0)
    out = 0.0
    for amp, hour in ((1.6, 19.0), (1.0, 13.0), (0.4, 7.0)):
        x = t - (day + hour)
        out += amp * (1.0 + math.tanh(math.pi * x)) * math.exp(-0.5 * (1.0 + 3.5 * x))
    return out


def batch_rk4(y0, t0, t1, P, dose_events, dose_scale, h=0.01, base_events=()):
    """Integrate a batch of trajectories with classical RK4 on a uniform grid.

    ``dose_events`` are times at which every batch member receives its own
    dose ``dose_scale[b]`` (mg); ``base_events`` are ``(time, mg)`` pairs shared
    by all members. Event times must lie on the step grid. The PPI level on
    each step is the analytic decay from its value at the step start, which
    already includes doses given at that instant.

    Returns ``(times, a_c)`` where ``a_c`` has shape (n_steps + 1, batch), and
    the final states.
    """
    n = int(round((t1 - t0) / h))
    y = np.array(np.broadcast_to(y0, (len(dose_scale), 12)), dtype=float)
    dose_scale = np.asarray(dose_scale, dtype=float)
    conv = 1.0 / (P["V"] * P["m"])
    kel = P["K_el"]
    ev_steps = {}
    for t in dose_events:
        ev_steps.setdefault(int(round((t - t0) / h)), []).append(("batch", 0.0))
    for t, d in base_events:
        k = int(round((t - t0) / h))
        if k >= 0:
            ev_steps.setdefault(k, []).append(("base", d))
    # level from shared doses given before t0
    base_c = sum(d * conv * math.exp(-kel * (t0 - t)) for t, d in base_events if t < t0 - 1e-12)
    batch_c = np.zeros(len(dose_scale))
    acid = np.empty((n + 1, len(dose_scale)))
    acid[0] = y[:, 5]
    for i in range(n):
        for kind, d in ev_steps.get(i, ()):
            if kind == "batch":
                batch_c = batch_c + dose_scale * conv
            else:
                base_c += d * conv
        ts = t0 + i * h
        c0 = base_c + batch_c
        day = 24.0 * math.floor(ts / 24.0 + 1e-9)

        def f(s, yy):
            return reference_rhs(yy, reference_food(ts + s, day), c0 * math.exp(-kel * s), P)

        k1 = f(0.0, y)
        k2 = f(0.5 * h, y + 0.5 * h * k1)
        k3 = f(0.5 * h, y + 0.5 * h * k2)
        k4 = f(h, y + h * k3)
        y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        decay = math.exp(-kel * h)
        base_c *= decay
        batch_c = batch_c * decay
        acid[i + 1] = y[:, 5]
    return t0 + h * np.arange(n + 1), acid, y


def smallest_feasible(grid, peaks, ceiling):
    ok = np.flatnonzero(peaks <= ceiling)
    return None if len(ok) == 0 else float(grid[ok[0]])
