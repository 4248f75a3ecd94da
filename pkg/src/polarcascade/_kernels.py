"""Compiled inner loops for the agent engine and the mean-field integrator."""

import numpy as np
from numba import njit


@njit(cache=True)
def update_choice(arg, delta, current):
    if arg < -delta:
        return 0
    if arg > delta:
        return 1
    return current


@njit(cache=True)
def signal(alpha, beta, in1, in0, out1, out0, deg):
    # same float operations as the Python-level update rule
    d_in1 = in1 / deg
    d_in0 = in0 / deg
    d_out1 = out1 / deg
    d_out0 = out0 / deg
    return alpha * (d_in1 - d_in0) - beta * (d_out1 - d_out0)


@njit(cache=True)
def complete_advance(nodes, choices, party, ones, n_grp, alpha, beta, delta,
                     trace_b, trace_r):
    deg = choices.shape[0] - 1
    for k in range(nodes.shape[0]):
        v = nodes[k]
        g = party[v]
        own = choices[v]
        in1 = ones[g] - own
        in0 = n_grp[g] - 1 - in1
        out1 = ones[1 - g]
        out0 = n_grp[1 - g] - out1
        new = update_choice(signal(alpha, beta, in1, in0, out1, out0, deg), delta, own)
        if new != own:
            choices[v] = new
            ones[g] += new - own
        trace_b[k] = ones[0]
        trace_r[k] = ones[1]


@njit(cache=True)
def graph_counts(choices, party, indptr, indices):
    n = choices.shape[0]
    same1 = np.zeros(n, np.int64)
    other1 = np.zeros(n, np.int64)
    same_deg = np.zeros(n, np.int64)
    for v in range(n):
        for i in range(indptr[v], indptr[v + 1]):
            w = indices[i]
            if party[w] == party[v]:
                same_deg[v] += 1
                same1[v] += choices[w]
            else:
                other1[v] += choices[w]
    return same1, other1, same_deg


@njit(cache=True)
def graph_advance(nodes, choices, party, ones, indptr, indices, deg, same_deg,
                  same1, other1, alpha, beta, delta, trace_b, trace_r):
    for k in range(nodes.shape[0]):
        v = nodes[k]
        d = deg[v]
        if d > 0:
            g = party[v]
            own = choices[v]
            in1 = same1[v]
            in0 = same_deg[v] - in1
            out1 = other1[v]
            out0 = d - same_deg[v] - out1
            new = update_choice(signal(alpha, beta, in1, in0, out1, out0, d), delta, own)
            if new != own:
                step = new - own
                choices[v] = new
                ones[g] += step
                for i in range(indptr[v], indptr[v + 1]):
                    w = indices[i]
                    if party[w] == g:
                        same1[w] += step
                    else:
                        other1[w] += step
        trace_b[k] = ones[0]
        trace_r[k] = ones[1]


@njit(cache=True)
def _zone(arg, delta, snap):
    if arg > delta + snap:
        return 1
    if arg < -delta - snap:
        return -1
    return 0


@njit(cache=True)
def euler_path(tb, tr, a, b, r, delta, h, horizon, snap, clamp, record_every, max_steps):
    """Forward Euler on the piecewise drift with landing on switching lines.

    A step that would carry a group's signal across its firing threshold is
    shortened so the state lands on that line; there the group sits in the
    inertia band and its drift is zero. Returns (t, theta_b, theta_r, steps).
    """
    cap = max_steps // record_every + 3
    out_t = np.empty(cap)
    out_b = np.empty(cap)
    out_r = np.empty(cap)
    out_t[0] = 0.0
    out_b[0] = tb
    out_r[0] = tr
    n_rec = 1
    t = 0.0
    steps = 0
    kb_b = 2.0 * a * (1.0 - r)   # d arg_b / d theta_b
    kb_r = -2.0 * b * r          # d arg_b / d theta_r
    kr_r = 2.0 * a * r
    kr_b = -2.0 * b * (1.0 - r)
    while t < horizon and steps < max_steps:
        u = 2.0 * tb - 1.0
        v = 2.0 * tr - 1.0
        arg_b = a * (1.0 - r) * u - b * r * v
        arg_r = a * r * v - b * (1.0 - r) * u
        zb = _zone(arg_b, delta, snap)
        zr = _zone(arg_r, delta, snap)
        gb = 0.0
        if zb == 1:
            gb = 1.0 - tb
        elif zb == -1:
            gb = -tb
        gr = 0.0
        if zr == 1:
            gr = 1.0 - tr
        elif zr == -1:
            gr = -tr
        hs = h
        if horizon - t < hs:
            hs = horizon - t
        tau = 1.0
        if zb != 0:
            d_arg = hs * (kb_b * gb + kb_r * gr)
            thr = zb * delta
            if zb * (arg_b + d_arg - thr) < 0.0:
                tau = min(tau, (thr - arg_b) / d_arg)
        if zr != 0:
            d_arg = hs * (kr_b * gb + kr_r * gr)
            thr = zr * delta
            if zr * (arg_r + d_arg - thr) < 0.0:
                tau = min(tau, (thr - arg_r) / d_arg)
        hs = hs * tau
        tb = tb + hs * gb
        tr = tr + hs * gr
        if clamp:
            tb = min(1.0, max(0.0, tb))
            tr = min(1.0, max(0.0, tr))
        if tau < 1.0:
            t = t + hs
        elif hs < h:
            t = horizon
        else:
            t = t + hs
        steps += 1
        if steps % record_every == 0 or t >= horizon or steps >= max_steps:
            if out_t[n_rec - 1] < t:
                out_t[n_rec] = t
                out_b[n_rec] = tb
                out_r[n_rec] = tr
                n_rec += 1
    return out_t[:n_rec], out_b[:n_rec], out_r[:n_rec], steps
