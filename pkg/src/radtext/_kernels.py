"""Hot numeric loops, compiled with numba when available.

Every kernel is a plain function over preallocated float64/int64 arrays:
all randomness (shuffles, negative samples, window sizes) is drawn by the
caller with a numpy Generator and passed in.  The bodies stick to numpy
operations numba supports in nopython mode, so the same source runs
vectorized under the interpreter when numba is disabled.  Within one
backend results are bit-reproducible; across backends they agree to
libm rounding (ulp-level differences in exp and dot reductions).
"""

from __future__ import annotations

import numpy as np

from ._accel import njit


@njit(cache=True)
def skipgram_epoch(w_in, w_out, centers, contexts, negatives, lr):
    """One pass of skip-gram with negative sampling over pre-drawn pairs.

    centers/contexts: int64[n]; negatives: int64[n, k]; lr: float64[n].
    Updates w_in and w_out in place; returns the summed per-pair gradient
    norm so the caller can form the epoch mean.
    """
    n = centers.shape[0]
    k = negatives.shape[1]
    d = w_in.shape[1]
    norm_sum = 0.0
    for t in range(n):
        c = centers[t]
        v = w_in[c].copy()
        dv = np.zeros(d)
        sq = 0.0
        for s in range(k + 1):
            if s == 0:
                o = contexts[t]
                label = 1.0
            else:
                o = negatives[t, s - 1]
                label = 0.0
            u = w_out[o]
            # exp overflow saturates the score to 0.0 in float64; no NaN.
            g = 1.0 / (1.0 + np.exp(-np.dot(v, u))) - label
            dv += g * u
            gu = g * v
            sq += np.dot(gu, gu)
            w_out[o] = u - lr[t] * gu
        sq += np.dot(dv, dv)
        w_in[c] -= lr[t] * dv
        norm_sum += np.sqrt(sq)
    return norm_sum


@njit(cache=True)
def tied_affine_epoch(w_in, alpha, bias, centers, contexts, negatives, lr):
    """Skip-gram pass where the output vector of token o is w_in[o]*alpha+bias.

    The output layer has no free parameters; gradients flow back through the
    affine map, scaling the context-row update by alpha.  Updates w_in in
    place; returns the summed per-pair gradient norm.
    """
    n = centers.shape[0]
    k = negatives.shape[1]
    d = w_in.shape[1]
    norm_sum = 0.0
    for t in range(n):
        c = centers[t]
        v_old = w_in[c].copy()
        dv = np.zeros(d)
        sq = 0.0
        for s in range(k + 1):
            if s == 0:
                o = contexts[t]
                label = 1.0
            else:
                o = negatives[t, s - 1]
                label = 0.0
            u = w_in[o] * alpha + bias
            g = 1.0 / (1.0 + np.exp(-np.dot(v_old, u))) - label
            dv += g * u
            go = (alpha * g) * v_old
            sq += np.dot(go, go)
            w_in[o] -= lr[t] * go
        sq += np.dot(dv, dv)
        w_in[c] -= lr[t] * dv
        norm_sum += np.sqrt(sq)
    return norm_sum


@njit(cache=True)
def lstm_forward_pass(x, w, u, b, h0, c0):
    """Run a gated recurrent pass over x: (T, d) and return all state.

    w: (d, 4h), u: (h, 4h), b: (4h,), gate column order [i, f, o, g].
    Returns (hs, cs, gates) where hs/cs are (T+1, h) with row 0 the initial
    state and gates is (T, 4h) of post-activation gate values, saved for the
    backward pass.
    """
    t_len = x.shape[0]
    h_dim = u.shape[0]
    hs = np.zeros((t_len + 1, h_dim))
    cs = np.zeros((t_len + 1, h_dim))
    gates = np.zeros((t_len, 4 * h_dim))
    hs[0] = h0
    cs[0] = c0
    for t in range(t_len):
        a = np.dot(x[t], w) + np.dot(hs[t], u) + b
        i_g = 1.0 / (1.0 + np.exp(-a[:h_dim]))
        f_g = 1.0 / (1.0 + np.exp(-a[h_dim : 2 * h_dim]))
        o_g = 1.0 / (1.0 + np.exp(-a[2 * h_dim : 3 * h_dim]))
        g_g = np.tanh(a[3 * h_dim :])
        c_new = f_g * cs[t] + i_g * g_g
        cs[t + 1] = c_new
        hs[t + 1] = o_g * np.tanh(c_new)
        gates[t, :h_dim] = i_g
        gates[t, h_dim : 2 * h_dim] = f_g
        gates[t, 2 * h_dim : 3 * h_dim] = o_g
        gates[t, 3 * h_dim :] = g_g
    return hs, cs, gates


@njit(cache=True)
def lstm_backward_pass(x, w, u, hs, cs, gates, dh_last):
    """Backpropagate dh_last (gradient at the final hidden state) through
    the full sequence.  Returns (dW, dU, db) matching the packed layout."""
    t_len = x.shape[0]
    h_dim = u.shape[0]
    dw = np.zeros(w.shape)
    du = np.zeros(u.shape)
    db = np.zeros(4 * h_dim)
    dh = dh_last.copy()
    dc = np.zeros(h_dim)
    for t in range(t_len - 1, -1, -1):
        i_g = gates[t, :h_dim]
        f_g = gates[t, h_dim : 2 * h_dim]
        o_g = gates[t, 2 * h_dim : 3 * h_dim]
        g_g = gates[t, 3 * h_dim :]
        tc = np.tanh(cs[t + 1])
        do = dh * tc
        dc_t = dc + dh * o_g * (1.0 - tc * tc)
        da = np.empty(4 * h_dim)
        da[:h_dim] = (dc_t * g_g) * i_g * (1.0 - i_g)
        da[h_dim : 2 * h_dim] = (dc_t * cs[t]) * f_g * (1.0 - f_g)
        da[2 * h_dim : 3 * h_dim] = do * o_g * (1.0 - o_g)
        da[3 * h_dim :] = (dc_t * i_g) * (1.0 - g_g * g_g)
        dc = dc_t * f_g
        dw += np.outer(x[t], da)
        du += np.outer(hs[t], da)
        db += da
        dh = np.dot(u, da)
    return dw, du, db
