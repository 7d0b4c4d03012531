"""Compiled random-walk Metropolis chain for the copula posterior.

The chain runs in transformed coordinates z = (z_a, z_b, z_g, z_e):
alpha, beta and eta are logit-mapped onto their boxes and gamma is
log-mapped, so every proposal stays in the prior support and the Jacobian
term is added to the target density.  All proposal noise is supplied by
the caller, which keeps the kernel deterministic and thread-safe.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# Acceptance band targeted by the burn-in scale adaptation.
ACC_LO = 0.25
ACC_HI = 0.45


@njit(cache=True, nogil=True)
def _log_target(z, logx, logy, tox, att, d1, d2,
                a_lo, a_hi, b_lo, b_hi, g_shape, g_rate):
    """Log posterior density in z-space (Jacobian included, constants
    dropped)."""
    sa = 1.0 / (1.0 + math.exp(-z[0]))
    sb = 1.0 / (1.0 + math.exp(-z[1]))
    se = 1.0 / (1.0 + math.exp(-z[3]))
    alpha = a_lo + (a_hi - a_lo) * sa
    beta = b_lo + (b_hi - b_lo) * sb
    gamma = math.exp(z[2])
    eta = se

    # Jacobians: logit maps give s(1-s) (box width is constant), log map
    # gives gamma itself; combined with the Gamma(shape, rate) prior the
    # gamma term is shape*z_g - rate*exp(z_g).
    lp = math.log(sa * (1.0 - sa) + 1e-320) + math.log(sb * (1.0 - sb) + 1e-320)
    lp += math.log(se * (1.0 - se) + 1e-320)
    lp += g_shape * z[2] - g_rate * gamma

    tau = -math.tanh(0.5 * gamma)
    for i in range(logx.shape[0]):
        u = math.exp(alpha * logx[i])
        v = math.exp(beta * logy[i])
        w = u * (1.0 - u) * v * (1.0 - v) * tau
        pi = u + v - u * v - w
        if pi < 0.0:
            pi = 0.0
        elif pi > 1.0:
            pi = 1.0
        if tox[i] == 0:
            c = 1.0 - pi
        elif att[i] == 0:
            c = pi * (1.0 - eta)
        else:
            if d1[i] == 1 and d2[i] == 1:
                c = eta * (u * v + w)
            elif d1[i] == 1:
                c = eta * (u * (1.0 - v) - w)
            else:
                c = eta * (v * (1.0 - u) - w)
        if c < 1e-300:
            return -math.inf
        lp += math.log(c)
    return lp


@njit(cache=True, nogil=True)
def run_chain(z0, scales0, normals, unifs,
              chain_length, burn_in, thin, adapt_window,
              logx, logy, tox, att, d1, d2,
              a_lo, a_hi, b_lo, b_hi, g_shape, g_rate):
    """Run the component-wise RW Metropolis chain.

    Returns (draws, accepted, n_post): draws is an (m, 4) array of
    post-burn-in (alpha, beta, gamma, eta) values, accepted counts
    post-burn-in acceptances per component over n_post iterations.
    """
    z = z0.copy()
    scales = scales0.copy()
    lp = _log_target(z, logx, logy, tox, att, d1, d2,
                     a_lo, a_hi, b_lo, b_hi, g_shape, g_rate)
    n_keep = (chain_length - burn_in + thin - 1) // thin
    draws = np.empty((n_keep, 4))
    accepted = np.zeros(4)
    win_acc = np.zeros(4)
    kept = 0
    n_post = 0
    for it in range(chain_length):
        for j in range(4):
            old = z[j]
            z[j] = old + scales[j] * normals[it, j]
            lp_new = _log_target(z, logx, logy, tox, att, d1, d2,
                                 a_lo, a_hi, b_lo, b_hi, g_shape, g_rate)
            if math.log(unifs[it, j] + 1e-320) < lp_new - lp:
                lp = lp_new
                if it >= burn_in:
                    accepted[j] += 1.0
                else:
                    win_acc[j] += 1.0
            else:
                z[j] = old
        if it < burn_in and (it + 1) % adapt_window == 0:
            for j in range(4):
                rate = win_acc[j] / adapt_window
                if rate < ACC_LO:
                    scales[j] *= 0.8
                elif rate > ACC_HI:
                    scales[j] *= 1.25
                win_acc[j] = 0.0
        if it >= burn_in:
            n_post += 1
            if (it - burn_in) % thin == 0:
                sa = 1.0 / (1.0 + math.exp(-z[0]))
                sb = 1.0 / (1.0 + math.exp(-z[1]))
                se = 1.0 / (1.0 + math.exp(-z[3]))
                draws[kept, 0] = a_lo + (a_hi - a_lo) * sa
                draws[kept, 1] = b_lo + (b_hi - b_lo) * sb
                draws[kept, 2] = math.exp(z[2])
                draws[kept, 3] = se
                kept += 1
    return draws[:kept], accepted, n_post
