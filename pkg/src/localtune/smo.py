"""Dual solver for soft-margin kernel SVMs (sequential minimal optimization).

The hot sweep loop exists twice: a compiled core (``localtune._smo``, built
from Cython) and a numpy fallback in this module. Import-time selection
prefers the compiled core; ``LOCALTUNE_SMO_BACKEND=python|compiled`` forces
one side (used by the backend benchmark and the equivalence tests).

The algorithm is deterministic: full sweeps over all samples alternate
with sweeps over the non-bound set (0 < alpha < C), using an error cache;
the step partner is the sample with the largest |E_i - E_j| and, when that
partner cannot make progress, a wraparound scan starting at i+1. Stopping:
five consecutive full sweeps without an accepted step, a hard cap of 10*n
sweeps (10*n^2 pair checks), or a sweep whose total dual-objective gain
falls below ``dual_rtol`` relative to the objective (each accepted pair
step's exact gain is daj*yj*(Ei-Ej) + eta/2*daj^2, so the objective is
tracked for free). Both implementations order every floating-point
operation identically, so they return the same alphas, bias, and sweep
count.
"""

import os

import numpy as np

try:
    from localtune._smo import smo_sweeps as _smo_sweeps_compiled
except ImportError:
    _smo_sweeps_compiled = None

DEFAULT_TOL = 1e-3       # KKT violation tolerance
DEFAULT_MAX_PASSES = 5   # consecutive clean full sweeps before stopping
DEFAULT_DUAL_RTOL = 1e-4  # relative per-sweep dual gain considered converged
SWEEP_CAP_FACTOR = 10    # hard cap: at most 10*n sweeps = 10*n^2 pair checks
_UPDATE_EPS = 1e-3       # minimum relative alpha step that counts as progress


def have_compiled() -> bool:
    return _smo_sweeps_compiled is not None


def _active_impl():
    forced = os.environ.get("LOCALTUNE_SMO_BACKEND", "").strip().lower()
    if forced == "python":
        return _smo_sweeps_python
    if forced == "compiled":
        if _smo_sweeps_compiled is None:
            raise RuntimeError("LOCALTUNE_SMO_BACKEND=compiled but the extension is not built")
        return _smo_sweeps_compiled
    if forced:
        raise ValueError(f"LOCALTUNE_SMO_BACKEND must be 'python' or 'compiled', not {forced!r}")
    return _smo_sweeps_compiled if _smo_sweeps_compiled is not None else _smo_sweeps_python


def backend() -> str:
    """Name of the sweep implementation that smo_solve will use."""
    return "compiled" if _active_impl() is _smo_sweeps_compiled else "python"


def smo_solve(K, y, C, tol=DEFAULT_TOL, max_passes=DEFAULT_MAX_PASSES,
              max_sweeps=None, dual_rtol=DEFAULT_DUAL_RTOL):
    """Solve the 2-class dual problem for a precomputed kernel matrix.

    K is the (n, n) kernel matrix, y the +/-1 labels, C the box constraint.
    Returns (alpha, bias, sweeps).
    """
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = K.shape[0]
    if K.ndim != 2 or K.shape[1] != n:
        raise ValueError("K must be square")
    if y.shape != (n,):
        raise ValueError("y must have one entry per row of K")
    if n and not np.all(np.abs(y) == 1.0):
        raise ValueError("labels must be +1/-1")
    if C <= 0:
        raise ValueError("C must be positive")
    if n == 0:
        return np.zeros(0), 0.0, 0
    if max_sweeps is None:
        max_sweeps = SWEEP_CAP_FACTOR * n
    # constant kernel (e.g. rbf with gamma=0): no curvature anywhere, every
    # pair step is rejected, so skip the sweeps entirely
    if K[0, 0] == K[0, n - 1] == K[n - 1, 0] and K.max() == K.min():
        return np.zeros(n), 0.0, 0
    alpha, b, sweeps = _active_impl()(K, y, float(C), float(tol),
                                      int(max_passes), int(max_sweeps),
                                      float(dual_rtol))
    return alpha, b, sweeps


def _try_update(K, y, alpha, E, b, C, i, j):
    """Attempt one pair step; returns (gain, new_b) with gain < 0 meaning
    the step was rejected.

    Mirrored line-for-line by the compiled core; keep the arithmetic order
    in sync with _smo.pyx.
    """
    yi = y[i]
    yj = y[j]
    ai = alpha[i]
    aj = alpha[j]
    if yi == yj:
        L = max(0.0, ai + aj - C)
        H = min(C, ai + aj)
    else:
        L = max(0.0, aj - ai)
        H = min(C, C + aj - ai)
    if L >= H:
        return -1.0, b
    eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
    if eta >= 0.0:
        return -1.0, b
    Ei = E[i]
    Ej = E[j]
    aj_new = aj - yj * (Ei - Ej) / eta
    if aj_new > H:
        aj_new = H
    elif aj_new < L:
        aj_new = L
    if abs(aj_new - aj) < _UPDATE_EPS * (aj_new + aj + _UPDATE_EPS):
        return -1.0, b
    ai_new = ai + yi * yj * (aj - aj_new)
    if ai_new < 0.0:
        ai_new = 0.0
    elif ai_new > C:
        ai_new = C
    dai = ai_new - ai
    daj = aj_new - aj
    b1 = b - Ei - yi * dai * K[i, i] - yj * daj * K[i, j]
    b2 = b - Ej - yi * dai * K[i, j] - yj * daj * K[j, j]
    if 0.0 < ai_new < C:
        b_new = b1
    elif 0.0 < aj_new < C:
        b_new = b2
    else:
        b_new = 0.5 * (b1 + b2)
    gain = daj * yj * (Ei - Ej) + 0.5 * eta * daj * daj
    E += yi * dai * K[i] + yj * daj * K[j] + (b_new - b)
    alpha[i] = ai_new
    alpha[j] = aj_new
    if gain < 0.0:
        gain = 0.0
    return gain, b_new


def _smo_sweeps_python(K, y, C, tol, max_passes, max_sweeps, dual_rtol):
    n = K.shape[0]
    alpha = np.zeros(n)
    b = 0.0
    E = -y.copy()
    clean_full = 0
    sweeps = 0
    objective = 0.0
    examine_all = True
    while clean_full < max_passes and sweeps < max_sweeps:
        changed = 0
        sweep_gain = 0.0
        for i in range(n):
            if not examine_all and (alpha[i] == 0.0 or alpha[i] == C):
                continue
            Ei = E[i]
            r = Ei * y[i]
            if not ((r < -tol and alpha[i] < C) or (r > tol and alpha[i] > 0.0)):
                continue
            scores = np.abs(E - Ei)
            scores[i] = -1.0
            j = int(np.argmax(scores))
            gain, b = _try_update(K, y, alpha, E, b, C, i, j)
            if gain < 0.0:
                for off in range(1, n):
                    j2 = (i + off) % n
                    if j2 == j:
                        continue
                    gain, b = _try_update(K, y, alpha, E, b, C, i, j2)
                    if gain >= 0.0:
                        break
            if gain >= 0.0:
                changed += 1
                sweep_gain += gain
        sweeps += 1
        objective += sweep_gain
        if examine_all:
            if changed == 0:
                clean_full += 1
            else:
                clean_full = 0
                examine_all = False
        elif changed == 0:
            examine_all = True
        if changed > 0:
            scale = objective if objective > 1.0 else 1.0
            if sweep_gain <= dual_rtol * scale:
                break
    return alpha, b, sweeps
