# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled SMO sweep loop.

Keep the arithmetic in lockstep with smo._smo_sweeps_python /
smo._try_update: both backends must return identical results.
"""

from libc.math cimport fabs

import numpy as np


cdef double _UPDATE_EPS = 1e-3


cdef double _try_update(double[:, ::1] K, double[::1] y, double[::1] alpha,
                        double[::1] E, double* b, double C,
                        Py_ssize_t i, Py_ssize_t j, Py_ssize_t n) noexcept nogil:
    cdef double yi = y[i]
    cdef double yj = y[j]
    cdef double ai = alpha[i]
    cdef double aj = alpha[j]
    cdef double L, H, eta, Ei, Ej, aj_new, ai_new, dai, daj
    cdef double b1, b2, b_new, s1, s2, db, gain
    cdef Py_ssize_t t
    if yi == yj:
        L = ai + aj - C
        if L < 0.0:
            L = 0.0
        H = ai + aj
        if H > C:
            H = C
    else:
        L = aj - ai
        if L < 0.0:
            L = 0.0
        H = C + aj - ai
        if H > C:
            H = C
    if L >= H:
        return -1.0
    eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
    if eta >= 0.0:
        return -1.0
    Ei = E[i]
    Ej = E[j]
    aj_new = aj - yj * (Ei - Ej) / eta
    if aj_new > H:
        aj_new = H
    elif aj_new < L:
        aj_new = L
    if fabs(aj_new - aj) < _UPDATE_EPS * (aj_new + aj + _UPDATE_EPS):
        return -1.0
    ai_new = ai + yi * yj * (aj - aj_new)
    if ai_new < 0.0:
        ai_new = 0.0
    elif ai_new > C:
        ai_new = C
    dai = ai_new - ai
    daj = aj_new - aj
    b1 = b[0] - Ei - yi * dai * K[i, i] - yj * daj * K[i, j]
    b2 = b[0] - Ej - yi * dai * K[i, j] - yj * daj * K[j, j]
    if 0.0 < ai_new < C:
        b_new = b1
    elif 0.0 < aj_new < C:
        b_new = b2
    else:
        b_new = 0.5 * (b1 + b2)
    gain = daj * yj * (Ei - Ej) + 0.5 * eta * daj * daj
    db = b_new - b[0]
    s1 = yi * dai
    s2 = yj * daj
    for t in range(n):
        E[t] = E[t] + ((s1 * K[i, t] + s2 * K[j, t]) + db)
    alpha[i] = ai_new
    alpha[j] = aj_new
    b[0] = b_new
    if gain < 0.0:
        gain = 0.0
    return gain


def smo_sweeps(double[:, ::1] K, double[::1] y, double C, double tol,
               long max_passes, long max_sweeps, double dual_rtol):
    cdef Py_ssize_t n = K.shape[0]
    alpha_arr = np.zeros(n, dtype=np.float64)
    E_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] E = E_arr
    cdef double b = 0.0
    cdef long clean_full = 0
    cdef long sweeps = 0
    cdef long changed
    cdef bint examine_all = 1
    cdef Py_ssize_t i, j, j2, t, off
    cdef double Ei, r, s, smax, gain, sweep_gain, objective, scale
    objective = 0.0
    with nogil:
        for t in range(n):
            E[t] = -y[t]
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
                smax = -1.0
                j = 0
                for t in range(n):
                    if t == i:
                        continue
                    s = fabs(E[t] - Ei)
                    if s > smax:
                        smax = s
                        j = t
                gain = _try_update(K, y, alpha, E, &b, C, i, j, n)
                if gain < 0.0:
                    for off in range(1, n):
                        j2 = (i + off) % n
                        if j2 == j:
                            continue
                        gain = _try_update(K, y, alpha, E, &b, C, i, j2, n)
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
                    examine_all = 0
            elif changed == 0:
                examine_all = 1
            if changed > 0:
                scale = objective if objective > 1.0 else 1.0
                if sweep_gain <= dual_rtol * scale:
                    break
    return alpha_arr, float(b), int(sweeps)
