"""Pure-Python versions of the numerical kernels.

These mirror ``_kernels.pyx`` statement for statement and are used when the
compiled extension is unavailable (or when ``BESR_PURE_PYTHON=1``).
"""

import math

import numpy as np

# integrator status codes
OK = 0
STEP_UNDERFLOW = 1
MAX_STEPS = 2

_EPS = np.finfo(float).eps


def jacobi_eigh(a, tol=1e-15, max_sweeps=100):
    """Cyclic Jacobi diagonalisation of a complex Hermitian matrix.

    Returns ``(w, v, sweeps)`` with unsorted eigenvalues ``w`` and the
    unitary ``v`` whose columns are the eigenvectors.
    """
    a = np.array(a, dtype=complex, copy=True)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = math.sqrt(float(np.sum(np.abs(a) ** 2))) or 1.0
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        off = math.sqrt(float(np.sum(np.abs(a - np.diag(np.diag(a))) ** 2)))
        if off <= tol * scale:
            sweeps -= 1
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300 or mag < 1e-3 * tol * scale / n:
                    continue
                phase = apq / mag  # e^{i phi}
                app = a[p, p].real
                aqq = a[q, q].real
                theta = (aqq - app) / (2.0 * mag)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ph_c = phase.conjugate()
                # columns: A <- A U
                col_p = a[:, p].copy()
                col_q = a[:, q]
                a[:, p] = c * col_p - s * ph_c * col_q
                a[:, q] = s * col_p + c * ph_c * col_q
                # rows: A <- U^H A
                row_p = a[p, :].copy()
                row_q = a[q, :]
                a[p, :] = c * row_p - s * phase * row_q
                a[q, :] = s * row_p + c * phase * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * ph_c * vq
                v[:, q] = s * vp + c * ph_c * vq
    return np.real(np.diag(a)).copy(), v, sweeps


# ---------------------------------------------------------------------------
# spin-phonon bottleneck integrator
#
# state: u = n/c (normalised population difference), p (band phonon occupation)
#   du/dt = a [1 - u (2p+1)] - W u
#   dp/dt = K a [1 - u (2p+1)] - (p - p_th) / tau
# with a = 1/T1^0 and K = c / (2 rho).

# Dormand-Prince 5(4)
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

# Rosenbrock 2(3), the ode23s pair
_D = 1.0 / (2.0 + math.sqrt(2.0))
_E32 = 6.0 + math.sqrt(2.0)

_STIFF_LIMIT = 3.0  # h * spectral radius near the DP5 stability boundary
_STIFF_COUNT = 15


def _rhs(u, p, a, K, inv_tau, p_th, W):
    g = a * (1.0 - u * (2.0 * p + 1.0))
    return g - W * u, K * g - (p - p_th) * inv_tau


def _jac(u, p, a, K, inv_tau, W):
    j11 = -a * (2.0 * p + 1.0) - W
    j12 = -2.0 * a * u
    j21 = -K * a * (2.0 * p + 1.0)
    j22 = -2.0 * K * a * u - inv_tau
    return j11, j12, j21, j22


def _spectral_radius(j11, j12, j21, j22):
    tr = j11 + j22
    det = j11 * j22 - j12 * j21
    disc = tr * tr - 4.0 * det
    if disc >= 0.0:
        r = math.sqrt(disc)
        return 0.5 * max(abs(tr + r), abs(tr - r))
    return math.sqrt(abs(det))


def _err_norm(e1, e2, u, p, un, pn, rtol, atol):
    s1 = atol + rtol * max(abs(u), abs(un))
    s2 = atol + rtol * max(abs(p), abs(pn))
    return max(abs(e1) / s1, abs(e2) / s2)


def integrate_bottleneck(u0, p0, t0, t_out, a, K, inv_tau, p_th, W,
                         rtol=1e-8, atol=1e-12, h0=0.0, max_steps=5_000_000):
    """Integrate the two-variable bottleneck equations from ``t0``.

    Returns ``(out, status, t_fail, stats)``. ``out[i]`` is ``(u, p)`` at
    ``t_out[i]``; ``stats`` is ``(accepted, rejected, t_stiff)`` where
    ``t_stiff`` is the time the solver switched to the Rosenbrock method
    (``nan`` if it never did).
    """
    t_out = np.asarray(t_out, dtype=float)
    nout = t_out.shape[0]
    out = np.empty((nout, 2))
    u, p, t = float(u0), float(p0), float(t0)
    accepted = rejected = 0
    t_stiff = math.nan
    if nout == 0:
        return out, OK, math.nan, (0, 0, t_stiff)
    t_end = t_out[nout - 1]
    k = 0
    while k < nout and t_out[k] <= t:
        out[k, 0] = u
        out[k, 1] = p
        k += 1
    if k == nout:
        return out, OK, math.nan, (0, 0, t_stiff)

    f1, f2 = _rhs(u, p, a, K, inv_tau, p_th, W)
    if h0 > 0.0:
        h = h0
    else:
        d0 = max(abs(u) / (atol + rtol * abs(u)), abs(p) / (atol + rtol * abs(p)))
        d1 = max(abs(f1) / (atol + rtol * abs(u)), abs(f2) / (atol + rtol * abs(p)))
        h = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
        j = _jac(u, p, a, K, inv_tau, W)
        rad = _spectral_radius(*j)
        if rad > 0.0:
            h = min(h, 1.0 / rad)
    h = min(h, t_end - t)
    stiff = False
    stiff_run = 0
    steps = 0

    while k < nout:
        steps += 1
        if steps > max_steps:
            return out, MAX_STEPS, t, (accepted, rejected, t_stiff)
        if h < 16.0 * _EPS * max(abs(t), 1e-300):
            return out, STEP_UNDERFLOW, t, (accepted, rejected, t_stiff)
        target = t_out[k]
        hit = False
        h_try = h
        if t + h_try >= target:
            h_try = target - t
            hit = True

        if not stiff:
            # Dormand-Prince step, FSAL k1 = (f1, f2)
            k11, k12 = f1, f2
            k21, k22 = _rhs(u + h_try * _A21 * k11, p + h_try * _A21 * k12, a, K, inv_tau, p_th, W)
            k31, k32 = _rhs(u + h_try * (_A31 * k11 + _A32 * k21),
                            p + h_try * (_A31 * k12 + _A32 * k22), a, K, inv_tau, p_th, W)
            k41, k42 = _rhs(u + h_try * (_A41 * k11 + _A42 * k21 + _A43 * k31),
                            p + h_try * (_A41 * k12 + _A42 * k22 + _A43 * k32),
                            a, K, inv_tau, p_th, W)
            k51, k52 = _rhs(u + h_try * (_A51 * k11 + _A52 * k21 + _A53 * k31 + _A54 * k41),
                            p + h_try * (_A51 * k12 + _A52 * k22 + _A53 * k32 + _A54 * k42),
                            a, K, inv_tau, p_th, W)
            k61, k62 = _rhs(u + h_try * (_A61 * k11 + _A62 * k21 + _A63 * k31 + _A64 * k41 + _A65 * k51),
                            p + h_try * (_A61 * k12 + _A62 * k22 + _A63 * k32 + _A64 * k42 + _A65 * k52),
                            a, K, inv_tau, p_th, W)
            un = u + h_try * (_B1 * k11 + _B3 * k31 + _B4 * k41 + _B5 * k51 + _B6 * k61)
            pn = p + h_try * (_B1 * k12 + _B3 * k32 + _B4 * k42 + _B5 * k52 + _B6 * k62)
            k71, k72 = _rhs(un, pn, a, K, inv_tau, p_th, W)
            e1 = h_try * (_E1 * k11 + _E3 * k31 + _E4 * k41 + _E5 * k51 + _E6 * k61 + _E7 * k71)
            e2 = h_try * (_E1 * k12 + _E3 * k32 + _E4 * k42 + _E5 * k52 + _E6 * k62 + _E7 * k72)
            err = _err_norm(e1, e2, u, p, un, pn, rtol, atol)
            if err <= 1.0:
                accepted += 1
                t = target if hit else t + h_try
                u, p, f1, f2 = un, pn, k71, k72
                fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
                rad = _spectral_radius(*_jac(u, p, a, K, inv_tau, W))
                if h_try * rad > _STIFF_LIMIT:
                    stiff_run += 1
                    if stiff_run >= _STIFF_COUNT:
                        stiff = True
                        t_stiff = t
                else:
                    stiff_run = 0
                if not hit or h_try * fac < h:
                    h = h_try * fac
            else:
                rejected += 1
                h = h_try * max(0.2, 0.9 * err ** -0.2)
                hit = False
        else:
            j11, j12, j21, j22 = _jac(u, p, a, K, inv_tau, W)
            hd = h_try * _D
            w11, w12, w21, w22 = 1.0 - hd * j11, -hd * j12, -hd * j21, 1.0 - hd * j22
            det = w11 * w22 - w12 * w21
            i11, i12, i21, i22 = w22 / det, -w12 / det, -w21 / det, w11 / det
            F01, F02 = f1, f2
            k11 = i11 * F01 + i12 * F02
            k12 = i21 * F01 + i22 * F02
            F11, F12 = _rhs(u + 0.5 * h_try * k11, p + 0.5 * h_try * k12, a, K, inv_tau, p_th, W)
            r1, r2 = F11 - k11, F12 - k12
            k21 = i11 * r1 + i12 * r2 + k11
            k22 = i21 * r1 + i22 * r2 + k12
            un = u + h_try * k21
            pn = p + h_try * k22
            F21, F22 = _rhs(un, pn, a, K, inv_tau, p_th, W)
            r1 = F21 - _E32 * (k21 - F11) - 2.0 * (k11 - F01)
            r2 = F22 - _E32 * (k22 - F12) - 2.0 * (k12 - F02)
            k31 = i11 * r1 + i12 * r2
            k32 = i21 * r1 + i22 * r2
            e1 = h_try / 6.0 * (k11 - 2.0 * k21 + k31)
            e2 = h_try / 6.0 * (k12 - 2.0 * k22 + k32)
            err = _err_norm(e1, e2, u, p, un, pn, rtol, atol)
            if err <= 1.0:
                accepted += 1
                t = target if hit else t + h_try
                u, p, f1, f2 = un, pn, F21, F22
                fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.8 * err ** (-1.0 / 3.0)))
                if not hit or h_try * fac < h:
                    h = h_try * fac
            else:
                rejected += 1
                h = h_try * max(0.2, 0.8 * err ** (-1.0 / 3.0))
                hit = False

        if hit:
            while k < nout and t_out[k] <= t:
                out[k, 0] = u
                out[k, 1] = p
                k += 1
    return out, OK, math.nan, (accepted, rejected, t_stiff)
