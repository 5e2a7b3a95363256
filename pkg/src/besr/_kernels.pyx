# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical kernels: Hermitian Jacobi eigensolver and the
stiff-aware bottleneck integrator. ``_pykernels`` holds the reference
Python versions; both must produce the same numbers."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, copysign, pow, NAN

cnp.import_array()

cdef extern from "complex.h":
    double cabs(double complex)
    double complex conj(double complex)
    double creal(double complex)

DEF OK = 0
DEF STEP_UNDERFLOW = 1
DEF MAX_STEPS = 2

cdef double _EPS = 2.220446049250313e-16


def jacobi_eigh(a_in, double tol=1e-15, int max_sweeps=100):
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] arr = np.array(a_in, dtype=np.complex128, copy=True, order="C")
    cdef Py_ssize_t n = arr.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] varr = np.eye(n, dtype=np.complex128)
    cdef double complex[:, ::1] a = arr
    cdef double complex[:, ::1] v = varr
    cdef Py_ssize_t p, q, k
    cdef int sweeps = 0, sw
    cdef double scale = 0.0, off, diag, mag, app, aqq, theta, t, c, s
    cdef double complex apq, phase, ph_c, xp, xq

    for p in range(n):
        for q in range(n):
            scale += creal(a[p, q] * conj(a[p, q]))
    scale = sqrt(scale)
    if scale == 0.0:
        scale = 1.0

    for sw in range(1, max_sweeps + 1):
        sweeps = sw
        off = 0.0
        for p in range(n):
            for q in range(n):
                if p != q:
                    off += creal(a[p, q] * conj(a[p, q]))
        off = sqrt(off)
        if off <= tol * scale:
            sweeps = sw - 1
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = cabs(apq)
                if mag <= 1e-300 or mag < 1e-3 * tol * scale / n:
                    continue
                phase = apq / mag
                ph_c = conj(phase)
                app = creal(a[p, p])
                aqq = creal(a[q, q])
                theta = (aqq - app) / (2.0 * mag)
                t = copysign(1.0, theta) / (fabs(theta) + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    xp = a[k, p]
                    xq = a[k, q]
                    a[k, p] = c * xp - s * ph_c * xq
                    a[k, q] = s * xp + c * ph_c * xq
                for k in range(n):
                    xp = a[p, k]
                    xq = a[q, k]
                    a[p, k] = c * xp - s * phase * xq
                    a[q, k] = s * xp + c * phase * xq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = creal(a[p, p])
                a[q, q] = creal(a[q, q])
                for k in range(n):
                    xp = v[k, p]
                    xq = v[k, q]
                    v[k, p] = c * xp - s * ph_c * xq
                    v[k, q] = s * xp + c * ph_c * xq

    w = np.empty(n)
    for p in range(n):
        w[p] = creal(a[p, p])
    return w, varr, sweeps


# Dormand-Prince 5(4)
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784, B6 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200
cdef double E6 = 22.0 / 525, E7 = -1.0 / 40

# Rosenbrock 2(3) (ode23s)
cdef double RD = 1.0 / (2.0 + sqrt(2.0))
cdef double RE32 = 6.0 + sqrt(2.0)

cdef double STIFF_LIMIT = 3.0
cdef int STIFF_COUNT = 15


cdef struct Params:
    double a
    double K
    double inv_tau
    double p_th
    double W


cdef inline void rhs(double u, double p, Params* P, double* du, double* dp) nogil:
    cdef double g = P.a * (1.0 - u * (2.0 * p + 1.0))
    du[0] = g - P.W * u
    dp[0] = P.K * g - (p - P.p_th) * P.inv_tau


cdef inline void jac(double u, double p, Params* P, double* j) nogil:
    j[0] = -P.a * (2.0 * p + 1.0) - P.W
    j[1] = -2.0 * P.a * u
    j[2] = -P.K * P.a * (2.0 * p + 1.0)
    j[3] = -2.0 * P.K * P.a * u - P.inv_tau


cdef inline double spectral_radius(double* j) nogil:
    cdef double tr = j[0] + j[3]
    cdef double det = j[0] * j[3] - j[1] * j[2]
    cdef double disc = tr * tr - 4.0 * det
    cdef double r
    if disc >= 0.0:
        r = sqrt(disc)
        return 0.5 * max(fabs(tr + r), fabs(tr - r))
    return sqrt(fabs(det))


cdef inline double err_norm(double e1, double e2, double u, double p, double un, double pn,
                            double rtol, double atol) nogil:
    cdef double s1 = atol + rtol * max(fabs(u), fabs(un))
    cdef double s2 = atol + rtol * max(fabs(p), fabs(pn))
    return max(fabs(e1) / s1, fabs(e2) / s2)


def integrate_bottleneck(double u0, double p0, double t0, t_out_in, double a, double K,
                         double inv_tau, double p_th, double W, double rtol=1e-8,
                         double atol=1e-12, double h0=0.0, long max_steps=5000000):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] t_arr = np.ascontiguousarray(t_out_in, dtype=np.float64)
    cdef double[::1] t_out = t_arr
    cdef Py_ssize_t nout = t_arr.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_arr = np.empty((nout, 2))
    cdef double[:, ::1] out = out_arr
    cdef Params P
    P.a = a
    P.K = K
    P.inv_tau = inv_tau
    P.p_th = p_th
    P.W = W
    cdef double u = u0, p = p0, t = t0
    cdef long accepted = 0, rejected = 0, steps = 0
    cdef double t_stiff = NAN
    cdef Py_ssize_t k = 0
    cdef double f1, f2, h, d0, d1, rad, t_end, target, h_try, err, fac
    cdef double k11, k12, k21, k22, k31, k32, k41, k42, k51, k52, k61, k62, k71, k72
    cdef double un, pn, e1, e2, hd, w11, w12, w21, w22, det, i11, i12, i21, i22
    cdef double F01, F02, F11, F12, F21, F22, r1, r2
    cdef double j[4]
    cdef bint hit, stiff = False
    cdef int stiff_run = 0
    cdef int status = OK
    cdef double t_fail = NAN

    if nout == 0:
        return out_arr, OK, NAN, (0, 0, t_stiff)
    t_end = t_out[nout - 1]
    while k < nout and t_out[k] <= t:
        out[k, 0] = u
        out[k, 1] = p
        k += 1
    if k == nout:
        return out_arr, OK, NAN, (0, 0, t_stiff)

    rhs(u, p, &P, &f1, &f2)
    if h0 > 0.0:
        h = h0
    else:
        d0 = max(fabs(u) / (atol + rtol * fabs(u)), fabs(p) / (atol + rtol * fabs(p)))
        d1 = max(fabs(f1) / (atol + rtol * fabs(u)), fabs(f2) / (atol + rtol * fabs(p)))
        if d0 < 1e-5 or d1 < 1e-5:
            h = 1e-6
        else:
            h = 0.01 * d0 / d1
        jac(u, p, &P, j)
        rad = spectral_radius(j)
        if rad > 0.0:
            h = min(h, 1.0 / rad)
    h = min(h, t_end - t)

    with nogil:
        while k < nout:
            steps += 1
            if steps > max_steps:
                status = MAX_STEPS
                t_fail = t
                break
            if h < 16.0 * _EPS * max(fabs(t), 1e-300):
                status = STEP_UNDERFLOW
                t_fail = t
                break
            target = t_out[k]
            hit = False
            h_try = h
            if t + h_try >= target:
                h_try = target - t
                hit = True

            if not stiff:
                k11 = f1
                k12 = f2
                rhs(u + h_try * A21 * k11, p + h_try * A21 * k12, &P, &k21, &k22)
                rhs(u + h_try * (A31 * k11 + A32 * k21),
                    p + h_try * (A31 * k12 + A32 * k22), &P, &k31, &k32)
                rhs(u + h_try * (A41 * k11 + A42 * k21 + A43 * k31),
                    p + h_try * (A41 * k12 + A42 * k22 + A43 * k32), &P, &k41, &k42)
                rhs(u + h_try * (A51 * k11 + A52 * k21 + A53 * k31 + A54 * k41),
                    p + h_try * (A51 * k12 + A52 * k22 + A53 * k32 + A54 * k42), &P, &k51, &k52)
                rhs(u + h_try * (A61 * k11 + A62 * k21 + A63 * k31 + A64 * k41 + A65 * k51),
                    p + h_try * (A61 * k12 + A62 * k22 + A63 * k32 + A64 * k42 + A65 * k52),
                    &P, &k61, &k62)
                un = u + h_try * (B1 * k11 + B3 * k31 + B4 * k41 + B5 * k51 + B6 * k61)
                pn = p + h_try * (B1 * k12 + B3 * k32 + B4 * k42 + B5 * k52 + B6 * k62)
                rhs(un, pn, &P, &k71, &k72)
                e1 = h_try * (E1 * k11 + E3 * k31 + E4 * k41 + E5 * k51 + E6 * k61 + E7 * k71)
                e2 = h_try * (E1 * k12 + E3 * k32 + E4 * k42 + E5 * k52 + E6 * k62 + E7 * k72)
                err = err_norm(e1, e2, u, p, un, pn, rtol, atol)
                if err <= 1.0:
                    accepted += 1
                    if hit:
                        t = target
                    else:
                        t = t + h_try
                    u = un
                    p = pn
                    f1 = k71
                    f2 = k72
                    if err == 0.0:
                        fac = 5.0
                    else:
                        fac = min(5.0, max(0.2, 0.9 * pow(err, -0.2)))
                    jac(u, p, &P, j)
                    rad = spectral_radius(j)
                    if h_try * rad > STIFF_LIMIT:
                        stiff_run += 1
                        if stiff_run >= STIFF_COUNT:
                            stiff = True
                            t_stiff = t
                    else:
                        stiff_run = 0
                    if not hit or h_try * fac < h:
                        h = h_try * fac
                else:
                    rejected += 1
                    h = h_try * max(0.2, 0.9 * pow(err, -0.2))
                    hit = False
            else:
                jac(u, p, &P, j)
                hd = h_try * RD
                w11 = 1.0 - hd * j[0]
                w12 = -hd * j[1]
                w21 = -hd * j[2]
                w22 = 1.0 - hd * j[3]
                det = w11 * w22 - w12 * w21
                i11 = w22 / det
                i12 = -w12 / det
                i21 = -w21 / det
                i22 = w11 / det
                F01 = f1
                F02 = f2
                k11 = i11 * F01 + i12 * F02
                k12 = i21 * F01 + i22 * F02
                rhs(u + 0.5 * h_try * k11, p + 0.5 * h_try * k12, &P, &F11, &F12)
                r1 = F11 - k11
                r2 = F12 - k12
                k21 = i11 * r1 + i12 * r2 + k11
                k22 = i21 * r1 + i22 * r2 + k12
                un = u + h_try * k21
                pn = p + h_try * k22
                rhs(un, pn, &P, &F21, &F22)
                r1 = F21 - RE32 * (k21 - F11) - 2.0 * (k11 - F01)
                r2 = F22 - RE32 * (k22 - F12) - 2.0 * (k12 - F02)
                k31 = i11 * r1 + i12 * r2
                k32 = i21 * r1 + i22 * r2
                e1 = h_try / 6.0 * (k11 - 2.0 * k21 + k31)
                e2 = h_try / 6.0 * (k12 - 2.0 * k22 + k32)
                err = err_norm(e1, e2, u, p, un, pn, rtol, atol)
                if err <= 1.0:
                    accepted += 1
                    if hit:
                        t = target
                    else:
                        t = t + h_try
                    u = un
                    p = pn
                    f1 = F21
                    f2 = F22
                    if err == 0.0:
                        fac = 5.0
                    else:
                        fac = min(5.0, max(0.2, 0.8 * pow(err, -1.0 / 3.0)))
                    if not hit or h_try * fac < h:
                        h = h_try * fac
                else:
                    rejected += 1
                    h = h_try * max(0.2, 0.8 * pow(err, -1.0 / 3.0))
                    hit = False

            if hit:
                while k < nout and t_out[k] <= t:
                    out[k, 0] = u
                    out[k, 1] = p
                    k += 1

    return out_arr, status, t_fail, (accepted, rejected, t_stiff)
