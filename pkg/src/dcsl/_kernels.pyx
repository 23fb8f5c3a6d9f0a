# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled inner loop of the exponential Euler-Maruyama integrator."""

from libc.math cimport fabs


def em_propagate(double[::1] x, double[::1] p,
                 const double[::1] nx, const double[::1] npn,
                 double a00, double a01, double a10, double a11,
                 double c0, double c1, double x_lim, double p_lim):
    """Advance x[0], p[0] through len(nx) affine steps in place.

    Returns the index of the first state outside the limits (or non-finite),
    and -1 if every step stayed bounded.
    """
    cdef Py_ssize_t i, n = nx.shape[0]
    cdef double xi = x[0]
    cdef double pi = p[0]
    cdef double xn
    cdef Py_ssize_t bad = -1
    with nogil:
        for i in range(n):
            xn = a00 * xi + a01 * pi + c0 + nx[i]
            pi = a10 * xi + a11 * pi + c1 + npn[i]
            xi = xn
            x[i + 1] = xi
            p[i + 1] = pi
            if not (fabs(xi) <= x_lim and fabs(pi) <= p_lim):
                bad = i + 1
                break
    return bad
