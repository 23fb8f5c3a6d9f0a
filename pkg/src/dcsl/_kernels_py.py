"""Pure-Python twin of the compiled kernels (same operation order, same results)."""

from __future__ import annotations


def em_propagate(x, p, nx, npn, a00, a01, a10, a11, c0, c1, x_lim, p_lim) -> int:
    xi = float(x[0])
    pi = float(p[0])
    nxl = nx.tolist()
    npl = npn.tolist()
    xs = [0.0] * len(nxl)
    ps = [0.0] * len(nxl)
    bad = -1
    for i in range(len(nxl)):
        xn = a00 * xi + a01 * pi + c0 + nxl[i]
        pi = a10 * xi + a11 * pi + c1 + npl[i]
        xi = xn
        xs[i] = xi
        ps[i] = pi
        if not (abs(xi) <= x_lim and abs(pi) <= p_lim):
            bad = i + 1
            break
    stop = len(nxl) if bad < 0 else bad
    x[1 : stop + 1] = xs[:stop]
    p[1 : stop + 1] = ps[:stop]
    return bad
