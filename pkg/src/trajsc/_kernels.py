"""Compiled inner loops: polyline resampling, 2D transform fits and ICP.

Group codes follow the linearized hierarchy:
0 Rigid, 1 RigidRef, 2 Sim, 3 SimRef, 4 SimAni, 5 Affine.

Transform fits return the sum of squared residuals on the given
correspondences, or -1.0 when the correspondences are degenerate.
"""
import math

import numpy as np
from numba import njit

RIGID, RIGID_REF, SIM, SIM_REF, SIM_ANI, AFFINE = 0, 1, 2, 3, 4, 5

ANGLE_GRID = 360
GOLDEN_TOL = 1e-6
MIN_AREA = 1e-6
MIN_SCALE = 1e-9

_GRID_THETA = np.arange(ANGLE_GRID) * (2.0 * np.pi / ANGLE_GRID)
_GRID_COS = np.cos(_GRID_THETA)
_GRID_SIN = np.sin(_GRID_THETA)
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@njit(cache=True)
def arc_length(P):
    total = 0.0
    for k in range(P.shape[0] - 1):
        dx = P[k + 1, 0] - P[k, 0]
        dy = P[k + 1, 1] - P[k, 1]
        total += math.sqrt(dx * dx + dy * dy)
    return total


@njit(cache=True)
def resample(P, n):
    """n points equally spaced in arc length along polyline P (m, 2)."""
    m = P.shape[0]
    cum = np.empty(m)
    cum[0] = 0.0
    for k in range(m - 1):
        dx = P[k + 1, 0] - P[k, 0]
        dy = P[k + 1, 1] - P[k, 1]
        cum[k + 1] = cum[k] + math.sqrt(dx * dx + dy * dy)
    total = cum[m - 1]
    out = np.empty((n, 2))
    out[0, 0] = P[0, 0]
    out[0, 1] = P[0, 1]
    out[n - 1, 0] = P[m - 1, 0]
    out[n - 1, 1] = P[m - 1, 1]
    k = 0
    step = total / (n - 1)
    for i in range(1, n - 1):
        s = step * i
        while k < m - 2 and cum[k + 1] < s:
            k += 1
        seg = cum[k + 1] - cum[k]
        u = (s - cum[k]) / seg if seg > 0.0 else 0.0
        out[i, 0] = P[k, 0] + u * (P[k + 1, 0] - P[k, 0])
        out[i, 1] = P[k, 1] + u * (P[k + 1, 1] - P[k, 1])
    return out


@njit(cache=True)
def apply(A, P, out):
    for k in range(P.shape[0]):
        x = P[k, 0]
        y = P[k, 1]
        out[k, 0] = A[0, 0] * x + A[0, 1] * y + A[0, 2]
        out[k, 1] = A[1, 0] * x + A[1, 1] * y + A[1, 2]


@njit(cache=True)
def invert(A, out):
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    a = A[1, 1] / det
    b = -A[0, 1] / det
    c = -A[1, 0] / det
    d = A[0, 0] / det
    out[0, 0] = a
    out[0, 1] = b
    out[1, 0] = c
    out[1, 1] = d
    out[0, 2] = -(a * A[0, 2] + b * A[1, 2])
    out[1, 2] = -(c * A[0, 2] + d * A[1, 2])


@njit(cache=True)
def sq_residual(src, dst, A):
    total = 0.0
    for k in range(src.shape[0]):
        x = src[k, 0]
        y = src[k, 1]
        dx = A[0, 0] * x + A[0, 1] * y + A[0, 2] - dst[k, 0]
        dy = A[1, 0] * x + A[1, 1] * y + A[1, 2] - dst[k, 1]
        total += dx * dx + dy * dy
    return total


@njit(cache=True)
def mean_distance(P, Q):
    total = 0.0
    for k in range(P.shape[0]):
        dx = P[k, 0] - Q[k, 0]
        dy = P[k, 1] - Q[k, 1]
        total += math.sqrt(dx * dx + dy * dy)
    return total / P.shape[0]


@njit(cache=True)
def triangle_area(P, i, j, k):
    return 0.5 * abs(
        (P[j, 0] - P[i, 0]) * (P[k, 1] - P[i, 1]) - (P[j, 1] - P[i, 1]) * (P[k, 0] - P[i, 0])
    )


@njit(cache=True)
def _moments(src, dst):
    """Centroids and centred second moments of a correspondence set."""
    k = src.shape[0]
    px = 0.0
    py = 0.0
    qx = 0.0
    qy = 0.0
    for i in range(k):
        px += src[i, 0]
        py += src[i, 1]
        qx += dst[i, 0]
        qy += dst[i, 1]
    px /= k
    py /= k
    qx /= k
    qy /= k
    m = np.zeros(9)
    # m: Sxx, Syy, Sxy (source), xX, xY, yX, yY (cross), Q2 (target), unused
    for i in range(k):
        ax = src[i, 0] - px
        ay = src[i, 1] - py
        bx = dst[i, 0] - qx
        by = dst[i, 1] - qy
        m[0] += ax * ax
        m[1] += ay * ay
        m[2] += ax * ay
        m[3] += ax * bx
        m[4] += ax * by
        m[5] += ay * bx
        m[6] += ay * by
        m[7] += bx * bx + by * by
    return px, py, qx, qy, m


@njit(cache=True)
def _set_translation(A, px, py, qx, qy):
    A[0, 2] = qx - (A[0, 0] * px + A[0, 1] * py)
    A[1, 2] = qy - (A[1, 0] * px + A[1, 1] * py)


@njit(cache=True)
def fit_similarity(src, dst, with_scale, allow_reflection, out):
    """Kabsch-Umeyama in closed 2D form; both det signs tried when allowed."""
    px, py, qx, qy, m = _moments(src, dst)
    spread = m[0] + m[1]
    if spread <= 1e-12:
        return -1.0
    best = -1.0
    cand = np.zeros((2, 3))
    for flip in range(2 if allow_reflection else 1):
        f = -1.0 if flip == 1 else 1.0
        # source reflected by diag(1, f) before rotation
        a = m[3] + f * m[6]
        b = m[4] - f * m[5]
        r = math.hypot(a, b)
        if r > 0.0:
            c = a / r
            s = b / r
        else:
            c = 1.0
            s = 0.0
        scale = 1.0
        if with_scale:
            scale = r / spread
            if scale <= MIN_SCALE:
                continue
        cand[0, 0] = scale * c
        cand[0, 1] = -scale * s * f
        cand[1, 0] = scale * s
        cand[1, 1] = scale * c * f
        _set_translation(cand, px, py, qx, qy)
        res = sq_residual(src, dst, cand)
        if best < 0.0 or res < best:
            best = res
            out[:, :] = cand
    return best


@njit(cache=True)
def fit_affine(src, dst, out):
    px, py, qx, qy, m = _moments(src, dst)
    sxx = m[0]
    syy = m[1]
    sxy = m[2]
    det = sxx * syy - sxy * sxy
    # equals (4/3) * triangle_area**2 for three points
    if det <= (4.0 / 3.0) * MIN_AREA * MIN_AREA:
        return -1.0
    ixx = syy / det
    iyy = sxx / det
    ixy = -sxy / det
    # L = C_qp @ inv(C_pp), C_qp[r, c] = sum q_r p_c
    out[0, 0] = m[3] * ixx + m[5] * ixy
    out[0, 1] = m[3] * ixy + m[5] * iyy
    out[1, 0] = m[4] * ixx + m[6] * ixy
    out[1, 1] = m[4] * ixy + m[6] * iyy
    if abs(out[0, 0] * out[1, 1] - out[0, 1] * out[1, 0]) <= 1e-9:
        return -1.0
    _set_translation(out, px, py, qx, qy)
    return sq_residual(src, dst, out)


@njit(cache=True)
def _gain_rs(c, s, m):
    # A = R(theta) @ diag(sx, sy): regress rotated-back target on source axes
    nx = c * m[3] + s * m[4]
    ny = c * m[6] - s * m[5]
    g = 0.0
    if m[0] > 1e-12:
        g += nx * nx / m[0]
    if m[1] > 1e-12:
        g += ny * ny / m[1]
    return g


@njit(cache=True)
def _gain_sr(c, s, m):
    # A = diag(sx, sy) @ R(theta): regress target axes on rotated source
    nx = c * m[3] - s * m[5]
    ny = s * m[4] + c * m[6]
    dx = c * c * m[0] - 2.0 * c * s * m[2] + s * s * m[1]
    dy = s * s * m[0] + 2.0 * c * s * m[2] + c * c * m[1]
    g = 0.0
    scale = m[0] + m[1]
    if dx > 1e-12 * scale:
        g += nx * nx / dx
    if dy > 1e-12 * scale:
        g += ny * ny / dy
    return g


@njit(cache=True)
def _cos_sin_near(i, delta):
    # cos/sin of grid angle i plus a small offset (|delta| <= one grid step)
    d2 = delta * delta
    cd = 1.0 - d2 / 2.0 * (1.0 - d2 / 12.0 * (1.0 - d2 / 30.0 * (1.0 - d2 / 56.0)))
    sd = delta * (1.0 - d2 / 6.0 * (1.0 - d2 / 20.0 * (1.0 - d2 / 42.0 * (1.0 - d2 / 72.0))))
    c = _GRID_COS[i] * cd - _GRID_SIN[i] * sd
    s = _GRID_SIN[i] * cd + _GRID_COS[i] * sd
    return c, s


@njit(cache=True)
def _gain(order, theta, m):
    c = math.cos(theta)
    s = math.sin(theta)
    if order == 0:
        return _gain_rs(c, s, m)
    return _gain_sr(c, s, m)


@njit(cache=True)
def _gain_near(order, i, delta, m):
    c, s = _cos_sin_near(i, delta)
    if order == 0:
        return _gain_rs(c, s, m)
    return _gain_sr(c, s, m)


@njit(cache=True)
def _best_angle(order, m):
    """Grid search over the angle, then golden-section refinement."""
    # the gain has period pi, so the second half of the grid repeats the first
    best_i = 0
    best_g = -1.0
    for i in range(ANGLE_GRID // 2):
        if order == 0:
            g = _gain_rs(_GRID_COS[i], _GRID_SIN[i], m)
        else:
            g = _gain_sr(_GRID_COS[i], _GRID_SIN[i], m)
        if g > best_g:
            best_g = g
            best_i = i
    # golden section on the offset from the best grid angle
    step = 2.0 * math.pi / ANGLE_GRID
    lo = -step
    hi = step
    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    g1 = _gain_near(order, best_i, x1, m)
    g2 = _gain_near(order, best_i, x2, m)
    while hi - lo > GOLDEN_TOL:
        if g1 > g2:
            hi = x2
            x2 = x1
            g2 = g1
            x1 = hi - _INV_PHI * (hi - lo)
            g1 = _gain_near(order, best_i, x1, m)
        else:
            lo = x1
            x1 = x2
            g1 = g2
            x2 = lo + _INV_PHI * (hi - lo)
            g2 = _gain_near(order, best_i, x2, m)
    delta = 0.5 * (lo + hi)
    if _gain_near(order, best_i, delta, m) < best_g:
        delta = 0.0
    return _GRID_THETA[best_i] + delta


@njit(cache=True)
def _angle_rs(m):
    # the R*S gain is a quadratic form in (cos, sin); its maximizer is the
    # principal eigenvector of that form
    a00 = 0.0
    a01 = 0.0
    a11 = 0.0
    if m[0] > 1e-12:
        a00 += m[3] * m[3] / m[0]
        a01 += m[3] * m[4] / m[0]
        a11 += m[4] * m[4] / m[0]
    if m[1] > 1e-12:
        a00 += m[6] * m[6] / m[1]
        a01 -= m[6] * m[5] / m[1]
        a11 += m[5] * m[5] / m[1]
    return 0.5 * math.atan2(2.0 * a01, a00 - a11)


@njit(cache=True)
def fit_anisotropic(src, dst, out):
    """Rotation plus axis scales, trying both R*S and S*R orders."""
    px, py, qx, qy, m = _moments(src, dst)
    if m[0] * m[1] - m[2] * m[2] <= (4.0 / 3.0) * MIN_AREA * MIN_AREA:
        return -1.0
    best = -1.0
    cand = np.zeros((2, 3))
    for order in range(2):
        theta = _angle_rs(m) if order == 0 else _best_angle(order, m)
        c = math.cos(theta)
        s = math.sin(theta)
        if order == 0:
            sx = (c * m[3] + s * m[4]) / m[0]
            sy = (c * m[6] - s * m[5]) / m[1]
            cand[0, 0] = c * sx
            cand[0, 1] = -s * sy
            cand[1, 0] = s * sx
            cand[1, 1] = c * sy
        else:
            dx = c * c * m[0] - 2.0 * c * s * m[2] + s * s * m[1]
            dy = s * s * m[0] + 2.0 * c * s * m[2] + c * c * m[1]
            if dx <= 1e-12 or dy <= 1e-12:
                continue
            sx = (c * m[3] - s * m[5]) / dx
            sy = (s * m[4] + c * m[6]) / dy
            cand[0, 0] = sx * c
            cand[0, 1] = -sx * s
            cand[1, 0] = sy * s
            cand[1, 1] = sy * c
        if abs(sx) <= MIN_SCALE or abs(sy) <= MIN_SCALE:
            continue
        _set_translation(cand, px, py, qx, qy)
        res = sq_residual(src, dst, cand)
        if best < 0.0 or res < best:
            best = res
            out[:, :] = cand
    return best


@njit(cache=True)
def estimate(src, dst, code, out):
    if code == RIGID:
        return fit_similarity(src, dst, False, False, out)
    if code == RIGID_REF:
        return fit_similarity(src, dst, False, True, out)
    if code == SIM:
        return fit_similarity(src, dst, True, False, out)
    if code == SIM_REF:
        return fit_similarity(src, dst, True, True, out)
    if code == SIM_ANI:
        return fit_anisotropic(src, dst, out)
    return fit_affine(src, dst, out)


@njit(cache=True, nogil=True)
def icp(R, T, code, draws, n_inner, eps, early_tau, A_best):
    """Best mean point distance aligning polyline R onto resampled T.

    ``draws`` holds pre-drawn index triples, shape (outer, attempts, 3);
    the first distinct, non-collinear triple of each row is used.
    Returns inf when every outer iteration had to be skipped.
    """
    n = T.shape[0]
    R0 = resample(R, n)
    cum = np.empty(R.shape[0])
    moved3 = np.empty((3, 2))
    Rt_sim = np.empty_like(R0)
    src = np.empty((3, 2))
    dst = np.empty((3, 2))
    A = np.zeros((2, 3))
    A_new = np.zeros((2, 3))
    Ainv = np.zeros((2, 3))
    d_min = np.inf
    A_best[:, :] = 0.0
    A_best[0, 0] = 1.0
    A_best[1, 1] = 1.0
    for i in range(draws.shape[0]):
        found = False
        a = 0
        b = 0
        c = 0
        for t in range(draws.shape[1]):
            a = draws[i, t, 0]
            b = draws[i, t, 1]
            c = draws[i, t, 2]
            if a == b or b == c or a == c:
                continue
            if triangle_area(R0, a, b, c) <= MIN_AREA or triangle_area(T, a, b, c) <= MIN_AREA:
                continue
            found = True
            break
        if not found:
            continue
        for r in range(2):
            dst[0, r] = T[a, r]
            dst[1, r] = T[b, r]
            dst[2, r] = T[c, r]
        for r in range(2):
            src[0, r] = R0[a, r]
            src[1, r] = R0[b, r]
            src[2, r] = R0[c, r]
        d_prev = np.inf
        d_avg = np.inf
        for j in range(n_inner):
            if estimate(src, dst, code, A_new) < 0.0:
                break
            A[:, :] = A_new
            if code <= SIM_REF:
                # similarities scale arc length uniformly, so resampling
                # commutes with A and the next pass would reproduce A
                apply(A, R0, Rt_sim)
                d_avg = mean_distance(Rt_sim, T)
                break
            # only the three indexed points of the back-mapped resampled
            # source feed the next estimate
            d_avg = warped_distance(A, R, T, cum, a, b, c, moved3)
            if abs(d_avg - d_prev) < eps:
                break
            d_prev = d_avg
            invert(A, Ainv)
            apply(Ainv, moved3, src)
        if d_avg < d_min:
            d_min = d_avg
            A_best[:, :] = A
        if d_avg < early_tau:
            break
    return d_min


@njit(cache=True)
def warped_distance(A, R, T, cum, a, b, c, src):
    """Mean distance between resample(A R) and T, in one pass.

    Equivalent to ``mean_distance(resample(apply(A, R)), T)`` without
    allocating; the resampled points at indices a, b, c go to ``src``.
    """
    m = R.shape[0]
    n = T.shape[0]
    a00 = A[0, 0]
    a01 = A[0, 1]
    a10 = A[1, 0]
    a11 = A[1, 1]
    # translation cancels in segment lengths
    cum[0] = 0.0
    for k in range(m - 1):
        ex = R[k + 1, 0] - R[k, 0]
        ey = R[k + 1, 1] - R[k, 1]
        dx = a00 * ex + a01 * ey
        dy = a10 * ex + a11 * ey
        cum[k + 1] = cum[k] + math.sqrt(dx * dx + dy * dy)
    step = cum[m - 1] / (n - 1)
    total = 0.0
    k = 0
    for i in range(n):
        if i == n - 1:
            px = R[m - 1, 0]
            py = R[m - 1, 1]
        elif i == 0:
            px = R[0, 0]
            py = R[0, 1]
        else:
            s = step * i
            while k < m - 2 and cum[k + 1] < s:
                k += 1
            seg = cum[k + 1] - cum[k]
            u = (s - cum[k]) / seg if seg > 0.0 else 0.0
            px = R[k, 0] + u * (R[k + 1, 0] - R[k, 0])
            py = R[k, 1] + u * (R[k + 1, 1] - R[k, 1])
        x = a00 * px + a01 * py + A[0, 2]
        y = a10 * px + a11 * py + A[1, 2]
        if i == a:
            src[0, 0] = x
            src[0, 1] = y
        if i == b:
            src[1, 0] = x
            src[1, 1] = y
        if i == c:
            src[2, 0] = x
            src[2, 1] = y
        dx = x - T[i, 0]
        dy = y - T[i, 1]
        total += math.sqrt(dx * dx + dy * dy)
    return total / n


@njit(cache=True)
def roll_closed(Q, k):
    """Cyclic vertex list Q restarted at vertex k and closed back onto it."""
    q = Q.shape[0]
    out = np.empty((q + 1, 2))
    for i in range(q + 1):
        j = (k + i) % q
        out[i, 0] = Q[j, 0]
        out[i, 1] = Q[j, 1]
    return out


@njit(cache=True, nogil=True)
def icp_closed(Q, T, code, draws, n_inner, eps, early_tau, step, radius, n_centers, A_best):
    """Start-vertex search over a closed source given as cyclic vertices Q.

    Coarse pass over every ``step``-th vertex, then exhaustive refinement
    within ``radius`` of each of the ``n_centers`` best coarse starts.
    Several centres matter for rotationally symmetric curves, whose
    equivalent starts need not fall on vertices.  Stops as soon as a start
    reaches ``early_tau``.  Returns (distance, start vertex).
    """
    q = Q.shape[0]
    done = np.zeros(q, dtype=np.bool_)
    A = np.zeros((2, 3))
    d_best = np.inf
    k_best = 0
    starts = np.arange(0, q, step)
    coarse = np.full(starts.shape[0], np.inf)
    for i in range(starts.shape[0]):
        k = starts[i]
        d = icp(roll_closed(Q, k), T, code, draws, n_inner, eps, early_tau, A)
        coarse[i] = d
        done[k] = True
        if d < d_best:
            d_best = d
            k_best = k
            A_best[:, :] = A
        if d_best < early_tau:
            return d_best, k_best
    order = np.argsort(coarse)
    for c in range(min(n_centers, order.shape[0])):
        center = starts[order[c]]
        for delta in range(-radius, radius + 1):
            k = (center + delta) % q
            if done[k]:
                continue
            done[k] = True
            d = icp(roll_closed(Q, k), T, code, draws, n_inner, eps, early_tau, A)
            if d < d_best:
                d_best = d
                k_best = k
                A_best[:, :] = A
            if d_best < early_tau:
                return d_best, k_best
    return d_best, k_best
    center = k_best
    for delta in range(-radius, radius + 1):
        k = (center + delta) % q
        if done[k]:
            continue
        done[k] = True
        d = icp(roll_closed(Q, k), T, code, draws, n_inner, eps, early_tau, A)
        if d < d_best:
            d_best = d
            k_best = k
            A_best[:, :] = A
        if d_best < early_tau:
            break
    return d_best, k_best
