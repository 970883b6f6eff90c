"""Adaptive and fixed-panel quadrature for kernel power integrals.

The integrands here are of the form |sum_i c_i g(x + s_i)|**beta: smooth
between kink points of the kernel, with fractional-power behaviour at the
kinks and at interior sign changes.  Two rules are provided:

* :func:`adaptive_integral` -- Gauss-Kronrod 7/15 with recursive bisection
  and caller-supplied breakpoints; the reference used by oracles and all
  one-off evaluations.
* :func:`build_panel_rule` -- a fixed composite Gauss-Legendre rule with
  geometric grading toward singular endpoints and a geometric tail; kernel
  values on its nodes feed the batched hot path in :mod:`stablema.accel`.
"""

import numpy as np

from .errors import NumericError

# Gauss-Kronrod 7/15 pair on [-1, 1]; the odd-index Kronrod nodes are the
# Gauss-7 nodes.
_XK = np.array([
    -0.991455371120812639206854697526329,
    -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926,
    -0.741531185599394439863864773280788,
    -0.586087235467691130294144838258730,
    -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245,
    0.0,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
])
# Gauss-7 weights aligned with the odd Kronrod node positions 1,3,...,13.
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
])
_GAUSS_IDX = np.arange(1, 14, 2)


def _gk15(f, a, b):
    """Kronrod-15 value, Gauss-7 value on [a, b] from one batch of evals."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    y = f(mid + half * _XK)
    k15 = half * float(_WK @ y)
    g7 = half * float(_WG @ y[_GAUSS_IDX])
    return k15, g7, y


def adaptive_integral(f, a, b, breakpoints=(), abs_tol=1e-9, max_depth=60):
    """Integrate a vectorized ``f`` over [a, b] by adaptive GK15 bisection.

    ``breakpoints`` inside (a, b) become initial segment boundaries so kinks
    sit on segment edges.  A segment is accepted once the Kronrod/Gauss
    discrepancy is below ``abs_tol`` (per subinterval).  Raises
    :class:`NumericError` on non-finite values or unconverged segments.
    """
    if b <= a:
        return 0.0
    pts = [a] + sorted(p for p in set(breakpoints) if a < p < b) + [b]
    stack = [(pts[i], pts[i + 1], 0) for i in range(len(pts) - 1)]
    total = 0.0
    while stack:
        lo, hi, depth = stack.pop()
        k15, g7, y = _gk15(f, lo, hi)
        if not np.all(np.isfinite(y)):
            raise NumericError(f"non-finite integrand on [{lo}, {hi}]")
        if abs(k15 - g7) <= abs_tol or hi - lo < 1e-14 * max(1.0, abs(lo)):
            total += k15
        elif depth >= max_depth:
            raise NumericError(
                f"adaptive quadrature stalled on [{lo}, {hi}] "
                f"(discrepancy {abs(k15 - g7):.2e})"
            )
        else:
            mid = 0.5 * (lo + hi)
            stack.append((lo, mid, depth + 1))
            stack.append((mid, hi, depth + 1))
    return total


# ---------------------------------------------------------------------------
# fixed panel rules

_LEGENDRE_CACHE = {}

# Relative offsets grading a unit segment toward a singular endpoint.
_GRADE = (1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1)


def _leggauss(n):
    if n not in _LEGENDRE_CACHE:
        _LEGENDRE_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _LEGENDRE_CACHE[n]


def _subdivide(a, b, singular_left, singular_right, grade, mids):
    ts = [0.0]
    if singular_left:
        ts += list(grade)
    if singular_left or singular_right:
        # finer mid-panels: |.|**beta kinks may sit anywhere inside
        ts += list(mids)
    else:
        ts += [0.5]
    if singular_right:
        ts += [1.0 - g for g in reversed(grade)]
    ts.append(1.0)
    ts = sorted(set(ts))
    return [(a + (b - a) * ts[i], a + (b - a) * ts[i + 1])
            for i in range(len(ts) - 1)]


def build_panel_rule(lo, hi, kinks=(), singular=(), pts=10, tail_start=None,
                     tail_ratio=2.0, tail_max_width=None, grade=_GRADE,
                     mids=(0.2, 0.35, 0.5, 0.65, 0.8)):
    """Nodes and weights integrating over [lo, hi] with kink-aware panels.

    ``kinks`` are forced panel boundaries; those also listed in ``singular``
    get geometrically graded sub-panels on both sides (fractional-power
    integrands).  Beyond ``tail_start`` (default: last kink + 1) panels grow
    geometrically, suited to decaying tails.  Returns ``(x, w)`` arrays.
    """
    if hi <= lo:
        return np.empty(0), np.empty(0)
    kinks = sorted({float(k) for k in kinks if lo < k < hi})
    singular = {float(s) for s in singular}
    if tail_start is None:
        tail_start = (kinks[-1] if kinks else lo) + 1.0
    tail_start = min(max(tail_start, lo), hi)

    edges = [lo] + [k for k in kinks if k < tail_start] + [tail_start]
    edges = sorted(set(edges))
    segs = []
    for a, b in zip(edges[:-1], edges[1:]):
        # split long inter-kink gaps into ~unit chunks
        n_chunks = max(1, int(np.ceil(b - a)))
        sub_edges = np.linspace(a, b, n_chunks + 1)
        for i, (sa, sb) in enumerate(zip(sub_edges[:-1], sub_edges[1:])):
            sing_l = i == 0 and (sa in singular or _near_any(sa, singular))
            sing_r = (i == n_chunks - 1
                      and (sb in singular or _near_any(sb, singular)))
            segs += _subdivide(sa, sb, sing_l, sing_r, grade, mids)

    width = 1.0
    pos = tail_start
    while pos < hi:
        if tail_max_width is not None:
            width = min(width, tail_max_width)
        nxt = min(pos + width, hi)
        segs.append((pos, nxt))
        pos = nxt
        width *= tail_ratio

    xg, wg = _leggauss(pts)
    xs, ws = [], []
    for a, b in segs:
        half = 0.5 * (b - a)
        xs.append(0.5 * (a + b) + half * xg)
        ws.append(half * wg)
    return np.concatenate(xs), np.concatenate(ws)


def _near_any(x, points, tol=1e-12):
    return any(abs(x - p) <= tol * max(1.0, abs(p)) for p in points)


def geometric_tail_breaks(anchor, hi, ratio=2.0):
    """Split points doubling outward from ``anchor``; an adaptive rule
    seeded with these cannot silently skip mass localized far left of a
    huge truncation bound."""
    out = []
    width = 1.0
    pos = anchor
    while pos < hi:
        pos = pos + width
        width *= ratio
        if pos < hi:
            out.append(pos)
    return out
