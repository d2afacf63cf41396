"""Tau-midpoints: predicates, search, lens/strip geometry, compatibility.

A point y is a tau-midpoint of a chronological pair p << q when
``tau(p,y) = tau(y,q) = tau(p,q)/2``, and an eps-tau-midpoint when both
halves hold strictly within eps.  The eps-midpoint set ("lens") is the
intersection of two one-sided superlevel sets of tau; the "strip" for a
compatibility constant c collects the points whose time-function value
lies between the two convex combinations ``(1-c)T(p)+cT(q)`` and
``cT(p)+(1-c)T(q)``.

Midpoint search is deterministic: on finite backends an id-ordered
enumeration, on flat backends a damped Newton solve of the two hyperbola
equalities started from the affine midpoint, followed by a fixed offset
ladder and a raster fallback for the approximate case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .core import (Certificate, DEFAULT_SEED, FAIL, PASS, PiecewiseCausalCurve,
                   Space, TimeFunctionBundle, make_rng, register_replay,
                   resolve_tol)
from .errors import (CurveTooShort, DegenerateStrip, MidpointBoundsViolated,
                     NotARealizer, NotChronological, UnsupportedBackend)


@dataclass(frozen=True)
class MidpointQuery:
    """Search parameters for one midpoint request.

    ``epsilon`` is an absolute tolerance in time units (0 requests an exact
    midpoint); ``epsilon_hat`` is the dimensionless alternative, resolved as
    ``tau(p,q) * epsilon_hat``.  At most one of the two may be positive.
    """

    p: object
    q: object
    epsilon: float = 0.0
    c: float = 0.5
    epsilon_hat: float = 0.0

    def __post_init__(self):
        if self.epsilon < 0 or self.epsilon_hat < 0:
            raise ValueError("tolerances must be nonnegative")
        if self.epsilon > 0 and self.epsilon_hat > 0:
            raise ValueError("give either an absolute or a relative tolerance, not both")
        if not 0 < self.c <= 0.5:
            raise ValueError("compatibility constant must lie in (0, 1/2]")

    def effective_epsilon(self, tau_pq):
        if self.epsilon_hat > 0:
            return float(tau_pq) * self.epsilon_hat
        return self.epsilon


def is_eps_tau_midpoint(space: Space, p, q, y, epsilon: float, tol=None) -> bool:
    """Both half-separation inequalities, strict for epsilon > 0.

    For epsilon = 0 the equalities are relaxed to the backend tolerance
    (exact on discrete backends).
    """
    tol = resolve_tol(space, tol)
    half = space.tau(p, q) / 2
    left = abs(space.tau(p, y) - half)
    right = abs(space.tau(y, q) - half)
    if epsilon == 0:
        return left <= tol and right <= tol
    return left < epsilon and right < epsilon


class LensStrip:
    """Membership predicates (any backend) and boundary curves (R^{1,1}).

    The lens is the eps-tau-midpoint set of the pair; the strip is the
    horizontal band of admissible time-function values, of width
    ``(1-2c) * (T(q) - T(p))``.
    """

    def __init__(self, space, bundle, p, q, epsilon, c, tol=None):
        if not space.chronological(p, q):
            raise NotChronological(f"{p} and {q} are not chronologically related")
        if not 0 < c <= 0.5:
            raise ValueError("compatibility constant must lie in (0, 1/2]")
        self.space = space
        self.bundle = bundle
        self.p = p
        self.q = q
        self.epsilon = float(epsilon)
        self.c = c
        self.tol = resolve_tol(space, tol)
        self.tau_pq = space.tau(p, q)
        self.half = self.tau_pq / 2
        tp, tq = bundle.time(p), bundle.time(q)
        self.strip_levels = ((1 - c) * tp + c * tq, c * tp + (1 - c) * tq)
        self.strip_width = (1 - 2 * c) * (tq - tp)

    def in_lens(self, y) -> bool:
        if self.epsilon == 0:
            return is_eps_tau_midpoint(self.space, self.p, self.q, y, 0.0, self.tol)
        floor = self.half - self.epsilon
        return self.space.tau(self.p, y) > floor and self.space.tau(y, self.q) > floor

    def in_strip(self, y) -> bool:
        lo, hi = self.strip_levels
        t = self.bundle.time(y)
        return lo - self.tol <= t <= hi + self.tol

    def boundary_polylines(self, samples: int = 200):
        """Sampled boundary curves for plotting: two hyperbola arcs.

        Only available on R^{1,1}; for epsilon = 0 both arcs collapse to the
        exact midpoint.
        """
        if not (self.space.is_minkowski_like and len(self.p) == 2):
            raise UnsupportedBackend("boundary curves are only drawn on R^{1,1}")
        if self.epsilon == 0:
            m = _exact_flat_midpoint(self.space, self.p, self.q)
            return [("lens_upper", [m]), ("lens_lower", [m])]
        radius = self.half - self.epsilon
        if radius <= 0:
            raise ValueError("epsilon >= tau/2 leaves no hyperbola boundary to draw")
        upper = _hyperbola_arc(self.space, self.p, self.q, radius, samples, from_past=True)
        lower = _hyperbola_arc(self.space, self.p, self.q, radius, samples, from_past=False)
        return [("lens_upper", upper), ("lens_lower", lower)]


def _hyperbola_arc(space, p, q, radius, samples, from_past):
    """One branch of tau(center, .) = radius, clipped to the other condition.

    ``from_past=True`` draws the future branch centered at p (clipped to
    tau(., q) >= radius); otherwise the past branch centered at q.
    """
    if from_past:
        center, other = p, q
        def at(theta):
            return (center[0] + radius * math.cosh(theta),
                    center[1] + radius * math.sinh(theta))
        def slack(y):
            dt = other[0] - y[0]
            dx = abs(other[1] - y[1])
            return (dt * dt - dx * dx if dt >= 0 else -(dx * dx + dt * dt)) - radius * radius
    else:
        center, other = q, p
        def at(theta):
            return (center[0] - radius * math.cosh(theta),
                    center[1] - radius * math.sinh(theta))
        def slack(y):
            dt = y[0] - other[0]
            dx = abs(y[1] - other[1])
            return (dt * dt - dx * dx if dt >= 0 else -(dx * dx + dt * dt)) - radius * radius

    def crossing(direction):
        lo, hi = 0.0, 0.5
        while slack(at(direction * hi)) > 0:
            hi *= 2.0
            if hi > 64.0:
                raise RuntimeError("hyperbola arc limit not bracketed")
        for _ in range(80):
            mid = (lo + hi) / 2.0
            if slack(at(direction * mid)) > 0:
                lo = mid
            else:
                hi = mid
        return direction * lo

    if slack(at(0.0)) < 0:
        return []
    # Odd sample count keeps theta = 0 in the polyline: that is the
    # time-extremal point of the arc, which containment tests must see.
    if samples % 2 == 0:
        samples += 1
    lo, hi = crossing(-1.0), crossing(+1.0)
    return [at(lo + (hi - lo) * i / (samples - 1)) for i in range(samples)]


def lens_strip_geometry(space: Space, bundle: TimeFunctionBundle, p, q,
                        epsilon: float, c: float, tol=None) -> LensStrip:
    return LensStrip(space, bundle, p, q, epsilon, c, tol)


# -- search -------------------------------------------------------------------


def _exact_flat_midpoint(space, p, q, tol: float = 1e-12):
    """Damped Newton on the two squared hyperbola equalities.

    Works in the 2-plane spanned by the time axis and the spatial direction
    p -> q; starts from the affine midpoint (the unique exact solution on a
    flat backend, so convergence is immediate in exact arithmetic) and falls
    back to a coarse grid refinement when damping stalls.
    """
    tau_pq = space.tau(p, q)
    a2 = (tau_pq / 2) ** 2
    tp, tq = p[0], q[0]
    dxv = [b - a_ for a_, b in zip(p[1:], q[1:])]
    span = math.hypot(*dxv)
    unit = tuple(d / span for d in dxv) if span > 0 else (1.0,) + (0.0,) * (len(dxv) - 1)

    def embed(t, s):
        return (t, *(a_ + s * u for a_, u in zip(p[1:], unit)))

    def residual(t, s):
        f1 = (t - tp) ** 2 - s ** 2 - a2
        f2 = (tq - t) ** 2 - (span - s) ** 2 - a2
        return f1, f2

    scale = max(1.0, a2)
    t, s = (tp + tq) / 2.0, span / 2.0
    f1, f2 = residual(t, s)
    norm = abs(f1) + abs(f2)
    for _ in range(60):
        if norm <= tol * scale:
            return embed(t, s)
        j11, j12 = 2 * (t - tp), -2 * s
        j21, j22 = -2 * (tq - t), 2 * (span - s)
        det = j11 * j22 - j12 * j21
        if det == 0:
            break
        dt = (f1 * j22 - f2 * j12) / det
        ds = (j11 * f2 - j21 * f1) / det
        lam = 1.0
        for _ in range(10):
            t2, s2 = t - lam * dt, s - lam * ds
            g1, g2 = residual(t2, s2)
            if abs(g1) + abs(g2) < norm:
                t, s, f1, f2, norm = t2, s2, g1, g2, abs(g1) + abs(g2)
                break
            lam /= 2.0
        else:
            break
    if norm <= tol * scale:
        return embed(t, s)

    # Grid + refinement fallback.
    lo_t, hi_t, lo_s, hi_s = tp, tq, -span - tau_pq, span + tau_pq
    best = (norm, t, s)
    for _ in range(4):
        ts = [lo_t + (hi_t - lo_t) * i / 40 for i in range(41)]
        ss = [lo_s + (hi_s - lo_s) * i / 40 for i in range(41)]
        for tc in ts:
            for sc in ss:
                g1, g2 = residual(tc, sc)
                n = abs(g1) + abs(g2)
                if n < best[0]:
                    best = (n, tc, sc)
        _, t, s = best
        wt, ws = (hi_t - lo_t) / 10, (hi_s - lo_s) / 10
        lo_t, hi_t, lo_s, hi_s = t - wt, t + wt, s - ws, s + ws
    return embed(best[1], best[2])


def _strip_fraction(bundle, p, q, y):
    """Position of T(y) inside [T(p), T(q)], as an exact fraction of the gap."""
    tp, tq, ty = bundle.time(p), bundle.time(q), bundle.time(y)
    gap = tq - tp
    if gap <= 0:
        return None
    return (ty - tp) / gap


def _midpoint_search(space, bundle, p, q, eps, c, tol):
    """Deterministic feasible-point search; ``c=None`` drops the strip filter.

    Selection rule: minimize |T(y) - (T(p)+T(q))/2|, ties broken by smallest
    vertex id (discrete) or lexicographically smallest coordinates (raster
    fallback on flat backends).
    """
    t_center = (bundle.time(p) + bundle.time(q)) / 2

    def in_strip(y):
        if c is None:
            return True
        u = _strip_fraction(bundle, p, q, y)
        if u is None:
            return False
        slack = 0 if space.is_discrete else tol
        return c - slack <= u <= 1 - c + slack

    def feasible(y):
        return (space.contains(y)
                and is_eps_tau_midpoint(space, p, q, y, eps, tol)
                and in_strip(y))

    if space.is_discrete:
        cands = [y for y in space.points() if feasible(y)]
        if not cands:
            return None
        return min(cands, key=lambda y: (abs(bundle.time(y) - t_center), y))

    tau_pq = space.tau(p, q)
    exact = _exact_flat_midpoint(space, p, q)
    if eps == 0:
        # The exact solution is unique on flat backends; reject it when it
        # collapses onto a removed point (up to a rounding guard).
        guard = max(tol, 1e-12)
        removed = getattr(space, "removed", frozenset())
        near_puncture = any(max(abs(e - r) for e, r in zip(exact, rp)) <= guard
                            for rp in removed)
        if near_puncture or not feasible(exact):
            return None
        return exact

    if feasible(exact):
        return exact

    dxv = [b - a_ for a_, b in zip(p[1:], q[1:])]
    span = math.hypot(*dxv)
    unit = tuple(d / span for d in dxv) if span > 0 else (1.0,) + (0.0,) * (len(dxv) - 1)
    orth = unit

    def offset(dt, ds):
        return (exact[0] + dt, *(e + ds * u for e, u in zip(exact[1:], orth)))

    sigma = min(eps, float(tau_pq) / 8)
    for k in range(-10, 4):
        r = sigma * (2.0 ** k)
        for cand in (offset(0.0, -r), offset(0.0, r), offset(-r, 0.0), offset(r, 0.0),
                     offset(-r, -r), offset(-r, r), offset(r, -r), offset(r, r)):
            if feasible(cand):
                return cand

    # Raster fallback over the lens bounding region, centered on the exact
    # solution, preferring time-centered then lexicographically small points.
    half = float(tau_pq) / 2
    best = None
    for _ in range(2):
        grid = []
        for i in range(41):
            for j in range(41):
                cand = offset(-half / 2 + half * i / 40, -half + 2 * half * j / 40)
                if feasible(cand):
                    grid.append(cand)
        if grid:
            cand = min(grid, key=lambda y: (abs(bundle.time(y) - t_center), y))
            best = cand if best is None else min(
                (best, cand), key=lambda y: (abs(bundle.time(y) - t_center), y))
        half /= 4
    return best


def find_midpoint(space: Space, bundle: TimeFunctionBundle, query: MidpointQuery,
                  tol=None):
    """A lens point that also lies in the strip for ``query.c``, or None.

    None is a definitive answer on discrete backends and a search failure on
    flat ones.
    """
    p, q = query.p, query.q
    if not space.chronological(p, q):
        raise NotChronological(f"{p} and {q} are not chronologically related")
    tol = resolve_tol(space, tol)
    eps = query.effective_epsilon(space.tau(p, q))
    return _midpoint_search(space, bundle, p, q, eps, query.c, tol)


def _best_midpoint(space, bundle, p, q, eps, tol):
    """Strip-unconstrained search plus the best admissible strip constant.

    The search minimizes |T(y) - center|, which maximizes min(u, 1-u) over
    feasible candidates, so the returned constant is the largest c whose
    strip still contains a lens point.
    """
    y = _midpoint_search(space, bundle, p, q, eps, None, tol)
    if y is None:
        return None
    u = _strip_fraction(bundle, p, q, y)
    if u is None:
        return y, 0
    best_c = min(u, 1 - u)
    cap = Fraction(1, 2) if isinstance(best_c, Fraction) else 0.5
    return y, min(best_c, cap)


def certify_compatibility(space: Space, bundle: TimeFunctionBundle, c: float,
                          epsilon_hat: float, sample_budget: int = 200,
                          seed: int = DEFAULT_SEED, tol=None) -> Certificate:
    """For sampled chronological pairs, certify some (tau*eps_hat)-midpoint
    lies in the strip for c; record the best achievable constant per pair.

    Pairs whose lens is empty witness a failure of the midpoint-existence
    hypothesis, not of compatibility; they are counted separately and do not
    flip the verdict.
    """
    if not 0 < c <= 0.5:
        raise ValueError("compatibility constant must lie in (0, 1/2]")
    tol = resolve_tol(space, tol)
    pairs = space.sample_chronological_pairs(make_rng(seed), sample_budget)
    slack = 0 if space.is_discrete else tol
    violations = []
    best_values = []
    without_midpoint = 0
    for a, b in pairs:
        eps = float(space.tau(a, b)) * epsilon_hat
        found = _best_midpoint(space, bundle, a, b, eps, tol)
        if found is None:
            without_midpoint += 1
            continue
        y, best_c = found
        best_values.append(best_c)
        if best_c < c - slack:
            violations.append((a, b, best_c, y))
    verdict = PASS if not violations else FAIL
    witness = None if not violations else sorted(violations, key=lambda w: tuple(map(str, w)))[0]
    data = {
        "pairs_checked": len(pairs) - without_midpoint,
        "pairs_without_midpoint": without_midpoint,
        "best_c_min": min(best_values) if best_values else None,
        "best_c_values": best_values,
        "epsilon_hat": epsilon_hat,
        "c": c,
    }
    return Certificate("compatibility", verdict, float(tol), len(pairs), seed, witness, data)


@register_replay("compatibility")
def _replay_compatibility(space, bundle, cert):
    a, b, _, _ = cert.witness
    eps = float(space.tau(a, b)) * cert.data["epsilon_hat"]
    tol = cert.tolerance if not space.is_discrete else 0
    found = _best_midpoint(space, bundle, a, b, eps, tol)
    if found is None:
        return True
    slack = 0 if space.is_discrete else cert.tolerance
    return found[1] < cert.data["c"] - slack


def lens_in_strip_epsilon(space: Space, bundle: TimeFunctionBundle, p, q, c: float,
                          boundary_samples: int = 400, rejection_samples: int = 10_000,
                          seed: int = DEFAULT_SEED) -> float:
    """An epsilon > 0 whose lens is contained in the strip for c.

    Found by bisection on epsilon with containment tested on a dense
    boundary sampling, then re-verified by rejection sampling of the lens
    interior.  Raises DegenerateStrip at c = 1/2 (containment then holds
    only in the exact-midpoint limit).
    """
    if not (space.is_minkowski_like and len(p) == 2):
        raise UnsupportedBackend("lens containment search runs on R^{1,1}")
    if not space.chronological(p, q):
        raise NotChronological(f"{p} and {q} are not chronologically related")
    if c >= 0.5:
        raise DegenerateStrip("c = 1/2 leaves a zero-width strip")
    if c <= 0:
        raise ValueError("compatibility constant must be positive")

    half = float(space.tau(p, q)) / 2

    def contained(eps):
        lens = LensStrip(space, bundle, p, q, eps, c, tol=0.0)
        for _, pts in lens.boundary_polylines(boundary_samples):
            if not all(lens.in_strip(y) for y in pts):
                return False
        return True

    lo = half * 1e-6
    shrink = 0
    while not contained(lo):
        lo /= 4.0
        shrink += 1
        if shrink > 20:
            raise RuntimeError("no contained epsilon found near zero")
    hi = half * 0.98
    if contained(hi):
        eps_star = hi
    else:
        for _ in range(60):
            mid = (lo + hi) / 2.0
            if contained(mid):
                lo = mid
            else:
                hi = mid
        eps_star = lo

    rng = make_rng(seed)
    for _ in range(25):
        if _rejection_verify(space, bundle, p, q, eps_star, c, rejection_samples, rng):
            return eps_star
        eps_star *= 0.97
    raise RuntimeError("rejection verification kept failing; lens not contained")


def _rejection_verify(space, bundle, p, q, eps, c, samples, rng):
    lens = LensStrip(space, bundle, p, q, eps, c, tol=0.0)
    polys = lens.boundary_polylines(160)
    pts = [y for _, poly in polys for y in poly]
    ts = [y[0] for y in pts] + [p[0], q[0]]
    xs = [y[1] for y in pts] + [p[1], q[1]]
    t_lo, t_hi = min(ts) - 0.05, max(ts) + 0.05
    x_lo, x_hi = min(xs) - 0.05, max(xs) + 0.05
    kept = 0
    attempts = 0
    while kept < samples and attempts < 400 * samples:
        attempts += 1
        y = (rng.uniform(t_lo, t_hi), rng.uniform(x_lo, x_hi))
        if not lens.in_lens(y):
            continue
        kept += 1
        if not lens.in_strip(y):
            return False
    return kept == samples


# -- midpoints from curves ------------------------------------------------------


def _half_point(space, curve):
    """The point where the running tau-length reaches half the total.

    Continuum backends: bisection on the curve parameter (the running
    length is monotone and piecewise linear).  Discrete backends: the joint
    whose cumulative weight is closest to half, earliest on ties.
    """
    cum = curve.cumulative_tau()
    total = cum[-1]
    half = total / 2
    if space.is_discrete:
        best = min(range(len(cum)), key=lambda i: (abs(cum[i] - half), i))
        return curve.points[best]

    bps = curve.breakpoints

    def running(tval):
        for i in range(curve.segment_count):
            if tval <= bps[i + 1] or i == curve.segment_count - 1:
                frac = (tval - bps[i]) / (bps[i + 1] - bps[i])
                frac = min(max(frac, 0.0), 1.0)
                return i, frac, cum[i] + frac * (cum[i + 1] - cum[i])
        raise AssertionError

    lo, hi = bps[0], bps[-1]
    for _ in range(100):
        mid = (lo + hi) / 2.0
        _, _, value = running(mid)
        if value < half:
            lo = mid
        else:
            hi = mid
    i, frac, _ = running((lo + hi) / 2.0)
    return space.interpolate(curve.points[i], curve.points[i + 1], frac)


def midpoint_from_realizer(space: Space, curve: PiecewiseCausalCurve, tol=None):
    """Bisect the running tau-length of a distance realizer to its half point."""
    tol = resolve_tol(space, tol)
    length = curve.tau_length()
    endpoints_tau = space.tau(curve.points[0], curve.points[-1])
    gap = abs(length - endpoints_tau)
    if gap > tol * (1 + abs(float(endpoints_tau))):
        raise NotARealizer(
            f"curve tau-length {float(length)} differs from tau {float(endpoints_tau)}")
    return _half_point(space, curve)


def approximate_midpoint_from_curve(space: Space, p, q, curve: PiecewiseCausalCurve,
                                    epsilon: float, tol=None):
    """Half point of a near-realizer; asserts both eps-midpoint inequalities."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if curve.points[0] != p or curve.points[-1] != q:
        raise ValueError("curve endpoints do not match the requested pair")
    tol = resolve_tol(space, tol)
    length = curve.tau_length()
    if length <= space.tau(p, q) - epsilon:
        raise CurveTooShort(
            f"tau-length {float(length)} <= tau - epsilon; no admissible half point")
    y = _half_point(space, curve)
    if not is_eps_tau_midpoint(space, p, q, y, epsilon, tol):
        raise MidpointBoundsViolated(
            f"half point {y} misses the eps-midpoint inequalities at eps={epsilon}")
    return y
