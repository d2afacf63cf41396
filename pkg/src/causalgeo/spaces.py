"""Concrete causal-space backends.

* :class:`MinkowskiSpace` -- flat (1+n)-dimensional space with coordinate
  points ``(t, x1, ..., xn)``.
* :class:`CausalSetSpace` -- a finite weighted DAG; the causal relation is
  reachability, time separation is the longest (maximum-weight) directed
  chain, computed exactly over rationals.
* :class:`PuncturedMinkowski` -- Minkowski space with finitely many points
  removed; a stock negative example for exact-midpoint existence.
* :func:`sprinkle_causet` -- Poisson sprinkles of a causal diamond.

Causal-set vertex times and edge weights are stored as :class:`~fractions.Fraction`
so discrete checks are exact; continuum backends work in floats with a
1e-9 default tolerance.
"""

from __future__ import annotations

import csv
import heapq
import json
import math
from fractions import Fraction

from .core import AntiLipschitzWitness, Space, TimeFunctionBundle
from .errors import CycleDetected, EmptySprinkle, NotComplete


class MinkowskiSpace(Space):
    """Flat space R^{1,n}; points are tuples (t, x1, ..., xn).

    ``window`` bounds the region used by the seeded samplers only; the
    universe itself is unbounded.  Complete: the limit operation returns the
    final element of a certified Cauchy sequence.
    """

    is_discrete = False
    is_minkowski_like = True

    def __init__(self, spatial_dimension: int = 1, window=((-2.0, 2.0), 2.0)):
        if spatial_dimension < 1:
            raise ValueError("spatial dimension must be >= 1")
        self.spatial_dimension = spatial_dimension
        self.window = ((float(window[0][0]), float(window[0][1])), float(window[1]))
        self.name = f"minkowski(1+{spatial_dimension})"

    def _delta(self, x, y):
        dt = y[0] - x[0]
        dx = math.dist(x[1:], y[1:])
        return dt, dx

    def causal_le(self, x, y):
        dt, dx = self._delta(x, y)
        return dt >= dx

    def chronological(self, x, y):
        dt, dx = self._delta(x, y)
        return dt > dx

    def tau(self, x, y):
        dt, dx = self._delta(x, y)
        if dt < dx:
            return 0.0
        return math.sqrt(max(dt * dt - dx * dx, 0.0))

    def background_distance(self, x, y):
        return math.dist(x, y)

    def interpolate(self, x, y, s):
        return tuple(a + s * (b - a) for a, b in zip(x, y))

    def limit_point(self, points):
        if not points:
            raise NotComplete("empty sequence has no limit")
        return points[-1]

    def sample_points(self, rng, count):
        (t_lo, t_hi), radius = self.window
        out = []
        for _ in range(count):
            t = rng.uniform(t_lo, t_hi)
            xs = [rng.uniform(-radius, radius) for _ in range(self.spatial_dimension)]
            out.append((t, *xs))
        return out

    def _future_point(self, rng, p, max_ratio, head_fraction=1.0):
        (t_lo, t_hi), _ = self.window
        head = (t_hi - p[0]) * head_fraction
        dt = head * rng.uniform(0.05, 1.0)
        u = max_ratio * rng.uniform()
        direction = rng.normal(size=self.spatial_dimension)
        norm = math.hypot(*direction)
        if norm == 0.0:
            direction = [1.0] + [0.0] * (self.spatial_dimension - 1)
            norm = 1.0
        dx = [u * dt * d / norm for d in direction]
        return (p[0] + dt, *(a + b for a, b in zip(p[1:], dx)))

    def sample_chronological_pairs(self, rng, count):
        (t_lo, t_hi), _ = self.window
        out = []
        while len(out) < count:
            p = self.sample_points(rng, 1)[0]
            if t_hi - p[0] < 0.02 * (t_hi - t_lo):
                continue
            out.append((p, self._future_point(rng, p, max_ratio=0.95)))
        return out

    def sample_causal_pairs(self, rng, count):
        (t_lo, t_hi), _ = self.window
        out = []
        while len(out) < count:
            p = self.sample_points(rng, 1)[0]
            if t_hi - p[0] < 0.02 * (t_hi - t_lo):
                continue
            out.append((p, self._future_point(rng, p, max_ratio=1.0)))
        return out

    def sample_causal_chains(self, rng, count):
        (t_lo, t_hi), _ = self.window
        out = []
        while len(out) < count:
            x = self.sample_points(rng, 1)[0]
            if t_hi - x[0] < 0.05 * (t_hi - t_lo):
                continue
            y = self._future_point(rng, x, max_ratio=1.0, head_fraction=0.5)
            z = self._future_point(rng, y, max_ratio=1.0, head_fraction=0.5)
            out.append((x, y, z))
        return out


class PuncturedMinkowski(MinkowskiSpace):
    """Minkowski space with a finite set of points removed from the universe.

    Relations and tau are inherited by restriction.  Not complete: a Cauchy
    sequence may converge to a removed point, in which case the limit
    operation refuses.
    """

    def __init__(self, spatial_dimension: int = 1, removed=(), window=((-2.0, 2.0), 2.0)):
        super().__init__(spatial_dimension, window)
        self.removed = frozenset(tuple(float(c) for c in p) for p in removed)
        self.name = f"punctured-{self.name}"

    def contains(self, x):
        return tuple(x) not in self.removed

    def _require(self, *pts):
        for p in pts:
            if not self.contains(p):
                raise ValueError(f"{p} has been removed from the universe")

    def causal_le(self, x, y):
        self._require(x, y)
        return super().causal_le(x, y)

    def chronological(self, x, y):
        self._require(x, y)
        return super().chronological(x, y)

    def tau(self, x, y):
        self._require(x, y)
        return super().tau(x, y)

    def limit_point(self, points):
        limit = super().limit_point(points)
        if not self.contains(limit):
            raise NotComplete(f"limit {limit} escapes the punctured universe")
        return limit

    def sample_points(self, rng, count):
        out = []
        while len(out) < count:
            pts = super().sample_points(rng, count - len(out))
            out.extend(p for p in pts if self.contains(p))
        return out


def _as_fraction(value):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    return Fraction(float(value))


class CausalSetSpace(Space):
    """A finite causal set given by a weighted DAG.

    * ``<=`` is the reflexive-transitive closure of the edge list.
    * ``<<`` holds when some connecting path has positive total weight.
    * ``tau`` is the maximum total weight over directed paths (longest
      chain), which satisfies the reverse triangle inequality by
      concatenation.

    Edges are transitively reduced at load; reachability is precomputed as
    one bitmask per vertex.  Vertex times and weights are exact rationals.
    The only post-construction state is a per-source memo of longest-path
    tables, a cache of pure query results.
    """

    is_discrete = True

    def __init__(self, vertices, edges, reduce: bool = True, name: str = "causet"):
        self.name = name
        t_map = {}
        order = []
        for vid, t in vertices:
            vid = str(vid)
            if vid in t_map:
                raise ValueError(f"duplicate vertex id {vid!r}")
            t_map[vid] = _as_fraction(t)
            order.append(vid)
        self._ids = tuple(sorted(order))
        self._index = {v: i for i, v in enumerate(self._ids)}
        self._t = t_map

        seen = set()
        edge_list = []
        for src, dst, w in edges:
            src, dst = str(src), str(dst)
            if src not in t_map or dst not in t_map:
                raise ValueError(f"edge ({src}, {dst}) references unknown vertex")
            if src == dst:
                raise CycleDetected([src, src])
            w = _as_fraction(w)
            if w < 0:
                raise ValueError(f"negative weight on edge ({src}, {dst})")
            if (src, dst) in seen:
                raise ValueError(f"duplicate edge ({src}, {dst})")
            seen.add((src, dst))
            edge_list.append((src, dst, w))

        self._topo = self._topological_order(edge_list)
        for src, dst, _ in edge_list:
            if self._t[dst] <= self._t[src]:
                raise ValueError(
                    f"vertex time must strictly increase along edge ({src}, {dst})")
        self._reach = self._reachability(edge_list)
        if reduce:
            edge_list = self._transitive_reduction(edge_list)
        self.edges = tuple(sorted(edge_list))
        self._out = {v: [] for v in self._ids}
        self._in = {v: [] for v in self._ids}
        for src, dst, w in self.edges:
            self._out[src].append((dst, w))
            self._in[dst].append((src, w))
        for v in self._ids:
            self._out[v] = tuple(sorted(self._out[v]))
            self._in[v] = tuple(sorted(self._in[v]))
        self._longest_cache = {}
        self.sufficiently_causally_connected = self._check_connectedness()

    # -- construction helpers -------------------------------------------------

    def _topological_order(self, edge_list):
        indeg = {v: 0 for v in self._ids}
        out = {v: [] for v in self._ids}
        for src, dst, _ in edge_list:
            indeg[dst] += 1
            out[src].append(dst)
        ready = sorted(v for v in self._ids if indeg[v] == 0)
        order = []
        while ready:
            v = heapq.heappop(ready)
            order.append(v)
            for w in out[v]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    heapq.heappush(ready, w)
        if len(order) != len(self._ids):
            cycle = [v for v in self._ids if indeg[v] > 0]
            raise CycleDetected(cycle)
        return tuple(order)

    def _reachability(self, edge_list):
        out = {v: [] for v in self._ids}
        for src, dst, _ in edge_list:
            out[src].append(dst)
        reach = {}
        for v in reversed(self._topo):
            mask = 1 << self._index[v]
            for w in out[v]:
                mask |= reach[w]
            reach[v] = mask
        return reach

    def _transitive_reduction(self, edge_list):
        # An edge (u, v) is redundant when another out-neighbour of u
        # already reaches v.  Note this drops the direct weight in favour of
        # chains through interior vertices (standard Hasse-diagram practice).
        out = {v: [] for v in self._ids}
        for src, dst, _ in edge_list:
            out[src].append(dst)
        kept = []
        for src, dst, w in edge_list:
            bit = 1 << self._index[dst]
            redundant = any(
                mid != dst and (self._reach[mid] & bit)
                for mid in out[src]
            )
            if not redundant:
                kept.append((src, dst, w))
        return kept

    def _check_connectedness(self):
        if not self._ids:
            return False
        seen = {self._ids[0]}
        stack = [self._ids[0]]
        while stack:
            v = stack.pop()
            for w, _ in self._out[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
            for w, _ in self._in[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != len(self._ids):
            return False
        return all(
            any(w > 0 for _, w in self._out[v]) or any(w > 0 for _, w in self._in[v])
            for v in self._ids
        ) or len(self._ids) == 1

    # -- causal structure ------------------------------------------------------

    @property
    def vertices(self):
        return self._ids

    def points(self):
        return self._ids

    def contains(self, x):
        try:
            return x in self._t
        except TypeError:
            return False

    def time_of(self, v):
        return self._t[v]

    def causal_le(self, x, y):
        if x == y:
            return x in self._t
        return bool(self._reach[x] & (1 << self._index[y]))

    def _longest_from(self, src):
        cached = self._longest_cache.get(src)
        if cached is not None:
            return cached
        dist = {src: Fraction(0)}
        started = False
        for v in self._topo:
            if v == src:
                started = True
            if not started or v not in dist:
                continue
            base = dist[v]
            for w, weight in self._out[v]:
                cand = base + weight
                if w not in dist or cand > dist[w]:
                    dist[w] = cand
        self._longest_cache[src] = dist
        return dist

    def tau(self, x, y):
        if x == y:
            return Fraction(0)
        dist = self._longest_from(x)
        return dist.get(y, Fraction(0))

    def chronological(self, x, y):
        return x != y and self.causal_le(x, y) and self.tau(x, y) > 0

    def limit_point(self, points):
        if not points:
            raise NotComplete("empty sequence has no limit")
        if len(points) == 1 or points[-1] == points[-2]:
            return points[-1]
        raise NotComplete("dyadic refinement did not stabilize on the finite backend")

    def sample_points(self, rng, count):
        idx = rng.integers(0, len(self._ids), size=count)
        return [self._ids[i] for i in idx]

    def _related_pairs(self, predicate):
        return [(x, y) for x in self._ids for y in self._ids
                if x != y and predicate(x, y)]

    def sample_causal_pairs(self, rng, count):
        pairs = self._related_pairs(self.causal_le)
        return _sample_from(pairs, rng, count)

    def sample_chronological_pairs(self, rng, count):
        pairs = self._related_pairs(self.chronological)
        return _sample_from(pairs, rng, count)

    def sample_causal_chains(self, rng, count):
        chains = [(x, y, z)
                  for x in self._ids for y in self._ids for z in self._ids
                  if self.causal_le(x, y) and self.causal_le(y, z)]
        return _sample_from(chains, rng, count)

    def out_edges(self, v):
        return self._out[v]

    def in_edges(self, v):
        return self._in[v]

    def directed_path(self, x, y):
        """Some directed edge path x -> y (smallest-id greedy), or None."""
        if x == y:
            return [x]
        if not self.causal_le(x, y):
            return None
        path = [x]
        v = x
        while v != y:
            step = next(w for w, _ in self._out[v]
                        if w == y or self.causal_le(w, y))
            path.append(step)
            v = step
        return path

    def time_graph_distance(self, time, x, y, with_path=False):
        """Dijkstra over the symmetrized edge set with weights |time(b) - time(a)|.

        Returns the exact distance (and optionally one optimal vertex path),
        or None when no piecewise causal walk joins x and y.
        """
        if x not in self._t or y not in self._t:
            raise ValueError("unknown vertex")
        dist = {x: Fraction(0)}
        prev = {}
        heap = [(Fraction(0), x)]
        settled = set()
        while heap:
            d, v = heapq.heappop(heap)
            if v in settled:
                continue
            settled.add(v)
            if v == y:
                break
            neighbours = [w for w, _ in self._out[v]] + [w for w, _ in self._in[v]]
            for w in neighbours:
                step = abs(_as_fraction(time(w)) - _as_fraction(time(v)))
                cand = d + step
                if w not in dist or cand < dist[w]:
                    dist[w] = cand
                    prev[w] = v
                    heapq.heappush(heap, (cand, w))
        if y not in settled:
            return None
        if not with_path:
            return dist[y]
        path = [y]
        while path[-1] != x:
            path.append(prev[path[-1]])
        path.reverse()
        return dist[y], path

    def edge_orientation(self, a, b):
        """'future' if a -> b is an edge, 'past' if b -> a is, else None."""
        if any(w == b for w, _ in self._out[a]):
            return "future"
        if any(w == a for w, _ in self._out[b]):
            return "past"
        return None


def _sample_from(items, rng, count):
    if not items:
        return []
    if len(items) <= count:
        return list(items)
    idx = rng.choice(len(items), size=count, replace=False)
    return [items[i] for i in sorted(idx)]


# -- time-function bundles ----------------------------------------------------


def _causal_dominating_metric(x, y):
    # max(|dt|, ||dx||) equals |dt| on causal pairs, so it is dominated by
    # coordinate-time increments there (with equality).
    return max(abs(y[0] - x[0]), math.dist(x[1:], y[1:]))


def canonical_time_bundle(space: MinkowskiSpace) -> TimeFunctionBundle:
    """Coordinate time t with a single global anti-Lipschitz witness."""
    witness = AntiLipschitzWitness(
        label="global",
        contains=lambda p: True,
        metric=_causal_dominating_metric,
    )
    return TimeFunctionBundle(space, lambda p: p[0], [witness], name="t",
                              canonical_minkowski=True)


def cubic_time_bundle(space: MinkowskiSpace, half_width: float = 0.5) -> TimeFunctionBundle:
    """Coordinate time cubed: flattens near t = 0 and loses anti-Lipschitz there.

    The witness neighbourhood is the strip |t| <= half_width around the
    flattening.
    """
    witness = AntiLipschitzWitness(
        label=f"strip(|t|<={half_width})",
        contains=lambda p: abs(p[0]) <= half_width,
        metric=_causal_dominating_metric,
    )
    return TimeFunctionBundle(space, lambda p: p[0] ** 3, [witness], name="t^3")


def causet_time_bundle(space: CausalSetSpace) -> TimeFunctionBundle:
    """The stored vertex times, witnessed by the |dT| graph metric on the whole set."""
    def metric(x, y):
        d = space.time_graph_distance(space.time_of, x, y)
        return d if d is not None else math.inf

    witness = AntiLipschitzWitness(label="whole-set", contains=lambda v: True, metric=metric)
    return TimeFunctionBundle(space, space.time_of, [witness], name="T")


# -- sprinkling ----------------------------------------------------------------


def sprinkle_causet(diamond_corners, density: float, seed: int,
                    include_corners: bool = True) -> CausalSetSpace:
    """Poisson sprinkle of the causal diamond between two corners of R^{1,1}.

    Point count is Poisson(density * area); points are uniform in the
    diamond (sampled exactly in null coordinates).  Edges are the Minkowski
    causal relation, transitively reduced at load, weighted by the Minkowski
    time separation of their endpoints; vertex time is the t coordinate.
    """
    if density <= 0:
        raise ValueError("density must be positive")
    p, q = (tuple(map(float, c)) for c in diamond_corners)
    if len(p) != 2 or len(q) != 2:
        raise ValueError("sprinkling is implemented for R^{1,1} corners")
    mink = MinkowskiSpace(1)
    if not mink.chronological(p, q):
        raise ValueError("diamond corners must be chronologically related")

    # Null coordinates turn the diamond into an axis-aligned rectangle.
    u_lo, u_hi = p[0] - p[1], q[0] - q[1]
    v_lo, v_hi = p[0] + p[1], q[0] + q[1]
    area = (u_hi - u_lo) * (v_hi - v_lo) / 2.0

    import numpy as np

    rng = np.random.default_rng(seed)
    n = int(rng.poisson(density * area))
    us = rng.uniform(u_lo, u_hi, size=n)
    vs = rng.uniform(v_lo, v_hi, size=n)
    pts = [((u + v) / 2.0, (v - u) / 2.0) for u, v in zip(us, vs)]
    if include_corners:
        pts.extend([p, q])
    pts = sorted(set(pts))
    if not pts:
        raise EmptySprinkle("sprinkle drew no points")

    width = max(3, len(str(len(pts) - 1)))
    ids = [f"v{i:0{width}d}" for i in range(len(pts))]
    vertices = [(vid, Fraction(pt[0])) for vid, pt in zip(ids, pts)]
    edges = []
    for i, a in enumerate(pts):
        for j, b in enumerate(pts):
            if i != j and mink.causal_le(a, b) and a != b:
                edges.append((ids[i], ids[j], Fraction(mink.tau(a, b))))
    space = CausalSetSpace(vertices, edges, name=f"sprinkle(d={density},s={seed})")
    space.coordinates = {vid: pt for vid, pt in zip(ids, pts)}
    return space


# -- persistence ----------------------------------------------------------------


def save_causet_json(space: CausalSetSpace, path):
    payload = {
        "vertices": [{"id": v, "T": float(space.time_of(v))} for v in space.vertices],
        "edges": [{"src": s, "dst": d, "tau": float(w)} for s, d, w in space.edges],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_causet_json(path) -> CausalSetSpace:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    vertices = [(v["id"], v["T"]) for v in payload["vertices"]]
    edges = [(e["src"], e["dst"], e["tau"]) for e in payload["edges"]]
    return CausalSetSpace(vertices, edges)


def save_causet_csv(space: CausalSetSpace, vertices_path, edges_path):
    with open(vertices_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "T"])
        for v in space.vertices:
            writer.writerow([v, float(space.time_of(v))])
    with open(edges_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["src", "dst", "tau"])
        for s, d, w in space.edges:
            writer.writerow([s, d, float(w)])


def load_causet_csv(vertices_path, edges_path) -> CausalSetSpace:
    with open(vertices_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["id", "T"]:
            raise ValueError('vertex file header must be exactly "id,T"')
        vertices = [(row[0], float(row[1])) for row in reader if row]
    with open(edges_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["src", "dst", "tau"]:
            raise ValueError('edge file header must be exactly "src,dst,tau"')
        edges = [(row[0], row[1], float(row[2])) for row in reader if row]
    return CausalSetSpace(vertices, edges)
