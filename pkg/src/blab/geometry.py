"""Disk geometry induced by tau: adapted disks, coverings, tau-distance,
horodisks and nontangential regions."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree
from scipy.special import roots_legendre

from .errors import ConfigurationError, DomainError, InapplicableError, ResolutionError
from .weights import WeightSpec, eval_tau, m_tau, tau_gap


def _check_delta(w, delta, upper=None):
    upper = m_tau(w) if upper is None else upper
    if not 0 < delta < upper:
        raise DomainError(f"delta must lie in (0, {upper:.6g}), got {delta}")


@dataclass(frozen=True)
class AdaptedDisk:
    """Euclidean disk D(delta tau(center))."""

    w: WeightSpec
    center: complex
    delta: float

    def __post_init__(self):
        _check_delta(self.w, self.delta)
        if not abs(self.center) < 1:
            raise DomainError("center must lie in the open unit disk")

    @property
    def radius(self):
        return self.delta * eval_tau(self.w, abs(self.center))

    @property
    def area(self):
        """Normalized area (dA = dx dy / pi)."""
        return self.radius ** 2

    def contains(self, z):
        return np.abs(np.asarray(z) - self.center) < self.radius

    def boundary(self, n=256):
        return self.center + self.radius * np.exp(2j * np.pi * np.arange(n) / n)

    def sample(self, n, rng):
        rr = self.radius * np.sqrt(rng.uniform(0, 1, n))
        return self.center + rr * np.exp(2j * np.pi * rng.uniform(0, 1, n))


def comparability_check(w: WeightSpec, a, delta, samples=1000, seed=0):
    """(min, max) of tau(z)/tau(a) over samples of D(delta tau(a))."""
    disk = AdaptedDisk(w, complex(a), float(delta))
    rng = np.random.default_rng(seed)
    z = np.concatenate([disk.sample(samples, rng), disk.boundary(64)])
    ratio = eval_tau(w, np.abs(z)) / eval_tau(w, abs(disk.center))
    return float(ratio.min()), float(ratio.max())


# ---------------------------------------------------------------- covering

@dataclass
class CoveringSequence:
    w: WeightSpec
    delta: float
    epsilon: float
    points: np.ndarray
    multiplicity: int
    separation_violations: int
    uncovered: int
    grid_size: int
    pitch: float
    pitch_certified: bool

    @property
    def radii(self):
        return self.delta * eval_tau(self.w, np.abs(self.points))

    def to_json(self):
        return json.dumps([{"re": float(p.real), "im": float(p.imag), "radius": float(r)}
                           for p, r in zip(self.points, self.radii)])


def _grid(epsilon, n):
    R = 1.0 - epsilon
    xs = np.linspace(-R, R, n)
    X, Y = np.meshgrid(xs, xs)
    g = (X + 1j * Y).ravel()
    return g[np.abs(g) <= R], xs[1] - xs[0]


def build_covering(w: WeightSpec, delta, epsilon=1e-2, grid_size=400,
                   extra_candidates=None, strict=False) -> CoveringSequence:
    """Greedy maximal packing of D(delta tau(a)) over a grid of |z| <= 1-eps,
    admitted in order of increasing |z|."""
    _check_delta(w, delta)
    if not 0 < epsilon <= 1e-2:
        raise ConfigurationError("epsilon must lie in (0, 1e-2]")
    grid, pitch = _grid(epsilon, int(grid_size))
    need = delta * eval_tau(w, 1.0 - epsilon) / 4
    certified = pitch < need
    if strict and not certified:
        raise ResolutionError(
            f"grid pitch {pitch:.3g} exceeds delta*tau(1-eps)/4 = {need:.3g}; "
            f"use at least {int(math.ceil(2 / need)) + 1} points per side")
    cand = grid
    if extra_candidates is not None:
        extra = np.asarray(extra_candidates, dtype=complex)
        extra = extra[np.abs(extra) <= 1.0 - epsilon]
        cand = np.concatenate([grid, extra])
    order = np.lexsort((np.angle(cand), np.abs(cand)))
    cand = cand[order]
    n = cand.size
    rad = delta * eval_tau(w, np.abs(cand))
    tree = cKDTree(np.column_stack([cand.real, cand.imag]))
    covered = np.zeros(n, dtype=bool)
    chosen = []
    for i in range(n):
        if covered[i]:
            continue
        chosen.append(i)
        covered[i] = True
        r = rad[i]
        if r > 0.5 * pitch:
            for j in tree.query_ball_point((cand[i].real, cand[i].imag), r):
                if not covered[j] and abs(cand[j] - cand[i]) < r:
                    covered[j] = True
    pts = cand[np.array(chosen, dtype=int)]
    prad = delta * eval_tau(w, np.abs(pts))
    ptree = cKDTree(np.column_stack([pts.real, pts.imag]))
    # separation: no other center inside D(delta tau(a_k))
    viol = 0
    for k, (p, r) in enumerate(zip(pts, prad)):
        for j in ptree.query_ball_point((p.real, p.imag), r):
            if j != k and abs(pts[j] - p) < r:
                viol += 1
    # covering of the certification grid
    gtree = cKDTree(np.column_stack([grid.real, grid.imag]))
    hit = np.zeros(grid.size, dtype=bool)
    mult = np.zeros(grid.size, dtype=np.int64)
    for p, r in zip(pts, prad):
        idx = gtree.query_ball_point((p.real, p.imag), 3 * r)
        if not idx:
            continue
        idx = np.asarray(idx)
        d = np.abs(grid[idx] - p)
        mult[idx[d < 3 * r]] += 1
        hit[idx[d < r]] = True
    gp = {complex(p) for p in pts}
    uncovered = int(sum(1 for g, h in zip(grid, hit) if not h and complex(g) not in gp))
    return CoveringSequence(
        w=w, delta=float(delta), epsilon=float(epsilon), points=pts,
        multiplicity=int(mult.max()) if mult.size else 0,
        separation_violations=viol, uncovered=uncovered, grid_size=int(grid_size),
        pitch=float(pitch), pitch_certified=bool(certified))


# ---------------------------------------------------------------- horodisks

@dataclass(frozen=True)
class Horodisk:
    """E(zeta, k) = {|zeta - z|^2 <= k (1 - |z|^2)}."""

    zeta: complex
    k: float

    def __post_init__(self):
        if abs(abs(self.zeta) - 1) > 1e-12:
            raise DomainError("zeta must lie on the unit circle")
        if not self.k > 0:
            raise DomainError("k must be positive")

    @property
    def center(self):
        return self.zeta / (self.k + 1)

    @property
    def radius(self):
        return self.k / (1 + self.k)

    def contains(self, z):
        z = np.asarray(z)
        return np.abs(self.zeta - z) ** 2 <= self.k * (1 - np.abs(z) ** 2)

    def contains_disk_form(self, z):
        return np.abs(self.center - np.asarray(z)) <= self.radius

    def sample(self, n, rng, min_gap=1e-9):
        out = []
        while sum(len(o) for o in out) < n:
            rr = self.radius * np.sqrt(rng.uniform(0, 1, 2 * n))
            z = self.center + rr * np.exp(2j * np.pi * rng.uniform(0, 1, 2 * n))
            out.append(z[1 - np.abs(z) > min_gap])
        return np.concatenate(out)[:n]


def nontangential_region(zeta, alpha, z):
    """|z - zeta| < alpha (1 - |z|)."""
    if not alpha > 1:
        raise DomainError("aperture alpha must exceed 1")
    z = np.asarray(z)
    out = np.abs(z - zeta) < alpha * (1 - np.abs(z))
    return bool(out) if out.ndim == 0 else out


@dataclass
class JuliaReport:
    max_ratio: dict
    samples: int

    @property
    def worst(self):
        return max(self.max_ratio.values())


def julia_containment(phi, zeta, d, eta, k_values=(0.1, 0.5, 1.0, 2.0), samples=1000, seed=0):
    """Max over samples of E(zeta, k) of the ratio of the two sides of
    |eta - phi(z)|^2/(1-|phi(z)|^2) <= d |zeta - z|^2/(1-|z|^2)."""
    if eta is None or abs(abs(complex(eta)) - 1) > 1e-6:
        raise InapplicableError("no Julia point: the radial limit is not unimodular")
    if not (0 < d < math.inf):
        raise InapplicableError("angular derivative must be finite and positive")
    rng = np.random.default_rng(seed)
    zeta = complex(zeta) / abs(zeta)
    eta = complex(eta) / abs(eta)
    out = {}
    for k in k_values:
        z = Horodisk(zeta, float(k)).sample(samples, rng).astype(np.clongdouble)
        fz = phi.evaluate(z)
        lhs = np.abs(eta - fz) ** 2 / ((1 - np.abs(fz)) * (1 + np.abs(fz)))
        rhs = d * np.abs(zeta - z) ** 2 / ((1 - np.abs(z)) * (1 + np.abs(z)))
        out[float(k)] = float(np.max(lhs / rhs))
    return JuliaReport(out, samples)


# ---------------------------------------------------------------- tau-distance

def _rho_of_r(b, r):
    """Radial tau-distance from 0: integral_0^r (1-s)^(-b) ds."""
    r = np.asarray(r, dtype=float)
    if b == 1:
        return -np.log1p(-r)
    return ((1 - r) ** (1 - b) - 1) / (b - 1)


def _r_of_rho(b, rho):
    rho = np.asarray(rho, dtype=float)
    if b == 1:
        return -np.expm1(-rho)
    return 1 - (1 + (b - 1) * rho) ** (-1 / (b - 1))


def _pow2ceil(x):
    return 1 << max(0, int(math.ceil(math.log2(max(x, 1.0)))))


@dataclass(eq=False)
class DistanceMesh:
    """Polar graph with levels equally spaced in radial tau-distance.

    Levels of the mesh at spacing h are levels of every finer mesh h/2^m,
    and edges of all coarser meshes are included, so refining never
    lengthens a shortest path.
    """

    w: WeightSpec
    r_max: float
    h: float
    max_vertices: int = 3_000_000
    radii: np.ndarray = field(init=False)
    counts: np.ndarray = field(init=False)
    offsets: np.ndarray = field(init=False)
    points: np.ndarray = field(init=False)
    _edges: list = field(init=False, repr=False)

    def __post_init__(self):
        b = self.w.tau_exponent
        self.b = b
        top = float(_rho_of_r(b, self.r_max))
        n_levels = int(math.ceil(top / self.h - 1e-9)) + 1
        rho = self.h * np.arange(n_levels + 1)
        self.radii = _r_of_rho(b, rho)
        counts = [1]
        for r in self.radii[1:]:
            counts.append(max(8, _pow2ceil(2 * np.pi * r / (self.h * tau_gap(self.w, 1 - r)))))
        self.counts = np.array(counts, dtype=np.int64)
        if self.counts.sum() > self.max_vertices:
            raise ResolutionError(f"mesh would need {int(self.counts.sum())} vertices; "
                                  "coarsen the resolution or move points inward")
        self.offsets = np.concatenate([[0], np.cumsum(self.counts)])
        pts = [np.zeros(1, dtype=complex)]
        for r, n in zip(self.radii[1:], self.counts[1:]):
            pts.append(r * np.exp(2j * np.pi * np.arange(n) / n))
        self.points = np.concatenate(pts)
        self._edges = []
        step = 1
        while (len(self.radii) - 1) // step >= 1:
            self._add_scale(step)
            step *= 2

    def _tau(self, r):
        return tau_gap(self.w, 1 - np.asarray(r, dtype=float))

    def _vid(self, level, j_fine):
        return self.offsets[level] + j_fine

    def _add_scale(self, step):
        """Edges of the mesh at spacing h*step (levels 0, step, 2 step, ...)."""
        levels = np.arange(0, len(self.radii), step)
        scale_counts = {}
        for L in levels:
            if L == 0:
                continue
            r = self.radii[L]
            hs = self.h * step
            n = max(8, _pow2ceil(2 * np.pi * r / (hs * self._tau(r))))
            scale_counts[L] = min(n, int(self.counts[L]))
        src, dst, wt = [], [], []
        for L in levels[1:]:
            n = scale_counts[L]
            stride = int(self.counts[L]) // n
            j = np.arange(n)
            a = self._vid(L, j * stride)
            bq = self._vid(L, ((j + 1) % n) * stride)
            r = self.radii[L]
            src.append(a)
            dst.append(bq)
            wt.append(np.full(n, r * 2 * np.pi / n / self._tau(r)))
        for L0, L1 in zip(levels[:-1], levels[1:]):
            n1 = scale_counts[L1]
            s1 = int(self.counts[L1]) // n1
            j1 = np.arange(n1)
            outer = self._vid(L1, j1 * s1)
            zo = self.radii[L1] * np.exp(2j * np.pi * j1 / n1)
            t1 = self._tau(self.radii[L1])
            if L0 == 0:
                src.append(np.zeros(n1, dtype=np.int64))
                dst.append(outer)
                wt.append(np.abs(zo) / t1)
                continue
            n0 = scale_counts[L0]
            s0 = int(self.counts[L0]) // n0
            pos = j1 * n0 / n1
            for jj in (np.floor(pos).astype(np.int64), np.ceil(pos).astype(np.int64)):
                jj = jj % n0
                inner = self._vid(L0, jj * s0)
                zi = self.radii[L0] * np.exp(2j * np.pi * jj / n0)
                src.append(inner)
                dst.append(outer)
                wt.append(np.abs(zo - zi) / t1)
        self._edges.append((np.concatenate(src), np.concatenate(dst), np.concatenate(wt)))

    def _attach(self, q):
        """Edges joining a query point to the cell corners at every scale."""
        rq = abs(q)
        rho = float(_rho_of_r(self.b, rq))
        src, wt = [], []
        tq = float(self._tau(rq))
        step = 1
        while (len(self.radii) - 1) // step >= 1:
            hs = self.h * step
            L0 = int(math.floor(rho / hs + 1e-12)) * step
            L1 = L0 + step
            for L in (L0, L1):
                if L >= len(self.radii):
                    continue
                if L == 0:
                    src.append(0)
                    wt.append(rq / tq)
                    continue
                r = self.radii[L]
                n = min(max(8, _pow2ceil(2 * np.pi * r / (hs * self._tau(r)))), int(self.counts[L]))
                s = int(self.counts[L]) // n
                pos = (np.angle(q) % (2 * np.pi)) * n / (2 * np.pi)
                for jj in {int(math.floor(pos)) % n, int(math.ceil(pos)) % n}:
                    v = self._vid(L, jj * s)
                    d = abs(self.points[v] - q)
                    src.append(v)
                    wt.append(d / min(tq, float(self._tau(r))))
            step *= 2
        return src, wt

    def distances(self, queries):
        """Shortest-path distances between all pairs of query points."""
        q = np.asarray(queries, dtype=complex)
        nv = self.points.size
        ids = []
        extra_src, extra_dst, extra_wt = [], [], []
        next_id = nv
        for p in q:
            hit = np.flatnonzero(np.abs(self.points - p) < 1e-15)
            if len(hit):
                ids.append(int(hit[0]))
                continue
            s, wgt = self._attach(p)
            extra_src += s
            extra_dst += [next_id] * len(s)
            extra_wt += wgt
            ids.append(next_id)
            next_id += 1
        src = np.concatenate([e[0] for e in self._edges] + [np.asarray(extra_src, dtype=np.int64)])
        dst = np.concatenate([e[1] for e in self._edges] + [np.asarray(extra_dst, dtype=np.int64)])
        wt = np.concatenate([e[2] for e in self._edges] + [np.asarray(extra_wt, dtype=float)])
        G = _min_graph(src, dst, wt, next_id)
        uniq = sorted(set(ids))
        D = dijkstra(G, directed=False, indices=uniq)
        col = {v: i for i, v in enumerate(uniq)}
        return D[np.ix_([col[i] for i in ids], ids)]


def _min_graph(src, dst, wt, n):
    """Sparse undirected graph keeping the lightest of duplicate edges."""
    a = np.minimum(src, dst)
    b = np.maximum(src, dst)
    keep = a != b
    a, b, wt = a[keep], b[keep], wt[keep]
    order = np.lexsort((wt, b, a))
    a, b, wt = a[order], b[order], wt[order]
    first = np.ones(a.size, dtype=bool)
    first[1:] = (a[1:] != a[:-1]) | (b[1:] != b[:-1])
    return coo_matrix((wt[first], (a[first], b[first])), shape=(n, n)).tocsr()


def segment_distance(w: WeightSpec, z, xi, n=64):
    """Integral of |dz|/tau along the straight segment (an upper bound)."""
    x, wx = roots_legendre(n)
    s = 0.5 * (x + 1)
    pts = z + s[:, None] * (xi - z) if np.ndim(z) else z + s * (xi - z)
    return float(0.5 * np.sum(wx * abs(xi - z) / eval_tau(w, np.abs(pts))))


class Distance(tuple):
    """(graph, segment) pair of upper approximations."""

    def __new__(cls, graph, segment):
        return super().__new__(cls, (graph, segment))

    @property
    def graph(self):
        return self[0]

    @property
    def segment(self):
        return self[1]


MAX_QUERY_RADIUS = 1.0 - 1e-6


def bergman_distance(w: WeightSpec, z, xi, resolution=1 / 32) -> Distance:
    """Graph approximation of the tau-distance from above, with the
    straight-segment bound."""
    z, xi = complex(z), complex(xi)
    if abs(z) >= MAX_QUERY_RADIUS or abs(xi) >= MAX_QUERY_RADIUS:
        raise DomainError("points must satisfy |z| < 1 - 1e-6")
    if not resolution > 0:
        raise ConfigurationError("resolution must be positive")
    if z == xi:
        return Distance(0.0, 0.0)
    a, b = sorted([z, xi], key=lambda c: (c.real, c.imag))
    mesh = DistanceMesh(w, max(abs(a), abs(b)), resolution)
    D = mesh.distances([a, b])
    return Distance(float(D[0, 1]), segment_distance(w, a, b))


def distance_matrix(w: WeightSpec, points, resolution=1 / 8):
    pts = np.asarray(points, dtype=complex)
    if np.any(np.abs(pts) >= MAX_QUERY_RADIUS):
        raise DomainError("points must satisfy |z| < 1 - 1e-6")
    mesh = DistanceMesh(w, float(np.abs(pts).max()), resolution)
    D = mesh.distances(pts)
    return np.minimum(D, D.T)
