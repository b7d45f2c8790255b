"""Finite metric spaces, isolation radii, and close-pair search.

Spaces are either matrix-backed (an explicit validated distance matrix) or
coordinate-backed (points in R^k under the Euclidean distance, with distance
rows generated on demand).  Coordinate backing is what makes the larger
refinement levels tractable: a 10^4-point space never materialises its
10^8-entry matrix, and all scans below run over bounded row blocks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, MetricValidationError

#: Relative triangle-inequality slack, scaled by the largest distance.
TRIANGLE_RTOL = 1e-12

#: Largest matrix (entries) we will materialise or fully triangle-check.
MATERIALIZE_LIMIT = 25_000_000
TRIANGLE_CHECK_LIMIT = 2048

#: Max recorded axiom violations before the report is truncated.
VIOLATION_CAP = 1000

_BLOCK_ENTRIES = 4_000_000


def _default_labels(n: int) -> tuple[str, ...]:
    width = max(1, len(str(n - 1)))
    return tuple(f"p{i:0{width}d}" for i in range(n))


class FiniteMetricSpace:
    """A finite labelled metric space.

    Construct through :meth:`from_matrix` (full validation) or
    :meth:`from_coords` (triangle inequality inherited from the embedding,
    only duplicate points need checking).
    """

    def __init__(self, labels, *, matrix=None, coords=None):
        if (matrix is None) == (coords is None):
            raise InputError("exactly one of matrix/coords must be given")
        self.labels = tuple(str(x) for x in labels)
        if len(set(self.labels)) != len(self.labels):
            raise InputError("duplicate labels in metric space")
        self._matrix = matrix
        self._coords = coords
        self._index = {lab: i for i, lab in enumerate(self.labels)}

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_matrix(cls, matrix, labels=None, *, validate: bool = True):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise InputError(f"distance matrix must be square, got shape {matrix.shape}")
        n = matrix.shape[0]
        if n < 1:
            raise InputError("metric space needs at least one point")
        if labels is None:
            labels = _default_labels(n)
        if len(labels) != n:
            raise InputError(f"{len(labels)} labels for a {n}x{n} matrix")
        if validate:
            validate_matrix(matrix)
        matrix = matrix.copy()
        matrix.setflags(write=False)
        return cls(labels, matrix=matrix)

    @classmethod
    def from_coords(cls, coords, labels=None):
        coords = np.asarray(coords, dtype=np.float64)
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.ndim != 2 or coords.shape[0] < 1:
            raise InputError("coords must be a non-empty (n, k) array")
        if not np.all(np.isfinite(coords)):
            raise InputError("coords contain non-finite entries")
        if labels is None:
            labels = _default_labels(coords.shape[0])
        if len(labels) != coords.shape[0]:
            raise InputError(f"{len(labels)} labels for {coords.shape[0]} points")
        dup = _duplicate_rows(coords)
        if dup:
            labels = tuple(str(x) for x in labels)
            viols = [
                ("positivity", (i, j), f"points {labels[i]!r} and {labels[j]!r} coincide")
                for i, j in dup[:VIOLATION_CAP]
            ]
            raise MetricValidationError(viols, truncated=len(dup) > VIOLATION_CAP)
        coords = coords.copy()
        coords.setflags(write=False)
        return cls(labels, coords=coords)

    # -- basic queries -----------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise InputError(f"unknown label {label!r}") from None

    def row_block(self, lo: int, hi: int) -> np.ndarray:
        """Distance rows lo..hi-1 against every point, shape (hi-lo, n)."""
        if self._matrix is not None:
            return self._matrix[lo:hi]
        a = self._coords[lo:hi]
        if self._coords.shape[1] == 1:
            return np.abs(a[:, 0][:, None] - self._coords[:, 0][None, :])
        diff = a[:, None, :] - self._coords[None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))

    def row(self, i: int) -> np.ndarray:
        return self.row_block(i, i + 1)[0]

    def distance(self, i, j) -> float:
        if isinstance(i, str):
            i = self.index(i)
        if isinstance(j, str):
            j = self.index(j)
        if self._matrix is not None:
            return float(self._matrix[i, j])
        return float(self.row(i)[j])

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            if self.n * self.n > MATERIALIZE_LIMIT:
                raise InputError(
                    f"{self.n}x{self.n} distance matrix exceeds the materialisation "
                    "limit; use row_block for chunked access"
                )
            m = self.row_block(0, self.n)
            m.setflags(write=False)
            self._matrix = m
        return self._matrix

    @property
    def coords(self):
        return self._coords

    def block_rows(self):
        """Yield (lo, hi) row windows sized to bounded memory."""
        step = max(1, _BLOCK_ENTRIES // max(1, self.n))
        for lo in range(0, self.n, step):
            yield lo, min(self.n, lo + step)

    def subspace(self, labels) -> "FiniteMetricSpace":
        idx = np.array([self.index(lab) for lab in labels], dtype=np.intp)
        if self._coords is not None:
            return FiniteMetricSpace(labels, coords=self._coords[idx])
        sub = self._matrix[np.ix_(idx, idx)].copy()
        sub.setflags(write=False)
        return FiniteMetricSpace(labels, matrix=sub)

    def same_points(self, other: "FiniteMetricSpace") -> bool:
        return self is other or self.labels == other.labels

    def __repr__(self):
        kind = "matrix" if self._matrix is not None else "coords"
        return f"FiniteMetricSpace(n={self.n}, backing={kind})"


def _duplicate_rows(coords: np.ndarray):
    order = np.lexsort(coords.T[::-1])
    sorted_c = coords[order]
    same = np.all(sorted_c[1:] == sorted_c[:-1], axis=1)
    pairs = []
    for pos in np.flatnonzero(same):
        i, j = int(order[pos]), int(order[pos + 1])
        pairs.append((min(i, j), max(i, j)))
    return sorted(pairs)


def validate_matrix(matrix: np.ndarray) -> None:
    """Check all metric axioms, collecting every violation.

    Raises :class:`MetricValidationError` listing each violated axiom with
    the offending pair or triple.  The triangle scan is cubic and therefore
    refuses matrices beyond TRIANGLE_CHECK_LIMIT points; coordinate-backed
    spaces never need it.
    """
    n = matrix.shape[0]
    viols = []
    truncated = False

    def push(axiom, idx, detail):
        nonlocal truncated
        if len(viols) < VIOLATION_CAP:
            viols.append((axiom, idx, detail))
        else:
            truncated = True

    bad = np.argwhere(~np.isfinite(matrix))
    for i, j in bad:
        push("finiteness", (int(i), int(j)), f"entry ({i},{j}) is not finite")
    if len(bad) == 0:
        for i in np.flatnonzero(np.diagonal(matrix) != 0.0):
            push("zero-diagonal", (int(i), int(i)), f"d({i},{i}) = {float(matrix[i, i])!r} != 0")
        asym = np.argwhere(matrix != matrix.T)
        for i, j in asym:
            if i < j:
                push(
                    "symmetry",
                    (int(i), int(j)),
                    f"d({i},{j}) = {float(matrix[i, j])!r} but d({j},{i}) = {float(matrix[j, i])!r}",
                )
        offdiag = ~np.eye(n, dtype=bool)
        nonpos = np.argwhere((matrix <= 0.0) & offdiag)
        for i, j in nonpos:
            if i < j:
                push("positivity", (int(i), int(j)), f"d({i},{j}) = {float(matrix[i, j])!r} <= 0")
        if not viols:
            if n > TRIANGLE_CHECK_LIMIT:
                raise InputError(
                    f"matrix with {n} points is too large for the cubic triangle "
                    "scan; supply coordinates instead"
                )
            tol = TRIANGLE_RTOL * float(matrix.max(initial=0.0))
            for j in range(n):
                through = matrix[:, j][:, None] + matrix[j, :][None, :]
                bad_ik = np.argwhere(matrix > through + tol)
                for i, k in bad_ik:
                    if i > k:  # the matrix is symmetric here; skip mirrors
                        continue
                    push(
                        "triangle",
                        (int(i), int(j), int(k)),
                        f"d({i},{k}) = {float(matrix[i, k])!r} > d({i},{j}) + d({j},{k}) "
                        f"= {float(through[i, k])!r}",
                    )
                if truncated:
                    break
    if viols:
        raise MetricValidationError(viols, truncated=truncated)


@dataclass(frozen=True)
class IsolationProfile:
    """Per-point isolation radii together with their minimum."""

    labels: tuple[str, ...]
    radii: np.ndarray
    delta: float

    def radius(self, label: str) -> float:
        return float(self.radii[self.labels.index(label)])


def isolation_radii(space: FiniteMetricSpace) -> np.ndarray:
    """d(x) = min over y != x of d(x, y) for every point; inf for a singleton."""
    if space.n == 1:
        return np.array([np.inf])
    out = np.empty(space.n)
    for lo, hi in space.block_rows():
        block = space.row_block(lo, hi).copy()
        for r in range(lo, hi):
            block[r - lo, r] = np.inf
        out[lo:hi] = block.min(axis=1)
    return out


def isolation_radius(space: FiniteMetricSpace, label: str) -> float:
    i = space.index(label)
    if space.n == 1:
        return np.inf
    row = space.row(i).copy()
    row[i] = np.inf
    return float(row.min())


def isolation_profile(space: FiniteMetricSpace) -> IsolationProfile:
    radii = isolation_radii(space)
    return IsolationProfile(space.labels, radii, float(radii.min()))


def discreteness_constant(space: FiniteMetricSpace) -> float:
    """Infimum of isolation radii; the uniform-discreteness constant."""
    return float(isolation_radii(space).min())


def dist_to_set(space: FiniteMetricSpace, label: str, targets) -> float:
    targets = list(targets)
    if not targets:
        raise InputError("dist_to_set needs a non-empty target set")
    row = space.row(space.index(label))
    idx = np.array([space.index(t) for t in targets], dtype=np.intp)
    return float(row[idx].min())


def dist_to_set_all(space: FiniteMetricSpace, targets) -> np.ndarray:
    """Distance from every point to the label set ``targets``."""
    targets = list(targets)
    if not targets:
        raise InputError("dist_to_set needs a non-empty target set")
    idx = np.array([space.index(t) for t in targets], dtype=np.intp)
    out = np.empty(space.n)
    for lo, hi in space.block_rows():
        out[lo:hi] = space.row_block(lo, hi)[:, idx].min(axis=1)
    return out


def find_close_pair(space: FiniteMetricSpace, excluded, eps: float):
    """A pair of distinct points outside ``excluded`` at distance < eps.

    The search first follows the guarded-radius order: with
    eta = min isolation radius over the excluded set (eps when it is empty)
    and theta = min(eps, eta) / 4, candidates a outside the theta-guard of
    the excluded set are visited by increasing isolation radius (label order
    on ties) while their radius stays below theta, and the nearest admissible
    b is accepted when d(a, b) < min(d(a) + theta, eps).  That order can
    terminate without a pair even though one exists (two near-coincident
    excluded points can shadow every small radius), so a deterministic
    exhaustive scan backs it up; ``None`` therefore really means no
    qualifying pair exists.
    """
    if eps <= 0:
        raise InputError(f"eps must be positive, got {eps}")
    excluded = set(excluded)
    for lab in excluded:
        space.index(lab)
    if space.n < 2:
        return None
    allowed = np.array([lab not in excluded for lab in space.labels])
    if allowed.sum() < 2:
        return None

    radii = isolation_radii(space)
    excl_idx = np.array([space.index(lab) for lab in sorted(excluded)], dtype=np.intp)
    if excl_idx.size:
        eta = float(radii[excl_idx].min())
    else:
        eta = eps
    theta = min(eps, eta) / 4.0

    if excl_idx.size:
        guard_dist = dist_to_set_all(space, sorted(excluded))
    else:
        guard_dist = np.full(space.n, np.inf)

    candidates = [
        i
        for i in range(space.n)
        if allowed[i] and guard_dist[i] > theta and radii[i] < theta
    ]
    candidates.sort(key=lambda i: (radii[i], i))
    for i in candidates:
        row = space.row(i).copy()
        row[i] = np.inf
        row[~allowed] = np.inf
        j = int(row.argmin())
        d = float(row[j])
        if d < min(radii[i] + theta, eps):
            return space.labels[i], space.labels[j]

    # Exhaustive fallback: smallest admissible distance, ties by index pair.
    # Blocks are visited in increasing row order, so taking the first
    # row-major argmin within each block keeps the tie-break deterministic.
    best = None
    for lo, hi in space.block_rows():
        block = space.row_block(lo, hi).copy()
        block[:, ~allowed] = np.inf
        for r in range(lo, hi):
            if not allowed[r]:
                block[r - lo, :] = np.inf
            else:
                block[r - lo, : r + 1] = np.inf  # keep i < j only
        bmin = float(block.min(initial=np.inf))
        if bmin < eps:
            r, j = np.argwhere(block == bmin)[0]
            key = (bmin, lo + int(r), int(j))
            if best is None or key < best:
                best = key
    if best is None:
        return None
    _, i, j = best
    return space.labels[i], space.labels[j]


def max_slope(space: FiniteMetricSpace, values: np.ndarray):
    """Largest |f(x) - f(y)| / d(x, y) over distinct points, with its pair.

    Ties resolve to the lexicographically smallest index pair.
    """
    if space.n < 2:
        raise InputError("max_slope needs at least two points")
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (space.n,):
        raise InputError("values length does not match the space")
    best = -np.inf
    best_pair = (0, 1)
    for lo, hi in space.block_rows():
        d = space.row_block(lo, hi).copy()
        for r in range(lo, hi):
            d[r - lo, : r + 1] = np.inf
        ratio = np.abs(values[lo:hi][:, None] - values[None, :]) / d
        for r in range(lo, hi):
            ratio[r - lo, : r + 1] = -1.0  # upper triangle only, even on ties at 0
        m = float(ratio.max(initial=-np.inf))
        if m > best:
            r, j = np.argwhere(ratio == m)[0]
            best, best_pair = m, (lo + int(r), int(j))
    i, j = best_pair
    return best, (space.labels[i], space.labels[j])
