"""Finite-dimensional ambient spaces, norms, and subspace decompositions.

Points are plain 1-D float64 numpy arrays.  A subspace is represented by a
dense prolongation matrix mapping local coordinates into the ambient space;
index-set blocks are a constructor convenience that compiles to 0/1 columns.
All objects are immutable after construction and every operation here is a
pure function, so they are safe to share between concurrent workers.
"""

import numpy as np
import scipy.linalg

# Dense-math implementation boundary.  Raising this is possible but the
# factorizations used below are O(N^3).
MAX_AMBIENT_DIM = 20_000

_RANK_RTOL = 1e-12


def as_point(v, dim=None):
    """Validate and return ``v`` as a finite 1-D float64 array."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def _check_dim_cap(n):
    if n > MAX_AMBIENT_DIM:
        raise ValueError(
            f"ambient dimension {n} exceeds the dense-math cap "
            f"MAX_AMBIENT_DIM={MAX_AMBIENT_DIM}; adjust rsc.vecspace.MAX_AMBIENT_DIM "
            "if you really want this"
        )


def _freeze(a):
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


class Subspace:
    """A subspace of R^N given by a full-column-rank prolongation matrix.

    Local coordinates used throughout the package refer to the orthonormalized
    basis ``onb`` (thin QR of the prolongation), so local Euclidean norms agree
    with ambient norms of subspace elements.  For 0/1 index-block prolongations
    the two bases coincide.
    """

    def __init__(self, prolongation, index):
        P = np.asarray(prolongation, dtype=float)
        if P.ndim != 2:
            raise ValueError("prolongation must be a 2-D matrix")
        n_amb, n_loc = P.shape
        if n_loc < 1:
            raise ValueError("subspace must have local dimension >= 1")
        _check_dim_cap(n_amb)
        if not np.all(np.isfinite(P)):
            raise ValueError("prolongation has non-finite entries")

        gram = P.T @ P
        if np.allclose(gram, np.eye(n_loc), rtol=0.0, atol=1e-13):
            onb = P.copy()
        else:
            q, r = np.linalg.qr(P)
            diag = np.abs(np.diag(r))
            if diag.min() <= _RANK_RTOL * max(diag.max(), 1.0):
                raise ValueError(
                    f"prolongation of subspace {index} is rank deficient "
                    f"(min |R_ii| = {diag.min():.3e})"
                )
            onb = q
        # rank check also for the orthonormal fast path
        if onb.shape[1] != n_loc:
            raise ValueError(f"prolongation of subspace {index} is rank deficient")

        self.prolongation = _freeze(P)
        self.onb = _freeze(onb)
        self.index = int(index)

    @property
    def ambient_dim(self):
        return self.prolongation.shape[0]

    @property
    def local_dim(self):
        return self.prolongation.shape[1]

    def prolong(self, coords):
        """Map local (orthonormal-basis) coordinates into the ambient space."""
        return self.onb @ np.asarray(coords, dtype=float)

    def coords(self, v):
        """Local coordinates of an ambient vector (exact when v lies in the span)."""
        return self.onb.T @ np.asarray(v, dtype=float)

    def project(self, v):
        """Euclidean-orthogonal projection of ``v`` onto the subspace."""
        v = np.asarray(v, dtype=float)
        return self.onb @ (self.onb.T @ v)

    @classmethod
    def from_indices(cls, ambient_dim, indices, index=0):
        """0/1 prolongation selecting the given ambient coordinates."""
        idx = np.asarray(indices, dtype=int)
        if idx.size == 0:
            raise ValueError("empty index block")
        if idx.min() < 0 or idx.max() >= ambient_dim:
            raise ValueError(f"block indices out of range [0, {ambient_dim})")
        if np.unique(idx).size != idx.size:
            raise ValueError("repeated index inside one block")
        P = np.zeros((ambient_dim, idx.size))
        P[idx, np.arange(idx.size)] = 1.0
        sub = cls(P, index)
        sub.indices = _freeze(idx)
        return sub


class Decomposition:
    """An ordered family of subspaces whose spans jointly cover R^N."""

    def __init__(self, subspaces, ambient_dim=None):
        subspaces = list(subspaces)
        if not subspaces:
            raise ValueError("a decomposition needs at least one subspace")
        n = subspaces[0].ambient_dim if ambient_dim is None else int(ambient_dim)
        _check_dim_cap(n)
        for sub in subspaces:
            if sub.ambient_dim != n:
                raise ValueError("subspaces live in different ambient dimensions")
        self.subspaces = tuple(subspaces)
        self.ambient_dim = n
        if not self._covers():
            raise ValueError("subspaces do not span the ambient space")

    def _covers(self):
        covered = np.zeros(self.ambient_dim, dtype=bool)
        index_blocks_only = True
        for sub in self.subspaces:
            idx = getattr(sub, "indices", None)
            if idx is None:
                index_blocks_only = False
                break
            covered[idx] = True
        if index_blocks_only:
            return bool(covered.all())
        stacked = np.hstack([sub.onb for sub in self.subspaces])
        return np.linalg.matrix_rank(stacked, tol=1e-10) == self.ambient_dim

    def __len__(self):
        return len(self.subspaces)

    def __getitem__(self, j):
        return self.subspaces[j]

    def __iter__(self):
        return iter(self.subspaces)

    @property
    def n_subspaces(self):
        return len(self.subspaces)

    @classmethod
    def from_blocks(cls, ambient_dim, blocks):
        """Coordinate blocks (possibly overlapping index lists)."""
        subs = [Subspace.from_indices(ambient_dim, blk, j) for j, blk in enumerate(blocks)]
        return cls(subs, ambient_dim)

    @classmethod
    def overlap_1d(cls, n_nodes, subdomains, overlap):
        """Overlapping windows on a 1-D chain of nodes.

        The chain is split into ``subdomains`` consecutive chunks, each extended
        by ``overlap`` nodes on both sides (clipped at the ends).
        """
        if subdomains < 1 or subdomains > n_nodes:
            raise ValueError("need 1 <= subdomains <= n_nodes")
        if overlap < 0:
            raise ValueError("overlap must be >= 0")
        edges = np.linspace(0, n_nodes, subdomains + 1).astype(int)
        if subdomains > 1 and overlap > np.diff(edges).min():
            raise ValueError("overlap exceeds the subdomain width")
        blocks = []
        for k in range(subdomains):
            lo = max(0, edges[k] - overlap)
            hi = min(n_nodes, edges[k + 1] + overlap)
            blocks.append(np.arange(lo, hi))
        return cls.from_blocks(n_nodes, blocks)

    @classmethod
    def overlap_2d(cls, nx, ny, px, py, overlap):
        """Overlapping rectangles on an nx-by-ny node grid (x fastest)."""
        if px < 1 or py < 1 or px > nx or py > ny:
            raise ValueError("need 1 <= px <= nx and 1 <= py <= ny")
        if overlap < 0:
            raise ValueError("overlap must be >= 0")
        ex = np.linspace(0, nx, px + 1).astype(int)
        ey = np.linspace(0, ny, py + 1).astype(int)
        if (px > 1 and overlap > np.diff(ex).min()) or (py > 1 and overlap > np.diff(ey).min()):
            raise ValueError("overlap exceeds the subdomain width")
        blocks = []
        for ky in range(py):
            ylo, yhi = max(0, ey[ky] - overlap), min(ny, ey[ky + 1] + overlap)
            for kx in range(px):
                xlo, xhi = max(0, ex[kx] - overlap), min(nx, ex[kx + 1] + overlap)
                xs, ys = np.meshgrid(np.arange(xlo, xhi), np.arange(ylo, yhi))
                blocks.append((xs + nx * ys).ravel())
        return cls.from_blocks(nx * ny, blocks)


def project_orthogonal(dec, j, v):
    """Euclidean-orthogonal projection of ``v`` onto subspace ``j``, as an ambient point."""
    if not 0 <= j < len(dec):
        raise IndexError(f"subspace index {j} out of range [0, {len(dec)})")
    v = as_point(v, dec.ambient_dim)
    return dec[j].project(v)


def min_norm_split(dec, w, weights=None):
    """Split ``w`` into subspace components with minimal weighted square-norm sum.

    Returns ambient vectors ``(w_1, ..., w_J)`` with ``sum_j w_j = w`` minimizing
    ``sum_j <B_j c_j, c_j>`` over local coordinates ``c_j``, where ``B_j`` is the
    SPD matrix ``weights[j]`` (identity when ``weights`` is None, i.e. the plain
    minimal Euclidean-norm split).

    The stacked normal equations are solved by Cholesky, falling back to a
    pseudoinverse with relative cutoff 1e-12 for near-singular systems.
    """
    w = as_point(w, dec.ambient_dim)
    if weights is None:
        inv_weights = [None] * len(dec)
    else:
        if len(weights) != len(dec):
            raise ValueError("need one weight matrix per subspace")
        inv_weights = []
        for B in weights:
            B = np.asarray(B, dtype=float)
            c, low = scipy.linalg.cho_factor(B, lower=True)
            inv_weights.append(scipy.linalg.cho_solve((c, low), np.eye(B.shape[0])))

    # S = sum_j Q_j B_j^{-1} Q_j^T restricted to each span; the multiplier lam
    # solves S lam = w and each component is w_j = Q_j B_j^{-1} Q_j^T lam.
    S = np.zeros((dec.ambient_dim, dec.ambient_dim))
    for sub, Binv in zip(dec, inv_weights):
        if Binv is None:
            S += sub.onb @ sub.onb.T
        else:
            S += sub.onb @ Binv @ sub.onb.T
    try:
        c, low = scipy.linalg.cho_factor(S, lower=True)
        lam = scipy.linalg.cho_solve((c, low), w)
    except np.linalg.LinAlgError:
        lam = np.linalg.pinv(S, rcond=1e-12) @ w

    parts = []
    for sub, Binv in zip(dec, inv_weights):
        c_j = sub.onb.T @ lam
        if Binv is not None:
            c_j = Binv @ c_j
        parts.append(sub.onb @ c_j)
    return parts


def partition_split(dec, w):
    """Split ``w`` by the partition of unity 1/(covering count) on index blocks.

    Requires every subspace to be an index block.  Each component satisfies
    ``|w_j| <= |w|`` entrywise on its block, which keeps box constraints intact;
    that makes this the splitter of choice for obstacle-type problems.
    """
    w = as_point(w, dec.ambient_dim)
    counts = np.zeros(dec.ambient_dim)
    for sub in dec:
        idx = getattr(sub, "indices", None)
        if idx is None:
            raise ValueError("partition_split needs index-block subspaces")
        counts[idx] += 1.0
    if counts.min() < 1:
        raise ValueError("index blocks do not cover every coordinate")
    parts = []
    for sub in dec:
        part = np.zeros_like(w)
        part[sub.indices] = w[sub.indices] / counts[sub.indices]
        parts.append(part)
    return parts


class NormSpec:
    """A norm on the ambient space.

    Kinds: ``euclidean``, ``weighted`` (strictly positive entrywise weights),
    ``a_norm`` (SPD operator), and ``w1s`` (discrete Sobolev gradient seminorm
    ``(sum_e |Dv|_e^s * measure)^(1/s)`` for a difference operator ``D``).
    """

    def __init__(self, kind, **data):
        self.kind = kind
        self._data = data

    @classmethod
    def euclidean(cls):
        return cls("euclidean")

    @classmethod
    def weighted(cls, weights):
        w = np.asarray(weights, dtype=float)
        if np.any(w <= 0.0):
            raise ValueError("weighted norm needs strictly positive weights")
        return cls("weighted", weights=_freeze(w))

    @classmethod
    def a_norm(cls, A):
        A = np.asarray(A, dtype=float)
        if not np.allclose(A, A.T, atol=1e-12 * max(1.0, np.abs(A).max())):
            raise ValueError("a_norm operator must be symmetric")
        try:
            np.linalg.cholesky(A)
        except np.linalg.LinAlgError:
            raise ValueError("a_norm operator must be positive definite") from None
        return cls("a_norm", A=_freeze(A))

    @classmethod
    def w1s(cls, diff, s, measure=1.0):
        if s <= 1.0:
            raise ValueError("w1s norm needs exponent s > 1")
        D = np.asarray(diff, dtype=float)
        return cls("w1s", diff=_freeze(D), s=float(s), measure=float(measure))

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        if self.kind == "euclidean":
            return float(np.linalg.norm(v))
        if self.kind == "weighted":
            w = self._data["weights"]
            if w.shape[0] != v.shape[0]:
                raise ValueError("weight vector does not match the ambient dimension")
            return float(np.sqrt(np.sum(w * v * v)))
        if self.kind == "a_norm":
            A = self._data["A"]
            if A.shape[0] != v.shape[0]:
                raise ValueError("a_norm operator does not match the ambient dimension")
            return float(np.sqrt(max(v @ (A @ v), 0.0)))
        if self.kind == "w1s":
            D, s, measure = self._data["diff"], self._data["s"], self._data["measure"]
            if D.shape[1] != v.shape[0]:
                raise ValueError("difference operator does not match the ambient dimension")
            return float((np.sum(np.abs(D @ v) ** s) * measure) ** (1.0 / s))
        raise ValueError(f"unknown norm kind {self.kind!r}")


def norm(spec, v):
    """Evaluate a NormSpec; nonnegative, zero only at v = 0 for the shipped kinds."""
    return spec(v)
