"""Network topologies, Metropolis mixing matrices, and their spectra.

All weight matrices produced here are symmetric and doubly stochastic.
The eigensolver is a cyclic Jacobi iteration, which is exact enough for
the desk-scale agent counts this simulator targets (K up to a few
hundred).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EigConvergenceError, NotPSDError

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True)
class Topology:
    """Communication graph specification.

    kind: one of "ring", "path", "star", "complete", "random".
    edge_prob and seed are only meaningful for kind="random"; random
    graphs are redrawn with incremented seed until connected.
    """

    kind: str
    K: int
    edge_prob: float | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.K < 1:
            raise ConfigError(f"agent count must be >= 1, got {self.K}")
        if self.kind not in ("ring", "path", "star", "complete", "random"):
            raise ConfigError(f"unknown topology kind {self.kind!r}")
        if self.kind == "random":
            if self.edge_prob is None or not (0.0 < self.edge_prob <= 1.0):
                raise ConfigError("random topology needs edge_prob in (0, 1]")


@dataclass(frozen=True)
class MixingMatrix:
    """Symmetric doubly stochastic weight matrix with cached spectrum.

    eigvals are sorted descending; eigvecs columns match that order.
    lam is the second-largest eigenvalue, lam_min_nonzero the smallest
    nonzero one.
    """

    W: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    lam: float
    lam_min_nonzero: float
    is_psd: bool

    @property
    def K(self) -> int:
        return self.W.shape[0]


def _is_connected(adj: list[list[int]]) -> bool:
    K = len(adj)
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == K


def build_graph(topo: Topology) -> list[list[int]]:
    """Return the adjacency list of a connected simple undirected graph."""
    K = topo.K
    edges: set[tuple[int, int]] = set()
    if topo.kind == "complete":
        edges = {(i, j) for i in range(K) for j in range(i + 1, K)}
    elif topo.kind == "ring":
        if K == 2:
            edges = {(0, 1)}
        elif K > 2:
            edges = {(i, (i + 1) % K) for i in range(K)}
            edges = {(min(a, b), max(a, b)) for a, b in edges}
    elif topo.kind == "path":
        edges = {(i, i + 1) for i in range(K - 1)}
    elif topo.kind == "star":
        edges = {(0, i) for i in range(1, K)}
    else:  # random
        seed = topo.seed if topo.seed is not None else 0
        while True:
            rng = np.random.default_rng(seed)
            edges = {
                (i, j)
                for i in range(K)
                for j in range(i + 1, K)
                if rng.random() < topo.edge_prob
            }
            adj = _edges_to_adj(K, edges)
            if _is_connected(adj):
                return adj
            seed += 1
    adj = _edges_to_adj(K, edges)
    if not _is_connected(adj):
        raise ConfigError(f"{topo.kind} topology on K={K} is not connected")
    return adj


def _edges_to_adj(K: int, edges: set[tuple[int, int]]) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(K)]
    for a, b in sorted(edges):
        adj[a].append(b)
        adj[b].append(a)
    return [sorted(n) for n in adj]


def eigh_symmetric(M: np.ndarray, tol: float = JACOBI_TOL):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Returns (eigvals descending, eigvecs with orthonormal columns).
    Eigenvector signs are canonicalized so the largest-magnitude entry
    of each column is positive.
    """
    M = np.asarray(M, dtype=float)
    if np.max(np.abs(M - M.T)) > 1e-12:
        raise ValueError("matrix is not symmetric")
    K = M.shape[0]
    A = M.copy()
    V = np.eye(K)
    norm_scale = max(1.0, np.linalg.norm(M))
    def offdiag(M_):
        # norm of the off-diagonal part only, to avoid cancellation
        return np.linalg.norm(M_ - np.diag(np.diag(M_)))

    for _ in range(JACOBI_MAX_SWEEPS):
        off = offdiag(A)
        if off <= tol * norm_scale:
            break
        for p in range(K - 1):
            for q in range(p + 1, K):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                elif abs(theta) > 1e150:  # avoid overflow in theta**2
                    t = 1.0 / (2.0 * theta)
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # rotate rows/columns p, q
                Ap = A[:, p].copy()
                Aq = A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap = A[p, :].copy()
                Aq = A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                Vp = V[:, p].copy()
                Vq = V[:, q].copy()
                V[:, p] = c * Vp - s * Vq
                V[:, q] = s * Vp + c * Vq
    else:
        off = offdiag(A)
        raise EigConvergenceError(
            f"Jacobi sweeps did not converge (off-diagonal {off:.3e})",
            residual=off,
        )
    d = np.diag(A).copy()
    order = np.argsort(-d)
    d = d[order]
    V = V[:, order]
    for j in range(K):
        i = np.argmax(np.abs(V[:, j]))
        if V[i, j] < 0:
            V[:, j] = -V[:, j]
    return d, V


def metropolis_weights(adj: list[list[int]], lazy: bool = False) -> MixingMatrix:
    """Metropolis-Hastings doubly stochastic weights for a connected graph.

    Edge weight 1/(1 + max(deg_k, deg_l)); diagonal takes the remainder.
    With lazy=True the result is (I + W)/2, which is PSD.
    """
    K = len(adj)
    if K == 0:
        raise ConfigError("empty adjacency list")
    if not _is_connected(adj):
        raise ConfigError("graph must be connected")
    deg = [len(n) for n in adj]
    W = np.zeros((K, K))
    for k in range(K):
        for l in adj[k]:
            W[k, l] = 1.0 / (1.0 + max(deg[k], deg[l]))
        W[k, k] = 1.0 - np.sum(W[k])
    if lazy:
        W = (np.eye(K) + W) / 2.0
    eigvals, eigvecs = eigh_symmetric(W)
    lam = float(np.max(eigvals[1:])) if K > 1 else 0.0
    nonzero = eigvals[np.abs(eigvals) > 1e-12]
    lam_min_nonzero = float(np.min(nonzero))
    is_psd = bool(np.min(eigvals) >= -1e-10)
    return MixingMatrix(
        W=W,
        eigvals=eigvals,
        eigvecs=eigvecs,
        lam=lam,
        lam_min_nonzero=lam_min_nonzero,
        is_psd=is_psd,
    )


def sqrt_psd(M: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root; eigenvalues in [-1e-10, 0) are clamped."""
    eigvals, eigvecs = eigh_symmetric(M)
    if np.min(eigvals) < -1e-10:
        raise NotPSDError(
            f"matrix has eigenvalue {np.min(eigvals):.3e} < -1e-10; not PSD"
        )
    d = np.clip(eigvals, 0.0, None)
    S = (eigvecs * np.sqrt(d)) @ eigvecs.T
    return (S + S.T) / 2.0


def mixing_for_topology(topo: Topology, lazy: bool = False) -> MixingMatrix:
    """Convenience wrapper: build graph then Metropolis weights."""
    return metropolis_weights(build_graph(topo), lazy=lazy)
