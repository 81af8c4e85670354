"""Coupled-error coordinates and spectral diagnostics.

For each non-principal eigenvalue of W, the strategy matrices reduce to
scalars (a_j, b_j, c_j) and the consensus/dual dynamics to the 2x2 block

    P_j = [[a_j c_j - b_j^2, -b_j],
           [b_j,             1   ]].

The bundle holds a block similarity P = Q T Q^{-1} with contractive T:

* distinct real eigenvalues  -> diagonal T_j, unit eigenvector columns;
* complex conjugate pair     -> real rotation-scaling block whose norm is
  the eigenvalue modulus (the eigenvector phase is chosen so the real and
  imaginary parts have equal norm, which keeps the similarity exact);
* repeated eigenvalue        -> the block is defective (rank-1 nilpotent
  part); a scaled Jordan similarity with column scales (sqrt(3), 1/3)
  keeps ||T_j|| <= (1 + theta)/2 while ||Q_j||^2 <= 3, ||Q_j^{-1}||^2 <= 9.

The gradient-tracking rows always land in the repeated case (their block
has a double eigenvalue at the mode value); the square-root strategies
always land in the complex case for modes strictly inside (0, 1).
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateModeError
from .mixing import MixingMatrix
from .strategies import StrategyKind, StrategyOps

_JORDAN_COL_SCALES = (np.sqrt(3.0), 1.0 / 3.0)


@dataclass(frozen=True)
class TransformBundle:
    kind: StrategyKind
    d: int
    U_hat: np.ndarray       # (K, K-1) orthonormal basis of the consensus complement
    lam_modes: np.ndarray   # (K-1,) non-principal eigenvalues of W
    Lam_a: np.ndarray       # (K-1,) eigenvalues of A on the complement
    Lam_b: np.ndarray
    Lam_c: np.ndarray
    Q: np.ndarray           # (2(K-1), 2(K-1))
    Q_inv: np.ndarray
    T_mat: np.ndarray
    rho: float
    v1_sq: float
    v2_sq: float
    lam_a_sq: float
    lam_b_underline_sq: float
    tau: float
    defective_modes: tuple  # mode indices handled by the Jordan branch

    @property
    def K(self) -> int:
        return self.U_hat.shape[0]

    def block_P(self) -> np.ndarray:
        """The full block matrix the similarity diagonalizes."""
        m = len(self.lam_modes)
        P = np.zeros((2 * m, 2 * m))
        P[:m, :m] = np.diag(self.Lam_a * self.Lam_c - self.Lam_b**2)
        P[:m, m:] = np.diag(-self.Lam_b)
        P[m:, :m] = np.diag(self.Lam_b)
        P[m:, m:] = np.eye(m)
        return P


def _mode_block(a, b, c):
    return np.array([[a * c - b * b, -b], [b, 1.0]])


def _similarity_2x2(P, disc_tol=1e-9):
    """Q, T with P = Q T Q^{-1}; returns (Q, T, defective_flag)."""
    tr = P[0, 0] + P[1, 1]
    det = P[0, 0] * P[1, 1] - P[0, 1] * P[1, 0]
    disc = tr * tr - 4.0 * det
    scale = max(1.0, abs(tr) ** 2, abs(det))
    if disc > disc_tol * scale:  # real distinct
        sq = np.sqrt(disc)
        Q = np.zeros((2, 2))
        for j, th in enumerate(((tr + sq) / 2.0, (tr - sq) / 2.0)):
            M = P - th * np.eye(2)
            v = np.array([M[0, 1], -M[0, 0]])
            if np.linalg.norm(v) < 1e-13:
                v = np.array([M[1, 1], -M[1, 0]])
            Q[:, j] = v / np.linalg.norm(v)
        T = np.linalg.inv(Q) @ P @ Q
        return Q, T, False
    if disc < -disc_tol * scale:  # complex conjugate pair
        al = tr / 2.0
        om = np.sqrt(-disc) / 2.0
        M = P - (al + 1j * om) * np.eye(2)
        v = np.array([M[0, 1], -M[0, 0]], dtype=complex)
        vr, vi = v.real, v.imag
        # rotate the phase so the real and imaginary parts have equal norm
        A = vr @ vr - vi @ vi
        B = 2.0 * (vr @ vi)
        phi = 0.5 * np.arctan2(A, B)
        w = np.exp(1j * phi) * v
        Q = np.column_stack([w.real, w.imag]) / np.linalg.norm(w.real)
        T = np.linalg.inv(Q) @ P @ Q
        return Q, T, False
    # repeated eigenvalue: eigenvector + orthogonal generalized direction
    th = tr / 2.0
    M = P - th * np.eye(2)
    U, s, Vt = np.linalg.svd(M)
    if s[0] < 1e-12:  # P is already th*I
        return np.eye(2), P.copy(), False
    vhat = Vt[1]
    what = Vt[0]
    alpha, beta = _JORDAN_COL_SCALES
    Q = np.column_stack([alpha * vhat, beta * what])
    T = np.linalg.inv(Q) @ P @ Q
    return Q, T, True


def build_transform_bundle(ops: StrategyOps, mixing: MixingMatrix, d: int = 1,
                           cond_cap: float = 1e8) -> TransformBundle:
    K = mixing.K
    U_hat = mixing.eigvecs[:, 1:]
    lam_modes = mixing.eigvals[1:]
    m = K - 1
    # A, B, C are polynomials in W, so they are scalar on each eigenmode
    Lam_a = np.einsum("ij,jk,ki->i", U_hat.T, ops.A, U_hat) if m else np.zeros(0)
    Lam_b = np.einsum("ij,jk,ki->i", U_hat.T, ops.B, U_hat) if m else np.zeros(0)
    Lam_c = np.einsum("ij,jk,ki->i", U_hat.T, ops.C, U_hat) if m else np.zeros(0)
    if m and np.min(np.abs(Lam_b)) < 1e-12:
        raise DegenerateModeError(
            "a non-principal mode has a zero dual-coupling eigenvalue; "
            "the graph effectively has a disconnected consensus subspace"
        )
    Q = np.zeros((2 * m, 2 * m))
    Qi = np.zeros((2 * m, 2 * m))
    Tm = np.zeros((2 * m, 2 * m))
    rho = 0.0
    v1_sq = 0.0 if m else 1.0
    v2_sq = 0.0 if m else 1.0
    defective = []
    for j in range(m):
        Pj = _mode_block(Lam_a[j], Lam_b[j], Lam_c[j])
        Qj, Tj, is_def = _similarity_2x2(Pj)
        if is_def:
            defective.append(j)
        Qij = np.linalg.inv(Qj)
        if np.linalg.cond(Qj) > cond_cap:
            raise DegenerateModeError(
                f"mode {j} similarity is ill-conditioned (cond > {cond_cap:g})"
            )
        for r in range(2):
            for s in range(2):
                Q[r * m + j, s * m + j] = Qj[r, s]
                Qi[r * m + j, s * m + j] = Qij[r, s]
                Tm[r * m + j, s * m + j] = Tj[r, s]
        rho = max(rho, float(np.linalg.norm(Tj, 2)))
        v1_sq = max(v1_sq, float(np.linalg.norm(Qj, 2) ** 2))
        v2_sq = max(v2_sq, float(np.linalg.norm(Qij, 2) ** 2))
    return TransformBundle(
        kind=ops.kind,
        d=d,
        U_hat=U_hat,
        lam_modes=lam_modes,
        Lam_a=Lam_a,
        Lam_b=Lam_b,
        Lam_c=Lam_c,
        Q=Q,
        Q_inv=Qi,
        T_mat=Tm,
        rho=rho,
        v1_sq=v1_sq,
        v2_sq=v2_sq,
        lam_a_sq=float(np.max(Lam_a**2)) if m else 0.0,
        lam_b_underline_sq=float(np.min(Lam_b**2)) if m else 1.0,
        tau=float(np.sqrt(K) * np.sqrt(v2_sq)),
        defective_modes=tuple(defective),
    )


@dataclass(frozen=True)
class CoupledError:
    ehat_x: np.ndarray  # (2(K-1), d1)
    ehat_y: np.ndarray  # (2(K-1), d2)
    z_x: np.ndarray     # (K, d1)
    z_y: np.ndarray

    @property
    def ehat_x_sq(self) -> float:
        return float(np.sum(self.ehat_x**2))

    @property
    def ehat_y_sq(self) -> float:
        return float(np.sum(self.ehat_y**2))


def coupled_error_norms(X, Y, M_x, M_y, D_x, D_y, ops: StrategyOps,
                        bundle: TransformBundle, mu_x: float, mu_y: float) -> CoupledError:
    """Transformed deviation coordinates of the current engine state."""
    B2 = ops.B @ ops.B
    z_x = mu_x * ops.A @ M_x + ops.B @ D_x - B2 @ X
    z_y = -mu_y * ops.A @ M_y + ops.B @ D_y - B2 @ Y
    m = len(bundle.lam_modes)
    if m == 0:
        return CoupledError(
            ehat_x=np.zeros((0, X.shape[1])),
            ehat_y=np.zeros((0, Y.shape[1])),
            z_x=z_x,
            z_y=z_y,
        )
    Ut = bundle.U_hat.T
    inv_b = 1.0 / bundle.Lam_b
    stack_x = np.vstack([Ut @ X, inv_b[:, None] * (Ut @ z_x)])
    stack_y = np.vstack([Ut @ Y, inv_b[:, None] * (Ut @ z_y)])
    ehat_x = bundle.Q_inv @ stack_x / bundle.tau
    ehat_y = bundle.Q_inv @ stack_y / bundle.tau
    return CoupledError(ehat_x=ehat_x, ehat_y=ehat_y, z_x=z_x, z_y=z_y)


@dataclass(frozen=True)
class ConsensusBoundReport:
    lhs: float
    rhs: float
    passed: bool


def check_consensus_bound(X, Y, err: CoupledError,
                          bundle: TransformBundle) -> ConsensusBoundReport:
    """Consensus error vs. K v1^2 v2^2 (||ehat_x||^2 + ||ehat_y||^2)."""
    K = X.shape[0]
    lhs = float(np.sum((X - X.mean(axis=0)) ** 2) + np.sum((Y - Y.mean(axis=0)) ** 2))
    rhs = K * bundle.v1_sq * bundle.v2_sq * (err.ehat_x_sq + err.ehat_y_sq)
    return ConsensusBoundReport(lhs=lhs, rhs=rhs, passed=lhs <= rhs + 1e-9 * max(1.0, rhs))
