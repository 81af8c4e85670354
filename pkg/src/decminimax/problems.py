"""Synthetic nonconvex-PL minimax objectives with stochastic gradients.

Two instances:

* QuadraticMinimaxProblem: per-agent saddle quadratics
      J_k(x, y) = 1/2 x'Q_k x + x'R_k y + a_k'x - 1/2 y'S_k y + b_k'y
  with stochasticity only in the linear terms, so the smoothness constant
  is exact and the per-sample variance is controlled exactly.

* SinPLProblem: a 1-D landscape that is PL but nonconcave in y,
      J(x, y) = x^2 + 3 sin^2(x) sin^2(y) - 4 y^2 - 10 sin^2(y),
  plus zero-sum per-agent linear perturbations.
"""

from dataclasses import dataclass

import numpy as np

from .errors import AscentCapError, ConfigError


@dataclass(frozen=True)
class ProblemConstants:
    nu: float
    L_f: float
    kappa: float

    @property
    def L(self) -> float:
        # smoothness of the envelope max_y J(x, y)
        return self.L_f + self.kappa * self.L_f / 2.0


class QuadraticMinimaxProblem:
    def __init__(self, Q, R, S, a, b, a_samples, b_samples, sigma, seed):
        self.Q = Q  # (K, d1, d1)
        self.R = R  # (K, d1, d2)
        self.S = S  # (K, d2, d2)
        self.a = a  # (K, d1)
        self.b = b  # (K, d2)
        self.a_samples = a_samples  # (K, N, d1) or None for online-only
        self.b_samples = b_samples
        self.sigma = float(sigma)
        self.seed = seed
        self.K, self.d1, _ = Q.shape
        self.d2 = S.shape[1]
        self.N = None if a_samples is None else a_samples.shape[1]

        self.Qbar = Q.mean(axis=0)
        self.Rbar = R.mean(axis=0)
        self.Sbar = S.mean(axis=0)
        self.abar = a.mean(axis=0)
        self.bbar = b.mean(axis=0)
        nu = float(np.min(np.linalg.eigvalsh(self.Sbar)))
        if nu <= 0:
            raise ConfigError(f"mean S block must be positive definite (nu={nu:.3e})")
        L_f = 0.0
        for k in range(self.K):
            H = np.block([[Q[k], R[k]], [R[k].T, -S[k]]])
            L_f = max(L_f, float(np.max(np.abs(np.linalg.eigvalsh(H)))))
        self.constants = ProblemConstants(nu=nu, L_f=L_f, kappa=L_f / nu)

    # -- exact gradients -------------------------------------------------

    def exact_grad_x(self, k, x, y):
        return self.Q[k] @ x + self.R[k] @ y + self.a[k]

    def exact_grad_y(self, k, x, y):
        return self.R[k].T @ x - self.S[k] @ y + self.b[k]

    def exact_grads_block(self, X, Y):
        GX = (
            np.einsum("kij,kj->ki", self.Q, X)
            + np.einsum("kij,kj->ki", self.R, Y)
            + self.a
        )
        GY = (
            np.einsum("kji,kj->ki", self.R, X)
            - np.einsum("kij,kj->ki", self.S, Y)
            + self.b
        )
        return GX, GY

    def objective(self, x, y):
        """Global objective J(x, y) = mean_k J_k(x, y)."""
        return float(
            0.5 * x @ self.Qbar @ x
            + x @ self.Rbar @ y
            + self.abar @ x
            - 0.5 * y @ self.Sbar @ y
            + self.bbar @ y
        )

    # -- stochastic gradients --------------------------------------------

    def batch_noise(self, k, idx=None, rng=None, batch=1):
        """Averaged linear-term deviation from the mean over a minibatch.

        Offline: idx is an index array into the sample tables. Online:
        rng draws the averaged Gaussian noise of a fresh size-`batch`
        minibatch directly.
        """
        if idx is not None:
            if self.a_samples is None:
                raise ConfigError("offline sampling requested on an online problem")
            if np.max(idx) >= self.N:
                raise IndexError(f"sample index {int(np.max(idx))} >= N={self.N}")
            return (
                self.a_samples[k, idx].mean(axis=0) - self.a[k],
                self.b_samples[k, idx].mean(axis=0) - self.b[k],
            )
        if self.sigma == 0.0:
            if rng is not None:  # keep the stream position deterministic
                rng.standard_normal(self.d1 + self.d2)
            return self.a[k] * 0.0, self.b[k] * 0.0
        z = rng.standard_normal(self.d1 + self.d2)
        na = z[: self.d1] * self.sigma / np.sqrt(self.d1 * batch)
        nb = z[self.d1:] * self.sigma / np.sqrt(self.d2 * batch)
        return na, nb

    def grad_sample(self, k, sample_ref, x, y, side):
        """Single-sample stochastic gradient; sample_ref is an offline
        index or an rng for a fresh online draw."""
        if isinstance(sample_ref, (int, np.integer)):
            if self.a_samples is None:
                raise ConfigError("offline index on an online problem")
            if not 0 <= sample_ref < self.N:
                raise IndexError(f"sample index {sample_ref} out of range [0, {self.N})")
            da = self.a_samples[k, sample_ref] - self.a[k]
            db = self.b_samples[k, sample_ref] - self.b[k]
        else:
            rng = sample_ref
            da = rng.standard_normal(self.d1) * self.sigma / np.sqrt(self.d1)
            db = rng.standard_normal(self.d2) * self.sigma / np.sqrt(self.d2)
        if side == "x":
            return self.exact_grad_x(k, x, y) + da
        if side == "y":
            return self.exact_grad_y(k, x, y) + db
        raise ValueError(f"side must be 'x' or 'y', got {side!r}")


class SinPLProblem:
    """Scalar two-sided-PL stress test; online sampling only."""

    def __init__(self, cx, cy, sigma, seed, nu_hat):
        self.cx = cx  # (K,) zero-sum x perturbations
        self.cy = cy
        self.sigma = float(sigma)
        self.seed = seed
        self.K = cx.shape[0]
        self.d1 = self.d2 = 1
        self.N = None
        # |J_yy| <= 6 + 8 + 20 with room for the cross term
        self.constants = ProblemConstants(nu=nu_hat, L_f=35.0, kappa=35.0 / nu_hat)

    def exact_grad_x(self, k, x, y):
        x0, y0 = x[0], y[0]
        g = 2 * x0 + 3 * np.sin(2 * x0) * np.sin(y0) ** 2 + self.cx[k]
        return np.array([g])

    def exact_grad_y(self, k, x, y):
        x0, y0 = x[0], y[0]
        g = (3 * np.sin(x0) ** 2 - 10) * np.sin(2 * y0) - 8 * y0 + self.cy[k]
        return np.array([g])

    def exact_grads_block(self, X, Y):
        x, y = X[:, 0], Y[:, 0]
        gx = 2 * x + 3 * np.sin(2 * x) * np.sin(y) ** 2 + self.cx
        gy = (3 * np.sin(x) ** 2 - 10) * np.sin(2 * y) - 8 * y + self.cy
        return gx[:, None], gy[:, None]

    def objective(self, x, y):
        x0, y0 = x[0], y[0]
        return float(
            x0**2
            + 3 * np.sin(x0) ** 2 * np.sin(y0) ** 2
            - 4 * y0**2
            - 10 * np.sin(y0) ** 2
        )

    def batch_noise(self, k, idx=None, rng=None, batch=1):
        if idx is not None:
            raise ConfigError("SinPL problem has no offline sample table")
        if self.sigma == 0.0:
            if rng is not None:
                rng.standard_normal(2)
            return np.zeros(1), np.zeros(1)
        z = rng.standard_normal(2) * self.sigma / np.sqrt(batch)
        return z[:1], z[1:]

    def grad_sample(self, k, sample_ref, x, y, side):
        rng = sample_ref
        noise = rng.standard_normal() * self.sigma
        if side == "x":
            return self.exact_grad_x(k, x, y) + noise
        if side == "y":
            return self.exact_grad_y(k, x, y) + noise
        raise ValueError(f"side must be 'x' or 'y', got {side!r}")


# -- constructors ---------------------------------------------------------


def _random_spd_spectrum(rng, d, lo, hi):
    G = rng.standard_normal((d, d))
    O, _ = np.linalg.qr(G)
    return (O * rng.uniform(lo, hi, size=d)) @ O.T


def make_quadratic_problem(
    K,
    d1,
    d2,
    N,
    sigma,
    seed,
    nu_target=0.5,
    q_base=(0.2, 1.0),
    q_spread=1.0,
    s_spread=0.5,
    r_scale=0.3,
    hetero=1.0,
    zero_mean_linear=False,
):
    """Heterogeneous agents with exact variance and smoothness control.

    The global x-curvature is kept positive (base spectrum q_base plus
    zero-sum indefinite per-agent deltas), so individual J_k are
    nonconvex in x while the envelope stays bounded below.
    """
    if d2 < 1:
        raise ConfigError("d2 must be >= 1")
    if nu_target <= 0:
        raise ConfigError("nu_target must be > 0")
    rng = np.random.default_rng(seed)
    Qbase = _random_spd_spectrum(rng, d1, q_base[0], q_base[1])
    deltas = rng.standard_normal((K, d1, d1)) * q_spread
    deltas = (deltas + deltas.transpose(0, 2, 1)) / 2.0
    deltas -= deltas.mean(axis=0, keepdims=True)
    Q = Qbase[None] + deltas
    S = np.stack(
        [_random_spd_spectrum(rng, d2, nu_target, nu_target + s_spread) for _ in range(K)]
    )
    R = rng.standard_normal((K, d1, d2)) * r_scale / np.sqrt(max(d1, d2))
    a = rng.standard_normal((K, d1)) * hetero
    b = rng.standard_normal((K, d2)) * hetero
    if zero_mean_linear:
        a -= a.mean(axis=0, keepdims=True)
        b -= b.mean(axis=0, keepdims=True)

    a_samples = b_samples = None
    if N is not None:
        ea = rng.standard_normal((K, N, d1))
        eb = rng.standard_normal((K, N, d2))
        if N > 1:
            ea -= ea.mean(axis=1, keepdims=True)
            eb -= eb.mean(axis=1, keepdims=True)
            for e in (ea, eb):
                ms = np.sqrt((e**2).sum(axis=2).mean(axis=1))  # per-agent RMS norm
                e *= np.where(ms > 0, sigma / np.where(ms > 0, ms, 1.0), 0.0)[:, None, None]
        else:
            ea[:] = 0.0
            eb[:] = 0.0
        a_samples = a[:, None, :] + ea
        b_samples = b[:, None, :] + eb
    return QuadraticMinimaxProblem(Q, R, S, a, b, a_samples, b_samples, sigma, seed)


def make_sinpl_problem(K, sigma, seed, grid_halfwidth=3.0, grid_points=121):
    """Build the sin-PL instance and grid-estimate its PL constant."""
    rng = np.random.default_rng(seed)
    cx = rng.standard_normal(K) * 0.5
    cy = rng.standard_normal(K) * 0.5
    cx[-1] = -np.sum(cx[:-1])
    cy[-1] = -np.sum(cy[:-1])
    if K == 1:
        cx[:] = 0.0
        cy[:] = 0.0

    # PL ratio |grad_y J|^2 / (2 (P - J)) on a grid; P(x) = x^2 (max at y=0)
    xs = np.linspace(-grid_halfwidth, grid_halfwidth, grid_points)
    ys = np.linspace(-grid_halfwidth, grid_halfwidth, grid_points)
    Xg, Yg = np.meshgrid(xs, ys, indexing="ij")
    gy = (3 * np.sin(Xg) ** 2 - 10) * np.sin(2 * Yg) - 8 * Yg
    gap = (10 - 3 * np.sin(Xg) ** 2) * np.sin(Yg) ** 2 + 4 * Yg**2
    mask = gap > 1e-12
    nu_hat = float(np.min(gy[mask] ** 2 / (2 * gap[mask])))
    if nu_hat <= 0:
        raise ConfigError("grid PL estimate is not positive")
    return SinPLProblem(cx, cy, sigma, seed, nu_hat)


# -- inner maximization ----------------------------------------------------


def maximizer_oracle(problem, x, use_closed_form=True, tol=1e-10, cap=10**6):
    """argmax_y J(x, y) and the envelope value P(x).

    Quadratic problems use the closed form y = Sbar^{-1}(Rbar' x + bbar);
    anything else (or use_closed_form=False) falls back to gradient
    ascent with step 1/L_f.
    """
    if use_closed_form and isinstance(problem, QuadraticMinimaxProblem):
        y_opt = np.linalg.solve(problem.Sbar, problem.Rbar.T @ x + problem.bbar)
        return y_opt, problem.objective(x, y_opt)
    y = np.zeros(problem.d2)
    step = 1.0 / problem.constants.L_f
    for _ in range(cap):
        g = np.zeros(problem.d2)
        for k in range(problem.K):
            g += problem.exact_grad_y(k, x, y)
        g /= problem.K
        if np.max(np.abs(g)) <= tol and np.linalg.norm(g) <= tol:
            return y, problem.objective(x, y)
        y = y + step * g
    raise AscentCapError(
        f"inner ascent did not reach tol={tol} in {cap} steps",
        residual=float(np.linalg.norm(g)),
    )
