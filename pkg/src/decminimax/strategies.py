"""Design-matrix triples (A, B, C) for the decentralized strategies.

Each strategy materializes three K x K polynomials in the mixing matrix
W. They act on K x d block iterates along the agent axis only, which is
equivalent to applying (M kron I_d) to the stacked vector.

Strategy rows:
    ED          A = W      B = (I - W)^{1/2}   C = I
    EXTRA       A = I      B = (I - W)^{1/2}   C = W
    ATC-GT      A = W^2    B = I - W           C = I
    semi-ATC-GT A = W      B = I - W           C = W
    non-ATC-GT  A = I      B = I - W           C = W^2
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import NotPSDError
from .mixing import MixingMatrix, sqrt_psd


class StrategyKind(Enum):
    ED = "ed"
    EXTRA = "extra"
    ATC_GT = "atc_gt"
    SEMI_ATC_GT = "semi_atc_gt"
    NON_ATC_GT = "non_atc_gt"


# strategies whose B = (I - W)^{1/2} requires W to be PSD
SQRT_STRATEGIES = (StrategyKind.ED, StrategyKind.EXTRA)


@dataclass(frozen=True)
class StrategyOps:
    kind: StrategyKind
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray


def build_strategy(kind: StrategyKind, mixing: MixingMatrix) -> StrategyOps:
    W = mixing.W
    K = W.shape[0]
    I = np.eye(K)
    if kind in SQRT_STRATEGIES:
        if not mixing.is_psd:
            raise NotPSDError(
                f"{kind.value} needs a PSD mixing matrix "
                f"(min eigenvalue {np.min(mixing.eigvals):.3e}); use lazy weights"
            )
        B = sqrt_psd(I - W)
    else:
        B = I - W
    if kind == StrategyKind.ED:
        A, C = W, I
    elif kind == StrategyKind.EXTRA:
        A, C = I, W
    elif kind == StrategyKind.ATC_GT:
        A, C = W @ W, I
    elif kind == StrategyKind.SEMI_ATC_GT:
        A, C = W, W
    elif kind == StrategyKind.NON_ATC_GT:
        A, C = I, W @ W
    else:
        raise ValueError(f"unknown strategy {kind!r}")
    return StrategyOps(kind=kind, A=A, B=B, C=C)


def apply(M: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Apply a K x K operator to a K x d block vector on the agent axis."""
    if M.shape[1] != V.shape[0]:
        raise ValueError(f"shape mismatch: {M.shape} @ {V.shape}")
    return M @ V


@dataclass(frozen=True)
class StrategyReport:
    res_A_ones: float
    res_C_ones: float
    res_ones_B: float
    res_B_squared: float | None
    passed: bool


def verify_strategy_assumptions(ops: StrategyOps, mixing: MixingMatrix,
                                tol: float = 1e-10) -> StrategyReport:
    """Residuals of A*1 = 1, C*1 = 1, 1^T B = 0, and (for the square-root
    strategies) the B^2 = I - W reconstruction."""
    K = ops.A.shape[0]
    ones = np.ones(K)
    res_a = float(np.max(np.abs(ops.A @ ones - ones)))
    res_c = float(np.max(np.abs(ops.C @ ones - ones)))
    res_b = float(np.max(np.abs(ones @ ops.B)))
    res_b2 = None
    if ops.kind in SQRT_STRATEGIES:
        res_b2 = float(
            np.linalg.norm(ops.B @ ops.B - (np.eye(K) - mixing.W))
        )
    checks = [res_a, res_c, res_b] + ([res_b2] if res_b2 is not None else [])
    return StrategyReport(
        res_A_ones=res_a,
        res_C_ones=res_c,
        res_ones_B=res_b,
        res_B_squared=res_b2,
        passed=all(r <= tol for r in checks),
    )
