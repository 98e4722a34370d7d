"""
Cone algebra for the interior-point solver.

Each cone exposes the Jordan product, the identity, Nesterov-Todd scaling,
the inverse product with a scaled point, and the maximum step keeping a point
inside the cone. PSD blocks use the svec convention with sqrt(2) weights on
the off-diagonal so that svec(U)^T svec(V) = tr(UV).
"""

from abc import ABC, abstractmethod

import numpy as np
from scipy import linalg

from ..models.cone import ConeBlock, ConeKind, ConeProgram


class Scaling:
    """
    Nesterov-Todd scaling of one cone block at a primal-dual pair (s, z).

    ``W`` is stored as a 1-D diagonal for the orthant and as a dense matrix
    otherwise; ``lam`` equals W z = W^-T s. ``lam_jnorm`` is lam_0^2 - |lam_1|^2
    for second-order blocks, computed from s and z rather than from lam.
    """

    def __init__(
        self,
        W: np.ndarray,
        W_inv: np.ndarray,
        lam: np.ndarray,
        eigenvalues: np.ndarray | None = None,
        lam_jnorm: float | None = None,
    ) -> None:
        self.W = W
        self.W_inv = W_inv
        self.lam = lam
        self.eigenvalues = eigenvalues
        self.lam_jnorm = lam_jnorm

    @property
    def is_diagonal(self) -> bool:
        return self.W.ndim == 1

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self._mul(self.W, v, transpose=False)

    def apply_t(self, v: np.ndarray) -> np.ndarray:
        return self._mul(self.W, v, transpose=True)

    def apply_inv(self, v: np.ndarray) -> np.ndarray:
        return self._mul(self.W_inv, v, transpose=False)

    def apply_inv_t(self, v: np.ndarray) -> np.ndarray:
        return self._mul(self.W_inv, v, transpose=True)

    def _mul(self, M: np.ndarray, v: np.ndarray, transpose: bool) -> np.ndarray:
        if M.ndim == 1:
            return M[:, None] * v if v.ndim == 2 else M * v
        return (M.T if transpose else M) @ v


class Cone(ABC):
    """Interface shared by all cone implementations."""

    def __init__(self, dim: int) -> None:
        self.dim = dim

    @property
    @abstractmethod
    def degree(self) -> int: ...

    @abstractmethod
    def identity(self) -> np.ndarray: ...

    @abstractmethod
    def min_eig(self, x: np.ndarray) -> float:
        """Signed distance-like measure; positive iff x is interior."""

    @abstractmethod
    def jordan(self, u: np.ndarray, v: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def scaling(self, s: np.ndarray, z: np.ndarray) -> Scaling: ...

    @abstractmethod
    def inv_prod(self, scaling: Scaling, v: np.ndarray) -> np.ndarray:
        """Solve lam o x = v for x."""

    @abstractmethod
    def max_step(self, x: np.ndarray, d: np.ndarray) -> float:
        """Largest alpha with x + alpha d in the cone (inf when unbounded)."""


class NonnegCone(Cone):
    @property
    def degree(self) -> int:
        return self.dim

    def identity(self) -> np.ndarray:
        return np.ones(self.dim)

    def min_eig(self, x: np.ndarray) -> float:
        return float(np.min(x))

    def jordan(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return u * v

    def scaling(self, s: np.ndarray, z: np.ndarray) -> Scaling:
        if np.any(s <= 0.0) or np.any(z <= 0.0):
            raise np.linalg.LinAlgError("point left the nonnegative orthant")
        w = np.sqrt(s / z)
        return Scaling(W=w, W_inv=1.0 / w, lam=np.sqrt(s * z))

    def inv_prod(self, scaling: Scaling, v: np.ndarray) -> np.ndarray:
        return v / scaling.lam

    def max_step(self, x: np.ndarray, d: np.ndarray) -> float:
        neg = d < 0.0
        if not np.any(neg):
            return np.inf
        return float(np.min(-x[neg] / d[neg]))


class SecondOrderCone(Cone):
    @property
    def degree(self) -> int:
        return 1

    def identity(self) -> np.ndarray:
        e = np.zeros(self.dim)
        e[0] = 1.0
        return e

    def min_eig(self, x: np.ndarray) -> float:
        return float(x[0] - np.linalg.norm(x[1:]))

    def jordan(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        out = np.empty(self.dim)
        out[0] = u @ v
        out[1:] = u[0] * v[1:] + v[0] * u[1:]
        return out

    @staticmethod
    def _jnorm(x: np.ndarray) -> float:
        r = float(np.linalg.norm(x[1:]))
        return float((x[0] - r) * (x[0] + r))

    def scaling(self, s: np.ndarray, z: np.ndarray) -> Scaling:
        s_j, z_j = self._jnorm(s), self._jnorm(z)
        if s_j <= 0.0 or z_j <= 0.0 or s[0] <= 0.0 or z[0] <= 0.0:
            raise np.linalg.LinAlgError("point left the second-order cone")
        s_bar = s / np.sqrt(s_j)
        z_bar = z / np.sqrt(z_j)
        gamma = np.sqrt(max(1.0, (1.0 + s_bar @ z_bar) / 2.0))
        jz = z_bar.copy()
        jz[1:] = -jz[1:]
        w = (s_bar + jz) / (2.0 * gamma)
        beta = (s_j / z_j) ** 0.25

        w0, w1 = w[0], w[1:]
        W_bar = np.empty((self.dim, self.dim))
        W_bar[0, 0] = w0
        W_bar[0, 1:] = w1
        W_bar[1:, 0] = w1
        W_bar[1:, 1:] = np.eye(self.dim - 1) + np.outer(w1, w1) / (1.0 + w0)

        J = np.ones(self.dim)
        J[1:] = -1.0
        W_inv_bar = J[:, None] * W_bar * J[None, :]
        W = beta * W_bar

        # lam = W z in closed form; W @ z cancels badly near the boundary.
        lam_bar = np.empty(self.dim)
        lam_bar[0] = gamma
        lam_bar[1:] = ((gamma + z_bar[0]) * s_bar[1:] + (gamma + s_bar[0]) * z_bar[1:]) / (
            s_bar[0] + z_bar[0] + 2.0 * gamma
        )
        lam_jnorm = float(np.sqrt(s_j * z_j))
        return Scaling(
            W=W,
            W_inv=W_inv_bar / beta,
            lam=np.sqrt(lam_jnorm) * lam_bar,
            lam_jnorm=lam_jnorm,
        )

    def inv_prod(self, scaling: Scaling, v: np.ndarray) -> np.ndarray:
        lam = scaling.lam
        det = self._jnorm(lam) if scaling.lam_jnorm is None else scaling.lam_jnorm
        if not (det > 0.0 and lam[0] > 0.0):
            raise np.linalg.LinAlgError("scaled point left the second-order cone")
        out = np.empty(self.dim)
        out[0] = (lam[0] * v[0] - lam[1:] @ v[1:]) / det
        out[1:] = (v[1:] - out[0] * lam[1:]) / lam[0]
        return out

    def max_step(self, x: np.ndarray, d: np.ndarray) -> float:
        x_j = self._jnorm(x)
        if x_j <= 0.0:
            return 0.0
        x_bar = x / np.sqrt(x_j)
        x0, x1 = x_bar[0], x_bar[1:]
        # Lorentz boost taking x_bar to the identity.
        u0 = x0 * d[0] - x1 @ d[1:]
        u1 = -x1 * d[0] + d[1:] + x1 * (x1 @ d[1:]) / (1.0 + x0)
        u0 /= np.sqrt(x_j)
        u1 /= np.sqrt(x_j)
        rate = float(np.linalg.norm(u1) - u0)
        return np.inf if rate <= 0.0 else 1.0 / rate


class PsdCone(Cone):
    def __init__(self, order: int) -> None:
        super().__init__(order * (order + 1) // 2)
        self.order = order
        self._rows, self._cols = np.tril_indices(order)
        self._weights = np.where(self._rows == self._cols, 1.0, np.sqrt(2.0))
        P = np.zeros((order * order, self.dim))
        for k, (i, j) in enumerate(zip(self._rows, self._cols, strict=True)):
            if i == j:
                P[i * order + i, k] = 1.0
            else:
                P[i * order + j, k] = P[j * order + i, k] = 1.0 / np.sqrt(2.0)
        self._P = P

    @property
    def degree(self) -> int:
        return self.order

    def svec(self, U: np.ndarray) -> np.ndarray:
        return U[self._rows, self._cols] * self._weights

    def smat(self, u: np.ndarray) -> np.ndarray:
        U = np.zeros((self.order, self.order))
        U[self._rows, self._cols] = u / self._weights
        return U + np.tril(U, -1).T

    def identity(self) -> np.ndarray:
        return self.svec(np.eye(self.order))

    def min_eig(self, x: np.ndarray) -> float:
        return float(linalg.eigvalsh(self.smat(x))[0])

    def jordan(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        U, V = self.smat(u), self.smat(v)
        return self.svec((U @ V + V @ U) / 2.0)

    def _congruence(self, R: np.ndarray) -> np.ndarray:
        """Matrix of the map svec(U) -> svec(R^T U R)."""
        return self._P.T @ np.kron(R.T, R.T) @ self._P

    def scaling(self, s: np.ndarray, z: np.ndarray) -> Scaling:
        L1 = linalg.cholesky(self.smat(s), lower=True)
        L2 = linalg.cholesky(self.smat(z), lower=True)
        _, sv, Vt = linalg.svd(L2.T @ L1)
        R = L1 @ Vt.T / np.sqrt(sv)[None, :]
        R_inv = np.sqrt(sv)[:, None] * linalg.solve_triangular(
            L1.T, Vt.T, lower=False
        ).T
        return Scaling(
            W=self._congruence(R),
            W_inv=self._congruence(R_inv),
            lam=self.svec(np.diag(sv)),
            eigenvalues=sv,
        )

    def inv_prod(self, scaling: Scaling, v: np.ndarray) -> np.ndarray:
        assert scaling.eigenvalues is not None
        ev = scaling.eigenvalues
        return self.svec(2.0 * self.smat(v) / (ev[:, None] + ev[None, :]))

    def max_step(self, x: np.ndarray, d: np.ndarray) -> float:
        try:
            L = linalg.cholesky(self.smat(x), lower=True)
        except linalg.LinAlgError:
            return 0.0
        M = linalg.solve_triangular(L, self.smat(d), lower=True)
        M = linalg.solve_triangular(L, M.T, lower=True)
        lam_min = float(linalg.eigvalsh((M + M.T) / 2.0)[0])
        return np.inf if lam_min >= 0.0 else -1.0 / lam_min


def make_cone(block: ConeBlock) -> Cone:
    """Instantiate the cone implementation of a block."""
    if block.kind == ConeKind.NONNEG:
        return NonnegCone(block.dim)
    if block.kind == ConeKind.SECOND_ORDER:
        return SecondOrderCone(block.dim)
    assert block.order is not None
    return PsdCone(block.order)


def conic_margin(program: ConeProgram, x: np.ndarray) -> float:
    """
    Feasibility margin of a primal point.

    Smallest cone eigenvalue of h - G x, reduced by the largest equality
    residual. Non-negative when x is feasible.
    """
    x = np.asarray(x, dtype=float)
    s = program.h - program.G @ x
    margin = min(
        (make_cone(block).min_eig(s[rows]) for block, rows in program.cone_slices()),
        default=np.inf,
    )
    if program.num_equalities:
        margin -= float(np.max(np.abs(program.A @ x - program.b)))
    return float(margin)
