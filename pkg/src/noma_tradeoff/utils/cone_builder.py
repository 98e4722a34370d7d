"""
Incremental construction of ConeProgram instances from affine expressions.

Example:
    >>> builder = ConeProgramBuilder()
    >>> x = builder.add_variable("x", 2)
    >>> builder.soc(Affine.constant(1.0), [x[0], x[1]])
    >>> builder.maximize(x[0] + x[1])
    >>> program = builder.build()
"""

from collections.abc import Iterable, Sequence
from typing import Union

import numpy as np

from ..exceptions import ValidationError
from ..models.cone import ConeBlock, ConeKind, ConeProgram
from .envelope import secant_lines

Scalar = Union[int, float, np.floating]


class Affine:
    """Sparse affine expression sum_j coef_j x_j + const."""

    __slots__ = ("terms", "const")

    def __init__(self, terms: dict[int, float] | None = None, const: float = 0.0) -> None:
        self.terms = terms or {}
        self.const = float(const)

    @classmethod
    def constant(cls, value: Scalar) -> "Affine":
        return cls({}, float(value))

    @classmethod
    def linear(cls, indices: Iterable[int], coefs: Iterable[float]) -> "Affine":
        terms: dict[int, float] = {}
        for j, a in zip(indices, coefs, strict=True):
            if a != 0.0:
                terms[int(j)] = terms.get(int(j), 0.0) + float(a)
        return cls(terms)

    def _combine(self, other: "Affine | Scalar", sign: float) -> "Affine":
        if not isinstance(other, Affine):
            return Affine(dict(self.terms), self.const + sign * float(other))
        terms = dict(self.terms)
        for j, a in other.terms.items():
            terms[j] = terms.get(j, 0.0) + sign * a
        return Affine(terms, self.const + sign * other.const)

    def __add__(self, other: "Affine | Scalar") -> "Affine":
        return self._combine(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other: "Affine | Scalar") -> "Affine":
        return self._combine(other, -1.0)

    def __rsub__(self, other: "Affine | Scalar") -> "Affine":
        return (-self)._combine(other, 1.0)

    def __neg__(self) -> "Affine":
        return self * -1.0

    def __mul__(self, k: Scalar) -> "Affine":
        k = float(k)
        return Affine({j: k * a for j, a in self.terms.items()}, k * self.const)

    __rmul__ = __mul__

    def __truediv__(self, k: Scalar) -> "Affine":
        return self * (1.0 / float(k))

    def value(self, x: np.ndarray) -> float:
        return self.const + sum(a * float(x[j]) for j, a in self.terms.items())

    def dense(self, n: int) -> np.ndarray:
        row = np.zeros(n)
        for j, a in self.terms.items():
            row[j] += a
        return row


def dot(coefs: Sequence[float] | np.ndarray, exprs: Sequence[Affine]) -> Affine:
    """Linear combination sum_k coefs_k exprs_k."""
    out = Affine()
    for a, e in zip(coefs, exprs, strict=True):
        if a != 0.0:
            out = out + e * float(a)
    return out


class VariableBlock:
    """Contiguous block of scalar variables."""

    def __init__(self, name: str, start: int, size: int) -> None:
        self.name = name
        self.start = start
        self.size = size

    def __len__(self) -> int:
        return self.size

    def __getitem__(self, k: int) -> Affine:
        if not -self.size <= k < self.size:
            raise IndexError(f"{self.name}[{k}] out of range")
        return Affine({self.start + (k % self.size): 1.0})

    def __iter__(self):  # type: ignore[no-untyped-def]
        return (self[k] for k in range(self.size))

    @property
    def indices(self) -> range:
        return range(self.start, self.start + self.size)

    @property
    def slice(self) -> slice:
        return slice(self.start, self.start + self.size)


class ConeProgramBuilder:
    """
    Collects variables, linear rows and cone constraints.

    Orthant rows are emitted as one leading NONNEG block; second-order and
    PSD blocks follow in insertion order.
    """

    def __init__(self) -> None:
        self._blocks: dict[str, VariableBlock] = {}
        self._n = 0
        self._le: list[Affine] = []
        self._eq: list[Affine] = []
        self._conic: list[tuple[ConeBlock, list[Affine]]] = []
        self._objective = Affine()

    @property
    def num_variables(self) -> int:
        return self._n

    def add_variable(self, name: str, size: int) -> VariableBlock:
        if name in self._blocks:
            raise ValidationError(f"Variable block already defined: {name}")
        if size < 1:
            raise ValidationError(f"Variable block {name} must be non-empty")
        block = VariableBlock(name, self._n, size)
        self._blocks[name] = block
        self._n += size
        return block

    def block(self, name: str) -> VariableBlock:
        return self._blocks[name]

    def has(self, name: str) -> bool:
        return name in self._blocks

    def le(self, lhs: Affine | Scalar, rhs: Affine | Scalar) -> None:
        """lhs <= rhs."""
        self._le.append(_as_affine(lhs) - rhs)

    def ge(self, lhs: Affine | Scalar, rhs: Affine | Scalar) -> None:
        """lhs >= rhs."""
        self._le.append(_as_affine(rhs) - lhs)

    def eq(self, lhs: Affine | Scalar, rhs: Affine | Scalar) -> None:
        self._eq.append(_as_affine(lhs) - rhs)

    def bounds(
        self, var: VariableBlock, lower: float | None = None, upper: float | None = None
    ) -> None:
        for e in var:
            if lower is not None:
                self.ge(e, lower)
            if upper is not None:
                self.le(e, upper)

    def soc(self, t: Affine | Scalar, u: Sequence[Affine | Scalar]) -> None:
        """t >= ||u||_2."""
        entries = [_as_affine(t)] + [_as_affine(e) for e in u]
        self._conic.append(
            (ConeBlock(kind=ConeKind.SECOND_ORDER, dim=len(entries)), entries)
        )

    def rotated_soc(
        self, x: Sequence[Affine | Scalar], y: Affine | Scalar, z: Affine | Scalar
    ) -> None:
        """||x||^2 <= y z with y, z >= 0, written as ||(2x, y - z)|| <= y + z."""
        y, z = _as_affine(y), _as_affine(z)
        self.soc(y + z, [_as_affine(e) * 2.0 for e in x] + [y - z])

    def psd(self, entries: Sequence[Affine], order: int) -> None:
        """svec(entries) in the PSD cone of order ``order``."""
        self._conic.append(
            (ConeBlock(kind=ConeKind.PSD, dim=len(entries), order=order), list(entries))
        )

    def exp_upper_envelope(
        self,
        z: Affine,
        rho: Affine,
        rho_lo: float,
        rho_hi: float,
        pieces: int,
        with_box: bool = True,
    ) -> None:
        """Secant inner approximation of z >= 2^rho with rho in [rho_lo, rho_hi]."""
        slopes, intercepts = secant_lines(rho_lo, rho_hi, pieces)
        for slope, intercept in zip(slopes, intercepts, strict=True):
            self.ge(z, rho * float(slope) + float(intercept))
        if with_box:
            self.ge(rho, rho_lo)
            self.le(rho, rho_hi)

    def maximize(self, objective: Affine | Scalar) -> None:
        self._objective = _as_affine(objective)

    def build(self) -> ConeProgram:
        n = self._n
        cones: list[ConeBlock] = []
        G_rows: list[np.ndarray] = []
        h: list[float] = []

        if self._le:
            cones.append(ConeBlock(kind=ConeKind.NONNEG, dim=len(self._le)))
            for e in self._le:
                # e <= 0  ->  g = coef(e), h = -const(e)
                G_rows.append(e.dense(n))
                h.append(-e.const)
        for block, entries in self._conic:
            cones.append(block)
            for e in entries:
                # s = e  ->  G = -coef(e), h = const(e)
                G_rows.append(-e.dense(n))
                h.append(e.const)

        return ConeProgram(
            c=self._objective.dense(n),
            G=np.array(G_rows).reshape(-1, n),
            h=np.array(h),
            A=np.array([e.dense(n) for e in self._eq]).reshape(-1, n),
            b=np.array([-e.const for e in self._eq]),
            cones=cones,
            variable_names={
                name: (blk.start, blk.start + blk.size)
                for name, blk in self._blocks.items()
            },
        )


def _as_affine(e: Affine | Scalar) -> Affine:
    return e if isinstance(e, Affine) else Affine.constant(e)
