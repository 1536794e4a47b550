"""Aggregation (distribution) matrices mapping high- to low-frequency periods."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError


class AggMode(str, enum.Enum):
    SUM = "sum"
    AVERAGE = "average"
    FIRST = "first"
    LAST = "last"


@dataclass(frozen=True)
class AggregationSpec:
    """How ``n_high`` high-frequency periods map onto ``n_low`` observations.

    Periods beyond ``n_low * ratio`` form the extrapolation region: they get
    all-zero columns in the aggregation matrix.
    """

    mode: AggMode
    ratio: int
    n_low: int
    n_high: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", AggMode(self.mode))
        for name in ("ratio", "n_low"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise DomainError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        n_high = self.n_low * self.ratio if self.n_high is None else self.n_high
        if int(n_high) != n_high:
            raise DomainError(f"n_high must be an integer, got {n_high!r}")
        n_high = int(n_high)
        if n_high < self.n_low * self.ratio:
            raise DomainError(
                f"n_high={n_high} is smaller than n_low*ratio={self.n_low * self.ratio}"
            )
        object.__setattr__(self, "n_high", n_high)

    @property
    def n_observed(self) -> int:
        """Number of high-frequency periods covered by a benchmark."""
        return self.n_low * self.ratio

    @property
    def n_extrapolated(self) -> int:
        return self.n_high - self.n_observed

    def block_weights(self) -> np.ndarray:
        w = np.zeros(self.ratio)
        if self.mode is AggMode.SUM:
            w[:] = 1.0
        elif self.mode is AggMode.AVERAGE:
            w[:] = 1.0 / self.ratio
        elif self.mode is AggMode.FIRST:
            w[0] = 1.0
        else:
            w[-1] = 1.0
        return w


def build_aggregation_matrix(spec: AggregationSpec) -> np.ndarray:
    """Return ``C = I_{n_low} (x) w`` padded with zero columns for extrapolation."""
    C = np.zeros((spec.n_low, spec.n_high))
    C[:, : spec.n_observed] = np.kron(np.eye(spec.n_low), spec.block_weights())
    return C


def aggregate(values, spec: AggregationSpec):
    """Apply ``C`` to a series or to every column of a panel.

    A pandas DataFrame keeps its column labels; any other input is returned
    as an ndarray.
    """
    columns = getattr(values, "columns", None)
    arr = np.asarray(values, dtype=float)
    if arr.ndim not in (1, 2):
        raise ShapeError(f"expected a vector or matrix, got {arr.ndim} dimensions")
    if arr.shape[0] != spec.n_high:
        raise ShapeError(
            f"input has {arr.shape[0]} rows, aggregation expects n_high={spec.n_high}"
        )
    out = build_aggregation_matrix(spec) @ arr
    if columns is not None:
        return type(values)(out, columns=columns)
    return out


def _apply_rows(spec: AggregationSpec, arr: np.ndarray) -> np.ndarray:
    """``C @ arr`` via the block structure; avoids the dense ``n_low x n_high`` product."""
    blocks = arr[: spec.n_observed].reshape((spec.n_low, spec.ratio) + arr.shape[1:])
    if spec.mode is AggMode.SUM:
        return blocks.sum(axis=1)
    if spec.mode is AggMode.AVERAGE:
        return blocks.mean(axis=1)
    if spec.mode is AggMode.FIRST:
        return blocks[:, 0].copy()
    return blocks[:, -1].copy()


def _congruence(spec: AggregationSpec, S: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(S @ C.T, C @ S @ C.T)`` for a symmetric ``S``."""
    SCt = _apply_rows(spec, S).T
    return SCt, _apply_rows(spec, SCt)
