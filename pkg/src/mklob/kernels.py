"""The sixteen-kernel bank and Gram matrix construction.

Bank order (1-based kernel index):

* 1-5   RBF ``exp(-||x - x'||^2 / sigma_sq)``
* 6-10  polynomial ``(<x, x'> + 1) ** d``
* 11-15 arcsine network kernel with ``Sigma = c * I``
* 16    linear ``<x, x'>``
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

RBF, POLYNOMIAL, ARCSIN_NET, LINEAR = "rbf", "polynomial", "arcsin_net", "linear"
KINDS = (RBF, POLYNOMIAL, ARCSIN_NET, LINEAR)

RBF_MULTIPLIERS = (0.25, 0.5, 1.0, 2.0, 4.0)
POLY_DEGREES = (1, 2, 3, 4, 5)
NET_VARIANCES = (0.1, 0.5, 1.0, 5.0, 10.0)
BANK_SIZE = 16

_PARAMS = {RBF: "rbf_sigma_sq", POLYNOMIAL: "poly_degree", ARCSIN_NET: "net_variance", LINEAR: None}


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    rbf_sigma_sq: Optional[float] = None
    poly_degree: Optional[int] = None
    net_variance: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        wanted = _PARAMS[self.kind]
        for name in ("rbf_sigma_sq", "poly_degree", "net_variance"):
            value = getattr(self, name)
            if name == wanted:
                if value is None or not value > 0:
                    raise ValueError(f"{self.kind} kernel needs a positive {name}")
            elif value is not None:
                raise ValueError(f"{name} is not a parameter of the {self.kind} kernel")
        if self.kind == POLYNOMIAL and int(self.poly_degree) != self.poly_degree:
            raise ValueError("poly_degree must be an integer")

    def label(self) -> str:
        if self.kind == RBF:
            return f"RBF(sigma^2={self.rbf_sigma_sq:.4g})"
        if self.kind == POLYNOMIAL:
            return f"Poly(d={self.poly_degree})"
        if self.kind == ARCSIN_NET:
            return f"ANN(c={self.net_variance:.4g})"
        return "Linear"


@dataclass(frozen=True)
class GramMatrix:
    values: np.ndarray

    @property
    def row_count(self) -> int:
        return self.values.shape[0]

    @property
    def col_count(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class KernelBank:
    specs: tuple

    def __post_init__(self):
        specs = tuple(self.specs)
        object.__setattr__(self, "specs", specs)
        kinds = [s.kind for s in specs]
        if kinds != [RBF] * 5 + [POLYNOMIAL] * 5 + [ARCSIN_NET] * 5 + [LINEAR]:
            raise ValueError("bank must hold RBF x5, Polynomial x5, ArcsinNet x5, Linear in that order")

    def __len__(self) -> int:
        return len(self.specs)

    def __getitem__(self, i: int) -> KernelSpec:
        return self.specs[i]

    def __iter__(self):
        return iter(self.specs)


def _as_rows(a) -> np.ndarray:
    values = getattr(a, "values", a)
    return np.atleast_2d(np.asarray(values, dtype=float))


def _kernel_block(A: np.ndarray, B: np.ndarray, spec: KernelSpec) -> np.ndarray:
    dots = A @ B.T
    if spec.kind == LINEAR:
        return dots
    if spec.kind == POLYNOMIAL:
        return (dots + 1.0) ** int(spec.poly_degree)
    if spec.kind == RBF:
        sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * dots
        return np.exp(-np.maximum(sq, 0.0) / spec.rbf_sigma_sq)
    c = spec.net_variance
    na = 1.0 + 2.0 * c * (A * A).sum(axis=1)
    nb = 1.0 + 2.0 * c * (B * B).sum(axis=1)
    ratio = 2.0 * c * dots / np.sqrt(na[:, None] * nb[None, :])
    return (2.0 / np.pi) * np.arcsin(np.clip(ratio, -1.0, 1.0))


def kernel_eval(x, x_prime, spec: KernelSpec) -> float:
    x = np.asarray(x, dtype=float).ravel()
    x_prime = np.asarray(x_prime, dtype=float).ravel()
    if x.shape != x_prime.shape:
        raise ValueError(f"dimension mismatch: {x.size} vs {x_prime.size}")
    if spec.kind == RBF:
        d = x - x_prime
        return float(np.exp(-(d @ d) / spec.rbf_sigma_sq))
    if spec.kind == POLYNOMIAL:
        return float((x @ x_prime + 1.0) ** int(spec.poly_degree))
    if spec.kind == LINEAR:
        return float(x @ x_prime)
    c = spec.net_variance
    num = 2.0 * c * (x @ x_prime)
    den = np.sqrt((1.0 + 2.0 * c * (x @ x)) * (1.0 + 2.0 * c * (x_prime @ x_prime)))
    return float((2.0 / np.pi) * np.arcsin(np.clip(num / den, -1.0, 1.0)))


def gram(a, b, spec: KernelSpec) -> GramMatrix:
    """Kernel matrix between rows of ``a`` and rows of ``b``.

    Passing the same object twice yields an exactly symmetric matrix built from
    the upper triangle.
    """
    A = _as_rows(a)
    same = b is a
    B = A if same else _as_rows(b)
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    K = _kernel_block(A, B, spec)
    if same:
        upper = np.triu(K)
        K = upper + np.triu(K, 1).T
        if spec.kind == RBF:
            np.fill_diagonal(K, 1.0)
    return GramMatrix(K)


def median_sq_distance(rows) -> float:
    """Median squared Euclidean distance over distinct row pairs."""
    X = _as_rows(rows)
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least 2 rows for a pairwise median")
    sq = (X * X).sum(axis=1)
    D = sq[:, None] + sq[None, :] - 2.0 * X @ X.T
    iu = np.triu_indices(n, k=1)
    return float(np.median(np.maximum(D[iu], 0.0)))


def default_kernel_bank(
    train,
    rbf_multipliers: Sequence[float] = RBF_MULTIPLIERS,
    poly_degrees: Sequence[int] = POLY_DEGREES,
    net_variances: Sequence[float] = NET_VARIANCES,
) -> KernelBank:
    """Bank with RBF widths set by the median heuristic on ``train`` (fallback 1)."""
    X = _as_rows(train)
    if X.shape[0] < 2:
        raise ValueError("default_kernel_bank needs at least 2 train rows")
    if not (len(rbf_multipliers) == len(poly_degrees) == len(net_variances) == 5):
        raise ValueError("each kernel family needs exactly 5 hyperparameter values")
    m = median_sq_distance(X)
    if not m > 0:
        m = 1.0
    specs = [KernelSpec(RBF, rbf_sigma_sq=m * f) for f in rbf_multipliers]
    specs += [KernelSpec(POLYNOMIAL, poly_degree=int(d)) for d in poly_degrees]
    specs += [KernelSpec(ARCSIN_NET, net_variance=float(c)) for c in net_variances]
    specs.append(KernelSpec(LINEAR))
    return KernelBank(tuple(specs))
