"""Alternative-hypothesis parameters (gamma, R) and subset noncentralities.

A point of the alternative is described scale-free: gamma_j = mu_j / sqrt(sigma_jj)
and R is the correlation matrix. The noncentrality of the T^2 statistic built
from the coordinates in omega is Lambda_omega = N gamma_omega' R_omega^{-1} gamma_omega.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .specfun import DomainError

__all__ = [
    "P_MAX",
    "PIVOT_TOL",
    "SingularMatrixError",
    "AlternativeSpec",
    "SubsetMask",
    "IntraclassSpec",
    "PATTERNS",
    "enumerate_subsets",
    "cholesky_checked",
    "lambda_subset",
    "intraclass_lambdas",
    "intraclass_inverse_quadform",
    "intraclass_corr",
    "bivariate_spec",
    "load_spec",
]

P_MAX = 64
PIVOT_TOL = 1e-10
PATTERNS = ("case1", "case2", "case3", "case4")


class SingularMatrixError(DomainError):
    """A correlation (sub)matrix is not numerically positive definite."""


def cholesky_checked(a: np.ndarray, tol: float = PIVOT_TOL) -> np.ndarray:
    """Lower Cholesky factor, rejecting any pivot L_ii^2 below ``tol``."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    L = np.zeros_like(a)
    for j in range(n):
        piv = a[j, j] - L[j, :j] @ L[j, :j]
        if not piv >= tol:
            raise SingularMatrixError(f"Cholesky pivot {piv:.3g} < {tol:g} at index {j}")
        L[j, j] = math.sqrt(piv)
        if j + 1 < n:
            L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def _chol_quadform(L: np.ndarray, v: np.ndarray) -> float:
    # v' (L L')^{-1} v = |L^{-1} v|^2 by forward substitution
    n = len(v)
    z = np.empty(n)
    for i in range(n):
        z[i] = (v[i] - L[i, :i] @ z[:i]) / L[i, i]
    return float(z @ z)


@dataclass(frozen=True)
class SubsetMask:
    """Nonempty subset of {0, ..., p-1}; bit j set means coordinate j is included."""

    bits: int
    p: int

    def __post_init__(self):
        if not 1 <= self.p <= P_MAX:
            raise DomainError(f"p must lie in [1, {P_MAX}], got {self.p}")
        if self.bits <= 0 or self.bits >> self.p:
            raise DomainError(f"bitmask {self.bits} is not a nonempty subset of {self.p} coordinates")

    @classmethod
    def from_indices(cls, indices, p: int) -> "SubsetMask":
        bits = 0
        for i in indices:
            if not 0 <= i < p:
                raise DomainError(f"index {i} outside 0..{p - 1}")
            bits |= 1 << int(i)
        return cls(bits, p)

    @classmethod
    def full(cls, p: int) -> "SubsetMask":
        return cls((1 << p) - 1, p)

    @property
    def size(self) -> int:
        return bin(self.bits).count("1")

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(j for j in range(self.p) if self.bits >> j & 1)

    def __str__(self):
        return "{" + ",".join(str(j + 1) for j in self.indices) + "}"


def enumerate_subsets(p: int) -> Iterator[SubsetMask]:
    """All nonempty subsets ordered by size, then by bitmask value."""
    masks = sorted(range(1, 1 << p), key=lambda b: (bin(b).count("1"), b))
    for b in masks:
        yield SubsetMask(b, p)


@dataclass(frozen=True)
class AlternativeSpec:
    p: int
    N: int
    gamma: tuple
    corr: tuple = field(repr=False)

    def __post_init__(self):
        if isinstance(self.p, bool) or not isinstance(self.p, (int, np.integer)) or not 1 <= self.p <= P_MAX:
            raise DomainError(f"p must be an integer in [1, {P_MAX}], got {self.p!r}")
        if isinstance(self.N, bool) or not isinstance(self.N, (int, np.integer)) or self.N < self.p + 1:
            raise DomainError(f"N must be an integer >= p + 1 = {self.p + 1}, got {self.N!r}")
        g = np.asarray(self.gamma, dtype=float)
        R = np.asarray(self.corr, dtype=float)
        if g.shape != (self.p,):
            raise DomainError(f"gamma must have length {self.p}, got shape {g.shape}")
        if R.shape != (self.p, self.p):
            raise DomainError(f"corr must be {self.p}x{self.p}, got shape {R.shape}")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(R))):
            raise DomainError("gamma and corr must be finite")
        if not np.allclose(R, R.T, atol=1e-12, rtol=0):
            raise DomainError("corr must be symmetric")
        if not np.allclose(np.diag(R), 1.0, atol=1e-12, rtol=0):
            raise DomainError("corr must have unit diagonal")
        cholesky_checked(R)
        # store as tuples so the dataclass stays hashable and immutable
        object.__setattr__(self, "gamma", tuple(float(x) for x in g))
        object.__setattr__(self, "corr", tuple(tuple(float(x) for x in row) for row in R))

    @classmethod
    def from_arrays(cls, gamma, corr, N: int) -> "AlternativeSpec":
        g = np.asarray(gamma, dtype=float)
        return cls(len(g), int(N), tuple(g), tuple(map(tuple, np.asarray(corr, dtype=float))))

    @classmethod
    def from_mean_cov(cls, mu, sigma, N: int) -> "AlternativeSpec":
        """Standardize (mu, Sigma) to the scale-free (gamma, R) form."""
        mu = np.asarray(mu, dtype=float)
        sigma = np.asarray(sigma, dtype=float)
        s = np.sqrt(np.diag(sigma))
        return cls.from_arrays(mu / s, sigma / np.outer(s, s), N)

    @classmethod
    def from_dict(cls, d: dict) -> "AlternativeSpec":
        if "intraclass" in d:
            ic = d["intraclass"]
            spec = IntraclassSpec(int(ic["p"]), float(ic["rho"]), str(ic["pattern"]), float(ic["delta"]))
            return spec.to_alternative(int(d.get("N", spec.p + 2)))
        try:
            spec = cls.from_arrays(d["gamma"], d["corr"], int(d["N"]))
        except KeyError as exc:
            raise DomainError(f"spec is missing field {exc.args[0]!r}") from None
        if "p" in d and int(d["p"]) != spec.p:
            raise DomainError(f"p={d['p']} does not match gamma of length {spec.p}")
        return spec

    def to_dict(self) -> dict:
        return {"p": self.p, "N": self.N, "gamma": list(self.gamma), "corr": [list(r) for r in self.corr]}

    @property
    def gamma_array(self) -> np.ndarray:
        return np.array(self.gamma)

    @property
    def corr_array(self) -> np.ndarray:
        return np.array(self.corr)

    def lambda_full(self) -> float:
        return lambda_subset(self, SubsetMask.full(self.p))


def load_spec(path) -> AlternativeSpec:
    with open(Path(path)) as fh:
        return AlternativeSpec.from_dict(json.load(fh))


def lambda_subset(spec: AlternativeSpec, omega: SubsetMask) -> float:
    """Lambda_omega = N gamma_omega' R_omega^{-1} gamma_omega via a Cholesky solve."""
    if omega.p != spec.p:
        raise DomainError(f"subset is over {omega.p} coordinates, spec has p={spec.p}")
    idx = list(omega.indices)
    g = spec.gamma_array[idx]
    if not np.any(g):
        return 0.0
    L = cholesky_checked(spec.corr_array[np.ix_(idx, idx)])
    return spec.N * _chol_quadform(L, g)


def bivariate_spec(gamma1: float, eta: float, rho: float, N: int = 3) -> AlternativeSpec:
    """p = 2 alternative with gamma = (gamma1, eta gamma1) and correlation rho."""
    return AlternativeSpec.from_arrays([gamma1, eta * gamma1], [[1.0, rho], [rho, 1.0]], N)


def _check_rho(p, rho):
    lo = -1.0 / (p - 1) if p > 1 else -math.inf
    if not lo < rho < 1.0:
        raise DomainError(f"rho={rho} outside the feasible range ({lo:.6g}, 1) for p={p}")


def intraclass_corr(p: int, rho: float) -> np.ndarray:
    """R_rho = (1 - rho) I + rho e e'."""
    _check_rho(p, rho)
    return (1.0 - rho) * np.eye(p) + rho * np.ones((p, p))


@dataclass(frozen=True)
class IntraclassSpec:
    """Intraclass correlation with one of four mean patterns.

    case1: every gamma_j = delta; case2: gamma_1 = gamma_2 = delta, rest 0;
    case3: gamma_1 = delta, gamma_2 = -delta, rest 0; case4: first half delta,
    second half -delta (p even).
    """

    p: int
    rho: float
    pattern: str
    delta: float

    def __post_init__(self):
        if not 2 <= self.p <= P_MAX:
            raise DomainError(f"p must lie in [2, {P_MAX}], got {self.p}")
        if self.pattern not in PATTERNS:
            raise DomainError(f"pattern must be one of {PATTERNS}, got {self.pattern!r}")
        _check_rho(self.p, self.rho)
        if self.pattern == "case4" and self.p % 2:
            raise DomainError("case4 needs an even p")

    def gamma(self) -> np.ndarray:
        g = np.zeros(self.p)
        d = self.delta
        if self.pattern == "case1":
            g[:] = d
        elif self.pattern == "case2":
            g[:2] = d
        elif self.pattern == "case3":
            g[0], g[1] = d, -d
        else:
            h = self.p // 2
            g[:h], g[h:] = d, -d
        return g

    def to_alternative(self, N: int | None = None) -> AlternativeSpec:
        return AlternativeSpec.from_arrays(self.gamma(), intraclass_corr(self.p, self.rho),
                                           self.p + 2 if N is None else N)


def intraclass_lambdas(spec: IntraclassSpec) -> tuple[float, float]:
    """(Lambda^(2), Lambda) for the four patterns at N = p + 2.

    Lambda^(2) is the noncentrality of the best pair under the closed forms used
    for the region tables. For case2 it is the pair carrying both nonzero means;
    when rho > 1/2 a mixed pair (one mean, one zero) does better, so this value
    is then a lower bound on the true pair maximum.
    """
    p, r, d2 = spec.p, spec.rho, spec.delta ** 2
    c = (p + 2) * d2
    if spec.pattern == "case1":
        return 2 * c / (1 + r), p * c / (1 + (p - 1) * r)
    if spec.pattern == "case2":
        return 2 * c / (1 + r), 2 * c * (1 + (p - 3) * r) / ((1 - r) * (1 + (p - 1) * r))
    if spec.pattern == "case3":
        return 2 * c / (1 - r), 2 * c / (1 - r)
    return 2 * c / (1 - abs(r)), p * c / (1 - r)


def intraclass_inverse_quadform(p: int, rho: float, v) -> float:
    """v' R_rho^{-1} v from the closed-form inverse."""
    _check_rho(p, rho)
    v = np.asarray(v, dtype=float)
    if v.shape != (p,):
        raise DomainError(f"v must have length {p}")
    s = v.sum()
    return float((v @ v - rho * s * s / (1.0 + rho * (p - 1))) / (1.0 - rho))
