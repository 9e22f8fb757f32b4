"""Admissible impurity functions over class-count vectors.

Every function here depends on a set of examples only through its class
counts ``n_i``.  Values are exact integers whenever the function is integral
(threshold-pairs, powers, polynomials with integer coefficients), so the
risk comparisons made during tree growth never see rounding ties.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

PAIRS = "pairs"
POWERS = "powers"
POLYNOMIAL = "polynomial"
KINDS = (PAIRS, POWERS, POLYNOMIAL)

# int64 fast path is only taken when every intermediate provably fits
_INT64_SAFE = 2**62


class ImpurityOverflowError(OverflowError):
    """A floating-point impurity evaluation left the finite range."""


@dataclass(frozen=True)
class ImpuritySpec:
    """Selects one member of the admissible family.

    ``alpha`` parameterizes threshold-pairs, ``l`` the powers function and
    ``terms`` (pairs of coefficient and exponent vector) the polynomial one.
    ``alpha_sq_offset`` switches threshold-pairs to the variant that also
    subtracts ``alpha**2`` inside the outer hinge.
    """

    kind: str = PAIRS
    alpha: int = 0
    l: int = 2
    terms: tuple = field(default=())
    alpha_sq_offset: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown impurity kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == PAIRS:
            if int(self.alpha) != self.alpha or self.alpha < 0:
                raise ValueError(f"alpha must be a non-negative integer, got {self.alpha!r}")
        elif self.kind == POWERS:
            if int(self.l) != self.l or self.l < 2:
                raise ValueError(f"l must be an integer >= 2, got {self.l!r}")
        else:
            if not self.terms:
                raise ValueError("polynomial impurity needs at least one term")
            norm = []
            for coef, exps in self.terms:
                exps = tuple(int(e) for e in exps)
                if coef < 0:
                    raise ValueError(f"polynomial coefficient must be >= 0, got {coef!r}")
                if any(e < 0 for e in exps):
                    raise ValueError(f"exponents must be non-negative, got {exps}")
                if sum(1 for e in exps if e) < 2:
                    raise ValueError(
                        f"each term needs >= 2 nonzero exponents (no singleton terms), got {exps}"
                    )
                norm.append((coef, exps))
            object.__setattr__(self, "terms", tuple(norm))

    @classmethod
    def pairs(cls, alpha: int = 0, alpha_sq_offset: bool = False) -> "ImpuritySpec":
        return cls(kind=PAIRS, alpha=alpha, alpha_sq_offset=alpha_sq_offset)

    @classmethod
    def powers(cls, l: int = 2) -> "ImpuritySpec":
        return cls(kind=POWERS, l=l)

    @classmethod
    def polynomial(cls, terms) -> "ImpuritySpec":
        return cls(kind=POLYNOMIAL, terms=tuple(terms))

    def to_dict(self) -> dict:
        if self.kind == PAIRS:
            return {"kind": PAIRS, "alpha": int(self.alpha),
                    "alpha_sq_offset": bool(self.alpha_sq_offset)}
        if self.kind == POWERS:
            return {"kind": POWERS, "l": int(self.l)}
        return {"kind": POLYNOMIAL,
                "terms": [[c, list(e)] for c, e in self.terms]}

    @classmethod
    def from_dict(cls, d: dict) -> "ImpuritySpec":
        kind = d["kind"]
        if kind == PAIRS:
            return cls.pairs(int(d.get("alpha", 0)), bool(d.get("alpha_sq_offset", False)))
        if kind == POWERS:
            return cls.powers(int(d["l"]))
        if kind == POLYNOMIAL:
            return cls.polynomial((c, tuple(e)) for c, e in d["terms"])
        raise ValueError(f"unknown impurity kind {kind!r}")

    def __str__(self):
        if self.kind == PAIRS:
            suffix = ",offset" if self.alpha_sq_offset else ""
            return f"pairs(alpha={self.alpha}{suffix})"
        if self.kind == POWERS:
            return f"powers(l={self.l})"
        return f"polynomial({len(self.terms)} terms)"


def _check_counts(counts: Sequence[int]) -> list[int]:
    out = [int(c) for c in counts]
    if any(c < 0 for c in out):
        raise ValueError(f"class counts must be non-negative, got {list(counts)}")
    return out


def threshold_pairs(counts: Sequence[int], alpha: int, alpha_sq_offset: bool = False) -> int:
    """Sum over unordered class pairs of the hinged product of hinged counts.

    >>> threshold_pairs((30, 30), 0)
    900
    >>> threshold_pairs((30, 30), 8)
    484
    """
    h = [max(c - alpha, 0) for c in _check_counts(counts)]
    off = alpha * alpha if alpha_sq_offset else 0
    total = 0
    for i in range(len(h)):
        for j in range(i + 1, len(h)):
            total += max(h[i] * h[j] - off, 0)
    return total


def powers(counts: Sequence[int], l: int) -> int:
    """``(sum n_i)**l - sum n_i**l``."""
    c = _check_counts(counts)
    return sum(c) ** l - sum(x**l for x in c)


def _padded(counts: list, exps: tuple) -> tuple[list, tuple]:
    k = max(len(counts), len(exps))
    return counts + [0] * (k - len(counts)), exps + (0,) * (k - len(exps))


def polynomial(counts: Sequence[int], terms) -> int | float:
    """Evaluate ``sum_i coef_i * prod_j n_j**p_ij``.

    Exponent vectors shorter than the count vector are zero-padded (and vice
    versa, absent classes count as zero).
    """
    c = _check_counts(counts)
    total = 0
    for coef, exps in terms:
        cc, ee = _padded(c, tuple(exps))
        prod = coef
        for n, p in zip(cc, ee):
            if p:
                prod = prod * n**p
        total += prod
    if isinstance(total, float) and not np.isfinite(total):
        raise ImpurityOverflowError(f"polynomial impurity overflowed at counts {c}")
    return total


def impurity(spec: ImpuritySpec, counts: Sequence[int]) -> int | float:
    """Evaluate ``spec`` on a single count vector."""
    if spec.kind == PAIRS:
        return threshold_pairs(counts, spec.alpha, spec.alpha_sq_offset)
    if spec.kind == POWERS:
        return powers(counts, spec.l)
    return polynomial(counts, spec.terms)


def _degree_bound(spec: ImpuritySpec, max_total: int) -> int | float:
    """Upper bound on any intermediate produced for counts summing to ``max_total``."""
    t = max(int(max_total), 1)
    if spec.kind == PAIRS:
        return t * t
    if spec.kind == POWERS:
        return t**spec.l
    return sum(abs(c) * t ** sum(e) for c, e in spec.terms)


def impurity_batch(spec: ImpuritySpec, counts: np.ndarray) -> np.ndarray:
    """Evaluate ``spec`` row-wise on an ``(N, k)`` count matrix.

    Uses int64 arithmetic when the result provably fits, otherwise falls back
    to exact Python integers (object dtype).  Float polynomial coefficients
    produce float64 results and raise :class:`ImpurityOverflowError` if any
    value is not finite.
    """
    C = np.asarray(counts)
    if C.ndim != 2:
        raise ValueError("counts must be a 2-D (N, k) array")
    if C.size and C.min() < 0:
        raise ValueError("class counts must be non-negative")
    N, k = C.shape
    max_total = int(C.sum(axis=1).max()) if N else 0
    bound = _degree_bound(spec, max_total)
    if spec.kind == PAIRS:
        bound = bound * max(k * (k - 1) // 2, 1)
    is_float = spec.kind == POLYNOMIAL and any(isinstance(c, float) for c, _ in spec.terms)
    if is_float:
        C = C.astype(np.float64)
    elif bound < _INT64_SAFE:
        C = C.astype(np.int64)
    else:
        C = C.astype(object)

    if spec.kind == PAIRS:
        a = spec.alpha
        H = np.maximum(C - a, 0)
        if not spec.alpha_sq_offset or a == 0:
            s = H.sum(axis=1)
            out = (s * s - (H * H).sum(axis=1)) // 2
        else:
            out = np.zeros(N, dtype=C.dtype)
            for i in range(k):
                for j in range(i + 1, k):
                    out = out + np.maximum(H[:, i] * H[:, j] - a * a, 0)
        return out
    if spec.kind == POWERS:
        l = spec.l
        return C.sum(axis=1) ** l - (C**l).sum(axis=1)

    out = np.zeros(N, dtype=C.dtype)
    for coef, exps in spec.terms:
        exps = tuple(exps)
        if any(exps[k:]):
            # factor on a class absent from this matrix, so the term is zero
            continue
        exps = exps[:k] + (0,) * max(0, k - len(exps))
        prod = np.full(N, coef, dtype=C.dtype) if C.dtype != object else np.array([coef] * N, dtype=object)
        with np.errstate(over="ignore", invalid="ignore"):
            for j, p in enumerate(exps):
                if p:
                    prod = prod * C[:, j] ** p
            out = out + prod
    if is_float and not np.all(np.isfinite(out)):
        raise ImpurityOverflowError("polynomial impurity overflowed in batch evaluation")
    return out
