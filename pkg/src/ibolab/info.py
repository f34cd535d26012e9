"""Exact entropy, KL divergence, and (conditional) mutual information.

All quantities are in nats and are computed by direct summation over the
table cells with compensated accumulation (math.fsum) in a fixed row-major
order, so repeated calls are bit-for-bit reproducible.  0*log 0 is 0, and
KL returns +inf on absolute-continuity failure instead of raising, so bound
comparisons stay total.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .tables import ProbTable

CLAMP_TOL = 1e-12

LN2 = math.log(2.0)


class InfoError(ValueError):
    """Invalid arguments to an information measure."""


def _clamp(value: float, what: str) -> float:
    """Snap tiny negative rounding residue to zero; larger negatives are bugs."""
    if value >= 0.0:
        return value
    if value >= -CLAMP_TOL:
        return 0.0
    raise InfoError(f"{what} came out {value!r} < -{CLAMP_TOL}; inputs are inconsistent")


def nats_to_bits(nats: float) -> float:
    return nats / LN2


def entropy(p: ProbTable) -> float:
    """Shannon entropy -sum p log p in nats over all cells of the table."""
    vals = p.values.ravel()
    terms = [-v * math.log(v) for v in vals.tolist() if v > 0.0]
    return _clamp(math.fsum(terms), "entropy")


def kl_divergence(p: ProbTable, q: ProbTable) -> float:
    """KL(p || q) in nats; +inf when p puts mass where q has none.

    The two tables must have identical axes (names, symbols, order).
    """
    if p.axes != q.axes:
        raise InfoError(f"axis mismatch: {p.axis_names} vs {q.axis_names}")
    terms = []
    for pv, qv in zip(p.values.ravel().tolist(), q.values.ravel().tolist()):
        if pv <= 0.0:
            continue
        if qv <= 0.0:
            return math.inf
        terms.append(pv * (math.log(pv) - math.log(qv)))
    return _clamp(math.fsum(terms), "KL divergence")


def _as_names(axes: str | Sequence[str]) -> tuple[str, ...]:
    return (axes,) if isinstance(axes, str) else tuple(axes)


def mutual_information(joint: ProbTable, axes_a: str | Sequence[str], axes_b: str | Sequence[str]) -> float:
    """I(A;B) = KL(joint || product of marginals), in nats.

    Axes outside A and B are marginalized out first.  The accumulation
    order depends only on the table's own axis order, so swapping A and B
    returns the identical float.
    """
    names_a, names_b = _as_names(axes_a), _as_names(axes_b)
    if set(names_a) & set(names_b):
        raise InfoError(f"axis sets overlap: {names_a} vs {names_b}")
    for n in names_a + names_b:
        joint.axis(n)  # raises on unknown axis
    keep = [n for n in joint.axis_names if n in set(names_a) | set(names_b)]
    sub = joint.marginal(keep)
    pa = sub.marginal([n for n in sub.axis_names if n in set(names_a)])
    pb = sub.marginal([n for n in sub.axis_names if n in set(names_b)])
    # broadcast each marginal over the joint sub-table's shape
    shape_a = [a.size if a.name in set(names_a) else 1 for a in sub.axes]
    shape_b = [a.size if a.name in set(names_b) else 1 for a in sub.axes]
    prod = pa.values.reshape(shape_a) * pb.values.reshape(shape_b)
    terms = []
    for pv, mv in zip(sub.values.ravel().tolist(), prod.ravel().tolist()):
        if pv > 0.0:
            terms.append(pv * (math.log(pv) - math.log(mv)))
    return _clamp(math.fsum(terms), "mutual information")


def conditional_mutual_information(
    joint: ProbTable,
    axes_a: str | Sequence[str],
    axes_b: str | Sequence[str],
    axes_c: str | Sequence[str] = (),
) -> float:
    """I(A;B|C) via the chain rule I(A; B,C) - I(A;C), from exact marginals."""
    names_a, names_b, names_c = _as_names(axes_a), _as_names(axes_b), _as_names(axes_c)
    for x, y in ((names_a, names_b), (names_a, names_c), (names_b, names_c)):
        if set(x) & set(y):
            raise InfoError(f"axis sets overlap: {x} vs {y}")
    if not names_c:
        return mutual_information(joint, names_a, names_b)
    i_a_bc = mutual_information(joint, names_a, names_b + names_c)
    i_a_c = mutual_information(joint, names_a, names_c)
    return _clamp(i_a_bc - i_a_c, "conditional mutual information")
