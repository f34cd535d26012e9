"""Self-information of deterministic maps, discrete and quantized-continuous.

For discrete X the exact I(X; f(X)) is H(f(X)) — which collapses to 0 for a
constant map and equals H(X) only when f is injective.  For continuous X the
quantity diverges; that is exhibited numerically by quantizing a unit-interval
density to k bins, pushing it through f, and watching the exact discrete MI
grow without bound along a refining bin schedule.  All bin masses come from
closed-form CDF differences, so every reported value is exact summation, not
sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .info import entropy, mutual_information
from .tables import Alphabet, ProbTable, TableError, integer_alphabet


@dataclass(frozen=True)
class DeterministicMap:
    """Total map between finite alphabets, stored as an image index table."""

    domain: Alphabet
    codomain: Alphabet
    table: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.table) != self.domain.size:
            raise TableError("map table must cover the whole domain")
        if any(not 0 <= i < self.codomain.size for i in self.table):
            raise TableError("map table points outside the codomain")

    @staticmethod
    def from_symbols(domain: Alphabet, codomain: Alphabet, mapping: dict[str, str]) -> "DeterministicMap":
        table = tuple(codomain.index(mapping[s]) for s in domain.symbols)
        return DeterministicMap(domain, codomain, table)

    @staticmethod
    def from_function(domain: Alphabet, codomain: Alphabet, fn: Callable[[int], int]) -> "DeterministicMap":
        return DeterministicMap(domain, codomain, tuple(int(fn(i)) for i in range(domain.size)))

    @property
    def injective(self) -> bool:
        return len(set(self.table)) == len(self.table)


@dataclass(frozen=True)
class SelfInfoResult:
    I: float
    H_X: float
    H_fX: float


def discrete_self_info(p_x: ProbTable, f: DeterministicMap) -> SelfInfoResult:
    """Exact I(X; f(X)) together with H(X) and H(f(X)).

    The joint p(x, f(x)) is diagonal along the map, so the value always
    equals H(f(X)); both entropies are returned so a caller can see how far
    that is from H(X) for non-injective maps.
    """
    if len(p_x.axes) != 1 or p_x.axes[0].symbols != f.domain.symbols:
        raise TableError("p_x must be a one-axis table over the map's domain")
    dom = p_x.axes[0]
    cod = f.codomain if f.codomain.name != dom.name else f.codomain.renamed("f_" + dom.name)
    joint = np.zeros((dom.size, cod.size))
    for i, j in enumerate(f.table):
        joint[i, j] += p_x.values[i]
    jt = ProbTable((dom, cod), joint)
    return SelfInfoResult(
        I=mutual_information(jt, dom.name, cod.name),
        H_X=entropy(p_x),
        H_fX=entropy(jt.marginal(cod.name)),
    )


# -- unit-interval densities with closed-form CDFs -----------------------------


@dataclass(frozen=True)
class Uniform01:
    name: str = "uniform01"

    def cdf(self, u: float) -> float:
        return min(max(u, 0.0), 1.0)


@dataclass(frozen=True)
class Triangular01:
    """Symmetric triangular density on [0,1] with mode 1/2."""

    name: str = "triangular01"

    def cdf(self, u: float) -> float:
        u = min(max(u, 0.0), 1.0)
        if u <= 0.5:
            return 2.0 * u * u
        return 1.0 - 2.0 * (1.0 - u) * (1.0 - u)


@dataclass(frozen=True)
class TruncatedGaussian:
    mu: float
    sigma: float
    name: str = "truncated_gaussian"

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def _phi(self, z: float) -> float:
        return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))

    def cdf(self, u: float) -> float:
        u = min(max(u, 0.0), 1.0)
        lo = self._phi((0.0 - self.mu) / self.sigma)
        hi = self._phi((1.0 - self.mu) / self.sigma)
        return (self._phi((u - self.mu) / self.sigma) - lo) / (hi - lo)


def density_by_name(name: str, **kwargs):
    if name == "uniform01":
        return Uniform01()
    if name == "triangular01":
        return Triangular01()
    if name == "truncated_gaussian":
        return TruncatedGaussian(float(kwargs.get("mu", 0.5)), float(kwargs.get("sigma", 0.25)))
    raise ValueError(f"unknown density {name!r}")


# -- piecewise-monotone unit-interval maps -------------------------------------


@dataclass(frozen=True)
class MonotonePiece:
    lo: float
    hi: float
    fwd: Callable[[float], float]
    inv: Callable[[float], float]


@dataclass(frozen=True)
class ConstantPiece:
    lo: float
    hi: float
    value: float


@dataclass(frozen=True)
class UnitMap:
    """A piecewise map of [0,1] with invertible or constant pieces."""

    name: str
    pieces: tuple
    out_lo: float
    out_hi: float


def identity_map() -> UnitMap:
    return UnitMap("identity", (MonotonePiece(0.0, 1.0, lambda u: u, lambda v: v),), 0.0, 1.0)


def affine_map(a: float, b: float) -> UnitMap:
    if a == 0:
        raise ValueError("affine map needs a != 0 (use a constant piece instead)")
    ends = (b, a + b)
    return UnitMap(
        f"affine({a},{b})",
        (MonotonePiece(0.0, 1.0, lambda u: a * u + b, lambda v: (v - b) / a),),
        min(ends),
        max(ends),
    )


def square_map() -> UnitMap:
    return UnitMap("square", (MonotonePiece(0.0, 1.0, lambda u: u * u, lambda v: math.sqrt(max(v, 0.0))),), 0.0, 1.0)


def floor_halves_map() -> UnitMap:
    """Non-injective step map u -> floor(2u)/2 (two constant plateaus)."""
    return UnitMap(
        "floor_halves",
        (ConstantPiece(0.0, 0.5, 0.0), ConstantPiece(0.5, 1.0, 0.5)),
        0.0,
        0.5,
    )


def map_by_name(name: str, **kwargs) -> UnitMap:
    if name == "identity":
        return identity_map()
    if name == "affine":
        return affine_map(float(kwargs.get("a", 1.0)), float(kwargs.get("b", 0.0)))
    if name == "square":
        return square_map()
    if name == "floor_halves":
        return floor_halves_map()
    raise ValueError(f"unknown map {name!r}")


@dataclass(frozen=True)
class QuantizationSpec:
    density: object
    unit_map: UnitMap
    bin_counts: tuple[int, ...]

    def __post_init__(self) -> None:
        ks = tuple(int(k) for k in self.bin_counts)
        if not ks or any(k < 2 for k in ks):
            raise ValueError("bin counts must all be >= 2")
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise ValueError("bin counts must be strictly increasing")
        object.__setattr__(self, "bin_counts", ks)


@dataclass(frozen=True)
class DivergenceRow:
    k: int
    I: float
    H_X: float
    H_fX: float


def _out_bin(v: float, lo: float, hi: float, k: int) -> int:
    w = (hi - lo) / k
    j = int(math.floor((v - lo) / w)) if w > 0 else 0
    return min(max(j, 0), k - 1)


def quantized_joint(density, unit_map: UnitMap, k: int) -> np.ndarray:
    """Exact joint of (input bin, output bin) masses via CDF differences.

    Input bins are k equal-width intervals of [0,1]; output bins are k
    equal-width intervals of the map's range.  Each input-bin/piece
    intersection is cut at the preimages of the output-bin edges, so every
    cut segment lands in a single output bin.
    """
    lo, hi = unit_map.out_lo, unit_map.out_hi
    joint = np.zeros((k, k))
    out_edges = [lo + j * (hi - lo) / k for j in range(1, k)]
    for i in range(k):
        u0, u1 = i / k, (i + 1) / k
        for piece in unit_map.pieces:
            a, b = max(u0, piece.lo), min(u1, piece.hi)
            if b <= a:
                continue
            if isinstance(piece, ConstantPiece):
                j = _out_bin(piece.value, lo, hi, k)
                joint[i, j] += density.cdf(b) - density.cdf(a)
                continue
            cuts = [a, b]
            v_a, v_b = piece.fwd(a), piece.fwd(b)
            v_min, v_max = min(v_a, v_b), max(v_a, v_b)
            # output edges are evenly spaced, so only a contiguous index
            # range can fall inside the piece's value span on this bin
            w = (hi - lo) / k
            j_lo = max(int(math.floor((v_min - lo) / w)), 0)
            j_hi = min(int(math.ceil((v_max - lo) / w)) + 1, k - 1)
            for jj in range(j_lo, j_hi + 1):
                if not 1 <= jj <= k - 1:
                    continue
                e = out_edges[jj - 1]
                if not v_min < e < v_max:
                    continue
                u = piece.inv(e)
                if a < u < b:
                    cuts.append(u)
            cuts.sort()
            for c0, c1 in zip(cuts, cuts[1:]):
                if c1 <= c0:
                    continue
                j = _out_bin(piece.fwd(0.5 * (c0 + c1)), lo, hi, k)
                joint[i, j] += density.cdf(c1) - density.cdf(c0)
    return joint


def quantized_mi_divergence(spec: QuantizationSpec) -> list[DivergenceRow]:
    """Exact discrete MI of (quantized X, quantized f(X)) per bin count."""
    rows = []
    for k in spec.bin_counts:
        joint = quantized_joint(spec.density, spec.unit_map, k)
        x_axis = integer_alphabet("x_bin", k)
        f_axis = integer_alphabet("f_bin", k)
        jt = ProbTable((x_axis, f_axis), joint)
        rows.append(
            DivergenceRow(
                k=k,
                I=mutual_information(jt, "x_bin", "f_bin"),
                H_X=entropy(jt.marginal("x_bin")),
                H_fX=entropy(jt.marginal("f_bin")),
            )
        )
    return rows


def divergence_log_slope(rows: Sequence[DivergenceRow]) -> float:
    """Least-squares slope of I against ln k: the divergence-rate summary.

    Identity maps on uniform input give slope exactly 1; any positive slope
    over a refining schedule is the numerical signature of unbounded
    self-information in the continuum limit.
    """
    if len(rows) < 2:
        raise ValueError("need at least two bin counts to fit a slope")
    xs = np.array([math.log(r.k) for r in rows])
    ys = np.array([r.I for r in rows])
    xc = xs - xs.mean()
    return float((xc @ (ys - ys.mean())) / (xc @ xc))


DIVERGENCE_CSV_HEADER = "k,I_nats,H_X_nats,H_fX_nats"


def divergence_to_csv(rows: Sequence[DivergenceRow]) -> str:
    from .engine import fmt12

    lines = [DIVERGENCE_CSV_HEADER]
    for r in rows:
        lines.append(",".join([str(r.k), fmt12(r.I), fmt12(r.H_X), fmt12(r.H_fX)]))
    return "\n".join(lines) + "\n"
