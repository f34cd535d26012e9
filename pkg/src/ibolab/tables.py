"""Exact finite-alphabet probability tables and stochastic kernels.

Everything downstream (worlds, objectives, bounds) is built from two
carriers: ``ProbTable``, an N-way joint/marginal over named finite axes,
and ``Kernel``, a row-stochastic conditional.  Both are immutable after
construction and validate normalization to 1e-12, so algebra on them can
assume well-formed inputs and stay total.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

NORM_TOL = 1e-12


class TableError(ValueError):
    """Invalid table/kernel construction or incompatible operands."""


class ZeroConditioningError(TableError):
    """Conditioning was requested on an event of probability zero."""


@dataclass(frozen=True)
class Alphabet:
    """A named finite support with one label per symbol."""

    name: str
    symbols: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.name:
            raise TableError("alphabet name must be nonempty")
        if len(self.symbols) < 1:
            raise TableError(f"alphabet {self.name!r} must have size >= 1")
        if len(set(self.symbols)) != len(self.symbols):
            raise TableError(f"alphabet {self.name!r} has duplicate symbol labels")
        object.__setattr__(self, "symbols", tuple(str(s) for s in self.symbols))

    @property
    def size(self) -> int:
        return len(self.symbols)

    def index(self, symbol: str) -> int:
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise TableError(f"symbol {symbol!r} not in alphabet {self.name!r}") from None

    def renamed(self, name: str) -> "Alphabet":
        return Alphabet(name, self.symbols)


def integer_alphabet(name: str, size: int) -> Alphabet:
    """Alphabet with symbols "0", "1", ..., str(size-1)."""
    return Alphabet(name, tuple(str(i) for i in range(size)))


def product_alphabet(name: str, first: Alphabet, second: Alphabet) -> Alphabet:
    """Alphabet over ordered pairs, e.g. feature-label observations x = (z, y).

    Symbol (i, j) sits at flat index i * second.size + j with label
    "(si|sj)", so pair components can be recovered by index arithmetic.
    """
    labels = tuple(
        f"({a}|{b})" for a in first.symbols for b in second.symbols
    )
    return Alphabet(name, labels)


def _freeze(values: np.ndarray) -> np.ndarray:
    out = np.array(values, dtype=np.float64, order="C", copy=True)
    out.setflags(write=False)
    return out


def _clean_mass(values: np.ndarray, what: str) -> np.ndarray:
    """Clamp negatives in [-NORM_TOL, 0) to zero; reject anything lower."""
    values = np.array(values, dtype=np.float64, copy=True)
    if not np.all(np.isfinite(values)):
        raise TableError(f"{what} contains non-finite entries")
    low = values.min() if values.size else 0.0
    if low < -NORM_TOL:
        idx = np.unravel_index(int(np.argmin(values)), values.shape)
        raise TableError(f"{what} has negative entry {low!r} at index {idx}")
    np.clip(values, 0.0, None, out=values)
    return values


@dataclass(frozen=True)
class ProbTable:
    """Probability mass over the Cartesian product of named axes.

    ``values`` is indexed in axis order; entries are >= 0 and sum to one
    (validated to 1e-12 on construction, then renormalized exactly).
    """

    axes: tuple[Alphabet, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        axes = tuple(self.axes)
        names = [a.name for a in axes]
        if len(set(names)) != len(names):
            raise TableError(f"duplicate axis names in table: {names}")
        shape = tuple(a.size for a in axes)
        vals = _clean_mass(np.asarray(self.values, dtype=np.float64), "probability table")
        if vals.shape != shape:
            raise TableError(f"values shape {vals.shape} does not match axes shape {shape}")
        total = math.fsum(vals.ravel().tolist())
        if abs(total - 1.0) > NORM_TOL:
            raise TableError(f"probabilities sum to {total!r}, off by {total - 1.0!r} (tolerance {NORM_TOL})")
        if total != 1.0:
            vals = vals / total
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", _freeze(vals))

    # -- introspection -----------------------------------------------------

    @property
    def axis_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.axes)

    def axis(self, name: str) -> Alphabet:
        for a in self.axes:
            if a.name == name:
                return a
        raise TableError(f"no axis named {name!r}; have {self.axis_names}")

    def axis_position(self, name: str) -> int:
        for i, a in enumerate(self.axes):
            if a.name == name:
                return i
        raise TableError(f"no axis named {name!r}; have {self.axis_names}")

    # -- algebra -----------------------------------------------------------

    def marginal(self, keep: str | Sequence[str]) -> "ProbTable":
        """Sum out every axis not listed in ``keep`` (original order kept)."""
        keep_set = {keep} if isinstance(keep, str) else set(keep)
        unknown = keep_set - set(self.axis_names)
        if unknown:
            raise TableError(f"unknown axes {sorted(unknown)}; have {self.axis_names}")
        drop = tuple(i for i, a in enumerate(self.axes) if a.name not in keep_set)
        kept = tuple(a for a in self.axes if a.name in keep_set)
        if not kept:
            raise TableError("marginal must keep at least one axis")
        vals = self.values.sum(axis=drop) if drop else self.values
        return ProbTable(kept, vals)

    def condition(self, target: str, given: str | Sequence[str]) -> "Kernel":
        """Exact conditional p(target | given) as a row-stochastic kernel.

        Axes outside ``target`` and ``given`` are marginalized out first.
        Raises ZeroConditioningError if any given-combination has zero mass,
        naming the offending event.
        """
        given_names = (given,) if isinstance(given, str) else tuple(given)
        if target in given_names:
            raise TableError(f"target axis {target!r} also appears in given axes")
        sub = self.marginal(list(given_names) + [target])
        # reorder to (given..., target)
        order = [sub.axis_position(n) for n in given_names] + [sub.axis_position(target)]
        vals = np.transpose(sub.values, order)
        row_sums = vals.sum(axis=-1)
        if np.any(row_sums <= 0.0):
            idx = np.unravel_index(int(np.argmin(row_sums)), row_sums.shape)
            event = ", ".join(
                f"{n}={self.axis(n).symbols[i]}" for n, i in zip(given_names, idx)
            )
            raise ZeroConditioningError(f"conditioning on zero-probability event ({event})")
        rows = vals / row_sums[..., None]
        return Kernel(tuple(self.axis(n) for n in given_names), self.axis(target), rows)

    def apply_map(self, axis: str, image_index: Sequence[int], new_axis: Alphabet) -> "ProbTable":
        """Push one axis through a deterministic symbol map (index form).

        ``image_index[i]`` is the index in ``new_axis`` of the image of
        symbol i.  The mapped axis keeps its position.
        """
        pos = self.axis_position(axis)
        old = self.axes[pos]
        image = tuple(int(i) for i in image_index)
        if len(image) != old.size or any(not 0 <= i < new_axis.size for i in image):
            raise TableError(f"image index must map all {old.size} symbols into {new_axis.name!r}")
        shape = list(self.values.shape)
        shape[pos] = new_axis.size
        out = np.zeros(shape)
        src = np.moveaxis(self.values, pos, 0)
        dst = np.moveaxis(out, pos, 0)
        for i, j in enumerate(image):
            dst[j] += src[i]
        axes = list(self.axes)
        axes[pos] = new_axis
        return ProbTable(tuple(axes), out)

    def to_json(self) -> str:
        doc = {
            "axes": [{"name": a.name, "symbols": list(a.symbols)} for a in self.axes],
            "values": self.values.ravel().tolist(),
        }
        return json.dumps(doc)

    @staticmethod
    def from_json(text: str) -> "ProbTable":
        return _table_from_doc(json.loads(text))


@dataclass(frozen=True)
class Kernel:
    """Row-stochastic conditional p(to_axis | from_axes).

    ``rows`` has shape ``from_sizes + (to_size,)``; every row sums to one
    within 1e-12 (then renormalized exactly).
    """

    from_axes: tuple[Alphabet, ...]
    to_axis: Alphabet
    rows: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        from_axes = tuple(self.from_axes)
        if not from_axes:
            raise TableError("kernel needs at least one source axis")
        names = [a.name for a in from_axes] + [self.to_axis.name]
        if len(set(names)) != len(names):
            raise TableError(f"duplicate axis names in kernel: {names}")
        shape = tuple(a.size for a in from_axes) + (self.to_axis.size,)
        rows = _clean_mass(np.asarray(self.rows, dtype=np.float64), "kernel rows")
        if rows.shape != shape:
            raise TableError(f"rows shape {rows.shape} does not match {shape}")
        flat = rows.reshape(-1, self.to_axis.size)
        sums = np.array([math.fsum(r.tolist()) for r in flat])
        bad = np.abs(sums - 1.0) > NORM_TOL
        if bad.any():
            i = int(np.argmax(bad))
            raise TableError(f"kernel row {i} sums to {sums[i]!r} (tolerance {NORM_TOL})")
        rows = rows / sums.reshape(rows.shape[:-1] + (1,))
        object.__setattr__(self, "from_axes", from_axes)
        object.__setattr__(self, "rows", _freeze(rows))

    @property
    def from_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.from_axes)

    def matrix(self) -> np.ndarray:
        """Rows reshaped to (prod of source sizes, to_size)."""
        return self.rows.reshape(-1, self.to_axis.size)

    def to_json(self) -> str:
        """Same document shape as ProbTable; the last axis is the target."""
        doc = {
            "axes": [
                {"name": a.name, "symbols": list(a.symbols)}
                for a in self.from_axes + (self.to_axis,)
            ],
            "values": self.rows.ravel().tolist(),
        }
        return json.dumps(doc)

    @staticmethod
    def from_json(text: str) -> "Kernel":
        return _kernel_from_doc(json.loads(text))


def _alphabet_from_doc(doc: dict) -> Alphabet:
    return Alphabet(str(doc["name"]), tuple(str(s) for s in doc["symbols"]))


def _table_from_doc(doc: dict) -> ProbTable:
    axes = tuple(_alphabet_from_doc(a) for a in doc["axes"])
    shape = tuple(a.size for a in axes)
    vals = np.array(doc["values"], dtype=np.float64).reshape(shape)
    return ProbTable(axes, vals)


def _kernel_from_doc(doc: dict) -> Kernel:
    axes = tuple(_alphabet_from_doc(a) for a in doc["axes"])
    if len(axes) < 2:
        raise TableError("kernel document needs at least a source and a target axis")
    from_axes, to_axis = axes[:-1], axes[-1]
    shape = tuple(a.size for a in axes)
    rows = np.array(doc["values"], dtype=np.float64).reshape(shape)
    return Kernel(from_axes, to_axis, rows)


def product_join(table: ProbTable, kernel: Kernel) -> ProbTable:
    """Chain-rule composition p(existing axes) * p(new axis | source axes).

    Every kernel source axis must already be an axis of ``table``; the
    kernel's target axis is appended as the last axis of the result.
    """
    if kernel.to_axis.name in table.axis_names:
        raise TableError(f"axis {kernel.to_axis.name!r} already present in table")
    positions = []
    for a in kernel.from_axes:
        p = table.axis_position(a.name)
        if table.axes[p].symbols != a.symbols:
            raise TableError(f"axis {a.name!r} has mismatched symbols between table and kernel")
        positions.append(p)
    # reorder kernel source dims to match their order within the table,
    # then reshape with broadcast dims of size 1 for the other table axes
    k = len(positions)
    order = sorted(range(k), key=lambda i: positions[i])
    perm = np.transpose(kernel.rows, axes=tuple(order) + (k,))
    shape = [1] * len(table.axes) + [kernel.to_axis.size]
    for src in order:
        shape[positions[src]] = kernel.from_axes[src].size
    bcast = perm.reshape(shape)
    joint = table.values[..., None] * bcast
    return ProbTable(table.axes + (kernel.to_axis,), joint)


def uniform_table(axis: Alphabet) -> ProbTable:
    return ProbTable((axis,), np.full(axis.size, 1.0 / axis.size))


def point_mass(axis: Alphabet, symbol: str | int) -> ProbTable:
    i = axis.index(symbol) if isinstance(symbol, str) else int(symbol)
    v = np.zeros(axis.size)
    v[i] = 1.0
    return ProbTable((axis,), v)
