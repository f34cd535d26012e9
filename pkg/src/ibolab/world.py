"""Finite generative worlds: latent process -> iid past/future observations -> code.

A world is a prior over a latent process variable plus an observation
channel; datasets of a fixed length become one composite axis whose symbols
are ordered tuples of base symbols.  ``build_joint`` assembles the exact
four-axis joint (process, past data, future data, code) for any encoder and
is the single entry point every objective and bound evaluates through.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .info import conditional_mutual_information, entropy, mutual_information
from .tables import Alphabet, Kernel, ProbTable, TableError, integer_alphabet, product_join

DEFAULT_CELL_BUDGET = 10**7

PHI, XP, XF, T = "phi", "xP", "xF", "t"


class BudgetExceededError(RuntimeError):
    """Exact enumeration would exceed the configured cell budget."""


@dataclass(frozen=True)
class GenerativeWorld:
    """Prior p(process), observation channel p(x|process), dataset sizes."""

    phi_prior: ProbTable
    obs_channel: Kernel
    train_size: int
    future_size: int = 0
    cell_budget: int = DEFAULT_CELL_BUDGET

    def __post_init__(self) -> None:
        if len(self.phi_prior.axes) != 1:
            raise TableError("phi_prior must be a one-axis table")
        if self.obs_channel.from_names != (self.phi_axis.name,):
            raise TableError(
                f"obs_channel must condition on {self.phi_axis.name!r}, got {self.obs_channel.from_names}"
            )
        if self.train_size < 1:
            raise TableError("train_size must be >= 1")
        if self.future_size < 0:
            raise TableError("future_size must be >= 0")
        cells = self.phi_axis.size * self.x_axis.size ** (self.train_size + self.future_size)
        if cells > self.cell_budget:
            raise BudgetExceededError(
                f"world enumeration needs {cells} cells, budget is {self.cell_budget}"
            )

    @property
    def phi_axis(self) -> Alphabet:
        return self.phi_prior.axes[0]

    @property
    def x_axis(self) -> Alphabet:
        return self.obs_channel.to_axis

    def past_axis(self) -> "DatasetAxis":
        return DatasetAxis.build(self.x_axis, self.train_size, XP)

    def future_axis(self) -> "DatasetAxis":
        return DatasetAxis.build(self.x_axis, self.future_size, XF)

    def xp_marginal(self) -> np.ndarray:
        """Exact p(past dataset) as a flat vector over the composite axis."""
        k = iid_kernel(self.phi_axis, self.obs_channel, self.past_axis())
        return self.phi_prior.values @ k.matrix()


@dataclass(frozen=True)
class DatasetAxis:
    """Composite alphabet over ordered tuples of base symbols.

    Symbols are tuples in lexicographic index order, so the axis ordering
    is deterministic and symbol i decodes to ``index_tuple(i)``.
    """

    base: Alphabet
    length: int
    axis: Alphabet

    @staticmethod
    def build(base: Alphabet, length: int, name: str) -> "DatasetAxis":
        if length < 0:
            raise TableError("dataset length must be >= 0")
        labels = [
            "(" + ",".join(base.symbols[i] for i in idx) + ")"
            for idx in itertools.product(range(base.size), repeat=length)
        ]
        return DatasetAxis(base, length, Alphabet(name, tuple(labels)))

    @property
    def size(self) -> int:
        return self.axis.size

    def index_tuple(self, flat: int) -> tuple[int, ...]:
        """Decode a composite index into base indices, leftmost sample first."""
        out = []
        for _ in range(self.length):
            flat, r = divmod(flat, self.base.size)
            out.append(r)
        return tuple(reversed(out))

    def tuples(self) -> list[tuple[int, ...]]:
        return list(itertools.product(range(self.base.size), repeat=self.length))


def iid_kernel(phi_axis: Alphabet, channel: Kernel, ds: DatasetAxis) -> Kernel:
    """Kernel process -> dataset axis: rows are products of per-sample rows."""
    per = channel.rows  # (|phi|, |X|)
    rows = np.ones((phi_axis.size, 1))
    for _ in range(ds.length):
        rows = (rows[:, :, None] * per[:, None, :]).reshape(phi_axis.size, -1)
    return Kernel((phi_axis,), ds.axis, rows)


@dataclass(frozen=True)
class FullJoint:
    """Exact joint over (process, past, [future], code) plus its provenance."""

    joint: ProbTable
    world: GenerativeWorld
    encoder: Kernel

    @property
    def has_future(self) -> bool:
        return XF in self.joint.axis_names

    @property
    def t_name(self) -> str:
        return self.encoder.to_axis.name


@dataclass(frozen=True)
class InfoReport:
    """The five information quantities every objective is built from (nats)."""

    I_t_xP: float
    I_t_xF: float
    I_t_xP_given_xF: float
    I_t_xPxF: float
    H_xP: float


def build_joint(world: GenerativeWorld, encoder: Kernel) -> FullJoint:
    """Compose p(phi) * p(past|phi) * p(future|phi) * p(code|past) exactly.

    With future_size == 0 the result has axes (phi, xP, t) only.  The
    encoder's source axis must equal the world's past dataset axis.
    """
    past = world.past_axis()
    if encoder.from_names != (XP,):
        raise TableError(f"encoder must condition on {XP!r}, got {encoder.from_names}")
    if encoder.from_axes[0].symbols != past.axis.symbols:
        raise TableError(
            f"encoder source axis has {encoder.from_axes[0].size} symbols, "
            f"world's past dataset axis has {past.axis.size}"
        )
    t_axis = encoder.to_axis
    cells = world.phi_axis.size * past.size * t_axis.size
    if world.future_size > 0:
        cells *= world.x_axis.size**world.future_size
    if cells > world.cell_budget:
        raise BudgetExceededError(
            f"joint needs {cells} cells, budget is {world.cell_budget}"
        )
    joint = product_join(world.phi_prior, iid_kernel(world.phi_axis, world.obs_channel, past))
    if world.future_size > 0:
        joint = product_join(joint, iid_kernel(world.phi_axis, world.obs_channel, world.future_axis()))
    joint = product_join(joint, encoder)
    return FullJoint(joint, world, encoder)


def info_report(fj: FullJoint) -> InfoReport:
    """All five report quantities from exact marginals of the full joint."""
    j = fj.joint
    t = fj.t_name
    i_t_xp = mutual_information(j, t, XP)
    h_xp = entropy(j.marginal(XP))
    if fj.has_future:
        i_t_xf = mutual_information(j, t, XF)
        i_t_xp_given_xf = conditional_mutual_information(j, t, XP, XF)
        i_t_xpxf = mutual_information(j, t, (XP, XF))
    else:
        i_t_xf = 0.0
        i_t_xp_given_xf = i_t_xp
        i_t_xpxf = i_t_xp
    return InfoReport(i_t_xp, i_t_xf, i_t_xp_given_xf, i_t_xpxf, h_xp)


def decomposition_check(fj: FullJoint) -> tuple[float, float]:
    """Residuals of the Markov identity and the chain-rule decomposition.

    Returns (|I(t;xF,xP) - I(t;xP)|, |I(t;xF) - I(t;xP) + I(t;xP|xF)|);
    both are zero up to accumulation error for any joint built by
    ``build_joint``.
    """
    r = info_report(fj)
    return (abs(r.I_t_xPxF - r.I_t_xP), abs(r.I_t_xF - r.I_t_xP + r.I_t_xP_given_xF))


def project_dataset_axis(
    table: ProbTable,
    ds: DatasetAxis,
    component_image: list[int],
    new_base: Alphabet,
    new_name: str,
) -> ProbTable:
    """Push a dataset axis through a per-sample symbol projection.

    ``component_image[i]`` is the index in ``new_base`` of the image of base
    symbol i; the whole composite axis maps tuple-wise, e.g. projecting
    feature-label observations onto their label part.  The result's axis is
    the composite alphabet over ``new_base`` tuples of the same length.
    """
    if len(component_image) != ds.base.size:
        raise TableError("component image must cover the dataset's base alphabet")
    new_ds = DatasetAxis.build(new_base, ds.length, new_name)
    image = []
    for flat in range(ds.size):
        out = 0
        for c in ds.index_tuple(flat):
            out = out * new_base.size + component_image[c]
        image.append(out)
    return table.apply_map(ds.axis.name, image, new_ds.axis)


# -- stock worlds and encoders ----------------------------------------------


def binary_symmetric_world(
    flip: float = 0.1,
    train_size: int = 2,
    future_size: int = 1,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> GenerativeWorld:
    """Uniform binary process observed through a symmetric channel.

    The observation equals the process symbol with probability 1 - flip.
    """
    phi = integer_alphabet(PHI, 2)
    x = integer_alphabet("x", 2)
    prior = ProbTable((phi,), np.array([0.5, 0.5]))
    channel = Kernel((phi,), x, np.array([[1.0 - flip, flip], [flip, 1.0 - flip]]))
    return GenerativeWorld(prior, channel, train_size, future_size, cell_budget)


def identity_encoder(world: GenerativeWorld, t_name: str = T) -> Kernel:
    """Encoder copying the past dataset into a code alphabet of equal size."""
    past = world.past_axis()
    t_axis = Alphabet(t_name, past.axis.symbols)
    return Kernel((past.axis,), t_axis, np.eye(past.size))


def constant_encoder(world: GenerativeWorld, t_size: int = 1, t_name: str = T) -> Kernel:
    """Encoder ignoring its input: every row is the same point mass."""
    past = world.past_axis()
    t_axis = integer_alphabet(t_name, t_size)
    rows = np.zeros((past.size, t_size))
    rows[:, 0] = 1.0
    return Kernel((past.axis,), t_axis, rows)


def random_encoder(world: GenerativeWorld, t_size: int, rng: np.random.Generator, t_name: str = T) -> Kernel:
    """Row-stochastic encoder with rows drawn uniformly from the simplex."""
    past = world.past_axis()
    t_axis = integer_alphabet(t_name, t_size)
    rows = rng.dirichlet(np.ones(t_size), size=past.size)
    return Kernel((past.axis,), t_axis, rows)


# -- JSON world description ---------------------------------------------------


def world_to_json(world: GenerativeWorld, t_alphabet: Alphabet | None = None) -> str:
    doc = {
        "phi_prior": json.loads(world.phi_prior.to_json()),
        "obs_channel": json.loads(world.obs_channel.to_json()),
        "N": world.train_size,
        "M": world.future_size,
    }
    if t_alphabet is not None:
        doc["t_alphabet"] = {"name": t_alphabet.name, "symbols": list(t_alphabet.symbols)}
    return json.dumps(doc, indent=2)


def world_from_json(text: str, cell_budget: int = DEFAULT_CELL_BUDGET) -> tuple[GenerativeWorld, Alphabet | None]:
    """Parse a world description; returns (world, optional code alphabet).

    ``t_alphabet`` may be given as {"name", "symbols"} or as a bare integer
    size (symbols are then "0".."size-1").
    """
    doc = json.loads(text)
    prior = ProbTable.from_json(json.dumps(doc["phi_prior"]))
    channel = Kernel.from_json(json.dumps(doc["obs_channel"]))
    world = GenerativeWorld(prior, channel, int(doc["N"]), int(doc.get("M", 0)), cell_budget)
    t_axis = None
    spec = doc.get("t_alphabet")
    if isinstance(spec, int):
        t_axis = integer_alphabet(T, spec)
    elif isinstance(spec, dict):
        t_axis = Alphabet(str(spec["name"]), tuple(str(s) for s in spec["symbols"]))
    return world, t_axis
