"""Empirical-loss machinery, Gibbs posteriors, and the MI generalization bound.

A finite loss table ell(theta, x) turns each dataset into an empirical loss
per parameter, inducing Gibbs posteriors, epsilon-feasible parameter sets,
and the subgaussian constant needed by the sqrt(2 sigma^2 I / n) bound on
the generalization gap.  The feasibility-constrained objective
min I(theta;xF) + lambda I(theta;xP) reuses the encoder optimizers with the
encoder rows restricted to each dataset's feasible set.

The population loss in the generalization gap is computed with the fresh
observation drawn from the same realized process as the dataset (and
conditionally independent of it), which is the setting where the dataset
entries are genuinely i.i.d.; the mutual information in the bound is the
plain unconditional I(theta; dataset).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bounds import BoundReport, VariationalPair, ibo_upper_bound
from .engine import IBOKind, IBOSpec, OptimizerOptions, fmt12, grid_oracle, optimize_encoder
from .info import mutual_information
from .tables import Alphabet, Kernel, ProbTable, TableError
from .world import XP, DatasetAxis, FullJoint, GenerativeWorld, iid_kernel

THETA = "theta"


@dataclass(frozen=True)
class LossTable:
    """Finite loss matrix ell(theta, x) over parameter and observation axes."""

    theta_axis: Alphabet
    x_axis: Alphabet
    loss: np.ndarray

    def __post_init__(self) -> None:
        loss = np.array(self.loss, dtype=np.float64, copy=True)
        if loss.shape != (self.theta_axis.size, self.x_axis.size):
            raise TableError(
                f"loss shape {loss.shape} != {(self.theta_axis.size, self.x_axis.size)}"
            )
        if not np.all(np.isfinite(loss)):
            raise TableError("loss entries must be finite")
        loss.setflags(write=False)
        object.__setattr__(self, "loss", loss)

    @property
    def loss_range(self) -> tuple[float, float]:
        return float(self.loss.min()), float(self.loss.max())

    def theta_index(self, theta: int | str) -> int:
        return self.theta_axis.index(theta) if isinstance(theta, str) else int(theta)

    def to_json(self) -> str:
        return json.dumps(
            {
                "theta_symbols": list(self.theta_axis.symbols),
                "x_symbols": list(self.x_axis.symbols),
                "loss_rows": [row.tolist() for row in self.loss],
            }
        )

    @staticmethod
    def from_json(text: str) -> "LossTable":
        doc = json.loads(text)
        theta = Alphabet(THETA, tuple(str(s) for s in doc["theta_symbols"]))
        x = Alphabet("x", tuple(str(s) for s in doc["x_symbols"]))
        return LossTable(theta, x, np.array(doc["loss_rows"], dtype=np.float64))


def zero_one_loss(x_axis: Alphabet) -> LossTable:
    """ell(theta, x) = [theta != x] with the parameter alphabet mirroring x."""
    theta = Alphabet(THETA, x_axis.symbols)
    return LossTable(theta, x_axis, 1.0 - np.eye(x_axis.size))


def _dataset_indices(lt: LossTable, dataset: Sequence[int | str]) -> list[int]:
    return [lt.x_axis.index(s) if isinstance(s, str) else int(s) for s in dataset]


def empirical_loss(lt: LossTable, theta: int | str, dataset: Sequence[int | str]) -> float:
    """Mean of ell(theta, x_i) over a nonempty dataset tuple."""
    if len(dataset) == 0:
        raise TableError("dataset must be nonempty")
    ti = lt.theta_index(theta)
    idx = _dataset_indices(lt, dataset)
    return math.fsum(float(lt.loss[ti, i]) for i in idx) / len(idx)


def dataset_losses(lt: LossTable, ds: DatasetAxis) -> np.ndarray:
    """L(theta, dataset) for every composite dataset symbol; shape (|Theta|, |X|^n)."""
    if ds.base.symbols != lt.x_axis.symbols:
        raise TableError("dataset base alphabet does not match the loss table")
    out = np.zeros((lt.theta_axis.size, ds.size))
    for d, tup in enumerate(ds.tuples()):
        out[:, d] = lt.loss[:, list(tup)].mean(axis=1) if tup else 0.0
    return out


def gibbs_posterior(lt: LossTable, prior: ProbTable, alpha: float, dataset: Sequence[int | str]) -> ProbTable:
    """Posterior proportional to prior(theta) exp(-alpha n L(theta, dataset)).

    alpha = 0 returns the prior object unchanged; finite losses make the
    normalizer finite for every alpha >= 0.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if prior.axes[0].symbols != lt.theta_axis.symbols:
        raise TableError("prior axis does not match the parameter alphabet")
    if alpha == 0.0:
        return prior
    n = len(dataset)
    logw = np.full(lt.theta_axis.size, -np.inf)
    for t in range(lt.theta_axis.size):
        p = prior.values[t]
        if p > 0:
            logw[t] = math.log(p) - alpha * n * empirical_loss(lt, t, dataset)
    m = logw.max()
    w = np.exp(logw - m)
    return ProbTable(prior.axes, w / math.fsum(w.tolist()))


def gibbs_encoder(world: GenerativeWorld, lt: LossTable, prior: ProbTable, alpha: float) -> Kernel:
    """The Gibbs posterior of every dataset, stacked into an encoder kernel."""
    ds = world.past_axis()
    rows = np.empty((ds.size, lt.theta_axis.size))
    for d, tup in enumerate(ds.tuples()):
        rows[d] = gibbs_posterior(lt, prior, alpha, tup).values
    return Kernel((ds.axis,), prior.axes[0], rows)


def argmin_encoder(world: GenerativeWorld, lt: LossTable) -> Kernel:
    """Deterministic empirical-loss minimization, ties broken by index.

    A comparison baseline for generalization reports: the zero-temperature
    limit of the Gibbs encoder, with I(theta; dataset) = H(theta).
    """
    ds = world.past_axis()
    losses = dataset_losses(lt, ds)  # (|theta|, |ds|)
    rows = np.zeros((ds.size, lt.theta_axis.size))
    rows[np.arange(ds.size), np.argmin(losses.T, axis=1)] = 1.0
    return Kernel((ds.axis,), lt.theta_axis, rows)


# -- subgaussian constants ----------------------------------------------------

CGF_GRID = np.concatenate([-np.logspace(-2, 2, 41)[::-1], np.logspace(-2, 2, 41)])


@dataclass(frozen=True)
class SigmaEstimate:
    sigma: float
    method: str  # hoeffding_range | cgf_scan


def estimate_sigma(
    lt: LossTable, world: GenerativeWorld, theta: int | str, method: str = "hoeffding_range"
) -> SigmaEstimate:
    """Subgaussian constant of ell(theta, .) under the observation marginal.

    hoeffding_range: half the loss range restricted to the support of p(x).
    cgf_scan: smallest sigma with log E exp(a(ell - E ell)) <= (a sigma)^2/2
    on a fixed two-sided log-spaced grid of a; never exceeds the Hoeffding
    value (up to grid resolution).
    """
    ti = lt.theta_index(theta)
    p_x = world.phi_prior.values @ world.obs_channel.rows
    if world.x_axis.symbols != lt.x_axis.symbols:
        raise TableError("world observation alphabet does not match the loss table")
    support = p_x > 0
    vals = lt.loss[ti, support]
    if method == "hoeffding_range":
        return SigmaEstimate((float(vals.max()) - float(vals.min())) / 2.0, method)
    if method != "cgf_scan":
        raise ValueError(f"unknown sigma method {method!r}")
    w = p_x[support]
    mean = float(w @ vals)
    centered = vals - mean
    best = 0.0
    for a in CGF_GRID:
        z = a * centered
        m = z.max()
        k = m + math.log(math.fsum((w * np.exp(z - m)).tolist()))
        if k > 0:
            best = max(best, math.sqrt(2.0 * k) / abs(a))
    return SigmaEstimate(best, method)


# -- the mutual-information generalization bound -------------------------------


@dataclass(frozen=True)
class GenBoundReport:
    exact_gap: float
    mi_bound: float
    I_theta_data: float
    sigma: float
    n: int
    holds: bool


def generalization_report(
    world: GenerativeWorld,
    encoder: Kernel,
    lt: LossTable,
    sigma_method: str = "hoeffding_range",
) -> GenBoundReport:
    """Exact generalization gap versus sqrt(2 sigma^2/n I(theta; dataset)).

    The gap is |E ell(theta, x) - E L(theta, dataset)| with the fresh x
    drawn from the realized process, independently of the dataset given the
    process; sigma is the worst case of estimate_sigma over theta.
    """
    ds = world.past_axis()
    if encoder.from_axes[0].symbols != ds.axis.symbols:
        raise TableError("encoder source axis does not match the world's dataset axis")
    theta_axis = encoder.to_axis
    if theta_axis.symbols != lt.theta_axis.symbols:
        raise TableError("encoder target axis does not match the parameter alphabet")
    n = world.train_size
    kp = iid_kernel(world.phi_axis, world.obs_channel, ds).matrix()  # (|phi|, |ds|)
    rows = encoder.matrix()  # (|ds|, |theta|)
    prior = world.phi_prior.values
    losses = dataset_losses(lt, ds)  # (|theta|, |ds|)
    # mean loss of theta under a fresh observation from each process value
    lbar = lt.loss @ world.obs_channel.rows.T  # (|theta|, |phi|)
    w = prior[:, None, None] * kp[:, :, None] * rows[None, :, :]  # (phi, ds, theta)
    e_emp = float(np.einsum("pdt,td->", w, losses))
    e_pop = float(np.einsum("pdt,tp->", w, lbar))
    exact_gap = abs(e_pop - e_emp)
    joint_dt = ProbTable((ds.axis, theta_axis), w.sum(axis=0))
    i_theta_data = mutual_information(joint_dt, theta_axis.name, XP)
    sigma = max(
        estimate_sigma(lt, world, t, sigma_method).sigma for t in range(lt.theta_axis.size)
    )
    mi_bound = math.sqrt(2.0 * sigma * sigma / n * i_theta_data)
    return GenBoundReport(
        exact_gap=exact_gap,
        mi_bound=mi_bound,
        I_theta_data=i_theta_data,
        sigma=sigma,
        n=n,
        holds=exact_gap <= mi_bound + 1e-12,
    )


# -- feasibility-constrained objective -----------------------------------------


def feasible_set(lt: LossTable, dataset: Sequence[int | str], eps: float) -> list[int]:
    """Indices of parameters with empirical loss at most eps; may be empty."""
    if eps < 0:
        raise ValueError("eps must be >= 0")
    return [t for t in range(lt.theta_axis.size) if empirical_loss(lt, t, dataset) <= eps]


def feasibility_mask(world: GenerativeWorld, lt: LossTable, eps: float) -> np.ndarray:
    """Boolean (|datasets|, |Theta|) mask of the eps-feasible sets.

    Raises naming the offending datasets if any positive-probability
    dataset has an empty feasible set.  Zero-probability datasets with an
    empty feasible set fall back to the empirical-loss minimizer (their
    rows never carry mass).
    """
    ds = world.past_axis()
    losses = dataset_losses(lt, ds)  # (|theta|, |ds|)
    mask = (losses.T <= eps)
    p_xp = world.xp_marginal()
    empty = ~mask.any(axis=1)
    offenders = [ds.axis.symbols[d] for d in np.flatnonzero(empty & (p_xp > 0))]
    if offenders:
        raise TableError(
            f"no parameter attains empirical loss <= {eps} on dataset(s): {', '.join(offenders)}"
        )
    for d in np.flatnonzero(empty):
        mask[d, int(np.argmin(losses[:, d]))] = True
    return mask


@dataclass
class TrainedResult:
    encoder: Kernel
    lam: float
    eps: float
    min_objective: float  # I(theta;xF) + lam * I(theta;xP)
    ibo_value: float  # I(theta;xP|xF) - (1+lam) * I(theta;xP)
    I_theta_xP: float
    I_theta_xF: float
    expected_loss: float  # E L(theta, dataset) under the returned encoder
    converged: bool
    checksum: str


def optimize_trained_ibo(
    world: GenerativeWorld,
    lt: LossTable,
    eps: float,
    lam: float,
    opts: OptimizerOptions = OptimizerOptions(),
) -> TrainedResult:
    """Minimize I(theta;xF) + lam I(theta;xP) over feasible encoders.

    Every encoder row assigns zero mass outside the dataset's eps-feasible
    set.  The reported ibo_value is the equivalent objective
    I(theta;xP|xF) - (1+lam) I(theta;xP), which equals the negated minimum.
    """
    if lam < 0:
        raise ValueError("lam must be >= 0")
    mask = feasibility_mask(world, lt, eps)
    spec = IBOSpec(IBOKind.TRAINED, 1.0 + lam, feasibility=(lt, eps))
    res = optimize_encoder(world, spec, opts, lt.theta_axis, support_mask=mask)
    r = res.report
    # expected training loss of the optimum: the I-vs-L scatter data point
    losses = dataset_losses(lt, world.past_axis())
    expected_loss = float(world.xp_marginal() @ (res.encoder.matrix() * losses.T).sum(axis=1))
    return TrainedResult(
        encoder=res.encoder,
        lam=lam,
        eps=eps,
        min_objective=r.I_t_xF + lam * r.I_t_xP,
        ibo_value=res.value,
        I_theta_xP=r.I_t_xP,
        I_theta_xF=r.I_t_xF,
        expected_loss=expected_loss,
        converged=res.converged,
        checksum=res.checksum,
    )


def trained_grid_oracle(
    world: GenerativeWorld,
    lt: LossTable,
    eps: float,
    lam: float,
    resolution: float,
    max_evaluations: int = 10**7,
) -> tuple[Kernel, float]:
    """Restricted-grid ground truth for the feasible objective (min form)."""
    mask = feasibility_mask(world, lt, eps)
    spec = IBOSpec(IBOKind.TRAINED, 1.0 + lam, feasibility=(lt, eps))
    enc, value = grid_oracle(world, spec, resolution, lt.theta_axis, mask, max_evaluations)
    return enc, -value  # grid maximizes the IBO form; the min form is its negation


def trained_variational_bound(fj: FullJoint, pair: VariationalPair, beta: float) -> BoundReport:
    """The combined upper bound, applied to a trained-parameter joint.

    beta = 1 + lam >= 1 for the feasibility-constrained objective; the
    machinery is identical with theta in place of the representation.
    """
    if beta < 1.0:
        raise ValueError("trained objective uses beta = 1 + lambda >= 1")
    return ibo_upper_bound(fj, pair, beta)


GENBOUND_CSV_HEADER = "alpha,I_theta_data_nats,sigma,n,exact_gap,mi_bound,holds"
TRAINED_CSV_HEADER = (
    "lambda,min_objective,equivalent_ibo,I_theta_xP_nats,I_theta_xF_nats,"
    "expected_loss,converged,encoder_checksum"
)


def genbound_to_csv(rows: list[tuple[float, GenBoundReport]]) -> str:
    lines = [GENBOUND_CSV_HEADER]
    for alpha, rep in rows:
        lines.append(
            ",".join(
                [
                    fmt12(alpha),
                    fmt12(rep.I_theta_data),
                    fmt12(rep.sigma),
                    str(rep.n),
                    fmt12(rep.exact_gap),
                    fmt12(rep.mi_bound),
                    "true" if rep.holds else "false",
                ]
            )
        )
    return "\n".join(lines) + "\n"


def trained_to_csv(rows: list[TrainedResult]) -> str:
    lines = [TRAINED_CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                [
                    fmt12(r.lam),
                    fmt12(r.min_objective),
                    fmt12(r.ibo_value),
                    fmt12(r.I_theta_xP),
                    fmt12(r.I_theta_xF),
                    fmt12(r.expected_loss),
                    "true" if r.converged else "false",
                    r.checksum,
                ]
            )
        )
    return "\n".join(lines) + "\n"
