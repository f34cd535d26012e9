"""The bottleneck-objective family: evaluation, optimization, sweeps.

Four objectives share the template I1 - nu*I2 over the encoder p(t|xP):

    kind      direction   I1                I2
    IBP       min         I(t;xP)           I(t;xF)
    PIBP      max         I(t;xF)           I(t;xP)
    EPIBP     min         I(t;xP|xF)        I(t;xP)
    TRAINED   max         I(t;xP|xF)        I(t;xP)   (+ loss feasibility)

Optimization offers two independent routes that cross-validate each other:
damped self-consistent fixed-point iteration (IBP) or exponentiated-gradient
mirror descent with finite-difference gradients (all kinds), plus an
exhaustive simplex-grid oracle as ground truth on small instances.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Sequence

import numpy as np

from .tables import Alphabet, Kernel, TableError, integer_alphabet
from .world import (
    T,
    BudgetExceededError,
    GenerativeWorld,
    InfoReport,
    build_joint,
    iid_kernel,
    info_report,
)


class IBOKind(Enum):
    IBP = "IBP"
    PIBP = "PIBP"
    EPIBP = "EPIBP"
    TRAINED = "TRAINED"


#: optimization direction fixed by the objective catalog
DIRECTION = {
    IBOKind.IBP: "min",
    IBOKind.PIBP: "max",
    IBOKind.EPIBP: "min",
    IBOKind.TRAINED: "max",
}


@dataclass(frozen=True)
class IBOSpec:
    """One objective from the catalog: kind, multiplier, optional feasibility.

    ``feasibility`` is a (LossTable, epsilon) pair and is only meaningful
    for TRAINED, where the encoder row for each dataset must stay inside
    the epsilon-feasible parameter set.
    """

    kind: IBOKind
    nu: float
    feasibility: tuple | None = None

    def __post_init__(self) -> None:
        if self.nu < 0:
            raise ValueError(f"multiplier must be >= 0, got {self.nu}")
        if self.kind is IBOKind.TRAINED and self.nu < 1:
            raise ValueError(f"TRAINED multiplier is 1 + lambda >= 1, got {self.nu}")
        if self.feasibility is not None and self.kind is not IBOKind.TRAINED:
            raise ValueError("feasibility constraint applies to TRAINED only")

    @property
    def direction(self) -> str:
        return DIRECTION[self.kind]


@dataclass(frozen=True)
class OptimizerOptions:
    method: str = "auto"  # auto | self_consistent | mirror_descent | grid_oracle
    max_iters: int = 500
    step_size: float = 1.0
    tolerance: float = 1e-6
    restarts: int = 8
    seed: int = 0
    grid_resolution: float = 0.05  # used by method="grid_oracle"

    def __post_init__(self) -> None:
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.method not in ("auto", "self_consistent", "mirror_descent", "grid_oracle"):
            raise ValueError(f"unknown method {self.method!r}")


def evaluate_ibo(spec: IBOSpec, report: InfoReport) -> float:
    """I1 - nu*I2 for the catalog row of ``spec.kind``, from a report."""
    fields = (report.I_t_xP, report.I_t_xF, report.I_t_xP_given_xF)
    if not all(math.isfinite(v) for v in fields):
        raise ValueError(f"report contains non-finite entries: {report}")
    if spec.kind is IBOKind.IBP:
        return report.I_t_xP - spec.nu * report.I_t_xF
    if spec.kind is IBOKind.PIBP:
        return report.I_t_xF - spec.nu * report.I_t_xP
    return report.I_t_xP_given_xF - spec.nu * report.I_t_xP


def encoder_checksum(rows: np.ndarray | Kernel) -> str:
    """Stable 16-hex-digit digest of the row-major float64 encoder entries."""
    if isinstance(rows, Kernel):
        rows = rows.rows
    data = np.ascontiguousarray(rows, dtype=np.float64)
    return hashlib.sha256(data.tobytes()).hexdigest()[:16]


# -- fast exact evaluation --------------------------------------------------


def _matrix_mi(j: np.ndarray) -> float:
    """MI of a nonnegative matrix against its own marginals.

    Agrees with the exact mutual information when ``j`` is a normalized
    joint, and extends smoothly to unnormalized arguments, which is what
    the finite-difference gradients are taken on.
    """
    total = j.sum()
    if total <= 0:
        return 0.0
    r = j.sum(axis=1)
    c = j.sum(axis=0)
    mask = j > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = j * (np.log(j) - np.log(r)[:, None] - np.log(c)[None, :] + math.log(total))
    return float(np.where(mask, terms, 0.0).sum())


class EncoderProblem:
    """Precomputed world marginals for fast objective evaluation.

    ``info_pair`` maps an encoder matrix to (I(t;xP), I(t;xF)); the EPIBP
    conditional term follows from the Markov decomposition
    I(t;xP|xF) = I(t;xP) - I(t;xF), which is an identity for every joint
    built on the chain.
    """

    def __init__(self, world: GenerativeWorld, t_size: int):
        self.world = world
        self.t_size = int(t_size)
        past = world.past_axis()
        self.n_xp = past.size
        self.p_xp = world.xp_marginal()
        if world.future_size > 0:
            fut = world.future_axis()
            kp = iid_kernel(world.phi_axis, world.obs_channel, past).matrix()
            kf = iid_kernel(world.phi_axis, world.obs_channel, fut).matrix()
            self.joint_pf = np.einsum("p,px,pf->xf", world.phi_prior.values, kp, kf)
        else:
            self.joint_pf = self.p_xp[:, None]

    def info_pair(self, rows: np.ndarray) -> tuple[float, float]:
        j_pt = self.p_xp[:, None] * rows
        i_p = _matrix_mi(j_pt)
        j_tf = rows.T @ self.joint_pf
        i_f = _matrix_mi(j_tf)
        return i_p, i_f

    def info_pair_batch(self, batch: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(I_P, I_F) for a stack of encoders, shape (B, n_xp, t_size)."""
        j = self.p_xp[None, :, None] * batch
        i_p = _batch_mi(j)
        j_tf = np.einsum("bxt,xf->btf", batch, self.joint_pf)
        i_f = _batch_mi(j_tf)
        return i_p, i_f

    def objective(self, rows: np.ndarray, spec: IBOSpec) -> float:
        i_p, i_f = self.info_pair(rows)
        return _combine(spec, i_p, i_f)

    def exact_result(self, rows: np.ndarray, spec: IBOSpec, t_axis: Alphabet) -> tuple[Kernel, InfoReport, float]:
        """Final-answer path: rebuild the full joint and evaluate exactly."""
        enc = Kernel((self.world.past_axis().axis,), t_axis, rows)
        report = info_report(build_joint(self.world, enc))
        return enc, report, evaluate_ibo(spec, report)


def _batch_mi(j: np.ndarray) -> np.ndarray:
    total = j.sum(axis=(1, 2))
    r = j.sum(axis=2)
    c = j.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = j * (
            np.log(j) - np.log(r)[:, :, None] - np.log(c)[:, None, :] + np.log(total)[:, None, None]
        )
    return np.where(j > 0, terms, 0.0).sum(axis=(1, 2))


def _combine(spec: IBOSpec, i_p, i_f):
    if spec.kind is IBOKind.IBP:
        return i_p - spec.nu * i_f
    if spec.kind is IBOKind.PIBP:
        return i_f - spec.nu * i_p
    return (i_p - i_f) - spec.nu * i_p


def _better(direction: str, a: float, b: float) -> bool:
    """True when objective value ``a`` strictly improves on ``b``."""
    return a < b if direction == "min" else a > b


# -- optimization -----------------------------------------------------------


@dataclass
class OptimizeResult:
    encoder: Kernel
    value: float  # exact-path objective of the returned encoder
    report: InfoReport
    trace: list[float] = field(repr=False)
    converged: bool = True
    checksum: str = ""


def _default_t_axis(world: GenerativeWorld, t_size: int | None) -> Alphabet:
    size = world.past_axis().size if t_size is None else int(t_size)
    return integer_alphabet(T, size)


def _init_rows(problem: EncoderProblem, rng: np.random.Generator, mask: np.ndarray) -> np.ndarray:
    rows = np.zeros((problem.n_xp, problem.t_size))
    for x in range(problem.n_xp):
        sup = np.flatnonzero(mask[x])
        rows[x, sup] = rng.dirichlet(np.ones(sup.size))
    return rows


def _row_normalize(rows: np.ndarray) -> np.ndarray:
    return rows / rows.sum(axis=1, keepdims=True)


def _vertex_certificate(
    problem: EncoderProblem, spec: IBOSpec, rows: np.ndarray, mask: np.ndarray, tol: float
) -> bool:
    """No single-row step of size <= tol toward a support vertex improves
    the objective by more than tol."""
    base = problem.objective(rows, spec)
    sign = 1.0 if spec.direction == "max" else -1.0
    for gamma in (tol, tol / 2.0):
        for x in range(problem.n_xp):
            for t in np.flatnonzero(mask[x]):
                cand = rows.copy()
                cand[x] = (1.0 - gamma) * rows[x]
                cand[x, t] += gamma
                if sign * (problem.objective(cand, spec) - base) > tol:
                    return False
    return True


def _fd_gradient(problem: EncoderProblem, spec: IBOSpec, rows: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Central finite differences of the smooth objective extension."""
    h = 1e-6
    g = np.zeros_like(rows)
    for x in range(problem.n_xp):
        for t in np.flatnonzero(mask[x]):
            up = rows.copy()
            up[x, t] += h
            if rows[x, t] >= h:
                dn = rows.copy()
                dn[x, t] -= h
                g[x, t] = (problem.objective(up, spec) - problem.objective(dn, spec)) / (2 * h)
            else:
                g[x, t] = (problem.objective(up, spec) - problem.objective(rows, spec)) / h
    return g


def _mirror_descent(
    problem: EncoderProblem,
    spec: IBOSpec,
    opts: OptimizerOptions,
    rows: np.ndarray,
    mask: np.ndarray,
) -> tuple[np.ndarray, list[float], bool]:
    sign = 1.0 if spec.direction == "max" else -1.0
    eta = opts.step_size
    value = problem.objective(rows, spec)
    trace = [value]
    for _ in range(opts.max_iters):
        grad = _fd_gradient(problem, spec, rows, mask)
        accepted = False
        while eta >= 1e-9:
            with np.errstate(over="ignore"):
                logits = np.where(mask & (rows > 0), np.log(np.where(rows > 0, rows, 1.0)), -np.inf)
                logits = logits + sign * eta * grad
                logits -= logits.max(axis=1, keepdims=True)
                cand = np.where(np.isneginf(logits), 0.0, np.exp(logits))
            cand = _row_normalize(cand)
            cand_value = problem.objective(cand, spec)
            if sign * (cand_value - value) > 1e-15:
                rows, value = cand, cand_value
                trace.append(value)
                eta = min(eta * 1.2, opts.step_size * 16)
                accepted = True
                break
            eta /= 2.0
        if not accepted:
            return rows, trace, _vertex_certificate(problem, spec, rows, mask, opts.tolerance)
        if len(trace) > 3 and abs(trace[-1] - trace[-3]) < 1e-13:
            if _vertex_certificate(problem, spec, rows, mask, opts.tolerance):
                return rows, trace, True
    return rows, trace, _vertex_certificate(problem, spec, rows, mask, opts.tolerance)


def _self_consistent(
    problem: EncoderProblem,
    spec: IBOSpec,
    opts: OptimizerOptions,
    rows: np.ndarray,
    mask: np.ndarray,
) -> tuple[np.ndarray, list[float], bool]:
    """Damped fixed-point iteration p(t|x) ~ p(t) exp(-beta KL(p(xF|x)||p(xF|t))).

    Only accepted steps enter the trace, and a step is accepted only if it
    does not increase the IBP objective (slack 1e-12), so the trace is
    monotone by construction.
    """
    if spec.kind is not IBOKind.IBP:
        raise ValueError("self_consistent updates apply to the IBP only; use mirror_descent")
    beta = spec.nu
    p_xp = problem.p_xp
    joint_pf = problem.joint_pf
    with np.errstate(divide="ignore", invalid="ignore"):
        p_f_given_x = np.where(p_xp[:, None] > 0, joint_pf / np.where(p_xp[:, None] > 0, p_xp[:, None], 1.0), 0.0)
        log_pfx = np.where(p_f_given_x > 0, np.log(np.where(p_f_given_x > 0, p_f_given_x, 1.0)), 0.0)
    value = problem.objective(rows, spec)
    trace = [value]
    for _ in range(opts.max_iters):
        m = p_xp @ rows
        j_tf = rows.T @ joint_pf
        alive = m > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            p_f_given_t = np.where(alive[:, None], j_tf / np.where(alive[:, None], j_tf.sum(axis=1, keepdims=True), 1.0), 0.0)
        log_m = np.where(alive, np.log(np.where(alive, m, 1.0)), -np.inf)
        if beta == 0.0:
            logits = np.where(mask, log_m[None, :], -np.inf)
        else:
            # D[x, t] = KL(p(xF|x) || p(xF|t)); +inf on support violation
            d = np.full((problem.n_xp, problem.t_size), np.inf)
            for t in np.flatnonzero(alive):
                qt = p_f_given_t[t]
                viol = (p_f_given_x > 0) & (qt[None, :] <= 0)
                with np.errstate(divide="ignore", invalid="ignore"):
                    terms = np.where(p_f_given_x > 0, p_f_given_x * (log_pfx - np.log(np.where(qt[None, :] > 0, qt[None, :], 1.0))), 0.0)
                dt = terms.sum(axis=1)
                dt[viol.any(axis=1)] = np.inf
                d[:, t] = dt
            logits = np.where(alive[None, :] & mask, log_m[None, :] - beta * d, -np.inf)
        stuck = np.isneginf(logits).all(axis=1)
        with np.errstate(invalid="ignore"):
            shifted = logits - logits.max(axis=1, keepdims=True)
        bad = np.isneginf(shifted) | np.isnan(shifted)
        prop = np.where(bad, 0.0, np.exp(np.where(bad, 0.0, shifted)))
        if stuck.any():
            prop[stuck] = rows[stuck]
        prop = _row_normalize(prop)
        gamma = 1.0
        accepted = False
        while gamma >= 1e-9:
            cand = (1.0 - gamma) * rows + gamma * prop
            cand_value = problem.objective(cand, spec)
            if cand_value <= value + 1e-12:
                moved = np.max(np.abs(cand - rows))
                rows, value = cand, cand_value
                trace.append(value)
                accepted = True
                if moved < 1e-12:
                    return rows, trace, _vertex_certificate(problem, spec, rows, mask, opts.tolerance)
                break
            gamma /= 2.0
        if not accepted:
            return rows, trace, _vertex_certificate(problem, spec, rows, mask, opts.tolerance)
        if len(trace) > 2 and abs(trace[-1] - trace[-2]) < 1e-14:
            if _vertex_certificate(problem, spec, rows, mask, opts.tolerance):
                return rows, trace, True
    return rows, trace, _vertex_certificate(problem, spec, rows, mask, opts.tolerance)


def optimize_encoder(
    world: GenerativeWorld,
    spec: IBOSpec,
    opts: OptimizerOptions = OptimizerOptions(),
    t_axis: Alphabet | None = None,
    support_mask: np.ndarray | None = None,
) -> OptimizeResult:
    """Best encoder over seeded restarts; never raises on non-convergence.

    Restart r uses the generator seeded with opts.seed + r.  Ties within
    1e-12 between restart optima are broken by the lower encoder checksum,
    so results are reproducible for a fixed seed.
    """
    t_axis = t_axis if t_axis is not None else _default_t_axis(world, None)
    problem = EncoderProblem(world, t_axis.size)
    mask = (
        np.ones((problem.n_xp, problem.t_size), dtype=bool)
        if support_mask is None
        else np.asarray(support_mask, dtype=bool)
    )
    if mask.shape != (problem.n_xp, problem.t_size):
        raise TableError(f"support mask shape {mask.shape} != {(problem.n_xp, problem.t_size)}")
    if not mask.any(axis=1).all():
        raise TableError("support mask has an empty row")

    if opts.method == "grid_oracle":
        rows, value, _ = grid_oracle_rows(problem, spec, opts.grid_resolution, mask)
        enc, report, exact = problem.exact_result(rows, spec, t_axis)
        return OptimizeResult(enc, exact, report, [value], True, encoder_checksum(rows))

    method = opts.method
    if method == "auto":
        method = "self_consistent" if spec.kind is IBOKind.IBP else "mirror_descent"
    stepper = _self_consistent if method == "self_consistent" else _mirror_descent

    best: tuple[np.ndarray, list[float], bool, float, str] | None = None
    for r in range(opts.restarts):
        rng = np.random.default_rng(opts.seed + r)
        rows0 = _init_rows(problem, rng, mask)
        rows, trace, converged = stepper(problem, spec, opts, rows0, mask)
        value = trace[-1]
        checksum = encoder_checksum(rows)
        if best is None:
            best = (rows, trace, converged, value, checksum)
            continue
        if _better(spec.direction, value, best[3]) and abs(value - best[3]) > 1e-12:
            best = (rows, trace, converged, value, checksum)
        elif abs(value - best[3]) <= 1e-12 and checksum < best[4]:
            best = (rows, trace, converged, value, checksum)
    rows, trace, converged, _, checksum = best
    enc, report, exact = problem.exact_result(rows, spec, t_axis)
    return OptimizeResult(enc, exact, report, trace, converged, checksum)


# -- exhaustive simplex-grid oracle ------------------------------------------


def simplex_grid(dim: int, steps: int) -> np.ndarray:
    """All points with coordinates k/steps on the (dim-1)-simplex.

    Enumerated in lexicographic composition order; deterministic.
    """
    if dim < 1 or steps < 1:
        raise ValueError("dim and steps must be >= 1")
    combos = itertools.combinations(range(steps + dim - 1), dim - 1)
    out = []
    for cut in combos:
        parts = []
        prev = -1
        for c in cut:
            parts.append(c - prev - 1)
            prev = c
        parts.append(steps + dim - 2 - prev)
        out.append(parts)
    return np.array(out, dtype=np.float64) / steps


def _grid_steps(resolution: float) -> int:
    steps = round(1.0 / resolution)
    if steps < 1 or abs(steps * resolution - 1.0) > 1e-9:
        raise ValueError(f"grid resolution {resolution} must evenly divide 1")
    return steps


def _row_grids(problem: EncoderProblem, resolution: float, mask: np.ndarray) -> list[np.ndarray]:
    steps = _grid_steps(resolution)
    grids = []
    for x in range(problem.n_xp):
        sup = np.flatnonzero(mask[x])
        pts = simplex_grid(sup.size, steps)
        rows = np.zeros((pts.shape[0], problem.t_size))
        rows[:, sup] = pts
        grids.append(rows)
    return grids


def iter_grid_encoders(grids: Sequence[np.ndarray], chunk: int = 4096) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (start_index, stacked encoder chunk) over the row-grid product."""
    sizes = [g.shape[0] for g in grids]
    total = int(np.prod(sizes))
    n_xp = len(grids)
    t_size = grids[0].shape[1]
    start = 0
    while start < total:
        count = min(chunk, total - start)
        batch = np.empty((count, n_xp, t_size))
        idx = np.arange(start, start + count)
        rem = idx.copy()
        for x in range(n_xp - 1, -1, -1):
            rem, sel = np.divmod(rem, sizes[x])
            batch[:, x, :] = grids[x][sel]
        yield start, batch
        start += count


def grid_oracle_rows(
    problem: EncoderProblem,
    spec: IBOSpec,
    resolution: float,
    mask: np.ndarray,
    max_evaluations: int = 10**7,
) -> tuple[np.ndarray, float, int]:
    """Exhaustive scan of the encoder grid; returns (rows, value, count)."""
    grids = _row_grids(problem, resolution, mask)
    total = int(np.prod([g.shape[0] for g in grids]))
    if total > max_evaluations:
        raise BudgetExceededError(
            f"grid oracle needs {total} encoder evaluations, budget is {max_evaluations}"
        )
    best_value = math.inf if spec.direction == "min" else -math.inf
    best_rows = None
    for _, batch in iter_grid_encoders(grids):
        i_p, i_f = problem.info_pair_batch(batch)
        values = _combine(spec, i_p, i_f)
        k = int(np.argmin(values) if spec.direction == "min" else np.argmax(values))
        if _better(spec.direction, float(values[k]), best_value):
            best_value = float(values[k])
            best_rows = batch[k].copy()
    return best_rows, best_value, total


def grid_oracle(
    world: GenerativeWorld,
    spec: IBOSpec,
    resolution: float,
    t_axis: Alphabet | None = None,
    support_mask: np.ndarray | None = None,
    max_evaluations: int = 10**7,
) -> tuple[Kernel, float]:
    """Best encoder whose rows lie on the simplex grid of given spacing."""
    t_axis = t_axis if t_axis is not None else _default_t_axis(world, None)
    problem = EncoderProblem(world, t_axis.size)
    mask = (
        np.ones((problem.n_xp, problem.t_size), dtype=bool)
        if support_mask is None
        else np.asarray(support_mask, dtype=bool)
    )
    rows, value, _ = grid_oracle_rows(problem, spec, resolution, mask, max_evaluations)
    return Kernel((world.past_axis().axis,), t_axis, rows), value


# -- IBP <-> PIBP equivalence -------------------------------------------------


@dataclass(frozen=True)
class EquivalenceReport:
    beta: float
    lam: float
    min_ibp: float
    max_pibp: float
    identity_residual: float  # |min_ibp + beta * max_pibp|
    optimizer_sets_match: bool
    n_optimal_ibp: int
    n_optimal_pibp: int


def _canonical_encoder_bytes(rows: np.ndarray) -> bytes:
    """Relabel-invariant signature: columns sorted lexicographically."""
    cols = sorted(tuple(rows[:, t]) for t in range(rows.shape[1]))
    return np.array(cols, dtype=np.float64).tobytes()


def equivalence_check(
    world: GenerativeWorld,
    beta: float,
    resolution: float = 0.05,
    t_axis: Alphabet | None = None,
    tie_tol: float = 1e-9,
    max_evaluations: int = 10**7,
) -> EquivalenceReport:
    """Grid-verify that min IBP(beta) = -beta * max PIBP(1/beta).

    Scans every grid encoder once, evaluates both objectives on it, and
    compares optima and (canonicalized) optimizer sets.
    """
    if beta <= 0:
        raise ValueError("equivalence requires beta > 0")
    lam = 1.0 / beta
    t_axis = t_axis if t_axis is not None else _default_t_axis(world, None)
    problem = EncoderProblem(world, t_axis.size)
    mask = np.ones((problem.n_xp, problem.t_size), dtype=bool)
    grids = _row_grids(problem, resolution, mask)
    total = int(np.prod([g.shape[0] for g in grids]))
    if total > max_evaluations:
        raise BudgetExceededError(f"equivalence scan needs {total} evaluations, budget {max_evaluations}")
    ibp_vals = np.empty(total)
    pibp_vals = np.empty(total)
    for start, batch in iter_grid_encoders(grids):
        i_p, i_f = problem.info_pair_batch(batch)
        ibp_vals[start : start + batch.shape[0]] = i_p - beta * i_f
        pibp_vals[start : start + batch.shape[0]] = i_f - lam * i_p
    min_ibp = float(ibp_vals.min())
    max_pibp = float(pibp_vals.max())
    sel_ibp = np.flatnonzero(ibp_vals <= min_ibp + tie_tol)
    sel_pibp = np.flatnonzero(pibp_vals >= max_pibp - tie_tol / beta)
    sets_match = _optimal_sets_match(grids, sel_ibp, sel_pibp)
    return EquivalenceReport(
        beta=beta,
        lam=lam,
        min_ibp=min_ibp,
        max_pibp=max_pibp,
        identity_residual=abs(min_ibp + beta * max_pibp),
        optimizer_sets_match=sets_match,
        n_optimal_ibp=int(sel_ibp.size),
        n_optimal_pibp=int(sel_pibp.size),
    )


def _optimal_sets_match(grids: Sequence[np.ndarray], sel_a: np.ndarray, sel_b: np.ndarray) -> bool:
    sizes = [g.shape[0] for g in grids]

    def rows_for(flat: int) -> np.ndarray:
        out = []
        rem = flat
        for x in range(len(grids) - 1, -1, -1):
            rem, sel = divmod(rem, sizes[x])
            out.append(grids[x][sel])
        return np.array(list(reversed(out)))

    set_a = {_canonical_encoder_bytes(rows_for(int(i))) for i in sel_a}
    set_b = {_canonical_encoder_bytes(rows_for(int(i))) for i in sel_b}
    return set_a == set_b


# -- regularization sweeps -----------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    nu: float
    objective: float
    I_t_xP: float
    I_t_second: float
    converged: bool
    encoder_checksum: str


@dataclass(frozen=True)
class SweepResult:
    kind: IBOKind
    rows: tuple[SweepRow, ...]


def beta_sweep(
    world: GenerativeWorld,
    kind: IBOKind,
    nus: Sequence[float],
    opts: OptimizerOptions = OptimizerOptions(),
    t_axis: Alphabet | None = None,
    support_mask: np.ndarray | None = None,
) -> SweepResult:
    """One optimization per multiplier; point i runs with seed + 1000*i.

    The second information column is I(t;xF) for every kind: together with
    I(t;xP) it locates the optimum in the information plane.
    """
    nus = [float(v) for v in nus]
    if not nus:
        raise ValueError("multiplier list must be nonempty")
    if any(b >= a for a, b in zip(nus[1:], nus)):
        raise ValueError(f"multiplier values must be strictly increasing, got {nus}")
    rows = []
    for i, nu in enumerate(nus):
        spec = IBOSpec(kind, nu)
        pt_opts = replace(opts, seed=opts.seed + 1000 * i)
        res = optimize_encoder(world, spec, pt_opts, t_axis, support_mask)
        rows.append(
            SweepRow(
                nu=nu,
                objective=res.value,
                I_t_xP=res.report.I_t_xP,
                I_t_second=res.report.I_t_xF,
                converged=res.converged,
                encoder_checksum=res.checksum,
            )
        )
    return SweepResult(kind, tuple(rows))


SWEEP_CSV_HEADER = "nu,objective,I_t_xP_nats,I_t_second_nats,converged,encoder_checksum"


def fmt12(x: float) -> str:
    return f"{x:.12g}"


def sweep_to_csv(result: SweepResult) -> str:
    lines = [SWEEP_CSV_HEADER]
    for r in result.rows:
        lines.append(
            ",".join(
                [
                    fmt12(r.nu),
                    fmt12(r.objective),
                    fmt12(r.I_t_xP),
                    fmt12(r.I_t_second),
                    "true" if r.converged else "false",
                    r.encoder_checksum,
                ]
            )
        )
    return "\n".join(lines) + "\n"
