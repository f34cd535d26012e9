"""Variational sandwich machinery for the conditional-MI objective.

Two elementary inequalities — an upper bound on I(t;xP|xF) from a
variational marginal q(t), and the decoder lower bound on I(t;xP) from a
variational likelihood q(xP|t) — combine into an upper bound on the
objective I(t;xP|xF) - beta*I(t;xP).  The bound's gap decomposes exactly
into two KL terms, its unconstrained minimizers are the true marginal and
posterior, and rewriting it through the per-dataset normalizer Z_beta
exposes the tempered-Bayes factorization (ordinary Bayes at beta = 1).

Everything here is computed by exact summation; support violations yield
infinite bounds with a warning rather than exceptions, so comparisons
stay total.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .engine import IBOKind, IBOSpec, evaluate_ibo
from .info import entropy
from .tables import Alphabet, Kernel, ProbTable, TableError
from .world import XF, XP, DatasetAxis, FullJoint, iid_kernel, info_report


@dataclass(frozen=True)
class VariationalPair:
    """A variational marginal q(t) and likelihood/decoder q(xP|t)."""

    q_t: ProbTable
    q_xp_given_t: Kernel
    factorized: bool = False

    def __post_init__(self) -> None:
        if len(self.q_t.axes) != 1:
            raise TableError("q_t must be a one-axis table")
        if self.q_xp_given_t.from_names != (self.q_t.axes[0].name,):
            raise TableError("decoder must condition on the q_t axis")
        if self.q_xp_given_t.from_axes[0].symbols != self.q_t.axes[0].symbols:
            raise TableError("decoder source symbols differ from q_t symbols")

    @property
    def t_axis(self) -> Alphabet:
        return self.q_t.axes[0]

    @property
    def xp_axis(self) -> Alphabet:
        return self.q_xp_given_t.to_axis

    @staticmethod
    def factorized_from(q_t: ProbTable, per_sample: Kernel, length: int) -> "VariationalPair":
        """Build q(xP|t) as a product of per-sample decoders q(x|t)."""
        ds = DatasetAxis.build(per_sample.to_axis, length, XP)
        dec = iid_kernel(q_t.axes[0], per_sample, ds)
        return VariationalPair(q_t, dec, factorized=True)


@dataclass(frozen=True)
class BoundReport:
    beta: float
    bound_value: float
    exact_ibo: float
    gap: float
    gap_term_qt: float  # E KL(p(t|xF) || q(t))
    gap_term_decoder: float  # beta * E KL(p(xP|t) || q(xP|t))
    logZ_expectation: float


class _Pieces:
    """Marginals of a full joint that every bound below consumes."""

    def __init__(self, fj: FullJoint):
        j = fj.joint
        t_name = fj.t_name
        self.t_axis = fj.encoder.to_axis
        self.xp_axis = j.axis(XP)
        self.p_xp = j.marginal(XP).values
        self.p_t = j.marginal(t_name).values
        self.j_xp_t = j.marginal((XP, t_name)).values  # [nX, nT], xP first
        self.enc = fj.encoder.matrix()
        self.h_xp = entropy(j.marginal(XP))
        if fj.has_future:
            self.p_xf = j.marginal(XF).values
            j_xf_t = j.marginal((XF, t_name)).values
            self.p_t_given_xf = np.where(
                self.p_xf[:, None] > 0, j_xf_t / np.where(self.p_xf[:, None] > 0, self.p_xf[:, None], 1.0), 0.0
            )
        else:
            self.p_xf = np.array([1.0])
            self.p_t_given_xf = self.p_t[None, :]


def _check_pair(fj: FullJoint, pair: VariationalPair) -> None:
    if pair.t_axis.symbols != fj.encoder.to_axis.symbols:
        raise TableError("pair code alphabet does not match the joint's")
    if pair.xp_axis.symbols != fj.joint.axis(XP).symbols:
        raise TableError("pair dataset alphabet does not match the joint's")


def _kl_rows(p_rows: np.ndarray, q_rows: np.ndarray, weights: np.ndarray) -> float:
    """sum_i w_i KL(p_i || q_i) with +inf on support violations."""
    terms = []
    for w, p, q in zip(weights.tolist(), p_rows, q_rows):
        if w <= 0:
            continue
        for pv, qv in zip(p.tolist(), q.tolist()):
            if pv <= 0:
                continue
            if qv <= 0:
                return math.inf
            terms.append(w * pv * (math.log(pv) - math.log(qv)))
    return max(math.fsum(terms), 0.0)


def cond_mi_upper_bound(fj: FullJoint, q_t: ProbTable) -> tuple[float, float]:
    """(bound, slack) with bound = E log[p(t|xP)/q(t)] >= I(t;xP|xF).

    The slack is E KL(p(t|xF) || q(t)) and satisfies
    bound - I(t;xP|xF) = slack exactly.
    """
    p = _Pieces(fj)
    if q_t.axes[0].symbols != p.t_axis.symbols:
        raise TableError("q_t alphabet does not match the joint's code alphabet")
    q = q_t.values
    terms = []
    for x in range(p.p_xp.size):
        for t in range(p.p_t.size):
            m = p.j_xp_t[x, t]
            if m <= 0:
                continue
            if q[t] <= 0:
                warnings.warn(
                    f"q_t has zero mass at {p.t_axis.symbols[t]!r} inside the encoder support"
                )
                return math.inf, math.inf
            terms.append(m * (math.log(p.enc[x, t]) - math.log(q[t])))
    bound = math.fsum(terms)
    slack = _kl_rows(p.p_t_given_xf, np.broadcast_to(q, p.p_t_given_xf.shape), p.p_xf)
    return bound, slack


def barber_agakov_lower_bound(fj: FullJoint, q_xp_given_t: Kernel) -> tuple[float, float]:
    """(lower_bound, slack) with lower_bound = H(xP) + E log q(xP|t) <= I(t;xP).

    The slack is E KL(p(xP|t) || q(xP|t)); lower_bound + slack = I(t;xP).
    """
    p = _Pieces(fj)
    if q_xp_given_t.to_axis.symbols != p.xp_axis.symbols:
        raise TableError("decoder dataset alphabet does not match the joint's")
    if q_xp_given_t.from_axes[0].symbols != p.t_axis.symbols:
        raise TableError("decoder code alphabet does not match the joint's")
    dec = q_xp_given_t.matrix()  # [nT, nX]
    terms = []
    for x in range(p.p_xp.size):
        for t in range(p.p_t.size):
            m = p.j_xp_t[x, t]
            if m <= 0:
                continue
            if dec[t, x] <= 0:
                warnings.warn(
                    f"decoder has zero mass at xP={p.xp_axis.symbols[x]!r} given {p.t_axis.symbols[t]!r}"
                )
                return -math.inf, math.inf
            terms.append(m * math.log(dec[t, x]))
    lower = p.h_xp + math.fsum(terms)
    with np.errstate(divide="ignore", invalid="ignore"):
        post = np.where(p.p_t[None, :] > 0, p.j_xp_t / np.where(p.p_t[None, :] > 0, p.p_t[None, :], 1.0), 0.0)
    slack = _kl_rows(post.T, dec, p.p_t)
    return lower, slack


def ibo_upper_bound(fj: FullJoint, pair: VariationalPair, beta: float) -> BoundReport:
    """Combined upper bound on I(t;xP|xF) - beta*I(t;xP) for one pair.

    bound = E log[p(t|xP)/q(t)] - beta E log q(xP|t) - beta H(xP); the gap
    over the exact objective equals gap_term_qt + gap_term_decoder.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    _check_pair(fj, pair)
    cond_bound, cond_slack = cond_mi_upper_bound(fj, pair.q_t)
    ba_lower, ba_slack = barber_agakov_lower_bound(fj, pair.q_xp_given_t)
    # bound = cond_bound - beta*(E log q(xP|t)) - beta*H = cond_bound - beta*ba_lower
    bound = cond_bound - beta * ba_lower if beta > 0 else cond_bound
    report = info_report(fj)
    exact = evaluate_ibo(IBOSpec(IBOKind.EPIBP, beta), report)
    gap_qt = cond_slack
    gap_dec = beta * ba_slack if beta > 0 else 0.0
    gap = bound - exact
    elogz = expected_log_partition(fj, pair, beta)
    return BoundReport(beta, bound, exact, gap, gap_qt, gap_dec, elogz)


def minimize_bound(fj: FullJoint, beta: float) -> tuple[VariationalPair, BoundReport]:
    """Tightest pair by coordinate descent; both steps are closed-form.

    The optimal q(t) is the exact marginal p(t) and the optimal decoder is
    the exact posterior p(xP|t); with them the bound is (1-beta)*I(t;xP)
    and the remaining gap is exactly I(t;xF).
    """
    p = _Pieces(fj)
    q_t = ProbTable((p.t_axis,), p.p_t)
    dec = _posterior_rows(p)
    pair = VariationalPair(q_t, Kernel((p.t_axis,), p.xp_axis, dec))
    return pair, ibo_upper_bound(fj, pair, beta)


def _posterior_rows(p: _Pieces) -> np.ndarray:
    """p(xP|t) rows; code symbols of zero mass get uniform placeholder rows."""
    n_x = p.p_xp.size
    rows = np.empty((p.p_t.size, n_x))
    for t in range(p.p_t.size):
        if p.p_t[t] > 0:
            rows[t] = p.j_xp_t[:, t] / p.p_t[t]
        else:
            rows[t] = 1.0 / n_x
    return rows


def log_partition(pair: VariationalPair, beta: float, x: int | str) -> float:
    """log Z_beta(xP) = log sum_s q(s) q(xP|s)^beta, via log-sum-exp.

    Terms with q(s) = 0 are dropped; q(xP|s) = 0 contributes weight 0 for
    beta > 0 and weight q(s) for beta = 0.  Returns -inf (with a warning)
    when no term survives.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    xi = pair.xp_axis.index(x) if isinstance(x, str) else int(x)
    q = pair.q_t.values
    dec = pair.q_xp_given_t.matrix()
    logs = []
    for s in range(q.size):
        if q[s] <= 0:
            continue
        lik = dec[s, xi]
        if lik <= 0:
            if beta == 0:
                logs.append(math.log(q[s]))
            continue
        logs.append(math.log(q[s]) + beta * math.log(lik))
    if not logs:
        warnings.warn(f"empty tempered support for xP={pair.xp_axis.symbols[xi]!r}")
        return -math.inf
    m = max(logs)
    return m + math.log(math.fsum(math.exp(v - m) for v in logs))


def tempered_posterior(pair: VariationalPair, beta: float, x: int | str) -> ProbTable:
    """q(t) q(xP|t)^beta / Z_beta(xP); ordinary Bayes at beta = 1."""
    logz = log_partition(pair, beta, x)
    if logz == -math.inf:
        raise ValueError("tempered posterior undefined: empty support (log Z = -inf)")
    xi = pair.xp_axis.index(x) if isinstance(x, str) else int(x)
    q = pair.q_t.values
    dec = pair.q_xp_given_t.matrix()
    out = np.zeros(q.size)
    for s in range(q.size):
        if q[s] <= 0:
            continue
        lik = dec[s, xi]
        if lik <= 0:
            if beta == 0:
                out[s] = math.exp(math.log(q[s]) - logz)
            continue
        out[s] = math.exp(math.log(q[s]) + beta * math.log(lik) - logz)
    return ProbTable((pair.t_axis,), out)


def expected_log_partition(fj: FullJoint, pair: VariationalPair, beta: float) -> float:
    """E_{p(xP)} log Z_beta(xP); -inf propagates if the support is empty."""
    _check_pair(fj, pair)
    p_xp = fj.joint.marginal(XP).values
    terms = []
    for x in range(p_xp.size):
        if p_xp[x] <= 0:
            continue
        lz = log_partition(pair, beta, x)
        if lz == -math.inf:
            return -math.inf
        terms.append(p_xp[x] * lz)
    return math.fsum(terms)


def tight_bound_value(fj: FullJoint, pair: VariationalPair, beta: float) -> tuple[float, float]:
    """(rhs, factorization_residual) of the normalizer form of the bound.

    rhs = -beta H(xP) - E log Z_beta(xP); the residual is
    E_{p(xP)} KL(p(t|xP) || tempered posterior) and satisfies
    ibo_upper_bound = rhs + residual whenever both sides are finite.
    """
    _check_pair(fj, pair)
    p = _Pieces(fj)
    elogz = expected_log_partition(fj, pair, beta)
    if elogz == -math.inf:
        return math.inf, math.inf
    rhs = -beta * p.h_xp - elogz
    tempered = np.empty_like(p.enc)
    for x in range(p.p_xp.size):
        if p.p_xp[x] <= 0:
            tempered[x] = 1.0 / p.p_t.size
            continue
        tempered[x] = tempered_posterior(pair, beta, x).values
    residual = _kl_rows(p.enc, tempered, p.p_xp)
    return rhs, residual


def encoder_from_pair(pair: VariationalPair, beta: float, t_name: str = "t") -> Kernel:
    """The encoder that the pair factorizes exactly: rows are tempered posteriors.

    By construction, tight_bound_value on a joint built from this encoder
    has zero factorization residual.
    """
    xp_axis = pair.xp_axis
    t_axis = pair.t_axis if pair.t_axis.name == t_name else pair.t_axis.renamed(t_name)
    rows = np.empty((xp_axis.size, t_axis.size))
    for x in range(xp_axis.size):
        rows[x] = tempered_posterior(pair, beta, x).values
    return Kernel((xp_axis,), t_axis, rows)


def bayes_pair_from_encoder(encoder: Kernel, reference: ProbTable) -> VariationalPair:
    """The beta = 1 factorizing pair for any reference weighting r(xP).

    q(t) = sum_x r(x) p(t|x) and q(xP|t) is the Bayes decoder under r;
    then q(t) q(xP|t) = r(xP) p(t|xP), so the tempered posterior at
    beta = 1 reproduces the encoder and the residual vanishes.
    """
    if reference.axes[0].symbols != encoder.from_axes[0].symbols:
        raise TableError("reference axis does not match the encoder source")
    r = reference.values
    p = encoder.matrix()
    q_t = r @ p
    t_axis = encoder.to_axis
    rows = np.empty((t_axis.size, r.size))
    for t in range(t_axis.size):
        if q_t[t] > 0:
            rows[t] = r * p[:, t] / q_t[t]
        else:
            rows[t] = 1.0 / r.size
    return VariationalPair(ProbTable((t_axis,), q_t), Kernel((t_axis,), encoder.from_axes[0], rows))


BOUNDS_CSV_HEADER = "beta,bound,exact_ibo,gap,gap_term_qt,gap_term_decoder,E_logZ,residual"


def bounds_to_csv(rows: list[tuple[BoundReport, float]]) -> str:
    from .engine import fmt12

    lines = [BOUNDS_CSV_HEADER]
    for rep, residual in rows:
        lines.append(
            ",".join(
                fmt12(v)
                for v in (
                    rep.beta,
                    rep.bound_value,
                    rep.exact_ibo,
                    rep.gap,
                    rep.gap_term_qt,
                    rep.gap_term_decoder,
                    rep.logZ_expectation,
                    residual,
                )
            )
        )
    return "\n".join(lines) + "\n"
