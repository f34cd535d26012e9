"""Acceptance suite: one test per release criterion, at the stated tolerance.

Each test prints a single PASS line with the measured worst case, so a
plain `pytest -s tests/test_acceptance.py` doubles as the acceptance
report.  Seeds are fixed; nothing here depends on wall-clock state.
"""

import json
import math
import time

import numpy as np
import pytest

from ibolab.bounds import (
    VariationalPair,
    ibo_upper_bound,
    minimize_bound,
    tempered_posterior,
    tight_bound_value,
)
from ibolab.engine import (
    IBOKind,
    IBOSpec,
    OptimizerOptions,
    equivalence_check,
    grid_oracle,
    optimize_encoder,
)
from ibolab.cli import main as cli_main
from ibolab.info import conditional_mutual_information, mutual_information
from ibolab.pathologies import (
    DeterministicMap,
    QuantizationSpec,
    Uniform01,
    discrete_self_info,
    identity_map,
    quantized_mi_divergence,
)
from ibolab.tables import Kernel, ProbTable, integer_alphabet, uniform_table
from ibolab.training import (
    dataset_losses,
    feasibility_mask,
    generalization_report,
    gibbs_encoder,
    optimize_trained_ibo,
    trained_grid_oracle,
    zero_one_loss,
)
from ibolab.world import (
    XF,
    XP,
    binary_symmetric_world,
    build_joint,
    info_report,
    random_encoder,
    world_to_json,
)

from conftest import random_world

T2 = integer_alphabet("t", 2)
X2 = integer_alphabet("x", 2)


def _model_a():
    return binary_symmetric_world(flip=0.1, train_size=2, future_size=1)


def _random_pair(fj, rng):
    t_axis = fj.encoder.to_axis
    xp_axis = fj.joint.axis(XP)
    q_t = ProbTable((t_axis,), rng.dirichlet(np.ones(t_axis.size) * 2.0))
    dec = Kernel((t_axis,), xp_axis, rng.dirichlet(np.ones(xp_axis.size) * 2.0, size=t_axis.size))
    return VariationalPair(q_t, dec)


def test_criterion_1_identity_suite():
    """Chain rule, Markov identity, and the decomposition on 200 random worlds."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(200):
        world = random_world(rng, max_phi=3, max_x=3, max_n=3, max_m=2)
        t_size = int(rng.integers(1, 5))
        fj = build_joint(world, random_encoder(world, t_size, rng))
        r = info_report(fj)
        markov = abs(r.I_t_xPxF - r.I_t_xP)
        decomp = abs(r.I_t_xF - r.I_t_xP + r.I_t_xP_given_xF)
        if fj.has_future:
            lhs = mutual_information(fj.joint, "t", (XP, XF))
            rhs = mutual_information(fj.joint, "t", XP) + conditional_mutual_information(
                fj.joint, "t", XF, XP
            )
            chain = abs(lhs - rhs)
        else:
            chain = 0.0
        worst = max(worst, markov, decomp, chain)
        assert markov <= 1e-10 and decomp <= 1e-10 and chain <= 1e-10
    elapsed = time.perf_counter() - t0
    assert elapsed <= 60.0
    print(f"\nACCEPTANCE 1 PASS identity suite: 200 worlds, max residual {worst:.3e}, {elapsed:.1f}s")


def test_criterion_2_bound_suite():
    """Upper bound, gap decomposition, optimal-pair gap, and normalizer form."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(100):
        world = random_world(rng, max_phi=3, max_x=3, max_n=2, max_m=2)
        t_size = int(rng.integers(1, 4))
        fj = build_joint(world, random_encoder(world, t_size, rng))
        beta = float(rng.uniform(0.0, 3.0))
        pair = _random_pair(fj, rng)
        rep = ibo_upper_bound(fj, pair, beta)
        assert rep.bound_value >= rep.exact_ibo - 1e-10
        gap_residual = abs(rep.gap - (rep.gap_term_qt + rep.gap_term_decoder))
        assert gap_residual <= 1e-10
        rhs, residual = tight_bound_value(fj, pair, beta)
        vibo_residual = abs(rep.bound_value - (rhs + residual))
        assert vibo_residual <= 1e-10
        r = info_report(fj)
        _, best = minimize_bound(fj, beta)
        optimal_gap_residual = abs(best.gap - r.I_t_xF)
        assert optimal_gap_residual <= 1e-10
        worst = max(worst, gap_residual, vibo_residual, optimal_gap_residual)
    elapsed = time.perf_counter() - t0
    assert elapsed <= 120.0
    print(f"\nACCEPTANCE 2 PASS bound suite: 100 tuples, max residual {worst:.3e}, {elapsed:.1f}s")


def test_criterion_3_equivalence():
    """min IBP(beta) = -beta max PIBP(1/beta) on the 0.05 grid; optimizers track the oracle."""
    t0 = time.perf_counter()
    world = _model_a()
    worst_identity = 0.0
    worst_gap = 0.0
    for beta in (0.5, 1.0, 2.0, 5.0):
        rep = equivalence_check(world, beta, resolution=0.05, t_axis=T2)
        assert rep.identity_residual <= 1e-9
        assert rep.optimizer_sets_match
        worst_identity = max(worst_identity, rep.identity_residual)
        ibp_spec = IBOSpec(IBOKind.IBP, beta)
        res_ibp = optimize_encoder(world, ibp_spec, OptimizerOptions(seed=33), T2)
        gap_ibp = res_ibp.value - rep.min_ibp
        assert gap_ibp <= 1e-3
        pibp_spec = IBOSpec(IBOKind.PIBP, 1.0 / beta)
        res_pibp = optimize_encoder(world, pibp_spec, OptimizerOptions(seed=44), T2)
        gap_pibp = rep.max_pibp - res_pibp.value
        assert gap_pibp <= 1e-3
        worst_gap = max(worst_gap, gap_ibp, gap_pibp)
    elapsed = time.perf_counter() - t0
    assert elapsed <= 600.0
    print(
        f"\nACCEPTANCE 3 PASS equivalence: identity residual {worst_identity:.3e}, "
        f"optimizer-oracle gap {worst_gap:.3e}, {elapsed:.1f}s"
    )


def test_criterion_4_tempered_bayes():
    """beta=1 is Bayes to 1e-12 per entry; beta=0 the prior; hand normalizer case."""
    from ibolab.tables import product_join

    rng = np.random.default_rng(404)
    worst = 0.0
    for _ in range(50):
        nt, nx = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        t_axis = integer_alphabet("t", nt)
        x_axis = integer_alphabet("xP", nx)
        q_t = ProbTable((t_axis,), rng.dirichlet(np.ones(nt) * 2.0))
        dec = Kernel((t_axis,), x_axis, rng.dirichlet(np.ones(nx) * 2.0, size=nt))
        pair = VariationalPair(q_t, dec)
        bayes = product_join(q_t, dec).condition("t", "xP").matrix()
        for x in range(nx):
            err = np.max(np.abs(tempered_posterior(pair, 1.0, x).values - bayes[x]))
            assert err <= 1e-12
            worst = max(worst, err)
        prior_back = tempered_posterior(pair, 0.0, 0).values
        assert np.array_equal(prior_back, q_t.values) or np.max(np.abs(prior_back - q_t.values)) <= 1e-15
    hand_pair = VariationalPair(
        ProbTable((T2,), np.array([0.5, 0.5])),
        Kernel((T2,), integer_alphabet("xP", 2), np.array([[0.8, 0.2], [0.2, 0.8]])),
    )
    from ibolab.bounds import log_partition

    assert math.exp(log_partition(hand_pair, 2.0, 0)) == pytest.approx(0.34, abs=1e-12)
    post = tempered_posterior(hand_pair, 2.0, 0).values
    assert abs(post[0] - 16.0 / 17.0) <= 1e-9
    assert abs(post[1] - 1.0 / 17.0) <= 1e-9
    print(f"\nACCEPTANCE 4 PASS tempered Bayes: 50 pairs, max Bayes deviation {worst:.3e}")


def test_criterion_5_theorem_battery():
    """Zero bound violations over 200 Gibbs triples; 1/sqrt(n) bound scaling."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(505)
    violations = 0
    min_margin = math.inf
    for _ in range(200):
        world = random_world(rng, max_phi=3, max_x=3, max_n=3, max_m=1)
        n_theta = int(rng.integers(2, 4))
        theta_axis = integer_alphabet("theta", n_theta)
        from ibolab.training import LossTable

        lt = LossTable(theta_axis, world.x_axis, rng.uniform(0.0, 2.0, size=(n_theta, world.x_axis.size)))
        prior = ProbTable((theta_axis,), rng.dirichlet(np.ones(n_theta)))
        alpha = float(rng.uniform(0.0, 30.0))
        enc = gibbs_encoder(world, lt, prior, alpha)
        rep = generalization_report(world, enc, lt)
        if not rep.holds:
            violations += 1
        min_margin = min(min_margin, rep.mi_bound - rep.exact_gap)
    assert violations == 0
    # scaling: parameters depend only on the first sample, so I is constant in n
    lt = zero_one_loss(X2)
    base = np.array([[0.85, 0.15], [0.2, 0.8]])
    bounds = []
    for n in (2, 4, 8, 16):
        world = binary_symmetric_world(flip=0.1, train_size=n, future_size=0)
        ds = world.past_axis()
        rows = np.array([base[tup[0]] for tup in ds.tuples()])
        rep = generalization_report(world, Kernel((ds.axis,), lt.theta_axis, rows), lt)
        assert rep.holds
        bounds.append(rep.mi_bound)
    for a, b in zip(bounds, bounds[1:]):
        assert abs(a / b - math.sqrt(2.0)) <= 0.1 * math.sqrt(2.0)
    elapsed = time.perf_counter() - t0
    assert elapsed <= 300.0
    print(
        f"\nACCEPTANCE 5 PASS bound battery: 0/200 violations, min margin {min_margin:.3e}, "
        f"1/sqrt(n) ratios within 10%, {elapsed:.1f}s"
    )


def test_criterion_6_trained_ibo():
    """Feasibility is hard, the optimizer tracks the restricted oracle, and the
    min-form and IBO-form optima are negations achieved by the same encoder."""
    world = _model_a()
    lt = zero_one_loss(X2)
    worst_mass = 0.0
    worst_gap = 0.0
    worst_negation = 0.0
    for lam in (0.0, 0.5, 1.0, 2.0):
        res = optimize_trained_ibo(world, lt, eps=0.5, lam=lam, opts=OptimizerOptions(seed=66))
        mask = feasibility_mask(world, lt, 0.5)
        outside = float(res.encoder.matrix()[~mask].max(initial=0.0))
        assert outside <= 1e-12
        _, oracle_min = trained_grid_oracle(world, lt, eps=0.5, lam=lam, resolution=0.05)
        gap = res.min_objective - oracle_min
        assert gap <= 1e-3
        negation = abs(res.min_objective + res.ibo_value)
        assert negation <= 1e-9
        r = info_report(build_joint(world, res.encoder))
        assert res.min_objective == pytest.approx(r.I_t_xF + lam * r.I_t_xP, abs=1e-12)
        worst_mass = max(worst_mass, outside)
        worst_gap = max(worst_gap, gap)
        worst_negation = max(worst_negation, negation)
    print(
        f"\nACCEPTANCE 6 PASS trained IBO: infeasible mass {worst_mass:.1e}, "
        f"oracle gap {worst_gap:.3e}, negation residual {worst_negation:.3e}"
    )


def test_criterion_7_appendix():
    """I_k = ln k exactly for uniform/identity at every k in 2..256; the
    non-injective two-plateau map reports H(f(X)) != H(X)."""
    t0 = time.perf_counter()
    spec = QuantizationSpec(Uniform01(), identity_map(), tuple(range(2, 257)))
    rows = quantized_mi_divergence(spec)
    worst = max(abs(r.I - math.log(r.k)) for r in rows)
    assert worst <= 1e-12
    x8 = integer_alphabet("x", 8)
    halves = DeterministicMap.from_function(x8, integer_alphabet("half", 2), lambda i: i // 4)
    res = discrete_self_info(uniform_table(x8), halves)
    assert res.I == pytest.approx(res.H_fX, abs=1e-12)
    assert res.H_fX == pytest.approx(math.log(2), abs=1e-12)
    assert res.H_X == pytest.approx(math.log(8), abs=1e-12)
    assert abs(res.H_fX - res.H_X) > 1.0
    elapsed = time.perf_counter() - t0
    assert elapsed <= 10.0
    print(
        f"\nACCEPTANCE 7 PASS appendix: max |I_k - ln k| = {worst:.3e} over k=2..256, "
        f"H(f(X))={res.H_fX:.6f} != H(X)={res.H_X:.6f}, {elapsed:.1f}s"
    )


def test_criterion_8_reproducibility(tmp_path):
    """Identical config + seed => byte-identical CSVs across CLI reruns."""
    world = _model_a()
    (tmp_path / "world.json").write_text(world_to_json(world))
    (tmp_path / "loss.json").write_text(zero_one_loss(X2).to_json())
    sweep_cfg = {
        "world": "world.json",
        "t_alphabet": 2,
        "objective": {"kind": "IBP"},
        "sweep": {"nu_values": [0.0, 1.0, 5.0]},
        "optimizer": {"restarts": 4},
        "seed": 2024,
        "output_dir": None,
    }
    gen_cfg = {
        "world": "world.json",
        "loss": "loss.json",
        "alpha_values": [0.1, 1.0, 10.0],
        "seed": 2024,
        "output_dir": None,
    }
    outputs = {}
    for rep in ("a", "b"):
        for name, cfg, cmd in (("sweep", sweep_cfg, "sweep"), ("gen", gen_cfg, "genbound")):
            out = tmp_path / f"{name}_{rep}"
            doc = dict(cfg)
            doc["output_dir"] = str(out)
            cfg_path = tmp_path / f"{name}_{rep}.json"
            cfg_path.write_text(json.dumps(doc))
            assert cli_main([cmd, "--config", str(cfg_path)]) == 0
            for csv_name in ("sweep.csv", "genbound.csv"):
                p = out / csv_name
                if p.exists():
                    outputs[(name, rep, csv_name)] = p.read_bytes()
    assert outputs[("sweep", "a", "sweep.csv")] == outputs[("sweep", "b", "sweep.csv")]
    assert outputs[("gen", "a", "genbound.csv")] == outputs[("gen", "b", "genbound.csv")]
    print("\nACCEPTANCE 8 PASS reproducibility: sweep and genbound CSVs byte-identical across reruns")
