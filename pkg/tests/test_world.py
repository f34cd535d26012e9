import math

import numpy as np
import pytest

from ibolab.info import entropy, mutual_information
from ibolab.tables import Kernel, ProbTable, TableError, integer_alphabet
from ibolab.world import (
    XF,
    XP,
    BudgetExceededError,
    DatasetAxis,
    GenerativeWorld,
    binary_symmetric_world,
    build_joint,
    constant_encoder,
    decomposition_check,
    identity_encoder,
    info_report,
    random_encoder,
    world_from_json,
    world_to_json,
)

from conftest import random_world

# frozen oracles for the flip=0.1, N=2 world (direct mixture sums)
P_XP_00 = 0.41000000000000003  # 0.5*0.81 + 0.5*0.01
P_XP_01 = 0.09000000000000001  # 0.5*0.09 + 0.5*0.09
H_XP = 1.1645406673700396  # -sum p ln p over {0.41, 0.09, 0.09, 0.41}
I_XP_XF = 0.2846565093010527  # brute-force MI on the 4x2 (xP, xF) joint


def test_dataset_axis_ordering():
    x = integer_alphabet("x", 2)
    ds = DatasetAxis.build(x, 2, XP)
    assert ds.axis.symbols == ("(0,0)", "(0,1)", "(1,0)", "(1,1)")
    assert ds.index_tuple(2) == (1, 0)
    ds0 = DatasetAxis.build(x, 0, XF)
    assert ds0.axis.symbols == ("()",)


def test_xp_marginal_matches_mixture(model_a):
    p = model_a.xp_marginal()
    assert p[0] == pytest.approx(P_XP_00, abs=1e-15)
    assert p[1] == pytest.approx(P_XP_01, abs=1e-15)
    assert p[2] == pytest.approx(P_XP_01, abs=1e-15)
    assert p[3] == pytest.approx(P_XP_00, abs=1e-15)


def test_build_joint_m0_axes():
    world = binary_symmetric_world(flip=0.1, train_size=2, future_size=0)
    fj = build_joint(world, identity_encoder(world))
    assert fj.joint.axis_names == ("phi", XP, "t")
    # marginal over xP matches the direct iid computation
    assert np.max(np.abs(fj.joint.marginal(XP).values - world.xp_marginal())) < 1e-14


def test_build_joint_sums_to_one(model_a, rng):
    fj = build_joint(model_a, random_encoder(model_a, 3, rng))
    assert math.fsum(fj.joint.values.ravel().tolist()) == pytest.approx(1.0, abs=1e-12)


def test_build_joint_requires_matching_encoder(model_a):
    bad_axis = integer_alphabet(XP, 3)
    enc = Kernel((bad_axis,), integer_alphabet("t", 2), np.full((3, 2), 0.5))
    with pytest.raises(TableError):
        build_joint(model_a, enc)


def test_budget_guard():
    with pytest.raises(BudgetExceededError, match="cells"):
        binary_symmetric_world(train_size=24, future_size=0, cell_budget=10**6)
    world = binary_symmetric_world(train_size=2, future_size=1, cell_budget=40)
    with pytest.raises(BudgetExceededError):
        build_joint(world, identity_encoder(world))  # 2*4*2*4 = 64 > 40


def test_deterministic_channel_identity_encoder():
    world = binary_symmetric_world(flip=0.0, train_size=2, future_size=0)
    fj = build_joint(world, identity_encoder(world))
    i_xp_phi = mutual_information(fj.joint, XP, "phi")
    assert i_xp_phi == pytest.approx(entropy(world.phi_prior), abs=1e-12)


def test_markov_structure_of_joint(model_a, rng):
    # p(xF | phi, xP, t) = p(xF | phi) and p(t | phi, xP, xF) = p(t | xP)
    fj = build_joint(model_a, random_encoder(model_a, 2, rng))
    j = fj.joint.values  # (phi, xP, xF, t)
    p_phi_xp = j.sum(axis=(2, 3))
    p_xf_given_phi = model_a.obs_channel.rows
    for f in range(2):
        for xp in range(4):
            mass = p_phi_xp[f, xp]
            if mass == 0:
                continue
            cond_xf = j[f, xp].sum(axis=1) / mass
            assert np.max(np.abs(cond_xf - p_xf_given_phi[f])) < 1e-12
    enc = fj.encoder.matrix()
    for f in range(2):
        for xp in range(4):
            for xf in range(2):
                mass = j[f, xp, xf].sum()
                if mass == 0:
                    continue
                assert np.max(np.abs(j[f, xp, xf] / mass - enc[xp])) < 1e-12


def test_info_report_constant_encoder(model_a):
    fj = build_joint(model_a, constant_encoder(model_a, 2))
    r = info_report(fj)
    assert r.I_t_xP == 0.0 and r.I_t_xF == 0.0
    assert r.I_t_xP_given_xF == 0.0 and r.I_t_xPxF == 0.0


def test_info_report_identity_encoder(model_a):
    fj = build_joint(model_a, identity_encoder(model_a))
    r = info_report(fj)
    assert r.I_t_xP == pytest.approx(H_XP, abs=1e-12)
    assert r.H_xP == pytest.approx(H_XP, abs=1e-14)
    assert r.I_t_xF == pytest.approx(I_XP_XF, abs=1e-12)
    # cross-check against direct MI on the (xP, xF) marginal
    direct = mutual_information(fj.joint, XP, XF)
    assert r.I_t_xF == pytest.approx(direct, abs=1e-12)


def test_decomposition_residuals_random_encoders(model_a, rng):
    worst = 0.0
    for _ in range(50):
        enc = random_encoder(model_a, int(rng.integers(1, 5)), rng)
        fj = build_joint(model_a, enc)
        r1, r2 = decomposition_check(fj)
        worst = max(worst, r1, r2)
    assert worst <= 1e-10


def test_decomposition_constant_encoder(model_a):
    fj = build_joint(model_a, constant_encoder(model_a))
    r1, r2 = decomposition_check(fj)
    assert r1 <= 1e-15 and r2 <= 1e-15


def test_future_never_beats_past(rng):
    for _ in range(25):
        world = random_world(rng)
        enc = random_encoder(world, int(rng.integers(1, 5)), rng)
        r = info_report(build_joint(world, enc))
        assert r.I_t_xF <= r.I_t_xP + 1e-10


def test_marginalizing_out_t_recovers_world(model_a, rng):
    enc = random_encoder(model_a, 3, rng)
    fj = build_joint(model_a, enc)
    got = fj.joint.marginal(["phi", XP, XF])
    expect = build_joint(model_a, constant_encoder(model_a)).joint.marginal(["phi", XP, XF])
    assert np.max(np.abs(got.values - expect.values)) < 1e-12


def test_sample_order_permutation_invariance(model_a, rng):
    # swapping the two training samples permutes the xP axis; the report is unchanged
    enc = random_encoder(model_a, 3, rng)
    perm = [0, 2, 1, 3]  # (a,b) -> (b,a) on pair indices
    rows = enc.matrix()[perm]
    enc_perm = Kernel(enc.from_axes, enc.to_axis, rows)
    r1 = info_report(build_joint(model_a, enc))
    r2 = info_report(build_joint(model_a, enc_perm))
    for f in ("I_t_xP", "I_t_xF", "I_t_xP_given_xF", "I_t_xPxF", "H_xP"):
        assert getattr(r1, f) == pytest.approx(getattr(r2, f), abs=1e-10)


def test_supervised_world_label_projection(rng):
    # observations are feature-label pairs x = (z, y); the label part of the
    # dataset axis is recovered by a per-sample projection, and coding the
    # dataset can never say more about labels than about the full data
    from ibolab.info import mutual_information
    from ibolab.tables import product_alphabet
    from ibolab.world import project_dataset_axis

    z = integer_alphabet("z", 2)
    y = integer_alphabet("y", 2)
    x = product_alphabet("x", z, y)
    phi = integer_alphabet("phi", 2)
    prior = ProbTable((phi,), np.array([0.5, 0.5]))
    # p((z,y)|phi): z uniform, y = z xor phi with 20% label noise
    rows = np.zeros((2, 4))
    for f in range(2):
        for zi in range(2):
            clean = zi ^ f
            rows[f, 2 * zi + clean] = 0.5 * 0.8
            rows[f, 2 * zi + (1 - clean)] = 0.5 * 0.2
    world = GenerativeWorld(prior, Kernel((phi,), x, rows), train_size=2, future_size=0)
    enc = random_encoder(world, 3, rng)
    fj = build_joint(world, enc)
    ds = world.past_axis()
    label_of = [i % 2 for i in range(4)]  # pair index -> label index
    projected = project_dataset_axis(fj.joint, ds, label_of, y, "yP")
    i_t_yp = mutual_information(projected, "t", "yP")
    i_t_xp = mutual_information(fj.joint, "t", XP)
    assert 0.0 <= i_t_yp <= i_t_xp + 1e-12
    # oracle: rebuild the (t, yP) joint by direct summation over pair tuples
    j = fj.joint.values  # (phi, xP, t)
    direct = np.zeros((4, enc.to_axis.size))
    for d in range(ds.size):
        tup = ds.index_tuple(d)
        label_flat = 2 * label_of[tup[0]] + label_of[tup[1]]
        direct[label_flat] += j[:, d, :].sum(axis=0)
    got = projected.marginal(["yP", "t"]).values
    assert np.max(np.abs(got - direct)) < 1e-14


def test_world_json_roundtrip(model_a):
    text = world_to_json(model_a, integer_alphabet("t", 3))
    world, t_axis = world_from_json(text)
    assert world.train_size == 2 and world.future_size == 1
    assert t_axis is not None and t_axis.size == 3
    assert np.array_equal(world.phi_prior.values, model_a.phi_prior.values)
    assert np.array_equal(world.obs_channel.rows, model_a.obs_channel.rows)
    world2, t2 = world_from_json('{"phi_prior": %s, "obs_channel": %s, "N": 1, "M": 0, "t_alphabet": 4}'
                                 % (model_a.phi_prior.to_json(), model_a.obs_channel.to_json()))
    assert t2.size == 4
