import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from uncertrack import se3
from uncertrack.belief import (BeliefError, PoseBelief, compose_beliefs, fit_gaussian, invert_belief,
                               karcher_mean_rotation, monte_carlo_covariance, project_to_plane, relative_frobenius,
                               repair_psd, sample, wrap_angle)
from uncertrack.particles import ParticleSet
from uncertrack.se3 import Pose

from oracles import (compose_map, draws, mc_compose_cov, mc_invert_cov, mc_perturbations, numeric_compose_jacobian,
                     random_cov)


def test_exact_compose_is_deterministic():
    rng = np.random.default_rng(0)
    a = Pose(se3.exp_so3(rng.normal(size=3) * 0.5), rng.normal(size=3))
    b = Pose(se3.exp_so3(rng.normal(size=3) * 0.5), rng.normal(size=3))
    c = compose_beliefs(PoseBelief.exact(a), PoseBelief.exact(b))
    assert np.array_equal(c.cov, np.zeros((6, 6)))
    assert np.allclose(c.mean.matrix(), a.matrix() @ b.matrix())


def test_translation_only_cov_passes_through():
    cov = np.diag([0, 0, 0, 1e-6, 4e-6, 9e-6])
    a = PoseBelief(Pose.identity(), cov)
    b = PoseBelief.exact(Pose(se3.rot_z(0.3), [0.1, 0.2, 0.3]))
    assert np.allclose(compose_beliefs(a, b).cov, cov, atol=1e-18)


def test_compose_matches_monte_carlo():
    rng = np.random.default_rng(1)
    a = PoseBelief.from_sigmas(Pose.identity(), 0.05, 0.0)
    b = PoseBelief.exact(Pose(np.eye(3), [0.1, 0.0, 0.0]))
    mc = mc_compose_cov(a, b, 100_000, rng)
    assert relative_frobenius(compose_beliefs(a, b).cov, mc) < 0.05


def test_compose_random_beliefs_match_monte_carlo():
    rng = np.random.default_rng(2)
    a = PoseBelief(Pose(se3.exp_so3([0.3, -0.2, 0.5]), [0.2, -0.1, 0.4]), random_cov(rng, 0.04, 0.01))
    b = PoseBelief(Pose(se3.exp_so3([-0.1, 0.4, 0.2]), [0.05, 0.3, -0.2]), random_cov(rng, 0.03, 0.01))
    mc = mc_compose_cov(a, b, 100_000, rng)
    assert relative_frobenius(compose_beliefs(a, b).cov, mc) < 0.05


def test_compose_jacobians_match_finite_differences():
    from uncertrack.belief import compose_jacobians
    mean_a = Pose(se3.exp_so3([0.2, 0.1, -0.3]), [0.3, 0.1, 0.2])
    mean_b = Pose(se3.exp_so3([0.1, -0.2, 0.1]), [0.2, -0.4, 0.1])
    ja, jb = compose_jacobians(mean_a, mean_b)
    assert np.abs(np.hstack([ja, jb]) - numeric_compose_jacobian(mean_a, mean_b)).max() < 1e-7


def test_compose_error_shrinks_with_covariance():
    # common draws, compared with their finite-difference linearization, so
    # sampling noise cancels and only the nonlinearity remains
    rng = np.random.default_rng(3)
    mean_a = Pose(se3.exp_so3([0.2, 0.1, -0.3]), [0.3, 0.1, 0.2])
    mean_b = Pose(se3.exp_so3([0.1, -0.2, 0.1]), [0.2, -0.4, 0.1])
    sig = np.array([0.2] * 3 + [0.01] * 3 + [0.15] * 3 + [0.01] * 3)
    z = rng.standard_normal((50_000, 12)) * sig
    j = numeric_compose_jacobian(mean_a, mean_b)
    errs = []
    for s in (1.0, 0.25, 0.0625):
        x = math.sqrt(s) * z
        f = compose_map(mean_a, mean_b, x[:, :6], x[:, 6:])
        lin = x @ j.T
        errs.append(relative_frobenius(np.cov(f.T), np.cov(lin.T)))
    assert errs[0] > errs[1] > errs[2]


def test_invert_exact_and_identity():
    a = Pose(se3.rot_z(0.7), [1.0, 2.0, 3.0])
    inv = invert_belief(PoseBelief.exact(a))
    assert np.array_equal(inv.cov, np.zeros((6, 6)))
    assert np.allclose(inv.mean.matrix(), np.linalg.inv(a.matrix()))
    cov = np.diag([1e-4, 2e-4, 3e-4, 1e-6, 2e-6, 3e-6])
    got = invert_belief(PoseBelief(Pose.identity(), cov)).cov
    assert np.allclose(np.linalg.eigvalsh(got), np.linalg.eigvalsh(cov))


def test_invert_matches_monte_carlo():
    rng = np.random.default_rng(4)
    a = PoseBelief(Pose(se3.exp_so3([0.4, -0.3, 0.9]), [0.5, -0.2, 0.3]), random_cov(rng, 0.05, 0.01))
    assert relative_frobenius(invert_belief(a).cov, mc_invert_cov(a, 100_000, rng)) < 0.05


def test_compose_with_own_inverse_is_identity_mean():
    rng = np.random.default_rng(5)
    a = PoseBelief(Pose(se3.exp_so3([0.1, 0.2, 0.3]), [1, 2, 3]), random_cov(rng, 0.02, 0.01))
    c = compose_beliefs(a, invert_belief(a))
    assert np.abs(c.mean.matrix() - np.eye(4)).max() < 1e-12


def test_rejects_non_psd():
    with pytest.raises(BeliefError, match="eigenvalue"):
        PoseBelief(Pose.identity(), np.diag([1, 1, 1, 1, 1, -1e-6]))


def test_repair_clamps_tiny_negative():
    m = np.diag([1.0, 2.0, -1e-14])
    out = repair_psd(m)
    assert np.linalg.eigvalsh(out).min() >= 0.0
    assert np.allclose(out, np.diag([1.0, 2.0, 0.0]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_outputs_stay_psd(seed):
    rng = np.random.default_rng(seed)
    a = PoseBelief(Pose(se3.exp_so3(rng.normal(size=3) * 0.5), rng.normal(size=3)), random_cov(rng, 0.1, 0.05))
    b = PoseBelief(Pose(se3.exp_so3(rng.normal(size=3) * 0.5), rng.normal(size=3)), random_cov(rng, 0.1, 0.05))
    for c in (compose_beliefs(a, b), invert_belief(a)):
        assert np.linalg.eigvalsh(c.cov).min() >= -1e-12
        assert np.array_equal(c.cov, c.cov.T)


def test_sample_zero_cov_copies_mean():
    m = Pose(se3.rot_z(0.2), [1, 2, 3])
    p = sample(PoseBelief.exact(m), 5, np.random.default_rng(0))
    assert len(p) == 5
    for i in range(5):
        assert np.allclose(p.pose(i).matrix(), m.matrix())


def test_sample_covariance_and_determinism():
    cov = np.diag([0.02**2, 0.01**2, 0.03**2, 1e-6, 4e-6, 2e-6])
    b = PoseBelief(Pose(se3.rot_z(0.5), [0.1, 0.2, 0.3]), cov)
    p = sample(b, 100_000, np.random.default_rng(7))
    xi = mc_perturbations(b.mean.r, b.mean.t, p.rotations(), p.translations())
    assert relative_frobenius(np.cov(xi.T, bias=True), cov) < 0.05
    q = sample(b, 100_000, np.random.default_rng(7))
    assert np.array_equal(p.states, q.states)


def test_sample_rejects_zero():
    with pytest.raises(BeliefError):
        sample(PoseBelief.exact(Pose.identity()), 0, np.random.default_rng(0))


def test_fit_identical_particles():
    m = Pose(se3.rot_z(0.3), [0.1, 0.0, 0.0])
    b = fit_gaussian(ParticleSet.from_poses([m] * 4))
    assert np.allclose(b.mean.matrix(), m.matrix())
    assert np.abs(b.cov).max() < 1e-24


def test_fit_two_point_variance():
    ps = ParticleSet.from_poses([Pose(np.eye(3), [0.001, 0, 0]), Pose(np.eye(3), [-0.001, 0, 0])])
    b = fit_gaussian(ps)
    assert b.cov[3, 3] == pytest.approx(1e-6, rel=1e-12)


def test_fit_sample_roundtrip():
    rng = np.random.default_rng(8)
    b = PoseBelief(Pose(se3.exp_so3([0.2, 0.1, -0.4]), [0.3, -0.1, 0.2]), random_cov(rng, 0.05, 0.01))
    f = fit_gaussian(sample(b, 100_000, rng))
    assert relative_frobenius(f.cov, b.cov) < 0.05
    assert np.linalg.norm(se3.pose_error(f.mean, b.mean)) < 1e-3


def test_fit_sample_contraction():
    rng = np.random.default_rng(9)
    b = PoseBelief(Pose(se3.exp_so3([0.1, 0.2, 0.3]), [0, 0, 0]), np.diag([0.03**2] * 3 + [1e-4] * 3))
    wins = 0
    for _ in range(20):
        e_small = relative_frobenius(fit_gaussian(sample(b, 1000, rng)).cov, b.cov)
        e_big = relative_frobenius(fit_gaussian(sample(b, 100_000, rng)).cov, b.cov)
        wins += e_big < e_small
    assert wins >= 19


def test_fit_rejects_bad_sets():
    with pytest.raises(BeliefError):
        fit_gaussian(ParticleSet.from_poses([Pose.identity()]))
    ps = ParticleSet.from_poses([Pose.identity()] * 3, weights=[0, 0, 0])
    with pytest.raises(BeliefError):
        fit_gaussian(ps)


def test_karcher_mean_matches_scipy():
    rng = np.random.default_rng(10)
    centre = se3.exp_so3([0.5, -0.2, 0.8])
    rs = Rotation.from_rotvec(rng.normal(scale=0.2, size=(500, 3))).as_matrix() @ centre
    w = rng.uniform(size=500)
    w /= w.sum()
    got = karcher_mean_rotation(rs, w)
    # at the intrinsic mean the weighted log residuals vanish
    resid = w @ Rotation.from_matrix(rs @ got.T).as_rotvec()
    assert np.linalg.norm(resid) < 1e-9


def test_monte_carlo_covariance():
    m = Pose(se3.rot_z(0.1), [1, 0, 0])
    b = monte_carlo_covariance(lambda: m, 10)
    assert np.abs(b.cov).max() < 1e-24
    rng = np.random.default_rng(11)
    cov = np.diag([0.02**2, 0.03**2, 0.01**2, 1e-6, 1e-6, 4e-6])
    truth = PoseBelief(m, cov)
    draw = iter(sample(truth, 100_000, rng).states)
    from uncertrack.particles import states_to_poses

    def sampler():
        r, t = states_to_poses(next(draw)[None])
        return Pose(r[0], t[0])

    assert relative_frobenius(monte_carlo_covariance(sampler, 100_000).cov, cov) < 0.05
    with pytest.raises(BeliefError):
        monte_carlo_covariance(lambda: m, 1)


def test_project_axis_aligned():
    cov = np.diag([1e-4, 2e-4, 3e-4, 1e-6, 2e-6, 5e-6])
    b = PoseBelief(Pose(se3.rot_z(0.4), [0.5, 0.2, 0.1]), cov)
    p = project_to_plane(b, Pose.identity())
    assert np.allclose(p.cov, np.diag([1e-6, 2e-6, 3e-4]))
    assert np.allclose(p.mean, [0.5, 0.2, 0.4])
    z = project_to_plane(PoseBelief.exact(b.mean), Pose.identity())
    assert np.array_equal(z.cov, np.zeros((3, 3)))


def test_project_rotated_table_swaps_variances():
    cov = np.diag([0, 0, 3e-4, 1e-6, 4e-6, 0])
    b = PoseBelief(Pose.identity(), cov)
    table = Pose(se3.rot_z(math.pi / 2), [0, 0, 0])
    p = project_to_plane(b, table)
    assert p.cov[0, 0] == pytest.approx(4e-6)
    assert p.cov[1, 1] == pytest.approx(1e-6)
    assert p.cov[2, 2] == pytest.approx(3e-4)
    assert p.mean[2] == pytest.approx(-math.pi / 2)


def test_wrap_angle_range():
    assert wrap_angle(math.pi) == math.pi
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)


def test_belief_json_roundtrip():
    rng = np.random.default_rng(12)
    b = PoseBelief(Pose(se3.rot_z(0.2), [1, 2, 3]), random_cov(rng, 0.01, 0.01))
    d = json.loads(json.dumps(b.to_dict()))
    assert len(d["cov"]) == 36
    c = PoseBelief.from_dict(d)
    assert np.array_equal(b.cov, c.cov)
