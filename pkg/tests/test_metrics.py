import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from conftest import random_configuration
from dimsynth.io import load_configuration
from dimsynth.jacobian import Configuration, JointPlacement
from dimsynth.metrics import (
    AllPrismatic,
    characteristic_length,
    condition_number,
    evaluate,
    manipulability,
    scaled_metrics,
)

Z = np.array([0.0, 0.0, 1.0])


def test_2r_block_at_right_angle():
    # linear block of the unit 2R arm with theta2 = 90 deg
    J = np.array([[-1.0, -1.0], [1.0, 0.0]])
    assert manipulability(J) == pytest.approx(1.0)


def test_identity():
    assert manipulability(np.eye(6)) == pytest.approx(1.0)


def test_wide_jacobian_uses_jjt():
    J = np.array([[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]])
    assert manipulability(J) == pytest.approx(2.0)


@pytest.mark.parametrize("seed", range(10))
def test_matches_svd(seed):
    J = np.random.default_rng(seed).normal(size=(6, 2))
    assert manipulability(J) == pytest.approx(np.prod(np.linalg.svd(J, compute_uv=False)), rel=1e-12)


def test_rank_deficient_is_zero():
    J = np.array([[1.0, 2.0], [2.0, 4.0], [0, 0]])
    assert manipulability(J) == pytest.approx(0.0, abs=1e-7)
    assert math.isinf(scaled_metrics(J, 1.0).kappa)


def test_rotation_invariance():
    rng = np.random.default_rng(0)
    J = rng.normal(size=(6, 3))
    R = Rotation.random(random_state=1).as_matrix()
    T = np.block([[R, np.zeros((3, 3))], [np.zeros((3, 3)), R]])
    assert manipulability(T @ J) == pytest.approx(manipulability(J), rel=1e-12)


def test_length_single_spherical():
    from dimsynth.topology import build_topology
    t = build_topology({"name": "s", "links": ["1", "2", "3"], "base": "1", "end_effector": "3",
                        "joints": [{"id": "j", "kind": "S", "between": ["1", "2"]},
                                   {"id": "k", "kind": "P", "between": ["2", "3"]}],
                        "actuated": [{"joint": "k", "component": "d"}]})
    cfg = Configuration({"j": JointPlacement(np.zeros(3)), "k": JointPlacement.from_axis(np.ones(3), Z)},
                        np.array([3.0, 4.0, 5.0]))
    assert characteristic_length(t, cfg) == pytest.approx(math.sqrt(50))


def test_length_axis_through_task_point_warns(topologies):
    t = topologies["planar-2R"]
    a = np.array([1.0, 1.0, 0.0])
    cfg = Configuration({"12": JointPlacement.from_axis(a, Z), "23": JointPlacement.from_axis(a, Z)}, a)
    assert characteristic_length(t, cfg) == 0.0
    rep = scaled_metrics(np.array([[1.0, 0], [0, 1], [0, 0]]), 0.0, n_linear=2)
    assert math.isnan(rep.mu_bar) and rep.warnings


def test_all_prismatic(topologies):
    t = topologies["2D-M645"]
    cfg = load_configuration("2D-M645", t)
    with pytest.raises(AllPrismatic):
        characteristic_length(t, cfg)
    rep = evaluate(t, cfg)
    assert rep.length is None and rep.mu_bar == rep.mu


def test_unit_length_is_identity_scaling():
    J = np.random.default_rng(3).normal(size=(6, 2))
    rep = scaled_metrics(J, 1.0)
    assert rep.mu_bar == pytest.approx(rep.mu)
    assert rep.kappa == pytest.approx(condition_number(np.linalg.svd(J, compute_uv=False)))


def test_one_dof_kappa_is_one():
    rep = scaled_metrics(np.random.default_rng(4).normal(size=(6, 1)), 2.5)
    assert rep.kappa == 1.0


def test_2d_m71_reference(topologies):
    t = topologies["2D-M71"]
    rep = evaluate(t, load_configuration("2D-M71", t))
    assert rep.mu == pytest.approx(173.16, abs=0.005)
    assert rep.kappa == pytest.approx(1.98, abs=0.005)
    assert rep.mu_bar == pytest.approx(0.2305, abs=5e-5)


@pytest.mark.parametrize("name,mu_bar,mu", [("3D-M1", 1.0113, 1058.9), ("4D-M1", 2.5607, 2074.4)])
def test_serial_reference(name, mu_bar, mu, topologies):
    t = topologies[name]
    rep = evaluate(t, load_configuration(name, t))
    # stored axes carry two decimals, hence the loose mu
    assert rep.mu_bar == pytest.approx(mu_bar, abs=5e-4)
    assert rep.mu == pytest.approx(mu, rel=1e-3)


def test_mu_bar_is_mu_times_det_scaling():
    J = np.random.default_rng(5).normal(size=(6, 3))
    rep = scaled_metrics(J, 4.0)
    assert rep.mu_bar == pytest.approx(rep.mu / 4.0 ** 3)
    Js = np.diag([0.25] * 3 + [1] * 3) @ J
    assert rep.sigma_product == pytest.approx(math.sqrt(np.linalg.det(Js.T @ Js)), rel=1e-10)


def test_kappa_at_least_one(topologies):
    rng = np.random.default_rng(6)
    for name in ("2D-M71", "3D-M1", "4D-M1", "1D-M10"):
        t = topologies[name]
        for _ in range(10):
            rep = evaluate(t, random_configuration(t, rng, (3, 4, 5)))
            assert rep.kappa >= 1.0
            assert np.all(np.diff(rep.sigma) <= 0)


def test_scaling_does_not_move_argmax():
    # 1-parameter family at fixed L: the 2R linear block over theta2
    thetas = np.linspace(0.05, math.pi - 0.05, 301)
    blocks = [np.array([[-math.sin(0.3) - math.sin(0.3 + q), -math.sin(0.3 + q)],
                        [math.cos(0.3) + math.cos(0.3 + q), math.cos(0.3 + q)],
                        [0.0, 0.0]]) for q in thetas]
    raw = [manipulability(b) for b in blocks]
    scaled = [scaled_metrics(b, 3.7, n_linear=2).mu_bar for b in blocks]
    assert np.argmax(raw) == np.argmax(scaled)
