import math

import numpy as np
import pytest

from conftest import random_configuration
from dimsynth.design import DesignLayout
from dimsynth.fivebar import FiveLinkConfig, five_link_configuration
from dimsynth.jacobian import assemble_system, reduced_jacobian
from dimsynth.metrics import manipulability
from dimsynth.objectives import Evaluator, SerialTopology, objective_f1, objective_f2

A = (3.0, 4.0, 5.0)


def test_layout_names(topologies):
    layout = DesignLayout.for_topology(topologies["2D-M71"])
    assert layout.names[:5] == ("r13x", "r13y", "r13z", "beta13", "phi13")
    assert "beta42" not in layout.names and layout.size == 4 * 5 + 3
    assert layout.upper[layout.names.index("beta13")] == pytest.approx(math.pi)
    assert layout.upper[layout.names.index("phi13")] == pytest.approx(2 * math.pi)


@pytest.mark.parametrize("name", ["2D-M71", "1D-M10", "4D-M1"])
def test_pack_unpack_round_trip(name, topologies):
    layout = DesignLayout.for_topology(topologies[name])
    rng = np.random.default_rng(0)
    for _ in range(10):
        x = layout.sample(rng)
        assert np.array_equal(layout.pack(layout.unpack(x, A)), x)
        assert np.all(x > layout.lower) and np.all(x < layout.upper)


def test_layout_arrays_match_configuration(topologies):
    t = topologies["2D-M71"]
    layout = DesignLayout.for_topology(t)
    x = layout.sample(np.random.default_rng(1))
    cfg = layout.unpack(x, A)
    pos, axes = layout.arrays(x)
    for k, jid in enumerate(layout.joint_ids):
        assert np.array_equal(pos[k], cfg.placements[jid].position)
        if cfg.placements[jid].axis is not None:
            assert np.allclose(axes[k], cfg.placements[jid].axis, atol=1e-15)


def test_f1_serial_equals_minus_mu(topologies):
    t = topologies["3D-M1"]
    layout = DesignLayout.for_topology(t)
    x = layout.sample(np.random.default_rng(2))
    jac, _ = reduced_jacobian(assemble_system(t, layout.unpack(x, A)))
    assert objective_f1(t, x, A) == pytest.approx(-manipulability(jac), rel=1e-12)


def test_f1_sentinel_at_type2_singularity(topologies):
    t = topologies["planar-5R"]
    cfg = five_link_configuration(FiveLinkConfig(1.0, 1.0, 1.0, 1.0, 0.3, 0.8, 0.8, 2.0))
    layout = DesignLayout.for_topology(t)
    x = layout.pack(cfg)
    assert objective_f1(t, x, cfg.task_point) == math.inf
    assert objective_f2(t, x, cfg.task_point) == pytest.approx(0.0, abs=1e-20)


@pytest.mark.parametrize("name", ["2D-M71", "1D-M10", "RSSR"])
def test_f2_reduces_to_det_power_times_mu(name, topologies):
    t = topologies[name]
    ev = Evaluator(t, A)
    rng = np.random.default_rng(3)
    for _ in range(5):
        x = ev.layout.sample(rng)
        jac, det = ev.jacobian(x)
        m = 6
        expected = abs(det) ** m * abs(det) ** jac.shape[1] * manipulability(jac)
        assert -objective_f2(t, x, A) == pytest.approx(expected, rel=1e-8)
        assert ev.log_f2_neg(x) == pytest.approx(-math.log(expected), rel=1e-10)
        assert ev.f2(x) == pytest.approx(-expected, rel=1e-8)


def test_f2_undefined_for_serial(topologies):
    t = topologies["3D-M1"]
    x = DesignLayout.for_topology(t).sample(np.random.default_rng(4))
    with pytest.raises(SerialTopology):
        objective_f2(t, x, A)
