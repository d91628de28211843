import dataclasses

import numpy as np
import pytest

from conftest import central_diff
from utpm import DegenerateEigenvalues
from utpm.oed import (
    OedConfig,
    gradient_analytic,
    make_problem,
    objective_dense,
    oed_gradient_forward,
    oed_gradient_reverse,
    oed_objective,
)


def _scalar_cfg(**kw):
    return OedConfig(n_m=1, n_x=1, **kw)


def test_identity_design_single_parameter():
    cfg = _scalar_cfg()
    b = np.eye(1)
    assert oed_objective(cfg, b) == pytest.approx(1.0, abs=1e-15)
    assert oed_gradient_forward(cfg, b) == pytest.approx(-2.0, abs=1e-14)
    assert oed_gradient_reverse(cfg, b) == pytest.approx(-2.0, abs=1e-14)


def test_scaled_identity():
    assert oed_objective(_scalar_cfg(), 2 * np.eye(1)) == pytest.approx(0.25, abs=1e-15)


def test_identity_design_is_degenerate_for_many_parameters():
    # C = I has an 11-fold eigenvalue; the eigh push-forward refuses it
    cfg = OedConfig(n_m=11, n_x=11)
    with pytest.raises(DegenerateEigenvalues):
        oed_objective(cfg, np.eye(11))


def test_objective_matches_dense_route():
    cfg = OedConfig(seed=42)
    b, _ = make_problem(cfg)
    assert abs(oed_objective(cfg) - objective_dense(b, cfg.y0)) <= 1e-10


@pytest.mark.parametrize("seed", [0, 1, 7])
@pytest.mark.parametrize("y0", [1.0, -0.7, 2.5])
def test_gradient_matches_analytic(seed, y0):
    cfg = OedConfig(seed=seed, y0=y0)
    b, _ = make_problem(cfg)
    analytic = gradient_analytic(b, y0)
    fwd = oed_gradient_forward(cfg)
    rev = oed_gradient_reverse(cfg)
    assert abs(fwd - analytic) <= 1e-12 * max(1.0, abs(analytic))
    assert abs(rev - analytic) <= 1e-12 * max(1.0, abs(analytic))
    assert abs(rev - fwd) <= 1e-11


def test_gradient_matches_finite_differences():
    cfg = OedConfig(seed=5, y0=1.3)
    b, _ = make_problem(cfg)
    fd = central_diff(lambda h: oed_objective(dataclasses.replace(cfg, y0=cfg.y0 + h), b), 1e-5)
    assert abs(oed_gradient_forward(cfg) - fd) <= 1e-7


def test_higher_degree_gives_same_gradient():
    base = OedConfig(seed=3)
    g2 = oed_gradient_reverse(base)
    g4 = oed_gradient_reverse(dataclasses.replace(base, degree=4))
    assert abs(g2 - g4) <= 1e-12


def test_reproducible_problem():
    cfg = OedConfig(seed=11)
    b1, x1 = make_problem(cfg)
    b2, x2 = make_problem(cfg)
    assert b1.tobytes() == b2.tobytes() and x1.tobytes() == x2.tobytes()
    assert b1.shape == (50, 11) and np.all(np.abs(b1) <= 1.0)
    assert oed_gradient_forward(cfg) == oed_gradient_forward(cfg)


@pytest.mark.parametrize("kw", [
    dict(n_m=5, n_x=6), dict(n_x=0), dict(y0=0.0), dict(degree=1),
])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        OedConfig(**kw)
