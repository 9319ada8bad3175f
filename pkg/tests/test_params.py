import math

import numpy as np
import pytest

from priceimpact.params import (ModelParams, ParameterError, calibrated_params, endowment_excess,
                                endowment_sd, endowments_from_sd, validate)


def test_calibrated_values():
    p = calibrated_params()
    assert (p.a, p.delta, p.I, p.L, p.T) == (2.0, 0.02, 15, 100.0, 3.0)
    assert p.mu_Y == -0.0709146
    assert math.isclose(p.psi_min, 100.0 ** 2 / 15)


@pytest.mark.parametrize("sd", [0.0, 3.0, 5.0, 10.0])
@pytest.mark.parametrize("I", [2, 3, 14, 15])
def test_endowments_from_sd(sd, I):
    x = endowments_from_sd(100.0, I, sd)
    assert math.isclose(math.fsum(x), 100.0, rel_tol=1e-12)
    assert endowment_sd(x) == pytest.approx(sd, abs=1e-12)


def test_k_matches_sd_relation():
    # k = I * SD^2
    for sd in (0.0, 5.0, 10.0):
        p = calibrated_params(sd)
        assert p.k == pytest.approx(15 * sd ** 2, rel=1e-12, abs=1e-12)


def test_k_permutation_invariant_bitwise():
    x = list(endowments_from_sd(100.0, 15, 5.0))
    rng = np.random.default_rng(3)
    ks = {endowment_excess(list(rng.permutation(x)), 100.0) for _ in range(20)}
    assert len(ks) == 1


@pytest.mark.parametrize("field,value", [
    ("a", 0.0), ("a", -1.0), ("delta", -0.1), ("sigma_D", -0.01), ("sigma_Y", -0.1),
    ("rho", 1.5), ("L", 0.0), ("T", 0.0), ("alpha", 0.0), ("alpha", -0.002),
    ("mu_D", float("nan")),
])
def test_invalid_fields(field, value):
    p = calibrated_params()
    with pytest.raises(ParameterError) as exc:
        p.with_(**{field: value})
    assert exc.value.field == field


def test_alpha_message():
    with pytest.raises(ParameterError, match="alpha must be strictly positive"):
        calibrated_params(alpha=0.0)


def test_integer_traders_required():
    with pytest.raises(ParameterError):
        calibrated_params(I=1, endowments=(100.0,))
    with pytest.raises(ParameterError):
        calibrated_params(I=2.5, endowments=(50.0, 50.0))


def test_endowments_must_clear():
    with pytest.raises(ParameterError, match="sum to L"):
        calibrated_params(endowments=tuple([7.0] * 15))
    with pytest.raises(ParameterError, match="expected 15"):
        calibrated_params(endowments=(50.0, 50.0))


def test_with_revalidates():
    p = calibrated_params()
    q = p.with_(endowments=tuple(endowments_from_sd(100, 15, 10.0)))
    assert q.k == pytest.approx(1500.0)
    assert isinstance(validate(ModelParams(**{**q.__dict__})), ModelParams)
