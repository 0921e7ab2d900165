import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from henonlike import HenonLikeMap, ParameterError
from henonlike.map_core import MapParams, Nonlinearity, step_array


def test_transform_is_one_step():
    m = HenonLikeMap(mu=1.4, b=0.3).fit()
    np.testing.assert_allclose(m.transform([[0.0, 0.0], [1.4, 0.0]]), [[1.4, 0.0], [-0.56, 0.42]])


def test_n_steps_composes(rng):
    X = rng.uniform(-0.5, 0.5, (20, 3))
    m = HenonLikeMap(kind="cubic", mu=1.5, b=0.2, a=(0.4,), n_steps=3).fit(X)
    p = MapParams(Nonlinearity.cubic(1.5), 0.2, (0.4,))
    np.testing.assert_allclose(m.transform(X), step_array(p, step_array(p, step_array(p, X))))


def test_inverse(rng):
    X = rng.uniform(-0.5, 0.5, (20, 4))
    m = HenonLikeMap(mu=0.9, b=0.3, a=(0.5, -0.4), n_steps=2).fit(X)
    np.testing.assert_allclose(m.inverse_transform(m.transform(X)), X, atol=1e-12)


def test_inverse_needs_nonzero_coefficients():
    m = HenonLikeMap(mu=0.9, b=0.3, a=(0.0,)).fit()
    with pytest.raises(ValueError, match="not invertible"):
        m.inverse_transform([[0.0, 0.0, 0.0]])


def test_domain_and_contains():
    m = HenonLikeMap(mu=0.9, b=0.3).fit()
    assert m.domain_.alpha_plus == pytest.approx(0.9 / 0.7)
    assert m.contains([[0.0, 0.0], [2.0, 0.0]]).tolist() == [True, False]
    assert HenonLikeMap(mu=1.4, b=0.3).fit().domain_ is None


def test_validation():
    with pytest.raises(ParameterError):
        HenonLikeMap(b=1.0).fit()
    with pytest.raises(NotFittedError):
        HenonLikeMap().transform([[0.0, 0.0]])
    with pytest.raises(ValueError):
        HenonLikeMap().fit([[0.0, 0.0, 0.0]])


def test_sklearn_plumbing():
    m = HenonLikeMap(mu=1.1, b=0.2, n_steps=2)
    c = clone(m)
    assert c.get_params() == m.get_params()
    pipe = make_pipeline(HenonLikeMap(mu=1.1, b=0.2), HenonLikeMap(mu=1.1, b=0.2))
    X = np.array([[0.1, 0.05]])
    np.testing.assert_allclose(pipe.fit_transform(X), m.fit(X).transform(X))
