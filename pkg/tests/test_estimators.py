import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from cirpat.errors import AngleOutOfRange, NonPositiveRadius
from cirpat.estimators import CirclePatternSolver, ConformalTypeClassifier
from cirpat.lattices import lattice_generator, wheel
from cirpat.network import classify_type
from cirpat.triangulation import AngleFunction


def test_solver_params_round_trip():
    est = CirclePatternSolver(geometry="hyperbolic", boundary="horocycle", tol=1e-9)
    assert est.get_params()["boundary"] == "horocycle"
    twin = clone(est).set_params(tol=1e-8)
    assert twin.tol == 1e-8 and est.tol == 1e-9


def test_solver_fit_predict():
    T = wheel(6)
    est = CirclePatternSolver().fit(T, 0.0)
    assert est.predict([0]) == pytest.approx([1.0], abs=1e-10)
    assert len(est.predict()) == len(T.vertices)
    assert est.residual_ <= 1e-10 and len(est.pattern_.circles) == 7


def test_solver_accepts_edge_arrays():
    T = wheel(5)
    arr = np.full(len(T.edges), 0.3)
    a = CirclePatternSolver().fit(T, arr).predict()
    b = CirclePatternSolver().fit(T, AngleFunction.constant(T, 0.3)).predict()
    assert np.array_equal(a, b)
    with pytest.raises(AngleOutOfRange):
        CirclePatternSolver().fit(T, np.zeros(3))


def test_solver_horocycle():
    est = CirclePatternSolver(geometry="hyperbolic", boundary="horocycle").fit(wheel(6))
    assert est.predict([0])[0] == pytest.approx(math.log(2), rel=1e-9)
    assert all(math.isinf(x) for x in est.predict(range(1, 7)))


def test_solver_validation():
    T = wheel(6)
    with pytest.raises(NotFittedError):
        CirclePatternSolver().predict()
    with pytest.raises(ValueError):
        CirclePatternSolver(boundary="horocycle").fit(T)
    with pytest.raises(NonPositiveRadius):
        CirclePatternSolver(boundary=-1.0).fit(T)
    with pytest.raises(ValueError):
        CirclePatternSolver(geometry="spherical").fit(T)
    with pytest.raises(TypeError):
        CirclePatternSolver().fit([(0, 1, 2)])


def test_classifier_matches_function():
    gen = lattice_generator(7)
    est = ConformalTypeClassifier(depth=5).fit(gen)
    rep = classify_type(gen, 5)
    assert est.verdict_ == rep.verdict and est.sequence_ == rep.sequence
    assert est.predict() == rep.verdict
    assert ConformalTypeClassifier(depth=2).predict(lattice_generator(6)) == "Inconclusive"
    with pytest.raises(TypeError):
        ConformalTypeClassifier().fit(5)
