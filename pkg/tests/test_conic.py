import math

import numpy as np
import pytest

from hybridnoma.conic import (
    ClarabelBackend,
    CvxoptBackend,
    ProgramBuilder,
    SolveFailure,
    _soc_rows,
    make_backend,
)


def rsoc_program(u: float, v: float):
    b = ProgramBuilder()
    g = b.var("g")
    b.block("rsoc", "cone", [({}, u), ({}, v), ({g: 1.0}, 0.0)])
    return b.build(objective=g)


def exp_program(bound: float):
    # maximise y subject to 2**y <= bound
    b = ProgramBuilder()
    y = b.var("y")
    b.block("exp", "cone", [({y: math.log(2.0)}, 0.0), ({}, 1.0), ({}, bound)])
    return b.build(objective=y)


@pytest.mark.parametrize("backend", [ClarabelBackend(), CvxoptBackend()])
def test_rotated_cone_with_unit_sides(backend):
    sol = backend.solve(rsoc_program(1.0, 1.0))
    assert sol.objective == pytest.approx(1.0, abs=1e-7)
    assert sol.objective == sol.x[0]


@pytest.mark.parametrize("backend", [ClarabelBackend(), CvxoptBackend()])
def test_rotated_cone_general(backend):
    sol = backend.solve(rsoc_program(2.0, 8.0))
    assert sol.objective == pytest.approx(4.0, abs=1e-6)


def test_exponential_cone():
    sol = ClarabelBackend().solve(exp_program(8.0))
    assert sol.objective == pytest.approx(3.0, abs=1e-7)


def test_cvxopt_rejects_exponential_cone():
    with pytest.raises(SolveFailure, match="unsupported"):
        CvxoptBackend().solve(exp_program(8.0))


def test_unbounded_program_reports_failure():
    b = ProgramBuilder()
    x = b.var("x")
    b.block("nonneg", "lb", [({x: 1.0}, 0.0)])
    with pytest.raises(SolveFailure):
        ClarabelBackend().solve(b.build(objective=x))


def test_builder_validation():
    b = ProgramBuilder()
    b.var("x")
    with pytest.raises(ValueError, match="duplicate"):
        b.var("x")
    with pytest.raises(ValueError, match="undeclared"):
        b.block("nonneg", "bad", [({3: 1.0}, 0.0)])
    with pytest.raises(ValueError, match="dimension"):
        b.block("exp", "bad", [({0: 1.0}, 0.0)])
    with pytest.raises(ValueError, match="kind"):
        b.block("psd", "bad", [({0: 1.0}, 0.0)])
    with pytest.raises(ValueError, match="unknown backend"):
        make_backend("mosek")


def test_rotated_to_standard_conversion(rng):
    b = ProgramBuilder()
    ids = [b.var(n) for n in "uvw"]
    b.block("rsoc", "cone", [({ids[0]: 1.0}, 0.0), ({ids[1]: 1.0}, 0.0), ({ids[2]: 1.0}, 0.0)])
    block = b.build(objective=2).blocks[0]
    A, off = _soc_rows(block)
    for u, v, w in rng.uniform(-2.0, 2.0, (2000, 3)):
        s = A @ np.array([u, v, w]) + off
        std_ok = s[0] >= np.linalg.norm(s[1:])
        rot_ok = u >= 0 and v >= 0 and u * v >= w * w
        if abs(u * v - w * w) > 1e-9 and min(abs(u), abs(v)) > 1e-9:
            assert std_ok == rot_ok


def test_text_dump_is_canonical():
    a = rsoc_program(2.0, 8.0).to_text()
    assert a == rsoc_program(2.0, 8.0).to_text()
    assert a.splitlines()[:3] == ["variables 1", "var 0 g", "maximize g"]
    assert a.splitlines()[3].startswith("rsoc cone:")
