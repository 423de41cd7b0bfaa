import numpy as np
import pytest

from chebyprod.conic import DUAL_VARIABLES, assemble_sdp, write_conic
from chebyprod.moments import MomentSpec
from chebyprod.product_bounds import LEFT, RIGHT, BoundQuery, tail_polynomial_coeffs

SPEC = MomentSpec(3, 1.0, 0.5, 0.0)


def _values(problem, seed=7):
    rng = np.random.default_rng(seed)
    return {name: float(rng.normal()) for name in problem.variables}


def _row_value(affine, values):
    return sum(coef * values[name] for name, coef in affine.terms.items()) + affine.const


def test_problem_shape():
    left = assemble_sdp(BoundQuery(SPEC, 0.3, LEFT))
    assert len(left.variables) == 7 + 10 + 6
    assert len(left.equalities) == 7
    assert len(left.cones) == 3
    assert all(len(cone.body) == 2 for cone in left.cones)
    assert len(left.inequalities) == 6
    assert [(b.name, b.size) for b in left.blocks] == [("P", 4), ("Q", 3)]

    right = assemble_sdp(BoundQuery(SPEC, 2.0, RIGHT))
    assert len(right.inequalities) == 7
    assert right.side == RIGHT


@pytest.mark.parametrize("T", [2, 3, 5])
def test_equalities_match_gram_coefficients(T):
    spec = MomentSpec(T, 1.0, 0.5, 0.0)
    gamma = 0.2
    problem = assemble_sdp(BoundQuery(spec, gamma, LEFT))
    values = _values(problem)
    P = np.array([[values[problem.block("P").variable(i, j)] for j in range(T + 1)] for i in range(T + 1)])
    Q = np.array([[values[problem.block("Q").variable(i, j)] for j in range(T)] for i in range(T)])
    x = np.array([values[name] for name in DUAL_VARIABLES])

    gram = np.zeros(2 * T + 1)
    for i in range(T + 1):
        for j in range(T + 1):
            gram[i + j] += P[i, j]
    for i in range(T):
        for j in range(T):
            gram[i + j + 1] += Q[i, j]
    tail = tail_polynomial_coeffs(spec, gamma)
    l_coefs = tail.coefs @ x + tail.consts

    assert len(problem.equalities) == 2 * T + 1
    for t, (row, rhs) in enumerate(problem.equalities):
        assert abs((_row_value(row, values) - rhs) - (gram[t] - l_coefs[t])) < 1e-12


def test_merged_row_for_T2():
    problem = assemble_sdp(BoundQuery(MomentSpec(2, 1.0, 0.5, 0.0), 0.25, LEFT))
    row, rhs = problem.equalities[2]
    assert rhs == -1.0
    assert row.terms["alpha"] == -1.0
    # 2 (T-1) c with c = gamma
    assert abs(row.terms["gamma2"] + 0.5) < 1e-15


def test_text_export():
    problem = assemble_sdp(BoundQuery(SPEC, 0.3, LEFT))
    text = problem.to_text()
    lines = text.splitlines()
    assert lines[0] == "# chebyprod conic export, side=left"
    assert lines[1] == "VARS 23"
    assert lines[2] == "VAR 0 alpha"
    assert "OBJ alpha:1 beta:3 gamma1:3.75 gamma2:9.75" in lines
    assert "LIN 0 lambda1:1" in lines
    assert sum(1 for line in lines if line.startswith("EQ ")) == 7
    assert sum(1 for line in lines if line == "SOC 3") == 3
    assert sum(1 for line in lines if line.startswith("ROW ")) == 9
    assert "PSD P 4" in lines and "PSD Q 3" in lines
    assert sum(1 for line in lines if line.startswith("ENTRY ")) == 16
    assert "ENTRY 0 3 P_0_3" in lines


def test_write_to_stream(tmp_path):
    problem = assemble_sdp(BoundQuery(SPEC, 2.0, RIGHT))
    path = tmp_path / "right.txt"
    with open(path, "w") as stream:
        write_conic(problem, stream)
    assert path.read_text() == problem.to_text()
    assert "LIN 1 alpha:1 lambda3:" in path.read_text()


def test_duplicate_variable():
    problem = assemble_sdp(BoundQuery(SPEC, 0.3, LEFT))
    with pytest.raises(ValueError):
        problem.add_variable("alpha")
    with pytest.raises(KeyError):
        problem.block("R")


def test_text_export_echoes_config():
    problem = assemble_sdp(BoundQuery(SPEC, 0.3, LEFT))
    lines = problem.to_text({"gamma": 0.3, "settings": {"LP_TOL": 1e-9}}).splitlines()
    assert lines[0] == "# chebyprod conic export, side=left"
    assert lines[1] == '# config: {"gamma": 0.3, "settings": {"LP_TOL": 1e-09}}'
    assert lines[2:] == problem.to_text().splitlines()[1:]
