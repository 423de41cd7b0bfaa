"""
Explicit conic form of the product-tail bounds, for cross-checking with an
external SDP solver. Nothing here is solved; `assemble_sdp` builds the
constraint system and `write_conic` serialises it in the text format of
docs/formats.md.

The polynomial family l(kappa) >= 0 on kappa >= 0 becomes
l(kappa) = p(kappa) + kappa q(kappa) with p, q sums of squares, i.e. Gram
matrices P (size T+1) and Q (size T) that are positive semidefinite. The
quadratic families become second-order-cone rows through the S-lemma.
"""
import io
import json
import logging
from dataclasses import dataclass, field

from chebyprod.moments import root_T
from chebyprod.product_bounds import LEFT, BoundQuery, dual_objective, tail_polynomial_coeffs

DUAL_VARIABLES = ("alpha", "beta", "gamma1", "gamma2")
MULTIPLIERS = ("lambda1", "lambda2", "lambda3")


@dataclass(frozen=True)
class Affine:
    """const + sum(coef * variable)."""
    terms: dict = field(default_factory=dict)
    const: float = 0.0

    def format(self) -> str:
        parts = [f"{name}:{coef:.17g}" for name, coef in self.terms.items() if coef != 0.0]
        return " ".join(parts)


def _affine(const: float = 0.0, **terms) -> Affine:
    return Affine({k: float(v) for k, v in terms.items() if v != 0.0}, float(const))


@dataclass(frozen=True)
class SOCRow:
    """head >= || body ||_2."""
    head: Affine
    body: tuple


@dataclass(frozen=True)
class PSDBlock:
    name: str
    size: int
    entries: dict

    def variable(self, i: int, j: int) -> str:
        return self.entries[(min(i, j), max(i, j))]


@dataclass
class ConicProblem:
    """minimize objective . v subject to equalities, linear >= rows, SOC rows and PSD blocks."""
    side: str
    variables: list = field(default_factory=list)
    objective: Affine = field(default_factory=Affine)
    equalities: list = field(default_factory=list)
    inequalities: list = field(default_factory=list)
    cones: list = field(default_factory=list)
    blocks: list = field(default_factory=list)

    def add_variable(self, name: str) -> str:
        if name in self.variables:
            raise ValueError(f"Duplicate variable {name}")
        self.variables.append(name)
        return name

    def block(self, name: str) -> PSDBlock:
        for block in self.blocks:
            if block.name == name:
                return block
        raise KeyError(name)

    def to_text(self, config: dict = None) -> str:
        out = io.StringIO()
        write_conic(self, out, config)
        return out.getvalue()


def _line(*parts) -> str:
    return " ".join(p for p in parts if p) + "\n"


def write_conic(problem: ConicProblem, stream, config: dict = None) -> None:
    """Writes the problem; `config`, when given, is echoed as a `# config: <json>` comment."""
    stream.write(f"# chebyprod conic export, side={problem.side}\n")
    if config is not None:
        stream.write(f"# config: {json.dumps(config, sort_keys=True)}\n")
    stream.write(f"VARS {len(problem.variables)}\n")
    for index, name in enumerate(problem.variables):
        stream.write(f"VAR {index} {name}\n")
    stream.write(_line("OBJ", problem.objective.format()))
    for row, rhs in problem.equalities:
        stream.write(_line("EQ", f"{rhs:.17g}", row.format()))
    for row, rhs in problem.inequalities:
        stream.write(_line("LIN", f"{rhs:.17g}", row.format()))
    for cone in problem.cones:
        stream.write(f"SOC {1 + len(cone.body)}\n")
        for part in (cone.head,) + tuple(cone.body):
            stream.write(_line("ROW", f"{part.const:.17g}", part.format()))
    for block in problem.blocks:
        stream.write(f"PSD {block.name} {block.size}\n")
        for (i, j), name in sorted(block.entries.items()):
            stream.write(f"ENTRY {i} {j} {name}\n")


def _gram_block(problem: ConicProblem, name: str, size: int) -> PSDBlock:
    entries = {}
    for i in range(size):
        for j in range(i, size):
            entries[(i, j)] = problem.add_variable(f"{name}_{i}_{j}")
    block = PSDBlock(name, size, entries)
    problem.blocks.append(block)
    return block


def _coefficient(block: PSDBlock, t: int) -> dict:
    """Coefficient of kappa^t in m(kappa)^T G m(kappa); off-diagonal entries count twice."""
    terms = {}
    for i in range(block.size):
        j = t - i
        if i <= j < block.size:
            terms[block.entries[(i, j)]] = 1.0 if i == j else 2.0
    return terms


def assemble_sdp(query: BoundQuery) -> ConicProblem:
    """
    Conic program whose optimal value is L(gamma) (left query) or R(gamma) (right query).

    :param query: BoundQuery with T >= 2. For T = 2 the degree-T terms of the
                  tail polynomial fall on degree 2 and share its equality row.
    :return: ConicProblem with 2T+1 equalities, three SOC rows and PSD blocks of sizes T+1 and T.
    """
    spec, gamma = query.spec, query.gamma
    T = spec.T
    problem = ConicProblem(query.side)
    for name in DUAL_VARIABLES + MULTIPLIERS:
        problem.add_variable(name)
    problem.objective = Affine(dict(zip(DUAL_VARIABLES, (float(v) for v in dual_objective(spec)))))

    P = _gram_block(problem, "P", T + 1)
    Q = _gram_block(problem, "Q", T)
    tail = tail_polynomial_coeffs(spec, gamma)
    for t in range(2 * T + 1):
        terms = _coefficient(P, t)
        if 1 <= t <= 2 * T - 1:
            terms.update(_coefficient(Q, t - 1))
        for name, coef in zip(DUAL_VARIABLES, tail.coefs[t]):
            if coef != 0.0:
                terms[name] = terms.get(name, 0.0) - float(coef)
        problem.equalities.append((Affine(terms), float(tail.consts[t])))

    h = T * root_T(gamma, T)
    if query.side == LEFT:
        _left_cones(problem, T, h)
    else:
        _right_cones(problem, T, h)
    for name in MULTIPLIERS:
        problem.inequalities.append((_affine(**{name: 1.0}), 0.0))
    logging.debug("Assembled %s conic problem for T=%d: %d variables, %d equalities",
                  query.side, T, len(problem.variables), len(problem.equalities))
    return problem


def _sos_quadratic(T: int) -> dict:
    # K = gamma2 + gamma1 / T, the s^2 coefficient of the C1-type families
    return {"gamma2": 1.0, "gamma1": 1.0 / T}


def _left_cones(problem: ConicProblem, T: int, h: float) -> None:
    K = _sos_quadratic(T)
    problem.inequalities += [
        (_affine(alpha=1.0), 1.0),
        (_affine(gamma1=1.0, gamma2=1.0), 0.0),
        (_affine(gamma1=1.0, gamma2=T), 0.0),
    ]
    problem.cones += [
        SOCRow(_affine(alpha=1.0, **K),
               (_affine(beta=1.0, lambda1=-1.0), _affine(alpha=-1.0, **K))),
        SOCRow(_affine(-1.0, gamma1=1.0, gamma2=1.0, alpha=1.0),
               (_affine(beta=1.0, lambda2=-1.0), _affine(1.0, gamma1=1.0, gamma2=1.0, alpha=-1.0))),
        SOCRow(_affine(-1.0, alpha=1.0, lambda3=1.0, **K),
               (_affine(beta=1.0, lambda3=-h), _affine(1.0, alpha=-1.0, lambda3=1.0, **K))),
    ]


def _right_cones(problem: ConicProblem, T: int, h: float) -> None:
    K = _sos_quadratic(T)
    problem.inequalities += [
        (_affine(alpha=1.0), 0.0),
        (_affine(alpha=1.0, lambda3=h), 1.0),
        (_affine(gamma1=1.0, gamma2=T), 0.0),
        (_affine(gamma1=1.0, gamma2=1.0), 0.0),
    ]
    problem.cones += [
        SOCRow(_affine(alpha=1.0, **K),
               (_affine(beta=1.0, lambda1=-1.0), _affine(alpha=-1.0, **K))),
        SOCRow(_affine(gamma1=1.0, gamma2=1.0, alpha=1.0),
               (_affine(beta=1.0, lambda2=-1.0), _affine(gamma1=1.0, gamma2=1.0, alpha=-1.0))),
        SOCRow(_affine(-1.0, alpha=1.0, lambda3=h, **K),
               (_affine(beta=1.0, lambda3=-1.0), _affine(1.0, alpha=-1.0, lambda3=-h, **K))),
    ]
