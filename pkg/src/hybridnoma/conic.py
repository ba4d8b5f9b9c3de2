"""A small conic-program container and adapters to interior-point solvers.

A program maximises one designated variable subject to blocks of the form
``coeffs @ x + offset in K`` where ``K`` is one of

* ``nonneg`` -- every row is ``>= 0``
* ``soc``    -- ``row0 >= ||rows[1:]||``
* ``rsoc``   -- ``row0 * row1 >= ||rows[2:]||**2`` with ``row0, row1 >= 0``
* ``exp``    -- ``row1 * exp(row0 / row1) <= row2`` with ``row1 > 0``
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Protocol

import numpy as np
import scipy.sparse as sp

CONE_KINDS = ("nonneg", "soc", "rsoc", "exp")

# an affine row: ({variable index: coefficient}, constant)
Row = tuple[Mapping[int, float], float]


class SolveFailure(RuntimeError):
    """The conic backend did not return a usable solution."""

    def __init__(self, status: str, message: str = "") -> None:
        super().__init__(f"{status}: {message}" if message else status)
        self.status = status


@dataclass(frozen=True)
class ConeBlock:
    kind: str
    label: str
    coeffs: sp.csr_matrix
    offset: np.ndarray

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    def value(self, x: np.ndarray) -> np.ndarray:
        return self.coeffs @ x + self.offset

    def residual(self, x: np.ndarray) -> float:
        """Signed cone margin at ``x``; negative means the point is outside."""
        v = self.value(x)
        if self.kind == "nonneg":
            return float(v.min())
        if self.kind == "soc":
            return float(v[0] - np.linalg.norm(v[1:]))
        if self.kind == "rsoc":
            u, w = v[0], v[1]
            return float(min(u, w, u + w - math.hypot(u - w, 2.0 * np.linalg.norm(v[2:]))))
        if self.kind == "exp":
            return float(min(v[1], v[2] - v[1] * math.exp(v[0] / v[1]) if v[1] > 0 else -math.inf))
        raise ValueError(self.kind)


@dataclass(frozen=True)
class ConicProgram:
    names: tuple[str, ...]
    objective: int
    blocks: tuple[ConeBlock, ...]

    @property
    def num_vars(self) -> int:
        return len(self.names)

    def count(self, label_prefix: str) -> int:
        return sum(1 for b in self.blocks if b.label.split("[")[0] == label_prefix)

    def min_residual(self, x: np.ndarray) -> float:
        return min(b.residual(x) for b in self.blocks)

    def to_text(self) -> str:
        """Canonical plain-text rendering, one block per line."""
        lines = [f"variables {self.num_vars}"]
        lines += [f"var {i} {n}" for i, n in enumerate(self.names)]
        lines.append(f"maximize {self.names[self.objective]}")
        for b in self.blocks:
            rows = []
            coo = b.coeffs.tocsr()
            for r in range(b.dim):
                lo, hi = coo.indptr[r], coo.indptr[r + 1]
                terms = " ".join(
                    f"{coo.data[k]:+.12g}*{self.names[coo.indices[k]]}" for k in range(lo, hi)
                )
                rows.append(f"{terms} {b.offset[r]:+.12g}".strip())
            lines.append(f"{b.kind} {b.label}: " + " | ".join(rows))
        return "\n".join(lines) + "\n"


class ProgramBuilder:
    def __init__(self) -> None:
        self._names: list[str] = []
        self._index: dict[str, int] = {}
        self._blocks: list[ConeBlock] = []

    def var(self, name: str) -> int:
        if name in self._index:
            raise ValueError(f"duplicate variable {name}")
        self._index[name] = len(self._names)
        self._names.append(name)
        return self._index[name]

    def block(self, kind: str, label: str, rows: Iterable[Row]) -> None:
        if kind not in CONE_KINDS:
            raise ValueError(f"unknown cone kind {kind!r}")
        rows = list(rows)
        n = len(self._names)
        data, ri, ci, off = [], [], [], []
        for r, (terms, const) in enumerate(rows):
            for j, c in terms.items():
                if not 0 <= j < n:
                    raise ValueError(f"block {label} references undeclared variable {j}")
                if c != 0.0:
                    ri.append(r)
                    ci.append(j)
                    data.append(float(c))
            off.append(float(const))
        need = {"soc": 1, "rsoc": 2, "exp": 3, "nonneg": 1}[kind]
        if len(rows) < need or (kind == "exp" and len(rows) != 3):
            raise ValueError(f"{kind} block {label} has inconsistent dimension {len(rows)}")
        coeffs = sp.csr_matrix((data, (ri, ci)), shape=(len(rows), n))
        self._blocks.append(ConeBlock(kind, label, coeffs, np.asarray(off)))

    def build(self, objective: int) -> ConicProgram:
        n = len(self._names)
        blocks = []
        for b in self._blocks:
            coeffs = b.coeffs.copy()
            coeffs.resize((b.dim, n))
            blocks.append(ConeBlock(b.kind, b.label, coeffs.tocsr(), b.offset))
        return ConicProgram(tuple(self._names), objective, tuple(blocks))


@dataclass(frozen=True)
class ConicSolution:
    status: str
    x: np.ndarray
    objective: float
    iterations: int = 0


class ConicBackend(Protocol):
    name: str
    supports_exp: bool

    def solve(self, program: ConicProgram) -> ConicSolution: ...


def _soc_rows(block: ConeBlock) -> tuple[sp.csr_matrix, np.ndarray]:
    """Rewrite a rotated cone ``u*v >= ||w||^2`` as ``||(2w, u-v)|| <= u+v``."""
    A, b = block.coeffs, block.offset
    if block.kind != "rsoc":
        return A, b
    u, v = A[0], A[1]
    rows = [u + v, u - v, 2.0 * A[2:]]
    off = np.concatenate([[b[0] + b[1], b[0] - b[1]], 2.0 * b[2:]])
    return sp.vstack(rows).tocsr(), off


class ClarabelBackend:
    """Clarabel interior-point solver; handles the exponential cone natively."""

    name = "clarabel"
    supports_exp = True

    def __init__(self, tol: float = 1e-9, max_iter: int = 200, verbose: bool = False) -> None:
        self.tol = tol
        self.max_iter = max_iter
        self.verbose = verbose

    def solve(self, program: ConicProgram) -> ConicSolution:
        import clarabel

        n = program.num_vars
        mats, offs, cones = [], [], []
        for b in program.blocks:
            A, off = _soc_rows(b)
            mats.append(-A)
            offs.append(off)
            if b.kind == "nonneg":
                cones.append(clarabel.NonnegativeConeT(b.dim))
            elif b.kind in ("soc", "rsoc"):
                cones.append(clarabel.SecondOrderConeT(A.shape[0]))
            else:
                cones.append(clarabel.ExponentialConeT())
        A = sp.vstack(mats).tocsc()
        bvec = np.concatenate(offs)
        q = np.zeros(n)
        q[program.objective] = -1.0
        P = sp.csc_matrix((n, n))

        settings = clarabel.DefaultSettings()
        settings.verbose = self.verbose
        settings.max_iter = self.max_iter
        settings.tol_gap_abs = self.tol
        settings.tol_gap_rel = self.tol
        settings.tol_feas = self.tol
        solver = clarabel.DefaultSolver(P, q, A, bvec, cones, settings)
        result = solver.solve()
        status = str(result.status)
        if status == "Solved":
            label = "optimal"
        elif status == "AlmostSolved":
            label = "optimal_inaccurate"
        else:
            raise SolveFailure(status, "clarabel did not solve the subproblem")
        x = np.asarray(result.x, dtype=float)
        return ConicSolution(label, x, float(x[program.objective]), int(result.iterations))


class CvxoptBackend:
    """cvxopt's ``conelp``: linear and second-order cones only."""

    name = "cvxopt"
    supports_exp = False

    def __init__(self, tol: float = 1e-8, max_iter: int = 200) -> None:
        self.tol = tol
        self.max_iter = max_iter

    def solve(self, program: ConicProgram) -> ConicSolution:
        import cvxopt
        from cvxopt import solvers

        lin_A, lin_b, soc_A, soc_b, soc_dims = [], [], [], [], []
        for b in program.blocks:
            if b.kind == "exp":
                raise SolveFailure("unsupported", "cvxopt has no exponential cone")
            A, off = _soc_rows(b)
            if b.kind == "nonneg":
                lin_A.append(-A)
                lin_b.append(off)
            else:
                soc_A.append(-A)
                soc_b.append(off)
                soc_dims.append(A.shape[0])
        G = sp.vstack(lin_A + soc_A).tocoo()
        h = np.concatenate(lin_b + soc_b)
        n = program.num_vars
        c = np.zeros(n)
        c[program.objective] = -1.0
        Gc = cvxopt.spmatrix(G.data.tolist(), G.row.tolist(), G.col.tolist(), G.shape)
        dims = {"l": int(sum(a.shape[0] for a in lin_A)), "q": soc_dims, "s": []}
        opts = {
            "show_progress": False,
            "abstol": self.tol,
            "reltol": self.tol,
            "feastol": self.tol,
            "maxiters": self.max_iter,
        }
        try:
            res = solvers.conelp(cvxopt.matrix(c), Gc, cvxopt.matrix(h), dims, options=opts)
        except (ValueError, ArithmeticError) as exc:
            raise SolveFailure("numerical_error", f"cvxopt conelp: {exc}") from exc
        if res["status"] == "optimal":
            label = "optimal"
        elif res["x"] is not None and res["status"] == "unknown" and res.get("relative gap") is not None \
                and res["relative gap"] < 1e-6 and res["primal infeasibility"] < 1e-7:
            label = "optimal_inaccurate"
        else:
            raise SolveFailure(str(res["status"]), "cvxopt conelp did not converge")
        x = np.asarray(res["x"], dtype=float).ravel()
        return ConicSolution(label, x, float(x[program.objective]), int(res["iterations"]))


BACKENDS = {"clarabel": ClarabelBackend, "cvxopt": CvxoptBackend}


def make_backend(name: str = "clarabel", **kwargs) -> ConicBackend:
    try:
        return BACKENDS[name](**kwargs)
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; choose from {sorted(BACKENDS)}") from None
