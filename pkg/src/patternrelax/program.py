"""Conic programs over monomial and auxiliary variables.

A ConicProgram is the assembled, solver-facing object: a linear objective
over columns, equality rows, inequality rows, PSD blocks with affine entries,
and geometric-mean-cone records.  Lowering replaces every GMC record by a
binary tower of 2x2 PSD blocks.  Constraints carry piece ids that tie solver
duals back to certificate pieces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .polynomials import Exponent, Polynomial, zero_exponent

RATIONALIZE_TOL = 1e-12


class LoweringError(ValueError):
    pass


class DenominatorCap(LoweringError):
    pass


@dataclass
class Piece:
    kind: str  # "linear", "sos", "vertex", "circuit"
    payload: dict


@dataclass
class PSDBlockData:
    size: int
    coeff: dict  # column -> (m, m) symmetric ndarray
    const: np.ndarray
    piece: int | None = None
    basis: tuple | None = None  # x-monomial basis for Gram certificates
    multiplier_factors: tuple = ()


@dataclass
class GMCData:
    beta_col: int
    gamma_cols: tuple
    lambdas: tuple
    sign_mode: str
    piece: int | None = None


@dataclass
class LinRow:
    coeff: dict  # column -> float
    rhs: float = 0.0  # a'x >= rhs  (or == rhs)
    piece: int | None = None
    factors: tuple | None = None

    def canonical_key(self):
        return (
            tuple(sorted((j, round(c, 12)) for j, c in self.coeff.items())),
            round(self.rhs, 12),
        )


class ConicProgram:
    def __init__(self, ncols: int, col_exponents=None):
        self.ncols = ncols
        self.col_exponents = list(col_exponents) if col_exponents is not None else [None] * ncols
        self.c = np.zeros(ncols)
        self.eqs: list[LinRow] = []
        self.ineqs: list[LinRow] = []
        self.blocks: list[PSDBlockData] = []
        self.gmcs: list[GMCData] = []
        self.pieces: list[Piece] = []
        self.meta: dict = {}
        self.aux_lift = None  # x -> values for model aux columns
        self.tower_lift: list = []  # (node_col, kind, data) in evaluation order

    # -- construction helpers ------------------------------------------------

    def add_column(self, exponent=None) -> int:
        self.ncols += 1
        self.col_exponents.append(exponent)
        self.c = np.append(self.c, 0.0)
        return self.ncols - 1

    def add_piece(self, kind: str, payload: dict) -> int:
        self.pieces.append(Piece(kind, payload))
        return len(self.pieces) - 1

    def add_eq(self, coeff: dict, rhs: float, piece=None):
        self.eqs.append(LinRow(dict(coeff), float(rhs), piece))

    def add_ineq(self, coeff: dict, rhs: float = 0.0, piece=None, factors=None):
        self.ineqs.append(LinRow(dict(coeff), float(rhs), piece, factors))

    def add_block(self, size, coeff, const, piece=None, basis=None, multiplier_factors=()):
        self.blocks.append(
            PSDBlockData(size, {j: np.asarray(M, float) for j, M in coeff.items()},
                         np.asarray(const, float), piece, basis, tuple(multiplier_factors))
        )

    # -- lowering of geometric-mean cones -------------------------------------

    def lowered(self, denominator_cap: int = 1 << 16) -> "ConicProgram":
        """Replace GMC records by 2x2 PSD towers; returns a new program."""
        if not self.gmcs:
            return self
        out = ConicProgram(self.ncols, self.col_exponents)
        out.c = self.c.copy()
        out.eqs = [LinRow(dict(r.coeff), r.rhs, r.piece) for r in self.eqs]
        out.ineqs = [LinRow(dict(r.coeff), r.rhs, r.piece, r.factors) for r in self.ineqs]
        out.blocks = [
            PSDBlockData(b.size, dict(b.coeff), b.const.copy(), b.piece, b.basis,
                         b.multiplier_factors)
            for b in self.blocks
        ]
        out.pieces = [Piece(p.kind, dict(p.payload)) for p in self.pieces]
        out.meta = dict(self.meta)
        out.aux_lift = self.aux_lift
        out.tower_lift = list(self.tower_lift)
        for rec in self.gmcs:
            _lower_gmc(out, rec, denominator_cap)
        return out

    # -- lifting a point of the original space --------------------------------

    def lift_point(self, x) -> np.ndarray:
        """Monomial lift of x, with auxiliaries set by their construction rules."""
        v = np.zeros(self.ncols)
        aux_cols = []
        for j, alpha in enumerate(self.col_exponents):
            if alpha is not None:
                v[j] = Polynomial.monomial(alpha).evaluate(x)
            else:
                aux_cols.append(j)
        model_aux = self.meta.get("model_aux_cols", [])
        if model_aux:
            vals = self.aux_lift(x)
            for j, val in zip(model_aux, vals):
                v[j] = val
        for col, kind, data in self.tower_lift:
            if kind == "geomean":
                prod = 1.0
                for g_col, lam in data:
                    prod *= max(v[g_col], 0.0) ** lam
                v[col] = prod
            elif kind == "sqrt":
                a_col, b_col = data
                v[col] = math.sqrt(max(v[a_col] * v[b_col], 0.0))
        return v

    def max_violation(self, v: np.ndarray) -> float:
        """Worst constraint violation of a full assignment (lowered or not)."""
        worst = 0.0
        for row in self.eqs:
            val = sum(c * v[j] for j, c in row.coeff.items()) - row.rhs
            worst = max(worst, abs(val))
        for row in self.ineqs:
            val = sum(c * v[j] for j, c in row.coeff.items()) - row.rhs
            worst = max(worst, -val)
        for blk in self.blocks:
            M = blk.const.copy()
            for j, Mj in blk.coeff.items():
                M = M + v[j] * Mj
            worst = max(worst, -float(np.linalg.eigvalsh(M)[0]))
        for rec in self.gmcs:
            prod = 1.0
            for g_col, lam in zip(rec.gamma_cols, rec.lambdas):
                prod *= max(v[g_col], 0.0) ** lam
            val = v[rec.beta_col]
            if rec.sign_mode == "even":
                worst = max(worst, -val, val - prod)
            else:
                worst = max(worst, abs(val) - prod)
        return worst

    def objective_value(self, v: np.ndarray) -> float:
        return float(self.c @ v)

    def __repr__(self):
        return (
            f"ConicProgram({self.ncols} cols, {len(self.eqs)} eq, "
            f"{len(self.ineqs)} ineq, {len(self.blocks)} psd, {len(self.gmcs)} gmc)"
        )


def gmc_to_psd2(lambdas: Sequence[float], sign_mode: str = "even",
                denominator_cap: int = 1 << 16) -> ConicProgram:
    """Lower one geometric-mean cone to its binary tower of 2x2 PSD blocks.

    Returns a small program over columns [y, t_0, ..., t_k] (+ auxiliaries)
    whose feasible set is exactly 0 <= y <= prod t_i^{lambda_i} (sign mode
    "even") or |y| <= prod t_i^{lambda_i} ("odd"), for t >= 0.
    """
    k = len(lambdas)
    prog = ConicProgram(1 + k)
    prog.gmcs.append(GMCData(0, tuple(range(1, k + 1)), tuple(lambdas), sign_mode))
    return prog.lowered(denominator_cap)


def rationalize_weights(lambdas: Sequence[float], cap: int) -> tuple:
    """Common-denominator rationalization of barycentric weights."""
    fracs = [Fraction(l).limit_denominator(cap) for l in lambdas]
    for f, l in zip(fracs, lambdas):
        if abs(float(f) - l) > RATIONALIZE_TOL:
            raise DenominatorCap(
                f"weight {l} has no rational form with denominator <= {cap}"
            )
    D = 1
    for f in fracs:
        D = D * f.denominator // math.gcd(D, f.denominator)
    if D > cap:
        raise DenominatorCap(f"common denominator {D} exceeds cap {cap}")
    nums = [int(f * D) for f in fracs]
    if sum(nums) != D:
        raise DenominatorCap("rationalized weights do not sum to one")
    return nums, D


def _lower_gmc(prog: ConicProgram, rec: GMCData, cap: int):
    """Binary tower for 0 <= y <= prod t_i^{lambda_i} (or |v| <= prod)."""
    nums, D = rationalize_weights(rec.lambdas, cap)
    piece = rec.piece
    if rec.sign_mode == "even":
        target = rec.beta_col
        prog.add_ineq({target: 1.0}, 0.0, piece=piece)
    else:
        target = prog.add_column(None)
        prog.tower_lift.append((target, "geomean",
                                tuple(zip(rec.gamma_cols, rec.lambdas))))
        prog.add_ineq({target: 1.0}, 0.0, piece=piece)
        prog.add_ineq({target: 1.0, rec.beta_col: -1.0}, 0.0, piece=piece)
        prog.add_ineq({target: 1.0, rec.beta_col: 1.0}, 0.0, piece=piece)
    m = max(1, math.ceil(math.log2(D))) if D > 1 else 0
    slots = []
    for g_col, p in zip(rec.gamma_cols, nums):
        slots.extend([g_col] * p)
    slots.extend([target] * ((1 << m) - D))

    def pair_block(a_col, b_col, node_col):
        # [[a, node], [node, b]] >= 0
        coeff = {}
        for col, mat in ((a_col, [[1.0, 0.0], [0.0, 0.0]]),
                         (b_col, [[0.0, 0.0], [0.0, 1.0]]),
                         (node_col, [[0.0, 1.0], [1.0, 0.0]])):
            if col in coeff:
                coeff[col] = coeff[col] + np.array(mat)
            else:
                coeff[col] = np.array(mat)
        prog.add_block(2, coeff, np.zeros((2, 2)), piece=piece)

    level = slots
    while len(level) > 2:
        nxt = []
        for a, b in zip(level[0::2], level[1::2]):
            if a == b:
                nxt.append(a)
                continue
            node = prog.add_column(None)
            prog.tower_lift.append((node, "sqrt", (a, b)))
            pair_block(a, b, node)
            nxt.append(node)
        level = nxt
    if len(level) == 2:
        a, b = level
        if a == b:
            if a != target:
                prog.add_ineq({a: 1.0, target: -1.0}, 0.0, piece=piece)
        else:
            pair_block(a, b, target)
    else:  # single slot: y <= t
        (a,) = level
        if a != target:
            prog.add_ineq({a: 1.0, target: -1.0}, 0.0, piece=piece)


# ---------------------------------------------------------------------------
# SDPA sparse export / import


def export_sdpa(prog: ConicProgram) -> str:
    """Write the lowered program in SDPA sparse (.dat-s) format.

    Encoding: the program's variables are the SDPA primal variables; all
    inequality rows (plus each equality as a pair of opposite inequalities)
    form one diagonal block, followed by the PSD blocks.
    """
    if prog.gmcs:
        raise LoweringError("lower the program before SDPA export")
    if prog.ncols == 0:
        raise ValueError("cannot export an empty program")
    diag_entries = []  # (row_in_block, coeff dict, rhs)
    for row in prog.ineqs:
        diag_entries.append((row.coeff, row.rhs))
    for row in prog.eqs:
        diag_entries.append((row.coeff, row.rhs))
        diag_entries.append(({j: -c for j, c in row.coeff.items()}, -row.rhs))
    nblocks = (1 if diag_entries else 0) + len(prog.blocks)
    if nblocks == 0:
        raise ValueError("program has no constraints to export")
    lines = [str(prog.ncols), str(nblocks)]
    sizes = []
    if diag_entries:
        sizes.append(str(-len(diag_entries)))
    sizes.extend(str(b.size) for b in prog.blocks)
    lines.append(" ".join(sizes))
    lines.append(" ".join(_fmt(v) for v in prog.c))
    entries = []  # (matno, blkno, i, j, value)
    blk0 = 1 if diag_entries else 0
    if diag_entries:
        for r, (coeff, rhs) in enumerate(diag_entries, start=1):
            if rhs:
                entries.append((0, 1, r, r, rhs))
            for col, c in sorted(coeff.items()):
                if c:
                    entries.append((col + 1, 1, r, r, c))
    for bi, blk in enumerate(prog.blocks, start=1):
        blkno = blk0 + bi
        F0 = -blk.const
        for i in range(blk.size):
            for j in range(i, blk.size):
                if F0[i, j]:
                    entries.append((0, blkno, i + 1, j + 1, F0[i, j]))
        for col in sorted(blk.coeff):
            M = blk.coeff[col]
            for i in range(blk.size):
                for j in range(i, blk.size):
                    if M[i, j]:
                        entries.append((col + 1, blkno, i + 1, j + 1, M[i, j]))
    entries.sort(key=lambda e: (e[0], e[1], e[2], e[3]))
    for matno, blkno, i, j, v in entries:
        lines.append(f"{matno} {blkno} {i} {j} {_fmt(v)}")
    return "\n".join(lines) + "\n"


def _fmt(v: float) -> str:
    return repr(float(v))


def parse_sdpa(text: str) -> ConicProgram:
    """Read SDPA sparse format back into an equivalent ConicProgram."""
    rows = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line[0] in "*\"":
            continue
        rows.append(line)
    if len(rows) < 4:
        raise ValueError("SDPA input too short")
    nvars = int(rows[0].split()[0])
    nblocks = int(rows[1].split()[0])
    sizes = [int(tok.strip("{}(),")) for tok in rows[2].replace(",", " ").split()]
    if len(sizes) != nblocks:
        raise ValueError("SDPA block-size line does not match block count")
    cvec = [float(tok) for tok in rows[3].replace(",", " ").split()]
    if len(cvec) != nvars:
        raise ValueError("SDPA objective line does not match variable count")
    mats: dict = {}
    for line in rows[4:]:
        toks = line.split()
        if len(toks) != 5:
            raise ValueError(f"bad SDPA entry line: {line!r}")
        k, b, i, j, v = int(toks[0]), int(toks[1]), int(toks[2]), int(toks[3]), float(toks[4])
        mats.setdefault((k, b), []).append((i - 1, j - 1, v))
    prog = ConicProgram(nvars)
    prog.c = np.array(cvec)
    for b, size in enumerate(sizes, start=1):
        if size < 0:  # diagonal block -> inequality rows
            dim = -size
            diag_rhs = np.zeros(dim)
            for i, j, v in mats.get((0, b), []):
                if i != j:
                    raise ValueError("off-diagonal entry in a diagonal block")
                diag_rhs[i] = v
            row_coeffs = [dict() for _ in range(dim)]
            for k in range(1, nvars + 1):
                for i, j, v in mats.get((k, b), []):
                    if i != j:
                        raise ValueError("off-diagonal entry in a diagonal block")
                    row_coeffs[i][k - 1] = row_coeffs[i].get(k - 1, 0.0) + v
            for i in range(dim):
                prog.add_ineq(row_coeffs[i], diag_rhs[i])
        else:
            const = np.zeros((size, size))
            for i, j, v in mats.get((0, b), []):
                const[i, j] = v
                const[j, i] = v
            coeff = {}
            for k in range(1, nvars + 1):
                if (k, b) in mats:
                    M = np.zeros((size, size))
                    for i, j, v in mats[(k, b)]:
                        M[i, j] = v
                        M[j, i] = v
                    coeff[k - 1] = M
            prog.add_block(size, coeff, -const)
    return prog
