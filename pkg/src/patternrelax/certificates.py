"""Lower-bound certificates extracted from dual solutions, and their verifiers.

A certificate decomposes f - lambda into pieces, one per constraint group of
the solved program: nonnegative combinations of product rows (Handelman),
Gram forms on moment blocks (sparse SOS), vertex-supported multilinear
pieces, and circuit pieces.  Verification re-expands every piece with
poly-core arithmetic only and checks the sum coefficient-wise, so it shares
no code with the model builders beyond poly-core.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .ipm import SolveResult
from .models import factor_min_on_box, product_of_factors
from .polynomials import Box, Polynomial, exp_add, exp_support, zero_exponent
from .program import ConicProgram

COEFF_TOL = 1e-6
EIG_TOL = 1e-7
DUAL_SIGN_TOL = 1e-10
CIRCUIT_SLACK_TOL = 1e-9


class CertificateError(ValueError):
    pass


@dataclass
class CertificatePiece:
    kind: str  # "linear", "sos", "vertex", "circuit"
    data: dict


@dataclass
class Certificate:
    lam: float
    kind: str  # "sos", "handelman", "circuit", "mixed"
    pieces: list
    sense: str = "min"
    provenance: str = ""

    def to_json_dict(self) -> dict:
        blocks = [{"kind": "meta", "sense": self.sense, "provenance": self.provenance}]
        for p in self.pieces:
            blocks.append({"kind": p.kind, **_data_to_json(p.data)})
        return {"lambda": self.lam, "kind": self.kind, "blocks": blocks}

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), indent=1)

    @classmethod
    def from_json_dict(cls, data: dict) -> "Certificate":
        for key in ("lambda", "kind", "blocks"):
            if key not in data:
                raise CertificateError(f"certificate JSON missing field '{key}'")
        sense = "min"
        provenance = ""
        pieces = []
        for blk in data["blocks"]:
            kind = blk.get("kind")
            if kind == "meta":
                sense = blk.get("sense", "min")
                provenance = blk.get("provenance", "")
                continue
            pieces.append(CertificatePiece(kind, _data_from_json(blk)))
        return cls(float(data["lambda"]), data["kind"], pieces, sense, provenance)

    @classmethod
    def loads(cls, text: str) -> "Certificate":
        return cls.from_json_dict(json.loads(text))


def _factor_to_json(fct):
    if fct[0] in ("affine", "poly"):
        return [fct[0], fct[1].to_json_dict()]
    return [fct[0], list(fct[1])]


def _factor_from_json(fct):
    if fct[0] in ("affine", "poly"):
        return (fct[0], Polynomial.from_json_dict(fct[1]))
    return (fct[0], tuple(int(e) for e in fct[1]))


def _data_to_json(data: dict) -> dict:
    out = {}
    for k, v in data.items():
        if k in ("factors", "multiplier_factors"):
            out[k] = [_factor_to_json(fct) for fct in v]
        elif k in ("basis", "gammas", "pattern", "vertices"):
            out[k] = [list(e) for e in v]
        elif k in ("beta", "base_alpha", "shift"):
            out[k] = list(v) if v is not None else None
        elif k == "support":
            out[k] = list(v)
        elif k == "gram":
            out[k] = np.asarray(v).tolist()
        elif k == "poly":
            out[k] = [list(a) + [c] for a, c in sorted(v.items())]
        elif k == "lambdas":
            out[k] = list(v)
        else:
            out[k] = v
    return out


def _data_from_json(blk: dict) -> dict:
    out = {}
    for k, v in blk.items():
        if k == "kind":
            continue
        if k in ("factors", "multiplier_factors"):
            out[k] = tuple(_factor_from_json(fct) for fct in v)
        elif k in ("basis", "gammas", "pattern", "vertices"):
            out[k] = tuple(tuple(e) for e in v)
        elif k in ("beta", "base_alpha", "shift"):
            out[k] = tuple(int(e) for e in v) if v is not None else None
        elif k == "support":
            out[k] = tuple(int(e) for e in v)
        elif k == "gram":
            out[k] = np.array(v, float)
        elif k == "poly":
            out[k] = {tuple(int(e) for e in row[:-1]): float(row[-1]) for row in v}
        elif k == "lambdas":
            out[k] = tuple(float(x) for x in v)
        else:
            out[k] = v
    return out


# ---------------------------------------------------------------------------
# extraction


def extract_certificate(prog: ConicProgram, result: SolveResult) -> Certificate:
    """Turn the dual solution of a solved relaxation into a certificate.

    The program must be the lowered program the result was produced from,
    built by assemble_relaxation (it carries piece metadata).
    """
    if result.status != "optimal":
        raise CertificateError(f"cannot certify a result with status {result.status!r}")
    if not prog.pieces or "minimized" not in prog.meta:
        raise CertificateError("program carries no certificate metadata")
    n = prog.meta["n"]
    npieces = len(prog.pieces)
    agg = [dict() for _ in range(npieces)]  # piece -> exponent -> coefficient
    row_duals = [[] for _ in range(npieces)]
    gram = [None] * npieces

    def add_poly(pid, coeff_map, weight):
        if weight == 0.0:
            return
        target = agg[pid]
        for col, c in coeff_map.items():
            alpha = prog.col_exponents[col]
            if alpha is None:
                continue
            target[alpha] = target.get(alpha, 0.0) + weight * c

    for i, row in enumerate(prog.ineqs):
        if row.piece is None:
            continue
        z = float(result.z_lin[i])
        row_duals[row.piece].append(z)
        add_poly(row.piece, row.coeff, z)
    for i, row in enumerate(prog.eqs):
        if row.piece is None:
            continue
        y = float(result.y_eq[i])
        add_poly(row.piece, row.coeff, -y)
    for k, blk in enumerate(prog.blocks):
        if blk.piece is None:
            continue
        Z = 0.5 * (result.z_psd[k] + result.z_psd[k].T)
        if prog.pieces[blk.piece].kind == "sos":
            gram[blk.piece] = Z
        for col, M in blk.coeff.items():
            alpha = prog.col_exponents[col]
            if alpha is None:
                continue
            w = float(np.tensordot(0.5 * (M + M.T), Z))
            target = agg[blk.piece]
            target[alpha] = target.get(alpha, 0.0) + w

    pieces = []
    for pid, meta in enumerate(prog.pieces):
        if meta.kind == "linear":
            if not row_duals[pid]:
                continue
            z = row_duals[pid][0]
            if abs(z) < 1e-14:
                continue
            pieces.append(CertificatePiece("linear", {
                "factors": tuple(meta.payload.get("factors") or ()),
                "weight": z,
            }))
        elif meta.kind == "sos":
            Q = gram[pid]
            if Q is None or float(np.max(np.abs(Q))) < 1e-14:
                continue
            pieces.append(CertificatePiece("sos", {
                "basis": tuple(meta.payload["basis"]),
                "multiplier_factors": tuple(meta.payload.get("multiplier_factors") or ()),
                "gram": Q,
            }))
        elif meta.kind in ("vertex", "circuit"):
            poly = {a: c for a, c in agg[pid].items() if abs(c) > 1e-13}
            if not poly:
                continue
            data = dict(meta.payload)
            data["poly"] = poly
            pieces.append(CertificatePiece(meta.kind, data))
    kinds = {p.kind for p in pieces}
    if kinds == {"sos"}:
        kind = "sos"
    elif kinds <= {"linear"}:
        kind = "handelman"
    elif "circuit" in kinds and kinds <= {"circuit", "linear"}:
        kind = "circuit"
    else:
        kind = "mixed"
    return Certificate(
        lam=float(result.dual),
        kind=kind,
        pieces=pieces,
        sense=prog.meta.get("sense", "min"),
        provenance=prog.meta.get("program_id", ""),
    )


# ---------------------------------------------------------------------------
# verification reports


@dataclass
class VerifyReport:
    passed: bool
    lam: float = math.nan
    max_residual: float = math.nan
    problems: list = field(default_factory=list)

    def __bool__(self):
        return self.passed

    def __str__(self):
        head = "PASS" if self.passed else "FAIL"
        body = "; ".join(self.problems) if self.problems else "ok"
        return f"{head} (lambda={self.lam:.9g}, residual={self.max_residual:.3g}): {body}"


def _coefficient_residual(total: Polynomial, target: Polynomial) -> float:
    keys = set(total.terms) | set(target.terms)
    if not keys:
        return 0.0
    return max(abs(total.terms.get(k, 0.0) - target.terms.get(k, 0.0)) for k in keys)


def verify_sos(f: Polynomial, lam: float, blocks, tol: float = COEFF_TOL) -> VerifyReport:
    """Check f - lam == sum_i (x^{B_i})' Q_i x^{B_i} with every Q_i PSD."""
    problems = []
    total = Polynomial.zero(f.n)
    for basis, Q in blocks:
        Q = np.asarray(Q, float)
        if Q.shape[0] != Q.shape[1] or len(basis) != Q.shape[0]:
            raise CertificateError("Gram matrix size does not match its basis")
        Qs = 0.5 * (Q + Q.T)
        if float(np.max(np.abs(Qs - Q))) > 1e-9 * (1.0 + np.max(np.abs(Q))):
            problems.append("Gram matrix is not symmetric")
        scale = 1.0 + float(np.max(np.abs(Qs))) if Qs.size else 1.0
        eigs, vecs = np.linalg.eigh(Qs)
        if eigs[0] < -EIG_TOL * scale:
            problems.append(f"Gram eigenvalue {eigs[0]:.3e} below -{EIG_TOL:g}*(1+|Q|)")
        clipped = vecs @ np.diag(np.clip(eigs, 0.0, None)) @ vecs.T
        total = total + _gram_polynomial(f.n, basis, clipped)
    target = f - lam
    residual = _coefficient_residual(total, target)
    if residual > tol:
        problems.append(f"coefficient residual {residual:.3e} exceeds {tol:g}")
    return VerifyReport(not problems, lam, residual, problems)


def _gram_polynomial(n: int, basis, Q: np.ndarray) -> Polynomial:
    terms: dict = {}
    for a, ba in enumerate(basis):
        for b, bb in enumerate(basis):
            if Q[a, b]:
                key = exp_add(tuple(ba), tuple(bb))
                terms[key] = terms.get(key, 0.0) + Q[a, b]
    return Polynomial(n, terms)


def verify_handelman(f: Polynomial, lam: float, g, coeffs,
                     tol: float = COEFF_TOL) -> VerifyReport:
    """Check f - lam == sum_beta c_beta g^beta with nonnegative c_beta."""
    for beta, c in coeffs.items():
        if c < -DUAL_SIGN_TOL:
            raise CertificateError(f"handelman coefficient {c} at {beta} is negative")
    total = Polynomial.zero(f.n)
    for beta, c in coeffs.items():
        if len(beta) != len(g):
            raise CertificateError("multi-index length does not match factor count")
        term = Polynomial.constant(f.n, max(c, 0.0))
        for gi, power in zip(g, beta):
            term = term * gi ** power
        total = total + term
    residual = _coefficient_residual(total, f - lam)
    problems = []
    if residual > tol:
        problems.append(f"coefficient residual {residual:.3e} exceeds {tol:g}")
    return VerifyReport(not problems, lam, residual, problems)


def verify_circuit(f: Polynomial, circuit, domain: str = "R_full",
                   slack_tol: float = CIRCUIT_SLACK_TOL) -> VerifyReport:
    """AGE/SONC nonnegativity test for f restricted to one circuit.

    Even inner exponent (or the nonnegative orthant): passes iff
    f_beta + prod (f_gamma/lambda)^lambda >= -tol.  Odd inner exponent on
    the full space: the same with -|f_beta|.
    """
    meta = circuit.meta if hasattr(circuit, "meta") else circuit
    beta = tuple(meta["beta"])
    gammas = [tuple(g) for g in meta["gammas"]]
    lambdas = list(meta["lambdas"])
    if not lambdas:
        raise CertificateError("circuit carries no barycentric weights")
    fbeta = f.coefficient(beta)
    fg = [f.coefficient(g) for g in gammas]
    even = all(e % 2 == 0 for e in beta) or domain == "R_plus"
    problems = []
    if any(v <= 0.0 for v in fg):
        # outer coefficients must be positive unless the inner term vanishes
        if not (even and abs(fbeta) <= slack_tol
                and all(v >= -slack_tol for v in fg)):
            problems.append("nonpositive coefficient on an outer circuit exponent")
            return VerifyReport(False, math.nan, math.nan, problems)
    prod = 1.0
    for v, lamb in zip(fg, lambdas):
        prod *= (max(v, 0.0) / lamb) ** lamb
    slack = (fbeta if even else -abs(fbeta)) + prod
    if slack < -slack_tol:
        problems.append(f"circuit condition violated by {-slack:.3e}")
    return VerifyReport(not problems, slack, slack, problems)


# ---------------------------------------------------------------------------
# combined verification of extracted certificates


def _vertex_piece_polynomial(n: int, data: dict, box: Box, problems: list) -> Polynomial:
    poly = Polynomial(n, data["poly"])
    base = tuple(data["base_alpha"])
    shift = data.get("shift")
    eta = tuple(shift) if shift else zero_exponent(n)
    support = tuple(data["support"])
    scale = 1.0 + max((abs(c) for c in poly.terms.values()), default=0.0)
    # strip the shift monomial and check the rest lives in the multilinear cube
    reduced: dict = {}
    for alpha, c in poly.terms.items():
        diff = tuple(a - e for a, e in zip(alpha, eta))
        if any(d < 0 for d in diff) or any(
            d not in (0, base[i]) or (i not in support and d)
            for i, d in enumerate(diff)
        ):
            problems.append(f"vertex piece touches exponent {alpha} outside its cube")
            return Polynomial.zero(n)
        reduced[diff] = c
    if sum(eta):
        eta_lo = _monomial_lo(eta, box)
        if eta_lo < -1e-12:
            problems.append("shift monomial of a vertex piece can be negative")
    pos = {i: j for j, i in enumerate(support)}
    for p in data["vertices"]:
        val = 0.0
        for diff, c in reduced.items():
            term = c
            for i in exp_support(diff):
                term *= p[pos[i]]
            val += term
        if val < -EIG_TOL * scale:
            problems.append(f"vertex piece negative ({val:.3e}) at a box vertex")
            return Polynomial.zero(n)
    return poly


def _monomial_lo(alpha, box: Box) -> float:
    from .polynomials import monomial_range

    return monomial_range(alpha, box).lo


def verify_certificate(cert: Certificate, f: Polynomial, box: Box,
                       tol: float = COEFF_TOL) -> VerifyReport:
    """Re-expand every piece independently and check sum == f - lambda.

    f must be the polynomial the certificate bounds from below (for a max
    solve that is the negated objective).
    """
    n = f.n
    problems: list = []
    total = Polynomial.zero(n)
    for piece in cert.pieces:
        data = piece.data
        if piece.kind == "linear":
            z = float(data["weight"])
            if z < -DUAL_SIGN_TOL:
                problems.append(f"negative multiplier {z:.3e} on a product row")
                continue
            for fct in data["factors"]:
                if factor_min_on_box(fct, box, n) < -1e-9:
                    problems.append(f"row factor {fct} is not nonnegative on the box")
            total = total + max(z, 0.0) * product_of_factors(data["factors"], box, n)
        elif piece.kind == "sos":
            Q = np.asarray(data["gram"], float)
            Qs = 0.5 * (Q + Q.T)
            scale = 1.0 + float(np.max(np.abs(Qs)))
            eigs, vecs = np.linalg.eigh(Qs)
            if eigs[0] < -EIG_TOL * scale:
                problems.append(f"Gram eigenvalue {eigs[0]:.3e} too negative")
                continue
            clipped = vecs @ np.diag(np.clip(eigs, 0.0, None)) @ vecs.T
            mult = product_of_factors(data.get("multiplier_factors", ()), box, n)
            for fct in data.get("multiplier_factors", ()):
                try:
                    if factor_min_on_box(fct, box, n) < -1e-9:
                        problems.append(f"block multiplier {fct} is not nonnegative")
                except Exception as exc:
                    problems.append(f"block multiplier {fct[0]}: {exc}")
            total = total + mult * _gram_polynomial(n, data["basis"], clipped)
        elif piece.kind == "vertex":
            total = total + _vertex_piece_polynomial(n, data, box, problems)
        elif piece.kind == "circuit":
            poly = Polynomial(n, data["poly"])
            allowed = {tuple(data["beta"])} | {tuple(g) for g in data["gammas"]}
            stray = [a for a in poly.terms if a not in allowed]
            for a in stray:
                if abs(poly.terms[a]) > tol:
                    problems.append(f"circuit piece touches foreign exponent {a}")
                poly = Polynomial(n, {k: v for k, v in poly.terms.items() if k != a})
            rep = verify_circuit(poly, data, data.get("domain", "R_full"))
            if not rep.passed:
                problems.extend("circuit piece: " + p for p in rep.problems)
                continue
            total = total + poly
        else:
            problems.append(f"unknown piece kind {piece.kind!r}")
    residual = _coefficient_residual(total, f - cert.lam)
    if residual > tol:
        problems.append(f"piece sum misses f - lambda by {residual:.3e}")
    return VerifyReport(not problems, cert.lam, residual, problems)
