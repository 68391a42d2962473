"""Primal-dual interior-point solver for linear + PSD-block cone programs.

Solves   min c'x  s.t.  A x = b,  G x + s = h,  s in K
with K = R_+^l x S_+^{m_1} x ... x S_+^{m_J}, via the homogeneous self-dual
embedding: Nesterov-Todd scaling, Mehrotra predictor-corrector, and a dense
LU factorization of the reduced KKT system with static regularization plus
iterative refinement.  Equalities enter the KKT system directly.

Cone vectors are kept in sections: a flat array for the orthant part and one
symmetric matrix per PSD block.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .program import ConicProgram


@dataclass
class SolverConfig:
    feas_tol: float = 1e-8
    gap_tol: float = 1e-8
    max_iter: int = 200
    step_fraction: float = 0.99
    gmc_denominator_cap: int = 1 << 16

    def __post_init__(self):
        if min(self.feas_tol, self.gap_tol) <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class SolveResult:
    status: str  # optimal, infeasible, unbounded, max_iter, numerical_failure
    primal: float = math.nan
    dual: float = math.nan
    x: np.ndarray | None = None
    y_eq: np.ndarray | None = None
    z_lin: np.ndarray | None = None
    z_psd: list = field(default_factory=list)
    s_lin: np.ndarray | None = None
    s_psd: list = field(default_factory=list)
    residuals: dict = field(default_factory=dict)
    iterations: int = 0
    history: list = field(default_factory=list)

    @property
    def value(self) -> float:
        return self.primal


class _ConeVec:
    """A point in R^l x S^{m_1} x ... x S^{m_J}."""

    __slots__ = ("lin", "mats")

    def __init__(self, lin, mats):
        self.lin = np.asarray(lin, float)
        self.mats = [np.asarray(M, float) for M in mats]

    @classmethod
    def zeros(cls, l, sizes):
        return cls(np.zeros(l), [np.zeros((m, m)) for m in sizes])

    @classmethod
    def identity(cls, l, sizes):
        return cls(np.ones(l), [np.eye(m) for m in sizes])

    def copy(self):
        return _ConeVec(self.lin.copy(), [M.copy() for M in self.mats])

    def axpy(self, alpha, other):
        self.lin += alpha * other.lin
        for M, N in zip(self.mats, other.mats):
            M += alpha * N

    def combo(self, alpha, other):
        return _ConeVec(self.lin + alpha * other.lin,
                        [M + alpha * N for M, N in zip(self.mats, other.mats)])

    def dot(self, other) -> float:
        total = float(self.lin @ other.lin)
        for M, N in zip(self.mats, other.mats):
            total += float(np.tensordot(M, N))
        return total

    def inf_norm(self) -> float:
        worst = float(np.max(np.abs(self.lin))) if self.lin.size else 0.0
        for M in self.mats:
            if M.size:
                worst = max(worst, float(np.max(np.abs(M))))
        return worst

    def scale(self, t):
        return _ConeVec(t * self.lin, [t * M for M in self.mats])


class InconsistentEqualities(Exception):
    """Raised by presolve when the equality system has no solution."""


class _StandardForm:
    """Array view of a lowered ConicProgram, equilibrated for the solver.

    Presolve drops linearly dependent equality rows (rejecting inconsistent
    systems outright).  Columns, rows, PSD blocks (one scalar each, to
    preserve the cone), and the objective are rescaled to O(1); the solver
    works on the scaled data and the recovery vectors map solutions and
    duals back.
    """

    def __init__(self, prog: ConicProgram, equilibrate: bool = True):
        if prog.gmcs:
            raise ValueError("lower the program before solving")
        n = prog.ncols
        if n == 0:
            raise ValueError("program has no variables")
        self.n = n
        self.A = np.zeros((len(prog.eqs), n))
        self.b = np.zeros(len(prog.eqs))
        for i, row in enumerate(prog.eqs):
            for j, cval in row.coeff.items():
                self.A[i, j] = cval
            self.b[i] = row.rhs
        self.eq_total = len(prog.eqs)
        self.eq_keep = list(range(self.eq_total))
        self._drop_dependent_equalities()
        # linear rows a'x >= rhs become slacks s = a'x - rhs, i.e. G = -a, h = -rhs
        self.Gl = np.zeros((len(prog.ineqs), n))
        self.hl = np.zeros(len(prog.ineqs))
        for i, row in enumerate(prog.ineqs):
            for j, cval in row.coeff.items():
                self.Gl[i, j] = -cval
            self.hl[i] = -row.rhs
        self.blocks = []
        for blk in prog.blocks:
            cols = np.array(sorted(blk.coeff), dtype=int)
            F = np.stack([0.5 * (blk.coeff[j] + blk.coeff[j].T) for j in cols]) \
                if len(cols) else np.zeros((0, blk.size, blk.size))
            self.blocks.append([blk.size, cols, F, 0.5 * (blk.const + blk.const.T)])
        self.sizes = [m for m, _, _, _ in self.blocks]
        self.l = len(prog.ineqs)
        self.c = np.asarray(prog.c, float).copy()
        self.nu = self.l + sum(self.sizes)
        if self.nu == 0:
            raise ValueError("program has no cone constraints")
        self._equilibrate(equilibrate)

    def _drop_dependent_equalities(self):
        p = self.A.shape[0]
        if p == 0:
            return
        rank = np.linalg.matrix_rank(self.A, tol=1e-12 * max(1.0, np.max(np.abs(self.A))))
        if rank == p:
            return
        x_star, *_ = np.linalg.lstsq(self.A, self.b, rcond=None)
        resid = self.b - self.A @ x_star
        if np.max(np.abs(resid)) > 1e-10 * (1.0 + np.max(np.abs(self.b))):
            raise InconsistentEqualities(resid)
        _, _, piv = sla.qr(self.A.T, pivoting=True, mode="economic")
        keep = sorted(piv[:rank])
        self.eq_keep = [int(i) for i in keep]
        self.A = self.A[self.eq_keep]
        self.b = self.b[self.eq_keep]

    def expand_eq_duals(self, y: np.ndarray) -> np.ndarray:
        """Duals for the original equality list; dropped rows get zero."""
        full = np.zeros(self.eq_total)
        full[self.eq_keep] = y
        return full

    def _equilibrate(self, enabled: bool):
        n = self.n
        self.dcol = np.ones(n)
        self.deq = np.ones(self.A.shape[0])
        self.dlin = np.ones(self.l)
        self.dblk = np.ones(len(self.blocks))
        self.obj_scale = 1.0
        if not enabled:
            return
        colmax = np.zeros(n)
        if self.A.size:
            colmax = np.maximum(colmax, np.max(np.abs(self.A), axis=0))
        if self.Gl.size:
            colmax = np.maximum(colmax, np.max(np.abs(self.Gl), axis=0))
        for m, cols, F, _ in self.blocks:
            if len(cols):
                colmax[cols] = np.maximum(
                    colmax[cols], np.max(np.abs(F), axis=(1, 2)))
        colmax[colmax == 0.0] = 1.0
        self.dcol = np.clip(1.0 / np.sqrt(colmax), 1e-8, 1e8)
        self.A *= self.dcol[None, :]
        self.Gl *= self.dcol[None, :]
        for blk in self.blocks:
            _, cols, F, _ = blk
            if len(cols):
                blk[2] = F * self.dcol[cols][:, None, None]
        self.c *= self.dcol
        # row scalings after column pass
        if self.A.size:
            rmax = np.maximum(np.max(np.abs(self.A), axis=1), np.abs(self.b))
            rmax[rmax == 0.0] = 1.0
            self.deq = 1.0 / rmax
            self.A *= self.deq[:, None]
            self.b *= self.deq
        if self.Gl.size:
            rmax = np.maximum(np.max(np.abs(self.Gl), axis=1), np.abs(self.hl))
            rmax[rmax == 0.0] = 1.0
            self.dlin = 1.0 / rmax
            self.Gl *= self.dlin[:, None]
            self.hl *= self.dlin
        for k, blk in enumerate(self.blocks):
            m, cols, F, C = blk
            bmax = max(float(np.max(np.abs(F))) if F.size else 0.0,
                       float(np.max(np.abs(C))) if C.size else 0.0)
            if bmax > 0.0:
                self.dblk[k] = 1.0 / bmax
                blk[2] = F * self.dblk[k]
                blk[3] = C * self.dblk[k]
        cmax = float(np.max(np.abs(self.c))) if np.any(self.c) else 1.0
        self.obj_scale = 1.0 / cmax
        self.c *= self.obj_scale

    def unscale_solution(self, X, Y, S, Z):
        """Map a scaled primal-dual point back to the original data."""
        X0 = self.dcol * X
        Y0 = self.deq * Y / self.obj_scale
        S0_lin = S.lin / self.dlin if self.l else S.lin
        Z0_lin = self.dlin * Z.lin / self.obj_scale if self.l else Z.lin
        S0_mats = [M / dk for M, dk in zip(S.mats, self.dblk)]
        Z0_mats = [M * dk / self.obj_scale for M, dk in zip(Z.mats, self.dblk)]
        return X0, Y0, _ConeVec(S0_lin, S0_mats), _ConeVec(Z0_lin, Z0_mats)

    def G_apply(self, x) -> _ConeVec:
        mats = []
        for m, cols, F, _ in self.blocks:
            M = -np.tensordot(x[cols], F, axes=1) if len(cols) else np.zeros((m, m))
            mats.append(M)
        return _ConeVec(self.Gl @ x, mats)

    def GT_apply(self, q: _ConeVec) -> np.ndarray:
        out = self.Gl.T @ q.lin
        for (m, cols, F, _), Q in zip(self.blocks, q.mats):
            if len(cols):
                out[cols] += -np.tensordot(F, Q, axes=([1, 2], [0, 1]))
        return out

    def h_vec(self) -> _ConeVec:
        return _ConeVec(self.hl, [C for _, _, _, C in self.blocks])


class _Scaling:
    """Nesterov-Todd scaling for the current (s, z) pair."""

    def __init__(self, s: _ConeVec, z: _ConeVec):
        self.w2 = s.lin / z.lin if s.lin.size else np.zeros(0)  # W'W diag
        self.lam_lin = np.sqrt(s.lin * z.lin) if s.lin.size else np.zeros(0)
        self.R = []
        self.Rinv = []
        self.lam_mats = []
        self.Wmat = []
        self.Winv = []
        for S, Z in zip(s.mats, z.mats):
            Ls = np.linalg.cholesky(S)
            Lz = np.linalg.cholesky(Z)
            U, sig, Vt = np.linalg.svd(Lz.T @ Ls)
            sighalf = np.sqrt(sig)
            R = Ls @ Vt.T / sighalf
            Rinv = (U / sighalf).T @ Lz.T
            self.R.append(R)
            self.Rinv.append(Rinv)
            self.lam_mats.append(sig)
            self.Wmat.append(R @ R.T)
            self.Winv.append(Rinv.T @ Rinv)

    def scale_z(self, z: _ConeVec) -> _ConeVec:
        """z-bar = W z; maps the current z to lambda."""
        mats = [R.T @ M @ R for R, M in zip(self.R, z.mats)]
        mats = [0.5 * (M + M.T) for M in mats]
        return _ConeVec(np.sqrt(self.w2) * z.lin, mats)

    def scale_s(self, s: _ConeVec) -> _ConeVec:
        """s-bar = W^{-T} s; maps the current s to lambda."""
        mats = [Ri @ M @ Ri.T for Ri, M in zip(self.Rinv, s.mats)]
        mats = [0.5 * (M + M.T) for M in mats]
        return _ConeVec(s.lin / np.sqrt(self.w2), mats)

    def mult_Wt(self, v: _ConeVec) -> _ConeVec:
        """W' v (transport a scaled s-direction back to s-space)."""
        mats = [R @ M @ R.T for R, M in zip(self.R, v.mats)]
        return _ConeVec(np.sqrt(self.w2) * v.lin, mats)

    def WtW_apply(self, v: _ConeVec) -> _ConeVec:
        mats = [Wm @ M @ Wm for Wm, M in zip(self.Wmat, v.mats)]
        mats = [0.5 * (M + M.T) for M in mats]
        return _ConeVec(self.w2 * v.lin, mats)

    def WtW_inv_apply(self, v: _ConeVec) -> _ConeVec:
        mats = [Wi @ M @ Wi for Wi, M in zip(self.Winv, v.mats)]
        mats = [0.5 * (M + M.T) for M in mats]
        return _ConeVec(v.lin / self.w2, mats)

    def lam(self) -> _ConeVec:
        return _ConeVec(self.lam_lin, [np.diag(sig) for sig in self.lam_mats])

    def lam_solve(self, d: _ConeVec) -> _ConeVec:
        """Solve lambda o u = d for u in the scaled space."""
        lin = d.lin / self.lam_lin if d.lin.size else d.lin
        mats = []
        for sig, D in zip(self.lam_mats, d.mats):
            denom = 0.5 * (sig[:, None] + sig[None, :])
            mats.append(D / denom)
        return _ConeVec(lin, mats)

    def mult_Wt_lam_solve_extended(self, ds_target: _ConeVec) -> _ConeVec:
        """q = W'((lambda o)^{-1} ds_target) in extended precision.

        This vector has norm growing like 1/mu near convergence; it enters
        both the reduced KKT right-hand side and the recovery of ds, and the
        two uses must agree to extended accuracy or the mismatch pollutes the
        primal cone residual.
        """
        ld = np.longdouble
        u = self.lam_solve(ds_target)
        lin = np.sqrt(self.w2.astype(ld)) * u.lin.astype(ld) if u.lin.size \
            else u.lin.astype(ld)
        mats = []
        for k, U in enumerate(u.mats):
            R = self.R[k].astype(ld)
            M = R @ U.astype(ld) @ R.T
            mats.append(0.5 * (M + M.T))
        return _ConeVec(lin, mats)

    def ds_from_dz(self, q: _ConeVec, dz: _ConeVec) -> _ConeVec:
        """ds = q - W'W dz in extended precision (q from the helper above)."""
        ld = np.longdouble
        if q.lin.size:
            lin = (q.lin - self.w2.astype(ld) * dz.lin.astype(ld)).astype(float)
        else:
            lin = np.asarray(q.lin, float)
        mats = []
        for k, Q in enumerate(q.mats):
            Wm = self.Wmat[k].astype(ld)
            M = Q - Wm @ dz.mats[k].astype(ld) @ Wm
            M = 0.5 * (M + M.T)
            mats.append(M.astype(float))
        return _ConeVec(lin, mats)


def _jordan(u: _ConeVec, v: _ConeVec) -> _ConeVec:
    lin = u.lin * v.lin
    mats = [0.5 * (U @ V + V @ U) for U, V in zip(u.mats, v.mats)]
    return _ConeVec(lin, mats)


class _ExtendedLU:
    """Partially pivoted LU in extended precision for small KKT systems.

    Double-precision factorizations stop refining once the KKT condition
    number approaches 1/eps; near the central-path endgame that caps the
    attainable residuals just above tight tolerances.  An 80-bit
    factorization pushes the cap out by roughly four orders of magnitude.
    """

    def __init__(self, M: np.ndarray):
        A = M.astype(np.longdouble).copy()
        n = A.shape[0]
        swaps = np.arange(n)
        for k in range(n - 1):
            p = k + int(np.argmax(np.abs(A[k:, k])))
            if p != k:
                A[[k, p]] = A[[p, k]]
                swaps[[k, p]] = swaps[[p, k]]
            akk = A[k, k]
            if akk == 0.0:
                raise np.linalg.LinAlgError("singular KKT matrix")
            A[k + 1:, k] /= akk
            A[k + 1:, k + 1:] -= np.outer(A[k + 1:, k], A[k, k + 1:])
        if A[n - 1, n - 1] == 0.0:
            raise np.linalg.LinAlgError("singular KKT matrix")
        self.A = A
        self.perm = swaps

    def solve(self, b: np.ndarray) -> np.ndarray:
        A = self.A
        n = A.shape[0]
        x = b.astype(np.longdouble)[self.perm]
        for k in range(n - 1):
            x[k + 1:] -= A[k + 1:, k] * x[k]
        for k in range(n - 1, -1, -1):
            if k < n - 1:
                x[k] -= A[k, k + 1:] @ x[k + 1:]
            x[k] /= A[k, k]
        return x.astype(float)


def _step_to_boundary(lam: _ConeVec, d: _ConeVec) -> float:
    """Largest t with lam + t*d in the cone, for lam interior (lam diag)."""
    worst = 0.0
    if lam.lin.size:
        ratios = -d.lin / lam.lin
        worst = max(worst, float(np.max(ratios)))
    for L, D in zip(lam.mats, d.mats):
        sig = np.sqrt(np.diag(L))
        M = D / np.outer(sig, sig)
        eigs = np.linalg.eigvalsh(0.5 * (M + M.T))
        worst = max(worst, float(-eigs[0]))
    if worst <= 0.0:
        return math.inf
    return 1.0 / worst


class _KKT:
    """Factorization of [[H, A'], [A, 0]] with H = G'(W'W)^{-1}G."""

    REG = 1e-10
    EXTENDED_DIM = 420  # extended-precision factorization up to this size

    def __init__(self, sf: _StandardForm, scal: _Scaling):
        self.sf = sf
        self.scal = scal
        n, p = sf.n, sf.A.shape[0]
        H = np.zeros((n, n))
        if sf.l:
            H += (sf.Gl.T / scal.w2) @ sf.Gl
        for (m, cols, F, _), Wi in zip(sf.blocks, scal.Winv):
            if not len(cols):
                continue
            T = np.einsum("ab,nbc,cd->nad", Wi, F, Wi, optimize=True)
            Hb = np.tensordot(F, T, axes=([1, 2], [1, 2]))
            H[np.ix_(cols, cols)] += Hb
        M = np.zeros((n + p, n + p))
        M[:n, :n] = H
        M[:n, n:] = sf.A.T
        M[n:, :n] = sf.A
        self.M = M
        self.n, self.p = n, p
        # symmetric diagonal equilibration before factorizing
        absM = np.abs(M)
        d = np.sqrt(np.maximum(absM.max(axis=0), 1e-300))
        self.d = 1.0 / d
        Ms = M * self.d[:, None] * self.d[None, :]
        self.Ms = Ms
        self.xlu = None
        self._xlu_failed = False
        with np.errstate(all="ignore"), warnings.catch_warnings():
            warnings.simplefilter("ignore")
            self.lu = sla.lu_factor(Ms)
            pivots = np.abs(np.diag(self.lu[0]))
            pivot_floor = 1e-15 * max(1.0, float(pivots.max()) if pivots.size else 1.0)
            if not np.all(np.isfinite(self.lu[0])) or (
                    pivots.size and float(pivots.min()) <= pivot_floor):
                # (near-)singular: fall back to a tiny quasidefinite shift
                Mreg = Ms.copy()
                Mreg[:n, :n] += self.REG * np.eye(n)
                Mreg[n:, n:] -= self.REG * np.eye(p)
                self.lu = sla.lu_factor(Mreg)

    def ensure_extended(self) -> bool:
        """Build the extended-precision factorization on demand."""
        if self.xlu is not None:
            return True
        if self._xlu_failed or self.Ms.shape[0] > self.EXTENDED_DIM:
            return False
        n, p = self.n, self.p
        try:
            self.xlu = _ExtendedLU(self.Ms)
        except np.linalg.LinAlgError:
            Mreg = self.Ms.copy()
            Mreg[:n, :n] += self.REG * np.eye(n)
            Mreg[n:, n:] -= self.REG * np.eye(p)
            try:
                self.xlu = _ExtendedLU(Mreg)
            except np.linalg.LinAlgError:
                self._xlu_failed = True
                return False
        return True

    def _lin_solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        if not np.all(np.isfinite(rhs)):
            raise np.linalg.LinAlgError("non-finite KKT right-hand side")
        if self.xlu is not None:
            return self.d * self.xlu.solve(self.d * rhs)
        return self.d * sla.lu_solve(self.lu, self.d * rhs)

    def _raw_solve(self, u: np.ndarray, v: np.ndarray, w: _ConeVec):
        # the factored solve works in double precision; accuracy comes from
        # the extended-precision refinement loop around it
        sf, scal = self.sf, self.scal
        w64 = _ConeVec(np.asarray(w.lin, float),
                       [np.asarray(M, float) for M in w.mats])
        rhs = np.concatenate([u + sf.GT_apply(scal.WtW_inv_apply(w64)), v])
        sol = self._lin_solve(rhs)
        resid = rhs - self.M @ sol
        if np.max(np.abs(resid)) > 1e-13 * max(1.0, float(np.max(np.abs(rhs)))):
            sol += self._lin_solve(resid)
        dx, dy = sol[: self.n], sol[self.n:]
        dz = scal.WtW_inv_apply(sf.G_apply(dx).combo(-1.0, w64))
        return dx, dy, dz

    def _full_residual(self, u, v, w, dx, dy, dz):
        """KKT residual with extended-precision accumulation throughout.

        Near convergence dz is huge while the target residual is tiny, so
        double-precision products would floor the attainable dual accuracy.
        """
        sf, scal = self.sf, self.scal
        ld = np.longdouble
        dxl = dx.astype(ld)
        gtz = sf.Gl.T.astype(ld) @ dz.lin.astype(ld) if sf.l else np.zeros(sf.n, dtype=ld)
        for (m, cols, F, _), Dz in zip(sf.blocks, dz.mats):
            if len(cols):
                gtz[cols] += -np.tensordot(F.astype(ld), Dz.astype(ld),
                                           axes=([1, 2], [0, 1]))
        r1 = (u.astype(ld) - (sf.A.T.astype(ld) @ dy.astype(ld) + gtz)).astype(float)
        r2 = (v.astype(ld) - sf.A.astype(ld) @ dxl).astype(float)
        if sf.l:
            r3_lin = (w.lin.astype(ld)
                      - sf.Gl.astype(ld) @ dxl
                      + scal.w2.astype(ld) * dz.lin.astype(ld)).astype(float)
        else:
            r3_lin = w.lin
        r3_mats = []
        for k, (m, cols, F, _) in enumerate(sf.blocks):
            Gdx = -np.tensordot(dxl[cols], F.astype(ld), axes=1) \
                if len(cols) else np.zeros((m, m), dtype=ld)
            Wmat = scal.Wmat[k].astype(ld)
            WtWdz = Wmat @ dz.mats[k].astype(ld) @ Wmat
            R = w.mats[k].astype(ld) - Gdx + WtWdz
            r3_mats.append(R.astype(float))
        return r1, r2, _ConeVec(r3_lin, r3_mats)

    def _refine(self, u, v, w, passes):
        # the meaningful accuracy scale excludes |w|: the cone right-hand
        # side grows like 1/mu while the step equations need absolute
        # accuracy at the residual level
        dx, dy, dz = self._raw_solve(u, v, w)
        scale = max(1.0, float(np.max(np.abs(u))) if u.size else 0.0,
                    float(np.max(np.abs(v))) if v.size else 0.0)
        best = None
        for _ in range(passes):
            r1, r2, r3 = self._full_residual(u, v, w, dx, dy, dz)
            err = max(float(np.max(np.abs(r1))),
                      float(np.max(np.abs(r2))) if r2.size else 0.0,
                      r3.inf_norm())
            if best is None or err < best[0]:
                best = (err, dx.copy(), dy.copy(), dz.copy())
            if err <= 1e-13 * scale:
                break
            cx, cy, cz = self._raw_solve(r1, r2, r3)
            dx = dx + cx
            dy = dy + cy
            dz = dz.combo(1.0, cz)
        return best, scale

    def solve3(self, u: np.ndarray, v: np.ndarray, w: _ConeVec):
        """Solve the 3x3 system, refining against the full KKT residual.

        If double-precision refinement stalls, redo the solve on an
        extended-precision factorization of the same matrix.
        """
        best, scale = self._refine(u, v, w, passes=6)
        if best[0] > 1e-13 * scale and self.ensure_extended():
            best2, _ = self._refine(u, v, w, passes=10)
            if best2[0] < best[0]:
                best = best2
        _, dx, dy, dz = best
        return dx, dy, dz


def solve(prog: ConicProgram, cfg: SolverConfig | None = None) -> SolveResult:
    """Solve a lowered conic program (no GMC records left)."""
    cfg = cfg or SolverConfig()
    try:
        sf = _StandardForm(prog)
    except InconsistentEqualities:
        return SolveResult("infeasible", math.inf, math.inf,
                           residuals={"certificate": 0.0}, iterations=0)
    return _solve_hsde(sf, cfg)


def solve_relaxation(prog: ConicProgram, cfg: SolverConfig | None = None):
    """Lower a freshly assembled program and solve it.

    Returns (lowered_program, result); duals in the result are indexed
    against the lowered program's constraint lists.
    """
    cfg = cfg or SolverConfig()
    lowered = prog.lowered(cfg.gmc_denominator_cap)
    return lowered, solve(lowered, cfg)


def _solve_hsde(sf: _StandardForm, cfg: SolverConfig) -> SolveResult:
    n, p = sf.n, sf.A.shape[0]
    c, A, b = sf.c, sf.A, sf.b
    h = sf.h_vec()
    x = np.zeros(n)
    y = np.zeros(p)
    s = _ConeVec.identity(sf.l, sf.sizes)
    z = _ConeVec.identity(sf.l, sf.sizes)
    tau, kappa = 1.0, 1.0
    nu1 = sf.nu + 1
    norm_b = max(1.0, float(np.max(np.abs(b))) if b.size else 0.0)
    norm_h = max(1.0, h.inf_norm())
    norm_c = max(1.0, float(np.max(np.abs(c))))
    history = []
    best_state = None
    best_merit = math.inf
    stall = 0
    recenter_retries = 0
    sigma_floor = 0.0
    ratio0 = None  # initial residual-to-mu ratio, for balanced reduction

    def result_from(state, status, iterations):
        bx, by, bs, bz, btau, _ = state
        X = bx / btau
        Y = by / btau
        S = bs.scale(1.0 / btau)
        Z = bz.scale(1.0 / btau)
        pcost = float(c @ X)
        dcost = -float(b @ Y) - h.dot(Z)
        res = _residual_report(sf, X, Y, S, Z, norm_b, norm_h, norm_c)
        if (res["primal"] <= cfg.feas_tol and res["dual"] <= cfg.feas_tol
                and res["gap"] <= cfg.gap_tol):
            status = "optimal"
        X0, Y0, S0, Z0 = sf.unscale_solution(X, Y, S, Z)
        return SolveResult(
            status=status, primal=pcost / sf.obj_scale, dual=dcost / sf.obj_scale,
            x=X0, y_eq=sf.expand_eq_duals(Y0),
            z_lin=Z0.lin, z_psd=[M.copy() for M in Z0.mats],
            s_lin=S0.lin, s_psd=[M.copy() for M in S0.mats],
            residuals=res, iterations=iterations, history=history,
        )

    def current_result(status, iterations):
        state = best_state or (x, y, s, z, tau, kappa)
        return result_from(state, status, iterations)

    def merit_at(xt, yt, st, zt, taut, kappat):
        Xt, Yt = xt / taut, yt / taut
        St, Zt = st.scale(1.0 / taut), zt.scale(1.0 / taut)
        pc = float(c @ Xt)
        dc = -float(b @ Yt) - h.dot(Zt)
        pr_eq = float(np.max(np.abs(A @ Xt - b))) / norm_b if p else 0.0
        prz = sf.G_apply(Xt)
        prz.axpy(1.0, St)
        prz.axpy(-1.0, h)
        pr_all = max(pr_eq, prz.inf_norm() / norm_h)
        dvec = (A.T @ Yt if p else 0.0) + sf.GT_apply(Zt) + c
        dr = float(np.max(np.abs(dvec))) / norm_c
        gp = abs(pc - dc) / (1.0 + abs(pc))
        return max(pr_all, dr, gp)

    it = 0
    for it in range(cfg.max_iter):
        Gx = sf.G_apply(x)
        rx = A.T @ y + sf.GT_apply(z) + c * tau if p else sf.GT_apply(z) + c * tau
        ry = A @ x - b * tau if p else np.zeros(0)
        rz = Gx.copy()
        rz.axpy(1.0, s)
        rz.axpy(-tau, h)
        rtau = float(c @ x) + (float(b @ y) if p else 0.0) + h.dot(z) + kappa
        mu = (s.dot(z) + tau * kappa) / nu1
        r_abs = max(float(np.max(np.abs(rx))),
                    float(np.max(np.abs(ry))) if ry.size else 0.0,
                    rz.inf_norm())
        if ratio0 is None:
            ratio0 = max(r_abs, 1e-12) / mu

        # scaled convergence metrics
        X, Y = x / tau, y / tau
        Slam, Zlam = s.scale(1.0 / tau), z.scale(1.0 / tau)
        pcost = float(c @ X)
        dcost = -(float(b @ Y) if p else 0.0) - h.dot(Zlam)
        pres_eq = float(np.max(np.abs(A @ X - b))) / norm_b if p else 0.0
        prz = sf.G_apply(X)
        prz.axpy(1.0, Slam)
        prz.axpy(-1.0, h)
        pres = max(pres_eq, prz.inf_norm() / norm_h)
        dres_vec = (A.T @ Y if p else 0.0) + sf.GT_apply(Zlam) + c
        dres = float(np.max(np.abs(dres_vec))) / norm_c
        gap_rel = abs(pcost - dcost) / (1.0 + abs(pcost))
        history.append((pcost / sf.obj_scale, dcost / sf.obj_scale, pres, dres))
        merit = max(pres, dres, gap_rel)
        if pres <= cfg.feas_tol and dres <= cfg.feas_tol and gap_rel <= cfg.gap_tol:
            return result_from((x, y, s, z, tau, kappa), "optimal", it)
        if best_state is not None and merit > 10.0 * best_merit and best_merit < 1e-4:
            # endgame breakdown: restore the best iterate and continue with
            # deliberately centered, damped steps
            if recenter_retries >= 3:
                return current_result("numerical_failure", it)
            recenter_retries += 1
            sigma_floor = 0.3
            bx, by, bs, bz, btau, bkappa = best_state
            x, y = bx.copy(), by.copy()
            s, z = bs.copy(), bz.copy()
            tau, kappa = btau, bkappa
            stall += 1
            if stall >= 15:
                return current_result("numerical_failure", it)
            Gx = sf.G_apply(x)
            rx = A.T @ y + sf.GT_apply(z) + c * tau
            ry = A @ x - b * tau
            rz = Gx.copy()
            rz.axpy(1.0, s)
            rz.axpy(-tau, h)
            rtau = float(c @ x) + (float(b @ y) if p else 0.0) + h.dot(z) + kappa
            mu = (s.dot(z) + tau * kappa) / nu1
        elif merit < best_merit * 0.999:
            best_merit = merit
            best_state = (x.copy(), y.copy(), s.copy(), z.copy(), tau, kappa)
            stall = 0
        else:
            stall += 1
        if stall >= 15:
            return current_result("numerical_failure", it)

        # infeasibility / unboundedness certificates from the embedding
        by_hz = (float(b @ y) if p else 0.0) + h.dot(z)
        if by_hz < -1e-12:
            cert = float(np.max(np.abs(A.T @ y + sf.GT_apply(z)))) if p else \
                float(np.max(np.abs(sf.GT_apply(z))))
            if cert / (-by_hz) <= cfg.feas_tol * norm_c:
                return SolveResult("infeasible", math.inf, math.inf,
                                   residuals={"certificate": cert / (-by_hz)},
                                   iterations=it, history=history)
        cx = float(c @ x)
        if cx < -1e-12:
            gxs = Gx.copy()
            gxs.axpy(1.0, s)
            cert = max(float(np.max(np.abs(A @ x))) if p else 0.0, gxs.inf_norm())
            if cert / (-cx) <= cfg.feas_tol * max(norm_b, norm_h):
                return SolveResult("unbounded", -math.inf, -math.inf,
                                   residuals={"certificate": cert / (-cx)},
                                   iterations=it, history=history)

        if (s.lin.size and (np.min(s.lin) <= 0.0 or np.min(z.lin) <= 0.0)) or \
                not (np.all(np.isfinite(s.lin)) and np.all(np.isfinite(z.lin))):
            return current_result("numerical_failure", it)
        try:
            scal = _Scaling(s, z)
            kkt = _KKT(sf, scal)
            lam = scal.lam()
            dx2, dy2, dz2 = kkt.solve3(-c, b, h)
        except (np.linalg.LinAlgError, ValueError):
            return current_result("numerical_failure", it)

        def direction(ds_target, dkt_target, eta):
            q = scal.mult_Wt_lam_solve_extended(ds_target)
            w_tilde = rz.scale(-np.longdouble(eta))
            w_tilde.axpy(-1.0, q)
            dx1, dy1, dz1 = kkt.solve3(-eta * rx, -eta * ry, w_tilde)
            den = float(c @ dx2) + (float(b @ dy2) if p else 0.0) + h.dot(dz2) - kappa / tau
            num = -eta * rtau - float(c @ dx1) - (float(b @ dy1) if p else 0.0) \
                - h.dot(dz1) - dkt_target / tau
            dtau = num / den
            dx = dx1 + dtau * dx2
            dy = dy1 + dtau * dy2
            dz = dz1.combo(dtau, dz2)
            ds = scal.ds_from_dz(q, dz)
            dkappa = (dkt_target - kappa * dtau) / tau
            return dx, dy, dz, ds, dtau, dkappa

        # predictor
        try:
            ds_aff = _jordan(lam, lam).scale(-1.0)
            dxa, dya, dza, dsa, dtaua, dkappaa = direction(ds_aff, -tau * kappa, 1.0)
        except (np.linalg.LinAlgError, ValueError):
            return current_result("numerical_failure", it)
        dz_bar = scal.scale_z(dza)
        ds_bar = scal.scale_s(dsa)
        alpha_a = min(
            _step_to_boundary(lam, ds_bar),
            _step_to_boundary(lam, dz_bar),
            tau / -dtaua if dtaua < 0 else math.inf,
            kappa / -dkappaa if dkappaa < 0 else math.inf,
        )
        alpha_a = min(1.0, alpha_a)
        mu_aff = (
            s.combo(alpha_a, dsa).dot(z.combo(alpha_a, dza))
            + (tau + alpha_a * dtaua) * (kappa + alpha_a * dkappaa)
        ) / nu1
        sigma = min(1.0, max(0.0, (mu_aff / mu))) ** 3
        sigma = max(sigma, sigma_floor)
        # keep mu from outrunning the residuals: a vanishing barrier with
        # lagging feasibility wrecks the KKT conditioning before convergence
        if mu * ratio0 < 0.1 * r_abs:
            sigma = max(sigma, 0.5)

        # corrector
        try:
            e = _ConeVec.identity(sf.l, sf.sizes)
            ds_comb = _jordan(lam, lam).scale(-1.0)
            ds_comb.axpy(-1.0, _jordan(ds_bar, dz_bar))
            ds_comb.axpy(sigma * mu, e)
            dkt_comb = -tau * kappa - dtaua * dkappaa + sigma * mu
            dx, dy, dz, ds, dtau, dkappa = direction(ds_comb, dkt_comb, 1.0 - sigma)
        except (np.linalg.LinAlgError, ValueError):
            return current_result("numerical_failure", it)
        alpha = min(
            _step_to_boundary(lam, scal.scale_s(ds)),
            _step_to_boundary(lam, scal.scale_z(dz)),
            tau / -dtau if dtau < 0 else math.inf,
            kappa / -dkappa if dkappa < 0 else math.inf,
        )
        # damp steps once progress degrades; calms end-game oscillation
        frac = cfg.step_fraction
        if stall >= 5 or recenter_retries:
            frac = min(frac, 0.85)
        alpha = min(1.0, frac * alpha)
        if not math.isfinite(alpha) or alpha <= 1e-14:
            return current_result("numerical_failure", it)
        if best_merit < 1e-4:
            # endgame: pick the step fraction with the best balanced merit
            cands = [alpha, 0.7 * alpha, 0.45 * alpha, 0.25 * alpha]
            scored = []
            for a in cands:
                try:
                    m_a = merit_at(x + a * dx, y + a * dy, s.combo(a, ds),
                                   z.combo(a, dz), tau + a * dtau,
                                   kappa + a * dkappa)
                except (FloatingPointError, ZeroDivisionError):
                    m_a = math.inf
                scored.append((m_a, a))
            scored.sort()
            alpha = scored[0][1]
        x += alpha * dx
        y += alpha * dy
        s.axpy(alpha, ds)
        z.axpy(alpha, dz)
        tau += alpha * dtau
        kappa += alpha * dkappa
        if tau <= 0 or kappa < 0:
            return current_result("numerical_failure", it)

    return current_result("max_iter", cfg.max_iter)


def _residual_report(sf, X, Y, S, Z, norm_b, norm_h, norm_c) -> dict:
    p = sf.A.shape[0]
    pres_eq = float(np.max(np.abs(sf.A @ X - sf.b))) / norm_b if p else 0.0
    prz = sf.G_apply(X)
    prz.axpy(1.0, S)
    prz.axpy(-1.0, sf.h_vec())
    dres_vec = (sf.A.T @ Y if p else 0.0) + sf.GT_apply(Z) + sf.c
    pcost = float(sf.c @ X)
    dcost = -(float(sf.b @ Y) if p else 0.0) - sf.h_vec().dot(Z)
    return {
        "primal": max(pres_eq, prz.inf_norm() / norm_h),
        "dual": float(np.max(np.abs(dres_vec))) / norm_c,
        "gap": abs(pcost - dcost) / (1.0 + abs(pcost)),
        "complementarity": S.dot(Z),
    }
