"""Block semidefinite programming with a Nesterov-Todd interior-point method.

Solves problems of the form

    maximize    sum_b tr(C_b X_b)
    subject to  sum_b tr(A_kb X_b) = b_k,   k = 1..m,
                X_b >= 0  for every block b,

over real symmetric blocks, using a primal-dual predictor-corrector method
with Nesterov-Todd scaling and an infeasible start.  The gap |primal - dual|
is certified at exit together with the equality and dual-slack residuals.

Complex Hermitian data enters through the symmetric embedding
[[Re, -Im], [Im, Re]], which doubles every eigenvalue's multiplicity and so
preserves positive semidefiniteness; :func:`solve_complex` applies the
embedding, the factor-two bookkeeping, and the inverse extraction in one
place so callers never handle the convention themselves.

Problems round-trip through the sparse SDPA text format, read as
max tr(F0 Y) s.t. tr(F_k Y) = c_k over Y >= 0.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse

logger = logging.getLogger(__name__)

_SYM_ATOL = 1e-12


class SdpInfeasibleError(RuntimeError):
    """Raised when the constraint set is certified empty (or the objective
    diverges, which certifies infeasibility of the dual side).

    Attributes
    ----------
    solution : SDPSolution or None
        Last iterate with ``status='infeasible'``, when one exists.
    certificate : ndarray or None
        Farkas vector y with sum_k y_k A_k >= 0 and b.y < 0.
    """

    def __init__(self, message, solution=None, certificate=None):
        super().__init__(message)
        self.solution = solution
        self.certificate = certificate


class _Breakdown(RuntimeError):
    pass


@dataclass
class SolverOptions:
    """Termination and stepping controls for :func:`solve`.

    ``weak_duality_margin`` is the amount (relative to the value scale) by
    which the primal value may exceed the dual bound in an iterate declared
    optimal; keeping it near machine precision means the reported dual value
    is a genuine one-sided bound, not just close.
    """

    gap_tol: float = 1e-7
    feas_tol: float = 1e-8
    max_iterations: int = 200
    step_fraction: float = 0.98
    weak_duality_margin: float = 1e-12


@dataclass
class SDPSolution:
    """Solver output.

    ``duality_gap`` is the certified |primal_value - dual_value| at the
    returned iterate; when ``status == 'optimal'`` it is at or below the gap
    tolerance and every equality constraint holds to the feasibility
    tolerance.  ``status`` is one of ``optimal``, ``infeasible``,
    ``max_iterations``.
    """

    primal_value: float
    dual_value: float
    primal_blocks: list
    duality_gap: float
    status: str
    dual_y: np.ndarray | None = None
    iterations: int = 0
    primal_residual: float = 0.0
    dual_residual: float = 0.0


def _as_symmetric(mat, dim, what):
    arr = np.asarray(mat, dtype=float)
    if arr.shape != (dim, dim):
        raise ValueError(f"{what}: expected shape {(dim, dim)}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what}: non-finite entries")
    gap = np.max(np.abs(arr - arr.T)) if dim else 0.0
    if gap > _SYM_ATOL * max(1.0, np.max(np.abs(arr))):
        raise ValueError(f"{what}: not symmetric (max asymmetry {gap:g})")
    return 0.5 * (arr + arr.T)


class BlockSDP:
    """A block-diagonal SDP in equality form.

    Parameters
    ----------
    blocks : sequence of int
        Side length of each diagonal block.
    objective : sequence of ndarray
        One real symmetric matrix per block.
    constraints : sequence of (coeffs, rhs)
        ``coeffs`` maps block index -> real symmetric matrix; a list with
        ``None`` holes is also accepted.  Blocks not mentioned carry zero
        coefficients.
    sense : {"max", "min"}
    """

    def __init__(self, blocks, objective, constraints, sense="max"):
        self.blocks = [int(n) for n in blocks]
        if not self.blocks or any(n < 1 for n in self.blocks):
            raise ValueError("blocks must be a nonempty list of positive dimensions")
        if sense not in ("max", "min"):
            raise ValueError(f"sense must be 'max' or 'min', got {sense!r}")
        self.sense = sense
        if len(objective) != len(self.blocks):
            raise ValueError("objective must supply one matrix per block")
        self.objective = [
            _as_symmetric(c, n, f"objective block {b}")
            for b, (c, n) in enumerate(zip(objective, self.blocks))
        ]
        if not constraints:
            raise ValueError("constraint list is empty")
        self.constraints = []
        for k, (coeffs, rhs) in enumerate(constraints):
            rhs = float(rhs)
            if not np.isfinite(rhs):
                raise ValueError(f"constraint {k}: non-finite right-hand side")
            if not isinstance(coeffs, dict):
                coeffs = {b: m for b, m in enumerate(coeffs) if m is not None}
            clean = {}
            for b, mat in coeffs.items():
                b = int(b)
                if not 0 <= b < len(self.blocks):
                    raise ValueError(f"constraint {k}: block index {b} out of range")
                clean[b] = _as_symmetric(mat, self.blocks[b], f"constraint {k}, block {b}")
            self.constraints.append((clean, rhs))

    @property
    def n_constraints(self):
        return len(self.constraints)


# ---------------------------------------------------------------------------
# compilation: sparse constraint table, row scaling, redundancy removal


@dataclass
class _BlockData:
    touch: np.ndarray          # kept-constraint indices with support here
    stack: np.ndarray          # (t, n, n) dense coefficient stack
    vecs: scipy.sparse.csr_matrix  # (t, n*n) sparse rows, same order as touch


@dataclass
class _Compiled:
    dims: list
    C: list                    # sense-adjusted objective blocks
    b: np.ndarray              # scaled right-hand sides, kept rows
    P: scipy.sparse.csr_matrix  # (m_kept, sum n_b^2) scaled constraint table
    per_block: list
    offsets: list
    row_scale: np.ndarray      # kept rows: original A_k = scale_k * scaled A_k
    keep: np.ndarray           # kept row indices into the original constraint list
    m_orig: int
    sense_sign: float
    norm_b: float
    norm_C: float
    x0_scales: np.ndarray


def _compile(problem: BlockSDP, feas_tol: float) -> _Compiled:
    dims = problem.blocks
    sgn = 1.0 if problem.sense == "max" else -1.0
    C = [sgn * c for c in problem.objective]
    offsets = np.concatenate([[0], np.cumsum([n * n for n in dims])]).tolist()
    total = offsets[-1]
    m = problem.n_constraints

    rows, cols, vals = [], [], []
    b = np.empty(m)
    for k, (coeffs, rhs) in enumerate(problem.constraints):
        b[k] = rhs
        for bi, mat in coeffs.items():
            nz = np.nonzero(mat)
            if nz[0].size == 0:
                continue
            rows.append(np.full(nz[0].size, k))
            cols.append(offsets[bi] + nz[0] * dims[bi] + nz[1])
            vals.append(mat[nz])
    if rows:
        P = scipy.sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(m, total),
        )
    else:
        P = scipy.sparse.csr_matrix((m, total))

    norms = np.sqrt(np.asarray(P.multiply(P).sum(axis=1)).ravel())
    zero = norms <= 1e-14
    if np.any(zero & (np.abs(b) > 1e-12)):
        k = int(np.nonzero(zero & (np.abs(b) > 1e-12))[0][0])
        cert = np.zeros(m)
        cert[k] = -np.sign(b[k])
        raise SdpInfeasibleError(
            f"constraint {k} has zero coefficients but rhs {b[k]:g}",
            certificate=cert,
        )
    keep = np.nonzero(~zero)[0]
    if keep.size == 0:
        raise ValueError("all constraints have zero coefficient matrices")
    P = P[keep]
    b = b[keep]
    scale = norms[keep]
    P = scipy.sparse.diags(1.0 / scale) @ P
    b = b / scale

    # Redundant equality rows make the Schur system singular; detect and
    # drop them, checking that the dropped right-hand sides stay consistent.
    gram = (P @ P.T).toarray()
    try:
        np.linalg.cholesky(gram + 1e-14 * np.eye(keep.size))
        independent = np.arange(keep.size)
    except np.linalg.LinAlgError:
        dense = P.toarray()
        _, R, piv = scipy.linalg.qr(dense.T, mode="economic", pivoting=True)
        diag = np.abs(np.diag(R))
        rank = int(np.sum(diag > 1e-10 * max(diag[0], 1e-300)))
        independent = np.sort(piv[:rank])
        dropped = np.setdiff1d(np.arange(keep.size), independent)
        if dropped.size:
            coef, *_ = np.linalg.lstsq(dense[independent].T, dense[dropped].T, rcond=None)
            mismatch = b[dropped] - coef.T @ b[independent]
            bad = np.abs(mismatch) > 1e-7 * (1.0 + np.max(np.abs(b)))
            if np.any(bad):
                j = int(np.nonzero(bad)[0][0])
                cert = np.zeros(m)
                sign = -np.sign(mismatch[j])
                cert[keep[dropped[j]]] = -sign / scale[dropped[j]]
                cert[keep[independent]] = sign * coef[:, j] / scale[independent]
                raise SdpInfeasibleError(
                    "equality constraints are inconsistent "
                    f"(row {keep[dropped[j]]} conflicts with the rest by {mismatch[j]:g})",
                    certificate=cert,
                )
            logger.debug("presolve dropped %d dependent constraint rows", dropped.size)
    P = P[independent]
    b = b[independent]
    scale = scale[independent]
    keep = keep[independent]

    per_block = []
    for bi, n in enumerate(dims):
        sub = P[:, offsets[bi]:offsets[bi] + n * n].tocsr()
        touch = np.nonzero(np.diff(sub.indptr))[0]
        sub = sub[touch]
        stack = np.asarray(sub.todense()).reshape(touch.size, n, n)
        per_block.append(_BlockData(touch=touch, stack=stack, vecs=sub.tocsr()))

    # Least-squares fit of the starting point X0 = t_b * I on the identity
    # ray, so trace-type constraints are met from the first iterate.
    tr_cols = np.zeros((len(b), len(dims)))
    for bi, n in enumerate(dims):
        bd = per_block[bi]
        diag_idx = np.arange(n) * n + np.arange(n)
        tr_cols[bd.touch, bi] = bd.stack[:, np.arange(n), np.arange(n)].sum(axis=1)
    if len(b):
        t, *_ = np.linalg.lstsq(tr_cols, b, rcond=None)
    else:
        t = np.ones(len(dims))
    x0 = np.clip(np.nan_to_num(t, nan=1.0), 0.5, 1e4)

    norm_C = max((np.max(np.abs(c)) if c.size else 0.0) for c in C)
    return _Compiled(
        dims=dims, C=C, b=b, P=P, per_block=per_block, offsets=offsets,
        row_scale=scale, keep=keep, m_orig=m, sense_sign=sgn,
        norm_b=float(np.max(np.abs(b))) if len(b) else 0.0,
        norm_C=float(norm_C), x0_scales=x0,
    )


# ---------------------------------------------------------------------------
# interior-point core


def _chol(mat, ridge_base):
    for attempt in range(4):
        shift = 0.0 if attempt == 0 else ridge_base * 10.0 ** (2 * attempt)
        try:
            return np.linalg.cholesky(mat + shift * np.eye(mat.shape[0]) if shift else mat)
        except np.linalg.LinAlgError:
            continue
    raise _Breakdown("Cholesky failed after ridge escalation")


def _max_step(L, delta):
    """Largest alpha with S + alpha*delta >= 0, given S = L L^T."""
    K = scipy.linalg.solve_triangular(L, delta, lower=True)
    K = scipy.linalg.solve_triangular(L, K.T, lower=True)
    lam = float(np.linalg.eigvalsh(0.5 * (K + K.T))[0])
    if lam >= -1e-14:
        return np.inf
    return -1.0 / lam


def _vec_all(blocks):
    return np.concatenate([m.ravel() for m in blocks])


def _mat_all(vec, dims, offsets):
    return [vec[offsets[i]:offsets[i] + n * n].reshape(n, n) for i, n in enumerate(dims)]


def _apply_adjoint(comp, y):
    return _mat_all(comp.P.T @ y, comp.dims, comp.offsets)


def _farkas_certificate(comp, y, feas_tol):
    """Check y (in the scaled kept basis) for a primal infeasibility proof."""
    ny = float(np.max(np.abs(y)))
    if ny <= 0:
        return None
    yn = y / ny
    by = float(comp.b @ yn)
    if by > -1e-8:
        return None
    slack = _apply_adjoint(comp, yn)
    lam = min(float(np.linalg.eigvalsh(s)[0]) for s in slack)
    if lam >= -1e-10:
        full = np.zeros(comp.m_orig)
        full[comp.keep] = yn / comp.row_scale
        return full
    return None


def _solution(comp, X, y, Z, iters, status):
    pobj = sum(float(np.vdot(c, x)) for c, x in zip(comp.C, X))
    dobj = float(comp.b @ y)
    rp = comp.b - comp.P @ _vec_all(X)
    Ay = _apply_adjoint(comp, y)
    rd = max(
        float(np.max(np.abs(c + z - ay))) if c.size else 0.0
        for c, z, ay in zip(comp.C, Z, Ay)
    )
    sgn = comp.sense_sign
    y_full = np.zeros(comp.m_orig)
    y_full[comp.keep] = sgn * y / comp.row_scale
    return SDPSolution(
        primal_value=sgn * pobj,
        dual_value=sgn * dobj,
        primal_blocks=[x.copy() for x in X],
        duality_gap=abs(pobj - dobj),
        status=status,
        dual_y=y_full,
        iterations=iters,
        primal_residual=float(np.max(np.abs(rp))) if len(rp) else 0.0,
        dual_residual=rd,
    )


def solve(problem: BlockSDP, options: SolverOptions | None = None) -> SDPSolution:
    """Solve a :class:`BlockSDP`.

    Returns an :class:`SDPSolution` whose ``status`` is ``optimal`` when the
    certified gap and both residuals meet the tolerances, and
    ``max_iterations`` otherwise (best iterate returned).  Certified
    infeasibility raises :class:`SdpInfeasibleError`.
    """
    opts = options or SolverOptions()
    comp = _compile(problem, opts.feas_tol)
    dims, offsets = comp.dims, comp.offsets
    m = len(comp.b)
    n_total = sum(dims)

    X = [comp.x0_scales[i] * np.eye(n) for i, n in enumerate(dims)]
    z0 = max(1.0, comp.norm_C)
    Z = [z0 * np.eye(n) for n in dims]
    y = np.zeros(m)

    best = None
    best_score = np.inf
    stall = 0
    mu_floor_hits = 0
    mu_prev = np.inf
    status = "max_iterations"
    it = 0

    for it in range(opts.max_iterations):
        rp = comp.b - comp.P @ _vec_all(X)
        Ay = _apply_adjoint(comp, y)
        Rd = [c + z - ay for c, z, ay in zip(comp.C, Z, Ay)]

        pobj = sum(float(np.vdot(c, x)) for c, x in zip(comp.C, X))
        dobj = float(comp.b @ y)
        gap = abs(pobj - dobj)
        pinf = float(np.max(np.abs(rp))) / (1.0 + comp.norm_b)
        dinf = max(float(np.max(np.abs(r))) for r in Rd) / (1.0 + comp.norm_C)
        mu = sum(float(np.vdot(x, z)) for x, z in zip(X, Z)) / n_total

        logger.debug(
            "iter %3d  p=% .9e  d=% .9e  gap=%.2e  pinf=%.2e  dinf=%.2e  mu=%.2e",
            it, pobj, dobj, gap, pinf, dinf, mu,
        )

        margin = opts.weak_duality_margin * max(1.0, abs(pobj), abs(dobj))
        score = max(gap, pinf, dinf, (pobj - dobj) - margin)
        if score < best_score:
            best_score = score
            best = (
                [x.copy() for x in X], y.copy(), [z.copy() for z in Z], it,
            )
        if (
            gap <= opts.gap_tol
            and pinf <= opts.feas_tol
            and dinf <= opts.feas_tol
            and pobj - dobj <= margin
        ):
            status = "optimal"
            best = ([x.copy() for x in X], y.copy(), [z.copy() for z in Z], it)
            break

        if it >= 3 and (dobj < -1e5 * (1.0 + comp.norm_b) or np.max(np.abs(y)) > 1e7):
            cert = _farkas_certificate(comp, y, opts.feas_tol)
            if cert is not None:
                sol = _solution(comp, X, y, Z, it, "infeasible")
                raise SdpInfeasibleError(
                    "primal constraints certified infeasible "
                    f"(Farkas gap {float(comp.b @ (y / np.max(np.abs(y)))):.3e})",
                    solution=sol, certificate=cert,
                )
        x_inf = max(float(np.max(np.abs(x))) for x in X)
        if pobj > 1e8 * (1.0 + comp.norm_b + comp.norm_C) and pinf <= 1e-5 * (1.0 + x_inf):
            raise SdpInfeasibleError(
                "objective diverges: problem unbounded above (dual side infeasible)",
                solution=_solution(comp, X, y, Z, it, "infeasible"),
            )

        # loss of progress at the numerical floor: return the best iterate
        if mu > 0.8 * mu_prev:
            stall += 1
        else:
            stall = 0
        mu_prev = mu
        if stall >= 8 or mu < 1e-17 * (1.0 + comp.norm_C):
            mu_floor_hits += 1
            if mu_floor_hits >= 1:
                break

        try:
            # Nesterov-Todd scaling per block: W Z W = X, with factors
            # W = R R^T and R^T Z R = R^{-1} X R^{-T} = diag(s).
            Lx, Lz, Rf, Rinv, svals, W = [], [], [], [], [], []
            for bi, n in enumerate(dims):
                ridge = 1e-14 * max(1.0, np.trace(X[bi]) / n)
                lx = _chol(X[bi], ridge)
                lz = _chol(Z[bi], 1e-14 * max(1.0, np.trace(Z[bi]) / n))
                u_, s_, vt_ = np.linalg.svd(lz.T @ lx)
                s_ = np.maximum(s_, 1e-150)
                r_ = lx @ (vt_.T / np.sqrt(s_))
                rinv_ = (np.sqrt(s_)[:, None] * vt_) @ scipy.linalg.solve_triangular(
                    lx, np.eye(n), lower=True
                )
                Lx.append(lx); Lz.append(lz); Rf.append(r_); Rinv.append(rinv_)
                svals.append(s_); W.append(r_ @ r_.T)

            # Schur complement M_kj = sum_b tr(A_kb W_b A_jb W_b)
            M = np.zeros((m, m))
            for bi, n in enumerate(dims):
                bd = comp.per_block[bi]
                if bd.touch.size == 0:
                    continue
                u = W[bi] @ bd.stack @ W[bi]
                sub = bd.vecs @ u.reshape(bd.touch.size, n * n).T
                M[np.ix_(bd.touch, bd.touch)] += sub
            M = 0.5 * (M + M.T)
            Mfac = None
            for attempt in range(4):
                shift = 0.0 if attempt == 0 else 10.0 ** (2 * attempt) * 1e-13 * (
                    1.0 + float(np.trace(M)) / m
                )
                try:
                    Mfac = scipy.linalg.cho_factor(
                        M + shift * np.eye(m) if shift else M, lower=True
                    )
                    break
                except np.linalg.LinAlgError:
                    continue
            if Mfac is None:
                raise _Breakdown("Schur complement not positive definite")

            WRdW = [W[bi] @ Rd[bi] @ W[bi] for bi in range(len(dims))]
            q_base = comp.P @ _vec_all(WRdW) - rp

            def directions(sigma_mu, Xi):
                rc = []
                for bi, n in enumerate(dims):
                    s_ = svals[bi]
                    tgt = np.diag(sigma_mu - s_ * s_).astype(float)
                    if Xi is not None:
                        tgt = tgt - Xi[bi]
                    r_tilde = 2.0 * tgt / (s_[:, None] + s_[None, :])
                    rc_b = Rf[bi] @ r_tilde @ Rf[bi].T
                    rc.append(0.5 * (rc_b + rc_b.T))
                rhs = q_base + comp.P @ _vec_all(rc)
                dy = scipy.linalg.cho_solve(Mfac, rhs)
                Ady = _apply_adjoint(comp, dy)
                dZ = [ady - r for ady, r in zip(Ady, Rd)]
                dX = [
                    rc_b - W[bi] @ dZ[bi] @ W[bi] for bi, rc_b in enumerate(rc)
                ]
                dX = [0.5 * (d + d.T) for d in dX]
                dZ = [0.5 * (d + d.T) for d in dZ]
                return dX, dy, dZ

            # predictor
            dXa, dya, dZa = directions(0.0, None)
            ap = min(1.0, min(_max_step(Lx[bi], dXa[bi]) for bi in range(len(dims))))
            ad = min(1.0, min(_max_step(Lz[bi], dZa[bi]) for bi in range(len(dims))))
            mu_aff = sum(
                float(np.vdot(X[bi] + ap * dXa[bi], Z[bi] + ad * dZa[bi]))
                for bi in range(len(dims))
            ) / n_total
            sigma = float(np.clip((max(mu_aff, 0.0) / mu) ** 3, 1e-8, 1.0 - 1e-8))

            # corrector with the second-order term in the scaled frame
            Xi = []
            for bi in range(len(dims)):
                dxt = Rinv[bi] @ dXa[bi] @ Rinv[bi].T
                dzt = Rf[bi].T @ dZa[bi] @ Rf[bi]
                prod = dxt @ dzt
                Xi.append(0.5 * (prod + prod.T))
            dX, dy, dZ = directions(sigma * mu, Xi)

            tau = opts.step_fraction
            ap = tau * min(1.0 / tau, min(_max_step(Lx[bi], dX[bi]) for bi in range(len(dims))))
            ad = tau * min(1.0 / tau, min(_max_step(Lz[bi], dZ[bi]) for bi in range(len(dims))))
            if min(ap, ad) < 1e-3:
                # corrector overshoot: retreat to a centered first-order step
                dX, dy, dZ = directions(sigma * mu, None)
                ap = tau * min(1.0 / tau, min(_max_step(Lx[bi], dX[bi]) for bi in range(len(dims))))
                ad = tau * min(1.0 / tau, min(_max_step(Lz[bi], dZ[bi]) for bi in range(len(dims))))
        except _Breakdown as exc:
            logger.debug("numerical breakdown at iteration %d: %s", it, exc)
            break

        for bi in range(len(dims)):
            X[bi] = 0.5 * ((X[bi] + ap * dX[bi]) + (X[bi] + ap * dX[bi]).T)
            Z[bi] = 0.5 * ((Z[bi] + ad * dZ[bi]) + (Z[bi] + ad * dZ[bi]).T)
        y = y + ad * dy

    Xb, yb, Zb, itb = best if best is not None else (X, y, Z, it)
    sol = _solution(comp, Xb, yb, Zb, it + 1, status)
    if status != "optimal":
        sp, sd = comp.sense_sign * sol.primal_value, comp.sense_sign * sol.dual_value
        if (
            sol.duality_gap <= opts.gap_tol
            and sol.primal_residual <= opts.feas_tol * (1.0 + comp.norm_b)
            and sol.dual_residual <= opts.feas_tol * (1.0 + comp.norm_C)
            and sp - sd <= opts.weak_duality_margin * max(1.0, abs(sp), abs(sd))
        ):
            sol.status = "optimal"
        else:
            logger.info(
                "no convergence in %d iterations: gap=%.3e pinf=%.3e dinf=%.3e",
                it + 1, sol.duality_gap, sol.primal_residual, sol.dual_residual,
            )
    return sol


# ---------------------------------------------------------------------------
# Hermitian embedding


def embed_hermitian(mat):
    """Real symmetric image [[Re, -Im], [Im, Re]] of a Hermitian matrix.

    tr(embed(A) embed(B)) = 2 tr(A B) for Hermitian A, B, and the embedding
    preserves positive semidefiniteness in both directions.
    """
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("expected a square matrix")
    herm_gap = np.max(np.abs(mat - mat.conj().T)) if mat.size else 0.0
    if herm_gap > 1e-10 * max(1.0, np.max(np.abs(mat))):
        raise ValueError(f"matrix is not Hermitian (max deviation {herm_gap:g})")
    mat = 0.5 * (mat + mat.conj().T)
    return np.block([[mat.real, -mat.imag], [mat.imag, mat.real]])


def extract_hermitian(sym):
    """Inverse of :func:`embed_hermitian` on 2d x 2d symmetric matrices.

    Averages over the symplectic symmetry of the embedded image first, so a
    numerically perturbed solver block maps to the nearest Hermitian matrix
    with the same constraint inner products.
    """
    sym = np.asarray(sym, dtype=float)
    d2 = sym.shape[0]
    if sym.ndim != 2 or sym.shape[1] != d2 or d2 % 2:
        raise ValueError("expected a square matrix of even dimension")
    d = d2 // 2
    re = 0.5 * (sym[:d, :d] + sym[d:, d:])
    re = 0.5 * (re + re.T)
    im = 0.5 * (sym[d:, :d] - sym[:d, d:])
    im = 0.5 * (im - im.T)
    return re + 1j * im


@dataclass
class ComplexBlockSDP:
    """Hermitian-data twin of :class:`BlockSDP`.

    ``objective`` holds one Hermitian matrix per block and each constraint is
    ``(coeffs, rhs)`` with Hermitian coefficient blocks; the real embedded
    problem has the same optimal value.
    """

    blocks: list
    objective: list
    constraints: list
    sense: str = "max"

    def to_real(self) -> BlockSDP:
        dims = [2 * int(n) for n in self.blocks]
        obj = [0.5 * embed_hermitian(c) for c in self.objective]
        cons = []
        for coeffs, rhs in self.constraints:
            if not isinstance(coeffs, dict):
                coeffs = {b: m for b, m in enumerate(coeffs) if m is not None}
            cons.append(({b: embed_hermitian(mat) for b, mat in coeffs.items()}, 2.0 * rhs))
        return BlockSDP(dims, obj, cons, sense=self.sense)


def solve_complex(problem: ComplexBlockSDP, options: SolverOptions | None = None) -> SDPSolution:
    """Solve a Hermitian-data block SDP through the real embedding.

    The returned ``primal_blocks`` are complex Hermitian and the values match
    the Hermitian problem (no factor-two bookkeeping left to the caller).
    """
    sol = solve(problem.to_real(), options)
    sol.primal_blocks = [extract_hermitian(x) for x in sol.primal_blocks]
    if sol.dual_y is not None:
        sol.dual_y = 2.0 * sol.dual_y
    return sol


# ---------------------------------------------------------------------------
# sparse SDPA text format


def write_sdpa(problem: BlockSDP, path):
    """Write a problem in sparse SDPA text (.dat-s) form.

    The file is read back as max tr(F0 Y) s.t. tr(F_k Y) = c_k, Y >= 0;
    minimization problems are stored with the objective negated.
    """
    sgn = 1.0 if problem.sense == "max" else -1.0
    lines = []
    if problem.sense == "min":
        lines.append('"objective negated on write: source problem minimized')
    lines.append(str(problem.n_constraints))
    lines.append(str(len(problem.blocks)))
    lines.append(" ".join(str(n) for n in problem.blocks))
    lines.append(" ".join(repr(float(c[1])) for c in problem.constraints))

    def emit(matno, blkno, mat):
        for i, j in zip(*np.nonzero(np.triu(mat))):
            lines.append(f"{matno} {blkno + 1} {i + 1} {j + 1} {float(mat[i, j])!r}")

    for bi, c in enumerate(problem.objective):
        emit(0, bi, sgn * c)
    for k, (coeffs, _) in enumerate(problem.constraints):
        for bi in sorted(coeffs):
            emit(k + 1, bi, coeffs[bi])
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_sdpa(path) -> BlockSDP:
    """Read a sparse SDPA file written by :func:`write_sdpa` or a compatible
    exporter.  Negative block sizes (diagonal blocks) are expanded to dense
    blocks.  The result always has ``sense='max'``."""
    tokens = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line[0] in '*"':
                continue
            tokens.append(line.replace(",", " ").replace("{", " ").replace("}", " ").split())
    flat = [t for row in tokens for t in row]
    pos = 0

    def take(n):
        nonlocal pos
        out = flat[pos:pos + n]
        pos += n
        return out

    m = int(float(take(1)[0]))
    nblocks = int(float(take(1)[0]))
    dims = [abs(int(float(t))) for t in take(nblocks)]
    rhs = [float(t) for t in take(m)]
    obj = [np.zeros((n, n)) for n in dims]
    cons = [({}, rhs[k]) for k in range(m)]
    while pos + 5 <= len(flat):
        matno, blkno, i, j, val = take(5)
        matno, blkno = int(float(matno)), int(float(blkno)) - 1
        i, j, val = int(float(i)) - 1, int(float(j)) - 1, float(val)
        if matno == 0:
            target = obj[blkno]
        else:
            target = cons[matno - 1][0].setdefault(blkno, np.zeros((dims[blkno], dims[blkno])))
        target[i, j] = val
        target[j, i] = val
    return BlockSDP(dims, obj, cons, sense="max")
