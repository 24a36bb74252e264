"""Sharpness-threshold SDPs.

Each parent effect is written as Pi_a = sum_w c_{a,w} W / 2**k over Pauli
words W, and every operator identity (completeness and one marginal per
observable) becomes a set of real linear equations on the coefficients.
Positivity is imposed through a real symmetric PSD block Z_a of twice the
size, with Pi_a the Hermitian compression of Z_a. That compression maps the
PSD cone onto the PSD cone, so no interior is lost to the embedding.

Two routes give the optimum: a direct conic solve of max lambda, and
bisection over fixed-lambda margin problems. Tests require them to agree.
"""

import logging
import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from .jointmeas import (
    MAX_PARALLEL, Configuration, Povm, UnsupportedConfiguration, marginal_slope,
    sign_strings, verify_povm,
)
from .linalg import ContractViolation, is_hermitian, pauli_basis, pauli_words
from .observables import T_HAT, ObservableSet, theta_family

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
BOUNDARY_TOL = 1e-7
CERTIFY_WINDOW = 1e-6
BISECTION_STEPS = 40
TOL_ENV = "INCOMPAT_LAB_TOL"
MUB_THETA = math.acos(1 / math.sqrt(3))


class SolverError(RuntimeError):
    """Raised by :func:`threshold` when the solve did not reach an optimum."""

    def __init__(self, report):
        super().__init__(f"SDP solve ended with status {report.status}: {report.message}")
        self.report = report


def default_tol():
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return DEFAULT_TOL
    tol = float(raw)
    if not 1e-12 <= tol <= 1e-3:
        raise ValueError(f"{TOL_ENV}={raw} outside [1e-12, 1e-3]")
    return tol


def hermitian_real_embedding(op):
    """Real symmetric [[Re, -Im], [Im, Re]] of a Hermitian operator."""
    if not is_hermitian(op, 1e-10):
        raise ContractViolation("real embedding needs a Hermitian operator")
    return np.block([[op.real, -op.imag], [op.imag, op.real]])


def _compress(zmat, d):
    """Hermitian d x d operator whose real embedding pairs with Z."""
    a, b = zmat[:d, :d], zmat[:d, d:]
    c, e = zmat[d:, :d], zmat[d:, d:]
    return 0.5 * (a + e) + 0.5j * (c - b)


@dataclass(eq=False)
class SdpModel:
    """Data of the program: maximise lambda subject to

        sum_a c_a = e_I,
        sum_{a: a_r = +1} c_a = e_I / 2 + lambda * g_r   (r = 1..N),
        compress(Z_a) has coefficients c_a,  Z_a PSD,  lambda <= 1.
    """

    obs: ObservableSet
    config: Configuration
    words: list
    identity_coeffs: np.ndarray
    masks: np.ndarray  # (N, 2**N) bool, outcome has a_r = +1
    slopes: np.ndarray  # (N, n_words) Pauli coefficients of the marginal slope
    slope_ops: np.ndarray  # (N, d, d) the slope operators themselves
    meta: dict = field(default_factory=dict)

    @property
    def n_blocks(self):
        return self.masks.shape[1]

    @property
    def block_dim(self):
        return self.config.hilbert_dim

    @property
    def n_constraints(self):
        """Operator identities: one completeness plus one per observable."""
        return 1 + len(self.obs)

    def trivial_point_residual(self):
        """Residual of Pi_a = I / 2**N at lambda = 0 (always feasible)."""
        c = np.tile(self.identity_coeffs / self.n_blocks, (self.n_blocks, 1))
        res = [np.abs(c.sum(0) - self.identity_coeffs).max()]
        for r in range(len(self.obs)):
            res.append(np.abs(c[self.masks[r]].sum(0) - 0.5 * self.identity_coeffs).max())
        return float(max(res))


def assemble_threshold_sdp(obs, config):
    if config.kind == "parallel" and config.k > MAX_PARALLEL:
        raise UnsupportedConfiguration(f"parallel:{config.k} exceeds k <= {MAX_PARALLEL}")
    k = config.copies
    d = 2**k
    words = pauli_words(k)
    basis = pauli_basis(k)
    ident = np.zeros(len(words))
    ident[0] = 1.0
    signs = np.array(sign_strings(len(obs)))
    masks = (signs == 1).T
    # Pauli coefficients c_w = Tr[D W] / d
    slope_ops = np.array([marginal_slope(config, n) for n in obs])
    slopes = np.einsum("rij,wji->rw", slope_ops, basis).real / d
    model = SdpModel(obs, config, words, ident, masks, slopes, slope_ops,
                     {"label": obs.label, "config": str(config)})
    assert model.trivial_point_residual() < 1e-12
    return model


@dataclass
class SolveReport:
    status: str
    lambda_star: float
    povm: Povm = field(repr=False)
    primal_residual: float
    dual_gap: float
    iterations: int
    wall_time: float
    boundary: bool = False
    method: str = "direct"
    solver_status: str = ""
    message: str = ""

    def to_json(self):
        return {
            "status": self.status,
            "lambda_star": self.lambda_star,
            "boundary": self.boundary,
            "primal_residual": self.primal_residual,
            "dual_gap": self.dual_gap,
            "iterations": self.iterations,
            "wall_time": self.wall_time,
            "method": self.method,
            "solver_status": self.solver_status,
            "message": self.message,
        }


def _solver_opts(tol, scale=1e-2):
    # the conic stopping rule is on scaled residuals; two extra digits keep
    # lambda itself within tol, and _polish repairs the leftover infeasibility
    inner = max(tol * scale, 1e-12)
    return {"tol_gap_abs": inner, "tol_gap_rel": inner, "tol_feas": inner, "max_iter": 200}


class _Program:
    """cvxpy program for a model; ``lam`` is a variable or a parameter."""

    def __init__(self, model, fixed_lambda):
        d = model.block_dim
        self.model = model
        self.zs = [cp.Variable((2 * d, 2 * d), symmetric=True) for _ in range(model.n_blocks)]
        self.psd = [z >> 0 for z in self.zs]
        if fixed_lambda:
            self.lam = cp.Parameter(nonneg=True)
            self.margin = cp.Variable()
            extra = [self.margin <= 1]
            objective = cp.Maximize(self.margin)
        else:
            self.lam = cp.Variable()
            self.margin = None
            self.cap = self.lam <= 1
            extra = [self.cap]
            objective = cp.Maximize(self.lam)
        # Pi_a = R_a + i M_a entrywise; equalities are imposed on the
        # diagonal and upper triangle of R and the strict upper triangle of
        # M, which keeps every row sparse
        eye = np.eye(d)
        parts = []
        for z in self.zs:
            re = 0.5 * (z[:d, :d] + z[d:, d:])
            if fixed_lambda:
                re = re + self.margin * eye
            parts.append((re, 0.5 * (z[d:, :d] - z[:d, d:])))

        def equal(re, im, t_re, t_im):
            return [cp.diag(re) == cp.diag(t_re), cp.upper_tri(re) == cp.upper_tri(t_re),
                    cp.upper_tri(im) == cp.upper_tri(t_im)]

        cons = equal(sum(p[0] for p in parts), sum(p[1] for p in parts), eye, np.zeros((d, d)))
        for r in range(len(model.obs)):
            picked = [p for p, m in zip(parts, model.masks[r]) if m]
            slope = model.slope_ops[r]
            cons += equal(sum(p[0] for p in picked), sum(p[1] for p in picked),
                          0.5 * eye + self.lam * slope.real, self.lam * slope.imag)
        self.problem = cp.Problem(objective, self.psd + cons + extra)

    def run(self, tol, scale=1e-2):
        try:
            with warnings.catch_warnings():
                # inaccurate solves are judged by our own verification
                warnings.simplefilter("ignore", UserWarning)
                self.problem.solve(solver=cp.CLARABEL, **_solver_opts(tol, scale))
        except cp.error.SolverError as exc:
            log.warning("solver error: %s", exc)
            return "solver_error"
        return self.problem.status

    def effects(self):
        d = self.model.block_dim
        out = np.array([_compress(z.value, d) for z in self.zs])
        if self.margin is not None:
            out = out + float(self.margin.value) * np.eye(d)
        return out

    def gap(self):
        total = sum(float(np.sum(z.value * c.dual_value)) for z, c in zip(self.zs, self.psd))
        if self.margin is None:
            total += float(self.cap.dual_value) * (1 - float(self.lam.value))
        return abs(total)

    def iterations(self):
        return int(self.problem.solver_stats.num_iters or 0)


def _constraint_system(model):
    """Matrix A and affine map lam -> b(lam) with A vec(C) = b for the
    linear constraints on the coefficient array C (blocks x words)."""
    nb, nw = model.n_blocks, len(model.words)
    eye = np.eye(nw)
    rows = [np.kron(np.ones((1, nb)), eye)]
    const = [model.identity_coeffs]
    slope = [np.zeros(nw)]
    for r in range(len(model.obs)):
        rows.append(np.kron(model.masks[r][None, :].astype(float), eye))
        const.append(0.5 * model.identity_coeffs)
        slope.append(model.slopes[r])
    return np.vstack(rows), np.concatenate(const), np.concatenate(slope)


def _polish(model, effects, lam):
    """Turn a slightly infeasible solver point into an exact certificate.

    The Pauli coefficients are moved by the least-norm step onto the
    constraint plane, then mixed with the trivial point I / 2**N (feasible
    at lambda = 0) just enough to clear negative eigenvalues. Mixing scales
    lambda by the same factor, so the returned pair is feasible.
    """
    k = model.config.copies
    d = 2**k
    basis = pauli_basis(k)
    coeffs = np.einsum("aij,wji->aw", effects, basis).real / d
    a_mat, const, slope = _constraint_system(model)
    resid = const + lam * slope - a_mat @ coeffs.ravel()
    coeffs = coeffs + np.linalg.lstsq(a_mat, resid, rcond=None)[0].reshape(coeffs.shape)
    fixed = np.einsum("aw,wij->aij", coeffs, basis)
    fixed = 0.5 * (fixed + fixed.conj().transpose(0, 2, 1))
    neg = max(0.0, -min(np.linalg.eigvalsh(e)[0] for e in fixed))
    if neg > 0:
        share = neg / (neg + 1.0 / model.n_blocks)
        fixed = (1 - share) * fixed + share * np.eye(d) / model.n_blocks
        lam = (1 - share) * lam
    return fixed, lam


def _report(model, effects, lam, tol, t0, iters, gap, method, solver_status):
    """Verify a polished point and package it."""
    boundary = abs(1 - lam) <= BOUNDARY_TOL
    lam = 1.0 if boundary else min(max(float(lam), 0.0), 1.0)
    povm = Povm(effects, len(model.obs), model.config.copies, "sdp")
    rep = verify_povm(povm, model.config, model.obs, lam, tol=10 * tol)
    status = "optimal" if rep.passed else "numerical-failure"
    msg = "" if rep.passed else f"extracted POVM residual {rep.max_residual:.3g} exceeds {10 * tol:.3g}"
    return SolveReport(status, lam, povm, rep.max_residual, gap, iters,
                       time.perf_counter() - t0, boundary, method, solver_status, msg)


def _failed(model, status, iters, t0, method="direct"):
    d = model.block_dim
    empty = Povm(np.zeros((model.n_blocks, d, d)), len(model.obs), model.config.copies)
    kind = "infeasible" if status.startswith("infeasible") else "numerical-failure"
    return SolveReport(kind, float("nan"), empty, float("inf"), float("inf"), iters,
                       time.perf_counter() - t0, method=method, solver_status=status,
                       message=f"solver returned {status}")


def solve(model, tol=None, method="direct"):
    """Solve the threshold program; ``method`` is 'direct' or 'bisection'.

    Every candidate point is polished into an exact certificate, so the
    reported lambda is feasible by construction. An inaccurate solve is
    retried with looser inner tolerances and the best certificate kept.
    """
    tol = default_tol() if tol is None else tol
    if method == "bisection":
        return _solve_bisection(model, tol)
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    t0 = time.perf_counter()
    prog = _Program(model, fixed_lambda=False)
    best, iters, status, gap = None, 0, "", float("nan")
    for scale in (1e-2, 1e-1, 1.0):
        status = prog.run(tol, scale)
        iters += prog.iterations()
        if status not in ("optimal", "optimal_inaccurate"):
            continue
        raw = min(max(float(prog.lam.value), 0.0), 1.0)
        effects, lam = _polish(model, prog.effects(), raw)
        if best is None or lam > best[1]:
            best, gap = (effects, lam, raw), prog.gap()
        if status == "optimal" or raw - lam <= 0.5 * tol or raw > 1 - CERTIFY_WINDOW:
            break
    if best is None:
        return _failed(model, status, iters, t0)
    effects, lam, raw = best
    if raw - lam > 0.5 * tol and raw < 1 - CERTIFY_WINDOW:
        # the solver stalled slightly outside the cone; bisect the narrow
        # bracket with the margin program, whose points are strictly feasible
        effects, lam, more = _refine(model, effects, lam, min(raw + tol, 1.0), tol)
        iters += more
    if raw > 1 - CERTIFY_WINDOW and 1 - lam > BOUNDARY_TOL:
        # the optimum sits at the cap but polishing moved off it: certify
        # lambda = 1 directly with the fixed-lambda program
        fixed = _Program(model, fixed_lambda=True)
        fixed.lam.value = 1.0
        if fixed.run(tol) in ("optimal", "optimal_inaccurate"):
            cand, cl = _polish(model, fixed.effects(), 1.0)
            if cl > lam:
                effects, lam = cand, cl
        iters += fixed.iterations()
    return _report(model, effects, lam, tol, t0, iters, gap, "direct", status)


def _refine(model, effects, lo, hi, tol):
    prog = _Program(model, fixed_lambda=True)
    iters = 0
    while hi - lo > 0.25 * tol:
        mid = 0.5 * (lo + hi)
        prog.lam.value = mid
        status = prog.run(tol)
        iters += prog.iterations()
        if status in ("optimal", "optimal_inaccurate") and prog.margin.value >= 0:
            cand, cl = _polish(model, prog.effects(), mid)
            if cl > lo:
                effects, lo = cand, cl
            else:
                break
        else:
            hi = mid
    return effects, lo, iters


def _solve_bisection(model, tol):
    """Bisection on lambda over [0, 1]; lambda is feasible iff the largest
    t with every Pi_a - t I PSD is non-negative."""
    t0 = time.perf_counter()
    prog = _Program(model, fixed_lambda=True)
    iters = 0

    def margin(lam):
        nonlocal iters
        prog.lam.value = lam
        status = prog.run(tol)
        iters += prog.iterations()
        if status not in ("optimal", "optimal_inaccurate"):
            return None
        return float(prog.margin.value)

    m0 = margin(0.0)
    if m0 is None or m0 < -tol:
        d = model.block_dim
        empty = Povm(np.zeros((model.n_blocks, d, d)), len(model.obs), model.config.copies)
        return SolveReport("infeasible", float("nan"), empty, float("inf"), float("inf"), iters,
                           time.perf_counter() - t0, method="bisection",
                           message="no feasible point at lambda = 0")
    best = (0.0, prog.effects())
    m1 = margin(1.0)
    if m1 is not None and m1 >= -tol:
        best = (1.0, prog.effects())
    else:
        lo, hi = 0.0, 1.0
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            m = margin(mid)
            if m is not None and m >= 0:
                lo, best = mid, (mid, prog.effects())
            else:
                hi = mid
    effects, lam = _polish(model, best[1], best[0])
    return _report(model, effects, lam, tol, t0, iters, float("nan"), "bisection", "bisection")


def threshold(obs, config, tol=None, method="direct"):
    """Optimal sharpness lambda* in [0, 1] for ``obs`` on ``config``."""
    rep = solve(assemble_threshold_sdp(obs, config), tol, method)
    if rep.status != "optimal":
        raise SolverError(rep)
    return rep.lambda_star


def index_of_incompatibility(obs, k_max, tol=None):
    """Smallest k <= k_max with lambda^[k] = 1, or k_max + 1 if none."""
    tol = default_tol() if tol is None else tol
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    for k in range(1, k_max + 1):
        if threshold(obs, Configuration.parallel(k), tol) >= 1 - 10 * tol:
            return k
    return k_max + 1


@dataclass
class SweepRow:
    theta: float
    lambda_parallel2: float
    lambda_antiparallel11: float
    status2: str
    status11: str


def _sweep_point(args):
    theta, tol = args
    obs = theta_family(theta)
    out = []
    for config in (Configuration.parallel(2), Configuration.antiparallel()):
        try:
            rep = solve(assemble_threshold_sdp(obs, config), tol)
            out.append((rep.lambda_star, rep.status))
        except Exception as exc:  # failed points are flagged, not fatal
            log.warning("sweep point theta=%r failed: %s", theta, exc)
            out.append((float("nan"), "error"))
    return SweepRow(theta, out[0][0], out[1][0], out[0][1], out[1][1])


def default_grid(n=199):
    return [j * math.pi / (n + 1) for j in range(1, n + 1)]


def sweep_theta(grid=None, tol=None, workers=1):
    """Two-copy thresholds of the symmetric triple family over ``grid``.

    Rows come back in grid order whatever the worker count.
    """
    grid = default_grid() if grid is None else list(grid)
    tol = default_tol() if tol is None else tol
    if any(not 0 < t < math.pi for t in grid):
        raise ValueError("grid must lie inside (0, pi)")
    jobs = [(t, tol) for t in grid]
    if workers <= 1 or len(jobs) <= 1:
        return [_sweep_point(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_point, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def sweep_csv(rows):
    lines = ["theta,lambda_parallel2,lambda_antiparallel11,status2,status11"]
    for r in rows:
        lines.append(f"{r.theta:.12g},{r.lambda_parallel2:.12g},"
                     f"{r.lambda_antiparallel11:.12g},{r.status2},{r.status11}")
    return "\n".join(lines) + "\n"


def _sign(x, eps):
    return 0 if abs(x) <= eps else (1 if x > 0 else -1)


def _runs(thetas, flags, split):
    """Maximal runs of flagged grid points; no run crosses ``split``."""
    out, run = [], []
    for t, f in zip(thetas, flags):
        if run and (run[0] < split) != (t < split):
            out.append([run[0], run[-1]])
            run = []
        if f:
            run.append(t)
        elif run:
            out.append([run[0], run[-1]])
            run = []
    if run:
        out.append([run[0], run[-1]])
    return out


def reversal_regions(rows, theta_ref=MUB_THETA, tol=None, eps=1e-6):
    """Grid intervals where the two-copy orderings against ``theta_ref`` disagree.

    A point is flagged when sign(d2) != sign(d11), with d the change of each
    threshold from its value at ``theta_ref`` and sign() zero within ``eps``.
    ``strict_regions`` keeps only points where the two move in opposite
    directions (no ties). Runs are split at ``theta_ref`` so every interval
    lies on one side of it. Rows with a failed solve are skipped.
    """
    ref = _sweep_point((theta_ref, default_tol() if tol is None else tol))
    thetas, loose, strict = [], [], []
    for r in rows:
        if r.status2 != "optimal" or r.status11 != "optimal":
            continue
        s2 = _sign(r.lambda_parallel2 - ref.lambda_parallel2, eps)
        s11 = _sign(r.lambda_antiparallel11 - ref.lambda_antiparallel11, eps)
        thetas.append(r.theta)
        loose.append(s2 != s11)
        strict.append(s2 * s11 < 0)
    regions = _runs(thetas, loose, theta_ref)
    strict_regions = _runs(thetas, strict, theta_ref)
    return {
        "theta_ref": theta_ref,
        "lambda_parallel2_ref": ref.lambda_parallel2,
        "lambda_antiparallel11_ref": ref.lambda_antiparallel11,
        "eps": eps,
        "regions": regions,
        "below_ref": [iv for iv in regions if iv[1] < theta_ref],
        "above_ref": [iv for iv in regions if iv[0] > theta_ref],
        "strict_regions": strict_regions,
    }


@dataclass
class ScanRecord:
    label_a: str
    label_b: str
    k: int
    single_a: float
    single_b: float
    multi_a: float
    multi_b: float
    reversal: bool


def conjecture_scan(pairs, k_max, tol=None, eps=1e-6):
    """Look for pairs where single-copy order lambda_O >= lambda_O' is not
    kept on k identical copies. Records every scanned (pair, k)."""
    tol = default_tol() if tol is None else tol
    records = []
    for a, b in pairs:
        if len(a) > len(b):
            raise ValueError(f"pair ({a.label}, {b.label}) needs |O| <= |O'|")
        s_a = threshold(a, Configuration.single(), tol)
        s_b = threshold(b, Configuration.single(), tol)
        for k in range(1, k_max + 1):
            config = Configuration.parallel(k)
            m_a, m_b = threshold(a, config, tol), threshold(b, config, tol)
            flip = (s_a >= s_b - eps and m_a < m_b - eps) or (s_b >= s_a - eps and len(a) == len(b) and m_b < m_a - eps)
            records.append(ScanRecord(a.label, b.label, k, s_a, s_b, m_a, m_b, flip))
    return records


def is_boundary(lam):
    return abs(1 - lam) <= BOUNDARY_TOL


__all__ = [
    "SdpModel", "SolveReport", "SolverError", "assemble_threshold_sdp", "solve", "threshold",
    "hermitian_real_embedding", "index_of_incompatibility", "sweep_theta", "sweep_csv",
    "reversal_regions", "conjecture_scan", "default_grid", "default_tol", "MUB_THETA", "T_HAT",
]
