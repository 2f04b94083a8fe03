#!/usr/bin/env python3
"""
Spectral gap of the normalized Laplacian L = I - D^{-1/2} A D^{-1/2}.

lambda_1 = 1 - mu_2 where mu_2 is the second largest eigenvalue of
B = D^{-1/2} A D^{-1/2}. The top eigenvector of B is known in closed form
(D^{1/2} 1, normalized), so the solvers work on (B + I)/2 restricted to its
orthogonal complement: plain power iteration first, then a 16-vector LOBPCG
block, then ARPACK Lanczos. Every answer is certified by its residual.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from errors import ConvergenceError, DomainError, GuardExceededError, HRGError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 20_000
POWER_BUDGET = 2_000
CHECK_EVERY = 10
BLOCK_SIZE = 16
DENSE_CAP = 512
SPECTRUM_SLACK = 1e-10
NULL_NORM = 1e-12
DRIFT_TOL = 1e-10
RESTARTS = 2


@dataclass(frozen=True, eq=False)
class SpectralResult:
    lambda1: float
    residual: float
    iterations: int
    method: str
    vector: Optional[np.ndarray] = None

    def as_row(self):
        return {"value": self.lambda1, "method": self.method,
                "detail": f"residual={self.residual:.3g};iterations={self.iterations}"}


def _inv_sqrt_degree(h):
    d = np.asarray(h.degree, dtype=float)
    if d.shape[0] >= 1 and d.min() <= 0:
        raise DomainError("normalized operator needs positive degrees")
    return 1.0 / np.sqrt(d)


def top_eigenvector(h):
    """D^{1/2} 1 / ||D^{1/2} 1||, the eigenvector of B for eigenvalue 1"""
    phi = np.sqrt(np.asarray(h.degree, dtype=float))
    return phi / np.linalg.norm(phi)


def normalized_operator_apply(h, x):
    """(D^{-1/2} A D^{-1/2}) x as two diagonal scalings around a sparse product"""
    x = np.asarray(x, dtype=float)
    if x.shape[0] != h.k:
        raise DomainError(f"vector of length {x.shape[0]} for a component of size {h.k}")
    s = _inv_sqrt_degree(h)
    if x.ndim == 2:
        return s[:, None] * (h.adjacency @ (s[:, None] * x))
    return s * (h.adjacency @ (s * x))


def normalized_adjacency(h):
    s = sp.diags(_inv_sqrt_degree(h))
    return (s @ h.adjacency.astype(float) @ s).tocsr()


def _residual(h, x, mu):
    return float(np.linalg.norm(normalized_operator_apply(h, x) - mu * x))


def _deflate(x, phi):
    x = x - np.outer(phi, phi @ x) if x.ndim == 2 else x - (phi @ x) * phi
    return x


def _orthogonal(x, phi):
    return abs(float(phi @ x)) <= DRIFT_TOL


def _check_input(h):
    if h.k < 2:
        raise DomainError("spectral gap needs a component with at least two vertices")
    h.require_connected()


def _power_iteration(h, phi, tol, budget, rng):
    x = _deflate(rng.standard_normal(h.k), phi)
    x /= np.linalg.norm(x)
    best = (math.inf, None, None)
    for it in range(1, budget + 1):
        y = 0.5 * (normalized_operator_apply(h, x) + x)
        # re-orthogonalize every step so the iterate cannot drift towards phi
        y = _deflate(y, phi)
        norm = np.linalg.norm(y)
        if norm <= NULL_NORM:
            # x (unit norm) lies in the eigenspace of B for -1
            return -1.0, x, _residual(h, x, -1.0), it
        x = y / norm
        if it % CHECK_EVERY == 0 or it == budget:
            mu = float(x @ normalized_operator_apply(h, x))
            res = _residual(h, x, mu)
            if res < best[0]:
                best = (res, mu, x.copy())
            if res <= tol:
                return mu, x, res, it
    res, mu, x = best
    raise ConvergenceError("power iteration did not converge", best_value=mu,
                           best_vector=x, residual=res, iterations=budget)


def _lobpcg(h, phi, tol, max_iter, rng):
    # LOBPCG refuses constraints once the block is large relative to the problem
    m = min(BLOCK_SIZE, (h.k - 1) // 5)
    if m < 1:
        return None
    op = spla.LinearOperator((h.k, h.k), matvec=lambda v: normalized_operator_apply(h, v),
                             matmat=lambda v: normalized_operator_apply(h, v), dtype=float)
    X = _deflate(rng.standard_normal((h.k, m)), phi)
    try:
        vals, vecs = spla.lobpcg(op, X, Y=phi[:, None], largest=True, tol=tol,
                                 maxiter=max_iter)
    except (la.LinAlgError, ValueError, NotImplementedError) as e:
        logger.info("LOBPCG failed: %s", e)
        return None
    top = int(np.argmax(vals))
    x = _deflate(vecs[:, top], phi)
    x /= np.linalg.norm(x)
    mu = float(x @ normalized_operator_apply(h, x))
    return mu, x, _residual(h, x, mu)


def _lanczos(h, phi, tol, max_iter):
    # phi is pushed to eigenvalue -1 so it sits below the rest of (B + I)/2
    def apply(v):
        v = np.ravel(v)
        return 0.5 * (normalized_operator_apply(h, v) + v) - 2.0 * (phi @ v) * phi

    op = spla.LinearOperator((h.k, h.k), matvec=apply, dtype=float)
    try:
        _, vecs = spla.eigsh(op, k=1, which="LA", tol=tol / 10.0, maxiter=max_iter)
    except spla.ArpackNoConvergence as e:
        if e.eigenvectors is None or e.eigenvectors.shape[1] == 0:
            return None
        vecs = e.eigenvectors
    x = _deflate(vecs[:, 0], phi)
    x /= np.linalg.norm(x)
    mu = float(x @ normalized_operator_apply(h, x))
    return mu, x, _residual(h, x, mu)


def spectral_gap(h, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, seed=0):
    """lambda_1 of a connected component with a certified residual"""
    _check_input(h)
    phi = top_eigenvector(h)
    rng = np.random.Generator(np.random.Philox(seed))
    budget = min(max_iter, POWER_BUDGET)
    for _ in range(RESTARTS):
        try:
            mu, x, res, it = _power_iteration(h, phi, tol, budget, rng)
        except ConvergenceError as e:
            logger.info("power iteration stalled at residual %.3g after %d steps, escalating to LOBPCG",
                        e.residual, e.iterations)
            best = e
            break
        if _orthogonal(x, phi):
            return _result(mu, res, it, "iterative", x)
        logger.info("power iteration drifted towards the top eigenvector (|phi.x| = %.3g), restarting",
                    abs(float(phi @ x)))
        best = ConvergenceError("power iteration drifted towards the top eigenvector",
                                best_value=mu, best_vector=x, residual=math.inf, iterations=it)

    block = _lobpcg(h, phi, tol, max_iter, rng)
    if block is not None:
        mu, x, res = block
        if res <= tol and _orthogonal(x, phi):
            return _result(mu, res, budget, "iterative-block", x)
        logger.info("LOBPCG residual %.3g above tolerance, falling back to Lanczos", res)
        if res < best.residual:
            best = ConvergenceError("LOBPCG did not converge", best_value=mu, best_vector=x,
                                    residual=res, iterations=max_iter)

    if h.k > 2:
        lanczos = _lanczos(h, phi, tol, max_iter)
        mu, x, res = lanczos if lanczos is not None else (None, None, math.inf)
        if res <= tol and _orthogonal(x, phi):
            return _result(mu, res, max_iter, "iterative-lanczos", x)
        if res < best.residual:
            best = ConvergenceError("Lanczos did not converge", best_value=mu, best_vector=x,
                                    residual=res, iterations=max_iter)
    raise ConvergenceError("spectral gap did not reach tolerance %g" % tol,
                           best_value=None if best.best_value is None else 1.0 - best.best_value,
                           best_vector=best.best_vector, residual=best.residual,
                           iterations=best.iterations)


def _result(mu, residual, iterations, method, vector):
    lam = float(np.clip(1.0 - mu, 0.0, 2.0))
    return SpectralResult(lam, residual, iterations, method, vector)


def dense_spectrum(h, cap=DENSE_CAP):
    """Full spectrum of L in ascending order (LAPACK symmetric solver)"""
    if h.k > cap:
        raise GuardExceededError("dense_spectrum", h.k, cap, "use spectral_gap")
    if h.k == 0:
        return np.empty(0)
    L = np.eye(h.k) - normalized_adjacency(h).toarray()
    vals = la.eigh(L, eigvals_only=True)
    if vals[0] < -SPECTRUM_SLACK or vals[-1] > 2.0 + SPECTRUM_SLACK:
        raise HRGError(f"normalized Laplacian spectrum outside [0, 2]: [{vals[0]}, {vals[-1]}]")
    return np.clip(np.sort(vals), 0.0, 2.0)


def dense_gap(h, cap=DENSE_CAP):
    _check_input(h)
    vals = dense_spectrum(h, cap)
    return SpectralResult(float(vals[1]), 0.0, 0, "dense")


def random_walk_matrix_gap(h, cap=DENSE_CAP, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """lambda_1 computed from P = D^{-1} A (similar to I - L)"""
    _check_input(h)
    d = np.asarray(h.degree, dtype=float)
    if h.k <= cap:
        P = (sp.diags(1.0 / d) @ h.adjacency.astype(float)).toarray()
        mus = np.sort(np.real(la.eigvals(P)))[::-1]
        return float(np.clip(1.0 - mus[1], 0.0, 2.0))
    # lazy walk, deflated in the D-inner product where P is self-adjoint
    x = np.random.Generator(np.random.Philox(0)).standard_normal(h.k)
    vol = d.sum()
    for it in range(1, max_iter + 1):
        x -= (d @ x) / vol
        x /= math.sqrt(d @ (x * x))
        y = 0.5 * (x + (h.adjacency @ x) / d)
        if it % CHECK_EVERY == 0:
            px = (h.adjacency @ x) / d
            mu = float(d @ (x * px))
            if math.sqrt(d @ ((px - mu * x) ** 2)) <= tol:
                return float(np.clip(1.0 - mu, 0.0, 2.0))
        x = y
    logger.info("random-walk power iteration stalled, using the symmetric solver")
    return spectral_gap(h, tol, max_iter).lambda1


class MixingBound(NamedTuple):
    relaxation_time: float
    mixing_time: float


def mixing_time_bound(result, h, eps=0.25):
    """Relaxation time of the lazy walk (gap lambda_1/2) and the usual
    t_mix(eps) <= (2/lambda_1) ln(1/(eps pi_min)) bound."""
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    if result.lambda1 <= 0.0:
        raise DomainError("mixing bound needs a positive spectral gap")
    relax = 2.0 / result.lambda1
    pi_min = float(np.min(h.degree)) / h.vol
    return MixingBound(relax, relax * math.log(1.0 / (eps * pi_min)))
