"""
Perron-Frobenius eigenproblem of the tilted matrix Q_theta(x, y) = K(x, y) exp(chi(y, theta)).

psi(theta) is the log of the dominant eigenvalue of Q_theta; the Cramer root theta* solves
psi(theta*) = 0. Eigenvectors are normalized so that their minimum entry is 1.
"""
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceError, CramerConditionError, PreconditionError, ReducibleMatrixError
from .log import get_logger
from .model import cgf_vector, is_irreducible

logger = get_logger(__name__)

EIG_TOL = 1e-13
MAX_ITER = 100_000
CROSSCHECK_MAX_STATES = 8
ROOT_TOL = 1e-10
SCAN_START = 0.01
SCAN_MAX = 1e3
DOMAIN_MARGIN = 1e-6


@dataclass(frozen=True, eq=False)
class SpectralSolution:
    log_eig: float
    eigvec: np.ndarray
    residual: float
    theta: float = math.nan
    iterations: int = 0

    @property
    def eig(self):
        return math.exp(self.log_eig)


def tilted_matrix(model, theta):
    chi = cgf_vector(model, theta)
    return model.kernel * np.exp(chi)[None, :]


def principal_eig(Q, log_scale=0.0):
    """
    Dominant eigenpair of a non-negative irreducible matrix by power iteration.

    Iterates on Q + shift*I (shift > 0 only when the diagonal of Q is zero, which makes periodic
    matrices primitive) until the Collatz-Wielandt bounds min/max of (Qv)_i / v_i agree to
    EIG_TOL in log scale.

    :param Q: square non-negative matrix
    :param log_scale: added to the returned log eigenvalue (Q was divided by exp(log_scale))
    :return: SpectralSolution with min(eigvec) == 1
    """
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {Q.shape}")
    if (Q < 0).any() or not np.isfinite(Q).all():
        raise ValueError("matrix must be finite and non-negative")
    if not is_irreducible(Q > 0):
        raise ReducibleMatrixError("matrix is reducible; Perron-Frobenius root is not simple")

    n = Q.shape[0]
    if n == 1:
        return SpectralSolution(
            log_eig=math.log(Q[0, 0]) + log_scale, eigvec=np.ones(1), residual=0.0, iterations=0
        )

    shift = 0.0 if (np.diag(Q) > 0).any() else 0.5 * float(Q.sum(axis=1).mean())
    A = Q + shift * np.eye(n)

    v = np.ones(n)
    gap = math.inf
    for it in range(1, MAX_ITER + 1):
        w = A @ v
        ratios = w / v
        lo, hi = float(ratios.min()), float(ratios.max())
        v = w / w.min()
        gap = math.log(hi) - math.log(lo)
        if gap < EIG_TOL:
            break
    else:
        eig = math.exp(0.5 * (math.log(lo) + math.log(hi))) - shift
        residual = float(np.abs(Q @ v - eig * v).max())
        raise ConvergenceError(
            f"power iteration did not converge in {MAX_ITER} iterations (gap {gap:.3e})", residual=residual
        )

    eig = math.exp(0.5 * (math.log(lo) + math.log(hi))) - shift
    residual = float(np.abs(Q @ v - eig * v).max())
    if residual > 1e-10 * float(v.max()) * eig:
        raise ConvergenceError(f"eigen residual {residual:.3e} above tolerance", residual=residual)

    if n <= CROSSCHECK_MAX_STATES:
        _crosscheck(Q, eig)

    return SpectralSolution(log_eig=math.log(eig) + log_scale, eigvec=v, residual=residual, iterations=it)


def _crosscheck(Q, eig):
    # characteristic polynomial root; closed form for 2x2
    if Q.shape[0] == 2:
        tr = Q[0, 0] + Q[1, 1]
        det = Q[0, 0] * Q[1, 1] - Q[0, 1] * Q[1, 0]
        ref = 0.5 * (tr + math.sqrt(max(tr * tr - 4.0 * det, 0.0)))
    else:
        roots = np.roots(np.poly(Q))
        ref = float(roots.real.max())

    if abs(ref - eig) > 1e-8 * max(abs(eig), 1e-300):
        logger.warning("power iteration eigenvalue %r disagrees with characteristic root %r", eig, ref)


def spectral_solution(model, theta):
    """principal_eig of Q_theta, computed on exp(-max chi) * Q_theta so large theta cannot overflow."""
    chi = cgf_vector(model, theta)
    top = float(chi.max())
    sol = principal_eig(model.kernel * np.exp(chi - top)[None, :], log_scale=top)
    residual = sol.residual * math.exp(top) if top < 700 else math.inf
    return replace(sol, theta=theta, residual=residual)


def psi(model, theta):
    return spectral_solution(model, theta).log_eig


def psi_derivative(model, theta, h=1e-5):
    """Central difference refined by one Richardson step."""
    def central(step):
        return (psi(model, theta + step) - psi(model, theta - step)) / (2.0 * step)

    return (4.0 * central(h / 2.0) - central(h)) / 3.0


def psi_second(model, theta, h=1e-4):
    return (psi(model, theta + h) - 2.0 * psi(model, theta) + psi(model, theta - h)) / (h * h)


def psi_second_sup(model, theta_star, grid_n=256, h=1e-4):
    """
    sup over a uniform grid on [0, theta*] of (psi'' + psi'^2) / 2.

    Endpoints are part of the grid.
    """
    if grid_n < 32:
        raise PreconditionError(f"grid too coarse: grid_n={grid_n} must be >= 32")

    best = -math.inf
    for zeta in np.linspace(0.0, theta_star, grid_n):
        zeta = float(zeta)
        p_plus, p_mid, p_minus = psi(model, zeta + h), psi(model, zeta), psi(model, zeta - h)
        first = (p_plus - p_minus) / (2.0 * h)
        second = (p_plus - 2.0 * p_mid + p_minus) / (h * h)
        best = max(best, 0.5 * (second + first * first))
    return best


@dataclass(frozen=True, eq=False)
class TiltEnvelope:
    """
    Everything the tilted samplers need about theta*.

    ``u_shift`` and ``rho`` stay empty until ``with_shift`` is called by the Lyapunov setup.
    """
    model: object
    theta_star: float
    psi_star: float
    mu: float
    u_star: np.ndarray
    tilted_kernel: np.ndarray
    u_shift: np.ndarray | None = None
    rho: float | None = None

    def psi2_at(self, zeta):
        return psi_second(self.model, zeta)

    def with_shift(self, rho):
        sol = spectral_solution(self.model, self.theta_star - rho)
        return replace(self, u_shift=sol.eigvec, rho=rho)


def find_theta_star(model):
    """
    Bracket psi = 0 by a geometric scan theta = 0.01 * 2^k, then solve with brentq.

    :raises CramerConditionError: psi has no sign change inside the CGF domain
    """
    _, hi_dom = model.cgf_domain()
    edge = hi_dom - DOMAIN_MARGIN

    prev = None
    theta = SCAN_START
    while True:
        last = theta >= edge or theta > SCAN_MAX
        theta = min(theta, edge)
        value = psi(model, theta)
        if value > 0:
            if prev is None:
                raise CramerConditionError(
                    f"Cramér condition not satisfied: psi({theta:g}) = {value:g} > 0, drift is not negative"
                )
            break
        prev = theta
        if last:
            raise CramerConditionError(
                f"Cramér condition not satisfied: psi stays negative up to theta={theta:g}"
            )
        theta *= 2.0

    theta_star = brentq(lambda t: psi(model, t), prev, theta, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=500)
    sol = spectral_solution(model, theta_star)
    if abs(sol.log_eig) > ROOT_TOL:
        raise ConvergenceError(f"|psi(theta*)| = {abs(sol.log_eig):.3e} above {ROOT_TOL}", residual=sol.residual)

    mu = psi_derivative(model, theta_star)
    if not mu > 0:
        raise CramerConditionError(f"psi'(theta*) = {mu:g} must be positive")

    u = sol.eigvec
    chi = cgf_vector(model, theta_star)
    kernel = model.kernel * np.exp(chi - sol.log_eig)[None, :] * u[None, :] / u[:, None]
    kernel = kernel / kernel.sum(axis=1, keepdims=True)
    kernel.setflags(write=False)
    u.setflags(write=False)

    logger.info("theta* = %.12g, mu = psi'(theta*) = %.6g", theta_star, mu)
    return TiltEnvelope(
        model=model,
        theta_star=float(theta_star),
        psi_star=sol.log_eig,
        mu=float(mu),
        u_star=u,
        tilted_kernel=kernel,
    )
