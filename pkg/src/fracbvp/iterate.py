"""Successive approximations u_0, u_1, ... for a fixed initial slope.

For a candidate slope chi1 the sequence starts from the boundary-data
interpolant

    u_0(t) = alpha1 + chi1 t + (alpha2 - alpha1 - chi1 T) (t/T)^p

and each step adds the boundary-corrected fractional integral of the
right-hand side along the previous iterate:

    u_m(t) = u_0(t) + I^p[f(., u_{m-1})](t) - (t/T)^p I^p[f(., u_{m-1})](T).

Both endpoint values are pinned to alpha1/alpha2 exactly, so every
iterate satisfies the Dirichlet data to roundoff by construction.  The
sup-differences between consecutive iterates contract at the rate of
the condition matrix Q, which run_iteration records next to the
corresponding a-priori bounds.
"""

from __future__ import annotations

import contextlib
import logging
from dataclasses import dataclass, field

import numpy as np

from .fracops import GridFunction, ProductTrapezoid, gamma, kernel_constant
from .problem import ParameterPoint, Problem

__all__ = [
    "ApproxSolution",
    "DomainEscape",
    "DomainEscapeError",
    "iterate_step",
    "quiet_domain_warnings",
    "run_iteration",
    "u0",
]

_log = logging.getLogger(__name__)

_DOMAIN_SLACK = 1e-9


@contextlib.contextmanager
def quiet_domain_warnings():
    """Silence per-run domain-excursion warnings (used by probe loops).

    Root searches and exclusion sweeps re-run the iteration dozens of
    times; without this the same excursion is reported once per probe.
    Escapes are still recorded on each ApproxSolution.
    """
    prev = _log.level
    _log.setLevel(logging.ERROR)
    try:
        yield
    finally:
        _log.setLevel(prev)


class DomainEscapeError(RuntimeError):
    """An iterate left the domain box D beyond the numerical slack."""


@dataclass(frozen=True)
class DomainEscape:
    """Record of a domain excursion under the 'warn' policy."""

    t: float
    component: int  # 1-based, matching u1..un naming
    value: float
    excess: float


def _check_domain(prob: Problem, u: GridFunction, escapes: list[DomainEscape] | None) -> None:
    v = u.values
    lo = prob.domain.lo[:, np.newaxis]
    hi = prob.domain.hi[:, np.newaxis]
    excess = np.maximum(lo - v, v - hi)
    worst = float(np.max(excess))
    if worst <= _DOMAIN_SLACK:
        return
    i, j = np.unravel_index(int(np.argmax(excess)), excess.shape)
    t_bad = float(u.grid.nodes[j])
    record = DomainEscape(t=t_bad, component=i + 1, value=float(v[i, j]), excess=worst)
    if prob.domain_policy == "strict":
        raise DomainEscapeError(
            f"iterate leaves D by {worst:.6g} at t={t_bad:.6g} (component {i + 1}); "
            "the convergence theory assumes iterates stay in D"
        )
    # One visible line for standalone calls; collected runs get a single
    # summary from run_iteration instead of a line per step.
    log = _log.warning if escapes is None else _log.debug
    log(
        "iterate leaves D by %.3g at t=%.6g (component %d); continuing (domain_policy=warn)",
        worst,
        t_bad,
        i + 1,
    )
    if escapes is not None:
        escapes.append(record)


def u0(prob: Problem, chi1) -> GridFunction:
    """Zeroth approximation: the (t/T)^p-corrected boundary interpolant."""
    chi = np.atleast_1d(np.asarray(chi1, dtype=float))
    grid = prob.grid
    t = grid.nodes
    ratio = (t / prob.T) ** prob.p
    coeff = prob.alpha2 - prob.alpha1 - chi * prob.T
    vals = (
        prob.alpha1[:, np.newaxis]
        + chi[:, np.newaxis] * t[np.newaxis, :]
        + coeff[:, np.newaxis] * ratio[np.newaxis, :]
    )
    vals[:, 0] = prob.alpha1
    vals[:, -1] = prob.alpha2
    return GridFunction(grid, vals)


def iterate_step(
    prob: Problem,
    prev: GridFunction,
    chi1,
    escapes: list[DomainEscape] | None = None,
) -> GridFunction:
    """One application of the integral operator to the previous iterate.

    Checks that ``prev`` stays inside D first (hard error beyond 1e-9
    under the 'strict' policy; logged and recorded under 'warn'), then
    evaluates f along prev and assembles the corrected integral term.
    """
    _check_domain(prob, prev, escapes)
    grid = prev.grid
    chi = np.atleast_1d(np.asarray(chi1, dtype=float))
    fvals = prob.rhs(grid.nodes, prev.values)
    quad = ProductTrapezoid(grid, prob.p)
    ip = quad.running(fvals) / gamma(prob.p)
    ratio = (grid.nodes / prob.T) ** prob.p
    coeff = prob.alpha2 - prob.alpha1 - chi * prob.T
    vals = (
        prob.alpha1[:, np.newaxis]
        + chi[:, np.newaxis] * grid.nodes[np.newaxis, :]
        + coeff[:, np.newaxis] * ratio[np.newaxis, :]
        + ip
        - ip[:, -1][:, np.newaxis] * ratio[np.newaxis, :]
    )
    vals[:, 0] = prob.alpha1
    vals[:, -1] = prob.alpha2
    return GridFunction(grid, vals)


@dataclass
class ApproxSolution:
    """The iterate trace at one parameter value, with diagnostics."""

    chi1: ParameterPoint
    iterates: list[GridFunction]
    sup_diffs: list[np.ndarray]
    bounds_used: list[np.ndarray]
    converged: bool
    m: int
    escapes: list[DomainEscape] = field(default_factory=list)

    @property
    def final(self) -> GridFunction:
        return self.iterates[-1]


def run_iteration(
    prob: Problem,
    chi1,
    m_max: int = 10,
    tol: float | np.ndarray | None = None,
) -> ApproxSolution:
    """Iterate up to m_max steps or until sup|u_m - u_{m-1}| <= tol.

    ``tol`` defaults to 1e-8 * (1 + |alpha2 - alpha1|); pass 0.0 to run
    exactly m_max steps (useful when a specific iteration depth m is
    wanted, e.g. for determining-function probes — the loop still stops
    early on a bitwise fixed point, which changes nothing downstream).
    Non-convergence at m_max is reported via ``converged=False``, not an
    exception.
    """
    if m_max < 0:
        raise ValueError(f"m_max must be >= 0, got {m_max}")
    chi = np.atleast_1d(np.asarray(chi1, dtype=float))
    if tol is None:
        tol = 1e-8 * (1.0 + float(np.max(np.abs(prob.alpha2 - prob.alpha1))))
    tol_vec = np.broadcast_to(np.asarray(tol, dtype=float), (prob.n,))

    kc = kernel_constant(prob.T, prob.p)
    have_bounds = prob.M is not None and prob.K is not None
    if have_bounds:
        Q = np.atleast_2d(prob.K) * kc
        beta = prob.M * kc

    escapes: list[DomainEscape] = []
    current = u0(prob, chi)
    iterates = [current]
    sup_diffs: list[np.ndarray] = []
    bounds_used: list[np.ndarray] = []
    converged = False
    for k in range(1, m_max + 1):
        nxt = iterate_step(prob, current, chi, escapes=escapes)
        diff = np.max(np.abs(nxt.values - current.values), axis=1)
        sup_diffs.append(diff)
        if have_bounds:
            bounds_used.append(np.linalg.matrix_power(Q, k - 1) @ beta)
        iterates.append(nxt)
        current = nxt
        if np.all(diff <= tol_vec):
            converged = True
            break
    if escapes:
        worst = max(escapes, key=lambda e: e.excess)
        _log.warning(
            "%d iterate(s) left D, worst by %.3g at t=%.6g (component %d); "
            "continuing (domain_policy=warn)",
            len(escapes),
            worst.excess,
            worst.t,
            worst.component,
        )
    point = ParameterPoint(chi, prob.omega.contains(chi))
    return ApproxSolution(
        chi1=point,
        iterates=iterates,
        sup_diffs=sup_diffs,
        bounds_used=bounds_used,
        converged=converged,
        m=len(iterates) - 1,
        escapes=escapes,
    )
