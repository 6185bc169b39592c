"""Stationary states: disease-free, endemic, and nonlocal logistic.

The disease-free profile solves a linear balance and is computed twice
(direct solve and Picard contraction) as a built-in consistency check.

The endemic state and the logistic stationary state are produced by the
classical two-sided monotone scheme: iterate ``u <- u + F(u)/rho`` with a
relaxation constant ``rho`` large enough that the map is order-preserving
on the bracket, once upward from a small multiple of the principal
eigenvector (a subsolution) and once downward from an explicit
supersolution.  Both limits must agree, which is exactly the uniqueness
statement for these problems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .domain import ModelParams
from .errors import (
    BracketBreach,
    NoEndemicState,
    NoPositiveState,
    SolverFailure,
    SolverInconsistency,
    UniquenessViolation,
)
from .operators import DispersalMatrix
from .spectral import dispersal_principal_eigenpair, infection_growth_rate

__all__ = [
    "EquilibriumResult",
    "EndemicPair",
    "solve_disease_free",
    "solve_endemic",
    "solve_logistic_stationary",
    "write_field_csv",
]

AGREEMENT_TOL = 1e-8
RESIDUAL_TARGET = 1e-11
STALL_STEP = 1e-14
ITERATION_CAP = 100_000
GROWTH_ZERO = 1e-10


def _field_values(f) -> np.ndarray:
    return np.asarray(getattr(f, "values", f), dtype=float)


def _fresh_residual(K: DispersalMatrix, d: float, u: np.ndarray,
                    reaction: np.ndarray) -> float:
    """Sup-norm of ``d (K u - u) + reaction`` via explicit compensated
    summation: an independent code path from the solver's matvecs."""
    entries = K.entries
    worst = 0.0
    for i in range(u.size):
        gain = math.fsum(entries[i, j] * u[j] for j in range(u.size))
        worst = max(worst, abs(d * (gain - u[i]) + reaction[i]))
    return worst


@dataclass(frozen=True)
class EquilibriumResult:
    """A stationary node field with its bracket and solve diagnostics."""

    field: np.ndarray
    residual: float
    iterations: int
    bracket_low: np.ndarray
    bracket_high: np.ndarray
    converged_from: str
    clamp_events: int = 0
    monotone_defect: float = 0.0

    def to_dict(self) -> dict:
        return {
            "converged_from": self.converged_from,
            "field": [float(v) for v in self.field],
            "iterations": int(self.iterations),
            "residual": float(self.residual),
        }


@dataclass(frozen=True)
class EndemicPair:
    """Positive endemic steady state alongside the disease-free profile."""

    susceptible: np.ndarray
    infected: np.ndarray
    disease_free: np.ndarray
    residual: float
    iterations: int
    bracket_gap: float
    clamp_events: int = 0
    monotone_defect: float = 0.0

    def to_dict(self) -> dict:
        return {
            "bracket_gap": float(self.bracket_gap),
            "infected": [float(v) for v in self.infected],
            "iterations": int(self.iterations),
            "residual": float(self.residual),
            "susceptible": [float(v) for v in self.susceptible],
        }


def solve_disease_free(K: DispersalMatrix, d_S: float, lam) -> EquilibriumResult:
    """Stationary susceptible profile with recruitment and no infection.

    Solves the linear balance (dispersal gain + recruitment = full-mass
    loss) by a direct solve of ``(Id - K) u = lam / d_S`` and independently
    by Picard iteration on the fixed point ``u = K u + lam / d_S`` (a
    contraction because the dispersal matrix loses mass through the
    boundary).  The two routes must agree to 1e-8.
    """
    lam_v = _field_values(lam)
    n = K.n
    rhs = lam_v / d_S
    direct = np.linalg.solve(np.eye(n) - K.entries, rhs)

    lam1 = dispersal_principal_eigenpair(K)
    # contraction factor of the Picard map is the spectral radius of K;
    # the fixed-point error is bounded by the step times this amplification
    amplify = (1.0 - lam1.value) / lam1.value
    u = np.zeros(n)
    iterations = 0
    for iterations in range(1, 5 * ITERATION_CAP + 1):
        nxt = K.entries @ u + rhs
        step = float(np.max(np.abs(nxt - u)))
        u = nxt
        if amplify * step <= 1e-9:
            break
    else:
        raise SolverFailure("Picard iteration for the disease-free state stalled",
                            iterations=iterations)

    gap = float(np.max(np.abs(direct - u)))
    if gap > AGREEMENT_TOL:
        raise SolverInconsistency(
            f"direct and Picard disease-free solutions disagree by {gap:.3e}")

    phi = lam1.vector  # positive, sup-norm 1
    eps = 0.5 * float(np.min(lam_v)) / (lam1.value * d_S)
    big = 1.0 + float(np.max(lam_v)) / (lam1.value * d_S * float(np.min(phi)))
    residual = _fresh_residual(K, d_S, direct, lam_v)
    return EquilibriumResult(field=direct, residual=residual,
                             iterations=iterations,
                             bracket_low=eps * phi, bracket_high=big * phi,
                             converged_from="both")


def _monotone_bisolve(F: Callable[[np.ndarray], np.ndarray], sub: np.ndarray,
                      sup: np.ndarray, rho: float) -> tuple:
    """Run the relaxed fixed-point map upward from ``sub`` and downward
    from ``sup``; returns both limits with diagnostics.

    Iterates are clamped to the bracket (a no-op in exact arithmetic) and
    clamp events are counted.  ``monotone_defect`` records the largest
    movement against the expected direction, which should be at roundoff
    level for a valid relaxation constant.
    """
    clamp_events = 0
    monotone_defect = 0.0
    limits: list[np.ndarray] = []
    total_iters = 0
    for start, direction in ((sub, +1.0), (sup, -1.0)):
        u = start.astype(float).copy()
        iterations = 0
        residual = float(np.max(np.abs(F(u))))
        while residual > RESIDUAL_TARGET:
            if iterations >= ITERATION_CAP:
                raise SolverFailure(
                    "monotone iteration hit the iteration cap",
                    residual=residual, iterations=iterations)
            nxt = u + F(u) / rho
            moved = nxt - u
            monotone_defect = max(monotone_defect,
                                  float(np.max(-direction * moved, initial=0.0)))
            clipped = np.clip(nxt, sub if direction > 0 else None, sup)
            clipped = np.maximum(clipped, 0.0)
            clamp_events += int(np.sum(clipped != nxt))
            step = float(np.max(np.abs(clipped - u)))
            u = clipped
            iterations += 1
            residual = float(np.max(np.abs(F(u))))
            if step < STALL_STEP and residual > RESIDUAL_TARGET:
                raise SolverFailure(
                    "monotone iteration stalled before reaching the residual target",
                    residual=residual, iterations=iterations)
        limits.append(u)
        total_iters += iterations
    if np.any(limits[0] > limits[1] + 1e-12):
        raise UniquenessViolation(
            "upward limit crossed above the downward limit")
    return limits[0], limits[1], total_iters, clamp_events, monotone_defect


def _subsolution_scale(F: Callable[[np.ndarray], np.ndarray], psi: np.ndarray,
                       cap: float) -> float:
    """Halve a starting amplitude until ``F(eps * psi) >= 0`` at every node."""
    eps = cap
    for _ in range(200):
        if np.all(F(eps * psi) >= 0.0):
            return eps
        eps *= 0.5
    raise SolverFailure("no valid subsolution amplitude found by halving")


def solve_endemic(K: DispersalMatrix, params: ModelParams, beta, gamma,
                  dfe: np.ndarray) -> EndemicPair:
    """Positive endemic steady state when the infection growth rate is
    positive.

    The infected profile solves the reduced scalar problem obtained after
    eliminating the susceptible compartment through the conserved
    combination ``d_S S + d_I I = d_S S_dfe``.  The bracket is
    ``[eps * psi, (d_S/d_I) * S_dfe]`` with ``psi`` the principal
    eigenvector of the linearized infection operator, and the susceptible
    profile is recovered from the conservation identity afterwards.
    """
    beta_v, gamma_v = _field_values(beta), _field_values(gamma)
    dfe = np.asarray(dfe, dtype=float)
    d_s, d_i = params.d_S, params.d_I
    m = beta_v - gamma_v

    growth = infection_growth_rate(K, d_i, m)
    if growth.value <= GROWTH_ZERO:
        raise NoEndemicState(
            f"infection growth rate {growth.value:.3e} is not positive; "
            "no endemic state exists")

    high = (d_s / d_i) * dfe
    denom_floor = d_s * dfe * min(1.0, d_s / d_i)

    def F(I: np.ndarray) -> np.ndarray:
        denom = d_s * dfe + (d_s - d_i) * I
        if np.any(denom <= 0.0):
            raise BracketBreach("denominator of the infection pressure became "
                                "nonpositive inside the bracket")
        reaction = (m - d_s * beta_v * I / denom) * I
        return d_i * (K.entries @ I - I) + reaction

    # Relaxation constant: d_I plus a bound for the reaction slope on the
    # bracket, derived from the quotient-rule derivative of the pressure.
    slope = np.abs(m) + d_s * beta_v * high * (
        2.0 * d_s * dfe + abs(d_s - d_i) * high) / denom_floor**2
    rho = 1.1 * (d_i + float(np.max(slope)))

    eps = _subsolution_scale(F, growth.vector, 0.1 * float(np.min(high)))
    sub = eps * growth.vector
    up, down, iterations, clamps, defect = _monotone_bisolve(F, sub, high, rho)

    gap = float(np.max(np.abs(down - up)))
    if gap > AGREEMENT_TOL:
        raise UniquenessViolation(
            f"monotone limits from below and above disagree by {gap:.3e}")

    infected = 0.5 * (up + down)
    susceptible = (d_s * dfe - d_i * infected) / d_s
    denom = d_s * dfe + (d_s - d_i) * infected
    reaction = (m - d_s * beta_v * infected / denom) * infected
    residual = _fresh_residual(K, d_i, infected, reaction)
    return EndemicPair(susceptible=susceptible, infected=infected,
                       disease_free=dfe, residual=residual,
                       iterations=iterations, bracket_gap=gap,
                       clamp_events=clamps, monotone_defect=defect)


def solve_logistic_stationary(K: DispersalMatrix, d: float, b, a) -> EquilibriumResult:
    """Positive stationary state of the nonlocal logistic problem
    ``d (K u - u) + b u - a u^2 = 0``.

    Exists exactly when the principal eigenvalue of ``d (K - Id) + diag(b)``
    is positive; solved by the same two-sided monotone scheme with the
    constant supersolution ``max(b) / min(a)``.
    """
    b_v, a_v = _field_values(b), _field_values(a)
    if np.any(a_v <= 0):
        raise NoPositiveState("quadratic damping must be strictly positive")

    growth = infection_growth_rate(K, d, b_v)
    if growth.value <= GROWTH_ZERO:
        raise NoPositiveState(
            f"principal eigenvalue {growth.value:.3e} is not positive; "
            "only the trivial state exists")

    high_const = float(np.max(b_v)) / float(np.min(a_v))
    high = np.full(K.n, high_const)

    def F(u: np.ndarray) -> np.ndarray:
        return d * (K.entries @ u - u) + b_v * u - a_v * u * u

    slope = np.maximum(np.abs(b_v), np.abs(2.0 * a_v * high_const - b_v))
    rho = 1.1 * (d + float(np.max(slope)))

    cap = min(0.1 * high_const, growth.value / (2.0 * float(np.max(a_v))))
    eps = _subsolution_scale(F, growth.vector, cap)
    sub = eps * growth.vector
    up, down, iterations, clamps, defect = _monotone_bisolve(F, sub, high, rho)

    gap = float(np.max(np.abs(down - up)))
    if gap > AGREEMENT_TOL:
        raise UniquenessViolation(
            f"monotone limits from below and above disagree by {gap:.3e}")

    u = 0.5 * (up + down)
    residual = _fresh_residual(K, d, u, b_v * u - a_v * u * u)
    return EquilibriumResult(field=u, residual=residual, iterations=iterations,
                             bracket_low=sub, bracket_high=high,
                             converged_from="both", clamp_events=clamps,
                             monotone_defect=defect)


def write_field_csv(nodes: np.ndarray, values: np.ndarray, path) -> None:
    """Export a node field as CSV columns (x_i, value)."""
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("x,value\n")
        for x, v in zip(nodes, values):
            f.write(f"{float(x)!r},{float(v)!r}\n")
