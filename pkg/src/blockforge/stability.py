"""Static stability of block assemblies via rigid-block equilibrium.

Each face contact is discretized to its two endpoints. Every contact point
carries a compression-only normal force and a friction-bounded tangential
force; an assembly is stable when forces exist that balance gravity and
torque on every block. Feasibility is decided by minimizing the total
equality-constraint slack with a linear program, which also yields a
quantitative residual for diagnostics.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .geometry import (
    DEFAULT_SPACE,
    FLOOR,
    ConstructionSpace,
    contact_segments,
    polygon_area,
    world_polygon,
)

log = logging.getLogger(__name__)

# Weight-normalized slack above which an assembly is declared unstable.
STABILITY_TOL = 1e-7
DEFAULT_MU = 0.6
DEFAULT_GRAVITY = 9.81
DENSITY = 1.0


class SolverFailure(RuntimeError):
    """The LP solver did not return a usable optimum."""


@dataclass(frozen=True)
class ContactPoint:
    position: tuple
    normal: tuple  # unit, points from body_a into body_b
    tangent: tuple  # normal rotated +90 degrees
    body_a: int  # FLOOR allowed
    body_b: int


@dataclass(frozen=True)
class EquilibriumModel:
    bodies: tuple  # (mass, (cx, cz)) per block
    points: tuple  # ContactPoint
    mu: float
    g: float


@dataclass(frozen=True)
class StabilityVerdict:
    stable: bool
    residual: float


def build_equilibrium_model(assembly, contacts, mu: float = DEFAULT_MU,
                            g: float = DEFAULT_GRAVITY) -> EquilibriumModel:
    """Assemble bodies and per-endpoint contact forces for the equilibrium LP."""
    placements = getattr(assembly, "placements", assembly)
    bodies = []
    for p in placements:
        area = polygon_area(world_polygon(p))
        bodies.append((DENSITY * area, (p.pose.x, p.pose.z)))
    points = []
    for seg in contacts:
        n = seg.normal
        t = (-n[1], n[0])
        for pos in seg.endpoints:
            points.append(ContactPoint(tuple(pos), tuple(n), t, seg.block_a, seg.block_b))
    return EquilibriumModel(tuple(bodies), tuple(points), float(mu), float(g))


def solve_feasibility(model: EquilibriumModel, tol: float = STABILITY_TOL) -> StabilityVerdict:
    """Minimum total equilibrium violation; stable iff it is ~zero.

    Variables are per-contact-point normal (>= 0) and tangential forces plus
    signed slack on every equilibrium row. The optimum divided by the total
    weight is the residual.
    """
    nb = len(model.bodies)
    if nb == 0:
        return StabilityVerdict(True, 0.0)
    nc = len(model.points)
    n_rows = 3 * nb
    n_vars = 2 * nc + 2 * n_rows  # fn, ft, slack+, slack-

    a_eq = np.zeros((n_rows, n_vars))
    b_eq = np.zeros(n_rows)
    for i, (mass, _c) in enumerate(model.bodies):
        b_eq[3 * i + 1] = mass * model.g

    for k, cp in enumerate(model.points):
        nx, nz = cp.normal
        tx, tz = cp.tangent
        px, pz = cp.position
        for body, sign in ((cp.body_b, 1.0), (cp.body_a, -1.0)):
            if body == FLOOR:
                continue
            cx, cz = model.bodies[body][1]
            rx, rz = px - cx, pz - cz
            a_eq[3 * body + 0, k] += sign * nx
            a_eq[3 * body + 0, nc + k] += sign * tx
            a_eq[3 * body + 1, k] += sign * nz
            a_eq[3 * body + 1, nc + k] += sign * tz
            a_eq[3 * body + 2, k] += sign * (rx * nz - rz * nx)
            a_eq[3 * body + 2, nc + k] += sign * (rx * tz - rz * tx)

    for r in range(n_rows):
        a_eq[r, 2 * nc + r] = 1.0
        a_eq[r, 2 * nc + n_rows + r] = -1.0

    # friction cone: |ft| <= mu * fn
    a_ub = np.zeros((2 * nc, n_vars))
    for k in range(nc):
        a_ub[2 * k, nc + k] = 1.0
        a_ub[2 * k, k] = -model.mu
        a_ub[2 * k + 1, nc + k] = -1.0
        a_ub[2 * k + 1, k] = -model.mu
    b_ub = np.zeros(2 * nc)

    cost = np.zeros(n_vars)
    cost[2 * nc:] = 1.0
    bounds = [(0.0, None)] * nc + [(None, None)] * nc + [(0.0, None)] * (2 * n_rows)

    res = linprog(cost, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                  bounds=bounds, method="highs")
    if not res.success:
        raise SolverFailure(f"equilibrium LP failed: status={res.status} {res.message}")

    total_weight = sum(m for m, _ in model.bodies) * model.g
    residual = float(res.fun) / total_weight if total_weight > 0 else float(res.fun)
    return StabilityVerdict(residual <= tol, residual)


def _shrunk_contacts(contacts, margin: float):
    """Pull contact endpoints toward their midpoint by the margin fraction."""
    out = []
    for seg in contacts:
        (a, b) = seg.endpoints
        mid = ((a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0)
        f = 1.0 - margin
        na = (mid[0] + f * (a[0] - mid[0]), mid[1] + f * (a[1] - mid[1]))
        nb = (mid[0] + f * (b[0] - mid[0]), mid[1] + f * (b[1] - mid[1]))
        out.append(type(seg)(seg.block_a, seg.block_b, (na, nb), seg.normal))
    return out


def is_stable(assembly, space: ConstructionSpace = DEFAULT_SPACE,
              mu: float = DEFAULT_MU, g: float = DEFAULT_GRAVITY,
              margin: float = 0.0) -> bool:
    """True when the assembly admits an equilibrium force distribution.

    margin > 0 shrinks every contact segment toward its midpoint and scales
    the friction coefficient down by the same fraction, demanding a safety
    reserve near marginal stability. It is off during training.
    """
    placements = getattr(assembly, "placements", assembly)
    if len(placements) == 0:
        return True
    contacts = contact_segments(placements, space)
    if margin > 0.0:
        contacts = _shrunk_contacts(contacts, margin)
        mu = mu * (1.0 - margin)
    model = build_equilibrium_model(placements, contacts, mu=mu, g=g)
    try:
        return solve_feasibility(model).stable
    except SolverFailure as exc:
        log.warning("stability solve failed, treating as unstable: %s", exc)
        return False
