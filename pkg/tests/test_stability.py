import math

import numpy as np
import pytest

from blockforge.geometry import Placement, Pose, contact_segments, make_shape
from blockforge.stability import (
    EquilibriumModel,
    SolverFailure,
    build_equilibrium_model,
    is_stable,
    solve_feasibility,
)
from conftest import SQUARE, TRAPEZOID, square_at, trapezoid_at

TRAP_CENTROID = 0.4583333333333333  # (h/3)(b+2t)/(b+t) for 1.25/0.75/1.0


def voussoir_arch(s_par=0.25):
    """Two upright trapezoids with an inverted keystone wedged between their slants."""
    x_c = 1.0 - 0.25 * s_par
    z_k = (1.0 - TRAP_CENTROID) + s_par
    return [
        trapezoid_at(-x_c, TRAP_CENTROID),
        trapezoid_at(+x_c, TRAP_CENTROID),
        trapezoid_at(0.0, z_k, math.pi),
    ]


def tower(offsets):
    """Unit squares stacked bottom-up; offsets[k] is the absolute x of block k."""
    return [square_at(x, 0.5 + k) for k, x in enumerate(offsets)]


def tower_stable_oracle(xs):
    """Recursive rule: every suffix centroid lies over its support interval."""
    n = len(xs)
    for k in range(n):
        suffix_mean = float(np.mean(xs[k:]))
        if k == 0:
            lo, hi = xs[0] - 0.5, xs[0] + 0.5
        else:
            lo = max(xs[k - 1], xs[k]) - 0.5
            hi = min(xs[k - 1], xs[k]) + 0.5
        if not (lo <= suffix_mean <= hi):
            return False
    return True


def tower_margin(xs):
    """Distance of the closest suffix centroid to a toppling threshold."""
    n = len(xs)
    m = math.inf
    for k in range(n):
        suffix_mean = float(np.mean(xs[k:]))
        if k == 0:
            lo, hi = xs[0] - 0.5, xs[0] + 0.5
        else:
            lo = max(xs[k - 1], xs[k]) - 0.5
            hi = min(xs[k - 1], xs[k]) + 0.5
        m = min(m, abs(suffix_mean - lo), abs(suffix_mean - hi))
    return m


class TestModelStructure:
    def test_single_square_counts(self):
        asm = [square_at(0.0, 0.5)]
        model = build_equilibrium_model(asm, contact_segments(asm))
        assert len(model.bodies) == 1
        assert len(model.points) == 2
        # 2 force variables per contact point, 3 equality rows per body
        assert 2 * len(model.points) == 4
        assert math.isclose(model.bodies[0][0], 1.0, abs_tol=1e-12)

    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_tower_counts(self, n):
        asm = tower([0.0] * n)
        model = build_equilibrium_model(asm, contact_segments(asm))
        assert len(model.bodies) == n
        assert len(model.points) == 2 * n  # n segments, 2 endpoints each
        assert 2 * len(model.points) == 4 * n

    def test_empty_model(self):
        model = build_equilibrium_model([], [])
        verdict = solve_feasibility(model)
        assert verdict.stable and verdict.residual == 0.0


class TestVerdicts:
    @pytest.mark.parametrize("mu", [0.0, 0.3, 0.6])
    def test_single_square_on_floor(self, mu):
        assert is_stable([square_at(0.3, 0.5)], mu=mu) is True
        asm = [square_at(0.3, 0.5)]
        verdict = solve_feasibility(build_equilibrium_model(asm, contact_segments(asm), mu=mu))
        assert verdict.stable and verdict.residual <= 1e-12

    def test_offset_stack_toppling(self):
        assert is_stable(tower([0.0, 0.6]), mu=0.0) is False
        assert is_stable(tower([0.0, 0.4]), mu=0.0) is True

    def test_floating_block_unstable(self):
        assert is_stable([square_at(0.0, 3.0)], mu=0.6) is False

    def test_block_pair_without_floor_path_unstable(self):
        # two touching blocks hovering above the floor
        asm = [square_at(0.0, 2.5), square_at(0.0, 3.5)]
        assert is_stable(asm, mu=1.0) is False

    def test_arch_needs_friction(self):
        arch = voussoir_arch()
        assert is_stable(arch, mu=0.6) is True
        assert is_stable(arch, mu=0.0) is False

    def test_solver_failure_treated_unstable(self, monkeypatch):
        import blockforge.stability as stability_mod

        def boom(*args, **kwargs):
            class R:
                success = False
                status = 1
                message = "iteration limit"
            return R()

        monkeypatch.setattr(stability_mod, "linprog", boom)
        with pytest.raises(SolverFailure):
            asm = [square_at(0.0, 0.5)]
            solve_feasibility(build_equilibrium_model(asm, contact_segments(asm)))
        assert stability_mod.is_stable([square_at(0.0, 0.5)]) is False


class TestProperties:
    def test_scale_invariance_in_gravity(self):
        cases = [tower([0.0, 0.45]), tower([0.0, 0.3, 0.55]), voussoir_arch()]
        for asm in cases:
            base = is_stable(asm, mu=0.6, g=9.81)
            for c in (0.1, 1.0, 10.0):
                assert is_stable(asm, mu=0.6, g=9.81 * c) == base

    def test_friction_monotonicity(self, rng):
        mus = [0.0, 0.3, 0.6, 1.0]
        cases = []
        for _ in range(15):
            n = rng.integers(2, 5)
            xs = np.cumsum(rng.uniform(-0.55, 0.55, size=n))
            cases.append(tower(xs))
        for s_par in (0.1, 0.2, 0.3, 0.4):
            cases.append(voussoir_arch(s_par))
        for asm in cases:
            verdicts = [is_stable(asm, mu=m) for m in mus]
            for a, b in zip(verdicts, verdicts[1:]):
                assert (not a) or b  # stable at low mu implies stable at higher

    def test_frictionless_tower_oracle_agreement(self, rng):
        checked = 0
        while checked < 100:
            n = int(rng.integers(2, 4))
            xs = np.concatenate([[rng.uniform(-1, 1)],
                                 rng.uniform(-0.9, 0.9, size=n - 1)])
            xs = np.cumsum(xs)
            if tower_margin(xs) < 0.02:
                continue
            asm = tower(xs)
            assert is_stable(asm, mu=0.0) == tower_stable_oracle(xs), f"offsets {xs}"
            checked += 1

    def test_superstability(self, rng):
        for _ in range(10):
            xs = np.cumsum(rng.uniform(-0.4, 0.4, size=3))
            asm = tower(xs)
            if not is_stable(asm, mu=0.6):
                continue
            far_x = 3.5 if xs.max() < 2 else -3.5
            bigger = asm + [square_at(far_x, 0.5)]
            assert is_stable(bigger, mu=0.6) is True

    def test_margin_flag_tightens_verdict(self):
        asm = tower([0.0, 0.48])
        assert is_stable(asm, mu=0.0) is True
        assert is_stable(asm, mu=0.0, margin=0.9) is False
