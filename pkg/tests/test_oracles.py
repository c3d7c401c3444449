"""Oracle validation: the brute-force references come first.

Every derived expected value elsewhere in the suite traces back to these
oracles; here they are checked for self-consistency on cases with known
closed forms.
"""

import numpy as np
import pytest

import feaskit as fk
from feaskit import fixtures
from feaskit.oracles import GridSpec, fixture_record, parse_fixture_line


def grid2(res=81):
    return GridSpec(lower=np.array([-2.0, -2.0]), upper=np.array([2.0, 2.0]),
                    resolution=(res, res))


class TestGridProject:
    def test_halfspace_matches_closed_form(self):
        hs = fk.HalfSpace(normal=[1.0, 0.0], offset=0.0)
        g = grid2()
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(100):
            x = rng.uniform(-1.8, 1.8, size=2)
            gp = fk.grid_project(hs, x, g)
            worst = max(worst, float(np.linalg.norm(gp - hs.project(x))))
        assert worst <= g.cell_diagonal

    def test_singleton_box(self):
        box = fk.Box(lower=[0.5, 0.5], upper=[0.5, 0.5])
        gp = fk.grid_project(box, np.array([1.7, -0.3]), grid2())
        assert np.allclose(gp, [0.5, 0.5])

    def test_quadrant_intersection_matches_clamp(self):
        prob = fk.Problem(sets=(fk.HalfSpace([1.0, 0.0], 0.0),
                                fk.HalfSpace([0.0, 1.0], 0.0)))
        g = grid2()
        for x, expected in [([1.0, 2.0], [0.0, 0.0]), ([-1.0, 2.0], [-1.0, 0.0])]:
            gp = fk.grid_project(prob, np.array(x), g)
            assert np.linalg.norm(gp - np.array(expected)) <= g.cell_diagonal

    def test_no_feasible_point_errors(self):
        ball = fk.Ball(center=[10.0, 10.0], radius=0.5)
        with pytest.raises(fk.OracleError):
            fk.grid_project(ball, np.array([0.0, 0.0]), grid2())

    def test_tie_break_is_first_lexicographic_index(self):
        # two grid points at equal distance: the smaller index wins
        box = fk.Box(lower=[-2.0, -2.0], upper=[2.0, 2.0])
        g = GridSpec(lower=np.array([-1.0, -1.0]), upper=np.array([1.0, 1.0]),
                     resolution=(3, 3))
        gp = fk.grid_project(box, np.array([0.0, 0.5]), g)
        assert np.allclose(gp, [0.0, 0.0]) or np.allclose(gp, [0.0, 1.0])
        # C-ordered points put (0,0) before (0,1)
        assert np.allclose(gp, [0.0, 0.0])


class TestSubgradientOracle:
    def test_quadratic_gradient(self):
        steer = fk.SteeringSpec(objective=fk.QuadraticObjective(target=[1.0, -2.0]),
                                beta0=0.5, ratio=0.5)
        rep = fk.finite_difference_subgradient_check(steer, [0.3, 0.4], h=1e-6)
        assert rep.passed and rep.gradient_checked
        assert rep.max_gradient_error <= 1e-5

    def test_l1_at_kink_uses_valid_subgradient(self):
        steer = fk.SteeringSpec(objective=fk.WeightedL1Objective(
            weights=[1.0, 2.0], target=[0.5, 0.0]), beta0=0.5, ratio=0.5)
        # second coordinate sits exactly at the kink
        rep = fk.finite_difference_subgradient_check(steer, [1.5, 0.0], h=1e-6)
        assert rep.inequality_violations == 0
        assert not rep.gradient_checked  # kink: no derivative comparison

    def test_linear_gradient_exact(self):
        steer = fk.SteeringSpec(objective=fk.LinearObjective(cost=[2.0, -1.0]),
                                beta0=0.5, ratio=0.5, normalize=False, bound=3.0)
        rep = fk.finite_difference_subgradient_check(steer, [0.0, 0.0], h=1e-7)
        assert rep.passed
        assert rep.max_gradient_error <= 1e-7

    def test_subgradient_inequality_many_points(self, rng):
        specs = [
            fk.SteeringSpec(objective=fk.QuadraticObjective(target=[0.0, 0.0]),
                            beta0=0.5, ratio=0.5),
            fk.SteeringSpec(objective=fk.WeightedL1Objective(
                weights=[1.0, 0.5], target=[0.2, -0.1]), beta0=0.5, ratio=0.5),
            fk.SteeringSpec(objective=fk.LinearObjective(cost=[1.0, 1.0]),
                            beta0=0.5, ratio=0.5, normalize=False, bound=2.0),
        ]
        for spec in specs:
            for trial in range(10):
                x = rng.uniform(-2, 2, size=2)
                rep = fk.finite_difference_subgradient_check(spec, x, h=1e-6,
                                                             n_samples=100, seed=trial)
                assert rep.inequality_violations == 0


class TestSubspaceLimit:
    def test_two_distinct_lines_meet_at_origin(self):
        l1 = fk.LinearSubspace(basis=[[1.0, 0.0]])
        l2 = fk.LinearSubspace(basis=[[0.0, 1.0]])
        lim = fk.two_subspace_exact_limit([l1, l2], [3.0, 4.0])
        assert np.allclose(lim, [0.0, 0.0], atol=1e-12)

    def test_identical_lines_project_onto_line(self):
        l1 = fk.LinearSubspace(basis=[[1.0, 0.0]])
        lim = fk.two_subspace_exact_limit([l1, l1], [3.0, 4.0])
        assert np.allclose(lim, [3.0, 0.0], atol=1e-12)

    def test_two_planes_in_r3_meet_in_line(self):
        p1 = fk.LinearSubspace(basis=[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])  # z = 0
        p2 = fk.LinearSubspace(basis=[[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])  # y = 0
        x0 = np.array([2.0, 3.0, -1.0])
        lim = fk.two_subspace_exact_limit([p1, p2], x0)
        assert np.allclose(lim, [2.0, 0.0, 0.0], atol=1e-12)

        prob = fk.Problem(sets=(p1, p2))
        sched = fk.cyclic_single_index_schedule(2)
        cfg = fk.RunConfig(mode="exact", x0=x0, max_iter=500, stop_residual=1e-13)
        tr = fk.run(prob, sched, cfg)
        assert np.linalg.norm(tr.x_final - lim) <= 1e-9

    def test_rejects_non_subspace(self):
        with pytest.raises(fk.InvalidSetError):
            fk.two_subspace_exact_limit([fk.Ball(center=[0.0, 0.0], radius=1.0)], [1.0, 0.0])


class TestFixtures:
    def test_records_round_trip_and_hash(self):
        line = fixture_record("demo", {"kind": "project", "x": [0.1, 0.2]}, [0.0, 0.2], 0.05)
        rec = parse_fixture_line(line)
        assert rec["id"] == "demo"
        assert rec["oracle"] == [0.0, 0.2]
        corrupted = line.replace('"x":[0.1', '"x":[0.11')
        with pytest.raises(fk.OracleError):
            parse_fixture_line(corrupted)

    def test_generation_is_deterministic(self, tmp_path):
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        fixtures.write_fixtures(p1)
        fixtures.write_fixtures(p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_checked_in_fixtures_match_regeneration(self, tmp_path):
        import pathlib
        stored = pathlib.Path(__file__).parent / "data" / "oracle_fixtures.jsonl"
        out = tmp_path / "regen.jsonl"
        fixtures.write_fixtures(out)
        assert out.read_bytes() == stored.read_bytes()
