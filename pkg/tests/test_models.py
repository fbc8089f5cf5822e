import numpy as np
import pytest

from separatrix import models
from separatrix.models import (CompetitionParams, HilkerParams, ModelError,
                               classify, competition_equilibria,
                               competition_jacobian, competition_rhs,
                               hilker_equilibria, hilker_rhs,
                               stability_report)

HP = models.PRESET_PARAMS["hilker-ref"]
CP2 = models.PRESET_PARAMS["competition-2eq"]
CP3 = models.PRESET_PARAMS["competition-3eq"]


def fd_jacobian(rhs, x0, h=1e-6):
    """Central-difference oracle for analytic Jacobians."""
    x0 = np.asarray(x0, dtype=float)
    jac = np.empty((x0.size, x0.size))
    for k in range(x0.size):
        step = h * max(1.0, abs(x0[k]))
        xp, xm = x0.copy(), x0.copy()
        xp[k] += step
        xm[k] -= step
        jac[:, k] = (rhs(xp) - rhs(xm)) / (2.0 * step)
    return jac


class TestRhs:
    def test_hilker_equilibria_are_roots(self):
        assert np.allclose(hilker_rhs([0, 0], HP), 0)
        assert np.allclose(hilker_rhs([1, 0], HP), 0)

    def test_hilker_endemic_reference_point(self):
        assert np.all(np.abs(hilker_rhs([0.6663, 0.2518], HP)) < 1e-3)

    def test_competition_origin(self):
        assert np.allclose(competition_rhs([0, 0, 0], CP2), 0)

    def test_competition_e3_reference(self):
        assert np.allclose(competition_rhs([0, 0, 9.5], CP2), 0)

    def test_competition_all_ones_hand_value(self):
        params = CompetitionParams(*([1.0] * 12))
        assert np.allclose(competition_rhs([1, 1, 1], params), [-2, -2, -2])

    def test_nonfinite_state_rejected(self):
        with pytest.raises(ModelError):
            hilker_rhs([np.nan, 0], HP)
        with pytest.raises(ModelError):
            competition_rhs([np.inf, 0, 0], CP2)


class TestJacobian:
    def test_origin_linearization(self):
        jac = competition_jacobian([0, 0, 0], CP2)
        assert np.allclose(np.diag(jac), [CP2.p, CP2.q, CP2.r])
        assert np.allclose(jac - np.diag(np.diag(jac)), 0)

    def test_e3_first_diagonal_entry(self):
        jac = competition_jacobian([0, 0, 9.5], CP2)
        assert jac[0, 0] == pytest.approx(CP2.p - CP2.b * CP2.w)  # 1 - 19

    def test_matches_finite_differences_at_point(self):
        jac = competition_jacobian([1, 1, 1], CP2)
        ref = fd_jacobian(lambda s: competition_rhs(s, CP2), [1, 1, 1])
        assert np.max(np.abs(jac - ref)) / np.max(np.abs(ref)) < 1e-6

    @pytest.mark.parametrize("preset", ["hilker-ref", "competition-2eq",
                                        "competition-3eq"])
    def test_matches_finite_differences_random_states(self, preset):
        system = models.preset_system(preset)
        rng = np.random.default_rng(11)
        for _ in range(100):
            x = rng.uniform(0.05, 5.0, system.dim)
            jac = system.jacobian(x)
            ref = fd_jacobian(system.rhs, x)
            scale = max(np.max(np.abs(ref)), 1.0)
            assert np.max(np.abs(jac - ref)) / scale < 1e-6


class TestEquilibria:
    def test_competition_reference_e4(self):
        eqs = {e.identity: e for e in competition_equilibria(CP2)}
        assert np.allclose(eqs["E4"].location, [0.8511, 0.1489, 0], atol=1e-4)

    def test_competition_single_population_points(self):
        eqs = {e.identity: e for e in competition_equilibria(CP3)}
        assert np.allclose(eqs["E1"].location, [3, 0, 0])
        assert np.allclose(eqs["E2"].location, [0, 2, 0])
        assert np.allclose(eqs["E3"].location, [0, 0, 2])

    def test_all_ones_degenerate_e4(self):
        eqs = {e.identity: e for e in
               competition_equilibria(CompetitionParams(*([1.0] * 12)))}
        assert eqs["E4"].degenerate
        assert eqs["E4"].location is None

    def test_infeasible_candidates_kept(self):
        eqs = competition_equilibria(CP2)
        assert len(eqs) == 8
        flags = {e.identity: e.feasible for e in eqs}
        assert flags["E6"] is False  # negative z coordinate

    def test_feasible_points_are_roots(self):
        for params in (CP2, CP3):
            for eq in competition_equilibria(params):
                if eq.feasible:
                    assert np.max(np.abs(competition_rhs(eq.location, params))) < 1e-9

    def test_hilker_endemic_location(self):
        eqs = hilker_equilibria(HP)
        endemic = [e for e in eqs if e.identity == "E4"]
        assert len(endemic) == 1
        assert np.linalg.norm(endemic[0].location - [0.6663, 0.2518]) < 1e-3

    def test_hilker_saddle_location(self):
        eqs = {e.identity: e for e in hilker_equilibria(HP)}
        assert np.allclose(eqs["E2"].location, [0.1, 0])

    def test_hilker_endemic_residual(self):
        for eq in hilker_equilibria(HP):
            if eq.identity.startswith("E4"):
                assert np.linalg.norm(hilker_rhs(eq.location, HP)) < 1e-10


class TestClassify:
    def test_hilker_reference_classification(self):
        system = models.preset_system("hilker-ref")
        tags = {e.identity: e.stability
                for e in models.classified_equilibria(system)}
        assert tags["E0"] == "stable"
        assert tags["E4"] == "stable"
        assert tags["E2"] == "saddle"
        # mixed-sign eigenvalues: E1 is a saddle as well (it repels the
        # interior but attracts along the disease-free axis)
        assert tags["E1"] == "saddle"

    def test_competition_origin_unstable(self):
        for preset in ("competition-2eq", "competition-3eq"):
            system = models.preset_system(preset)
            tags = {e.identity: e.stability
                    for e in models.classified_equilibria(system)}
            assert tags["E0"] == "unstable"

    def test_coexistence_point_is_saddle_in_both_presets(self):
        for preset in ("competition-2eq", "competition-3eq"):
            system = models.preset_system(preset)
            tags = {e.identity: e.stability
                    for e in models.classified_equilibria(system)}
            assert tags["E7"] == "saddle"

    def test_classify_requires_location(self):
        system = models.preset_system("competition-2eq")
        with pytest.raises(ModelError):
            classify(models.Equilibrium("E9", None), system)


class TestStabilityReport:
    def test_two_equilibria_stable_set(self):
        assert stability_report(CP2).stable_set() == {"E3", "E4"}

    def test_three_equilibria_stable_set(self):
        assert stability_report(CP3).stable_set() == {"E1", "E2", "E3"}

    def test_table_agrees_with_eigenvalues(self):
        for name, params in (("competition-2eq", CP2),
                             ("competition-3eq", CP3)):
            system = models.preset_system(name)
            table = stability_report(params).stable_set()
            eigen = {e.identity
                     for e in models.classified_equilibria(system)
                     if e.identity != "E7" and e.feasible
                     and e.stability == "stable"}
            assert table == eigen

    def test_feasibility_disjunctions_match_closed_forms(self):
        rng = np.random.default_rng(3)
        checked = 0
        while checked < 1000:
            vals = rng.uniform(0.05, 5.0, 12)
            params = CompetitionParams(*vals)
            eqs = {e.identity: e for e in competition_equilibria(params)}
            rep = stability_report(params)
            for ident, flag in (("E4", rep.e4_feasible),
                                ("E5", rep.e5_feasible),
                                ("E6", rep.e6_feasible)):
                eq = eqs[ident]
                if eq.degenerate:
                    continue
                coords_ok = bool(np.all(eq.location >= 0)
                                 and np.all(np.isfinite(eq.location)))
                # ties (coordinate exactly on an equality boundary) are
                # measure zero under the uniform draw
                assert flag == coords_ok, (ident, vals)
            checked += 1


class TestParamValidation:
    def test_allee_threshold_range(self):
        with pytest.raises(ModelError):
            HilkerParams(r=0.2, u=1.5, d=0.25, alpha=0.1, sigma=2.5)

    def test_negative_competition_rate(self):
        with pytest.raises(ModelError):
            CompetitionParams(p=1, q=1, r=1, a=-1, b=1, c=1,
                              e=1, f=1, g=1, u=1, v=1, w=1)

    def test_zero_capacity(self):
        with pytest.raises(ModelError):
            CompetitionParams(p=1, q=1, r=1, a=1, b=1, c=1,
                              e=1, f=1, g=1, u=0, v=1, w=1)

    def test_unknown_preset(self):
        with pytest.raises(ModelError):
            models.preset_system("nope")
