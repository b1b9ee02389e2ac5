import csv
import io
import json

import numpy as np
import pytest

from fixops.errors import FejerViolationError, SigmaEvaluationError
from fixops.hilbert import LinearMap, estimate_norm
from fixops.operators import (
    Ball,
    Box,
    ClassCertificate,
    Hyperplane,
    Operator,
    compose,
    convex_combination,
    identity,
    projection,
    relax,
)
from fixops.parameter_algebra import nu_star_value, rfne_to_spc
from fixops.solver import (
    IterationTrace,
    Status,
    StepRule,
    StoppingRule,
    fejer_check,
    iterate,
    preset_dr,
    preset_eadc,
    preset_km,
    preset_maruster,
    preset_moudafi,
    preset_raspc,
)

THIRTY = np.deg2rad(30.0)
PLANE_A = Hyperplane([0.0, 1.0], 0.0)
PLANE_B30 = Hyperplane([-np.sin(THIRTY), np.cos(THIRTY)], 0.0)
ORIGIN = np.zeros(2)


def first_k_within(trace, target):
    """First iteration whose distance-to-reference is <= target, else None."""
    for row in trace.rows:
        if row.dist_to_ref is not None and row.dist_to_ref <= target:
            return row.k
    return None


class TestRules:
    def test_step_rule_validation(self):
        with pytest.raises(ValueError):
            StepRule(epsilon=0.0)
        with pytest.raises(ValueError):
            StepRule(epsilon=1.0)

    def test_schedule_constant_and_callable(self):
        assert StepRule(1.5).lambda_at(10) == 1.5
        rule = StepRule(lambda k: 1.0 + 0.5 / (k + 1))
        assert rule.lambda_at(0) == 1.5
        assert rule.in_range(1.5)
        assert not rule.in_range(1.96)

    def test_sigma_validation(self):
        rule = StepRule(sigma=lambda x: -1.0)
        with pytest.raises(SigmaEvaluationError):
            rule.sigma_at(np.zeros(2))

    def test_stopping_validation(self):
        with pytest.raises(ValueError):
            StoppingRule(residual_tol=0.0)
        with pytest.raises(ValueError):
            StoppingRule(max_iters=0)
        with pytest.raises(ValueError):
            StoppingRule(stall_window=0)


class TestIterate:
    def test_identity_converges_immediately(self):
        trace = iterate(identity(2), StepRule(), StoppingRule(), [3.0, -1.0])
        assert trace.status is Status.CONVERGED
        assert trace.iterations == 0
        assert trace.final_residual == 0.0

    def test_projection_converges_in_one_step(self):
        P = projection(PLANE_A)
        x0 = np.array([2.0, 5.0])
        trace = iterate(P, StepRule(1.0), StoppingRule(residual_tol=1e-14), x0)
        assert trace.status is Status.CONVERGED
        assert trace.iterations == 1
        assert np.allclose(trace.final_x, PLANE_A.project(x0), atol=1e-15)

    def test_cutter_residuals_decrease_to_zero(self):
        V = convex_combination([projection(PLANE_A), projection(PLANE_B30)], [0.5, 0.5])
        trace = iterate(V, StepRule(1.5), StoppingRule(residual_tol=1e-9, max_iters=2000),
                        [4.0, 1.0], reference=ORIGIN)
        assert trace.status is Status.CONVERGED
        res = trace.residuals
        assert np.all(np.diff(res) <= 1e-12)

    def test_divergence_is_status_not_exception(self):
        blower = Operator(lambda X: 3.0 * X, dim=2, name="tripler")
        trace = iterate(blower, StepRule(1.0), StoppingRule(max_iters=10_000), [1.0, 1.0])
        assert trace.status is Status.DIVERGED

    def test_nonfinite_is_status_not_exception(self):
        nan_op = Operator(lambda X: X * np.nan, dim=2, name="nan")
        trace = iterate(nan_op, StepRule(1.0), StoppingRule(), [1.0, 1.0])
        assert trace.status is Status.DIVERGED

    def test_stall_detection(self):
        shifter = Operator(lambda X: X + np.array([0.0, 1.0]), dim=2, name="shift")
        stop = StoppingRule(residual_tol=1e-10, max_iters=500,
                            stall_window=10, stall_min_decrease=1e-6)
        trace = iterate(shifter, StepRule(1.0), stop, [0.0, 0.0])
        assert trace.status is Status.STALLED
        assert trace.iterations == 10

    def test_max_iters(self):
        shifter = Operator(lambda X: X + np.array([0.0, 1.0]), dim=2, name="shift")
        trace = iterate(shifter, StepRule(1.0), StoppingRule(max_iters=100), [0.0, 0.0])
        assert trace.status is Status.MAX_ITERS
        assert trace.iterations == 100

    def test_fejer_assertion_fires_for_certified_bad_operator(self):
        # an operator falsely certified as a cutter moves points away from the
        # claimed fixed point, which the in-run assertion must catch
        liar = Operator(lambda X: X + np.array([0.0, 1.0]), dim=2,
                        certificate=ClassCertificate.fne(), name="liar")
        with pytest.raises(FejerViolationError):
            iterate(liar, StepRule(1.0), StoppingRule(max_iters=10),
                    [0.0, 5.0], reference=[0.0, 0.0])

    def test_fejer_assertion_skipped_for_out_of_range_schedule(self):
        P = projection(PLANE_A)
        trace = iterate(P, StepRule(3.0), StoppingRule(max_iters=5),
                        [0.0, 1.0], reference=ORIGIN)
        assert fejer_check(trace, ORIGIN) > 0.0


class TestPresetKMAndMaruster:
    def test_km_projection_converges(self):
        V, rule = preset_km(projection(PLANE_A), schedule=1.0)
        trace = iterate(V, rule, StoppingRule(residual_tol=1e-12), [1.0, 3.0],
                        reference=ORIGIN)
        assert trace.status is Status.CONVERGED
        assert trace.iterations == 1

    def test_km_rejects_non_cutter_constant(self):
        with pytest.raises(ValueError):
            preset_km(relax(projection(PLANE_A), 2.0))
        with pytest.raises(ValueError):
            preset_km(projection(PLANE_A), schedule=2.5)

    def test_maruster_default_midpoint_schedule(self):
        # a 0.5-demicontraction built as the 4-relaxation of a projection:
        # the midpoint schedule 0.25 makes the step exactly the projection
        base = relax(projection(PLANE_A), 4.0)
        V = Operator(base.fn, dim=2,
                     certificate=ClassCertificate.demicontraction(0.5), fix=PLANE_A)
        V2, rule = preset_maruster(V)
        assert rule.lambda_at(0) == pytest.approx(0.25)
        trace = iterate(V2, rule, StoppingRule(residual_tol=1e-12), [1.0, 3.0],
                        reference=ORIGIN)
        assert trace.status is Status.CONVERGED
        assert trace.iterations == 1

    def test_maruster_wide_range_for_strongly_quasinonexpansive(self):
        # alpha = -3 admits schedules up to 4 - eps; the certified step keeps
        # the distance to the fixed set monotone even beyond 2
        base = relax(projection(PLANE_A), 0.5)
        V = Operator(base.fn, dim=2,
                     certificate=ClassCertificate.demicontraction(-3.0), fix=PLANE_A)
        V2, rule = preset_maruster(V, schedule=2.0)
        trace = iterate(V2, rule, StoppingRule(residual_tol=1e-12), [1.0, 3.0],
                        reference=ORIGIN)
        assert trace.status is Status.CONVERGED
        assert fejer_check(trace, ORIGIN) <= 1e-10

    def test_maruster_schedule_range_validated(self):
        base = relax(projection(PLANE_A), 4.0)
        V = Operator(base.fn, dim=2,
                     certificate=ClassCertificate.demicontraction(0.5), fix=PLANE_A)
        with pytest.raises(ValueError):
            preset_maruster(V, schedule=0.6)  # above 1 - alpha - eps = 0.45
        with pytest.raises(ValueError):
            preset_maruster(Operator(base.fn, dim=2))  # no constant available


class TestPresetDR:
    def test_base_operator_is_fne(self):
        V, rule = preset_dr(PLANE_A, PLANE_B30)
        assert V.certificate.rfne_lambda() == 1.0
        assert rule.sigma is None
        assert rule.lambda_at(0) == 1.0

    def test_coincident_sets_fixed_from_start(self):
        V, rule = preset_dr(PLANE_A, PLANE_A)
        x0 = np.array([2.0, 5.0])
        trace = iterate(V, rule, StoppingRule(residual_tol=1e-13), x0)
        # the composed reflections cancel, so the start is already fixed; the
        # feasibility solution is read through the projection of the limit
        assert trace.status is Status.CONVERGED
        assert trace.iterations == 0
        assert np.allclose(PLANE_A.project(trace.final_x), PLANE_A.project(x0))

    def test_thirty_degrees_converges(self):
        V, rule = preset_dr(PLANE_A, PLANE_B30)
        trace = iterate(V, rule, StoppingRule(residual_tol=1e-8, max_iters=200),
                        [2.0, 1.0], reference=ORIGIN)
        assert trace.status is Status.CONVERGED
        assert fejer_check(trace, ORIGIN) <= 1e-10

    def test_parallel_disjoint_residual_constant_one(self):
        V, rule = preset_dr(Hyperplane([0.0, 1.0], 0.0), Hyperplane([0.0, 1.0], 1.0))
        trace = iterate(V, rule, StoppingRule(residual_tol=1e-10, max_iters=100),
                        [0.3, 0.7])
        assert trace.status is Status.MAX_ITERS
        assert np.max(np.abs(trace.residuals - 1.0)) <= 1e-12


class TestPresetRASPC:
    def test_sigma_is_reciprocal_constant(self):
        V, rule = preset_raspc(PLANE_A, PLANE_B30, 3.0, 1.0)
        assert rule.sigma_at(np.zeros(2)) == 0.25
        assert V.certificate == ClassCertificate.rfne(4.0)

    def test_plain_alternating_projections_scaling(self):
        V, rule = preset_raspc(PLANE_A, PLANE_B30, 1.0, 1.0)
        assert rule.sigma_at(np.zeros(2)) == pytest.approx(0.75, abs=1e-16)

    def test_product_four_rejected(self):
        with pytest.raises(ValueError):
            preset_raspc(PLANE_A, PLANE_B30, 2.0, 2.0)
        with pytest.raises(ValueError):
            preset_raspc(PLANE_A, PLANE_B30, 8.0, 1.0)

    def test_converges_with_fejer(self):
        V, rule = preset_raspc(PLANE_A, PLANE_B30, 3.0, 1.0)
        trace = iterate(V, rule, StoppingRule(residual_tol=1e-8, max_iters=500),
                        [2.0, 1.0], reference=ORIGIN)
        assert trace.status is Status.CONVERGED
        assert fejer_check(trace, ORIGIN) <= 1e-10

    def test_sum_four_family_converges(self):
        # lam + mu = 4 with lam != 2: certified with nu_star = 4; the extreme
        # pairs contract slowly, hence the generous iteration budget
        for lam in (1.5, 3.0, 3.9):
            mu = 4.0 - lam
            V, rule = preset_raspc(PLANE_A, PLANE_B30, lam, mu)
            assert V.certificate.parameter == pytest.approx(4.0, rel=1e-12)
            trace = iterate(V, rule, StoppingRule(residual_tol=1e-9, max_iters=6000),
                            [1.0, 2.0], reference=ORIGIN)
            assert trace.status is Status.CONVERGED
            # the limit lies in the intersection of the two hyperplanes
            assert PLANE_A.contains(trace.final_x, tol=1e-6)
            assert PLANE_B30.contains(trace.final_x, tol=1e-6)

    def test_sqne_telescoping_bound(self):
        # for a composition with negative SPC constant, the summed squared
        # residuals are bounded by the initial distance over the modulus
        lam = mu = 0.8
        V, rule = preset_raspc(PLANE_A, PLANE_B30, lam, mu)
        gamma = rfne_to_spc(V.certificate.parameter)
        assert gamma < 0.0
        x0 = np.array([3.0, 2.0])
        trace = iterate(V, StepRule(1.0), StoppingRule(residual_tol=1e-12, max_iters=5000),
                        x0, reference=ORIGIN)
        assert trace.status is Status.CONVERGED
        bound = float(np.linalg.norm(x0 - ORIGIN) ** 2) / (-gamma)
        assert float(np.sum(trace.residuals**2)) <= bound * (1.0 + 1e-9)


class TestPresetEADC:
    BALL = Ball([0.0, 1.0], 1.0)
    LINE = Hyperplane([0.0, 1.0], 0.0)
    TANGENT = np.zeros(2)

    def test_start_at_common_fixed_point(self):
        V, rule = preset_eadc(self.BALL, self.LINE, 3.0, 1.0)
        trace = iterate(V, rule, StoppingRule(), self.TANGENT)
        assert trace.status is Status.CONVERGED
        assert trace.iterations == 0

    def test_product_four_rejected(self):
        with pytest.raises(ValueError):
            preset_eadc(self.BALL, self.LINE, 2.0, 2.0)

    def test_beats_reflection_method_to_tangency(self):
        V_e, rule_e = preset_eadc(self.BALL, self.LINE, 3.0, 1.0)
        V_d, rule_d = preset_dr(self.BALL, self.LINE)
        stop = StoppingRule(residual_tol=1e-14, max_iters=2000)
        x0 = np.array([2.0, 0.0])
        tr_e = iterate(V_e, rule_e, stop, x0, reference=self.TANGENT)
        tr_d = iterate(V_d, rule_d, stop, x0, reference=self.TANGENT)
        k_e = first_k_within(tr_e, 1e-3)
        k_d = first_k_within(tr_d, 1e-3)
        assert k_e is not None
        assert k_d is None or k_e < k_d

    def test_steps_dominate_fixed_relaxation(self):
        # extrapolated step sizes are never below lam_k / nu_star
        V, rule = preset_eadc(PLANE_A, PLANE_B30, 3.0, 1.0)
        nu = nu_star_value(3.0, 1.0)
        trace = iterate(V, rule, StoppingRule(residual_tol=1e-10, max_iters=200),
                        [2.0, 1.0], reference=ORIGIN)
        assert trace.status is Status.CONVERGED
        steps = np.array([r.step for r in trace.rows])
        assert np.all(steps >= 1.0 / nu - 1e-15)

    def test_faster_than_raspc_on_hyperplanes(self):
        V_e, rule_e = preset_eadc(PLANE_A, PLANE_B30, 3.0, 1.0)
        V_r, rule_r = preset_raspc(PLANE_A, PLANE_B30, 3.0, 1.0)
        stop = StoppingRule(residual_tol=1e-10, max_iters=1000)
        tr_e = iterate(V_e, rule_e, stop, [2.0, 1.0])
        tr_r = iterate(V_r, rule_r, stop, [2.0, 1.0])
        assert tr_e.status is Status.CONVERGED
        assert tr_e.iterations <= tr_r.iterations


class TestPresetMoudafi:
    def make_split(self):
        A = LinearMap(np.diag([1.0, 2.0]))
        estimate_norm(A)
        S = projection(Box([0.5, 0.5], [1.5, 1.5]))
        U = projection(Box([0.0, 0.0], [1.0, 1.0]))
        return S, U, A

    def test_tau_value(self):
        S, U, A = self.make_split()
        V, rule = preset_moudafi(S, U, A, 0.5, 0.5, alpha=0.0, beta=0.0)
        # relaxed constants are both -1, so tau = 4/3 and sigma = 3/4
        assert rule.sigma_at(np.zeros(2)) == pytest.approx(0.75, abs=1e-15)

    def test_boundary_rejected_with_parameters_in_message(self):
        S, U, A = self.make_split()
        with pytest.raises(ValueError) as err:
            preset_moudafi(S, U, A, 1.0, 1.0, alpha=0.0, beta=0.0)
        assert "g + d" in str(err.value)

    def test_requires_constants(self):
        S, U, A = self.make_split()
        bare = Operator(S.fn, dim=2, certificate=None)
        with pytest.raises(ValueError):
            preset_moudafi(bare, U, A, 1.0, 1.0)

    def test_split_problem_converges_to_feasible_point(self):
        S, U, A = self.make_split()
        V, rule = preset_moudafi(S, U, A, 1.0, 1.0)
        trace = iterate(V, rule, StoppingRule(residual_tol=1e-8, max_iters=500),
                        [5.0, -3.0])
        assert trace.status is Status.CONVERGED
        x = trace.final_x
        assert np.all(x >= -1e-6) and np.all(x <= 1.0 + 1e-6)
        ax = A(x)
        assert np.all(ax >= 0.5 - 1e-6) and np.all(ax <= 1.5 + 1e-6)

    def test_larger_relaxations_still_converge(self):
        # constants relax to g = d = -1/3 < 0 is false here: lam = mu = 1.5
        # gives g = d = (1.5 - 2)/1.5 = -1/3, still strictly admissible
        S, U, A = self.make_split()
        V, rule = preset_moudafi(S, U, A, 1.5, 1.5)
        trace = iterate(V, rule, StoppingRule(residual_tol=1e-8, max_iters=500),
                        [4.0, 4.0])
        assert trace.status is Status.CONVERGED


class TestFejerCheck:
    def test_constant_trace_is_zero(self):
        rows_op = Operator(lambda X: X, dim=2, name="id")
        trace = iterate(rows_op, StepRule(1.0), StoppingRule(max_iters=5), [1.0, 1.0])
        assert fejer_check(trace, ORIGIN) == 0.0

    def test_dr_monotone(self):
        V, rule = preset_dr(PLANE_A, PLANE_B30)
        trace = iterate(V, rule, StoppingRule(residual_tol=1e-9, max_iters=500), [2.0, 1.0])
        assert fejer_check(trace, ORIGIN) <= 1e-10

    def test_broken_schedule_reports_positive_violation(self):
        P = projection(PLANE_A)  # a cutter; schedule 3 overshoots
        trace = iterate(P, StepRule(3.0), StoppingRule(max_iters=6), [0.0, 1.0])
        assert fejer_check(trace, ORIGIN) > 0.1


class TestTraceSerialization:
    def make_trace(self):
        V, rule = preset_raspc(PLANE_A, PLANE_B30, 3.0, 1.0)
        return iterate(V, rule, StoppingRule(residual_tol=1e-9, max_iters=300),
                       [2.0, 1.0], reference=ORIGIN,
                       config_echo={"method": "raspc", "seed": 7})

    def test_csv_round_trip_17_digits(self):
        trace = self.make_trace()
        text = trace.csv_text()
        rows = list(csv.DictReader(io.StringIO(text)))
        assert len(rows) == len(trace.rows)
        for parsed, row in zip(rows, trace.rows):
            assert int(parsed["k"]) == row.k
            assert float(parsed["residual"]) == row.residual
            assert float(parsed["step"]) == row.step
            assert float(parsed["dist_to_ref"]) == row.dist_to_ref
            assert float(parsed["x_0"]) == row.x[0]
            assert float(parsed["x_1"]) == row.x[1]

    def test_csv_header(self):
        trace = self.make_trace()
        assert trace.csv_text().splitlines()[0] == "k,residual,step,dist_to_ref,x_0,x_1"

    def test_json_fields(self):
        trace = self.make_trace()
        payload = trace.json_dict()
        assert payload["status"] == "Converged"
        assert payload["config"]["method"] == "raspc"
        row = payload["rows"][0]
        assert set(row) == {"k", "residual", "step", "dist_to_ref", "x"}
        assert json.loads(json.dumps(payload)) == payload

    def test_empty_dist_column_without_reference(self):
        V, rule = preset_dr(PLANE_A, PLANE_B30)
        trace = iterate(V, rule, StoppingRule(max_iters=3), [2.0, 1.0])
        line = trace.csv_text().splitlines()[1]
        assert line.split(",")[3] == ""

    def test_atomic_write(self, tmp_path):
        trace = self.make_trace()
        path = tmp_path / "sub" / "trace.csv"
        trace.write_csv(path)
        assert path.read_text() == trace.csv_text()
        assert not list(path.parent.glob("*.tmp"))

    def test_deterministic_repeat(self):
        assert self.make_trace().csv_text() == self.make_trace().csv_text()
