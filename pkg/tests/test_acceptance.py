"""Acceptance suite: one test per release criterion, each printing a
pass/fail line (run with -s to see them inline)."""

import math
import time

import numpy as np
import pytest

from stfl.cli import main
from stfl.datagen import centered_population_spec, default_population_spec, generate_dataset
from stfl.device import DeviceState, local_update, update_compensator
from stfl.harness import (
    ExperimentConfig,
    class_jacobians,
    config_to_dict,
    contraction_from_experiment,
    preset_fig2,
    preset_fig3,
    simulate,
    sweep_time_constant,
)
from stfl.lossmodel import QuadraticLoss, quadratic_gradient, quadratic_loss
from stfl.numerics import sym_eigen
from stfl.server import GlobalState, temporal_update
from stfl.theory import (
    capability_check,
    covariance_bound_check,
    make_class_theory,
    optimal_alpha,
    sigma_star,
)

CLASS_A = np.array([[1.0, 1.25], [1.25, 3.0]])
CLASS_B = np.array([[2.0, 1.75], [1.75, 2.0]])


def _verdict(name, fn):
    try:
        fn()
    except BaseException:
        print(f"\nACCEPTANCE {name}: FAIL")
        raise
    print(f"\nACCEPTANCE {name}: PASS")


@pytest.fixture(scope="module")
def fig2_traces():
    traces = {}
    start = time.perf_counter()
    for config in preset_fig2():
        traces[config.output_path] = simulate(config).trace
    traces["_runtime"] = time.perf_counter() - start
    return traces


def test_criterion_1_optimal_rate_reproduction():
    def run():
        # warm the code paths, then time the analytic computation alone
        make_class_theory(CLASS_A)
        start = time.perf_counter()
        for jac in (CLASS_A, CLASS_B):
            alpha, _ = optimal_alpha(make_class_theory(jac))
            assert alpha == 0.5
        elapsed = time.perf_counter() - start
        assert elapsed < 1e-3, f"took {elapsed * 1e3:.3f} ms"

    _verdict("1 (optimal rate 0.5, exact, <1ms)", run)


def test_criterion_2_capability_dichotomy(fig2_traces):
    def run():
        eps = {k: t.avg_error for k, t in fig2_traces.items() if k != "_runtime"}
        e5 = {k: a[4] for k, a in eps.items()}
        e200 = {k: a[199] for k, a in eps.items()}

        # (a) both high-outage configurations plateau
        assert e200["fig2_q0.9_a0.25"] > 0.2 * e5["fig2_q0.9_a0.25"]
        assert e200["fig2_q0.9_a0.5_nocomp"] > 0.2 * e5["fig2_q0.9_a0.5_nocomp"]
        # (b) disabling compensation at least doubles the plateau
        assert e200["fig2_q0.9_a0.5_nocomp"] >= 2.0 * e200["fig2_q0.9_a0.25"]
        # (c) both moderate-outage configurations converge hard
        assert e200["fig2_q0.2_a0.25"] < 0.02 * e5["fig2_q0.2_a0.25"]
        assert e200["fig2_q0.2_a0.5"] < 0.02 * e5["fig2_q0.2_a0.5"]
        # (d) the optimal step size crosses 1/e of the epoch-5 error first
        def crossing(key):
            a = eps[key]
            threshold = e5[key] / math.e
            hits = np.nonzero(a <= threshold)[0]
            return int(hits[0]) + 1 if hits.size else None

        fast = crossing("fig2_q0.2_a0.5")
        slow = crossing("fig2_q0.2_a0.25")
        assert fast is not None
        assert slow is None or fast < slow
        print(f"  [fig2 preset runtime {fig2_traces['_runtime']:.1f}s]", end="")

    _verdict("2 (capability dichotomy, four orderings)", run)


def test_criterion_3_time_constant_agreement():
    def run():
        start = time.perf_counter()
        base, _ = preset_fig3()
        grid = [0.0, 0.05, 0.10, 0.15, 0.20, 0.25]
        rows = sweep_time_constant(base, grid)
        elapsed = time.perf_counter() - start
        for row in rows:
            assert row.capable
            rel = abs(row.tau_measured - row.tau_analytic) / row.tau_analytic
            assert rel <= 0.15, f"q_delta={row.q_delta}: {rel:.1%}"
            slack = 0.02 * row.tau_analytic
            assert row.tau_analytic >= row.tau_measured - slack
        assert elapsed < 60.0, f"sweep took {elapsed:.1f}s"

    _verdict("3 (time constants within 15%, analytic >= measured)", run)


def test_criterion_4_theory_oracles():
    def run():
        # eigenvalues against the quadratic formula
        for jac, (b, c) in ((CLASS_A, (-4.0, 1.4375)), (CLASS_B, (-4.0, 0.9375))):
            disc = math.sqrt(b * b - 4.0 * c)
            expected = [(-b + disc) / 2.0, (-b - disc) / 2.0]
            np.testing.assert_allclose(sym_eigen(jac).eigenvalues, expected, rtol=1e-10)
        # contraction factors at the optimal step size
        assert abs(sigma_star(make_class_theory(CLASS_A)) - 0.800391) <= 1e-6
        assert abs(sigma_star(make_class_theory(CLASS_B)) - 0.875) <= 1e-6
        # capability boundary by bisection on the checker itself
        def capable_at(q_delta):
            classes = [make_class_theory(j, q_delta) for j in (CLASS_A, CLASS_B)]
            return capability_check(classes, [0.5, 0.5]).capable

        lo, hi = 0.0, 1.0
        assert capable_at(lo) and not capable_at(hi)
        while hi - lo > 1e-9:
            mid = 0.5 * (lo + hi)
            if capable_at(mid):
                lo = mid
            else:
                hi = mid
        boundary = 0.5 * (lo + hi)
        assert abs(boundary - ((1.0 / 0.875) ** 2 - 1.0)) <= 1e-6

    _verdict("4 (theory oracles and capability boundary)", run)


def test_criterion_5_equation_fidelity():
    def run():
        rng = np.random.default_rng(2024)

        # weighted-history accumulator: recursion vs direct sum, 1000 runs
        for _ in range(1000):
            omega = rng.uniform(0.0, 0.95)
            state = DeviceState(
                device_id=0,
                local_model=np.zeros(2),
                compensator=np.zeros(2),
                alpha=0.5,
                outage_prob=0.5,
                omega=omega,
            )
            inputs = []
            for _step in range(20):
                gamma = bool(rng.random() < 0.5)
                state.local_model = rng.normal(size=2)
                g = rng.normal(size=2)
                update_compensator(state, gamma, g if gamma else None)
                inputs.append(g if gamma else state.local_model.copy())
            direct = (1.0 - omega) * sum(
                omega ** (len(inputs) - i) * u for i, u in enumerate(inputs, start=1)
            )
            assert np.max(np.abs(state.compensator - direct)) <= 1e-12

        # harmonic-rate global model equals the running mean over 100 epochs
        gstate = GlobalState(
            global_model=np.zeros(2), num_selected=1, population_size=1,
            beta_schedule="harmonic",
        )
        estimates = rng.normal(size=(100, 2))
        for est in estimates:
            temporal_update(gstate, est)
        assert np.max(np.abs(gstate.global_model - estimates.mean(axis=0))) <= 1e-12

        # local step is exactly the shifted linear map around the target
        spec = default_population_spec()
        ds = generate_dataset(spec, 7, seed=1)
        jac = QuadraticLoss().jacobian(ds, spec.target_model)
        target = np.asarray(spec.target_model)
        state = DeviceState(
            device_id=7, local_model=np.zeros(2), compensator=np.zeros(2),
            alpha=0.4, outage_prob=0.0, omega=0.25, dataset=ds,
        )
        for _ in range(50):
            base = rng.normal(size=2)
            update_compensator(state, True, base)
            new = local_update(state, True, base, QuadraticLoss())
            expected = target + (np.eye(2) - 0.4 * jac) @ (base - target)
            assert np.max(np.abs(new - expected)) <= 1e-10

        # per-point gradient against central finite differences
        for _ in range(100):
            x = rng.normal(size=2)
            y = float(rng.normal())
            model = rng.normal(size=2)
            from stfl.datagen import DataPoint

            point = DataPoint(x, y)
            grad = quadratic_gradient(point, model)
            for k in range(2):
                h = 1e-6 * (1.0 + abs(model[k]))
                up, down = model.copy(), model.copy()
                up[k] += h
                down[k] -= h
                fd = (quadratic_loss(point, up) - quadratic_loss(point, down)) / (2 * h)
                assert abs(grad[k] - fd) <= 1e-6 * max(1.0, abs(fd))

    _verdict("5 (equation-fidelity oracles)", run)


def test_criterion_6_covariance_bound_witness():
    def run():
        from stfl.harness import simulate_contraction

        base, _ = preset_fig3()
        cfg = contraction_from_experiment(base, q=0.2, delta=1.0, devices=128, epochs=60)
        cfg.replicates = 200
        rec = simulate_contraction(cfg)
        delta_hat = rec.delta_hat.value
        assert not rec.delta_hat.unbounded
        for k, jac in enumerate(class_jacobians(base.population)):
            cls = make_class_theory(jac, q_delta=0.2 * delta_hat)
            alpha, _ = optimal_alpha(cls)
            result = covariance_bound_check(rec.probe_samples[k], cls, alpha)
            assert result.fraction_satisfied >= 0.95, (
                f"class {k}: {result.fraction_satisfied:.3f}"
            )

    _verdict("6 (trace contraction bound, >=95% of epochs)", run)


def test_criterion_7_worker_determinism(tmp_path):
    def run():
        import json

        spec = centered_population_spec()
        spec.population_size = 400
        config = ExperimentConfig(
            population=spec,
            num_selected=40,
            epochs=40,
            replicates=6,
            seed=11,
            alpha=0.5,
            q=0.3,
            beta_schedule="constant(0.5)",
        )
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(json.dumps(config_to_dict(config)), encoding="utf-8")
        outs = []
        for workers, name in ((1, "a.csv"), (3, "b.csv")):
            out = tmp_path / name
            code = main([
                "run", "--config", str(cfg_path), "--out", str(out),
                "--workers", str(workers),
            ])
            assert code == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    _verdict("7 (byte-identical traces across worker counts)", run)
