import numpy as np
import pytest

from aeimpute.errors import ConfigError, NothingToImputeError, ShapeError
from aeimpute.impute import (
    ImputeConfig,
    RecordView,
    derive_seed,
    impute_dataset,
    impute_record,
    objective_for_record,
)
from aeimpute.missingness import MechanismSpec, inject
from aeimpute.net import TrainConfig, forward, init_network, reconstruction_loss, train
from aeimpute.optimize import GAConfig, GDConfig, PSOConfig
from oracles import as_triples, grid_minimum, sse, straight_line_forward

FAST = dict(ga=GAConfig(population=20, generations=30), pso=PSOConfig(swarm=15, iterations=40))


def zero_model(d=4):
    return init_network(d, [2], init_scale=0.0)


def substitute_then_forward(net, rec, u):
    x = rec.values.copy()
    x[rec.missing] = u
    return sse(x, straight_line_forward(as_triples(net), x))


@pytest.fixture(scope="module")
def copy_model():
    x = np.random.default_rng(0).uniform(0.05, 0.95, 400)
    model, history = train(np.stack([x, x], axis=1), TrainConfig(hidden_sizes=[3, 1], epochs=400, seed=0))
    assert history[-1] < 1e-3
    return model


# ---- RecordView

def test_record_view_uses_placeholder():
    rec = RecordView([0.2, np.nan, 0.9], [1])
    assert rec.values[1] == 0.5
    assert list(rec.known) == [0, 2]


def test_record_view_rejects_bad_index():
    with pytest.raises(ShapeError):
        RecordView([0.1, 0.2], [2])


# ---- objective_for_record

def test_objective_all_missing_is_plain_reconstruction_error(trained, rng):
    model, _ = trained
    obj = objective_for_record(model, RecordView(np.zeros(7), range(7)))
    u = rng.random(7)
    assert obj(u) == pytest.approx(reconstruction_loss(u, forward(model, u).output), abs=1e-12)
    assert obj.arity == 7


def test_objective_zero_model_is_analytic(rng):
    rec = RecordView([0.1, 0.0, 0.8, 0.0], [1, 3])
    obj = objective_for_record(zero_model(), rec)
    u = rng.random(2)
    expected = (0.1 - 0.5) ** 2 + (0.8 - 0.5) ** 2 + np.sum((u - 0.5) ** 2)
    assert obj(u) == pytest.approx(expected, abs=1e-15)
    assert obj(np.array([0.5, 0.5])) < obj(u)


def test_objective_matches_independent_recomputation(trained, rng):
    model, _ = trained
    for _ in range(10):
        missing = rng.choice(7, size=rng.integers(1, 7), replace=False)
        rec = RecordView(rng.random(7), missing)
        obj = objective_for_record(model, rec)
        U = rng.random((4, missing.size))
        batch = obj.evaluate_many(U)
        for u, b in zip(U, batch):
            ref = substitute_then_forward(model, rec, u)
            assert abs(obj(u) - ref) < 1e-12
            assert abs(b - ref) < 1e-12


def test_objective_bounds_are_unit_box(trained):
    obj = objective_for_record(trained[0], RecordView(np.zeros(7), [2, 5]))
    assert np.array_equal(obj.lower, [0, 0]) and np.array_equal(obj.upper, [1, 1])


def test_objective_rejects_empty_missing(trained):
    with pytest.raises(NothingToImputeError):
        objective_for_record(trained[0], RecordView(np.zeros(7), []))


def test_objective_rejects_width_mismatch(trained):
    with pytest.raises(ShapeError):
        objective_for_record(trained[0], RecordView(np.zeros(5), [0]))


# ---- impute_record

def test_constructed_dependency_recovered(copy_model):
    res = impute_record(copy_model, RecordView([0.7, np.nan], [1]), ImputeConfig(seed=1))
    assert abs(res.filled[1] - 0.7) < 0.05
    assert res.filled[0] == 0.7


@pytest.mark.parametrize("optimizer", ["ga", "pso", "mle"])
def test_zero_model_single_slot_hits_analytic_minimum(optimizer):
    rec = RecordView([0.1, 0.3, np.nan, 0.9], [2])
    res = impute_record(zero_model(), rec, ImputeConfig(optimizer=optimizer, seed=3))
    assert abs(res.filled[2] - 0.5) < 1e-3


@pytest.mark.parametrize("optimizer", ["ga", "pso", "mle"])
def test_single_slot_beats_grid_search(trained, rng, optimizer):
    model, _ = trained
    for i in range(5):
        slot = int(rng.integers(7))
        rec = RecordView(rng.random(7), [slot])
        res = impute_record(model, rec, ImputeConfig(optimizer=optimizer, seed=i), record_index=i)
        assert res.objective <= grid_minimum(objective_for_record(model, rec)) + 1e-3


@pytest.mark.parametrize("optimizer", ["ga", "pso", "mle"])
def test_clamping_and_objective_consistency(trained, rng, optimizer):
    model, _ = trained
    rec = RecordView(rng.random(7), [0, 4])
    res = impute_record(model, rec, ImputeConfig(optimizer=optimizer, seed=2, **FAST))
    known = rec.known
    assert np.array_equal(res.filled[known], rec.values[known])
    direct = reconstruction_loss(res.filled, forward(model, res.filled).output)
    assert abs(res.objective - direct) < 1e-12


def test_retry_loop_reports_minimum_over_attempts(trained, rng):
    model, _ = trained
    rec = RecordView(rng.random(7), [1, 2, 3])
    # unattainable threshold forces every restart
    cfg = ImputeConfig(restarts=4, accept_threshold=1e-300, seed=5, **FAST)
    res = impute_record(model, rec, cfg)
    assert res.attempts == 4
    assert not res.accepted
    assert res.objective == min(res.attempt_objectives)


def test_accepted_attempt_stops_the_loop(trained, rng):
    model, _ = trained
    cfg = ImputeConfig(restarts=5, accept_threshold=1e6, seed=5, **FAST)
    res = impute_record(model, RecordView(rng.random(7), [3]), cfg)
    assert res.attempts == 1 and res.accepted


def test_default_threshold_from_model(trained):
    model, history = trained
    assert ImputeConfig().threshold_for(model) == 2 * history[-1]
    assert ImputeConfig().threshold_for(zero_model()) == float("inf")
    assert ImputeConfig(accept_threshold=0.3).threshold_for(model) == 0.3


def test_impute_config_validation():
    with pytest.raises(ConfigError):
        ImputeConfig(optimizer="sa")
    with pytest.raises(ConfigError):
        ImputeConfig(restarts=0)
    with pytest.raises(ConfigError):
        ImputeConfig(accept_threshold=0.0)


def test_derived_seeds_are_distinct_and_stable():
    seeds = {derive_seed(9, r, a) for r in range(20) for a in range(3)}
    assert len(seeds) == 60
    assert derive_seed(9, 4, 1) == derive_seed(9, 4, 1)


# ---- impute_dataset

def test_all_observed_passes_through(trained, synth):
    data = synth[:10]
    out, results = impute_dataset(trained[0], data, np.zeros_like(data, bool))
    assert results == []
    assert np.array_equal(out, data)


def test_single_missing_cell_leaves_other_records_untouched(trained, synth):
    data = synth[:12].copy()
    mask = np.zeros_like(data, bool)
    mask[4, 2] = True
    data[4, 2] = np.nan
    out, results = impute_dataset(trained[0], data, mask, ImputeConfig(**FAST))
    assert len(results) == 1 and results[0].index == 4
    others = np.arange(12) != 4
    assert np.array_equal(out[others], data[others])
    assert np.array_equal(out[4, ~mask[4]], data[4, ~mask[4]])
    assert np.isfinite(out[4, 2])


def test_shape_mismatch(trained, synth):
    with pytest.raises(ShapeError):
        impute_dataset(trained[0], synth[:5], np.zeros((5, 6), bool))


def test_worker_count_does_not_change_output(trained, synth):
    masked, mask = inject(synth[:100], MechanismSpec("MCAR", rate=0.2), seed=1)
    cfg = ImputeConfig(seed=77, **FAST)
    one, _ = impute_dataset(trained[0], masked, mask, cfg, workers=1)
    eight, _ = impute_dataset(trained[0], masked, mask, cfg, workers=8)
    assert np.array_equal(one, eight)


def test_record_order_does_not_change_output(trained, synth):
    masked, mask = inject(synth[:30], MechanismSpec("MCAR", rate=0.2), seed=2)
    cfg = ImputeConfig(optimizer="pso", seed=3, **FAST)
    full, _ = impute_dataset(trained[0], masked, mask, cfg)
    for i in reversed(range(30)):
        if mask[i].any():
            res = impute_record(trained[0], RecordView.from_row(masked[i], mask[i]), cfg, i)
            assert np.array_equal(res.filled, full[i])
