import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from aeimpute import datasets
from aeimpute.errors import ConfigError, NumericError
from aeimpute.missingness import (
    MechanismSpec,
    PatternSpec,
    close_monotone,
    inject,
    missing_rate,
    sample_mcar,
    validate_monotone,
)
from aeimpute.tabular import load_csv
from oracles import point_biserial


@pytest.fixture(scope="module")
def table1_mask():
    return load_csv(datasets.table1_path()).mask


def brute_monotone(mask, order):
    for row in mask:
        for pos, j in enumerate(order):
            if not row[j] and any(row[k] for k in order[:pos]):
                return False
    return True


# ---- validate_monotone / missing_rate on the sample table

def test_table1_monotone_rows_pass(table1_mask):
    assert validate_monotone(table1_mask[5:9])


def test_table1_arbitrary_rows_fail(table1_mask):
    assert not validate_monotone(table1_mask[0:5])
    assert not validate_monotone(table1_mask[0:1])


def test_table1_monotone_staircase(table1_mask):
    sets = [set(np.flatnonzero(r)) for r in table1_mask[5:9]]
    assert sets == [{6}, {5, 6}, {4, 5, 6}, {3, 4, 5, 6}]


def test_table1_missing_rate(table1_mask):
    assert table1_mask.shape == (9, 7)
    assert table1_mask.sum() == 18
    assert missing_rate(table1_mask) == pytest.approx(18 / 63)


def test_all_observed_is_monotone_for_every_order(rng):
    mask = np.zeros((4, 5), dtype=bool)
    for _ in range(10):
        assert validate_monotone(mask, rng.permutation(5))


def test_missing_rate_extremes():
    assert missing_rate(np.zeros((3, 3), bool)) == 0.0
    assert missing_rate(np.ones((3, 3), bool)) == 1.0


def test_validate_monotone_rejects_bad_order():
    with pytest.raises(ConfigError):
        validate_monotone(np.zeros((2, 3), bool), [0, 0, 1])


@settings(max_examples=1000, deadline=None)
@given(
    mask=arrays(bool, st.tuples(st.integers(1, 6), st.integers(1, 5))),
    data=st.data(),
)
def test_validate_monotone_agrees_with_brute_force(mask, data):
    order = data.draw(st.permutations(range(mask.shape[1])))
    assert validate_monotone(mask, order) == brute_monotone(mask, list(order))
    assert validate_monotone(close_monotone(mask, order), order)


# ---- inject

@pytest.fixture(scope="module")
def big():
    return datasets.correlated(10_000, seed=5)


def test_mcar_tiny_rate_gives_empty_mask():
    data = datasets.correlated(9, seed=0)
    _, mask = inject(data, MechanismSpec("MCAR", rate=1e-12), seed=1)
    assert not mask.any()


def test_mcar_zero_rate_hook():
    assert not sample_mcar((9, 7), 0.0, np.random.default_rng(0)).any()


def test_mcar_rejects_closed_endpoints():
    with pytest.raises(ConfigError):
        MechanismSpec("MCAR", rate=0.0)


def test_mcar_rate_in_binomial_interval(big):
    # 70,000 cells at p=0.3: sd ~ 0.0017, the +-0.02 band is > 10 sd
    _, mask = inject(big, MechanismSpec("MCAR", rate=0.3), seed=3)
    assert 0.28 <= missing_rate(mask) <= 0.32


def test_mcar_missingness_independent_of_other_features(big):
    _, mask = inject(big, MechanismSpec("MCAR", rate=0.3), seed=4)
    for j in range(7):
        for k in range(7):
            if j != k:
                assert abs(point_biserial(mask[:, j], big[:, k])) < 0.05


def test_mar_driver_dependence(big):
    mech = MechanismSpec("MAR", targets=[1], intercept=-2.5, slopes=[5.0], drivers=[0])
    _, mask = inject(big[:5000], mech, seed=6)
    assert point_biserial(mask[:, 1], big[:5000, 0]) > 0.2
    assert not mask[:, 0].any()


def test_mnar_top_quartile_more_missing(big):
    mech = MechanismSpec("MNAR", targets=[1], intercept=-2.5, slopes=[5.0])
    data = big[:5000]
    _, mask = inject(data, mech, seed=7)
    x = data[:, 1]
    lo, hi = np.quantile(x, [0.25, 0.75])
    assert mask[x >= hi, 1].mean() > mask[x <= lo, 1].mean()


def test_monotone_pattern_output_passes(big):
    pattern = PatternSpec("monotone", order=[6, 5, 4, 3, 2, 1, 0])
    _, mask = inject(big[:2000], MechanismSpec("MCAR", rate=0.1), pattern, seed=2)
    assert validate_monotone(mask, pattern.order)
    assert mask.any()


def test_inject_leaves_source_untouched_and_marks_nan(big):
    data = big[:100].copy()
    masked, mask = inject(data, MechanismSpec("MCAR", rate=0.2), seed=8)
    assert np.array_equal(data, big[:100])
    assert np.array_equal(np.isnan(masked), mask)
    assert np.array_equal(masked[~mask], data[~mask])


def test_inject_is_deterministic(big):
    mech = MechanismSpec("MAR", intercept=-1.0, slopes=[3.0], drivers=[2])
    a = inject(big[:500], mech, PatternSpec("monotone"), seed=42)[1]
    b = inject(big[:500], mech, PatternSpec("monotone"), seed=42)[1]
    assert np.array_equal(a, b)


def test_mar_without_drivers_rejected():
    with pytest.raises(ConfigError):
        MechanismSpec("MAR", slopes=[])


def test_mar_driver_overlap_rejected():
    with pytest.raises(ConfigError):
        MechanismSpec("MAR", targets=[0, 1], slopes=[1.0], drivers=[1])


def test_mnar_with_drivers_rejected():
    with pytest.raises(ConfigError):
        MechanismSpec("MNAR", slopes=[1.0], drivers=[0])


def test_monotone_order_must_be_permutation():
    with pytest.raises(ConfigError):
        inject(np.zeros((3, 3)), MechanismSpec(), PatternSpec("monotone", order=[0, 1]), seed=0)


def test_inject_rejects_incomplete_input():
    data = np.zeros((3, 3))
    data[0, 0] = np.nan
    with pytest.raises(NumericError):
        inject(data, MechanismSpec(), seed=0)
