import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from warmstart.data import NEW, OLD, Dataset
from warmstart.sampling import (
    BatchSampler, LearningSpeedTable, SamplerSpec, easy_hard_order, easy_hard_weights,
    record_learning_speed, sample_batch,
)


def toy_dataset(n_old, n_new, dim=2):
    n = n_old + n_new
    origin = np.r_[np.full(n_old, OLD), np.full(n_new, NEW)]
    return Dataset(np.arange(n) + 1000, np.zeros((n, dim)), np.zeros(n, dtype=int), origin, 2)


def test_learning_speed_examples():
    correct = np.zeros((3, 10), dtype=int)
    correct[0, 2:] = 1  # correct in epochs 3..10
    correct[2] = 1
    table = record_learning_speed([5, 6, 7], correct)
    assert table == {5: 0.8, 6: 0.0, 7: 1.0}


def test_learning_speed_rejects_bad_input():
    with pytest.raises(ValueError):
        record_learning_speed([1], np.zeros((1, 0)))
    with pytest.raises(ValueError):
        record_learning_speed([1], [[2]])
    with pytest.raises(ValueError):
        LearningSpeedTable({})[1] = 1.5


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.integers(0, 1), min_size=6, max_size=6), min_size=1, max_size=20))
def test_learning_speed_range_and_monotone(rows):
    correct = np.array(rows)
    table = record_learning_speed(np.arange(len(rows)), correct)
    counts = correct.sum(1)
    for i, ls in table.items():
        assert 0.0 <= ls <= 1.0
        for j, other in table.items():
            if counts[i] < counts[j]:
                assert ls < other


def test_easy_hard_weights_defaults():
    rng = np.random.default_rng(0)
    table = LearningSpeedTable.from_arrays(np.arange(100), rng.permutation(100) / 100)
    w = easy_hard_weights(table, 0.2, 0.1)
    affected = [i for i, v in w.items() if v == 0.1]
    assert len(affected) == 20
    total = sum(w.values())
    assert total == pytest.approx(82.0)
    assert 0.1 / total == pytest.approx(0.1 / 82)
    ls = np.array([table[i] for i in affected])
    assert np.sum(ls >= 0.9) == 10 and np.sum(ls < 0.1) == 10


def test_easy_hard_tie_break_by_id():
    table = LearningSpeedTable.from_arrays([4, 3, 2, 1], [0.5, 0.5, 0.5, 0.5])
    assert easy_hard_order(table).tolist() == [1, 2, 3, 4]
    w = easy_hard_weights(table, 0.5, 0.0)
    assert w == {1: 0.0, 2: 1.0, 3: 1.0, 4: 0.0}


def test_easy_hard_r_one_is_uniform():
    table = LearningSpeedTable.from_arrays(np.arange(30), np.linspace(0, 1, 30))
    assert set(easy_hard_weights(table, 0.2, 1.0).values()) == {1.0}


def test_easy_hard_rejects_illegal():
    table = LearningSpeedTable.from_arrays([1], [0.5])
    with pytest.raises(ValueError):
        easy_hard_weights(table, 1.0, 0.1)
    with pytest.raises(ValueError):
        easy_hard_weights(table, 0.2, -0.1)


def test_r_zero_never_draws_affected():
    ds = toy_dataset(100, 40)
    table = LearningSpeedTable.from_arrays(ds.ids[:100], np.linspace(0, 1, 100))
    spec = SamplerSpec("easy_hard", 0.2, 0.0, table)
    w = easy_hard_weights(table, 0.2, 0.0)
    removed = {i for i, v in w.items() if v == 0.0}
    drawn = set(sample_batch(spec, ds, 200_000, np.random.default_rng(1)).tolist())
    assert not drawn & removed
    assert drawn == set(ds.ids.tolist()) - removed


def test_balanced_exact_halves():
    ds = toy_dataset(700, 300)
    sampler = BatchSampler(SamplerSpec("balanced_old_new"), ds)
    rng = np.random.default_rng(0)
    for n in (128, 7):
        idx = sampler.sample_index(n, rng)
        assert np.sum(ds.origin[idx] == OLD) == n // 2
        assert np.sum(ds.origin[idx] == NEW) == n - n // 2


def test_proportional_expected_old_new():
    ds = toy_dataset(700, 300)
    sampler = BatchSampler(SamplerSpec("proportional"), ds)
    idx = sampler.sample_index(128 * 10_000, np.random.default_rng(3)).reshape(10_000, 128)
    old_per_batch = (ds.origin[idx] == OLD).sum(1).mean()
    # multinomial sd of the mean: sqrt(128 * 0.7 * 0.3 / 1e4) ~ 0.052
    assert abs(old_per_batch - 89.6) < 4 * 0.052


def test_easy_hard_needs_complete_table():
    ds = toy_dataset(10, 5)
    table = LearningSpeedTable.from_arrays(ds.ids[:5], np.zeros(5))
    with pytest.raises(ValueError, match="misses"):
        BatchSampler(SamplerSpec("easy_hard", table=table), ds)
    with pytest.raises(ValueError):
        BatchSampler(SamplerSpec("easy_hard"), ds)


def test_new_samples_keep_unit_weight():
    ds = toy_dataset(50, 50)
    table = LearningSpeedTable.from_arrays(ds.ids[:50], np.linspace(0, 1, 50))
    sampler = BatchSampler(SamplerSpec("easy_hard", 0.2, 0.1, table), ds)
    p_new = sampler.probs[ds.origin == NEW]
    assert np.all(p_new == p_new[0])
    assert p_new[0] == pytest.approx(1 / (40 + 1.0 + 50))


def test_table_csv_roundtrip(tmp_path):
    table = LearningSpeedTable.from_arrays([3, 1, 2], [0.25, 1.0, 0.0])
    table.to_csv(tmp_path / "ls.csv")
    assert (tmp_path / "ls.csv").read_text().splitlines()[0] == "id,ls"
    assert LearningSpeedTable.from_csv(tmp_path / "ls.csv") == table


def test_sampling_is_seeded():
    ds = toy_dataset(30, 10)
    a = sample_batch(SamplerSpec(), ds, 50, np.random.default_rng(5))
    b = sample_batch(SamplerSpec(), ds, 50, np.random.default_rng(5))
    np.testing.assert_array_equal(a, b)
