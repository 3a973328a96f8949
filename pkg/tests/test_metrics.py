import numpy as np
import pytest
from conftest import fixture_path
from icm.errors import DimensionError, FormatError
from icm.metrics import (EmbeddingSet, SimStats, cosine_sim, sim_stats, self_sim_stats,
                         summarize_similarities, write_stats_csv, read_stats_csv)

def test_cosine_sim():
    a = np.array([1.0, 2.0, -0.5])
    assert cosine_sim(a, a) == pytest.approx(1.0)
    assert cosine_sim(a, -a) == pytest.approx(-1.0)
    assert cosine_sim([1.0, 0.0], [0.0, 1.0]) == 0.0
    assert cosine_sim([0.0, 0.0], [1.0, 0.0]) == 0.0
    with pytest.raises(DimensionError):
        cosine_sim([1.0], [1.0, 0.0])

def test_single_identical_pair():
    v = EmbeddingSet('r', [[0.3, 0.4]])
    stats = sim_stats(v, EmbeddingSet('p', [[0.3, 0.4]]))
    assert stats.values() == pytest.approx((1.0, 1.0, 1.0, 1.0))

def test_hand_enumerated_stats():
    stats = summarize_similarities([0.2, 0.4, 0.6, 0.8], 'toy')
    assert stats.values() == pytest.approx((0.2, 0.8, 0.5, 0.5), abs=1e-12)
    assert stats.to_row() == ['toy', '0.200', '0.800', '0.500', '0.500']

def unit(angle):
    return [np.cos(angle), np.sin(angle)]

def test_sim_stats_over_full_multiset():
    results = EmbeddingSet('r', [unit(0.0), unit(np.pi/2)])
    profiles = EmbeddingSet('p', [unit(0.0), unit(np.pi/3)])
    stats = sim_stats(results, profiles)
    sims = sorted([1.0, 0.5, 0.0, np.cos(np.pi/6)])
    assert stats.min == pytest.approx(sims[0])
    assert stats.max == pytest.approx(sims[-1])
    assert stats.median == pytest.approx((sims[1]+sims[2])/2)
    assert stats.mean == pytest.approx(np.mean(sims))
    assert stats.method == 'r'

def test_stats_properties(rng):
    for _ in range(20):
        results = EmbeddingSet('r', rng.standard_normal((5, 8)))
        profiles = EmbeddingSet('p', rng.standard_normal((4, 8)))
        stats = sim_stats(results, profiles)
        assert stats.min <= stats.median <= stats.max
        assert stats.min <= stats.mean <= stats.max
        scaled = EmbeddingSet('r', results.vectors*rng.uniform(0.1, 10, size=(5, 1)))
        shuffled = EmbeddingSet('p', profiles.vectors[rng.permutation(4)])
        assert sim_stats(scaled, shuffled).values() == pytest.approx(stats.values(), abs=1e-6)

def test_self_sim_stats():
    profiles = EmbeddingSet('p', [unit(0.0), unit(np.pi/3), unit(np.pi/2)])
    stats = self_sim_stats(profiles)
    assert stats.method == 'Upper Bound'
    assert stats.min == pytest.approx(0.0, abs=1e-12)
    assert stats.max == pytest.approx(np.cos(np.pi/6))
    with pytest.raises(ValueError):
        self_sim_stats(EmbeddingSet('p', [unit(0.0)]))

def test_embedding_set_validation():
    with pytest.raises(DimensionError):
        EmbeddingSet('e', np.zeros((0, 3)))
    with pytest.raises(DimensionError):
        sim_stats(EmbeddingSet('a', [[1.0, 0.0]]), EmbeddingSet('b', [[1.0]]))
    with pytest.raises(ValueError):
        summarize_similarities([], 'none')

def test_table_fixture_roundtrip(tmp_path):
    rows = read_stats_csv(fixture_path('identity_similarity.csv'))
    by_method = {s.method: s for s in rows}
    assert by_method['Ours'].values() == (0.479, 0.674, 0.562, 0.565)
    assert by_method['Upper Bound'].values() == (0.504, 0.828, 0.655, 0.658)
    out = tmp_path/'table.csv'
    write_stats_csv(str(out), rows)
    with open(fixture_path('identity_similarity.csv'), 'rb') as fp:
        assert out.read_bytes() == fp.read()

def test_read_stats_rejects_bad_files(tmp_path):
    path = tmp_path/'bad.csv'
    path.write_text('Name,Min\nx,1\n')
    with pytest.raises(FormatError):
        read_stats_csv(str(path))
    path.write_text('Method,Min,Max,Median,Mean\nx,a,b,c,d\n')
    with pytest.raises(FormatError):
        read_stats_csv(str(path))

def test_sim_stats_repr():
    assert repr(SimStats('x', 0.1, 0.9, 0.5, 0.5)) == "SimStats('x', 0.100/0.900/0.500/0.500)"
