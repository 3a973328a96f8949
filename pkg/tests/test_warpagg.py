import itertools
import numpy as np
import pytest
from conftest import random_grid
from icm.errors import DimensionError
from icm.matching import FeatureGrid, FeaturePyramid, FlowField, cost_volume, argmax_flow
from icm.warpagg import (AnnealConfig, anneal_weights, flat_weights, warp_nearest,
                         aggregate_residual, transfer_features)

def test_anneal_weights_fixture():
    assert anneal_weights(AnnealConfig(4, 1.0, 0.0)) == [1.0, 0.75, 0.5, 0.25]

def test_anneal_weights_properties(rng):
    for _ in range(100):
        levels = int(rng.integers(1, 10))
        alpha = float(rng.uniform(0.01, 3))
        beta = float(rng.uniform(0, 2))
        weights = anneal_weights(AnnealConfig(levels, alpha, beta))
        assert len(weights) == levels
        assert weights[0] == pytest.approx(alpha+beta)
        assert all(a > b for a, b in zip(weights, weights[1:]))
    assert anneal_weights(AnnealConfig(3, 0.0, 0.4)) == [0.4, 0.4, 0.4]

@pytest.mark.parametrize('args', [(0, 1, 0), (2, -1, 0), (2, 1, -0.5)])
def test_anneal_config_rejects(args):
    with pytest.raises(ValueError):
        AnnealConfig(*args)

def test_flat_weights():
    assert flat_weights(3, 0.5) == [0.5, 0.5, 0.5]

def test_warp_zero_flow_is_identity(rng):
    feat = random_grid(rng, 4, 5, 3)
    assert np.array_equal(warp_nearest(feat, FlowField.zeros(4, 5)).data, feat.data)

def test_warp_shift_clamps():
    feat = FeatureGrid(np.array([[[1.0], [2.0], [3.0], [4.0]]]))
    flow = FlowField(np.tile([1, 0], (1, 4, 1)))
    assert warp_nearest(feat, flow).data[0, :, 0].tolist() == [2.0, 3.0, 4.0, 4.0]

def test_warp_exhaustive_offsets_stay_inside():
    feat = FeatureGrid(np.arange(9, dtype=np.float32).reshape(3, 3, 1))
    for dx, dy in itertools.product(range(-4, 5), repeat=2):
        flow = FlowField(np.tile([dx, dy], (3, 3, 1)))
        out = warp_nearest(feat, flow).data[:, :, 0]
        for r, c in itertools.product(range(3), repeat=2):
            tr = min(max(r+dy, 0), 2)
            tc = min(max(c+dx, 0), 2)
            assert out[r, c] == 3*tr+tc

def test_warp_by_self_flow(rng):
    feat = random_grid(rng, 4, 4, 6)
    flow = argmax_flow(cost_volume(feat, feat))
    assert np.array_equal(warp_nearest(feat, flow).data, feat.data)

def test_warp_dims():
    with pytest.raises(DimensionError):
        warp_nearest(FeatureGrid(np.ones((2, 2, 1))), FlowField.zeros(2, 3))

def pyramid(rng, shapes):
    return FeaturePyramid(random_grid(rng, *shape) for shape in shapes)

def test_aggregate_residual_identities(rng):
    shapes = [(4, 4, 2), (2, 2, 2)]
    lighting = pyramid(rng, shapes)
    warped = pyramid(rng, shapes)
    out = aggregate_residual(lighting, warped, [0.0, 0.0])
    assert all(np.array_equal(o.data, l.data) for o, l in zip(out, lighting))
    zeros = FeaturePyramid(FeatureGrid(np.zeros(s)) for s in shapes)
    out = aggregate_residual(lighting, zeros, [1.0, 0.5])
    assert all(np.array_equal(o.data, l.data) for o, l in zip(out, lighting))

def test_aggregate_residual_arithmetic():
    out = aggregate_residual([FeatureGrid([[[2.0]]])], [FeatureGrid([[[3.0]]])], [0.5])
    assert out[0].data[0, 0, 0] == 3.5

def test_aggregate_residual_is_linear(rng):
    lighting = pyramid(rng, [(3, 3, 2)])
    warped = pyramid(rng, [(3, 3, 2)])
    doubled = FeaturePyramid(FeatureGrid(g.data*2) for g in warped)
    base = aggregate_residual(lighting, warped, [0.75])[0].data-lighting[0].data
    twice = aggregate_residual(lighting, doubled, [0.75])[0].data-lighting[0].data
    assert np.allclose(twice, 2*base, atol=1e-6)

def test_aggregate_residual_mismatch(rng):
    lighting = pyramid(rng, [(3, 3, 2), (1, 1, 2)])
    with pytest.raises(DimensionError):
        aggregate_residual(lighting, lighting, [1.0])
    with pytest.raises(DimensionError):
        aggregate_residual(lighting, pyramid(rng, [(3, 3, 2), (1, 1, 3)]), [1.0, 1.0])

def test_transfer_features(rng):
    shapes = [(4, 4, 2), (2, 2, 2)]
    lighting = pyramid(rng, shapes)
    profile = pyramid(rng, shapes)
    flows = [FlowField.zeros(4, 4), FlowField.zeros(2, 2)]
    out = transfer_features(lighting, profile, flows, anneal_weights(AnnealConfig(2)))
    assert np.allclose(out[0].data, lighting[0].data+profile[0].data)
    assert np.allclose(out[1].data, lighting[1].data+0.5*profile[1].data)
