import io
import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from playerprice.dataio import PriceLadder, normalize_features
from playerprice.netcore import (Network, NetworkConfig, forward, init_network,
                                 predict_class)
from playerprice.persist import (BadMagicError, ModelBundle, ModelFormatError,
                                 TruncatedModelError, UnsupportedVersionError, dumps,
                                 encoded_size, load_model, loads, predict_price,
                                 save_model, save_model_file, load_model_file)

from helpers import random_net


def bundle_for(net):
    return ModelBundle(net, PriceLadder.geometric(net.layer_sizes[-1]))


def test_header_bookkeeping():
    net = random_net((2, 3, 2), 0, "tanh")
    data = dumps(bundle_for(net))
    assert data[:4] == b"FPM1"
    version, L, *dims = struct.unpack("<5I", data[4:24])
    assert (version, L, dims) == (1, 2, [2, 3, 2])
    assert list(data[24:26]) == [1, 3]
    ladder_off = 26 + 8 * (3 * 2 + 3 + 2 * 3 + 2)
    assert struct.unpack("<I", data[ladder_off:ladder_off + 4]) == (2,)


def test_closed_form_size():
    for sizes in [(2, 3, 2), (41, 16, 8, 10), (41, 119)]:
        net = random_net(sizes, 1)
        n_w = sum(W.size for W in net.weights)
        n_b = sum(b.size for b in net.biases)
        L = len(sizes) - 1
        header = 4 + 4 + 4 + 4 * (L + 1) + L + 4
        expected = header + 8 * (n_w + n_b + sizes[-1] + 2 * 41)
        buf = io.BytesIO()
        assert save_model(bundle_for(net), buf) == expected == len(buf.getvalue())
        assert encoded_size(sizes, sizes[-1]) == expected


def test_save_deterministic():
    b = bundle_for(random_net((41, 8, 5), 3))
    assert dumps(b) == dumps(b)


@given(st.integers(0, 10_000), st.sampled_from(["relu", "tanh", "sigmoid"]))
def test_round_trip_bit_exact(seed, act):
    net = random_net((41, 7, 6, 5), seed, act)
    b = bundle_for(net)
    back = load_model(io.BytesIO(dumps(b)))
    assert back.network.activations == net.activations
    assert back.ladder == b.ladder and back.norm == b.norm
    for p, q in zip(net.params(), back.network.params()):
        assert p.tobytes() == q.tobytes()
    X = np.random.default_rng(seed).random((10, 41))
    assert forward(net, X).probs.tobytes() == forward(back.network, X).probs.tobytes()


def test_atomic_file_round_trip(tmp_path):
    b = bundle_for(random_net((41, 5, 4), 2))
    path = tmp_path / "m.fpm"
    n = save_model_file(b, path)
    assert path.stat().st_size == n
    assert dumps(load_model_file(path)) == dumps(b)
    assert [p.name for p in tmp_path.iterdir()] == ["m.fpm"]


def test_bad_magic():
    data = b"XXXX" + dumps(bundle_for(random_net((41, 3), 0)))[4:]
    with pytest.raises(BadMagicError):
        loads(data)


def test_bad_version():
    data = bytearray(dumps(bundle_for(random_net((41, 3), 0))))
    data[4:8] = struct.pack("<I", 2)
    with pytest.raises(UnsupportedVersionError):
        loads(bytes(data))


def test_truncated_mid_weights_reports_counts():
    data = dumps(bundle_for(random_net((41, 3, 2), 0)))
    cut = 4 + 4 + 4 + 12 + 2 + 8 * 50
    with pytest.raises(TruncatedModelError, match=r"expected 984 bytes at offset 26, only 400"):
        loads(data[:cut])
    for n in (0, 3, 10, len(data) - 1):
        with pytest.raises(TruncatedModelError):
            loads(data[:n])


def test_distinct_error_types():
    good = dumps(bundle_for(random_net((41, 3), 0)))
    errors = set()
    for bad in (b"XXXX" + good[4:], good[:-8]):
        with pytest.raises(ModelFormatError) as info:
            loads(bad)
        errors.add(type(info.value))
    assert errors == {BadMagicError, TruncatedModelError}


def test_dimension_inconsistency():
    data = bytearray(dumps(bundle_for(random_net((41, 3), 0))))
    off = 4 + 4 + 4 + 8 + 1 + 8 * (3 * 41 + 3)
    data[off:off + 4] = struct.pack("<I", 4)
    with pytest.raises(ModelFormatError, match="ladder length 4"):
        loads(bytes(data))


def test_non_increasing_ladder():
    data = bytearray(dumps(bundle_for(random_net((41, 3), 0))))
    off = 4 + 4 + 4 + 8 + 1 + 8 * (3 * 41 + 3) + 4
    data[off + 8:off + 16] = struct.pack("<d", 1.0)
    with pytest.raises(ModelFormatError, match="strictly increasing"):
        loads(bytes(data))


def test_bad_activation_layout():
    data = bytearray(dumps(bundle_for(random_net((41, 4, 3), 0))))
    data[24] = 3   # hidden layer marked softmax
    with pytest.raises(ModelFormatError):
        loads(bytes(data))


def test_bundle_requires_matching_ladder():
    with pytest.raises(ModelFormatError):
        ModelBundle(random_net((41, 3), 0), PriceLadder.geometric(4))


def zero_bundle(C=119):
    net = init_network(NetworkConfig((41, 8, C)))
    return bundle_for(net.with_params([np.zeros_like(p) for p in net.params()]))


def test_predict_zero_net_lowest_price():
    x = np.full(41, 3.0)
    x[37] = 20.0
    pred = predict_price(zero_bundle(), x)
    assert pred.index == 0 and pred.price == 43_000
    assert [c for c, _, _ in pred.window] == [0, 1, 2]


def test_predict_window_interior(rng):
    b = bundle_for(random_net((41, 6, 12), 4, bias_scale=0.0))
    bias = np.zeros(12)
    bias[6] = 5.0
    b.network.biases[-1] = bias
    x = rng.uniform(1, 5, 41)
    x[37] = 20.0
    pred = predict_price(b, x)
    assert pred.index == 6
    assert [c for c, _, _ in pred.window] == [4, 5, 6, 7, 8]
    assert [p for _, p, _ in pred.window] == list(b.ladder.prices[4:9])


def test_predict_wrong_width():
    with pytest.raises(ValueError, match="expected 41"):
        predict_price(zero_bundle(), np.ones(40))


@given(st.integers(0, 1000))
def test_predict_consistency(seed):
    rng = np.random.default_rng(seed)
    b = bundle_for(random_net((41, 10, 119), seed, bias_scale=1.0))
    x = np.concatenate([rng.uniform(0, 99, 37), [rng.uniform(16, 43)], rng.uniform(1, 5, 3)])
    pred = predict_price(b, x)
    assert pred.index == predict_class(b.network, normalize_features(x[None, :])[0])
    assert pred.price == b.ladder.prices[pred.index]
    assert abs(pred.probs.sum() - 1) < 1e-12
    assert all(0 < p < 1 for _, _, p in pred.window)
