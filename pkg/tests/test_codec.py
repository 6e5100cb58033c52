import numpy as np
import pytest

from qcmdpc.codec import DecodeFailure, decrypt, encode, encrypt, sample_error
from qcmdpc.gf2 import circulant_dense, syndrome
from qcmdpc.keygen import CodeParams, generate_keypair
from qcmdpc.minsum import DecoderConfig

from .conftest import TOY


def dense_h(sk):
    return np.concatenate([circulant_dense(s) for s in sk.supports], axis=1)


def dense_generator(pk):
    p = pk.params
    r = p.r
    blocks = [circulant_dense(b.support()).T for b in pk.b_cols]  # row i of block: x^i * b
    return np.concatenate([np.eye(p.k, dtype=np.uint8), np.concatenate(blocks, axis=0)], axis=1)


def test_generator_orthogonal_to_parity_check(toy_keys):
    sk, pk = toy_keys
    G = dense_generator(pk)
    assert not (G.astype(int) @ dense_h(sk).T.astype(int) % 2).any()


@pytest.mark.parametrize("n0", [2, 3, 4])
def test_encode_matches_dense_generator(n0, rng):
    p = CodeParams(n0, 17, 3, 2)
    sk, pk = generate_keypair(p, rng)
    G = dense_generator(pk)
    H = dense_h(sk)
    for _ in range(20):
        m = rng.integers(0, 2, p.k, dtype=np.uint8)
        c = encode(m, pk)
        assert np.array_equal(c, m.astype(int) @ G % 2)
        assert not syndrome(sk.supports, c).any()
        assert not (H.astype(int) @ c % 2).any()


def test_encode_linear(toy_keys, rng):
    _, pk = toy_keys
    a = rng.integers(0, 2, TOY.k, dtype=np.uint8)
    b = rng.integers(0, 2, TOY.k, dtype=np.uint8)
    assert np.array_equal(encode(a ^ b, pk), encode(a, pk) ^ encode(b, pk))


def test_sample_error_weight(rng):
    for t in (0, 1, 84):
        assert sample_error(9602, t, rng).sum() == t
    with pytest.raises(ValueError):
        sample_error(10, 11, rng)


def test_round_trip_full_size():
    p = CodeParams(2, 4801, 45, 84, L=2)
    rng = np.random.default_rng(11)
    sk, pk = generate_keypair(p, rng)
    for schedule in ("layered", "sliced"):
        m = rng.integers(0, 2, p.k, dtype=np.uint8)
        x = encrypt(m, pk, rng)
        assert np.array_equal(decrypt(x, sk, DecoderConfig(schedule=schedule)), m)


def test_heavy_error_raises_decode_failure():
    p = CodeParams(2, 4801, 45, 84)
    rng = np.random.default_rng(5)
    sk, pk = generate_keypair(p, rng)
    x = encrypt(np.zeros(p.k, np.uint8), pk, rng, t=p.r)
    with pytest.raises(DecodeFailure) as info:
        decrypt(x, sk, DecoderConfig(imax=5))
    assert info.value.iterations == 5 and info.value.syndrome_weight > 0


def test_bad_lengths(toy_keys):
    sk, pk = toy_keys
    with pytest.raises(ValueError):
        encode(np.zeros(3, np.uint8), pk)
    with pytest.raises(ValueError):
        decrypt(np.zeros(3, np.uint8), sk, DecoderConfig())
    with pytest.raises(ValueError):
        encode(np.full(TOY.k, 2), pk)
