"""McEliece encryption and decryption on top of the QC-MDPC code."""

from __future__ import annotations

import numpy as np

from .gf2 import _clmul, _fold, bits_to_int, int_to_bits
from .keygen import PrivateKey, PublicKey
from .minsum import DecoderConfig, decode


class DecodeFailure(Exception):
    """The decoder exhausted its iteration budget without reaching a codeword."""

    def __init__(self, iterations: int, syndrome_weight: int):
        super().__init__(f"decoding failed after {iterations} iterations "
                         f"(syndrome weight {syndrome_weight})")
        self.iterations = iterations
        self.syndrome_weight = syndrome_weight


def _as_bits(v, n: int, what: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.uint8)
    if v.shape != (n,):
        raise ValueError(f"{what} must have length {n}, got shape {v.shape}")
    if v.size and v.max() > 1:
        raise ValueError(f"{what} must contain only 0/1")
    return v


def encode(m, pk: PublicKey) -> np.ndarray:
    """Systematic codeword m [I | B^T]: the message followed by sum_i b_i * m_i."""
    p = pk.params
    m = _as_bits(m, p.k, "plaintext")
    r = p.r
    acc = 0
    for i, b in enumerate(pk.b_cols):
        mi = bits_to_int(m[i * r:(i + 1) * r])
        if mi:
            acc ^= _clmul(b.value, mi)
    return np.concatenate([m, int_to_bits(_fold(acc, r), r)])


def sample_error(n: int, t: int, rng: np.random.Generator) -> np.ndarray:
    if not 0 <= t <= n:
        raise ValueError(f"error weight {t} outside [0, {n}]")
    e = np.zeros(n, dtype=np.uint8)
    e[rng.choice(n, size=t, replace=False)] = 1
    return e


def encrypt(m, pk: PublicKey, rng: np.random.Generator, t: int | None = None) -> np.ndarray:
    p = pk.params
    t = p.t if t is None else t
    return encode(m, pk) ^ sample_error(p.n, t, rng)


def decrypt(x, sk: PrivateKey, cfg: DecoderConfig) -> np.ndarray:
    """Recover the plaintext, raising DecodeFailure if the decoder gives up."""
    p = sk.params
    x = _as_bits(x, p.n, "ciphertext")
    out = decode(x, sk, cfg)
    if not out.success:
        raise DecodeFailure(out.iterations, out.final_syndrome_weight)
    return out.codeword[:p.k].copy()
