"""Flat-file formats for keys, ciphertexts and plaintexts.

Keys are JSON objects.  Bit vectors (ciphertexts, plaintexts, public key
blocks) are hex strings of LSB-first packed bytes: bit j sits at bit j % 8
of byte j // 8.  Bit-vector files carry a two-line header::

    qcmdpc-ciphertext v1
    bits 9602
    <hex>
"""

from __future__ import annotations

import json

import numpy as np

from .gf2 import GF2Poly, SparseSupport, bits_to_int
from .keygen import CodeParams, PrivateKey, PublicKey

PRIVATE_TAG = "qcmdpc-private-key"
PUBLIC_TAG = "qcmdpc-public-key"
VERSION = 1


class FormatError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def bits_to_hex(bits) -> str:
    bits = np.asarray(bits, dtype=np.uint8)
    return np.packbits(bits, bitorder="little").tobytes().hex()


def hex_to_bits(text: str, n: int, field: str = "payload") -> np.ndarray:
    try:
        raw = bytes.fromhex(text.strip())
    except ValueError as exc:
        raise FormatError(field, f"not valid hex ({exc})") from None
    if len(raw) != (n + 7) // 8:
        raise FormatError(field, f"expected {(n + 7) // 8} bytes for {n} bits, found {len(raw)}")
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
    if bits[n:].any():
        raise FormatError(field, "nonzero padding bits beyond the declared length")
    return bits[:n].copy()


def _params_dict(p: CodeParams) -> dict:
    return {"n0": p.n0, "r": p.r, "w": p.w, "t": p.t, "L": p.L}


def serialize_key(key: PrivateKey | PublicKey) -> str:
    if isinstance(key, PrivateKey):
        doc = {"type": PRIVATE_TAG, "version": VERSION, **_params_dict(key.params),
               "supports": [list(s.indices) for s in key.supports]}
    elif isinstance(key, PublicKey):
        doc = {"type": PUBLIC_TAG, "version": VERSION, **_params_dict(key.params),
               "b_cols": [bits_to_hex(b.bits()) for b in key.b_cols]}
    else:
        raise TypeError(f"cannot serialize {type(key).__name__}")
    return json.dumps(doc, indent=1) + "\n"


def _field(doc: dict, name: str, kind):
    if name not in doc:
        raise FormatError(name, "missing")
    v = doc[name]
    if not isinstance(v, kind) or isinstance(v, bool):
        raise FormatError(name, f"expected {getattr(kind, '__name__', kind)}, got {type(v).__name__}")
    return v


def deserialize_key(text: str) -> PrivateKey | PublicKey:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError("document", f"not valid JSON ({exc.msg} at offset {exc.pos})") from None
    if not isinstance(doc, dict):
        raise FormatError("document", "expected a JSON object")
    tag = _field(doc, "type", str)
    if _field(doc, "version", int) != VERSION:
        raise FormatError("version", f"unsupported version {doc['version']}")
    vals = {k: _field(doc, k, int) for k in ("n0", "r", "w", "t", "L")}
    try:
        params = CodeParams(**vals)
    except ValueError as exc:
        raise FormatError("params", str(exc)) from None
    if tag == PRIVATE_TAG:
        sups = _field(doc, "supports", list)
        if len(sups) != params.n0:
            raise FormatError("supports", f"expected {params.n0} index arrays, found {len(sups)}")
        out = []
        for i, s in enumerate(sups):
            if not isinstance(s, list) or not all(isinstance(v, int) for v in s):
                raise FormatError(f"supports[{i}]", "expected a list of integers")
            try:
                out.append(SparseSupport(params.r, tuple(s)))
            except ValueError as exc:
                raise FormatError(f"supports[{i}]", str(exc)) from None
        try:
            return PrivateKey(params, tuple(out))
        except ValueError as exc:
            raise FormatError("supports", str(exc)) from None
    if tag == PUBLIC_TAG:
        cols = _field(doc, "b_cols", list)
        if len(cols) != params.n0 - 1:
            raise FormatError("b_cols", f"expected {params.n0 - 1} blocks, found {len(cols)}")
        blocks = []
        for i, h in enumerate(cols):
            if not isinstance(h, str):
                raise FormatError(f"b_cols[{i}]", "expected a hex string")
            blocks.append(GF2Poly(params.r, bits_to_int(hex_to_bits(h, params.r, f"b_cols[{i}]"))))
        return PublicKey(params, tuple(blocks))
    raise FormatError("type", f"unknown key type {tag!r}")


def serialize_bits(bits, kind: str = "ciphertext") -> str:
    bits = np.asarray(bits, dtype=np.uint8)
    return f"qcmdpc-{kind} v{VERSION}\nbits {len(bits)}\n{bits_to_hex(bits)}\n"


def deserialize_bits(text: str, kind: str = "ciphertext") -> np.ndarray:
    lines = text.splitlines()
    if len(lines) < 3:
        raise FormatError("document", f"expected 3 lines, found {len(lines)}")
    if lines[0].strip() != f"qcmdpc-{kind} v{VERSION}":
        raise FormatError("header", f"expected 'qcmdpc-{kind} v{VERSION}', found {lines[0].strip()!r}")
    parts = lines[1].split()
    if len(parts) != 2 or parts[0] != "bits" or not parts[1].isdigit():
        raise FormatError("bits", f"malformed length line {lines[1]!r}")
    return hex_to_bits(lines[2], int(parts[1]))


def serialize_ct(bits) -> str:
    return serialize_bits(bits, "ciphertext")


def deserialize_ct(text: str) -> np.ndarray:
    return deserialize_bits(text, "ciphertext")


