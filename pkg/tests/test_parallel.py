import math

import numpy as np
import pytest

from qcmdpc.codec import encode, sample_error
from qcmdpc.gf2 import SparseSupport, circulant_dense
from qcmdpc.keygen import CodeParams, PrivateKey, generate_keypair, sample_constrained_support
from qcmdpc.minsum import DecoderConfig, FixedPointSpec, decode
from qcmdpc.parallel import (
    ApostMemory,
    IdentityBlockSchedule,
    bank_map,
    block_cells,
    cycle_report,
    dynamic_division,
    fixed_block_counts,
    fixed_division_stats,
    memory_report,
    reverse_shifter,
    shifter,
    simulate_parallel_decode,
    validate_layers,
)

P80 = CodeParams(2, 4801, 45, 84)


def toy_key():
    # first column {0, 5, 10} puts row 0's nonzeros at {0, 7, 12}
    s = SparseSupport.from_iterable(17, [0, 5, 10])
    return PrivateKey(CodeParams(1 + 1, 17, 3, 1, L=4), (s, s))


def test_toy_division():
    sched = dynamic_division(toy_key(), 4)
    assert sched.layer(0)[0] == [0, 7, 12]
    assert sched.layer(1)[0] == [4, 11, 16]
    assert sched.num_layers == 5
    assert sched.last_layer_rows == 1
    assert validate_layers(sched)


def test_overlapping_blocks_detected():
    sched = IdentityBlockSchedule.from_row_supports(17, 4, [[0, 2]])
    assert not validate_layers(sched)


def test_division_refuses_underconstrained_key():
    sk, _ = generate_keypair(CodeParams(2, 17, 3, 1, L=1), np.random.default_rng(4))
    if sk.constrained_by() < 6:
        with pytest.raises(ValueError):
            dynamic_division(sk, 6)


@pytest.mark.parametrize("L", [2, 3, 4, 5])
def test_blocks_cover_exactly_the_nonzeros(L):
    rng = np.random.default_rng(L)
    p = CodeParams(3, 53, 5, 1, L=L)
    sk, _ = generate_keypair(p, rng)
    H = np.concatenate([circulant_dense(s) for s in sk.supports], axis=1)
    sched = dynamic_division(sk, L)
    cells = block_cells(sched)
    covered = np.zeros_like(H)
    np.add.at(covered, (cells[:, 0], cells[:, 1]), 1)
    assert np.array_equal(covered, H)
    assert validate_layers(sched)
    # every full block holds exactly L nonzeros on its diagonal
    assert len(cells) == p.n0 * p.w * p.r


@pytest.mark.parametrize("L", [2, 4, 8])
def test_bank_map_round_trip(L):
    n0, r = 2, 101
    mem = ApostMemory(n0, r, L)
    values = np.arange(n0 * r) * 3 + 1
    mem.load(values)
    assert np.array_equal(mem.dump(), values)
    for k in range(n0):
        for c in range(r):
            got = mem.read(k, c)
            want = values[k * r + (c + np.arange(L)) % r]
            assert np.array_equal(got, want), (k, c)
    rng = np.random.default_rng(0)
    for _ in range(200):
        k, c = int(rng.integers(n0)), int(rng.integers(r))
        new = rng.integers(-50, 50, L)
        mask = rng.integers(0, 2, L).astype(bool)
        before = mem.dump()
        mem.write(k, c, new, mask)
        after = mem.dump()
        idx = k * r + (c + np.arange(L)) % r
        expect = before.copy()
        expect[idx[mask]] = new[mask]
        assert np.array_equal(after, expect)


def test_bank_map_fields():
    ba = bank_map(12, 4, 2, 101)  # block column 1 (odd) of pair 1... a=12 -> pair 1, odd half
    assert (ba.addr_bank1, ba.addr_bank0, ba.rotation) == (1, 2, 4)
    ba = bank_map(9, 4, 2, 101)
    assert (ba.addr_bank1, ba.addr_bank0, ba.rotation) == (1, 1, 1)
    with pytest.raises(ValueError):
        bank_map(0, 3, 2, 101)


@pytest.mark.parametrize("n", [2, 4, 8, 16, 64])
def test_shifter_is_rotation(n):
    v = np.arange(n)
    for s in range(n):
        assert np.array_equal(shifter(v, s), np.roll(v, -s))
        assert np.array_equal(reverse_shifter(shifter(v, s), s), v)


def dense_tile_stats(support, r, L):
    H = circulant_dense(SparseSupport.from_iterable(r, support))
    m = r // L
    tiles = H[:m * L, :m * L].reshape(m, L, m, L).sum(axis=(1, 3))
    return int(tiles.sum()), int((tiles > 0).sum())


def test_fixed_block_counts_match_dense_tiling():
    rng = np.random.default_rng(5)
    for r, w, L in [(101, 5, 2), (101, 7, 4), (127, 9, 8), (53, 3, 16)]:
        for _ in range(20):
            s = sample_constrained_support(r, w, L, rng, "gaps")
            assert fixed_block_counts(s.indices, r, L) == dense_tile_stats(s.indices, r, L)


def test_fixed_division_stats_bounds():
    st = fixed_division_stats(50, 4801, 45, 4, np.random.default_rng(0))
    assert 1 <= st.mean <= 4
    assert st.samples == 50


def test_memory_report_l2():
    mem = memory_report(P80, 2, 4, 11)
    assert [mem[n].total_bits for n in "IMSUT"] == [1260, 110446, 432180, 105600, 1980]
    assert mem.total_bits == 651466


@pytest.mark.parametrize("L,total", [(2, 651466), (8, 658084), (16, 666908), (32, 684556)])
def test_memory_totals(L, total):
    assert memory_report(P80, L, 4, 11).total_bits == total


@pytest.mark.parametrize("L", [1, 2, 8, 16, 32])
def test_cycle_model(L):
    c = cycle_report(P80, L)
    assert c.clocks_per_iteration_worst == 2 * 45 * math.ceil(4801 / L)
    assert c.speedup_vs_serial == pytest.approx(4801 / math.ceil(4801 / L))
    if L == 2:
        assert c.clocks_per_iteration_worst == 216090


@pytest.mark.parametrize("L", [2, 4, 8])
def test_parallel_model_matches_decoder(L):
    p = CodeParams(2, 127, 9, 0, L=L)
    rng = np.random.default_rng(30 + L)
    cfg = DecoderConfig(precision=FixedPointSpec(p_int=12), imax=10)
    seen = set()
    for _ in range(6):
        sk, pk = generate_keypair(p, rng)
        x = encode(rng.integers(0, 2, p.k, dtype=np.uint8), pk) ^ sample_error(p.n, 8, rng)
        a = simulate_parallel_decode(x, sk, cfg, L)
        b = decode(x, sk, cfg)
        assert (a.success, a.iterations, a.final_syndrome_weight) == \
               (b.success, b.iterations, b.final_syndrome_weight)
        if a.success:
            assert np.array_equal(a.codeword, b.codeword)
        seen.add(a.success)
    assert True in seen
