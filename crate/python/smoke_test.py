"""Smoke test for the ssd_py extension module.

Build first: maturin develop -m crates/py/Cargo.toml
"""

import ssd_py


def main():
    model = ssd_py.SynthModel(seed=7, vocab_size=32, sharpness=4.0, context_window=2)
    mask = model.vocab_size - 1
    state = ssd_py.SequenceState([3, 1, 4, 1, 5], 64, mask, 8)
    assert state.mask_count == 64
    assert state.schedule()[0] == (5, 13)
    assert ssd_py.block_partition(5, 16, 8) == [(5, 13), (13, 21)]

    base = ssd_py.stepwise_decode(model, state, topk=5)
    assert base.forwards == 64
    assert len(base.trace) == 64

    for shape, size in [("greedy", 4), ("mix_order", 6), ("kary2", 15)]:
        out = ssd_py.ssd_decode(model, state, draft_len=3, shape=shape, topk=5)
        assert out.tokens == base.tokens, shape
        assert out.trace == base.trace, shape
        assert out.forwards < base.forwards, shape
        assert all(r.batch_size == size for r in out.rounds if not r.fallback), shape
        assert sum(r.accepted for r in out.rounds) == 64
        print(f"{shape:>9}: {out.forwards} forwards vs {base.forwards} stepwise")

    assert ssd_py.upper_bound(4) == 0.8
    assert ssd_py.kary_tree_size(2, 3) == 15
    grid = [ssd_py.topk_match_reduction(base.trace, 3, k) for k in range(1, 6)]
    assert all(a <= b for a, b in zip(grid, grid[1:]))
    assert grid[-1] <= ssd_py.upper_bound(3)

    trace = ssd_py.Trace.parse(base.trace.to_lines())
    assert trace == base.trace

    try:
        ssd_py.SequenceState([], 0, mask, 8)
    except ValueError:
        pass
    else:
        raise AssertionError("empty generation accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
