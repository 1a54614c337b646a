import numpy as np

_MASK64 = (1 << 64) - 1


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Generator for the stream identified by ``(seed, *keys)``.

    Child streams depend only on their key path, never on how many draws
    a sibling stream consumed, so per-tree and per-fold work can run in
    any order and still reproduce.
    """
    return np.random.default_rng([int(seed) & _MASK64, *(int(k) & _MASK64 for k in keys)])


def derive_seed(seed: int, *keys: int) -> int:
    """A 63-bit integer seed derived from ``(seed, *keys)``."""
    state = np.random.SeedSequence([int(seed) & _MASK64, *(int(k) & _MASK64 for k in keys)])
    return int(state.generate_state(1, np.uint64)[0] >> np.uint64(1))
