"""Monte Carlo simulation of the quantum communication stage.

Each iteration evolves a pure state on (transit qubit) x (fresh ancilla):
Alice prepares |0>, |1>, |+> or |->, Eve applies u_e, Bob either performs a
projective Z measurement (collapsing the joint state, which leaves the
transit register exactly in the resent basis state) or reflects, Eve
applies u_f, and Alice measures in her preparation basis.

Reproducibility contract: iterations are processed in fixed chunks of
CHUNK_SIZE; chunk c draws from an independent PCG64 stream seeded with
SeedSequence([seed, c]).  Tallies merge by addition and key bits by chunk
order, so results are bit-identical for any worker count.  Workers are
threads; the heavy lifting is batched matrix products where numpy releases
the GIL.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .attack import CollectiveAttack
from .keyrate import ChannelStatistics

CHUNK_SIZE = 1 << 14  # fixed; changing it changes every sampled trajectory

BORN_TOL = 1e-12


class SimulationError(RuntimeError):
    """Internal consistency violation (e.g. Born probabilities off)."""


class InsufficientDataError(ValueError):
    """A conditioning class required for estimation has no samples."""


@dataclass(frozen=True)
class ProtocolConfig:
    """Run parameters for the quantum communication stage.

    prob_z_basis is Alice's probability of preparing (and later measuring)
    in the Z basis; prob_measure_resend is Bob's probability of measuring
    instead of reflecting.  Both may be biased but must stay strictly inside
    (0, 1).
    """

    iterations: int
    prob_z_basis: float = 0.5
    prob_measure_resend: float = 0.5
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        for name in ("prob_z_basis", "prob_measure_resend"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie strictly inside (0, 1)")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.workers < 1:
            raise ValueError("workers must be positive")


@dataclass(frozen=True)
class TallyCounts:
    """Event counts per sift class.

    z_counts[i, j, k] counts iterations where Alice sent |i>, Bob measured
    and resent |j> and Alice measured |k>; x_reflect_counts[a, a'] counts
    reflected X iterations with sent state a and measured state a'
    (0 = plus, 1 = minus).  Everything else lands in other_counts.
    """

    z_counts: np.ndarray
    x_reflect_counts: np.ndarray
    other_counts: int
    total: int

    def __post_init__(self):
        z = np.asarray(self.z_counts, dtype=np.int64)
        x = np.asarray(self.x_reflect_counts, dtype=np.int64)
        if z.shape != (2, 2, 2) or x.shape != (2, 2):
            raise ValueError("tally arrays have wrong shape")
        if int(z.sum() + x.sum()) + self.other_counts != self.total:
            raise ValueError("tally cells do not sum to the total")
        z.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "z_counts", z)
        object.__setattr__(self, "x_reflect_counts", x)


@dataclass(frozen=True)
class RawKeys:
    """Sifted raw key bits, aligned position by position."""

    alice_bits: np.ndarray
    bob_bits: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alice_bits, dtype=np.uint8)
        b = np.asarray(self.bob_bits, dtype=np.uint8)
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("key strings must be 1-D and of equal length")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "alice_bits", a)
        object.__setattr__(self, "bob_bits", b)

    def __len__(self) -> int:
        return int(self.alice_bits.shape[0])


@dataclass(frozen=True)
class StatisticsUncertainty:
    """Per-entry binomial standard errors, mirroring ChannelStatistics."""

    p: np.ndarray
    p_pm: float
    p_mp: float


def _born_pair(psi: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    # Squared norms of the |0>- and |1>-transit blocks, per batch row.
    mag = psi.real ** 2 + psi.imag ** 2
    return mag[:, :d].sum(axis=1), mag[:, d:].sum(axis=1)


def _check_born(p0: np.ndarray, p1: np.ndarray) -> None:
    if p0.size and np.max(np.abs(p0 + p1 - 1.0)) > BORN_TOL:
        raise SimulationError("Born probabilities do not sum to 1; "
                              "the attack operators are not unitary enough")


def _simulate_chunk(u_e: np.ndarray, u_f: np.ndarray, d: int, n: int,
                    prob_z: float, prob_measure: float, seed: int, chunk: int):
    rng = np.random.default_rng(np.random.SeedSequence([seed, chunk]))
    # Fixed draw order is part of the reproducibility contract.
    z_mask = rng.random(n) < prob_z
    bits = rng.integers(0, 2, size=n).astype(np.uint8)
    measure_mask = rng.random(n) < prob_measure
    u_bob = rng.random(n)
    u_alice = rng.random(n)

    # Alice's preparation: Z rows get |bit, 0>, X rows (|0,0> +/- |1,0>)/sqrt2.
    psi = np.zeros((n, 2 * d), dtype=complex)
    rows = np.arange(n)
    z_rows = rows[z_mask]
    psi[z_rows, bits[z_mask].astype(np.int64) * d] = 1.0
    x_rows = rows[~z_mask]
    psi[x_rows, 0] = 1.0 / np.sqrt(2.0)
    psi[x_rows, d] = np.where(bits[~z_mask] == 0, 1.0, -1.0) / np.sqrt(2.0)

    psi = psi @ u_e.T

    # Bob: projective Z measurement with collapse on measuring rows; the
    # collapsed transit register is exactly the resent state.
    p0, p1 = _born_pair(psi, d)
    _check_born(p0[measure_mask], p1[measure_mask])
    ratio1 = np.divide(p1, p0 + p1, out=np.zeros_like(p1), where=(p0 + p1) > 0)
    bob_bits = np.zeros(n, dtype=np.uint8)
    bob_bits[measure_mask] = u_bob[measure_mask] < ratio1[measure_mask]
    sel1 = measure_mask & (bob_bits == 1)
    psi[sel1, :d] = 0.0
    psi[sel1] /= np.sqrt(p1[sel1])[:, None]
    sel0 = measure_mask & (bob_bits == 0)
    psi[sel0, d:] = 0.0
    psi[sel0] /= np.sqrt(p0[sel0])[:, None]

    psi = psi @ u_f.T

    # Alice measures in her preparation basis.
    p0, p1 = _born_pair(psi, d)
    _check_born(p0, p1)
    alice_bits = np.zeros(n, dtype=np.uint8)
    ratio1 = np.divide(p1, p0 + p1, out=np.zeros_like(p1), where=(p0 + p1) > 0)
    alice_bits[z_mask] = u_alice[z_mask] < ratio1[z_mask]
    if x_rows.size:
        minus = psi[x_rows, :d] - psi[x_rows, d:]
        q_minus = 0.5 * (minus.real ** 2 + minus.imag ** 2).sum(axis=1)
        totals = (p0 + p1)[x_rows]
        alice_bits[x_rows] = u_alice[x_rows] < q_minus / totals

    key_mask = z_mask & measure_mask
    cells = (bits.astype(np.int64) * 4 + bob_bits * 2 + alice_bits)[key_mask]
    z_counts = np.bincount(cells, minlength=8).reshape(2, 2, 2)
    x_reflect = ~z_mask & ~measure_mask
    x_cells = (bits.astype(np.int64) * 2 + alice_bits)[x_reflect]
    x_counts = np.bincount(x_cells, minlength=4).reshape(2, 2)
    other = n - int(key_mask.sum()) - int(x_reflect.sum())
    return z_counts, x_counts, other, alice_bits[key_mask], bob_bits[key_mask]


def run_protocol(attack: CollectiveAttack, config: ProtocolConfig) -> tuple[TallyCounts, RawKeys]:
    """Simulate the quantum communication stage under a collective attack.

    Returns the per-class tallies and the sifted raw keys (Z-prepared,
    measured-and-resent iterations only).  Output is a pure function of
    (attack, config); the worker count changes only the wall clock.
    """
    n_total = config.iterations
    chunks = [(c, min(CHUNK_SIZE, n_total - c * CHUNK_SIZE))
              for c in range((n_total + CHUNK_SIZE - 1) // CHUNK_SIZE)]

    def job(chunk_and_size):
        c, size = chunk_and_size
        return _simulate_chunk(attack.u_e, attack.u_f, attack.ancilla_dim,
                               size, config.prob_z_basis,
                               config.prob_measure_resend, config.seed, c)

    if config.workers == 1 or len(chunks) == 1:
        results = [job(cs) for cs in chunks]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(job, chunks))

    z_counts = np.zeros((2, 2, 2), dtype=np.int64)
    x_counts = np.zeros((2, 2), dtype=np.int64)
    other = 0
    alice_parts = []
    bob_parts = []
    for z, x, o, a_bits, b_bits in results:
        z_counts += z
        x_counts += x
        other += o
        alice_parts.append(a_bits)
        bob_parts.append(b_bits)
    tally = TallyCounts(z_counts=z_counts, x_reflect_counts=x_counts,
                        other_counts=other, total=n_total)
    keys = RawKeys(alice_bits=np.concatenate(alice_parts),
                   bob_bits=np.concatenate(bob_parts))
    return tally, keys


_CLASS_NAMES = {
    "z0": "Alice sent |0> and Bob measured",
    "z1": "Alice sent |1> and Bob measured",
    "x_plus": "Alice sent |+> and Bob reflected",
    "x_minus": "Alice sent |-> and Bob reflected",
}


def estimate_statistics(tally: TallyCounts) -> tuple[ChannelStatistics, StatisticsUncertainty]:
    """Conditional relative frequencies with binomial standard errors.

    Raises InsufficientDataError naming the conditioning class if any of
    the four classes (sent |0> or |1> with Bob measuring; sent |+> or |->
    with Bob reflecting) has no samples.
    """
    n_z = tally.z_counts.reshape(2, 4).sum(axis=1)
    n_x = tally.x_reflect_counts.sum(axis=1)
    for count, key in ((n_z[0], "z0"), (n_z[1], "z1"),
                       (n_x[0], "x_plus"), (n_x[1], "x_minus")):
        if count == 0:
            raise InsufficientDataError(
                f"no samples in class: {_CLASS_NAMES[key]}")
    p = tally.z_counts / n_z[:, None, None]
    p_pm = tally.x_reflect_counts[0, 1] / n_x[0]
    p_mp = tally.x_reflect_counts[1, 0] / n_x[1]
    p_err = np.sqrt(p * (1.0 - p) / n_z[:, None, None])
    pm_err = float(np.sqrt(p_pm * (1.0 - p_pm) / n_x[0]))
    mp_err = float(np.sqrt(p_mp * (1.0 - p_mp) / n_x[1]))
    stats = ChannelStatistics(p=p, p_pm=float(p_pm), p_mp=float(p_mp))
    return stats, StatisticsUncertainty(p=p_err, p_pm=pm_err, p_mp=mp_err)


def qber(keys: RawKeys) -> float:
    """Fraction of positions where the two raw keys disagree."""
    if len(keys) == 0:
        raise ValueError("cannot compute the error rate of empty keys")
    return float(np.mean(keys.alice_bits != keys.bob_bits))


def permute_keys(keys: RawKeys, seed) -> RawKeys:
    """Apply one shared random permutation to both key strings.

    Symmetrizes the raw key after the fact; the disagreement rate and the
    multiset of aligned bit pairs are unchanged.
    """
    if len(keys) == 0:
        raise ValueError("cannot permute empty keys")
    perm = np.random.default_rng(seed).permutation(len(keys))
    return RawKeys(alice_bits=keys.alice_bits[perm],
                   bob_bits=keys.bob_bits[perm])
