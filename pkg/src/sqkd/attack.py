"""Collective attacks on the two-way channel and their exact analysis.

An attack is a pair of unitaries (u_e, u_f) on the transit qubit joined to
Eve's private ancilla; u_e acts on the way from Alice to Bob, u_f on the
way back.  Everything Alice and Bob can observe, and everything Eve ends up
holding, is determined by a family of (generally unnormalized) conditional
ancilla vectors obtained by projecting the unitaries' action on |0>_E:

  e[j]           components of u_e |i, 0>:  u_e|i,0> = |0, e[2i]> + |1, e[2i+1]>
  e_ijk[i, j, k] components of u_f |i, e[j]> on Bob-resent bit i
  f[j]           components of (u_f u_e) |i, 0> on Z inputs (reflected rounds)
  g[j]           components of (u_f u_e) |+/-, 0> on X inputs

Transit is the most significant tensor factor throughout (see linalg).
"""

from dataclasses import dataclass

import numpy as np

from . import keyrate, linalg
from .keyrate import ChannelStatistics

UNITARY_TOL = 1e-10
MAX_ANCILLA_DIM = 32

# Agreement-register basis ordering: (correct, 0 flips), (correct, 1 flip),
# (wrong, 1 flip), (wrong, 2 flips).  Internal layout only; no entropy
# depends on it.
_C_DIM = 4


@dataclass(frozen=True)
class CollectiveAttack:
    """A validated pair of attack unitaries with their ancilla dimension."""

    ancilla_dim: int
    u_e: np.ndarray
    u_f: np.ndarray


@dataclass(frozen=True)
class AttackVectors:
    """Eve's conditional ancilla vectors, all possibly unnormalized.

    e has shape (4, d); e_ijk has shape (2, 4, 2, d) indexed by Bob's resent
    bit i, the forward label j and Alice's final outcome k; f and g have
    shape (4, d).  No normalization is ever applied.
    """

    e: np.ndarray
    e_ijk: np.ndarray
    f: np.ndarray
    g: np.ndarray


def validate_attack(u_e: np.ndarray, u_f: np.ndarray, ancilla_dim: int) -> CollectiveAttack:
    """Check shapes and unitarity, returning an immutable attack."""
    if not 1 <= int(ancilla_dim) <= MAX_ANCILLA_DIM:
        raise ValueError(f"ancilla_dim must be in [1, {MAX_ANCILLA_DIM}]")
    d = 2 * int(ancilla_dim)
    out = []
    for name, u in (("u_e", u_e), ("u_f", u_f)):
        u = np.asarray(u, dtype=complex)
        if u.shape != (d, d):
            raise ValueError(f"{name} must have shape ({d}, {d}), got {u.shape}")
        residual = np.max(np.abs(u.conj().T @ u - np.eye(d)))
        if residual > UNITARY_TOL:
            raise ValueError(f"{name} is not unitary: residual {residual}")
        u = u.copy()
        u.setflags(write=False)
        out.append(u)
    return CollectiveAttack(ancilla_dim=int(ancilla_dim), u_e=out[0], u_f=out[1])


def extract_vectors(attack: CollectiveAttack) -> AttackVectors:
    """Project the attack unitaries into Eve's conditional ancilla vectors."""
    d = attack.ancilla_dim
    e = np.empty((4, d), dtype=complex)
    for sent in (0, 1):
        col = attack.u_e[:, sent * d]          # u_e acting on |sent, 0>
        e[2 * sent] = col[:d]
        e[2 * sent + 1] = col[d:]
    e_ijk = np.empty((2, 4, 2, d), dtype=complex)
    for i in (0, 1):
        for j in range(4):
            vin = np.zeros(2 * d, dtype=complex)
            vin[i * d:(i + 1) * d] = e[j]
            out = attack.u_f @ vin             # u_f acting on |i, e[j]>
            e_ijk[i, j, 0] = out[:d]
            e_ijk[i, j, 1] = out[d:]
    f = np.stack([e_ijk[0, 0, 0] + e_ijk[1, 1, 0],
                  e_ijk[0, 0, 1] + e_ijk[1, 1, 1],
                  e_ijk[0, 2, 0] + e_ijk[1, 3, 0],
                  e_ijk[0, 2, 1] + e_ijk[1, 3, 1]])
    g = 0.5 * np.stack([f[0] + f[1] + f[2] + f[3],
                        f[0] - f[1] + f[2] - f[3],
                        f[0] + f[1] - f[2] - f[3],
                        f[0] - f[1] - f[2] + f[3]])
    for arr in (e, e_ijk, f, g):
        arr.setflags(write=False)
    return AttackVectors(e=e, e_ijk=e_ijk, f=f, g=g)


def unitarity_residuals(vectors: AttackVectors) -> dict[str, float]:
    """Max deviation of each identity group the vectors must satisfy.

    Keys: 'e_norms' and 'e_orth' (forward unitarity), 'e_split' (each
    forward norm splits across Alice's outcomes), 'f_norms' and 'f_orth'
    (round-trip unitarity), 'g_combo' (X components as combinations of f).
    """
    e, e_ijk, f, g = vectors.e, vectors.e_ijk, vectors.f, vectors.g

    def ip(a, b):
        return complex(np.vdot(a, b))

    e_norms = max(abs(ip(e[0], e[0]).real + ip(e[1], e[1]).real - 1.0),
                  abs(ip(e[2], e[2]).real + ip(e[3], e[3]).real - 1.0))
    e_orth = abs(ip(e[0], e[2]) + ip(e[1], e[3]))
    e_split = max(abs(ip(e[j], e[j]).real
                      - ip(e_ijk[i, j, 0], e_ijk[i, j, 0]).real
                      - ip(e_ijk[i, j, 1], e_ijk[i, j, 1]).real)
                  for i in (0, 1) for j in range(4))
    f_norms = max(abs(ip(f[0], f[0]).real + ip(f[1], f[1]).real - 1.0),
                  abs(ip(f[2], f[2]).real + ip(f[3], f[3]).real - 1.0))
    f_orth = abs(ip(f[0], f[2]) + ip(f[1], f[3]))
    combos = 0.5 * np.array([f[0] + f[1] + f[2] + f[3],
                             f[0] - f[1] + f[2] - f[3],
                             f[0] + f[1] - f[2] - f[3],
                             f[0] - f[1] - f[2] + f[3]])
    g_combo = float(np.max(np.abs(g - combos)))
    return {"e_norms": e_norms, "e_orth": e_orth, "e_split": e_split,
            "f_norms": f_norms, "f_orth": f_orth, "g_combo": g_combo}


def statistics(attack: CollectiveAttack) -> ChannelStatistics:
    """The ten observables induced by an attack.

    p[i, j, k] is the squared norm of the ancilla vector on the path
    (sent i) -> (Bob j) -> (Alice k); the X disturbances are the squared
    norms of the basis-flipping components on reflected rounds.
    """
    v = extract_vectors(attack)
    p = np.empty((2, 2, 2))
    for i in (0, 1):
        for j in (0, 1):
            for k in (0, 1):
                vec = v.e_ijk[j, 2 * i + j, k]
                p[i, j, k] = np.vdot(vec, vec).real
    p = np.clip(p, 0.0, 1.0)
    p_pm = min(max(float(np.vdot(v.g[1], v.g[1]).real), 0.0), 1.0)
    p_mp = min(max(float(np.vdot(v.g[2], v.g[2]).real), 0.0), 1.0)
    return ChannelStatistics(p=p, p_pm=p_pm, p_mp=p_mp)


def overlap_e000_e131(attack: CollectiveAttack) -> complex:
    """Eve's critical overlap <e_{0,0}^0 | e_{1,3}^1> (the two "all went
    right" records); its real part is what the X statistics lower-bound."""
    v = extract_vectors(attack)
    return complex(np.vdot(v.e_ijk[0, 0, 0], v.e_ijk[1, 3, 1]))


def _c_label(i: int, j: int, k: int) -> int:
    # Agreement register: Bob's bit j vs Alice's bit k, plus the number of
    # Z flips along (i -> j -> k).  Ordering: (C,0), (C,1), (W,1), (W,2).
    flips = (i != j) + (j != k)
    if j == k:
        return 0 if flips == 0 else 1
    return 2 if flips == 1 else 3


def rho_be(attack: CollectiveAttack) -> np.ndarray:
    """Post-protocol state of Bob's key bit and Eve's ancilla on key rounds.

    Block-diagonal in Bob's bit; each block mixes the four unnormalized
    ancilla records that end with that bit, with overall weight 1/2 per sent
    bit.
    """
    d = attack.ancilla_dim
    v = extract_vectors(attack)
    rho = np.zeros((2 * d, 2 * d), dtype=complex)
    for i in (0, 1):
        for j in (0, 1):
            for k in (0, 1):
                vec = v.e_ijk[j, 2 * i + j, k]
                blk = slice(j * d, (j + 1) * d)
                rho[blk, blk] += 0.5 * np.outer(vec, vec.conj())
    return rho


def rho_bec(attack: CollectiveAttack) -> np.ndarray:
    """Post-protocol state extended by the agreement register.

    Index order (Bob bit) x (agreement register, dim 4) x (ancilla); the
    register labels whether the raw key bits agree and how many Z flips the
    transit suffered.  Tracing out the register recovers rho_be.
    """
    d = attack.ancilla_dim
    v = extract_vectors(attack)
    rho = np.zeros((2 * _C_DIM * d, 2 * _C_DIM * d), dtype=complex)
    for i in (0, 1):
        for j in (0, 1):
            for k in (0, 1):
                vec = v.e_ijk[j, 2 * i + j, k]
                base = (j * _C_DIM + _c_label(i, j, k)) * d
                blk = slice(base, base + d)
                rho[blk, blk] += 0.5 * np.outer(vec, vec.conj())
    return rho


def exact_collective_rate(attack: CollectiveAttack) -> float:
    """Exact S(B|E) - H(B|A) for this attack (bits per sifted signal).

    This is what the statistics-only bound must never exceed; the entropies
    come from full eigendecompositions of the post-protocol state.
    """
    d = attack.ancilla_dim
    rho = rho_be(attack)
    rho_e = linalg.partial_trace(rho, (2, d), keep=1)
    s_b_given_e = linalg.von_neumann_entropy(rho) - linalg.von_neumann_entropy(rho_e)
    return s_b_given_e - keyrate.h_b_given_a(statistics(attack))


def identity_attack(ancilla_dim: int = 1) -> CollectiveAttack:
    """No-op attack: both unitaries are the identity."""
    u = np.eye(2 * ancilla_dim, dtype=complex)
    return validate_attack(u, u, ancilla_dim)


def z_measurement_attack() -> CollectiveAttack:
    """Eve copies the transit bit into a fresh ancilla qubit on the way in.

    The forward unitary maps |t, a> -> |t, a xor t>; the return pass is the
    identity.  Z statistics look noiseless while both X disturbances are
    1/2, and Eve's record determines Bob's bit exactly.
    """
    u_e = np.zeros((4, 4), dtype=complex)
    for t in (0, 1):
        for a in (0, 1):
            u_e[2 * t + (a ^ t), 2 * t + a] = 1.0
    return validate_attack(u_e, np.eye(4, dtype=complex), 2)


def _flip_recorder(q: float) -> np.ndarray:
    # Two-level rotation on (transit, one ancilla qubit): flips the transit
    # with amplitude sqrt(q) while raising the ancilla qubit.  Basis order
    # |t, a> = 00, 01, 10, 11.
    c = np.sqrt(1.0 - q)
    s = np.sqrt(q)
    return np.array([[c, 0.0, 0.0, -s],
                     [0.0, c, s, 0.0],
                     [0.0, -s, c, 0.0],
                     [s, 0.0, 0.0, c]], dtype=complex)


def symmetric_realizing_attack(q_fwd: float, q_rev: float) -> CollectiveAttack:
    """Explicit attack realizing the symmetric product-form Z statistics.

    Eve's ancilla is two qubits (d = 4).  The forward pass flips the transit
    with probability q_fwd, recording into the first ancilla qubit; the
    return pass does the same with q_rev into the second.  The induced Z
    statistics are exactly the symmetric products; the X disturbances are
    whatever the construction yields (zero, as the flips commute with X on
    X-basis states).
    """
    for name, q in (("q_fwd", q_fwd), ("q_rev", q_rev)):
        if not 0.0 <= q <= 0.5:
            raise ValueError(f"{name} = {q} outside [0, 1/2]")
    # Forward: rotation on (transit, first ancilla qubit), identity on the
    # second.  Index order is |t, a1, a2>.
    u_e = np.kron(_flip_recorder(q_fwd), np.eye(2))
    # Return: rotation on (transit, second ancilla qubit) with the first as
    # spectator; embed by explicit index bookkeeping.
    grot = _flip_recorder(q_rev)
    u_f = np.zeros((8, 8), dtype=complex)
    for t_out in (0, 1):
        for t_in in (0, 1):
            for r_out in (0, 1):
                for r_in in (0, 1):
                    amp = grot[2 * t_out + r_out, 2 * t_in + r_in]
                    if amp == 0.0:
                        continue
                    for spectator in (0, 1):
                        u_f[4 * t_out + 2 * spectator + r_out,
                            4 * t_in + 2 * spectator + r_in] = amp
    return validate_attack(u_e, u_f, 4)


def _haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    q, r = np.linalg.qr(z / np.sqrt(2.0))
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_attack(ancilla_dim: int, seed) -> CollectiveAttack:
    """Haar-style random attack pair, reproducible from the seed.

    ``seed`` may be anything ``numpy.random.default_rng`` accepts, including
    an existing Generator.
    """
    rng = np.random.default_rng(seed)
    dim = 2 * ancilla_dim
    return validate_attack(_haar_unitary(dim, rng), _haar_unitary(dim, rng),
                           ancilla_dim)
