"""Random plant and exosystem generators.

Plants are built in controllable canonical coordinates (integrator chains
plus random free rows) and then scrambled by a well-conditioned state
transform and input transform, so the chain lengths and zero structure are
known by construction while the matrices handed to the library look
generic.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.linalg import block_diag

from .canonical import brunovsky_matrices
from .linalg import chain_offsets
from .model import Exosystem, LinearSystem, assemble_exosystem


def _well_conditioned(rng, k, spread=0.5):
    """Random ``k x k`` matrix with singular values in ``[e^-spread, e^spread]``."""
    U, _ = np.linalg.qr(rng.standard_normal((k, k)))
    V, _ = np.linalg.qr(rng.standard_normal((k, k)))
    return U @ np.diag(np.exp(rng.uniform(-spread, spread, k))) @ V


def random_kappa(rng, n, m):
    """Uniformly random composition of ``n`` into ``m`` positive parts."""
    cuts = np.sort(rng.choice(np.arange(1, n), size=m - 1, replace=False)) if m > 1 else []
    edges = np.concatenate([[0], cuts, [n]]).astype(int)
    return tuple(int(d) for d in np.diff(edges))


def canonical_pair(rng, kappa, star_scale=0.7):
    """``(A, B)`` in controllable canonical form with random free entries."""
    A, B = brunovsky_matrices(kappa)
    m = len(kappa)
    ends = np.cumsum(kappa) - 1
    A[ends] = star_scale * rng.standard_normal((m, A.shape[0]))
    for i in range(m):
        B[ends[i], i + 1:] = star_scale * rng.standard_normal(m - i - 1)
    return A, B


def scramble(rng, A, B, C, spread=0.5):
    """Apply a random state transform and input transform."""
    n, m = B.shape
    P = _well_conditioned(rng, n, spread)
    G = _well_conditioned(rng, m, spread)
    Pi = np.linalg.inv(P)
    return LinearSystem(Pi @ A @ P, Pi @ B @ G, C @ P)


def random_plant(rng, n=None, m=None):
    """Gaussian square plant (controllable with probability one)."""
    from .canonical import controllability

    m = m or int(rng.integers(1, 4))
    n = n or int(rng.integers(m, 9))
    while True:
        sys = LinearSystem(rng.standard_normal((n, n)) / np.sqrt(n),
                           rng.standard_normal((n, m)), rng.standard_normal((m, n)))
        if controllability(sys)[0]:
            return sys


def structured_plant(rng, kappa, scrambled=True):
    """Plant with prescribed Kronecker indices and a generic output matrix.

    Strongly unbalanced ``kappa`` can give canonical transforms with large
    condition numbers.
    """
    A, B = canonical_pair(rng, kappa)
    C = rng.standard_normal((len(kappa), int(sum(kappa))))
    if not scrambled:
        return LinearSystem(A, B, C)
    return scramble(rng, A, B, C)


def flat_output_C(rng, kappa, coupling=0.7):
    """Output matrix in chain coordinates whose relative degrees equal ``kappa``.

    Output ``k`` contains the head of chain ``k`` plus, from every chain
    ``i`` at least as long, derivatives up to order ``kappa_i - kappa_k``.
    """
    m, n = len(kappa), int(sum(kappa))
    off = chain_offsets(kappa)
    C = np.zeros((m, n))
    for k in range(m):
        C[k, off[k]] = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2.0)
        for i in range(m):
            if i == k or kappa[i] < kappa[k]:
                continue
            for j in range(kappa[i] - kappa[k] + 1):
                C[k, off[i] + j] = coupling * rng.standard_normal()
    return C


def flat_plant(rng, n=None, m=None, kappa=None, scrambled=True, max_cond=1e5,
               max_dstar_cond=1e3):
    """Plant whose real output is flat (relative degree equal to ``n``).

    Draws whose canonical transform has condition number above ``max_cond``
    are rejected; strongly unbalanced chain lengths produce such draws and
    the canonical-coordinate route then loses accuracy in proportion. Draws
    with ``cond(D*) > max_dstar_cond`` are rejected too: both tracking designs
    invert ``D*``, so gains and signals grow with its condition number.
    """
    from .analysis import relative_degrees
    from .canonical import to_controllable_canonical

    if kappa is None:
        m = m or int(rng.integers(1, 4))
        n = n or int(rng.integers(m, 9))
        kappa = random_kappa(rng, n, m)
    for _ in range(100):
        A, B = canonical_pair(rng, kappa)
        C = flat_output_C(rng, kappa)
        sys = scramble(rng, A, B, C) if scrambled else LinearSystem(A, B, C)
        rd = relative_degrees(sys)
        if rd.delta != sys.n or np.linalg.cond(rd.Dstar) > max_dstar_cond:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            try:
                cond = to_controllable_canonical(sys).cond
            except Exception:
                continue
        if cond < max_cond:
            return sys
    raise RuntimeError("could not draw a flat-output plant")


def nonflat_plant(rng, n=None, m=None, max_cond=1e4):
    """Plant with relative degree below ``n`` and a regular decoupling matrix."""
    from .analysis import relative_degrees

    for _ in range(200):
        sys = random_plant(rng, n=n, m=m)
        if sys.n == sys.m:
            continue
        rd = relative_degrees(sys)
        if rd.delta < sys.n and np.linalg.cond(rd.Dstar) < max_cond:
            return sys
    raise RuntimeError("could not draw a non-flat plant")


# -- exosystems -----------------------------------------------------------------

def _rotation(w):
    return np.array([[0.0, w], [-w, 0.0]])


def random_exo_block(rng, rmax=3):
    """One marginally stable generator block of size at most ``rmax``."""
    kinds = ["step", "sin", "ramp"]
    if rmax >= 3:
        kinds += ["parabola", "sin+step"]
    kind = kinds[int(rng.integers(len(kinds)))]
    if kind == "step":
        S, Q = np.zeros((1, 1)), np.ones(1)
    elif kind == "sin":
        S, Q = _rotation(rng.uniform(0.3, 3.0)), np.array([1.0, 0.0])
    elif kind == "ramp":
        S, Q = np.eye(2, k=1), np.array([1.0, 0.0])
    elif kind == "parabola":
        S, Q = np.eye(3, k=1), np.array([1.0, 0.0, 0.0])
    else:
        S = block_diag(_rotation(rng.uniform(0.3, 3.0)), np.zeros((1, 1)))
        Q = np.array([1.0, 0.0, 1.0])
    return S, Q * rng.uniform(0.5, 2.0)


def random_exosystem(rng, m, rmax=3):
    blocks = [random_exo_block(rng, rmax) for _ in range(m)]
    r = sum(S.shape[0] for S, _ in blocks)
    return assemble_exosystem(blocks, rng.standard_normal(r), m=m)


def random_general_exosystem(rng, m, r=3):
    """Marginally stable exosystem that is not block diagonal."""
    U = _well_conditioned(rng, r, 0.3)
    D = block_diag(*[random_exo_block(rng, 2)[0] for _ in range(r)])[:r, :r]
    S = U @ D @ np.linalg.inv(U)
    return Exosystem(S, rng.standard_normal((m, r)), rng.standard_normal(r))


# -- zero / eigenvalue coincidence -------------------------------------------------

def _block_avoiding(rng, lam, gap=0.1):
    """Generator block with every eigenvalue at least ``gap`` from ``lam`` and its conjugate."""
    while True:
        S, Q = random_exo_block(rng, 2)
        eig = np.linalg.eigvals(S)
        if np.min(np.abs(np.concatenate([eig - lam, eig - np.conj(lam)]))) > gap:
            return S, Q


def coincidence_fixture(rng, variant, shift=0.0):
    """Plant with an invariant zero at a known place and an exosystem mode on it.

    ``shift`` moves the exosystem eigenvalue away from the zero. Returns
    ``(plant, exosystem, zero)``.
    """
    if variant == "siso-real":
        lam = float(rng.choice([0.0, 2.0, -1.5]))
        other = rng.uniform(0.5, 2.0)
        b = np.polynomial.polynomial.polyfromroots([lam, -other])
        kappa, C = (4,), np.concatenate([b, [0.0]]).reshape(1, -1)
        zero_block = (np.array([[lam + shift]]), np.ones(1))
        k_hit = 0
    elif variant == "siso-imag":
        w = rng.uniform(0.5, 2.0)
        lam = complex(0.0, w)
        b = np.array([w * w, 0.0, 1.0])
        kappa, C = (4,), np.concatenate([b, [0.0]]).reshape(1, -1)
        zero_block = (_rotation(w + shift), np.array([1.0, 0.0]))
        k_hit = 0
    elif variant == "mimo-real":
        lam = float(rng.choice([0.0, 2.0, -1.5]))
        kappa = (2, 1)
        C = np.array([[-lam, 1.0, 0.0], [0.0, 0.0, 1.0]])
        C[1, :2] = 0.5 * rng.standard_normal(2)
        zero_block = (np.array([[lam + shift]]), np.ones(1))
        k_hit = int(rng.integers(2))
    elif variant == "mimo-imag":
        w = rng.uniform(0.5, 2.0)
        lam = complex(0.0, w)
        kappa = (3, 2)
        C = np.zeros((2, 5))
        C[0, :3] = [w * w, 0.0, 1.0]
        C[1, 3] = 1.0
        C[1, 4] = 0.5 * rng.standard_normal()
        zero_block = (_rotation(w + shift), np.array([1.0, 0.0]))
        k_hit = int(rng.integers(2))
    else:
        raise ValueError(variant)
    A, B = canonical_pair(rng, kappa)
    plant = scramble(rng, A, B, C)
    blocks = [_block_avoiding(rng, lam) for _ in kappa]
    blocks[k_hit] = zero_block
    r = sum(S.shape[0] for S, _ in blocks)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        exo = assemble_exosystem(blocks, rng.standard_normal(r), m=len(kappa))
    return plant, exo, lam
