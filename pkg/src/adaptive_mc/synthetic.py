"""
Synthetic problem instances and the observation oracle.

An instance is a hidden matrix ``M = L + zeta`` where ``L`` has rank r and
unit-norm columns and every noise column satisfies ``||zeta_col||_2 <=
epsilon`` with ``epsilon < 1/4``.  The algorithm never touches ``M``
directly; it reads entries through an ``ObservationOracle`` that counts
each revealed entry exactly once, which is what makes observation-count
claims measurable.

Also provides the plain-text matrix file format and instance bundles
(directories holding ``L.mat``, ``M.mat`` and a ``meta`` key=value file).
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass

import numpy as np

from .linalg import OrthonormalBasis, coherence, orthonormalize
from .sampling import RngState, as_generator

__all__ = [
    "MAX_EPSILON",
    "ProblemInstance",
    "ObservationOracle",
    "generate_low_rank",
    "add_bounded_noise",
    "make_instance",
    "write_matrix",
    "read_matrix",
    "save_instance",
    "load_instance",
]

# The bounded-noise model requires epsilon < 1/4.
MAX_EPSILON = 0.25

# Stream labels for instance construction.
_STREAM_BASIS = 1
_STREAM_COEFF = 2
_STREAM_NOISE = 3


@dataclass(frozen=True)
class ProblemInstance:
    """A generated completion problem.

    Attributes
    ----------
    L : ndarray (m, n)
        Ground-truth rank-r matrix with unit-norm columns.
    zeta : ndarray (m, n)
        Noise; every column has norm at most ``epsilon``.
    M : ndarray (m, n)
        The observable matrix ``L + zeta``.
    true_basis : OrthonormalBasis
        Orthonormal basis of the column space of ``L``.
    epsilon : float
    r : int
    """

    L: np.ndarray
    zeta: np.ndarray
    M: np.ndarray
    true_basis: OrthonormalBasis
    epsilon: float
    r: int

    @property
    def shape(self):
        return self.L.shape


class ObservationOracle:
    """Gatekeeper over a hidden matrix that counts revealed entries.

    Observations are purchases: re-reading an already revealed entry does
    not increase the count, and revealing a full column after a partial
    read only adds the remainder.  Counter updates are serialized so that
    concurrent reads of distinct columns cannot lose counts.
    """

    def __init__(self, hidden):
        hidden = np.array(hidden, dtype=float, copy=True)
        if hidden.ndim != 2:
            raise ValueError("hidden matrix must be 2-dimensional")
        if not np.all(np.isfinite(hidden)):
            raise ValueError("hidden matrix entries must be finite")
        hidden.flags.writeable = False
        self._hidden = hidden
        self._revealed = np.zeros(hidden.shape, dtype=bool)
        self._count = 0
        self._lock = threading.Lock()

    @property
    def shape(self):
        return self._hidden.shape

    @property
    def entry_count(self):
        """Number of distinct entries revealed so far."""
        return self._count

    @property
    def column_full_flags(self):
        """Boolean per column: has every entry of it been revealed."""
        return self._revealed.all(axis=0).copy()

    def _check_col(self, j):
        if not 0 <= j < self._hidden.shape[1]:
            raise IndexError(f"column index {j} out of range")

    def entry(self, i, j):
        """Reveal and return the entry at (i, j)."""
        if not 0 <= i < self._hidden.shape[0]:
            raise IndexError(f"row index {i} out of range")
        self._check_col(j)
        with self._lock:
            if not self._revealed[i, j]:
                self._revealed[i, j] = True
                self._count += 1
        return float(self._hidden[i, j])

    def entries(self, omega, j):
        """Reveal and return the entries of column ``j`` at rows ``omega``.

        ``omega`` must be strictly increasing (an index set, no
        duplicates).
        """
        self._check_col(j)
        omega = np.asarray(omega, dtype=np.intp)
        if omega.ndim != 1 or omega.size == 0:
            raise ValueError("omega must be a nonempty 1-D index set")
        if omega[0] < 0 or omega[-1] >= self._hidden.shape[0]:
            raise IndexError("row index out of range")
        if np.any(np.diff(omega) <= 0):
            raise ValueError("omega must be strictly increasing")
        with self._lock:
            fresh = ~self._revealed[omega, j]
            self._count += int(fresh.sum())
            self._revealed[omega, j] = True
        return self._hidden[omega, j].copy()

    def column(self, j):
        """Reveal and return the full column ``j``."""
        self._check_col(j)
        with self._lock:
            self._count += int((~self._revealed[:, j]).sum())
            self._revealed[:, j] = True
        return self._hidden[:, j].copy()


def generate_low_rank(m, n, r, rng, coherence_mode="incoherent",
                      spike_index=0, spike_weight=0.99):
    """Rank-r matrix with unit-norm columns, plus its column-space basis.

    The matrix is ``B @ C`` with ``B`` an m x r orthonormal basis and
    ``C`` an r x n coefficient matrix with unit-norm columns (so the
    product's columns are unit norm).  The leading r x r block of ``C``
    is resampled until its smallest singular value is at least 0.1, so
    the full rank is exposed within the first r columns.

    Parameters
    ----------
    coherence_mode : {"incoherent", "spiked"}
        "incoherent" orthonormalizes a Gaussian block.  "spiked" blends
        the first basis direction toward the standard vector
        ``e_{spike_index}`` with the given weight, driving the coherence
        toward its maximum m / r.

    Returns
    -------
    (L, basis) : (ndarray (m, n), OrthonormalBasis)
    """
    m, n, r = int(m), int(n), int(r)
    if not 1 <= r <= min(m, n):
        raise ValueError("rank r must satisfy 1 <= r <= min(m, n)")
    if coherence_mode not in ("incoherent", "spiked"):
        raise ValueError(f"unknown coherence_mode {coherence_mode!r}")
    gen = as_generator(rng)

    basis = None
    for _ in range(64):
        raw = gen.standard_normal((m, r))
        if coherence_mode == "spiked":
            if not 0 <= spike_index < m:
                raise ValueError("spike_index out of range")
            g = gen.standard_normal(m)
            g /= np.linalg.norm(g)
            spike = np.zeros(m)
            spike[spike_index] = 1.0
            raw[:, 0] = spike_weight * spike + (1.0 - spike_weight) * g
        cand = orthonormalize(raw)
        if cand.dim == r:
            basis = cand
            break
    if basis is None:
        raise RuntimeError("failed to draw a rank-r basis")

    coeff = gen.standard_normal((r, n))
    for _ in range(256):
        if np.linalg.svd(coeff[:, :r], compute_uv=False)[-1] >= 0.1:
            break
        coeff[:, :r] = gen.standard_normal((r, r))
    else:
        raise RuntimeError("failed to draw a well-conditioned leading block")
    norms = np.linalg.norm(coeff, axis=0)
    while np.any(norms == 0.0):
        bad = norms == 0.0
        coeff[:, bad] = gen.standard_normal((r, int(bad.sum())))
        norms = np.linalg.norm(coeff, axis=0)
    coeff /= norms

    return basis.matrix @ coeff, basis


def add_bounded_noise(L, epsilon, rng, mode="sphere", true_basis=None, r=None):
    """Wrap a unit-column low-rank matrix into a noisy ProblemInstance.

    Parameters
    ----------
    epsilon : float
        Per-column noise bound; the model requires ``0 <= epsilon < 1/4``.
    mode : {"sphere", "scaled-gaussian"}
        "sphere" puts every noise column exactly on the radius-epsilon
        sphere (the worst case).  "scaled-gaussian" rescales a Gaussian
        column to a uniform-random radius in [0, epsilon].
    true_basis, r : optional
        Column-space basis and rank of ``L``.  Derived from an SVD when
        not supplied.
    """
    L = np.asarray(L, dtype=float)
    epsilon = float(epsilon)
    if not 0.0 <= epsilon < MAX_EPSILON:
        raise ValueError(
            f"epsilon must be < {MAX_EPSILON} (bounded-noise model "
            f"precondition); got {epsilon}"
        )
    if mode not in ("sphere", "scaled-gaussian"):
        raise ValueError(f"unknown noise mode {mode!r}")
    m, n = L.shape
    gen = as_generator(rng)

    if epsilon == 0.0:
        zeta = np.zeros_like(L)
    else:
        zeta = gen.standard_normal((m, n))
        norms = np.linalg.norm(zeta, axis=0)
        while np.any(norms == 0.0):
            bad = norms == 0.0
            zeta[:, bad] = gen.standard_normal((m, int(bad.sum())))
            norms = np.linalg.norm(zeta, axis=0)
        if mode == "sphere":
            zeta *= epsilon / norms
        else:
            radii = gen.uniform(0.0, epsilon, size=n)
            zeta *= radii / norms

    if r is None:
        sv = np.linalg.svd(L, compute_uv=False)
        r = int(np.sum(sv > 1e-9))
    r = int(r)
    if not 1 <= r <= min(m, n):
        raise ValueError("rank r must satisfy 1 <= r <= min(m, n)")
    if true_basis is None:
        u, _, _ = np.linalg.svd(L, full_matrices=False)
        true_basis = OrthonormalBasis(u[:, :r])

    inst = ProblemInstance(
        L=L, zeta=zeta, M=L + zeta, true_basis=true_basis,
        epsilon=epsilon, r=r,
    )
    _check_instance(inst)
    return inst


def _check_instance(inst):
    """Assert the model invariants after generation."""
    col_norms = np.linalg.norm(inst.L, axis=0)
    if np.max(np.abs(col_norms - 1.0)) > 1e-12:
        raise AssertionError("ground-truth columns are not unit norm")
    noise_norms = np.linalg.norm(inst.zeta, axis=0)
    if np.max(noise_norms) > inst.epsilon + 1e-12:
        raise AssertionError("noise column exceeds the epsilon bound")
    sv = np.linalg.svd(inst.L, compute_uv=False)
    if sv[inst.r - 1] < 1e-6:
        raise AssertionError("generated matrix does not expose rank r")
    if inst.r < min(inst.L.shape) and sv[inst.r] > 1e-9:
        raise AssertionError("generated matrix has rank above r")


def make_instance(m, n, r, epsilon, seed, coherence_mode="incoherent",
                  noise_mode="sphere", spike_index=0, spike_weight=0.99):
    """Generate a full ProblemInstance from a single seed.

    Generation and noise use independent substreams of the seed (an int
    or an RngState), so the same seed always reproduces the same
    instance.
    """
    root = seed if isinstance(seed, RngState) else RngState(int(seed))
    L, basis = generate_low_rank(
        m, n, r, root.substream(_STREAM_BASIS),
        coherence_mode=coherence_mode,
        spike_index=spike_index, spike_weight=spike_weight,
    )
    return add_bounded_noise(
        L, epsilon, root.substream(_STREAM_NOISE), mode=noise_mode,
        true_basis=basis, r=r,
    )


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def write_matrix(path, a):
    """Write a matrix as plain text: a header line ``m n`` followed by m
    rows of n space-separated values at 17 significant digits."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("only 2-D matrices are supported")
    m, n = a.shape
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{m} {n}\n")
        for i in range(m):
            fh.write(" ".join(f"{v:.17e}" for v in a[i]))
            fh.write("\n")


def read_matrix(path):
    """Read a matrix written by ``write_matrix``."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: malformed header line")
        m, n = int(header[0]), int(header[1])
        data = np.loadtxt(fh, ndmin=2)
    if data.shape != (m, n):
        raise ValueError(
            f"{path}: header promises {m}x{n}, found {data.shape}"
        )
    return data


def save_instance(dirpath, inst, seed, noise_mode, coherence_mode="incoherent"):
    """Write an instance bundle: ``L.mat``, ``M.mat`` and a ``meta`` file
    of key=value lines."""
    os.makedirs(dirpath, exist_ok=True)
    write_matrix(os.path.join(dirpath, "L.mat"), inst.L)
    write_matrix(os.path.join(dirpath, "M.mat"), inst.M)
    m, n = inst.shape
    meta_lines = [
        f"m={m}",
        f"n={n}",
        f"r={inst.r}",
        f"epsilon={inst.epsilon:.17g}",
        f"seed={int(seed)}",
        f"mode={noise_mode}",
        f"coherence_mode={coherence_mode}",
        f"mu={coherence(inst.true_basis):.17g}",
    ]
    with open(os.path.join(dirpath, "meta"), "w", encoding="ascii") as fh:
        fh.write("\n".join(meta_lines) + "\n")


def load_instance(dirpath):
    """Load an instance bundle; returns (L, M, meta_dict)."""
    L = read_matrix(os.path.join(dirpath, "L.mat"))
    M = read_matrix(os.path.join(dirpath, "M.mat"))
    meta = {}
    with open(os.path.join(dirpath, "meta"), "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if line:
                key, _, value = line.partition("=")
                meta[key] = value
    return L, M, meta
