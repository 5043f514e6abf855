"""Dense linear algebra over small multipartite Hilbert spaces.

Factor ordering is row-major and follows the order of ``dims`` everywhere:
``|i> (x) |j>`` on dims ``(a, b)`` is basis index ``i * b + j``.  Density
operators and pure states are plain complex ndarrays; the ``check_*``
helpers enforce their invariants at module boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence, Union

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
NORM_TOL = 1e-12

ROLES = ("F", "BH", "I", "E", "R")

_U64 = 1 << 64


@dataclass(frozen=True)
class SubsystemLayout:
    """Ordered factor dimensions with optional role labels.

    ``roles`` is either empty or has one unique label per factor, drawn from
    ``F, BH, I, E, R``.
    """

    dims: tuple[int, ...]
    roles: tuple[str, ...] = ()

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise ValueError("layout needs at least one factor")
        if any(d < 1 for d in dims):
            raise ValueError(f"factor dimensions must be >= 1, got {dims}")
        object.__setattr__(self, "dims", dims)
        roles = tuple(self.roles)
        if roles:
            if len(roles) != len(dims):
                raise ValueError("one role label per factor is required")
            if len(set(roles)) != len(roles):
                raise ValueError(f"role labels must be unique, got {roles}")
            bad = [r for r in roles if r not in ROLES]
            if bad:
                raise ValueError(f"unknown role labels {bad}")
        object.__setattr__(self, "roles", roles)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def index(self, role: str) -> int:
        try:
            return self.roles.index(role)
        except ValueError:
            raise KeyError(f"no factor with role {role!r}") from None

    def dim(self, role: str) -> int:
        return self.dims[self.index(role)]


Dims = Union[SubsystemLayout, Sequence[int]]


def _dims(dims: Dims) -> tuple[int, ...]:
    if isinstance(dims, SubsystemLayout):
        return dims.dims
    return tuple(int(d) for d in dims)


# ---------------------------------------------------------------------------
# Randomness


@dataclass(frozen=True)
class SeededRng:
    """Counter-based random stream keyed by ``(seed, stream_id)``.

    Each call to :meth:`generator` returns a fresh Philox generator, so the
    same pair always replays the same draws no matter which worker or in
    which order it runs.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise TypeError(f"{name} must be an integer")
            if not 0 <= int(v) < _U64:
                raise ValueError(f"{name} must fit in 64 unsigned bits")
            object.__setattr__(self, name, int(v))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=(self.stream_id << 64) | self.seed))

    def descriptor(self) -> dict:
        return {"seed": self.seed, "stream_id": self.stream_id}


RngLike = Union[SeededRng, np.random.Generator]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, SeededRng):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected SeededRng or numpy Generator, got {type(rng).__name__}")


def ginibre(shape, gen: np.random.Generator) -> np.ndarray:
    return (gen.standard_normal(shape) + 1j * gen.standard_normal(shape)) / np.sqrt(2)


def haar_unitary(dim: int, rng: RngLike) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix with R-phase correction."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    gen = as_generator(rng)
    z = ginibre((dim, dim), gen)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_pure_state(dim: int, rng: RngLike) -> np.ndarray:
    if dim < 1:
        raise ValueError("dim must be >= 1")
    v = ginibre(dim, as_generator(rng))
    return v / np.linalg.norm(v)


def random_pure_states(count: int, dim: int, rng: RngLike) -> np.ndarray:
    """``count`` Haar states as rows of a ``(count, dim)`` array."""
    v = ginibre((count, dim), as_generator(rng))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_density(dim: int, rng: RngLike, rank: int | None = None) -> np.ndarray:
    """Density matrix from the induced (Ginibre) measure of the given rank."""
    g = ginibre((dim, rank or dim), as_generator(rng))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_isometry(dim_in: int, dim_out: int, rng: RngLike) -> np.ndarray:
    if dim_out < dim_in:
        raise ValueError("an isometry needs dim_out >= dim_in")
    return haar_unitary(dim_out, rng)[:, :dim_in]


# ---------------------------------------------------------------------------
# Products, traces, norms


def tensor_product(*ops: np.ndarray) -> np.ndarray:
    if not ops:
        raise ValueError("need at least one operand")
    return reduce(np.kron, ops)


def basis_vector(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi)
    return np.outer(psi, psi.conj())


def partial_trace(rho: np.ndarray, dims: Dims, keep: Iterable[int]) -> np.ndarray:
    """Reduce ``rho`` onto the factors in ``keep`` (kept in layout order)."""
    dims = _dims(dims)
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep must name at least one factor")
    if keep[0] < 0 or keep[-1] >= n:
        raise IndexError(f"factor index out of range for {n} factors: {keep}")
    rho = np.asarray(rho)
    total = int(np.prod(dims))
    if rho.shape != (total, total):
        raise ValueError(f"operator shape {rho.shape} does not match dims {dims}")
    if len(keep) == n:
        return rho.copy()
    t = rho.reshape(dims + dims)
    # einsum labels: row indices a.., column indices shared for traced factors
    rows = list(range(n))
    cols = [k + n if k in keep else k for k in range(n)]
    out = [k for k in keep] + [k + n for k in keep]
    red = np.einsum(t, rows + cols, out)
    d = int(np.prod([dims[k] for k in keep]))
    return red.reshape(d, d)


def trace_norm(m: np.ndarray) -> float:
    """Sum of singular values of a square matrix."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"trace norm needs a square matrix, got shape {m.shape}")
    if np.allclose(m, m.conj().T, rtol=0.0, atol=HERMITIAN_TOL):
        return float(np.abs(np.linalg.eigvalsh(m)).sum())
    return float(np.linalg.svd(m, compute_uv=False).sum())


def hermitian_trace_norms(m: np.ndarray) -> np.ndarray:
    """Trace norms of a stack of Hermitian matrices (last two axes)."""
    return np.abs(np.linalg.eigvalsh(m)).sum(axis=-1)


def hermitize(m: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``(M + M^dag)/2``; reject inputs whose asymmetry exceeds ``tol``."""
    m = np.asarray(m, dtype=complex)
    asym = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if asym > tol:
        raise ValueError(f"matrix is not Hermitian (asymmetry {asym:.3e} > {tol:.0e})")
    return (m + m.conj().T) / 2


def check_density(rho: np.ndarray, trace: float = 1.0, tol: float = TRACE_TOL) -> np.ndarray:
    """Validate a density operator and return its Hermitized copy."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density operator must be square, got shape {rho.shape}")
    rho = hermitize(rho)
    tr = np.trace(rho).real
    if abs(tr - trace) > tol:
        raise ValueError(f"trace {tr:.12f} differs from {trace}")
    lam = np.linalg.eigvalsh(rho)
    if lam[0] < -PSD_TOL:
        raise ValueError(f"negative eigenvalue {lam[0]:.3e}")
    return rho


def check_pure(psi: np.ndarray, tol: float = NORM_TOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ValueError("a pure state is a 1-d amplitude vector")
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > tol:
        raise ValueError(f"state norm {nrm:.15f} is not 1")
    return psi


def is_unitary(u: np.ndarray, tol: float = 1e-12) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


def is_isometry(v: np.ndarray, tol: float = 1e-10) -> bool:
    v = np.asarray(v)
    if v.ndim != 2 or v.shape[0] < v.shape[1]:
        return False
    return bool(np.max(np.abs(v.conj().T @ v - np.eye(v.shape[1]))) <= tol)


def psd_sqrt(m: np.ndarray) -> np.ndarray:
    lam, vec = np.linalg.eigh(hermitize(m, tol=1e-9))
    return (vec * np.sqrt(np.clip(lam, 0.0, None))) @ vec.conj().T


def complete_isometry(v: np.ndarray) -> np.ndarray:
    """Orthonormal columns spanning the complement of ``range(v)``."""
    v = np.asarray(v, dtype=complex)
    n, k = v.shape
    q, _ = np.linalg.qr(np.hstack([v, np.eye(n, dtype=complex)]), mode="complete")
    # first k columns of q span range(v); the rest is the complement
    return q[:, k:n]
