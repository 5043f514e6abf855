"""Quantum channels, their dilations, and finite-dimensional horizon models.

A :class:`Channel` stores one native representation (Kraus set, Choi
matrix, or Stinespring isometry) and converts on demand.  Conventions:

* Choi matrix on ``out (x) in``: ``J = sum_ij N(|i><j|) (x) |i><j|``, so
  tracing out the output factor of a CPTP map gives ``I_in``.
* Stinespring isometry ``W`` maps ``in -> out (x) env`` (row-major), and the
  channel is ``Tr_env[W rho W^dag]``.

A :class:`HorizonModel` packages a global unitary ``U`` on ``F (x) BH``, a
fixed black-hole state ``phi0`` and a declared embedding ``V: F -> I``.  Its
dilation ``W_N |psi> = U(|psi> (x) |phi0>)`` induces the interior channel
(trace out ``E``) and the exterior channel (trace out ``I``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import (
    RngLike,
    as_generator,
    basis_vector,
    check_pure,
    complete_isometry,
    haar_unitary,
    hermitize,
    is_isometry,
    is_unitary,
    partial_trace,
    random_pure_state,
)

CPTP_TOL = 1e-10
KRAUS_DROP = 1e-12


class ChannelError(ValueError):
    """Raised for malformed channels or incompatible dimensions."""


@dataclass(frozen=True, eq=False)
class Channel:
    kind: str
    data: object
    dim_in: int
    dim_out: int
    dim_env: int | None = None

    # -- construction ---------------------------------------------------
    @classmethod
    def from_kraus(cls, ops: Sequence[np.ndarray], *, validate: bool = True) -> "Channel":
        ops = tuple(np.asarray(k, dtype=complex) for k in ops)
        if not ops:
            raise ChannelError("empty Kraus set")
        shape = ops[0].shape
        if len(shape) != 2 or any(k.shape != shape for k in ops):
            raise ChannelError("Kraus operators must be equally shaped matrices")
        ch = cls("kraus", ops, dim_in=shape[1], dim_out=shape[0])
        if validate:
            ch.validate()
        return ch

    @classmethod
    def from_choi(cls, choi: np.ndarray, dim_in: int, dim_out: int, *, validate: bool = True) -> "Channel":
        choi = np.asarray(choi, dtype=complex)
        if choi.shape != (dim_in * dim_out,) * 2:
            raise ChannelError(f"Choi shape {choi.shape} does not match {dim_out}x{dim_in}")
        ch = cls("choi", choi, dim_in=dim_in, dim_out=dim_out)
        if validate:
            ch.validate()
        return ch

    @classmethod
    def from_stinespring(cls, w: np.ndarray, dim_out: int, *, validate: bool = True) -> "Channel":
        w = np.asarray(w, dtype=complex)
        if w.ndim != 2 or w.shape[0] % dim_out:
            raise ChannelError(f"isometry of shape {w.shape} cannot have output dim {dim_out}")
        ch = cls("stinespring", w, dim_in=w.shape[1], dim_out=dim_out, dim_env=w.shape[0] // dim_out)
        if validate:
            ch.validate()
        return ch

    # -- conversions ----------------------------------------------------
    def kraus(self) -> tuple[np.ndarray, ...]:
        if self.kind == "kraus":
            return self.data
        if self.kind == "stinespring":
            w3 = self.data.reshape(self.dim_out, self.dim_env, self.dim_in)
            return tuple(w3[:, e, :] for e in range(self.dim_env))
        lam, vec = np.linalg.eigh(hermitize(self.data, tol=1e-9))
        keep = np.nonzero(lam > KRAUS_DROP * max(1.0, lam[-1]))[0][::-1]
        return tuple(np.sqrt(lam[i]) * vec[:, i].reshape(self.dim_out, self.dim_in) for i in keep)

    def choi(self) -> np.ndarray:
        if self.kind == "choi":
            return self.data
        vecs = np.array([k.reshape(-1) for k in self.kraus()])
        return vecs.T @ vecs.conj()

    def stinespring(self) -> np.ndarray:
        """Isometry ``in -> out (x) env``; a Kraus set uses the minimal env."""
        if self.kind == "stinespring":
            return self.data
        ops = [k for k in self.kraus() if np.linalg.norm(k) > KRAUS_DROP]
        return np.stack(ops, axis=1).reshape(self.dim_out * len(ops), self.dim_in)

    def env_dim(self) -> int:
        return self.stinespring().shape[0] // self.dim_out

    def kraus_array(self) -> np.ndarray:
        return np.array(self.kraus())

    # -- action -----------------------------------------------------------
    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.dim_in, self.dim_in):
            raise ChannelError(f"input of shape {rho.shape} for a channel on dim {self.dim_in}")
        k = self.kraus_array()
        return np.einsum("aij,jk,alk->il", k, rho, k.conj())

    def validate(self, tol: float = CPTP_TOL) -> None:
        if self.kind == "kraus":
            acc = sum(k.conj().T @ k for k in self.data)
            err = np.max(np.abs(acc - np.eye(self.dim_in)))
            if err > tol:
                raise ChannelError(f"Kraus set is not trace preserving (error {err:.3e})")
        elif self.kind == "stinespring":
            w = self.data
            err = np.max(np.abs(w.conj().T @ w - np.eye(self.dim_in)))
            if err > tol:
                raise ChannelError(f"dilation is not an isometry (error {err:.3e})")
        else:
            j = self.data
            if np.max(np.abs(j - j.conj().T)) > 1e-9:
                raise ChannelError("Choi matrix is not Hermitian")
            lam = np.linalg.eigvalsh(hermitize(j, tol=1e-9))
            if lam[0] < -tol:
                raise ChannelError(f"Choi matrix is not positive (eigenvalue {lam[0]:.3e})")
            marg = partial_trace(j, (self.dim_out, self.dim_in), keep=[1])
            err = np.max(np.abs(marg - np.eye(self.dim_in)))
            if err > tol:
                raise ChannelError(f"Choi marginal differs from identity by {err:.3e}")

    def __repr__(self):
        return f"Channel({self.kind}, {self.dim_in}->{self.dim_out})"


def complementary_channel(c: Channel) -> Channel:
    """Environment-side channel ``Tr_out[W rho W^dag]`` of ``c``'s dilation.

    The result carries the swapped dilation, so taking the complement twice
    returns the original map with its original output factor.
    """
    w = c.stinespring()
    d_env = w.shape[0] // c.dim_out
    swapped = w.reshape(c.dim_out, d_env, c.dim_in).transpose(1, 0, 2).reshape(-1, c.dim_in)
    return Channel.from_stinespring(swapped, dim_out=d_env)


def choi_distance(a: Channel, b: Channel) -> float:
    """Max-abs entry difference of the Choi matrices."""
    if (a.dim_in, a.dim_out) != (b.dim_in, b.dim_out):
        raise ChannelError("channels act between different spaces")
    return float(np.max(np.abs(a.choi() - b.choi())))


# ---------------------------------------------------------------------------
# Ideal infall and named families


def check_isometry(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    if not is_isometry(v):
        raise ChannelError("embedding V is not an isometry (V^dag V != I)")
    return v


def ideal_infall(v: np.ndarray, dim_env: int = 1) -> Channel:
    """``Ad_V`` dilated as ``W_V |psi> = V|psi> (x) |0>_E``."""
    v = check_isometry(v)
    w = np.kron(v, basis_vector(0, dim_env)[:, None])
    return Channel.from_stinespring(w, dim_out=v.shape[0])


FAMILIES = ("depolarizing", "dephasing", "amplitude_damping")


@dataclass(frozen=True)
class ChannelFamilySpec:
    family: str
    dim: int
    param: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ChannelError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if int(self.dim) < 1:
            raise ChannelError("dim must be >= 1")
        if self.family == "amplitude_damping" and self.dim != 2:
            raise ChannelError("amplitude damping is defined for qubits (dim=2)")
        if not 0.0 <= float(self.param) <= 1.0:
            raise ChannelError(f"parameter {self.param} outside [0, 1]")


def weyl_operators(d: int) -> list[np.ndarray]:
    """The ``d*d`` generalized Paulis ``X^a Z^b``; index 0 is the identity."""
    shift = np.roll(np.eye(d), 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return [
        np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b)
        for a in range(d)
        for b in range(d)
    ]


def make_family(spec: ChannelFamilySpec) -> Channel:
    d, p = spec.dim, float(spec.param)
    if spec.family == "depolarizing":
        # I/d = (1/d^2) sum_ab W_ab rho W_ab^dag
        ops = weyl_operators(d)
        weights = [1 - p + p / d**2] + [p / d**2] * (d * d - 1)
        return Channel.from_kraus([np.sqrt(w) * op for w, op in zip(weights, ops)])
    if spec.family == "dephasing":
        ops = [np.sqrt(1 - p) * np.eye(d)]
        ops += [np.sqrt(p) * np.outer(basis_vector(k, d), basis_vector(k, d)) for k in range(d)]
        return Channel.from_kraus(ops)
    k0 = np.array([[1, 0], [0, np.sqrt(1 - p)]], dtype=complex)
    k1 = np.array([[0, np.sqrt(p)], [0, 0]], dtype=complex)
    return Channel.from_kraus([k0, k1])


def identity_channel(d: int) -> Channel:
    return Channel.from_kraus([np.eye(d)])


# ---------------------------------------------------------------------------
# Horizon models


@dataclass(frozen=True, eq=False)
class HorizonModel:
    """Global unitary ``U: F (x) BH -> I (x) E`` with black-hole state and ideal ``V``."""

    U: np.ndarray
    phi0: np.ndarray
    V: np.ndarray
    dim_i: int
    dim_e: int
    charges: tuple[int, ...] = ()

    def __post_init__(self):
        u = np.asarray(self.U, dtype=complex)
        v = check_isometry(self.V)
        phi0 = check_pure(self.phi0)
        object.__setattr__(self, "U", u)
        object.__setattr__(self, "V", v)
        object.__setattr__(self, "phi0", phi0)
        d_f, d_bh = v.shape[1], phi0.shape[0]
        if not is_unitary(u):
            raise ChannelError("U is not unitary to 1e-12")
        if u.shape[0] != d_f * d_bh:
            raise ChannelError(f"U has dim {u.shape[0]}, expected dim(F)*dim(BH) = {d_f * d_bh}")
        if self.dim_i * self.dim_e != d_f * d_bh:
            raise ChannelError("dim(I)*dim(E) must equal dim(F)*dim(BH)")
        if v.shape[0] != self.dim_i:
            raise ChannelError(f"V maps into dim {v.shape[0]}, interior has dim {self.dim_i}")
        charges = tuple(int(c) for c in self.charges) or (0,) * d_f
        if len(charges) != d_f:
            raise ChannelError("one charge label per F basis vector is required")
        object.__setattr__(self, "charges", charges)

    @property
    def dim_f(self) -> int:
        return self.V.shape[1]

    @property
    def dim_bh(self) -> int:
        return self.phi0.shape[0]

    @property
    def dilation(self) -> np.ndarray:
        """``W_N = U (I_F (x) |phi0>)``, shape ``(dim_i*dim_e, dim_f)``."""
        return self.U @ np.kron(np.eye(self.dim_f), self.phi0[:, None])

    def sectors(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {}
        for idx, c in enumerate(self.charges):
            out.setdefault(c, []).append(idx)
        return {c: tuple(ix) for c, ix in sorted(out.items())}

    def global_state(self, psi: np.ndarray) -> np.ndarray:
        return self.dilation @ np.asarray(psi, dtype=complex)

    def interior_state(self, psi: np.ndarray) -> np.ndarray:
        phi = self.global_state(psi).reshape(self.dim_i, self.dim_e)
        return phi @ phi.conj().T

    def exterior_state(self, psi: np.ndarray) -> np.ndarray:
        phi = self.global_state(psi).reshape(self.dim_i, self.dim_e)
        return phi.T @ phi.conj()

    def with_embedding(self, v: np.ndarray) -> "HorizonModel":
        return HorizonModel(self.U, self.phi0, v, self.dim_i, self.dim_e, self.charges)

    def with_charges(self, charges: Sequence[int]) -> "HorizonModel":
        return HorizonModel(self.U, self.phi0, self.V, self.dim_i, self.dim_e, tuple(charges))


def interior_channel(model: HorizonModel) -> Channel:
    return Channel.from_stinespring(model.dilation, dim_out=model.dim_i)


def exterior_channel(model: HorizonModel) -> Channel:
    return complementary_channel(interior_channel(model))


def ideal_channel(model: HorizonModel) -> Channel:
    return ideal_infall(model.V, dim_env=model.dim_e)


def unitary_with_dilation(w: np.ndarray, phi0: np.ndarray, rng: RngLike | None = None) -> np.ndarray:
    """A unitary ``U`` with ``U (I (x) |phi0>) = W``.

    Both isometries are completed to unitaries; with ``rng`` the completion
    on the complement is Haar-random, otherwise it is the canonical QR one.
    """
    w = np.asarray(w, dtype=complex)
    d_f = w.shape[1]
    b = np.kron(np.eye(d_f), np.asarray(phi0, dtype=complex)[:, None])
    if b.shape[0] != w.shape[0]:
        raise ChannelError("dilation and F (x) BH have different dimensions")
    b_perp = complete_isometry(b)
    w_perp = complete_isometry(w)
    if rng is not None and w_perp.shape[1] > 0:
        w_perp = w_perp @ haar_unitary(w_perp.shape[1], rng)
    return np.hstack([w, w_perp]) @ np.hstack([b, b_perp]).conj().T


def random_model(
    dim_f: int,
    dim_bh: int,
    rng: RngLike,
    *,
    dim_i: int | None = None,
    V: np.ndarray | None = None,
    charges: Sequence[int] = (),
) -> HorizonModel:
    """Haar ``U`` on ``F (x) BH``, ``phi0 = |0>``, canonical ``V`` unless given."""
    gen = as_generator(rng)
    dim_i = dim_i or dim_f
    total = dim_f * dim_bh
    if total % dim_i:
        raise ChannelError(f"dim(I)={dim_i} does not divide dim(F)*dim(BH)={total}")
    u = haar_unitary(total, gen)
    if V is None:
        V = np.eye(dim_i, dim_f, dtype=complex)
    return HorizonModel(u, basis_vector(0, dim_bh), V, dim_i, total // dim_i, tuple(charges))


def ideal_model(
    dim_f: int,
    dim_bh: int,
    rng: RngLike | None = None,
    *,
    dim_i: int | None = None,
    V: np.ndarray | None = None,
    charges: Sequence[int] = (),
) -> HorizonModel:
    """Model with ``W_N |psi> = V|psi> (x) |chi>`` exactly (epsilon = 0).

    Without ``rng`` this is the canonical identity horizon: ``U = I``,
    ``V = I``, ``phi0 = chi = |0>``, exact in floating point.  With ``rng``
    the exterior state, the embedding (when ``dim_i > dim_f``) and the
    unitary completion are random.
    """
    dim_i = dim_i or dim_f
    total = dim_f * dim_bh
    if total % dim_i or dim_i < dim_f:
        raise ChannelError(f"cannot embed dim {dim_f} into an interior of dim {dim_i}")
    dim_e = total // dim_i
    phi0 = basis_vector(0, dim_bh)
    if rng is None:
        if V is None and dim_i == dim_f:
            return HorizonModel(np.eye(total, dtype=complex), phi0, np.eye(dim_f), dim_i, dim_e, tuple(charges))
        V = np.eye(dim_i, dim_f, dtype=complex) if V is None else V
        chi = basis_vector(0, dim_e)
        w = np.kron(V, chi[:, None])
        return HorizonModel(unitary_with_dilation(w, phi0), phi0, V, dim_i, dim_e, tuple(charges))
    gen = as_generator(rng)
    if V is None:
        V = haar_unitary(dim_i, gen)[:, :dim_f]
    chi = random_pure_state(dim_e, gen)
    w = np.kron(V, chi[:, None])
    return HorizonModel(unitary_with_dilation(w, phi0, gen), phi0, V, dim_i, dim_e, tuple(charges))


def swap_model() -> HorizonModel:
    """Qubit infaller swapped into the exterior; the interior is left in ``|0>``."""
    swap = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            swap[j * 2 + i, i * 2 + j] = 1.0
    return HorizonModel(swap, basis_vector(0, 2), np.eye(2), 2, 2)


def embed_family_as_horizon(spec: ChannelFamilySpec) -> HorizonModel:
    """Lift a family channel to a model whose interior channel equals it.

    The black hole and the exterior both take the dimension of the minimal
    dilation; ``V`` is the identity, ``phi0 = |0>``.
    """
    w = make_family(spec).stinespring()
    r = w.shape[0] // spec.dim
    phi0 = basis_vector(0, r)
    return HorizonModel(unitary_with_dilation(w, phi0), phi0, np.eye(spec.dim), spec.dim, r)
