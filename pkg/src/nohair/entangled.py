"""Infalling systems entangled with an outside reference ``R``.

The input is ``|Phi>_FR = sum_i sqrt(lambda_i) |f_i>|r_i>``; the horizon
acts as ``U (x) 1_R``.  At epsilon = 0 the exterior decouples from both the
interior and the reference; for epsilon > 0 the (E, R) state stays within
``sqrt(2 epsilon)`` of a product ``sigma (x) rho_R``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import HorizonModel
from .linalg import RngLike, is_unitary
from .metrics import trace_distance
from .tradeoff import PivotResult, compute_epsilon, pivot_radius

LAMBDA_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SchmidtInput:
    """Schmidt coefficients with optional basis unitaries (columns are basis vectors)."""

    lambdas: tuple[float, ...]
    f_basis: np.ndarray | None = None
    r_basis: np.ndarray | None = None

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float).ravel()
        if lam.size == 0:
            raise ValueError("at least one Schmidt coefficient is required")
        if np.any(lam < 0):
            raise ValueError("Schmidt coefficients must be nonnegative")
        if abs(lam.sum() - 1.0) > LAMBDA_TOL:
            raise ValueError(f"Schmidt coefficients sum to {lam.sum():.15f}, not 1")
        object.__setattr__(self, "lambdas", tuple(float(x) for x in lam))
        for name in ("f_basis", "r_basis"):
            u = getattr(self, name)
            if u is not None:
                u = np.asarray(u, dtype=complex)
                if not is_unitary(u, tol=1e-10):
                    raise ValueError(f"{name} is not unitary")
                object.__setattr__(self, name, u)
        if self.r_basis is not None and self.r_basis.shape[0] != lam.size:
            raise ValueError("r_basis must act on a reference of the Schmidt length")

    @property
    def dim_r(self) -> int:
        return len(self.lambdas)

    def padded(self, dim_r: int) -> "SchmidtInput":
        """Same state with extra zero coefficients (reference enlarged)."""
        if dim_r == self.dim_r:
            return self
        if dim_r < self.dim_r:
            raise ValueError("cannot shrink the reference")
        if self.r_basis is not None:
            r = np.eye(dim_r, dtype=complex)
            r[: self.dim_r, : self.dim_r] = self.r_basis
        else:
            r = None
        return SchmidtInput(self.lambdas + (0.0,) * (dim_r - self.dim_r), self.f_basis, r)

    def amplitudes(self, dim_f: int) -> np.ndarray:
        """``X[f, k]`` with ``|Phi> = sum_fk X[f, k] |f>|k>``."""
        n = self.dim_r
        if n > dim_f:
            raise ValueError(f"{n} Schmidt terms exceed dim F = {dim_f}")
        f = np.eye(dim_f, dtype=complex) if self.f_basis is None else self.f_basis
        if f.shape[0] != dim_f:
            raise ValueError(f"f_basis acts on dim {f.shape[0]}, infaller has dim {dim_f}")
        r = np.eye(n, dtype=complex) if self.r_basis is None else self.r_basis
        return (f[:, :n] * np.sqrt(self.lambdas)) @ r.T


def joint_state(model: HorizonModel, inp: SchmidtInput) -> np.ndarray:
    """``(U (x) 1_R)(|Phi>_FR (x) |phi0>)`` on ``I (x) E (x) R``."""
    return (model.dilation @ inp.amplitudes(model.dim_f)).reshape(-1)


def er_state(model: HorizonModel, inp: SchmidtInput) -> np.ndarray:
    psi = joint_state(model, inp).reshape(model.dim_i, model.dim_e * inp.dim_r)
    return psi.T @ psi.conj()


def reference_state(inp: SchmidtInput) -> np.ndarray:
    """``rho_R = R diag(lambda) R^dag``; the horizon never touches it."""
    r = np.eye(inp.dim_r, dtype=complex) if inp.r_basis is None else inp.r_basis
    return (r * np.asarray(inp.lambdas)) @ r.conj().T


def er_pivot(
    model: HorizonModel, samples: int = 16, rng: RngLike | None = None, **kwargs
) -> PivotResult:
    """Pivot for ``(E, R)`` comparisons: the reference-assisted center."""
    return pivot_radius(model, samples, rng, reference=True, **kwargs)


def factorization_residual(
    model: HorizonModel,
    inp: SchmidtInput,
    pivot: np.ndarray | PivotResult | None = None,
    *,
    rng: RngLike | None = None,
) -> float:
    """``0.5 || rho_ER - sigma (x) rho_R ||_1`` for the pivot ``sigma``.

    Without a pivot one is searched with this input added to the candidates.
    """
    if pivot is None:
        x = inp.padded(model.dim_f).amplitudes(model.dim_f)
        pivot = er_pivot(model, rng=rng, extra_states=[x.reshape(-1)])
    if isinstance(pivot, PivotResult):
        if not pivot.converged:
            raise RuntimeError("pivot search did not converge")
        pivot = pivot.pivot
    rho_er = er_state(model, inp)
    rho_r = reference_state(inp)
    return trace_distance(rho_er, np.kron(pivot, rho_r))


@dataclass(frozen=True)
class DerRecord:
    der: float
    rhs: float
    holds: bool
    reference_part: float
    epsilon_upper: float

    @property
    def new_part(self) -> float:
        """Distinguishability not already present in the reference."""
        return self.der - self.reference_part


def der_bound_check(
    model: HorizonModel,
    a: SchmidtInput,
    b: SchmidtInput,
    *,
    epsilon_upper: float | None = None,
    rng: RngLike | None = None,
) -> DerRecord:
    """``TD(rho_ER(a), rho_ER(b)) <= 2 sqrt(2 eps) + TD(rho_R(a), rho_R(b))``."""
    n = max(a.dim_r, b.dim_r)
    a, b = a.padded(n), b.padded(n)
    if epsilon_upper is None:
        epsilon_upper = compute_epsilon(model, rng=rng).upper
    der = trace_distance(er_state(model, a), er_state(model, b))
    ref = trace_distance(reference_state(a), reference_state(b))
    rhs = 2 * math.sqrt(2 * epsilon_upper) + ref
    return DerRecord(der, rhs, bool(der <= rhs + 1e-6), ref, epsilon_upper)
