"""Horizon smoothness versus exterior distinguishability.

For a :class:`HorizonModel` this module computes

* ``epsilon``: half the diamond distance between the interior channel and
  the declared ideal embedding ``Ad_V`` (certified bracket);
* ``D_max``: the largest trace distance between exterior states of two
  infalling pure states with the same charge (variational lower bound);
* the pivot radius: how close all exterior states are to one fixed state;
* the interior fidelity floor over a sampled set of inputs;

and checks ``D_max <= 2 sqrt(2 epsilon)`` together with the intermediate
inequalities that lead to it.  Lower bounds are used on the D side and
upper bounds on the epsilon side, so a reported violation cannot be an
artefact of solver gaps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .channels import ChannelFamilySpec, HorizonModel, embed_family_as_horizon, ideal_channel, interior_channel
from .linalg import RngLike, SeededRng, as_generator, basis_vector, ginibre, random_pure_states
from .metrics import DiamondResult, diamond_distance, trace_distance
from .optimize import sphere_ascent

PASS, FAIL, INDETERMINATE = "pass", "fail", "indeterminate"

INEQ_TOL = 1e-7
PIVOT_TOL = 1e-6
MU_STAGES = (1e-2, 1e-4, 1e-6, 1e-8)
PURE_ROUNDS = 4  # the pure pivot is reported, never required


def _default_rng(rng: RngLike | None) -> np.random.Generator:
    return as_generator(rng if rng is not None else SeededRng(0))


def _tensor3(model: HorizonModel) -> np.ndarray:
    """Dilation as ``W3[i, e, f]``."""
    return model.dilation.reshape(model.dim_i, model.dim_e, model.dim_f)


# ---------------------------------------------------------------------------
# Batched reduced states


def exterior_states(model: HorizonModel, psis: np.ndarray) -> np.ndarray:
    """``rho_E(psi)`` for each row of ``psis``."""
    phi = np.einsum("ief,rf->rie", _tensor3(model), np.atleast_2d(psis))
    return np.einsum("rie,rif->ref", phi, phi.conj())


def interior_fidelities(model: HorizonModel, psis: np.ndarray) -> np.ndarray:
    """``<V psi| rho_I(psi) |V psi>`` for each row of ``psis``."""
    psis = np.atleast_2d(psis)
    phi = np.einsum("ief,rf->rie", _tensor3(model), psis)
    target = psis @ model.V.T  # rows V psi
    amp = np.einsum("ri,rie->re", target.conj(), phi)
    return np.clip(np.sum(np.abs(amp) ** 2, axis=1), 0.0, 1.0)


def interior_fidelity(model: HorizonModel, psi: np.ndarray) -> float:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (model.dim_f,):
        raise ValueError(f"state of shape {psi.shape} for an infaller of dim {model.dim_f}")
    return float(interior_fidelities(model, psi[None, :])[0])


def probe_states(dim: int, samples: int, rng: RngLike) -> np.ndarray:
    """Haar samples, the basis, and ``(|i> + c|j>)/sqrt2`` for ``c`` in ``{1, i}``."""
    rows = [random_pure_states(samples, dim, rng)] if samples > 0 else []
    rows.append(np.eye(dim, dtype=complex))
    sup = []
    for i in range(dim):
        for j in range(i + 1, dim):
            for c in (1.0, 1j):
                v = np.zeros(dim, dtype=complex)
                v[i], v[j] = 1.0, c
                sup.append(v / np.sqrt(2))
    if sup:
        rows.append(np.array(sup))
    return np.vstack(rows)


def fidelity_floor(model: HorizonModel, samples: int = 256, rng: RngLike | None = None) -> float:
    return float(interior_fidelities(model, probe_states(model.dim_f, samples, _default_rng(rng))).min())


# ---------------------------------------------------------------------------
# epsilon


def compute_epsilon(
    model: HorizonModel,
    tol: float = 1e-6,
    *,
    restarts: int = 32,
    rng: RngLike | None = None,
) -> DiamondResult:
    """Certified bracket on ``0.5 ||N_I - Ad_V||_dia``; read ``.lower`` / ``.upper``."""
    return diamond_distance(interior_channel(model), ideal_channel(model), tol, restarts=restarts, rng=rng)


# ---------------------------------------------------------------------------
# D_max


def pair_objective(w3: np.ndarray):
    """Batched ``(psi, psi') -> 0.5 ||rho_E(psi) - rho_E(psi')||_1`` with gradient."""
    d = w3.shape[2]
    w3c = w3.conj()

    def fun(x):
        r = x.shape[0]
        xs = x.reshape(r, 2, d)
        phi = np.einsum("ief,rsf->rsie", w3, xs)
        rho = np.einsum("rsie,rsif->rsef", phi, phi.conj())
        lam, q = np.linalg.eigh(rho[:, 0] - rho[:, 1])
        s = (q * np.sign(lam)[:, None, :]) @ np.swapaxes(q.conj(), 1, 2)
        y = np.einsum("ref,rsif->rsie", s, phi)
        g = np.einsum("ief,rsie->rsf", w3c, y)
        g[:, 1] *= -1
        return 0.5 * np.abs(lam).sum(axis=1), g.reshape(r, -1)

    return fun


@dataclass(frozen=True)
class DmaxResult:
    value: float
    witness: tuple[np.ndarray, np.ndarray]
    sector: int | None

    def __iter__(self):
        # unpacks as (value, (psi, psi'))
        return iter((self.value, self.witness))


def _sector_starts(k: int, restarts: int, gen: np.random.Generator) -> np.ndarray:
    starts = []
    eye = np.eye(k, dtype=complex)
    for i in range(k):
        for j in range(i + 1, k):
            starts.append(np.concatenate([eye[i], eye[j]]))
            starts.append(np.concatenate([eye[i] + eye[j], eye[i] - eye[j]]))
            starts.append(np.concatenate([eye[i] + 1j * eye[j], eye[i] - 1j * eye[j]]))
    if restarts > 0:
        starts.extend(ginibre((restarts, 2 * k), gen))
    return np.array(starts)


def compute_dmax(model: HorizonModel, restarts: int = 32, rng: RngLike | None = None) -> DmaxResult:
    """Lower bound on ``D_max`` from multi-start ascent over same-charge pairs."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    gen = _default_rng(rng)
    w3 = _tensor3(model)
    e0 = basis_vector(0, model.dim_f)
    best = DmaxResult(0.0, (e0, e0), None)
    for charge, idx in model.sectors().items():
        if len(idx) < 2:
            continue
        sub = w3[:, :, list(idx)]
        x, f, _ = sphere_ascent(pair_objective(sub), _sector_starts(len(idx), restarts, gen), blocks=2)
        k = int(np.argmax(f))
        if f[k] > best.value or best.sector is None:
            pair = x[k].reshape(2, len(idx))
            full = np.zeros((2, model.dim_f), dtype=complex)
            full[:, list(idx)] = pair
            best = DmaxResult(float(min(1.0, f[k])), (full[0], full[1]), charge)
    return best


# ---------------------------------------------------------------------------
# Pivot radius
#
# minimize over sigma  max over psi on F (x) R  0.5 || A(psi) - sigma (x) rho_R(psi) ||_1
# with A = (N_E (x) id_R)(psi psi^dag).  dim R = 1 is the plain 1-center of the
# exterior images; dim R = dim F also bounds the (E, R) correlations of
# entangled inputs.


def _images(w3: np.ndarray, xs: np.ndarray, d_r: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    r = xs.shape[0]
    d_i, d_e, d_f = w3.shape
    xm = xs.reshape(r, d_f, d_r)
    phi = np.einsum("ief,rfk->riek", w3, xm).reshape(r, d_i, d_e * d_r)
    a = np.einsum("ria,rib->rab", phi, phi.conj())
    b = np.einsum("rfk,rfl->rkl", xm, xm.conj())
    return a, b, phi


def _kron_batch(sigma: np.ndarray, b: np.ndarray) -> np.ndarray:
    d_e, d_r = sigma.shape[0], b.shape[-1]
    return np.einsum("ef,rkl->rekfl", sigma, b).reshape(-1, d_e * d_r, d_e * d_r)


def pivot_inner_objective(w3: np.ndarray, sigma: np.ndarray, d_r: int):
    """Batched ``psi -> 0.5 ||A(psi) - sigma (x) rho_R(psi)||_1`` with gradient."""
    d_i, d_e, d_f = w3.shape
    w3c = w3.conj()

    def fun(x):
        r = x.shape[0]
        a, b, phi = _images(w3, x, d_r)
        lam, q = np.linalg.eigh(a - _kron_batch(sigma, b))
        s = (q * np.sign(lam)[:, None, :]) @ np.swapaxes(q.conj(), 1, 2)
        y1 = np.einsum("rab,rib->ria", s, phi).reshape(r, d_i, d_e, d_r)
        g = np.einsum("ief,riek->rfk", w3c, y1)
        y = np.einsum("rekfl,fe->rkl", s.reshape(r, d_e, d_r, d_e, d_r), sigma)
        g -= np.einsum("rfl,rkl->rfk", x.reshape(r, d_f, d_r), y)
        return 0.5 * np.abs(lam).sum(axis=1), g.reshape(r, -1)

    return fun


def _center_values(a: np.ndarray, b: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    return 0.5 * np.abs(np.linalg.eigvalsh(a - _kron_batch(sigma, b))).sum(axis=1)


def _pack(g: np.ndarray) -> np.ndarray:
    return np.concatenate([g.real.ravel(), g.imag.ravel()])


def _unpack(v: np.ndarray, shape) -> np.ndarray:
    n = v.size // 2
    return (v[:n] + 1j * v[n:]).reshape(shape)


def _sigma_of(g: np.ndarray) -> np.ndarray:
    p = g @ g.conj().T
    return p / np.trace(p).real


def minimize_center(a: np.ndarray, b: np.ndarray, sigma0: np.ndarray, rank: int | None = None) -> tuple[np.ndarray, float]:
    """Approximate ``argmin_sigma max_j 0.5 ||A_j - sigma (x) B_j||_1``.

    ``sigma = G G^dag / Tr(G G^dag)`` with ``G`` of shape ``(d_E, rank)``;
    ``rank=1`` restricts to pure pivots.  The max and the trace norm are
    smoothed (log-sum-exp, ``sqrt(lam^2 + mu^2)``) and ``mu`` is decreased
    in stages; the exact objective picks the best stage.
    """
    d_e = sigma0.shape[0]
    d_r = b.shape[-1]
    rank = d_e if rank is None else rank
    lam0, vec0 = np.linalg.eigh(sigma0)
    if rank == d_e:
        mixed = 0.98 * sigma0 + 0.02 * np.eye(d_e) / d_e
        lam, vec = np.linalg.eigh(mixed)
        g0 = vec * np.sqrt(np.clip(lam, 0.0, None))
    else:
        g0 = vec0[:, ::-1][:, :rank] * np.sqrt(np.clip(lam0[::-1][:rank], 1e-6, None))

    cands = [(_sigma_of(g0), g0)]
    if rank == d_e:
        cands.append((sigma0, g0))
    best_sigma, best_val = None, np.inf
    for s, _ in cands:
        v = float(_center_values(a, b, s).max())
        if v < best_val:
            best_sigma, best_val = s, v

    def smoothed(v, mu):
        g = _unpack(v, (d_e, rank))
        p = g @ g.conj().T
        t = np.trace(p).real
        sigma = p / t
        lam, q = np.linalg.eigh(a - _kron_batch(sigma, b))
        h = np.sqrt(lam**2 + mu**2)
        f = 0.5 * h.sum(axis=1)
        m = f.max()
        w = np.exp((f - m) / mu)
        z = w.sum()
        w /= z
        s = np.einsum("rab,r->rab", (q * (lam / h)[:, None, :]) @ np.swapaxes(q.conj(), 1, 2), w)
        gs = -0.5 * np.einsum("rekfl,rlk->ef", s.reshape(-1, d_e, d_r, d_e, d_r), b)
        gs = (gs + gs.conj().T) / 2
        hmat = (gs - np.trace(gs @ sigma).real * np.eye(d_e)) / t
        return m + mu * math.log(z), _pack(2 * hmat @ g)

    v = _pack(g0)
    for mu in MU_STAGES:
        res = minimize(smoothed, v, args=(mu,), jac=True, method="L-BFGS-B", options={"maxiter": 500, "gtol": 1e-12, "ftol": 1e-15})
        v = res.x / np.linalg.norm(res.x)
        s = _sigma_of(_unpack(v, (d_e, rank)))
        val = float(_center_values(a, b, s).max())
        if val < best_val:
            best_sigma, best_val = s, val
    return best_sigma, best_val


@dataclass(frozen=True)
class PivotResult:
    radius: float
    pivot: np.ndarray
    pure_radius: float
    pure_pivot: np.ndarray
    converged: bool
    rounds: int
    deficit: float = 0.0  # 1 - trace of the pivot before normalization

    def __iter__(self):
        return iter((self.radius, self.pivot))


def _distinct(a: np.ndarray, order: np.ndarray, limit: int, thr: float = 1e-4) -> list[int]:
    keep: list[int] = []
    for i in order:
        if all(np.abs(a[i] - a[j]).max() > thr for j in keep):
            keep.append(int(i))
            if len(keep) >= limit:
                break
    return keep


def _exchange(w3, cands, d_r, rank, restarts, gen, tol, max_rounds):
    """Grow the candidate set with distinct inner maximizers until the center is stable."""
    a, b, _ = _images(w3, cands, d_r)
    d_e = w3.shape[1]
    sigma = a.sum(axis=0).reshape(d_e, d_r, d_e, d_r).trace(axis1=1, axis2=3)
    sigma = (sigma + sigma.conj().T) / (2 * np.trace(sigma).real)
    best_r, best_s, done = np.inf, sigma, False
    n_in = w3.shape[2] * d_r
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        sigma, fin = minimize_center(a, b, sigma, rank)
        starts = np.vstack([cands, ginibre((restarts, n_in), gen)])
        x, f, _ = sphere_ascent(pivot_inner_objective(w3, sigma, d_r), starts)
        inner = float(f.max())
        radius = max(fin, inner)
        if radius < best_r:
            best_r, best_s = radius, sigma
        if inner <= fin + tol:
            done = True
            break
        # locally worst inputs near the active set, most violated first
        ax, bx, _ = _images(w3, x, d_r)
        order = np.argsort(f)[::-1]
        order = order[f[order] > fin - 1e-3]
        keep = _distinct(ax, order, 8)
        cands = np.vstack([cands, x[keep]])
        a, b = np.concatenate([a, ax[keep]]), np.concatenate([b, bx[keep]])
    return best_r, best_s, done, rounds


def pivot_radius(
    model: HorizonModel,
    samples: int = 16,
    rng: RngLike | None = None,
    *,
    reference: bool = False,
    extra_states: Sequence[np.ndarray] = (),
    restarts: int = 16,
    tol: float = 1e-7,
    max_rounds: int = 20,
) -> PivotResult:
    """Upper estimate of ``min_sigma max_psi 0.5 ||rho_E(psi) - sigma||_1``.

    An exchange method alternates a smoothed minimization over ``sigma`` on
    a finite set of inputs with a multi-start ascent for the worst input,
    which is added to the set.  ``converged`` means the last ascent found no
    input worse than the set by more than ``tol``; the reported radius is
    the larger of the two values, so it bounds the true minimax from above
    whenever the ascent found the global worst case.

    With ``reference=True`` inputs live on ``F (x) R`` with ``dim R = dim F``
    and the pivot is compared as ``sigma (x) rho_R``.  The best pure pivot
    is searched separately and reported as ``pure_radius``.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    gen = _default_rng(rng)
    w3 = _tensor3(model)
    d_f = model.dim_f
    d_r = d_f if reference else 1
    n_in = d_f * d_r
    rows = [random_pure_states(samples, n_in, gen)]
    if reference:
        rows.append((np.eye(d_f, dtype=complex) / np.sqrt(d_f)).reshape(1, -1))
    else:
        rows.append(probe_states(d_f, 0, gen))
    for s in extra_states:
        s = np.asarray(s, dtype=complex).reshape(-1)
        if reference and s.size == d_f:
            s = np.kron(s, basis_vector(0, d_r))
        rows.append((s / np.linalg.norm(s))[None, :])
    cands = np.vstack(rows)

    r_mix, s_mix, c_mix, n_mix = _exchange(w3, cands, d_r, None, restarts, gen, tol, max_rounds)
    r_pure, s_pure, c_pure, n_pure = _exchange(w3, cands, d_r, 1, restarts, gen, tol, PURE_ROUNDS)
    r_mix, r_pure = min(r_mix, 1.0), min(r_pure, 1.0)
    if r_pure < r_mix:
        return PivotResult(r_pure, s_pure, r_pure, s_pure, c_pure, n_mix + n_pure)
    return PivotResult(r_mix, s_mix, r_pure, s_pure, c_mix, n_mix + n_pure)


# ---------------------------------------------------------------------------
# Verification


@dataclass(frozen=True)
class VerifyConfig:
    tolerance: float = 1e-6
    restarts: int = 32
    samples: int = 256
    pivot_samples: int = 16
    pivot_restarts: int = 16
    pivot_rounds: int = 20
    lemma1_pairs: int = 0  # > 0 runs the exact check on near-ideal models
    lemma1_threshold: float = 1e-9

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.samples < 0 or self.pivot_samples < 2:
            raise ValueError("samples must be >= 0 and pivot_samples >= 2")


@dataclass(frozen=True)
class TradeoffReport:
    epsilon_lower: float
    epsilon_upper: float
    epsilon_certified: bool
    dmax_lower: float
    dmax_witness: tuple[np.ndarray, np.ndarray]
    pivot_radius: float
    pure_pivot_radius: float
    pivot: np.ndarray
    pivot_converged: bool
    pivot_deficit: float
    fidelity_floor: float
    bound_value: float
    inequality_holds: bool
    verdicts: dict = field(default_factory=dict)
    verdict: str = INDETERMINATE
    lemma1_residual: float | None = None
    rng_provenance: dict | None = None

    @property
    def ratio(self) -> float:
        """``D^2 / (8 epsilon)``; at most 1 when the trade-off holds."""
        return tradeoff_ratio(self.dmax_lower, self.epsilon_upper)


def tradeoff_ratio(dmax: float, eps: float) -> float:
    """``D^2 / (8 eps)``; at most 1 when the trade-off holds.  ``D`` below
    the inequality tolerance counts as zero when ``eps`` vanishes."""
    if eps <= 0:
        return 0.0 if dmax <= INEQ_TOL else math.inf
    return dmax**2 / (8 * eps)


def _check(ok: bool, certified: bool = True) -> str:
    if not certified:
        return INDETERMINATE
    return PASS if ok else FAIL


def verify_tradeoff(
    model: HorizonModel,
    config: VerifyConfig = VerifyConfig(),
    rng: RngLike | None = None,
) -> TradeoffReport:
    """Compute every quantity for ``model`` and grade each inequality.

    Verdicts are ``pass``, ``fail`` or ``indeterminate``; anything that
    depends on an uncertified epsilon bracket, or on a pivot search that
    did not converge, is indeterminate.  The overall verdict is ``fail`` if
    any check fails, ``indeterminate`` if epsilon is uncertified, and
    ``pass`` otherwise.
    """
    provenance = rng.descriptor() if isinstance(rng, SeededRng) else None
    gen = _default_rng(rng)
    eps = compute_epsilon(model, config.tolerance, restarts=config.restarts, rng=gen)
    dmax = compute_dmax(model, config.restarts, gen)
    floor = fidelity_floor(model, config.samples, gen)
    piv = pivot_radius(
        model,
        config.pivot_samples,
        gen,
        extra_states=dmax.witness,
        restarts=config.pivot_restarts,
        max_rounds=config.pivot_rounds,
    )
    e_up = eps.upper
    bound = 2 * math.sqrt(2 * e_up)
    holds = dmax.value <= bound + INEQ_TOL
    cert = eps.certified
    verdicts = {
        "inequality": _check(holds, cert),
        "tradeoff": _check(e_up >= dmax.value**2 / 8 - INEQ_TOL, cert),
        "fidelity": _check(e_up >= 1 - floor - INEQ_TOL, cert),
        "pivot_bound": _check(piv.radius <= math.sqrt(2 * e_up) + PIVOT_TOL, cert and piv.converged),
        "triangle": _check(dmax.value <= 2 * piv.radius + PIVOT_TOL, piv.converged),
    }
    if FAIL in verdicts.values():
        verdict = FAIL
    elif not cert:
        verdict = INDETERMINATE
    else:
        verdict = PASS

    residual = None
    if config.lemma1_pairs > 0 and e_up <= config.lemma1_threshold:
        residual = lemma1_check(model, config.lemma1_pairs, gen, epsilon_upper=e_up, threshold=config.lemma1_threshold)
    return TradeoffReport(
        epsilon_lower=eps.lower,
        epsilon_upper=e_up,
        epsilon_certified=cert,
        dmax_lower=dmax.value,
        dmax_witness=dmax.witness,
        pivot_radius=piv.radius,
        pure_pivot_radius=piv.pure_radius,
        pivot=piv.pivot,
        pivot_converged=piv.converged,
        pivot_deficit=piv.deficit,
        fidelity_floor=floor,
        bound_value=bound,
        inequality_holds=bool(holds),
        verdicts=verdicts,
        verdict=verdict,
        lemma1_residual=residual,
        rng_provenance=provenance,
    )


# ---------------------------------------------------------------------------
# Exact no-hair check


class PreconditionError(ValueError):
    """The model is too far from ideal for the exact check."""


def bridge_legs(model: HorizonModel, psi0: np.ndarray, psi1: np.ndarray) -> tuple[float, float, float]:
    """Distances ``(psi0, psi+)``, ``(psi+, psi1)`` and ``(psi0, psi1)`` of exterior states.

    ``psi+ = (psi0 + psi1)/sqrt2`` is normalized for orthogonal inputs.
    """
    plus = np.asarray(psi0) + np.asarray(psi1)
    plus = plus / np.linalg.norm(plus)
    r0, rp, r1 = exterior_states(model, np.array([psi0, plus, psi1]))
    return trace_distance(r0, rp), trace_distance(rp, r1), trace_distance(r0, r1)


def lemma1_check(
    model: HorizonModel,
    pair_count: int,
    rng: RngLike | None = None,
    *,
    threshold: float = 1e-3,
    epsilon_upper: float | None = None,
) -> float:
    """Largest exterior trace distance over sampled same-charge pairs.

    Pairs are Haar draws inside each sector, the basis pairs, and random
    orthogonal pairs; orthogonal pairs are also routed through their equal
    superposition and both legs enter the maximum.
    """
    gen = _default_rng(rng)
    if epsilon_upper is None:
        epsilon_upper = compute_epsilon(model, rng=gen).upper
    if epsilon_upper > threshold:
        raise PreconditionError(f"epsilon {epsilon_upper:.3e} exceeds the threshold {threshold:.1e}")
    d = model.dim_f
    sectors = [idx for idx in model.sectors().values() if len(idx) >= 2]
    if not sectors:
        return 0.0
    worst = 0.0
    for s, idx in enumerate(sectors):
        k = len(idx)
        count = pair_count // len(sectors) + (s < pair_count % len(sectors))
        embed = np.zeros((k, d), dtype=complex)
        embed[np.arange(k), list(idx)] = 1.0
        # Haar pairs
        p = random_pure_states(2 * count, k, gen) @ embed
        rho = exterior_states(model, p).reshape(count, 2, model.dim_e, model.dim_e)
        for r in rho:
            worst = max(worst, trace_distance(r[0], r[1]))
        # orthogonal pairs: basis pairs and random orthonormal pairs
        ortho = [(embed[i], embed[j]) for i in range(k) for j in range(i + 1, k)]
        for _ in range(max(1, count // 4)):
            q, _ = np.linalg.qr(ginibre((k, 2), gen))
            ortho.append((q[:, 0] @ embed, q[:, 1] @ embed))
        for a, b in ortho:
            worst = max(worst, *bridge_legs(model, a, b))
    return worst


# ---------------------------------------------------------------------------
# Scaling fits


class InsufficientData(ValueError):
    """Fewer certified points than a fit needs."""


MIN_FIT_POINTS = 5
EPS_FLOOR = 1e-8


@dataclass(frozen=True)
class ScalingPoint:
    param: float
    epsilon_lower: float
    epsilon_upper: float
    dmax_lower: float
    certified: bool

    @property
    def bound(self) -> float:
        return 2 * math.sqrt(2 * self.epsilon_upper)

    @property
    def ratio(self) -> float:
        return tradeoff_ratio(self.dmax_lower, self.epsilon_upper)

    @property
    def fittable(self) -> bool:
        return self.certified and self.epsilon_upper > EPS_FLOOR and self.dmax_lower > 0


@dataclass(frozen=True)
class ScalingFit:
    family: str
    points: tuple[ScalingPoint, ...]
    slope: float
    intercept: float
    r_squared: float


def fit_loglog(x: Sequence[float], y: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares line through ``(log x, log y)``: slope, intercept, r^2."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    if lx.size < 2:
        raise InsufficientData("a line needs at least two points")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def scaling_point(
    spec: ChannelFamilySpec, tol: float = 1e-6, *, restarts: int = 32, rng: RngLike | None = None
) -> ScalingPoint:
    gen = _default_rng(rng)
    model = embed_family_as_horizon(spec)
    eps = compute_epsilon(model, tol, restarts=restarts, rng=gen)
    dmax = compute_dmax(model, restarts, gen)
    return ScalingPoint(float(spec.param), eps.lower, eps.upper, dmax.value, eps.certified)


def scaling_fit(
    family: str,
    params: Sequence[float],
    tol: float = 1e-6,
    *,
    dim: int = 2,
    restarts: int = 32,
    rng: RngLike | None = None,
) -> ScalingFit:
    """Slope of ``log D_max`` against ``log epsilon`` over a parameter grid.

    Uncertified points and points with ``epsilon <= 1e-8`` are kept in
    ``points`` but left out of the fit.
    """
    gen = _default_rng(rng)
    pts = tuple(scaling_point(ChannelFamilySpec(family, dim, p), tol, restarts=restarts, rng=gen) for p in params)
    return fit_points(family, pts)


def fit_points(family: str, pts: Sequence[ScalingPoint]) -> ScalingFit:
    used = [p for p in pts if p.fittable]
    if len(used) < MIN_FIT_POINTS:
        raise InsufficientData(f"{len(used)} certified points, at least {MIN_FIT_POINTS} are needed")
    slope, intercept, r2 = fit_loglog([p.epsilon_upper for p in used], [p.dmax_lower for p in used])
    return ScalingFit(family, tuple(pts), slope, intercept, r2)
