"""Facet-level constitutive model.

Three regimes govern the facet traction:

* fracture for positive normal strain: an effective traction bounded by a
  mixed-mode, strain-history-dependent softening limit, enforced by a
  vertical return at fixed strain;
* compression: incrementally elastic normal response clamped by a
  pore-collapse/rehardening boundary driven by volumetric and deviatoric
  strain;
* friction: shear plasticity on a cohesive-frictional cone whose radius
  grows with compressive normal traction.

All functions broadcast over numpy arrays; `facet_update` is evaluated for
every facet of the mesh in one vectorized call.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


class SnapBackError(Exception):
    """Edge longer than the tensile characteristic length: the softening
    modulus would be negative and the facet response exhibits snap-back."""


@dataclass(frozen=True)
class MaterialParams:
    """Mesoscale material constants (N-mm-s-MPa units)."""
    density: float = 2380.0       # kg/m^3
    E0: float = 60273.0           # MPa, effective normal modulus
    alpha: float = 0.25           # shear/normal coupling
    sigma_t: float = 3.44         # MPa, tensile strength
    lt: float = 500.0             # mm, tensile characteristic length
    rst: float = 2.6              # shear/tensile strength ratio
    nt: float = 0.4               # softening interaction exponent
    sigma_c0: float = 150.0       # MPa, compressive yield
    Hc0_over_E0: float = 0.4
    Hc1_over_E0: float = 0.1
    kappa_c0: float = 4.0
    kappa_c1: float = 1.0
    kappa_c2: float = 5.0
    kappa_c3: float = 0.1
    mu_0: float = 0.4
    mu_inf: float = 0.0
    sigma_N0: float = 600.0       # MPa
    Ed_over_E0: float = 1.0
    beta: float = 0.0
    k_t: float = 0.0
    k_s: float = 0.0
    k_c: float = 0.0
    r_s: float = 0.0

    def __post_init__(self):
        if self.E0 <= 0 or self.alpha <= 0:
            raise ValueError("E0 and alpha must be positive")
        if self.sigma_t <= 0 or self.lt <= 0 or self.sigma_c0 <= 0:
            raise ValueError("sigma_t, lt, sigma_c0 must be positive")
        if self.kappa_c0 <= 1:
            raise ValueError("kappa_c0 must exceed 1")

    @property
    def sigma_s(self) -> float:
        """Cohesion (shear strength)."""
        return self.rst * self.sigma_t

    @property
    def Hc0(self) -> float:
        return self.Hc0_over_E0 * self.E0

    @property
    def Hc1(self) -> float:
        return self.Hc1_over_E0 * self.E0

    @property
    def Ed(self) -> float:
        return self.Ed_over_E0 * self.E0

    def with_overrides(self, **kw) -> "MaterialParams":
        return replace(self, **kw)


@dataclass
class FacetStateArray:
    """Per-facet history, stored as struct-of-arrays over all facets.

    e_max       max effective strain ever reached (fracture history)
    e_p_m/e_p_l plastic shear strains
    e_n_res     residual normal strain from compressive pore collapse
    e_n_min     most negative normal strain seen
    traction    last committed traction (MPa)
    """
    e_max: np.ndarray
    e_p_m: np.ndarray
    e_p_l: np.ndarray
    e_n_res: np.ndarray
    e_n_min: np.ndarray
    traction: np.ndarray          # (nf, 3)

    @classmethod
    def virgin(cls, n_facets: int) -> "FacetStateArray":
        z = lambda: np.zeros(n_facets)
        return cls(e_max=z(), e_p_m=z(), e_p_l=z(),
                   e_n_res=z(), e_n_min=z(),
                   traction=np.zeros((n_facets, 3)))

    def copy(self) -> "FacetStateArray":
        return FacetStateArray(self.e_max.copy(), self.e_p_m.copy(),
                               self.e_p_l.copy(), self.e_n_res.copy(),
                               self.e_n_min.copy(), self.traction.copy())

    def __len__(self):
        return len(self.e_max)


def effective_measures(e, params: MaterialParams):
    """Effective strain and coupling angle.

    Returns (e_eff, omega) with omega = atan2(e_N, sqrt(alpha (e_M^2+e_L^2)))
    in [-pi/2, pi/2]; a zero strain reports omega = pi/2 by convention.
    """
    e = np.asarray(e, float)
    e_n, e_m, e_l = e[..., 0], e[..., 1], e[..., 2]
    shear = np.sqrt(params.alpha * (e_m ** 2 + e_l ** 2))
    e_eff = np.sqrt(e_n ** 2 + shear ** 2)
    omega = np.where(e_eff == 0.0, np.pi / 2, np.arctan2(e_n, shear))
    if omega.ndim == 0:
        return float(e_eff), float(omega)
    return e_eff, omega


def sigma0(omega, params: MaterialParams):
    """Mixed-mode strength limit for the effective traction.

    Rationalized (singularity-free) form of the tension-shear envelope;
    equals sigma_t at omega = pi/2 and sigma_t rst / sqrt(alpha) at 0.
    """
    omega = np.asarray(omega, float)
    s, c = np.sin(omega), np.cos(omega)
    val = 2.0 * params.sigma_t / (
        s + np.sqrt(s ** 2 + 4.0 * params.alpha * c ** 2 / params.rst ** 2))
    return float(val) if val.ndim == 0 else val


def H0(omega, length, params: MaterialParams):
    """Mixed-mode softening modulus, a power interpolation between the
    pure-shear modulus H_s/alpha and the pure-tension modulus
    H_t = 2 E_0 / (l_t/l - 1)."""
    length = np.asarray(length, float)
    if np.any(length >= params.lt):
        bad = np.atleast_1d(np.nonzero(np.atleast_1d(length >= params.lt))[0])
        raise SnapBackError(
            f"edge length >= characteristic length lt={params.lt} "
            f"(facet indices {bad.tolist()[:10]})")
    h_t = 2.0 * params.E0 / (params.lt / length - 1.0)
    h_s = params.r_s * params.E0
    omega = np.asarray(omega, float)
    val = h_s / params.alpha + (h_t - h_s / params.alpha) * \
        (2.0 * np.clip(omega, 0.0, None) / np.pi) ** params.nt
    return float(val) if val.ndim == 0 else val


def sigma_bt(e_max, omega, length, params: MaterialParams):
    """Tensile/mixed-mode boundary: exponential decay of the strength limit
    once the max effective strain passes its elastic limit."""
    s0 = sigma0(omega, params)
    h0 = H0(omega, length, params)
    e0 = s0 / params.E0
    val = s0 * np.exp(-h0 * np.maximum(np.asarray(e_max, float) - e0, 0.0) / s0)
    return float(val) if np.ndim(val) == 0 else val


def r_dv(e_d, e_v, params: MaterialParams):
    """Deviatoric-to-volumetric strain ratio controlling the compressive
    hardening modulus."""
    e_d = np.asarray(e_d, float)
    e_v = np.asarray(e_v, float)
    e_v0 = params.kappa_c3 * params.sigma_c0 / params.E0
    with np.errstate(divide="ignore"):
        val = np.where(e_v <= 0.0,
                       -np.abs(e_d) / (e_v - e_v0),
                       np.abs(e_d) / e_v0)
    return float(val) if val.ndim == 0 else val


def hc(r, params: MaterialParams):
    """Initial hardening modulus of the compressive boundary."""
    r = np.asarray(r, float)
    val = (params.Hc0 - params.Hc1) / \
        (1.0 + params.kappa_c2 * np.maximum(r - params.kappa_c1, 0.0)) \
        + params.Hc1
    return float(val) if val.ndim == 0 else val


def sigma_bc(e_d, e_v, params: MaterialParams):
    """Compressive boundary: yield plateau, pore-collapse hardening, and
    exponential rehardening, driven by e_DV = e_V + beta e_D."""
    e_d = np.asarray(e_d, float)
    e_v = np.asarray(e_v, float)
    e_dv = e_v + params.beta * e_d
    e_c0 = params.sigma_c0 / params.E0
    e_c1 = params.kappa_c0 * e_c0
    r = r_dv(e_d, e_v, params)
    h = hc(r, params)
    sigma_c1 = params.sigma_c0 + (e_c1 - e_c0) * h
    x = -e_dv
    linear = params.sigma_c0 + np.maximum(x - e_c0, 0.0) * h
    expo = sigma_c1 * np.exp((x - e_c1) * h / sigma_c1)
    val = np.where(x <= 0.0, params.sigma_c0,
                   np.where(x <= e_c1, linear, expo))
    return float(val) if val.ndim == 0 else val


def sigma_bs(t_n, params: MaterialParams):
    """Frictional shear strength as a function of (non-positive) normal
    traction; reduces to the cohesion at t_N = 0."""
    t_n = np.asarray(t_n, float)
    dmu = params.mu_0 - params.mu_inf
    # expm1 keeps the t_N = 0 value exactly at the cohesion sigma_s
    val = (params.sigma_s - params.mu_inf * t_n
           - dmu * params.sigma_N0 * np.expm1(t_n / params.sigma_N0))
    return float(val) if val.ndim == 0 else val


def facet_update(state: FacetStateArray, strains, e_v, lengths,
                 params: MaterialParams):
    """Evaluate the constitutive model for all facets at the given total
    strains and return (tractions, trial_state).

    The input state is the last committed one and is not modified; the
    caller commits the trial state when a step is accepted.
    """
    e = np.asarray(strains, float)
    if not np.all(np.isfinite(e)):
        raise FloatingPointError("non-finite facet strains")
    e_n, e_m, e_l = e[:, 0], e[:, 1], e[:, 2]
    e_v = np.broadcast_to(np.asarray(e_v, float), e_n.shape)
    lengths = np.broadcast_to(np.asarray(lengths, float), e_n.shape)
    E0, a = params.E0, params.alpha
    frac = e_n > 0.0

    # fracture branch, evaluated everywhere and selected at the end (cheaper
    # than boolean gathers when most facets are active)
    shear2 = a * (e_m * e_m + e_l * e_l)
    e_eff = np.sqrt(e_n * e_n + shear2)
    omega = np.where(e_eff == 0.0, np.pi / 2,
                     np.arctan2(e_n, np.sqrt(shear2)))
    e_max = np.where(frac, np.maximum(state.e_max, e_eff), state.e_max)
    # the tension bound is discarded on compression facets; evaluate it at
    # pi/2 there so the envelope denominator stays away from zero
    bound_t = sigma_bt(e_max, np.where(frac, omega, np.pi / 2), lengths,
                       params)
    t_eff = np.minimum(E0 * e_eff, bound_t)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(e_eff > 0.0, t_eff / e_eff, 0.0)
    tf_n = scale * e_n
    tf_m = a * scale * e_m
    tf_l = a * scale * e_l

    # compression branch: incrementally elastic from the residual strain,
    # clamped by the compressive boundary; the unloading stiffness switches
    # once the committed traction has exceeded the yield plateau (inert for
    # Ed = E0)
    e_nc = np.where(-state.traction[:, 0] <= params.sigma_c0, E0, params.Ed)
    bound_c = sigma_bc(e_n - e_v, e_v, params)
    trial = e_nc * (e_n - state.e_n_res)
    tc_n = np.clip(trial, -bound_c, 0.0)
    e_n_res = np.where(~frac & (trial != tc_n), e_n - tc_n / e_nc,
                       state.e_n_res)

    tm = a * E0 * (e_m - state.e_p_m)
    tl = a * E0 * (e_l - state.e_p_l)
    tau = np.hypot(tm, tl)
    limit = sigma_bs(tc_n, params)
    yielding = ~frac & (tau > limit)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale_s = np.where(yielding, limit / np.where(tau > 0, tau, 1.0), 1.0)
    tc_m = tm * scale_s
    tc_l = tl * scale_s

    t = np.empty_like(e)
    t[:, 0] = np.where(frac, tf_n, tc_n)
    t[:, 1] = np.where(frac, tf_m, tc_m)
    t[:, 2] = np.where(frac, tf_l, tc_l)
    new = FacetStateArray(
        e_max=e_max,
        e_p_m=np.where(yielding, state.e_p_m + (tm - tc_m) / (a * E0),
                       state.e_p_m),
        e_p_l=np.where(yielding, state.e_p_l + (tl - tc_l) / (a * E0),
                       state.e_p_l),
        e_n_res=e_n_res,
        e_n_min=np.where(~frac, np.minimum(state.e_n_min, e_n),
                         state.e_n_min),
        traction=t.copy(),
    )
    return t, new


def elastic_tractions(strains, params: MaterialParams):
    """Pure elastic law t = E_0 diag(1, alpha, alpha) e."""
    e = np.asarray(strains, float)
    d = np.array([1.0, params.alpha, params.alpha]) * params.E0
    return e * d
