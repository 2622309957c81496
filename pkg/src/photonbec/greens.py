"""Heat-problem Green's functions for the mirror slab, with certified truncation.

Four kernels, all for Dirichlet planes at z = +-L/2:

* greens_3d          -- real-space kernel del^2 G = delta(r - r'), built from
                        alternating mirror images along z.
* greens_2d_effective -- transverse kernel after averaging both z arguments
                        over the longitudinal mode intensity (2/L) sin^2(q pi
                        (z + L/2)/L); a modified-Bessel K0 series.
* kernel_static      -- 2D Fourier transform of the effective kernel,
                        Ghat(k) = int d^2rho e^{-i k.rho} G(rho); a Lorentzian
                        mode sum.
* kernel_delayed     -- frequency-resolved version with the heat propagator
                        denominators (n pi/L)^2 + k^2 - i Omega/D, D = kappa/cv.

Every evaluation returns the number of summed terms and a rigorous bound on
the truncation remainder.  The image sum is accelerated: images beyond the
truncation index are summed in closed form through digamma/Hurwitz-zeta
tails of the multipole expansion 1/sqrt(rho^2+x^2) = sum_j (-1)^j C_j
rho^(2j) x^-(2j+1), whose alternating structure gives the remainder bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import k0 as bessel_k0, psi as digamma, zeta as hurwitz_zeta

from .errors import ConfigError, NearPoleError, SingularityError, TruncationError
from .params import CavityConfig

__all__ = [
    "KernelSpec",
    "KernelEval",
    "greens_3d",
    "greens_3d_grid",
    "greens_2d_effective",
    "kernel_static",
    "kernel_delayed",
    "overlap_coefficients",
]

_FOUR_PI = 4.0 * math.pi
# Binomial coefficients of (1+w)^(-1/2): C_j = (2j-1)!!/(2j)!!
_C1, _C2, _C3 = 0.5, 0.375, 0.3125
# At the mirror planes the images cancel to an exact zero; certify against a
# small fraction of the free-space scale 1/(4 pi d) there instead of |value|.
_ZERO_FLOOR = 1e-9


@dataclass(frozen=True)
class KernelSpec:
    """Geometry and truncation policy for kernel evaluations.

    L, q        mirror spacing [m] and longitudinal mode order
    diffusivity kappa/cv [m^2/s], used only by the delayed kernel
    rel_tol     certified relative truncation tolerance
    max_terms   hard cap on the number of summed terms
    """

    L: float
    q: int
    diffusivity: float
    rel_tol: float = 1e-10
    max_terms: int = 2_000_000

    def __post_init__(self):
        if not (0.0 < self.rel_tol < 1.0):
            raise ConfigError("rel_tol must lie in (0, 1)", key="rel_tol")
        if self.max_terms < 1:
            raise ConfigError("max_terms must be >= 1", key="max_terms")
        if self.L <= 0:
            raise ConfigError("L must be > 0", key="L")
        if self.q < 1:
            raise ConfigError("q must be >= 1", key="q")
        if self.diffusivity <= 0:
            raise ConfigError("diffusivity must be > 0", key="diffusivity")

    @classmethod
    def from_config(cls, config: CavityConfig, rel_tol: float = 1e-10,
                    max_terms: int = 2_000_000) -> "KernelSpec":
        return cls(L=config.L, q=config.q, diffusivity=config.diffusivity,
                   rel_tol=rel_tol, max_terms=max_terms)


@dataclass(frozen=True)
class KernelEval:
    """Kernel value plus truncation diagnostics."""

    value: complex
    terms_used: int
    truncation_bound: float


def overlap_coefficients(q: int, n: np.ndarray) -> np.ndarray:
    """Overlap of the mode intensity (2/L) sin^2(q pi (z+L/2)/L) with the
    sine basis: c_n = -8 q^2 / (n pi (n^2 - 4 q^2)) for odd n (zero for even).

    The sum runs over odd n only, so the resonant index n = 2q (even) never
    occurs; the assertion guards against misuse.
    """
    n = np.asarray(n)
    assert np.all(n % 2 == 1), "overlap coefficients are defined for odd n"
    return -8.0 * q * q / (n * math.pi * (n * n - 4.0 * q * q))


# ---------------------------------------------------------------------------
# 3D image sum
# ---------------------------------------------------------------------------

def _image_tail(u, alpha, gamma, L, n_trunc):
    """Closed-form tail of the image sum for |n| > n_trunc.

    Returns (tail, bound): the j = 0, 1, 2 multipole orders of all four image
    families summed exactly via digamma (j=0) and Hurwitz zeta (j=1,2), and a
    rigorous remainder bound from the first dropped order (j=3), valid while
    u < 2 n_trunc L (alternating series, decreasing terms).
    """
    twoL = 2.0 * L
    base = float(n_trunc + 1)
    a = np.stack([alpha / twoL, -alpha / twoL,
                  (gamma + L) / twoL, -(gamma + L) / twoL])
    args = base + a
    tail = (digamma(args[2]) + digamma(args[3])
            - digamma(args[0]) - digamma(args[1])) / twoL
    sign = np.array([1.0, 1.0, -1.0, -1.0]).reshape((4,) + (1,) * (args.ndim - 1))
    z3 = np.sum(sign * hurwitz_zeta(3.0, args), axis=0) / twoL**3
    z5 = np.sum(sign * hurwitz_zeta(5.0, args), axis=0) / twoL**5
    tail = tail - _C1 * u**2 * z3 + _C2 * u**4 * z5
    z7_abs = np.sum(hurwitz_zeta(7.0, args), axis=0) / twoL**7
    bound = _C3 * u**6 * z7_abs
    return tail, bound


# representation switch: images for rho <~ L, longitudinal eigenmodes
# (geometric K0 decay) beyond
_MODAL_SWITCH = 1.3


def _g3d_images(u, alpha, gamma, floor, spec: KernelSpec):
    L = spec.L
    n_trunc = max(4, int(np.ceil(np.max(u, initial=0.0) / (2.0 * L))) + 2)
    if 2 * n_trunc + 1 > spec.max_terms:
        raise TruncationError(
            "term budget below the minimum truncation index",
            achieved_bound=math.inf, terms_used=0)
    while True:
        n = np.arange(-n_trunc, n_trunc + 1, dtype=float)
        n = n.reshape((-1,) + (1,) * u.ndim)
        pos = 1.0 / np.sqrt(u**2 + (alpha + 2.0 * n * L) ** 2)
        neg = 1.0 / np.sqrt(u**2 + (gamma + (2.0 * n + 1.0) * L) ** 2)
        partial = np.sum(pos - neg, axis=0)
        tail, bound = _image_tail(u, alpha, gamma, L, n_trunc)
        values = -(partial + tail) / _FOUR_PI
        bounds = np.asarray(bound) / _FOUR_PI
        scale = np.maximum(np.abs(values), floor)
        if np.all(bounds <= spec.rel_tol * scale):
            return values, bounds, 2 * n_trunc + 1
        if 2 * (2 * n_trunc) + 1 > spec.max_terms:
            raise TruncationError(
                "image-sum tolerance not reached within max_terms",
                achieved_bound=float(np.max(bounds)),
                terms_used=2 * n_trunc + 1)
        n_trunc *= 2


def _g3d_modal(u, zf, zs, floor, spec: KernelSpec):
    """Eigenmode form -(1/pi L) sum_m sin(m pi (z+L/2)/L) sin(m pi (z'+L/2)/L)
    K0(m pi u/L); each mode step contracts by at least e^(-pi u/L)."""
    from scipy.special import k0 as bessel

    L = spec.L
    a = math.pi * (zf + L / 2.0) / L
    b = math.pi * (zs + L / 2.0) / L
    x = math.pi * u / L
    ratio = np.exp(-np.min(x))
    total = np.zeros(np.broadcast(u, a, b).shape)
    m_max = 8
    m_done = 0
    while True:
        m = np.arange(m_done + 1, m_max + 1, dtype=float)
        mm = m.reshape((-1,) + (1,) * total.ndim)
        total = total + np.sum(np.sin(mm * a) * np.sin(mm * b) * bessel(mm * x),
                               axis=0)
        values = -total / (math.pi * L)
        bounds = bessel((m_max + 1) * x) / (1.0 - ratio) / (math.pi * L)
        scale = np.maximum(np.abs(values), floor)
        if np.all(bounds <= spec.rel_tol * scale):
            return values, np.asarray(bounds), m_max
        if m_max >= spec.max_terms:
            raise TruncationError(
                "eigenmode-sum tolerance not reached within max_terms",
                achieved_bound=float(np.max(bounds)), terms_used=m_max)
        m_done, m_max = m_max, 2 * m_max


def greens_3d_grid(rho_sep, z, z_src, spec: KernelSpec):
    """Vectorized slab Green's function; see greens_3d for the contract.

    Broadcasts rho_sep, z, z_src and returns (values, bounds, terms_used).
    Points with rho <~ L use the image sum, larger separations the eigenmode
    series; both carry certified truncation bounds.
    """
    L = spec.L
    u, zf, zs = np.broadcast_arrays(
        np.asarray(rho_sep, float), np.asarray(z, float), np.asarray(z_src, float))
    if np.any(u < 0):
        raise ConfigError("transverse separation must be >= 0")
    half = L / 2.0
    if np.any(np.abs(zf) > half * (1 + 1e-12)) or np.any(np.abs(zs) > half * (1 + 1e-12)):
        raise ConfigError("field and source points must lie between the mirrors")
    alpha = zf - zs
    gamma = zf + zs
    d_direct = np.hypot(u, alpha)
    if np.any(d_direct < 1e-12 * L):
        raise SingularityError("field point coincides with the source")
    # nearest image of any family sets the local free-space magnitude scale
    d_near = np.minimum(d_direct,
                        np.minimum(np.hypot(u, gamma + L), np.hypot(u, gamma - L)))
    floor = _ZERO_FLOOR / (_FOUR_PI * d_near)

    near = u < _MODAL_SWITCH * L
    if np.all(near):
        return _g3d_images(u, alpha, gamma, floor, spec)
    if not np.any(near):
        return _g3d_modal(u, zf, zs, floor, spec)
    values = np.empty(u.shape)
    bounds = np.empty(u.shape)
    v, b, t1 = _g3d_images(u[near], alpha[near], gamma[near],
                           np.asarray(floor)[near], spec)
    values[near], bounds[near] = v, b
    v, b, t2 = _g3d_modal(u[~near], zf[~near], zs[~near],
                          np.asarray(floor)[~near], spec)
    values[~near], bounds[~near] = v, b
    return values, bounds, max(t1, t2)


def greens_3d(rho_sep: float, z: float, z_src: float, spec: KernelSpec) -> KernelEval:
    """Slab Green's function G(rho, z; 0, z_src) with del^2 G = delta.

    Prefactor -1/(4 pi); positive images at z_src + 2nL and negative images at
    -z_src + (2n+1)L enforce G = 0 on z = +-L/2.  Symmetric truncation keeps
    source/field exchange exact to round-off.
    """
    values, bounds, terms = greens_3d_grid(rho_sep, z, z_src, spec)
    return KernelEval(value=float(values), terms_used=terms,
                      truncation_bound=float(bounds))


# ---------------------------------------------------------------------------
# Effective transverse kernel (K0 series)
# ---------------------------------------------------------------------------

def greens_2d_effective(rho_sep: float, spec: KernelSpec) -> KernelEval:
    """Mode-averaged transverse kernel [1/m]:

        G_eff(rho) = -(1/(pi L)) sum_{n odd} c_n^2 K0(n pi rho / L)

    Strictly negative, logarithmically divergent at rho = 0, exponentially
    decaying for rho >> L/pi.  Truncated by a geometric tail bound: beyond
    n = 2q the coefficients decrease and K0(x + 2 pi rho/L) <= K0(x)
    e^(-2 pi rho/L) (x e^x K0 monotone), so the tail after the last term t_n
    is at most t_n r/(1-r) with r = e^(-2 pi rho/L).
    """
    if rho_sep < 0:
        raise ConfigError("rho_sep must be > 0")
    if rho_sep == 0:
        raise SingularityError("effective 2D kernel diverges at rho = 0")
    L, q = spec.L, spec.q
    x0 = math.pi * rho_sep / L
    ratio = math.exp(-2.0 * x0)
    total = 0.0
    terms = 0
    block = 64
    n_start = 1
    while True:
        n = np.arange(n_start, n_start + 2 * block, 2, dtype=float)
        t = overlap_coefficients(q, n) ** 2 * bessel_k0(n * x0) / (math.pi * L)
        csum = np.cumsum(t) + total
        trial_bound = t * ratio / (1.0 - ratio)
        ok = (n > 2 * q) & (trial_bound <= spec.rel_tol * csum)
        if np.any(ok):
            stop = int(np.argmax(ok))
            if terms + stop + 1 > spec.max_terms:
                raise TruncationError(
                    "K0-series tolerance not reached within max_terms",
                    achieved_bound=float(trial_bound[stop]),
                    terms_used=terms + stop + 1)
            return KernelEval(value=-float(csum[stop]),
                              terms_used=terms + stop + 1,
                              truncation_bound=float(trial_bound[stop]))
        total = float(csum[-1])
        terms += len(n)
        n_start += 2 * block
        block = min(2 * block, 4096)
        if terms > spec.max_terms:
            raise TruncationError(
                "K0-series tolerance not reached within max_terms",
                achieved_bound=float(trial_bound[-1]), terms_used=terms)


# ---------------------------------------------------------------------------
# Spectral kernels (Lorentzian mode sums)
# ---------------------------------------------------------------------------

def _mode_sum(k: float, w: complex, spec: KernelSpec, with_derivative: bool = False):
    """Shared summation for the static (w = 0) and delayed (w = Omega/D)
    spectral kernels:

        Ghat = -(2/L) sum_{n odd} c_n^2 / ((n pi/L)^2 + k^2 - i w)

    Tail bound for the odd-n remainder past the last included index N:
    c_n^2 <= (8 q^2/pi)^2 / (n^6 c0^2) with c0 = 1 - (2q/n)^2, the denominator
    magnitude is bounded below as described inline, and
    sum_{odd n >= N+2} n^-6 <= 1/(10 N^5).
    """
    L, q = spec.L, spec.q
    kappa1_sq = (math.pi / L) ** 2
    w = complex(w)
    shift_re = w.imag  # Re(-i w) for w = Omega/D with complex Omega
    shift_im = -w.real
    total = 0.0 + 0.0j
    dtotal = 0.0 + 0.0j
    terms = 0
    n_start = 1
    block = 64
    prefactor = 2.0 / L
    coeff_sq_scale = (8.0 * q * q / math.pi) ** 2
    while True:
        n = np.arange(n_start, n_start + 2 * block, 2, dtype=float)
        kap_sq = kappa1_sq * n * n
        denom = kap_sq + k * k + shift_re + 1j * shift_im
        if np.any(np.abs(denom) < 1e-12 * kappa1_sq):
            raise NearPoleError(
                "delayed-kernel denominator within 1e-12 (pi/L)^2 of a pole")
        c_sq = overlap_coefficients(q, n) ** 2
        t = c_sq / denom
        csum = np.cumsum(t) + total
        if with_derivative:
            dcsum = np.cumsum(c_sq / denom**2) + dtotal
        # denominator floor for the tail: needs the real part positive from
        # the tail onward; keep summing otherwise
        re_floor = kappa1_sq * (n + 2.0) ** 2 + k * k + min(shift_re, 0.0)
        denom_floor = np.maximum(re_floor, abs(shift_im))
        with np.errstate(divide="ignore"):
            c0 = 1.0 - (2.0 * q / (n + 2.0)) ** 2
            trial_bound = np.where(
                (n > 2 * q) & (re_floor > 0.0),
                coeff_sq_scale / (c0**2 * 10.0 * n**5 * denom_floor),
                np.inf)
        ok = trial_bound <= spec.rel_tol * np.abs(csum)
        if np.any(ok):
            stop = int(np.argmax(ok))
            value = -prefactor * csum[stop]
            bound = prefactor * float(trial_bound[stop])
            n_used = terms + stop + 1
            if n_used > spec.max_terms:
                raise TruncationError(
                    "mode-sum tolerance not reached within max_terms",
                    achieved_bound=bound, terms_used=n_used)
            if with_derivative:
                dvalue = -prefactor * (1j / spec.diffusivity) * dcsum[stop]
                return value, dvalue, n_used, bound
            return value, None, n_used, bound
        total = complex(csum[-1])
        if with_derivative:
            dtotal = complex(dcsum[-1])
        terms += len(n)
        n_start += 2 * block
        block = min(2 * block, 4096)
        if terms > spec.max_terms:
            raise TruncationError(
                "mode-sum tolerance not reached within max_terms",
                achieved_bound=prefactor * float(trial_bound[-1]),
                terms_used=terms)


def kernel_static(k: float, spec: KernelSpec) -> KernelEval:
    """Transverse Fourier transform of the effective kernel [m]:

        Ghat(k) = -(2/L) sum_{n odd} c_n^2 / ((n pi/L)^2 + k^2)

    Negative for all k >= 0, flat for k << pi/L, decaying as 1/k^2.
    """
    if k < 0:
        raise ConfigError("k must be >= 0")
    value, _, terms, bound = _mode_sum(k, 0.0, spec)
    return KernelEval(value=float(value.real), terms_used=terms,
                      truncation_bound=bound)


def kernel_delayed(omega: complex, k: float, spec: KernelSpec) -> KernelEval:
    """Frequency-resolved kernel [m]:

        Ghat(Omega, k) = -(2/L) sum_{n odd} c_n^2
                          / ((n pi/L)^2 + k^2 - i Omega / D)

    D is the thermal diffusivity; the -i Omega/D term is the frequency-domain
    heat propagator and restores the static kernel exactly at Omega = 0.
    """
    if k < 0:
        raise ConfigError("k must be >= 0")
    value, _, terms, bound = _mode_sum(k, complex(omega) / spec.diffusivity, spec)
    return KernelEval(value=complex(value), terms_used=terms,
                      truncation_bound=bound)


def kernel_delayed_and_derivative(omega: complex, k: float, spec: KernelSpec):
    """Delayed kernel together with its analytic d/dOmega (for Newton solves)."""
    value, dvalue, terms, bound = _mode_sum(
        k, complex(omega) / spec.diffusivity, spec, with_derivative=True)
    return (KernelEval(value=complex(value), terms_used=terms,
                       truncation_bound=bound), complex(dvalue))
