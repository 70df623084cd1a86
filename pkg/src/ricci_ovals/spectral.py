"""Hermite spectral toolkit for the linearized cylinder operator.

The operator 𝓛v = v_σσ - (σ/2)v_σ + v is self-adjoint for the Gaussian
measure dμ = e^{-σ²/4} dσ. Its eigenfunctions are the rescaled Hermite
polynomials h_n(σ) = 2^{n/2} He_n(σ/√2) with 𝓛h_n = (1 - n/2) h_n, so
h₀ = 1, h₂ = σ² - 2 and h₄ = σ⁴ - 12σ² + 12, and ‖h_n‖² = 2^{n+1}√π n!.

A perturbation v = u/√2 - 1 of the cylinder is truncated to v̄ = vχ with
χ(σ) = χ̂(δ^θ σ) and projected onto h₀, h₂ and the rest of the spectrum.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import hermite, hermite_e
from scipy.integrate import simpson
from scipy.special import erfc

from .differences import first_derivative, integral_from, second_derivative, uniform_spacing
from .exceptions import GridError, QuadratureError

logger = logging.getLogger(__name__)

SQRT_PI = math.sqrt(math.pi)
DEFAULT_NODES = 60
MIN_NODES = 40
MASS_TOLERANCE = 1e-12
THETA = 0.01

Function = Union[Polynomial, Callable[[np.ndarray], np.ndarray]]


def hermite_polynomial(n: int) -> Polynomial:
    """h_n(σ) = 2^{n/2} He_n(σ/√2) in the power basis."""
    if n < 0:
        raise ValueError("Hermite index must be non-negative")
    he = hermite_e.herme2poly([0.0] * n + [1.0])
    coeffs = [c * 2.0 ** ((n - j) / 2.0) for j, c in enumerate(he)]
    return Polynomial(np.round(coeffs, 9))


def hermite_norm_squared(n: int) -> float:
    return 2.0 ** (n + 1) * SQRT_PI * math.factorial(n)


def gaussian_moment(m: int) -> float:
    """∫ σ^{2m} e^{-σ²/4} dσ = 2√π 2^m (2m-1)!!"""
    double_factorial = 1
    for k in range(1, 2 * m, 2):
        double_factorial *= k
    return 2.0 * SQRT_PI * 2.0**m * double_factorial


@dataclass(frozen=True)
class HermiteBasis:
    """The even eigenfunctions h₀, h₂, …, h_{2·max_even_index}."""

    max_even_index: int = 6
    polynomials: Tuple[Polynomial, ...] = field(init=False, repr=False)

    def __post_init__(self):
        if self.max_even_index < 1:
            raise ValueError("the basis must contain at least h0 and h2")
        polys = tuple(hermite_polynomial(2 * k) for k in range(self.max_even_index + 1))
        object.__setattr__(self, "polynomials", polys)

    @property
    def coeffs(self) -> List[np.ndarray]:
        return [p.coef.copy() for p in self.polynomials]

    def __getitem__(self, k: int) -> Polynomial:
        return self.polynomials[k]

    def eigenvalue(self, k: int) -> float:
        return 1.0 - k


@lru_cache(maxsize=8)
def _gauss_rule(nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = hermite.hermgauss(nodes)
    return 2.0 * x, 2.0 * w


def gauss_integral(f: Function, nodes: int = DEFAULT_NODES) -> float:
    """∫ f dμ with Gauss–Hermite quadrature under σ = 2x."""
    if nodes < MIN_NODES:
        raise QuadratureError(f"at least {MIN_NODES} nodes are required")
    sigma, w = _gauss_rule(nodes)
    return float(np.dot(w, f(sigma)))


def _check_coverage(sigma: np.ndarray, integrand: np.ndarray):
    lo, hi = abs(sigma[0]), abs(sigma[-1])
    lost = SQRT_PI * (erfc(lo / 2.0) + erfc(hi / 2.0))
    if lost <= MASS_TOLERANCE:
        return
    scale = max(1.0, float(np.max(np.abs(integrand))))
    if abs(integrand[0]) <= 1e-14 * scale and abs(integrand[-1]) <= 1e-14 * scale:
        return
    raise QuadratureError(f"grid [{sigma[0]:.3g}, {sigma[-1]:.3g}] drops {lost:.2e} of the Gaussian mass")


def sampled_integral(sigma: np.ndarray, values: np.ndarray) -> float:
    """∫ values dμ for samples on a grid covering the Gaussian mass."""
    sigma = np.asarray(sigma, dtype=float)
    values = np.asarray(values, dtype=float)
    _check_coverage(sigma, values)
    return float(simpson(values * np.exp(-(sigma**2) / 4.0), x=sigma))


def weighted_inner(f, g, sigma: Optional[np.ndarray] = None, nodes: int = DEFAULT_NODES) -> float:
    """⟨f, g⟩ = ∫ f g e^{-σ²/4} dσ.

    Polynomials and callables go through Gauss–Hermite quadrature, which is
    exact up to degree 2·nodes - 1. Sampled arrays need their grid ``sigma``.

    Raises:
        QuadratureError: If a sampled grid drops more than 1e-12 of the weight.
    """
    if sigma is None:
        return gauss_integral(lambda s: f(s) * g(s), nodes)
    return sampled_integral(sigma, np.asarray(f) * np.asarray(g))


def weighted_norm(f, sigma: Optional[np.ndarray] = None, nodes: int = DEFAULT_NODES) -> float:
    return math.sqrt(max(weighted_inner(f, f, sigma, nodes), 0.0))


_HALF_SIGMA = Polynomial([0.0, 0.5])


def apply_L(f, sigma: Optional[np.ndarray] = None):
    """𝓛f = f'' - (σ/2) f' + f, exactly for polynomials and by differences for samples."""
    if isinstance(f, Polynomial):
        return f.deriv(2) - _HALF_SIGMA * f.deriv(1) + f
    if sigma is None:
        raise GridError("sampled input needs its sigma grid")
    h = uniform_spacing(sigma)
    f = np.asarray(f, dtype=float)
    return second_derivative(f, h, "even", "even") - 0.5 * sigma * first_derivative(f, h, "even", "even") + f


class Check(NamedTuple):
    name: str
    value: float
    tolerance: float
    passed: bool


def _coefficient_gap(p: Polynomial) -> float:
    p = p.trim(tol=0)
    return float(np.max(np.abs(p.coef))) if p.coef.size else 0.0


def hermite_identities(nodes: int = DEFAULT_NODES, max_even_index: int = 6) -> List[Check]:
    """Exact polynomial identities, quadrature checks and eigen-relations of the basis."""
    basis = HermiteBasis(max_even_index)
    h0, h2, h4 = basis[0], basis[1], basis[2]
    dh2 = h2.deriv()
    checks = []

    gap = _coefficient_gap(h2 * h2 - (h4 + 8 * h2 + 8 * h0))
    checks.append(Check("h2^2 = h4 + 8 h2 + 8 h0", gap, 0.0, gap == 0.0))
    gap = _coefficient_gap(dh2 * dh2 - (4 * h2 + 8 * h0))
    checks.append(Check("(h2')^2 = 4 h2 + 8 h0", gap, 0.0, gap == 0.0))

    integral = gauss_integral(h2**3 / 2 + dh2**2 * h2, nodes)
    target = 8.0 * hermite_norm_squared(2)
    rel = abs(integral - target) / target
    checks.append(Check("int (h2^3/2 + (h2')^2 h2) dmu = 8 |h2|^2", rel, 1e-8, rel < 1e-8))

    norms = [math.sqrt(hermite_norm_squared(2 * k)) for k in range(max_even_index + 1)]
    worst = 0.0
    for j in range(max_even_index + 1):
        for k in range(j + 1, max_even_index + 1):
            worst = max(worst, abs(gauss_integral(basis[j] * basis[k], nodes)) / (norms[j] * norms[k]))
    checks.append(Check("orthogonality", worst, 1e-10, worst < 1e-10))

    worst = 0.0
    for k in range(max_even_index + 1):
        defect = apply_L(basis[k]) - basis.eigenvalue(k) * basis[k]
        worst = max(worst, math.sqrt(abs(gauss_integral(defect * defect, nodes))) / norms[k])
    checks.append(Check("L h_2k = (1 - k) h_2k", worst, 1e-10, worst < 1e-10))

    worst = 0.0
    for k in range(max_even_index + 1):
        target = hermite_norm_squared(2 * k)
        worst = max(worst, abs(gauss_integral(basis[k] * basis[k], nodes) - target) / target)
    checks.append(Check("|h_2k|^2 = 2^(2k+1) sqrt(pi) (2k)!", worst, 1e-10, worst < 1e-10))
    return checks


# truncation


def _bump_ramp(t):
    t = np.asarray(t, dtype=float)
    return np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)


def cutoff_hat(x):
    """Smooth χ̂ with χ̂ = 1 on [-½, ½] and χ̂ = 0 outside [-1, 1].

    χ̂(x) = S(2 - 2|x|), S(t) = f(t)/(f(t) + f(1 - t)), f(t) = e^{-1/t} for t > 0.
    """
    t = 2.0 - 2.0 * np.abs(np.asarray(x, dtype=float))
    a, b = _bump_ramp(t), _bump_ramp(1.0 - t)
    return a / (a + b)


@dataclass(frozen=True)
class Cutoff:
    """χ(σ) = χ̂(δ^θ σ), supported on |σ| <= δ^{-θ}."""

    delta: float
    theta: float = THETA

    def __post_init__(self):
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")
        if not 0 < self.theta <= 1:
            raise ValueError("theta must lie in (0, 1]")

    @property
    def scale(self) -> float:
        return self.delta**self.theta

    @property
    def support(self) -> float:
        return 1.0 / self.scale

    def __call__(self, sigma):
        return cutoff_hat(self.scale * np.asarray(sigma, dtype=float))


def truncate(sigma: np.ndarray, v: np.ndarray, delta: float, theta: float = THETA) -> np.ndarray:
    """v̄ = v χ for the cutoff at scale δ^θ."""
    return np.asarray(v, dtype=float) * Cutoff(delta, theta)(sigma)


class Projection(NamedTuple):
    alpha: float
    alpha_raw: float
    plus_coeff: float
    minus_norm: float


def project(sigma: np.ndarray, vbar: np.ndarray) -> Projection:
    """Split v̄ into its h₀ and h₂ coefficients and the norm of the remainder.

    ``alpha`` is the normalized coefficient ⟨v̄, h₂⟩/‖h₂‖²; ``alpha_raw`` is
    the bare pairing ⟨v̄, h₂⟩.
    """
    sigma = np.asarray(sigma, dtype=float)
    vbar = np.asarray(vbar, dtype=float)
    h0 = np.ones_like(sigma)
    h2 = sigma**2 - 2.0
    alpha_raw = weighted_inner(vbar, h2, sigma)
    plus = weighted_inner(vbar, h0, sigma) / hermite_norm_squared(0)
    alpha = alpha_raw / hermite_norm_squared(2)
    rest = vbar - plus * h0 - alpha * h2
    minus = math.sqrt(max(weighted_inner(rest, rest, sigma), 0.0))
    return Projection(alpha=alpha, alpha_raw=alpha_raw, plus_coeff=plus, minus_norm=minus)


@dataclass(frozen=True)
class SpectralState:
    tau: float
    alpha: float
    plus_coeff: float
    minus_norm: float
    delta: float
    vbar: np.ndarray = field(repr=False)
    alpha_raw: float = float("nan")

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.plus_coeff)):
            raise ValueError("alpha and plus_coeff must be finite")
        if self.minus_norm < 0:
            raise ValueError("minus_norm must be non-negative")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")

    def to_dict(self) -> Dict[str, float]:
        return {
            "tau": self.tau,
            "alpha": self.alpha,
            "alpha_raw": self.alpha_raw,
            "plus": self.plus_coeff,
            "minus_norm": self.minus_norm,
            "delta": self.delta,
        }


def spectral_state(sigma: np.ndarray, v: np.ndarray, tau: float, delta: float, theta: float = THETA) -> SpectralState:
    vbar = truncate(sigma, v, delta, theta)
    p = project(sigma, vbar)
    return SpectralState(
        tau=tau,
        alpha=p.alpha,
        plus_coeff=p.plus_coeff,
        minus_norm=p.minus_norm,
        delta=delta,
        vbar=vbar,
        alpha_raw=p.alpha_raw,
    )


def perturbation(u: np.ndarray) -> np.ndarray:
    """v = u/√2 - 1."""
    return np.asarray(u, dtype=float) / math.sqrt(2.0) - 1.0


def delta_history(v0_values) -> np.ndarray:
    """δ(τ) = √2 sup_{τ' <= τ} |v(0, τ')| along a time-ordered sequence."""
    return math.sqrt(2.0) * np.maximum.accumulate(np.abs(np.asarray(v0_values, dtype=float)))


def alpha_star(alphas) -> np.ndarray:
    return np.maximum.accumulate(np.abs(np.asarray(alphas, dtype=float)))


def alpha_rhs(alpha: float) -> float:
    """Leading-order evolution α' = -8α² of the normalized neutral coefficient."""
    return -8.0 * alpha**2


def alpha_asymptotic(tau: float) -> float:
    return -1.0 / (8.0 * abs(tau))


def nonlocal_J(sigma: np.ndarray, v: np.ndarray) -> np.ndarray:
    """J[v] = 2 ∫₀^σ v_σσ/(1 + v) dσ' for a sample symmetric about σ = 0."""
    h = uniform_spacing(sigma)
    v_ss = second_derivative(v, h, "even", "even")
    return 2.0 * integral_from(sigma, v_ss / (1.0 + v), int(np.argmin(np.abs(sigma))))


def v_evolution_rhs(sigma: np.ndarray, v: np.ndarray) -> np.ndarray:
    """𝓛v - J[v] v_σ + v_σ²/(1 + v) - v²/(2(1 + v))."""
    v = np.asarray(v, dtype=float)
    if np.any(1.0 + v <= 0):
        raise ValueError("v must stay above -1")
    h = uniform_spacing(sigma)
    v_s = first_derivative(v, h, "even", "even")
    return apply_L(v, sigma) - nonlocal_J(sigma, v) * v_s + v_s**2 / (1.0 + v) - v**2 / (2.0 * (1.0 + v))


@dataclass(frozen=True)
class ErrorFunctionals:
    E: np.ndarray
    E_chi: np.ndarray
    E_nl: np.ndarray
    pairings: Dict[str, float]
    quadratic_form: float


def error_functionals(
    sigma: np.ndarray,
    v: np.ndarray,
    vbar: np.ndarray,
    chi: np.ndarray,
    J: Optional[np.ndarray] = None,
    chi_tau: Optional[np.ndarray] = None,
) -> ErrorFunctionals:
    """Error terms of the truncated evolution and their h₂ pairings.

    Args:
        sigma: Uniform grid symmetric about 0.
        v: Perturbation u/√2 - 1, above -1 everywhere.
        vbar: Truncation v χ.
        chi: Cutoff samples.
        J: Nonlocal term J[v]; when given, ∫₀^σ v_σ²/(1+v)² is recovered as
            J/2 - v_σ/(1+v) instead of integrated directly.
        chi_tau: Time derivative of the cutoff; taken as zero when omitted.

    Raises:
        ValueError: If 1 + v <= 0 anywhere.
    """
    sigma = np.asarray(sigma, dtype=float)
    v, vbar, chi = (np.asarray(a, dtype=float) for a in (v, vbar, chi))
    if np.any(1.0 + v <= 0):
        raise ValueError("1 + v must be positive for the error functionals")
    h = uniform_spacing(sigma)

    def d1(f):
        return first_derivative(f, h, "even", "even")

    v_s, vb_s, chi_s = d1(v), d1(vbar), d1(chi)
    chi_ss = second_derivative(chi, h, "even", "even")
    one_v = 1.0 + v
    omc = 1.0 - chi

    E = vbar * vb_s**2 / one_v + vbar**3 / (2.0 * one_v)
    E_chi = (
        -2.0 * v_s * chi_s
        - v * chi_ss
        + 0.5 * sigma * v * chi_s
        - omc * v_s * vb_s
        + chi_s * v * vb_s
        + chi_s * v_s**2
        - v * vbar * omc / 2.0
        + vbar * omc**2 * v_s**2 / one_v
        + vbar * chi_s**2 * v**2 / one_v
        + vbar * v**2 * omc**2 / (2.0 * one_v)
        + vbar**2 * v * omc / one_v
        + (2.0 * vbar / one_v) * (vb_s * v_s * omc - v * vb_s * chi_s - chi_s * omc * v * v_s)
    )
    if chi_tau is not None:
        E_chi = E_chi + v * np.asarray(chi_tau, dtype=float)

    centre = int(np.argmin(np.abs(sigma)))
    if J is None:
        running = integral_from(sigma, v_s**2 / one_v**2, centre)
    else:
        running = 0.5 * np.asarray(J, dtype=float) - v_s / one_v
    E_nl = -2.0 * chi * v_s * running

    h2 = sigma**2 - 2.0
    pairings = {
        "E": sampled_integral(sigma, E * h2),
        "E_chi": sampled_integral(sigma, E_chi * h2),
        "E_nl": sampled_integral(sigma, E_nl * h2),
    }
    quadratic = sampled_integral(sigma, (0.5 * vbar**2 + vb_s**2) * h2)
    return ErrorFunctionals(E=E, E_chi=E_chi, E_nl=E_nl, pairings=pairings, quadratic_form=quadratic)
