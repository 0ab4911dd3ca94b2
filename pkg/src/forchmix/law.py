"""Generalized Forchheimer laws and the degenerate conductivity they induce.

A law is a polynomial ``g(s) = sum_i a_i * s**alpha_i`` with ``alpha_0 = 0 <
alpha_1 < ... < alpha_N``, nonnegative coefficients, and ``a_0, a_N > 0``.
Because ``s * g(s)`` is strictly increasing on ``s >= 0`` it has an inverse
``s(xi)``, which defines the conductivity ``K(xi) = 1 / g(s(xi))``.  The flux
relation of the flow model is then ``u = -K(|grad p|) grad p``.

All evaluation functions accept scalars or numpy arrays and are pure, so they
are safe for concurrent use.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

_REL_TOL = 1e-13
_MAX_ITER = 100


class RootSolveError(RuntimeError):
    """Raised when the scalar root solve for s(xi) fails to converge."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class ForchheimerLaw:
    """Polynomial law g(s) with strictly increasing exponents.

    Attributes:
        exponents: alpha_0..alpha_N with alpha_0 = 0, strictly increasing.
        coefficients: a_0..a_N, all nonnegative, a_0 > 0 and a_N > 0.
    """

    exponents: tuple[float, ...]
    coefficients: tuple[float, ...]

    def __post_init__(self):
        exps = tuple(float(e) for e in self.exponents)
        coefs = tuple(float(c) for c in self.coefficients)
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "coefficients", coefs)
        if len(exps) != len(coefs):
            raise ValueError("exponents and coefficients must have equal length")
        if len(exps) < 2:
            raise ValueError("law needs at least two terms")
        if exps[0] != 0.0:
            raise ValueError("first exponent must be 0")
        if any(b <= a for a, b in zip(exps, exps[1:])):
            raise ValueError("exponents must be strictly increasing")
        if any(c < 0.0 for c in coefs):
            raise ValueError("coefficients must be nonnegative")
        if coefs[0] <= 0.0 or coefs[-1] <= 0.0:
            raise ValueError("first and last coefficients must be positive")

    @property
    def degree(self) -> float:
        """Largest exponent alpha_N."""
        return self.exponents[-1]

    @property
    def is_two_term_linear(self) -> bool:
        """True for g(s) = a_0 + a_1 * s, which has a closed-form inverse."""
        return len(self.coefficients) == 2 and self.exponents == (0.0, 1.0)


@dataclass(frozen=True)
class DegeneracyExponents:
    """Exponent pair controlling the decay of K: a in (0,1), beta = 2 - a."""

    a: float
    beta: float


def degeneracy_exponents(law: ForchheimerLaw) -> DegeneracyExponents:
    """Return a = deg(g)/(deg(g)+1) and beta = 2 - a for the law."""
    a = law.degree / (law.degree + 1.0)
    return DegeneracyExponents(a=a, beta=2.0 - a)


def law_from_string(text: str) -> ForchheimerLaw:
    """Parse a law from comma-separated "coef:exponent" pairs.

    Example: "1:0,1:1" is g(s) = 1 + s.  Terms may come in any order; they
    are sorted by exponent before validation.
    """
    pairs = []
    for chunk in text.split(","):
        coef_text, sep, exp_text = chunk.partition(":")
        if not sep:
            raise ValueError(f"bad law term {chunk!r}; expected 'coef:exponent'")
        try:
            pairs.append((float(exp_text), float(coef_text)))
        except ValueError:
            raise ValueError(f"bad law term {chunk!r}; expected numeric 'coef:exponent'") from None
    pairs.sort(key=lambda item: item[0])
    return ForchheimerLaw(
        exponents=tuple(exp for exp, _ in pairs),
        coefficients=tuple(coef for _, coef in pairs),
    )


def _as_nonneg_array(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if np.any(~np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if np.any(arr < 0.0):
        raise ValueError(f"{name} must be nonnegative")
    return arr


def _match_input(result: np.ndarray, reference) -> np.ndarray | float:
    return float(result) if np.ndim(reference) == 0 else result


def g_eval(law: ForchheimerLaw, s):
    """Evaluate g(s) for s >= 0.  Result is at least a_0 > 0."""
    s_arr = _as_nonneg_array(s, "s")
    total = np.zeros_like(s_arr)
    for coef, exp in zip(law.coefficients, law.exponents):
        if coef == 0.0:
            continue
        total = total + (coef if exp == 0.0 else coef * s_arr**exp)
    return _match_input(total, s)


def _sg_prime(law: ForchheimerLaw, s_arr: np.ndarray) -> np.ndarray:
    """Evaluate s * g'(s), which stays finite at s = 0 for any valid law."""
    total = np.zeros_like(s_arr)
    for coef, exp in zip(law.coefficients, law.exponents):
        if coef == 0.0 or exp == 0.0:
            continue
        total = total + coef * exp * s_arr**exp
    return total


def _g_prime(law: ForchheimerLaw, s_arr: np.ndarray) -> np.ndarray:
    """Evaluate g'(s); diverges at s = 0 when the law has exponents in (0,1)."""
    total = np.zeros_like(s_arr)
    with np.errstate(divide="ignore"):
        for coef, exp in zip(law.coefficients, law.exponents):
            if coef == 0.0 or exp == 0.0:
                continue
            if exp == 1.0:
                total = total + coef
            else:
                total = total + coef * exp * np.power(s_arr, exp - 1.0)
    return total


def _newton_s(law: ForchheimerLaw, xi_arr: np.ndarray) -> np.ndarray:
    """Safeguarded Newton for s*g(s) = xi on the bracket [0, xi/a_0]."""
    lo = np.zeros_like(xi_arr)
    hi = xi_arr / law.coefficients[0]
    s = 0.5 * hi
    for _ in range(_MAX_ITER):
        g = g_eval(law, s)
        residual = s * g - xi_arr
        lo = np.where(residual <= 0.0, s, lo)
        hi = np.where(residual > 0.0, s, hi)
        step = residual / (g + _sg_prime(law, s))
        s_next = s - step
        outside = (s_next <= lo) | (s_next >= hi) | ~np.isfinite(s_next)
        # keep the zero solution fixed: lo = hi = 0 there
        s_next = np.where(outside & (hi > lo), 0.5 * (lo + hi), np.where(outside, lo, s_next))
        done = np.abs(s_next - s) <= _REL_TOL * np.abs(s_next) + 1e-300
        s = s_next
        if np.all(done):
            return s
    worst = float(np.max(np.abs(s * g_eval(law, s) - xi_arr)))
    raise RootSolveError("root solve for s(xi) did not converge", worst)


def solve_s_of_xi(law: ForchheimerLaw, xi, method: str = "auto"):
    """Solve s * g(s) = xi for the unique s >= 0.

    method "auto" uses the quadratic closed form for two-term linear laws and
    safeguarded Newton otherwise; method "newton" forces the generic solver.
    """
    xi_arr = _as_nonneg_array(xi, "xi")
    if method == "auto" and law.is_two_term_linear:
        a0, a1 = law.coefficients
        # root of a1*s^2 + a0*s - xi, written to avoid cancellation near 0
        s = 2.0 * xi_arr / (a0 + np.sqrt(a0 * a0 + 4.0 * a1 * xi_arr))
    elif method in ("auto", "newton"):
        s = _newton_s(law, xi_arr)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _match_input(s, xi)


def K_eval(law: ForchheimerLaw, xi, method: str = "auto"):
    """Conductivity K(xi) = 1/g(s(xi)); decreasing, with values in (0, 1/a_0]."""
    s = solve_s_of_xi(law, xi, method=method)
    g = g_eval(law, s)
    return _match_input(1.0 / np.asarray(g), xi)


def K_prime(law: ForchheimerLaw, xi, method: str = "auto"):
    """Derivative K'(xi), from implicit differentiation of s*g(s) = xi.

    With s = s(xi): K' = -g'(s) / (g(s)^2 * (g(s) + s*g'(s))).  For laws whose
    smallest positive exponent is below 1 the derivative diverges at xi = 0.
    """
    xi_arr = _as_nonneg_array(xi, "xi")
    s = np.asarray(solve_s_of_xi(law, xi_arr, method=method))
    g = np.asarray(g_eval(law, s))
    gp = _g_prime(law, s)
    result = -gp / (g * g * (g + _sg_prime(law, s)))
    return _match_input(result, xi)


def K_flux(law: ForchheimerLaw, y, method: str = "auto"):
    """Evaluate K(|y|) * y for vectors y of shape (..., d).

    This is the unsigned constitutive product; the flow solver fixes the sign
    convention u = -K(|s|) s.
    """
    y_arr = np.asarray(y, dtype=float)
    if y_arr.ndim == 0:
        raise ValueError("y must be a vector")
    if np.any(~np.isfinite(y_arr)):
        raise ValueError("y must be finite")
    mag = np.sqrt(np.sum(y_arr * y_arr, axis=-1))
    k = np.asarray(K_eval(law, mag, method=method))
    return k[..., np.newaxis] * y_arr


def H_eval(law: ForchheimerLaw, xi: float) -> float:
    """Energy density H(xi), the integral of K(sqrt(sigma)) over [0, xi^2].

    Substituting sigma = t^2 gives the smooth form H(xi) = int_0^xi 2 t K(t) dt,
    which is evaluated by adaptive quadrature to relative tolerance 1e-10.
    """
    if xi < 0.0:
        raise ValueError("xi must be nonnegative")
    if xi == 0.0:
        return 0.0
    value, abserr = quad(
        lambda t: 2.0 * t * K_eval(law, t), 0.0, xi, epsabs=0.0, epsrel=1e-12, limit=200
    )
    if abserr > 1e-10 * abs(value) + 1e-15:
        raise RuntimeError(
            f"H quadrature did not reach the requested tolerance (error {abserr:.3e})"
        )
    return value
