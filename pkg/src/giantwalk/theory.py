"""Closed-form quantities for the supercritical Erdős–Rényi random graph G(n, λ/n).

Everything here is a pure function of (n, λ, p). The survival probability
of a Poisson(λ) Galton–Watson process is the positive root of
``1 - ρ = exp(-λρ)``; the remaining constants follow from it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# bisection stops once the bracket is narrower than this
_BISECTION_WIDTH = 1e-14
_NEWTON_STEPS = 5


@dataclass(frozen=True)
class Params:
    """Experiment triple. ``lam`` is always ``n * p``."""

    n: int
    lam: float
    p: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"n must be an integer >= 2, got {self.n!r}")
        if not (0.0 <= self.p <= 1.0) or not math.isfinite(self.p):
            raise DomainError(f"p must lie in [0, 1], got {self.p!r}")
        if not math.isclose(self.lam, self.n * self.p, rel_tol=1e-12, abs_tol=1e-300):
            raise DomainError(f"lam={self.lam!r} does not equal n*p={self.n * self.p!r}")

    @classmethod
    def from_lambda(cls, n: int, lam: float) -> "Params":
        if not math.isfinite(lam) or lam <= 0:
            raise DomainError(f"lambda must be positive and finite, got {lam!r}")
        p = lam / n
        if p > 1:
            raise DomainError(f"lambda={lam} exceeds n={n}")
        return cls(int(n), float(lam), p)

    @classmethod
    def from_p(cls, n: int, p: float) -> "Params":
        return cls(int(n), float(n * p), float(p))

    @property
    def eps(self) -> float:
        return self.lam - 1.0


@dataclass(frozen=True)
class TheoryValues:
    rho: float
    lambda_star: float
    sigma2: float
    t1: float
    a: float

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    def as_dict(self) -> dict:
        return {
            "rho": self.rho,
            "lambda_star": self.lambda_star,
            "sigma2": self.sigma2,
            "sigma": self.sigma,
            "t1": self.t1,
            "a": self.a,
        }


def _check_supercritical(lam: float) -> None:
    if not math.isfinite(lam):
        raise DomainError(f"lambda must be finite, got {lam!r}")
    if lam <= 1.0:
        raise DomainError(f"lambda must exceed 1 (supercritical regime), got {lam!r}")


def _excess(lam: float, rho: float) -> float:
    # 1 - rho - exp(-lam*rho), written to avoid cancellation near rho = 0
    return -math.expm1(-lam * rho) - rho


def solve_rho(lam: float) -> float:
    """Survival probability ρ of a Poisson(λ) branching process, λ > 1.

    Bisection on ``1 - ρ - exp(-λρ)`` over (0, 1] to a bracket of width
    1e-14, polished by a few Newton steps that are only accepted while
    they stay inside the bracket.
    """
    _check_supercritical(lam)
    lo, hi = 0.0, 1.0
    # the excess is positive on (0, ρ) and negative on (ρ, 1]; lo = 0 is the
    # trivial root, so only the sign at the midpoint is ever evaluated
    while hi - lo > _BISECTION_WIDTH:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if _excess(lam, mid) > 0:
            lo = mid
        else:
            hi = mid
    rho = 0.5 * (lo + hi)
    for _ in range(_NEWTON_STEPS):
        g = _excess(lam, rho)
        dg = lam * math.exp(-lam * rho) - 1.0
        if dg == 0.0:
            break
        nxt = rho - g / dg
        if not (lo <= nxt <= hi) or nxt == rho:
            break
        rho = nxt
    return rho


def dual_lambda(lam: float, rho: float | None = None) -> float:
    """Dual parameter λ* = λ(1 - ρ).

    Evaluated as ``λ exp(-λρ)``, which equals λ(1 - ρ) at the root but keeps
    full relative precision when ρ rounds to 1.
    """
    _check_supercritical(lam)
    if rho is None:
        rho = solve_rho(lam)
    return lam * math.exp(-lam * rho)


def sigma2(lam: float, n: int) -> float:
    """Asymptotic variance ρ(1-ρ)n / (1-λ*)² of the giant component size."""
    rho = solve_rho(lam)
    ls = dual_lambda(lam, rho)
    return rho * (1.0 - rho) * n / (1.0 - ls) ** 2


def theory_values(params: Params) -> TheoryValues:
    lam = params.lam
    rho = solve_rho(lam)
    ls = dual_lambda(lam, rho)
    a = 1.0 - ls
    return TheoryValues(
        rho=rho,
        lambda_star=ls,
        sigma2=rho * (1.0 - rho) * params.n / a**2,
        t1=rho * params.n,
        a=a,
    )


def trajectory_f(params: Params, t):
    """Idealized walk trajectory f(t) = n - t - n e^{-pt} and its derivative.

    Accepts a scalar or an array of times in [0, n].
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > params.n) or np.any(np.isnan(t_arr)):
        raise DomainError(f"t must lie in [0, {params.n}]")
    n, p = params.n, params.p
    decay = np.exp(-p * t_arr)
    f = n - t_arr - n * decay
    fprime = -1.0 + n * p * decay
    if np.ndim(t) == 0:
        return float(f), float(fprime)
    return f, fprime


def trajectory_x(params: Params, t):
    """Discrete trajectory x_t = n - t - n(1-p)^t for integer 0 <= t <= n."""
    t_arr = np.asarray(t)
    if not np.issubdtype(t_arr.dtype, np.integer):
        if np.any(t_arr != np.floor(t_arr)):
            raise DomainError("t must be an integer step index")
    if np.any(t_arr < 0) or np.any(t_arr > params.n):
        raise DomainError(f"t must lie in [0, {params.n}]")
    n, p = params.n, params.p
    t_f = t_arr.astype(float)
    x = n - t_f - n * np.exp(t_f * np.log1p(-p)) if p < 1 else n - t_f - n * (t_f == 0)
    return float(x) if np.ndim(t) == 0 else x


@dataclass(frozen=True)
class DiagnosticTimes:
    """Concrete stand-ins for the slowly growing ω and the window t₀.

    ω = (ε³n)^{1/7} grows without bound while ω⁶ = o(ε³n).
    """

    omega: float
    sigma0: float
    t0: int

    @property
    def z_bound(self) -> float:
        """Upper bound σ₀/ω on the number of components finished by t₀."""
        return self.sigma0 / self.omega


def diagnostic_times(params: Params) -> DiagnosticTimes:
    eps = params.eps
    if eps <= 0:
        raise DomainError(f"diagnostic times need lambda > 1, got {params.lam!r}")
    omega = (eps**3 * params.n) ** (1.0 / 7.0)
    sigma0 = math.sqrt(eps * params.n)
    t0 = min(params.n, round(omega * sigma0 / eps))
    return DiagnosticTimes(omega=omega, sigma0=sigma0, t0=int(t0))


def crossing_index(params: Params, theory: TheoryValues) -> int:
    """t₁ = ρn rounded half-to-even to a step index, clamped to [0, n]."""
    return int(min(params.n, max(0, round(theory.t1))))


def condvar_limit(params: Params, theory: TheoryValues) -> float:
    """Limit nρ/(1-ρ) of the summed martingale conditional variances up to t₁."""
    return params.n * theory.rho / (1.0 - theory.rho)
