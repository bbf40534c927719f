"""Finite-sample confidence bound for the fixed-bandwidth entropy estimator.

For an L-Lipschitz density supported on the unit cube and a kernel with sup
``K_max`` and first-moment constant ``C2``, the absolute entropy estimation
error is, with probability at least ``1 - delta``, at most

    eps = -log(1 - (3 N K_max / (w^d delta)) sqrt(log(6N/delta) / (2M))
              - 3 N C2 w / delta)
          + sqrt(3 C1 / (N delta)),

valid only while the argument of the logarithm stays positive.  The
evaluator treats the kernel abstractly through ``(K_max, C2)``; the Gaussian
kernel shipped by this library is not compactly supported and therefore only
approximately matches the hypotheses, so constants for a box-truncated
Gaussian are provided as an alternative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError

_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class BoundInputs:
    """Everything the bound formula consumes.

    ``C1`` bounds the second log-moment of the density, ``C2`` is the
    Lipschitz constant times the kernel's first absolute moment, ``K_max``
    the kernel sup.
    """

    n: float
    m: float
    w: float
    d: int
    delta: float
    lipschitz: float
    k_max: float
    c1: float
    c2: float

    def __post_init__(self):
        if min(self.n, self.m, self.w, self.lipschitz, self.k_max, self.c1, self.c2) <= 0:
            raise ParameterError("all bound inputs must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ParameterError("delta must lie in (0, 1)")
        if self.d < 1:
            raise ParameterError("dimension must be at least 1")


def log_argument(b: BoundInputs) -> float:
    """The expression inside the logarithm; the bound exists iff positive."""
    inner = (3.0 * b.n * b.k_max / (b.w**b.d * b.delta)) * math.sqrt(
        math.log(6.0 * b.n / b.delta) / (2.0 * b.m)
    )
    return 1.0 - inner - 3.0 * b.n * b.c2 * b.w / b.delta


def epsilon_bound(b: BoundInputs) -> float | None:
    """High-probability error bound, or ``None`` where the formula is
    infeasible (log argument not positive)."""
    arg = log_argument(b)
    if arg <= 0.0:
        return None
    return -math.log(arg) + math.sqrt(3.0 * b.c1 / (b.n * b.delta))


def lemma_pointwise_bound(m: float, w: float, d: int, delta: float, k_max: float, c2: float) -> float:
    """Pointwise density deviation ``(K_max / w^d) sqrt(log(2/delta) / 2M) + C2 w``.

    The theorem's inner term is this expression at confidence ``delta / 3N``.
    """
    if min(m, w, k_max, c2) <= 0 or not 0 < delta < 1:
        raise ParameterError("invalid lemma inputs")
    return (k_max / w**d) * math.sqrt(math.log(2.0 / delta) / (2.0 * m)) + c2 * w


def _phi(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _std_normal_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def derived_constants(lipschitz: float, d: int, kernel: str = "gauss") -> tuple:
    """Analytic fallback constants ``(p_max, C1, C2, K_max)``.

    ``p_max <= L/2`` and ``C1 <= max(p_max log^2 p_max, 4 e^{-2})`` hold for
    any L-Lipschitz density on the unit cube.  Kernel constants:

    * ``"gauss"``: standard normal in d dimensions (not compactly
      supported, so the theorem hypotheses hold only approximately);
    * ``"trunc_gauss"``: standard normal truncated to the centered unit box
      ``[-1/2, 1/2]^d``, which is compactly supported.
    """
    if lipschitz <= 0:
        raise ParameterError("Lipschitz constant must be positive")
    p_max = lipschitz / 2.0
    c1 = max(p_max * math.log(p_max) ** 2, 4.0 * math.exp(-2.0))
    if kernel == "gauss":
        k_max = (2.0 * math.pi) ** (-d / 2.0)
        abs_moment = d * _SQRT_2_OVER_PI
    elif kernel == "trunc_gauss":
        z1 = 2.0 * _std_normal_cdf(0.5) - 1.0
        k_max = (2.0 * math.pi) ** (-d / 2.0) / z1**d
        # per-axis E|u| of a normal truncated to [-1/2, 1/2]
        abs_moment = d * 2.0 * (_phi(0.0) - _phi(0.5)) / z1
    else:
        raise ParameterError("unknown kernel id %r" % kernel)
    return p_max, c1, lipschitz * abs_moment, k_max


def bound_inputs_from_lipschitz(
    n: float, m: float, w: float, d: int, delta: float, lipschitz: float, kernel: str = "gauss"
) -> BoundInputs:
    """Convenience constructor filling the constants from ``derived_constants``."""
    _, c1, c2, k_max = derived_constants(lipschitz, d, kernel)
    return BoundInputs(n=n, m=m, w=w, d=d, delta=delta, lipschitz=lipschitz, k_max=k_max, c1=c1, c2=c2)


def scan_schedule(
    n_values,
    d: int = 1,
    delta: float = 0.05,
    lipschitz: float = 0.01,
    w_exponent: float = -1.1,
    m_exponent: float = 5.0,
    kernel: str = "gauss",
) -> list:
    """Evaluate the bound along ``w = N^w_exponent, M = N^m_exponent``.

    Returns one dict per N with the inputs and ``eps`` (None = infeasible),
    ready for CSV serialization.
    """
    rows = []
    for n in n_values:
        n = float(n)
        w = n**w_exponent
        m = n**m_exponent
        b = bound_inputs_from_lipschitz(n, m, w, d, delta, lipschitz, kernel)
        rows.append(
            {
                "N": n,
                "M": m,
                "w": w,
                "delta": delta,
                "eps": epsilon_bound(b),
                "log_argument": log_argument(b),
            }
        )
    return rows
