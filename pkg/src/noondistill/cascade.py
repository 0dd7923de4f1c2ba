"""Protocol-level analytics for the cascaded and number-resolving distillers.

Unit indices count from the output: unit 1 is the last unit before the output
and schedule lists are ordered ``[rho_1, rho_2, ..., rho_l]``. The input state
meets unit ``l`` first.

Odd cascade (N = 2l+1): every unit must register a d/c coincidence.
Even cascade (N = 2l): units ``l..2`` must register a coincidence; unit 1
accepts exactly one clicking detector and applies -pi/2 (d clicked) or +pi/2
(c clicked) to mode b'.
Resolving protocol: one unit, accept ``m + n = N - 1`` and apply
``(n - m) pi/2`` to mode b'.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

from scipy.optimize import bisect

from .fock import (
    InvalidParameterError,
    InvalidSpecError,
    NoonSpec,
    PureState,
    apply_phase,
    fidelity,
    make_noon,
    single_photon_target,
)
from .unit import INPUT_MODES, TRANSMITTED_MODES, unit_outcomes

PARITIES = ("odd", "even")
CORRECT_FIDELITY = 1.0 - 1e-9


# acceptance rules; written with comparison operators so they also work on numpy arrays

def coincidence(m, n, kind: str = "threshold"):
    if kind == "threshold":
        return (m > 0) & (n > 0)
    return (m == 1) & (n == 1)


def single_click(m, n, kind: str = "threshold"):
    if kind == "threshold":
        return (m > 0) != (n > 0)
    return (m + n) == 1


def single_click_correction(m, n):
    """-pi/2 on b' when d fired, +pi/2 when c fired."""
    return -math.pi / 2 * (m > 0) + math.pi / 2 * (n > 0)


def resolving_correction(m, n):
    return (n - m) * math.pi / 2


@dataclass(frozen=True)
class CascadeSpec:
    parity: str
    photons: int
    phase: float
    reflectances: tuple[float, ...]
    detector: object = None

    def __post_init__(self):
        if self.parity not in PARITIES:
            raise InvalidSpecError(f"parity must be 'odd' or 'even', got {self.parity!r}")
        if int(self.photons) != self.photons or self.photons < 2:
            raise InvalidSpecError(f"a cascade needs N >= 2 photons, got {self.photons!r}")
        if ("odd" if self.photons % 2 else "even") != self.parity:
            raise InvalidSpecError(f"N={self.photons} is inconsistent with parity {self.parity!r}")
        rhos = tuple(float(r) for r in self.reflectances)
        if len(rhos) != self.photons // 2:
            raise InvalidSpecError(f"N={self.photons} needs {self.photons // 2} reflectances, got {len(rhos)}")
        for r in rhos:
            if not 0.0 <= r <= 1.0:
                raise InvalidParameterError(f"reflectance must lie in [0, 1], got {r}")
        if not math.isfinite(self.phase):
            raise InvalidSpecError("phase must be finite")
        object.__setattr__(self, "reflectances", rhos)

    @property
    def units(self) -> int:
        return self.photons // 2

    @classmethod
    def for_photons(cls, photons: int, phase: float, reflectances: Sequence[float], detector=None) -> "CascadeSpec":
        return cls("odd" if photons % 2 else "even", photons, phase, tuple(reflectances), detector)

    @classmethod
    def uniform(cls, photons: int, phase: float, rho: float, detector=None) -> "CascadeSpec":
        return cls.for_photons(photons, phase, [rho] * (photons // 2), detector)

    @classmethod
    def optimal(cls, photons: int, phase: float, detector=None) -> "CascadeSpec":
        parity = "odd" if photons % 2 else "even"
        return cls.for_photons(photons, phase, optimal_schedule(parity, photons).schedule, detector)


@dataclass(frozen=True)
class AnalyticsReport:
    parity: str
    photons: int
    phase: float
    reflectances: tuple[float, ...]
    p_all_11: float
    p_one_12: float
    p_one_21: float
    p_cond: float
    p_success: float
    method: str = "closed-form"
    p_accept: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["reflectances"] = list(self.reflectances)
        return d


@dataclass(frozen=True)
class ResolvingReport:
    photons: int
    rho: float
    p_success: float
    phase_correction: dict = field(default_factory=dict)
    p_cond: float = 1.0

    def to_dict(self) -> dict:
        return {
            "photons": self.photons,
            "rho": self.rho,
            "p_success": self.p_success,
            "p_cond": self.p_cond,
            "phase_correction": [
                {"m": m, "n": n, "theta": theta} for (m, n), theta in sorted(self.phase_correction.items())
            ],
        }


@dataclass(frozen=True)
class OptimalSchedule:
    schedule: tuple[float, ...]
    p_max: float
    stirling: float
    p_max_exact: Fraction


# closed forms

def _coef(c: Fraction, rho):
    # exact for Fraction inputs, float otherwise so numpy grids stay float64
    return c if isinstance(rho, (Fraction, int)) else float(c)


def p_all_11_odd(reflectances: Sequence) -> float:
    """Probability that every unit of the odd cascade heralds (1,1).

    Works with ``Fraction`` reflectances for exact arithmetic.
    """
    p = 1
    for k, rho in enumerate(reflectances, start=1):
        p = p * (_coef(Fraction(k * (2 * k + 1), 2), rho) * (1 - rho) ** (2 * k - 1) * rho**2)
    return p


def p_all_11_even(reflectances: Sequence) -> float:
    """Probability that units 2..l of the even cascade all herald (1,1)."""
    p = 1
    for k, rho in enumerate(reflectances[1:], start=2):
        p = p * (_coef(Fraction(k * (2 * k - 1), 2), rho) * (1 - rho) ** (2 * (k - 1)) * rho**2)
    return p


def p_success_even(reflectances: Sequence):
    rho1 = reflectances[0]
    return 2 * p_all_11_even(reflectances) * (1 - rho1) * rho1


def _require(spec: CascadeSpec, parity: str) -> None:
    if not isinstance(spec, CascadeSpec):
        raise InvalidSpecError("expected a CascadeSpec")
    if spec.parity != parity:
        raise InvalidSpecError(f"expected a {parity} cascade, got {spec.parity}")


def odd_analytics(spec: CascadeSpec, track_herald_phase: bool = False) -> AnalyticsReport:
    """Closed-form figures of merit for the odd cascade.

    With ``track_herald_phase=False`` the (1,2)/(2,1) heralds at units i > 1
    carry the weight ``1 + cos(N phi)``. A (1,2) herald actually multiplies the
    relative phase by ``i**(m-n) = -i``, which turns that weight into
    ``1 + sin(N phi)`` (and ``1 - sin(N phi)`` for (2,1)); pass ``True`` to use
    the phase-tracked weights, which agree with full-state enumeration. Both
    coincide when ``cos(N phi) = 0`` or ``l = 1``.
    """
    _require(spec, "odd")
    rhos = spec.reflectances
    nphi = spec.photons * spec.phase
    s, c = math.sin(nphi), math.cos(nphi)
    p_all = float(p_all_11_odd(rhos))

    p12 = p21 = 0.0
    for i, rho_i in enumerate(rhos, start=1):
        # p_all * rho_i / (1 - rho_i) * prod_{k<i} 1/(1 - rho_k), with the (1 - rho) powers cancelled
        w = 1.0
        for k, rho in enumerate(rhos, start=1):
            expo = 2 * k - 1 - (1 if k <= i else 0)
            w *= k * (2 * k + 1) / 2 * (1 - rho) ** expo * rho**2
        w *= rho_i / 4
        if i == 1:
            p12 += w * (1 + s)
            p21 += w * (1 - s)
        elif track_herald_phase:
            p12 += w * (1 + s)
            p21 += w * (1 - s)
        else:
            p12 += w * (1 + c)
            p21 += w * (1 + c)

    if any(r >= 1.0 for r in rhos):
        p_cond = 0.0
    else:
        denom = (2 - rhos[0]) / (2 * (1 - rhos[0]))
        prod = 1.0 / (1 - rhos[0])
        for rho_i in rhos[1:]:
            weight = 1.0 if track_herald_phase else 1 + c
            denom += weight * rho_i / (2 * (1 - rho_i)) * prod
            prod /= 1 - rho_i
        p_cond = 1.0 / denom
    return AnalyticsReport(
        "odd", spec.photons, spec.phase, rhos, p_all, p12, p21, p_cond, p_all,
        method="closed-form (phase-tracked)" if track_herald_phase else "closed-form",
    )


def even_analytics(spec: CascadeSpec) -> AnalyticsReport:
    """Closed-form figures of merit for the even cascade."""
    _require(spec, "even")
    rhos = spec.reflectances
    p_all = float(p_all_11_even(rhos))
    rho1 = rhos[0]
    p_success = 2 * p_all * (1 - rho1) * rho1

    p12 = 0.0
    for i, rho_i in enumerate(rhos[1:], start=2):
        w = 1.0
        for k, rho in enumerate(rhos[1:], start=2):
            expo = 2 * (k - 1) - (1 if k <= i else 0)
            w *= k * (2 * k - 1) / 2 * (1 - rho) ** expo * rho**2
        p12 += w * rho_i / 2

    if any(r >= 1.0 for r in rhos):
        p_cond = 0.0
    else:
        cos2 = math.cos(spec.photons * spec.phase / 2) ** 2
        denom = 2 - rho1 * (1 + cos2)
        prod = 1.0
        for rho_i in rhos[1:]:
            denom += rho_i / (1 - rho_i) * prod
            prod /= 1 - rho_i
        p_cond = 2 * (1 - rho1) / denom
    return AnalyticsReport("even", spec.photons, spec.phase, rhos, p_all, p12, p12, p_cond, p_success)


def analytics(spec: CascadeSpec, track_herald_phase: bool = False) -> AnalyticsReport:
    if spec.parity == "odd":
        return odd_analytics(spec, track_herald_phase)
    return even_analytics(spec)


def optimal_schedule(parity: str, photons: int) -> OptimalSchedule:
    """Reflectances maximizing the success probability of a cascade."""
    if parity not in PARITIES:
        raise InvalidSpecError(f"parity must be 'odd' or 'even', got {parity!r}")
    if int(photons) != photons or photons < 2:
        raise InvalidSpecError(f"N must be an integer >= 2, got {photons!r}")
    if ("odd" if photons % 2 else "even") != parity:
        raise InvalidSpecError(f"N={photons} is inconsistent with parity {parity!r}")
    units = photons // 2
    if parity == "odd":
        exact = [Fraction(2, 2 * k + 1) for k in range(1, units + 1)]
        p_exact = p_all_11_odd(exact)
        stirling = math.sqrt(2 * math.pi * photons) * math.exp(-photons)
    else:
        exact = [Fraction(1, 2)] + [Fraction(1, k) for k in range(2, units + 1)]
        p_exact = p_success_even(exact)
        stirling = 2 * math.sqrt(2 * math.pi * photons) * math.exp(-photons)
    p_exact = Fraction(p_exact)
    return OptimalSchedule(tuple(float(r) for r in exact), float(p_exact), stirling, p_exact)


def critical_reflectance(photons: int, phase: float, target: float, track_herald_phase: bool = False) -> float:
    """Uniform reflectance at which the odd-cascade conditional probability hits ``target``."""
    if int(photons) != photons or photons < 3 or photons % 2 == 0:
        raise InvalidSpecError(f"critical reflectance needs odd N >= 3, got {photons!r}")
    lo, hi = 1e-9, 1 - 1e-9

    def gap(rho):
        return odd_analytics(CascadeSpec.uniform(photons, phase, rho), track_herald_phase).p_cond - target

    g_lo, g_hi = gap(lo), gap(hi)
    if not (g_hi < 0 < g_lo):
        raise InvalidParameterError(
            f"target {target} unattainable: conditional probability spans ({g_hi + target:.6g}, {g_lo + target:.6g})"
        )
    rho_c = bisect(gap, lo, hi, xtol=1e-15, maxiter=200)
    if abs(gap(rho_c)) > 1e-10:
        raise InvalidParameterError(f"bisection failed to reach target {target}")
    return rho_c


def resolving_success(photons: int, rho: float) -> float:
    return photons * (1 - rho) * rho ** (photons - 1)


def resolving_analytics(photons: int, rho: float) -> ResolvingReport:
    """Success probability and heralded phase corrections for the one-unit protocol."""
    if int(photons) != photons or photons < 2:
        raise InvalidSpecError(f"N must be an integer >= 2, got {photons!r}")
    if not 0.0 <= rho <= 1.0:
        raise InvalidParameterError(f"reflectance must lie in [0, 1], got {rho}")
    corrections = {(m, photons - 1 - m): resolving_correction(m, photons - 1 - m) for m in range(photons)}
    return ResolvingReport(photons, float(rho), resolving_success(photons, rho), corrections)


def resolving_optimum(photons: int) -> float:
    return (photons - 1) / photons


def efficiency_penalty(protocol: str, photons: int, eta: float) -> float:
    """Aggregate detector-efficiency multiplier on the success probability.

    Coincidence cascades need all N photons detected (``eta**N``); the
    resolving protocol is quoted as ``eta**2`` for its two detectors.
    """
    if not 0.0 < eta <= 1.0:
        raise InvalidParameterError(f"efficiency must lie in (0, 1], got {eta}")
    if protocol == "resolving":
        return eta**2
    if protocol in PARITIES or protocol == "cascade":
        return eta**photons
    raise InvalidSpecError(f"unknown protocol {protocol!r}")


@dataclass(frozen=True)
class SweepRow:
    photons: int
    coincidence_max: float
    resolving_max: float


def fig4_sweep(n_min: int, n_max: int) -> list[SweepRow]:
    """Best achievable success probability of both protocols versus N."""
    if not 2 <= n_min <= n_max:
        raise InvalidParameterError(f"need 2 <= N_min <= N_max, got ({n_min}, {n_max})")
    rows = []
    for n in range(n_min, n_max + 1):
        coinc = float(Fraction(math.factorial(n), n**n))
        rows.append(SweepRow(n, coinc, ((n - 1) / n) ** (n - 1)))
    return rows


# full-state enumeration oracles

def _to_input(state: PureState) -> PureState:
    return state.relabel(dict(zip(TRANSMITTED_MODES, INPUT_MODES)))


def enumerate_cascade(spec: CascadeSpec, detector_kind: str = "threshold") -> AnalyticsReport:
    """Exact figures of merit by walking every heralded branch of the cascade.

    Each unit is propagated at the Fock level and branched over its detection
    table; acceptance rules and phase corrections are applied per branch.
    Perfect detectors are assumed.
    """
    photons, phase = spec.photons, spec.phase
    rhos = spec.reflectances
    target = single_photon_target(photons, phase, INPUT_MODES)
    order = list(range(spec.units, 0, -1))
    n_coincidence = spec.units if spec.parity == "odd" else spec.units - 1
    totals = dict(p_all_11=0.0, p_one_12=0.0, p_one_21=0.0, p_accept=0.0, p_success=0.0)

    def classify(heralds, prob):
        others = [h for h in heralds if h != (1, 1)]
        if not others:
            totals["p_all_11"] += prob
        elif others == [(1, 2)]:
            totals["p_one_12"] += prob
        elif others == [(2, 1)]:
            totals["p_one_21"] += prob

    def walk(state, pos, prob, heralds):
        if pos == n_coincidence:
            classify(heralds, prob)
        if pos == len(order):
            totals["p_accept"] += prob
            if fidelity(state, target) >= CORRECT_FIDELITY:
                totals["p_success"] += prob
            return
        unit = order[pos]
        for out in unit_outcomes(state, rhos[unit - 1]):
            m, n = out.event.m, out.event.n
            nxt = _to_input(out.transmitted)
            if spec.parity == "even" and unit == 1:
                if not single_click(m, n, detector_kind):
                    continue
                walk(apply_phase(nxt, "b", single_click_correction(m, n)), pos + 1, prob * out.probability, heralds)
            elif coincidence(m, n, detector_kind):
                walk(nxt, pos + 1, prob * out.probability, heralds + ((m, n),))

    walk(make_noon(NoonSpec(photons, photons, phase), INPUT_MODES), 0, 1.0, ())

    p_cond = totals["p_success"] / totals["p_accept"] if totals["p_accept"] > 0 else 0.0
    return AnalyticsReport(
        spec.parity, photons, phase, rhos,
        totals["p_all_11"], totals["p_one_12"], totals["p_one_21"], p_cond, totals["p_success"],
        method=f"enumeration ({detector_kind})", p_accept=totals["p_accept"],
    )


def enumerate_resolving(photons: int, phase: float, rho: float) -> tuple[float, list[tuple[int, int, float, float]]]:
    """Exact success probability of the one-unit resolving protocol.

    Returns ``(p_success, rows)`` with one ``(m, n, probability, fidelity)`` row
    per accepted detection event, fidelity taken after the phase correction.
    """
    state = make_noon(NoonSpec(photons, photons, phase), INPUT_MODES)
    target = single_photon_target(photons, phase, INPUT_MODES)
    rows = []
    p_success = 0.0
    for out in unit_outcomes(state, float(rho)):
        m, n = out.event.m, out.event.n
        if m + n != photons - 1:
            continue
        corrected = apply_phase(_to_input(out.transmitted), "b", resolving_correction(m, n))
        f = fidelity(corrected, target)
        rows.append((m, n, out.probability, f))
        if f >= CORRECT_FIDELITY:
            p_success += out.probability
    return p_success, rows
