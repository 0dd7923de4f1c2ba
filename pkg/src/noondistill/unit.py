"""The which-way stage and the quantum-eraser unit.

A unit taps photons off both arms of a two-mode state with two equal
beamsplitters and merges the tapped modes on a 50-50 beamsplitter before the
detectors ``d`` and ``c``. Port conventions::

    a  -> t a'  + i r c'        b  -> t b'  + i r d'
    c' -> (d + i c)/sqrt(2)     d' -> (c + i d)/sqrt(2)

so photons leaving through ``c'`` pick up ``i`` per photon at ``c`` and photons
leaving through ``d'`` pick up ``i`` per photon at ``d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .fock import (
    PRUNE_THRESHOLD,
    InvalidSpecError,
    ModeError,
    NoonSpec,
    PureState,
    Reflectance,
    apply_beamsplitter,
    as_reflectance,
    make_noon,
)

INPUT_MODES = ("a", "b")
TRANSMITTED_MODES = ("a'", "b'")
DETECTOR_MODES = ("d", "c")
OUTPUT_MODES = TRANSMITTED_MODES + DETECTOR_MODES


@dataclass(frozen=True, order=True)
class DetectionEvent:
    """Photon counts ``m`` at detector d and ``n`` at detector c.

    In merger sums where ``k`` photons hit the eraser, ``n = k - m``.
    """

    m: int
    n: int

    def __post_init__(self):
        if self.m < 0 or self.n < 0:
            raise InvalidSpecError(f"detector counts must be non-negative, got ({self.m}, {self.n})")

    @property
    def total(self) -> int:
        return self.m + self.n


@dataclass(frozen=True)
class UnitOutcome:
    event: DetectionEvent
    probability: float
    transmitted: PureState


def _check_input(state: PureState) -> None:
    if set(state.modes) != set(INPUT_MODES):
        raise ModeError(f"unit input must live on modes {INPUT_MODES}, got {state.modes}")


def _tap(state: PureState, rho: Reflectance) -> PureState:
    state = state.reorder(INPUT_MODES).with_modes(("v_a", "v_b"))
    state = apply_beamsplitter(state, ("a", "v_a"), ("a'", "c'"), rho)
    return apply_beamsplitter(state, ("b", "v_b"), ("b'", "d'"), rho)


def unit_propagate(state: PureState, rho: float | Reflectance) -> PureState:
    """Propagate a state on (a, b) through one eraser unit; result on (a', b', d, c)."""
    _check_input(state)
    tapped = _tap(state, as_reflectance(rho))
    return apply_beamsplitter(tapped, ("c'", "d'"), ("d", "c"), 0.5)


def which_way_propagate(state: PureState, rho: float | Reflectance) -> PureState:
    """Same tap as :func:`unit_propagate` but with no eraser: c' -> c and d' -> d."""
    _check_input(state)
    tapped = _tap(state, as_reflectance(rho))
    return tapped.relabel({"c'": "c", "d'": "d"}).reorder(OUTPUT_MODES)


def detection_table(fourmode: PureState) -> list[UnitOutcome]:
    """Split a state on (a', b', d, c) by detector counts.

    Outcomes come in lexicographic ``(m, n)`` order; those with probability at
    or below the pruning threshold are omitted.
    """
    fourmode = fourmode.reorder(OUTPUT_MODES)
    blocks: dict[tuple[int, int], dict] = {}
    for (na, nb, m, n), amp in fourmode.terms.items():
        blocks.setdefault((m, n), {})[(na, nb)] = amp
    outcomes = []
    for (m, n) in sorted(blocks):
        block = PureState(TRANSMITTED_MODES, blocks[(m, n)], prune=False)
        p = block.norm_squared()
        if p <= PRUNE_THRESHOLD:
            continue
        outcomes.append(UnitOutcome(DetectionEvent(m, n), p, block.scale(1.0 / math.sqrt(p))))
    return outcomes


@lru_cache(maxsize=8192)
def unit_outcomes(state: PureState, rho: float) -> tuple[UnitOutcome, ...]:
    """Cached ``detection_table(unit_propagate(state, rho))``."""
    return tuple(detection_table(unit_propagate(state, rho)))


def prob_closed_form(
    photons: int,
    multiplier: int,
    phase: float,
    event: DetectionEvent | tuple[int, int],
    rho: float | Reflectance,
) -> float:
    """Probability of detecting ``(m, n)`` at (d, c) for a ``|N::0>^{M phi}`` input.

    Binomial tap of ``m+n`` photons, binomial split on the eraser, and an
    interference factor that only survives when every photon is tapped.
    """
    NoonSpec(photons, multiplier, phase)
    rho = as_reflectance(rho).rho
    if not isinstance(event, DetectionEvent):
        event = DetectionEvent(*event)
    m, n = event.m, event.n
    k = m + n
    if k > photons:
        return 0.0
    p = math.comb(photons, k) * (1.0 - rho) ** (photons - k) * rho**k * math.comb(k, m) * 0.5**k
    if k == photons:
        p *= 1.0 + math.cos(multiplier * phase + (m - n) * math.pi / 2)
    return p


def noon_unit_table(photons: int, multiplier: int, phase: float, rho: float, *, erase: bool = True) -> list[UnitOutcome]:
    """Detection table for a N00N input; convenience wrapper used by the CLI."""
    state = make_noon(NoonSpec(photons, multiplier, phase), INPUT_MODES)
    four = unit_propagate(state, rho) if erase else which_way_propagate(state, rho)
    return detection_table(four)
