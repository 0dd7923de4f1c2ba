"""Exact few-photon Fock-state algebra.

States are sparse superpositions over occupation-number tuples aligned with an
ordered tuple of mode labels. Bosonic creation operators on distinct modes
commute, so the mode order is presentational; the only sign/phase convention
that matters is the beamsplitter substitution rule in :func:`apply_beamsplitter`.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

PRUNE_THRESHOLD = 1e-15
MAX_PHOTONS_PER_MODE = 64

Occupation = tuple[int, ...]


class InvalidSpecError(ValueError):
    """Raised for malformed state specifications (e.g. N < 1)."""


class InvalidParameterError(ValueError):
    """Raised for out-of-range physical parameters (e.g. reflectance outside [0, 1])."""


class ModeError(ValueError):
    """Raised when mode labels are missing, duplicated or mismatched."""


@dataclass(frozen=True)
class Reflectance:
    """Power reflectance ``rho = r**2`` of a lossless beamsplitter."""

    rho: float

    def __post_init__(self):
        rho = float(self.rho)
        if not (0.0 <= rho <= 1.0) or math.isnan(rho):
            raise InvalidParameterError(f"reflectance must lie in [0, 1], got {self.rho!r}")
        object.__setattr__(self, "rho", rho)

    @property
    def r(self) -> float:
        return math.sqrt(self.rho)

    @property
    def t(self) -> float:
        return math.sqrt(1.0 - self.rho)

    @property
    def tau(self) -> float:
        return 1.0 - self.rho


def as_reflectance(rho: float | Reflectance) -> Reflectance:
    return rho if isinstance(rho, Reflectance) else Reflectance(rho)


@dataclass(frozen=True)
class NoonSpec:
    """Parameters of ``(|N,0> + exp(i M phi)|0,N>)/sqrt(2)``."""

    photons: int
    multiplier: int
    phase: float

    def __post_init__(self):
        if int(self.photons) != self.photons or self.photons < 1:
            raise InvalidSpecError(f"photon number must be an integer >= 1, got {self.photons!r}")
        if int(self.multiplier) != self.multiplier or self.multiplier < 1:
            raise InvalidSpecError(f"phase multiplier must be an integer >= 1, got {self.multiplier!r}")
        if not math.isfinite(self.phase):
            raise InvalidSpecError(f"phase must be finite, got {self.phase!r}")


class PureState:
    """Sparse (possibly unnormalized) superposition of Fock states.

    ``terms`` maps occupation tuples (aligned with ``modes``) to complex
    amplitudes. Amplitudes with modulus below ``PRUNE_THRESHOLD`` are dropped.
    Instances are immutable and hashable.
    """

    __slots__ = ("_modes", "_terms", "_hash")

    def __init__(self, modes: Sequence[str], terms: Mapping[Occupation, complex], *, prune: bool = True):
        modes = tuple(modes)
        if len(set(modes)) != len(modes):
            raise ModeError(f"duplicate mode labels in {modes}")
        clean: dict[Occupation, complex] = {}
        for occ, amp in terms.items():
            occ = tuple(int(n) for n in occ)
            if len(occ) != len(modes):
                raise ModeError(f"occupation {occ} does not match modes {modes}")
            if any(n < 0 for n in occ):
                raise InvalidSpecError(f"negative photon number in {occ}")
            if any(n > MAX_PHOTONS_PER_MODE for n in occ):
                raise InvalidSpecError(f"more than {MAX_PHOTONS_PER_MODE} photons in one mode: {occ}")
            amp = complex(amp)
            if not (cmath.isfinite(amp)):
                raise InvalidParameterError(f"non-finite amplitude {amp} for {occ}")
            if prune and abs(amp) < PRUNE_THRESHOLD:
                continue
            clean[occ] = clean.get(occ, 0j) + amp
        self._modes = modes
        self._terms = MappingProxyType(dict(sorted(clean.items())))
        self._hash = None

    # construction helpers

    @classmethod
    def fock(cls, modes: Sequence[str], occupations: Sequence[int], amplitude: complex = 1.0) -> "PureState":
        return cls(modes, {tuple(occupations): amplitude})

    @classmethod
    def vacuum(cls, modes: Sequence[str]) -> "PureState":
        return cls.fock(modes, (0,) * len(tuple(modes)))

    # accessors

    @property
    def modes(self) -> tuple[str, ...]:
        return self._modes

    @property
    def terms(self) -> Mapping[Occupation, complex]:
        return self._terms

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    def index(self, mode: str) -> int:
        try:
            return self._modes.index(mode)
        except ValueError:
            raise ModeError(f"mode {mode!r} not in {self._modes}") from None

    def amplitude(self, occupations: Mapping[str, int] | Sequence[int]) -> complex:
        """Amplitude of one Fock state; a mapping may omit vacuum modes."""
        if isinstance(occupations, Mapping):
            unknown = set(occupations) - set(self._modes)
            if unknown:
                raise ModeError(f"unknown modes {sorted(unknown)}")
            occ = tuple(int(occupations.get(m, 0)) for m in self._modes)
        else:
            occ = tuple(occupations)
        return self._terms.get(occ, 0j)

    def norm_squared(self) -> float:
        return math.fsum(abs(a) ** 2 for a in self._terms.values())

    def photon_numbers(self) -> set[int]:
        return {sum(occ) for occ in self._terms}

    # algebra

    def normalized(self) -> "PureState":
        n2 = self.norm_squared()
        if n2 == 0.0:
            raise InvalidParameterError("cannot normalize the zero vector")
        return self.scale(1.0 / math.sqrt(n2))

    def scale(self, factor: complex) -> "PureState":
        return PureState(self._modes, {k: v * factor for k, v in self._terms.items()})

    def __add__(self, other: "PureState") -> "PureState":
        if not isinstance(other, PureState):
            return NotImplemented
        other = other.reorder(self._modes)
        summed = dict(self._terms)
        for k, v in other._terms.items():
            summed[k] = summed.get(k, 0j) + v
        return PureState(self._modes, summed)

    def __mul__(self, factor: complex) -> "PureState":
        return self.scale(factor)

    __rmul__ = __mul__

    def inner(self, other: "PureState") -> complex:
        """``<self|other>``; both states must live on the same set of modes."""
        other = other.reorder(self._modes)
        return sum((self._terms[k].conjugate() * v for k, v in other._terms.items() if k in self._terms), 0j)

    def with_modes(self, extra: Iterable[str]) -> "PureState":
        """Append vacuum modes."""
        extra = tuple(extra)
        clash = set(extra) & set(self._modes)
        if clash:
            raise ModeError(f"modes {sorted(clash)} already present")
        pad = (0,) * len(extra)
        return PureState(self._modes + extra, {k + pad: v for k, v in self._terms.items()}, prune=False)

    def relabel(self, mapping: Mapping[str, str]) -> "PureState":
        unknown = set(mapping) - set(self._modes)
        if unknown:
            raise ModeError(f"cannot relabel missing modes {sorted(unknown)}")
        return PureState(tuple(mapping.get(m, m) for m in self._modes), self._terms, prune=False)

    def reorder(self, modes: Sequence[str]) -> "PureState":
        modes = tuple(modes)
        if modes == self._modes:
            return self
        if sorted(modes) != sorted(self._modes):
            raise ModeError(f"mode sets differ: {self._modes} vs {modes}")
        perm = [self._modes.index(m) for m in modes]
        return PureState(modes, {tuple(k[i] for i in perm): v for k, v in self._terms.items()}, prune=False)

    def project(self, fixed: Mapping[str, int]) -> "PureState":
        """Unnormalized block with the given modes fixed; those modes are removed."""
        idx = {self.index(m): n for m, n in fixed.items()}
        keep = [i for i in range(len(self._modes)) if i not in idx]
        block = {
            tuple(k[i] for i in keep): v
            for k, v in self._terms.items()
            if all(k[i] == n for i, n in idx.items())
        }
        return PureState(tuple(self._modes[i] for i in keep), block, prune=False)

    # comparison / hashing

    def __eq__(self, other):
        if not isinstance(other, PureState):
            return NotImplemented
        return self._modes == other._modes and dict(self._terms) == dict(other._terms)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self._modes, tuple(self._terms.items())))
        return self._hash

    def allclose(self, other: "PureState", atol: float = 1e-12) -> bool:
        other = other.reorder(self._modes)
        keys = set(self._terms) | set(other._terms)
        return all(abs(self._terms.get(k, 0j) - other._terms.get(k, 0j)) <= atol for k in keys)

    def __repr__(self):
        if not self._terms:
            return f"PureState({self._modes}, 0)"
        parts = [f"({v.real:+.6g}{v.imag:+.6g}j)|{','.join(map(str, k))}>" for k, v in self._terms.items()]
        return f"PureState[{','.join(self._modes)}]: " + " ".join(parts)

    # serialization

    def to_dict(self) -> dict:
        return {
            "modes": list(self._modes),
            "terms": [[list(k), v.real, v.imag] for k, v in self._terms.items()],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "PureState":
        return cls(data["modes"], {tuple(occ): complex(re, im) for occ, re, im in data["terms"]}, prune=False)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "PureState":
        return cls.from_dict(json.loads(text))


def make_noon(spec: NoonSpec, modes: tuple[str, str] = ("a", "b")) -> PureState:
    """Build ``|N::0>^{M phi}`` on two modes, normalized with ``1/sqrt(2)``."""
    if not isinstance(spec, NoonSpec):
        spec = NoonSpec(*spec)
    a, b = modes
    if a == b:
        raise ModeError("N00N modes must be distinct")
    n = spec.photons
    s = 1.0 / math.sqrt(2.0)
    return PureState((a, b), {(n, 0): s, (0, n): s * cmath.exp(1j * spec.multiplier * spec.phase)})


def single_photon_target(multiplier: int, phase: float, modes: tuple[str, str] = ("a", "b")) -> PureState:
    """The super-resolving output ``|1::0>^{M phi}``."""
    return make_noon(NoonSpec(1, multiplier, phase), modes)


@lru_cache(maxsize=4096)
def _bs_kernel(n1: int, n2: int, t: float, r: float) -> tuple[tuple[int, int, complex], ...]:
    """Fock-basis image of ``|n1, n2>`` under in1 -> t o1 + i r o2, in2 -> t o2 + i r o1."""
    ir = 1j * r
    acc: dict[tuple[int, int], complex] = {}
    for j in range(n1 + 1):
        c1 = math.comb(n1, j) * t**j * ir ** (n1 - j)
        for k in range(n2 + 1):
            c2 = math.comb(n2, k) * t**k * ir ** (n2 - k)
            key = (j + n2 - k, n1 - j + k)
            acc[key] = acc.get(key, 0j) + c1 * c2
    denom = math.factorial(n1) * math.factorial(n2)
    return tuple(
        (p, q, c * math.sqrt(math.factorial(p) * math.factorial(q) / denom)) for (p, q), c in acc.items()
    )


def apply_beamsplitter(
    state: PureState,
    inputs: tuple[str, str],
    outputs: tuple[str, str],
    rho: float | Reflectance,
) -> PureState:
    """Mix two modes on a beamsplitter of reflectance ``rho``.

    Creation operators are substituted as ``in1 -> t*out1 + i*r*out2`` and
    ``in2 -> t*out2 + i*r*out1``. Outputs replace the inputs in place in the
    mode tuple; they may reuse the input labels.
    """
    refl = as_reflectance(rho)
    in1, in2 = inputs
    out1, out2 = outputs
    if in1 == in2 or out1 == out2:
        raise ModeError("beamsplitter ports must be distinct")
    i1, i2 = state.index(in1), state.index(in2)
    others = set(state.modes) - {in1, in2}
    if out1 in others or out2 in others:
        raise ModeError(f"output labels {outputs} collide with existing modes")
    t, r = refl.t, refl.r
    acc: dict[Occupation, complex] = {}
    for occ, amp in state.terms.items():
        base = list(occ)
        for p, q, c in _bs_kernel(occ[i1], occ[i2], t, r):
            base[i1], base[i2] = p, q
            key = tuple(base)
            acc[key] = acc.get(key, 0j) + amp * c
    modes = list(state.modes)
    modes[i1], modes[i2] = out1, out2
    return PureState(modes, acc)


def apply_phase(state: PureState, mode: str, theta: float) -> PureState:
    """Multiply each term by ``exp(i theta n)`` with ``n`` the count in ``mode``."""
    i = state.index(mode)
    if theta == 0:
        return state
    return PureState(state.modes, {k: v * cmath.exp(1j * theta * k[i]) for k, v in state.terms.items()})


def fidelity(state: PureState, target: PureState) -> float:
    """``|<target|state>|**2``, clipped to [0, 1]."""
    if set(state.modes) != set(target.modes):
        raise ModeError(f"mode sets differ: {state.modes} vs {target.modes}")
    return min(1.0, max(0.0, abs(target.inner(state)) ** 2))
