"""Signal model for spectrally sparse time series.

A signal of ambient length ``n`` is a finite sum of complex sinusoids

    x[l] = sum_j c_j * exp(i 2 pi f_j l),    l = 0, ..., n - 1,

with frequencies ``f_j`` living on the unit circle ([0, 1) modulo 1).
This module holds the ground-truth representation (:class:`LineSpectrum`),
the sampling containers (:class:`SampleSet`, :class:`ObservedSignal`), the
prior descriptions (:class:`NoPrior`, :class:`Probabilistic`,
:class:`Block`, :class:`KnownPoles`), random instance generation, recovery
scoring, and a line-oriented text serialization.

All types are immutable after construction and safe to share across
threads; random generation takes an explicit seed or generator, never
global state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

__all__ = [
    "LineSpectrum",
    "SampleSet",
    "ObservedSignal",
    "Band",
    "NoPrior",
    "Probabilistic",
    "Block",
    "KnownPoles",
    "PriorSpec",
    "RecoveryScore",
    "synthesize",
    "random_sample_set",
    "random_instance",
    "score_recovery",
    "wrap_distance",
    "probabilistic_from_pdf",
    "to_text",
    "from_text",
    "save_signal",
    "load_signal",
]

# Rejection sampling for min-separation draws gives up after this many
# rounds; a deterministic failure beats silently biased samples.
_MAX_REJECTION_ROUNDS = 10_000


def wrap_distance(f1, f2):
    """Distance between frequencies on the unit circle.

    Parameters
    ----------
    f1, f2 : float or ndarray
        Frequencies, interpreted modulo 1.

    Returns
    -------
    float or ndarray
        ``min(|f1 - f2| mod 1, 1 - |f1 - f2| mod 1)``, in [0, 0.5].
    """
    d = np.mod(np.asarray(f1) - np.asarray(f2), 1.0)
    return np.minimum(d, 1.0 - d)[()]


@dataclass(frozen=True)
class LineSpectrum:
    """A finite list of (frequency, complex coefficient) atoms.

    Atoms are stored in canonical form: sorted ascending by frequency.
    Frequencies must be distinct and in [0, 1); coefficients nonzero.
    """

    atoms: tuple[tuple[float, complex], ...]

    def __post_init__(self):
        canon = tuple(
            sorted(((float(f), complex(c)) for f, c in self.atoms), key=lambda a: a[0])
        )
        object.__setattr__(self, "atoms", canon)
        freqs = [f for f, _ in canon]
        if any(not (0.0 <= f < 1.0) for f in freqs):
            raise ValueError("frequencies must lie in [0, 1)")
        if len(set(freqs)) != len(freqs):
            raise ValueError("frequencies must be distinct")
        if any(abs(c) == 0.0 for _, c in canon):
            raise ValueError("coefficients must be nonzero")

    @property
    def s(self) -> int:
        return len(self.atoms)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([f for f, _ in self.atoms], dtype=float)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for _, c in self.atoms], dtype=complex)


@dataclass(frozen=True)
class SampleSet:
    """Index set M of observed samples inside the ambient window {0..n-1}."""

    n: int
    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if self.n < 1:
            raise ValueError("ambient length n must be >= 1")
        if any(not (0 <= i < self.n) for i in idx):
            raise ValueError("indices must lie in [0, n-1]")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("indices must be strictly increasing")

    @property
    def m(self) -> int:
        return len(self.indices)

    def index_array(self) -> np.ndarray:
        return np.array(self.indices, dtype=int)


@dataclass(frozen=True)
class ObservedSignal:
    """Complex samples of a signal on a :class:`SampleSet`."""

    sample_set: SampleSet
    values: tuple[complex, ...]

    def __post_init__(self):
        vals = tuple(complex(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) != self.sample_set.m:
            raise ValueError("values length must equal the number of indices")

    @property
    def n(self) -> int:
        return self.sample_set.n

    @property
    def m(self) -> int:
        return self.sample_set.m

    def value_array(self) -> np.ndarray:
        return np.array(self.values, dtype=complex)


@dataclass(frozen=True)
class Band:
    """A frequency interval [f_lo, f_hi] inside [0, 1]."""

    f_lo: float
    f_hi: float

    def __post_init__(self):
        object.__setattr__(self, "f_lo", float(self.f_lo))
        object.__setattr__(self, "f_hi", float(self.f_hi))
        if not (0.0 <= self.f_lo < self.f_hi <= 1.0):
            raise ValueError("band must satisfy 0 <= f_lo < f_hi <= 1")

    @property
    def width(self) -> float:
        return self.f_hi - self.f_lo

    def contains(self, f) -> np.ndarray:
        """Membership test; the shared boundary point belongs to the band
        whose upper edge it is (lower band owns the boundary), except that
        the first band of a partition also owns f = 0 -- callers that need
        partition semantics use :meth:`Probabilistic.band_index`."""
        f = np.asarray(f)
        return (self.f_lo <= f) & (f <= self.f_hi)


@dataclass(frozen=True)
class NoPrior:
    """No spectral knowledge: atoms can sit anywhere in [0, 1)."""


@dataclass(frozen=True)
class Probabilistic:
    """Piecewise-constant frequency density, encoded as per-band weights.

    ``bands`` must partition [0, 1]: sorted, contiguous (each upper edge is
    the next lower edge), starting at 0 and ending at 1. ``weights[k]`` is
    the penalty weight of band k, the reciprocal of the density there; a
    likely band carries a small weight. A boundary point shared by two
    bands belongs to the lower band.
    """

    bands: tuple[Band, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        bands = tuple(self.bands)
        weights = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "bands", bands)
        object.__setattr__(self, "weights", weights)
        if len(bands) == 0 or len(bands) != len(weights):
            raise ValueError("need one weight per band")
        if any(w <= 0 for w in weights):
            raise ValueError("weights must be positive")
        if bands[0].f_lo != 0.0 or bands[-1].f_hi != 1.0:
            raise ValueError("bands must cover [0, 1]")
        for a, b in zip(bands, bands[1:]):
            if a.f_hi != b.f_lo:
                raise ValueError("bands must tile [0, 1] without gaps or overlap")

    @property
    def p(self) -> int:
        return len(self.bands)

    def band_index(self, f) -> np.ndarray:
        """Index of the band owning each frequency (lower band owns shared
        boundary points; the first band owns 0)."""
        uppers = np.array([b.f_hi for b in self.bands])
        idx = np.searchsorted(uppers, np.asarray(f, dtype=float), side="left")
        return np.minimum(idx, len(self.bands) - 1)[()]

    def weight_at(self, f):
        """Piecewise-constant weight function w(f)."""
        w = np.array(self.weights)
        return w[self.band_index(f)]


@dataclass(frozen=True)
class Block:
    """Support prior: every atom lies inside one of the disjoint bands."""

    bands: tuple[Band, ...]

    def __post_init__(self):
        bands = tuple(sorted(self.bands, key=lambda b: b.f_lo))
        object.__setattr__(self, "bands", bands)
        if len(bands) == 0:
            raise ValueError("need at least one band")
        for a, b in zip(bands, bands[1:]):
            if b.f_lo < a.f_hi:
                raise ValueError("bands must be pairwise disjoint")

    def covers(self, f) -> np.ndarray:
        f = np.asarray(f)
        hit = np.zeros(f.shape, dtype=bool)
        for b in self.bands:
            hit |= (b.f_lo <= f) & (f <= b.f_hi)
        return hit[()]


@dataclass(frozen=True)
class KnownPoles:
    """Exactly known frequencies (coefficients unknown)."""

    freqs: tuple[float, ...]

    def __post_init__(self):
        freqs = tuple(float(f) for f in self.freqs)
        object.__setattr__(self, "freqs", freqs)
        if any(not (0.0 <= f < 1.0) for f in freqs):
            raise ValueError("known poles must lie in [0, 1)")
        if len(set(freqs)) != len(freqs):
            raise ValueError("known poles must be distinct")

    @property
    def p(self) -> int:
        return len(self.freqs)


PriorSpec = Union[NoPrior, Probabilistic, Block, KnownPoles]


def probabilistic_from_pdf(bands: Sequence[Band], pdf_values: Sequence[float]) -> Probabilistic:
    """Build a :class:`Probabilistic` prior from piecewise pdf values.

    The weight of a band is the reciprocal of its density, w(f) = 1/p_F(f).
    """
    if any(p <= 0 for p in pdf_values):
        raise ValueError("pdf values must be positive")
    return Probabilistic(tuple(bands), tuple(1.0 / float(p) for p in pdf_values))


def synthesize(spectrum: LineSpectrum, sample_set: SampleSet) -> ObservedSignal:
    """Evaluate the sum of sinusoids on the given sample indices.

    Returns values[k] = sum_j c_j exp(i 2 pi f_j * indices[k]).
    """
    idx = sample_set.index_array()
    if spectrum.s == 0:
        vals = np.zeros(len(idx), dtype=complex)
    else:
        phases = np.exp(2j * np.pi * np.outer(idx, spectrum.frequencies))
        vals = phases @ spectrum.coefficients
    return ObservedSignal(sample_set, tuple(vals))


def random_sample_set(n: int, m: int, rng) -> SampleSet:
    """Draw m of the n indices uniformly at random without replacement."""
    rng = np.random.default_rng(rng)
    if not (1 <= m <= n):
        raise ValueError("need 1 <= m <= n")
    idx = np.sort(rng.choice(n, size=m, replace=False))
    return SampleSet(n, tuple(int(i) for i in idx))


def _draw_frequencies(s: int, prior: PriorSpec, rng) -> np.ndarray:
    if isinstance(prior, NoPrior):
        return rng.random(s)
    if isinstance(prior, Probabilistic):
        widths = np.array([b.width for b in prior.bands])
        masses = widths / np.array(prior.weights)  # density = 1/w
        masses /= masses.sum()
        which = rng.choice(len(prior.bands), size=s, p=masses)
        lo = np.array([b.f_lo for b in prior.bands])[which]
        wd = widths[which]
        return lo + wd * rng.random(s)
    if isinstance(prior, Block):
        widths = np.array([b.width for b in prior.bands])
        masses = widths / widths.sum()
        which = rng.choice(len(prior.bands), size=s, p=masses)
        lo = np.array([b.f_lo for b in prior.bands])[which]
        return lo + widths[which] * rng.random(s)
    raise TypeError(f"cannot draw frequencies for prior {type(prior).__name__}")


def _min_wrap_gap(freqs: np.ndarray) -> float:
    f = np.sort(np.mod(freqs, 1.0))
    if len(f) < 2:
        return math.inf
    gaps = np.diff(f)
    return float(min(gaps.min(), 1.0 - f[-1] + f[0]))


def random_instance(
    n: int,
    s: int,
    prior: PriorSpec,
    min_sep: float | None = None,
    seed=None,
) -> LineSpectrum:
    """Draw a random s-atom spectrum consistent with a prior.

    Frequencies are uniform on [0, 1) for :class:`NoPrior`, uniform within
    the band union for :class:`Block`, and density-weighted for
    :class:`Probabilistic`. For :class:`KnownPoles` the known frequencies
    are included verbatim and the remaining ``s - p`` are drawn uniformly.
    Amplitudes follow 0.5 + Z^2 with Z standard normal (a 0.5-shifted
    chi-squared with one degree of freedom); phases are uniform on
    [0, 2 pi).

    Parameters
    ----------
    n : int
        Ambient window length (kept for interface symmetry; the draw itself
        does not depend on it).
    s : int
        Number of atoms, >= 1.
    prior : PriorSpec
        Where frequencies may fall.
    min_sep : float, optional
        If given, the wrap-around pairwise spacing must be >= min_sep;
        enforced by whole-draw rejection, at most 10^4 rounds.
    seed : int, np.random.Generator, or None
        Seed or generator; a fixed seed gives a bit-reproducible draw.

    Raises
    ------
    RuntimeError
        If rejection sampling cannot satisfy min_sep within the round cap.
    """
    if s < 1:
        raise ValueError("s must be >= 1")
    rng = np.random.default_rng(seed)

    fixed = np.array([], dtype=float)
    draw_prior: PriorSpec = prior
    n_draw = s
    if isinstance(prior, KnownPoles):
        if prior.p > s:
            raise ValueError("more known poles than atoms")
        fixed = np.array(prior.freqs, dtype=float)
        if min_sep is not None and len(fixed) >= 2 and _min_wrap_gap(fixed) < min_sep:
            raise ValueError("known poles violate the requested min_sep")
        draw_prior = NoPrior()
        n_draw = s - prior.p

    for _ in range(_MAX_REJECTION_ROUNDS):
        drawn = _draw_frequencies(n_draw, draw_prior, rng) if n_draw else np.array([])
        freqs = np.concatenate([fixed, drawn])
        if len(np.unique(freqs)) != s:
            continue
        if min_sep is not None and _min_wrap_gap(freqs) < min_sep:
            continue
        break
    else:
        raise RuntimeError(
            f"could not draw {s} frequencies with min_sep={min_sep} "
            f"in {_MAX_REJECTION_ROUNDS} rounds; prior too tight"
        )

    amps = 0.5 + rng.standard_normal(s) ** 2
    phases = rng.uniform(0.0, 2.0 * np.pi, s)
    coeffs = amps * np.exp(1j * phases)
    return LineSpectrum(tuple(zip(freqs.tolist(), coeffs.tolist())))


@dataclass(frozen=True)
class RecoveryScore:
    """Result of matching an estimated spectrum against the truth."""

    matched: int
    complete_success: bool
    pairs: tuple[tuple[int, int], ...] = field(default=())


def score_recovery(
    truth: LineSpectrum,
    estimate: LineSpectrum,
    f_tol: float = 1e-4,
    c_tol: float = 1e-3,
) -> RecoveryScore:
    """Count atoms recovered within tolerance, one-to-one.

    Candidate pairs within wrap-around frequency distance ``f_tol`` are
    consumed greedily in order of (distance, smaller frequency, larger
    frequency); a consumed pair counts as a match iff the relative
    coefficient error |c_t - c_e| / max(|c_t|, |c_e|) is <= ``c_tol``.
    The sort key and the error denominator are symmetric in the two
    spectra, so complete_success is symmetric when both have s atoms.
    """
    if f_tol <= 0 or c_tol <= 0:
        raise ValueError("tolerances must be positive")
    cands = []
    for ti, (ft, ct) in enumerate(truth.atoms):
        for ei, (fe, ce) in enumerate(estimate.atoms):
            d = float(wrap_distance(ft, fe))
            if d <= f_tol:
                cands.append((d, min(ft, fe), max(ft, fe), ti, ei))
    cands.sort()
    used_t: set[int] = set()
    used_e: set[int] = set()
    pairs = []
    k = 0
    for d, _, _, ti, ei in cands:
        if ti in used_t or ei in used_e:
            continue
        used_t.add(ti)
        used_e.add(ei)
        ct = truth.atoms[ti][1]
        ce = estimate.atoms[ei][1]
        denom = max(abs(ct), abs(ce))
        if denom == 0 or abs(ct - ce) / denom <= c_tol:
            k += 1
            pairs.append((ti, ei))
    return RecoveryScore(k, k == truth.s, tuple(pairs))


def to_text(spectrum: LineSpectrum | None, obs: ObservedSignal) -> str:
    """Serialize a spectrum/observation pair to the line-oriented format.

    Header line ``n m s``, then s atom rows ``f re(c) im(c)``, then m
    sample rows ``index re(x) im(x)``. Floats carry 17 significant digits
    so a round trip is exact. ``spectrum=None`` writes s = 0.
    """
    s = 0 if spectrum is None else spectrum.s
    lines = [f"{obs.n} {obs.m} {s}"]
    if spectrum is not None:
        for f, c in spectrum.atoms:
            lines.append(f"{f:.17g} {c.real:.17g} {c.imag:.17g}")
    for i, v in zip(obs.sample_set.indices, obs.values):
        lines.append(f"{i} {v.real:.17g} {v.imag:.17g}")
    return "\n".join(lines) + "\n"


def from_text(text: str) -> tuple[LineSpectrum | None, ObservedSignal]:
    """Parse the format written by :func:`to_text`."""
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not rows:
        raise ValueError("empty signal document")
    n, m, s = (int(tok) for tok in rows[0])
    if len(rows) != 1 + s + m:
        raise ValueError(f"expected {1 + s + m} lines, found {len(rows)}")
    atoms = []
    for row in rows[1 : 1 + s]:
        f, re, im = (float(tok) for tok in row)
        atoms.append((f, complex(re, im)))
    idx = []
    vals = []
    for row in rows[1 + s :]:
        idx.append(int(row[0]))
        vals.append(complex(float(row[1]), float(row[2])))
    spectrum = LineSpectrum(tuple(atoms)) if s else None
    obs = ObservedSignal(SampleSet(n, tuple(idx)), tuple(vals))
    return spectrum, obs


def save_signal(path, spectrum: LineSpectrum | None, obs: ObservedSignal) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(to_text(spectrum, obs))


def load_signal(path) -> tuple[LineSpectrum | None, ObservedSignal]:
    with open(path, "r", encoding="ascii") as fh:
        return from_text(fh.read())
