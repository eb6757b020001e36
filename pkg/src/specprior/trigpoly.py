"""Positive trigonometric polynomial machinery.

A Hermitian trigonometric polynomial R(z) = sum_{k=-(n-1)}^{n-1} r_k z^{-k}
that is nonnegative on an arc [w_lo, w_hi] of the unit circle admits a
two-term Gram representation

    R(z) = F(z) F*(1/z) + D(z) G(z) G*(1/z),

where D is the degree-1 arc polynomial that is nonnegative exactly on the
arc. In matrix form the coefficients are trace functionals of a PSD pair
(G1, G2); that linear map is what turns sup-norm constraints on dual
polynomials into linear matrix inequalities. This module provides the
elementary Toeplitz selectors, the arc polynomial, the coefficient map,
band translation for arcs that would straddle the cut at w = +-pi, and
evaluation of dual polynomials Q(f) = sum_l q_l e^{-i 2 pi f l} with
derivatives.

Everything here is a pure function of immutable inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse

from .signal import SampleSet

__all__ = [
    "TrigPoly",
    "ArcPoly",
    "GramPair",
    "DualPolynomial",
    "theta",
    "arc_poly",
    "gram_map",
    "translate_band",
    "translate_dual",
    "eval_dual",
    "eval_dual_d1",
    "eval_dual_d2",
    "eval_dual_grid",
]


@dataclass(frozen=True)
class TrigPoly:
    """Hermitian Laurent polynomial R(z) = sum_{|k| < n} r_k z^{-k}.

    ``coeffs[k + n - 1]`` holds r_k; Hermitian symmetry r_{-k} = conj(r_k)
    is validated, which makes R real on the unit circle.
    """

    n: int
    coeffs: tuple[complex, ...]

    def __post_init__(self):
        c = tuple(complex(v) for v in self.coeffs)
        object.__setattr__(self, "coeffs", c)
        if len(c) != 2 * self.n - 1:
            raise ValueError("need 2n-1 coefficients")
        arr = np.array(c)
        if not np.allclose(arr, np.conj(arr[::-1]), atol=1e-9 * (1 + np.abs(arr).max())):
            raise ValueError("coefficients must be Hermitian-symmetric")

    @classmethod
    def from_halfspace(cls, half) -> "TrigPoly":
        """Build from r_0..r_{n-1}; negative indices filled by conjugation."""
        half = np.asarray(half, dtype=complex)
        n = len(half)
        full = np.concatenate([np.conj(half[:0:-1]), half])
        return cls(n, tuple(full))

    def coeff(self, k: int) -> complex:
        if abs(k) >= self.n:
            raise ValueError("coefficient index out of range")
        return self.coeffs[k + self.n - 1]

    def eval_omega(self, omega):
        """R at z = e^{i omega}; real up to rounding for Hermitian input."""
        omega = np.asarray(omega, dtype=float)
        ks = np.arange(-(self.n - 1), self.n)
        vals = np.exp(-1j * np.multiply.outer(omega, ks)) @ np.array(self.coeffs)
        return vals.real[()]


@dataclass(frozen=True)
class ArcPoly:
    """Degree-1 polynomial D(z) = d1 z^{-1} + d0 + d1* z, nonnegative
    exactly on the arc [omega_lo, omega_hi] of the unit circle."""

    d0: float
    d1: complex
    omega_lo: float
    omega_hi: float

    def __post_init__(self):
        a = math.tan(self.omega_lo / 2.0)
        b = math.tan(self.omega_hi / 2.0)
        d0 = -(a * b + 1.0) / 2.0
        d1 = (1.0 - a * b) / 4.0 + 1j * (a + b) / 4.0
        scale = 1.0 + abs(d0) + abs(d1)
        if abs(d0 - self.d0) > 1e-9 * scale or abs(d1 - self.d1) > 1e-9 * scale:
            raise ValueError("d0/d1 inconsistent with the arc endpoints")

    def eval_omega(self, omega):
        omega = np.asarray(omega, dtype=float)
        return (self.d0 + 2.0 * (np.conj(self.d1) * np.exp(1j * omega)).real)[()]

    def eval_f(self, f):
        return self.eval_omega(2.0 * np.pi * np.asarray(f, dtype=float))


@dataclass(frozen=True)
class GramPair:
    """PSD pair (G1: n x n, G2: (n-1) x (n-1)) parameterizing an
    arc-nonnegative polynomial; G2 is None for the full-circle case.

    Fields are normally ndarrays but any object exposing ``shape`` and
    ``[i, j]`` indexing works, so SDP assembly can pass symbolic views.
    """

    G1: object
    G2: object | None

    def __post_init__(self):
        G1 = self.G1 if hasattr(self.G1, "shape") else np.asarray(self.G1)
        object.__setattr__(self, "G1", G1)
        if len(G1.shape) != 2 or G1.shape[0] != G1.shape[1]:
            raise ValueError("G1 must be square")
        if self.G2 is not None:
            G2 = self.G2 if hasattr(self.G2, "shape") else np.asarray(self.G2)
            object.__setattr__(self, "G2", G2)
            if tuple(G2.shape) != (G1.shape[0] - 1, G1.shape[0] - 1):
                raise ValueError("G2 must be (n-1) x (n-1)")

    @property
    def n(self) -> int:
        return self.G1.shape[0]


@dataclass(frozen=True)
class DualPolynomial:
    """Coefficients q of Q(f) = sum_{l<n} q_l e^{-i 2 pi f l}, supported
    on a sample set (entries off the support are zero)."""

    n: int
    q: tuple[complex, ...]
    support: SampleSet

    def __post_init__(self):
        q = tuple(complex(v) for v in self.q)
        object.__setattr__(self, "q", q)
        if len(q) != self.n:
            raise ValueError("q must have length n")
        if self.support.n != self.n:
            raise ValueError("support ambient length must equal n")
        off = set(range(self.n)) - set(self.support.indices)
        if any(q[l] != 0 for l in off):
            raise ValueError("q must vanish off the support")

    def q_array(self) -> np.ndarray:
        return np.array(self.q, dtype=complex)


def theta(k: int, size: int) -> scipy.sparse.csr_matrix:
    """Elementary Toeplitz selector: ones on the kth diagonal.

    k = 0 is the main diagonal, k > 0 upper, k < 0 lower.
    """
    if abs(k) >= size:
        raise ValueError(f"|k| = {abs(k)} out of range for size {size}")
    return scipy.sparse.eye(size, size, k=k, dtype=float, format="csr")


def _diag_sum(G, k: int) -> complex:
    """tr[Theta_k G] = sum of G's kth lower diagonal (selector transposes;
    negative k sums the |k|th upper diagonal).

    Works for ndarray G and for symbolic matrix views exposing [i, j].
    """
    size = G.shape[0]
    if abs(k) >= size:
        raise ValueError("k out of range")
    if isinstance(G, np.ndarray):
        return np.trace(G, offset=-k)
    total = None
    for i in range(max(0, -k), size - max(0, k)):
        term = G[i + k, i]
        total = term if total is None else total + term
    return total


def arc_poly(f_lo: float, f_hi: float) -> ArcPoly:
    """Arc polynomial for the frequency band [f_lo, f_hi].

    Frequencies map to circle angles via w = 2 pi f for f in (-0.5, 0.5]
    and w = 2 pi (f - 1) for f in (0.5, 1]; endpoints slightly outside
    [0, 1] (as produced by band translation) are accepted. The mapped arc
    must lie strictly inside (-pi, pi); otherwise translate the band first
    with :func:`translate_band`.
    """
    if not (f_lo < f_hi):
        raise ValueError("need f_lo < f_hi")

    def to_omega(f: float) -> float:
        if -0.5 < f <= 0.5:
            return 2.0 * np.pi * f
        if 0.5 < f <= 1.5:
            return 2.0 * np.pi * (f - 1.0)
        raise ValueError(f"frequency {f} outside (-0.5, 1.5]")

    w_lo = to_omega(float(f_lo))
    w_hi = to_omega(float(f_hi))
    if not (-np.pi < w_lo < w_hi < np.pi):
        raise ValueError(
            f"arc [{w_lo:.4f}, {w_hi:.4f}] straddles or touches +-pi; "
            "translate the band first"
        )
    a = math.tan(w_lo / 2.0)
    b = math.tan(w_hi / 2.0)
    d0 = -(a * b + 1.0) / 2.0
    d1 = (1.0 - a * b) / 4.0 + 1j * (a + b) / 4.0
    return ArcPoly(d0, d1, w_lo, w_hi)


def gram_map(k: int, arc: ArcPoly | None, pair: GramPair):
    """Coefficient r_k of the polynomial represented by a Gram pair.

    r_k = tr[Theta_k G1] + tr[(d1 Theta_{k-1} + d0 Theta_k + d1* Theta_{k+1}) G2],
    with the G2-side selectors of size n-1; a selector whose diagonal
    index reaches |n-1| falls outside the matrix and contributes zero
    (at k = 0 the Theta_{-1} term is in range and does contribute).
    ``arc=None`` (full circle) drops the G2 term entirely. Negative k
    follows from Hermitian symmetry and is not computed here;
    0 <= k <= n-1 is required.

    Accepts numeric matrices or symbolic matrix views (anything indexable
    by [i, j] whose entries support + and scalar *), so the same map
    assembles both oracle checks and SDP constraint rows.
    """
    n = pair.n
    if not (0 <= k <= n - 1):
        raise ValueError("k must satisfy 0 <= k <= n-1")
    total = _diag_sum(pair.G1, k)
    if arc is None:
        return total
    if pair.G2 is None:
        raise ValueError("arc form needs G2")
    size2 = n - 1
    for kk, d in ((k - 1, arc.d1), (k, complex(arc.d0)), (k + 1, np.conj(arc.d1))):
        if abs(kk) < size2:
            total = total + d * _diag_sum(pair.G2, kk)
    return total


def translate_band(f_lo: float, f_hi: float) -> tuple[float, tuple[float, float]]:
    """Rotation tau (radians) moving a band strictly inside the cut.

    Returns (tau, (f_lo', f_hi')) with f' = f - tau / (2 pi) such that the
    arc of the translated band lies strictly inside (-pi, pi). tau = 0
    when the band is already interior; bands touching f = 0.5 get
    tau = pi; anything else is centered at 0. Requires band width < 1.
    """
    if not (0.0 <= f_lo < f_hi <= 1.0):
        raise ValueError("band must satisfy 0 <= f_lo < f_hi <= 1")
    if f_hi - f_lo >= 1.0:
        raise ValueError("band width must be < 1")

    def ok(lo: float, hi: float) -> bool:
        try:
            arc_poly(lo, hi)
        except ValueError:
            return False
        return True

    if ok(f_lo, f_hi):
        return 0.0, (f_lo, f_hi)
    tau = np.pi
    lo, hi = f_lo - 0.5, f_hi - 0.5
    if ok(lo, hi):
        return tau, (lo, hi)
    # Center the band at 0; works for any width < 1.
    tau = np.pi * (f_lo + f_hi)
    half = (f_hi - f_lo) / 2.0
    return tau, (-half, half)


def translate_dual(q: DualPolynomial, tau: float) -> DualPolynomial:
    """Modulate coefficients: q~[j] = q[j] e^{-i tau j}.

    Rotates the polynomial on the circle: Q~(f) = Q(f + tau / (2 pi)).
    """
    j = np.arange(q.n)
    qt = q.q_array() * np.exp(-1j * tau * j)
    return DualPolynomial(q.n, tuple(qt), q.support)


def _as_q_array(q) -> np.ndarray:
    if isinstance(q, DualPolynomial):
        return q.q_array()
    return np.asarray(q, dtype=complex)


def eval_dual(q, f):
    """Q(f) = sum_l q_l e^{-i 2 pi f l}, Horner in z = e^{-i 2 pi f}."""
    qa = _as_q_array(q)
    z = np.exp(-2j * np.pi * np.asarray(f, dtype=float))
    acc = np.zeros_like(z) + qa[-1]
    for c in qa[-2::-1]:
        acc = acc * z + c
    return acc[()]


def eval_dual_d1(q, f):
    """Analytic derivative Q'(f) = sum_l (-i 2 pi l) q_l e^{-i 2 pi f l}."""
    qa = _as_q_array(q)
    l = np.arange(len(qa))
    return -2j * np.pi * eval_dual(l * qa, f)


def eval_dual_d2(q, f):
    """Q''(f) = sum_l -(2 pi l)^2 q_l e^{-i 2 pi f l}."""
    qa = _as_q_array(q)
    l = np.arange(len(qa))
    return -((2.0 * np.pi) ** 2) * eval_dual(l * l * qa, f)


def eval_dual_grid(q, grid: int) -> np.ndarray:
    """Q on the uniform grid f = g / grid, g = 0..grid-1, via one FFT."""
    qa = _as_q_array(q)
    if grid < len(qa):
        raise ValueError("grid must be at least the coefficient count")
    return np.fft.fft(qa, grid)
