"""Recovery pipelines for undersampled line spectra.

Four estimators share one machinery. Each solves a semidefinite program
built from the observed samples, reads off a dual trigonometric
polynomial Q(f) = sum_l q_l e^{-i 2 pi f l} whose modulus touches a known
threshold exactly at the signal frequencies, localizes those touch
points, and recovers the complex coefficients by least squares.

The estimators differ only in how prior knowledge shapes the dual norm
constraint:

* standard: |Q| <= 1 on the whole circle (one full-circle Gram LMI);
* weighted: |Q| <= w_k on each band of a partition (per-band arc LMIs);
* block: |Q| <= 1 on the prior support only, unconstrained elsewhere;
* known poles: the primal models x as known atoms plus a residual whose
  atomic norm is minimized; the residual is then run through the
  standard dual.

Arc constraints use the Gram pair parametrization from the trigpoly
module; each band is rotated to sit strictly inside (-pi, pi) and the
dual coefficients are modulated accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .conic import (
    ConicProgram,
    LinExpr,
    SolveOptions,
    SolverFailure,
    solve,
)
from .signal import (
    Block,
    KnownPoles,
    LineSpectrum,
    NoPrior,
    ObservedSignal,
    PriorSpec,
    Probabilistic,
    SampleSet,
    wrap_distance,
)
from .trigpoly import (
    DualPolynomial,
    GramPair,
    arc_poly,
    eval_dual,
    eval_dual_d1,
    eval_dual_d2,
    eval_dual_grid,
    gram_map,
    translate_band,
)

__all__ = [
    "ToeplitzVar",
    "Estimate",
    "CoeffFit",
    "CertificateReport",
    "DecompositionFailed",
    "CertificateSingular",
    "atomic_sdp_standard",
    "dual_sdp_standard",
    "dual_sdp_weighted",
    "dual_sdp_block",
    "known_poles_sdp",
    "recover",
    "localize",
    "recover_coeffs",
    "vandermonde_decompose",
    "certificate_3s",
    "verify_certificate",
    "dual_objective",
    "estimate_to_text",
    "save_estimate",
]

DEFAULT_GRID = 1 << 16
PEAK_TOL = 1e-3


class DecompositionFailed(RuntimeError):
    """Vandermonde factorization did not reproduce the input matrix."""


class CertificateSingular(RuntimeError):
    """Interpolation system condition number exceeds the 1e12 guard."""

    def __init__(self, condition_number: float):
        super().__init__(
            f"certificate system condition number {condition_number:.3e} > 1e12"
        )
        self.condition_number = condition_number


@dataclass(frozen=True)
class ToeplitzVar:
    """Hermitian Toeplitz block T_n of the lifted SDP variable, plus the
    scalar t from the corner of the PSD constraint."""

    n: int
    first_column: tuple[complex, ...]
    t: float

    def __post_init__(self):
        col = tuple(complex(v) for v in self.first_column)
        object.__setattr__(self, "first_column", col)
        if len(col) != self.n:
            raise ValueError("first column must have length n")

    def matrix(self) -> np.ndarray:
        col = np.array(self.first_column)
        return scipy.linalg.toeplitz(col, np.conj(col))


@dataclass(frozen=True)
class Estimate:
    """Output of a recovery pipeline.

    ``filled_signal`` is the completed length-n signal (the primal
    variable constrained to match the observations on the sample set);
    it is None for dual-only pipelines that never solve a primal.
    """

    spectrum: LineSpectrum | None
    dual: DualPolynomial | None
    filled_signal: tuple[complex, ...] | None
    known_pole_coeffs: tuple[complex, ...] | None
    objective: float
    solver_status: str
    solver_iterations: int
    equality_residual: float
    fit_residual: float
    toeplitz: ToeplitzVar | None = None


@dataclass(frozen=True)
class CoeffFit:
    coeffs: np.ndarray
    residual: float
    rank_deficient: bool


@dataclass(frozen=True)
class CertificateReport:
    interpolation_ok: bool
    interpolation_error: float  # max over poles of |Q(f_j) - w sign(c_j)| / w
    sub_threshold_ok: bool
    max_off_ratio: float  # max |Q|/w away from poles, inside the prior region
    support_ok: bool

    @property
    def passed(self) -> bool:
        return self.interpolation_ok and self.sub_threshold_ok and self.support_ok


# Empirically good ADMM startpoints per program class; only used when
# the caller has not pinned rho. Unit-threshold bounded-real duals
# balance residuals near rho ~ 3; everything else prefers 1.
DUAL_RHO = 3.0
PRIMAL_RHO = 1.0


def _tuned(opts: SolveOptions | None, rho: float) -> SolveOptions:
    if opts is None:
        return SolveOptions(rho=rho)
    if opts.rho is None:
        return replace(opts, rho=rho)
    return opts


def _solve_or_raise(prog: ConicProgram, opts: SolveOptions | None):
    sol = solve(prog, opts)
    if sol.status != "Optimal":
        raise SolverFailure(f"solver finished with status {sol.status}", sol)
    return sol


def _safe_fit(freqs: np.ndarray, obs: ObservedSignal) -> CoeffFit:
    """Fit coefficients unless localization clearly failed (more peaks
    than observations); report such a failure as an empty, fully
    unexplained fit rather than crashing."""
    if freqs.size > obs.m:
        return CoeffFit(
            np.zeros(0, dtype=complex),
            float(np.linalg.norm(obs.value_array())),
            True,
        )
    return recover_coeffs(freqs, obs)


def _data_scale(x: np.ndarray) -> float:
    return max(1.0, float(np.abs(x).max(initial=0.0)))


# ---------------------------------------------------------------------------
# Primal programs


def _lifted_primal(obs: ObservedSignal, known_freqs: tuple[float, ...]):
    """Shared primal: minimize Tr(T)/(2n) + t/2 over the lifted PSD block
    [[T, y], [y^H, t]] with Toeplitz ties, where the completed signal is
    y plus the known-pole atoms on the observed indices."""
    n = obs.n
    x = obs.value_array()
    sigma = _data_scale(x)
    prog = ConicProgram()
    P = prog.add_psd_block("lifted", n + 1)
    d = prog.add_free_complex("known", len(known_freqs)) if known_freqs else None
    for k in range(n):
        for i in range(1, n - k):
            prog.add_equality(P[i, i + k] - P[0, k], 0.0)
    for pos, l in enumerate(obs.sample_set.indices):
        expr = P[l, n]
        for j, fj in enumerate(known_freqs):
            expr = expr + np.exp(2j * np.pi * fj * l) * d[j]
        prog.add_equality(expr, x[pos] / sigma)
    obj = (1.0 / (2 * n)) * P[0, 0]
    for i in range(1, n):
        obj += (1.0 / (2 * n)) * P[i, i]
    obj += 0.5 * P[n, n]
    prog.minimize(obj.real())
    return prog, sigma


def _toeplitz_from_block(P: np.ndarray, n: int) -> ToeplitzVar:
    # Average the diagonals: the ties hold only to solver tolerance.
    col = np.array([np.trace(P[:n, :n], offset=-k) / (n - k) for k in range(n)])
    return ToeplitzVar(n, tuple(col), float(P[n, n].real))


def atomic_sdp_standard(
    obs: ObservedSignal, opts: SolveOptions | None = None
) -> Estimate:
    """Atomic norm completion without priors.

    Solves the lifted primal for the completed signal and objective, then
    the standard dual for frequency localization (the dual polynomial
    path degrades more gracefully than eigen-rank decisions on T).
    """
    prog, sigma = _lifted_primal(obs, ())
    sol = _solve_or_raise(prog, _tuned(opts, PRIMAL_RHO))
    P = sol.block("lifted") * sigma
    n = obs.n
    dual = dual_sdp_standard(obs, opts)
    freqs = localize(dual, 1.0, merge_tol=1.0 / (4 * n))
    fit = _safe_fit(freqs, obs)
    return Estimate(
        spectrum=_assemble_spectrum(freqs[: fit.coeffs.size], fit.coeffs),
        dual=dual,
        filled_signal=tuple(P[:n, n]),
        known_pole_coeffs=None,
        objective=float(sol.objective_value * sigma),
        solver_status=sol.status,
        solver_iterations=sol.iterations,
        equality_residual=float(sol.primal_residual * sigma),
        fit_residual=fit.residual,
        toeplitz=_toeplitz_from_block(P, n),
    )


def known_poles_sdp(
    obs: ObservedSignal, prior: KnownPoles, opts: SolveOptions | None = None
) -> Estimate:
    """Conditional atomic norm completion with exactly known frequencies.

    The primal splits the completed signal into known atoms with free
    complex coefficients d_j plus a residual y whose atomic norm is
    minimized. The residual then goes through the standard dual to
    localize the unknown frequencies, and their coefficients come from a
    least squares fit against the full-length residual.
    """
    known = prior.freqs
    prog, sigma = _lifted_primal(obs, known)
    sol = _solve_or_raise(prog, _tuned(opts, PRIMAL_RHO))
    n = obs.n
    P = sol.block("lifted") * sigma
    residual_signal = P[:n, n]
    d = sol.free_value("known") * sigma if known else np.zeros(0, dtype=complex)

    midx = obs.sample_set.index_array()
    res_m = residual_signal[midx]
    x_m = obs.value_array()
    dual = None
    unknown_freqs = np.zeros(0)
    unknown_coeffs = np.zeros(0, dtype=complex)
    fit_residual = 0.0
    # With every pole known the residual is numerically zero and the dual
    # would chase solver noise.
    if np.linalg.norm(res_m) > 1e-6 * np.linalg.norm(x_m):
        res_obs = ObservedSignal(obs.sample_set, tuple(res_m))
        dual = dual_sdp_standard(res_obs, opts)
        unknown_freqs = localize(dual, 1.0, merge_tol=1.0 / (4 * n))
        unknown_freqs = np.array(
            [
                f
                for f in unknown_freqs
                if all(wrap_distance(f, fk) > 1e-9 for fk in known)
            ]
        )
        full = ObservedSignal(
            SampleSet(n, tuple(range(n))), tuple(residual_signal)
        )
        fit = _safe_fit(unknown_freqs, full)
        unknown_freqs = unknown_freqs[: fit.coeffs.size]
        unknown_coeffs = fit.coeffs
        fit_residual = fit.residual

    freqs = np.concatenate([np.array(known, dtype=float), unknown_freqs])
    coeffs = np.concatenate([d, unknown_coeffs])
    atoms = np.exp(2j * np.pi * np.outer(np.arange(n), freqs)) if len(freqs) else None
    filled = residual_signal if atoms is None else residual_signal + (
        atoms[:, : len(known)] @ d
    )
    return Estimate(
        spectrum=_assemble_spectrum(freqs, coeffs),
        dual=dual,
        filled_signal=tuple(filled),
        known_pole_coeffs=tuple(d),
        objective=float(sol.objective_value * sigma),
        solver_status=sol.status,
        solver_iterations=sol.iterations,
        equality_residual=float(sol.primal_residual * sigma),
        fit_residual=float(fit_residual),
        toeplitz=_toeplitz_from_block(P, n),
    )


# ---------------------------------------------------------------------------
# Dual programs


def _dual_band_program(
    obs: ObservedSignal,
    bands: list[tuple[float, float, float]],
    opts: SolveOptions | None,
) -> DualPolynomial:
    """maximize Re<q_M, x_M> subject to |Q(f)| <= w_k on each band.

    Each band contributes a bounded-real LMI in translated coordinates:
    Gram rows pin the arc-Gram pair (G1, G2) to the constant polynomial 1
    and the bordered block [[G1, q~/w], [q~^H/w, 1]] is PSD, where
    q~[j] = q[j] e^{-i tau j}. A band of width 1 degenerates to the
    classic full-circle parametrization with G2 absent.
    """
    n, m = obs.n, obs.m
    x = obs.value_array()
    sigma = _data_scale(x)
    xs = x / sigma
    prog = ConicProgram()
    q = prog.add_free_complex("q", m)
    pos_of = {l: pos for pos, l in enumerate(obs.sample_set.indices)}

    for bi, (lo, hi, w) in enumerate(bands):
        if hi - lo >= 1.0:
            tau, arc = 0.0, None
        else:
            tau, (lo2, hi2) = translate_band(lo, hi)
            arc = arc_poly(lo2, hi2)
        L = prog.add_psd_block(f"lmi{bi}", n + 1)
        G2 = prog.add_psd_block(f"arc{bi}", n - 1) if arc is not None else None
        pair = GramPair(L.principal(n), G2)
        prog.add_equality(L[n, n], 1.0)
        for l in range(n):
            pos = pos_of.get(l)
            if pos is None:
                prog.add_equality(L[l, n], 0.0)
            else:
                phase = np.exp(-1j * tau * l) / w
                prog.add_equality(L[l, n] - phase * q[pos], 0.0)
        for k in range(n):
            prog.add_equality(gram_map(k, arc, pair), 1.0 if k == 0 else 0.0)

    obj = LinExpr()
    for pos in range(m):
        obj += (np.conj(xs[pos]) * q[pos]).real()
    prog.minimize(-obj)

    # the rho=3 startpoint is tuned on unit-threshold programs; mixed
    # weights change the constraint scaling enough that 1.0 is safer
    uniform = all(w == 1.0 for _, _, w in bands)
    sol = _solve_or_raise(prog, _tuned(opts, DUAL_RHO if uniform else PRIMAL_RHO))
    qv = sol.free_value("q")
    q_full = np.zeros(n, dtype=complex)
    q_full[obs.sample_set.index_array()] = qv
    return DualPolynomial(n, tuple(q_full), obs.sample_set)


def dual_sdp_standard(
    obs: ObservedSignal, opts: SolveOptions | None = None
) -> DualPolynomial:
    """Dual of plain atomic norm minimization: |Q| <= 1 everywhere."""
    return _dual_band_program(obs, [(0.0, 1.0, 1.0)], opts)


def dual_sdp_weighted(
    obs: ObservedSignal, prior: Probabilistic, opts: SolveOptions | None = None
) -> DualPolynomial:
    """Weighted dual: |Q| <= w_k on band k of the partition."""
    bands = [
        (b.f_lo, b.f_hi, w) for b, w in zip(prior.bands, prior.weights)
    ]
    return _dual_band_program(obs, bands, opts)


def dual_sdp_block(
    obs: ObservedSignal, prior: Block, opts: SolveOptions | None = None
) -> DualPolynomial:
    """Block-prior dual: |Q| <= 1 on the prior support, free elsewhere."""
    bands = [(b.f_lo, b.f_hi, 1.0) for b in prior.bands]
    return _dual_band_program(obs, bands, opts)


def dual_objective(dual: DualPolynomial, obs: ObservedSignal) -> float:
    """Re<q_M, x_M>, the dual objective value attained by this q."""
    q_m = dual.q_array()[obs.sample_set.index_array()]
    return float(np.vdot(obs.value_array(), q_m).real)


# ---------------------------------------------------------------------------
# Localization and coefficient recovery


def _threshold_pieces(threshold, search_domain, n):
    """Normalize (threshold, search_domain) into (lo, hi, w, circular)."""
    if search_domain is None:
        if isinstance(threshold, Probabilistic):
            return [
                (b.f_lo, b.f_hi, float(w), False)
                for b, w in zip(threshold.bands, threshold.weights)
            ]
        w = float(threshold) if not callable(threshold) else None
        return [(0.0, 1.0, w, True)] if w is not None else [(0.0, 1.0, threshold, True)]
    if isinstance(search_domain, Block):
        pieces = [(b.f_lo, b.f_hi) for b in search_domain.bands]
    else:
        pieces = [(float(lo), float(hi)) for lo, hi in search_domain]
    out = []
    for lo, hi in pieces:
        if isinstance(threshold, Probabilistic):
            raise ValueError("band-dependent threshold needs search_domain=None")
        w = threshold if callable(threshold) else float(threshold)
        out.append((lo, hi, w, False))
    return out


def localize(
    q: DualPolynomial,
    threshold=1.0,
    search_domain=None,
    *,
    grid_size: int = DEFAULT_GRID,
    peak_tol: float = PEAK_TOL,
    merge_tol: float | None = None,
) -> np.ndarray:
    """Frequencies where |Q(f)| / w(f) reaches 1, to peak_tol.

    Scans a dense grid restricted to the search domain, refines each
    local maximum of |Q|^2 by Newton iteration on its derivative, and
    accepts peaks whose refined ratio lies in [1 - peak_tol, 1 + peak_tol].
    Peaks closer than merge_tol (default 1/(4n)) within one piece are
    merged, keeping the largest; pieces are never merged together.
    threshold may be a constant, a Probabilistic prior (piecewise
    constant weights), or a callable w(f); search_domain may be None
    (full circle), a Block prior, or a list of (lo, hi) pairs.
    """
    qa = q.q_array()
    n = q.n
    if merge_tol is None:
        merge_tol = 1.0 / (4 * n)
    if not np.any(qa):
        return np.zeros(0)
    Q = eval_dual_grid(qa, grid_size)
    absQ = np.abs(Q)
    fgrid = np.arange(grid_size) / grid_size
    ell = np.arange(n)

    accepted = []
    for lo, hi, w, circular in _threshold_pieces(threshold, search_domain, n):
        idx = np.nonzero((fgrid >= lo) & (fgrid <= hi))[0]
        if idx.size == 0:
            continue
        vals = absQ[idx]
        if callable(w):
            ratio = vals / np.asarray(w(fgrid[idx]), dtype=float)
        else:
            ratio = vals / w
        if circular:
            left = np.roll(ratio, 1)
            right = np.roll(ratio, -1)
        else:
            left = np.empty_like(ratio)
            right = np.empty_like(ratio)
            left[0], left[1:] = -np.inf, ratio[:-1]
            right[-1], right[:-1] = -np.inf, ratio[1:]
        is_peak = (ratio >= left) & (ratio >= right)
        is_peak &= ratio >= 1.0 - peak_tol - 1e-4
        peaks = []
        for g in idx[is_peak]:
            f = _refine_peak(qa, ell, fgrid[g], lo, hi, circular)
            wf = float(w(f)) if callable(w) else w
            r = abs(eval_dual(qa, f)) / wf
            if 1.0 - peak_tol <= r <= 1.0 + peak_tol:
                peaks.append((f % 1.0 if circular else f, r))
        accepted.extend(_merge_peaks(peaks, merge_tol, circular))
    if not accepted:
        return np.zeros(0)
    out = np.sort(np.mod(np.array(accepted), 1.0))
    # A shared band edge (including the 0/1 seam) can be claimed by both
    # neighboring pieces.
    if out.size > 1:
        keep = np.ones(out.size, dtype=bool)
        keep[1:] = np.diff(out) > 1e-7
        out = out[keep]
        if out.size > 1 and out[0] + 1.0 - out[-1] < 1e-7:
            out = out[:-1]
    return out


def _refine_peak(qa, ell, f0, lo, hi, circular, max_iter=50):
    # Newton on d|Q|^2/df = 2 Re(conj(Q) Q'), clamped to the piece.
    f = f0
    for _ in range(max_iter):
        Qf = eval_dual(qa, f)
        d1 = eval_dual_d1(qa, f)
        d2 = eval_dual_d2(qa, f)
        g = 2.0 * (np.conj(Qf) * d1).real
        gp = 2.0 * (abs(d1) ** 2 + (np.conj(Qf) * d2).real)
        if gp >= 0.0 or not np.isfinite(gp):
            break
        step = g / gp
        f = f - step
        if circular:
            f %= 1.0
        else:
            f = min(max(f, lo), hi)
        if abs(step) < 1e-10:
            break
    return f


def _merge_peaks(peaks, merge_tol, circular):
    if not peaks:
        return []
    peaks = sorted(peaks)
    clusters = [[peaks[0]]]
    for f, r in peaks[1:]:
        if f - clusters[-1][-1][0] < merge_tol:
            clusters[-1].append((f, r))
        else:
            clusters.append([(f, r)])
    if circular and len(clusters) > 1:
        wrap_gap = peaks[0][0] + 1.0 - peaks[-1][0]
        if wrap_gap < merge_tol:
            clusters[0] = clusters.pop() + clusters[0]
    return [max(c, key=lambda fr: fr[1])[0] for c in clusters]


def recover_coeffs(freqs, obs: ObservedSignal) -> CoeffFit:
    """Least squares fit of observed samples to atoms at given frequencies.

    A materially nonzero residual flags mislocalization; a rank-deficient
    system (near-coincident frequencies) is flagged and solved in the
    pseudo-inverse sense.
    """
    freqs = np.asarray(freqs, dtype=float)
    x = obs.value_array()
    if freqs.size == 0:
        return CoeffFit(np.zeros(0, dtype=complex), float(np.linalg.norm(x)), False)
    if freqs.size > obs.m:
        raise ValueError("more frequencies than observations")
    A = np.exp(2j * np.pi * np.outer(obs.sample_set.index_array(), freqs))
    coeffs, _, rank, _ = np.linalg.lstsq(A, x, rcond=None)
    residual = float(np.linalg.norm(A @ coeffs - x))
    return CoeffFit(coeffs, residual, rank < freqs.size)


def _assemble_spectrum(freqs, coeffs, drop_rel: float = 1e-6) -> LineSpectrum | None:
    freqs = np.asarray(freqs, dtype=float)
    coeffs = np.asarray(coeffs, dtype=complex)
    if freqs.size == 0:
        return None
    cmax = float(np.abs(coeffs).max())
    if cmax == 0.0:
        return None
    order = np.argsort(-np.abs(coeffs))
    atoms = []
    kept = []
    for i in order:
        if abs(coeffs[i]) <= drop_rel * cmax:
            continue
        f = float(freqs[i] % 1.0)
        if any(wrap_distance(f, g) < 1e-9 for g in kept):
            continue
        kept.append(f)
        atoms.append((f, complex(coeffs[i])))
    return LineSpectrum(tuple(atoms)) if atoms else None


# ---------------------------------------------------------------------------
# Unified front end


def recover(
    obs: ObservedSignal, prior: PriorSpec | None = None, opts: SolveOptions | None = None
) -> Estimate:
    """Run the estimator matching the prior and return its Estimate."""
    n = obs.n
    if prior is None or isinstance(prior, NoPrior):
        dual = dual_sdp_standard(obs, opts)
        freqs = localize(dual, 1.0)
    elif isinstance(prior, Probabilistic):
        dual = dual_sdp_weighted(obs, prior, opts)
        freqs = localize(dual, prior)
    elif isinstance(prior, Block):
        dual = dual_sdp_block(obs, prior, opts)
        freqs = localize(dual, 1.0, prior)
    elif isinstance(prior, KnownPoles):
        return known_poles_sdp(obs, prior, opts)
    else:
        raise TypeError(f"unsupported prior {type(prior).__name__}")
    fit = _safe_fit(freqs, obs)
    used = freqs[: fit.coeffs.size]
    return Estimate(
        spectrum=_assemble_spectrum(used, fit.coeffs),
        dual=dual,
        filled_signal=None,
        known_pole_coeffs=None,
        objective=dual_objective(dual, obs),
        solver_status="Optimal",
        solver_iterations=0,
        equality_residual=0.0,
        fit_residual=fit.residual,
    )


# ---------------------------------------------------------------------------
# Vandermonde decomposition


def vandermonde_decompose(T, rank_tol: float = 1e-8):
    """Factor a PSD Hermitian Toeplitz matrix as sum_j b_j a(f_j) a(f_j)^H.

    Numerical rank r comes from the eigenvalue threshold rank_tol times
    the largest eigenvalue. Frequencies are found by the rotational
    invariance of the signal subspace (least squares shift pencil),
    powers by nonnegative least squares against the first column. A
    full-rank T is deflated by its smallest eigenvalue, which adds the n
    uniform grid atoms carrying the deflated mass. Raises
    DecompositionFailed unless the reconstruction matches to 1e-6
    relative in Frobenius norm.
    """
    if isinstance(T, ToeplitzVar):
        T = T.matrix()
    T = np.asarray(T, dtype=complex)
    n = T.shape[0]
    norm_T = float(np.linalg.norm(T, "fro"))
    if norm_T == 0.0:
        return np.zeros(0), np.zeros(0)
    lam, V = np.linalg.eigh(T)
    lam_max = float(lam[-1])
    if lam[0] < -rank_tol * lam_max:
        raise ValueError("matrix is not positive semidefinite at rank_tol")
    r = int(np.count_nonzero(lam > rank_tol * lam_max))
    if r == n:
        mu = float(lam[0])
        freqs_in, powers_in = vandermonde_decompose(
            T - mu * np.eye(n), rank_tol
        ) if norm_T > 0 else (np.zeros(0), np.zeros(0))
        grid = np.arange(n) / n
        freqs = np.concatenate([freqs_in, grid])
        powers = np.concatenate([powers_in, np.full(n, mu / n)])
    else:
        Us = V[:, lam > rank_tol * lam_max]
        psi, *_ = np.linalg.lstsq(Us[:-1], Us[1:], rcond=None)
        z = np.linalg.eigvals(psi)
        freqs = np.sort(np.angle(z) / (2 * np.pi) % 1.0)
        powers = _fit_powers(T, freqs)
    keep = powers > 0.0
    freqs, powers = freqs[keep], powers[keep]
    atoms = np.exp(2j * np.pi * np.outer(np.arange(n), freqs))
    recon = (atoms * powers) @ atoms.conj().T
    err = float(np.linalg.norm(recon - T, "fro"))
    if err > 1e-6 * norm_T:
        raise DecompositionFailed(
            f"reconstruction error {err:.3e} exceeds 1e-6 * ||T|| = {1e-6 * norm_T:.3e}"
        )
    order = np.argsort(freqs)
    return freqs[order], powers[order]


def _fit_powers(T: np.ndarray, freqs: np.ndarray) -> np.ndarray:
    import scipy.optimize

    n = T.shape[0]
    if freqs.size == 0:
        return np.zeros(0)
    # First column of sum b_j a_j a_j^H is V b with V[l, j] = e^{i2pi f_j l}.
    V = np.exp(2j * np.pi * np.outer(np.arange(n), freqs))
    A = np.vstack([V.real, V.imag])
    b = np.concatenate([T[:, 0].real, T[:, 0].imag])
    powers, _ = scipy.optimize.nnls(A, b)
    return powers


# ---------------------------------------------------------------------------
# Dual certificates


def certificate_3s(freqs, signs, re_signs, sample_indices, n: int | None = None):
    """Interpolating dual polynomial from 3s samples.

    Solves the square linear system that pins, at every pole, the value
    Q(f_j) = sign(c_j), the stationarity sum_l l q_l e^{-i2pi f_j l} = 0,
    and the curvature sum_l -(2 pi l)^2 q_l e^{-i2pi f_j l} =
    -sign(Re c_j). The singularity guard measures the condition number
    of the row-equilibrated system, the one actually factored, so the
    1, l, l^2 scale spread between row groups does not read as rank
    deficiency.
    """
    freqs = np.asarray(freqs, dtype=float)
    signs = np.asarray(signs, dtype=complex)
    re_signs = np.asarray(re_signs, dtype=float)
    s = freqs.size
    if signs.size != s or re_signs.size != s:
        raise ValueError("need one sign and one real-part sign per frequency")
    if isinstance(sample_indices, SampleSet):
        support = sample_indices
    else:
        idx = sorted(int(i) for i in sample_indices)
        if len(set(idx)) != len(idx):
            raise ValueError("sample indices must be distinct")
        support = SampleSet(n if n is not None else idx[-1] + 1, tuple(idx))
    if support.m != 3 * s:
        raise ValueError(f"need exactly 3s = {3 * s} sample indices, got {support.m}")

    ls = support.index_array().astype(float)
    E = np.exp(-2j * np.pi * np.outer(freqs, ls))
    A = np.vstack([E, ls * E, -((2 * np.pi * ls) ** 2) * E])
    rhs = np.concatenate([signs, np.zeros(s), -re_signs.astype(complex)])

    row_scale = np.abs(A).max(axis=1)
    row_scale[row_scale == 0] = 1.0
    As = A / row_scale[:, None]
    bs = rhs / row_scale

    sv = np.linalg.svd(As, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    if cond > 1e12:
        raise CertificateSingular(cond)

    lu = scipy.linalg.lu_factor(As)
    qv = scipy.linalg.lu_solve(lu, bs)
    for _ in range(2):
        qv += scipy.linalg.lu_solve(lu, bs - As @ qv)

    q_full = np.zeros(support.n, dtype=complex)
    q_full[support.index_array()] = qv
    return DualPolynomial(support.n, tuple(q_full), support)


def verify_certificate(
    q: DualPolynomial,
    truth: LineSpectrum,
    prior: PriorSpec | None = None,
    tol: float = 1e-3,
    *,
    grid_size: int = DEFAULT_GRID,
) -> CertificateReport:
    """Check the dual certificate conditions against a known spectrum.

    Interpolation: Q(f_j) = w(f_j) sign(c_j) to tol relative. Strict
    sub-threshold: |Q| / w < 1 on a dense grid over the prior region,
    excluding a 1/(4n) neighborhood of each true pole. Support: q is
    zero off its sample set (guaranteed by construction, reported for
    completeness).
    """
    qa = q.q_array()
    n = q.n
    if isinstance(prior, Probabilistic):
        weight = prior.weight_at
    else:
        weight = lambda f: np.ones_like(np.asarray(f, dtype=float))

    interp_err = 0.0
    for f, c in truth.atoms:
        w = float(np.asarray(weight(f)))
        target = w * (c / abs(c))
        interp_err = max(interp_err, abs(eval_dual(qa, f) - target) / w)

    fgrid = np.arange(grid_size) / grid_size
    region = np.ones(grid_size, dtype=bool)
    if isinstance(prior, Block):
        region = prior.covers(fgrid)
    merge_tol = 1.0 / (4 * n)
    for f, _ in truth.atoms:
        region &= wrap_distance(fgrid, f) >= merge_tol
    if np.any(region):
        ratio = np.abs(eval_dual_grid(qa, grid_size)[region])
        ratio = ratio / np.asarray(weight(fgrid[region]), dtype=float)
        max_off = float(ratio.max())
    else:
        max_off = 0.0

    off = set(range(n)) - set(q.support.indices)
    support_ok = all(q.q[l] == 0 for l in off)
    return CertificateReport(
        interpolation_ok=interp_err <= tol,
        interpolation_error=float(interp_err),
        sub_threshold_ok=max_off < 1.0,
        max_off_ratio=max_off,
        support_ok=support_ok,
    )


# ---------------------------------------------------------------------------
# Serialization


def estimate_to_text(
    est: Estimate, obs: ObservedSignal, grid_size: int = 4096
) -> str:
    """Signal text format plus a `dualpoly` section for plotting."""
    from .signal import to_text

    out = to_text(est.spectrum, obs)
    if est.dual is not None:
        lines = ["dualpoly"]
        absQ = np.abs(eval_dual_grid(est.dual.q_array(), grid_size))
        for g in range(grid_size):
            lines.append(f"{g / grid_size:.17g} {absQ[g]:.17g}")
        out += "\n".join(lines) + "\n"
    return out


def save_estimate(path, est: Estimate, obs: ObservedSignal, grid_size: int = 4096):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(estimate_to_text(est, obs, grid_size))
