"""Structured SDP solver: Hermitian PSD blocks, free variables, equalities.

Solves
    minimize    c . v
    subject to  A v = b,    v in K,

where v stacks isometric real coordinates of every declared variable and
K is a product of PSD cones (one per Hermitian block) and free space.
A Hermitian d x d block contributes d^2 coordinates: the d real diagonal
entries followed by sqrt(2) * (real, imag) of the strict upper triangle;
the scaling makes the coordinate map an isometry, so projecting the
coordinate vector onto the cone equals projecting the matrix.

The algorithm is consensus ADMM. One iterate alternates a closed-form
projection onto the affine set {A v = b} (a cached factorization of
A A^T), an over-relaxation step, a Euclidean projection onto K via one
Hermitian eigendecomposition per block, and a scaled dual update. Free
complex variables are split into real and imaginary coordinate pairs;
:func:`embed_hermitian` (the real symmetric embedding) is kept for the
SDPA text export, which only speaks real blocks.

Programs are built once, then immutable; identical programs and options
produce identical iterate sequences.
"""

from __future__ import annotations

import hashlib
import threading
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

__all__ = [
    "LinExpr",
    "ConicProgram",
    "ConicSolution",
    "SolveOptions",
    "SolverFailure",
    "embed_hermitian",
    "solve",
    "extract_dual_equalities",
    "write_sdpa",
]

_SQRT2 = np.sqrt(2.0)


class SolverFailure(RuntimeError):
    """Raised by callers that require an Optimal status.

    Carries the non-optimal :class:`ConicSolution` in ``solution``.
    """

    def __init__(self, message: str, solution: "ConicSolution"):
        super().__init__(message)
        self.solution = solution


class LinExpr:
    """Real-linear functional of the coordinate vector, with complex
    coefficients: value(v) = sum_j coeff[j] * v[j] for real v."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[int, complex] | None = None):
        self.terms = terms if terms is not None else {}

    def copy(self) -> "LinExpr":
        return LinExpr(dict(self.terms))

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            if other == 0:
                return self.copy()
            raise TypeError("constants belong on the equality right-hand side")
        out = dict(self.terms)
        for c, v in other.terms.items():
            out[c] = out.get(c, 0.0) + v
        return LinExpr(out)

    __radd__ = __add__

    def __iadd__(self, other):
        if isinstance(other, (int, float, complex)):
            if other == 0:
                return self
            raise TypeError("constants belong on the equality right-hand side")
        t = self.terms
        for c, v in other.terms.items():
            t[c] = t.get(c, 0.0) + v
        return self

    def __neg__(self):
        return LinExpr({c: -v for c, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        scalar = complex(scalar)
        return LinExpr({c: v * scalar for c, v in self.terms.items()})

    __rmul__ = __mul__

    def conj(self) -> "LinExpr":
        return LinExpr({c: np.conj(v) for c, v in self.terms.items()})

    def real(self) -> "LinExpr":
        return LinExpr({c: v.real for c, v in self.terms.items() if v.real != 0.0})

    def imag(self) -> "LinExpr":
        return LinExpr({c: v.imag for c, v in self.terms.items() if v.imag != 0.0})

    def value(self, v: np.ndarray) -> complex:
        return sum(coef * v[c] for c, coef in self.terms.items())


def _pair_index(i: int, j: int, d: int) -> int:
    # Position of (i, j), i < j, in the row-major strict upper triangle.
    return i * d - (i * (i + 1)) // 2 + (j - i - 1)


class BlockView:
    """Symbolic Hermitian PSD block; indexing yields coordinate exprs."""

    def __init__(self, name: str, dim: int, offset: int):
        self.name = name
        self.dim = dim
        self.offset = offset
        self.ntri = dim * (dim - 1) // 2

    @property
    def shape(self):
        return (self.dim, self.dim)

    def __getitem__(self, key) -> LinExpr:
        i, j = key
        d = self.dim
        if not (0 <= i < d and 0 <= j < d):
            raise IndexError("block index out of range")
        if i == j:
            return LinExpr({self.offset + i: 1.0})
        sign = 1.0 if i < j else -1.0
        a, b = (i, j) if i < j else (j, i)
        t = _pair_index(a, b, d)
        re_c = self.offset + d + t
        im_c = self.offset + d + self.ntri + t
        return LinExpr({re_c: 1.0 / _SQRT2, im_c: sign * 1j / _SQRT2})

    def principal(self, size: int) -> "SubView":
        """View of the leading size x size principal submatrix."""
        if not (0 < size <= self.dim):
            raise ValueError("bad principal size")
        return SubView(self, size)


class SubView:
    def __init__(self, block: BlockView, size: int):
        self.block = block
        self.size = size

    @property
    def shape(self):
        return (self.size, self.size)

    def __getitem__(self, key) -> LinExpr:
        i, j = key
        if not (0 <= i < self.size and 0 <= j < self.size):
            raise IndexError("submatrix index out of range")
        return self.block[i, j]


class FreeView:
    """Symbolic free variable vector (complex or real entries)."""

    def __init__(self, name: str, length: int, offset: int, is_complex: bool):
        self.name = name
        self.length = length
        self.offset = offset
        self.is_complex = is_complex

    def __len__(self):
        return self.length

    def __getitem__(self, i: int) -> LinExpr:
        if not (0 <= i < self.length):
            raise IndexError("free variable index out of range")
        if self.is_complex:
            return LinExpr(
                {self.offset + i: 1.0, self.offset + self.length + i: 1j}
            )
        return LinExpr({self.offset + i: 1.0})


@dataclass(frozen=True)
class SolveOptions:
    """Solver knobs. Tolerances are on unscaled equality violation and on
    the scaled-dual change (both max-norm)."""

    eps_abs: float = 1e-7
    eps_rel: float = 1e-7
    max_iter: int = 50000
    # None = not pinned: solve() starts at 1.0, and callers that know
    # their program class may substitute a better startpoint first
    rho: float | None = None
    over_relax: float = 1.7
    adapt_every: int = 100
    rho_min: float = 1e-4
    rho_max: float = 1e4
    infeas_window: int = 5000


class ConicProgram:
    """Builder for the structured conic program; immutable once compiled."""

    def __init__(self):
        self._dim = 0
        self._psd: list[BlockView] = []
        self._free: list[FreeView] = []
        self._names: set[str] = set()
        self._rows: list[dict[int, float]] = []
        self._rhs: list[float] = []
        # Per add_equality call: (re_row_index or None, im_row_index or None,
        # had_imag_part) so dual multipliers can be reassembled.
        self._constraints: list[tuple[int | None, int | None, bool]] = []
        self._objective: dict[int, float] = {}
        self._compiled = None

    # -- variables ----------------------------------------------------

    def _claim(self, name: str, count: int) -> int:
        if self._compiled is not None:
            raise RuntimeError("program already compiled; build a new one")
        if name in self._names:
            raise ValueError(f"duplicate variable name {name!r}")
        self._names.add(name)
        off = self._dim
        self._dim += count
        return off

    def add_psd_block(self, name: str, dim: int) -> BlockView:
        if dim < 1:
            raise ValueError("PSD block dimension must be >= 1")
        view = BlockView(name, dim, self._claim(name, dim * dim))
        self._psd.append(view)
        return view

    def add_free_complex(self, name: str, length: int) -> FreeView:
        view = FreeView(name, length, self._claim(name, 2 * length), True)
        self._free.append(view)
        return view

    def add_free_real(self, name: str, length: int) -> FreeView:
        view = FreeView(name, length, self._claim(name, length), False)
        self._free.append(view)
        return view

    # -- constraints and objective -------------------------------------

    def add_equality(self, expr: LinExpr, rhs) -> int:
        """Add expr == rhs. A complex equality contributes a real row and,
        when the imaginary part is not identically zero, an imaginary row.
        Returns the constraint index for dual extraction."""
        if self._compiled is not None:
            raise RuntimeError("program already compiled; build a new one")
        rhs = complex(rhs)
        for v in expr.terms.values():
            if not (np.isfinite(v.real) and np.isfinite(v.imag)):
                raise ValueError("non-finite constraint coefficient")
        re_row = {c: v.real for c, v in expr.terms.items() if v.real != 0.0}
        im_row = {c: v.imag for c, v in expr.terms.items() if v.imag != 0.0}
        re_idx = im_idx = None
        has_im = bool(im_row) or rhs.imag != 0.0
        if re_row or rhs.real != 0.0:
            re_idx = len(self._rows)
            self._rows.append(re_row)
            self._rhs.append(rhs.real)
        if has_im:
            im_idx = len(self._rows)
            self._rows.append(im_row)
            self._rhs.append(rhs.imag)
        self._constraints.append((re_idx, im_idx, has_im))
        return len(self._constraints) - 1

    def minimize(self, expr: LinExpr) -> None:
        if self._compiled is not None:
            raise RuntimeError("program already compiled; build a new one")
        scale = max((abs(v) for v in expr.terms.values()), default=1.0)
        if any(abs(v.imag) > 1e-12 * scale for v in expr.terms.values()):
            raise ValueError("objective must be real-valued; take .real() first")
        self._objective = {c: v.real for c, v in expr.terms.items() if v.real != 0.0}

    # -- compilation ----------------------------------------------------

    def compile(self):
        """Assemble (A, b, c) and freeze the program."""
        if self._compiled is None:
            rows, cols, data = [], [], []
            for r, row in enumerate(self._rows):
                for c, v in row.items():
                    rows.append(r)
                    cols.append(c)
                    data.append(v)
            K = len(self._rows)
            A = scipy.sparse.csr_matrix(
                (np.array(data), (np.array(rows, dtype=int), np.array(cols, dtype=int))),
                shape=(K, self._dim),
            )
            b = np.array(self._rhs, dtype=float)
            c = np.zeros(self._dim)
            for ci, v in self._objective.items():
                c[ci] = v
            self._compiled = (A, b, c)
        return self._compiled

    @property
    def num_coords(self) -> int:
        return self._dim

    @property
    def psd_blocks(self) -> tuple[BlockView, ...]:
        return tuple(self._psd)

    @property
    def free_vars(self) -> tuple[FreeView, ...]:
        return tuple(self._free)


@dataclass
class ConicSolution:
    status: str  # "Optimal" | "MaxIter" | "InfeasibleSuspected"
    objective_value: float
    primal_residual: float  # max unscaled equality violation of the iterate
    dual_residual: float
    consensus_residual: float
    iterations: int
    rho_final: float
    blocks: dict[str, np.ndarray]
    free: dict[str, np.ndarray]
    _program: ConicProgram = field(repr=False, default=None)
    _eta: np.ndarray = field(repr=False, default=None)
    _row_scale: np.ndarray = field(repr=False, default=None)

    def block(self, name: str) -> np.ndarray:
        return self.blocks[name]

    def free_value(self, name: str) -> np.ndarray:
        return self.free[name]


def embed_hermitian(H: np.ndarray) -> np.ndarray:
    """Real symmetric embedding [[Re H, -Im H], [Im H, Re H]].

    The embedding doubles every eigenvalue's multiplicity, so H >= 0 iff
    the embedding is >= 0. Input must be Hermitian to 1e-12 (relative to
    its largest entry).
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("need a square matrix")
    scale = max(1.0, float(np.abs(H).max()) if H.size else 1.0)
    if np.abs(H - H.conj().T).max() > 1e-12 * scale:
        raise ValueError("matrix is not Hermitian")
    return _embed_unchecked(H)


def _embed_unchecked(H: np.ndarray) -> np.ndarray:
    re, im = H.real, H.imag
    return np.block([[re, -im], [im, re]])


def _unembed(E: np.ndarray, d: int) -> np.ndarray:
    re = (E[:d, :d] + E[d:, d:]) / 2.0
    im = (E[d:, :d] - E[:d, d:]) / 2.0
    H = re + 1j * im
    return (H + H.conj().T) / 2.0


_tri_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _triu_idx(d: int):
    if d not in _tri_cache:
        _tri_cache[d] = np.triu_indices(d, 1)
    return _tri_cache[d]


def _pack_hermitian(H: np.ndarray) -> np.ndarray:
    d = H.shape[0]
    iu, ju = _triu_idx(d)
    up = H[iu, ju]
    return np.concatenate([H.diagonal().real, _SQRT2 * up.real, _SQRT2 * up.imag])


def _unpack_hermitian(v: np.ndarray, d: int) -> np.ndarray:
    t = d * (d - 1) // 2
    iu, ju = _triu_idx(d)
    H = np.zeros((d, d), dtype=complex)
    up = (v[d : d + t] + 1j * v[d + t :]) / _SQRT2
    H[iu, ju] = up
    H += H.conj().T
    H[np.arange(d), np.arange(d)] = v[:d]
    return H


def _project_psd(H: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the PSD cone (clip negative eigenvalues)."""
    d = H.shape[0]
    lam, V = scipy.linalg.eigh(
        H.copy(), driver="evd", overwrite_a=True, check_finite=False
    )
    neg = lam < 0.0
    n_neg = int(neg.sum())
    if n_neg == 0:
        return H
    if n_neg == d:
        return np.zeros_like(H)
    # Reconstruct from whichever eigenvalue side is smaller.
    if n_neg <= d - n_neg:
        Vn = V[:, neg]
        H_plus = H - (Vn * lam[neg]) @ Vn.conj().T
    else:
        Vp = V[:, ~neg]
        H_plus = (Vp * lam[~neg]) @ Vp.conj().T
    return (H_plus + H_plus.conj().T) / 2.0


# Factorizations of A A^T keyed by the bytes of the normalized matrix;
# shared across solves and guarded for concurrent harness trials.
_factor_lock = threading.Lock()
_factor_cache: OrderedDict[bytes, object] = OrderedDict()
_FACTOR_CACHE_MAX = 32


def _gram_factor(A_norm: scipy.sparse.csr_matrix):
    key = hashlib.sha1()
    key.update(np.int64(A_norm.shape[0]).tobytes())
    key.update(np.int64(A_norm.shape[1]).tobytes())
    key.update(A_norm.indptr.tobytes())
    key.update(A_norm.indices.tobytes())
    key.update(A_norm.data.tobytes())
    digest = key.digest()
    with _factor_lock:
        if digest in _factor_cache:
            _factor_cache.move_to_end(digest)
            return _factor_cache[digest]
    M = (A_norm @ A_norm.T).tocsc()
    try:
        lu = scipy.sparse.linalg.splu(M)
    except RuntimeError:
        # Dependent rows make A A^T singular; a tiny shift keeps the
        # projection well defined (consistency is checked at setup).
        shift = 1e-10 * (1.0 + M.diagonal().mean())
        lu = scipy.sparse.linalg.splu(
            (M + shift * scipy.sparse.identity(M.shape[0], format="csc")).tocsc()
        )
    with _factor_lock:
        _factor_cache[digest] = lu
        while len(_factor_cache) > _FACTOR_CACHE_MAX:
            _factor_cache.popitem(last=False)
    return lu


def solve(program: ConicProgram, opts: SolveOptions | None = None) -> ConicSolution:
    """Run consensus ADMM on the compiled program.

    Returns the cone-feasible iterate (PSD blocks are exact projections);
    ``primal_residual`` is its worst unscaled equality violation. Status
    is Optimal only when primal, consensus, and dual residuals all meet
    eps_abs + eps_rel * scale.
    """
    opts = opts or SolveOptions()
    A, b, c = program.compile()
    D = program.num_coords
    K = A.shape[0]

    psd_slices = [
        (blk.dim, slice(blk.offset, blk.offset + blk.dim * blk.dim))
        for blk in program.psd_blocks
    ]

    if K:
        row_norms = np.sqrt(np.asarray(A.multiply(A).sum(axis=1)).ravel())
        s = np.where(row_norms > 1e-14, row_norms, 1.0)
        Dinv = scipy.sparse.diags(1.0 / s)
        An = (Dinv @ A).tocsr()
        AnT = An.T.tocsr()
        bn = b / s
        lu = _gram_factor(An)

        # b must lie in the row space of A, else the equalities are
        # inconsistent and no amount of iterating will fix it.
        z0 = AnT @ lu.solve(bn)
        setup_gap = np.abs(s * (An @ z0 - bn)).max() if K else 0.0
        if setup_gap > 1e-6 * (1.0 + np.abs(b).max()):
            empty = ConicSolution(
                status="InfeasibleSuspected",
                objective_value=float("nan"),
                primal_residual=float(setup_gap),
                dual_residual=float("nan"),
                consensus_residual=float("nan"),
                iterations=0,
                rho_final=opts.rho if opts.rho is not None else 1.0,
                blocks={blk.name: np.zeros((blk.dim, blk.dim), complex) for blk in program.psd_blocks},
                free={fv.name: np.zeros(fv.length, complex if fv.is_complex else float) for fv in program.free_vars},
                _program=program,
            )
            return empty
    else:
        s = np.zeros(0)
        An = A
        AnT = A.T
        bn = b
        lu = None

    rho = float(opts.rho) if opts.rho is not None else 1.0
    w = np.zeros(D)
    lam = np.zeros(D)
    eta = np.zeros(K)

    def project_cone(v: np.ndarray) -> np.ndarray:
        out = v.copy()
        for d, sl in psd_slices:
            out[sl] = _pack_hermitian(_project_psd(_unpack_hermitian(v[sl], d)))
        return out

    status = "MaxIter"
    it = 0
    r_aff = r_cons = r_dual = float("inf")
    best_aff = float("inf")
    best_aff_iter = 0

    for it in range(1, opts.max_iter + 1):
        z = w - lam - c / rho
        if K:
            t = lu.solve(An @ z - bn)
            u = z - AnT @ t
            eta = rho * t
        else:
            u = z
        u_hat = opts.over_relax * u + (1.0 - opts.over_relax) * w
        w_new = project_cone(u_hat + lam)
        lam = lam + u_hat - w_new

        r_cons = float(np.abs(u - w_new).max()) if D else 0.0
        r_dual = float(rho * np.abs(w_new - w).max()) if D else 0.0
        if K:
            r_aff = float(np.abs(s * (An @ w_new - bn)).max())
        else:
            r_aff = 0.0
        w = w_new

        scale_p = max(float(np.abs(w).max(initial=0.0)), float(np.abs(b).max(initial=0.0)))
        eps_p = opts.eps_abs + opts.eps_rel * scale_p
        eps_d = opts.eps_abs + opts.eps_rel * float(rho * np.abs(lam).max(initial=0.0))
        if r_aff <= eps_p and r_cons <= eps_p and r_dual <= eps_d:
            status = "Optimal"
            break

        if r_aff < best_aff * 0.99:
            best_aff = r_aff
            best_aff_iter = it
        if (
            it - best_aff_iter >= opts.infeas_window
            and r_aff > 1e3 * eps_p
            and r_dual <= 10.0 * eps_d
        ):
            status = "InfeasibleSuspected"
            break

        if opts.adapt_every and it % opts.adapt_every == 0:
            if r_cons > 10.0 * r_dual and rho * 2.0 <= opts.rho_max:
                rho *= 2.0
                lam /= 2.0
            elif r_dual > 10.0 * r_cons and rho / 2.0 >= opts.rho_min:
                rho /= 2.0
                lam *= 2.0

    blocks = {}
    for blk, (d, sl) in zip(program.psd_blocks, psd_slices):
        blocks[blk.name] = _unpack_hermitian(w[sl], d)
    free = {}
    for fv in program.free_vars:
        if fv.is_complex:
            free[fv.name] = (
                w[fv.offset : fv.offset + fv.length]
                + 1j * w[fv.offset + fv.length : fv.offset + 2 * fv.length]
            )
        else:
            free[fv.name] = w[fv.offset : fv.offset + fv.length].copy()

    return ConicSolution(
        status=status,
        objective_value=float(c @ w),
        primal_residual=r_aff,
        dual_residual=r_dual,
        consensus_residual=r_cons,
        iterations=it,
        rho_final=rho,
        blocks=blocks,
        free=free,
        _program=program,
        _eta=eta,
        _row_scale=s,
    )


def extract_dual_equalities(solution: ConicSolution):
    """Multipliers of the affine equalities at the returned iterate.

    Entry i corresponds to the i-th ``add_equality`` call: a float for a
    purely real constraint, complex (mu_re + i mu_im) otherwise. They
    satisfy the stationarity condition c + A^T mu + nu = 0 with nu in the
    normal cone of K, up to the reported residuals.
    """
    if solution.status != "Optimal":
        raise SolverFailure("dual extraction requires an Optimal solution", solution)
    prog = solution._program
    mu_rows = np.zeros(len(prog._rows))
    if len(prog._rows):
        mu_rows = solution._eta / solution._row_scale
    out = []
    for re_idx, im_idx, has_im in prog._constraints:
        re = mu_rows[re_idx] if re_idx is not None else 0.0
        if has_im:
            im = mu_rows[im_idx] if im_idx is not None else 0.0
            out.append(complex(re, im))
        else:
            out.append(float(re))
    return out


def write_sdpa(program: ConicProgram, path) -> None:
    """Dump the program in sparse SDPA text form for external checking.

    The file encodes the equality-standard-form side: one symmetric data
    matrix per constraint over the block-diagonal variable
    Y = diag(embed(H_1), ..., free +/- pairs), with the right-hand sides
    on the c line. The SDPA reader's objective max tr(F0 Y) equals the
    negated objective of this program.
    """
    program.compile()
    blocks = program.psd_blocks
    frees = program.free_vars
    n_free = sum(2 * fv.length if fv.is_complex else fv.length for fv in frees)
    struct = [2 * blk.dim for blk in blocks]
    if n_free:
        struct.append(-2 * n_free)  # +/- split keeps free vars as a diagonal block

    # Map a coordinate to SDPA entries within its block.
    coord_entries: dict[int, list[tuple[int, int, int, float]]] = {}

    def _psd_entries(bi: int, blk: BlockView):
        d = blk.dim
        t = blk.ntri
        for i in range(d):
            coord_entries[blk.offset + i] = [
                (bi, i, i, 0.5),
                (bi, d + i, d + i, 0.5),
            ]
        iu, ju = _triu_idx(d)
        for k in range(t):
            i, j = int(iu[k]), int(ju[k])
            re_c = blk.offset + d + k
            im_c = blk.offset + d + t + k
            phi = 1.0 / (2.0 * _SQRT2)
            coord_entries[re_c] = [(bi, i, j, phi), (bi, d + i, d + j, phi)]
            coord_entries[im_c] = [(bi, j, d + i, phi), (bi, i, d + j, -phi)]

    for bi, blk in enumerate(blocks, start=1):
        _psd_entries(bi, blk)
    free_block = len(blocks) + 1
    pos = 0
    for fv in frees:
        width = 2 * fv.length if fv.is_complex else fv.length
        for k in range(width):
            coord_entries[fv.offset + k] = [
                (free_block, pos + k, pos + k, 1.0),
                (free_block, n_free + pos + k, n_free + pos + k, -1.0),
            ]
        pos += width

    def emit(fh, mat_idx: int, row: dict[int, float], negate=False):
        agg: dict[tuple[int, int, int], float] = {}
        for coord, coef in row.items():
            for bi, i, j, w in coord_entries[coord]:
                if i > j:
                    i, j = j, i
                key = (bi, i, j)
                agg[key] = agg.get(key, 0.0) + (-coef if negate else coef) * w
        for (bi, i, j), v in sorted(agg.items()):
            if v != 0.0:
                fh.write(f"{mat_idx} {bi} {i + 1} {j + 1} {v:.17g}\n")

    with open(path, "w", encoding="ascii") as fh:
        fh.write('"structured conic program dump"\n')
        fh.write(f"{len(program._rows)}\n")
        fh.write(f"{len(struct)}\n")
        fh.write("{" + ", ".join(str(v) for v in struct) + "}\n")
        fh.write(" ".join(f"{v:.17g}" for v in program._rhs) + "\n")
        emit(fh, 0, program._objective, negate=True)
        for r, row in enumerate(program._rows, start=1):
            emit(fh, r, row)
