"""Discrete exterior calculus on cubical grids.

Cochains live on the oriented p-cells of a tensor-product grid (periodic for
torus models, clipped at the boundary for box blocks).  The exterior
derivative is the signed incidence operator with exact integer entries; the
Hodge star is diagonal, with the dual/primal volume ratio weighted by
e^((n-2p) u) for the conformal metric e^(2u) * flat.  At middle degree the
metric weight drops out identically, which is the operator-level counterpart
of the conformal invariance of middle-dimensional Hodge duality.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp


class GridError(ValueError):
    pass


class NullspaceError(RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class CubicalGrid:
    """Tensor-product cubical complex with per-axis counts and spacings.

    ``periodic`` axes identify opposite faces (torus directions); on
    non-periodic axes the grid has counts+1 vertex layers and boundary dual
    cells are clipped to half width.  ``orientation`` is the global
    orientation flag entering the Hodge star sign.
    """

    counts: tuple
    spacings: tuple
    periodic: tuple
    origin: tuple = None
    orientation: int = 1

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if any(c < 3 for c in counts):
            raise GridError("need at least 3 cells per axis")
        spacings = tuple(float(h) for h in self.spacings)
        if any(h <= 0 for h in spacings):
            raise GridError("spacings must be positive")
        periodic = tuple(bool(b) for b in self.periodic)
        if not (len(counts) == len(spacings) == len(periodic)):
            raise GridError("counts, spacings, periodic must have equal length")
        origin = self.origin if self.origin is not None else (0.0,) * len(counts)
        if self.orientation not in (1, -1):
            raise GridError("orientation flag must be +1 or -1")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "spacings", spacings)
        object.__setattr__(self, "periodic", periodic)
        object.__setattr__(self, "origin", tuple(float(o) for o in origin))

    @staticmethod
    def torus(n: int, cells, lengths=None, orientation: int = 1) -> "CubicalGrid":
        if isinstance(cells, int):
            cells = (cells,) * n
        if lengths is None:
            lengths = tuple(float(c) for c in cells)
        spacings = tuple(l / c for l, c in zip(lengths, cells))
        return CubicalGrid(counts=tuple(cells), spacings=spacings,
                           periodic=(True,) * n, orientation=orientation)

    @staticmethod
    def box(n: int, cells, lengths, origin=None, orientation: int = 1) -> "CubicalGrid":
        if isinstance(cells, int):
            cells = (cells,) * n
        if isinstance(lengths, (int, float)):
            lengths = (float(lengths),) * n
        spacings = tuple(l / c for l, c in zip(lengths, cells))
        return CubicalGrid(counts=tuple(cells), spacings=spacings,
                           periodic=(False,) * n, origin=origin,
                           orientation=orientation)

    @property
    def n(self) -> int:
        return len(self.counts)

    def cell_types(self, p: int):
        """Axis subsets spanned by p-cells, in lexicographic order."""
        return list(itertools.combinations(range(self.n), p))

    def _axis_size(self, axis: int, spanned: bool) -> int:
        if spanned or self.periodic[axis]:
            return self.counts[axis]
        return self.counts[axis] + 1

    def type_shape(self, cell_type) -> tuple:
        spanned = set(cell_type)
        return tuple(self._axis_size(a, a in spanned) for a in range(self.n))

    def num_cells(self, p: int) -> int:
        return sum(int(np.prod(self.type_shape(t))) for t in self.cell_types(p))

    def type_offsets(self, p: int):
        offsets = [0]
        for t in self.cell_types(p):
            offsets.append(offsets[-1] + int(np.prod(self.type_shape(t))))
        return offsets

    def midpoints(self, p: int) -> np.ndarray:
        """Barycenters of all p-cells, ordered type-major then C-order."""
        blocks = []
        for t in self.cell_types(p):
            spanned = set(t)
            shape = self.type_shape(t)
            idx = np.indices(shape).reshape(self.n, -1).T.astype(float)
            for a in range(self.n):
                offset = 0.5 if a in spanned else 0.0
                idx[:, a] = self.origin[a] + (idx[:, a] + offset) * self.spacings[a]
            blocks.append(idx)
        return np.concatenate(blocks, axis=0)

    def interior_mask(self, p: int, margin: int = 1) -> np.ndarray:
        """Cells at least ``margin`` layers away from every non-periodic boundary."""
        blocks = []
        for t in self.cell_types(p):
            spanned = set(t)
            shape = self.type_shape(t)
            mask = np.ones(shape, dtype=bool)
            for a in range(self.n):
                if self.periodic[a]:
                    continue
                size = shape[a]
                coord = np.arange(size)
                ok = (coord >= margin) & (coord <= size - 1 - margin)
                mask &= ok.reshape([-1 if b == a else 1 for b in range(self.n)])
            blocks.append(mask.reshape(-1))
        return np.concatenate(blocks)


@dataclass
class Cochain:
    grid: CubicalGrid
    degree: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = self.grid.num_cells(self.degree)
        if self.values.shape != (expected,):
            raise GridError(
                f"degree-{self.degree} cochain needs {expected} values, "
                f"got {self.values.shape}"
            )


@dataclass
class MetricField:
    """Conformal metric e^(2u) * flat, via the log factor u sampled pointwise."""

    log_factor: Callable[[np.ndarray], np.ndarray]
    description: str = ""

    @staticmethod
    def flat() -> "MetricField":
        return MetricField(lambda pts: np.zeros(len(np.atleast_2d(pts))), "flat")

    @staticmethod
    def random(grid: CubicalGrid, seed: int = 0, scale: float = 0.3,
               waves: int = 3) -> "MetricField":
        """Smooth seeded trigonometric log-factor compatible with the grid periods."""
        rng = np.random.default_rng(seed)
        lengths = np.array([c * h for c, h in zip(grid.counts, grid.spacings)])
        ks = rng.integers(1, 3, size=(waves, grid.n))
        amps = rng.uniform(-1.0, 1.0, size=waves)
        phases = rng.uniform(0.0, 2.0 * math.pi, size=waves)

        def u(points):
            pts = np.atleast_2d(np.asarray(points, dtype=float))
            rel = (pts - np.asarray(grid.origin)) / lengths
            acc = np.zeros(len(pts))
            for amp, k, phi in zip(amps, ks, phases):
                acc += amp * np.cos(2.0 * math.pi * (rel @ k) + phi)
            return scale * acc / waves

        return MetricField(u, f"random(seed={seed}, scale={scale})")

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.log_factor(points), dtype=float)


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------


def _flat_index(shape, multi):
    """C-order raveling of a stack of multi-indices (columns per axis)."""
    idx = np.zeros(multi[0].shape, dtype=np.int64)
    for size, coord in zip(shape, multi):
        idx = idx * size + coord
    return idx


def build_d(grid: CubicalGrid, p: int) -> sp.csr_matrix:
    """Signed incidence operator from p-cochains to (p+1)-cochains.

    Exact integer entries; composing two of these vanishes identically.
    """
    if not (0 <= p < grid.n):
        raise GridError(f"no exterior derivative from degree {p} on an {grid.n}-grid")
    n = grid.n
    src_types = grid.cell_types(p)
    src_offsets = grid.type_offsets(p)
    src_pos = {t: i for i, t in enumerate(src_types)}
    dst_types = grid.cell_types(p + 1)
    dst_offsets = grid.type_offsets(p + 1)

    rows, cols, vals = [], [], []
    for ti, T in enumerate(dst_types):
        shape_T = grid.type_shape(T)
        multi = np.indices(shape_T).reshape(n, -1)
        row_idx = dst_offsets[ti] + _flat_index(shape_T, multi)
        for pos_in_T, a in enumerate(T):
            S = tuple(b for b in T if b != a)
            si = src_pos[S]
            shape_S = grid.type_shape(S)
            sign = (-1) ** pos_in_T
            near = _flat_index(shape_S, multi)
            far_multi = multi.copy()
            far_multi[a] = far_multi[a] + 1
            if grid.periodic[a]:
                far_multi[a] %= grid.counts[a]
            far = _flat_index(shape_S, far_multi)
            rows.extend([row_idx, row_idx])
            cols.extend([src_offsets[si] + far, src_offsets[si] + near])
            vals.extend([np.full(row_idx.shape, sign, dtype=np.int64),
                         np.full(row_idx.shape, -sign, dtype=np.int64)])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    mat = sp.coo_matrix((vals, (rows, cols)),
                        shape=(grid.num_cells(p + 1), grid.num_cells(p)))
    return mat.tocsr()


def _dual_lengths(grid: CubicalGrid, axis: int, size: int) -> np.ndarray:
    h = grid.spacings[axis]
    if grid.periodic[axis]:
        return np.full(size, h)
    out = np.full(size, h)
    out[0] = 0.5 * h
    out[-1] = 0.5 * h
    return out


def build_star(grid: CubicalGrid, metric: MetricField, p: int) -> np.ndarray:
    """Diagonal Hodge star entries on p-cells for the metric e^(2u) * flat.

    Entry = orientation * (dual volume / primal volume) * e^((n-2p) u) at the
    cell barycenter.  At p = n/2 the metric exponent is the integer zero and
    the factor is skipped outright, so the middle star is bitwise identical
    for every conformal factor.
    """
    if not (0 <= p <= grid.n):
        raise GridError(f"no degree-{p} star on an {grid.n}-grid")
    n = grid.n
    blocks = []
    for t in grid.cell_types(p):
        spanned = set(t)
        shape = grid.type_shape(t)
        primal = float(np.prod([grid.spacings[a] for a in t])) if t else 1.0
        dual = np.ones(shape)
        for a in range(n):
            if a in spanned:
                continue
            lengths = _dual_lengths(grid, a, shape[a])
            dual = dual * lengths.reshape([-1 if b == a else 1 for b in range(n)])
        blocks.append(dual.reshape(-1) / primal)
    entries = np.concatenate(blocks)
    expo = n - 2 * p
    if expo != 0:
        u = metric(grid.midpoints(p))
        entries = entries * np.exp(expo * u)
    return grid.orientation * entries


def dual_star_entries(grid: CubicalGrid, metric: MetricField, p: int) -> np.ndarray:
    """Star from dual (n-p)-cells back to primal p-cells.

    Composing with the primal star gives (-1)^(p(n-p)) times the identity,
    the degree pairing sign of double duality.
    """
    sign = (-1) ** (p * (grid.n - p))
    return sign / build_star(grid, metric, p)


def codifferential(grid: CubicalGrid, metric: MetricField, p: int) -> sp.csr_matrix:
    """Adjoint of d with respect to the star inner products on p and p-1 cells.

    Composition (-1)^(n(p+1)+1) * star * d_dual * star with the dual-complex
    differential (-1)^p d^T; the accumulated sign is +1 in every degree, so
    the operator is the star-weighted transpose.
    """
    if not (1 <= p <= grid.n):
        raise GridError(f"no codifferential on degree {p}")
    n = grid.n
    sign_formula = (-1) ** (n * (p + 1) + 1)
    sign_dual_d = (-1) ** p  # dual-complex differential is (-1)^p d^T
    star_p = build_star(grid, metric, p)
    star_back = dual_star_entries(grid, metric, p - 1)  # carries the double-duality sign
    d = build_d(grid, p - 1)
    mat = (sign_formula * sign_dual_d) * (sp.diags(star_back) @ d.T @ sp.diags(star_p))
    return mat.tocsr()


def hodge_laplacian(grid: CubicalGrid, metric: MetricField, p: int) -> sp.csr_matrix:
    """Discrete Hodge Laplacian d delta + delta d on p-cochains."""
    n = grid.n
    terms = []
    if p < n:
        terms.append(codifferential(grid, metric, p + 1) @ build_d(grid, p))
    if p > 0:
        terms.append(build_d(grid, p - 1) @ codifferential(grid, metric, p))
    out = terms[0]
    for t in terms[1:]:
        out = out + t
    return out.tocsr()


def star_norm(grid: CubicalGrid, metric: MetricField, cochain_values: np.ndarray,
              p: int, mask: np.ndarray | None = None) -> float:
    """L2 norm induced by the (unsigned) diagonal star."""
    w = np.abs(build_star(grid, metric, p))
    v = np.asarray(cochain_values, dtype=float)
    if mask is not None:
        w = w[mask]
        v = v[mask]
    return math.sqrt(float(np.dot(v * v, w)))


# ---------------------------------------------------------------------------
# Harmonic spaces
# ---------------------------------------------------------------------------


def energy_form(grid: CubicalGrid, metric: MetricField, p: int) -> sp.csc_matrix:
    """Symmetric positive-semidefinite form |d w|^2 + |delta w|^2 on p-cochains.

    Its null space is exactly the space of harmonic cochains for the metric.
    """
    n = grid.n
    s_p = np.abs(build_star(grid, metric, p))
    terms = []
    if p < n:
        d_p = build_d(grid, p)
        s_up = np.abs(build_star(grid, metric, p + 1))
        terms.append(d_p.T @ sp.diags(s_up) @ d_p)
    if p > 0:
        d_dn = build_d(grid, p - 1)
        s_dn = np.abs(build_star(grid, metric, p - 1))
        ws = sp.diags(s_p) @ d_dn
        terms.append(ws @ sp.diags(1.0 / s_dn) @ ws.T)
    H = terms[0]
    for t in terms[1:]:
        H = H + t
    return H.tocsc()


def harmonic_space(grid: CubicalGrid, metric: MetricField, p: int,
                   count: int = 10, zero_tol: float = 1e-8, seed: int = 0):
    """Dimension and orthonormal basis of the space of harmonic p-cochains.

    Finds the smallest eigenpairs of the energy form with a multigrid
    preconditioner, then sharpens the near-null block by shifted inverse
    iteration so the basis annihilates the form to near machine precision.
    Closed (fully periodic) grids only.
    """
    if not all(grid.periodic):
        raise GridError("harmonic spaces are computed on closed (torus) grids")
    import pyamg
    from scipy.sparse.linalg import LinearOperator, cg, lobpcg
    import warnings

    H = energy_form(grid, metric, p)
    size = H.shape[0]
    k = min(count, size - 2)
    lam_max = float(np.max(np.abs(H).sum(axis=1)))  # Gershgorin bound
    shift = 1e-6 * lam_max
    A = (H + shift * sp.identity(size, format="csc")).tocsr()
    precond = pyamg.smoothed_aggregation_solver(A, max_coarse=400).aspreconditioner()
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((size, k))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # the nonzero cluster may lag; refined below
        eigvals, eigvecs = lobpcg(A, X, M=precond, largest=False,
                                  tol=1e-7, maxiter=400)
    eigvals = eigvals - shift
    order = np.argsort(eigvals)
    eigvals, eigvecs = eigvals[order], eigvecs[:, order]

    candidates = eigvals < 1e-4 * lam_max
    dim = int(np.sum(candidates))
    if dim == k:
        raise NullspaceError(
            f"all {k} computed eigenvalues look like kernel modes; raise count"
        )
    if dim == 0:
        return 0, np.zeros((size, 0))

    # inverse-iteration refinement of the near-null block
    basis = eigvecs[:, candidates]
    opA = LinearOperator((size, size), matvec=lambda v: A @ v)
    for _ in range(3):
        refined = np.empty_like(basis)
        for i in range(basis.shape[1]):
            x, info = cg(opA, basis[:, i], rtol=1e-14, atol=0.0,
                         M=precond, maxiter=2000)
            if info != 0:
                raise NullspaceError(
                    "inverse-iteration solve failed to converge",
                    residual=float(np.linalg.norm(A @ x - basis[:, i])),
                )
            refined[:, i] = x
        basis, _ = np.linalg.qr(refined)
    rayleigh = np.einsum("ij,ij->j", basis, H @ basis)
    keep = rayleigh < zero_tol * lam_max
    dim = int(np.sum(keep))
    return dim, basis[:, keep]


def kernel_equality_residual(grid: CubicalGrid, metric_a: MetricField,
                             metric_b: MetricField, p: int) -> float:
    """How far the harmonic space of one metric is from the kernel of the other.

    Applies both Hodge Laplacians to each other's harmonic bases and returns
    the largest star-norm of the images relative to the basis norms.
    """
    _, basis_a = harmonic_space(grid, metric_a, p)
    _, basis_b = harmonic_space(grid, metric_b, p)
    lap_a = hodge_laplacian(grid, metric_a, p)
    lap_b = hodge_laplacian(grid, metric_b, p)
    worst = 0.0
    for basis, lap, metric in ((basis_a, lap_b, metric_b), (basis_b, lap_a, metric_a)):
        for i in range(basis.shape[1]):
            v = basis[:, i]
            num = star_norm(grid, metric, lap @ v, p)
            den = star_norm(grid, metric, v, p)
            worst = max(worst, num / den)
    return worst


# ---------------------------------------------------------------------------
# Flat connection Laplacian (componentwise stencil)
# ---------------------------------------------------------------------------


def connection_laplacian(grid: CubicalGrid, p: int) -> sp.csr_matrix:
    """Componentwise second-difference Laplacian on p-cochains of a flat torus.

    The discrete counterpart of the rough Laplacian with the flat connection:
    each component of a form in flat coordinates is differentiated like a
    scalar.  On middle-degree cochains of a flat grid it coincides with the
    Hodge Laplacian (no curvature term survives).
    """
    if not all(grid.periodic):
        raise GridError("the componentwise stencil comparison needs a torus grid")
    n = grid.n
    rows, cols, vals = [], [], []
    offsets = grid.type_offsets(p)
    for ti, t in enumerate(grid.cell_types(p)):
        shape = grid.type_shape(t)
        multi = np.indices(shape).reshape(n, -1)
        base = offsets[ti] + _flat_index(shape, multi)
        for a in range(n):
            h2 = grid.spacings[a] ** 2
            for step in (+1, -1):
                nb = multi.copy()
                nb[a] = (nb[a] + step) % grid.counts[a]
                rows.append(base)
                cols.append(offsets[ti] + _flat_index(shape, nb))
                vals.append(np.full(base.shape, -1.0 / h2))
            rows.append(base)
            cols.append(base)
            vals.append(np.full(base.shape, 2.0 / h2))
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(grid.num_cells(p), grid.num_cells(p)),
    )
    return mat.tocsr()


def flat_weitzenboeck_check(grid: CubicalGrid, p: int | None = None,
                            samples: int = 8, seed: int = 0) -> float:
    """Max discrepancy between the Hodge and connection Laplacians, flat torus.

    Applies both operators to a seeded batch of random cochains and returns
    the largest relative max-norm difference.
    """
    if p is None:
        p = grid.n // 2
    lap_hodge = hodge_laplacian(grid, MetricField.flat(), p)
    lap_conn = connection_laplacian(grid, p)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        x = rng.standard_normal(grid.num_cells(p))
        diff = lap_hodge @ x - lap_conn @ x
        worst = max(worst, float(np.max(np.abs(diff)) / np.max(np.abs(lap_conn @ x))))
    return worst


def plane_wave_cochain(grid: CubicalGrid, p: int, wave: tuple,
                       component) -> Cochain:
    """Cosine plane-wave cochain concentrated on one cell type."""
    types = grid.cell_types(p)
    comp_idx = types.index(tuple(component))
    offsets = grid.type_offsets(p)
    values = np.zeros(grid.num_cells(p))
    mids = grid.midpoints(p)[offsets[comp_idx]:offsets[comp_idx + 1]]
    lengths = np.array([c * h for c, h in zip(grid.counts, grid.spacings)])
    phase = 2.0 * math.pi * (mids - np.asarray(grid.origin)) @ (np.asarray(wave) / lengths)
    values[offsets[comp_idx]:offsets[comp_idx + 1]] = np.cos(phase)
    return Cochain(grid, p, values)


def stencil_eigenvalue(grid: CubicalGrid, wave: tuple) -> float:
    """Exact eigenvalue of the componentwise stencil on a cosine plane wave."""
    acc = 0.0
    for k, cells, h in zip(wave, grid.counts, grid.spacings):
        acc += 4.0 * math.sin(math.pi * k / cells) ** 2 / h ** 2
    return acc


# ---------------------------------------------------------------------------
# Inversion model form
# ---------------------------------------------------------------------------


def unit_middle_form(n: int, seed: int | None = None) -> dict:
    """Unit-norm constant middle-degree form coefficients on R^n."""
    pairs = list(itertools.combinations(range(n), n // 2))
    if seed is None:
        coeffs = np.zeros(len(pairs))
        coeffs[0] = 1.0
    else:
        rng = np.random.default_rng(seed)
        coeffs = rng.standard_normal(len(pairs))
        coeffs /= np.linalg.norm(coeffs)
    return {pair: float(c) for pair, c in zip(pairs, coeffs)}


def inversion_jacobians(points: np.ndarray) -> np.ndarray:
    """Jacobian of the unit-sphere inversion x -> x / |x|^2 at each point."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    r2 = np.sum(pts * pts, axis=-1)
    if np.any(r2 <= 0):
        raise ValueError("inversion is singular at the origin")
    eye = np.eye(pts.shape[1])
    outer = np.einsum("mi,mj->mij", pts, pts) / r2[:, None, None]
    return (eye[None, :, :] - 2.0 * outer) / r2[:, None, None]


def pullback_components(points: np.ndarray, form: dict, p: int) -> np.ndarray:
    """Components of the inversion pullback of a constant p-form at points.

    Returns an array (num points, num components) ordered like the grid's
    p-cell types.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = pts.shape[1]
    jac = inversion_jacobians(pts)
    targets = list(itertools.combinations(range(n), p))
    out = np.zeros((len(pts), len(targets)))
    for s_axes, coeff in form.items():
        if coeff == 0.0:
            continue
        for tj, t_axes in enumerate(targets):
            sub = jac[:, s_axes, :][:, :, t_axes]
            if p == 1:
                det = sub[:, 0, 0]
            elif p == 2:
                det = sub[:, 0, 0] * sub[:, 1, 1] - sub[:, 0, 1] * sub[:, 1, 0]
            else:
                det = np.linalg.det(sub)
            out[:, tj] += coeff * det
    return out


def pullback_norm(points: np.ndarray, form: dict) -> np.ndarray:
    """Pointwise Euclidean norm of the pulled-back form (components summed)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    p = len(next(iter(form)))
    comps = pullback_components(pts, form, p)
    return np.sqrt(np.sum(comps * comps, axis=-1))


def inversion_pullback(grid: CubicalGrid, form: dict) -> Cochain:
    """Midpoint-sampled cochain of the inversion pullback on middle cells.

    Each p-cell carries the pulled-back component at the barycenter times the
    cell area; the grid must avoid the origin.
    """
    n = grid.n
    p = n // 2
    keys = set(len(k) for k in form)
    if keys and keys != {p}:
        raise GridError(f"form degree {keys} does not match the middle degree {p}")
    mids = grid.midpoints(p)
    comps = pullback_components(mids, form, p)
    types = grid.cell_types(p)
    offsets = grid.type_offsets(p)
    values = np.zeros(grid.num_cells(p))
    for ti, t in enumerate(types):
        area = float(np.prod([grid.spacings[a] for a in t]))
        block = slice(offsets[ti], offsets[ti + 1])
        values[block] = comps[block, ti] * area
    return Cochain(grid, p, values)


def dec_residuals(grid: CubicalGrid, cochain: Cochain,
                  metric: MetricField | None = None,
                  margin_width: float = 0.06) -> dict:
    """Star-norm residuals of d and delta applied to a sampled cochain.

    Residuals are measured a fixed physical distance away from the boundary:
    clipped dual cells would pollute delta there, and a resolution-dependent
    margin would corrupt measured convergence orders.
    """
    metric = metric or MetricField.flat()
    p = cochain.degree
    d = build_d(grid, p)
    delta = codifferential(grid, metric, p)
    layers = max(1, int(round(margin_width / max(grid.spacings))))
    base = star_norm(grid, metric, cochain.values, p)
    d_res = star_norm(grid, metric, d @ cochain.values, p + 1,
                      mask=grid.interior_mask(p + 1, layers)) / base
    delta_res = star_norm(grid, metric, delta @ cochain.values, p - 1,
                          mask=grid.interior_mask(p - 1, layers)) / base
    return {"d": d_res, "delta": delta_res}
