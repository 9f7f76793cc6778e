"""Point-interaction spectra through the Lambda matrix.

For a point set ``Y`` with coupling ``alpha`` and energy ``E = -kappa**2``
the matrix is real symmetric::

    Lambda[y, y]  = (2 pi |Y| alpha + log(kappa / 2) + C_E) / (2 pi)
    Lambda[y, y'] = -K0(kappa |y - y'|) / (2 pi)

and ``E`` is an eigenvalue of the point-interaction Hamiltonian exactly when
``Lambda`` is singular; the null vector gives the coefficients of the
eigenfunction in terms of free Green functions.

Eigenvalues are located by scanning a geometric ``kappa`` grid, tracking
each sorted eigenvalue of ``Lambda`` for sign changes and refining every
bracket with Brent's method.  An LDL^T inertia count on both sides of each
root confirms its multiplicity.
"""
import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import linalg, optimize
from scipy.spatial.distance import pdist, cdist, squareform

from . import specfun
from ._workers import parallel_map
from .geometry import DiscretizedGraph

__all__ = [
    "AssemblyError",
    "StaleRootError",
    "LambdaSystem",
    "Inertia",
    "Spectrum",
    "EigenfunctionGrid",
    "ScalingReport",
    "assemble_lambda",
    "lambda_derivative",
    "inertia",
    "find_eigenvalues",
    "null_vector",
    "eval_eigenfunction",
    "schur_margin",
    "scaled_spectrum_check",
]

C_E = specfun.EULER_GAMMA
TWO_PI = 2.0 * math.pi
SCHEMA_VERSION = "1.0"


class AssemblyError(ValueError):
    """Coincident points make the Lambda matrix undefined."""


class StaleRootError(RuntimeError):
    """No near-null direction of Lambda at the requested energy."""


class LambdaSystem:
    """A discretized graph together with its pairwise distances.

    Distances are computed once; :meth:`matrix` is then a pure function of
    ``kappa``.
    """

    def __init__(self, graph):
        if not isinstance(graph, DiscretizedGraph):
            raise TypeError("LambdaSystem needs a DiscretizedGraph")
        self.graph = graph
        self.n = graph.size
        self._condensed = pdist(graph.points) if self.n > 1 else np.empty(0)
        if self.n > 1 and self._condensed.min() <= 0:
            raise AssemblyError("coincident points in Y")

    @classmethod
    def from_points(cls, points, alpha, gamma=None):
        return cls(DiscretizedGraph.from_points(points, alpha, gamma=gamma))

    @property
    def distances(self):
        return squareform(self._condensed) if self.n > 1 else np.zeros((1, 1))

    @property
    def alpha(self):
        return self.graph.alpha

    def diagonal(self, kappa):
        return (TWO_PI * self.n * self.alpha + math.log(0.5 * kappa) + C_E) / TWO_PI

    def matrix(self, kappa):
        return assemble_lambda(self, kappa)

    def lowest_eigenvalues(self, kappa, count=None):
        lam = self.matrix(kappa)
        if count is None or count >= self.n:
            return linalg.eigvalsh(lam, check_finite=False)
        return linalg.eigvalsh(lam, subset_by_index=[0, count - 1], check_finite=False)

    def eigenvalue(self, kappa, index):
        lam = self.matrix(kappa)
        return linalg.eigvalsh(lam, subset_by_index=[index, index], check_finite=False)[0]


def assemble_lambda(system, kappa):
    """Lambda matrix of ``system`` at energy ``-kappa**2``."""
    if not (math.isfinite(kappa) and kappa > 0):
        raise ValueError("kappa must be finite and > 0")
    if system.n == 1:
        return np.array([[system.diagonal(kappa)]])
    off = specfun.bessel_k0(kappa * system._condensed)
    off *= -1.0 / TWO_PI
    lam = squareform(off)
    np.fill_diagonal(lam, system.diagonal(kappa))
    return lam


def lambda_derivative(system, kappa):
    """``d Lambda / d kappa``; positive definite for point interactions."""
    r = system._condensed
    if system.n == 1:
        return np.array([[1.0 / (TWO_PI * kappa)]])
    d = squareform(r * specfun.bessel_k1(kappa * r) / TWO_PI)
    np.fill_diagonal(d, 1.0 / (TWO_PI * kappa))
    return d


# --------------------------------------------------------------------------
# Inertia


class Inertia(NamedTuple):
    n_neg: int
    n_zero: int
    n_pos: int
    logabsdet: float
    sign: int


def inertia(matrix, rtol=1e-12):
    """Inertia of a symmetric matrix from a Bunch-Kaufman LDL^T factorisation.

    Pivots (eigenvalues of the 1x1 and 2x2 blocks of ``D``) with magnitude
    below ``rtol * max|A|`` count as zero.  ``logabsdet`` and ``sign`` refer
    to the determinant and ignore the zero tolerance.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    n = a.shape[0]
    scale = np.abs(a).max() if n else 0.0
    _, d, _ = linalg.ldl(a, lower=True, check_finite=False)
    pivots = []
    i = 0
    while i < n:
        if i + 1 < n and d[i + 1, i] != 0.0:
            pivots.extend(np.linalg.eigvalsh(d[i:i + 2, i:i + 2]))
            i += 2
        else:
            pivots.append(d[i, i])
            i += 1
    p = np.array(pivots)
    zero_tol = rtol * scale
    n_zero = int(np.sum(np.abs(p) <= zero_tol))
    n_neg = int(np.sum(p < -zero_tol))
    with np.errstate(divide="ignore"):
        logabsdet = float(np.sum(np.log(np.abs(p))))
    sign = 0 if np.any(p == 0) else (-1 if np.sum(p < 0) % 2 else 1)
    return Inertia(n_neg, n_zero, n - n_neg - n_zero, logabsdet, sign)


# --------------------------------------------------------------------------
# Spectra


@dataclass
class Spectrum:
    """Distinct eigenvalues (ascending) with multiplicities and flags.

    ``flags`` holds ``"ok"`` or a ``|``-joined subset of ``above_threshold``,
    ``ambiguous`` and ``inertia_mismatch``.
    """

    energies: np.ndarray
    multiplicities: np.ndarray
    flags: list
    degeneracy_tol: float
    threshold: float = None
    settings: dict = field(default_factory=dict)
    provenance: str = "point-interaction"

    def __len__(self):
        return len(self.energies)

    @property
    def levels(self):
        """Eigenvalues repeated according to multiplicity."""
        return np.repeat(self.energies, self.multiplicities)

    @property
    def level_flags(self):
        return [f for f, m in zip(self.flags, self.multiplicities) for _ in range(m)]

    def below_threshold(self):
        if self.threshold is None:
            return self.energies.copy()
        return self.energies[self.energies < self.threshold]

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["E", "multiplicity", "flag"])
        for e, m, f in zip(self.energies, self.multiplicities, self.flags):
            w.writerow([repr(float(e)), int(m), f])
        return _emit(buf.getvalue(), path)

    def manifest(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "provenance": self.provenance,
            "threshold": self.threshold,
            "degeneracy_tol": self.degeneracy_tol,
            "settings": self.settings,
            "levels": [{"E": float(e), "multiplicity": int(m), "flag": f}
                       for e, m, f in zip(self.energies, self.multiplicities, self.flags)],
        }

    def to_json(self, path=None):
        return _emit(json.dumps(self.manifest(), indent=2, sort_keys=True) + "\n", path)


def _emit(text, path):
    if path is None:
        return text
    with open(path, "w") as fh:
        fh.write(text)
    return None


def default_kappa_range(system):
    """``(1e-3 gamma, 1.25 max(gamma, kappa_1))`` with ``kappa_1`` the single-centre root."""
    g = system.graph.gamma
    k1 = 2.0 * math.exp(-C_E - TWO_PI * system.alpha)
    if g is None:
        return 1e-3 * k1, 1.25 * k1
    return 1e-3 * g, 1.25 * max(g, k1)


def _count_negative(values):
    return int(np.sum(values < 0.0))


def find_eigenvalues(system, kappa_range=None, scan_points=200, tol=1e-12,
                     degeneracy_tol=1e-6, energy_window=None, max_refine=6,
                     check_inertia=True, workers=None):
    """Locate the discrete eigenvalues ``E = -kappa**2`` of the point model.

    Parameters
    ----------
    system : LambdaSystem
    kappa_range : (float, float), optional
        Scan interval; defaults to :func:`default_kappa_range`.  The upper
        end is extended automatically until ``Lambda`` is positive definite.
    scan_points : int
        Number of geometric grid nodes (at least 8).
    tol : float
        Target for ``|lambda_index|`` at a root; floored at the rounding
        level of the eigensolver.
    degeneracy_tol : float
        Relative tolerance on ``|E|`` for clustering roots into one level.
    energy_window : (float, float), optional
        Restrict to ``E_lo < E < E_hi``; overrides ``kappa_range``.

    Returns
    -------
    Spectrum
    """
    if scan_points < 8:
        raise ValueError("scan_points must be at least 8")
    explicit_range = kappa_range is not None or energy_window is not None
    if energy_window is not None:
        e_lo, e_hi = energy_window
        if not (e_lo < e_hi <= 0):
            raise ValueError("energy_window must satisfy E_lo < E_hi <= 0")
        k_lo = math.sqrt(-e_hi) if e_hi < 0 else default_kappa_range(system)[0]
        kappa_range = (k_lo, math.sqrt(-e_lo))
    elif kappa_range is None:
        kappa_range = default_kappa_range(system)
    k_min, k_max = map(float, kappa_range)
    if not (0 < k_min < k_max):
        raise ValueError("need 0 < kappa_min < kappa_max")

    if not explicit_range:
        for _ in range(30):
            if _count_negative(system.lowest_eigenvalues(k_max, 1)) == 0:
                break
            k_max *= 2.0

    grid = list(np.geomspace(k_min, k_max, scan_points))
    spectra = dict(zip(grid, parallel_map(system.lowest_eigenvalues, grid, workers)))
    # only indices negative somewhere on the grid can change sign
    n_track = _count_negative(spectra[grid[0]])
    lam_max = float(np.abs(system.matrix(grid[-1])).max())
    tol_eff = max(tol, 64 * np.finfo(float).eps * lam_max)

    ambiguous = set()
    for _ in range(max_refine + 1):
        counts = [_count_negative(spectra[k][:n_track + 1]) for k in grid]
        bad = [i for i in range(len(grid) - 1) if counts[i + 1] > counts[i]]
        if not bad:
            ambiguous.clear()
            break
        ambiguous = {(grid[i], grid[i + 1]) for i in bad}
        new = [math.sqrt(grid[i] * grid[i + 1]) for i in bad]
        for k, vals in zip(new, parallel_map(system.lowest_eigenvalues, new, workers)):
            spectra[k] = vals
        grid = sorted(spectra)
    else:
        warnings.warn("eigenvalue branches not monotone after refinement; roots flagged")

    roots = []  # (kappa, index, bracket)
    for j in range(n_track):
        for a, b in zip(grid[:-1], grid[1:]):
            fa, fb = spectra[a][j], spectra[b][j]
            if fa < 0.0 <= fb or fa > 0.0 >= fb:
                if fb == 0.0:
                    k = b
                else:
                    k = optimize.brentq(system.eigenvalue, a, b, args=(j,),
                                        xtol=1e-15 * a, rtol=4 * np.finfo(float).eps)
                roots.append((k, j, (a, b)))

    roots.sort(key=lambda t: -t[0])  # ascending in E
    energies, mults, flags, brackets = [], [], [], []
    for k, j, br in roots:
        e = -k * k
        if energies and abs(e - energies[-1]) <= degeneracy_tol * abs(e):
            n = mults[-1]
            energies[-1] = (energies[-1] * n + e) / (n + 1)
            mults[-1] += 1
            brackets[-1].append((k, br))
            continue
        energies.append(e)
        mults.append(1)
        brackets.append([(k, br)])
        flags.append(set())

    threshold = system.graph.threshold
    residuals = []
    for i, (e, m, br) in enumerate(zip(energies, mults, brackets)):
        k = math.sqrt(-e)
        res = float(np.sort(np.abs(system.lowest_eigenvalues(k, min(system.n, n_track + 1))))[m - 1])
        residuals.append(res)
        if threshold is not None and e > threshold:
            flags[i].add("above_threshold")
        if any(b in ambiguous for _, b in br):
            flags[i].add("ambiguous")
        if res > max(10 * tol_eff, 1e-8 * lam_max):
            flags[i].add("ambiguous")
        if check_inertia:
            # count of eigenvalues crossing between kappa(1 -+ d)
            gaps = [abs(e - o) for o in energies if o != e]
            d = min([1e-7] + [0.25 * g / abs(e) for g in gaps])
            lo = inertia(system.matrix(k * (1 - d)), rtol=0.0).n_neg
            hi = inertia(system.matrix(k * (1 + d)), rtol=0.0).n_neg
            if lo - hi != m:
                flags[i].add("inertia_mismatch")

    settings = {
        "kappa_range": [k_min, k_max],
        "scan_points": scan_points,
        "tol": tol,
        "tol_effective": tol_eff,
        "degeneracy_tol": degeneracy_tol,
        "energy_window": list(energy_window) if energy_window is not None else None,
        "n_points": system.n,
        "alpha": system.alpha,
        "residuals": residuals,
    }
    return Spectrum(
        energies=np.array(energies, dtype=float),
        multiplicities=np.array(mults, dtype=int),
        flags=["|".join(sorted(f)) if f else "ok" for f in flags],
        degeneracy_tol=degeneracy_tol,
        threshold=threshold,
        settings=settings,
    )


def null_vector(system, energy, tol=1e-8, multiplicity=None):
    """Unit null vector(s) of ``Lambda`` at a located eigenvalue.

    Returns an ``(n, m)`` array.  With ``multiplicity`` the ``m`` directions
    of smallest ``|lambda|`` are returned; all must satisfy
    ``|lambda| < 10 tol``.  Signs are fixed so that the largest component
    of each vector is positive.
    """
    if energy >= 0:
        raise ValueError("energy must be negative")
    lam = system.matrix(math.sqrt(-energy))
    w, v = linalg.eigh(lam, check_finite=False)
    order = np.argsort(np.abs(w))
    if multiplicity is None:
        pick = [i for i in order if abs(w[i]) < 10 * tol]
    else:
        pick = list(order[:multiplicity])
        if any(abs(w[i]) >= 10 * tol for i in pick):
            pick = []
    if not pick:
        raise StaleRootError(f"no null direction at E={energy!r} (min |lambda|={abs(w[order[0]]):.3e})")
    vecs = v[:, sorted(pick)]
    for c in range(vecs.shape[1]):
        i = np.argmax(np.abs(vecs[:, c]))
        if vecs[i, c] < 0:
            vecs[:, c] *= -1
    return vecs


# --------------------------------------------------------------------------
# Eigenfunctions


@dataclass
class EigenfunctionGrid:
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray  # shape (ny, nx)
    near_site: np.ndarray  # True within spacing/10 of a point of Y
    kappa0: float
    coefficients: np.ndarray

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "psi", "near_site"])
        for iy, yv in enumerate(self.y):
            for ix, xv in enumerate(self.x):
                w.writerow([repr(float(xv)), repr(float(yv)),
                            repr(float(self.values[iy, ix])), int(self.near_site[iy, ix])])
        return _emit(buf.getvalue(), path)


def wavefunction(system, c, kappa0, xy):
    """``psi(x) = sum_y c_y K0(kappa0 |x - y|) / 2pi`` at the rows of ``xy``."""
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    c = np.asarray(c, dtype=float).ravel()
    out = np.empty(len(xy))
    step = max(1, 4_000_000 // max(system.n, 1))
    for s in range(0, len(xy), step):
        r = cdist(xy[s:s + step], system.graph.points)
        with np.errstate(divide="ignore"):
            k = np.where(r > 0, specfun.special.k0(kappa0 * r), np.inf)
        out[s:s + step] = k @ c / TWO_PI
    return out


def eval_eigenfunction(system, c, kappa0, window, nx, ny):
    """Evaluate the eigenfunction on an ``nx`` x ``ny`` lattice.

    ``window`` is ``(xmin, xmax, ymin, ymax)``.  Nodes that sit on a point of
    ``Y`` get ``nan``; nodes within ``spacing/10`` of one are flagged.
    """
    if not (kappa0 > 0):
        raise ValueError("kappa0 must be > 0")
    xmin, xmax, ymin, ymax = window
    x = np.linspace(xmin, xmax, nx)
    y = np.linspace(ymin, ymax, ny)
    xx, yy = np.meshgrid(x, y)
    xy = np.column_stack([xx.ravel(), yy.ravel()])
    vals = wavefunction(system, c, kappa0, xy)
    vals[~np.isfinite(vals)] = np.nan
    spacing = system.graph.spacing
    if spacing is None:
        r = system._condensed
        spacing = float(r.min()) if len(r) else 1.0
    dmin = np.empty(len(xy))
    step = max(1, 4_000_000 // max(system.n, 1))
    for s in range(0, len(xy), step):
        dmin[s:s + step] = cdist(xy[s:s + step], system.graph.points).min(axis=1)
    return EigenfunctionGrid(x=x, y=y, values=vals.reshape(ny, nx),
                             near_site=(dmin < spacing / 10).reshape(ny, nx),
                             kappa0=float(kappa0), coefficients=np.asarray(c, dtype=float))


# --------------------------------------------------------------------------
# Diagnostics


def schur_margin(system, kappa):
    """``alpha - max_x (1/|Y|) sum_{y != x} G(x - y)``.

    A positive value puts ``Lambda`` in the regime where the row-sum (Schur)
    bound guarantees invertibility for dense point sets.
    """
    if not (kappa > 0):
        raise ValueError("kappa must be > 0")
    if system.n == 1:
        return system.alpha
    g = squareform(specfun.bessel_k0(kappa * system._condensed) / TWO_PI)
    return system.alpha - g.sum(axis=1).max() / system.n


@dataclass
class ScalingReport:
    scale: float
    energies: np.ndarray
    scaled_energies: np.ndarray
    max_rel_mismatch: float


def scaled_spectrum_check(system, s, **find_kwargs):
    """Compare the spectrum of ``s * Y`` (coupling shifted by ``log s / (2 pi |Y|)``)
    with ``E(Y) / s**2``."""
    if not (s > 0):
        raise ValueError("scale must be > 0")
    g = system.graph
    scaled_graph = DiscretizedGraph.from_points(
        g.points * s, g.alpha + math.log(s) / (TWO_PI * g.size),
        gamma=None if g.gamma is None else g.gamma / s)
    scaled = LambdaSystem(scaled_graph)
    kw = dict(find_kwargs)
    kr = kw.pop("kappa_range", None) or default_kappa_range(system)
    base = find_eigenvalues(system, kappa_range=kr, **kw)
    other = find_eigenvalues(scaled, kappa_range=(kr[0] / s, kr[1] / s), **kw)
    a, b = base.levels, other.levels * s * s
    if len(a) != len(b):
        mismatch = math.inf
    elif len(a) == 0:
        mismatch = 0.0
    else:
        mismatch = float(np.max(np.abs(a - b) / np.abs(a)))
    return ScalingReport(scale=s, energies=base.levels, scaled_energies=other.levels,
                         max_rel_mismatch=mismatch)
