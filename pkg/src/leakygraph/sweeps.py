"""Parameter sweeps, avoided-crossing and plateau metrics, convergence fits."""
import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ._workers import parallel_map
from .geometry import discretize, spec_to_dict
from .oracles import polymer_threshold
from .spectral import LambdaSystem, find_eigenvalues

__all__ = [
    "SweepResult",
    "GapReport",
    "ConvergenceFit",
    "sweep",
    "gap_report",
    "convergence_fit",
    "plateau_window",
]


@dataclass
class SweepResult:
    """Eigenvalues (with multiplicity, ascending) for each grid value.

    ``rows[i]`` is ``None`` when the solver failed at ``grid[i]``; the error
    text is kept in ``failures``.
    """

    parameter: str
    grid: np.ndarray
    rows: list
    flags: list
    threshold: float = None
    settings: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)

    def curves(self):
        """``(len(grid), max_levels)`` array of curves matched by sorted index;
        ``nan`` where a level is absent."""
        width = max([len(r) for r in self.rows if r is not None] + [0])
        out = np.full((len(self.grid), width), np.nan)
        for i, r in enumerate(self.rows):
            if r is not None:
                out[i, :len(r)] = r
        return out

    def to_csv(self, path=None):
        width = self.curves().shape[1]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["param"] + [f"E_{k + 1}" for k in range(width)])
        for p, r in zip(self.grid, self.rows):
            r = [] if r is None else list(r)
            w.writerow([repr(float(p))] + [repr(float(e)) for e in r] + ["NA"] * (width - len(r)))
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w") as fh:
            fh.write(text)
        return None


def sweep(family, grid, gamma, count=None, spacing=None, parameter="param",
          solver=None, workers=None):
    """Spectra of ``family(p)`` for every ``p`` in ``grid``.

    ``family`` maps a parameter value to a graph shape.  The
    resolution (``count`` or ``spacing``) is held fixed along the sweep.
    ``solver`` holds keyword arguments for :func:`find_eigenvalues`.
    Failures at single grid values are recorded, not raised.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("grid must be non-empty")
    if grid.size > 1:
        d = np.diff(grid)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("grid must be strictly monotone")
    solver = dict(solver or {})

    def one(p):
        try:
            g = discretize(family(p), gamma, count=count, spacing=spacing)
            spec = find_eigenvalues(LambdaSystem(g), **solver)
            return spec.levels, spec.level_flags, spec.threshold, g.spec, None
        except Exception as exc:  # recorded per grid value
            return None, None, None, None, f"{type(exc).__name__}: {exc}"

    t0 = time.perf_counter()
    results = parallel_map(one, list(grid), workers)
    rows, flags, failures, threshold, example = [], [], {}, None, None
    for p, (lev, fl, thr, spec, err) in zip(grid, results):
        rows.append(lev)
        flags.append(fl)
        if err is not None:
            failures[float(p)] = err
        if thr is not None:
            threshold = thr
        if example is None and spec is not None:
            example = spec_to_dict(spec)
    settings = {
        "gamma": gamma,
        "count": count,
        "spacing": spacing,
        "solver": solver,
        "example_geometry": example,
        "wall_time": time.perf_counter() - t0,
    }
    return SweepResult(parameter, grid, rows, flags, threshold, settings, failures)


# --------------------------------------------------------------------------


@dataclass
class GapReport:
    """Avoided-crossing candidates and plateaux of a sweep.

    ``crossings``: ``(param, gap, k)`` local minima of ``E_{k+1} - E_k``
    at interior grid points.  ``plateaus``: ``(k, (p_start, p_end), max_slope)``.
    ``births``/``deaths``: ``(param, k)`` where curve ``k`` appears/disappears.
    """

    crossings: list
    plateaus: list
    births: list
    deaths: list
    slope_threshold: float

    @property
    def min_gap(self):
        return min((g for _, g, _ in self.crossings), default=math.inf)

    def to_json(self, path=None):
        data = {
            "slope_threshold": self.slope_threshold,
            "crossings": [{"param": p, "gap": g, "pair": k} for p, g, k in self.crossings],
            "plateaus": [{"curve": k, "interval": list(iv), "max_slope": s}
                         for k, iv, s in self.plateaus],
            "births": [{"param": p, "curve": k} for p, k in self.births],
            "deaths": [{"param": p, "curve": k} for p, k in self.deaths],
        }
        text = json.dumps(data, indent=2, sort_keys=True) + "\n"
        if path is None:
            return text
        with open(path, "w") as fh:
            fh.write(text)
        return None


def _runs(mask):
    """Maximal runs of True as (start, stop) index pairs, stop exclusive."""
    runs, start = [], None
    for i, m in enumerate(mask):
        if m and start is None:
            start = i
        elif not m and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(mask)))
    return runs


def gap_report(sr, slope_threshold=None, energy_window=None, min_plateau_points=3):
    """Gap minima between adjacent curves and flat segments of each curve.

    Curves are matched across the grid by sorted index.  Values outside
    ``energy_window`` (``(E_lo, E_hi)``) are treated as absent.  The default
    slope threshold is ``1e-3 gamma**2`` per unit parameter.
    """
    if len(sr.grid) < 3:
        raise ValueError("gap_report needs at least 3 grid points")
    if slope_threshold is None:
        gamma = sr.settings.get("gamma", 1.0)
        slope_threshold = 1e-3 * gamma * gamma
    e = sr.curves()
    if energy_window is not None:
        lo, hi = energy_window
        e = np.where((e > lo) & (e < hi), e, np.nan)
    p = sr.grid
    present = ~np.isnan(e)

    births, deaths = [], []
    for k in range(e.shape[1]):
        for i in range(1, len(p)):
            if present[i, k] and not present[i - 1, k]:
                births.append((float(p[i]), k))
            if present[i - 1, k] and not present[i, k]:
                deaths.append((float(p[i]), k))

    crossings = []
    for k in range(e.shape[1] - 1):
        g = e[:, k + 1] - e[:, k]
        for i in range(1, len(p) - 1):
            a, b, c = g[i - 1], g[i], g[i + 1]
            if np.isnan(a) or np.isnan(b) or np.isnan(c):
                continue
            if b < a and b <= c:
                crossings.append((float(p[i]), float(b), k))

    plateaus = []
    for k in range(e.shape[1]):
        for start, stop in _runs(present[:, k]):
            if stop - start < 2:
                continue
            seg = e[start:stop, k]
            slope = np.abs(np.gradient(seg, p[start:stop]))
            for a, b in _runs(slope < slope_threshold):
                if b - a >= min_plateau_points:
                    plateaus.append((k, (float(p[start + a]), float(p[start + b - 1])),
                                     float(slope[a:b].max())))
    crossings.sort()
    return GapReport(crossings, plateaus, births, deaths, slope_threshold)


def plateau_window(gamma, spacing, length_max, slope_threshold, e_hi=0.0):
    """Energy window for plateau and gap analysis of a lead-length sweep.

    A cut-off lead of length ``L`` carries levels ``E_thr + k**2`` with
    ``|dE/dL| ~ 2 (E - E_thr) / L``, so every level within
    ``slope_threshold * length_max / 2`` of the lead threshold is flat for
    trivial reasons.  ``E_thr`` is the threshold of an infinite straight
    chain of points with the given spacing, which is where the discrete
    model's lead continuum actually starts.
    """
    k = polymer_threshold(1.0 / (gamma * spacing), 1, spacing)
    e_lo = -k * k + 0.5 * slope_threshold * length_max
    if not e_lo < e_hi:
        raise ValueError("empty plateau window")
    return (e_lo, e_hi)


# --------------------------------------------------------------------------


@dataclass
class ConvergenceFit:
    exponent: float  # a in err ~ C N^-a
    prefactor: float
    residual: float  # rms of the log-log fit


def convergence_fit(errors):
    """Least-squares fit of ``log err = log C - a log N``.

    ``errors`` is a sequence of ``(N, err)`` with at least three entries.
    """
    data = np.asarray(errors, dtype=float)
    if data.ndim != 2 or data.shape[0] < 3 or data.shape[1] != 2:
        raise ValueError("need at least three (N, error) pairs")
    if np.any(data[:, 1] <= 0) or np.any(data[:, 0] <= 0):
        raise ValueError("errors and N must be positive")
    x, y = np.log(data[:, 0]), np.log(data[:, 1])
    (slope, intercept), res, *_ = np.polyfit(x, y, 1, full=True)
    rms = math.sqrt(res[0] / len(x)) if len(res) else 0.0
    return ConvergenceFit(exponent=float(-slope), prefactor=float(math.exp(intercept)),
                          residual=rms)
