"""Monte Carlo estimators for small-saddle-connection measures.

Estimators share one execution scheme: work is split into fixed-size
batches, each batch draws its randomness from a counter-based generator
keyed by (seed, stream, batch index), and partial results are reduced in
batch order.  The outcome is therefore a pure function of (seed, N),
independent of the worker count used to schedule batches.

Estimates target scaling exponents, not constants: all events are
normalized so that the epsilon- and kappa-dependence predicted by the
volume bounds appears as a log-log slope of 2 per parameter.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import prym as prym_mod
from .charts import BOX_X, BOX_Y, StratumChart, _FastSurface
from .errors import (
    DimensionMismatch,
    EmptyChart,
    InsufficientGrid,
    NonPositiveEstimate,
)
from .geodesics import (
    _chain_for_path_fast,
    _search_wedge,
    _tables,
    chains_independent,
    connection_chords,
    enumerate_saddle_connections,
    interiors_disjoint,
)

BATCH = 1 << 16
STREAM_TORUS = 1
STREAM_STRATUM = 2
STREAM_ENERGY = 3
STREAM_PRYM = 4
WARMUP_DRAWS = 100_000


@dataclass(frozen=True)
class EstimateReport:
    quantity: str
    estimate: float
    stderr: float
    n_samples: int
    acceptance: float
    seed: int
    workers: int
    wall_time: float = field(compare=False)
    params: dict = field(default_factory=dict)

    def csv_row(self):
        ps = ";".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return [self.quantity, ps, repr(self.estimate), repr(self.stderr),
                str(self.n_samples), str(self.seed)]


CSV_HEADER = ["quantity", "params", "estimate", "stderr", "N", "seed"]


def _run_batches(total, workers, fn, stream, seed):
    """Deterministic batched reduction; fn(gen, count, batch_idx) -> tuple."""
    from .rng import batch_generator
    nb = (total + BATCH - 1) // BATCH
    sizes = [min(BATCH, total - i * BATCH) for i in range(nb)]

    def job(i):
        gen = batch_generator(seed, stream, i)
        return fn(gen, sizes[i], i)

    if workers <= 1:
        results = [job(i) for i in range(nb)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(job, range(nb)))
    acc = None
    for r in results:       # fixed order, pairwise-free deterministic sum
        acc = r if acc is None else tuple(a + b for a, b in zip(acc, r))
    return acc


def _binomial_report(quantity, hits, valid, total, seed, workers, t0, params):
    p = hits / valid if valid else 0.0
    se = math.sqrt(p * (1.0 - p) / valid) if valid else float("inf")
    return EstimateReport(quantity, p, se, total, valid / total, seed, workers,
                          time.time() - t0, params)


# -- torus ----------------------------------------------------------------------

def estimate_torus_small_sc(eps: float, n: int, seed: int,
                            workers: int = 1) -> EstimateReport:
    """Fraction of unit-area flat tori with a saddle connection below eps.

    Tori are drawn from the standard fundamental domain |x| <= 1/2,
    |tau| >= 1 with hyperbolic density dx dy / y^2 by rejection from the
    truncated proposal.  On the fundamental domain the shortest
    saddle connection of the unit-area torus has length 1/sqrt(y), so
    the indicator is y > eps^-2 (cross-validated against the geometric
    enumerator in the test suite).
    """
    if not 0 < eps < 0.5:
        raise ValueError("eps must be in (0, 0.5)")
    t0 = time.time()
    ymin = math.sqrt(3.0) / 2.0
    thr = eps ** -2

    def batch(gen, count, _i):
        x = gen.random(count) - 0.5
        y = ymin / gen.random(count)
        accept = y >= np.sqrt(1.0 - x * x)
        hits = accept & (y > thr)
        return int(hits.sum()), int(accept.sum())

    hits, valid = _run_batches(n, workers, batch, STREAM_TORUS, seed)
    return _binomial_report("torus_small_sc", hits, valid, n, seed, workers,
                            t0, {"eps": eps})


def torus_exact_fraction(eps: float) -> float:
    """Cusp-area oracle: hyperbolic area of {y > eps^-2} over area pi/3."""
    return 3.0 / math.pi * eps * eps


# -- stratum charts ----------------------------------------------------------------

def _has_short_independent_connection(chart: StratumChart, Z_row, L) -> bool:
    """m = 1 indicator: a saddle connection shorter than L with nonzero
    class in relative homology."""
    lens = np.abs(Z_row)
    if bool(((lens < L) & ~chart.null_edge).any()):
        return True
    surf = chart.surface_for_row(Z_row)
    hit = []

    def report(hol, sv, ev, record, chain, edge_id, source):
        if any(chain):
            red = _tables(chart.seed.surface).hnf
            from .exact import reduce_mod_lattice
            if any(reduce_mod_lattice(chain, red)):
                hit.append(True)

    g = surf.gluing
    for t0 in range(g.num_triangles):
        for c0 in range(3):
            _search_wedge(surf, None, t0, c0, L, report)
            if hit:
                return True
    return False


def _ordered_pair_exists(chart: StratumChart, Z_row, L1, L2) -> bool:
    """m = 2 indicator: disjoint-interior, independent pair with
    |g1| < L1 and |g2| < L2."""
    surf = chart.surface_for_row(Z_row)
    conns = enumerate_saddle_connections(surf, max(L1, L2))
    short = [c for c in conns if c.length < max(L1, L2)]
    if len(short) < 2:
        return False
    seed_surface = chart.seed.surface
    for a in short:
        for b in short:
            if a is b:
                continue
            if not (a.length < L1 and b.length < L2):
                continue
            if not interiors_disjoint(surf, a, b):
                continue
            if chains_independent(seed_surface, [a.chain, b.chain]):
                return True
    return False


def estimate_stratum_small_sc(chart: StratumChart, m: int, eps, n: int,
                              seed: int, workers: int = 1) -> EstimateReport:
    """P(ordered independent family with |gamma_j| < eps_j sqrt(A)) under
    uniform box sampling of primary periods, conditional on landing in
    the chart domain."""
    eps = [float(e) for e in eps]
    if len(eps) != m:
        raise DimensionMismatch(f"m = {m} but {len(eps)} epsilon values")
    if m > chart.m:
        raise EmptyChart(f"chart {chart.label} has only m = {chart.m} marked edges")
    t0 = time.time()
    state = {"warmup_seen": 0, "warmup_valid": 0}

    def batch(gen, count, i):
        coords = chart.sample_coordinates(gen, count)
        Z = chart.edge_matrix(coords)
        ok = chart.valid_mask(Z)
        if state["warmup_seen"] < WARMUP_DRAWS:
            state["warmup_seen"] += count
            state["warmup_valid"] += int(ok.sum())
            if state["warmup_seen"] >= WARMUP_DRAWS and state["warmup_valid"] == 0:
                raise EmptyChart(
                    f"no valid surface in {state['warmup_seen']} warmup draws")
        A = chart.areas(Z)
        sqA = np.sqrt(np.where(ok, A, 1.0))
        Lmax = max(eps) * sqA
        cand = ok & (chart.short_bound(Z) < Lmax)
        hits = 0
        for row in np.nonzero(cand)[0]:
            zr = Z[row]
            if m == 1:
                got = _has_short_independent_connection(chart, zr, eps[0] * sqA[row])
            else:
                got = _ordered_pair_exists(chart, zr, eps[0] * sqA[row],
                                           eps[1] * sqA[row])
            hits += got
        return hits, int(ok.sum())

    hits, valid = _run_batches(n, workers, batch, STREAM_STRATUM, seed)
    params = {"chart": chart.label, "m": m}
    for j, e in enumerate(eps):
        params[f"eps{j + 1}"] = e
    return _binomial_report(f"stratum_small_sc[{chart.label}]", hits, valid, n,
                            seed, workers, t0, params)


# -- energy integral ---------------------------------------------------------------

def energy_value(surface, eps) -> float:
    """exp(-sum |gamma_j|^2 / eps_j^2 - A) for the marked family of a surface."""
    marked = surface.marked
    eps = [float(e) for e in eps]
    if len(eps) != len(marked):
        raise DimensionMismatch(
            f"{len(marked)} marked edges but {len(eps)} epsilon values")
    s = 0.0
    for e, ej in zip(marked, eps):
        s += abs(surface.edge_vectors[e]) ** 2 / ej ** 2
    return math.exp(-s - surface.area())


def radial_split(N: int, c: float) -> float:
    """Radial mass of the cone measure: int_0^inf 2 t^(2N-1) e^(-c t^2) dt
    = Gamma(N) / c^N.  Converts cone-measure estimates into unit-area
    statements."""
    if N < 1 or c <= 0:
        raise ValueError("need N >= 1 and c > 0")
    return math.gamma(N) / c ** N


def estimate_energy_integral(chart: StratumChart, m: int, eps, n: int,
                             seed: int, workers: int = 1) -> EstimateReport:
    """Importance-sampled integral of exp(-sum |z_j|^2/eps_j^2 - A) over
    the chart domain intersected with the sampling box.

    Marked coordinates are drawn from the complex Gaussian matching the
    energy factor, so the eps^2 factors enter analytically; the report's
    params carry estimate / prod(eps_j^2).
    """
    eps = [float(e) for e in eps]
    if len(eps) != m or m > chart.m:
        raise DimensionMismatch("epsilon vector does not match the marked family")
    t0 = time.time()
    d = chart.dim
    vol_free = ((BOX_X[1] - BOX_X[0]) * (BOX_Y[1] - BOX_Y[0])) ** (d - m)
    weight0 = vol_free * math.prod(math.pi * e * e for e in eps)

    def batch(gen, count, _i):
        cols = []
        for j in range(m):
            # complex Gaussian with density exp(-|z|^2/eps^2) / (pi eps^2)
            r = np.sqrt(-np.log(gen.random(count))) * eps[j]
            phi = 2 * math.pi * gen.random(count)
            cols.append(r * np.exp(1j * phi))
        for _ in range(d - m):
            x = gen.random(count) * (BOX_X[1] - BOX_X[0]) + BOX_X[0]
            y = gen.random(count) * (BOX_Y[1] - BOX_Y[0]) + BOX_Y[0]
            cols.append(x + 1j * y)
        coords = np.column_stack(cols)
        Z = chart.edge_matrix(coords)
        ok = chart.valid_mask(Z)
        A = chart.areas(Z)
        w = np.where(ok, np.exp(-np.where(ok, A, 0.0)), 0.0) * weight0
        return float(w.sum()), float((w * w).sum()), int(ok.sum())

    s1, s2, valid = _run_batches(n, workers, batch, STREAM_ENERGY, seed)
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0)
    se = math.sqrt(var / n)
    params = {"chart": chart.label, "m": m}
    for j, e in enumerate(eps):
        params[f"eps{j + 1}"] = e
    params["ratio"] = mean / math.prod(e * e for e in eps)
    return EstimateReport(f"energy_integral[{chart.label}]", mean, se, n,
                          valid / n, seed, workers, time.time() - t0, params)


# -- Prym charts ---------------------------------------------------------------------

class PrymChartSampler:
    """Unit-area section sampler for one H(1,1) eigenform chart.

    The chart density d theta (r dr) dx1 dy1 dx2 dy2 disintegrates along
    the area as dA x (unit-area measure); on the A = 1 section, r keeps
    the density r dr, the twists are uniform on r-dependent ranges and
    (y1, y2) is uniform on the segment y1 + y2 = 1/(c r).  Events are
    rotation-invariant, so theta is dropped.
    """

    def __init__(self, D: int, r_max: float = 1.0):
        params = prym_mod.prym_h11_enumerate(D)[0]
        self.params = params
        self.D = D
        self.r_max = r_max
        (c1j, c2j, f2), lhat = prym_mod.chart_functions(params)
        self.coeff = (c1j, c2j, f2)
        self.lhat = lhat
        _, self.c1, self.c2 = prym_mod.chart_area(
            params, prym_mod.PrymChartPoint(0.0, 1.0, 0.1 + 0.4j, 0.05 + 0.3j))
        # linear map (r, u, v) -> edge vectors, extracted by exact
        # differencing of the (linear) builder
        base = self._safe_point()
        s0, ids = prym_mod.prym_chart_build_with_ids(params, base)
        n_edges = s0.gluing.num_edges
        zb = np.array(s0.edge_vectors)
        h = 0.25
        su = np.array(prym_mod.prym_chart_build_with_ids(
            params, prym_mod.PrymChartPoint(0.0, base.r, base.u + h * 1j, base.v))[0].edge_vectors)
        sv = np.array(prym_mod.prym_chart_build_with_ids(
            params, prym_mod.PrymChartPoint(0.0, base.r, base.u, base.v + h * 1j))[0].edge_vectors)
        cu = (su - zb) / (h * 1j)
        cv = (sv - zb) / (h * 1j)
        cr = zb - base.u * cu - base.v * cv
        # r-linearity: vectors at r are cr * r + cu u + cv v
        self.cu, self.cv, self.cr = cu, cv, cr
        self.seed_surface = s0
        self.scratch = _FastSurface(s0)
        self.ids = ids
        self.widths = params.widths()

    def _safe_point(self):
        from .errors import DomainViolation
        (_c2, c2j, _f2), lhat = prym_mod.chart_functions(self.params)
        heights = ((0.6, 0.4), (0.9, 0.1), (0.1, 0.9))
        fracs = (0.25, 0.05, 0.45, 0.65, 0.85)
        for (y1, y2) in heights:
            for f1 in fracs:
                for f2 in fracs:
                    cand = prym_mod.PrymChartPoint(
                        0.0, 1.0, complex(f1 * lhat[0], y1),
                        complex(f2 * lhat[2], y2))
                    try:
                        prym_mod.check_domain(self.params, cand)
                        return cand
                    except DomainViolation:
                        continue
        raise EmptyChart(f"no interior point found for D = {self.D}")

    def sample(self, gen, count):
        """Unit-area chart samples; returns (valid, r, Z) arrays."""
        (xi2, zeta2, f2) = self.coeff
        r = self.r_max * np.sqrt(gen.random(count))
        ysum = 1.0 / (self.c1 * r)
        y1 = ysum * gen.random(count)
        y2 = ysum - y1
        x1 = self.lhat[0] * r * gen.random(count)
        x2 = self.lhat[2] * r * gen.random(count)
        u = x1 + 1j * y1
        v = x2 + 1j * y2
        h2 = xi2 * y1 + zeta2 * y2
        re2 = xi2 * x1 + zeta2 * x2 + f2 * r
        ok = (h2 > 0) & (re2 >= 0) & (re2 < self.lhat[1] * r)
        Z = (np.outer(r, self.cr) + np.outer(u, self.cu) + np.outer(v, self.cv))
        return ok, r, Z

    def short_bound(self, Z):
        lens = np.abs(Z)
        bound = lens.min(axis=1)
        g = self.seed_surface.gluing
        for t, refs in enumerate(g.triangles):
            e0 = abs(refs[0]) - 1
            e1 = abs(refs[1]) - 1
            e2 = abs(refs[2]) - 1
            s0 = 1 if refs[0] > 0 else -1
            s1 = 1 if refs[1] > 0 else -1
            area2 = (s0 * Z[:, e0] * np.conj(s1 * Z[:, e1])).imag
            for e in (e0, e1, e2):
                np.minimum(bound, np.abs(area2) / lens[:, e], out=bound)
        return bound


def _prym_has_short_sc(sampler: PrymChartSampler, Z_row, L,
                       exclude_horizontal: bool) -> bool:
    """Any saddle connection shorter than L (optionally excluding the
    chart's periodic direction)."""
    surf = sampler.scratch
    surf.edge_vectors = tuple(Z_row)
    lens = np.abs(Z_row)
    horiz = np.abs(Z_row.imag) <= 1e-12 * lens
    short_edges = lens < L
    if exclude_horizontal:
        if (short_edges & ~horiz).any():
            return True
    elif short_edges.any():
        return True
    hit = []
    exclude = (1 + 0j) if exclude_horizontal else None

    def report(hol, sv, ev, record, chain, edge_id, source):
        hit.append(True)

    g = surf.gluing
    for t0 in range(g.num_triangles):
        for c0 in range(3):
            _search_wedge(surf, None, t0, c0, L, report, exclude_dir=exclude,
                          first_only=True)
            if hit:
                return True
    return False


def estimate_prym_volumes(D: int, eps: float, kappa: float, n: int, seed: int,
                          workers: int = 1):
    """Two unit-area fractions in one H(1,1) eigenform chart:

    (i)  a saddle connection shorter than eps exists (any direction);
    (ii) a cylinder of the chart direction has width below kappa and a
         non-parallel saddle connection shorter than eps exists.
    """
    if not (0 < eps < 0.5 and 0 < kappa < 0.5):
        raise ValueError("eps and kappa must be in (0, 0.5)")
    sampler = PrymChartSampler(D)
    t0 = time.time()
    min_w = min(sampler.lhat)

    def batch(gen, count, _i):
        ok, r, Z = sampler.sample(gen, count)
        bound = sampler.short_bound(Z)
        narrow = ok & (min_w * r < kappa)
        cand_any = ok & (bound < eps)
        hits_i = 0
        hits_ii = 0
        rows = np.nonzero(cand_any)[0]
        for row in rows:
            zr = Z[row]
            if _prym_has_short_sc(sampler, zr, eps, exclude_horizontal=False):
                hits_i += 1
                if narrow[row] and _prym_has_short_sc(sampler, zr, eps, True):
                    hits_ii += 1
        return hits_i, hits_ii, int(ok.sum())

    hi, hii, valid = _run_batches(n, workers, batch, STREAM_PRYM, seed)
    base = {"D": D, "eps": eps, "kappa": kappa}
    rep_i = _binomial_report(f"prym_small_sc[D={D}]", hi, valid, n, seed,
                             workers, t0, base)
    rep_ii = _binomial_report(f"prym_narrow_and_sc[D={D}]", hii, valid, n,
                              seed, workers, t0, base)
    return rep_i, rep_ii


# -- scaling regression ----------------------------------------------------------------

def scaling_exponent(reports, param_key: str):
    """Weighted log-log slope of estimate against a parameter.

    Returns (slope, stderr) via least squares on log(estimate) with
    delta-method weights stderr/estimate per point."""
    pts = []
    for rep in reports:
        x = float(rep.params[param_key])
        y = rep.estimate
        if y <= 0:
            raise NonPositiveEstimate(f"estimate {y} at {param_key} = {x}")
        sig = rep.stderr / y if rep.stderr > 0 else 1e-12
        pts.append((math.log(x), math.log(y), sig))
    if len(pts) < 3:
        raise InsufficientGrid("need at least 3 grid points")
    w = [1.0 / (s * s) for (_, _, s) in pts]
    sw = sum(w)
    mx = sum(wi * x for wi, (x, _, _) in zip(w, pts)) / sw
    my = sum(wi * y for wi, (_, y, _) in zip(w, pts)) / sw
    sxx = sum(wi * (x - mx) ** 2 for wi, (x, _, _) in zip(w, pts))
    sxy = sum(wi * (x - mx) * (y - my) for wi, (x, y, _) in zip(w, pts))
    slope = sxy / sxx
    stderr = math.sqrt(1.0 / sxx)
    return slope, stderr
