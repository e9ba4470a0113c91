"""Metropolis sampling of the finite-N Riesz gas on [-1, 1].

Gibbs weight exp(-beta sum_{j<k} Phi_s(x_j, x_k)); no background term.
Single-particle moves sweep the particles in index order with a uniform
proposal reflected at the walls. The pair-potential matrix is cached so a
move costs one row of N potential evaluations.

Random numbers come from per-chain Philox streams spawned from one
SeedSequence, so chain c sees the same stream whatever the number of chains
or worker threads.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from .covariance import ModelParameters
from .errors import RieszDomainError
from .expansion import LinearStatistic

__all__ = [
    "McResult",
    "DensityHistogram",
    "potential",
    "total_energy",
    "run_chain",
    "run_parallel",
    "density_histogram",
    "finite_n_trend",
    "worker_count",
]

BLOCK_SWEEPS = 1000
TUNE_SWEEPS = 100
TARGET_ACCEPTANCE = 0.35
REFRESH_SWEEPS = 1000
DEFAULT_BATCHES = 25
MIN_BATCHES = 20

# potential kinds understood by the compiled kernel
_LOG, _POS, _NEG, _INV_SQRT, _NEG_SQRT, _NEG_LINEAR = range(6)


def _kind(s: float) -> int:
    if s == 0.0:
        return _LOG
    if s == 0.5:
        return _INV_SQRT
    if s == -0.5:
        return _NEG_SQRT
    if s == -1.0:
        return _NEG_LINEAR
    return _POS if s > 0 else _NEG


def potential(s: float, x: float, y: float) -> float:
    """Phi_s(x, y): |x-y|^{-s} for s > 0, -log|x-y| at s = 0, -|x-y|^{-s} for s < 0."""
    if x == y:
        raise RieszDomainError("pair potential undefined at coincident points")
    d = abs(x - y)
    if s > 0:
        return d ** (-s)
    if s == 0:
        return -math.log(d)
    return -(d ** (-s))


@njit(cache=True, fastmath=True, inline="always")
def _phi(d, s, kind):
    if kind == _INV_SQRT:
        return 1.0 / math.sqrt(d)
    if kind == _NEG_SQRT:
        return -math.sqrt(d)
    if kind == _NEG_LINEAR:
        return -d
    if kind == _LOG:
        return -math.log(d)
    if kind == _POS:
        return d ** (-s)
    return -(d ** (-s))


@njit(cache=True)
def _pair_matrix(x, s, kind):
    n = x.shape[0]
    P = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = abs(x[i] - x[j])
            v = _phi(d, s, kind) if d > 0.0 else np.inf
            P[i, j] = v
            P[j, i] = v
    return P


@njit(cache=True, nogil=True, fastmath=True)
def _sweeps(x, P, e, s, kind, beta, width, rnd, out):
    """Run rnd.shape[0] sweeps in place; store positions after each sweep in ``out``.

    Returns (accepted moves, accumulated energy change).
    """
    n = x.shape[0]
    tmp = np.empty(n)
    accepted = 0
    de_total = 0.0
    for b in range(rnd.shape[0]):
        for i in range(n):
            xn = x[i] + width * (2.0 * rnd[b, i, 0] - 1.0)
            if xn > 1.0:
                xn = 2.0 - xn
            elif xn < -1.0:
                xn = -2.0 - xn
            de = 0.0
            for j in range(n):
                d = abs(xn - x[j])
                if d > 0.0:
                    tmp[j] = _phi(d, s, kind)
                else:
                    tmp[j] = np.inf
            tmp[i] = 0.0
            for j in range(n):
                de += tmp[j]
            de -= e[i]
            if de <= 0.0 or rnd[b, i, 1] < math.exp(-beta * de):
                for j in range(n):
                    e[j] += tmp[j] - P[i, j]
                    P[i, j] = tmp[j]
                    P[j, i] = tmp[j]
                e[i] += de
                x[i] = xn
                accepted += 1
                de_total += de
        if out.shape[0] > 0:
            out[b, :] = x
    return accepted, de_total


def total_energy(x: np.ndarray, s: float) -> float:
    """Full O(N^2) re-evaluation of sum_{j<k} Phi_s."""
    P = _pair_matrix(np.asarray(x, dtype=float), float(s), _kind(s))
    return float(np.triu(P, 1).sum())


@dataclass
class DensityHistogram:
    edges: np.ndarray
    density: np.ndarray
    std_error: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    def rows(self):
        return [
            {"bin_center": float(c), "density": float(d), "std_error": float(e)}
            for c, d, e in zip(self.centers, self.density, self.std_error)
        ]


@dataclass
class McResult:
    mean_f: float
    mean_g: float
    covariance: float
    standard_error: float
    acceptance_rate: float
    sweeps: int
    chains: int
    seed: int
    n_particles: int
    step_width: float
    flagged: bool = False
    energy_drift: float = 0.0
    histogram: Optional[DensityHistogram] = None
    batch_values: np.ndarray = field(default=None, repr=False)

    def as_row(self) -> dict:
        return {
            "value": self.covariance,
            "method": "MonteCarlo",
            "standard_error": self.standard_error,
            "mean_f": self.mean_f,
            "mean_g": self.mean_g,
            "acceptance_rate": self.acceptance_rate,
            "sweeps": self.sweeps,
            "chains": self.chains,
            "seed": self.seed,
            "n_particles": self.n_particles,
            "step_width": self.step_width,
            "flagged": self.flagged,
        }


@dataclass
class _ChainOutput:
    F: np.ndarray
    G: np.ndarray
    hist_batches: Optional[np.ndarray]
    acceptance: float
    width: float
    drift: float


def worker_count(chains: int) -> int:
    """Threads to use: RIESZ_THREADS if set, otherwise the CPU count, never more than ``chains``."""
    env = os.environ.get("RIESZ_THREADS")
    if env:
        try:
            cap = max(1, int(env))
        except ValueError as exc:
            raise RieszDomainError(f"RIESZ_THREADS must be an integer, got {env!r}") from exc
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, chains))


def _check_args(params, n_particles, sweeps, burn_in, n_batches):
    if n_particles < 2:
        raise RieszDomainError("need at least two particles")
    if not sweeps > burn_in >= 0:
        raise RieszDomainError("need sweeps > burn_in >= 0")
    if n_batches < MIN_BATCHES:
        raise RieszDomainError(f"batch means need at least {MIN_BATCHES} batches")
    if sweeps - burn_in < n_batches:
        raise RieszDomainError("fewer measured sweeps than batches")
    if params.s <= -2.0 or params.s >= 1.0:
        raise RieszDomainError(f"sampler supports -2 < s < 1, got {params.s}")


def _run_stream(
    seq: np.random.SeedSequence,
    params: ModelParameters,
    n_particles: int,
    sweeps: int,
    burn_in: int,
    step_width: float,
    f: LinearStatistic,
    g: LinearStatistic,
    edges: Optional[np.ndarray],
    n_batches: int,
) -> _ChainOutput:
    rng = np.random.Generator(np.random.Philox(seq))
    s, beta = float(params.s), float(params.beta)
    kind = _kind(s)
    n = n_particles
    x = np.linspace(-1.0, 1.0, n + 2)[1:-1].copy()
    P = _pair_matrix(x, s, kind)
    e = P.sum(axis=1)
    width = float(step_width)
    empty = np.empty((0, n))

    done = 0
    last_rate = 0.0
    while done < burn_in:
        k = min(TUNE_SWEEPS, burn_in - done)
        acc, _ = _sweeps(x, P, e, s, kind, beta, width, rng.random((k, n, 2)), empty)
        last_rate = acc / (k * n)
        width = float(np.clip(width * math.exp(last_rate - TARGET_ACCEPTANCE), 1e-6, 2.0))
        done += k

    measured = sweeps - burn_in
    F = np.empty(measured)
    G = np.empty(measured)
    batch_len = measured // n_batches
    hist = None if edges is None else np.zeros((n_batches, edges.size - 1))
    accepted = 0
    drift = 0.0
    energy = float(np.triu(P, 1).sum())
    pos = 0
    since_refresh = 0
    while pos < measured:
        k = min(BLOCK_SWEEPS, measured - pos)
        out = np.empty((k, n))
        acc, de = _sweeps(x, P, e, s, kind, beta, width, rng.random((k, n, 2)), out)
        accepted += acc
        energy += de
        F[pos : pos + k] = f(out).sum(axis=1)
        G[pos : pos + k] = g(out).sum(axis=1)
        if hist is not None:
            batch_idx = np.minimum((pos + np.arange(k)) // batch_len, n_batches - 1)
            for b in np.unique(batch_idx):
                rows = out[batch_idx == b]
                hist[b] += np.histogram(rows, bins=edges)[0]
        pos += k
        since_refresh += k
        if since_refresh >= REFRESH_SWEEPS:
            P = _pair_matrix(x, s, kind)
            e = P.sum(axis=1)
            exact = float(np.triu(P, 1).sum())
            if np.isfinite(exact):
                drift = max(drift, abs(energy - exact) / max(abs(exact), 1e-300))
            energy = exact
            since_refresh = 0
    return _ChainOutput(F, G, hist, accepted / (measured * n), width, drift)


def _batch_covariances(F, G, n_batches):
    """Per-batch means of (F - Fbar)(G - Gbar), Fbar and Gbar being chain means."""
    m = F.size
    batch_len = m // n_batches
    dF = F - F.mean()
    dG = G - G.mean()
    prod = dF * dG
    vals = np.empty(n_batches)
    for b in range(n_batches):
        lo = b * batch_len
        hi = m if b == n_batches - 1 else lo + batch_len
        vals[b] = prod[lo:hi].mean()
    return vals


def _run(params, n_particles, sweeps, burn_in, step_width, seed, f, g, chains, bins, n_batches, trace):
    _check_args(params, n_particles, sweeps, burn_in, n_batches)
    if chains < 1:
        raise RieszDomainError("need at least one chain")
    if bins is not None and bins < 10:
        raise RieszDomainError("histogram needs at least 10 bins")
    f = f if f is not None else LinearStatistic.power(1)
    g = g if g is not None else f
    edges = None if bins is None else np.linspace(-1.0, 1.0, bins + 1)
    seqs = np.random.SeedSequence(int(seed)).spawn(chains)
    args = (params, n_particles, sweeps, burn_in, step_width, f, g, edges, n_batches)
    workers = worker_count(chains)
    if workers == 1:
        outs = [_run_stream(q, *args) for q in seqs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(lambda q: _run_stream(q, *args), seqs))

    if trace is not None:
        _write_traces(trace, outs, burn_in)

    batches = np.concatenate([_batch_covariances(o.F, o.G, n_batches) for o in outs])
    cov = float(batches.mean())
    if np.all(batches == batches[0]):
        se = 0.0
    else:
        se = float(batches.std(ddof=1) / math.sqrt(batches.size))
    acc = float(np.mean([o.acceptance for o in outs]))
    hist = None
    if edges is not None:
        width = edges[1] - edges[0]
        per_batch = np.concatenate([o.hist_batches for o in outs])
        counts = per_batch.sum(axis=1, keepdims=True)
        dens = per_batch / (counts * width)
        total = per_batch.sum(axis=0)
        density = total / (total.sum() * width)
        err = dens.std(axis=0, ddof=1) / math.sqrt(dens.shape[0])
        hist = DensityHistogram(edges, density, err)
    return McResult(
        mean_f=float(np.mean([o.F.mean() for o in outs])),
        mean_g=float(np.mean([o.G.mean() for o in outs])),
        covariance=cov,
        standard_error=se,
        acceptance_rate=acc,
        sweeps=sweeps,
        chains=chains,
        seed=int(seed),
        n_particles=n_particles,
        step_width=float(np.mean([o.width for o in outs])),
        flagged=not (0.1 < acc < 0.7),
        energy_drift=max(o.drift for o in outs),
        histogram=hist,
        batch_values=batches,
    )


def _write_traces(path, outs, burn_in):
    path = os.fspath(path)
    root, ext = os.path.splitext(path)
    for c, o in enumerate(outs):
        target = path if len(outs) == 1 else f"{root}_chain{c}{ext or '.csv'}"
        with open(target, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sweep", "F", "G"])
            for i, (a, b) in enumerate(zip(o.F, o.G)):
                w.writerow([burn_in + i + 1, repr(float(a)), repr(float(b))])


def run_chain(
    params: ModelParameters,
    n_particles: int,
    sweeps: int,
    burn_in: int,
    step_width: float,
    seed: int,
    f: Optional[LinearStatistic] = None,
    g: Optional[LinearStatistic] = None,
    *,
    bins: Optional[int] = None,
    n_batches: int = DEFAULT_BATCHES,
    trace=None,
) -> McResult:
    """One Metropolis chain; ``sweeps`` counts burn-in sweeps too.

    The proposal width is tuned towards 35% acceptance during burn-in and
    frozen afterwards. F = sum f(x_j) and G = sum g(x_j) are recorded after
    every measured sweep.
    """
    return _run(params, n_particles, sweeps, burn_in, step_width, seed, f, g, 1, bins, n_batches, trace)


def run_parallel(
    chains: int,
    params: ModelParameters,
    n_particles: int,
    sweeps: int,
    burn_in: int,
    step_width: float,
    seed: int,
    f: Optional[LinearStatistic] = None,
    g: Optional[LinearStatistic] = None,
    *,
    bins: Optional[int] = None,
    n_batches: int = DEFAULT_BATCHES,
    trace=None,
) -> McResult:
    """Independent chains pooled by batch means across all chains.

    The standard error is the spread of every chain's batch estimates, so
    disagreement between chains enters it directly.
    """
    return _run(params, n_particles, sweeps, burn_in, step_width, seed, f, g, chains, bins, n_batches, trace)


def density_histogram(
    params: ModelParameters,
    n_particles: int,
    sweeps: int,
    burn_in: int,
    bins: int,
    seed: int,
    *,
    chains: int = 1,
    step_width: float = 0.1,
    n_batches: int = DEFAULT_BATCHES,
) -> DensityHistogram:
    """Normalised one-body density histogram with batch-means errors."""
    res = _run(params, n_particles, sweeps, burn_in, step_width, seed, None, None, chains, bins, n_batches, None)
    return res.histogram


def finite_n_trend(
    params: ModelParameters,
    sizes,
    sweeps: int,
    burn_in: int,
    seed: int,
    f: Optional[LinearStatistic] = None,
    g: Optional[LinearStatistic] = None,
    *,
    chains: int = 1,
    step_width: float = 0.05,
    reference: Optional[float] = None,
) -> list[dict]:
    """Covariance estimates across particle numbers, one row per N.

    With ``reference`` (typically the limiting value) each row also carries
    the deviation in units of its standard error. Nothing is asserted about
    the rate; the rows are for inspection.
    """
    rows = []
    for n in sizes:
        res = run_parallel(chains, params, int(n), sweeps, burn_in, step_width, seed, f, g)
        row = {"n_particles": int(n), "value": res.covariance, "standard_error": res.standard_error}
        if reference is not None:
            row["deviation"] = res.covariance - reference
            row["z"] = row["deviation"] / res.standard_error if res.standard_error > 0 else float("inf")
        rows.append(row)
    return rows
