"""Samplers for Poisson random measures on the cone, restricted to windows.

Replicates are drawn in fixed-size blocks; block ``k`` of a run uses its own
Philox stream derived from ``SeedSequence(seed, spawn_key=(..., k))``, so any
replicate is reproducible from the seed and its index alone.
"""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from radoncone.intensity import BaseMeasure, GammaIntensity, LevyIntensity
from radoncone.measures import Box, FiniteDiscreteMeasure, Window
from radoncone.quadrature import composite_nodes, panel_edges

BLOCK_SIZE = 4096
TABLE_POINTS = 4096
CDF_TOL = 1e-10


def seed_sequence(seed, *key) -> np.random.SeedSequence:
    """Child seed sequence for a named or numbered sub-stream of ``seed``."""
    parts = []
    for k in key:
        parts.append(zlib.crc32(k.encode()) if isinstance(k, str) else int(k))
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + tuple(parts))
    return np.random.SeedSequence(int(seed), spawn_key=tuple(parts))


def generator(seed, *key) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed_sequence(seed, *key)))


def blocks(n: int, block_size: int = BLOCK_SIZE) -> Iterator[tuple]:
    """``(block_index, start, stop)`` covering ``range(n)``."""
    for k, start in enumerate(range(0, n, block_size)):
        yield k, start, min(n, start + block_size)


class WeightSampler:
    """Inverse-CDF sampler for ``nu`` restricted to ``[a, b]`` and normalized.

    A 4096-point log-spaced table of the cumulative mass locates the cell of
    each uniform; Newton steps on the exact in-cell CDF (Gauss-Legendre on the
    cell) then refine the quantile until the CDF error is below ``1e-10``.
    """

    ORDER = 10

    def __init__(self, nu: LevyIntensity, a: float, b: float, points: int = TABLE_POINTS):
        a, b = nu.clip_range(a, b)
        if not (0 < a < b < math.inf):
            raise ValueError(f"weight range [{a}, {b}] must be finite and positive")
        self.nu, self.a, self.b = nu, a, b
        grid = np.geomspace(a, b, points)
        extra = [p for p in nu.breakpoints if a < p < b]
        if extra:
            grid = np.unique(np.concatenate([grid, extra]))
        self.grid = grid
        cell = self._cell_mass(grid[:-1], grid[1:])
        self.cdf = np.concatenate([[0.0], np.cumsum(cell)])
        self.total = float(self.cdf[-1])
        if not self.total > 0:
            raise ValueError("intensity has no mass on the window")

    def _cell_mass(self, lo, hi):
        gx, gw = composite_nodes(np.array([-1.0, 1.0]), self.ORDER)
        lo = np.asarray(lo)[..., None]
        half = (np.asarray(hi)[..., None] - lo) / 2.0
        nodes = lo + half * (gx + 1.0)
        return np.sum(half * gw * self.nu.density(nodes), axis=-1)

    def ppf(self, u) -> np.ndarray:
        """Quantiles of the normalized restricted intensity."""
        u = np.asarray(u, dtype=float)
        target = u * self.total
        k = np.clip(np.searchsorted(self.cdf, target, side="right") - 1, 0, len(self.grid) - 2)
        lo, hi = self.grid[k], self.grid[k + 1]
        base = self.cdf[k]
        need = target - base
        width = self.cdf[k + 1] - base
        frac = np.where(width > 0, need / np.where(width > 0, width, 1.0), 0.0)
        s = lo + frac * (hi - lo)
        for _ in range(8):
            err = self._cell_mass(lo, s) - need
            dens = self.nu.density(s)
            step = np.where(dens > 0, err / np.where(dens > 0, dens, 1.0), 0.0)
            s = np.clip(s - step, lo, hi)
            if np.all(np.abs(err) <= CDF_TOL * self.total):
                break
        return s

    def cdf_at(self, s) -> np.ndarray:
        s = np.clip(np.asarray(s, dtype=float), self.a, self.b)
        k = np.clip(np.searchsorted(self.grid, s, side="right") - 1, 0, len(self.grid) - 2)
        return (self.cdf[k] + self._cell_mass(self.grid[k], s)) / self.total

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.ppf(rng.random(n))


@dataclass(frozen=True)
class MeasureBatch:
    """Many finite measures stored contiguously.

    ``weights[offsets[r]:offsets[r+1]]`` and the matching rows of ``positions``
    are replicate ``r``; ``owner[i]`` is the replicate of atom ``i``.
    """

    weights: np.ndarray
    positions: np.ndarray
    offsets: np.ndarray

    @property
    def size(self) -> int:
        return self.offsets.shape[0] - 1

    def __len__(self) -> int:
        return self.size

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    @property
    def owner(self) -> np.ndarray:
        return np.repeat(np.arange(self.size), self.counts)

    def per_replicate(self, atom_values) -> np.ndarray:
        """Sum per replicate of a per-atom quantity."""
        return np.bincount(self.owner, weights=np.asarray(atom_values, dtype=float), minlength=self.size)

    def pairing(self, f) -> np.ndarray:
        """``<eta_r, f>`` for every replicate."""
        if not self.weights.size:
            return np.zeros(self.size)
        return self.per_replicate(self.weights * f(self.positions))

    def mass(self, region: Box) -> np.ndarray:
        if not self.weights.size:
            return np.zeros(self.size)
        return self.per_replicate(self.weights * region.contains(self.positions))

    def __getitem__(self, r: int) -> FiniteDiscreteMeasure:
        i, j = self.offsets[r], self.offsets[r + 1]
        return FiniteDiscreteMeasure(self.weights[i:j], self.positions[i:j], dim=self.positions.shape[1])

    def __iter__(self) -> Iterator[FiniteDiscreteMeasure]:
        return (self[r] for r in range(self.size))

    def select_atoms(self, keep: np.ndarray) -> "MeasureBatch":
        """Batch of the same replicates with only the flagged atoms."""
        counts = np.bincount(self.owner[keep], minlength=self.size)
        return MeasureBatch(self.weights[keep], self.positions[keep], np.concatenate([[0], np.cumsum(counts)]))

    def project(self, w: Window) -> "MeasureBatch":
        if not self.weights.size:
            return self
        return self.select_atoms(w.contains(self.weights, self.positions))


class PoissonWindowSampler:
    """Draws of the Poisson cone measure for ``nu (x) sigma`` observed in a window.

    The atom count is Poisson with mean ``sigma(region) * nu([a, b])``,
    positions are i.i.d. uniform on the region (``sigma`` has constant density)
    and weights i.i.d. from ``nu`` restricted to ``[a, b]``.  The law sampled is
    itself the Poisson measure with the restricted intensity, which the
    verifiers use on the other side of each identity (see :attr:`nu_range`,
    :attr:`sigma_eff`).
    """

    def __init__(self, nu: LevyIntensity, sigma: BaseMeasure, window: Window):
        self.nu, self.sigma, self.window = nu, sigma, window
        eff = sigma.box.intersect(window.region)
        self.region = eff if eff is not None else window.region
        self.sigma_eff = BaseMeasure(self.region, sigma.density if eff is not None else 0.0)
        self.nu_range = nu.clip_range(window.a, window.b)
        self.nu_mass = nu.mass(*self.nu_range) if self.nu_range[1] > self.nu_range[0] else 0.0
        self.mean_count = self.sigma_eff(self.region) * self.nu_mass
        self._weights = WeightSampler(nu, *self.nu_range) if self.mean_count > 0 else None

    @property
    def dim(self) -> int:
        return self.sigma.dim

    def s_moment(self, n: int) -> float:
        """``integral s**n nu(ds)`` over the sampled weight range."""
        return self.nu.moment(n, *self.nu_range)

    def expected_mass(self) -> float:
        return self.sigma_eff(self.region) * self.s_moment(1)

    def sample_batch(self, n: int, rng: np.random.Generator) -> MeasureBatch:
        """``n`` independent draws; an empty window gives zero measures."""
        d = self.dim
        if self.mean_count <= 0:
            return MeasureBatch(np.zeros(0), np.zeros((0, d)), np.zeros(n + 1, dtype=np.int64))
        counts = rng.poisson(self.mean_count, size=n)
        total = int(counts.sum())
        w = self._weights.sample(total, rng)
        x = self.sigma.sample(self.region, total, rng)
        offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        return MeasureBatch(w, x, offsets)

    def sample(self, rng: np.random.Generator) -> FiniteDiscreteMeasure:
        return self.sample_batch(1, rng)[0]

    def batches(self, n: int, seed, *key, block_size: int = BLOCK_SIZE) -> Iterator[tuple]:
        """``(start, stop, batch)`` blocks covering ``n`` replicates deterministically."""
        for k, start, stop in blocks(n, block_size):
            yield start, stop, self.sample_batch(stop - start, generator(seed, *key, k))

    def describe(self) -> dict:
        return {
            "nu": self.nu.to_json(),
            "sigma": self.sigma.to_json(),
            "window": self.window.to_json(),
            "mean_count": self.mean_count,
        }


class GammaConeSampler(PoissonWindowSampler):
    """Gamma measure on ``region`` with weights truncated to ``[eps, B]``.

    ``eps = tol / (theta * sigma(region))`` bounds the expected discarded small
    mass by ``tol``.  ``B`` is chosen so that both the expected number of atoms
    above it and ``sigma(region) * integral_B^inf s**2 nu(ds)`` are below
    ``tol / 10``; for ``B >= 1`` the second condition also bounds the
    discarded mass and first moment.
    """

    def __init__(self, theta: float, sigma: BaseMeasure, region: Box, tol: float):
        if not tol > 0:
            raise ValueError("tol must be positive")
        nu = GammaIntensity(theta)
        sig_l = sigma(region)
        if sig_l <= 0:
            raise ValueError("sigma(region) must be positive")
        self.theta, self.tol = float(theta), float(tol)
        self.eps = tol / (theta * sig_l)
        upper = max(nu.upper_cutoff(tol / (10.0 * sig_l), lo=max(1.0, 2 * self.eps), power=p) for p in (0, 2))
        super().__init__(nu, sigma, Window(region, self.eps, upper))
        self.upper = upper

    def describe(self) -> dict:
        out = super().describe()
        out.update({"theta": self.theta, "tol": self.tol, "eps": self.eps, "upper": self.upper})
        return out


def sample_poisson_window(nu, sigma, w: Window, rng) -> FiniteDiscreteMeasure:
    return PoissonWindowSampler(nu, sigma, w).sample(rng)


def sample_gamma_cone(theta, sigma, region: Box, tol: float, rng) -> tuple:
    """One truncated Gamma-measure draw and the truncation level used."""
    sampler = GammaConeSampler(theta, sigma, region, tol)
    return sampler.sample(rng), sampler.eps


def concat_values(parts) -> np.ndarray:
    return np.concatenate(parts) if parts else np.zeros(0)
