"""Batched evaluation of spectrally translated fields for xi-quadratures.

Integrals of the form sum_i w_i F(f(x + xi_i), f(x)) with F a polynomial of
degree d in the field values are formed on the smallest physical grid that
keeps the result free of aliasing inside the output band. For a field with
bandwidth K the exact integrand lives in |k_i| <= dK; keeping R = min(n/2-1, dK)
modes requires m > dK + R sample points per axis.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import scipy.fft as sfft

from .field import SpectralField, bandwidth, check_same_grid, fft_workers, to_physical, to_spectral


class ShiftEngine:
    def __init__(self, fields: Sequence[SpectralField], degree: int, batch: int = 32):
        check_same_grid(*fields)
        self.grid = fields[0].grid
        n = self.grid.n
        stack = np.concatenate([f.coeffs for f in fields], axis=0)
        self.K = max(1, min(bandwidth(stack), n // 2 - 1))
        self.R = min(n // 2 - 1, degree * self.K)
        m = degree * self.K + self.R + 1
        self.m = m + (m % 2)
        self.batch = batch
        m = self.m
        base = to_physical(stack, m, band=self.K)
        self.base = base
        self.half = sfft.rfftn(base, axes=(-3, -2, -1), norm="forward", workers=fft_workers())
        k = np.fft.fftfreq(m, 1.0 / m)
        self._k = k
        self._kz = k[: m // 2 + 1]

    def shifted(self, xis: np.ndarray) -> np.ndarray:
        """Samples of x -> f(x + xi) for a batch of shifts, shape (B, C, m, m, m)."""
        xis = np.atleast_2d(np.asarray(xis, dtype=float))
        px = np.exp(1j * np.outer(xis[:, 0], self._k))
        py = np.exp(1j * np.outer(xis[:, 1], self._k))
        pz = np.exp(1j * np.outer(xis[:, 2], self._kz))
        phase = px[:, :, None, None] * py[:, None, :, None] * pz[:, None, None, :]
        spec = self.half[None] * phase[:, None]
        m = self.m
        return sfft.irfftn(spec, s=(m, m, m), axes=(-3, -2, -1), norm="forward", workers=fft_workers())

    def batches(self, xis: np.ndarray, weights: np.ndarray):
        """Yield (shifted samples, weights) in fixed-order chunks."""
        for start in range(0, len(xis), self.batch):
            stop = start + self.batch
            yield self.shifted(xis[start:stop]), weights[start:stop]

    def finish(self, samples: np.ndarray, time=None) -> SpectralField:
        """Truncate accumulated samples back to an n-grid field."""
        coeffs = to_spectral(samples, self.grid.n, band=self.R)
        return SpectralField(self.grid, coeffs, time)
