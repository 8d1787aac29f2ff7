"""Littlewood-Paley window pairs and the phi-transform on the periodic unit torus.

Frequencies are angular: a torus mode ``exp(2 pi i nu x)`` sits at
``xi = 2 pi nu``, so level ``k`` sees ``Fphi(2 pi |nu| / 2**k)``.  With this
convention the level-``k`` band ``|nu| <= 2**k / pi`` is narrower than the
sampling period ``2**k`` of the grid ``2**-k m``, and analysis samples are
alias free.

Coefficients live in a ``CoeffField`` over the window ``[-1/2, 1/2)**n``;
sampling positions ``2**-k m`` wrap periodically.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dyadic import IndexWindow
from .seqspace import CoeffField, SpaceSpec, norm

# a window pair must be bounded below on this annulus
INNER, OUTER = 3 / 5, 5 / 3


def _bump(s: np.ndarray, width: float) -> np.ndarray:
    """``exp(-1/(1 - (s/width)**2))`` for ``|s| < width``, else 0."""
    z = np.asarray(s, dtype=float) / width
    out = np.zeros_like(z)
    inside = np.abs(z) < 1
    out[inside] = np.exp(-1.0 / (1.0 - z[inside] ** 2))
    return out


@dataclass(frozen=True)
class WindowPair:
    """Radial profiles ``Fphi`` and ``Fpsi`` in ``s = log2 |xi|``.

    ``Fphi`` is a smooth bump of half-width ``width`` (``<= 1``, ``> 1/2``)
    in ``s``; ``Fpsi`` divides it by the dyadic sum of ``|Fphi|**2`` so that
    ``sum_k conj(Fphi(2**-k xi)) Fpsi(2**-k xi) = 1`` for every ``xi != 0``.
    """

    width: float = 1.0
    lower_bound: float = 0.0

    def phi_hat(self, xi) -> np.ndarray:
        xi = np.abs(np.asarray(xi, dtype=float))
        out = np.zeros_like(xi)
        pos = xi > 0
        out[pos] = _bump(np.log2(xi[pos]), self.width)
        return out

    def _dyadic_energy(self, s: np.ndarray) -> np.ndarray:
        base = np.floor(s)
        total = np.zeros_like(s)
        for j in (-1, 0, 1, 2):
            total += _bump(s - (base + j), self.width) ** 2
        return total

    def psi_hat(self, xi) -> np.ndarray:
        xi = np.abs(np.asarray(xi, dtype=float))
        out = np.zeros_like(xi)
        pos = xi > 0
        s = np.log2(xi[pos])
        phi = _bump(s, self.width)
        den = self._dyadic_energy(s)
        nz = phi > 0
        vals = np.zeros_like(s)
        vals[nz] = phi[nz] / den[nz]
        out[pos] = vals
        return out

    def to_dict(self) -> dict:
        return {"profile": "bump", "width": self.width, "lower_bound": self.lower_bound}


def build_windows(profile: str = "bump", width: float | None = None) -> WindowPair:
    """Construct and verify an admissible pair.

    ``profile`` is ``"bump"`` (half-width 1 in ``log2 |xi|``) or ``"narrow"``
    (half-width 0.85); ``width`` overrides either.
    """
    widths = {"bump": 1.0, "narrow": 0.85}
    if width is None:
        if profile not in widths:
            raise ValueError(f"unknown window profile {profile!r}")
        width = widths[profile]
    if not 0.5 < width <= 1.0:
        raise ValueError("half-width must lie in (1/2, 1] so that dyadic dilates cover every frequency")
    wp = WindowPair(width)
    xi = np.linspace(INNER, OUTER, 2001)
    c = float(min(wp.phi_hat(xi).min(), wp.psi_hat(xi).min()))
    if c <= 0:
        raise ValueError("window is not bounded below on the annulus")
    # the dyadic energy must be positive everywhere on a period of log2|xi|
    s = np.linspace(0.0, 1.0, 4001)
    if wp._dyadic_energy(s).min() <= 0:
        raise ValueError("dyadic energy vanishes")
    return WindowPair(width, c)


# ---------------------------------------------------------------------------
# periodic signals


def _freqs(N: int, n: int) -> np.ndarray:
    """``|nu|`` on the FFT lattice, shape ``(N,)*n``."""
    nu = np.fft.fftfreq(N, d=1.0 / N)
    grids = np.meshgrid(*([nu] * n), indexing="ij")
    return np.sqrt(sum(g ** 2 for g in grids))


@dataclass
class PeriodicSignal:
    """Samples ``f(j/N)`` on the unit torus, ``N = 2**J`` per axis."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        shape = self.values.shape
        if len(shape) not in (1, 2) or len(set(shape)) != 1:
            raise ValueError("signals are 1-d or square 2-d arrays")
        N = shape[0]
        if N < 8 or N & (N - 1):
            raise ValueError("N must be a power of two, at least 8")

    @property
    def n(self) -> int:
        return self.values.ndim

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def J(self) -> int:
        return self.N.bit_length() - 1

    @property
    def levels(self) -> range:
        return resolvable_levels(self.N)

    def spectrum(self) -> np.ndarray:
        """Torus Fourier coefficients ``hat f(nu)`` (FFT order)."""
        return np.fft.fftn(self.values) / self.N ** self.n

    @classmethod
    def from_spectrum(cls, spec: np.ndarray) -> "PeriodicSignal":
        return cls(np.fft.ifftn(spec) * spec.shape[0] ** spec.ndim)

    def band(self) -> tuple[float, float]:
        """Smallest and largest ``|nu|`` carrying energy."""
        spec = np.abs(self.spectrum())
        nu = _freqs(self.N, self.n)
        live = nu[spec > 1e-14 * max(spec.max(), 1e-300)]
        if live.size == 0:
            return (0.0, 0.0)
        return float(live.min()), float(live.max())

    def is_band_limited(self) -> bool:
        if not np.any(self.values):
            return True
        lo, hi = self.band()
        b_lo, b_hi = band_limits(self.N)
        return lo >= b_lo and hi <= b_hi

    def l2_norm(self) -> float:
        return float(np.sqrt(np.mean(np.abs(self.values) ** 2)))

    def save(self, stem: str | Path) -> None:
        """Write ``stem.bin`` (little-endian complex64) and the ``stem.json`` header."""
        stem = Path(stem)
        self.values.astype("<c8").tofile(stem.with_suffix(".bin"))
        header = {"n": self.n, "N": self.N, "band": list(self.band())}
        stem.with_suffix(".json").write_text(json.dumps(header, sort_keys=True))

    @classmethod
    def load(cls, stem: str | Path) -> "PeriodicSignal":
        stem = Path(stem)
        header = json.loads(stem.with_suffix(".json").read_text())
        raw = np.fromfile(stem.with_suffix(".bin"), dtype="<c8")
        return cls(raw.astype(complex).reshape((header["N"],) * header["n"]))


def resolvable_levels(N: int) -> range:
    J = N.bit_length() - 1
    return range(1, J - 1)


def band_limits(N: int) -> tuple[float, float]:
    """``|nu|`` range on which the resolvable levels form a partition of unity."""
    return 1.0, N / (8 * math.pi)


def random_band_limited(n: int, N: int, rng: np.random.Generator, decay: float = 0.5, band=None) -> PeriodicSignal:
    """Complex normal spectrum times ``|nu|**-decay`` on the band, zero elsewhere."""
    lo, hi = band_limits(N) if band is None else band
    nu = _freqs(N, n)
    mask = (nu >= lo) & (nu <= hi)
    spec = np.zeros((N,) * n, dtype=complex)
    z = rng.standard_normal(mask.sum()) + 1j * rng.standard_normal(mask.sum())
    spec[mask] = z * nu[mask] ** (-decay)
    return PeriodicSignal.from_spectrum(spec)


# ---------------------------------------------------------------------------
# analysis and synthesis


def coefficient_window(n: int, levels: range) -> IndexWindow:
    return IndexWindow(n, 0.5, levels.start, levels.stop - 1, 4)


def _check_levels(N: int, k_range) -> range:
    levels = resolvable_levels(N) if k_range is None else range(min(k_range), max(k_range) + 1)
    full = resolvable_levels(N)
    if levels.start < full.start or levels.stop > full.stop:
        raise ValueError(f"levels {list(levels)} outside the resolvable range {list(full)}")
    return levels


def analyze(f: PeriodicSignal, wp: WindowPair, k_range=None) -> CoeffField:
    """``lambda_{k,m} = <f, phi_{k,m}> = 2**(-kn/2) (f * conj-reflected phi_k)(2**-k m)``."""
    n, N = f.n, f.N
    levels = _check_levels(N, k_range)
    window = coefficient_window(n, levels)
    spec = f.spectrum()
    nu = _freqs(N, n)
    data = []
    for k in levels:
        filt = spec * np.conj(wp.phi_hat(2 * np.pi * nu / 2.0 ** k))
        g = np.fft.ifftn(filt) * N ** n
        step = N >> k
        samples = g[(slice(None, None, step),) * n]
        # reorder so that array index i corresponds to position m = i - 2**(k-1)
        samples = np.roll(samples, 2 ** (k - 1), axis=tuple(range(n)))
        data.append(2.0 ** (-k * n / 2) * samples)
    return CoeffField(window, data)


def synthesize(lam: CoeffField, wp: WindowPair, N: int) -> PeriodicSignal:
    """``sum_k sum_m lambda_{k,m} psi_{k,m}`` evaluated on the ``N``-point torus grid."""
    window = lam.window
    n = window.n
    _check_levels(N, window.levels)
    nu = _freqs(N, n)
    out = np.zeros((N,) * n, dtype=complex)
    for k, a in zip(window.levels, lam.data):
        a = np.roll(a, -(2 ** (k - 1)), axis=tuple(range(n)))  # index i <-> m = i
        big = np.fft.fftn(a)  # sum_m lambda e^{-2 pi i nu m / 2^k}, periodic in nu mod 2^k
        tiled = np.tile(big, (N >> k,) * n)
        out += 2.0 ** (-k * n / 2) * wp.psi_hat(2 * np.pi * nu / 2.0 ** k) * tiled
    return PeriodicSignal.from_spectrum(out)


def partition_error(wp: WindowPair, N: int, n: int = 1, levels=None) -> float:
    """Max deviation of ``sum_k conj(Fphi_k) Fpsi_k`` from 1 on the band lattice."""
    levels = _check_levels(N, levels)
    nu = _freqs(N, n)
    lo, hi = band_limits(N)
    mask = (nu >= lo) & (nu <= hi)
    total = np.zeros(mask.sum())
    for k in levels:
        xi = 2 * np.pi * nu[mask] / 2.0 ** k
        total += np.conj(wp.phi_hat(xi)) * wp.psi_hat(xi)
    return float(np.max(np.abs(total - 1.0)))


def round_trip_error(f: PeriodicSignal, wp: WindowPair) -> float:
    back = synthesize(analyze(f, wp), wp, f.N)
    return float(np.linalg.norm(back.values - f.values) / np.linalg.norm(f.values))


def window_independence_ratio(f: PeriodicSignal, wpA: WindowPair, wpB: WindowPair, spec: SpaceSpec) -> float:
    den = norm(analyze(f, wpB), spec)
    if den == 0:
        raise ZeroDivisionError("zero sequence norm")
    return norm(analyze(f, wpA), spec) / den


def function_norm(f: PeriodicSignal, wp: WindowPair, s: float, p: float, q: float) -> float:
    """Discrete ``F^s_{p,q}`` norm: ``||(sum_k (2^{ks} |phi_k * f|)^q)^{1/q}||_{L_p(torus)}``."""
    spec = f.spectrum()
    nu = _freqs(f.N, f.n)
    acc = np.zeros((f.N,) * f.n)
    for k in f.levels:
        g = np.fft.ifftn(spec * wp.phi_hat(2 * np.pi * nu / 2.0 ** k)) * f.N ** f.n
        acc += (2.0 ** (k * s) * np.abs(g)) ** q
    return float(np.mean(acc ** (p / q)) ** (1.0 / p))
