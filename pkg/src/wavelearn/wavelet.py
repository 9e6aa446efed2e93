"""Two-channel filter-bank primitives: CQF construction and the multi-level
cascade transform.

Conventions used throughout:

* analysis is a strided periodic cross-correlation,
  ``a_next[k] = sum_n h[n] * a[(2k + n) mod N]``;
* synthesis is the transpose of analysis, realised as zero-interpolation
  followed by periodic convolution with the index-reversed kernel;
* reversal of a finite kernel means ``h[-n] == h[K-1-n]``;
* odd-length inputs are zero-padded by one sample before striding and the
  pre-pad length is recorded so inversion can truncate exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidDepthError,
    InvalidKernelError,
    InvalidPyramidError,
    InvalidSignalError,
)

# 8-tap Daubechies-4 scaling filter, normalized so sum(h) = sqrt(2) and
# sum(h^2) = 1 hold exactly in float64 (values rounded from a 60-digit
# spectral factorization).
DB4_SCALING = np.array([
    0.2303778133088965,
    0.7148465705529157,
    0.6308807679298589,
    -0.027983769416859854,
    -0.18703481171909309,
    0.030841381835560764,
    0.0328830116668852,
    -0.010597401785069032,
])

HAAR_SCALING = np.array([math.sqrt(0.5), math.sqrt(0.5)])


def as_kernel(taps) -> np.ndarray:
    """Validate and return kernel taps as a float64 array.

    A kernel must have even length >= 2 (the alternating-flip relations
    assume even parity) and contain only finite values.
    """
    k = np.asarray(taps, dtype=float)
    if k.ndim != 1 or k.size == 0:
        raise InvalidKernelError("kernel must be a non-empty 1-D tap vector")
    if k.size % 2 != 0 or k.size < 2:
        raise InvalidKernelError(f"kernel length must be even and >= 2, got {k.size}")
    if not np.all(np.isfinite(k)):
        raise InvalidKernelError("kernel taps must be finite")
    return k


@dataclass(frozen=True)
class FilterBank:
    """The four kernels of one decomposition level.

    ``h``/``g`` are the low/high-pass analysis kernels, ``h_bar``/``g_bar``
    the corresponding synthesis kernels. All four share one length.
    """

    h: np.ndarray
    g: np.ndarray
    h_bar: np.ndarray
    g_bar: np.ndarray


def alternating_flip(h: np.ndarray) -> np.ndarray:
    """g[n] = (-1)^n * h[K-1-n]."""
    signs = np.where(np.arange(h.size) % 2 == 0, 1.0, -1.0)
    return signs * h[::-1]


def cqf_from_scaling(h) -> FilterBank:
    """Derive the full conjugate-quadrature bank from one scaling filter.

    g[n] = (-1)^n h[K-1-n],  h_bar[n] = h[K-1-n],  g_bar[n] = (-1)^(n+1) h[n].
    """
    h = as_kernel(h)
    signs = np.where(np.arange(h.size) % 2 == 0, 1.0, -1.0)
    g = signs * h[::-1]
    h_bar = h[::-1].copy()
    g_bar = -signs * h
    return FilterBank(h=h, g=g, h_bar=h_bar, g_bar=g_bar)


def cqf_partial(h, g) -> FilterBank:
    """Bank from independent low- and high-pass kernels, synthesis side tied
    by reversal: h_bar[n] = h[K-1-n], g_bar[n] = g[K-1-n]."""
    h = as_kernel(h)
    g = as_kernel(g)
    if h.size != g.size:
        raise InvalidKernelError(
            f"h and g must have the same length, got {h.size} and {g.size}"
        )
    return FilterBank(h=h, g=g, h_bar=h[::-1].copy(), g_bar=g[::-1].copy())


def db4_filterbank() -> FilterBank:
    """CQF bank built from the 8-tap Daubechies-4 scaling filter."""
    return cqf_from_scaling(DB4_SCALING)


def haar_filterbank() -> FilterBank:
    return cqf_from_scaling(HAAR_SCALING)


@dataclass
class CoefficientPyramid:
    """Detail coefficients d^1..d^L (level 1 = highest frequency) plus the
    final approximation, with pre-pad lengths recorded per level."""

    details: list[np.ndarray]
    approx: np.ndarray
    level_lengths: list[int] = field(default_factory=list)

    @property
    def levels(self) -> int:
        return len(self.details)

    def validate(self) -> None:
        if len(self.level_lengths) != len(self.details):
            raise InvalidPyramidError(
                f"{len(self.details)} detail levels but "
                f"{len(self.level_lengths)} recorded lengths"
            )
        if not self.details:
            raise InvalidPyramidError("pyramid has no levels")
        for i, (d, n) in enumerate(zip(self.details, self.level_lengths)):
            if n < 1:
                raise InvalidPyramidError(f"level {i + 1} has recorded length {n}")
            if d.shape != ((n + 1) // 2,):
                raise InvalidPyramidError(
                    f"level {i + 1} detail length {d.size} != ceil({n}/2)"
                )
        expect = (self.level_lengths[-1] + 1) // 2
        if self.approx.shape != (expect,):
            raise InvalidPyramidError(
                f"approximation length {self.approx.size} != {expect}"
            )


# ---------------------------------------------------------------------------
# low-level strided periodic operators (shared with the gradient code)

def _periodic_ext(x: np.ndarray, extra: int) -> np.ndarray:
    """x extended periodically by `extra` samples (kernels may wrap several
    times when they are longer than the signal)."""
    n = x.size
    total = n + extra
    reps = -(-total // n)
    return np.tile(x, reps)[:total]


def strided_corr(x: np.ndarray, f: np.ndarray) -> np.ndarray:
    """out[k] = sum_n f[n] * x[(2k + n) mod N] for k in [0, N/2).  N even."""
    n = x.size
    ext = _periodic_ext(x, f.size - 1) if f.size > 1 else x
    return np.correlate(ext, f, mode="valid")[::2]


def upsample_conv(v: np.ndarray, f: np.ndarray, n_out: int) -> np.ndarray:
    """out[m] = sum_k v[k] * f[(m - 2k) mod n_out], the transpose of
    `strided_corr` with the same kernel.  Kernel indices wrap (fold) when
    the kernel is longer than the output."""
    u = np.zeros(n_out)
    u[::2] = v
    out = np.zeros(n_out)
    for tap in range(f.size):
        out += f[tap] * np.roll(u, tap)
    return out


def kernel_grad(upstream: np.ndarray, x: np.ndarray, taps: int) -> np.ndarray:
    """d(strided_corr(x, f))/df contracted with `upstream`:
    out[n] = sum_k upstream[k] * x[(2k + n) mod N]."""
    n = x.size
    ext = _periodic_ext(x, taps - 1) if taps > 1 else x
    out = np.empty(taps)
    for tap in range(taps):
        out[tap] = np.dot(upstream, ext[tap:tap + n - 1:2])
    return out


# ---------------------------------------------------------------------------
# single level

def _pad_even(a: np.ndarray) -> np.ndarray:
    if a.size % 2:
        return np.concatenate([a, [0.0]])
    return a


def analyze_level(a, h, g) -> tuple[np.ndarray, np.ndarray]:
    """One decomposition step: strided periodic correlation with the low- and
    high-pass kernels, downsampling by two.

    Odd-length inputs are zero-padded by one sample first; the caller is
    responsible for recording the pre-pad length.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise InvalidSignalError("input signal must be a non-empty 1-D vector")
    h = as_kernel(h)
    g = as_kernel(g)
    a = _pad_even(a)
    return strided_corr(a, h), strided_corr(a, g)


def synthesize_level(a_next, d, h_bar, g_bar, original_length: int) -> np.ndarray:
    """One reconstruction step: zero-interpolate both inputs, periodically
    convolve with the index-reversed synthesis kernels, sum, and truncate to
    the recorded pre-pad length."""
    a_next = np.asarray(a_next, dtype=float)
    d = np.asarray(d, dtype=float)
    if a_next.shape != d.shape:
        raise InvalidPyramidError(
            f"approximation and detail lengths differ: {a_next.size} vs {d.size}"
        )
    if a_next.size == 0:
        raise InvalidPyramidError("empty coefficient vectors")
    n = 2 * a_next.size
    if original_length not in (n - 1, n):
        raise InvalidPyramidError(
            f"original length {original_length} incompatible with {a_next.size} coefficients"
        )
    h_bar = as_kernel(h_bar)
    g_bar = as_kernel(g_bar)
    x = upsample_conv(a_next, h_bar[::-1], n) + upsample_conv(d, g_bar[::-1], n)
    return x[:original_length]


# ---------------------------------------------------------------------------
# full cascade

def max_depth(length: int) -> int:
    """Number of halvings (with odd-length padding) until one sample is left."""
    if length < 2:
        return 0
    depth = 0
    while length > 1:
        length = (length + 1) // 2
        depth += 1
    return depth


def default_levels(length: int) -> int:
    """Nearest integer to log2 of the signal length, the customary depth."""
    if length < 2:
        raise InvalidSignalError(f"signal too short: {length}")
    return min(max(1, round(math.log2(length))), max_depth(length))


def fdwt(signal, bank: FilterBank, levels: int) -> CoefficientPyramid:
    """Cascade decomposition: `levels` applications of `analyze_level`, each
    feeding its approximation to the next."""
    a = np.asarray(signal, dtype=float)
    if a.ndim != 1 or a.size < 2:
        raise InvalidSignalError("signal must be 1-D with at least 2 samples")
    if levels < 1:
        raise InvalidDepthError(f"levels must be >= 1, got {levels}")
    if levels > max_depth(a.size):
        raise InvalidDepthError(
            f"{levels} levels exceed the maximum depth {max_depth(a.size)} "
            f"for length {a.size}"
        )
    details: list[np.ndarray] = []
    lengths: list[int] = []
    for _ in range(levels):
        lengths.append(a.size)
        a, d = analyze_level(a, bank.h, bank.g)
        details.append(d)
    return CoefficientPyramid(details=details, approx=a, level_lengths=lengths)


def ifdwt(pyramid: CoefficientPyramid, bank: FilterBank) -> np.ndarray:
    """Invert `fdwt` from the deepest level down, truncating each step to the
    recorded pre-pad length."""
    pyramid.validate()
    x = pyramid.approx
    for d, n in zip(reversed(pyramid.details), reversed(pyramid.level_lengths)):
        x = synthesize_level(x, d, bank.h_bar, bank.g_bar, n)
    return x
