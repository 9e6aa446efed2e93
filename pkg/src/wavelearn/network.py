"""Learnable wavelet cascade model.

A model owns per-level kernels (constrained by the chosen sharing mode) and a
pair of soft hard-threshold biases per level. The forward pass is a cascade
encoder (strided correlations, details gated by the threshold activation)
followed by the mirror decoder fed through skip connections.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvalidDepthError, InvalidSignalError
from .wavelet import (
    CoefficientPyramid,
    FilterBank,
    DB4_SCALING,
    HAAR_SCALING,
    alternating_flip,
    as_kernel,
    cqf_from_scaling,
    cqf_partial,
    db4_filterbank,
    max_depth,
    strided_corr,
    upsample_conv,
    _pad_even,
)

DEFAULT_SHARPNESS = 10.0


class SharingMode(enum.Enum):
    """Which tensors are trainable and how synthesis kernels are derived.

    Value strings double as the CLI names.
    """

    DB4_FIXED = "db4"                  # fixed db4 bank, no thresholds
    DB4_FIXED_HT = "db4-ht"            # fixed db4 bank, learnable thresholds
    SHARED_CQF = "cwn"                 # one scaling kernel for all levels
    SHARED_CQF_HT = "decwn"            # shared kernel + thresholds
    PER_LEVEL_CQF = "lcwn"             # one scaling kernel per level
    PER_LEVEL_CQF_HT = "despawn"       # per-level kernel + thresholds
    PER_LEVEL_TWO_KERNEL_HT = "despawn2"  # per-level (h, g), synthesis reversed
    FREE_HT = "free"                   # all four kernels free per level

    @property
    def trains_thresholds(self) -> bool:
        return self in (
            SharingMode.DB4_FIXED_HT,
            SharingMode.SHARED_CQF_HT,
            SharingMode.PER_LEVEL_CQF_HT,
            SharingMode.PER_LEVEL_TWO_KERNEL_HT,
            SharingMode.FREE_HT,
        )

    @property
    def kernel_scheme(self) -> str:
        if self in (SharingMode.DB4_FIXED, SharingMode.DB4_FIXED_HT):
            return "fixed"
        if self in (SharingMode.SHARED_CQF, SharingMode.SHARED_CQF_HT):
            return "shared_h"
        if self in (SharingMode.PER_LEVEL_CQF, SharingMode.PER_LEVEL_CQF_HT):
            return "per_level_h"
        if self is SharingMode.PER_LEVEL_TWO_KERNEL_HT:
            return "per_level_hg"
        return "per_level_all"

    @classmethod
    def from_name(cls, name: str) -> "SharingMode":
        for mode in cls:
            if mode.value == name:
                return mode
        raise ConfigError(
            f"unknown mode {name!r}; expected one of "
            + ", ".join(m.value for m in cls)
        )


@dataclass
class ThresholdPair:
    """One-sided gating biases of the threshold activation; `sharpness` is
    fixed per model, not learnable."""

    b_plus: float = 0.0
    b_minus: float = 0.0
    sharpness: float = DEFAULT_SHARPNESS


def _sigmoid(t: np.ndarray) -> np.ndarray:
    """Overflow-safe logistic function."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def ht_activation(x, t: ThresholdPair):
    """Soft hard-threshold gate: x * [sigmoid(-a*(x+b-)) + sigmoid(a*(x-b+))].

    With both biases at zero the bracket is identically one, so the input is
    returned unchanged (exact identity, not merely approximate).
    """
    scalar = np.isscalar(x) or np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if t.b_plus == 0.0 and t.b_minus == 0.0:
        out = x.copy()
    else:
        a = t.sharpness
        gate = _sigmoid(-a * (x + t.b_minus)) + _sigmoid(a * (x - t.b_plus))
        out = x * gate
    return float(out[0]) if scalar else out


def ht_gate_derivatives(x: np.ndarray, t: ThresholdPair):
    """Partial derivatives of the activation output y = x * gate(x).

    Returns (dy/dx, dy/db_plus, dy/db_minus) evaluated elementwise.
    """
    a = t.sharpness
    p = _sigmoid(a * (x - t.b_plus))
    q = _sigmoid(-a * (x + t.b_minus))
    dp = p * (1.0 - p)
    dq = q * (1.0 - q)
    dy_dx = (p + q) + a * x * (dp - dq)
    dy_dbp = -a * x * dp
    dy_dbm = -a * x * dq
    return dy_dx, dy_dbp, dy_dbm


def _init_scaling(k_n: int) -> np.ndarray:
    """Initial scaling kernel of length k_n: db4 when it fits, Haar otherwise,
    zero-padded to length. Zero padding keeps the even-shift orthonormality,
    so the initial model is still a perfect-reconstruction bank."""
    base = DB4_SCALING if k_n >= DB4_SCALING.size else HAAR_SCALING
    out = np.zeros(k_n)
    out[: base.size] = base
    return out


class WaveletNet:
    """Learnable cascade auto-encoder.

    Parameters are stored in `params`, keyed per the sharing mode:
    ``h.shared`` or ``h.<level>``, ``g.<level>``, ``hb.<level>``,
    ``gb.<level>``, plus the threshold vectors ``b_plus`` / ``b_minus``
    (length L, trainable only in HT modes).
    """

    def __init__(self, levels: int, kernel_size: int, mode: SharingMode,
                 gamma: float = 1.0, seed: int = 0,
                 sharpness: float = DEFAULT_SHARPNESS):
        if levels < 1:
            raise ConfigError(f"levels must be >= 1, got {levels}")
        if kernel_size < 2 or kernel_size % 2:
            raise ConfigError(
                f"kernel size must be even and >= 2, got {kernel_size}"
            )
        if mode.kernel_scheme == "fixed":
            kernel_size = DB4_SCALING.size  # bank is pinned to db4
        self.levels = levels
        self.kernel_size = kernel_size
        self.mode = mode
        self.gamma = float(gamma)
        self.seed = seed  # reserved for training-time shuffling
        self.sharpness = float(sharpness)

        h0 = _init_scaling(kernel_size)
        bank0 = cqf_from_scaling(h0)
        self.params: dict[str, np.ndarray] = {}
        scheme = mode.kernel_scheme
        if scheme == "shared_h":
            self.params["h.shared"] = h0.copy()
        elif scheme == "per_level_h":
            for l in range(levels):
                self.params[f"h.{l}"] = h0.copy()
        elif scheme == "per_level_hg":
            for l in range(levels):
                self.params[f"h.{l}"] = h0.copy()
                self.params[f"g.{l}"] = bank0.g.copy()
        elif scheme == "per_level_all":
            for l in range(levels):
                self.params[f"h.{l}"] = h0.copy()
                self.params[f"g.{l}"] = bank0.g.copy()
                self.params[f"hb.{l}"] = bank0.h_bar.copy()
                self.params[f"gb.{l}"] = bank0.g_bar.copy()
        # thresholds always exist; they stay at zero unless the mode trains them
        self.params["b_plus"] = np.zeros(levels)
        self.params["b_minus"] = np.zeros(levels)

    # -- parameter plumbing --------------------------------------------------

    def trainable_names(self) -> list[str]:
        names = [k for k in self.params if k not in ("b_plus", "b_minus")]
        if self.mode.trains_thresholds:
            names += ["b_plus", "b_minus"]
        return names

    def parameter_count(self) -> int:
        return sum(self.params[name].size for name in self.trainable_names())

    def get_parameters(self) -> np.ndarray:
        names = self.trainable_names()
        if not names:
            return np.zeros(0)
        return np.concatenate([self.params[n].ravel() for n in names])

    def set_parameters(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=float)
        if flat.size != self.parameter_count():
            raise ConfigError(
                f"parameter vector has {flat.size} entries, "
                f"model has {self.parameter_count()}"
            )
        pos = 0
        for name in self.trainable_names():
            size = self.params[name].size
            self.params[name] = flat[pos:pos + size].copy()
            pos += size

    def parameter_slices(self) -> list[tuple[str, slice]]:
        out = []
        pos = 0
        for name in self.trainable_names():
            size = self.params[name].size
            out.append((name, slice(pos, pos + size)))
            pos += size
        return out

    # -- derived structure ----------------------------------------------------

    def bank_for_level(self, level: int) -> FilterBank:
        """Kernels of one level, re-derived from the trainables on every call
        so the constraint relations can never drift."""
        scheme = self.mode.kernel_scheme
        if scheme == "fixed":
            return db4_filterbank()
        if scheme == "shared_h":
            return cqf_from_scaling(self.params["h.shared"])
        if scheme == "per_level_h":
            return cqf_from_scaling(self.params[f"h.{level}"])
        if scheme == "per_level_hg":
            return cqf_partial(self.params[f"h.{level}"], self.params[f"g.{level}"])
        return FilterBank(
            h=as_kernel(self.params[f"h.{level}"]),
            g=as_kernel(self.params[f"g.{level}"]),
            h_bar=as_kernel(self.params[f"hb.{level}"]),
            g_bar=as_kernel(self.params[f"gb.{level}"]),
        )

    def threshold_for_level(self, level: int) -> ThresholdPair:
        return ThresholdPair(
            b_plus=float(self.params["b_plus"][level]),
            b_minus=float(self.params["b_minus"][level]),
            sharpness=self.sharpness,
        )

    def synthesis_gain_ratios(self) -> np.ndarray:
        """Per-level ||h_bar|| / ||h||; diverging ratios flag the known
        instability of fully unconstrained banks."""
        out = np.empty(self.levels)
        for l in range(self.levels):
            bank = self.bank_for_level(l)
            out[l] = np.linalg.norm(bank.h_bar) / np.linalg.norm(bank.h)
        return out


def build_model(levels: int, kernel_size: int, mode: SharingMode,
                gamma: float = 1.0, seed: int = 0) -> WaveletNet:
    """Fresh model: kernels start at the db4 bank (or a padded Haar for short
    kernels) and thresholds at zero, so the initial forward pass is a plain
    fixed-filter transform."""
    return WaveletNet(levels, kernel_size, mode, gamma=gamma, seed=seed)


def parameter_count(model: WaveletNet) -> int:
    return model.parameter_count()


@dataclass
class ForwardRecord:
    """Output of one forward pass: gated coefficient pyramid and the
    reconstruction (always of the input's exact length)."""

    pyramid: CoefficientPyramid
    reconstruction: np.ndarray
    input_length: int


@dataclass
class ForwardTrace:
    """Every intermediate needed by the manual backward pass."""

    padded_inputs: list[np.ndarray]   # encoder input of each level, post-pad
    pre_lengths: list[int]            # encoder input length of each level, pre-pad
    details_pre: list[np.ndarray]     # detail coefficients before gating
    details: list[np.ndarray]         # detail coefficients after gating
    approx: np.ndarray
    recon_chain: list[np.ndarray]     # decoder outputs, index l = signal at depth l


def _encode(model: WaveletNet, signal: np.ndarray):
    padded, pre_lengths, details_pre, details = [], [], [], []
    a = signal
    use_ht = model.mode.trains_thresholds
    for l in range(model.levels):
        bank = model.bank_for_level(l)
        pre_lengths.append(a.size)
        a_pad = _pad_even(a)
        padded.append(a_pad)
        a = strided_corr(a_pad, bank.h)
        d_pre = strided_corr(a_pad, bank.g)
        details_pre.append(d_pre)
        if use_ht:
            details.append(ht_activation(d_pre, model.threshold_for_level(l)))
        else:
            details.append(d_pre)
    return padded, pre_lengths, details_pre, details, a


def _decode(model: WaveletNet, details, approx, pre_lengths):
    chain = [None] * (model.levels + 1)
    chain[model.levels] = approx
    x = approx
    for l in range(model.levels - 1, -1, -1):
        bank = model.bank_for_level(l)
        n = 2 * x.size
        y = upsample_conv(x, bank.h_bar[::-1], n) + \
            upsample_conv(details[l], bank.g_bar[::-1], n)
        x = y[:pre_lengths[l]]
        chain[l] = x
    return chain


def forward_trace(model: WaveletNet, signal) -> ForwardTrace:
    signal = np.asarray(signal, dtype=float)
    if signal.ndim != 1 or signal.size < 2:
        raise InvalidSignalError("signal must be 1-D with at least 2 samples")
    if model.levels > max_depth(signal.size):
        raise InvalidDepthError(
            f"{model.levels} levels exceed the maximum depth "
            f"{max_depth(signal.size)} for length {signal.size}"
        )
    padded, pre_lengths, details_pre, details, approx = _encode(model, signal)
    chain = _decode(model, details, approx, pre_lengths)
    return ForwardTrace(
        padded_inputs=padded,
        pre_lengths=pre_lengths,
        details_pre=details_pre,
        details=details,
        approx=approx,
        recon_chain=chain,
    )


def model_forward(signal, model: WaveletNet) -> ForwardRecord:
    """Encoder-decoder pass: details are gated before being stored and
    skip-connected, the final approximation is passed through untouched."""
    trace = forward_trace(model, signal)
    pyramid = CoefficientPyramid(
        details=trace.details,
        approx=trace.approx,
        level_lengths=trace.pre_lengths,
    )
    return ForwardRecord(
        pyramid=pyramid,
        reconstruction=trace.recon_chain[0],
        input_length=trace.pre_lengths[0],
    )


def loss(record: ForwardRecord, signal, gamma: float):
    """(total, reconstruction, sparsity): mean absolute residual plus
    gamma times the mean absolute value over all retained coefficients
    (details and final approximation together)."""
    signal = np.asarray(signal, dtype=float)
    if signal.shape != record.reconstruction.shape:
        raise InvalidSignalError(
            f"signal length {signal.size} != reconstruction "
            f"{record.reconstruction.size}"
        )
    recon = float(np.mean(np.abs(signal - record.reconstruction)))
    coeff_sum = float(sum(np.sum(np.abs(d)) for d in record.pyramid.details))
    coeff_sum += float(np.sum(np.abs(record.pyramid.approx)))
    count = sum(d.size for d in record.pyramid.details) + record.pyramid.approx.size
    sparsity = coeff_sum / count
    total = recon + gamma * sparsity
    return total, recon, sparsity


def default_levels_for(length: int) -> int:
    """Customary depth: nearest integer to log2 of the window length."""
    if length < 2:
        raise InvalidSignalError(f"signal too short: {length}")
    return min(max(1, round(math.log2(length))), max_depth(length))
