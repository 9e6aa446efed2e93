"""Gradient machinery and the unsupervised training loop.

`backward` computes the exact gradient of the training loss with respect to
every trainable scalar by reverse traversal of the cascade: absolute-value
terms contribute their sign (with sign(0) = 0), gating layers their analytic
partials, the strided correlations transpose to zero-interpolated periodic
convolutions, and derived-kernel gradients are folded back into the source
kernel through the constraint relations. `finite_difference_grad` is the
independent brute-force oracle used to verify all of it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .network import (
    SharingMode,
    WaveletNet,
    build_model,
    default_levels_for,
    forward_trace,
    ht_gate_derivatives,
)
from .wavelet import kernel_grad, strided_corr, upsample_conv


def _loss_from_trace(trace, signal, gamma):
    n = trace.pre_lengths[0]
    recon = float(np.mean(np.abs(signal - trace.recon_chain[0])))
    m = sum(d.size for d in trace.details) + trace.approx.size
    coeff = sum(float(np.sum(np.abs(d))) for d in trace.details)
    coeff += float(np.sum(np.abs(trace.approx)))
    sparsity = coeff / m
    return recon + gamma * sparsity, recon, sparsity, n, m


def _cqf_fold(gh, gg, ghb, ggb):
    """Fold gradients of the three derived kernels into the scaling kernel.

    For g[n] = (-1)^n h[K-1-n], h_bar[n] = h[K-1-n], g_bar[n] = (-1)^(n+1) h[n]
    the transposed maps are gh - signs*rev(gg) + rev(ghb) - signs*ggb with
    signs[m] = (-1)^m (kernel length even).
    """
    k = gh.size
    signs = np.where(np.arange(k) % 2 == 0, 1.0, -1.0)
    return gh - signs * gg[::-1] + ghb[::-1] - signs * ggb


def backward_full(signal, model: WaveletNet, gamma: float):
    """Loss triple plus the flat gradient vector (layout per
    `model.parameter_slices`)."""
    signal = np.asarray(signal, dtype=float)
    trace = forward_trace(model, signal)
    total, recon, sparsity, n_sig, m_coeff = _loss_from_trace(trace, signal, gamma)

    levels = model.levels
    trains_ht = model.mode.trains_thresholds
    scheme = model.mode.kernel_scheme

    # per-level kernel gradient accumulators (folded into trainables at the end)
    acc = [{"h": None, "g": None, "hb": None, "gb": None} for _ in range(levels)]
    grad_bp = np.zeros(levels)
    grad_bm = np.zeros(levels)

    # residual term
    g_x = -np.sign(signal - trace.recon_chain[0]) / n_sig
    # sparsity term on the gated details and the approximation
    grad_d = [gamma / m_coeff * np.sign(d) for d in trace.details]

    # decoder, shallow to deep: chain[l] was built from chain[l+1] and details[l]
    need_kernel_grads = scheme != "fixed"
    for l in range(levels):
        bank = model.bank_for_level(l)
        v = trace.recon_chain[l + 1]
        n = 2 * v.size
        gy = np.zeros(n)
        gy[: trace.pre_lengths[l]] = g_x
        if need_kernel_grads:
            k = bank.h.size
            acc[l]["hb"] = kernel_grad(v, gy, k)[::-1]
            acc[l]["gb"] = kernel_grad(trace.details[l], gy, k)[::-1]
        grad_d[l] = grad_d[l] + strided_corr(gy, bank.g_bar[::-1])
        g_x = strided_corr(gy, bank.h_bar[::-1])

    # gradient on the approximation: decoder entry point plus sparsity
    g_a = g_x + gamma / m_coeff * np.sign(trace.approx)

    # encoder, deep to shallow
    for l in range(levels - 1, -1, -1):
        bank = model.bank_for_level(l)
        if trains_ht:
            tp = model.threshold_for_level(l)
            dy_dx, dy_dbp, dy_dbm = ht_gate_derivatives(trace.details_pre[l], tp)
            g_dpre = grad_d[l] * dy_dx
            grad_bp[l] = float(np.dot(grad_d[l], dy_dbp))
            grad_bm[l] = float(np.dot(grad_d[l], dy_dbm))
        else:
            g_dpre = grad_d[l]
        x_pad = trace.padded_inputs[l]
        if need_kernel_grads:
            k = bank.h.size
            acc[l]["h"] = kernel_grad(g_a, x_pad, k)
            acc[l]["g"] = kernel_grad(g_dpre, x_pad, k)
        g_pad = upsample_conv(g_a, bank.h, x_pad.size) + \
            upsample_conv(g_dpre, bank.g, x_pad.size)
        g_a = g_pad[: trace.pre_lengths[l]]

    # fold constraint-derived kernels into the trainable sources
    grads = {name: np.zeros_like(model.params[name])
             for name in model.trainable_names()}
    if scheme == "shared_h":
        total_h = np.zeros(model.kernel_size)
        for a in acc:
            total_h += _cqf_fold(a["h"], a["g"], a["hb"], a["gb"])
        grads["h.shared"] = total_h
    elif scheme == "per_level_h":
        for l, a in enumerate(acc):
            grads[f"h.{l}"] = _cqf_fold(a["h"], a["g"], a["hb"], a["gb"])
    elif scheme == "per_level_hg":
        for l, a in enumerate(acc):
            grads[f"h.{l}"] = a["h"] + a["hb"][::-1]
            grads[f"g.{l}"] = a["g"] + a["gb"][::-1]
    elif scheme == "per_level_all":
        for l, a in enumerate(acc):
            grads[f"h.{l}"] = a["h"]
            grads[f"g.{l}"] = a["g"]
            grads[f"hb.{l}"] = a["hb"]
            grads[f"gb.{l}"] = a["gb"]
    if trains_ht:
        grads["b_plus"] = grad_bp
        grads["b_minus"] = grad_bm

    names = model.trainable_names()
    flat = (np.concatenate([grads[n].ravel() for n in names])
            if names else np.zeros(0))
    return (total, recon, sparsity), flat


def backward(signal, model: WaveletNet, gamma: float):
    """Total loss and its exact gradient as a flat vector aligned with
    `model.get_parameters()`."""
    (total, _, _), flat = backward_full(signal, model, gamma)
    return total, flat


def finite_difference_grad(signal, model: WaveletNet, gamma: float,
                           param_index: int, step: float) -> float:
    """Central difference of the total loss along one trainable scalar;
    the brute-force oracle for `backward`."""
    from .network import loss, model_forward

    vec = model.get_parameters()
    if param_index < 0 or param_index >= vec.size:
        raise IndexError(
            f"parameter index {param_index} out of range for "
            f"{vec.size} trainables"
        )
    values = []
    for delta in (step, -step):
        bumped = vec.copy()
        bumped[param_index] += delta
        model.set_parameters(bumped)
        record = model_forward(signal, model)
        values.append(loss(record, signal, gamma)[0])
    model.set_parameters(vec)
    return (values[0] - values[1]) / (2.0 * step)


@dataclass
class GradCheckReport:
    mode: SharingMode
    seeds: list[int]
    checked: int
    failures: list[tuple[int, int, float, float]]  # (seed, index, analytic, fd)
    max_ratio: float  # worst |analytic - fd| / tolerance; > 1 means failure

    @property
    def passed(self) -> bool:
        return not self.failures


def gradient_check(mode: SharingMode, seed: int = 0, n_seeds: int = 5,
                   length: int = 256, rel_tol: float = 1e-4,
                   abs_tol: float = 1e-7, gamma: float = 1.0,
                   perturb: float = 0.02) -> GradCheckReport:
    """Compare `backward` against the finite-difference oracle over every
    trainable scalar on random signals.

    The model is nudged away from its initialization first: at the exact
    starting point the reconstruction is perfect and the absolute-value terms
    sit on their kinks, where a subgradient and a central difference
    legitimately disagree.
    """
    seeds = list(range(seed, seed + n_seeds))
    failures = []
    checked = 0
    max_ratio = 0.0
    for s in seeds:
        rng = np.random.default_rng(s)
        model = build_model(default_levels_for(length), 8, mode, gamma=gamma)
        vec = model.get_parameters()
        if vec.size:
            model.set_parameters(vec + rng.normal(0.0, perturb, vec.size))
        signal = rng.normal(size=length)
        vec = model.get_parameters()
        _, grads = backward(signal, model, gamma)
        for i in range(vec.size):
            step = 1e-6 * max(1.0, abs(vec[i]))
            fd = finite_difference_grad(signal, model, gamma, i, step)
            err = abs(grads[i] - fd)
            tol = max(abs_tol, rel_tol * max(abs(fd), abs(grads[i])))
            max_ratio = max(max_ratio, err / tol)
            if err > tol:
                failures.append((s, i, float(grads[i]), float(fd)))
            checked += 1
    return GradCheckReport(mode=mode, seeds=seeds, checked=checked,
                           failures=failures, max_ratio=max_ratio)


# ---------------------------------------------------------------------------
# optimizer and loop

@dataclass
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    batch_size: int = 8
    seed: int = 0
    gamma: float = 1.0
    shuffle: bool = True
    levels: int | None = None      # None: nearest log2 of the window length
    kernel_size: int = 8

    def validate(self) -> None:
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate < 0:
            raise ConfigError("learning rate must be >= 0")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ConfigError("Adam betas must lie in (0, 1)")
        if self.batch_size < 1:
            raise ConfigError("batch size must be >= 1")


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(m=np.zeros(n), v=np.zeros(n), t=0)


def adam_step(model: WaveletNet, grads: np.ndarray, state: AdamState,
              config: TrainConfig):
    """One bias-corrected Adam update applied in place to the model's
    trainable parameters. Returns (model, state)."""
    params = model.get_parameters()
    if grads.shape != params.shape or state.m.shape != params.shape:
        raise ConfigError(
            f"gradient/state shape {grads.shape}/{state.m.shape} does not "
            f"match {params.shape} parameters"
        )
    state.t += 1
    state.m = config.adam_beta1 * state.m + (1 - config.adam_beta1) * grads
    state.v = config.adam_beta2 * state.v + (1 - config.adam_beta2) * grads * grads
    m_hat = state.m / (1 - config.adam_beta1 ** state.t)
    v_hat = state.v / (1 - config.adam_beta2 ** state.t)
    params = params - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_epsilon)
    model.set_parameters(params)
    return model, state


@dataclass
class TrainReport:
    loss_history: list[tuple[float, float, float]]  # per-epoch mean (total, recon, sparsity)
    final_model: WaveletNet
    wall_time: float
    synthesis_gain_ratios: np.ndarray = field(default_factory=lambda: np.zeros(0))


def train(signals, mode: SharingMode, config: TrainConfig) -> TrainReport:
    """Mini-batch loop: gradients averaged over each batch in a fixed order,
    optional per-epoch shuffling driven by the config seed."""
    config.validate()
    if not signals:
        raise ConfigError("training set is empty")
    signals = [np.asarray(s, dtype=float) for s in signals]
    levels = config.levels
    if levels is None:
        levels = default_levels_for(signals[0].size)
    model = build_model(levels, config.kernel_size, mode,
                        gamma=config.gamma, seed=config.seed)
    state = AdamState.zeros(model.get_parameters().size)
    rng = np.random.default_rng(config.seed)
    history: list[tuple[float, float, float]] = []
    start = time.perf_counter()
    n = len(signals)
    for _ in range(config.epochs):
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        epoch_losses = np.zeros(3)
        for lo in range(0, n, config.batch_size):
            batch = order[lo:lo + config.batch_size]
            grad_sum = np.zeros_like(state.m)
            for idx in batch:
                triple, flat = backward_full(signals[idx], model, config.gamma)
                grad_sum += flat
                epoch_losses += triple
            model, state = adam_step(model, grad_sum / batch.size, state, config)
        history.append(tuple(epoch_losses / n))
    wall = time.perf_counter() - start
    return TrainReport(
        loss_history=history,
        final_model=model,
        wall_time=wall,
        synthesis_gain_ratios=model.synthesis_gain_ratios(),
    )
