"""Attention fusion blocks, toy networks, losses and training.

Two toy-scale networks exercise the fusion blocks end to end without a
deep-learning framework:

* a depth network that fuses a monocular-depth branch with an enhanced
  radar branch through squeeze-excite style blocks at every scale and
  predicts a residual on top of the monocular estimate, and
* a confidence network that fuses an image branch with a dilated-radar
  branch through stacked self/cross attention at the bottleneck and
  predicts per-pixel agreement probability.

Encoders downscale with conv + decimation (exactly a stride-2
same-padded convolution, see ``tensor.downsample2``). Depth inputs are
scaled by ``DEPTH_INPUT_SCALE`` inside the graphs to keep activations
near unit range; predictions stay in meters.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass

import numpy as np

from . import tensor as T
from .tensor import Tape, Tensor, backward
from .types import (
    ConfidenceMap,
    DepthMap,
    EmptyRegionError,
    EnhancedRadarDepth,
    Image,
    ShapeMismatchError,
)

DEPTH_INPUT_SCALE = 1.0 / 80.0
BCE_EPS = 1e-7

WEIGHTS_MAGIC = b"SRW1"


class WeightFileError(ValueError):
    """Malformed network weight file."""


# --- attention blocks ---------------------------------------------------


@dataclass
class SaebWeights:
    """Weights of one squeeze-excite fusion block.

    The channel MLP is shared between the average- and max-pooled
    descriptors; the spatial gate is a single conv over the stacked
    channel mean/max; the fuse conv is 1x1.
    """

    ca_w1: Tensor
    ca_b1: Tensor
    ca_w2: Tensor
    ca_b2: Tensor
    sa_kernel: Tensor
    sa_bias: Tensor
    fuse_kernel: Tensor
    fuse_bias: Tensor

    def parameters(self) -> list[Tensor]:
        return [
            self.ca_w1, self.ca_b1, self.ca_w2, self.ca_b2,
            self.sa_kernel, self.sa_bias, self.fuse_kernel, self.fuse_bias,
        ]


def _uniform(rng, shape, fan_in) -> Tensor:
    bound = 1.0 / np.sqrt(max(1, fan_in))
    return Tensor(rng.uniform(-bound, bound, size=shape).astype(np.float32), requires_grad=True)


def _zeros(shape) -> Tensor:
    return Tensor(np.zeros(shape, dtype=np.float32), requires_grad=True)


def init_saeb(c_m: int, c_r: int, rng, reduction: int = 4, spatial_kernel: int = 7) -> SaebWeights:
    c_in = c_m + c_r
    hidden = max(1, c_in // reduction)
    k = spatial_kernel
    return SaebWeights(
        ca_w1=_uniform(rng, (c_in, hidden), c_in),
        ca_b1=_uniform(rng, (1, hidden), c_in),
        ca_w2=_uniform(rng, (hidden, c_r), hidden),
        ca_b2=_uniform(rng, (1, c_r), hidden),
        sa_kernel=_uniform(rng, (k, k, 2, 1), k * k * 2),
        sa_bias=_uniform(rng, (1,), k * k * 2),
        fuse_kernel=_uniform(rng, (1, 1, c_r + c_m, c_r), c_r + c_m),
        fuse_bias=_uniform(rng, (c_r,), c_r + c_m),
    )


def zero_saeb(c_m: int, c_r: int, reduction: int = 4, spatial_kernel: int = 7) -> SaebWeights:
    c_in = c_m + c_r
    hidden = max(1, c_in // reduction)
    k = spatial_kernel
    return SaebWeights(
        ca_w1=_zeros((c_in, hidden)),
        ca_b1=_zeros((1, hidden)),
        ca_w2=_zeros((hidden, c_r)),
        ca_b2=_zeros((1, c_r)),
        sa_kernel=_zeros((k, k, 2, 1)),
        sa_bias=_zeros((1,)),
        fuse_kernel=_zeros((1, 1, c_r + c_m, c_r)),
        fuse_bias=_zeros((c_r,)),
    )


def channel_attention(f: Tensor, w1: Tensor, b1: Tensor, w2: Tensor, b2: Tensor) -> Tensor:
    """Sigmoid channel gate from pooled descriptors, shape (1, 1, c_out).

    gate = sigmoid(MLP(avgpool(f)) + MLP(maxpool(f))) with one shared
    two-layer MLP (relu in between, biases applied per branch).
    """
    c_in = f.shape[2]
    avg = T.reshape(T.global_avg_pool(f), (1, c_in))
    mx = T.reshape(T.global_max_pool(f), (1, c_in))
    branch_avg = T.add(T.matmul(T.relu(T.add(T.matmul(avg, w1), b1)), w2), b2)
    branch_max = T.add(T.matmul(T.relu(T.add(T.matmul(mx, w1), b1)), w2), b2)
    gate = T.sigmoid(T.add(branch_avg, branch_max))
    return T.reshape(gate, (1, 1, gate.shape[1]))


def spatial_attention(f: Tensor, kernel: Tensor, bias: Tensor) -> Tensor:
    """Sigmoid spatial gate from channel statistics, shape (h, w, 1)."""
    desc = T.concat(T.channel_mean(f), T.channel_max(f))
    return T.sigmoid(T.conv2d(desc, kernel, bias))


def saeb_forward(f_m: Tensor, f_r: Tensor, w: SaebWeights) -> Tensor:
    """Enhance radar features with channel then spatial attention.

    f_c = gate_c(concat(f_m, f_r)) * f_r
    f_e = conv1x1(concat(gate_s(f_c) * f_r, f_m))
    """
    if f_m.data.ndim != 3 or f_r.data.ndim != 3:
        raise ShapeMismatchError(f"features must be 3-d, got {f_m.shape} and {f_r.shape}")
    if f_m.shape[:2] != f_r.shape[:2]:
        raise ShapeMismatchError(f"spatial dims differ: {f_m.shape} vs {f_r.shape}")
    c_r = f_r.shape[2]
    gate_c = channel_attention(T.concat(f_m, f_r), w.ca_w1, w.ca_b1, w.ca_w2, w.ca_b2)
    f_c = T.broadcast_mul(gate_c, f_r)
    gate_s = spatial_attention(f_c, w.sa_kernel, w.sa_bias)
    gated = T.multiply(T.broadcast_channels(gate_s, c_r), f_r)
    return T.conv2d(T.concat(gated, f_m), w.fuse_kernel, w.fuse_bias)


@dataclass
class AttentionWeights:
    wq: Tensor
    wk: Tensor
    wv: Tensor

    def parameters(self) -> list[Tensor]:
        return [self.wq, self.wk, self.wv]


@dataclass
class AfbModuleWeights:
    """One fusion module: self-attention per stream, then a
    bidirectional cross-attention exchange, all with residual adds."""

    img_self: AttentionWeights
    rad_self: AttentionWeights
    img_cross: AttentionWeights
    rad_cross: AttentionWeights

    def parameters(self) -> list[Tensor]:
        return (
            self.img_self.parameters() + self.rad_self.parameters()
            + self.img_cross.parameters() + self.rad_cross.parameters()
        )


@dataclass
class AfbWeights:
    modules: list[AfbModuleWeights]

    def parameters(self) -> list[Tensor]:
        out = []
        for m in self.modules:
            out.extend(m.parameters())
        return out


def _init_attention(rng, c) -> AttentionWeights:
    return AttentionWeights(
        wq=_uniform(rng, (c, c), c), wk=_uniform(rng, (c, c), c), wv=_uniform(rng, (c, c), c)
    )


def init_afb(channels: int, n_modules: int, rng) -> AfbWeights:
    return AfbWeights(
        modules=[
            AfbModuleWeights(
                img_self=_init_attention(rng, channels),
                rad_self=_init_attention(rng, channels),
                img_cross=_init_attention(rng, channels),
                rad_cross=_init_attention(rng, channels),
            )
            for _ in range(n_modules)
        ]
    )


def zero_afb(channels: int, n_modules: int) -> AfbWeights:
    def zatt() -> AttentionWeights:
        shape = (channels, channels)
        return AttentionWeights(_zeros(shape), _zeros(shape), _zeros(shape))

    return AfbWeights(
        modules=[
            AfbModuleWeights(zatt(), zatt(), zatt(), zatt()) for _ in range(n_modules)
        ]
    )


def _attend(queries: Tensor, keyvals: Tensor, w: AttentionWeights) -> Tensor:
    """Single-head scaled dot-product attention over token matrices."""
    q = T.matmul(queries, w.wq)
    k = T.matmul(keyvals, w.wk)
    v = T.matmul(keyvals, w.wv)
    scores = T.scale(T.matmul(q, T.transpose(k)), 1.0 / np.sqrt(q.shape[1]))
    return T.matmul(T.softmax(scores), v)


def afb_forward(f_i: Tensor, f_r: Tensor, weights: AfbWeights) -> Tensor:
    """Stacked self + bidirectional cross attention; returns the image
    stream reshaped back to (h, w, c)."""
    if f_i.shape != f_r.shape or f_i.data.ndim != 3:
        raise ShapeMismatchError(f"afb needs matching 3-d features, got {f_i.shape} and {f_r.shape}")
    h, w, c = f_i.shape
    xi = T.reshape(f_i, (h * w, c))
    xr = T.reshape(f_r, (h * w, c))
    for m in weights.modules:
        xi = T.add(xi, _attend(xi, xi, m.img_self))
        xr = T.add(xr, _attend(xr, xr, m.rad_self))
        xi_new = T.add(xi, _attend(xi, xr, m.img_cross))
        xr_new = T.add(xr, _attend(xr, xi, m.rad_cross))
        xi, xr = xi_new, xr_new
    return T.reshape(xi, (h, w, c))


# --- toy networks -------------------------------------------------------


@dataclass(frozen=True)
class ToyNetConfig:
    """Shared architecture knobs for both toy networks."""

    channels: tuple = (8, 16, 32)
    use_skips: bool = True
    reduction: int = 4
    spatial_kernel: int = 7
    afb_modules: int = 2

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(int(c) for c in self.channels))
        if len(self.channels) < 2:
            raise ValueError("need at least two scales")
        if any(c < 1 for c in self.channels):
            raise ValueError(f"channels must be >= 1, got {self.channels}")
        if self.reduction < 1:
            raise ValueError(f"reduction must be >= 1, got {self.reduction}")
        if self.spatial_kernel < 1 or self.spatial_kernel % 2 == 0:
            raise ValueError(f"spatial_kernel must be odd >= 1, got {self.spatial_kernel}")
        if self.afb_modules < 1:
            raise ValueError(f"afb_modules must be >= 1, got {self.afb_modules}")

    @property
    def n_scales(self) -> int:
        return len(self.channels)

    @property
    def divisor(self) -> int:
        return 2 ** (len(self.channels) - 1)


def _init_encoder(rng, c_in: int, channels: tuple) -> list[tuple[Tensor, Tensor]]:
    layers = []
    prev = c_in
    for c in channels:
        fan = 3 * 3 * prev
        layers.append((_uniform(rng, (3, 3, prev, c), fan), _uniform(rng, (c,), fan)))
        prev = c
    return layers


def _zero_encoder(c_in: int, channels: tuple) -> list[tuple[Tensor, Tensor]]:
    layers = []
    prev = c_in
    for c in channels:
        layers.append((_zeros((3, 3, prev, c)), _zeros((c,))))
        prev = c
    return layers


def _init_decoder(rng, channels: tuple) -> list[tuple[Tensor, Tensor]]:
    layers = []
    for s in range(len(channels) - 2, -1, -1):
        fan = 3 * 3 * channels[s + 1]
        layers.append((_uniform(rng, (3, 3, channels[s + 1], channels[s]), fan), _uniform(rng, (channels[s],), fan)))
    return layers


def _zero_decoder(channels: tuple) -> list[tuple[Tensor, Tensor]]:
    layers = []
    for s in range(len(channels) - 2, -1, -1):
        layers.append((_zeros((3, 3, channels[s + 1], channels[s])), _zeros((channels[s],))))
    return layers


@dataclass
class MsgNetWeights:
    config: ToyNetConfig
    mono_enc: list
    radar_enc: list
    saebs: list
    dec: list
    head_kernel: Tensor
    head_bias: Tensor

    def parameters(self) -> list[Tensor]:
        out = []
        for k, b in self.mono_enc + self.radar_enc + self.dec:
            out.extend([k, b])
        for s in self.saebs:
            out.extend(s.parameters())
        out.extend([self.head_kernel, self.head_bias])
        return out


@dataclass
class RcaNetWeights:
    config: ToyNetConfig
    img_enc: list
    radar_enc: list
    afb: AfbWeights
    dec: list
    head_kernel: Tensor
    head_bias: Tensor

    def parameters(self) -> list[Tensor]:
        out = []
        for k, b in self.img_enc + self.radar_enc + self.dec:
            out.extend([k, b])
        out.extend(self.afb.parameters())
        out.extend([self.head_kernel, self.head_bias])
        return out


MONO_IN_CHANNELS = 1
RADAR_IN_CHANNELS = 2  # raw dilated + filtered
IMAGE_IN_CHANNELS = 3
DDR_IN_CHANNELS = 1


def init_msgnet(cfg: ToyNetConfig, seed: int = 0) -> MsgNetWeights:
    rng = np.random.default_rng(seed)
    ch = cfg.channels
    return MsgNetWeights(
        config=cfg,
        mono_enc=_init_encoder(rng, MONO_IN_CHANNELS, ch),
        radar_enc=_init_encoder(rng, RADAR_IN_CHANNELS, ch),
        saebs=[init_saeb(c, c, rng, cfg.reduction, cfg.spatial_kernel) for c in ch],
        dec=_init_decoder(rng, ch),
        head_kernel=_uniform(rng, (3, 3, ch[0], 1), 3 * 3 * ch[0]),
        head_bias=_uniform(rng, (1,), 3 * 3 * ch[0]),
    )


def zero_msgnet(cfg: ToyNetConfig) -> MsgNetWeights:
    ch = cfg.channels
    return MsgNetWeights(
        config=cfg,
        mono_enc=_zero_encoder(MONO_IN_CHANNELS, ch),
        radar_enc=_zero_encoder(RADAR_IN_CHANNELS, ch),
        saebs=[zero_saeb(c, c, cfg.reduction, cfg.spatial_kernel) for c in ch],
        dec=_zero_decoder(ch),
        head_kernel=_zeros((3, 3, ch[0], 1)),
        head_bias=_zeros((1,)),
    )


def init_rcanet(cfg: ToyNetConfig, seed: int = 0) -> RcaNetWeights:
    rng = np.random.default_rng(seed)
    ch = cfg.channels
    return RcaNetWeights(
        config=cfg,
        img_enc=_init_encoder(rng, IMAGE_IN_CHANNELS, ch),
        radar_enc=_init_encoder(rng, DDR_IN_CHANNELS, ch),
        afb=init_afb(ch[-1], cfg.afb_modules, rng),
        dec=_init_decoder(rng, ch),
        head_kernel=_uniform(rng, (3, 3, ch[0], 1), 3 * 3 * ch[0]),
        head_bias=_uniform(rng, (1,), 3 * 3 * ch[0]),
    )


def zero_rcanet(cfg: ToyNetConfig) -> RcaNetWeights:
    ch = cfg.channels
    return RcaNetWeights(
        config=cfg,
        img_enc=_zero_encoder(IMAGE_IN_CHANNELS, ch),
        radar_enc=_zero_encoder(DDR_IN_CHANNELS, ch),
        afb=zero_afb(ch[-1], cfg.afb_modules),
        dec=_zero_decoder(ch),
        head_kernel=_zeros((3, 3, ch[0], 1)),
        head_bias=_zeros((1,)),
    )


def _encode(x: Tensor, layers: list) -> list[Tensor]:
    feats = []
    h = x
    for s, (kernel, bias) in enumerate(layers):
        if s > 0:
            h = T.downsample2(h)
        h = T.relu(T.conv2d(h, kernel, bias))
        feats.append(h)
    return feats


def _check_grid(shape: tuple, cfg: ToyNetConfig) -> None:
    h, w = shape
    if h % cfg.divisor != 0 or w % cfg.divisor != 0:
        raise ValueError(
            f"grid {h}x{w} must be divisible by {cfg.divisor} for {cfg.n_scales} scales"
        )


def msgnet_residual(mono_t: Tensor, radar_t: Tensor, w: MsgNetWeights) -> Tensor:
    """Residual depth grid (h, w, 1) from scaled depth inputs."""
    cfg = w.config
    fm = _encode(mono_t, w.mono_enc)
    fr = _encode(radar_t, w.radar_enc)
    fused = [T.add(fm[s], saeb_forward(fm[s], fr[s], w.saebs[s])) for s in range(cfg.n_scales)]
    x = fused[-1]
    for i, (kernel, bias) in enumerate(w.dec):
        x = T.relu(T.conv2d(T.upsample2(x), kernel, bias))
        if cfg.use_skips:
            x = T.add(x, fused[cfg.n_scales - 2 - i])
    return T.conv2d(x, w.head_kernel, w.head_bias)


def rcanet_confidence(img_t: Tensor, ddr_t: Tensor, w: RcaNetWeights) -> Tensor:
    """Per-pixel confidence grid (h, w, 1) in (0, 1)."""
    cfg = w.config
    fi = _encode(img_t, w.img_enc)
    fr = _encode(ddr_t, w.radar_enc)
    x = afb_forward(fi[-1], fr[-1], w.afb)
    for i, (kernel, bias) in enumerate(w.dec):
        x = T.relu(T.conv2d(T.upsample2(x), kernel, bias))
        if cfg.use_skips:
            s = cfg.n_scales - 2 - i
            x = T.add(x, T.add(fi[s], fr[s]))
    return T.sigmoid(T.conv2d(x, w.head_kernel, w.head_bias))


def residual_compose(mono: DepthMap, residual: np.ndarray) -> DepthMap:
    """Final depth = mono + residual, clamped at zero.

    The residual is a signed grid (not a DepthMap: those cannot hold
    negatives). Pixels clamped to zero become invalid by the map's
    sentinel convention.
    """
    res = np.asarray(residual, dtype=np.float32)
    if res.shape != mono.shape:
        raise ShapeMismatchError(f"residual {res.shape} vs mono {mono.shape}")
    composed = np.maximum(mono.values + res, np.float32(0.0))
    return DepthMap(composed, "dense")


def toy_msgnet_forward(mono: DepthMap, enhanced: EnhancedRadarDepth, w: MsgNetWeights) -> DepthMap:
    """Run the depth network and compose the final estimate."""
    if mono.shape != enhanced.shape:
        raise ShapeMismatchError(f"mono {mono.shape} vs enhanced {enhanced.shape}")
    _check_grid(mono.shape, w.config)
    mono_t = Tensor(mono.values[..., None] * np.float32(DEPTH_INPUT_SCALE))
    radar_t = Tensor(enhanced.stacked() * np.float32(DEPTH_INPUT_SCALE))
    res = msgnet_residual(mono_t, radar_t, w)
    return residual_compose(mono, res.data[..., 0])


def toy_rcanet_forward(image: Image, ddr: DepthMap, w: RcaNetWeights) -> ConfidenceMap:
    """Run the confidence network; output masked to the dilated region."""
    if (image.height, image.width) != ddr.shape:
        raise ShapeMismatchError(f"image {(image.height, image.width)} vs ddr {ddr.shape}")
    _check_grid(ddr.shape, w.config)
    img_t = Tensor(image.values)
    ddr_t = Tensor(ddr.values[..., None] * np.float32(DEPTH_INPUT_SCALE))
    conf = rcanet_confidence(img_t, ddr_t, w)
    return ConfidenceMap(conf.data[..., 0], ddr.values > 0.0)


# --- losses -------------------------------------------------------------


def depth_loss(dhat: DepthMap, dacc: DepthMap, dint: DepthMap, lam: float = 2.0) -> float:
    """Two-term L1 loss: accumulated pixels plus lam * interpolated pixels.

    Each term averages |target - dhat| over its own valid set. Raises
    EmptyRegionError when either set is empty (the mean is undefined).
    """
    if dhat.shape != dacc.shape or dhat.shape != dint.shape:
        raise ShapeMismatchError(
            f"dhat {dhat.shape} vs dacc {dacc.shape} vs dint {dint.shape}"
        )
    pred = dhat.values.astype(np.float64)
    term = []
    for target_map, name in ((dacc, "accumulated"), (dint, "interpolated")):
        mask = target_map.values > 0.0
        n = int(np.count_nonzero(mask))
        if n == 0:
            raise EmptyRegionError(f"no valid {name} supervision pixels")
        target = target_map.values[mask].astype(np.float64)
        term.append(float(np.sum(np.abs(target - pred[mask])) / n))
    return term[0] + lam * term[1]


def depth_loss_graph(dhat_t: Tensor, dacc: DepthMap, dint: DepthMap, lam: float = 2.0) -> Tensor:
    """Differentiable twin of ``depth_loss`` over an (h, w, 1) tensor."""
    if dhat_t.shape[:2] != dacc.shape or dhat_t.shape[:2] != dint.shape:
        raise ShapeMismatchError(
            f"dhat {dhat_t.shape} vs dacc {dacc.shape} vs dint {dint.shape}"
        )
    terms = []
    for target_map, weight in ((dacc, 1.0), (dint, float(lam))):
        mask = target_map.values > 0.0
        n = int(np.count_nonzero(mask))
        if n == 0:
            raise EmptyRegionError("empty supervision mask")
        mask_t = Tensor(mask.astype(np.float32)[..., None])
        target_t = Tensor((target_map.values * mask)[..., None])
        gap = T.absolute(T.multiply(T.sub(dhat_t, target_t), mask_t))
        terms.append(T.scale(T.sum_all(gap), weight / n))
    return T.add(terms[0], terms[1])


def confidence_loss_graph(conf_t: Tensor, target: ConfidenceMap) -> Tensor:
    """Differentiable mean BCE over the target's validity mask."""
    if conf_t.shape[:2] != target.shape:
        raise ShapeMismatchError(f"conf {conf_t.shape} vs target {target.shape}")
    n = int(np.count_nonzero(target.validity))
    if n == 0:
        raise EmptyRegionError("confidence loss over an empty region")
    mask_t = Tensor(target.validity.astype(np.float32)[..., None])
    t = Tensor(target.values[..., None])
    ones = Tensor(np.ones(conf_t.shape, dtype=np.float32))
    p = T.clamp(conf_t, BCE_EPS, 1.0 - BCE_EPS)
    pos = T.multiply(t, T.log(p))
    neg = T.multiply(T.sub(ones, t), T.log(T.sub(ones, p)))
    masked = T.multiply(T.add(pos, neg), mask_t)
    return T.scale(T.sum_all(masked), -1.0 / n)


# --- training -----------------------------------------------------------


def sgd_step(params: list[Tensor], lr: float) -> None:
    lr32 = np.float32(lr)
    for p in params:
        if p.grad is not None:
            p.data = p.data - lr32 * p.grad
        p.zero_grad()


class AdamState:
    """First/second moment buffers for adam_step, one pair per param."""

    def __init__(self, params: list[Tensor]):
        self.m = [np.zeros(p.shape, dtype=np.float64) for p in params]
        self.v = [np.zeros(p.shape, dtype=np.float64) for p in params]
        self.t = 0


def adam_step(
    params: list[Tensor],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One Adam update; moments in float64, params stay float32."""
    state.t += 1
    bc1 = 1.0 - beta1**state.t
    bc2 = 1.0 - beta2**state.t
    for p, m, v in zip(params, state.m, state.v):
        if p.grad is None:
            continue
        g = p.grad.astype(np.float64)
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        step = lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
        p.data = (p.data.astype(np.float64) - step).astype(np.float32)
        p.zero_grad()


def train_msgnet(
    mono: DepthMap,
    enhanced: EnhancedRadarDepth,
    dacc: DepthMap,
    dint: DepthMap,
    cfg: ToyNetConfig,
    steps: int,
    lr: float = 0.02,
    lam: float = 2.0,
    seed: int = 0,
) -> tuple[MsgNetWeights, list[float]]:
    """Adam-train the depth network on one scene.

    Returns the weights and the loss history: one entry per step plus a
    final evaluation, so history[0] is the untrained loss and
    history[-1] the trained one.
    """
    _check_grid(mono.shape, cfg)
    weights = init_msgnet(cfg, seed)
    mono_t = Tensor(mono.values[..., None] * np.float32(DEPTH_INPUT_SCALE))
    radar_t = Tensor(enhanced.stacked() * np.float32(DEPTH_INPUT_SCALE))
    mono_full = Tensor(mono.values[..., None])
    params = weights.parameters()
    state = AdamState(params)
    history = []
    for _ in range(steps):
        with Tape() as tape:
            res = msgnet_residual(mono_t, radar_t, weights)
            dhat = T.relu(T.add(mono_full, res))
            loss = depth_loss_graph(dhat, dacc, dint, lam)
        history.append(loss.item())
        backward(tape, loss)
        adam_step(params, state, lr)
    res = msgnet_residual(mono_t, radar_t, weights)
    final = residual_compose(mono, res.data[..., 0])
    history.append(depth_loss(final, dacc, dint, lam))
    return weights, history


def train_rcanet(
    image: Image,
    ddr: DepthMap,
    target: ConfidenceMap,
    cfg: ToyNetConfig,
    steps: int,
    lr: float = 0.02,
    seed: int = 0,
) -> tuple[RcaNetWeights, list[float]]:
    """Adam-train the confidence network on one scene."""
    _check_grid(ddr.shape, cfg)
    weights = init_rcanet(cfg, seed)
    img_t = Tensor(image.values)
    ddr_t = Tensor(ddr.values[..., None] * np.float32(DEPTH_INPUT_SCALE))
    params = weights.parameters()
    state = AdamState(params)
    history = []
    for _ in range(steps):
        with Tape() as tape:
            conf = rcanet_confidence(img_t, ddr_t, weights)
            loss = confidence_loss_graph(conf, target)
        history.append(loss.item())
        backward(tape, loss)
        adam_step(params, state, lr)
    conf = rcanet_confidence(img_t, ddr_t, weights)
    final_loss = confidence_loss_graph(conf, target)
    history.append(final_loss.item())
    return weights, history


# --- weight files -------------------------------------------------------


def save_weights(path, weights) -> None:
    """Serialize a weight container: magic, json header, f32 payloads.

    The header pins the network kind, its config and every parameter
    shape in ``parameters()`` order, so loading rebuilds an identical
    structure or fails loudly.
    """
    if isinstance(weights, MsgNetWeights):
        kind = "msgnet"
    elif isinstance(weights, RcaNetWeights):
        kind = "rcanet"
    else:
        raise TypeError(f"cannot serialize {type(weights).__name__}")
    params = weights.parameters()
    header = {
        "kind": kind,
        "config": asdict(weights.config),
        "shapes": [list(p.shape) for p in params],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(WEIGHTS_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for p in params:
            fh.write(np.ascontiguousarray(p.data, dtype="<f4").tobytes())


def load_weights(path):
    """Load a weight file back into its container (kind from header)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != WEIGHTS_MAGIC:
            raise WeightFileError(f"bad magic {magic!r}")
        (hlen,) = struct.unpack("<I", fh.read(4))
        try:
            header = json.loads(fh.read(hlen).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise WeightFileError(f"bad header: {exc}") from exc
        cfg_dict = dict(header["config"])
        cfg_dict["channels"] = tuple(cfg_dict["channels"])
        cfg = ToyNetConfig(**cfg_dict)
        kind = header["kind"]
        if kind == "msgnet":
            weights = zero_msgnet(cfg)
        elif kind == "rcanet":
            weights = zero_rcanet(cfg)
        else:
            raise WeightFileError(f"unknown network kind {kind!r}")
        params = weights.parameters()
        if len(params) != len(header["shapes"]):
            raise WeightFileError(
                f"{len(header['shapes'])} arrays in file, structure has {len(params)}"
            )
        for p, shape in zip(params, header["shapes"]):
            if tuple(shape) != p.shape:
                raise WeightFileError(f"shape {shape} does not fit parameter {p.shape}")
            nbytes = 4 * int(np.prod(shape, dtype=np.int64))
            raw = fh.read(nbytes)
            if len(raw) < nbytes:
                raise WeightFileError("truncated payload")
            p.data = np.frombuffer(raw, dtype="<f4").reshape(p.shape).astype(np.float32)
        if fh.read(1):
            raise WeightFileError("trailing bytes after payload")
    return weights
