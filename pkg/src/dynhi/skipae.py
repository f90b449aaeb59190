"""Degradation feature learning with a skip-connection 1-D conv autoencoder.

Default geometry (1280-bin spectra, 32-dim features):

    encoder   conv 1x10@8  /2 -> 8x636
              conv 1x10@16 /2 -> 16x314
              conv 1x10@32 /2 -> 32x153
              flatten -> 4896 -> dense -> 32
    decoder   dense -> 4896 -> reshape 32x153
              [concat-conv 1x1 with the matching encoder map -> deconv /2] x3
              ending at 1x1280

Every layer is followed by batch normalization and LeakyReLU; the final
reconstruction layer is linear by default (`normalize_output` restores
batchnorm+activation there as well, at a measurable cost in reconstruction
fidelity on standardized, signed spectra).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nn
from .errors import DimensionError, NumericalError, StateError
from .nn import Adam, BatchNorm1d, ConcatConv1x1, Conv1d, Deconv1d, Dense, Module, OptimizerConfig, Parameter, Tensor
from .nn.checkpoint import load_optimizer_state, register_model, save_checkpoint, save_optimizer_state


@register_model("skipae")
class SkipAE(Module):
    def __init__(self, input_len: int = 1280, latent_dim: int = 32,
                 channels: tuple[int, int, int] = (8, 16, 32), kernel_size: int = 10,
                 stride: int = 2, negative_slope: float = 0.01, skip_enabled: bool = True,
                 normalize_output: bool = False, seed: int = 0,
                 rng: np.random.Generator | None = None):
        super().__init__()
        rng = rng if rng is not None else np.random.default_rng(seed)
        self.input_len = input_len
        self.latent_dim = latent_dim
        self.channels = tuple(channels)
        self.kernel_size = kernel_size
        self.stride = stride
        self.negative_slope = negative_slope
        self.skip_enabled = skip_enabled
        self.normalize_output = normalize_output

        c1, c2, c3 = self.channels
        lengths = [input_len]
        for _ in range(3):
            lengths.append(nn.conv1d_output_length(lengths[-1], kernel_size, stride))
        self.feature_lengths = tuple(lengths[1:])  # (636, 314, 153) by default
        self.flat_dim = c3 * self.feature_lengths[2]

        self.enc_conv1 = Conv1d(1, c1, kernel_size, stride, rng)
        self.enc_bn1 = BatchNorm1d(c1)
        self.enc_conv2 = Conv1d(c1, c2, kernel_size, stride, rng)
        self.enc_bn2 = BatchNorm1d(c2)
        self.enc_conv3 = Conv1d(c2, c3, kernel_size, stride, rng)
        self.enc_bn3 = BatchNorm1d(c3)
        self.enc_fc = Dense(self.flat_dim, latent_dim, rng)
        self.enc_fc_bn = BatchNorm1d(latent_dim)

        self.dec_fc = Dense(latent_dim, self.flat_dim, rng)
        self.dec_fc_bn = BatchNorm1d(self.flat_dim)
        skip = lambda c: c if skip_enabled else 0
        self.merge3 = ConcatConv1x1(c3, skip(c3), c3, rng)
        self.merge3_bn = BatchNorm1d(c3)
        self.up3 = Deconv1d(c3, c2, kernel_size, stride, rng)
        self.up3_bn = BatchNorm1d(c2)
        self.merge2 = ConcatConv1x1(c2, skip(c2), c2, rng)
        self.merge2_bn = BatchNorm1d(c2)
        self.up2 = Deconv1d(c2, c1, kernel_size, stride, rng)
        self.up2_bn = BatchNorm1d(c1)
        self.merge1 = ConcatConv1x1(c1, skip(c1), c1, rng)
        self.merge1_bn = BatchNorm1d(c1)
        self.up1 = Deconv1d(c1, 1, kernel_size, stride, rng)
        if normalize_output:
            self.out_bn = BatchNorm1d(1)

    # -- forward ----------------------------------------------------------

    def _act(self, x: Tensor) -> Tensor:
        return nn.leaky_relu(x, self.negative_slope)

    def encode(self, x: Tensor):
        """Map (B, 1, input_len) spectra to (B, latent_dim) features plus the
        three encoder feature maps used by the skip connections."""
        if x.data.ndim != 3 or x.data.shape[1] != 1 or x.data.shape[2] != self.input_len:
            raise DimensionError(
                f"encoder expects (batch, 1, {self.input_len}), got {x.data.shape}"
            )
        t1 = self._act(self.enc_bn1(self.enc_conv1(x)))
        t2 = self._act(self.enc_bn2(self.enc_conv2(t1)))
        t3 = self._act(self.enc_bn3(self.enc_conv3(t2)))
        flat = t3.reshape((x.data.shape[0], self.flat_dim))
        z = self._act(self.enc_fc_bn(self.enc_fc(flat)))
        return z, (t1, t2, t3)

    def _check_taps(self, batch: int, taps):
        if not self.skip_enabled:
            return
        if taps is None or len(taps) != 3:
            raise StateError("decode() needs the three encoder feature maps from the "
                             "matching forward pass")
        expected = list(zip(self.channels, self.feature_lengths))
        for tap, (c, length) in zip(taps, expected):
            if tap.data.shape != (batch, c, length):
                raise StateError(
                    f"skip feature map shape {tap.data.shape} does not match the "
                    f"expected ({batch}, {c}, {length})"
                )

    def decode(self, z: Tensor, taps=None) -> Tensor:
        batch = z.data.shape[0]
        self._check_taps(batch, taps)
        t1, t2, t3 = taps if taps is not None else (None, None, None)
        c1, c2, c3 = self.channels
        h = self._act(self.dec_fc_bn(self.dec_fc(z)))
        h = h.reshape((batch, c3, self.feature_lengths[2]))
        h = self._act(self.merge3_bn(self.merge3(h, t3 if self.skip_enabled else None)))
        h = self._act(self.up3_bn(self.up3(h)))
        h = self._act(self.merge2_bn(self.merge2(h, t2 if self.skip_enabled else None)))
        h = self._act(self.up2_bn(self.up2(h)))
        h = self._act(self.merge1_bn(self.merge1(h, t1 if self.skip_enabled else None)))
        h = self.up1(h)
        if self.normalize_output:
            h = self._act(self.out_bn(h))
        return h

    def __call__(self, x: Tensor):
        z, taps = self.encode(x)
        return self.decode(z, taps), z, taps

    def shape_trace(self, batch: int = 2):
        """Run a forward pass and report every layer's output size."""
        self.eval()
        x = Tensor(np.zeros((batch, 1, self.input_len)))
        z, taps = self.encode(x)
        trace = [
            ("enc_conv1", taps[0].data.shape[1:]),
            ("enc_conv2", taps[1].data.shape[1:]),
            ("enc_conv3", taps[2].data.shape[1:]),
            ("flatten", (self.flat_dim,)),
            ("enc_fc", z.data.shape[1:]),
        ]
        h = self._act(self.dec_fc_bn(self.dec_fc(z)))
        trace.append(("dec_fc", h.data.shape[1:]))
        h = h.reshape((batch, self.channels[2], self.feature_lengths[2]))
        h = self._act(self.merge3_bn(self.merge3(h, taps[2] if self.skip_enabled else None)))
        trace.append(("merge3", h.data.shape[1:]))
        h = self._act(self.up3_bn(self.up3(h)))
        trace.append(("up3", h.data.shape[1:]))
        h = self._act(self.merge2_bn(self.merge2(h, taps[1] if self.skip_enabled else None)))
        trace.append(("merge2", h.data.shape[1:]))
        h = self._act(self.up2_bn(self.up2(h)))
        trace.append(("up2", h.data.shape[1:]))
        h = self._act(self.merge1_bn(self.merge1(h, taps[0] if self.skip_enabled else None)))
        trace.append(("merge1", h.data.shape[1:]))
        h = self.up1(h)
        trace.append(("up1", h.data.shape[1:]))
        return trace

    def max_activation(self, x: Tensor) -> float:
        """Largest |value| seen anywhere in one forward pass (divergence report)."""
        z, taps = self.encode(x)
        xhat = self.decode(z, taps)
        peaks = [float(np.max(np.abs(t.data))) for t in (*taps, z, xhat)]
        return max(peaks)

    # -- checkpointing ------------------------------------------------------

    def architecture(self) -> dict:
        return {
            "input_len": self.input_len,
            "latent_dim": self.latent_dim,
            "channels": list(self.channels),
            "kernel_size": self.kernel_size,
            "stride": self.stride,
            "negative_slope": self.negative_slope,
            "skip_enabled": self.skip_enabled,
            "normalize_output": self.normalize_output,
        }

    @classmethod
    def from_architecture(cls, arch: dict) -> "SkipAE":
        arch = dict(arch)
        arch["channels"] = tuple(arch["channels"])
        return cls(**arch)


def reconstruction_loss(x: Tensor, x_hat: Tensor) -> Tensor:
    """Mean over the batch of the squared L2 reconstruction distance."""
    if x.data.shape != x_hat.data.shape:
        raise DimensionError(
            f"reconstruction loss shape mismatch: {x.data.shape} vs {x_hat.data.shape}"
        )
    d = x_hat - x
    return (d * d).sum() * (1.0 / x.data.shape[0])


# -- training ----------------------------------------------------------------


@dataclass
class SkipAETrainResult:
    model: SkipAE
    losses: list[float] = field(default_factory=list)
    shuffle_rng: np.random.Generator | None = None
    adam: Adam | None = None
    epochs_run: int = 0


def train_skipae(spectra: np.ndarray, config: OptimizerConfig, *, seed: int = 0,
                 skip_enabled: bool = True, normalize_output: bool = False,
                 arch: dict | None = None, epochs: int | None = None,
                 model: SkipAE | None = None, adam: Adam | None = None,
                 shuffle_rng: np.random.Generator | None = None, start_epoch: int = 0,
                 on_epoch=None) -> SkipAETrainResult:
    """Adam training on shuffled mini-batches of standardized spectra.

    Pass `model`/`adam`/`shuffle_rng`/`start_epoch` from a saved snapshot to
    resume an interrupted run; with the same seed the resumed loss curve is
    bit-identical to the uninterrupted one.
    """
    spectra = np.asarray(spectra, dtype=np.float64)
    n = spectra.shape[0]
    init_seed, shuffle_seed = np.random.SeedSequence(seed).spawn(2)
    if model is None:
        model = SkipAE(
            input_len=spectra.shape[1], skip_enabled=skip_enabled,
            normalize_output=normalize_output, rng=np.random.default_rng(init_seed),
            **(arch or {}),
        )
    if shuffle_rng is None:
        shuffle_rng = np.random.default_rng(shuffle_seed)
    if adam is None:
        adam = Adam(model.parameters(), config)
    model.train()

    total_epochs = config.max_epoch if epochs is None else epochs
    losses: list[float] = []
    for epoch in range(start_epoch + 1, total_epochs + 1):
        order = shuffle_rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch_idx = order[start : start + config.batch_size]
            xb = Tensor(spectra[batch_idx][:, None, :])
            x_hat, _, _ = model(xb)
            loss = reconstruction_loss(xb, x_hat)
            value = loss.item()
            if not np.isfinite(value):
                peak = model.max_activation(xb)
                raise NumericalError(
                    f"non-finite reconstruction loss at epoch {epoch}, "
                    f"batch {start // config.batch_size}; max |activation| = {peak:g}"
                )
            loss.backward()
            adam.step()
            epoch_loss += value * len(batch_idx)
        losses.append(epoch_loss / n)
        if on_epoch is not None:
            on_epoch(epoch, model, adam, shuffle_rng, losses)
    return SkipAETrainResult(model=model, losses=losses, shuffle_rng=shuffle_rng,
                             adam=adam, epochs_run=total_epochs - start_epoch)


def extract_features(model: SkipAE, spectra: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """Deterministic feature extraction (inference mode, running statistics)."""
    spectra = np.asarray(spectra, dtype=np.float64)
    was_training = model.training
    model.eval()
    chunks = []
    for start in range(0, spectra.shape[0], batch_size):
        xb = Tensor(spectra[start : start + batch_size][:, None, :])
        z, _ = model.encode(xb)
        chunks.append(z.data)
    model.train(was_training)
    return np.concatenate(chunks, axis=0)


# -- resumable snapshots ------------------------------------------------------


def save_training_snapshot(directory, model: SkipAE, adam: Adam,
                           shuffle_rng: np.random.Generator, epoch: int,
                           seed: int | None = None):
    directory = Path(directory)
    save_checkpoint(model, directory, seed=seed, extra={"epoch": epoch})
    save_optimizer_state(adam, model, directory / "optimizer")
    state = {"epoch": epoch, "rng_state": shuffle_rng.bit_generator.state}
    (directory / "training_state.json").write_text(
        json.dumps(state, indent=2) + "\n", encoding="utf-8"
    )


def load_training_snapshot(directory, config: OptimizerConfig):
    from .nn.checkpoint import load_checkpoint

    directory = Path(directory)
    model = load_checkpoint(directory)
    load_optimizer_state(model, directory / "optimizer")
    adam = Adam(model.parameters(), config)
    state = json.loads((directory / "training_state.json").read_text(encoding="utf-8"))
    rng = np.random.default_rng(0)
    rng.bit_generator.state = state["rng_state"]
    return model, adam, rng, int(state["epoch"])
