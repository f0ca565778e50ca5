"""The classifier: per-frame CNN backbone, per-subject ROI features, FC head
with dropout and batch normalization, and a temporal max over frames.

Every frame of every snippet in the batch runs through the shared backbone
as one big batch; subject boxes then crop ROI features from their own
frame's map. Per-instance logits are scattered into a (T, subjects, classes)
grid with -inf marking frames where a subject has no box, and the temporal
max reduces that to one logit row per subject.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dataio.snippets import BoundingBox
from ..roialign import (
    RoiConfig,
    roi_align_backward_batch,
    roi_align_forward_batch,
)
from . import ops


@dataclass(frozen=True)
class NetConfig:
    """Backbone widths and head sizes; all conv stages are 3x3/s1/p1 + 2x2 pool."""

    conv_channels: tuple[int, ...] = (8, 16, 32)
    in_channels: int = 3
    fc_units: int = 512
    num_classes: int = 4
    dropout_keep: float = 0.7
    bn_momentum: float = 0.1
    bn_eps: float = 1e-5
    roi: RoiConfig = field(default_factory=RoiConfig)

    def __post_init__(self) -> None:
        if len(self.conv_channels) < 1:
            raise ValueError("need at least one conv stage")
        if not 0.0 < self.dropout_keep <= 1.0:
            raise ValueError("dropout keep probability must be in (0, 1]")

    @property
    def roi_flat(self) -> int:
        return self.conv_channels[-1] * self.roi.crop_size ** 2


@dataclass
class ModelState:
    """Named arrays (parameters + batchnorm running stats) and the config."""

    config: NetConfig
    params: dict[str, np.ndarray]

    def trainable_names(self) -> list[str]:
        return [k for k in self.params if "running_" not in k]

    def astype(self, dtype) -> "ModelState":
        return ModelState(
            config=self.config,
            params={k: v.astype(dtype) for k, v in self.params.items()},
        )


def init_model(config: NetConfig, seed: int = 0, dtype=np.float64) -> ModelState:
    """He-initialized parameters; batchnorm starts at identity."""
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}

    def bn_block(prefix: str, width: int) -> None:
        params[f"{prefix}.gamma"] = np.ones(width)
        params[f"{prefix}.beta"] = np.zeros(width)
        params[f"{prefix}.running_mean"] = np.zeros(width)
        params[f"{prefix}.running_var"] = np.ones(width)

    cin = config.in_channels
    for i, cout in enumerate(config.conv_channels):
        fan_in = cin * 9
        params[f"stage{i}.conv.kernel"] = rng.normal(
            0.0, np.sqrt(2.0 / fan_in), size=(cout, cin, 3, 3)
        )
        params[f"stage{i}.conv.bias"] = np.zeros(cout)
        bn_block(f"stage{i}.bn", cout)
        cin = cout

    params["fc1.weights"] = rng.normal(
        0.0, np.sqrt(2.0 / config.roi_flat), size=(config.roi_flat, config.fc_units)
    )
    params["fc1.bias"] = np.zeros(config.fc_units)
    bn_block("fc1_bn", config.fc_units)
    params["fc2.weights"] = rng.normal(
        0.0, np.sqrt(2.0 / config.fc_units), size=(config.fc_units, config.num_classes)
    )
    params["fc2.bias"] = np.zeros(config.num_classes)

    return ModelState(config=config, params={k: v.astype(dtype) for k, v in params.items()})


def collect_instances(
    boxes: list[list[list[BoundingBox]]], frames_per_snippet: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, list[tuple[int, int]]]:
    """Flatten batch boxes into instance arrays ordered by (snippet, frame, track).

    Returns (box_array (N,4), map_index (N,), frame_of (N,), subject_of (N,),
    subjects) where subjects lists (snippet, track_id) sorted by that key.
    """
    keys = sorted(
        {
            (b, box.track_id)
            for b, per_snippet in enumerate(boxes)
            for per_frame in per_snippet
            for box in per_frame
        }
    )
    subject_index = {k: i for i, k in enumerate(keys)}
    rows, map_idx, frame_of, subject_of = [], [], [], []
    for b, per_snippet in enumerate(boxes):
        if len(per_snippet) != frames_per_snippet:
            raise ValueError("box lists and frame count disagree")
        for t, per_frame in enumerate(per_snippet):
            for box in per_frame:
                rows.append((box.x1, box.y1, box.x2, box.y2))
                map_idx.append(b * frames_per_snippet + t)
                frame_of.append(t)
                subject_of.append(subject_index[(b, box.track_id)])
    if not rows:
        raise ValueError("batch contains no subject boxes")
    return (
        np.asarray(rows, dtype=np.float64),
        np.asarray(map_idx, dtype=np.intp),
        np.asarray(frame_of, dtype=np.intp),
        np.asarray(subject_of, dtype=np.intp),
        keys,
    )


def model_forward(
    state: ModelState,
    frames: np.ndarray,
    boxes: list[list[list[BoundingBox]]],
    training: bool = False,
    dropout_seed: int | np.random.Generator = 0,
) -> tuple[np.ndarray, list[tuple[int, int]], dict]:
    """Run the batch: frames (B, T, C, H, W) -> per-subject logits (S, classes).

    Returns (logits, subjects, cache); subjects[i] = (snippet index, track_id)
    for logits row i. Training mode updates batchnorm running statistics in
    place; inference never mutates the state.
    """
    cfg = state.config
    p = state.params
    bsz, t_len = frames.shape[0], frames.shape[1]
    x = np.ascontiguousarray(frames.reshape(-1, *frames.shape[2:]))

    cache: dict = {"stages": []}
    for i in range(len(cfg.conv_channels)):
        x, conv_ctx = ops.conv2d(x, p[f"stage{i}.conv.kernel"], p[f"stage{i}.conv.bias"])
        x, bn_ctx, rm, rv = ops.batchnorm(
            x,
            p[f"stage{i}.bn.gamma"],
            p[f"stage{i}.bn.beta"],
            p[f"stage{i}.bn.running_mean"],
            p[f"stage{i}.bn.running_var"],
            momentum=cfg.bn_momentum,
            eps=cfg.bn_eps,
            training=training,
        )
        if training:
            p[f"stage{i}.bn.running_mean"] = rm
            p[f"stage{i}.bn.running_var"] = rv
        x, pool_ctx = ops.relu_maxpool(x)
        cache["stages"].append((conv_ctx, bn_ctx, pool_ctx))

    box_arr, map_idx, frame_of, subject_of, subjects = collect_instances(boxes, t_len)
    rois = roi_align_forward_batch(x, box_arr, map_idx, cfg.roi)
    flat = rois.reshape(len(box_arr), -1)

    h1, fc1_ctx = ops.dense_dropout(
        flat, p["fc1.weights"], p["fc1.bias"],
        keep_p=cfg.dropout_keep, training=training, seed=dropout_seed,
    )
    h1n, bn1_ctx, rm, rv = ops.batchnorm(
        h1, p["fc1_bn.gamma"], p["fc1_bn.beta"],
        p["fc1_bn.running_mean"], p["fc1_bn.running_var"],
        momentum=cfg.bn_momentum, eps=cfg.bn_eps, training=training,
    )
    if training:
        p["fc1_bn.running_mean"] = rm
        p["fc1_bn.running_var"] = rv
    inst_logits, fc2_ctx = ops.dense_dropout(
        h1n, p["fc2.weights"], p["fc2.bias"], keep_p=1.0, training=False,
    )

    grid = np.full((t_len, len(subjects), cfg.num_classes), -np.inf, dtype=x.dtype)
    grid[frame_of, subject_of] = inst_logits
    logits, head_ctx = ops.temporal_subject_head(grid)

    cache.update(
        featmap_shape=x.shape, box_arr=box_arr, map_idx=map_idx,
        frame_of=frame_of, subject_of=subject_of,
        fc1_ctx=fc1_ctx, bn1_ctx=bn1_ctx, fc2_ctx=fc2_ctx, head_ctx=head_ctx,
        roi_shape=rois.shape, frames_shape=frames.shape,
    )
    return logits, subjects, cache


def model_backward(
    state: ModelState, grad_logits: np.ndarray, cache: dict
) -> dict[str, np.ndarray]:
    """Gradients of the loss w.r.t. every trainable parameter."""
    cfg = state.config
    grads: dict[str, np.ndarray] = {}

    grad_grid = ops.temporal_subject_head_backward(grad_logits, cache["head_ctx"])
    grad_inst = grad_grid[cache["frame_of"], cache["subject_of"]]

    gh1n, grads["fc2.weights"], grads["fc2.bias"] = ops.dense_dropout_backward(
        grad_inst, cache["fc2_ctx"]
    )
    gh1, grads["fc1_bn.gamma"], grads["fc1_bn.beta"] = ops.batchnorm_backward(
        gh1n, cache["bn1_ctx"]
    )
    gflat, grads["fc1.weights"], grads["fc1.bias"] = ops.dense_dropout_backward(
        gh1, cache["fc1_ctx"]
    )

    grad_featmap = roi_align_backward_batch(
        gflat.reshape(cache["roi_shape"]),
        cache["box_arr"], cache["map_idx"], cfg.roi, cache["featmap_shape"],
    )

    gx = grad_featmap
    for i in reversed(range(len(cfg.conv_channels))):
        conv_ctx, bn_ctx, pool_ctx = cache["stages"][i]
        gx = ops.relu_maxpool_backward(gx, pool_ctx)
        gx, grads[f"stage{i}.bn.gamma"], grads[f"stage{i}.bn.beta"] = (
            ops.batchnorm_backward(gx, bn_ctx)
        )
        gx, grads[f"stage{i}.conv.kernel"], grads[f"stage{i}.conv.bias"] = (
            ops.conv2d_backward(gx, conv_ctx, need_input_grad=i > 0)
        )
    return grads
