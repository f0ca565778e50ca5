"""Training and evaluation loops.

All randomness is drawn from generators seeded by structured tuples
(seed, domain, epoch, item), never from a mutable global stream, so a run
resumed from any epoch checkpoint consumes exactly the random values the
uninterrupted run would have: trajectories are bitwise reproducible.

Domain codes: 0 model init, 1 epoch shuffle, 2 frame sampling (per snippet),
3 dropout (per step).
"""

from __future__ import annotations

import dataclasses
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..fusion.fuse import swtf_preprocess
from ..net import ops
from ..net.model import ModelState, init_model, model_backward, model_forward
from ..optim import AdamState, adam_step, lr_at_epoch
from .checkpoint import CheckpointError, load_arrays, save_arrays
from .config import RunConfig, config_from_text, config_to_text
from .data import SnippetStore, check_class_count, prepare_dataset, subject_targets


class TrainAbort(RuntimeError):
    """Raised when training hits non-finite numbers."""


@dataclass
class MetricsReport:
    """Evaluation summary; confusion rows are true classes, columns predictions."""

    accuracy: float
    per_class_accuracy: np.ndarray
    confusion: np.ndarray
    loss_curve: list[float]


@dataclass
class TrainResult:
    state: ModelState
    history: list[tuple[int, float, float, float]]  # (epoch, lr, mean_loss, train_acc)
    last_checkpoint: Path
    best_checkpoint: Path | None
    best_test_accuracy: float | None


def _log(message: str, deterministic: bool) -> None:
    stamp = "" if deterministic else time.strftime("[%Y-%m-%d %H:%M:%S] ")
    print(f"{stamp}{message}", file=sys.stdout, flush=True)


def _checkpoint_arrays(
    state: ModelState,
    adam: dict[str, AdamState],
    epochs_done: int,
    history: list[tuple[int, float, float, float]],
) -> dict[str, np.ndarray]:
    arrays: dict[str, np.ndarray] = {}
    for name, value in state.params.items():
        arrays[f"model/{name}"] = value
    for name, st in adam.items():
        arrays[f"adam/m/{name}"] = st.m
        arrays[f"adam/v/{name}"] = st.v
    t = next(iter(adam.values())).t if adam else 0
    arrays["meta/adam_t"] = np.asarray(float(t))
    arrays["meta/epochs_done"] = np.asarray(float(epochs_done))
    arrays["metrics/loss"] = np.asarray([h[2] for h in history], dtype=np.float64)
    arrays["metrics/lr"] = np.asarray([h[1] for h in history], dtype=np.float64)
    arrays["metrics/train_acc"] = np.asarray([h[3] for h in history], dtype=np.float64)
    return arrays


def _restore(path: Path, expect_config: RunConfig | None):
    arrays, text = load_arrays(path)
    config = config_from_text(text)
    if (
        expect_config is not None
        and expect_config.trajectory_text() != config.trajectory_text()
    ):
        raise CheckpointError("checkpoint config differs from the requested run config")
    state = init_model(config.net, seed=(config.seed, 0), dtype=config.np_dtype)
    for name in state.params:
        key = f"model/{name}"
        if key not in arrays:
            raise CheckpointError(f"checkpoint is missing {key}")
        if arrays[key].shape != state.params[name].shape:
            raise CheckpointError(f"{key}: shape/dtype inconsistency")
        state.params[name] = arrays[key].astype(config.np_dtype)
    hyper = dataclasses.asdict(config.optimizer)
    t = int(arrays["meta/adam_t"])
    adam = {}
    for name in state.trainable_names():
        adam[name] = AdamState(
            m=arrays[f"adam/m/{name}"].astype(config.np_dtype),
            v=arrays[f"adam/v/{name}"].astype(config.np_dtype),
            t=t,
            **hyper,
        )
    epochs_done = int(arrays["meta/epochs_done"])
    history = [
        (i, float(lr), float(loss), float(acc))
        for i, (lr, loss, acc) in enumerate(
            zip(arrays["metrics/lr"], arrays["metrics/loss"], arrays["metrics/train_acc"])
        )
    ]
    return state, adam, epochs_done, history, config


def _write_metrics(out_dir: Path, history: list[tuple[int, float, float, float]]) -> None:
    lines = [f"{e}\t{lr!r}\t{loss!r}\t{acc!r}\n" for e, lr, loss, acc in history]
    (out_dir / "metrics.tsv").write_text("".join(lines), encoding="utf-8")


def _first_nonfinite_tensor(
    state: ModelState, frames, boxes, dropout_seed
) -> str:
    """Replay the forward pass op by op and name the first bad tensor."""
    from ..net.model import collect_instances
    from ..roialign import roi_align_forward_batch

    if not np.isfinite(frames).all():
        return "fused_frames"
    cfg = state.config
    p = state.params
    x = frames.reshape(-1, *frames.shape[2:])
    for i in range(len(cfg.conv_channels)):
        x, _ = ops.conv2d(x, p[f"stage{i}.conv.kernel"], p[f"stage{i}.conv.bias"])
        if not np.isfinite(x).all():
            return f"stage{i}.conv"
        x, _, _, _ = ops.batchnorm(
            x, p[f"stage{i}.bn.gamma"], p[f"stage{i}.bn.beta"],
            p[f"stage{i}.bn.running_mean"], p[f"stage{i}.bn.running_var"],
            momentum=0.0, eps=cfg.bn_eps, training=True,
        )
        if not np.isfinite(x).all():
            return f"stage{i}.bn"
        x, _ = ops.relu_maxpool(x)

    box_arr, map_idx, _, _, _ = collect_instances(boxes, frames.shape[1])
    rois = roi_align_forward_batch(x, box_arr, map_idx, cfg.roi)
    if not np.isfinite(rois).all():
        return "roi_features"
    flat = rois.reshape(len(box_arr), -1)
    h1, _ = ops.dense_dropout(
        flat, p["fc1.weights"], p["fc1.bias"],
        keep_p=cfg.dropout_keep, training=True, seed=dropout_seed,
    )
    if not np.isfinite(h1).all():
        return "fc1"
    return "logits"


def train(config: RunConfig, resume: str | Path | None = None) -> TrainResult:
    """Run the configured training; writes checkpoints and metrics under out_dir."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    root = prepare_dataset(config)
    store = SnippetStore(root, config)
    entries = store.split("train")
    dtype = config.np_dtype
    seed = config.seed
    num_classes = config.net.num_classes
    config_text = config_to_text(config)
    last_path = out_dir / "checkpoint_last.ckpt"
    best_path = out_dir / "checkpoint_best.ckpt"

    if resume is not None:
        state, adam, epochs_done, history, _ = _restore(Path(resume), config)
        _log(f"resumed from {resume} at epoch {epochs_done}", config.deterministic)
    else:
        state = init_model(config.net, seed=(seed, 0), dtype=dtype)
        hyper = dataclasses.asdict(config.optimizer)
        adam = {
            name: AdamState.for_param(state.params[name], **hyper)
            for name in state.trainable_names()
        }
        epochs_done = 0
        history: list[tuple[int, float, float, float]] = []
        save_arrays(last_path, _checkpoint_arrays(state, adam, 0, history), config_text)

    check_class_count(store.get(entries[0]), num_classes)
    best_acc: float | None = None

    for epoch in range(epochs_done, config.epochs):
        lr = lr_at_epoch(config.schedule, epoch)
        order = np.random.default_rng((seed, 1, epoch)).permutation(len(entries))
        loss_sum = 0.0
        batches = 0
        correct = 0
        total = 0
        for step, start in enumerate(range(0, len(order), config.batch_size)):
            sids = order[start : start + config.batch_size]
            snippets = [store.get(entries[sid]) for sid in sids]
            fused = [
                swtf_preprocess(
                    sn, config.fusion, "random", seed=(seed, 2, epoch, int(sid))
                )[0]
                for sid, sn in zip(sids, snippets)
            ]
            frames = np.stack(fused).astype(dtype)
            boxes = [sn.boxes for sn in snippets]
            logits, subjects, cache = model_forward(
                state, frames, boxes, training=True, dropout_seed=(seed, 3, epoch, step)
            )
            targets = subject_targets(snippets, subjects, num_classes)
            loss, grad_logits = ops.bce_with_logits(logits, targets)
            if not np.isfinite(loss):
                bad = _first_nonfinite_tensor(state, frames, boxes, (seed, 3, epoch, step))
                raise TrainAbort(
                    f"non-finite loss at epoch {epoch} step {step}; "
                    f"first non-finite tensor: {bad}"
                )
            grads = model_backward(state, grad_logits, cache)
            for name, g in grads.items():
                state.params[name], adam[name] = adam_step(
                    state.params[name], g.astype(dtype, copy=False), adam[name], lr
                )
            loss_sum += loss
            batches += 1
            correct += int(
                (np.argmax(logits, axis=1) == np.argmax(targets, axis=1)).sum()
            )
            total += len(subjects)

        mean_loss = loss_sum / batches
        train_acc = correct / total
        history.append((epoch, lr, mean_loss, train_acc))
        save_arrays(
            last_path, _checkpoint_arrays(state, adam, epoch + 1, history), config_text
        )
        _write_metrics(out_dir, history)
        _log(
            f"epoch {epoch}: lr={lr:g} loss={mean_loss:.6f} train_acc={train_acc:.4f}",
            config.deterministic,
        )

        if config.eval_every and (epoch + 1) % config.eval_every == 0:
            report = evaluate_state(state, store, "test", config)
            _log(f"epoch {epoch}: test_acc={report.accuracy:.4f}", config.deterministic)
            if best_acc is None or report.accuracy > best_acc:
                best_acc = report.accuracy
                save_arrays(
                    best_path,
                    _checkpoint_arrays(state, adam, epoch + 1, history),
                    config_text,
                )
            if config.target_accuracy and report.accuracy >= config.target_accuracy:
                _log(
                    f"target accuracy {config.target_accuracy:g} reached, stopping",
                    config.deterministic,
                )
                break

    return TrainResult(
        state=state,
        history=history,
        last_checkpoint=last_path,
        best_checkpoint=best_path if best_acc is not None else None,
        best_test_accuracy=best_acc,
    )


def evaluate_state(
    state: ModelState, store: SnippetStore, split: str, config: RunConfig,
    loss_curve: list[float] | None = None,
) -> MetricsReport:
    """Inference-mode evaluation: center sampling, frozen statistics."""
    entries = store.split(split)
    num_classes = state.config.num_classes
    check_class_count(store.get(entries[0]), num_classes)
    confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
    for start in range(0, len(entries), config.batch_size):
        snippets = [store.get(e) for e in entries[start : start + config.batch_size]]
        fused = [swtf_preprocess(sn, config.fusion, "center")[0] for sn in snippets]
        frames = np.stack(fused).astype(config.np_dtype)
        boxes = [sn.boxes for sn in snippets]
        logits, subjects, _ = model_forward(state, frames, boxes, training=False)
        targets = subject_targets(snippets, subjects, num_classes)
        pred = np.argmax(logits, axis=1)
        true = np.argmax(targets, axis=1)
        np.add.at(confusion, (true, pred), 1)
    per_class_total = confusion.sum(axis=1)
    per_class = np.divide(
        np.diag(confusion), per_class_total,
        out=np.zeros(num_classes), where=per_class_total > 0,
    )
    accuracy = float(np.trace(confusion) / confusion.sum())
    return MetricsReport(
        accuracy=accuracy,
        per_class_accuracy=per_class,
        confusion=confusion,
        loss_curve=list(loss_curve) if loss_curve else [],
    )


def evaluate(checkpoint_path: str | Path, split: str = "test") -> MetricsReport:
    """Load a checkpoint (config snapshot included) and evaluate a split."""
    state, _, _, history, config = _restore(Path(checkpoint_path), None)
    store = SnippetStore(prepare_dataset(config), config)
    return evaluate_state(
        state, store, split, config, loss_curve=[h[2] for h in history]
    )
