"""Batch depth-map evaluation: losses, affine alignment, colorized frames.

Frames (predictions) are matched to references by file stem. Every
input problem is enumerated up front; nothing is written unless the
whole batch validates. Predictions are preprocessed (resampled to the
reference dims and min-max normalized); references are taken as-is,
since they play the role of real-world measurements.

Without feature files the alignment loss is zero; pseudo-label and
cutmix losses are evaluated against the references (the only labels an
offline batch has), so the cutmix term equals the pseudo term under
its default all-true mask.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .. import depth

CSV_FIELDS = ("frame", "l_labeled", "l_pseudo", "l_cutmix", "l_align",
              "l_total", "scale", "shift", "aligned_mae")

_DEPTH_EXTS = (".pgm", ".txt", ".grid")


class DepthEvalError(ValueError):
    pass


@dataclass
class FrameResult:
    frame: str
    l_labeled: float
    l_pseudo: float
    l_cutmix: float
    l_align: float
    l_total: float
    scale: float
    shift: float
    aligned_mae: float


def _index_dir(directory: Path, exts: tuple[str, ...]) -> dict[str, Path]:
    if not directory.is_dir():
        raise DepthEvalError(f"not a directory: {directory}")
    out: dict[str, Path] = {}
    for p in sorted(directory.iterdir()):
        if p.suffix.lower() in exts and p.is_file():
            if p.stem in out:
                raise DepthEvalError(f"duplicate stem {p.stem!r} in {directory}")
            out[p.stem] = p
    return out


def _validate_pairing(frames: dict[str, Path], refs: dict[str, Path],
                      what: str) -> list[str]:
    problems = []
    for stem in frames:
        if stem not in refs:
            problems.append(f"frame {stem!r} has no matching {what}")
    for stem in refs:
        if stem not in frames:
            problems.append(f"{what} {stem!r} has no matching frame")
    return problems


def depth_eval(frames_dir: Union[str, Path], refs_dir: Union[str, Path],
               weights: depth.LossWeights, out_dir: Union[str, Path],
               feats_dir: Union[str, Path, None] = None,
               pre_feats_dir: Union[str, Path, None] = None,
               ) -> list[FrameResult]:
    """Evaluate every frame/ref pair; write metrics.csv and colorized
    frames into out_dir. Returns the per-frame results."""
    weights.validate()
    frames = _index_dir(Path(frames_dir), _DEPTH_EXTS)
    refs = _index_dir(Path(refs_dir), _DEPTH_EXTS)
    if not frames:
        raise DepthEvalError(f"no depth maps found in {frames_dir}")
    problems = _validate_pairing(frames, refs, "reference")

    feats: Optional[dict[str, Path]] = None
    pre_feats: Optional[dict[str, Path]] = None
    if (feats_dir is None) != (pre_feats_dir is None):
        raise DepthEvalError("feature dirs must be given together")
    if feats_dir is not None:
        feats = _index_dir(Path(feats_dir), (".txt", ".feat"))
        pre_feats = _index_dir(Path(pre_feats_dir), (".txt", ".feat"))
        problems += _validate_pairing(frames, feats, "feature set")
        problems += _validate_pairing(frames, pre_feats, "pretrained feature set")
    if problems:
        raise DepthEvalError("input validation failed:\n  "
                             + "\n  ".join(problems))

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = []
    for stem, frame_path in frames.items():
        pred_raw = depth.read_depth(frame_path)
        ref = depth.read_depth(refs[stem])
        pred = depth.preprocess(pred_raw, ref.width, ref.height)

        l_labeled = depth.labeled_loss(pred, ref)
        l_pseudo = depth.pseudo_loss(pred, ref)
        mask = np.ones(ref.values.shape, dtype=bool)
        l_cutmix = depth.cutmix_loss(pred, ref, ref, mask)
        if feats is not None:
            l_align = depth.align_loss(depth.read_features(feats[stem]),
                                       depth.read_features(pre_feats[stem]),
                                       weights.alpha)
        else:
            l_align = 0.0
        l_total = depth.total_loss(l_labeled,
                                   depth.unlabeled_loss(l_pseudo, l_cutmix),
                                   l_align, weights)
        try:
            fit = depth.fit_affine(pred, ref)
        except depth.DepthError as exc:
            raise DepthEvalError(f"frame {stem!r}: {exc}") from None
        aligned_mae = depth.labeled_loss(fit.apply(pred), ref)

        depth.write_ppm(out / f"{stem}.ppm", depth.colorize(pred))
        results.append(FrameResult(
            frame=stem, l_labeled=l_labeled, l_pseudo=l_pseudo,
            l_cutmix=l_cutmix, l_align=l_align, l_total=l_total,
            scale=fit.scale, shift=fit.shift, aligned_mae=aligned_mae))

    with open(out / "metrics.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_FIELDS)
        for r in results:
            writer.writerow([r.frame] + [repr(getattr(r, k))
                                         for k in CSV_FIELDS[1:]])
    return results
