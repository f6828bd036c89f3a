"""Segmentation model loading and inference.

A model reference is either

* ``torchvision:<builder>[:weights]`` -- a builder from
  ``torchvision.models.detection`` (e.g. ``maskrcnn_resnet50_fpn``);
  ``weights`` is ``default`` (pretrained, requires download access) or
  ``untrained`` (random initialization, useful for interface smoke tests);
* a path to a TorchScript file taking a list of CHW float tensors and
  returning the standard detection dicts (boxes/labels/scores/masks).

torch/torchvision import lazily so polygon-conversion mode works without
a deep-learning runtime installed.
"""

from __future__ import annotations

import numpy as np


class ModelLoadError(RuntimeError):
    """The model reference could not be resolved into a runnable model."""


def load_model(reference: str):
    try:
        import torch
    except ImportError as exc:
        raise ModelLoadError(
            f"model mode needs torch installed (pip install 'detector-export[model]'): {exc}"
        ) from exc

    if reference.startswith("torchvision:"):
        parts = reference.split(":")
        builder_name = parts[1] if len(parts) > 1 else ""
        weights_spec = parts[2] if len(parts) > 2 else "default"
        try:
            from torchvision.models import detection
        except ImportError as exc:
            raise ModelLoadError(f"torchvision unavailable: {exc}") from exc
        builder = getattr(detection, builder_name, None)
        if builder is None:
            raise ModelLoadError(f"no torchvision detection builder named {builder_name!r}")
        try:
            if weights_spec == "untrained":
                model = builder(weights=None, weights_backbone=None)
            elif weights_spec == "default":
                model = builder(weights="DEFAULT")
            else:
                raise ModelLoadError(f"unknown weights spec {weights_spec!r}")
        except ModelLoadError:
            raise
        except Exception as exc:
            raise ModelLoadError(f"cannot build {reference!r}: {exc}") from exc
    else:
        try:
            model = torch.jit.load(reference, map_location="cpu")
        except Exception as exc:
            raise ModelLoadError(f"cannot load TorchScript model {reference!r}: {exc}") from exc
    model.eval()
    return model


def run_inference(model, image: np.ndarray, conf_threshold: float) -> list[dict]:
    """Detect instances on one RGB/grayscale uint8 image.

    Returns dicts with ``label`` (class id as string), ``score``, and a
    boolean ``mask``; detections below the confidence threshold or with an
    empty binarized mask are dropped.
    """
    import torch

    if image.ndim == 2:
        image = np.repeat(image[:, :, None], 3, axis=2)
    tensor = torch.from_numpy(image.astype(np.float32) / 255.0).permute(2, 0, 1)
    with torch.no_grad():
        output = model([tensor])[0]
    results = []
    masks = output.get("masks")
    if masks is None:
        return results
    scores = output["scores"].cpu().numpy()
    labels = output["labels"].cpu().numpy()
    masks = masks.cpu().numpy()
    for i in range(len(scores)):
        score = float(scores[i])
        if score < conf_threshold:
            continue
        mask = masks[i, 0] >= 0.5
        if not mask.any():
            continue
        results.append({"label": str(int(labels[i])), "score": score, "mask": mask})
    return results
