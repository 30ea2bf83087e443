"""Pixel normalization, the cosine/sine product-state embedding, and PCA."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InputError

N_PIXELS = 784

__all__ = [
    "N_PIXELS",
    "PcaModel",
    "normalize_pixels",
    "local_feature_map",
    "embed_image",
    "embed_batch",
    "fit_pca",
    "pca_project",
]


def normalize_pixels(raw) -> np.ndarray:
    """Map raw 0..255 bytes to [0, 1].

    Accepts a single image of 784 values or a 2-D batch of them.
    """
    arr = np.asarray(raw)
    if arr.shape[-1:] != (N_PIXELS,) or arr.ndim > 2:
        raise InputError(f"expected {N_PIXELS} pixels per image, got shape {arr.shape}")
    if arr.size and (arr.min() < 0 or arr.max() > 255):
        raise InputError("pixel values must lie in 0..255")
    if not np.all(arr == np.round(arr)):
        raise InputError("pixel values must be integers")
    return arr.astype(np.float64) / 255.0


def _check_unit_interval(x: np.ndarray):
    if not np.all(np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise InputError("feature-map inputs must lie in [0, 1]")


def local_feature_map(x) -> np.ndarray:
    """Return ``(cos(pi x / 2), sin(pi x / 2))`` along a new trailing axis."""
    x = np.asarray(x, dtype=np.float64)
    _check_unit_interval(x)
    angle = 0.5 * np.pi * x
    return np.stack([np.cos(angle), np.sin(angle)], axis=-1)


def embed_image(img) -> np.ndarray:
    """Embed one normalized image as a product state of shape (784, 2)."""
    img = np.asarray(img, dtype=np.float64)
    if img.shape != (N_PIXELS,):
        raise InputError(f"expected an image of {N_PIXELS} values, got shape {img.shape}")
    return local_feature_map(img)


def embed_batch(images) -> np.ndarray:
    """Embed a (B, n) batch of normalized images as a (B, n, 2) array.

    Unlike :func:`embed_image` any pixel count is accepted, which the
    short toy chains in the tests rely on.
    """
    images = np.asarray(images, dtype=np.float64)
    if images.ndim != 2:
        raise InputError(f"expected a 2-D batch, got shape {images.shape}")
    return local_feature_map(images)


@dataclass(frozen=True)
class PcaModel:
    """Mean vector plus leading principal directions (one per row)."""

    mean: np.ndarray
    components: np.ndarray
    explained_variances: np.ndarray

    @property
    def n_components(self) -> int:
        return self.components.shape[0]


def fit_pca(train_images, n_components: int = 4) -> PcaModel:
    """Fit PCA by eigendecomposition of the sample covariance.

    The covariance uses the unbiased ``n - 1`` normalization and no
    whitening is applied.  Each component is flipped so that its entry of
    largest magnitude is positive; ties go to the lowest index.

    Raises:
        InputError: fewer than ``n_components + 1`` images.
    """
    x = np.asarray(train_images, dtype=np.float64)
    if x.ndim != 2:
        raise InputError(f"expected a 2-D array of images, got shape {x.shape}")
    if x.shape[0] < n_components + 1:
        raise InputError(f"need at least {n_components + 1} samples, got {x.shape[0]}")
    if n_components > x.shape[1]:
        raise InputError("more components requested than features")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (x.shape[0] - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:n_components]
    evals = np.clip(evals[order], 0.0, None)
    comps = evecs[:, order].T.copy()
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaModel(mean=mean, components=comps, explained_variances=evals)


def pca_project(model: PcaModel, img) -> np.ndarray:
    """Project one image (or a batch, row-wise) onto the principal directions."""
    img = np.asarray(img, dtype=np.float64)
    if img.shape[-1] != model.mean.shape[0]:
        raise DimensionError(
            f"image has {img.shape[-1]} features, model expects {model.mean.shape[0]}"
        )
    return (img - model.mean) @ model.components.T
