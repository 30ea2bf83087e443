"""Matrix product state with an output leg: forward sweep and reverse pass.

The chain has ``n_sites`` sites.  Site ``i`` holds a tensor of shape
``(chi_left, 2, chi_right)``; one designated output site carries an extra
trailing leg of extent ``output_dim``.  Boundary bonds have extent 1 and
every interior bond has extent ``bond_dim``.

Internally all ordinary sites live in one zero-padded array of shape
``(n_sites, chi, 2, chi)`` so the sweep kernels can walk the chain without
per-site Python objects.  :attr:`MpsModel.sites` exposes views with the
true shapes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError, InputError, NumericError, UsageError
from .tensor import DenseTensor, contract

__all__ = [
    "MpsModel",
    "MpsGradient",
    "ContractionTrace",
    "init_mps",
    "mps_forward",
    "mps_backward",
    "mps_classify_logits",
    "full_tensor",
    "calibrate_site_scales",
]

# the 392nd of 784 sites, counted from one
DEFAULT_OUTPUT_SITE = 391


def _bond_extents(n_sites: int, chi: int, i: int) -> tuple[int, int]:
    return (1 if i == 0 else chi), (1 if i == n_sites - 1 else chi)


class MpsModel:
    """Trainable MPS feature extractor / classifier.

    Args:
        cores: padded ordinary-site tensors, shape ``(n_sites, chi, 2, chi)``.
        out_core: padded output-site tensor, shape ``(chi, 2, chi, output_dim)``.
        output_site: zero-based position of the output site.
    """

    def __init__(self, cores: np.ndarray, out_core: np.ndarray, output_site: int):
        cores = np.ascontiguousarray(cores, dtype=np.float64)
        out_core = np.ascontiguousarray(out_core, dtype=np.float64)
        if cores.ndim != 4 or cores.shape[2] != 2 or cores.shape[1] != cores.shape[3]:
            raise ConfigError(f"bad core array shape {cores.shape}")
        n, chi = cores.shape[0], cores.shape[1]
        if out_core.shape[:3] != (chi, 2, chi) or out_core.ndim != 4:
            raise ConfigError(f"bad output core shape {out_core.shape} for bond dimension {chi}")
        if not 0 <= output_site < n:
            raise ConfigError(f"output site {output_site} outside chain of {n} sites")
        self.cores = cores
        self.out_core = out_core
        self.output_site = int(output_site)
        self._version = 0
        self._mask_padding()

    @property
    def n_sites(self) -> int:
        return self.cores.shape[0]

    @property
    def bond_dim(self) -> int:
        return self.cores.shape[1]

    @property
    def output_dim(self) -> int:
        return self.out_core.shape[3]

    @property
    def version(self) -> int:
        """Counter bumped by :meth:`mark_modified`; traces use it to detect staleness."""
        return self._version

    def mark_modified(self):
        self._version += 1

    def parameters(self) -> list[np.ndarray]:
        """The arrays an optimizer updates in place."""
        return [self.cores, self.out_core]

    def bond_extents(self, i: int) -> tuple[int, int]:
        return _bond_extents(self.n_sites, self.bond_dim, i)

    @property
    def sites(self) -> list[np.ndarray]:
        """Per-site views with their true (unpadded) shapes."""
        return _site_views(self.cores, self.out_core, self.output_site)

    def num_parameters(self) -> int:
        return sum(s.size for s in self.sites)

    def copy(self) -> MpsModel:
        return MpsModel(self.cores.copy(), self.out_core.copy(), self.output_site)

    def _mask_padding(self):
        n = self.n_sites
        self.cores[0, 1:] = 0.0
        self.cores[-1, :, :, 1:] = 0.0
        self.cores[self.output_site] = 0.0
        k = self.output_site
        if k == 0:
            self.out_core[1:] = 0.0
        if k == n - 1:
            self.out_core[:, :, 1:] = 0.0


def _site_views(cores, out_core, k) -> list[np.ndarray]:
    n, chi = cores.shape[0], cores.shape[1]
    views = []
    for i in range(n):
        cl, cr = _bond_extents(n, chi, i)
        if i == k:
            views.append(out_core[:cl, :, :cr, :])
        else:
            views.append(cores[i, :cl, :, :cr])
    return views


@dataclass
class MpsGradient:
    """Gradient with the same padded layout as :class:`MpsModel`."""

    cores: np.ndarray
    out_core: np.ndarray
    output_site: int

    @property
    def sites(self) -> list[np.ndarray]:
        return _site_views(self.cores, self.out_core, self.output_site)

    def arrays(self) -> list[np.ndarray]:
        return [self.cores, self.out_core]


@dataclass(frozen=True)
class ContractionTrace:
    """Cached environments from :func:`mps_forward`, consumed by :func:`mps_backward`."""

    model_id: int
    model_version: int
    phi: np.ndarray
    left: np.ndarray
    right: np.ndarray
    batched: bool
    products: int


def init_mps(
    n_sites: int = 784,
    chi: int = 1,
    d_out: int = 4,
    output_site: int | None = None,
    seed: int = 0,
    noise: float = 1e-2,
    site_scales=None,
) -> MpsModel:
    """Identity-plus-noise initialization.

    Every ordinary site starts as an identity matrix on the bond indices for
    both physical values, plus i.i.d. Gaussian noise of scale ``noise``.  The
    output-site tensor is pure noise of the same scale.

    Args:
        site_scales: optional per-site multipliers applied to the ordinary
            cores after noise is added; see :func:`calibrate_site_scales`.
    """
    if chi < 1:
        raise InputError(f"bond dimension must be >= 1, got {chi}")
    if d_out < 1:
        raise InputError(f"output dimension must be >= 1, got {d_out}")
    if n_sites < 1:
        raise InputError(f"need at least one site, got {n_sites}")
    if output_site is None:
        output_site = min(DEFAULT_OUTPUT_SITE, n_sites // 2)
    if not 0 <= output_site < n_sites:
        raise InputError(f"output site {output_site} outside chain of {n_sites} sites")
    rng = np.random.default_rng(seed)
    cores = np.zeros((n_sites, chi, 2, chi))
    out_core = np.zeros((chi, 2, chi, d_out))
    for i in range(n_sites):
        cl, cr = _bond_extents(n_sites, chi, i)
        if i == output_site:
            out_core[:cl, :, :cr, :] = noise * rng.standard_normal((cl, 2, cr, d_out))
            continue
        block = np.zeros((cl, 2, cr))
        for s in range(2):
            block[:, s, :] = np.eye(cl, cr)
        cores[i, :cl, :, :cr] = block + noise * rng.standard_normal((cl, 2, cr))
    if site_scales is not None:
        site_scales = np.asarray(site_scales, dtype=np.float64)
        if site_scales.shape != (n_sites,) or np.any(site_scales <= 0):
            raise InputError("site_scales must hold one positive factor per site")
        cores *= site_scales[:, None, None, None]
    return MpsModel(cores, out_core, output_site)


def calibrate_site_scales(images) -> np.ndarray:
    """Per-site factors that keep the initial chain product O(1).

    An identity core contracted with ``(cos t, sin t)`` multiplies the bond
    state by ``cos t + sin t``, which is 1 for blank and saturated pixels but
    up to sqrt(2) in between; over hundreds of grey pixels the product
    reaches 1e10.  Dividing site ``i`` by the geometric mean of that factor
    over ``images`` centres the log of the product at zero, and leaves sites
    that are blank in every image as exact identities.
    """
    x = np.asarray(images, dtype=np.float64)
    angle = 0.5 * np.pi * x
    log_gain = np.log(np.cos(angle) + np.sin(angle))
    return np.exp(-log_gain.mean(axis=0))


def mps_forward(model: MpsModel, phi) -> tuple[np.ndarray, ContractionTrace]:
    """Contract the MPS with product-state input(s).

    Args:
        model: the MPS.
        phi: one product state of shape ``(n_sites, 2)`` or a batch of shape
            ``(B, n_sites, 2)``.

    Returns:
        The output vector(s), shape ``(output_dim,)`` or ``(B, output_dim)``,
        and the trace needed by :func:`mps_backward`.

    Raises:
        InputError: wrong number of sites.
        NumericError: an environment norm left ``[1e-100, 1e100]``.
    """
    phi = np.asarray(phi, dtype=np.float64)
    batched = phi.ndim == 3
    if not batched:
        phi = phi[None]
    if phi.ndim != 3 or phi.shape[1:] != (model.n_sites, 2):
        raise InputError(
            f"expected product state(s) with {model.n_sites} sites of dimension 2, got {phi.shape}"
        )
    phi = np.ascontiguousarray(phi)
    out, left, right, products, status = kernels.forward(
        model.cores, model.out_core, phi, model.output_site
    )
    if status == 1:
        raise NumericError("MPS environment overflow (norm > 1e100) during the forward sweep")
    if status == 2:
        raise NumericError("MPS environment underflow (norm < 1e-100) during the forward sweep")
    trace = ContractionTrace(id(model), model.version, phi, left, right, batched, products)
    return (out if batched else out[0]), trace


def mps_backward(
    model: MpsModel, trace: ContractionTrace, upstream
) -> tuple[MpsGradient, np.ndarray]:
    """Reverse pass of :func:`mps_forward`.

    Computes the gradient of ``sum_b <upstream_b, f_b>`` with respect to every
    site tensor (summed over the batch) and with respect to each product-state
    entry (per sample).

    Raises:
        UsageError: the trace belongs to another model or the model changed.
    """
    if trace.model_id != id(model) or trace.model_version != model.version:
        raise UsageError("stale contraction trace: the model changed since the forward pass")
    g = np.asarray(upstream, dtype=np.float64)
    if not trace.batched:
        g = g[None]
    if g.shape != (trace.phi.shape[0], model.output_dim):
        raise UsageError(f"upstream gradient shape {g.shape} does not match the forward output")
    gc, go, gp, products = kernels.backward(
        model.cores,
        model.out_core,
        trace.phi,
        model.output_site,
        trace.left,
        trace.right,
        np.ascontiguousarray(g),
    )
    grad = MpsGradient(gc, go, model.output_site)
    return grad, (gp if trace.batched else gp[0])


def mps_classify_logits(model: MpsModel, phi) -> np.ndarray:
    """Class scores of the standalone two-class MPS classifier."""
    if model.output_dim != 2:
        raise ConfigError(f"classifier needs output_dim 2, model has {model.output_dim}")
    return mps_forward(model, phi)[0]


def full_tensor(model: MpsModel) -> DenseTensor:
    """Contract every bond, giving a rank ``n_sites + 1`` tensor.

    The physical legs come first in site order, then the output leg.  Cost is
    exponential in the chain length; this is a test oracle for short chains.
    """
    k = model.output_site

    def as_tensor(i: int) -> DenseTensor:
        site = model.sites[i]
        if i == k:
            # output leg goes to the front so the bond stays last
            site = np.moveaxis(site, 3, 0)
        return DenseTensor.from_array(site)

    acc = as_tensor(0)
    for i in range(1, model.n_sites):
        acc = contract(acc, as_tensor(i), [(acc.rank - 1, 1 if i == k else 0)])
        if i == k:
            arr = np.moveaxis(acc.array, acc.rank - 3, 0)
            acc = DenseTensor.from_array(arr)
    # legs: (out, 1, s_0 .. s_{n-1}, 1)
    arr = acc.array.reshape((model.output_dim,) + (2,) * model.n_sites)
    return DenseTensor.from_array(np.moveaxis(arr, 0, -1))
