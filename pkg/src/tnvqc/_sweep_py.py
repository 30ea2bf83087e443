"""Pure numpy implementation of the batched MPS sweep kernels.

Layout shared with the compiled kernel in ``_sweep_ext.pyx``:

* ``cores``     (N, chi, 2, chi): site tensors, zero padded at the chain
  ends; slot ``k`` (the output site) is ignored.
* ``out_core``  (chi, 2, chi, d): the output-site tensor.
* ``phi``       (B, N, 2): product-state inputs.
* ``left``      (B, k + 1, chi): ``left[:, i]`` is the environment entering
  site ``i`` from the left.
* ``right``     (B, N - k, chi): ``right[:, i - k]`` is the environment
  entering site ``i`` from the right.

Both kernels return the number of bond-matrix products they performed.
"""

from __future__ import annotations

import numpy as np

ENV_MAX = 1e100
ENV_MIN = 1e-100


def _env_status(envs: np.ndarray) -> int:
    """0 if every environment norm is sane, 1 on overflow, 2 on underflow."""
    norms = np.sqrt(np.einsum("...a,...a->...", envs, envs))
    if not np.all(np.isfinite(norms)) or np.any(norms > ENV_MAX):
        return 1
    if np.any((norms > 0.0) & (norms < ENV_MIN)):
        return 2
    return 0


def forward(cores, out_core, phi, k):
    n_sites, chi = cores.shape[0], cores.shape[1]
    batch = phi.shape[0]
    left = np.zeros((batch, k + 1, chi))
    right = np.zeros((batch, n_sites - k, chi))
    left[:, 0, 0] = 1.0
    right[:, -1, 0] = 1.0
    products = 0
    for i in range(k):
        mat = np.einsum("bs,asc->bac", phi[:, i], cores[i])
        left[:, i + 1] = np.matmul(left[:, i, None, :], mat)[:, 0]
        products += 1
    for i in range(n_sites - 1, k, -1):
        mat = np.einsum("bs,asc->bac", phi[:, i], cores[i])
        right[:, i - k - 1] = np.matmul(mat, right[:, i - k, :, None])[..., 0]
        products += 1
    status = max(_env_status(left), _env_status(right))
    out = np.einsum("ba,bs,asco,bc->bo", left[:, k], phi[:, k], out_core, right[:, 0])
    return out, left, right, products, status


def backward(cores, out_core, phi, k, left, right, grad_out):
    n_sites = cores.shape[0]
    grad_cores = np.zeros_like(cores)
    grad_phi = np.zeros_like(phi)
    products = 0

    lk, rk, pk = left[:, k], right[:, 0], phi[:, k]
    grad_out_core = np.einsum("ba,bs,bc,bo->asco", lk, pk, rk, grad_out)
    weighted = np.einsum("bo,asco->basc", grad_out, out_core)
    grad_phi[:, k] = np.einsum("ba,basc,bc->bs", lk, weighted, rk)
    mat_k = np.einsum("bs,basc->bac", pk, weighted)

    # sweep leftwards carrying the upstream-weighted right environment
    v = np.matmul(mat_k, rk[..., None])[..., 0]
    for i in range(k - 1, -1, -1):
        li, pi = left[:, i], phi[:, i]
        grad_cores[i] = np.einsum("ba,bs,bc->asc", li, pi, v)
        grad_phi[:, i] = np.einsum("ba,asc,bc->bs", li, cores[i], v)
        if i > 0:
            v = np.matmul(np.einsum("bs,asc->bac", pi, cores[i]), v[..., None])[..., 0]
            products += 1

    w = np.matmul(lk[:, None, :], mat_k)[:, 0]
    for i in range(k + 1, n_sites):
        ri, pi = right[:, i - k], phi[:, i]
        grad_cores[i] = np.einsum("ba,bs,bc->asc", w, pi, ri)
        grad_phi[:, i] = np.einsum("ba,asc,bc->bs", w, cores[i], ri)
        if i < n_sites - 1:
            w = np.matmul(w[:, None, :], np.einsum("bs,asc->bac", pi, cores[i]))[:, 0]
            products += 1
    return grad_cores, grad_out_core, grad_phi, products
