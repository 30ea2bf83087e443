"""Exact 4-qubit statevector simulation of the encode + variational circuit.

Qubit 1 is the most significant bit of the basis index, so ``|1000>`` is
amplitude 8.  Every state function accepts either one state of shape
``(16,)`` or a batch of shape ``(B, 16)``.

Circuit, per sample::

    H on every qubit
    Ry(arctan x_i), Rz(arctan x_i**2) on qubit i
    CNOT 1->2, 2->3, 3->4, 4->1
    Rz(alpha_i), Ry(beta_i), Rz(gamma_i) on qubit i
    <Z_1>, <Z_2>

Gradients use adjoint differentiation: one forward pass recording the gate
sequence, then one backward pass that un-applies gates to both the state
and the observable-weighted co-state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AxisError, InputError, StateError

N_QUBITS = 4
DIM = 2**N_QUBITS
N_PARAMS = 3 * N_QUBITS
N_MEASURED = 2

_SQRT_HALF = np.sqrt(0.5)

__all__ = [
    "N_QUBITS",
    "N_PARAMS",
    "hadamard",
    "ry",
    "rz",
    "cnot",
    "rot",
    "zero_state",
    "apply_single",
    "apply_cnot",
    "encode",
    "variational_block",
    "measure_z",
    "vqc_forward",
    "vqc_backward",
    "init_params",
]


def _check_angle(theta):
    theta = np.asarray(theta, dtype=np.float64)
    if not np.all(np.isfinite(theta)):
        raise InputError("rotation angles must be finite")
    return theta


def hadamard() -> np.ndarray:
    return np.array([[1, 1], [1, -1]], dtype=np.complex128) * _SQRT_HALF


def ry(theta) -> np.ndarray:
    """Y rotation; a batch of angles gives a batch of matrices."""
    theta = _check_angle(theta)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2).astype(np.complex128)


def rz(theta) -> np.ndarray:
    theta = _check_angle(theta)
    e = np.exp(-0.5j * theta)
    zero = np.zeros_like(e)
    return np.stack([np.stack([e, zero], -1), np.stack([zero, np.conj(e)], -1)], -2)


def cnot() -> np.ndarray:
    """4x4 CNOT with the control on the more significant qubit."""
    m = np.eye(4, dtype=np.complex128)
    m[2:, 2:] = [[0, 1], [1, 0]]
    return m


def rot(alpha, beta, gamma) -> np.ndarray:
    """General rotation ``Rz(gamma) @ Ry(beta) @ Rz(alpha)``."""
    return rz(gamma) @ ry(beta) @ rz(alpha)


def _dry(theta) -> np.ndarray:
    c, s = 0.5 * np.cos(theta / 2), 0.5 * np.sin(theta / 2)
    return np.stack([np.stack([-s, -c], -1), np.stack([c, -s], -1)], -2).astype(np.complex128)


def _drz(theta) -> np.ndarray:
    e = -0.5j * np.exp(-0.5j * theta)
    zero = np.zeros_like(e)
    return np.stack([np.stack([e, zero], -1), np.stack([zero, np.conj(e)], -1)], -2)


def zero_state(batch: int | None = None) -> np.ndarray:
    shape = (DIM,) if batch is None else (batch, DIM)
    psi = np.zeros(shape, dtype=np.complex128)
    psi[..., 0] = 1.0
    return psi


def _check_qubit(q: int):
    if not 1 <= q <= N_QUBITS:
        raise AxisError(f"qubit index {q} outside 1..{N_QUBITS}")


_LETTERS = "jklm"


def _single_subscripts(q: int) -> str:
    src = _LETTERS
    dst = _LETTERS[: q - 1] + "i" + _LETTERS[q:]
    return f"bi{_LETTERS[q - 1]},b{src}->b{dst}"


def apply_single(state, gate, qubit: int) -> np.ndarray:
    """Apply a 2x2 gate (or one gate per batch entry) to ``qubit``."""
    _check_qubit(qubit)
    state = np.asarray(state, dtype=np.complex128)
    single = state.ndim == 1
    psi = state.reshape((-1,) + (2,) * N_QUBITS)
    gate = np.asarray(gate, dtype=np.complex128)
    if gate.ndim == 2:
        gate = np.broadcast_to(gate, (psi.shape[0], 2, 2))
    out = np.einsum(_single_subscripts(qubit), gate, psi).reshape(-1, DIM)
    return out[0] if single else out


def apply_cnot(state, control: int, target: int) -> np.ndarray:
    """Flip ``target`` on every basis state whose ``control`` bit is 1."""
    _check_qubit(control)
    _check_qubit(target)
    if control == target:
        raise InputError("CNOT control and target must differ")
    state = np.asarray(state, dtype=np.complex128)
    single = state.ndim == 1
    psi = state.reshape((-1,) + (2,) * N_QUBITS)
    out = psi.copy()
    sel = [slice(None)] * (N_QUBITS + 1)
    sel[control] = 1
    sel = tuple(sel)
    # after fixing the control axis, the target axis shifts left if it came later
    t_axis = target if target < control else target - 1
    out[sel] = np.flip(psi[sel], axis=t_axis)
    out = out.reshape(-1, DIM)
    return out[0] if single else out


def _check_features(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (N_QUBITS,) or x.ndim > 2:
        raise InputError(f"expected {N_QUBITS} features per sample, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError("features must be finite")
    return x


def _check_params(params) -> np.ndarray:
    p = np.asarray(params, dtype=np.float64).reshape(-1)
    if p.shape != (N_PARAMS,):
        raise InputError(f"expected {N_PARAMS} circuit parameters, got {p.size}")
    if not np.all(np.isfinite(p)):
        raise InputError("circuit parameters must be finite")
    return p


# One recorded gate: (kind, qubits, angle per sample or None, parameter slot).
# The slot is ("x", i, "y"|"z") for encoding angles, ("p", j) for circuit
# parameters, or None for fixed gates.
@dataclass(frozen=True)
class _Op:
    kind: str
    qubits: tuple[int, ...]
    angle: np.ndarray | None = None
    slot: tuple | None = None


def _encode_ops(x: np.ndarray) -> list[_Op]:
    ops = [_Op("h", (q,)) for q in range(1, N_QUBITS + 1)]
    for i in range(N_QUBITS):
        xi = x[:, i]
        ops.append(_Op("ry", (i + 1,), np.arctan(xi), ("x", i, "y")))
        ops.append(_Op("rz", (i + 1,), np.arctan(xi * xi), ("x", i, "z")))
    return ops


def _variational_ops(params: np.ndarray, batch: int) -> list[_Op]:
    ops = [_Op("cnot", (c, t)) for c, t in ((1, 2), (2, 3), (3, 4), (4, 1))]
    for i in range(N_QUBITS):
        for j, kind in enumerate(("rz", "ry", "rz")):
            slot = 3 * i + j
            ops.append(_Op(kind, (i + 1,), np.full(batch, params[slot]), ("p", slot)))
    return ops


def _gate(op: _Op) -> np.ndarray:
    if op.kind == "h":
        return hadamard()
    return ry(op.angle) if op.kind == "ry" else rz(op.angle)


def _run(psi: np.ndarray, ops: list[_Op]) -> np.ndarray:
    for op in ops:
        if op.kind == "cnot":
            psi = apply_cnot(psi, *op.qubits)
        else:
            psi = apply_single(psi, _gate(op), op.qubits[0])
    return psi


def encode(x) -> np.ndarray:
    """Prepare the data-encoded state from ``|0000>``."""
    x = _check_features(x)
    single = x.ndim == 1
    xb = x.reshape(-1, N_QUBITS)
    psi = _run(zero_state(xb.shape[0]), _encode_ops(xb))
    return psi[0] if single else psi


def variational_block(state, params) -> np.ndarray:
    """CNOT ring followed by one general rotation per qubit."""
    p = _check_params(params)
    state = np.asarray(state, dtype=np.complex128)
    single = state.ndim == 1
    psi = state.reshape(-1, DIM)
    psi = _run(psi, _variational_ops(p, psi.shape[0]))
    return psi[0] if single else psi


def _z_signs(qubit: int) -> np.ndarray:
    bits = (np.arange(DIM) >> (N_QUBITS - qubit)) & 1
    return 1.0 - 2.0 * bits


def measure_z(state, qubit: int) -> np.ndarray | float:
    """Exact ``<Z>`` of ``qubit``.

    Raises:
        StateError: the state norm deviates from 1 by more than 1e-8.
    """
    _check_qubit(qubit)
    state = np.asarray(state, dtype=np.complex128)
    probs = np.abs(state) ** 2
    norms = probs.sum(axis=-1)
    if np.any(np.abs(norms - 1.0) > 1e-8):
        raise StateError("state is not normalized")
    val = probs @ _z_signs(qubit)
    return float(val) if state.ndim == 1 else val


def vqc_forward(x, params) -> np.ndarray:
    """``(<Z_1>, <Z_2>)`` for one feature vector, or row-wise for a batch."""
    x = _check_features(x)
    psi = variational_block(encode(x), params)
    return np.stack([measure_z(psi, q) for q in range(1, N_MEASURED + 1)], axis=-1)


def vqc_backward(x, params, upstream) -> tuple[np.ndarray, np.ndarray]:
    """Adjoint gradient of ``sum_b <upstream_b, vqc_forward(x_b, params)>``.

    Returns:
        ``(grad_params, grad_x)``: the parameter gradient summed over the
        batch, shape ``(12,)``, and the per-sample feature gradient with the
        same shape as ``x``.
    """
    x = _check_features(x)
    p = _check_params(params)
    single = x.ndim == 1
    xb = x.reshape(-1, N_QUBITS)
    g = np.asarray(upstream, dtype=np.float64).reshape(-1, N_MEASURED)
    if g.shape[0] != xb.shape[0]:
        raise InputError("upstream gradient batch does not match the features")
    batch = xb.shape[0]
    ops = _encode_ops(xb) + _variational_ops(p, batch)
    phi = _run(zero_state(batch), ops)

    weights = g @ np.stack([_z_signs(q) for q in range(1, N_MEASURED + 1)])
    lam = weights * phi

    grad_params = np.zeros(N_PARAMS)
    grad_angle_y = np.zeros((batch, N_QUBITS))
    grad_angle_z = np.zeros((batch, N_QUBITS))
    for op in reversed(ops):
        if op.kind == "cnot":
            phi = apply_cnot(phi, *op.qubits)
            lam = apply_cnot(lam, *op.qubits)
            continue
        q = op.qubits[0]
        u_dag = np.conj(np.swapaxes(_gate(op), -1, -2))
        phi = apply_single(phi, u_dag, q)
        if op.slot is not None:
            d_gate = _dry(op.angle) if op.kind == "ry" else _drz(op.angle)
            d_phi = apply_single(phi, d_gate, q)
            # d<psi|O|psi>/dtheta = 2 Re <lambda| dU |phi>
            d_theta = 2.0 * np.real(np.sum(np.conj(lam) * d_phi, axis=-1))
            if op.slot[0] == "p":
                grad_params[op.slot[1]] += d_theta.sum()
            elif op.slot[2] == "y":
                grad_angle_y[:, op.slot[1]] = d_theta
            else:
                grad_angle_z[:, op.slot[1]] = d_theta
        lam = apply_single(lam, u_dag, q)

    grad_x = grad_angle_y / (1.0 + xb**2) + grad_angle_z * 2.0 * xb / (1.0 + xb**4)
    return grad_params, (grad_x[0] if single else grad_x)


def init_params(seed: int = 0, scale: float = 1.0) -> np.ndarray:
    """Random circuit angles, uniform in ``[-scale * pi, scale * pi]``."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-np.pi * scale, np.pi * scale, N_PARAMS)
