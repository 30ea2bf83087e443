"""Gradient checks against independent oracles.

Each check compares an analytic gradient with an oracle that only calls
forward functions: central finite differences, or the parameter-shift rule
for circuit angles.  Errors are reported as

    |analytic - oracle| / max(|analytic|, |oracle|, REL_FLOOR)

so entries whose true gradient is essentially zero are judged on an
absolute scale instead of blowing up the ratio.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mps import MpsModel, init_mps, mps_backward, mps_forward
from .training import softmax_cross_entropy
from .vqc import N_PARAMS, vqc_backward, vqc_forward

FD_STEP = 1e-6
REL_FLOOR = 1e-3

TOLERANCES = {
    "mps-vs-fd": 1e-5,
    "vqc-vs-shift": 1e-10,
    "vqc-vs-fd": 1e-5,
    "end-to-end-vs-fd": 1e-4,
}

__all__ = [
    "CheckResult",
    "GradcheckReport",
    "relative_error",
    "parameter_shift",
    "check_mps",
    "check_vqc_shift",
    "check_vqc_fd",
    "check_end_to_end",
    "run_all",
]


def relative_error(analytic, oracle, floor: float = REL_FLOOR) -> np.ndarray:
    a = np.asarray(analytic, dtype=np.float64)
    b = np.asarray(oracle, dtype=np.float64)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


@dataclass
class CheckResult:
    name: str
    max_error: float = 0.0
    worst_path: str = ""
    probes: int = 0

    def update(self, errors: np.ndarray, paths):
        if errors.size == 0:
            return
        i = int(np.argmax(errors))
        self.probes += errors.size
        if errors.flat[i] > self.max_error or not self.worst_path:
            self.max_error = float(errors.flat[i])
            self.worst_path = paths(i)

    @property
    def tolerance(self) -> float:
        return TOLERANCES[self.name]

    @property
    def ok(self) -> bool:
        return self.max_error < self.tolerance


@dataclass
class GradcheckReport:
    results: list[CheckResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)

    def lines(self) -> list[str]:
        out = []
        for r in self.results:
            status = "ok" if r.ok else "FAIL"
            out.append(
                f"{r.name:18s} max error {r.max_error:.3e} (tol {r.tolerance:.0e}) "
                f"over {r.probes} probes, worst at {r.worst_path}  {status}"
            )
        return out


def _idx(flat: int, shape) -> tuple[int, ...]:
    return tuple(int(v) for v in np.unravel_index(flat, shape))


def _random_mps(rng: np.random.Generator, n_sites: int, chi: int, d_out: int) -> MpsModel:
    k = int(rng.integers(n_sites))
    model = init_mps(n_sites, chi, d_out, k, seed=int(rng.integers(2**31)), noise=0.3)
    return model


def _random_product_state(rng, n_sites: int) -> np.ndarray:
    t = 0.5 * np.pi * rng.random(n_sites)
    return np.stack([np.cos(t), np.sin(t)], axis=-1)


def _fd(fun, arr: np.ndarray, index, step: float = FD_STEP) -> float:
    orig = arr[index]
    arr[index] = orig + step
    up = fun()
    arr[index] = orig - step
    down = fun()
    arr[index] = orig
    return (up - down) / (2.0 * step)


def check_mps(trials: int, rng: np.random.Generator) -> CheckResult:
    """Site-tensor and input gradients of the MPS against finite differences."""
    res = CheckResult("mps-vs-fd")
    for _ in range(trials):
        n = int(rng.integers(2, 9))
        chi = int(rng.integers(1, 5))
        d = int(rng.choice([2, 4]))
        model = _random_mps(rng, n, chi, d)
        phi = _random_product_state(rng, n)
        g = rng.standard_normal(d)
        _, trace = mps_forward(model, phi)
        grad, grad_phi = mps_backward(model, trace, g)

        def objective():
            return float(np.dot(mps_forward(model, phi)[0], g))

        for i, (site, gsite) in enumerate(zip(model.sites, grad.sites)):
            oracle = np.array([_fd(objective, site, idx) for idx in np.ndindex(site.shape)])
            shape = site.shape
            res.update(
                relative_error(gsite.ravel(), oracle),
                lambda j, i=i, shape=shape: f"mps.site[{i}]{_idx(j, shape)}",
            )
        oracle = np.array([_fd(objective, phi, idx) for idx in np.ndindex(phi.shape)])
        res.update(
            relative_error(grad_phi.ravel(), oracle),
            lambda j: f"mps.input{_idx(j, phi.shape)}",
        )
    return res


def parameter_shift(x, params, upstream) -> np.ndarray:
    """Gradient of ``<upstream, vqc_forward(x, params)>`` by the +/- pi/2 shift rule."""
    params = np.asarray(params, dtype=np.float64)
    grad = np.zeros(N_PARAMS)
    for j in range(N_PARAMS):
        shift = np.zeros(N_PARAMS)
        shift[j] = 0.5 * np.pi
        plus = vqc_forward(x, params + shift)
        minus = vqc_forward(x, params - shift)
        grad[j] = 0.5 * np.sum(np.asarray(upstream) * (plus - minus))
    return grad


def check_vqc_shift(trials: int, rng: np.random.Generator) -> CheckResult:
    """Adjoint parameter gradient against the parameter-shift rule (absolute error)."""
    res = CheckResult("vqc-vs-shift")
    for _ in range(trials):
        x = rng.normal(scale=2.0, size=4)
        params = rng.uniform(-np.pi, np.pi, N_PARAMS)
        g = rng.standard_normal(2)
        gp, _ = vqc_backward(x, params, g)
        err = np.abs(gp - parameter_shift(x, params, g))
        res.update(err, lambda j: f"vqc.params[{j}]")
    return res


def check_vqc_fd(trials: int, rng: np.random.Generator) -> CheckResult:
    """Adjoint parameter and feature gradients against finite differences."""
    res = CheckResult("vqc-vs-fd")
    for _ in range(trials):
        x = rng.normal(scale=2.0, size=4)
        params = rng.uniform(-np.pi, np.pi, N_PARAMS)
        g = rng.standard_normal(2)
        gp, gx = vqc_backward(x, params, g)

        def objective():
            return float(np.dot(vqc_forward(x, params), g))

        res.update(
            relative_error(gp, [_fd(objective, params, (j,)) for j in range(N_PARAMS)]),
            lambda j: f"vqc.params[{j}]",
        )
        res.update(
            relative_error(gx, [_fd(objective, x, (j,)) for j in range(4)]),
            lambda j: f"vqc.input[{j}]",
        )
    return res


def check_end_to_end(trials: int, rng: np.random.Generator, probes_per_trial: int = 20) -> CheckResult:
    """Loss gradient through MPS -> circuit -> cross-entropy, on random parameters."""
    res = CheckResult("end-to-end-vs-fd")
    for _ in range(trials):
        n = int(rng.integers(4, 9))
        chi = int(rng.integers(1, 4))
        model = _random_mps(rng, n, chi, 4)
        params = rng.uniform(-np.pi, np.pi, N_PARAMS)
        batch = 3
        phi = np.stack([_random_product_state(rng, n) for _ in range(batch)])
        labels = rng.integers(0, 2, batch)

        def objective():
            f, _ = mps_forward(model, phi)
            losses, _ = softmax_cross_entropy(vqc_forward(f, params), labels)
            return float(losses.mean())

        f, trace = mps_forward(model, phi)
        _, g = softmax_cross_entropy(vqc_forward(f, params), labels)
        gp, gx = vqc_backward(f, params, g / batch)
        grad, _ = mps_backward(model, trace, gx)

        entries = [("vqc.params", params, gp, (j,)) for j in range(N_PARAMS)]
        for i, (site, gsite) in enumerate(zip(model.sites, grad.sites)):
            entries += [(f"mps.site[{i}]", site, gsite, idx) for idx in np.ndindex(site.shape)]
        picks = rng.choice(len(entries), size=min(probes_per_trial, len(entries)), replace=False)
        analytic, oracle, names = [], [], []
        for p in picks:
            name, arr, garr, idx = entries[p]
            analytic.append(garr[idx])
            oracle.append(_fd(objective, arr, idx))
            names.append(f"{name}{tuple(int(v) for v in idx)}")
        res.update(relative_error(analytic, oracle), lambda j, names=names: names[j])
    return res


def run_all(trials: int = 10, seed: int = 0) -> GradcheckReport:
    rng = np.random.default_rng(seed)
    report = GradcheckReport()
    report.results.append(check_mps(trials, rng))
    report.results.append(check_vqc_shift(trials, rng))
    report.results.append(check_vqc_fd(trials, rng))
    report.results.append(check_end_to_end(trials, rng))
    return report
