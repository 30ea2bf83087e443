import os
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def mnist_dir() -> Path | None:
    """Directory with MNIST IDX files: $TNVQC_MNIST_DIR, else data/mnist-desk."""
    env = os.environ.get("TNVQC_MNIST_DIR")
    candidates = [Path(env)] if env else []
    candidates.append(ROOT / "data" / "mnist-desk")
    for c in candidates:
        if (c / "train-images-idx3-ubyte").exists() or (c / "train-images-idx3-ubyte.gz").exists():
            return c
    return None


def ensure_mnist_dir() -> Path | None:
    """Locate MNIST files, building the desk split from mlxtend if needed."""
    found = mnist_dir()
    if found is not None:
        return found
    try:
        import importlib.util
        import sys

        spec = importlib.util.spec_from_file_location("make_desk_mnist", ROOT / "scripts" / "make_desk_mnist.py")
        module = importlib.util.module_from_spec(spec)
        sys.modules["make_desk_mnist"] = module
        spec.loader.exec_module(module)
        module.build(ROOT / "data" / "mnist-desk")
    except (ImportError, OSError):
        return None
    return mnist_dir()


@pytest.fixture(scope="session")
def mnist_splits():
    from tnvqc.data import load_split

    found = ensure_mnist_dir()
    if found is None:
        pytest.skip("no MNIST files and mlxtend is unavailable")
    return load_split(found, "train"), load_split(found, "test")


@pytest.fixture(scope="session")
def mnist_path():
    found = ensure_mnist_dir()
    if found is None:
        pytest.skip("no MNIST files and mlxtend is unavailable")
    return found


ACCEPTANCE_LINES: list[str] = []
ACCEPTANCE_CURVES: list[str] = []


@pytest.fixture
def record_criterion():
    def record(number: int, name: str, ok: bool, detail: str):
        ACCEPTANCE_LINES.append(f"criterion {number} [{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        return ok

    return record


@pytest.fixture
def record_curve():
    def record(label: str, metrics):
        ACCEPTANCE_CURVES.append(f"{label}\n  epoch,train_loss,train_acc,test_loss,test_acc")
        ACCEPTANCE_CURVES.extend(f"  {m.epoch},{m.train_loss:.4f},{m.train_acc:.4f},{m.test_loss:.4f},{m.test_acc:.4f}" for m in metrics)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
    if ACCEPTANCE_CURVES:
        terminalreporter.section("acceptance learning curves")
        for line in ACCEPTANCE_CURVES:
            terminalreporter.write_line(line)
