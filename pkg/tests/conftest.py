import numpy as np
import pytest

from blurbench.blurgen import build_benchmark
from blurbench.synth import SceneConfig, default_suite, generate_scene


@pytest.fixture(scope="session")
def linear_scene():
    cfg = SceneConfig(seed=3, frame_size=(200, 120), speed=(0.5, 0.1), frame_count=240)
    return cfg, generate_scene(cfg)


@pytest.fixture(scope="session")
def suite_bench():
    """Benchmark sets of the first four default-suite scenes."""
    return [build_benchmark(generate_scene(c), c.scene_id) for c in default_suite(4)]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_VERDICTS: dict[int, str] = {}


@pytest.fixture
def verdict():
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def record(number: int, title: str, ok: bool, detail: str = "") -> bool:
        line = f"[{number:2d}] {'PASS' if ok else 'FAIL'}  {title}" + (f" -- {detail}" if detail else "")
        _VERDICTS[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[number])
