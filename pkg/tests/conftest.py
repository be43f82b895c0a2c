import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

from stp.features import build_channel_stack


def textured_frame(seed=0, shape=(120, 160), sigma=2.0):
    """Smooth color noise as uint8, shape (h, w, 3)."""
    rng = np.random.default_rng(seed)
    noise = gaussian_filter(rng.standard_normal(shape + (3,)), (sigma, sigma, 0))
    noise /= noise.std()
    return np.clip(128 + 45 * noise, 0, 255).astype(np.uint8)


def paste(background, obj, x, y):
    out = background.copy()
    h, w = obj.shape[:2]
    out[y:y + h, x:x + w] = obj
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def scene():
    """A textured 40x40 object at (60, 40) on a different textured background."""
    bg = textured_frame(1, (120, 160), sigma=1.0)
    obj = textured_frame(2, (40, 40), sigma=2.5)
    frame = paste(bg, obj, 60, 40)
    return {"frame": frame, "stack": build_channel_stack(frame), "bg": bg, "obj": obj,
            "box": (60, 40, 40, 40)}


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
