import numpy as np
import pytest
from scipy.ndimage import gaussian_filter


def textured(h, w, seed=0, sigma=1.0):
    """Smoothed noise scaled to the full 8-bit range."""
    rng = np.random.default_rng(seed)
    x = gaussian_filter(rng.normal(size=(h, w)), sigma)
    x = (x - x.min()) / (x.max() - x.min())
    return (x * 255).astype(np.uint8)


def shifted_pair(h, w, shift, seed=0):
    """(left, right) with right[v, u] = left[v, u + shift]: true disparity = shift."""
    base = textured(h, w + shift, seed)
    return np.ascontiguousarray(base[:, :w]), np.ascontiguousarray(base[:, shift:])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def motorcycle():
    """Middlebury motorcycle pair with ground truth, as shipped with scikit-image."""
    data = pytest.importorskip("skimage.data")
    from elasinterp.imgio import INVALID, rgb_to_gray

    left, right, disp = data.stereo_motorcycle()
    finite = np.isfinite(disp)
    gt = np.full(disp.shape, INVALID, np.int16)
    gt[finite] = np.clip(np.floor(disp[finite] + 0.5), 0, 255).astype(np.int16)
    return rgb_to_gray(left), rgb_to_gray(right), gt


# --- acceptance summary ----------------------------------------------------

ACCEPTANCE_LINES = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one verdict line per acceptance criterion for the run summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE_LINES, [])

    def record(number, name, passed, detail):
        verdict = {True: "PASS", False: "FAIL", None: "SKIP"}[passed]
        line = f"criterion {number:>2} {verdict}  {name}: {detail}"
        lines.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
