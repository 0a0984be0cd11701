import numpy as np
import pytest

from forecastval import _kernels_py
from forecastval.panel import Panel

try:
    from forecastval import _kernels as _kernels_cy
except ImportError:  # pragma: no cover - extension not built
    _kernels_cy = None

BACKENDS = [pytest.param(_kernels_py, id="python")]
if _kernels_cy is not None:
    BACKENDS.append(pytest.param(_kernels_cy, id="cython"))


@pytest.fixture(params=BACKENDS)
def kern(request):
    return request.param


def make_panel(cells, p_hat=None, p_hat_alt=None, p_true=None, p_clim=None, t=None):
    """Panel from a list of per-cell outcome lists; cell c gets label ``str(c)``."""
    y = np.concatenate([np.asarray(c, dtype=float) for c in cells])
    labels = [str(c) for c, cell in enumerate(cells) for _ in cell]
    n = y.size
    if t is None:
        t = np.ones(n, dtype=int)

    def col(v):
        if v is None:
            return None
        v = np.asarray(v, dtype=float)
        return np.full(n, float(v)) if v.ndim == 0 else v

    return Panel(t=t, y=y, p_hat=col(0.5 if p_hat is None else p_hat),
                 p_hat_alt=col(p_hat_alt), p_true=col(p_true), p_clim=col(p_clim),
                 bucket=labels)


ACCEPTANCE = {}


def record_criterion(number, label, ok, detail=""):
    """Store the outcome of one sub-check of an acceptance criterion."""
    ACCEPTANCE.setdefault(number, []).append((label, bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        subs = ACCEPTANCE[number]
        status = "PASS" if all(ok for _, ok, _ in subs) else "FAIL"
        failed = [f"{label} ({detail})" for label, ok, detail in subs if not ok]
        passed = len(subs) - len(failed)
        line = f"criterion {number}: {status} [{passed}/{len(subs)} checks]"
        if failed:
            line += " failing: " + "; ".join(failed)
        terminalreporter.write_line(line)
