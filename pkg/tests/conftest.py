import sys
from functools import lru_cache

from nlsgraph.spectral import graph_for
from nlsgraph.standing_wave import WaveParams, integrate_profile

A = 0.8660


@lru_cache(maxsize=None)
def b_wave(b):
    """Three-edge wave with beta=-1, p=3, phi(0)=1 and the b-family of slopes."""
    prof = integrate_profile(WaveParams(-1.0, 3.0, 1.0, (-A - b, -A - 3, 2 * A + 3 + b)), 0.0)
    return prof, graph_for(prof)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS, key=lambda k: (int(str(k).split("-")[0]), str(k))):
        terminalreporter.write_line(mod.RESULTS[key])
