import pytest

from critline import MollifierConfig, Polynomial
from critline.presets import load_preset

X = Polynomial.identity()
ONE = Polynomial.constant(1.0)


@pytest.fixture(scope="session")
def preset():
    cache = {}

    def get(name: str) -> MollifierConfig:
        if name not in cache:
            cache[name] = load_preset(name).mollifier
        return cache[name]

    return get


def simple_config(**kw) -> MollifierConfig:
    base = dict(K=2, R=1.0, theta1=0.5, theta2=0.5, P1=X, Pl=(X,), Q=ONE)
    base.update(kw)
    return MollifierConfig(**base)


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key} {'PASS' if ok else 'FAIL'}  {detail}")
