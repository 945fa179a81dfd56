import pytest

from perpsim.model import make_arch1, make_normal_walk, make_two_state_demo
from perpsim.spectral import find_theta_star


@pytest.fixture(scope="session")
def arch():
    return make_arch1(1.0, 0.75)


@pytest.fixture(scope="session")
def arch_env(arch):
    return find_theta_star(arch)


@pytest.fixture(scope="session")
def two_state():
    return make_two_state_demo()


@pytest.fixture(scope="session")
def two_state_env(two_state):
    return find_theta_star(two_state)


@pytest.fixture(scope="session")
def walk():
    return make_normal_walk(1.0, 1.0)


@pytest.fixture(scope="session")
def walk_env(walk):
    return find_theta_star(walk)


@pytest.fixture
def write_config(tmp_path):
    def _write(text, name="scenarios.conf"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write
