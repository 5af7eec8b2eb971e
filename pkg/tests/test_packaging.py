import tomllib
from pathlib import Path

from chebyshev_feature_nn.version import __version__


def load_pyproject() -> dict:
    return tomllib.loads(Path("pyproject.toml").read_text())


def test_package_installs_cfnn_console_script():
    pyproject = load_pyproject()

    assert pyproject["project"]["scripts"] == {
        "cfnn": "chebyshev_feature_nn.cli:main"
    }


def test_wheel_includes_package_modules():
    pyproject = load_pyproject()

    assert pyproject["tool"]["hatch"]["build"]["targets"]["wheel"]["packages"] == [
        "src/chebyshev_feature_nn"
    ]


def test_long_running_tests_are_deselected_by_default():
    pytest_options = load_pyproject()["tool"]["pytest"]["ini_options"]

    assert "not slow" in pytest_options["addopts"]
    assert any(marker.startswith("slow") for marker in pytest_options["markers"])


def test_version_is_single_sourced():
    pyproject = load_pyproject()

    assert "version" in pyproject["project"]["dynamic"]
    assert __version__.count(".") == 2
