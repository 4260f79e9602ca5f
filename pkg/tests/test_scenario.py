import pytest

from lrsolve import scenario
from lrsolve.scenario import BUNDLED, DEFAULT_TOLERANCES, ScenarioError


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_roundtrip(name):
    sc = scenario.bundled(name)
    assert sc.name == name
    again = scenario.from_flat(sc.to_flat())
    assert again == sc


def test_minimal_file_uses_defaults(tmp_path):
    f = tmp_path / "s.toml"
    f.write_text('name = "tiny"\nmass = 2.0\ndrive.kind = "constant"\ndrive.amplitude = 0.1\n')
    sc = scenario.resolve(str(f))
    assert sc.mass == 2.0 and sc.drive(0.3) == 0.1
    assert sc.grid.n_points == 1024 and sc.tolerances == DEFAULT_TOLERANCES
    assert not sc.harmonic


def test_unknown_keys_are_errors():
    with pytest.raises(ScenarioError, match="drive.amplitud"):
        scenario.loads('name = "x"\ndrive.amplitud = 1.0\n')
    with pytest.raises(ScenarioError):
        scenario.loads('name = "x"\ntol.nonsense = 1.0\n')
    with pytest.raises(ScenarioError):
        scenario.loads("name = \n")
    with pytest.raises(ScenarioError):
        scenario.bundled("nope")


def test_invalid_values():
    with pytest.raises((ScenarioError, ValueError)):
        scenario.loads('name = "x"\nmass = -1.0\n')
    with pytest.raises(ScenarioError):
        scenario.loads('name = "x"\ngrid.n_points = 1000\n')


def test_tolerance_override_and_scaling():
    sc = scenario.loads('name = "x"\ntol.eigen_residual = 1e-6\n')
    assert sc.tol("eigen_residual") == 1e-6
    assert sc.scaled(10).tol("eigen_residual") == pytest.approx(1e-5)


def test_record_times():
    sc = scenario.bundled("constant_force")
    t = sc.record_times
    assert t[0] == 0.0 and t[-1] == pytest.approx(1.0) and len(t) == 51
