import json
import math
import pathlib

import pytest

import rankone

TWO_ATOMS = {"atoms": [[-1, 0.5], [1, 0.5]]}
SEMICIRCLE = {"ac": [{"interval": [-2, 2], "weight": {"kind": "semicircle", "params": {"scale": 1}}}]}
SCENARIOS = pathlib.Path(__file__).resolve().parents[2] / "scenarios"


def test_version():
    assert rankone.__version__


def test_borel_transform_two_atoms():
    assert abs(rankone.borel_transform(TWO_ATOMS, 1j) - 0.5j) < 1e-15


def test_secular_roots_two_atoms():
    roots = rankone.secular_roots(TWO_ATOMS, 1.0)
    golden = (1 + math.sqrt(5)) / 2
    assert roots == pytest.approx([1 - golden, golden], abs=1e-13)


def test_perturb_keeps_mass():
    r = rankone.perturb(TWO_ATOMS, 1.0)
    masses = [a[1] for a in r["perturbed"]["atoms"]]
    assert sum(masses) == pytest.approx(1.0, abs=1e-12)


def test_jacobi_of_semicircle_is_free():
    j = rankone.jacobi_from_measure(SEMICIRCLE, 10)
    assert j["a"][:5] == pytest.approx([1.0] * 5, abs=1e-8)


def test_verdict_friedrichs():
    mu = {"ac": [{"interval": [0, 1], "weight": {"kind": "power_law", "params": {"c": 2, "p": 1}}}]}
    v = rankone.verdict(mu, (0, 1), 1.0)
    assert v["verdict"] == "NoSingularSpectrumOnI"


def test_validation_error():
    with pytest.raises(rankone.ValidationError, match="mass > 0"):
        rankone.total_mass({"atoms": [[0, -1]]})
    with pytest.raises(ValueError):
        rankone.total_mass({"atoms": [[0, -1]]})


def test_run_scenario_file():
    r = rankone.run_scenario(str(SCENARIOS / "two_atom.json"), "perturb")
    assert r["tool"] == "rankone"
    assert r["command"] == "perturb"
    json.dumps(r)
