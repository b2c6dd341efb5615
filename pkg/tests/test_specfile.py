import json
import math

import pytest

from spectral_entropy.measures import AppendixMeasure, AtomicMeasure, DigitProductMeasure, IfsMeasure, MixtureMeasure
from spectral_entropy.specfile import SpecError, build, resolve


@pytest.mark.parametrize("name, cls", [
    ("uniform", IfsMeasure),
    ("cantor", IfsMeasure),
    ("appendix", AppendixMeasure),
    ("atomic", AtomicMeasure),
    ("binomial(0.8)", IfsMeasure),
])
def test_presets(name, cls):
    m, spec = resolve(name)
    assert isinstance(m, cls)
    assert "kind" in spec


def test_binomial_preset_parameter():
    m, spec = resolve("binomial(0.7)")
    assert spec["params"] == {"p": 0.7}
    assert m.known_dimensions()["information"] == pytest.approx(
        -(0.7 * math.log(0.7) + 0.3 * math.log(0.3)) / math.log(2))


def test_file_spec(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({
        "kind": "ifs",
        "params": {"scales": [0.25, 0.25], "offsets": [0.0, 0.75], "probs": [0.5, 0.5]},
        "fourier_tolerance": 1e-12,
    }))
    m, _ = resolve(str(path))
    assert m.fourier_tolerance == 1e-12
    assert m.known_dimensions()["information"] == pytest.approx(0.5)


def test_mixture_and_digit_specs():
    m = build({"kind": "mixture", "params": {
        "P": 0.25, "atoms": {"positions": [1.0], "weights": [1.0]}, "continuous": {"kind": "cantor"}}})
    assert isinstance(m, MixtureMeasure) and m.P == 0.25
    d = build({"kind": "digit", "params": {"base": 2, "prefix": [[1, 0]], "tail": [0.5, 0.5]}})
    assert isinstance(d, DigitProductMeasure)
    assert d.cdf(math.pi) == pytest.approx(1.0)


@pytest.mark.parametrize("spec", [
    {"kind": "uniform", "extra": 1},
    {"kind": "sphere"},
    {"kind": "ifs"},
    {"kind": "atomic", "params": {"positions": [1.0], "weights": [1.0], "colour": "red"}},
    {"kind": "atomic", "params": {"positions": [1.0], "weights": [0.5]}},
    {"kind": "uniform", "params": {"p": 1}},
    {"kind": "binomial", "params": {"p": 1.5}},
    {"kind": "digit", "params": {"base": 2, "tail": [1, 0]}},
    {"kind": "digit", "params": {"base": 3, "tail": [0.5, 0.5]}},
    {"kind": "mixture", "params": {"P": 0.5, "atoms": {"positions": [1.0], "weights": [1.0]},
                                   "continuous": {"kind": "uniform", "bad": 0}}},
    {"kind": "uniform", "fourier_tolerance": -1},
])
def test_rejects_invalid(spec):
    with pytest.raises(SpecError):
        build(spec)


def test_bad_reference(tmp_path):
    with pytest.raises(SpecError):
        resolve("no-such-preset")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(SpecError, match="line 1"):
        resolve(str(bad))
