import numpy as np
import pytest

from aldlab import SignedSpectrum, SpectrumError, SpectrumSpec


def test_power_law_values():
    spec = SpectrumSpec.power_law(1.2, 2.0)
    assert spec.eigenvalue(1) == 1.2
    assert spec.eigenvalue(3) == pytest.approx(1.2 / 9.0)
    np.testing.assert_allclose(spec.eigenvalues(3), [1.2, 0.3, 1.2 / 9.0])


def test_constant_and_explicit():
    assert SpectrumSpec.constant(40.0).eigenvalues(3).tolist() == [40.0, 40.0, 40.0]
    ex = SpectrumSpec.explicit([3.0, 2.0, 1.0])
    assert ex.eigenvalue(2) == 2.0
    with pytest.raises(SpectrumError):
        ex.eigenvalue(4)
    with pytest.raises(SpectrumError):
        ex.eigenvalues(4)


def test_positivity_enforced():
    with pytest.raises(SpectrumError):
        SpectrumSpec.power_law(0.0, 2.0)
    with pytest.raises(SpectrumError):
        SpectrumSpec.power_law(1.0, -0.5)
    with pytest.raises(SpectrumError):
        SpectrumSpec.constant(-1.0)
    with pytest.raises(SpectrumError):
        SpectrumSpec.explicit([1.0, 0.0])
    with pytest.raises(SpectrumError):
        SpectrumSpec.explicit([])
    with pytest.raises(SpectrumError):
        SpectrumSpec.power_law(1.0, 2.0).eigenvalue(0)


def test_summable_flag():
    assert SpectrumSpec.power_law(1.0, 1.25).summable()
    assert not SpectrumSpec.power_law(1.0, 1.0).summable()
    assert not SpectrumSpec.power_law(1.0, 0.5).summable()
    assert not SpectrumSpec.constant(40.0).summable()
    assert SpectrumSpec.explicit([1.0, 0.5]).summable()


def test_decay_exponent():
    assert SpectrumSpec.power_law(2.0, 2.7).decay_exponent() == 2.7
    assert SpectrumSpec.constant(1.0).decay_exponent() == 0.0
    assert np.isnan(SpectrumSpec.explicit([1.0]).decay_exponent())


def test_signed_spectrum():
    s = SignedSpectrum(-0.5, SpectrumSpec.power_law(1.0, 1.0))
    np.testing.assert_allclose(s.eigenvalues(2), [-0.5, -0.25])
