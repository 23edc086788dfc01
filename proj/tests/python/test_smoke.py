import math

import pytest

import bubble_lab as bl


def test_bubble_solves_the_equation():
    for n in (3, 4, 5, 6):
        u = bl.aubin_talenti(n, 1.0)
        assert abs(bl.pde_residual(u, [0.3] * n, mode=bl.DerivativeMode.Analytic)) < 1e-10


def test_bubble_constant_closed_form():
    n = 3
    area_s3 = 2 * math.pi**2
    expected = 2 * (n * (n - 2) / 4) ** (n / 2) * area_s3
    assert bl.bubble_constant(n).value == pytest.approx(expected, rel=1e-12)


def test_profile_is_monotone():
    p = bl.monotonicity_profile(bl.aubin_talenti(3, 1.0), [0.3, 0.0, 0.0], count=12)
    assert p["monotone"] and p["nonnegative"]
    assert all(b >= a for a, b in zip(p["E"], p["E"][1:]))


def test_pohozaev_balance():
    assert bl.pohozaev_residual(bl.aubin_talenti(4, 1.0), [0.0] * 4, 0.5).relative < 1e-6


def test_lorentz_l22_is_l2():
    values, measures = [3.0, -1.0, 2.0], [0.5, 2.0, 1.0]
    plain = math.sqrt(sum(v * v * m for v, m in zip(values, measures)))
    assert bl.lorentz_norm(values, measures, bl.LorentzIndex(2, 2)) == pytest.approx(plain, rel=1e-12)
    breaks, levels = bl.rearrange(values, measures)
    assert levels == [3.0, 2.0, 1.0]
    assert breaks == [0.0, 0.5, 1.5, 3.5]


def test_quantization_of_a_tower():
    seq = bl.make_sequence(
        3,
        [bl.SequenceEntry([0, 0, 0], bl.ScaleSchedule(1.0, b)) for b in (4.0, 16.0)],
    )
    rep = bl.quantization_report(seq)
    assert len(rep["points"]) == 1
    assert rep["points"][0]["n_hat"] == 2
    assert abs(rep["points"][0]["ratio"] - 2) <= 0.05


def test_invalid_input_raises():
    with pytest.raises(ValueError):
        bl.aubin_talenti(3, -1.0)
    with pytest.raises(ValueError):
        bl.bubble_constant(2)


def test_cli_entry_point():
    code, out, err = bl.run_cli(["--quiet", "--out", "/tmp/bubble_lab_py", "bubble-constant"])
    assert code == 0 and out == ""
    code, _, err = bl.run_cli([])
    assert code == 2 and err
