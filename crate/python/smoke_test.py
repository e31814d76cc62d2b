"""Smoke test for the bottleform_py extension module.

Build and install it first, e.g. ``pip install ./crates/py`` (maturin).
"""

import math

import bottleform_py as bf


def main():
    v = bf.Potential.builtin()
    assert abs(v.critical_energy - 16 / 27) < 1e-12
    assert v.value(0.0, 0.3) == 0.0

    nf = bf.normalize(order=5, trunc=20)
    assert nf.order == 5 and nf.mode == "nonres"
    assert max(nf.scaled_residuals()) < 1e-11
    af = nf.action_form()
    assert abs(af[(2, 0, 0)] + 3 / 16) < 1e-12
    w2 = nf.omega2_squared()
    assert abs(w2[0]) < 1e-14 and abs(w2[1] - 1.0) < 1e-12

    action, energy = bf.normalize(order=8, trunc=8).bifurcation_energy(2, 1)
    assert abs(energy - 0.188036) < 2e-5, energy

    phi = nf.formal_integral()
    assert len(phi) > 0 and phi.max_imag_residue < 1e-11
    # even in every variable
    x = (0.1, -0.2, 0.3, 0.05)
    assert abs(phi(*x) - phi(*(-c for c in x))) < 1e-14
    assert phi.section_value(0.1, 0.0, 0.2) is not None
    assert phi.section_value(0.1, 0.0, 2.0) is None

    pts = bf.poincare_section(0.1, [(0.0, 0.1), (0.0, 0.2)], n_crossings=10)
    assert len(pts) == 20 and {p[2] for p in pts} == {0, 1}

    m = bf.monodromy(0.1)
    assert m.stable and abs(m.determinant - 1.0) < 1e-8
    assert math.isfinite(m.period)

    try:
        bf.Potential.parse("rho^2 + sin(z)")
    except bf.BottleformError as e:
        assert "ParseError" in str(e)
    else:
        raise AssertionError("parse error not raised")

    print("smoke test passed")


if __name__ == "__main__":
    main()
