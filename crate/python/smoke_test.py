"""Smoke test for the levy_loewner_py extension module."""

import json
import math

import levy_loewner_py as ll


def main():
    assert abs(ll.theta0(1.5) - 3.191538243211465) < 1e-9
    assert ll.classify_power(1.5, 1.5) == "harmonic"
    assert ll.gamma_coeff(1.5, 1.5) == 0.0
    assert math.isfinite(ll.frac_constant(0.5))
    assert abs(ll.gamma_coeff(1.0, 0.5) - ll.gamma_coeff_alt(1.0, 0.5)) < 1e-8

    est = ll.hitting_probability(8.0, 1.5, 1.0, 1 + 0j, 50, 10.0, seed=3)
    assert 0.0 <= est["hit_fraction"] <= 1.0
    lo, hi = est["wilson_ci"]
    assert lo <= est["hit_fraction"] <= hi

    files = ll.run("gamma", {"alpha": [1.5], "p": [0.5, 1.5]})
    rows = files["gamma.csv"].splitlines()
    assert rows[0] == "alpha,p,gamma,A_const,class"
    assert len(rows) == 3

    a = ll.run("hitprob", {"n": 30, "horizon": 2.0}, seed=7, workers=1)
    b = ll.run("hitprob", {"n": 30, "horizon": 2.0}, seed=7, workers=2)
    assert a == b
    assert json.loads(a["hitprob.json"])["n"] == 30

    try:
        ll.run("hitprob", {"alpha": 2.5})
    except ValueError as e:
        assert "command.params.alpha" in str(e)
    else:
        raise AssertionError("alpha 2.5 accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
