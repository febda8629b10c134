import math
import os
from fractions import Fraction

import pytest

import fms

DATA = os.environ.get(
    "FMS_DATA_DIR", os.path.join(os.path.dirname(__file__), "..", "..", "data"))


def system(name):
    return fms.System.from_file(os.path.join(DATA, name + ".sys"))


def test_validate_and_eval():
    ex2 = system("example2")
    assert fms.validate(ex2)["ok"]
    assert ex2.edges == ["0", "1"]
    assert ex2.apply_map(0, 1) == "1/3"
    assert ex2.prob(0, Fraction(1, 9)) == 0
    assert ex2.markov_operator("x", 1) == Fraction(1, 2)


def test_non_unit_sum():
    spec = fms.System.from_text(
        "[domain]\nlo=0\nhi=1\n[edge 0]\nslope=1/2\nintercept=0\n"
        "prob=piecewise (0,1,1,1,1)\n[edge 1]\nslope=1/2\nintercept=1/2\n"
        "prob=piecewise (0,1,1,1,1)\n")
    rep = fms.validate(spec)
    assert not rep["ok"]
    assert rep["issues"][0][0] == "NonUnitSum"
    with pytest.raises(fms.FmsError):
        fms.System.from_text("[domain]\nlo=0\nhi=1\nwidth=1\n")


def test_cylinders_and_ratios():
    ex2 = system("example2")
    assert fms.cylinder_measure(ex2, "1/4", [0, 0]) == 0
    rows = fms.enumerate_cylinders(ex2, 1, 2)
    assert [m for _, m in rows] == [Fraction(1, 4)] * 4
    assert math.isinf(fms.likelihood_ratio(ex2, 1, "1/4", [0, 0]))
    assert fms.tail_mass(ex2, 1, "1/4", 2, 10) == Fraction(1, 4)
    assert fms.martingale_discrepancy(ex2, 1, "1/2", 1, 3) == 0


def test_partition_and_graph():
    ex2 = system("example2")
    fp = fms.fundamental_partition(ex2)
    assert fp.cut_points == [0, Fraction(1, 9), Fraction(1, 3)]
    assert fp.class_names == ["{0}", "(0,1/9]", "(1/9,1/3]", "(1/3,1]"]
    assert fp.exact
    cert = fms.certificates(ex2, fp)[0]
    assert cert["word"] == (1, 0, 0) and cert["mass_j"] == Fraction(1, 4)
    st = fms.stationary(fp)
    assert st["class_pi"] == [0, Fraction(1, 7), Fraction(2, 7), Fraction(4, 7)]
    assert st["mean"] == Fraction(2, 7)
    assert not fms.graph_flags(fp)["recurrent"]
    assert fms.lift_check(ex2, fp, 1, 4) == 0


def test_example3_and_example4():
    assert fms.fundamental_partition(system("example3")).num_classes == 1
    ex4 = system("example4")
    with pytest.raises(fms.FmsError):
        fms.fundamental_partition(ex4)
    fp = fms.fundamental_partition(ex4, seed=1)
    assert fp.num_classes == 2 and not fp.exact
    assert fp.classify("irr:0.5") != fp.classify("1/2")
    xi = fms.xi_estimate(ex4, 0, "irr:0.7071067811865476", seed=3, num_samples=1000)
    assert xi["verdict"] == "singular_statistical"
    assert abs(xi["drift"] - 0.016424) < 0.2 * 0.016424


def test_dynamics():
    ex2 = system("example2")
    t = fms.simulate(ex2, 0, 1, seed=4)
    assert t.labels == [1] and t.points == [0.0, 1 / 3]
    long = fms.simulate(ex2, 1, 100000, seed=4)
    assert abs(long.average("x") - 2 / 7) < 0.01
    assert fms.simulate(ex2, 1, 50, seed=1).average("1") == 1
    assert fms.contraction_estimate(ex2, seed=1) == Fraction(1, 3)
    assert fms.contraction_estimate(system("example4"), seed=1) == Fraction(1, 2)
    assert fms.w1_distance([0, 1], [0, 0]) == 0.5
    r = fms.convergence_rate(ex2, 1, seed=1, cloud=2000, bound=math.sqrt(0.5))
    assert r["within_bound"]


def test_cli_entry(tmp_path):
    status, out, _ = fms.run("graph", os.path.join(DATA, "example2.sys"),
                             out_dir=str(tmp_path))
    assert status == 0
    assert "pi(K'3 = (1/3,1]) = 4/7" in out
    assert (tmp_path / "stationary.csv").exists()
    status, _, err = fms.run("simulate", os.path.join(DATA, "example2.sys"))
    assert status == 1 and "MissingSeed" in err
