import pytest

from localavoid import cli, serialize
from localavoid.field import make_field_spec


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_box_count_x_minus_y(capsys):
    code, out, _ = run(capsys, "box-count", "--field", "Z3", "--fn", "x-minus-y", "--mu", "0", "--lambda", "2", "--verify")
    assert code == 0
    assert out.splitlines()[0] == "count 9"
    assert "bound C3*q^(-mu+lam(nv-m)) = 162" in out


def test_linear_bad_alpha_exits_2(capsys):
    code, _, err = run(capsys, "linear-simul", "--field", "Z5", "--alpha", "1,-1,1,-1")
    assert code == 2 and "alpha" in err


def test_linear_ok(capsys):
    code, out, _ = run(capsys, "linear-simul", "--field", "Z5", "--N", "56", "--alpha", "1,-2,1", "--depth", "2", "--verify")
    assert code == 0
    assert "c_star 7 lam0 22" in out


def test_poly_avoid_and_field_file(tmp_path, capsys):
    path = tmp_path / "z5.field"
    path.write_text(serialize.dump_field_spec(make_field_spec("zero", 5, N=8)))
    code, out, _ = run(capsys, "poly-avoid", "--field", str(path), "--fn", "ap3", "--centers", "0,1,2", "--mu", "1", "--nu", "2", "--verify")
    assert code == 0
    assert "verify checked=125 max_valuation=7 ok=True" in out


def test_poly_file(tmp_path, capsys):
    pf = tmp_path / "p.poly"
    pf.write_text("n=1\nv=3\n1,0,0 : 1\n0,1,0 : -2\n0,0,1 : 1\n")
    out_file = tmp_path / "cert.txt"
    code, _, _ = run(capsys, "poly-avoid", "--field", "Z5", "--poly", str(pf), "--centers", "0,1,2", "--mu", "1", "--nu", "2", "--out", str(out_file))
    assert code == 0 and "ok=True" in out_file.read_text()


def test_smooth_avoid(capsys):
    code, out, _ = run(capsys, "smooth-avoid", "--field", "Z3", "--fn", "ap3-quad", "--centers", "0,0,0", "--mu", "1", "--nu", "2", "--verify")
    assert code == 0
    assert "projection 1 a=True b=True c=True" in out


def test_precision_exit_3(capsys):
    code, _, err = run(capsys, "poly-avoid", "--field", "Z5", "--N", "6", "--fn", "ap3", "--centers", "0,1,2", "--mu", "1", "--nu", "2")
    assert code == 3 and "precision" in err
    code, _, _ = run(capsys, "cantor", "--field", "Z5", "--N", "10", "--fn", "ap3", "--depth", "3", "--strict")
    assert code == 3


def test_config_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.field"
    bad.write_text("p = 4\n")
    assert run(capsys, "cantor", "--field", str(bad), "--fn", "ap3")[0] == 2
    assert run(capsys, "cantor", "--field", "Z5", "--fn", "nope")[0] == 2
    assert run(capsys, "cantor", "--field", "Z5")[0] == 2
    assert run(capsys, "poly-avoid", "--field", "F9t", "--N", "6", "--fn", "ap3", "--centers", "0,1", "--mu", "1", "--nu", "2")[0] == 2
    assert run(capsys, "nonsense")[0] == 2


def test_verify_against_saved(tmp_path, capsys):
    args = ["--field", "Z5", "--N", "24", "--fn", "ap3", "--depth", "2"]
    saved = tmp_path / "tree.txt"
    assert run(capsys, "verify", *args, "--out", str(saved))[0] == 0
    assert run(capsys, "verify", *args, "--against", str(saved))[0] == 0
    saved.write_text(saved.read_text().replace("lam0 1", "lam0 9"))
    code, _, err = run(capsys, "verify", *args, "--against", str(saved))
    assert code == 1 and "differs" in err


def test_audit(capsys):
    code, out, _ = run(capsys, "audit", "--field", "Z5", "--N", "24", "--fn", "ap3", "--depth", "2", "--coverings", "10")
    assert code == 0
    assert "minkowski mu=8 branching=78145 trie=78145 enumerated=78145 agree=True" in out
    assert out.count("\ncovering ") == 10


def test_cantor_output_deterministic(capsys):
    args = ["cantor", "--field", "Z5", "--N", "24", "--fn", "ap3", "--depth", "3", "--verify"]
    first = run(capsys, *args)
    second = run(capsys, *args)
    assert first == second and first[0] == 0
