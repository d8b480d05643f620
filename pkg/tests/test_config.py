import pytest

from neumann_hadamard.config import StudyConfig, format_config, load_config, parse_config
from neumann_hadamard.errors import ParseError, ValidationError

MINIMAL = """\
[domain]
a = 1.0
[family]
class = smooth
[epsilon]
count = 3
"""


def test_minimal_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.domain.a == (1.0,)
    assert cfg.family.kind == "smooth"
    assert cfg.epsilons() == pytest.approx([0.1, 0.05, 0.025])
    assert cfg.solver == StudyConfig().solver
    assert cfg.cluster.target == pytest.approx(3.39)


def test_comments_and_whitespace():
    cfg = parse_config("# header\n\n[family]  # trailing\n  class =  c1 \n profile = dent\n")
    assert cfg.family.kind == "c1" and cfg.family.profile == "dent"


def test_lists():
    cfg = parse_config("[domain]\na = 1.0, 0.0, 0.1\nb = 0, 0.05\ncenter = 0.1, -0.2\n")
    assert cfg.domain.a == (1.0, 0.0, 0.1)
    assert cfg.domain.b == (0.0, 0.05)
    assert cfg.domain.center == (0.1, -0.2)


def test_negative_tolerance():
    with pytest.raises(ValidationError) as e:
        parse_config("[solver]\ntol = -1e-8\n")
    assert e.value.field == "tol"


def test_unknown_key_line_number():
    with pytest.raises(ParseError) as e:
        parse_config("[family]\nclass = holder\nalpha2 = 0.3\n")
    assert e.value.line == 3
    assert "alpha2" in str(e.value)


@pytest.mark.parametrize("text, line", [
    ("[nowhere]\n", 1),
    ("a = 1\n", 1),
    ("[domain]\njust words\n", 2),
    ("[epsilon]\ncount = three\n", 2),
    ("[epsilon]\ncount = 3\ncount = 4\n", 3),
    ("[domain\n", 1),
])
def test_parse_errors(text, line):
    with pytest.raises(ParseError) as e:
        parse_config(text)
    assert e.value.line == line


@pytest.mark.parametrize("text, field", [
    ("[epsilon]\nfactor = 1.5\n", "factor"),
    ("[epsilon]\nstart = 0\n", "start"),
    ("[family]\nclass = holder\nalpha = 1.2\n", "alpha"),
    ("[family]\nclass = fractal\n", "class"),
    ("[family]\nprofile = spiky\n", "profile"),
    ("[domain]\na = -1\n", "a"),
    ("[domain]\nshape = rectangle\nwidth = 0\n", "width"),
    ("[run]\nform = both_and_more\n", "form"),
    ("[run]\nworkers = 0\n", "workers"),
    ("[cluster]\nrel_tol = 0\n", "rel_tol"),
])
def test_validation_errors(text, field):
    with pytest.raises(ValidationError) as e:
        parse_config(text)
    assert e.value.field == field


def test_output_dir_under_a_file(tmp_path):
    f = tmp_path / "plain.txt"
    f.write_text("x")
    with pytest.raises(ValidationError) as e:
        parse_config(f"[output]\ndir = {f / 'sub'}\n")
    assert e.value.field == "dir"


def test_round_trip():
    cfg = parse_config(MINIMAL + "[mesh]\nmin_angular = 128\n")
    assert parse_config(format_config(cfg)) == cfg


def test_load_config(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text(MINIMAL, encoding="utf-8")
    assert load_config(p) == parse_config(MINIMAL)
    with pytest.raises(ValidationError):
        load_config(tmp_path / "missing.cfg")
    bad = tmp_path / "bad.cfg"
    bad.write_bytes(b"[domain]\na = \xff\n")
    with pytest.raises(ParseError):
        load_config(bad)


def test_rectangle_build():
    cfg = parse_config("[domain]\nshape = rectangle\nwidth = 2\nheight = 1\n")
    r = cfg.domain.build()
    assert (r.width, r.height) == (2.0, 1.0)
