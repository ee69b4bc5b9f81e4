import json
import subprocess
import sys

import pytest

from chartbench import cli

TAU = {"points": ["1", "2", "3"], "opens": [[], ["1"], ["2", "3"], ["1", "2", "3"]]}


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(p)


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(argv, capsys):
    code, out, _ = run(argv + ["--json"], capsys)
    return code, json.loads(out)


# -- topo --------------------------------------------------------------------------------


def test_topo_check_pass(tmp_path, capsys):
    code, doc = run_json(["topo", "check", write(tmp_path, "t.json", TAU)], capsys)
    assert code == 0 and doc["is_topology"]


def test_topo_check_missing_whole_set(tmp_path, capsys):
    fam = {"points": ["1", "2", "3"], "opens": [[], ["1"], ["2", "3"]]}
    code, doc = run_json(["topo", "check", write(tmp_path, "t.json", fam)], capsys)
    assert code == 1
    assert doc["violations"][0] == {"axiom": "full", "witness": [["1", "2", "3"]]}


@pytest.mark.parametrize("text,where", [
    ('{"points": ["1", "2"], "opens": [[], ["7"]]}', "opens[1][0]"),
    ('{"points": ["1", 2], "opens": []}', "points[1]"),
    ('{"points": ["1", "1"], "opens": []}', "points[1]"),
    ('{"points": ["1"], "opens": [[]', ":1:"),
    ('["1"]', "expected an object"),
])
def test_topo_check_parse_errors(tmp_path, capsys, text, where):
    code, _, err = run(["topo", "check", write(tmp_path, "bad.json", text)], capsys)
    assert code == 2 and where in err


def test_missing_file(capsys):
    code, _, err = run(["topo", "check", "/nonexistent/space.json"], capsys)
    assert code == 2 and "nonexistent" in err


def test_topo_props_example(tmp_path, capsys):
    code, doc = run_json(["topo", "props", write(tmp_path, "t.json", TAU), "--set", "2"], capsys)
    assert code == 0
    assert doc["hausdorff"] is False and doc["hausdorff_witness"] == ["2", "3"]
    assert doc["connected"] is False and doc["clopen_witness"] == ["1"]
    assert doc["interior"] == [] and doc["closure"] == ["2", "3"] and doc["boundary"] == ["2", "3"]


def test_topo_props_discrete_and_trivial(tmp_path, capsys):
    disc = {"points": ["a", "b"], "opens": [[], ["a"], ["b"], ["a", "b"]]}
    triv = {"points": ["a", "b"], "opens": [[], ["a", "b"]]}
    _, d = run_json(["topo", "props", write(tmp_path, "d.json", disc)], capsys)
    _, t = run_json(["topo", "props", write(tmp_path, "t.json", triv)], capsys)
    assert (d["hausdorff"], d["connected"]) == (True, False)
    assert (t["hausdorff"], t["connected"]) == (False, True)


def test_topo_props_rejects_non_topology(tmp_path, capsys):
    code, _ = run_json(["topo", "props", write(tmp_path, "t.json", {"points": ["a"], "opens": []})], capsys)
    assert code == 1


def test_topo_props_bad_set(tmp_path, capsys):
    code, _, _ = run(["topo", "props", write(tmp_path, "t.json", TAU), "--set", "9"], capsys)
    assert code == 2


def test_topo_enumerate(capsys):
    code, out, _ = run(["topo", "enumerate", "--n", "3", "--count-only"], capsys)
    assert code == 0 and out.strip() == "29"
    code, doc = run_json(["topo", "enumerate", "--n", "2"], capsys)
    assert doc["count"] == 4 and len(doc["topologies"]) == 4
    assert run(["topo", "enumerate", "--n", "5"], capsys)[0] == 2


def test_topo_map(tmp_path, capsys):
    f = write(tmp_path, "t.json", TAU)
    code, doc = run_json(["topo", "map", f, f, "--assign", "1=1,2=3,3=2", "--require-homeo"], capsys)
    assert code == 0 and doc["homeomorphism"]
    code, doc = run_json(["topo", "map", f, f, "--assign", "1=2,2=1,3=2"], capsys)
    assert code == 1 and not doc["continuous"]
    assert run(["topo", "map", f, f, "--assign", "1=2"], capsys)[0] == 2


# -- atlas -------------------------------------------------------------------------------


def test_atlas_transition_example(capsys):
    code, doc = run_json(["atlas", "transition", "sphere-stereo", "--from", "north", "--to", "south",
                          "--point", "2,0"], capsys)
    assert code == 0
    assert doc["value"] == pytest.approx([0.5, 0.0])
    assert doc["det"] == pytest.approx(-1 / 16)
    assert "tolerances" in doc


def test_atlas_transition_outside_overlap(capsys):
    code, _ = run_json(["atlas", "transition", "sphere-hemispheres", "--from", "phi3", "--to", "phi1",
                        "--point", "0.9,0.9"], capsys)
    assert code == 1


@pytest.mark.parametrize("argv", [
    ["atlas", "transition", "sphere-stereo", "--from", "east", "--to", "south", "--point", "1,0"],
    ["atlas", "transition", "sphere-stereo", "--from", "north", "--to", "south", "--point", "1"],
    ["atlas", "transition", "sphere-stereo", "--from", "north", "--to", "south", "--point", "a,b"],
    ["atlas", "verify", "sphere", "--tol", "speed=3"],
    ["atlas", "verify", "sphere", "--samples", "0"],
    ["atlas", "frobnicate"],
])
def test_atlas_usage_errors(argv, capsys):
    assert run(argv, capsys)[0] == 2


def test_unknown_builtin_lists_zoo(capsys):
    code, _, err = run(["atlas", "verify", "klein-bottle"], capsys)
    assert code == 2 and "sphere_stereo" in err and "projective_plane" in err


def test_atlas_verify_pass_and_fail(capsys):
    code, doc = run_json(["atlas", "verify", "sphere_stereo", "--samples", "300"], capsys)
    assert code == 0 and doc["report"]["passed"]
    assert doc["report"]["tolerances"]["det_floor"] == 1e-8
    code, doc = run_json(["atlas", "verify", "real-line-cubic"], capsys)
    assert code == 1
    assert doc["witness"]["kind"] == "smoothness" and abs(doc["witness"]["coords"][0]) < 0.01
    code, _ = run_json(["atlas", "verify", "real-line-cubic", "--coord-floor", "0.1"], capsys)
    assert code == 0


def test_atlas_verify_chart_subset(capsys):
    code, doc = run_json(["atlas", "verify", "sphere-hemispheres", "--charts", "phi1,phi2"], capsys)
    assert code == 1 and doc["witness"]["kind"] == "covering"


def test_atlas_tolerance_override(capsys):
    code, doc = run_json(["atlas", "verify", "circle", "--tol", "fd_tol=1e-3", "--tol", "min_overlap=5"], capsys)
    assert code == 0
    assert doc["report"]["tolerances"]["fd_tol"] == 1e-3 and doc["report"]["tolerances"]["min_overlap"] == 5


def test_atlas_list(capsys):
    code, doc = run_json(["atlas", "list"], capsys)
    assert code == 0 and doc["manifolds"]["sphere_stereo"]["charts"] == ["north", "south"]


# -- tangent and homeo ---------------------------------------------------------------------


def test_tangent_transform(capsys):
    code, doc = run_json(["tangent", "transform", "sphere_stereo", "--from", "north", "--to", "south",
                          "--point", "1,0", "--components", "1,0"], capsys)
    assert code == 0
    assert doc["target_components"] == pytest.approx([-1.0, 0.0])
    assert doc["roundtrip_error"] <= 1e-9


def test_tangent_transform_outside_target(capsys):
    code, _ = run_json(["tangent", "transform", "sphere-hemispheres", "--from", "phi1", "--to", "phi2",
                        "--point", "0.1,0.1", "--components", "1,0"], capsys)
    assert code == 1


def test_homeo_check(capsys):
    code, doc = run_json(["homeo", "check", "ball_space:2", "--samples", "500"], capsys)
    assert code == 0 and doc["round_trip"]["passed"]
    code, doc = run_json(["homeo", "check", "circle_param", "--samples", "500"], capsys)
    assert code == 1 and doc["inverse_jump"] == pytest.approx(0.998)
    code, doc = run_json(["homeo", "check", "circle-square", "--samples", "500"], capsys)
    assert code == 0
    assert run(["homeo", "check", "moebius"], capsys)[0] == 2


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "chartbench", "topo", "enumerate", "--n", "2", "--count-only"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip() == "4"
