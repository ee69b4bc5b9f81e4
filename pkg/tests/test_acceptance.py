"""Acceptance criteria, one test each.

Every test carries a ``criterion`` marker; the terminal summary prints a
PASS/FAIL line per criterion.  Run standalone with ``python3 tests/test_acceptance.py``.
"""
import itertools
import json
import subprocess
import sys
import time

import numpy as np
import pytest

import oracles
from chartbench import atlas, euclid_maps as em, finite_topology as ft, tangent as T, zoo

SPHERE = zoo.sphere_all()


def _random_field(rng, N):
    a, b, c = rng.standard_normal((3, N)) / np.sqrt(N)
    return T.ScalarField(lambda P: np.sin(P @ a) + 0.5 * (P @ b) ** 2 + P @ c)


def _vectors(m, count, seed, margin=0.05, need_second_chart=False):
    rng = np.random.default_rng(seed)
    out = []
    for batch in range(50):
        for p in m.sample(4 * count, seed + 1000 * batch):
            charts = [ch for ch in m.atlas if ch.domain(p, margin)]
            if not charts or (need_second_chart and len(charts) < 2):
                continue
            out.append(T.TangentVector(m, p, charts[0].id, rng.standard_normal(m.n)))
            if len(out) == count:
                return out, rng
    raise AssertionError(f"could not draw {count} vectors on {m.name}")


@pytest.mark.criterion("topology enumeration 1,1,4,29,355 (n<=4, < 60 s)")
def test_enumeration_counts():
    expected = [1, 1, 4, 29, 355]
    t0 = time.perf_counter()
    got = [ft.enumerate_topologies(n) for n in range(5)]
    elapsed = time.perf_counter() - t0
    assert got == expected
    assert [len(oracles.brute_force_topologies(n)) for n in range(5)] == expected
    assert [oracles.count_preorders(n) for n in range(5)] == expected
    # the listed spaces agree with the oracle's family set for n = 3
    _, spaces = ft.enumerate_topologies(3, count_only=False)
    listed = {frozenset(frozenset(s.labels(o)) for o in s.opens) for s in spaces}
    assert listed == set(oracles.brute_force_topologies(3))
    assert elapsed < 60.0


@pytest.mark.criterion("counterexample suite: tau, trivial, discrete")
def test_counterexample_suite():
    pts = (1, 2, 3)
    fam = [0, 0b001, 0b110, 0b111]
    assert ft.verify_topology(pts, fam).is_topology
    tau = ft.FiniteSpace(pts, fam)
    assert ft.is_hausdorff(tau) is False
    assert tuple(tau.points[i] for i in ft.hausdorff_witness(tau)) == (2, 3)
    for k in range(2, 6):
        labels = tuple(range(k))
        assert ft.is_hausdorff(ft.trivial_space(labels)) is False
        disc = ft.discrete_space(labels)
        assert ft.is_hausdorff(disc) is True and ft.is_connected(disc) is False


@pytest.mark.criterion("exhaustive n<=4: Hausdorff <=> discrete, singletons closed")
def test_hausdorff_exhaustive():
    exceptions = 0
    checked = 0
    for n in range(5):
        _, spaces = ft.enumerate_topologies(n, count_only=False)
        for s in spaces:
            h = ft.is_hausdorff(s)
            assert h == oracles.hausdorff_sets(s.points, [s.labels(o) for o in s.opens])
            discrete = len(s.opens) == 1 << n
            exceptions += h != discrete
            if h:
                exceptions += not all(s.is_closed(1 << i) for i in range(n))
            checked += 1
    assert checked == 1 + 1 + 4 + 29 + 355
    assert exceptions == 0


@pytest.mark.criterion("homeomorphism catalog at 1e-12 over 1e4 samples; jump 0.998 vs < 1e-2")
def test_homeomorphism_catalog():
    specs = [em.interval_line(), em.cube_sphere(), em.circle_square()]
    specs += [em.ball_space(n) for n in (1, 2, 3)] + [em.hemisphere_disc(n) for n in (2, 3)]
    for spec in specs:
        rep = em.check_round_trip(spec, n_samples=10_000, seed=0, tol=1e-12)
        assert rep.samples == 10_000 and rep.passed, (spec.name, rep.max_error)
    assert abs(em.detect_inverse_jump(em.circle_param(), 1e-3) - 0.998) <= 1e-9
    assert em.detect_inverse_jump(em.circle_square(), 1e-3) < 1e-2


@pytest.mark.criterion("sphere atlases, equivalence and three closed forms at 1e-10")
def test_sphere_atlas_proofs():
    hemi, stereo = zoo.sphere_hemispheres(), zoo.sphere_stereo()
    assert atlas.verify_atlas(hemi).passed
    assert atlas.verify_atlas(stereo).passed
    assert atlas.atlases_equivalent(SPHERE, hemi.chart_ids, stereo.chart_ids).passed

    closed = {
        ("north", "south"): lambda c: np.stack(oracles.stereo_inversion(c[:, 0], c[:, 1]), -1),
        ("phi1", "phi3"): lambda c: np.stack([c[:, 0], np.sqrt(1 - c[:, 0] ** 2 - c[:, 1] ** 2)], -1),
        ("phi3", "north"): lambda c: np.stack(oracles.stereo_north_to_phi3(c[:, 0], c[:, 1]), -1),
    }
    for (i, j), form in closed.items():
        tr = atlas.transition(SPHERE, i, j, samples=1000, seed=0)
        assert len(tr.overlap) == 1000
        assert np.max(np.abs(tr(tr.overlap) - form(tr.overlap))) <= 1e-10, (i, j)


@pytest.mark.criterion("projective plane atlas and (x2/x1, 1/x1) at 1e-10")
def test_projective_plane():
    m = zoo.projective_plane()
    assert atlas.verify_atlas(m).passed
    tr = atlas.transition(m, "phi1", "phi3", samples=1000, seed=0)
    u, v = tr.overlap[:, 0], tr.overlap[:, 1]
    assert np.all(u != 0)
    assert np.max(np.abs(tr(tr.overlap) - np.stack(oracles.rp2_13(u, v), -1))) <= 1e-10


@pytest.mark.criterion("cubic negative control: fails near 0, passes for |c| >= 0.1")
def test_cubic_negative_control():
    m = zoo.real_line_cubic()
    bad = atlas.atlases_equivalent(m, ["id"], ["cubic"])
    assert not bad.passed
    witnesses = [p.witness for p in bad.cross_failures]
    assert witnesses and all(w.kind == "smoothness" and abs(w.coords[0]) < 0.01 for w in witnesses)
    assert atlas.atlases_equivalent(m, ["id"], ["cubic"], coord_floor=0.1).passed


@pytest.mark.criterion("Jacobians: analytic vs FD 1e-5, det products 1e-4, hemisphere transition determinant")
def test_jacobian_machinery():
    checked = 0
    for name in zoo.builtin_names():
        m = zoo.builtin(name)
        floor = 0.1 if name == "real_line_cubic" else None
        for i, j in itertools.product(m.chart_ids, repeat=2):
            tr = atlas.transition(m, i, j, samples=200, seed=0, coord_floor=floor)
            if tr.empty or not tr.has_analytic_jacobian:
                continue
            assert np.max(atlas.jacobian_gap(tr, tr.overlap)) <= 1e-5, (name, i, j)
            back = atlas.transition_fn(m, j, i)
            d = np.linalg.det(tr.analytic_jacobian(tr.overlap)) * np.linalg.det(back.analytic_jacobian(tr(tr.overlap)))
            assert np.max(np.abs(d - 1)) <= 1e-4, (name, i, j)
            checked += 1
    assert checked >= 40

    tr = atlas.transition(SPHERE, "phi1", "phi3", samples=100, seed=0)
    x1, x3 = tr.overlap[:, 0], tr.overlap[:, 1]
    dets = np.linalg.det(np.stack([atlas.jacobian(tr, c).matrix for c in tr.overlap]))
    assert len(dets) == 100
    assert np.allclose(dets, -x3 / np.sqrt(1 - x1 ** 2 - x3 ** 2), rtol=1e-10, atol=1e-12)


@pytest.mark.criterion("tangent calculus: duality, round trip, invariance, Leibniz/chain, bundle")
def test_tangent_calculus():
    multi = ["sphere", "projective_plane", "circle", "cylinder", "torus"]
    for name in zoo.builtin_names():
        m = zoo.builtin(name)
        vecs, rng = _vectors(m, 100, seed=11)
        for v in vecs[:10]:
            for i in range(m.n):
                e = T.basis_vector(m, v.point, v.chart_id, i)
                for j in range(m.n):
                    assert abs(T.apply(e, T.coordinate_function(v.chart, j)) - (i == j)) <= 1e-6
        for v in vecs:
            f, g, h = (_random_field(rng, m.ambient_dim) for _ in range(3))
            assert T.check_leibniz(v, f, g, tol=1e-5).passed, name
            k = int(rng.integers(1, 4))
            gs = [f, g, h][:k]
            assert T.check_chain_rule(v, lambda y: np.sin(np.sum(y, axis=-1)) + np.prod(y, axis=-1), gs,
                                      tol=1e-5).passed, name
    for name in multi:
        m = zoo.builtin(name)
        vecs, rng = _vectors(m, 100, seed=5, need_second_chart=True)
        for v in vecs:
            f = _random_field(rng, m.ambient_dim)
            base = T.apply(v, f)
            other = next(ch.id for ch in m.atlas if ch.id != v.chart_id and ch.domain(v.point, 0.05))
            w = T.change_chart(v, other)
            assert abs(T.apply(w, f) - base) <= 1e-6 * max(1.0, abs(base)), name
            assert np.max(np.abs(T.change_chart(w, v.chart_id).components - v.components)) <= 1e-9, name
    tb = T.tangent_bundle(zoo.sphere_stereo())
    assert tb.n == 4
    assert atlas.verify_atlas(tb).passed


@pytest.mark.criterion("rotation field consistent at 1e-6; Lie derivative of height <= 1e-6")
def test_rotation_field():
    R = T.sphere_rotation_field()
    assert T.check_field_consistency(R, samples=1000, tol=1e-6).passed
    P = R.manifold.sample(1000, seed=0)
    Xh = T.lie_derivative(R, T.ScalarField(zoo.height))
    assert np.max(np.abs(Xh(P))) <= 1e-6


CLI_RUNS = [
    ["topo", "check", "{space}"],
    ["topo", "props", "{space}", "--set", "2"],
    ["topo", "enumerate", "--n", "3"],
    ["topo", "map", "{space}", "{space}", "--assign", "1=1,2=3,3=2", "--find"],
    ["atlas", "list"],
    ["atlas", "verify", "sphere_stereo", "--seed", "3", "--samples", "300"],
    ["atlas", "transition", "sphere_stereo", "--from", "north", "--to", "south", "--point", "1,1"],
    ["tangent", "transform", "sphere_stereo", "--from", "north", "--to", "south", "--point", "1,0",
     "--components", "1,2"],
    ["homeo", "check", "ball_space:2", "--seed", "3", "--samples", "1000"],
]


@pytest.mark.criterion("CLI determinism: byte-identical --json for every verb")
def test_cli_determinism(tmp_path):
    space = tmp_path / "tau.json"
    space.write_text(json.dumps({"points": ["1", "2", "3"], "opens": [[], ["1"], ["2", "3"], ["1", "2", "3"]]}))
    verbs = set()
    for argv in CLI_RUNS:
        argv = [a.format(space=space) for a in argv] + ["--json"]
        outs = [subprocess.run([sys.executable, "-m", "chartbench", *argv], capture_output=True) for _ in range(2)]
        assert outs[0].returncode == 0, (argv, outs[0].stderr)
        assert outs[0].stdout == outs[1].stdout and outs[0].stdout
        json.loads(outs[0].stdout)
        verbs.add(tuple(argv[:2]))
    assert len(verbs) == 9


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
