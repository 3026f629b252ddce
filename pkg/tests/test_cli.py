import json

import numpy as np
import pytest

from treelens import cli
from treelens.geodesic import geodesic_calls
from treelens.tree_core import nni_neighbors, split_label
from treelens.simulate import grouped_collection, synthetic_collection
from treelens.treeio import read_newick, write_collection, write_newick
from treelens.uncertainty import chi_square_quantile


def _write(tmp_path, coll, rates=None, groups=None, stem="trees"):
    trees = tmp_path / f"{stem}.nwk"
    trees.write_text(write_collection(coll))
    out = {"trees": str(trees)}
    if rates is not None:
        p = tmp_path / f"{stem}_rates.csv"
        p.write_text("name,rate\n" + "".join(f"{n},{float(r)!r}\n" for n, r in zip(coll.names, rates)))
        out["rates"] = str(p)
    if groups is not None:
        p = tmp_path / f"{stem}_groups.csv"
        p.write_text("name,group\n" + "".join(f"{n},{g}\n" for n, g in zip(coll.names, groups)))
        out["groups"] = str(p)
    return out


@pytest.fixture
def genes(tmp_path):
    rates = np.random.default_rng(0).uniform(0.5, 2.0, 20)
    coll = synthetic_collection(20, 8, seed=1, rates=rates)
    return coll, _write(tmp_path, coll, rates)


def test_mean_of_identical_trees(tmp_path):
    coll = synthetic_collection(1, 7, seed=0)
    (tmp_path / "t.nwk").write_text("".join(f"r{i} {write_newick(coll[0])}\n" for i in range(3)))
    cli.cmd_mean(str(tmp_path / "t.nwk"), out=tmp_path / "o")
    mean = read_newick((tmp_path / "o" / "mean.nwk").read_text(), taxa=coll.taxa)
    assert mean == coll[0]


def test_equal_rates_match_unweighted(tmp_path, genes):
    coll, paths = genes
    flat = _write(tmp_path, coll, np.full(len(coll), 2.0), stem="flat")
    cli.cmd_mean(paths["trees"], out=tmp_path / "a", max_iter=200)
    cli.cmd_mean(flat["trees"], rates=flat["rates"], out=tmp_path / "b", max_iter=200)
    assert (tmp_path / "a" / "mean.nwk").read_bytes() == (tmp_path / "b" / "mean.nwk").read_bytes()


def test_manifest_counts_match_counter(tmp_path, genes):
    _, paths = genes
    before = geodesic_calls()
    man = cli.cmd_mean(paths["trees"], out=tmp_path / "m", max_iter=100)
    assert man["geodesic_calls"] == geodesic_calls() - before
    on_disk = json.loads((tmp_path / "m" / "manifest.json").read_text())
    assert on_disk["geodesic_calls"] == man["geodesic_calls"]
    assert set(on_disk["outputs"]) == {"mean.nwk", "iterations.csv"}
    assert on_disk["inputs"]["trees"]["sha256"]


def test_extrinsic_outputs(tmp_path, genes):
    coll, paths = genes
    man = cli.cmd_extrinsic(paths["trees"], paths["rates"], out=tmp_path / "e", max_iter=300)
    n = len(coll)
    assert man["geodesic_calls"] <= 300 + n
    fit = json.loads((tmp_path / "e" / "fit.json").read_text())
    assert fit["c"] == chi_square_quantile(5, 0.95)
    # shapes are sigma^2 r_i I, so projected semi-axes scale with sqrt(r_i)
    rows = (tmp_path / "e" / "ellipses.csv").read_text().splitlines()[1:]
    s11 = np.array([float(r.split(",")[3]) for r in rows])
    ratio = s11 / coll.rates
    assert np.allclose(ratio, ratio[0])
    svg = (tmp_path / "e" / "extrinsic.svg").read_text()
    assert svg.count("<path") == n


def test_extrinsic_rerun_with_saved_base_and_rotation(tmp_path, genes):
    coll, paths = genes
    cli.cmd_extrinsic(paths["trees"], paths["rates"], out=tmp_path / "a", max_iter=200)
    base, rot = tmp_path / "a" / "mean.nwk", tmp_path / "a" / "pca.json"
    for d in ("b", "c"):
        cli.cmd_extrinsic(paths["trees"], paths["rates"], out=tmp_path / d, base=str(base), rotation=str(rot))
    for name in ("logmap.csv", "points.csv", "ellipses.csv", "extrinsic.svg"):
        assert (tmp_path / "b" / name).read_bytes() == (tmp_path / "c" / name).read_bytes()
    assert (tmp_path / "a" / "logmap.csv").read_bytes() == (tmp_path / "b" / "logmap.csv").read_bytes()


def test_intrinsic_separated_groups(tmp_path):
    coll = grouped_collection([6, 6], n_taxa=6, seed=0, spread=0.0, sigma=0.02)
    # push the second group far along every coordinate
    shifted = [t if g == "g1" else t.replace(internal={s: v + 3.0 for s, v in t.internal.items()})
               for t, g in zip(coll.trees, coll.groups)]
    coll = type(coll)(coll.taxa, shifted, coll.names, groups=coll.groups)
    paths = _write(tmp_path, coll, groups=coll.groups)
    man = cli.cmd_intrinsic(paths["trees"], paths["groups"], out=tmp_path / "i")
    assert man["estimators"] == {"g1": "shrinkage", "g2": "shrinkage"}
    from treelens.projection import ProjectedEllipse

    ells = []
    for row in (tmp_path / "i" / "ellipses.csv").read_text().splitlines()[1:]:
        _, c1, c2, s11, s12, s22, c = row.split(",")
        ells.append(ProjectedEllipse(np.array([float(c1), float(c2)]),
                                     np.array([[float(s11), float(s12)], [float(s12), float(s22)]]), float(c)))
    assert not ells[0].contains(ells[1].boundary(400)).any()
    assert not ells[1].contains(ells[0].boundary(400)).any()


def test_intrinsic_estimator_threshold(tmp_path):
    coll = grouped_collection([3, 3], n_taxa=10, seed=1)
    paths = _write(tmp_path, coll, groups=coll.groups)
    man = cli.cmd_intrinsic(paths["trees"], paths["groups"], out=tmp_path / "i")
    assert set(man["estimators"].values()) == {"shrinkage"}


def test_intrinsic_duplicate_group_gives_identical_ellipses(tmp_path):
    coll = grouped_collection([4], n_taxa=6, seed=2)
    trees = list(coll.trees) * 2
    names = [f"{n}_{k}" for k in "ab" for n in coll.names]
    groups = ["a"] * 4 + ["b"] * 4
    dup = type(coll)(coll.taxa, trees, names, groups=groups)
    paths = _write(tmp_path, dup, groups=groups)
    cli.cmd_intrinsic(paths["trees"], paths["groups"], out=tmp_path / "i")
    rows = (tmp_path / "i" / "ellipses.csv").read_text().splitlines()[1:]
    a = np.array(rows[0].split(",")[1:], dtype=float)
    b = np.array(rows[1].split(",")[1:], dtype=float)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


def test_mds_counts(tmp_path):
    coll = synthetic_collection(10, 7, seed=3)
    paths = _write(tmp_path, coll)
    man = cli.cmd_mds(paths["trees"], out=tmp_path / "m")
    assert man["geodesic_calls"] == 45
    assert man["stress_variant"] == "kruskal1"
    assert 0 <= man["stress"] < 1


def test_distmat(tmp_path):
    coll = synthetic_collection(6, 6, seed=3)
    paths = _write(tmp_path, coll)
    cli.cmd_distmat(paths["trees"], out=tmp_path / "d")
    lines = (tmp_path / "d" / "distances.csv").read_text().splitlines()
    assert lines[0] == "name," + ",".join(coll.names)
    D = np.array([l.split(",")[1:] for l in lines[1:]], dtype=float)
    assert np.array_equal(D, D.T)


def test_nni_experiment(tmp_path):
    man = cli.cmd_nni_experiment(out=tmp_path / "a", n_taxa=12, seed=4)
    s = man["summary"]
    assert s["neighbors"] == 18
    assert s["logmap_min"] == s["logmap_max"] == 2.0
    assert s["mds_ratio"] > 1
    cli.cmd_nni_experiment(out=tmp_path / "b", n_taxa=12, seed=4)
    for name in ("comparison.csv", "mds.svg", "logmap.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_coord_plot(tmp_path, genes):
    coll, paths = genes
    base = tmp_path / "base.nwk"
    base.write_text(write_newick(coll[0]) + "\n")
    from treelens.logmap import coordinate_labels

    labels = coordinate_labels(coll[0])
    man = cli.cmd_coord_plot(paths["trees"], str(base), labels[:2], out=tmp_path / "c")
    assert set(man["supports"]) == set(labels[:2])
    svg = (tmp_path / "c" / "coord.svg").read_text()
    assert "% support)" in svg


def test_main_exit_codes(tmp_path, genes, capsys):
    coll, paths = genes
    assert cli.main(["logmap", "--trees", str(tmp_path / "missing.nwk"), "--base", paths["trees"],
                     "--out", str(tmp_path / "x")]) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("error: input:")

    base = tmp_path / "base.nwk"
    base.write_text(write_newick(coll[0]) + "\n")
    foreign = next(s for s in nni_neighbors(coll[0])[0].internal if s not in coll[0].internal)
    known = next(iter(coll[0].internal))
    assert cli.main(["coord-plot", "--trees", paths["trees"], "--base", str(base),
                     "--split", split_label(foreign, coll.taxa), "--split", split_label(known, coll.taxa),
                     "--out", str(tmp_path / "y")]) == 2
    assert "not on the base" in capsys.readouterr().err

    same = _write(tmp_path, type(coll)(coll.taxa, [coll[0]] * 4, list("abcd")), np.ones(4), stem="same")
    assert cli.main(["extrinsic", "--trees", same["trees"], "--rates", same["rates"], "--base", str(base),
                     "--out", str(tmp_path / "z")]) == 3
    assert capsys.readouterr().err.startswith("error: numerical:")

    assert cli.main(["mds", "--trees", paths["trees"], "--out", str(tmp_path / "ok"), "--workers", "1"]) == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed["geodesic_calls"] == 190


def test_appending_a_tree_keeps_old_coordinates(tmp_path, genes):
    coll, paths = genes
    cli.cmd_extrinsic(paths["trees"], paths["rates"], out=tmp_path / "a", max_iter=200)
    base, rot = str(tmp_path / "a" / "mean.nwk"), str(tmp_path / "a" / "pca.json")
    extra = synthetic_collection(1, 8, seed=99, rates=[1.0], base=coll[3], prefix="new")
    more = type(coll)(coll.taxa, list(coll.trees) + list(extra.trees), list(coll.names) + list(extra.names))
    bigger = _write(tmp_path, more, list(coll.rates) + [1.0], stem="more")
    cli.cmd_extrinsic(bigger["trees"], bigger["rates"], out=tmp_path / "b", base=base, rotation=rot)
    old = (tmp_path / "a" / "points.csv").read_text().splitlines()
    new = (tmp_path / "b" / "points.csv").read_text().splitlines()
    assert new[: len(old)] == old
    assert len(new) == len(old) + 1


def test_console_entry_point(tmp_path):
    import subprocess
    import sys

    done = subprocess.run([sys.executable, "-m", "treelens.cli", "--version"], capture_output=True, text=True)
    assert done.returncode == 0 and done.stdout.startswith("treelens ")
    done = subprocess.run([sys.executable, "-m", "treelens.cli", "distmat", "--trees", str(tmp_path / "nope"),
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert done.returncode == 2
    assert done.stderr.count("\n") == 1
