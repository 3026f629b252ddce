"""Command-line front end.

Every command writes its outputs plus a ``manifest.json`` into ``--out``.
Exit status: 0 success, 2 input or validation error, 3 numerical failure;
failures print one ``error: <kind>: <message>`` line on stderr.

The ``cmd_*`` functions are the programmatic entry points; ``main`` only
parses arguments and forwards to them.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .frechet import MeanConfig, frechet_mean
from .geodesic import bhv_distance, count_geodesics, default_workers, distance_matrix
from .logmap import coordinate_report, log_map_batch, resolve_base
from .projection import PcaModel, STRESS_VARIANTS, mds_kruskal, pca, project_ellipsoid
from .svg import coordinate_plot, scatter_with_ellipses
from .tree_core import (
    TreeError,
    nni_neighbors,
    parse_split_label,
    random_resolved_tree,
    rf_distance,
    split_label,
)
from .treeio import TreeCollection, load_trees, read_groups, read_newick, read_rates, write_newick
from .uncertainty import (
    dump_fit,
    fit_extrinsic,
    fit_intrinsic,
    minimum_volume_set,
    outlier_variance_change,
)


class NumericalError(RuntimeError):
    """A computation failed to produce a trustworthy result."""


# ---------------------------------------------------------------------------
# helpers


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class _Run:
    """Collects outputs and writes the manifest for one command."""

    def __init__(self, command: str, out, args: dict, inputs: dict):
        self.command = command
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.args = args
        self.inputs = {k: str(v) for k, v in inputs.items() if v is not None}
        self.outputs: dict[str, str] = {}
        self.extra: dict = {}
        self.t0 = time.perf_counter()

    def write(self, name: str, text: str) -> Path:
        path = self.out / name
        path.write_text(text, encoding="utf-8")
        self.outputs[name] = _sha256(path)
        return path

    def finish(self, calls: int) -> dict:
        manifest = {
            "command": self.command,
            "tool_version": __version__,
            "arguments": self.args,
            "inputs": {k: {"path": v, "sha256": _sha256(Path(v))} for k, v in self.inputs.items()},
            "pendant_mode": self.args.get("pendant_mode"),
            "alpha": self.args.get("alpha"),
            "seed": self.args.get("seed"),
            "geodesic_calls": calls,
            "timings": {"seconds": round(time.perf_counter() - self.t0, 6)},
            "outputs": dict(sorted(self.outputs.items())),
        }
        manifest.update(self.extra)
        (self.out / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True, default=_jsonable) + "\n", encoding="utf-8"
        )
        return manifest


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, Path):
        return str(x)
    raise TypeError(f"not serializable: {type(x).__name__}")


def _r(x) -> str:
    return repr(float(x))


def _csv_field(text: str) -> str:
    if any(c in text for c in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def _matrix_csv(names, D) -> str:
    buf = io.StringIO()
    buf.write("name," + ",".join(_csv_field(n) for n in names) + "\n")
    for name, row in zip(names, D):
        buf.write(_csv_field(name) + "," + ",".join(_r(v) for v in row) + "\n")
    return buf.getvalue()


def _points_csv(names, pts, extra_cols=None) -> str:
    buf = io.StringIO()
    k = pts.shape[1]
    cols = ["name"] + (list(extra_cols) if extra_cols else []) + [f"pc{j + 1}" for j in range(k)]
    buf.write(",".join(cols) + "\n")
    for i, name in enumerate(names):
        fields = [_csv_field(name)]
        if extra_cols:
            fields += [_csv_field(str(extra_cols[c][i])) for c in extra_cols]
        fields += [_r(v) for v in pts[i]]
        buf.write(",".join(fields) + "\n")
    return buf.getvalue()


def _ellipses_csv(names, ellipses) -> str:
    buf = io.StringIO()
    buf.write("name,center1,center2,shape11,shape12,shape22,c\n")
    for name, e in zip(names, ellipses):
        s = e.shape2
        buf.write(
            f"{_csv_field(name)},{_r(e.center2[0])},{_r(e.center2[1])},"
            f"{_r(s[0, 0])},{_r(s[0, 1])},{_r(s[1, 1])},{_r(e.c)}\n"
        )
    return buf.getvalue()


def _load_base(path, coll: TreeCollection, eps):
    base = read_newick(Path(path).read_text(encoding="utf-8"), taxa=coll.taxa)
    if eps is not None:
        base = resolve_base(base, eps, coll)
    return base


def _mean_config(seed, max_iter, tol, window, pendant_mode, weights=None, final_objective=True):
    return MeanConfig(
        weights=weights, max_iter=max_iter, tol=tol, window=window, seed=seed,
        pendant_mode=pendant_mode, final_objective=final_objective,
    )


def _pca_for(rows, rotation, out_run: _Run) -> PcaModel:
    if rotation is not None:
        model = PcaModel.load(rotation)
        if model.mean.shape[0] != rows.shape[1]:
            raise TreeError("rotation file does not match the log-map dimension")
    else:
        model = pca(rows)
    out_run.write("pca.json", json.dumps(model.to_dict(), indent=2) + "\n")
    if model.k < 2:
        raise NumericalError("fewer than two principal components available")
    return model


# ---------------------------------------------------------------------------
# commands


def cmd_mean(trees, out, rates=None, seed=0, max_iter=10_000, tol=1e-4, window=50,
             pendant_mode="exclude", mode="auto", workers=1):
    """Weighted (1/r_i) or unweighted Fréchet mean of a tree file."""
    args = dict(trees=trees, rates=rates, seed=seed, max_iter=max_iter, tol=tol, window=window,
                pendant_mode=pendant_mode, mode=mode)
    run = _Run("mean", out, args, {"trees": trees, "rates": rates})
    with count_geodesics() as box:
        coll = load_trees(trees, mode=mode)
        weights = None
        if rates is not None:
            coll = read_rates(Path(rates), coll)
            weights = 1.0 / coll.rates
        mean, report = frechet_mean(coll, _mean_config(seed, max_iter, tol, window, pendant_mode, weights))
    run.write("mean.nwk", write_newick(mean) + "\n")
    run.write("iterations.csv", report.to_csv())
    run.extra.update(
        iterations=report.iterations, converged=report.converged,
        objective=report.objective, start_index=report.start_index, weighting=report.weighting,
    )
    return run.finish(box.calls)


def cmd_logmap(trees, base, out, pendant_mode="exclude", resolve_eps=None, mode="auto", workers=1, seed=0):
    """Log-map coordinates of every tree at a given base tree."""
    args = dict(trees=trees, base=base, pendant_mode=pendant_mode, resolve_eps=resolve_eps, mode=mode)
    run = _Run("logmap", out, args, {"trees": trees, "base": base})
    with count_geodesics() as box:
        coll = load_trees(trees, mode=mode)
        base_tree = _load_base(base, coll, resolve_eps)
        batch = log_map_batch(base_tree, coll, pendant_mode)
    run.write("logmap.csv", batch.to_csv())
    run.write("diagnostics.csv", batch.diagnostics_csv())
    run.extra.update(cone_path_fraction=batch.cone_path_fraction(), failures=len(batch.errors))
    return run.finish(box.calls)


def cmd_distmat(trees, out, pendant_mode="exclude", workers=1, mode="auto", seed=0):
    """Square CSV of all pairwise BHV distances."""
    args = dict(trees=trees, pendant_mode=pendant_mode, workers=workers, mode=mode)
    run = _Run("distmat", out, args, {"trees": trees})
    with count_geodesics() as box:
        coll = load_trees(trees, mode=mode)
        D, _ = distance_matrix(coll, pendant_mode, workers)
    run.write("distances.csv", _matrix_csv(coll.names, D))
    return run.finish(box.calls)


def cmd_extrinsic(trees, rates, out, alpha=0.05, base=None, rotation=None, normalization="mle",
                  seed=0, max_iter=10_000, tol=1e-4, window=50, pendant_mode="exclude",
                  resolve_eps=None, mode="auto", workers=1):
    """Rate-weighted mean, log maps, spherical-noise fit, sets and their shadows."""
    args = dict(trees=trees, rates=rates, alpha=alpha, base=base, rotation=rotation,
                normalization=normalization, seed=seed, max_iter=max_iter, tol=tol, window=window,
                pendant_mode=pendant_mode, resolve_eps=resolve_eps, mode=mode)
    run = _Run("extrinsic", out, args, {"trees": trees, "rates": rates, "base": base, "rotation": rotation})
    with count_geodesics() as box:
        coll = read_rates(Path(rates), load_trees(trees, mode=mode))
        if base is None:
            cfg = _mean_config(seed, max_iter, tol, window, pendant_mode, 1.0 / coll.rates,
                               final_objective=False)
            base_tree, report = frechet_mean(coll, cfg)
            if resolve_eps is not None:
                base_tree = resolve_base(base_tree, resolve_eps, coll)
            run.write("mean.nwk", write_newick(base_tree) + "\n")
            run.extra.update(mean_iterations=report.iterations, mean_converged=report.converged)
        else:
            base_tree = _load_base(base, coll, resolve_eps)
        batch = log_map_batch(base_tree, coll, pendant_mode)
    ok = [i for i in range(len(coll)) if i not in batch.errors]
    if len(ok) < 2:
        raise NumericalError("fewer than two trees could be log-mapped")
    rows = batch.matrix[ok]
    r = coll.rates[ok]
    fit = fit_extrinsic(rows, r, normalization)
    sets = [minimum_volume_set(x, fit.sigma2 * ri * np.eye(rows.shape[1]), alpha) for x, ri in zip(rows, r)]
    model = _pca_for(rows, rotation, run)
    pts = model.transform(rows)[:, :2]
    ellipses = [project_ellipsoid(s, model) for s in sets]
    names = [coll.names[i] for i in ok]

    run.write("logmap.csv", batch.to_csv())
    run.write("diagnostics.csv", batch.diagnostics_csv())
    c = sets[0].c
    run.write("fit.json", dump_fit(fit, alpha=alpha, c=c, dimension=rows.shape[1]))
    run.write("points.csv", _points_csv(names, pts))
    run.write("ellipses.csv", _ellipses_csv(names, ellipses))
    run.write("extrinsic.svg", scatter_with_ellipses(
        pts, ellipses, labels=names, title=f"{int(round((1 - alpha) * 100))}% sets, extrinsic model",
    ))
    dist = batch.distances[ok]
    run.extra.update(
        sigma2=fit.sigma2, c=c, variance_explained=model.variance_explained[:2],
        base_point_pc=model.transform(batch.base_vector)[0, :2],
        weighted_objective=float(np.sum(dist**2 / r)),
        cone_path_fraction=batch.cone_path_fraction(), failures=len(batch.errors),
    )
    if len(ok) > 6:
        run.extra["sigma2_change_without_4_farthest"] = outlier_variance_change(rows, r, 4, normalization)
    return run.finish(box.calls)


def cmd_intrinsic(trees, groups, out, alpha=0.05, estimator="auto", base=None, rotation=None,
                  seed=0, max_iter=10_000, tol=1e-4, window=50, pendant_mode="exclude",
                  resolve_eps=None, mode="auto", workers=1):
    """Per-group means and covariances of replicate trees, with projected sets."""
    args = dict(trees=trees, groups=groups, alpha=alpha, estimator=estimator, base=base, rotation=rotation,
                seed=seed, max_iter=max_iter, tol=tol, window=window, pendant_mode=pendant_mode,
                resolve_eps=resolve_eps, mode=mode)
    run = _Run("intrinsic", out, args, {"trees": trees, "groups": groups, "base": base, "rotation": rotation})
    with count_geodesics() as box:
        coll = read_groups(Path(groups), load_trees(trees, mode=mode))
        labels = sorted(set(coll.groups))
        members = {g: [i for i, x in enumerate(coll.groups) if x == g] for g in labels}
        for g, idx in members.items():
            if len(idx) < 2:
                raise TreeError(f"group {g!r} has fewer than 2 trees")
        cfg = _mean_config(seed, max_iter, tol, window, pendant_mode)
        if base is None:
            group_means = [frechet_mean(coll.subset(members[g]), cfg)[0] for g in labels]
            run.write("group_means.nwk", "".join(f"{g} {write_newick(t)}\n" for g, t in zip(labels, group_means)))
            base_tree = frechet_mean(group_means, cfg)[0]
            if resolve_eps is not None:
                base_tree = resolve_base(base_tree, resolve_eps, coll)
            run.write("base.nwk", write_newick(base_tree) + "\n")
        else:
            base_tree = _load_base(base, coll, resolve_eps)
        batch = log_map_batch(base_tree, coll, pendant_mode)
    if batch.errors:
        first = min(batch.errors)
        raise TreeError(f"log map failed for {coll.names[first]}: {batch.errors[first]}")
    fit = fit_intrinsic({g: batch.matrix[members[g]] for g in labels}, estimator)
    sets = [minimum_volume_set(fit.means[g], fit.covs[g], alpha) for g in labels]
    model = _pca_for(batch.matrix, rotation, run)
    pts = model.transform(batch.matrix)[:, :2]
    ellipses = [project_ellipsoid(s, model) for s in sets]

    run.write("logmap.csv", batch.to_csv())
    run.write("diagnostics.csv", batch.diagnostics_csv())
    run.write("fit.json", dump_fit(fit, alpha=alpha, c=sets[0].c, dimension=batch.matrix.shape[1]))
    run.write("points.csv", _points_csv(coll.names, pts, {"group": list(coll.groups)}))
    run.write("ellipses.csv", _ellipses_csv(labels, ellipses))
    run.write("intrinsic.svg", scatter_with_ellipses(
        pts, ellipses, groups=list(coll.groups), labels=list(coll.names),
        title=f"{int(round((1 - alpha) * 100))}% sets, intrinsic model",
    ))
    run.extra.update(
        estimators={g: fit.estimator[g] for g in labels}, c=sets[0].c,
        variance_explained=model.variance_explained[:2],
        cone_path_fraction={g: float(np.mean([batch.cone_path[i] for i in members[g]])) for g in labels},
    )
    return run.finish(box.calls)


def cmd_mds(trees, out, k=2, stress_variant="kruskal1", seed=0, pendant_mode="exclude", workers=1,
            mode="auto"):
    """Kruskal MDS of the BHV distance matrix."""
    args = dict(trees=trees, k=k, stress_variant=stress_variant, seed=seed, pendant_mode=pendant_mode,
                mode=mode)
    run = _Run("mds", out, args, {"trees": trees})
    with count_geodesics() as box:
        coll = load_trees(trees, mode=mode)
        D, _ = distance_matrix(coll, pendant_mode, workers)
    res = mds_kruskal(D, k=k, seed=seed, variant=stress_variant)
    buf = io.StringIO()
    buf.write("name," + ",".join(f"dim{j + 1}" for j in range(k)) + "\n")
    for name, row in zip(coll.names, res.points):
        buf.write(_csv_field(name) + "," + ",".join(_r(v) for v in row) + "\n")
    run.write("embedding.csv", buf.getvalue())
    xy = res.points[:, :2] if k >= 2 else np.column_stack([res.points[:, 0], np.zeros(len(coll))])
    run.write("mds.svg", scatter_with_ellipses(xy, labels=list(coll.names), title="MDS of BHV distances",
                                               xlabel="dim 1", ylabel="dim 2"))
    run.extra.update(stress_variant=stress_variant, stress=res.stress, initial_stress=res.initial_stress)
    return run.finish(box.calls)


def cmd_nni_experiment(out, n_taxa=50, seed=0, k=3, pendant_mode="exclude", workers=1):
    """Equidistant NNI neighbours of a random unit-length tree under MDS and the log map."""
    args = dict(n_taxa=n_taxa, seed=seed, k=k, pendant_mode=pendant_mode)
    run = _Run("nni-experiment", out, args, {})
    with count_geodesics() as box:
        base = random_resolved_tree(n_taxa, "unit", seed=seed)
        neighbors = nni_neighbors(base)
        trees = [base] + neighbors
        names = ["base"] + [f"nni_{i + 1}" for i in range(len(neighbors))]
        rf = [rf_distance(base, t) for t in trees]
        bhv = [bhv_distance(base, t, pendant_mode) for t in trees]
        if any(r != 2 for r in rf[1:]) or any(abs(d - 2.0) > 1e-9 for d in bhv[1:]):
            raise NumericalError("NNI neighbours are not all at distance 2")
        D, _ = distance_matrix(trees, pendant_mode, workers)
        batch = log_map_batch(base, trees, pendant_mode, names)
    res = mds_kruskal(D, k=k, seed=seed)
    mds_dist = np.linalg.norm(res.points - res.points[0], axis=1)
    lm_dist = np.linalg.norm(batch.matrix - batch.base_vector, axis=1)
    model = pca(batch.matrix)
    pts = model.transform(batch.matrix)[:, :2]

    buf = io.StringIO()
    buf.write("name,rf,bhv,logmap_distance,mds_distance,pc1,pc2,"
              + ",".join(f"mds{j + 1}" for j in range(k)) + "\n")
    for i, name in enumerate(names):
        buf.write(f"{name},{rf[i]},{_r(bhv[i])},{_r(lm_dist[i])},{_r(mds_dist[i])},{_r(pts[i, 0])},{_r(pts[i, 1])},"
                  + ",".join(_r(v) for v in res.points[i]) + "\n")
    run.write("comparison.csv", buf.getvalue())
    run.write("mds.svg", scatter_with_ellipses(res.points[:, :2], labels=names, highlight=0,
                                               title="MDS (Kruskal-1) of NNI neighbours",
                                               xlabel="dim 1", ylabel="dim 2"))
    run.write("logmap.svg", scatter_with_ellipses(pts, labels=names, highlight=0,
                                                  title="Log map (PCA) of NNI neighbours"))
    nb_mds, nb_lm = mds_dist[1:], lm_dist[1:]
    summary = {
        "neighbors": len(neighbors),
        "logmap_min": float(nb_lm.min()), "logmap_max": float(nb_lm.max()),
        "mds_min": float(nb_mds.min()), "mds_max": float(nb_mds.max()),
        "mds_ratio": float(nb_mds.max() / nb_mds.min()),
        "mds_stress": res.stress,
    }
    run.extra.update(summary=summary)
    return run.finish(box.calls)


def cmd_coord_plot(trees, base, splits, out, pendant_mode="exclude", resolve_eps=None, mode="auto",
                   workers=1, seed=0):
    """Scatter of two signed log-map coordinates with split support in the labels."""
    args = dict(trees=trees, base=base, splits=list(splits), pendant_mode=pendant_mode,
                resolve_eps=resolve_eps, mode=mode)
    run = _Run("coord-plot", out, args, {"trees": trees, "base": base})
    if len(splits) != 2:
        raise TreeError("coord-plot needs exactly two splits")
    with count_geodesics() as box:
        coll = load_trees(trees, mode=mode)
        base_tree = _load_base(base, coll, resolve_eps)
        masks = [parse_split_label(s, coll.taxa) for s in splits]
        batch = log_map_batch(base_tree, coll, pendant_mode)
    cols, supports = [], []
    for m in masks:
        col, sup = coordinate_report(batch, m)
        cols.append(col)
        supports.append(sup)
    labels = [f"{split_label(m, coll.taxa)} ({100 * s:.0f}% support)" for m, s in zip(masks, supports)]
    buf = io.StringIO()
    buf.write("name,x,y\n")
    for i, name in enumerate(coll.names):
        buf.write(f"{_csv_field(name)},{_r(cols[0][i])},{_r(cols[1][i])}\n")
    run.write("coords.csv", buf.getvalue())
    run.write("coord.svg", coordinate_plot(cols[0], cols[1], labels[0], labels[1], list(coll.names),
                                           title="Log-map coordinates"))
    run.extra.update(supports=dict(zip([split_label(m, coll.taxa) for m in masks], supports)))
    return run.finish(box.calls)


# ---------------------------------------------------------------------------
# argument parsing


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pendant-mode", choices=("exclude", "include"), default="exclude")
    common.add_argument("--workers", type=int, default=None,
                        help="worker processes (default: $TREELENS_WORKERS or CPU count)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", required=True, help="output directory")

    trees = argparse.ArgumentParser(add_help=False)
    trees.add_argument("--trees", required=True, help="Newick file, one tree per line")
    trees.add_argument("--mode", choices=("auto", "unrooted", "rooted"), default="auto")

    mean = argparse.ArgumentParser(add_help=False)
    mean.add_argument("--max-iter", type=int, default=10_000)
    mean.add_argument("--tol", type=float, default=1e-4)
    mean.add_argument("--window", type=int, default=50)

    base = argparse.ArgumentParser(add_help=False)
    base.add_argument("--resolve-base", type=float, default=None, metavar="EPS",
                      help="move a boundary base tree off zero-length splits by EPS")

    p = argparse.ArgumentParser(prog="treelens", description="Tree-space geometry and uncertainty sets for tree collections.")
    p.add_argument("--version", action="version", version=f"treelens {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("mean", parents=[common, trees, mean], help="weighted Fréchet mean")
    s.add_argument("--rates", help="CSV with header name,rate; weights are 1/rate")

    s = sub.add_parser("logmap", parents=[common, trees, base], help="log-map coordinates")
    s.add_argument("--base", required=True, help="Newick file with the base tree")

    sub.add_parser("distmat", parents=[common, trees], help="pairwise BHV distance matrix")

    s = sub.add_parser("extrinsic", parents=[common, trees, mean, base], help="extrinsic uncertainty model")
    s.add_argument("--rates", required=True)
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--base", help="reuse a saved base tree instead of computing the mean")
    s.add_argument("--rotation", help="reuse a saved pca.json")
    s.add_argument("--normalization", choices=("mle", "literal"), default="mle")

    s = sub.add_parser("intrinsic", parents=[common, trees, mean, base], help="intrinsic uncertainty model")
    s.add_argument("--groups", required=True, help="CSV with header name,group")
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--estimator", choices=("auto", "mle", "shrinkage"), default="auto")
    s.add_argument("--base")
    s.add_argument("--rotation")

    s = sub.add_parser("mds", parents=[common, trees], help="Kruskal MDS of BHV distances")
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--stress-variant", choices=STRESS_VARIANTS, default="kruskal1")

    s = sub.add_parser("nni-experiment", parents=[common], help="MDS vs log map on NNI neighbours")
    s.add_argument("--n-taxa", type=int, default=50)
    s.add_argument("--k", type=int, default=3)

    s = sub.add_parser("coord-plot", parents=[common, trees, base], help="plot two log-map coordinates")
    s.add_argument("--base", required=True)
    s.add_argument("--split", action="append", required=True,
                   help="taxa on one side, '|' or ',' separated; give twice")
    return p


def _dispatch(ns) -> dict:
    workers = ns.workers if ns.workers is not None else default_workers()
    common = dict(out=ns.out, pendant_mode=ns.pendant_mode, seed=ns.seed, workers=workers)
    c = ns.command
    if c == "mean":
        return cmd_mean(ns.trees, rates=ns.rates, max_iter=ns.max_iter, tol=ns.tol, window=ns.window,
                        mode=ns.mode, **common)
    if c == "logmap":
        return cmd_logmap(ns.trees, ns.base, resolve_eps=ns.resolve_base, mode=ns.mode, **common)
    if c == "distmat":
        return cmd_distmat(ns.trees, mode=ns.mode, **common)
    if c == "extrinsic":
        return cmd_extrinsic(ns.trees, ns.rates, alpha=ns.alpha, base=ns.base, rotation=ns.rotation,
                             normalization=ns.normalization, max_iter=ns.max_iter, tol=ns.tol,
                             window=ns.window, resolve_eps=ns.resolve_base, mode=ns.mode, **common)
    if c == "intrinsic":
        return cmd_intrinsic(ns.trees, ns.groups, alpha=ns.alpha, estimator=ns.estimator, base=ns.base,
                             rotation=ns.rotation, max_iter=ns.max_iter, tol=ns.tol, window=ns.window,
                             resolve_eps=ns.resolve_base, mode=ns.mode, **common)
    if c == "mds":
        return cmd_mds(ns.trees, k=ns.k, stress_variant=ns.stress_variant, mode=ns.mode, **common)
    if c == "nni-experiment":
        return cmd_nni_experiment(n_taxa=ns.n_taxa, k=ns.k, **common)
    if c == "coord-plot":
        return cmd_coord_plot(ns.trees, ns.base, ns.split, resolve_eps=ns.resolve_base, mode=ns.mode, **common)
    raise AssertionError(c)


def main(argv=None) -> int:
    ns = _parser().parse_args(argv)
    try:
        manifest = _dispatch(ns)
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"error: numerical: {exc}", file=sys.stderr)
        return 3
    except (TreeError, ValueError, OSError) as exc:
        print(f"error: input: {exc}", file=sys.stderr)
        return 2
    print(json.dumps({"command": manifest["command"], "out": str(ns.out),
                      "geodesic_calls": manifest["geodesic_calls"]}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
