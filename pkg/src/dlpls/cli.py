"""Command-line interface: fit, predict, diagnose, simulate, reproduce, bayes-predict.

Every run writes its outputs into ``--output`` (a directory) together with a
``manifest.json`` holding the resolved arguments, library versions and
SHA-256 digests of inputs and outputs. ``dlpls replay`` reruns a manifest.

Exit codes: 0 success, 2 usage or data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
import warnings
from pathlib import Path

import numpy as np
import scipy

from . import __version__, diagnostics, experiments, simulation, tables
from .bayes import QUANTILES, fit_last_layer, gibbs_last_layer
from .brillinger import fit_single_index
from .dataset import ExpansionSpec, apply_transforms, expand_features, expanded_names, load_csv, parse_transform_spec
from .errors import DataError, NumericalError
from .inner import INNER_KINDS
from .pipeline import DlPlsModel, fit_dlpls, inner_config_from_dict, predict_scores
from .pls import beta_pls, fit_pls

log = logging.getLogger("dlpls")

EXIT_OK, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3
ARTIFACTS = ("scree", "biplot", "corr-circle", "shrinkage", "link-recovery")
SIM_SCENARIOS = simulation.SCENARIOS + ("collinear", "deep_relu")


class UsageError(DataError):
    pass


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class Run:
    """Collects output files for one invocation and writes them atomically."""

    def __init__(self, args):
        self.args = args
        self.out = Path(args.output)
        self.files: dict[str, str] = {}

    def write(self, name: str, text: str):
        tables.atomic_write(self.out / name, text)
        self.files[name] = hashlib.sha256(text.encode("utf-8")).hexdigest()

    def write_table(self, name: str, rows, fieldnames=None):
        fmt = getattr(self.args, "format", "csv")
        if fmt == "json":
            self.write(f"{name}.json", tables.dumps(list(rows)))
        else:
            self.write(f"{name}.csv", tables.emit_csv(rows, fieldnames))

    def finish(self):
        inputs = {}
        for key in ("input", "model", "train"):
            p = getattr(self.args, key, None)
            if p and Path(p).is_file():
                inputs[key] = {"path": str(p), "sha256": _sha256(Path(p))}
        resolved = {k: v for k, v in vars(self.args).items() if k not in ("func", "verbose")}
        manifest = {
            "tool": "dlpls",
            "version": __version__,
            "subcommand": self.args.command,
            "arguments": resolved,
            "seed": getattr(self.args, "seed", None),
            "environment": {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__},
            "inputs": inputs,
            "outputs": dict(sorted(self.files.items())),
        }
        tables.atomic_write(self.out / "manifest.json", tables.dumps(manifest))


def _read_table(args, outputs):
    table = load_csv(args.input, outputs=outputs, delimiter=args.delimiter)
    if table.n == 0:
        raise DataError("no rows")
    return table


def _targets(args):
    if args.target:
        return [t.strip() for t in args.target.split(",")]
    return None


def _load_training(args):
    outputs = _targets(args)
    if outputs is None:
        # default: last column is the output
        with open(args.input, encoding="utf-8") as fh:
            header = fh.readline()
        if not header.strip():
            raise DataError("no rows")
        outputs = [len(header.split(args.delimiter)) - 1]
    table = _read_table(args, outputs)
    if not table.input_columns:
        raise DataError("no input columns left after selecting outputs")
    return table


def _inner_config(args):
    if not args.inner_config:
        return None
    text = args.inner_config
    p = Path(text)
    d = json.loads(p.read_text(encoding="utf-8") if p.is_file() else text)
    return inner_config_from_dict(args.inner, d)


def _components(args):
    if args.components in (None, "cv"):
        return None
    try:
        L = int(args.components)
    except ValueError:
        raise UsageError(f"--components must be an integer or 'cv', got {args.components!r}") from None
    return L


def _metrics(y, fitted, L) -> list[dict]:
    rows = []
    n = y.shape[0]
    for j in range(y.shape[1]):
        resid = y[:, j] - fitted[:, j]
        sst = np.sum((y[:, j] - y[:, j].mean()) ** 2)
        r2 = 1 - resid @ resid / sst if sst > 0 else float("nan")
        adj = 1 - (1 - r2) * (n - 1) / (n - L - 1) if n - L - 1 > 0 else float("nan")
        rows.append({"output": j, "mse": float(resid @ resid / n), "r2": float(r2), "adj_r2": float(adj)})
    return rows


def cmd_fit(args) -> int:
    table = _load_training(args)
    transforms = parse_transform_spec(args.transforms)
    if transforms:
        # fail early with column names; the model re-applies transforms itself
        apply_transforms(table, transforms)
    expansion = ExpansionSpec() if args.expand else None
    model = fit_dlpls(
        table.x,
        table.y,
        n_components=_components(args),
        inner=args.inner,
        inner_config=_inner_config(args),
        bottleneck=args.bottleneck,
        folds=args.folds,
        seed=args.seed,
        input_names=table.input_names,
        output_names=table.output_names,
        transforms=transforms,
        expansion=expansion,
        bayes=args.bayes,
        prior_var=args.prior_var,
        noise_var=args.noise_var,
    )
    fitted = model.predict(table.x)
    run = Run(args)
    run.write("model.json", tables.dumps(model.to_dict()))
    L = model.pls.n_components
    feature_names = list(table.input_names)
    if expansion is not None:
        feature_names = expanded_names(feature_names, expansion)
    report = {
        "n": table.n,
        "n_features": len(feature_names),
        "n_components": L,
        "inner": args.inner,
        "cv": None if model.cv is None else model.cv.to_dict(),
        "training_metrics": _metrics(table.y, fitted, L),
        "outputs": table.output_names,
    }
    if args.inner in ("mlp", "autoencoder"):
        report["loss_trace"] = list(model.inner.loss_trace)
    if args.inner == "linear":
        # coefficients act on transformed (and expanded) features
        coef, intercept = beta_pls(model.pls, scale="raw")
        report["coefficients"] = {"features": feature_names, "raw": coef.tolist(), "intercept": intercept.tolist()}
    run.write("report.json", tables.dumps(report))
    run.write_table("fitted", tables.matrix_rows(fitted, table.output_names), table.output_names)
    run.finish()
    print(json.dumps({"n_components": L, "training_metrics": report["training_metrics"]}))
    return EXIT_OK


def _load_model(path) -> DlPlsModel:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such model file: {p}")
    return DlPlsModel.from_dict(tables.loads(p.read_text(encoding="utf-8")))


def _model_inputs(args, model: DlPlsModel):
    table = load_csv(args.input, delimiter=args.delimiter)
    if table.n == 0:
        raise DataError("no rows")
    names = table.column_names
    missing = [c for c in model.input_names if c not in names]
    if missing:
        if len(names) == len(model.input_names):
            raise DataError(f"column names differ from the model's inputs: missing {missing}")
        raise DataError(f"expected {len(model.input_names)} input columns {model.input_names}, got {len(names)}: missing {missing}")
    idx = [names.index(c) for c in model.input_names]
    return table, table.values[:, idx]


def cmd_predict(args) -> int:
    model = _load_model(args.model)
    table, x = _model_inputs(args, model)
    run = Run(args)
    pred = model.predict(x)
    rows = tables.matrix_rows(pred, model.output_names)
    fields = list(model.output_names)
    if args.bayes:
        means, vars_ = model.predict_bayes(x)
        for r, m_row, v_row in zip(rows, means, vars_):
            for name, m, v in zip(model.output_names, m_row, v_row):
                r[f"{name}_mean"], r[f"{name}_var"] = float(m), float(v)
        fields += [f"{n}_{s}" for n in model.output_names for s in ("mean", "var")]
    run.write_table("predictions", rows, fields)
    run.finish()
    return EXIT_OK


def cmd_bayes_predict(args) -> int:
    model = _load_model(args.model)
    table, x = _model_inputs(args, model)
    u_new = predict_scores(model.pls, model.inner, model.features(x))
    layer = model.last_layer
    if layer is None or args.train:
        if not args.train:
            raise UsageError("model has no Bayesian last layer; pass --train with the training CSV")
        tr = load_csv(args.train, outputs=model.output_names, delimiter=args.delimiter)
        xt = tr.values[:, [tr.column_names.index(c) for c in model.input_names]]
        u_hat = predict_scores(model.pls, model.inner, model.features(xt))
        ys = model.pls.y_standardization
        layer = fit_last_layer(u_hat, ys.apply(tr.y), ys.means, ys.scales, args.prior_var, args.noise_var)
    run = Run(args)
    run.write_table("predictive", layer.summary_rows(u_new), ["row", "output", "mean", "variance", "q05", "q50", "q95"])
    if args.gibbs:
        if not args.train:
            raise UsageError("--gibbs needs --train")
        rng = np.random.default_rng(args.seed)
        rows, sample_rows = [], []
        ys = model.pls.y_standardization
        for j, post in enumerate(layer.posteriors):
            noise_prior = None if args.fixed_noise else (args.a0, args.b0)
            s = gibbs_last_layer(
                u_hat, ys.apply(tr.y)[:, j], post.prior_var, noise_prior, args.iters, args.burn_in,
                seed=args.seed + j, noise_var=post.noise_var,
            )
            draws = s.coefs @ u_new.T + np.sqrt(s.noise_var)[:, None] * rng.standard_normal((s.coefs.shape[0], u_new.shape[0]))
            draws = draws * ys.scales[j] + ys.means[j]
            for i in range(u_new.shape[0]):
                qs = np.quantile(draws[:, i], QUANTILES)
                rows.append({"row": i, "output": j, "mean": float(draws[:, i].mean()), "variance": float(draws[:, i].var(ddof=1)),
                             "q05": float(qs[0]), "q50": float(qs[1]), "q95": float(qs[2])})
            sample_rows += [
                {"output": j, "draw": d, **{f"c{k + 1}": float(c) for k, c in enumerate(coef)}, "noise_var": float(nv)}
                for d, (coef, nv) in enumerate(zip(s.coefs, s.noise_var))
            ]
        run.write_table("predictive_gibbs", rows, ["row", "output", "mean", "variance", "q05", "q50", "q95"])
        run.write_table("gibbs_samples", sample_rows)
    run.finish()
    return EXIT_OK


def cmd_diagnose(args) -> int:
    table = _load_training(args)
    transforms = parse_transform_spec(args.transforms)
    if transforms:
        table = apply_transforms(table, transforms)
    x, y = table.x, table.y
    names = table.input_names
    if args.expand:
        x = expand_features(x)
        names = expanded_names(names)
    run = Run(args)
    art = args.artifact
    if art == "scree":
        run.write_table("scree", diagnostics.scree_rows(x, y))
    elif art == "biplot":
        bp = diagnostics.biplot(x, mode=args.biplot_mode, names=names)
        run.write_table("biplot_samples", bp.sample_rows())
        run.write_table("biplot_variables", bp.variable_rows())
    elif art == "corr-circle":
        L = _components(args) or 2
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            m = fit_pls(x, y, L)
        cc = diagnostics.correlation_circle(x, y, m, names, table.output_names)
        run.write_table("correlation_circle", cc.rows())
    elif art == "shrinkage":
        comps = [_components(args)] if _components(args) else None
        run.write_table("scale_factors", diagnostics.scale_factor_curves(x, y, comps))
    elif art == "link-recovery":
        if y.shape[1] != 1:
            raise UsageError("link-recovery needs a single output column")
        fit = fit_single_index(x, y[:, 0], smoother=args.smoother)
        curve, scatter = fit.recovery_rows()
        run.write_table("link_curve", curve)
        run.write_table("link_scatter", scatter)
        run.write_table("index_direction", [{"variable": nm, "beta_hat": float(b)} for nm, b in zip(names, fit.beta_hat)])
    run.finish()
    return EXIT_OK


def cmd_simulate(args) -> int:
    run = Run(args)
    if args.scenario == "collinear":
        # fixed design; only n and seed vary
        x, y = simulation.collinear_fixture(seed=args.seed, n=args.n or 60)
        y = y[:, None]
        truth = {"scenario": "collinear", "coefficients": [[1.0, -1.0, 0.5]]}
    elif args.scenario == "deep_relu":
        x, y, b2, b1 = simulation.deep_relu_data(n=args.n or 5000, seed=args.seed)
        truth = {"scenario": "deep_relu", "B2": b2.tolist(), "B1": b1.tolist()}
    else:
        spec = simulation.SimSpec(args.scenario, n=args.n or 1000, p=args.p, seed=args.seed)
        x, y, tr = simulation.generate(spec)
        truth = {"spec": spec.to_dict(), **tr.to_dict()}
    xn = [f"x{j + 1}" for j in range(x.shape[1])]
    yn = [f"y{j + 1}" for j in range(y.shape[1])]
    run.write("data.csv", tables.emit_csv(tables.matrix_rows(np.hstack([x, y]), xn + yn), xn + yn))
    run.write("truth.json", tables.dumps(truth))
    run.finish()
    return EXIT_OK


def cmd_reproduce(args) -> int:
    kwargs = {"seed": args.seed}
    if args.experiment == "wine":
        if not args.input:
            raise UsageError("wine needs --input pointing at winequality-white.csv (see scripts/fetch_wine.py)")
        # the UCI files are ';'-separated; a non-default --delimiter overrides
        delim = args.delimiter if args.delimiter != "," else ";"
        kwargs.update(path=args.input, with_net=args.with_net, delimiter=delim)
        if args.transforms is not None:
            kwargs["transforms"] = args.transforms
    rep = experiments.run(args.experiment, **kwargs)
    run = Run(args)
    for name, rows in rep.tables.items():
        if rows:
            run.write_table(name, rows)
    run.write("summary.json", tables.dumps(rep.summary()))
    run.finish()
    for c in rep.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.value:.6g} (target {c.target})")
    return EXIT_OK


def cmd_replay(args) -> int:
    manifest = tables.loads(Path(args.manifest).read_text(encoding="utf-8"))
    argv = manifest_to_argv(manifest, output=args.output)
    return main(argv)


def manifest_to_argv(manifest: dict, output=None) -> list[str]:
    """Rebuild a command line from a manifest's resolved arguments."""
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices[manifest["subcommand"]]
    resolved = dict(manifest["arguments"])
    if output is not None:
        resolved["output"] = str(output)
    argv = [manifest["subcommand"]]
    for action in sub._actions:
        if not action.option_strings or action.dest in ("help",):
            continue
        val = resolved.get(action.dest)
        flag = action.option_strings[-1]
        if isinstance(action, argparse._StoreTrueAction):
            if val:
                argv.append(flag)
        elif val is not None:
            argv += [flag, str(val)]
    return argv


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dlpls", description="PLS with nonlinear inner models.")
    p.add_argument("--version", action="version", version=f"dlpls {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", required=True, help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")
    common.add_argument("--delimiter", default=",")
    common.add_argument("--verbose", action="store_true")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--input", required=True)
    data.add_argument("--target", help="comma-separated output column names (default: last column)")
    data.add_argument("--transforms", help="name:log|log1p|sqrt,... or 'wine'")
    data.add_argument("--expand", action="store_true", help="add squares and pairwise interactions")

    f = sub.add_parser("fit", parents=[common, data], help="fit a model")
    f.add_argument("--components", default="cv", help="number of components or 'cv'")
    f.add_argument("--inner", choices=INNER_KINDS, default="linear")
    f.add_argument("--inner-config", help="JSON object (or file) with inner-model settings")
    f.add_argument("--bottleneck", type=int, help="autoencoder bottleneck width")
    f.add_argument("--folds", type=int, default=5)
    f.add_argument("--bayes", action="store_true", help="also fit the conjugate last layer")
    f.add_argument("--prior-var", type=float, default=0.1)
    f.add_argument("--noise-var", type=float)
    f.set_defaults(func=cmd_fit)

    pr = sub.add_parser("predict", parents=[common], help="predict with a fitted model")
    pr.add_argument("--model", required=True)
    pr.add_argument("--input", required=True)
    pr.add_argument("--bayes", action="store_true", help="add predictive mean and variance")
    pr.set_defaults(func=cmd_predict)

    d = sub.add_parser("diagnose", parents=[common, data], help="diagnostic tables")
    d.add_argument("--artifact", choices=ARTIFACTS, required=True)
    d.add_argument("--components", help="component count for corr-circle / shrinkage")
    d.add_argument("--biplot-mode", choices=diagnostics.BIPLOT_MODES, default="form")
    d.add_argument("--smoother", choices=("local-linear", "spline"), default="local-linear")
    d.set_defaults(func=cmd_diagnose)

    s = sub.add_parser("simulate", parents=[common], help="write a synthetic dataset")
    s.add_argument("--scenario", choices=SIM_SCENARIOS, required=True)
    s.add_argument("--n", type=int)
    s.add_argument("--p", type=int)
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("reproduce", parents=[common], help="rerun an experiment")
    r.add_argument("--experiment", choices=experiments.EXPERIMENTS, required=True)
    r.add_argument("--input", help="data file (wine)")
    r.add_argument("--transforms", help="override the wine transform preset ('' for none)")
    r.add_argument("--with-net", action="store_true", help="wine: also train the network and Brillinger substitute")
    r.set_defaults(func=cmd_reproduce)

    b = sub.add_parser("bayes-predict", parents=[common], help="posterior predictive summaries")
    b.add_argument("--model", required=True)
    b.add_argument("--input", required=True)
    b.add_argument("--train", help="training CSV (needed when the model has no last layer, or for --gibbs)")
    b.add_argument("--prior-var", type=float, default=0.1)
    b.add_argument("--noise-var", type=float)
    b.add_argument("--gibbs", action="store_true")
    b.add_argument("--fixed-noise", action="store_true")
    b.add_argument("--iters", type=int, default=5000)
    b.add_argument("--burn-in", type=int, default=500)
    b.add_argument("--a0", type=float, default=0.01)
    b.add_argument("--b0", type=float, default=0.01)
    b.set_defaults(func=cmd_bayes_predict)

    rp = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    rp.add_argument("--manifest", required=True)
    rp.add_argument("--output", help="new output directory (default: the recorded one)")
    rp.add_argument("--verbose", action="store_true")
    rp.set_defaults(func=cmd_replay)
    return p


def _error(kind: str, exc: BaseException) -> None:
    print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DataError, FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        _error(type(exc).__name__, exc)
        return EXIT_DATA
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        _error(type(exc).__name__, exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
