"""Command-line interface: ``simulate``, ``verify``, ``limits``, ``classify``.

Values come from flags, then a flat ``key=value`` config file
(``--config``), then built-in defaults. The default seed can also be set
through the ``JUMPRATIO_SEED`` environment variable.

Tables are comma-separated with a header row and ``#``-prefixed footer
lines recording the version and the full configuration. Exit codes: 0 on
success (and passing checks), 1 when ``verify`` fails a statistical check,
2 on usage or operational errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, jump_sim, limit_laws, mc_stats
from .errors import DomainError, JumpRatioError, QuadratureError
from .tail_models import parse_model

SEED_ENV = "JUMPRATIO_SEED"
EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


class ConfigError(JumpRatioError):
    pass


def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def float_list(text):
    """``0.1,0.01`` or a geometric grid ``start:stop:count``."""
    text = str(text).strip()
    if text.count(":") == 2 and "," not in text:
        a, b, n = text.split(":")
        return tuple(float(v) for v in np.geomspace(float(a), float(b), int(n)))
    values = tuple(float(v) for v in text.split(",") if v.strip())
    if not values:
        raise ValueError("empty list")
    return values


def boolean(text):
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _seed_default():
    return int(os.environ.get(SEED_ENV, "0"))


# name -> (type, default, help); defaults may be callables evaluated lazily
COMMON = {
    "model": (str, None, "model spec, e.g. 'stable(alpha=0.5,c=1)'"),
    "regime": (str, None, "declared regime for table models, e.g. 'slow' or 'regvar:0.5'"),
    "seed": (int, _seed_default, f"master seed (default ${SEED_ENV} or 0)"),
    "out": (str, None, "output path (default stdout)"),
}
SIM = {
    "k": (int, 1, "order of the statistic"),
    "t": (float_list, (1.0,), "horizons: comma list or start:stop:count"),
    "n": (int, 1000, "replicates per horizon"),
    "rel_tol": (float, 1e-3, "series tolerance for the trimmed ratio"),
    "remainder": (str, jump_sim.MEAN, "remainder handling: mean or truncate"),
    "cap": (float, jump_sim.DEFAULT_CAP, "value reported as infinity"),
    "max_terms": (int, 2_000_000, "term limit per draw"),
    "workers": (int, 1, "worker processes"),
}
SUBCOMMANDS = {
    "simulate": {**COMMON, **SIM,
                 "stat": (str, jump_sim.CONSECUTIVE, "trimmed or consecutive")},
    "verify": {**COMMON, **SIM,
               "theorem": (int, None, "1 (trimmed ratio) or 2 (consecutive ratio)"),
               "lambda": (float_list, mc_stats.DEFAULT_LAMBDAS, "Laplace grid"),
               "x": (float_list, mc_stats.DEFAULT_XS, "CDF grid for oracle checks"),
               "ks_tol": (float, 0.0065, "KS tolerance"),
               "se_mult": (float, 3.0, "standard errors allowed for Laplace checks"),
               "abs_tol": (float, 1e-6, "absolute slack for Laplace checks"),
               "max_se": (float, None, "largest acceptable Laplace standard error"),
               "delta": (float, 0.05, "neighborhood radius for point limits"),
               "threshold": (float, 0.05, "mass allowed outside the neighborhood"),
               "inversions": (int, None, "trend inversions allowed"),
               "max_failed": (float, 1e-3, "tolerated fraction of truncation failures"),
               "oracle": (boolean, False, "also compare with the finite-t quadrature laws")},
    "limits": {**COMMON,
               "law": (str, None, "gk, betacdf, finite-t-laplace or finite-t-cdf"),
               "alpha": (float, None, "index alpha"),
               "k": (int, 0, "order"),
               "lambda": (float_list, mc_stats.DEFAULT_LAMBDAS, "Laplace grid"),
               "x": (float_list, mc_stats.DEFAULT_XS, "CDF grid"),
               "t": (float_list, (1.0,), "horizons")},
    "classify": {**COMMON,
                 "x": (float_list, tuple(math.exp(-j) for j in range(1, 11)),
                       "grid for the condition (iii) ratio")},
}


def build_parser():
    parser = argparse.ArgumentParser(prog="jumpratio", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, options in SUBCOMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="flat key=value config file")
        for key, (typ, _, text) in options.items():
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=key, type=typ if typ is not boolean else str,
                           default=None, help=text)
    return parser


def read_config(path):
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def resolve(command, args):
    """Merge flags, config file and defaults into a plain dict."""
    options = SUBCOMMANDS[command]
    config = read_config(args.config) if args.config else {}
    unknown = sorted(set(config) - set(options))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    out = {}
    for key, (typ, default, _) in options.items():
        flag = getattr(args, key)
        try:
            if flag is not None:
                out[key] = typ(flag) if typ is boolean else flag
            elif key in config:
                out[key] = typ(config[key])
            else:
                out[key] = default() if callable(default) else default
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from None
    out["base_dir"] = str(Path(args.config).parent) if args.config else None
    return out


def _model_text(cfg):
    text = cfg["model"]
    if not text:
        raise ConfigError("missing required key 'model'")
    if cfg.get("regime") and text.strip().lower().startswith("table(") and "regime=" not in text:
        text = text.rstrip()[:-1] + f",regime={cfg['regime']})"
    return text


def _footer(cfg, extra=()):
    lines = [f"# version={__version__}"]
    for key in sorted(cfg):
        v = cfg[key]
        # execution details that must not change the file
        if v is None or key in ("workers", "out", "base_dir"):
            continue
        if isinstance(v, tuple):
            v = ",".join(fmt(x) for x in v)
        elif not isinstance(v, str):
            v = fmt(v)
        lines.append(f"# {key}={v}")
    lines.extend(f"# {k}={v}" for k, v in extra)
    return lines


class _Output:
    def __init__(self, path):
        self.path = path
        self.buf = io.StringIO()

    def close(self):
        text = self.buf.getvalue()
        if self.path:
            Path(self.path).write_text(text)
        else:
            sys.stdout.write(text)


def write_table(path, header, rows, footer):
    out = _Output(path)
    w = csv.writer(out.buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    for line in footer:
        out.buf.write(line + "\n")
    out.close()


def read_output(path):
    """Parse a table written by this tool into (header, rows, metadata)."""
    header, rows, meta = None, [], {}
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key] = value
                continue
            row = next(csv.reader([line]))
            if header is None:
                header = row
            else:
                rows.append(row)
    return header, rows, meta


def cmd_simulate(cfg):
    text = _model_text(cfg)
    cfg = {**cfg, "model": text}
    model = parse_model(text, base_dir=cfg["base_dir"])
    kind = cfg["stat"]
    if kind not in (jump_sim.TRIMMED, jump_sim.CONSECUTIVE):
        raise ConfigError(f"bad value for 'stat': {kind!r}")
    rows = []
    counts = {"degenerate": 0, "capped": 0, "failed": 0}
    for ti, t in enumerate(cfg["t"]):
        batch = jump_sim.simulate_batch(
            model, t, cfg["k"], kind, cfg["seed"], ti, 0, cfg["n"],
            rel_tol=cfg["rel_tol"], remainder=cfg["remainder"], cap=cfg["cap"],
            max_terms=cfg["max_terms"])
        for r in range(cfg["n"]):
            rows.append((t, r, kind, cfg["k"], batch.values[r], bool(batch.capped[r]),
                         bool(batch.degenerate[r]), bool(batch.failed[r])))
        counts["degenerate"] += int(batch.degenerate.sum())
        counts["capped"] += int(batch.capped.sum())
        counts["failed"] += int(batch.failed.sum())
    header = ["t", "replicate", "kind", "k", "value", "capped", "degenerate", "failed"]
    write_table(cfg["out"], header, rows,
                _footer(cfg, [(f"count.{k}", v) for k, v in counts.items()]))
    return EXIT_OK


def spec_from_config(cfg):
    if cfg.get("theorem") is None:
        raise ConfigError("missing required key 'theorem'")
    return mc_stats.ExperimentSpec(
        model=_model_text(cfg), theorem=cfg["theorem"], k=cfg["k"], t_grid=cfg["t"],
        n=cfg["n"], seed=cfg["seed"], lambda_grid=cfg["lambda"], x_grid=cfg["x"],
        cap=cfg["cap"], rel_tol=cfg["rel_tol"], remainder=cfg["remainder"],
        max_terms=cfg["max_terms"], ks_tol=cfg["ks_tol"], se_mult=cfg["se_mult"],
        abs_tol=cfg["abs_tol"], max_se=cfg["max_se"], delta=cfg["delta"],
        threshold=cfg["threshold"], trend_inversions=cfg["inversions"],
        max_failed_fraction=cfg["max_failed"], oracle=cfg["oracle"], base_dir=cfg["base_dir"])


def cmd_verify(cfg):
    spec = spec_from_config(cfg)
    summary = mc_stats.run_experiment(spec, workers=cfg["workers"])
    out = _Output(cfg["out"])
    out.buf.write("\n".join(summary.to_lines()) + "\n")
    out.close()
    print(f"wall_clock={summary.wall_clock:.3f}s", file=sys.stderr)
    return EXIT_OK if summary.passed else EXIT_FAIL


def cmd_limits(cfg):
    law = cfg["law"]
    k = cfg["k"]
    if law == "gk":
        _need(cfg, "alpha")
        header = ["lambda", "value"]
        rows = [(lam, limit_laws.gk_laplace(lam, cfg["alpha"], k)) for lam in cfg["lambda"]]
    elif law == "betacdf":
        _need(cfg, "alpha")
        header = ["x", "value"]
        rows = [(x, limit_laws.beta_cdf(x, cfg["alpha"], k)) for x in cfg["x"]]
    elif law in ("finite-t-laplace", "finite-t-cdf"):
        model = parse_model(_model_text(cfg), base_dir=cfg["base_dir"])
        rows = []
        if law == "finite-t-laplace":
            header = ["t", "lambda", "value", "error"]
            for t in cfg["t"]:
                for lam in cfg["lambda"]:
                    rows.append((t, lam, *limit_laws.finite_t_trimmed_laplace(
                        model, t, lam, k, with_error=True)))
        else:
            header = ["t", "x", "value", "error"]
            for t in cfg["t"]:
                for x in cfg["x"]:
                    rows.append((t, x, *limit_laws.finite_t_consecutive_cdf(
                        model, t, x, k, with_error=True)))
    else:
        raise ConfigError(f"bad value for 'law': {law!r}")
    write_table(cfg["out"], header, rows, _footer(cfg))
    return EXIT_OK


def _need(cfg, key):
    if cfg.get(key) is None:
        raise ConfigError(f"missing required key {key!r}")


def cmd_classify(cfg):
    model = parse_model(_model_text(cfg), base_dir=cfg["base_dir"])
    rows = []
    for x in cfg["x"]:
        try:
            rows.append((x, model.condition_iii_ratio(x)))
        except DomainError:
            # no mass below x (finite measures): the ratio is undefined there
            rows.append((x, math.nan))
    extra = [("family", model.spec()), ("direction", model.direction.value),
             ("levy", fmt(model.is_levy)), ("min_integral", fmt(model.min_integral()))]
    for theorem in (1, 2):
        try:
            label = str(model.regime(theorem))
        except JumpRatioError as exc:
            label = f"unknown ({exc})"
        extra.append((f"regime.theorem{theorem}", label))
    write_table(cfg["out"], ["x", "condition_iii_ratio"], rows, _footer(cfg, extra))
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "verify": cmd_verify,
            "limits": cmd_limits, "classify": cmd_classify}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args.command, args)
        return COMMANDS[args.command](cfg)
    except QuadratureError as exc:
        print(f"error: {exc} (achieved {exc.achieved:.3g})", file=sys.stderr)
    except (JumpRatioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR
