"""Command-line front end: config parsing, study dispatch, CSV emission.

Config files are INI-style with three sections:

    [disorder]
    kind = gaussian | uniform | two_point | rademacher
    p = 0.2              # two_point only
    truncate_n = 8       # optional: clip the transform to [-n, n]
    mollify_k = 16       # optional: Gaussian-smooth the (clipped) transform

    [model]
    beta = 1.0
    field_r = 0.0
    N_list = 4,6,8,10,12,14,16
    replicas = 4000
    seed = 20260101

    [study]
    study = variance_scaling | product_curve | overlap_curve |
            tilt_convexity | holder_check | bound_ratios
    t_grid = 0.1,0.2,...         # study-dependent
    lambda_grid = 0,0.1,...      # tilt_convexity
    c_const = 1.0
    K_const = 1.0

Unknown sections or keys are rejected.  `--set key=value` (or section.key)
overrides file values.  Exit codes: 0 success, 1 verification failure,
2 config error.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
import tempfile

from .disorder import build_spec
from .errors import ConfigError, SKLabError
from .experiments import (
    CANONICAL_N_LIST,
    DEFAULT_REPLICAS,
    DEFAULT_SEED,
    ExperimentConfig,
    manifest_text,
    rows_to_csv,
    run_study,
)

_SCHEMA = {
    "disorder": {"kind", "p", "truncate_n", "mollify_k"},
    "model": {"beta", "field_r", "n_list", "replicas", "seed"},
    "study": {"study", "t_grid", "lambda_grid", "c_const", "k_const"},
}

_KEY_SECTION = {key: section for section, keys in _SCHEMA.items() for key in keys}


def _parse_float(raw: str, key: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"key '{key}': expected a number, got '{raw}'") from None


def _parse_int(raw: str, key: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"key '{key}': expected an integer, got '{raw}'") from None


def _parse_list(raw: str, key: str, cast) -> tuple:
    try:
        return tuple(cast(part.strip()) for part in raw.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"key '{key}': expected a comma list, got '{raw}'") from None


def parse_config(text: str, overrides: list[str] | None = None) -> ExperimentConfig:
    """Parse (and validate) the INI grammar into an ExperimentConfig."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    # keys are case-insensitive: N_list and n_list are the same key
    parser.optionxform = str.lower
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        where = f" (line {line})" if line else ""
        raise ConfigError(f"config parse error{where}: {exc.message}") from None

    values: dict[str, str] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key '{key}' in section [{section}]")
            values[key] = raw

    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not key=value")
        key, _, raw = item.partition("=")
        key = key.strip().lower()
        if "." in key:
            section, _, key = key.partition(".")
            if section not in _SCHEMA or key not in _SCHEMA[section]:
                raise ConfigError(f"unknown override key '{section}.{key}'")
        elif key not in _KEY_SECTION:
            raise ConfigError(f"unknown override key '{key}'")
        values[key] = raw.strip()

    if "kind" not in values:
        raise ConfigError("missing required key 'kind' in [disorder]")
    if "beta" not in values:
        raise ConfigError("missing required key 'beta' in [model]")
    if "study" not in values:
        raise ConfigError("missing required key 'study' in [study]")

    p = _parse_float(values["p"], "p") if "p" in values else None
    if p is not None and not (0.0 < p < 1.0):
        raise ConfigError("p must lie in (0,1)")
    try:
        spec = build_spec(
            values["kind"].strip(),
            p=p,
            truncate_n=_parse_float(values["truncate_n"], "truncate_n")
            if "truncate_n" in values else None,
            mollify_k=_parse_int(values["mollify_k"], "mollify_k")
            if "mollify_k" in values else None,
        )
    except (ValueError, SKLabError) as exc:
        raise ConfigError(str(exc)) from None

    try:
        return ExperimentConfig(
            spec=spec,
            beta=_parse_float(values["beta"], "beta"),
            field_r=_parse_float(values.get("field_r", "0"), "field_r"),
            n_list=_parse_list(values["n_list"], "n_list", int)
            if "n_list" in values else CANONICAL_N_LIST,
            replicas=_parse_int(values.get("replicas", str(DEFAULT_REPLICAS)), "replicas"),
            seed=_parse_int(values.get("seed", str(DEFAULT_SEED)), "seed"),
            t_grid=_parse_list(values["t_grid"], "t_grid", float)
            if "t_grid" in values else None,
            lambda_grid=_parse_list(values["lambda_grid"], "lambda_grid", float)
            if "lambda_grid" in values else None,
            study=values["study"].strip(),
            c_const=_parse_float(values.get("c_const", "1"), "c_const"),
            k_const=_parse_float(values.get("k_const", "1"), "k_const"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_config(path: str, overrides) -> ExperimentConfig:
    try:
        with open(path) as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, overrides)


def _cmd_run(args) -> int:
    config = _load_config(args.config, args.set)
    os.makedirs(args.out, exist_ok=True)
    rows = run_study(config)
    _write_atomic(os.path.join(args.out, "results.csv"), rows_to_csv(rows))
    _write_atomic(os.path.join(args.out, "manifest.txt"), manifest_text(config))
    return 0


def _cmd_wtable(args) -> int:
    from .disorder import coupling_covariance, coupling_covariance_prime

    config = _load_config(args.config, args.set)
    grid = config.t_grid or tuple(i / 10 for i in range(10)) + (0.99,)
    lines = ["t,w,wprime"]
    for t in grid:
        w = coupling_covariance(config.spec, t)
        wp = coupling_covariance_prime(config.spec, min(t, 1.0 - 1e-9))
        lines.append(f"{t!r},{w!r},{wp!r}")
    os.makedirs(args.out, exist_ok=True)
    _write_atomic(os.path.join(args.out, "wtable.csv"), "\n".join(lines) + "\n")
    _write_atomic(os.path.join(args.out, "manifest.txt"), manifest_text(config))
    return 0


def _cmd_boundtable(args) -> int:
    from .bounds import bound_ratio_study

    config = _load_config(args.config, args.set)
    reports = bound_ratio_study(config.spec, config.beta, config.n_list,
                                config.c_const, config.replicas, config.seed,
                                k_const=config.k_const, field_r=config.field_r)
    lines = ["N,measured_var,std_error,rhs_general,ratio_general,rhs_smooth,ratio_smooth"]
    for rep in reports:
        smooth = (f"{rep.rhs_smooth!r},{rep.ratio_smooth!r}"
                  if rep.rhs_smooth is not None else ",")
        lines.append(f"{rep.n},{rep.measured_var!r},{rep.var_std_error!r},"
                     f"{rep.rhs_general!r},{rep.ratio_general!r},{smooth}")
    os.makedirs(args.out, exist_ok=True)
    _write_atomic(os.path.join(args.out, "boundtable.csv"), "\n".join(lines) + "\n")
    _write_atomic(os.path.join(args.out, "manifest.txt"), manifest_text(config))
    return 0


def _cmd_verify(args) -> int:
    from .selfcheck import run_selfcheck

    failures = run_selfcheck(fast=args.fast, out=sys.stdout)
    return 0 if failures == 0 else 1


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="sklab",
        description="SK-model disorder experiments: run studies, tabulate "
                    "covariances and bounds, verify built-in invariants.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a configured study")
    run_p.add_argument("config")
    run_p.add_argument("--out", required=True)
    run_p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    run_p.set_defaults(fn=_cmd_run)

    ver_p = sub.add_parser("verify", help="run the built-in invariant suite")
    ver_p.add_argument("--fast", action="store_true")
    ver_p.set_defaults(fn=_cmd_verify)

    wt_p = sub.add_parser("wtable", help="tabulate t, w(t), w'(t) for a disorder")
    wt_p.add_argument("config")
    wt_p.add_argument("--out", required=True)
    wt_p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    wt_p.set_defaults(fn=_cmd_wtable)

    bt_p = sub.add_parser("boundtable", help="measured variance vs bound table")
    bt_p.add_argument("config")
    bt_p.add_argument("--out", required=True)
    bt_p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    bt_p.set_defaults(fn=_cmd_boundtable)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SKLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
