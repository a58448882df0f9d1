"""Command-line interface: ``mrattrib {theta,attribute,simulate}``.

Settings come from a JSON config file (``--config``) and are overridden by
command-line flags. The seed falls back to the ``MRATTRIB_SEED`` environment
variable, then to 0. Exit codes: 0 success, 2 config/schema/input error,
3 estimation failure.
"""

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .attribution import MODES, attribute
from .core import CausalStructure, TwoSampleDataset, validate_structure
from .estimator import CounterfactualEstimator
from .exceptions import CapacityError, InputError, MRAttribError, SchemaError
from .learners import ClassifierSpec, RegressorSpec
from .simulation import Design1Params, Design2Params, run_monte_carlo

EXIT_OK, EXIT_CONFIG, EXIT_ESTIMATION = 0, 2, 3
COMMANDS = ("theta", "attribute", "simulate")
FORMATS = ("json", "csv")


def _fmt(v):
    return f"{float(v):.6g}"


@dataclass
class RunConfig:
    """Validated settings for one CLI run; unknown keys are rejected."""

    command: str
    data_path: str = None
    structure: dict = None
    functional: str = "mean"
    change: str = None
    mode: str = "both"
    method: str = "MR"
    regressor: dict = field(default_factory=dict)
    classifier: dict = field(default_factory=dict)
    weight_route: str = "classification"
    prob_clip: float = 1e-3
    weight_bounds: tuple = (1e-3, 1e3)
    split: str = "crossfit"
    n_folds: int = 2
    train_fraction: float = 0.5
    bootstrap_B: int = 1000
    multiplier: str = "bayesian_exponential"
    level: float = 0.95
    sampling: bool = False
    permutations: int = 200
    seed: int = 0
    output: str = None
    format: str = None
    diagnostics: str = None
    design: int = 1
    draws: int = 100
    misspecified: str = None
    K: int = 10
    threads: int = 1

    def __post_init__(self):
        self.weight_bounds = tuple(float(v) for v in self.weight_bounds)
        self.validate()

    @classmethod
    def field_names(cls):
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def from_dict(cls, d, source="config"):
        if not isinstance(d, dict):
            raise SchemaError(f"{source}: top level must be a JSON object")
        unknown = sorted(set(d) - set(cls.field_names()))
        if unknown:
            raise SchemaError(f"{source}: unknown key(s) {', '.join(unknown)}")
        if "command" not in d:
            raise SchemaError(f"{source}: missing 'command'")
        return cls(**d)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["weight_bounds"] = list(self.weight_bounds)
        return d

    def validate(self):
        def bad(key, msg):
            raise SchemaError(f"config.{key}: {msg}")

        if self.command not in COMMANDS:
            bad("command", f"must be one of {COMMANDS}")
        if self.command in ("theta", "attribute") and not self.data_path:
            bad("data_path", "required for theta/attribute")
        if self.command == "theta" and not self.change:
            bad("change", "required for theta")
        if self.mode not in MODES:
            bad("mode", f"must be one of {MODES}")
        if self.format is not None and self.format not in FORMATS:
            bad("format", f"must be one of {FORMATS}")
        if self.design not in (1, 2):
            bad("design", "must be 1 or 2")
        for key in ("draws", "bootstrap_B", "n_folds", "permutations", "threads", "K"):
            v = getattr(self, key)
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                bad(key, "must be a non-negative integer")
        if self.threads < 1:
            bad("threads", "must be >= 1")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            bad("seed", "must be a non-negative integer")
        if len(self.weight_bounds) != 2 or not 0 < self.weight_bounds[0] < self.weight_bounds[1]:
            bad("weight_bounds", "must be [lo, hi] with 0 < lo < hi")
        if not 0 < self.prob_clip < 0.5:
            bad("prob_clip", "must lie in (0, 0.5)")
        for key in ("regressor", "classifier"):
            if not isinstance(getattr(self, key), dict):
                bad(key, "must be an object")
        try:
            self.regressor_spec()
        except (TypeError, InputError) as exc:
            bad("regressor", str(exc))
        try:
            self.classifier_spec()
        except (TypeError, InputError) as exc:
            bad("classifier", str(exc))
        if self.structure is not None:
            if not isinstance(self.structure, dict):
                bad("structure", "must be an object")
            try:
                self.causal_structure()
            except (TypeError, InputError) as exc:
                bad("structure", str(exc))

    def regressor_spec(self):
        return RegressorSpec(**self.regressor) if self.regressor else None

    def classifier_spec(self):
        return ClassifierSpec(**self.classifier) if self.classifier else None

    def causal_structure(self):
        if self.structure is None:
            return None
        s = dict(self.structure)
        if "ordering" not in s:
            raise InputError("structure needs an 'ordering'")
        return CausalStructure(tuple(s["ordering"]), s.get("parents"),
                               tuple(tuple(p) for p in s.get("independence_flags", ())),
                               bool(s.get("mutually_independent", False)))

    def estimator_params(self):
        return dict(regressor=self.regressor_spec(), classifier=self.classifier_spec(), method=self.method,
                    weight_route=self.weight_route, split=self.split, n_folds=self.n_folds,
                    train_fraction=self.train_fraction, prob_clip=self.prob_clip,
                    weight_bounds=self.weight_bounds)


def build_parser():
    parser = argparse.ArgumentParser(prog="mrattrib", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--data", dest="data_path")
        p.add_argument("--output", "-o")
        p.add_argument("--format", choices=FORMATS)
        p.add_argument("--diagnostics", help="sidecar diagnostics JSON path")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int)
        p.add_argument("--functional")
        p.add_argument("--method")
        p.add_argument("--split", choices=("crossfit", "single", "none"))
        p.add_argument("--folds", dest="n_folds", type=int)
        if name == "theta":
            p.add_argument("--change")
            p.add_argument("--level", type=float)
        if name == "attribute":
            p.add_argument("--mode", choices=MODES)
            p.add_argument("--B", dest="bootstrap_B", type=int)
            p.add_argument("--sampling", action="store_true", default=None)
        if name == "simulate":
            p.add_argument("--design", type=int)
            p.add_argument("--draws", type=int)
            p.add_argument("--K", type=int)
            p.add_argument("--misspecified", choices=("regression", "weights"))
    return parser


def load_config(args):
    """Merge config file, flags and the seed environment fallback into a RunConfig."""
    values = {}
    if args.config:
        try:
            with open(args.config) as fh:
                values = json.load(fh)
        except OSError as exc:
            raise SchemaError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{args.config}: invalid JSON ({exc})") from exc
        if not isinstance(values, dict):
            raise SchemaError(f"{args.config}: top level must be a JSON object")
        if "command" in values and values["command"] != args.command:
            raise SchemaError(f"{args.config}: command {values['command']!r} does not match {args.command!r}")
    values = dict(values, command=args.command)
    if "seed" not in values and os.environ.get("MRATTRIB_SEED"):
        try:
            values["seed"] = int(os.environ["MRATTRIB_SEED"])
        except ValueError:
            raise SchemaError("MRATTRIB_SEED must be an integer") from None
    for key, v in vars(args).items():
        if key in ("config", "command") or v is None:
            continue
        values[key] = v
    return RunConfig.from_dict(values, source=args.config or "flags")


def _load_data(cfg):
    try:
        data = TwoSampleDataset.from_csv(cfg.data_path)
    except OSError as exc:
        raise SchemaError(f"config.data_path: cannot read {cfg.data_path}: {exc}") from exc
    structure = cfg.causal_structure()
    return validate_structure(data, structure)


def run_theta(cfg):
    model = _load_data(cfg)
    params = cfg.estimator_params()
    est = CounterfactualEstimator(cfg.change, functional=cfg.functional, structure=model.structure,
                                  random_state=cfg.seed, **params).fit(model.data)
    ci = est.confidence_interval(cfg.level)
    result = {"change": str(est.plan_.change_vector), "theta": est.theta_, "se": ci.se, "ci_lo": ci.lo,
              "ci_hi": ci.hi, "level": cfg.level}
    if (cfg.format or "json") == "csv":
        text = "change,theta,se,ci_lo,ci_hi\n" + ",".join(
            [result["change"], *(_fmt(result[k]) for k in ("theta", "se", "ci_lo", "ci_hi"))]) + "\n"
    else:
        text = json.dumps(dict(result, meta={"config": cfg.to_dict()}), indent=2) + "\n"
    diag = dict(est.diagnostics_, plan={"order": list(est.plan_.order), "stages": est.plan_.n_stages,
                                        "skipped": list(est.plan_.skipped)})
    return text, diag


def run_attribute(cfg):
    model = _load_data(cfg)
    params = cfg.estimator_params()
    method = params.pop("method")
    report = attribute(model, None, cfg.functional, cfg.mode, method, cfg.bootstrap_B, cfg.multiplier,
                       cfg.seed, cfg.sampling, cfg.permutations, threads=cfg.threads, **params)
    if (cfg.format or "json") == "csv":
        text = report.to_csv()
    else:
        d = report.to_dict()
        d["meta"]["config"] = cfg.to_dict()
        text = json.dumps(d, indent=2) + "\n"
    diag = {"approximate": report.approximate, "theta": report.diagnostics}
    return text, diag


def run_simulate(cfg):
    if cfg.design == 1:
        params = Design1Params(seed=cfg.seed)
    else:
        params = Design2Params(K=cfg.K, seed=cfg.seed)
    est = cfg.estimator_params()
    est.pop("method")
    for key in ("regressor", "classifier"):
        if est[key] is None:
            est.pop(key)
    result = run_monte_carlo(cfg.design, draws=cfg.draws, seed=cfg.seed, params=params,
                             misspecified=cfg.misspecified, threads=cfg.threads, **est)
    if (cfg.format or "csv") == "json":
        text = json.dumps({"summary": result.summary(), "meta": dict(result.meta, config=cfg.to_dict())},
                          indent=2) + "\n"
    else:
        text = result.to_csv()
    return text, {"failures": result.failures, "draws": result.draws}


RUNNERS = {"theta": run_theta, "attribute": run_attribute, "simulate": run_simulate}


def _write(path, text):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def run_cli(argv=None):
    """Run one command; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args)
    except (InputError, TypeError) as exc:
        print(f"mrattrib: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with np.errstate(all="ignore"):
            text, diag = RUNNERS[cfg.command](cfg)
    except (InputError, CapacityError) as exc:
        print(f"mrattrib: input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MRAttribError as exc:
        print(f"mrattrib: estimation failed: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    _write(cfg.output, text)
    sidecar = cfg.diagnostics or (cfg.output + ".diagnostics.json" if cfg.output else None)
    if sidecar:
        with open(sidecar, "w") as fh:
            json.dump(dict(diag, command=cfg.command), fh, indent=2, default=str)
            fh.write("\n")
    return EXIT_OK


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
