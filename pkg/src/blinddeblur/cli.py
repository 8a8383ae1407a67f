"""Command-line front end: ``blinddeblur {deblur,synth,eval,ablate}``.

Exit codes: 0 success, 1 I/O failure, 2 invalid configuration,
3 numerical divergence, 4 degenerate kernel.
"""

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import evaluation, io
from .errors import DegenerateKernelError, InvalidArgumentError, NumericalDivergenceError
from .nonblind import NonBlindParams
from .pipeline import SolverParams, deblur_blind, load_params

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_DIVERGED, EXIT_DEGENERATE = 0, 1, 2, 3, 4

log = logging.getLogger("blinddeblur")

_SOLVER_FIELDS = {f.name: f for f in dataclasses.fields(SolverParams)}
_NB_FIELDS = {f.name: f for f in dataclasses.fields(NonBlindParams)}


class ConfigError(InvalidArgumentError):
    pass


def _flag(name):
    return "--" + name.replace("_", "-")


def _add_solver_flags(parser, skip=()):
    grp = parser.add_argument_group("solver parameters (override --params)")
    for name, f in _SOLVER_FIELDS.items():
        if name in skip:
            continue
        kind = str if name == "variant" else type(f.default)
        grp.add_argument(_flag(name), dest=name, type=kind, default=None,
                         help=f"default {f.default}")
    grp = parser.add_argument_group("non-blind parameters (override --params)")
    for name, f in _NB_FIELDS.items():
        grp.add_argument(_flag("nb_" + name), dest="nb_" + name, type=type(f.default),
                         default=None, help=f"default {f.default:g}")
    parser.add_argument("--params", type=Path, help="JSON file with parameter overrides")


def _resolve_params(args, skip=()):
    """Merge defaults, the --params file and explicit flags (in that precedence)."""
    file_cfg = {}
    if args.params is not None:
        if not args.params.is_file():
            raise OSError(f"params file not found: {args.params}")
        try:
            file_cfg = json.loads(args.params.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--params {args.params}: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ConfigError("--params must hold a JSON object")
    nb_cfg = dict(file_cfg.pop("nonblind", {}) or {})
    unknown = set(nb_cfg) - set(_NB_FIELDS)
    if unknown:
        raise ConfigError(f"--params: unknown non-blind key(s): {', '.join(sorted(unknown))}")
    flags = {n: getattr(args, n, None) for n in _SOLVER_FIELDS if n not in skip}
    ks = flags.get("kernel_size")
    if ks is not None and (ks < 3 or ks % 2 == 0):
        raise ConfigError(f"--kernel-size must be an odd integer >= 3, got {ks}")
    params = load_params(file_cfg, **flags)
    for n in _NB_FIELDS:
        v = getattr(args, "nb_" + n, None)
        if v is not None:
            nb_cfg[n] = v
    return params, NonBlindParams(**nb_cfg)


def _prepare_out_dir(path):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _require_file(path, flag):
    if not Path(path).is_file():
        raise OSError(f"{flag}: no such file {path}")


# ------------------------------------------------------------------ commands


def cmd_deblur(args):
    params, nb = _resolve_params(args)
    _require_file(args.input, "--input")
    out = _prepare_out_dir(args.out_dir)
    y = io.read_image(args.input)
    result = deblur_blind(y, params, nb)
    io.write_kernel(out / "kernel.txt", result.kernel)
    io.write_kernel_png(out / "kernel.png", result.kernel, args.zoom)
    io.write_image(out / "intermediate.png", result.intermediate)
    io.write_image(out / "restored.png", result.restored)
    trace = result.to_dict()
    trace["params"] = dataclasses.asdict(params)
    trace["nonblind"] = dataclasses.asdict(nb)
    trace["input"] = str(args.input)
    (out / "trace.json").write_text(json.dumps(trace, indent=1))
    log.info("wrote results to %s (%.1fs)", out, result.elapsed)
    return EXIT_OK


def cmd_synth(args):
    _require_file(args.input, "--input")
    if args.kernel is not None:
        _require_file(args.kernel, "--kernel")
    if args.noise < 0:
        raise ConfigError(f"--noise must be >= 0, got {args.noise}")
    out = _prepare_out_dir(args.out_dir)
    x = io.read_image(args.input)
    if args.kernel is not None:
        ker = io.read_kernel(args.kernel)
    else:
        if args.kernel_size < 1 or args.kernel_size % 2 == 0:
            raise ConfigError(f"--kernel-size must be odd, got {args.kernel_size}")
        length = 0.75 * (args.kernel_size - 1) if args.length is None else args.length
        ker = evaluation.make_trajectory_kernel(args.kernel_size, length, args.curvature,
                                                args.seed)
    if x.ndim == 3:
        y = np.stack([evaluation.synth_blur(x[..., c], ker, args.noise, args.seed + c)
                      for c in range(x.shape[2])], axis=2)
    else:
        y = evaluation.synth_blur(x, ker, args.noise, args.seed)
    bits = 16 if x.ndim == 2 else 8
    io.write_image(out / "blurred.png", y, bits=bits)
    io.write_kernel(out / "kernel_true.txt", ker)
    io.write_kernel_png(out / "kernel_true.png", ker)
    meta = {"input": str(args.input), "seed": args.seed, "noise_sigma": args.noise,
            "kernel_size": int(ker.shape[0]), "bits": bits}
    (out / "synth.json").write_text(json.dumps(meta, indent=1))
    return EXIT_OK


def _load_corpus(args):
    if args.corpus is None:
        return evaluation.corpus_images(), evaluation.corpus_kernels()
    root = Path(args.corpus)
    if not root.is_dir():
        raise OSError(f"--corpus: not a directory: {root}")
    images = {p.stem: io.read_image(p) for p in sorted(root.iterdir())
              if p.suffix.lower() in (".png", ".pgm")}
    images = {k: (v if v.ndim == 2 else v @ np.array([0.299, 0.587, 0.114]))
              for k, v in images.items()}
    kernels = {p.stem: io.read_kernel(p) for p in sorted(root.glob("*.txt"))}
    if not images or not kernels:
        raise ConfigError(f"--corpus {root}: need at least one image and one kernel file")
    return images, kernels


def _parse_list(text, allowed, flag):
    items = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in items if s not in allowed]
    if not items or bad:
        raise ConfigError(f"{flag}: expected a comma list from {sorted(allowed)}, got {text!r}")
    return items


def _run_variants(args, variants, params, nb):
    settings = _parse_list(args.settings, evaluation.KERNEL_SETTINGS, "--settings")
    if args.jobs < 1:
        raise ConfigError(f"--jobs must be >= 1, got {args.jobs}")
    images, kernels = _load_corpus(args)
    out = _prepare_out_dir(args.out_dir)
    results = {}
    for v in variants:
        records = evaluation.run_trials(images, kernels, params.replace(variant=v), nb,
                                        settings=tuple(settings), noise_sigma=args.noise,
                                        seed=args.seed, jobs=args.jobs, oracle=args.oracle)
        results[v] = records
        summary = evaluation.summarize(records)
        log.info("%s: %d/%d successes, mean ratio %.3f", v, summary["successes"],
                 summary["count"], summary["mean_ratio"])
    return out, results


def cmd_eval(args):
    params, nb = _resolve_params(args)
    out, results = _run_variants(args, [params.variant], params, nb)
    records = results[params.variant]
    evaluation.write_trials_csv(records, out / "trials.csv")
    evaluation.write_histogram_csv(evaluation.cumulative_histogram(records, args.max_bin),
                                   out / "histogram.csv")
    return EXIT_OK


def cmd_ablate(args):
    params, nb = _resolve_params(args, skip=("variant",))
    out, results = _run_variants(args, ["R1", "R2", "R3"], params, nb)
    for v, records in results.items():
        evaluation.write_trials_csv(records, out / f"trials_{v}.csv")
        evaluation.write_histogram_csv(
            evaluation.cumulative_histogram(records, args.max_bin), out / f"histogram_{v}.csv")
    return EXIT_OK


# -------------------------------------------------------------------- parser


def build_parser():
    parser = argparse.ArgumentParser(
        prog="blinddeblur", description="Blind motion deblurring with l0-l2 priors.")
    parser.add_argument("-q", "--quiet", action="store_true", help="only log warnings")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("deblur", help="estimate the kernel of a blurred image and restore it")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--out-dir", required=True, type=Path)
    p.add_argument("--zoom", type=int, default=5, help="kernel.png interpolation factor")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_deblur)

    p = sub.add_parser("synth", help="blur a sharp image with a known kernel")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--out-dir", required=True, type=Path)
    p.add_argument("--kernel", type=Path, help="kernel text file; default is a random trajectory")
    p.add_argument("--kernel-size", type=int, default=13)
    p.add_argument("--length", type=float, help="trajectory length in pixels")
    p.add_argument("--curvature", type=float, default=0.12)
    p.add_argument("--noise", type=float, default=0.005, help="noise sigma in [0, 1] units")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    for name, func, helptext in (("eval", cmd_eval, "score one variant on a corpus"),
                                 ("ablate", cmd_ablate, "score R1, R2 and R3 on a corpus")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--out-dir", required=True, type=Path)
        p.add_argument("--corpus", type=Path,
                       help="directory of sharp images (*.png, *.pgm) and kernels (*.txt); "
                            "every image is paired with every kernel. Default: built-in corpus")
        p.add_argument("--settings", default="true", help="comma list of true, medium, large")
        p.add_argument("--noise", type=float, default=0.005)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--max-bin", type=int, default=10)
        p.add_argument("--oracle", action="store_true",
                       help="score the true kernel instead of estimating one")
        _add_solver_flags(p, skip=("kernel_size",) + (("variant",) if name == "ablate" else ()))
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except NumericalDivergenceError as exc:
        print(f"error: numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except DegenerateKernelError as exc:
        print(f"error: degenerate kernel: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except InvalidArgumentError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
