"""Command-line entry point: ``hopflin <subcommand> SPEC.json [options]``.

Exit codes: 0 pass, 2 invalid input, 3 not a contraction, 4 verification
failure (including ill-conditioned or refused computations).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import pipeline as pl
from .errors import HopfError, InvalidInputError, NotAContractionError, SingularLinearPartError
from .io import decode_complex, dumps, load_json, load_model, model_to_dict, parse_contraction

EXIT_OK, EXIT_INVALID, EXIT_NOT_CONTRACTION, EXIT_VERIFY = 0, 2, 3, 4
COMMANDS = ("validate", "operator", "spectrum", "linearize", "verify", "potential",
            "pipeline", "oracle")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _degree(text: str):
    if text == "auto":
        return "auto"
    try:
        return int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("degree must be an integer or 'auto'") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("spec", help="contraction JSON file")
    common.add_argument("--config", help="JSON file with run configuration keys")
    common.add_argument("--degree", type=_degree, help="truncation degree or 'auto'")
    common.add_argument("--strategy", choices=("auto", "closure", "root-prune"))
    common.add_argument("--samples", type=int)
    common.add_argument("--radii", type=_floats, help="comma-separated sphere radii")
    common.add_argument("--seed", type=int)
    common.add_argument("--tol-res", type=float)
    common.add_argument("--tol-cluster", type=float)
    common.add_argument("--prune-threshold", type=float)
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    common.add_argument("--model", help="stored model (model JSON or a report containing one)")
    common.add_argument("--save-model", help="also write the embedding model to this file")
    common.add_argument("--points", help="JSON list of points ([[re, im], ...] per point) for oracle")

    parser = argparse.ArgumentParser(
        prog="hopflin",
        description="Linearize polynomial contractions of C^n and build automorphic potentials.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "validate": "check the contraction hypotheses",
        "operator": "dump the truncated pullback matrix",
        "spectrum": "monomial eigenvalues, resonances and root spaces",
        "linearize": "build the embedding model",
        "verify": "verify a stored (or freshly built) model",
        "potential": "automorphic potential and its pull-back",
        "pipeline": "all of the above in order",
        "oracle": "brute-force residual cross-check",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def config_from_args(args: argparse.Namespace) -> pl.RunConfig:
    data = {}
    if args.config:
        raw = load_json(args.config)
        if not isinstance(raw, dict):
            raise InvalidInputError(f"{args.config}: config must be a JSON object")
        data.update(raw)
    for key in ("degree", "strategy", "samples", "radii", "seed", "tol_res", "tol_cluster",
                "prune_threshold"):
        val = getattr(args, key)
        if val is not None:
            data[key] = val
    try:
        return pl.RunConfig.from_dict(data)
    except TypeError as exc:
        raise InvalidInputError(f"config: {exc}") from exc


def _load_points(path, n: int) -> np.ndarray:
    raw = load_json(path)
    if not isinstance(raw, list):
        raise InvalidInputError(f"{path}: expected a list of points")
    pts = []
    for i, p in enumerate(raw):
        if not isinstance(p, list) or len(p) != n:
            raise InvalidInputError(f"{path}: point {i} must have {n} coordinates")
        pts.append([decode_complex(x, f"points[{i}][{j}]") for j, x in enumerate(p)])
    return np.array(pts, dtype=complex)


def run(args: argparse.Namespace) -> tuple[dict, int]:
    spec = parse_contraction(args.spec)
    cfg = config_from_args(args)
    cmd = args.command
    model_dict = None

    def get_model():
        nonlocal model_dict
        if args.model:
            m = load_model(args.model)
        else:
            _, m = pl.run_linearize(spec, cfg)
        model_dict = model_to_dict(m)
        return m

    if cmd == "pipeline":
        report, model = pl.run_pipeline(spec, cfg)
        model_dict = report["model"]
    else:
        if cmd != "verify" or not args.model:
            sections = {"validate": pl.run_validate(spec, cfg)}
        else:
            sections = {}
        if cmd == "operator":
            sections["operator"] = pl.run_operator(spec, cfg)
        elif cmd == "spectrum":
            sections["spectrum"] = pl.run_spectrum(spec, cfg)
        elif cmd == "linearize":
            sections["linearize"], m = pl.run_linearize(spec, cfg)
            model_dict = model_to_dict(m)
        elif cmd == "verify":
            sections["verify"] = pl.run_verify(get_model(), spec, cfg)
        elif cmd == "potential":
            sections["potential"] = pl.run_potential(get_model(), spec, cfg)
        elif cmd == "oracle":
            m = get_model()
            pts = _load_points(args.points, spec.n) if args.points else None
            sections["oracle"] = pl.run_oracle(m, spec, cfg, pts)
        report = pl.make_report(cmd, spec, cfg, sections, model_dict)
    if args.save_model and model_dict is not None:
        Path(args.save_model).write_text(dumps(model_dict))
    return report, EXIT_OK if report["verdict"]["passed"] else EXIT_VERIFY


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (NotAContractionError, SingularLinearPartError)):
        return EXIT_NOT_CONTRACTION
    if isinstance(exc, InvalidInputError):
        return EXIT_INVALID
    return EXIT_VERIFY


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report, code = run(args)
    except HopfError as exc:
        code = exit_code_for(exc)
        print(f"hopflin {args.command}: error: {exc}", file=sys.stderr)
        return code
    text = dumps(report)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    if code:
        failed = [k for k, v in report["verdict"]["sections"].items() if not v]
        print(f"hopflin {args.command}: verification failed in {', '.join(failed)}",
              file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
