"""Command-line front end.

Exit codes: 0 success, 1 domain failure, 2 usage or parse failure. Errors are
written to stderr as one JSON object ``{"error": CODE, "message": ...}``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .assembly import assemble_garment, merge_patterns
from .body import default_body, read_body
from .config import RunConfig
from .errors import PARSE_ERRORS, SewError
from .metrics import EvalOptions, evaluate_dir
from .pattern_io import FORMAT_VERSION, PatternDocument, export_obj, export_svg, read_pattern, serialize_pattern
from .sim import drape
from .tokens import decode_pattern, encode_pattern, tokens_from_text, tokens_to_text
from .validation import validate_pattern


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _global_flags(parser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="key = value configuration file")
    parser.add_argument("--seed", type=int, default=default, help="seed (overrides the config file)")
    parser.add_argument("--out", default=default, help="output path (default: standard output)")
    parser.add_argument(
        "--set", action="append", metavar="KEY=VALUE", default=argparse.SUPPRESS if suppress else [],
        help="override one config key; repeatable",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sewkit", description="Sewing-pattern toolkit: validate, tokenize, assemble, drape, evaluate.")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        _global_flags(p, suppress=True)
        return p

    p = command("validate", "check a pattern file; JSON report on stdout")
    p.add_argument("pattern")

    p = command("svg", "export panels as SVG")
    p.add_argument("pattern")

    p = command("tokenize", "encode a pattern as token text")
    p.add_argument("pattern")

    p = command("detokenize", "decode token text back to a pattern file")
    p.add_argument("tokens")

    p = command("assemble", "place and triangulate panels, write OBJ")
    p.add_argument("pattern")

    p = command("drape", "simulate the garment on a capsule body; several files are layered in the given order")
    p.add_argument("patterns", nargs="+")
    p.add_argument("--body", help="body JSON (default: bundled humanoid)")
    p.add_argument("--report", help="report JSON path (default: next to --out, else stdout)")
    p.add_argument("--batch", action="store_true", help="drape each file separately; --out names a directory")
    p.add_argument("--no-timing", action="store_true", help="omit wall_time so reports are byte-reproducible")

    p = command("eval", "compare predicted patterns against ground truth")
    p.add_argument("pred_dir")
    p.add_argument("gt_dir")
    p.add_argument("--method", default=None, help="row label (default: prediction directory name)")
    p.add_argument("--squared", action="store_true", default=None, help="squared chamfer distances")
    p.add_argument("--report", help="also write the JSON report here")
    return parser


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    overrides = {}
    for item in getattr(args, "set", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise SewError("CONFIG_ERROR", f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = str(args.seed)
    return cfg.updated(overrides) if overrides else cfg


def _emit(text: str, path, stdout) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    else:
        stdout.write(text)


def _cmd_validate(args, cfg, stdout) -> int:
    doc = read_pattern(args.pattern)
    report = validate_pattern(doc.pattern)
    _emit(json.dumps(report.to_dict(), indent=2) + "\n", args.out, stdout)
    return 0 if report.ok else 1


def _cmd_svg(args, cfg, stdout) -> int:
    doc = read_pattern(args.pattern)
    _emit(export_svg(doc.pattern, cfg.svg_options()), args.out, stdout)
    return 0


def _cmd_tokenize(args, cfg, stdout) -> int:
    doc = read_pattern(args.pattern)
    seq = encode_pattern(doc.pattern, cfg.token_spec())
    for w in seq.warnings:
        sys.stderr.write(json.dumps({"warning": w}) + "\n")
    _emit(tokens_to_text(seq), args.out, stdout)
    return 0


def _cmd_detokenize(args, cfg, stdout) -> int:
    try:
        text = Path(args.tokens).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise SewError("FILE_NOT_FOUND", f"no such file: {args.tokens}") from None
    pattern = decode_pattern(tokens_from_text(text, cfg.token_spec()))
    _emit(serialize_pattern(PatternDocument(FORMAT_VERSION, pattern, {})), args.out, stdout)
    return 0


def _cmd_assemble(args, cfg, stdout) -> int:
    doc = read_pattern(args.pattern)
    garment = assemble_garment(doc.pattern, cfg.assembly_options())
    _emit(export_obj(garment), args.out, stdout)
    return 0


def _drape_one(patterns, cfg, body, as_layers: bool):
    if as_layers and len(patterns) > 1:
        pattern, groups = merge_patterns(patterns)
    else:
        pattern, groups = patterns[0], None
    garment = assemble_garment(pattern, cfg.assembly_options())
    return drape(
        garment,
        body,
        cfg.sim_params(),
        max_steps=cfg.max_steps,
        settle_tol=cfg.settle_tol,
        layer_offset=cfg.layer_offset,
        layers=groups,
        waist_band=cfg.waist_band or None,
        waist_factor=cfg.waist_factor,
    )


def _report_text(report, no_timing: bool) -> str:
    d = report.to_dict()
    if no_timing:
        d.pop("wall_time", None)
    return json.dumps(d, indent=2) + "\n"


def _cmd_drape(args, cfg, stdout) -> int:
    body = read_body(args.body) if args.body else default_body()
    docs = [read_pattern(p) for p in args.patterns]
    if args.batch:
        if not args.out:
            raise SewError("CONFIG_ERROR", "--batch needs --out DIR")
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        summary = {}
        for path, doc in zip(args.patterns, docs):
            stem = Path(path).stem
            mesh, report = _drape_one([doc.pattern], cfg, body, as_layers=False)
            (out_dir / f"{stem}.obj").write_text(export_obj(mesh), encoding="utf-8", newline="\n")
            (out_dir / f"{stem}.report.json").write_text(_report_text(report, args.no_timing), encoding="utf-8", newline="\n")
            summary[stem] = report.converged
        stdout.write(json.dumps({"converged": summary}, indent=2, sort_keys=True) + "\n")
        return 0
    mesh, report = _drape_one([d.pattern for d in docs], cfg, body, as_layers=True)
    text = _report_text(report, args.no_timing)
    if args.out:
        Path(args.out).write_text(export_obj(mesh), encoding="utf-8", newline="\n")
        report_path = args.report or str(Path(args.out).with_suffix(".report.json"))
        Path(report_path).write_text(text, encoding="utf-8", newline="\n")
    else:
        _emit(text, args.report, stdout)
    return 0


def _cmd_eval(args, cfg, stdout) -> int:
    opts = EvalOptions(
        mesh=cfg.eval_mesh,
        n_samples=cfg.eval_samples,
        squared=bool(args.squared) or cfg.chamfer_squared,
        seed=cfg.seed,
        aggregation=cfg.aggregation,
        method=args.method or Path(args.pred_dir).name or "pred",
        assembly=cfg.assembly_options(),
        sim_params=cfg.sim_params(),
        max_steps=cfg.max_steps,
    )
    report = evaluate_dir(args.pred_dir, args.gt_dir, opts)
    if args.report:
        Path(args.report).write_text(report.to_json(), encoding="utf-8", newline="\n")
    if args.out:
        Path(args.out).write_text(report.to_json(), encoding="utf-8", newline="\n")
    stdout.write(report.table())
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "svg": _cmd_svg,
    "tokenize": _cmd_tokenize,
    "detokenize": _cmd_detokenize,
    "assemble": _cmd_assemble,
    "drape": _cmd_drape,
    "eval": _cmd_eval,
}


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        stderr.write(json.dumps({"error": "USAGE", "message": str(exc)}) + "\n")
        return 2
    try:
        cfg = _config(args)
        return _COMMANDS[args.command](args, cfg, stdout)
    except SewError as exc:
        stderr.write(json.dumps(exc.to_dict()) + "\n")
        return 2 if exc.code in PARSE_ERRORS else 1
    except OSError as exc:
        stderr.write(json.dumps({"error": "IO_ERROR", "message": str(exc)}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
