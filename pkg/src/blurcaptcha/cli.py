"""Command-line interface: generate, blur, evaluate, report, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .challenge import (
    CONFUSABLES,
    DEFAULT_ALPHABET,
    ChallengeSpec,
    make_corpus,
    save_corpus,
)
from .evaluate import (
    aggregate,
    load_adapters,
    read_transcript,
    report_to_dict,
    run_experiment,
)
from .filters import gaussian_blur
from .raster import load_image, save_image
from .service import load_config, serve


def _alphabet_from_args(args) -> str:
    alphabet = args.alphabet if args.alphabet else DEFAULT_ALPHABET
    if args.exclude_confusables:
        alphabet = "".join(c for c in alphabet if c not in CONFUSABLES)
    return alphabet


def cmd_gen(args) -> int:
    template = ChallengeSpec(
        seed=0,
        radius=args.radius,
        scale=args.scale,
        padding=args.padding,
        alphabet=_alphabet_from_args(args),
    )
    corpus = make_corpus(args.n, template, base_seed=args.seed)
    manifest_path = save_corpus(corpus, template, args.seed, args.out)
    print(f"wrote {args.n} challenges and {manifest_path}")
    return 0


def cmd_blur(args) -> int:
    img = load_image(args.in_path)
    save_image(gaussian_blur(img, args.radius), args.out)
    print(f"blurred {args.in_path} -> {args.out} (radius {args.radius})")
    return 0


def _write_report_artifacts(report, out_dir: Path) -> None:
    from .figures import render_report_figures, write_report_csv

    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = write_report_csv(report, out_dir / "report.csv")
    figure_paths = render_report_figures(report, out_dir)
    names = ", ".join(p.name for p in [csv_path, *figure_paths])
    print(f"wrote {names} to {out_dir}", file=sys.stderr)


def cmd_eval_run(args) -> int:
    radii = [float(r) for r in args.radii.split(",") if r.strip() != ""]
    adapters = load_adapters(args.adapters)
    _, report = run_experiment(
        n=args.n,
        radii=radii,
        adapters=adapters,
        base_seed=args.seed,
        out_dir=args.out,
        scale=args.scale,
        padding=args.padding,
    )
    if not args.no_figures:
        _write_report_artifacts(report, Path(args.out))
    print(json.dumps(report_to_dict(report), indent=2))
    return 0


def cmd_eval_report(args) -> int:
    records = read_transcript(args.transcript)
    report = aggregate(records)
    if args.out:
        _write_report_artifacts(report, Path(args.out))
    print(json.dumps(report_to_dict(report), indent=2))
    return 0


def cmd_serve(args) -> int:
    serve(load_config(args.config))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blurcaptcha",
        description="Gaussian-blur CAPTCHA toolkit: generation, blur, OCR evaluation, challenge service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a challenge corpus with manifest")
    gen.add_argument("--n", type=int, required=True, help="number of challenges")
    gen.add_argument("--radius", type=float, default=2.0, help="blur radius (default 2)")
    gen.add_argument("--seed", type=int, required=True, help="base seed")
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--scale", type=int, default=4)
    gen.add_argument("--padding", type=int, default=8)
    gen.add_argument("--alphabet", default=None, help="override the challenge alphabet")
    gen.add_argument(
        "--exclude-confusables",
        action="store_true",
        help=f"drop visually ambiguous characters ({CONFUSABLES})",
    )
    gen.set_defaults(func=cmd_gen)

    blur = sub.add_parser("blur", help="blur a single .pgm/.png image")
    blur.add_argument("--in", dest="in_path", required=True, help="input image")
    blur.add_argument("--radius", type=float, required=True)
    blur.add_argument("--out", required=True, help="output image")
    blur.set_defaults(func=cmd_blur)

    ev = sub.add_parser("eval", help="run or summarize robustness experiments")
    ev_sub = ev.add_subparsers(dest="eval_command", required=True)

    run = ev_sub.add_parser("run", help="generate corpora, run OCR adapters, score")
    run.add_argument("--n", type=int, required=True)
    run.add_argument("--radii", required=True, help="comma-separated radii, e.g. 0,1,2")
    run.add_argument("--adapters", required=True, help="adapter config JSON")
    run.add_argument("--seed", type=int, required=True)
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--scale", type=int, default=4)
    run.add_argument("--padding", type=int, default=8)
    run.add_argument("--no-figures", action="store_true", help="skip CSV/figure rendering")
    run.set_defaults(func=cmd_eval_run)

    rep = ev_sub.add_parser("report", help="aggregate a transcript into a report")
    rep.add_argument("--transcript", required=True, help="JSONL transcript file")
    rep.add_argument("--out", default=None, help="also write CSV and figures here")
    rep.set_defaults(func=cmd_eval_report)

    srv = sub.add_parser("serve", help="start the challenge HTTP service")
    srv.add_argument("--config", default=None, help="service config JSON")
    srv.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # contract violations exit nonzero with a message
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
