"""Command line entry point.

Exit codes: 0 success, 1 validation/usage error, 2 runtime error.
Human-readable output goes to stderr; machine output to stdout or files.
"""
import argparse
import dataclasses
import json
import logging
import sys

from . import pipeline
from .pipeline import ConfigError, PipelineConfig, PipelineError

log = logging.getLogger("fairreadmit")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def build_parser():
    parser = _Parser(prog="fairreadmit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "audit": "dataset-level disparate-impact audit only",
        "run": "full pipeline: audit, reweigh, train, evaluate, re-audit",
        "compare": "run plus calibrated equalized-odds post-processing; emits comparison CSV",
        "inspect-config": "validate the config and print it with defaults filled in",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="JSON config file (defaults used when omitted)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--data", help="override the config data_path")
        p.add_argument("--out", help="output directory (audit: JSON file path)")
        p.add_argument("-v", "--verbose", action="store_true")
        if name in ("run", "compare"):
            p.add_argument("--max-reprocess", type=int, default=None,
                           help="rerun with reweighing forced on at most N times when the re-audit fails")
    return parser


def _effective_config(args):
    config = pipeline.load_config(args.config) if args.config else PipelineConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.data is not None:
        overrides["data_path"] = args.data
    if getattr(args, "max_reprocess", None) is not None:
        overrides["max_reprocess"] = args.max_reprocess
    if args.command == "compare":
        overrides["posthoc_enabled"] = True
    if overrides:
        config = dataclasses.replace(config, **overrides)
    return config


def _print_audit(report):
    for name, rep in sorted(report.get("dataset_audit", {}).items()):
        print(
            f"{name}: DI={rep['di']:.6f} di_score={rep['di_score']:.6f} "
            f"biased={'true' if rep['biased'] else 'false'} "
            f"(n_priv={rep['n_priv']}, n_unpriv={rep['n_unpriv']})",
            file=sys.stderr,
        )


def _write_partial(report, out):
    if report is not None and out:
        pipeline.render_report(report, out)


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = _effective_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    if args.command == "inspect-config":
        print(json.dumps(config.to_dict(), indent=2, sort_keys=True))
        return 0

    out = args.out or config.report_path
    try:
        if args.command == "audit":
            report = pipeline.audit_dataset(config)
            _print_audit(report)
            text = pipeline.canonical_json(report) + "\n"
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
            return 0

        report = pipeline.run(config)
    except PipelineError as exc:
        print(f"error in stage {exc.stage}: {exc.message}", file=sys.stderr)
        if args.command != "audit":
            _write_partial(exc.report, out)
        return 2

    _print_audit(report)
    for line in report["decision_log"]:
        print(f"  {line}", file=sys.stderr)
    sys.stderr.write(pipeline.table_text(report))
    if out:
        for path in pipeline.render_report(report, out):
            print(f"wrote {path}", file=sys.stderr)
    if args.command == "compare":
        sys.stdout.write(pipeline.comparison_csv(report))
    elif not out:
        sys.stdout.write(pipeline.canonical_json(report) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
