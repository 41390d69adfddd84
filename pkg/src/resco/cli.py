"""Command-line entry point: ``resco score|identify|gen-gold|evaluate|report``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error, 3 a
degenerate-input warning escalated by ``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from resco import __version__
from resco.embedding_store import VectorStore
from resco.errors import CorpusError, ResCoError
from resco.evaluation import CorpusItem, EvalReport, evaluate_corpus, evaluate_scores
from resco.gold_standard import build_refsim, discover_pairs, read_refsim
from resco.pipeline import (
    ConfigError,
    RunConfig,
    dumps,
    featurize,
    run_document,
    scores_from_record,
    selection_record,
)
from resco.report import render_html
from resco.selector import METHODS
from resco.text_pipeline import Document, build_document

logger = logging.getLogger("resco")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DEGENERATE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# flag -> (RunConfig field, argparse kwargs)
_CONFIG_FLAGS: dict[str, tuple[str, dict[str, Any]]] = {
    "--word-vectors": ("word_vectors", {}),
    "--entity-vectors": ("entity_vectors", {}),
    "--segmentation": ("segmentation", {"choices": ["auto", "pre-segmented"]}),
    "--k-min": ("k_min", {"type": int}),
    "--k-max": ("k_max", {"type": int}),
    "--k-cap": ("k_cap", {"type": int}),
    "--restarts": ("restarts", {"type": int}),
    "--tol": ("tol", {"type": float}),
    "--max-iters": ("max_iters", {"type": int}),
    "--seed": ("seed", {"type": int}),
    "--method": ("method", {"choices": list(METHODS)}),
    "--coh-fallback": ("coh_fallback", {"choices": ["zero", "doc-mean"]}),
    "--coh-space": ("coh_space", {"choices": ["resco", "sentence"]}),
    "--max-span": ("max_span", {"type": int}),
}
_BOOL_FLAGS = {"--zscore": "zscore", "--pearson-scored": "pearson_scored"}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("run configuration")
    g.add_argument("--config", help="JSON config file; flags override its values")
    for flag, (dest, kw) in _CONFIG_FLAGS.items():
        g.add_argument(flag, dest=dest, default=argparse.SUPPRESS, **kw)
    for flag, dest in _BOOL_FLAGS.items():
        g.add_argument(flag, dest=dest, action="store_true", default=argparse.SUPPRESS)
    p.add_argument("--strict", action="store_true", help="exit 3 on degenerate input")
    p.add_argument("-v", "--verbose", action="store_true")


def _config(args: argparse.Namespace, **forced) -> RunConfig:
    data = RunConfig.from_file(args.config).to_dict() if args.config else {}
    fields = {dest for dest, _ in _CONFIG_FLAGS.values()} | set(_BOOL_FLAGS.values())
    data.update({k: v for k, v in vars(args).items() if k in fields})
    data.update(forced)
    return RunConfig.from_dict(data).with_env_defaults()


def _read_doc(path: str | Path, config: RunConfig, entity_store: VectorStore | None = None, doc_id: str | None = None) -> Document:
    with open(path, encoding="utf-8") as fh:
        raw = fh.read()
    return build_document(
        raw,
        doc_id or Path(path).stem,
        mode=config.segmentation,  # type: ignore[arg-type]
        entity_store=entity_store,
        max_span=config.max_span,
    )


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_score(args: argparse.Namespace, mode: str) -> int:
    config = _config(args, mode=mode)
    word_store, entity_store = config.load_stores()
    doc = _read_doc(args.article, config, doc_id=args.doc_id)
    result = run_document(doc, word_store, entity_store, config)
    record = selection_record(result, doc, config, (word_store, entity_store))
    _write(args.out, dumps(record))
    if args.report:
        Path(args.report).write_text(render_html(record, doc), encoding="utf-8")
    if result.degenerate:
        logger.warning("document %r has a single sentence; emitting r=[1]", doc.id)
        if args.strict:
            return EXIT_DEGENERATE
    return EXIT_OK


def _meta(config: RunConfig) -> dict[str, Any]:
    return {"version": __version__, "config": config.to_dict()}


def cmd_gen_gold(args: argparse.Namespace) -> int:
    config = _config(args)
    root = Path(args.corpus_root)
    matched, orphans = discover_pairs(root)
    if not matched:
        raise CorpusError(f"no matched hoax/refutation pairs under {root}")
    word_store, _ = config.load_stores()
    out = Path(args.out) if args.out else root / "refsim"
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for doc_id in matched:
        hoax = _read_doc(root / "hoax" / f"{doc_id}.txt", config, doc_id=doc_id)
        refu = _read_doc(root / "refutation" / f"{doc_id}.txt", config, doc_id=doc_id)
        refsim = build_refsim(hoax, refu, word_store)
        path = out / f"{doc_id}.json"
        record = {**refsim.to_dict(), **_meta(config)}
        path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        written.append(path.name)
    manifest = {**_meta(config), "matched": matched, "orphans": orphans, "files": written}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if any(orphans.values()):
        logger.warning("unmatched files: %s", orphans)
    return EXIT_OK


def _report_name(method: str, metric: str, rho: int | None) -> str:
    return f"{method}_{metric}" + ("" if rho is None else f"_rho{rho}")


def _summary_rows(reports: Sequence[EvalReport]) -> list[dict[str, Any]]:
    return [
        {"method": r.method, "metric": r.metric, "rho": r.rho, "mean": r.mean, "stddev": r.stddev, "docs": len(r.per_doc)}
        for r in reports
    ]


def _summary_markdown(reports: Sequence[EvalReport]) -> str:
    lines = []
    pear = [r for r in reports if r.metric == "pearson"]
    if pear:
        lines += ["Correlation with refsim", "", "| Method | Mean | Std Dev |", "|---|---|---|"]
        lines += [f"| {r.method} | {r.mean:.3f} | {r.stddev:.3f} |" for r in pear]
        lines.append("")
    nd = [r for r in reports if r.metric == "ndcg"]
    if nd:
        rhos = sorted({r.rho for r in nd})
        methods = list(dict.fromkeys(r.method for r in nd))
        lines += ["NDCG against top-rho refsim labels", ""]
        lines.append("| Method | " + " | ".join(f"rho={p}" for p in rhos) + " |")
        lines.append("|---" * (len(rhos) + 1) + "|")
        by = {(r.method, r.rho): r.mean for r in nd}
        for m in methods:
            lines.append(f"| {m} | " + " | ".join(f"{by[(m, p)]:.3f}" if (m, p) in by else "-" for p in rhos) + " |")
        lines.append("")
    return "\n".join(lines)


def _parse_external(specs: Sequence[str]) -> dict[str, Path]:
    out = {}
    for spec in specs:
        name, sep, path = spec.partition("=")
        if not sep or not name or not path:
            raise ConfigError(f"--external expects NAME=DIR, got {spec!r}")
        out[name] = Path(path)
    return out


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _config(args)
    root = Path(args.corpus_root)
    refsim_dir = Path(args.refsim_dir) if args.refsim_dir else root / "refsim"
    hoax_dir = root / "hoax"
    ids = sorted(p.stem for p in hoax_dir.glob("*.txt")) if hoax_dir.is_dir() else []
    if not ids:
        raise CorpusError(f"no hoax documents under {hoax_dir}")
    missing = [d for d in ids if not (refsim_dir / f"{d}.json").exists()]
    if missing:
        logger.warning("no refsim for %d documents: %s", len(missing), missing)
    ids = [d for d in ids if d not in missing]
    if not ids:
        raise CorpusError(f"no refsim files under {refsim_dir}")

    word_store, entity_store = config.load_stores()
    items = []
    refsims = {}
    for doc_id in ids:
        doc = _read_doc(hoax_dir / f"{doc_id}.txt", config, doc_id=doc_id)
        refsim = read_refsim(refsim_dir / f"{doc_id}.json")
        refsims[doc_id] = refsim.scores
        items.append(CorpusItem(featurize(doc, word_store, entity_store, config), refsim.scores))

    methods = args.methods or ["resco-cc"]
    metrics = args.metrics or ["pearson", "ndcg"]
    rhos = args.rhos or [3, 5, 7]
    base_seed = config.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = {**_meta(config), "missing_refsim": missing}

    reports: list[EvalReport] = []
    for method in methods:
        for metric in metrics:
            for rho in ([None] if metric == "pearson" else rhos):
                rep = evaluate_corpus(items, method, metric, rho, args.iterations, base_seed, config, workers=args.workers)
                reports.append(rep)

    for name, directory in _parse_external(args.external or []).items():
        scores = {}
        for doc_id in ids:
            path = directory / f"{doc_id}.json"
            if path.exists():
                scores[doc_id] = scores_from_record(json.loads(path.read_text(encoding="utf-8")))
        for metric in metrics:
            for rho in ([None] if metric == "pearson" else rhos):
                reports.append(evaluate_scores(scores, refsims, metric, rho, method=name))  # type: ignore[arg-type]

    for rep in reports:
        stem = _report_name(rep.method, rep.metric, rep.rho)
        rep.write_json(out / f"{stem}.json", meta)
        rep.write_csv(out / f"{stem}.csv")
    rows = _summary_rows(reports)
    with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    (out / "summary.json").write_text(json.dumps({**meta, "rows": rows}, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out / "summary.md").write_text(_summary_markdown(reports), encoding="utf-8")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    record = json.loads(Path(args.selection).read_text(encoding="utf-8"))
    config = RunConfig.from_dict(record["config"])
    doc = _read_doc(args.article, config, doc_id=record.get("doc_id"))
    _write(args.out, render_html(record, doc))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="resco", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"resco {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, help_ in (("score", "numeric per-sentence scores"), ("identify", "binary key-sentence labels")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("article")
        p.add_argument("-o", "--out", help="selection JSON path (default stdout)")
        p.add_argument("--report", help="also write an HTML rendering here")
        p.add_argument("--doc-id")
        _add_config_flags(p)

    p = sub.add_parser("gen-gold", help="refsim gold standard from hoax/refutation pairs")
    p.add_argument("corpus_root")
    p.add_argument("-o", "--out", help="output directory (default <root>/refsim)")
    _add_config_flags(p)

    p = sub.add_parser("evaluate", help="Pearson / NDCG against refsim over a corpus")
    p.add_argument("corpus_root")
    p.add_argument("-o", "--out", required=True, help="directory for reports")
    p.add_argument("--refsim-dir")
    p.add_argument("--methods", nargs="+", choices=list(METHODS))
    p.add_argument("--metrics", nargs="+", choices=["pearson", "ndcg"])
    p.add_argument("--rhos", nargs="+", type=int)
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--external", nargs="*", metavar="NAME=DIR", help="extra score files in selection JSON shape")
    _add_config_flags(p)

    p = sub.add_parser("report", help="HTML rendering of a selection JSON")
    p.add_argument("selection")
    p.add_argument("article")
    p.add_argument("-o", "--out")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command in ("score", "identify"):
            return cmd_score(args, "scoring" if args.command == "score" else "identification")
        if args.command == "gen-gold":
            return cmd_gen_gold(args)
        if args.command == "evaluate":
            if args.iterations < 1:
                raise ConfigError("--iterations must be >= 1")
            return cmd_evaluate(args)
        return cmd_report(args)
    except ConfigError as exc:
        print(f"resco: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ResCoError, OSError, ValueError) as exc:
        print(f"resco: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
