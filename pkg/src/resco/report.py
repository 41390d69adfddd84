"""Static HTML rendering of one document's selection output."""

from __future__ import annotations

import html
from typing import Any

from resco.pipeline import text_hash
from resco.text_pipeline import Document

_STYLE = """
body { font-family: Georgia, serif; max-width: 48em; margin: 2em auto; line-height: 1.5; }
.s { padding: 0.1em 0.2em; border-radius: 3px; }
.key { background: #ffd6a5; }
.meta { color: #666; font: 0.8em monospace; }
.r { color: #a33; font: 0.75em monospace; margin-left: 0.3em; }
"""


def render_html(record: dict[str, Any], doc: Document) -> str:
    """Sentences in order; selected ones highlighted, r and features in each tooltip.

    Raises:
        ValueError: ``doc`` does not match the sentences the record was built from.
    """
    entries = sorted(record["sentences"], key=lambda e: e["index"])
    if len(entries) != doc.n:
        raise ValueError(f"record has {len(entries)} sentences, document has {doc.n}")
    parts = []
    for s, e in zip(doc, entries):
        if e.get("sha256") and e["sha256"] != text_hash(s.text):
            raise ValueError(f"sentence {s.index} text does not match the record")
        r = float(e["r"])
        tip = f"r={r:.4f}"
        if "rel" in e:
            tip += f" rel={e['rel']:.4f} smo={e['smo']:.4f} coh={e['coh']:.4f}"
        cls = "s key" if r != 0.0 else "s"
        parts.append(
            f'<span class="{cls}" title="{html.escape(tip)}">{html.escape(s.text)}</span>'
            f'<span class="r">[{r:.3g}]</span>'
        )
    meta = (
        f"doc={html.escape(str(record.get('doc_id')))} method={html.escape(str(record.get('method')))} "
        f"mode={html.escape(str(record.get('mode')))} seed={record.get('seed')} K={record.get('K')} "
        f"cluster={record.get('chosen_cluster')} version={html.escape(str(record.get('version')))}"
    )
    return (
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">"
        f"<title>{html.escape(str(record.get('doc_id')))}</title><style>{_STYLE}</style></head>\n"
        f"<body><p class=\"meta\">{meta}</p>\n<p>" + "\n".join(parts) + "</p>\n</body></html>\n"
    )
