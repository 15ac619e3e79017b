#!/usr/bin/env python3
"""Regenerate the committed harbor fixture and its golden outputs.

Run from the repository root after intentional behavior changes, then
review the diff before committing:

    python scripts/make_fixtures.py
"""

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from docgen import harbor_fixture  # noqa: E402

from longcoref.config import PipelineConfig  # noqa: E402
from longcoref.pipeline import rewrite_document  # noqa: E402


def main() -> None:
    text = harbor_fixture()
    fixtures = ROOT / "tests" / "fixtures"
    golden = ROOT / "tests" / "golden"
    fixtures.mkdir(parents=True, exist_ok=True)
    golden.mkdir(parents=True, exist_ok=True)

    (fixtures / "harbor.txt").write_text(text, encoding="utf-8")

    from longcoref.cli import main as cli_main  # noqa: E402

    if cli_main(["inspect", str(fixtures / "harbor.txt"), "--out", str(golden / "harbor_inspect.json")]):
        raise SystemExit("inspect golden generation failed")

    for mode, name in (("sliding", "harbor_sliding.txt"), ("non_overlap", "harbor_non_overlap.txt")):
        result = rewrite_document(text, PipelineConfig(chunk_mode=mode))
        out = result.rewritten_text
        again = rewrite_document(out, PipelineConfig(chunk_mode=mode)).rewritten_text
        if out != again:
            raise SystemExit(f"{mode}: rewrite is not a fixed point; refusing to write golden")
        (golden / name).write_text(out, encoding="utf-8")
        print(f"{name}: {result.rewrite.applied} edits, {len(result.clusters)} clusters")
    print("fixtures regenerated")


if __name__ == "__main__":
    main()
