#!/usr/bin/env python3
"""Build data/moby_dick.txt from the @stdlib/datasets-moby-dick npm package.

The package ships one plain-text file per chapter (public domain text,
PDDL-1.0 / CC0 dataset licence). We keep one paragraph per line, drop chapter
headings and put spaces around em-dashes so that dash-joined words split.

    npm pack @stdlib/datasets-moby-dick && tar xzf stdlib-datasets-moby-dick-*.tgz
    python3 scripts/prepare_corpus.py package/data data/moby_dick.txt
"""
import pathlib
import re
import sys


def chapter_files(root: pathlib.Path):
    chapters = sorted(root.glob("chapter_*.txt"), key=lambda p: int(p.stem.split("_")[1]))
    return chapters + [root / "epilogue.txt"]


def main() -> int:
    src, dst = pathlib.Path(sys.argv[1]), pathlib.Path(sys.argv[2])
    lines = []
    for path in chapter_files(src):
        text = path.read_text(encoding="utf-8")
        for para in re.split(r"\n\s*\n", text):
            para = " ".join(para.split())
            if not para or re.match(r"^(CHAPTER \d+\.|Epilogue$)", para):
                continue
            para = para.replace("—", " — ")
            lines.append(" ".join(para.split()))
    dst.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


if __name__ == "__main__":
    sys.exit(main())
