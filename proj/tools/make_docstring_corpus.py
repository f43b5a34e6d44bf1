#!/usr/bin/env python3
"""Build a JSONL corpus of docstring paragraphs from installed Python sources.

Each record is {"id", "text", "domain"}; the domain is the top-level package.
Files are visited in sorted order and the sample is drawn with a fixed seed,
so the output depends only on the installed sources and the arguments.
"""
import argparse
import ast
import hashlib
import json
import os
import random
import re
import sys
import warnings

DEFAULT_ROOTS = ["/usr/lib/python3.10", "/usr/local/lib/python3.10/dist-packages"]
DEFAULT_PACKAGES = [
    "stdlib", "numpy", "scipy", "sklearn", "pandas", "sympy", "networkx", "matplotlib",
    "statsmodels", "transformers", "torch", "jax", "skimage", "sqlalchemy", "IPython",
]


def paragraphs(doc, min_words):
    for block in re.split(r"\n\s*\n", doc):
        words = block.split()
        if len(words) >= min_words:
            yield " ".join(words)


def docstrings(path):
    try:
        with open(path, "rb") as fh:
            tree = ast.parse(fh.read(), filename=path)
    except (SyntaxError, ValueError, UnicodeDecodeError, RecursionError):
        return
    for node in ast.walk(tree):
        if isinstance(node, (ast.Module, ast.ClassDef, ast.FunctionDef, ast.AsyncFunctionDef)):
            doc = ast.get_docstring(node, clean=True)
            if doc:
                yield doc


def package_dirs(roots, packages):
    for name in packages:
        if name == "stdlib":
            yield "stdlib", roots[0], True
            continue
        for root in roots[1:]:
            d = os.path.join(root, name)
            if os.path.isdir(d):
                yield name, d, False
                break


def walk(domain, top, is_stdlib):
    for dirpath, dirnames, filenames in os.walk(top):
        if is_stdlib and dirpath == top:
            dirnames[:] = [d for d in dirnames if d not in ("dist-packages", "site-packages", "test", "lib2to3")]
        dirnames.sort()
        for f in sorted(filenames):
            if f.endswith(".py"):
                yield os.path.join(dirpath, f)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-o", "--out", required=True)
    ap.add_argument("-n", "--docs", type=int, default=50000)
    ap.add_argument("--seed", type=int, default=20240101)
    ap.add_argument("--min-words", type=int, default=8)
    ap.add_argument("--packages", default=",".join(DEFAULT_PACKAGES))
    ap.add_argument("--roots", default=",".join(DEFAULT_ROOTS))
    args = ap.parse_args()
    warnings.simplefilter("ignore")

    seen = set()
    records = []
    for domain, top, is_stdlib in package_dirs(args.roots.split(","), args.packages.split(",")):
        for path in walk(domain, top, is_stdlib):
            for doc in docstrings(path):
                for para in paragraphs(doc, args.min_words):
                    key = hashlib.sha1(para.encode()).hexdigest()
                    if key in seen:
                        continue
                    seen.add(key)
                    records.append((domain, key[:16], para))
    if len(records) < args.docs:
        sys.exit(f"only {len(records)} paragraphs found, {args.docs} requested")
    sample = random.Random(args.seed).sample(records, args.docs)
    tmp = args.out + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for domain, key, text in sample:
            fh.write(json.dumps({"id": f"{domain}-{key}", "text": text, "domain": domain}) + "\n")
    os.replace(tmp, args.out)
    print(f"{args.out}: {args.docs} of {len(records)} paragraphs", file=sys.stderr)


if __name__ == "__main__":
    main()
