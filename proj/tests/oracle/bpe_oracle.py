# SPDX-License-Identifier: Apache-2.0
# Independent reference encoder for the cl100k rank file: the upstream
# pre-tokenizer regex (via the `regex` module) plus plain rank-merge BPE.
# Writes tests/data/bpe_oracle.json, which the C++ tests compare against.
import base64
import json
import pathlib
import sys

import regex

PAT = regex.compile(
    r"""(?i:'s|'t|'re|'ve|'m|'ll|'d)|[^\r\n\p{L}\p{N}]?\p{L}+|\p{N}{1,3}| ?[^\s\p{L}\p{N}]+[\r\n]*|\s*[\r\n]+|\s+(?!\S)|\s+"""
)

SAMPLES = [
    "hello world",
    "tiktoken is great!",
    "Who made the 1989 comic book, the film version of which Jon Raymond Polito appeared in?",
    "Plan: Search for more information about Jon Raymond Polito.\n#E1 = Wikipedia[Jon Raymond Polito]",
    "Calculator[20 * (#E1 / 20)] -> 200.0",
    "Jon Raymond Polito (December 29, 1950 – September 1, 2016) was an American character actor.",
    "It's 12345678 o'clock, isn't it?   Spaces  \n\n  and\ttabs",
    "Café naïve résumé — 日本語のテキスト",
    "emoji \U0001F600 and symbols $$ @@ ###",
    "",
]


def load_ranks(path):
    ranks = {}
    for line in pathlib.Path(path).read_text().splitlines():
        if not line.strip():
            continue
        tok, rank = line.split()
        ranks[base64.b64decode(tok)] = int(rank)
    return ranks


def bpe(piece, ranks):
    if piece in ranks:
        return [ranks[piece]]
    parts = [bytes([b]) for b in piece]
    while len(parts) > 1:
        best, best_rank = None, None
        for i in range(len(parts) - 1):
            r = ranks.get(parts[i] + parts[i + 1])
            if r is not None and (best_rank is None or r < best_rank):
                best, best_rank = i, r
        if best is None:
            break
        parts[best:best + 2] = [parts[best] + parts[best + 1]]
    return [ranks[p] for p in parts]


def encode(text, ranks):
    out = []
    for m in PAT.finditer(text):
        out.extend(bpe(m.group().encode("utf-8"), ranks))
    return out


def main():
    root = pathlib.Path(__file__).resolve().parents[2]
    ranks = load_ranks(root / "data/vocab/cl100k_base.tiktoken")
    cases = [{"text": s, "ids": encode(s, ranks)} for s in SAMPLES]
    out = root / "tests/data/bpe_oracle.json"
    out.write_text(json.dumps(cases, ensure_ascii=False, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {len(cases)} cases to {out}", file=sys.stderr)


if __name__ == "__main__":
    main()
