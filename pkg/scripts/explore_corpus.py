#!/usr/bin/env python3
"""Explore every corpus system and summarize verdicts.

Usage: python scripts/explore_corpus.py [--dot OUTDIR]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from csll.parser import parse_program
from csll.printer import pretty_process
from csll.runtime import check_fair_termination
from csll.typecheck import check_program

CORPUS = Path(__file__).resolve().parents[1] / "corpus"


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--dot", metavar="OUTDIR", default=None,
                    help="also write reduction graphs as DOT files")
    ap.add_argument("--max-states", type=int, default=5000)
    args = ap.parse_args()

    for path in sorted(CORPUS.glob("*.csll")):
        prog = parse_program(path.read_text(), str(path))
        rep = check_program(prog)
        verdicts = {r.name: (r.validity.verdict if r.validity else "type-error")
                    for r in rep.defs}
        print(f"== {path.name}")
        print(f"   checking: {verdicts}")
        if prog.main is None:
            continue
        ft = check_fair_termination(prog.main.body, prog,
                                    max_states=args.max_states, max_depth=args.max_states)
        g = ft.graph
        normals = sorted(g.normal_forms())
        print(f"   states={len(g.states)} edges={sum(len(v) for v in g.edges.values())} "
              f"normal-forms={len(normals)} fair-termination={ft.verdict}"
              + (" (partial)" if g.partial else ""))
        for sid in normals:
            print(f"     terminal: {pretty_process(g.states[sid])}")
        if args.dot:
            out = Path(args.dot) / f"{path.stem}.dot"
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(g.to_dot())
            print(f"   wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
