#!/usr/bin/env python3
"""Line-protocol segmenter backed by fugashi/MeCab.

Reads one sentence per line on stdin and answers with `surface<TAB>lemma<TAB>pos`
lines followed by `EOS`. Pass a dictionary directory with -d to pin a UniDic release.
"""
import argparse
import re
import sys

import fugashi

GLOSS = re.compile(r"-[A-Za-z][A-Za-z0-9_ ]*$")


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("-d", "--dicdir", help="MeCab dictionary directory")
    args = ap.parse_args()
    tagger = fugashi.GenericTagger(f"-r /dev/null -d {args.dicdir}" if args.dicdir else "")
    for line in sys.stdin:
        for w in tagger(line.rstrip("\n")):
            feats = w.feature_raw.split(",")
            lemma = feats[7] if len(feats) > 7 and feats[7] not in ("", "*") else w.surface
            lemma = GLOSS.sub("", lemma) or w.surface
            print(f"{w.surface}\t{lemma}\t{feats[0]}")
        print("EOS", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
