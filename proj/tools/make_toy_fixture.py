#!/usr/bin/env python3
"""Writes the bundled toy fixture (fixtures/toy by default).

Daily drought mentions drive the wheat_price target two days later:
    y_t = 0.5 y_{t-1} + 1.0 d_{t-2} + N(0, 0.3^2)
where d_t is the number of documents mentioning "drought" on day t. Every
other word either co-occurs with drought only part of the time or is noise,
so `score` ranks drought first.
"""

import argparse
import datetime as dt
import json
import random
from pathlib import Path

DAYS = 150
START = dt.date(2024, 1, 1)

DROUGHT = [
    "Drought causes crop failure across the plains.",
    "The drought worries farmers in the north.",
    "Officials discuss the drought at the council meeting.",
    "Another week of drought for the valley.",
    "Drought causes crop failure near the river.",
    "Reservoir levels fall as the drought continues.",
]
FILLER = [
    "The local team wins the match at home.",
    "A new phone model is released today.",
    "Traffic is slow on the main road this morning.",
    "The museum opens a new exhibit on ships.",
    "Heavy rain causes flooding in the old town.",
    "Fuel cost raises transport cost for shops.",
    "The festival attracts large crowds downtown.",
    "Students return to school after the break.",
    "A good harvest makes farmers happy this year.",
    "Market stalls sell fresh bread and cheese.",
]
SOURCES = ["news", "tweet", "blog"]

TUPLES = [
    ("drought", "causes", "Causation", "crop failure", 3),
    ("crop failure", "leads to", "Causation", "wheat shortage", 2),
    ("wheat shortage", "raises", "Cause_change_of_position_on_a_scale", "wheat price", 2),
    ("heavy rain", "causes", "Causation", "flooding", 2),
    ("flooding", "leads to", "Causation", "crop failure", 1),
    ("fuel cost", "raises", "Cause_change_of_position_on_a_scale", "transport cost", 2),
    ("transport cost", "raises", "Cause_change_of_position_on_a_scale", "wheat price", 1),
    ("festival", "attracts", "Cause_motion", "crowds", 1),
    ("crowds", "cause", "Causation", "traffic", 1),
    ("good harvest", "makes", "Causation", "farmers happy", 1),
    ("heat wave", "causes", "Causation", "drought", 1),
    ("pests", "cause", "Causation", "crop failure", 1),
]

CONFIG = """\
# Toy pipeline: drought mentions lead the wheat price by two days.
[run]
seed = 7

[paths]
corpus = corpus.jsonl
targets = wheat_price.csv
topics = topics.tsv
lexicon_positive = positive.txt
lexicon_negative = negative.txt
tuples = tuples.tsv
aliases = aliases.tsv
kb_edges = kb_edges.tsv
out_dir = out

[text]
min_freq = 5

[granger]
top_k = 5

[reasoning]
epsilon = 0.1
d_max = 3

[train]
epochs = 120
batch_size = 4
learning_rate = 0.02
hidden = 24
embed = 16

[backtest]
window = 30
stride = 10
n = 2
"""


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "fixtures" / "toy"))
    ap.add_argument("--seed", type=int, default=20240101)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(args.seed)

    drought = [rng.randint(0, 4) for _ in range(DAYS)]
    docs = []
    for t in range(DAYS):
        day = (START + dt.timedelta(days=t)).isoformat()
        texts = [rng.choice(DROUGHT) for _ in range(drought[t])]
        texts += [rng.choice(FILLER) for _ in range(rng.randint(2, 5))]
        rng.shuffle(texts)
        for text in texts:
            docs.append({"date": day, "source": rng.choice(SOURCES), "text": text})
    with open(out / "corpus.jsonl", "w", newline="\n") as f:
        for d in docs:
            f.write(json.dumps(d, sort_keys=True) + "\n")

    y = [0.0] * DAYS
    for t in range(DAYS):
        prev = y[t - 1] if t >= 1 else 0.0
        lead = drought[t - 2] if t >= 2 else 0
        y[t] = 0.5 * prev + 1.0 * lead + rng.gauss(0.0, 0.3)
    with open(out / "wheat_price.csv", "w", newline="\n") as f:
        f.write("date,value\n")
        for t in range(DAYS):
            f.write(f"{(START + dt.timedelta(days=t)).isoformat()},{y[t]:.6f}\n")

    with open(out / "tuples.tsv", "w", newline="\n") as f:
        f.write("cause\trelation\tframe\teffect\tweight\tprovenance\n")
        for c, r, fr, e, w in TUPLES:
            f.write(f"{c}\t{r}\t{fr}\t{e}\t{w}\tfixture\n")

    (out / "topics.tsv").write_text(
        "weather\tdrought,rain,flooding,dry,heat\n"
        "farming\tcrop,farmers,harvest,wheat,plains\n"
        "city\ttraffic,festival,museum,school,market\n"
    )
    (out / "positive.txt").write_text("good\nhappy\nfresh\nwins\nnew\n")
    (out / "negative.txt").write_text("failure\nworries\nslow\nfall\nflooding\n")
    (out / "aliases.tsv").write_text(
        "q_drought\tdrought,dry spell\n"
        "q_wheat\twheat price,wheat shortage\n"
        "q_flood\tflooding\n"
    )
    (out / "kb_edges.tsv").write_text("q_drought\tq_wheat\nq_flood\tq_drought\n")
    (out / "config.ini").write_text(CONFIG)


if __name__ == "__main__":
    main()
