#!/usr/bin/env python3
# Copyright 2026 The qfuse Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes the 50-passage toy dataset under data/toy.

Output is a pure function of SEED. Query texts are chosen so that the hash
provider (which only matches identical strings) still separates strategies:
some queries repeat a synthetic question, some repeat a passage sentence,
the rest match nothing.
"""

import argparse
import json
import pathlib
import random

SEED = 20240611

SUBJECTS = [
    "coral bleaching", "vitamin D", "gut microbiota", "solar flares", "lithium batteries",
    "sleep apnea", "crop rotation", "glacier retreat", "type 2 diabetes", "antibiotic resistance",
    "urban heat islands", "honeybee decline", "ocean acidification", "migraine", "graphene",
    "malaria vaccines", "wind turbines", "peatlands", "dark matter", "statin therapy",
    "wildfire smoke", "soil erosion", "hearing loss", "quantum dots", "iron deficiency",
    "permafrost", "asthma", "desalination", "tidal energy", "obesity",
    "CRISPR screening", "air pollution", "sea ice", "gene therapy", "hypertension",
    "microplastics", "heat waves", "biofilms", "volcanic ash", "osteoporosis",
    "nitrogen runoff", "exoplanets", "influenza", "mangroves", "kidney stones",
    "perovskite cells", "drought", "dementia", "algal blooms", "zinc supplements",
]

OPENERS = [
    "{S} has been studied for decades.",
    "Researchers continue to debate {s}.",
    "Recent work on {s} reports mixed findings.",
    "The study of {s} spans several disciplines.",
]
MIDDLES = [
    "Dr. Smith et al. measured its effects in a cohort of {n} participants.",
    "Field data, e.g. from {n} sites, suggest a seasonal pattern.",
    "Estimates vary by region and by measurement method.",
    "A follow-up over {n} months found a modest effect.",
    "Models predict changes of roughly {n} percent by 2050.",
    "The mechanism is not fully understood.",
    "Several trials were stopped early for futility.",
]
CLOSERS = [
    "Further research is needed!",
    "Is the effect causal? Larger trials may tell.",
    "Policy makers have taken note.",
    "These results remain preliminary.",
]
QUESTIONS = [
    "what causes {s}?",
    "how is {s} measured?",
    "does {s} vary by region?",
    "what are the risks of {s}?",
]


def make(out_dir: pathlib.Path) -> None:
    rng = random.Random(SEED)
    corpus, fixture, queries, qrels = [], [], [], []

    for i, subject in enumerate(SUBJECTS):
        pid = f"doc{i:03d}"
        n_mid = rng.randint(1, 3)
        sentences = [rng.choice(OPENERS).format(S=subject[0].upper() + subject[1:], s=subject)]
        for tmpl in rng.sample(MIDDLES, n_mid):
            sentences.append(tmpl.format(n=rng.randint(12, 900)))
        sentences.append(rng.choice(CLOSERS))
        title = subject.title() if i % 3 else ""
        corpus.append({"_id": pid, "title": title, "text": " ".join(sentences)})

        question = rng.choice(QUESTIONS).format(s=subject)
        if i % 10 == 7:
            question = question.rstrip("?")  # fails the question filter
        n_kw = 2 if i % 10 != 4 else 6  # 6 keywords fail against <= 5 sentences
        words = [subject] + [w for w in ("trend", "risk", "cohort", "method", "region", "model")][: n_kw - 1]
        keywords = ", ".join(words)
        fixture.append({
            "passage_id": pid, "kind": "question", "text": question,
            "gen_prob": round(rng.uniform(0.05, 0.95), 4), "passed_filter": False,
            "bertscore_f1": round(rng.uniform(0.55, 0.95), 4),
        })
        if i % 5 == 2:
            fixture.append({
                "passage_id": pid, "kind": "question", "text": f"why does {subject} matter?",
                "gen_prob": round(rng.uniform(0.05, 0.95), 4), "passed_filter": False,
                "bertscore_f1": round(rng.uniform(0.55, 0.95), 4),
            })
        fixture.append({
            "passage_id": pid, "kind": "keywords", "text": keywords,
            "gen_prob": round(rng.uniform(0.05, 0.95), 4), "passed_filter": False,
            "bertscore_f1": round(rng.uniform(0.55, 0.95), 4),
        })

        # Queries: a third echo the synthetic question, a third echo a passage
        # sentence, a third are unseen paraphrases.
        if i % 5 == 0 or i % 5 == 3:
            qid = f"q{i:03d}"
            mode = (i // 5) % 3
            if mode == 0:
                text = question
            elif mode == 1:
                text = sentences[0]
            else:
                text = f"recent evidence about {subject}"
            queries.append({"_id": qid, "text": text})
            qrels.append((qid, pid, 2))
            neighbour = f"doc{(i + 1) % len(SUBJECTS):03d}"
            if i % 2 == 0:
                qrels.append((qid, neighbour, 1))
            qrels.append((qid, f"doc{(i + 25) % len(SUBJECTS):03d}", 0))

    # One query judged only non-relevant: evaluation must skip it.
    queries.append({"_id": "q900", "text": "unrelated question about nothing?"})
    qrels.append(("q900", "doc010", 0))

    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "corpus.jsonl", "w", encoding="utf-8") as f:
        for rec in corpus:
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")
    with open(out_dir / "queries.jsonl", "w", encoding="utf-8") as f:
        for rec in queries:
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")
    with open(out_dir / "synthetic_fixture.jsonl", "w", encoding="utf-8") as f:
        for rec in fixture:
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")
    with open(out_dir / "qrels.tsv", "w", encoding="utf-8") as f:
        f.write("query-id\tcorpus-id\tscore\n")
        for q, p, g in qrels:
            f.write(f"{q}\t{p}\t{g}\n")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    root = pathlib.Path(__file__).resolve().parent.parent
    parser.add_argument("--out", type=pathlib.Path, default=root / "data" / "toy")
    make(parser.parse_args().out)


if __name__ == "__main__":
    main()
