"""Writes fixtures/annotation/ratings_oracle.json: 3 annotators x 4 questions
x 2 conditions x 3 axes of scores plus the expected report cells, recomputed
with pandas and scipy."""
import json
import pathlib

import numpy as np
import pandas as pd
from scipy import stats

rng = np.random.default_rng(424242)
questions = {"q1": "glaucoma", "q2": "glaucoma", "q3": "retina", "q4": "retina"}
rows = []
for ann in ["ann-a", "ann-b", "ann-c"]:
    for qid, topic in questions.items():
        for cond in ["no_rag", "rag"]:
            for axis in ["accuracy", "completeness", "attribution"]:
                bump = 1 if cond == "rag" and axis == "attribution" else 0
                score = int(min(5, rng.integers(1, 6) + bump))
                rows.append(dict(annotator_id=ann, question_id=qid, topic=topic, condition=cond, axis=axis,
                                 score=score))
df = pd.DataFrame(rows)

cells = []
for label, part in [("overall", df)] + [(t, g) for t, g in sorted(df.groupby("topic"))]:
    for (axis, cond), g in part.groupby(["axis", "condition"]):
        cells.append(dict(row=label, axis=axis, condition=cond, mean=float(g.score.mean()), n=int(len(g))))

comparisons = []
for label, part in [("overall", df)] + [(t, g) for t, g in sorted(df.groupby("topic"))]:
    for axis, g in part.groupby("axis"):
        per_q = g.groupby(["question_id", "condition"]).score.mean().unstack()
        res = stats.ttest_rel(per_q["rag"], per_q["no_rag"])
        comparisons.append(dict(row=label, axis=axis, n_pairs=int(len(per_q)),
                                mean_diff=float((per_q["rag"] - per_q["no_rag"]).mean()),
                                p_value=None if np.isnan(res.pvalue) else float(res.pvalue)))

out = dict(ratings=rows, cells=cells, comparisons=comparisons)
path = pathlib.Path(__file__).resolve().parent.parent / "fixtures" / "annotation" / "ratings_oracle.json"
path.write_text(json.dumps(out, indent=1) + "\n")
print(len(cells), "cells,", len(comparisons), "comparisons")
