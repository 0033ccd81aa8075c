"""Walkthrough: six base clusterings to a weighted consensus matrix to stable clusters.

The scoring rule, spelled out on two real pairs at the end: R sums attribute
weights (the core activity counts double) over attributes where two instances
share a non-noise cluster label; same-date pairs pay a penalty of 2; pairs
with final score S >= 4 connect, and clusters are the connected components.
"""

import numpy as np

from layermind.config import ATTRIBUTES, ConsensusConfig
from layermind.consensus import base_cluster_all, build_consensus, form_clusters
from layermind.embedding import HashingEmbedder
from layermind.fixtures import demo_corpus_jsonl
from layermind.ingestion import extract_corpus, ingest_jsonl
from layermind.llm import ScriptedClient
from layermind.scripted import ScriptedBackend

corpus = ingest_jsonl("demo", demo_corpus_jsonl())
instances, _ = extract_corpus(corpus, ScriptedClient(ScriptedBackend()), 4)
config = ConsensusConfig()  # weights what=2/others=1, penalty 2, tau 4, 25 dims

# One base clustering per attribute: embed that attribute's text, reduce to
# 25 components, density-cluster; outliers get the noise label (-1).
assignments = base_cluster_all(instances, config, HashingEmbedder())
for assignment in assignments:
    labels = list(assignment.labels.values())
    k = len({l for l in labels if l >= 0})
    noise = sum(1 for l in labels if l < 0)
    print(f"{assignment.attribute:>6}: {k:2d} clusters, {noise:2d} noise")

dates = {i.id: i.date for i in instances}
matrix = build_consensus(assignments, dates, config)
print(f"\nconsensus over {len(matrix.instance_ids)} instances; "
      f"S in [{matrix.S.min()}, {matrix.S.max()}]")

clusters = form_clusters(matrix, config)
print(f"{len(clusters.clusters)} stable clusters, {len(clusters.unclustered)} unclustered")
by_id = {i.id: i for i in instances}
for cluster in clusters.clusters[:4]:
    first = by_id[cluster[0]]
    print(f"  size {len(cluster)}: {first.what[:60]}")
print("  ...")
print("unclustered one-offs:", [by_id[i].what[:40] for i in clusters.unclustered])

# The rule on two concrete pairs.
i, j = matrix.index_of(clusters.clusters[0][0]), matrix.index_of(clusters.clusters[0][1])
print(f"\nwithin-cluster pair: R={matrix.R[i, j]}, P={matrix.P[i, j]}, "
      f"S={matrix.S[i, j]} (>= tau={config.tau}, connected)")
a, b = matrix.index_of(clusters.clusters[0][0]), matrix.index_of(clusters.clusters[1][0])
print(f"cross-cluster pair:  R={matrix.R[a, b]}, P={matrix.P[a, b]}, "
      f"S={matrix.S[a, b]} (< tau, separate)")

# Same-date pairs need R >= tau + 2 to connect: the penalty biases the
# model toward patterns that recur across days.
same_date = (np.array([dates[x].toordinal() for x in matrix.instance_ids])[:, None]
             == np.array([dates[x].toordinal() for x in matrix.instance_ids])[None, :])
np.fill_diagonal(same_date, False)
connected_same_date = int(((matrix.S >= config.tau) & same_date).sum()) // 2
print(f"\nsame-date pairs connected despite the penalty: {connected_same_date}")
