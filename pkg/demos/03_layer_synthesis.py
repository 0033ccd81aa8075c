"""Walkthrough: clusters to patterns (L1), then dimension-guided layers L2-L4.

Shows the whole construction pass plus the two structural reads that make
the result inspectable: in-degree stats per layer pair and evidence tracing
from an abstract node all the way down to dated journal events.
"""

from layermind.abstraction import build_higher_layers
from layermind.config import AbstractionConfig, ConsensusConfig
from layermind.consensus import base_cluster_all, build_consensus, form_clusters, synthesize_l1
from layermind.embedding import HashingEmbedder
from layermind.fixtures import demo_corpus_jsonl
from layermind.graph.model import LayerTag, LayeredGraph, next_node_id
from layermind.ingestion import extract_corpus, ingest_jsonl
from layermind.llm import ScriptedClient
from layermind.scripted import ScriptedBackend

client = ScriptedClient(ScriptedBackend())
corpus = ingest_jsonl("demo", demo_corpus_jsonl())
instances, _ = extract_corpus(corpus, client, 4)
config = ConsensusConfig()
assignments = base_cluster_all(instances, config, HashingEmbedder())
clusters = form_clusters(build_consensus(assignments, {i.id: i.date for i in instances}, config), config)

graph = LayeredGraph(user_id="demo").put_nodes(instances, phase_state="ingested")
by_id = {i.id: i for i in instances}

counter = [0]
def make_id():
    node_id = next_node_id(graph, LayerTag.L1, offset=counter[0])
    counter[0] += 1
    return node_id

l1_nodes = []
for cluster in clusters.clusters:
    l1_nodes.extend(synthesize_l1([by_id[i] for i in cluster], client, make_id))
graph = graph.put_nodes(l1_nodes, phase_state="l1_built")
print(f"L1: {len(l1_nodes)} behavioral patterns from {len(clusters.clusters)} clusters")
print("  e.g.", l1_nodes[0].title, "<-", list(l1_nodes[0].source_ids))

# One dimension-generation call covers L2/L3/L4; each layer then clusters the
# previous layer's titles under each of its dimensions and synthesizes 1-3
# insights per group.
graph = build_higher_layers(graph, AbstractionConfig(seed=7), client)
sizes = graph.layer_sizes()
print("\nlayer sizes:", {t.name: sizes[t] for t in LayerTag})
print("dimensions:")
for dim in sorted(graph.dimensions.values(), key=lambda d: d.id):
    print(f"  {dim.id} ({dim.layer.name}): {dim.title}")

print("\nlinkage density:")
for pair in ((LayerTag.L1, LayerTag.L2), (LayerTag.L2, LayerTag.L3), (LayerTag.L3, LayerTag.L4)):
    stats = graph.in_degree_stats(pair)
    print(f"  {pair[0].name}->{pair[1].name}: mean {stats.mean:.2f} "
          f"(sd {stats.sd:.2f}, total {stats.total_links})")

# Everything above L0 traces back to dated evidence.
top = graph.layer_nodes(LayerTag.L4)[0]
evidence = graph.trace_to_evidence(top.id)
print(f"\n{top.id} '{top.title}' rests on {len(evidence)} journal events, e.g.:")
for inst in evidence[:3]:
    print(f"  {inst.date} {inst.what[:64]}")
