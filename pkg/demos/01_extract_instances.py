"""Walkthrough: journals in, atomic behavioral instances out.

Everything here runs offline: the deterministic scripted backend stands in
for the hosted model, so the exact same output appears on every run.
"""

from layermind.fixtures import demo_corpus_jsonl
from layermind.ingestion import extract_corpus, ingest_jsonl
from layermind.llm import ScriptedClient
from layermind.scripted import ScriptedBackend

# A corpus is JSON Lines: {"id", "user_id", "date": "YYYY-MM-DD", "text"}.
corpus = ingest_jsonl("demo", demo_corpus_jsonl())
print(f"ingested {len(corpus.entries)} entries ({len(corpus.rejections)} rejected)")
print("first entry:", corpus.entries[0].date, "—", corpus.entries[0].text[:96], "...")

# Extraction renders the extraction template per entry; each returned item
# becomes one instance tagged with the entry's date and id.
client = ScriptedClient(ScriptedBackend())
instances, failures = extract_corpus(corpus, client, max_inflight=4)
print(f"\nextracted {len(instances)} instances, {len(failures)} failed entries")

inst = instances[0]
print("\none instance, field by field:")
for name in ("id", "what", "when", "where", "who", "why", "how"):
    print(f"  {name:>6}: {getattr(inst, name)!r}")
print(f"  window: {inst.time_window}")
print(f"  source entry: {inst.journal_entry_id} on {inst.date}")

# Who may legitimately be empty (solo activities); what never is.
solo = sum(1 for i in instances if not i.who)
print(f"\n{solo} of {len(instances)} instances involve nobody but the user")
