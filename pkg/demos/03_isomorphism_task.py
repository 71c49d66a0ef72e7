# Telling isomorphism classes apart, structure only.
#
# The generator grows one connected seed graph, rewires it into several
# bases that all share the same degree sequence, then emits shuffled
# copies of each base. Every graph gets identical all-ones node
# features, so degree histograms and feature statistics are useless: a
# classifier can only win by reading structure. Each copy also records
# the permutation that produced it, so the whole dataset can be audited.

import numpy as np

from pinet import (
    GenParams,
    PiNetConfig,
    TrainConfig,
    evaluate,
    fit,
    forward,
    generate_iso_dataset,
    verify_provenance,
)

# 1. Generate: 3 classes x 8 copies of 12-node graphs, same degrees.
params = GenParams(n_nodes=12, classes=3, copies=8, edge_prob=0.3, seed=7)
ds, prov = generate_iso_dataset(params)
print(f"{len(ds)} graphs, {ds.class_count} classes, degree sequence {list(prov.degree_sequence)}")
print("provenance replays cleanly:", verify_provenance(ds, prov))

# 2. Split: a few copies of each class to train on, the rest held out.
rng = np.random.default_rng(0)
train_idx = []
for c in range(params.classes):
    members = [i for i, g in enumerate(ds.graphs) if g.label == c]
    train_idx.extend(rng.choice(members, size=5, replace=False).tolist())
train = [ds.graphs[i] for i in train_idx]
test = [g for i, g in enumerate(ds.graphs) if i not in set(train_idx)]

# 3. Train with the raw-adjacency corner (p=1, q=0). On graphs that
#    share a degree sequence the normalised corners and the learned
#    blend's flat 0.5 starting point wash out most of the signal, so the
#    unnormalised corner is the right tool here.
model = PiNetConfig(d=1, C=3, F0=32, F1=16, pq_mode="fixed", fixed_p=1.0, fixed_q=0.0, seed=0)
res = fit(train, TrainConfig(learning_rate=1e-3, batch_size=15, epochs=150, seed=0), model)
print(f"loss: {res.epoch_losses[0]:.2f} -> {res.epoch_losses[-1]:.4f}")
print(f"held-out accuracy: {evaluate(res.params, test):.3f}")

# 4. The model never sees node order: every shuffled copy of a base
#    graph gets the same probability vector as the base itself.
worst = 0.0
for g in test:
    base = prov.base_graph(g.label)
    gap = np.abs(forward(g, res.params).data - forward(base, res.params).data).max()
    worst = max(worst, gap)
print(f"max |prediction(copy) - prediction(base)| over the test set: {worst:.2e}")
