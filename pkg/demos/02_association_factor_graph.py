# Drop a network, associate UEs with APs two ways, and inspect the
# AP-UE factor graph with its independent components.
#
# Run: python demos/02_association_factor_graph.py

import numpy as np

from uccfsim.channel import DoubleSlope, LargeScaleModel, realize_channels
from uccfsim.topology import (associate_distance, associate_large_scale,
                              build_factor_graph, generate_topology)

topo = generate_topology(num_aps=9, num_ues=6, area_size=400.0,
                         layout="grid", rng=7)
model = LargeScaleModel(DoubleSlope(2.0, 3.0, 80.0), shadowing_std_db=4.0)
real = realize_channels(topo, model, num_subcarriers=8, num_taps=2, rng=7)

print("=== distance-based association (radius 120 m) ===")
assoc_d = associate_distance(topo, radius=120.0)
for k, aps in enumerate(assoc_d.ap_sets):
    print(f"  UE {k}: APs {list(aps)}")

print("\n=== large-scale association (best 2 APs by gain) ===")
assoc_g = associate_large_scale(real.gains, max_count=2)
for k, aps in enumerate(assoc_g.ap_sets):
    gains_db = [f"{10 * np.log10(real.gains[m, k]):.1f} dB" for m in aps]
    print(f"  UE {k}: APs {list(aps)}  ({', '.join(gains_db)})")

print("\n=== factor graph of the gain-based association ===")
graph = build_factor_graph(assoc_g)
print(f"{len(graph.edges)} edges, {len(graph.components)} independent components")
for i, (aps, ues) in enumerate(graph.components):
    print(f"  component {i}: APs {sorted(aps)}  UEs {sorted(ues)}")
if graph.idle_aps:
    print(f"  idle APs (no UEs, switchable off): {sorted(graph.idle_aps)}")
print("\nadjacent APs share at least one UE and will exchange messages")
for m, peers in sorted(graph.ap_adjacency.items()):
    if peers:
        print(f"  AP {m} <-> {sorted(peers)}")
