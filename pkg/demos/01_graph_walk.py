"""A first look at the user-item-attribute graph and its walk primitives.

Builds the small worked example by hand, then shows the queries the
conversational walk is made of: which items carry an attribute, which
attributes sit on an item, which attributes are one hop away through a
shared item or user, and how the candidate pool shrinks as attributes are
confirmed.
"""

from pathrec import Relation, VertexKind, build_graph, candidate_items

A, I, U = VertexKind.ATTRIBUTE, VertexKind.ITEM, VertexKind.USER

# One user, three items, three attributes.  Item v1 is pop+dance, v2 is
# pop+electronic, v3 is electronic only; the user has listened to v1.
edges = [
    (Relation.BELONG_TO, (I, 0), (A, 0)),   # v1 - pop
    (Relation.BELONG_TO, (I, 0), (A, 1)),   # v1 - dance
    (Relation.BELONG_TO, (I, 1), (A, 0)),   # v2 - pop
    (Relation.BELONG_TO, (I, 1), (A, 2)),   # v2 - electronic
    (Relation.BELONG_TO, (I, 2), (A, 2)),   # v3 - electronic
    (Relation.INTERACT, (U, 0), (I, 0)),    # u1 listened to v1
]
names = {0: "pop", 1: "dance", 2: "electronic"}

g = build_graph((1, 3, 3), edges)
print(f"graph: {g.user_count} user, {g.item_count} items, "
      f"{g.attribute_count} attributes, {len(g.edges)} edges")

print("\n-- neighborhoods --")
for p in range(3):
    print(f"items with {names[p]!r}: {g.items_with_attribute(p)}")
for v in range(3):
    print(f"attributes of item {v}: "
          f"{[names[p] for p in g.attributes_of_item(v)]}")

print("\n-- adjacency: one shared item or user away --")
for p in range(3):
    adj = [names[q] for q in g.adjacent_attributes(p)]
    print(f"adjacent to {names[p]!r}: {adj}")

print("\n-- candidate pool under confirmed attributes --")
print("confirmed {pop}:", candidate_items(g, [0]))
print("confirmed {pop, electronic}:", candidate_items(g, [0, 2]))
print("confirmed {dance, electronic}:", candidate_items(g, [1, 2]), "(nobody has both)")
