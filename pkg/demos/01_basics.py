"""First steps: parse a grammar, load a graph, and ask which vertex pairs
are connected by a path whose labels form a sentence of the language.

Run from the repository root:  python3 demos/01_basics.py
"""

from cflr import VariantFlags, ensure_wcnf, load_graph, oracle_solve, parse_grammar, solve

# A bracket language: every 'a' must be closed by a matching 'b'.
grammar = ensure_wcnf(parse_grammar("S -> a S b | a b"))
print("normalized productions:")
for p in grammar.productions:
    print("   ", p)

# A path that opens two brackets and closes both:
#     0 -a-> 1 -a-> 2 -b-> 3 -b-> 4
graph = load_graph(
    """
    0 a 1
    1 a 2
    2 b 3
    3 b 4
    """,
    grammar,
)
print(f"\ngraph: {graph.vertex_count} vertices, {len(graph.edges)} edges")

result = solve(graph, grammar, VariantFlags.named("ma1"))
print(f"\nsolved in {result.iterations} iterations")
print("S-pairs (balanced paths):", result.matrices.pairs(grammar.start))
# (1, 3) is the inner bracket pair, (0, 4) wraps the whole path.

# The engine agrees with a brute-force worklist closure:
reference = {(s.name(), i, j) for s, i, j in oracle_solve(graph, grammar)}
engine = {(s.name(), i, j) for s, i, j in result.triples()}
assert engine == reference
print("\nbrute-force oracle agrees on all", len(reference), "facts")
