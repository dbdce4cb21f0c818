"""Smoke test for the qkdplan_py extension module.

Build it first:  pip install --no-build-isolation -e crates/python
"""

import json

import qkdplan_py as q


def main():
    edges = [
        ("a", "b", 10.0), ("b", "c", 4.0), ("c", "a", 7.0),
        ("c", "d", 12.0), ("d", "e", 9.0), ("e", "c", 5.0), ("b", "d", 2.0),
    ]
    net = q.Network(edges, demand=0.01)
    assert net.node_count == 5 and net.edge_count == 7
    assert q.Network.from_json(net.to_json()).edges() == net.edges()

    tree = q.plan_nn(net, start="a", max_len=3, seed=1)
    assert len(tree) == 4 and tree.method == "hqa"
    ring = q.plan_redundant(net, tree, max_len=3, seed=1)
    assert set(tree.edges) <= set(ring.edges)
    report = json.loads(q.evaluate(net, ring, failure=True))
    assert report["failure_analysis"]
    assert all(e["worst_failure_load_pct"] >= e["load_pct"] for e in report["edges"])

    runs = q.baseline_sa(net, seed=2, runs=2, restarts=2)
    assert len(runs) == 2 and runs[0].method == "simulated-annealing"
    heur = q.heuristic(net, start="a")
    assert q.Solution.from_json(net, heur.to_json()).edges == heur.edges

    assert q.edge_improvement(48, 28) == 41.67
    x, energy = q.solve_qubo([[-1.0, 2.0], [0.0, -1.0]])
    assert energy == -1.0 and sum(x) == 1

    ref = q.Network.reference(0)
    assert (ref.node_count, ref.edge_count) == (29, 48)

    try:
        q.Network([("a", "b", -1.0)])
    except ValueError:
        pass
    else:
        raise AssertionError("negative key rate accepted")

    print(f"ok: {tree!r}, {ring!r}, {heur!r}")


if __name__ == "__main__":
    main()
