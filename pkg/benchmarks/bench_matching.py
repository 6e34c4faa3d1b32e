"""Time the compiled matching kernel against the pure-Python one on circuit-level syndromes.

    python3 benchmarks/bench_matching.py --d 5 7 --shots 2000
"""

import argparse
import time

import numpy as np

from compassqec import _kernels_py
from compassqec.circuit import build_memory_circuit
from compassqec.codes import make_code
from compassqec.dem import decompose_hyperedges, extract_dem
from compassqec.frames import simulate
from compassqec.matching import to_matching_graph
from compassqec.noise import NoiseParams, hbd_channels

try:
    from compassqec import _kernels
except ImportError:
    _kernels = None


def _matcher(module, graph):
    indptr, adj_node, adj_edge = graph.adjacency()
    return module.Matcher(indptr, adj_node, adj_edge, graph.eu, graph.ev, np.abs(graph.weights), graph.boundary)


def _time(matcher, syndromes):
    out = []
    t0 = time.perf_counter()
    for defects in syndromes:
        out.append(matcher.match(defects))
    return time.perf_counter() - t0, out


def run(d, ell, p, eta, shots, seed):
    circuit = build_memory_circuit(make_code(d, ell), "Z", d, hbd_channels(NoiseParams(p, eta)))
    graph = to_matching_graph(decompose_hyperedges(extract_dem(circuit)))
    events = simulate(circuit, shots, seed=seed).detection_events
    syndromes = [np.flatnonzero(row).tolist() for row in events]
    rows = {}
    for name, module in (("python", _kernels_py), ("compiled", _kernels)):
        if module is None:
            continue
        elapsed, out = _time(_matcher(module, graph), syndromes)
        rows[name] = (elapsed, out)
    if len(rows) == 2:
        a, b = rows["python"][1], rows["compiled"][1]
        # equal weight is the contract; pairings may differ on exact ties
        assert all(abs(x[0] - y[0]) <= 1e-9 * max(1.0, abs(x[0])) for x, y in zip(a, b))
    mean_defects = float(np.mean([len(s) for s in syndromes]))
    for name, (elapsed, _) in rows.items():
        print(f"d={d:<3} ell={ell} p={p:<6} {name:<9} {1e6 * elapsed / shots:9.1f} us/shot"
              f"   ({mean_defects:.1f} defects/shot)")
    if len(rows) == 2:
        print(f"{'':22}speedup {rows['python'][0] / rows['compiled'][0]:.1f}x")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, nargs="+", default=[5, 7])
    ap.add_argument("--ell", type=int, default=2)
    ap.add_argument("--p", type=float, default=0.008)
    ap.add_argument("--eta", type=float, default=10.0)
    ap.add_argument("--shots", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled kernel not built; timing the pure-Python kernel only")
    for d in args.d:
        run(d, args.ell, args.p, args.eta, args.shots, args.seed)


if __name__ == "__main__":
    main()
