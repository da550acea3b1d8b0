"""Wall-clock scaling of SEAL inference against total edge count on a synthetic ladder.

    python3 scripts/run_scaling.py --ladder 10,20,40,80,160,320
"""
import argparse

from circuitlink import dgcnn
from circuitlink.datagen import GenConfig, generate_dataset
from circuitlink.evaluation import scaling_benchmark
from circuitlink.graph import ClassVocabulary
from circuitlink.seal import SealModel, build_graphs, labeled_subgraphs, seal_inference
from circuitlink.subgraph import ExtractConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ladder", default="10,20,40,80,160")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--checkpoint", help="trained model; untrained weights cost the same to run")
    args = ap.parse_args()

    counts = [int(c) for c in args.ladder.split(",")]
    vocab = ClassVocabulary(GenConfig().labels())
    ladder = [build_graphs(generate_dataset(GenConfig(seed=args.seed + 1000 * i), c), vocab) for i, c in enumerate(counts)]
    if args.checkpoint:
        model = SealModel.load(args.checkpoint)
    else:
        extract = ExtractConfig(seed=args.seed)
        subs = labeled_subgraphs(ladder[0], extract)
        k = dgcnn.sortpool_size([s.num_nodes for s in subs])
        model = SealModel(dgcnn.init_params(subs[0].features.shape[1], k, args.seed), extract, vocab)

    result = scaling_benchmark(lambda graphs: seal_inference(model, graphs), ladder)
    print(f"{'circuits':>8} {'edges':>8} {'time (s)':>10} {'peak RSS (MB)':>14} {'VRAM':>5}")
    for c, p in zip(counts, result["points"]):
        print(f"{c:>8} {p['total_edges']:>8} {p['time_s']:>10.4f} {p['ram_bytes'] / 2**20:>14.1f} {p['vram']:>5}")
    print(f"fitted log-log slope: {result['fitted_slope']:.3f}")


if __name__ == "__main__":
    main()
