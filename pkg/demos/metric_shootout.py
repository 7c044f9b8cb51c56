"""Compare all eight nearest-neighbor distances on one identification split.

Run with --noise to make the problem harder and watch the ranking move.
"""

import argparse

from facebench.classify import nn_classify
from facebench.dataset import SplitRatio, generate_synthetic, split_train_test
from facebench.experiments import accuracy, preprocess_records
from facebench.features import fit_pca, project
from facebench.fusion import FusionKind, FusionScheme, fuse, minmax_normalize
from facebench.metrics import MetricKind, fit_metric_context, pairwise


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--noise", type=float, default=100.0, help="intra-subject pixel noise")
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--components", type=int, default=12)
    args = ap.parse_args(argv)

    data = generate_synthetic(10, 10, images_per_subject=6, intra_noise=args.noise,
                              seed=args.seed)
    split = split_train_test(data, SplitRatio.R5_5, seed=args.seed)
    Xtr, ytr, _ = preprocess_records(split.train)
    Xte, yte, ids = preprocess_records(split.test)

    model = fit_pca(Xtr, args.components)
    Gtr, Gte = project(model, Xtr), project(model, Xte)
    ctx = fit_metric_context(Gtr)

    print(f"{len(yte)} probes, {len(ytr)} gallery images, "
          f"{args.components} components, noise {args.noise:g}\n")
    print("metric  accuracy")
    results = {}
    for kind in MetricKind:
        dm = pairwise(kind, Gtr, Gte, ctx if kind is MetricKind.MC else None,
                      probe_ids=ids)
        preds = nn_classify(dm, ytr)
        acc = accuracy(preds, yte)
        results[kind] = (acc, dm)
        print(f"{kind.name:6s}  {acc:7.2f}")

    # Average two mid-pack metrics with different failure modes after
    # min-max normalization; the combination can beat both constituents
    # because they misrank different probes.
    pair = (MetricKind.EUC, MetricKind.CHEB)
    fused = fuse([minmax_normalize(results[k][1]) for k in pair],
                 FusionScheme(FusionKind.AVG))
    acc = accuracy(nn_classify(fused, ytr), yte)
    print(f"\nfused {'+'.join(k.name for k in pair)} (AVG): {acc:.2f}")


if __name__ == "__main__":
    main()
