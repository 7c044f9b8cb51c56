"""Train the SMO-based RBF SVM on face features and tune (C, gamma).

The grid here is deliberately tiny so the demo finishes in seconds;
pass --full-grid to search the complete published ladder instead.
"""

import argparse
import time

from facebench.classify import grid_search_svm, nn_classify, svm_predict, svm_train
from facebench.dataset import SplitRatio, generate_synthetic, split_train_test
from facebench.experiments import accuracy, preprocess_records
from facebench.features import fit_pca, project
from facebench.metrics import MetricKind, pairwise


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--full-grid", action="store_true")
    args = ap.parse_args(argv)

    data = generate_synthetic(6, 6, images_per_subject=8, intra_noise=50.0, seed=2)
    split = split_train_test(data, SplitRatio.R5_5, seed=2)
    Xtr, ytr, _ = preprocess_records(split.train)
    Xte, yte, _ = preprocess_records(split.test)

    model = fit_pca(Xtr, 10)
    Gtr, Gte = project(model, Xtr), project(model, Xte)

    if args.full_grid:
        kwargs = {}
    else:
        kwargs = {"c_grid": (1.0, 10.0, 100.0),
                  "gamma_grid": (0.01, 0.1, 1.0)}
    t0 = time.perf_counter()
    c, gamma = grid_search_svm(Gtr, ytr, n_folds=4, seed=2, **kwargs)
    print(f"grid search picked C={c:g}, gamma={gamma:g} "
          f"in {time.perf_counter() - t0:.1f}s")

    svm = svm_train(Gtr, ytr, c=c, gamma=gamma)
    svm_acc = accuracy(svm_predict(svm, Gte), yte)

    dm = pairwise(MetricKind.EUC, Gtr, Gte)
    nn_acc = accuracy(nn_classify(dm, ytr), yte)

    print(f"SVM accuracy: {svm_acc:.2f}")
    print(f"EUC nearest neighbor baseline: {nn_acc:.2f}")
    total_sv = sum(m.support_vectors.shape[0] for m in svm.machines)
    print(f"{len(svm.machines)} one-vs-rest machines, "
          f"{total_sv} support vectors total")


if __name__ == "__main__":
    main()
