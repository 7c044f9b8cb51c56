"""Walk through the eigenface pipeline on a small synthetic corpus.

Generates 16 subjects, preprocesses every image the same way the
benchmark harness does (alignment is skipped because synthetic images
are already canonical, then histogram equalization and flattening),
fits a PCA basis and looks at what the subspace captures.
"""

import numpy as np

from facebench.dataset import SplitRatio, generate_synthetic, split_train_test
from facebench.experiments import preprocess_records
from facebench.features import fit_pca, project


def main() -> None:
    data = generate_synthetic(8, 8, images_per_subject=6, intra_noise=20.0, seed=1)
    split = split_train_test(data, SplitRatio.R5_5, seed=1)
    X, labels, _ = preprocess_records(split.train)
    print(f"training matrix: {X.shape[0]} images x {X.shape[1]} pixels")

    model = fit_pca(X, 20)
    total = model.eigenvalues.sum()
    cum = np.cumsum(model.eigenvalues) / total
    print("\ncomponent  eigenvalue  cumulative variance")
    for i in (0, 1, 2, 3, 4, 9, 19):
        print(f"{i + 1:9d}  {model.eigenvalues[i]:10.1f}  {cum[i]:19.3f}")

    # Reconstruction error falls as the basis grows.
    print("\ncomponents  mean reconstruction error per image")
    for k in (1, 2, 5, 10, 20):
        m = fit_pca(X, k)
        Z = project(m, X)
        recon = Z @ m.basis.T + m.mean
        err = float(np.sqrt(np.mean((X - recon) ** 2)))
        print(f"{k:10d}  {err:10.2f}")

    # The leading coordinates separate subjects: compare spread between
    # subject means to the spread within one subject.
    Z = project(model, X)
    labels = np.asarray(labels)
    means = np.stack([Z[labels == s].mean(axis=0) for s in sorted(set(labels))])
    within = np.mean([Z[labels == s].std(axis=0)[0] for s in sorted(set(labels))])
    print(f"\nfirst coordinate: between-subject std {means[:, 0].std():.1f}, "
          f"mean within-subject std {within:.1f}")


if __name__ == "__main__":
    main()
