"""Run a complete miniature benchmark and write its report files.

This drives the same harness the CLI uses: a custom protocol over a
synthetic corpus, every feature/classifier cell, a best-2 fusion pass,
and JSON plus CSV reports.

    python3 demos/benchmark_session.py --out-dir reports
"""

import argparse
from pathlib import Path

from facebench.dataset import SplitRatio, generate_synthetic
from facebench.experiments import (
    ExperimentConfig,
    Protocol,
    default_fusion_specs,
    emit_report,
    run_experiment,
)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="reports")
    ap.add_argument("--trials", type=int, default=2)
    args = ap.parse_args(argv)

    data = generate_synthetic(7, 7, images_per_subject=6, intra_noise=40.0, seed=4)
    cfg = ExperimentConfig(
        protocol=Protocol.CUSTOM,
        n_female=7,
        n_male=7,
        images_per_subject=6,
        ratio=SplitRatio.R5_5,
        n_components=13,
        n_trials=args.trials,
        fusion_specs=default_fusion_specs(ks=(2,)),
        seed=4,
    )
    report = run_experiment(data, cfg)

    section = report.sections[0]
    print(f"section {section.name}: {len(section.cells)} cells, "
          f"{len(section.fusion_rows)} fusion rows")
    print("\nfeature  classifier  accuracy")
    for cell in section.cells:
        print(f"{cell.feature:7s}  {cell.classifier:10s}  {cell.accuracy:8.2f}")
    print("\nfeature  scheme        constituents  accuracy  improved")
    for row in section.fusion_rows:
        mets = "+".join(str(m) for m in row.metrics)
        print(f"{row.feature:7s}  {row.scheme:12s}  {mets:12s}  "
              f"{row.accuracy:8.2f}  {'yes' if row.improved else 'no'}")

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    emit_report(report, "json", out / "session.json")
    emit_report(report, "csv", out / "session.csv")
    print(f"\nwrote {out / 'session.json'} and {out / 'session.csv'}")


if __name__ == "__main__":
    main()
