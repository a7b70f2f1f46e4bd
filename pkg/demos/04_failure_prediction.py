"""Train and evaluate failure predictors with the full protocol.

Feature rows get fails-within-N labels; folds are grouped by drive ID so
no drive leaks between training and testing; only the training folds are
undersampled to 1:1. Compares the three from-scratch classifiers and
sweeps the lookahead window.
"""

import drivelife as dl
from drivelife import featurize, lifecycle
from drivelife.evaluation import ModelSpec, cross_validated_eval, lookahead_sweep
from drivelife.learners import ForestParams, TreeParams

config = dl.SynthConfig(
    family="ssd", n_drives=900, horizon_days=365,
    models={"MLC-A": 0.12, "MLC-B": 0.12},
    bursts=(dl.BurstSpec(kind="uncorrectable", mean=6.0, days=2,
                         probability=0.8),),
    seed=5,
)
fleet, _ = dl.generate_fleet(config)
failures = lifecycle.detect_failures(fleet)
periods = lifecycle.extract_operational_periods(fleet, failures)
feats = featurize.make_features(fleet)
print(f"{feats.n_rows} drive-days, {len(feats.names)} features, "
      f"{len(failures)} failures")


def build(lookahead):
    return featurize.label_lookahead(feats, failures, lookahead, periods)


specs = {
    "random forest": ModelSpec("rf", forest=ForestParams(n_trees=60)),
    "decision tree": ModelSpec("tree", tree=TreeParams(max_depth=8)),
    "logistic reg.": ModelSpec("logreg", l2=1e-3, max_iter=300),
}
print("\ncross-validated AUROC at N=0 (mean +- stdev across 5 folds):")
examples = build(0)
print(f"  ({examples.n_positive} positive of {examples.n} examples before "
      "undersampling)")
for name, spec in specs.items():
    report = cross_validated_eval(examples, spec, k=5, seed=3)
    print(f"  {name}: {report.mean_auroc:.3f} +- {report.std_auroc:.3f}")

print("\nrandom-forest AUROC vs lookahead window N:")
reports = lookahead_sweep(build, [0, 1, 2, 7],
                          specs["random forest"], k=5, seed=3)
for n, report in reports.items():
    print(f"  N={n}: {report.mean_auroc:.3f} +- {report.std_auroc:.3f}")
print("\n(the planted burst covers the last 2 days, so accuracy decays as the"
      "\n window outgrows it)")
