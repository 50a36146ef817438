"""Figure rendering writes non-empty PNG files for every chart type."""

from __future__ import annotations

from sdgcn.ablation import AblationRow
from sdgcn.corpus import AspectSpan, SentenceInstance, dataset_stats
from sdgcn.figures import save_aspect_histogram, save_class_f1, save_layer_sweep, save_training_curves
from sdgcn.metrics import compute_metrics
from sdgcn.train import EpochLog

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _png_ok(path):
    data = path.read_bytes()
    return data.startswith(PNG_MAGIC) and len(data) > 1000


def _instances():
    return [
        SentenceInstance("s0", ("nice", "food"), (AspectSpan(1, 2, "positive", "food"),)),
        SentenceInstance(
            "s1",
            ("food", "and", "mood"),
            (AspectSpan(0, 1, "negative", "food"), AspectSpan(2, 3, "neutral", "mood")),
        ),
    ]


def test_aspect_histogram_file(tmp_path):
    stats = dataset_stats(_instances())
    out = tmp_path / "hist.png"
    returned = save_aspect_histogram(stats, out)
    assert returned == str(out)
    assert _png_ok(out)


def test_training_curves_file(tmp_path):
    logs = [
        EpochLog(1, 1.09, 0.4, 0.3),
        EpochLog(2, 0.82, 0.6, 0.5),
        EpochLog(3, 0.55, 0.8, 0.7),
    ]
    out = tmp_path / "curves.png"
    save_training_curves(logs, out)
    assert _png_ok(out)


def test_training_curves_without_eval_column(tmp_path):
    logs = [EpochLog(1, 1.0, None, None), EpochLog(2, 0.8, None, None)]
    out = tmp_path / "loss_only.png"
    save_training_curves(logs, out)
    assert _png_ok(out)


def test_layer_sweep_file(tmp_path):
    rows = [AblationRow(f"L={l}", 0.5 + 0.05 * l, 0.4 + 0.05 * l, 100 * l, l) for l in range(1, 5)]
    out = tmp_path / "sweep.png"
    save_layer_sweep(rows, out)
    assert _png_ok(out)


def test_variant_bars_file(tmp_path):
    from sdgcn.figures import save_variant_bars

    rows = [
        AblationRow("Att", 0.7, 0.6, 100, 2),
        AblationRow("Att+GCN", 0.75, 0.66, 150, 2),
        AblationRow("BiAtt", 0.78, 0.69, 160, 3),
        AblationRow("BiAtt+GCN", 0.82, 0.74, 210, 3),
    ]
    out = tmp_path / "grid.png"
    save_variant_bars(rows, out)
    assert _png_ok(out)


def test_class_f1_file(tmp_path):
    report = compute_metrics([0, 1, 2, 0], [0, 1, 1, 0])
    out = tmp_path / "f1.png"
    save_class_f1(report, out)
    assert _png_ok(out)
