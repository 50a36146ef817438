"""Bidirectional attention stages and the attention export format."""

from __future__ import annotations

import numpy as np
import pytest

from sdgcn import autodiff as ad
from sdgcn.attention import (
    aspect_to_context,
    avg_pool_context,
    context_to_aspect,
    format_attention,
    parse_attention,
    quantize_weights,
    register_attention,
)
from sdgcn.corpus import AspectSpan, SentenceInstance
from sdgcn.errors import FormatError, ShapeError
from sdgcn.gradcheck import grad_check
from sdgcn.params import ParamStore
from sdgcn.rng import RngStream


def _rand(label, shape, seed=0):
    return ad.constant(RngStream(seed, label).normal(0.0, 1.0, shape))


# ------------------------------------------------------------ avg pooling


def test_avg_pool_single_column_identity():
    h = _rand("h", (4, 1))
    assert np.allclose(avg_pool_context(h).value, h.value)


def test_avg_pool_opposite_columns_cancel():
    v = RngStream(1, "v").normal(0.0, 1.0, (4, 1))
    h = ad.constant(np.hstack([v, -v]))
    assert np.allclose(avg_pool_context(h).value, 0.0)


def test_avg_pool_matches_numpy_mean():
    h = _rand("h", (4, 3), seed=2)
    assert np.allclose(
        avg_pool_context(h).value.ravel(), h.value.mean(axis=1)
    )


# ------------------------------------------------------ context -> aspect


def test_single_token_aspect_gets_full_weight():
    h_bar = _rand("q", (4, 1))
    h_a = _rand("a", (4, 1), seed=3)
    w = _rand("w", (4, 4), seed=4)
    out = context_to_aspect(h_bar, h_a, w)
    assert np.allclose(out.beta.value, [[1.0]])
    assert np.allclose(out.m.value, h_a.value)


def test_zero_weight_matrix_means_uniform_beta():
    h_bar = _rand("q", (4, 1))
    h_a = _rand("a", (4, 3), seed=5)
    out = context_to_aspect(h_bar, h_a, ad.constant(np.zeros((4, 4))))
    assert np.allclose(out.beta.value, 1 / 3)
    assert np.allclose(out.m.value.ravel(), h_a.value.mean(axis=1))


@pytest.mark.parametrize("seed", range(30))
def test_pooled_aspect_in_convex_hull(seed):
    rng = RngStream(seed, "hull")
    m_len = rng.integers(1, 6)
    h_bar = ad.constant(rng.normal(0.0, 1.0, (4, 1)))
    h_a = ad.constant(rng.normal(0.0, 1.0, (4, m_len)))
    w = ad.constant(rng.normal(0.0, 1.0, (4, 4)))
    out = context_to_aspect(h_bar, h_a, w)
    beta = out.beta.value.ravel()
    assert np.all(beta >= 0) and abs(beta.sum() - 1.0) < 1e-6
    m = out.m.value.ravel()
    assert np.all(m >= h_a.value.min(axis=1) - 1e-12)
    assert np.all(m <= h_a.value.max(axis=1) + 1e-12)


def test_beta_matches_manual_softmax_and_is_shift_invariant():
    rng = RngStream(9, "manual")
    h_bar = ad.constant(rng.normal(0.0, 1.0, (3, 1)))
    h_a = ad.constant(rng.normal(0.0, 1.0, (3, 4)))
    w = ad.constant(rng.normal(0.0, 1.0, (3, 3)))
    out = context_to_aspect(h_bar, h_a, w)
    scores = (h_bar.value.T @ w.value @ h_a.value).ravel()
    for c in (0.0, 5.0, -123.0):
        e = np.exp(scores + c - (scores + c).max())
        assert np.allclose(out.beta.value.ravel(), e / e.sum())


# ------------------------------------------------------ aspect -> context


def test_single_context_token():
    m = _rand("m", (4, 1))
    h = _rand("h", (4, 1), seed=6)
    w = _rand("w", (4, 4), seed=7)
    rep = aspect_to_context(m, h, h, w)
    assert np.allclose(rep.gamma.value, [[1.0]])
    assert np.allclose(rep.x.value, h.value)


def test_zero_position_weights_give_uniform_attention_over_raw_context():
    m = _rand("m", (4, 1))
    h = _rand("h", (4, 5), seed=8)
    w = _rand("w", (4, 4), seed=9)
    p = ad.constant(np.zeros((4, 5)))
    rep = aspect_to_context(m, p, h, w)
    assert np.allclose(rep.gamma.value, 0.2)
    # the sum runs over the raw context even though scores saw zeros
    assert np.allclose(rep.x.value.ravel(), h.value.mean(axis=1))


def test_attend_over_weighted_context_flag_changes_source():
    rng = RngStream(10, "flag")
    m = ad.constant(rng.normal(0.0, 1.0, (4, 1)))
    h = ad.constant(rng.normal(0.0, 1.0, (4, 5)))
    p = ad.constant(h.value * 0.5)
    w = ad.constant(rng.normal(0.0, 1.0, (4, 4)))
    raw = aspect_to_context(m, p, h, w)
    weighted = aspect_to_context(m, p, h, w, attend_over_weighted_context=True)
    assert np.allclose(raw.gamma.value, weighted.gamma.value)
    assert np.allclose(weighted.x.value, 0.5 * raw.x.value)


def test_differing_position_weights_give_differing_gamma():
    rng = RngStream(11, "two-aspects")
    h = ad.constant(rng.normal(0.0, 1.0, (4, 6)))
    w = ad.constant(rng.normal(0.0, 1.0, (4, 4)))
    m = ad.constant(rng.normal(0.0, 1.0, (4, 1)))
    d1 = np.array([1.0, 1.0, 0.8, 0.6, 0.4, 0.2])
    d2 = d1[::-1].copy()
    p1 = ad.constant(h.value * d1)
    p2 = ad.constant(h.value * d2)
    g1 = aspect_to_context(m, p1, h, w).gamma.value
    g2 = aspect_to_context(m, p2, h, w).gamma.value
    assert not np.allclose(g1, g2)


def test_mismatched_context_shapes_rejected():
    m = _rand("m", (4, 1))
    with pytest.raises(ShapeError):
        aspect_to_context(m, _rand("p", (4, 3)), _rand("h", (4, 5)), _rand("w", (4, 4)))


def test_gradients_flow_through_both_stages():
    store = ParamStore()
    attn = register_attention(store, 4, RngStream(0, "init"))
    rng = RngStream(12, "inputs")
    h = ad.constant(rng.normal(0.0, 1.0, (4, 5)))
    h_a = ad.constant(rng.normal(0.0, 1.0, (4, 2)))
    p = ad.constant(h.value * np.linspace(1.0, 0.2, 5))

    def loss():
        summary = context_to_aspect(avg_pool_context(h), h_a, attn.W_ca)
        rep = aspect_to_context(summary.m, p, h, attn.W_ac)
        return ad.sum_all(ad.tanh(rep.x))

    report = grad_check(loss, store, tol=1e-4)
    assert report.passed, "\n".join(report.format_lines())
    root = loss()
    store.zero_grad()
    ad.backward(root)
    assert np.any(attn.W_ca.grad != 0.0)
    assert np.any(attn.W_ac.grad != 0.0)


# ----------------------------------------------------------------- export


def test_quantize_rows_sum_to_exactly_one():
    thirds = quantize_weights(np.full(3, 1 / 3))
    assert thirds == [0.333334, 0.333333, 0.333333]
    assert sum(round(w * 1e6) for w in thirds) == 10 ** 6
    for n in (1, 2, 7, 31):
        q = quantize_weights(np.full(n, 1 / n))
        assert sum(round(w * 1e6) for w in q) == 10 ** 6


@pytest.mark.parametrize("seed", range(10))
def test_quantize_random_distributions(seed):
    rng = RngStream(seed, "quant")
    raw = rng.random(rng.integers(1, 12))
    raw = raw / raw.sum()
    q = quantize_weights(raw)
    assert sum(round(w * 1e6) for w in q) == 10 ** 6
    assert np.all(np.abs(np.array(q) - raw) < 1e-5)


def _export_fixture():
    inst = SentenceInstance(
        "s9",
        ("the", "pasta", "was", "cold"),
        (AspectSpan(1, 2, "negative", "pasta"), AspectSpan(3, 4, "negative", "cold")),
    )
    rng = RngStream(20, "export")
    h = ad.constant(rng.normal(0.0, 1.0, (4, 4)))
    store = ParamStore()
    attn = register_attention(store, 4, RngStream(0, "init"))
    h_bar = avg_pool_context(h)
    summaries, reps = [], []
    for a in inst.aspects:
        h_a = ad.constant(rng.normal(0.0, 1.0, (4, a.end - a.start)))
        summary = context_to_aspect(h_bar, h_a, attn.W_ca)
        summaries.append(summary)
        reps.append(aspect_to_context(summary.m, h, h, attn.W_ac))
    return inst, summaries, reps


def test_export_shape_and_row_sums():
    inst, summaries, reps = _export_fixture()
    lines = format_attention(inst, summaries, reps)
    assert len(lines) == 4  # beta + gamma per aspect
    records = parse_attention(lines)
    gammas = [r for r in records if r.kind == "gamma"]
    assert len(gammas) == 2
    for r in records:
        assert abs(sum(r.weights) - 1.0) < 1e-6
        if r.kind == "gamma":
            assert r.tokens == inst.tokens


def test_export_round_trip_is_bit_exact():
    inst, summaries, reps = _export_fixture()
    lines = format_attention(inst, summaries, reps)
    records = parse_attention(lines)
    rebuilt = []
    for r in records:
        rebuilt.append(
            "\t".join(
                (
                    r.sentence_id,
                    str(r.aspect_index),
                    r.kind,
                    " ".join(r.tokens),
                    " ".join(f"{w:.6f}" for w in r.weights),
                )
            )
        )
    assert rebuilt == lines


def test_parse_attention_rejects_malformed_lines():
    with pytest.raises(FormatError):
        parse_attention(["only\tfour\tfields\there"])
    with pytest.raises(FormatError):
        parse_attention(["s\t0\tdelta\ta b\t0.5 0.5"])
    with pytest.raises(FormatError):
        parse_attention(["s\t0\tbeta\ta b c\t0.5 0.5"])


@pytest.mark.parametrize("seed", range(12))
def test_weights_are_distributions_and_x_stays_in_context_bounds(seed):
    """beta and gamma are probability rows; x is a convex mix of raw states."""
    rng = RngStream(seed, "dist-property")
    n = int(rng.integers(1, 9))
    k = int(rng.integers(1, 4))
    dm = 4
    h = ad.constant(rng.normal(0.0, 1.0, (dm, n)))
    h_a = ad.constant(rng.normal(0.0, 1.0, (dm, k)))
    store = ParamStore()
    params = register_attention(store, dm, RngStream(seed, "init"))
    summary = context_to_aspect(avg_pool_context(h), h_a, params.W_ca)
    beta = summary.beta.value.ravel()
    assert beta.min() >= 0.0
    assert abs(beta.sum() - 1.0) < 1e-6
    position = rng.uniform(0.0, 1.0, (1, n))
    p = ad.constant(h.value * position)
    rep = aspect_to_context(summary.m, p, h, params.W_ac)
    gamma = rep.gamma.value.ravel()
    assert gamma.min() >= 0.0
    assert abs(gamma.sum() - 1.0) < 1e-6
    x = rep.x.value.ravel()
    assert np.all(x >= h.value.min(axis=1) - 1e-12)
    assert np.all(x <= h.value.max(axis=1) + 1e-12)
