"""Loss construction: batch split, SC target semantics, gradient oracle."""

import numpy as np
import pytest

from gradcheck import forward_loss_value, frozen_sc_target, max_relative_grad_error, tape_gradients

from homoflow.autodiff import Tape
from homoflow.fields import FieldSet, init_fields
from homoflow.losses import (
    STEP_SET,
    ConfigError,
    LossConfig,
    TrainBatch,
    assemble_batch,
    homo_loss,
    sample_step_and_time,
    self_consistency_target,
)
from homoflow.nn import MlpModel
from homoflow.rng import Rng
from homoflow.schedule import Schedule


def constant_field(value, in_dim):
    """Single-layer model returning the same 2-vector for any input."""
    return MlpModel((in_dim, 2), [np.zeros((2, in_dim))],
                    [np.asarray(value, dtype=np.float64)], "relu")


def identity_field(in_dim):
    """u1(x, t, d) = x for step-conditioned input (x, t, d)."""
    w = np.zeros((2, in_dim))
    w[0, 0] = 1.0
    w[1, 1] = 1.0
    return MlpModel((in_dim, 2), [w], [np.zeros(2)], "relu")


def test_loss_config_labels():
    cfg = LossConfig.from_label("M1+M2+SC")
    assert (cfg.use_m1, cfg.use_m2, cfg.use_m3, cfg.use_sc) == (True, True, False, True)
    assert cfg.label() == "M1+M2+SC"
    assert cfg.required_order == 2
    assert cfg.step_conditioned
    assert LossConfig.from_label("SC").required_order == 1
    assert LossConfig.from_label("M1+M2+M3+SC").required_order == 3
    with pytest.raises(ConfigError):
        LossConfig.from_label("M4")
    with pytest.raises(ConfigError):
        LossConfig(False, False, False, False)


def test_step_and_time_frequencies():
    """Each of the 8 dyadic steps appears with frequency 1/8 +- 0.01."""
    rng = Rng(0)
    counts = {s: 0 for s in STEP_SET}
    n = 100_000
    for _ in range(n):
        d, t = sample_step_and_time(rng)
        counts[d] += 1
        h = d if 2 * d <= 1 else 0.5
        assert t + 2 * h <= 1.0 + 1e-12
    for s in STEP_SET:
        assert abs(counts[s] / n - 0.125) < 0.01


def test_time_grid_for_smallest_step():
    rng = Rng(1)
    seen = set()
    for _ in range(20_000):
        d, t = sample_step_and_time(rng, step_set=(1 / 128,))
        assert d == 1 / 128
        k = t * 128
        assert k == pytest.approx(round(k), abs=1e-9)
        seen.add(int(round(k)))
    assert min(seen) == 0
    assert max(seen) == 126  # t <= 1 - 2/128


def test_degenerate_full_step_set_clamps_to_half_steps():
    rng = Rng(2)
    for _ in range(100):
        d, t = sample_step_and_time(rng, step_set=(1.0,))
        assert d == 1.0
        assert t == 0.0


def test_sc_target_constant_field_returns_value():
    v = np.array([1.5, -2.0])
    fields = FieldSet(u1=constant_field(v, 4), u2=constant_field([0, 0], 6),
                      step_conditioned=True)
    target = self_consistency_target(fields, np.array([3.0, 4.0]), 0.25, 0.125)
    assert target == pytest.approx(v, abs=1e-15)


def test_sc_target_identity_field_hand_value():
    # u1 = x, u2 = 0: target = (p + p(1+d))/2 = p (1 + d/2)
    p = np.array([2.0, -1.0])
    d = 0.25
    fields = FieldSet(u1=identity_field(4), u2=constant_field([0, 0], 6),
                      step_conditioned=True)
    target = self_consistency_target(fields, p, 0.0, d)
    assert target == pytest.approx(p * (1 + d / 2), abs=1e-14)


def test_sc_target_uses_second_order_step():
    # u1 = x, u2 = const a: x_next = p(1+d) + a d^2/2, target = (p + x_next)/2
    p = np.array([1.0, 1.0])
    a = np.array([4.0, -8.0])
    d = 0.5
    fields = FieldSet(u1=identity_field(4), u2=constant_field(a, 6),
                      step_conditioned=True)
    target = self_consistency_target(fields, p, 0.0, d)
    x_next = p + d * p + d * d / 2 * a
    assert target == pytest.approx((p + x_next) / 2, abs=1e-14)


def _batch_for(cfg, n=16, seed=0, sched=Schedule("vp")):
    rng = Rng(seed)
    x0 = rng.points(n)
    x1 = rng.points(n) + np.array([3.0, 0.0])
    return assemble_batch(rng, sched, x0, x1, cfg)


def test_assemble_batch_split_accounting():
    cfg = LossConfig.from_label("M1+SC", true_target_fraction=0.75)
    batch = _batch_for(cfg, n=16)
    assert int(batch.is_true.sum()) == 12
    assert np.all(batch.d[batch.is_true] == 0.0)
    sc = ~batch.is_true
    assert np.all(batch.d[sc] > 0.0)
    assert np.all(batch.t[sc] + 2 * batch.d[sc] <= 1.0 + 1e-12)
    for d in batch.d[sc]:
        assert d in STEP_SET and 2 * d <= 1.0


def test_assemble_batch_caches_schedule_targets():
    cfg = LossConfig.from_label("M1+M2+M3+SC")
    sched = Schedule("smoothstep")
    batch = _batch_for(cfg, n=8, sched=sched)
    from homoflow.schedule import make_path_point

    for i in range(8):
        pt = make_path_point(sched, batch.x0[i], batch.x1[i], batch.t[i])
        assert batch.x_t[i] == pytest.approx(pt.x_t, abs=1e-15)
        assert batch.dx_true[i] == pytest.approx(pt.dx, abs=1e-15)
        assert batch.ddx_true[i] == pytest.approx(pt.ddx, abs=1e-15)
        assert batch.dddx_true[i] == pytest.approx(pt.dddx, abs=1e-15)


def test_loss_zero_when_u1_predicts_truth():
    cfg = LossConfig(use_m1=True, true_target_fraction=1.0)
    sched = Schedule("smoothstep")
    rng = Rng(3)
    # constant pair: dx_true = (alpha' + beta') p = 0, and u1 = 0 predicts it
    p = np.zeros((10, 2))
    batch = assemble_batch(rng, sched, p, p, cfg)
    fields = FieldSet(u1=constant_field([0.0, 0.0], 3))
    tape = Tape()
    loss, breakdown = homo_loss(fields, batch, cfg, tape)
    assert float(loss.value) == 0.0
    assert breakdown["m1"] == 0.0


def test_single_element_squared_norm():
    cfg = LossConfig(use_m1=True, true_target_fraction=1.0)
    batch = TrainBatch(
        x0=np.zeros((1, 2)), x1=np.zeros((1, 2)),
        t=np.array([0.5]), d=np.array([0.0]),
        is_true=np.array([True]), x_t=np.zeros((1, 2)),
        dx_true=np.array([[3.0, 4.0]]),
    )
    fields = FieldSet(u1=constant_field([0.0, 0.0], 3))
    for reduction in ("mean", "sum"):
        tape = Tape()
        loss, breakdown = homo_loss(fields, batch, cfg, tape, reduction)
        assert float(loss.value) == pytest.approx(25.0)
        assert breakdown["m1"] == pytest.approx(25.0)


def test_empty_subbatch_raises_config_error():
    cfg = LossConfig.from_label("M1+SC", true_target_fraction=0.99)
    batch = _batch_for(cfg, n=4)  # k = round(3.96) = 4 -> no SC rows
    fields = init_fields(1, True, (8,), "relu", Rng(0))
    with pytest.raises(ConfigError, match="true_target_fraction"):
        homo_loss(fields, batch, cfg, Tape())


def test_stopgrad_gradients_match_frozen_target_oracle():
    """Training gradient equals the gradient with the target frozen, exactly."""
    cfg = LossConfig.from_label("M1+M2+SC")
    fields = init_fields(2, True, (8,), "relu", Rng(4))
    batch = _batch_for(cfg, n=12, seed=5)
    grads = tape_gradients(fields, batch, cfg)

    target = frozen_sc_target(fields, batch, cfg)

    def oracle_grads():
        from homoflow import autodiff
        from homoflow.nn import model_grads

        tape = Tape()
        mask = batch.is_true
        n_true = int(mask.sum())
        n_sc = len(batch) - n_true
        x_true = batch.x_t[mask]
        u1v = fields.forward_u1(tape, x_true, batch.t[mask], 0.0)
        m1 = autodiff.scale(tape, autodiff.ssq(
            tape, autodiff.sub(tape, u1v, batch.dx_true[mask])), 1 / n_true)
        u2v = fields.forward_u2(tape, u1v, x_true, batch.t[mask], 0.0)
        m2 = autodiff.scale(tape, autodiff.ssq(
            tape, autodiff.sub(tape, u2v, batch.ddx_true[mask])), 1 / n_true)
        sc = ~mask
        pred = fields.forward_u1(tape, batch.x_t[sc], batch.t[sc], 2.0 * batch.d[sc])
        scv = autodiff.scale(tape, autodiff.ssq(
            tape, autodiff.sub(tape, pred, target)), 1 / n_sc)
        loss = autodiff.add(tape, autodiff.add(tape, m1, m2), scv)
        tape.backward(loss)
        return {name: model_grads(tape, m) for name, m in fields.models.items()}

    oracle = oracle_grads()
    for name in grads:
        for (dw, db), (ow, ob) in zip(grads[name], oracle[name]):
            assert np.max(np.abs(dw - ow)) < 1e-12
            assert np.max(np.abs(db - ob)) < 1e-12


def test_term_isolation_m2_off_zeroes_u2_gradient():
    cfg = LossConfig.from_label("M1+SC")
    fields = init_fields(2, True, (8,), "relu", Rng(6))  # u2 exists but unused by losses
    batch = _batch_for(cfg, n=12, seed=7)
    grads = tape_gradients(fields, batch, cfg)
    for dw, db in grads["u2"]:
        assert np.all(dw == 0.0)
        assert np.all(db == 0.0)


@pytest.mark.parametrize("label", ["M1", "M2", "M1+M2", "M1+SC", "M1+M2+SC", "M1+M2+M3+SC"])
def test_composite_gradients_match_finite_differences(label):
    cfg = LossConfig.from_label(label)
    fields = init_fields(cfg.required_order, cfg.step_conditioned, (8,), "relu", Rng(8))
    batch = _batch_for(cfg, n=8, seed=9)
    assert max_relative_grad_error(fields, batch, cfg) < 1e-4


def test_loss_value_matches_independent_forward_evaluator():
    cfg = LossConfig.from_label("M1+M2+SC")
    fields = init_fields(2, True, (8, 8), "relu", Rng(10))
    batch = _batch_for(cfg, n=10, seed=11)
    tape = Tape()
    loss, _ = homo_loss(fields, batch, cfg, tape, "sum")
    target = frozen_sc_target(fields, batch, cfg)
    oracle = forward_loss_value(fields, batch, cfg, target, "sum")
    assert float(loss.value) == pytest.approx(oracle, rel=1e-12)
