import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlsurf.errors import FormatError, InvalidArgumentError, TrainingDivergedError
from nlsurf.grids import GridSpec, Parameter, SpatialField
from nlsurf.neural import (
    TrainConfig,
    _conv_shapes,
    _onehot,
    build_model,
    cross_entropy,
    default_architecture,
    desk_architecture,
    forward,
    forward_batch,
    head_probs,
    load_model,
    loss_and_grads,
    mini_architecture,
    reference_architecture,
    save_model,
    train,
    train_arrays,
    train_with_restarts,
    trunk_features,
)
from nlsurf.simulate import SimConfig, build_pair_dataset


def _toy_dataset(m=2, n=3, side=8, seed=0, process="gp"):
    cfg = SimConfig(process=process, grid=GridSpec(side, 0.0, 4.0), m=m, n=n, seed=seed)
    return build_pair_dataset(cfg)


class TestArchitectures:
    def test_reference_shape_traversal_at_25(self):
        # 25 -> conv 23 -> pool 11 -> conv 9 -> pool 4 -> conv 2; flatten 64
        sides = _conv_shapes(25, reference_architecture()["conv"])
        assert sides == [11, 4, 2]
        model = build_model(25, 2)
        assert model.flat_features == 2 * 2 * 16 == 64
        # first dense layer reads flatten + theta = 66 inputs
        assert model.layers[3]["W"].shape == (66, 64)

    def test_reference_tensor_count(self):
        model = build_model(25, 2)
        tensors = model.parameter_tensors()
        assert len(tensors) == 14  # 7 weight + 7 bias
        assert sum(name.endswith("_w") for name, _ in tensors) == 7
        assert sum(name.endswith("_b") for name, _ in tensors) == 7

    def test_reference_needs_side_18(self):
        _conv_shapes(18, reference_architecture()["conv"])
        with pytest.raises(InvalidArgumentError):
            _conv_shapes(17, reference_architecture()["conv"])

    def test_desk_fits_16(self):
        # 16 -> conv 14 -> pool 7 -> conv 5 -> conv 3; flatten 144
        sides = _conv_shapes(16, desk_architecture()["conv"])
        assert sides == [7, 5, 3]
        model = build_model(16, 2, desk_architecture())
        assert model.flat_features == 3 * 3 * 16 == 144

    def test_default_architecture_selects_largest_preset(self):
        assert default_architecture(25) == reference_architecture()
        assert default_architecture(16) == desk_architecture()
        assert default_architecture(8) == mini_architecture()
        with pytest.raises(InvalidArgumentError):
            default_architecture(2)

    def test_biases_start_at_zero(self):
        model = build_model(8, 2, mini_architecture())
        for layer in model.layers:
            np.testing.assert_array_equal(layer["b"], 0.0)

    def test_init_is_seeded_and_attempt_dependent(self):
        a = build_model(8, 2, mini_architecture(), seed=3, attempt=0)
        b = build_model(8, 2, mini_architecture(), seed=3, attempt=0)
        c = build_model(8, 2, mini_architecture(), seed=3, attempt=1)
        np.testing.assert_array_equal(a.layers[0]["W"], b.layers[0]["W"])
        assert not np.array_equal(a.layers[0]["W"], c.layers[0]["W"])


class TestForward:
    @given(st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=25)
    def test_probabilities_are_a_distribution(self, seed):
        rng = np.random.default_rng(seed)
        model = build_model(8, 2, mini_architecture(), seed=1)
        p = forward(model, rng.standard_normal((8, 8)), rng.uniform(0.1, 2.0, 2))
        assert p.shape == (2,)
        assert np.all(p >= 0) and np.all(p <= 1)
        np.testing.assert_allclose(p.sum(), 1.0, rtol=1e-6)

    def test_deterministic(self, rng):
        model = build_model(8, 2, mini_architecture(), seed=1)
        y = rng.standard_normal((8, 8))
        t = np.array([1.0, 1.0])
        np.testing.assert_array_equal(forward(model, y, t), forward(model, y, t))

    def test_accepts_wrapped_types(self, rng):
        grid = GridSpec(8, 0.0, 4.0)
        model = build_model(8, 2, mini_architecture(), seed=1)
        y = rng.standard_normal((8, 8))
        t = np.array([1.0, 0.5])
        a = forward(model, SpatialField(y, grid), Parameter(t, ("a", "b")))
        np.testing.assert_array_equal(a, forward(model, y, t))

    def test_batch_matches_single_calls(self, rng):
        model = build_model(8, 2, mini_architecture(), seed=2)
        fields = rng.standard_normal((32, 8, 8))
        thetas = rng.uniform(0.1, 2.0, (32, 2))
        batch = forward_batch(model, fields, thetas, batch_size=7)
        for i in range(32):
            single = forward(model, fields[i], thetas[i])
            np.testing.assert_allclose(batch[i], single, atol=1e-5)

    def test_trunk_plus_head_matches_forward(self, rng):
        # the vectorized surface path must agree with pair-at-a-time calls
        model = build_model(8, 2, mini_architecture(), seed=3)
        y = rng.standard_normal((8, 8))
        thetas = rng.uniform(0.1, 2.0, (40, 2))
        flat = trunk_features(model, y)
        batched = head_probs(model, flat, thetas)
        for i in range(0, 40, 7):
            np.testing.assert_allclose(
                batched[i], forward(model, y, thetas[i]), atol=1e-6
            )

    def test_log_transform_applied_and_guarded(self, rng):
        model = build_model(8, 2, mini_architecture(), field_transform="log", seed=1)
        ident = build_model(8, 2, mini_architecture(), field_transform="identity", seed=1)
        y = rng.uniform(0.5, 3.0, (8, 8))
        np.testing.assert_allclose(
            forward(model, y, [1.0, 1.0]), forward(ident, np.log(y), [1.0, 1.0]), atol=1e-6
        )
        with pytest.raises(InvalidArgumentError):
            forward(model, -y, [1.0, 1.0])

    def test_shape_validation(self, rng):
        model = build_model(8, 2, mini_architecture())
        with pytest.raises(InvalidArgumentError):
            forward(model, rng.standard_normal((9, 9)), [1.0, 1.0])
        with pytest.raises(InvalidArgumentError):
            forward(model, rng.standard_normal((8, 8)), [1.0, 1.0, 1.0])


class TestGradients:
    def test_backprop_matches_central_differences(self, rng):
        # float64 model so the FD comparison is meaningful
        model = build_model(8, 2, mini_architecture(), dtype=np.float64, seed=5)
        y = rng.standard_normal((1, 8, 8))
        t = rng.uniform(0.1, 2.0, (1, 2))
        onehot = np.array([[1.0, 0.0]])
        _, grads = loss_and_grads(model, y, t, onehot)
        eps = 1e-5
        worst = 0.0
        for li, layer in enumerate(model.layers):
            for slot, key in enumerate(("W", "b")):
                tensor = layer[key]
                analytic = grads[li][slot]
                it = np.nditer(tensor, flags=["multi_index"])
                count = 0
                while not it.finished and count < 6:
                    idx = it.multi_index
                    orig = tensor[idx]
                    tensor[idx] = orig + eps
                    lp, _ = loss_and_grads(model, y, t, onehot)
                    tensor[idx] = orig - eps
                    lm, _ = loss_and_grads(model, y, t, onehot)
                    tensor[idx] = orig
                    fd = (lp - lm) / (2 * eps)
                    an = analytic[idx]
                    rel = abs(fd - an) / max(abs(fd), abs(an), 1e-8)
                    worst = max(worst, rel)
                    count += 1
                    it.iternext()
        assert worst < 1e-4

    def test_cross_entropy_known_value(self):
        probs = np.array([[0.8, 0.2], [0.3, 0.7]])
        onehot = np.array([[1.0, 0.0], [0.0, 1.0]])
        np.testing.assert_allclose(
            cross_entropy(probs, onehot), -(np.log(0.8) + np.log(0.7)) / 2
        )


class TestTrainConfig:
    def test_schedule_holds_then_decays(self):
        cfg = TrainConfig(lr_initial=1e-3, lr_hold_epochs=5, lr_decay_factor=np.exp(-0.1))
        for e in (1, 3, 5):
            assert cfg.lr_at(e) == 1e-3
        np.testing.assert_allclose(cfg.lr_at(6), 1e-3 * np.exp(-0.1))
        np.testing.assert_allclose(cfg.lr_at(10), 1e-3 * np.exp(-0.5))

    def test_validation(self):
        with pytest.raises(InvalidArgumentError):
            TrainConfig(batch_size=0)
        with pytest.raises(InvalidArgumentError):
            TrainConfig(lr_decay_factor=0.0)
        with pytest.raises(InvalidArgumentError):
            TrainConfig(lr_decay_factor=1.5)


class TestTraining:
    def test_deterministic_given_seed(self):
        ds = _toy_dataset()
        cfg = TrainConfig(batch_size=4, epochs=2, seed=9)
        m1, _ = train(ds, cfg, mini_architecture())
        m2, _ = train(ds, cfg, mini_architecture())
        for l1, l2 in zip(m1.layers, m2.layers):
            np.testing.assert_array_equal(l1["W"], l2["W"])

    def test_transform_follows_process(self):
        gp_model, _ = train(_toy_dataset(), TrainConfig(batch_size=4, epochs=1), mini_architecture())
        br_model, _ = train(
            _toy_dataset(process="brown-resnick"),
            TrainConfig(batch_size=4, epochs=1),
            mini_architecture(),
        )
        assert gp_model.field_transform == "identity"
        assert br_model.field_transform == "log"

    def test_loss_decreases_on_separable_toy(self):
        # two constant fields with matched/permuted parameters: learnable
        # by the dense head alone
        fields = np.concatenate([np.zeros((60, 8, 8)), np.ones((60, 8, 8))])
        thetas = np.concatenate([np.full((60, 2), 0.5), np.full((60, 2), 1.5)])
        labels = np.concatenate([np.ones(120), np.full(120, 2)]).astype(int)
        fields2 = np.concatenate([fields, fields])
        thetas2 = np.concatenate([thetas, thetas[::-1]])
        model = build_model(8, 2, mini_architecture(), seed=1)
        cfg = TrainConfig(batch_size=32, epochs=40, lr_initial=1e-2, lr_hold_epochs=40, seed=1)
        log = train_arrays(model, fields2, thetas2, labels, cfg)
        assert log.epochs[-1]["train_loss"] < 0.05
        assert log.epochs[-1]["train_loss"] < log.epochs[0]["train_loss"]

    def test_validation_loss_recorded(self):
        ds = _toy_dataset()
        f, t, l = ds.training_arrays()
        cfg = TrainConfig(batch_size=4, epochs=2)
        _, log = train(ds, cfg, mini_architecture(), validation=(f[:4], t[:4], l[:4]))
        assert all("val_loss" in e for e in log.epochs)
        assert len(log.epochs) == 2

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_raises_with_epoch(self):
        ds = _toy_dataset()
        cfg = TrainConfig(batch_size=4, epochs=3, lr_initial=1e18)
        with pytest.raises(TrainingDivergedError) as err:
            train(ds, cfg, mini_architecture())
        assert "epoch" in err.value.context

    def test_restarts_stop_when_loss_clears_plateau(self):
        ds = _toy_dataset()
        cfg = TrainConfig(batch_size=4, epochs=1)
        model, logs = train_with_restarts(
            ds, cfg, mini_architecture(), max_attempts=2, plateau_loss=1e9
        )
        assert len(logs) == 1  # absurdly high threshold: first attempt accepted
        model, logs = train_with_restarts(
            ds, cfg, mini_architecture(), max_attempts=2, plateau_loss=0.0
        )
        assert len(logs) == 2  # never met: all attempts consumed

    def test_onehot_validation(self):
        with pytest.raises(InvalidArgumentError):
            _onehot(np.array([0, 1]))
        out = _onehot(np.array([1, 2, 1]))
        np.testing.assert_array_equal(out, [[1, 0], [0, 1], [1, 0]])

    def test_misaligned_arrays_rejected(self):
        model = build_model(8, 2, mini_architecture())
        with pytest.raises(InvalidArgumentError):
            train_arrays(
                model,
                np.zeros((3, 8, 8)),
                np.zeros((2, 2)),
                np.array([1, 2, 1]),
                TrainConfig(),
            )


class TestModelIo:
    def test_round_trip_preserves_forward_exactly(self, tmp_path, rng):
        model = build_model(8, 2, mini_architecture(), seed=7)
        save_model(model, tmp_path / "model")
        back = load_model(tmp_path / "model")
        y = rng.standard_normal((8, 8))
        t = np.array([0.7, 1.3])
        np.testing.assert_array_equal(forward(model, y, t), forward(back, y, t))

    def test_tensor_files_on_disk(self, tmp_path):
        model = build_model(25, 2, seed=0)
        save_model(model, tmp_path / "model")
        files = sorted(p.name for p in (tmp_path / "model").iterdir())
        assert "manifest.json" in files
        assert len([f for f in files if f.endswith(".nlt")]) == 14

    def test_wrong_shape_tensor_rejected(self, tmp_path):
        from nlsurf.tensorio import write_tensor

        model = build_model(8, 2, mini_architecture())
        save_model(model, tmp_path / "model")
        write_tensor(tmp_path / "model" / "conv0_w.nlt", np.zeros((2, 2)))
        with pytest.raises(FormatError, match="shape"):
            load_model(tmp_path / "model")

    def test_tensor_list_mismatch_rejected(self, tmp_path):
        from nlsurf.tensorio import read_json, write_json

        model = build_model(8, 2, mini_architecture())
        save_model(model, tmp_path / "model")
        manifest = read_json(tmp_path / "model" / "manifest.json")
        manifest["tensors"] = manifest["tensors"][:-1]
        write_json(tmp_path / "model" / "manifest.json", manifest)
        with pytest.raises(FormatError, match="tensor list"):
            load_model(tmp_path / "model")

    def test_not_a_model_dir_rejected(self, tmp_path):
        from nlsurf.tensorio import write_json

        write_json(tmp_path / "manifest.json", {"format": "something-else"})
        with pytest.raises(FormatError):
            load_model(tmp_path)
