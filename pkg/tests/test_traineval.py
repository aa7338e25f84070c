import numpy as np
import pytest

from gelpress import mechanics as M
from gelpress import simcam as S
from gelpress import traineval as T
from gelpress.dataset import DatasetPlan, SequenceRecord, intensity_from_frames, quantize_frames
from gelpress.errors import ConfigError
from gelpress.net.model import HardnessNet, NetConfig

TINY_NET = NetConfig(conv_channels=(4, 8), lstm_hidden=8, feature_dim=8, input_downsample=4)


def synth_record(seq_id, shape, family, radius, label, seed, group="basic", kind="human"):
    profile = (
        S.robot_press_profile(seed) if kind == "robot" else S.human_press_profile(seed)
    )
    seq = S.synth_sequence(shape, label, profile, S.Scene(), group)
    frames = quantize_frames(seq.frames)
    return SequenceRecord(
        id=seq_id,
        frames=frames,
        intensity=intensity_from_frames(frames),
        label=label,
        shape_tag=f"{family}:{radius}",
        family=family,
        radius_mm=radius,
        group=group,
        profile_kind=kind,
        seed=seed,
    )


def fake_record(seq_id, label, family="sphere", radius=10.0, group="basic", kind="human"):
    """Manifest-level record without frames, for split logic tests."""
    return SequenceRecord(
        id=seq_id,
        frames=np.zeros((1, 2, 2, 3), dtype=np.uint8),
        intensity=np.zeros(1),
        label=label,
        shape_tag=f"{family}:{radius}",
        family=family,
        radius_mm=radius,
        group=group,
        profile_kind=kind,
        seed=0,
    )


class TestSplits:
    plan = DatasetPlan()

    def all_records(self):
        records = []
        for li, level in enumerate(self.plan.levels()):
            for fam, radius in self.plan.shape_cells():
                records.append(fake_record(f"{li}-{fam}-{radius}-h", float(level), fam, radius))
                records.append(
                    fake_record(f"{li}-{fam}-{radius}-r", float(level), fam, radius, kind="robot")
                )
            records.append(fake_record(f"{li}-field", float(level), "field", None, "complex_shape"))
        return records

    def test_novel_hardness_holds_out_every_fourth_level(self):
        records = self.all_records()
        train, test = T.make_splits(records, "novel_hardness", self.plan)
        levels = self.plan.levels()
        held = set(np.round(self.plan.holdout_levels(), 9))
        train_levels = {round(r.label, 9) for r in train}
        test_levels = {round(r.label, 9) for r in test}
        assert len(held) == 4 and len(levels) == 16
        assert test_levels == held
        assert train_levels == {round(l, 9) for l in levels} - held
        assert train_levels.isdisjoint(test_levels)

    def test_novel_shape_no_radius_overlap(self):
        records = self.all_records()
        train, test = T.make_splits(records, "novel_shape", self.plan)
        train_pairs = {(r.family, r.radius_mm) for r in train if r.family in ("sphere", "cylinder")}
        test_pairs = {(r.family, r.radius_mm) for r in test}
        assert test_pairs.isdisjoint(train_pairs)
        assert {r for _, r in test_pairs} == set(self.plan.holdout_radii_mm)

    def test_robot_mode_filters_profiles(self):
        records = self.all_records()
        train, test = T.make_splits(records, "robot", self.plan)
        assert all(r.profile_kind == "human" for r in train)
        assert all(r.profile_kind == "robot" for r in test)

    def test_training_never_sees_robot_presses(self):
        records = self.all_records()
        for mode in T.MODES:
            train, _ = T.make_splits(records, mode, self.plan)
            assert all(r.profile_kind == "human" for r in train)

    def test_unknown_mode_rejected(self):
        with pytest.raises(ConfigError):
            T.make_splits(self.all_records(), "bogus", self.plan)

    def test_empty_split_rejected(self):
        only_robot = [fake_record("a", 30.0, kind="robot")]
        with pytest.raises(ConfigError):
            T.make_splits(only_robot, "robot", self.plan)


class TestMetrics:
    def test_perfect_predictions(self):
        labels = np.array([10.0, 30.0, 70.0])
        r2, rmse = T.regression_metrics(labels, labels.copy())
        assert r2 == 1.0 and rmse == 0.0

    def test_mean_prediction_gives_zero_r2(self):
        labels = np.array([10.0, 30.0, 70.0, 50.0])
        preds = np.full(4, labels.mean())
        r2, rmse = T.regression_metrics(labels, preds)
        assert r2 == pytest.approx(0.0, abs=1e-12)

    def test_matches_two_pass_reference(self):
        rng = np.random.default_rng(0)
        labels = rng.uniform(8, 87, 200)
        preds = labels + rng.normal(0, 5, 200)
        r2, rmse = T.regression_metrics(labels, preds)
        # independent two-pass reference
        mean = sum(labels) / len(labels)
        ss_tot = sum((l - mean) ** 2 for l in labels)
        ss_res = sum((l - p) ** 2 for l, p in zip(labels, preds))
        assert r2 == pytest.approx(1 - ss_res / ss_tot, abs=1e-12)
        assert rmse == pytest.approx((ss_res / len(labels)) ** 0.5, abs=1e-12)


@pytest.fixture(scope="module")
def tiny_dataset():
    records = []
    for li, level in enumerate([15.0, 40.0, 65.0]):
        for k in range(2):
            records.append(
                synth_record(f"t{li}{k}", M.Sphere(10.0), "sphere", 10.0, level, 5000 + li * 10 + k)
            )
    return records


class TestTraining:
    def test_zero_learning_rate_is_noop(self, tiny_dataset):
        model = HardnessNet(TINY_NET, seed=2)
        before = [p.value.copy() for p in model.params()]
        cfg = T.TrainConfig(learning_rate=0.0, iterations=3, batch_size=2, seed=3)
        T.train(model, tiny_dataset, cfg)
        after = [p.value for p in model.params()]
        assert all(np.array_equal(a, b) for a, b in zip(before, after))

    def test_fixed_seed_bit_identical_checkpoints(self, tiny_dataset):
        outs = []
        for _ in range(2):
            model = HardnessNet(TINY_NET, seed=2)
            losses = T.train(
                model, tiny_dataset, T.TrainConfig(iterations=8, batch_size=2, seed=11)
            )
            outs.append(([p.value.copy() for p in model.params()], losses))
        for a, b in zip(outs[0][0], outs[1][0]):
            assert np.array_equal(a, b)
        assert np.array_equal(outs[0][1], outs[1][1])

    def test_loss_curve_length_and_finite(self, tiny_dataset):
        model = HardnessNet(TINY_NET, seed=2)
        losses = T.train(model, tiny_dataset, T.TrainConfig(iterations=12, batch_size=2, seed=1))
        assert losses.shape == (12,)
        assert np.all(np.isfinite(losses))

    def test_evaluate_reports_all_videos(self, tiny_dataset):
        model = HardnessNet(TINY_NET, seed=2)
        report = T.evaluate(model, tiny_dataset)
        assert report.n_videos == len(tiny_dataset)
        assert len(report.rows) == report.n_videos
        assert report.rmse >= 0.0 and report.r_squared <= 1.0

    def test_report_csv_roundtrip(self, tiny_dataset, tmp_path):
        model = HardnessNet(TINY_NET, seed=2)
        report = T.evaluate(model, tiny_dataset)
        path = tmp_path / "report.csv"
        report.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "id,shape,group,label,prediction"
        assert len(lines) == 1 + report.n_videos + 1
        assert lines[-1].startswith("# r2=")
        assert report.summary_line() in lines[-1]

    def test_summary_line_format(self):
        report = T.EvalReport(1.0, 0.0, 3)
        assert report.summary_line() == "r2=1.000000 rmse=0.000000"
