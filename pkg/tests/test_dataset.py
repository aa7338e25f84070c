import json

import numpy as np
import pytest

from gelpress import dataset as D
from gelpress import simcam as S
from gelpress.errors import ConfigError, ManifestError

TINY_PLAN = D.DatasetPlan(
    seed=123,
    hardness_levels=2,
    hardness_range=(15.0, 60.0),
    sphere_radii_mm=(10.0,),
    cylinder_radii_mm=(10.0,),
    seeds_per_cell=5,
    basic_human_per_cell=2,
    basic_robot_per_cell=1,
    bad_contact_per_cell=1,
    complex_per_cell=1,
    holdout_hardness_offset=1,
    holdout_hardness_stride=2,
    holdout_radii_mm=(),
)


@pytest.fixture(scope="module")
def tiny_records():
    return D.build_dataset(TINY_PLAN)


class TestPlan:
    def test_slot_budget_checked(self):
        with pytest.raises(ConfigError):
            D.DatasetPlan(seeds_per_cell=9)  # default slots sum to 10

    def test_default_grid_is_sixteen_by_ten_by_ten(self):
        plan = D.DatasetPlan()
        assert plan.hardness_levels == 16
        assert len(plan.shape_cells()) == 10
        assert plan.seeds_per_cell == 10
        assert plan.n_sequences() == 1600
        levels = plan.levels()
        assert levels[0] == 8.0 and levels[-1] == 87.0
        assert len(plan.holdout_levels()) == 4


class TestBuild:
    def test_grid_covers_label_distribution_exactly(self, tiny_records):
        assert len(tiny_records) == TINY_PLAN.n_sequences()
        per_level = {}
        for rec in tiny_records:
            per_level[rec.label] = per_level.get(rec.label, 0) + 1
        expected = len(TINY_PLAN.shape_cells()) * TINY_PLAN.seeds_per_cell
        assert set(per_level) == set(TINY_PLAN.levels())
        assert all(count == expected for count in per_level.values())

    def test_group_mix_per_cell(self, tiny_records):
        groups = [r.group for r in tiny_records]
        n_cells = TINY_PLAN.hardness_levels * len(TINY_PLAN.shape_cells())
        assert groups.count(S.GROUP_BASIC) == 3 * n_cells  # 2 human + 1 robot
        assert groups.count(S.GROUP_BAD) == n_cells
        assert groups.count(S.GROUP_COMPLEX) == n_cells
        robots = [r for r in tiny_records if r.profile_kind == "robot"]
        assert len(robots) == n_cells
        assert all(r.group == S.GROUP_BASIC for r in robots)

    def test_deterministic_rebuild(self):
        a = D.build_dataset(TINY_PLAN)
        b = D.build_dataset(TINY_PLAN)
        for ra, rb in zip(a, b):
            assert ra.id == rb.id
            assert np.array_equal(ra.frames, rb.frames)
            assert np.array_equal(ra.intensity, rb.intensity)

    def test_intensity_matches_quantized_frames(self, tiny_records):
        rec = tiny_records[0]
        assert np.allclose(rec.intensity, D.intensity_from_frames(rec.frames))

    def test_complex_cells_use_height_fields(self, tiny_records):
        complex_recs = [r for r in tiny_records if r.group == S.GROUP_COMPLEX]
        assert all(r.family == "field" for r in complex_recs)
        assert all(r.shape_tag.startswith("field:") for r in complex_recs)
        assert all("sharpness" in r.meta for r in complex_recs)

    def test_holdout_levels_get_sharper_fields(self, tiny_records):
        held = set(np.round(TINY_PLAN.holdout_levels(), 9))
        sharp_held = [
            r.meta["sharpness"]
            for r in tiny_records
            if r.group == S.GROUP_COMPLEX and round(r.label, 9) in held
        ]
        sharp_train = [
            r.meta["sharpness"]
            for r in tiny_records
            if r.group == S.GROUP_COMPLEX and round(r.label, 9) not in held
        ]
        assert min(sharp_held) >= TINY_PLAN.complex_test_sharpness[0]
        assert max(sharp_train) <= TINY_PLAN.complex_train_sharpness[1]


class TestDiskRoundtrip:
    def test_write_load_identical(self, tiny_records, tmp_path):
        root = tmp_path / "ds"
        manifest_path = D.write_dataset(tiny_records, root)
        assert manifest_path.exists()
        loaded = D.load_dataset(root)
        assert len(loaded) == len(tiny_records)
        by_id = {r.id: r for r in tiny_records}
        for rec in loaded:
            src = by_id[rec.id]
            assert np.array_equal(rec.frames, src.frames)
            assert np.allclose(rec.intensity, src.intensity)
            assert rec.label == src.label
            assert rec.group == src.group
            assert rec.profile_kind == src.profile_kind

    def test_write_is_byte_identical(self, tiny_records, tmp_path):
        r1 = tmp_path / "a"
        r2 = tmp_path / "b"
        D.write_dataset(tiny_records, r1)
        D.write_dataset(tiny_records, r2)
        m1 = (r1 / "manifest.json").read_bytes()
        m2 = (r2 / "manifest.json").read_bytes()
        assert m1 == m2
        seq = tiny_records[0].id
        f1 = (r1 / "sequences" / seq / "frame_0000.png").read_bytes()
        f2 = (r2 / "sequences" / seq / "frame_0000.png").read_bytes()
        assert f1 == f2

    def test_future_manifest_version_rejected(self, tmp_path):
        root = tmp_path / "ds"
        root.mkdir()
        (root / "manifest.json").write_text(json.dumps({"format_version": 99, "records": []}))
        with pytest.raises(ManifestError):
            D.read_manifest(root)

    def test_duplicate_ids_rejected(self, tmp_path):
        root = tmp_path / "ds"
        root.mkdir()
        rec = {"id": "a", "dir": "sequences/a", "label": 10.0}
        (root / "manifest.json").write_text(
            json.dumps({"format_version": 1, "records": [rec, rec]})
        )
        with pytest.raises(ManifestError):
            D.read_manifest(root)


class TestIngest:
    def make_raw(self, tmp_path, n_seq=2, n_frames=4, scrambled=False):
        raw = tmp_path / "raw"
        from PIL import Image

        rng = np.random.default_rng(0)
        for s in range(n_seq):
            d = raw / f"seq{s}"
            d.mkdir(parents=True)
            order = [7, 0, 12, 3][:n_frames] if scrambled else range(n_frames)
            for k in order:
                img = rng.integers(0, 255, size=(6, 8, 3), dtype=np.uint8)
                Image.fromarray(img, "RGB").save(d / f"img_{k}.png")
        return raw

    def test_empty_directory_warns_and_yields_empty_manifest(self, tmp_path):
        raw = tmp_path / "raw"
        raw.mkdir()
        with pytest.warns(UserWarning):
            manifest = D.ingest_dataset(raw, None)
        assert manifest["records"] == []

    def test_single_labeled_sequence(self, tmp_path):
        raw = self.make_raw(tmp_path, n_seq=1)
        labels = tmp_path / "labels.csv"
        labels.write_text("seq0,35.0\n")
        manifest = D.ingest_dataset(raw, labels)
        assert len(manifest["records"]) == 1
        assert manifest["records"][0]["label"] == 35.0

    def test_unlabeled_admitted_as_unknown(self, tmp_path):
        raw = self.make_raw(tmp_path, n_seq=2)
        labels = tmp_path / "labels.csv"
        labels.write_text("seq0,35.0\n")
        manifest = D.ingest_dataset(raw, labels)
        by_id = {r["id"]: r for r in manifest["records"]}
        assert by_id["seq1"]["label"] == "unknown"

    def test_numeric_frame_ordering_against_sort_oracle(self, tmp_path):
        raw = self.make_raw(tmp_path, n_seq=1, n_frames=4, scrambled=True)
        seq_dir = raw / "seq0"
        paths = D._numeric_frame_sort(list(seq_dir.glob("*.png")))
        # oracle: independent sort by the embedded integer
        import re

        oracle = sorted(seq_dir.glob("*.png"), key=lambda p: int(re.findall(r"\d+", p.stem)[-1]))
        assert [p.name for p in paths] == [p.name for p in oracle]

    def test_label_out_of_range_rejected(self, tmp_path):
        raw = self.make_raw(tmp_path, n_seq=1)
        labels = tmp_path / "labels.csv"
        labels.write_text("seq0,140.0\n")
        with pytest.raises(ManifestError):
            D.ingest_dataset(raw, labels)

    def test_duplicate_label_ids_rejected(self, tmp_path):
        raw = self.make_raw(tmp_path, n_seq=1)
        labels = tmp_path / "labels.csv"
        labels.write_text("seq0,35.0\nseq0,36.0\n")
        with pytest.raises(ManifestError):
            D.ingest_dataset(raw, labels)

    def test_unreadable_image_rejected(self, tmp_path):
        raw = self.make_raw(tmp_path, n_seq=1)
        (raw / "seq0" / "img_9.png").write_bytes(b"not a png")
        with pytest.raises(ManifestError):
            D.ingest_dataset(raw, None)

    def test_header_row_tolerated(self, tmp_path):
        raw = self.make_raw(tmp_path, n_seq=1)
        labels = tmp_path / "labels.csv"
        labels.write_text("id,label\nseq0,35.0\n")
        manifest = D.ingest_dataset(raw, labels)
        assert manifest["records"][0]["label"] == 35.0
