import json

import pytest

from texscene.dataset import (
    CorruptRecordError,
    SchemaMismatchError,
    load_record,
    read_dataset,
    save_record,
    write_dataset,
)
from texscene.generator import GenConfig, init_sequence, run_sequence, step

CONFIG = GenConfig(picture_width=240, picture_height=180)


def test_round_trip_identity():
    state = run_sequence(CONFIG, seed=2024, iterations=4)
    assert load_record(save_record(state)) == state


def test_round_trip_iteration_zero():
    state = init_sequence(CONFIG, 9)
    assert load_record(save_record(state)) == state


def test_round_trip_preserves_triangle_roles():
    # Scan seeds for a sequence containing a synthesized-L1 (triangle) cell
    # so the optional fields exercise the format too.
    for seed in range(60):
        state = run_sequence(CONFIG, seed, 6)
        if any(seg.roles.opposite is None for seg in state.segments):
            assert load_record(save_record(state)) == state
            return
    pytest.skip("no triangular cell in the scanned seeds")


def test_replay_equivalence_from_seed_alone():
    state = run_sequence(CONFIG, seed=31337, iterations=3)
    record = save_record(state)
    loaded = load_record(record)
    # Re-derive from the token alone and continue stepping: the files must
    # agree byte-for-byte with a continued original.
    rederived = run_sequence(loaded.config, loaded.token.seed, loaded.token.iteration)
    assert save_record(rederived) == record
    assert save_record(step(rederived)) == save_record(step(state))


def test_truncated_record_is_corrupt():
    state = run_sequence(CONFIG, seed=1, iterations=2)
    line = save_record(state)
    with pytest.raises(CorruptRecordError):
        load_record(line[: len(line) // 2])


def test_schema_mismatch():
    state = init_sequence(CONFIG, 1)
    raw = json.loads(save_record(state))
    raw["schema_version"] = 999
    with pytest.raises(SchemaMismatchError):
        load_record(json.dumps(raw))


def test_missing_field_is_corrupt():
    state = run_sequence(CONFIG, seed=1, iterations=1)
    raw = json.loads(save_record(state))
    del raw["segments"][0]["band_lines"]
    with pytest.raises(CorruptRecordError):
        load_record(json.dumps(raw))


def test_dataset_file_round_trip(tmp_path):
    states = []
    state = init_sequence(CONFIG, 55)
    states.append(state)
    for _ in range(3):
        state = step(state)
        states.append(state)
    path = tmp_path / "dataset.ndjson"
    write_dataset(path, states)
    assert read_dataset(path) == states


def test_numbers_use_17_significant_digits():
    state = run_sequence(CONFIG, seed=8, iterations=1)
    line = save_record(state)
    x = state.interior_sites[0].x
    assert format(x, ".17g") in line
