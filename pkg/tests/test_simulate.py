import numpy as np
import pytest

from twinforge.errors import InvalidSpec
from twinforge.simulate import (
    GroundTruth,
    MachineState,
    PhaseInterval,
    ScenarioSpec,
    default_scenario,
    simulate_scenario,
)
from twinforge.wire import ACCEL_CHANNELS, Channel, encode_sample


def tiny_spec(seed=1, duration=4.0, machine="m1"):
    schedule = (
        PhaseInterval(machine, 0.0, 2.0, MachineState.Idle),
        PhaseInterval(machine, 2.0, 3.0, MachineState.Failure),
        PhaseInterval(machine, 3.0, duration, MachineState.Waiting),
    )
    return ScenarioSpec(
        seed=seed,
        machines=(machine,),
        duration_s=duration,
        sample_rate=100,
        phase_schedule=schedule,
        failure_windows=((machine, 2.0, 3.0),),
    )


class TestSpecValidation:
    def test_default_scenario_is_valid(self):
        default_scenario().validate()

    def test_gap_rejected(self):
        spec = ScenarioSpec(
            machines=("m1",),
            duration_s=2.0,
            phase_schedule=(PhaseInterval("m1", 0.0, 1.0, MachineState.Idle),),
        )
        with pytest.raises(InvalidSpec):
            spec.validate()

    def test_overlap_rejected(self):
        spec = ScenarioSpec(
            machines=("m1",),
            duration_s=2.0,
            phase_schedule=(
                PhaseInterval("m1", 0.0, 1.5, MachineState.Idle),
                PhaseInterval("m1", 1.0, 2.0, MachineState.Active),
            ),
        )
        with pytest.raises(InvalidSpec):
            spec.validate()

    def test_failure_window_must_match_schedule(self):
        spec = ScenarioSpec(
            machines=("m1",),
            duration_s=1.0,
            phase_schedule=(PhaseInterval("m1", 0.0, 1.0, MachineState.Idle),),
            failure_windows=(("m1", 0.0, 1.0),),
        )
        with pytest.raises(InvalidSpec):
            spec.validate()


class TestDeterminism:
    def test_byte_identical_streams(self):
        a, _ = simulate_scenario(tiny_spec())
        b, _ = simulate_scenario(tiny_spec())
        assert [encode_sample(s) for s in a] == [encode_sample(s) for s in b]

    def test_seed_changes_stream(self):
        a, _ = simulate_scenario(tiny_spec(seed=1))
        b, _ = simulate_scenario(tiny_spec(seed=2))
        assert [s.value for s in a] != [s.value for s in b]

    def test_ground_truth_pure_function_of_spec(self):
        _, ta = simulate_scenario(tiny_spec())
        _, tb = simulate_scenario(tiny_spec())
        assert ta == tb


class TestStream:
    def test_duration_zero_empty(self):
        spec = ScenarioSpec(machines=("m1",), duration_s=0.0)
        samples, truth = simulate_scenario(spec)
        assert samples == []
        assert truth.machines["m1"].boundaries == ()

    def test_per_channel_timestamps_strictly_increase(self):
        samples, _ = simulate_scenario(tiny_spec())
        for ch in ACCEL_CHANNELS:
            ts = [s.ts for s in samples if s.channel is ch]
            deltas = set(np.diff(ts).tolist())
            assert deltas == {10_000_000}  # 1/100 s in ns

    def test_plc_events_at_phase_changes(self):
        samples, _ = simulate_scenario(tiny_spec())
        plc = [s for s in samples if s.channel is Channel.plc_state]
        assert [(s.ts, s.value) for s in plc] == [
            (0, 0.0),
            (2 * 10**9, 3.0),
            (3 * 10**9, 2.0),
        ]

    def test_stream_sorted_by_ts(self):
        samples, _ = simulate_scenario(tiny_spec())
        keys = [(s.ts, s.asset_id, s.channel.value) for s in samples]
        assert keys == sorted(keys)

    def test_phase_signal_levels(self):
        samples, _ = simulate_scenario(tiny_spec(duration=4.0))
        x = np.array(
            [s.value for s in samples if s.channel is Channel.accel_x]
        )
        idle, failure, waiting = x[:200], x[200:300], x[300:]
        assert idle.std() < 0.1
        assert waiting.std() < 0.2
        assert failure.max() > 5.0  # spikes present
        assert np.abs(failure[np.abs(failure) < 5]).max() > 0.5  # sinusoid present


class TestGroundTruth:
    def test_boundaries_count_matches_schedule(self):
        _, truth = simulate_scenario(tiny_spec())
        assert truth.machines["m1"].boundaries == (200, 300)

    def test_block_projection(self):
        _, truth = simulate_scenario(tiny_spec())
        mt = truth.machines["m1"]
        assert mt.change_point_blocks(50) == (4, 6)
        assert mt.change_point_blocks(25) == (8, 12)
        labels = mt.block_labels(50)
        assert labels[:4] == (MachineState.Idle,) * 4
        assert labels[4:6] == (MachineState.Failure,) * 2
        assert labels[6:] == (MachineState.Waiting,) * 2

    def test_failure_window_maps_to_anomaly_blocks(self):
        spec = tiny_spec(duration=6.0)
        # move failure to [3.0, 3.5): blocks 6 at size 50
        schedule = (
            PhaseInterval("m1", 0.0, 3.0, MachineState.Idle),
            PhaseInterval("m1", 3.0, 3.5, MachineState.Failure),
            PhaseInterval("m1", 3.5, 6.0, MachineState.Waiting),
        )
        spec = ScenarioSpec(
            seed=1,
            machines=("m1",),
            duration_s=6.0,
            sample_rate=100,
            phase_schedule=schedule,
            failure_windows=(("m1", 3.0, 3.5),),
        )
        _, truth = simulate_scenario(spec)
        assert truth.machines["m1"].anomaly_blocks(50) == frozenset({6})
        assert truth.machines["m1"].anomaly_blocks(25) == frozenset({12, 13})

    def test_json_round_trip(self):
        _, truth = simulate_scenario(tiny_spec())
        again = GroundTruth.from_json(truth.to_json())
        assert again == truth

    def test_default_scenario_shape(self):
        spec = default_scenario()
        samples, truth = simulate_scenario(spec)
        assert len(spec.machines) == 4
        mt = truth.machines["m1"]
        assert mt.phases == (
            MachineState.Idle,
            MachineState.Active,
            MachineState.Waiting,
            MachineState.Failure,
        )
        # failure window below the 5% rarity threshold at both block grids
        for bs in (25, 50):
            n_blocks = -(-mt.n_samples // bs)
            assert 0 < len(mt.anomaly_blocks(bs)) / n_blocks < 0.05
