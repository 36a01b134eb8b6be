import numpy as np
import pyroomacoustics as pra
import pytest
from scipy import stats

from tsepi.audio.core import AudioClip, convolve
from tsepi.errors import InvalidArgumentError, SceneSamplingError, UndefinedResultError
from tsepi.room.cache import load_rir, save_rir
from tsepi.room.rir import (RIR, absorption_from_rt60, default_max_order, direct_path_rir,
                            energy_decay_curve, image_sources, measure_rt60, simulate_rir)
from tsepi.room.scene import (DISTANCE_RANGE, HEIGHT_RANGE, WALL_MARGIN, WIDTH_RANGE, Geometry, RoomSpec,
                              Scene, sample_scene)

FS = 16000
ROOM = RoomSpec((5.0, 5.0, 3.0), 0.5)
MIC = (2.5, 2.5, 1.5)


def geometry_at(distance):
    return Geometry((MIC[0] + distance, MIC[1], MIC[2]), MIC)


def test_room_spec_bounds():
    with pytest.raises(InvalidArgumentError):
        RoomSpec((2.0, 5.0, 3.0), 0.5)
    with pytest.raises(InvalidArgumentError):
        RoomSpec((5.0, 5.0, 4.5), 0.5)
    with pytest.raises(InvalidArgumentError):
        RoomSpec((5.0, 5.0, 3.0), 1.0)
    assert ROOM.volume == pytest.approx(75.0)
    assert ROOM.surface == pytest.approx(2 * (25 + 15 + 15))


def test_geometry_margins():
    with pytest.raises(InvalidArgumentError):
        Geometry((0.5, 2.5, 1.5), MIC).validate(ROOM)
    with pytest.raises(InvalidArgumentError):
        Geometry((2.7, 2.5, 1.5), MIC).validate(ROOM)
    geometry_at(1.0).validate(ROOM)


def test_sample_scene_invariants():
    for seed in range(200):
        room, geometries = sample_scene(np.random.default_rng(seed), n_sources=3)
        assert len(geometries) == 3
        scene = Scene(room, geometries)
        assert len({geo.mic_pos for geo in scene.geometries}) == 1
        for geo in geometries:
            assert DISTANCE_RANGE[0] <= geo.distance <= DISTANCE_RANGE[1]
            assert min(geo.source_pos) >= WALL_MARGIN - 1e-9


def test_sample_scene_is_deterministic():
    a = sample_scene(np.random.default_rng(5))
    b = sample_scene(np.random.default_rng(5))
    assert a == b


def test_scene_round_trips_through_dict():
    room, geometries = sample_scene(np.random.default_rng(3))
    scene = Scene(room, geometries)
    assert Scene.from_dict(scene.to_dict()) == scene


def test_room_dimensions_are_uniform():
    rooms = [sample_scene(np.random.default_rng(seed), n_sources=1)[0] for seed in range(2000)]
    dims = np.array([room.dimensions for room in rooms])
    width = WIDTH_RANGE[1] - WIDTH_RANGE[0]
    height = HEIGHT_RANGE[1] - HEIGHT_RANGE[0]
    assert stats.kstest(dims[:, 0], 'uniform', args=(WIDTH_RANGE[0], width)).pvalue > 0.01
    assert stats.kstest(dims[:, 1], 'uniform', args=(WIDTH_RANGE[0], width)).pvalue > 0.01
    assert stats.kstest(dims[:, 2], 'uniform', args=(HEIGHT_RANGE[0], height)).pvalue > 0.01


def test_sample_scene_gives_up():
    with pytest.raises(SceneSamplingError):
        sample_scene(np.random.default_rng(0), n_sources=1, max_retries=0)
    with pytest.raises(InvalidArgumentError):
        sample_scene(np.random.default_rng(0), n_sources=0)


def test_absorption_formulas():
    sabine = absorption_from_rt60(ROOM, 'sabine')
    eyring = absorption_from_rt60(ROOM, 'eyring')
    assert sabine == pytest.approx(0.161 * 75.0 / (0.5 * 110.0), rel=1e-3)
    assert sabine == pytest.approx(pra.inverse_sabine(0.5, [5.0, 5.0, 3.0], c=343.0)[0])
    assert eyring == pytest.approx(1 - np.exp(-sabine))
    assert 0 < eyring < sabine < 1
    with pytest.raises(InvalidArgumentError):
        absorption_from_rt60(ROOM, 'norris')


def test_default_max_order():
    assert default_max_order(ROOM) == int(np.ceil(343 * 0.5 / 3.0 - 1))


def test_image_sources_come_from_pyroomacoustics():
    geo = geometry_at(1.2)
    images, orders = image_sources(ROOM, geo, FS, max_order=1, absorption=0.3)
    # direct path plus one image per wall
    assert images.shape == (3, 7)
    assert sorted(orders.tolist()) == [0, 1, 1, 1, 1, 1, 1]
    assert np.allclose(images[:, orders == 0][:, 0], geo.source_pos)


def test_direct_delay_for_1_7_m():
    rir = direct_path_rir(geometry_at(1.7), FS)
    assert rir.direct_delay == 79
    assert np.argmax(np.abs(rir.taps)) == 79


def test_direct_path_energy():
    distance = 1.7
    rir = direct_path_rir(geometry_at(distance), FS)
    expected = (1 / (4 * np.pi * distance)) ** 2
    assert np.sum(rir.taps ** 2) == pytest.approx(expected, rel=1e-3)


def test_direct_path_delays_a_sine():
    geo = geometry_at(343 * 70 / FS)
    rir = direct_path_rir(geo, FS)
    t = np.arange(4000) / FS
    clip = AudioClip(np.sin(2 * np.pi * 300 * t), FS)
    out = convolve(clip, rir.taps).samples
    correlation = [np.dot(out[lag:], clip.samples[:len(clip) - lag]) for lag in range(120)]
    assert int(np.argmax(correlation)) == 70
    assert np.max(np.abs(out)) == pytest.approx(1 / (4 * np.pi * geo.distance), rel=1e-6)


def test_free_field_limit_is_a_single_impulse():
    geo = geometry_at(343 * 70 / FS)
    rir = simulate_rir(ROOM, geo, FS, absorption=1.0)
    assert rir.taps[70] == pytest.approx(1 / (4 * np.pi * geo.distance))
    rest = np.delete(rir.taps, 70)
    assert np.max(np.abs(rest)) < 1e-12


def test_direct_path_matches_rir_head():
    geo = geometry_at(1.7)
    full = simulate_rir(ROOM, geo, FS)
    direct = direct_path_rir(geo, FS)
    # first reflection (x wall) arrives near sample 154
    head = 110
    assert np.allclose(full.taps[:head], direct.taps[:head], atol=1e-3 * np.max(np.abs(direct.taps)))
    assert len(full) == 79 + int(np.ceil(0.5 * FS)) + 41


def test_simulate_rir_is_deterministic():
    geo = geometry_at(1.2)
    a = simulate_rir(ROOM, geo, FS)
    b = simulate_rir(ROOM, geo, FS)
    assert np.array_equal(a.taps, b.taps)


def test_small_max_order_flags_truncation(caplog):
    rir = simulate_rir(ROOM, geometry_at(1.2), FS, max_order=1)
    assert rir.truncated
    assert 'max_order' in caplog.text
    assert not simulate_rir(ROOM, geometry_at(1.2), FS).truncated


def test_energy_decay_curve_is_non_increasing():
    edc = energy_decay_curve(simulate_rir(ROOM, geometry_at(1.2), FS))
    finite = edc[np.isfinite(edc)]
    assert finite[0] == 0.0
    assert np.all(np.diff(finite) <= 1e-9)


def test_measure_rt60_on_exponential_decay(rng):
    t60 = 0.4
    t = np.arange(int(0.8 * FS)) / FS
    taps = rng.standard_normal(len(t)) * 10 ** (-3 * t / t60)
    assert measure_rt60(RIR(taps, FS, 0)) == pytest.approx(t60, rel=0.05)


def test_measure_rt60_undefined_for_silence():
    with pytest.raises(UndefinedResultError):
        measure_rt60(RIR(np.zeros(100), FS, 0))


def test_rir_cache(tmp_path):
    geo = geometry_at(1.2)
    rir = simulate_rir(ROOM, geo, FS, max_order=3)
    sidecar = save_rir(str(tmp_path), 'scene0', rir, ROOM, geo)
    assert sidecar['direct_delay'] == rir.direct_delay
    back, room, geometry, _ = load_rir(str(tmp_path), 'scene0')
    assert room == ROOM and geometry == geo
    assert np.allclose(back.taps, rir.taps, atol=1e-6)


def test_reflections_invert_polarity():
    geo = geometry_at(1.2)
    rir = simulate_rir(ROOM, geo, FS, max_order=1, absorption=0.36)
    # floor reflection: image at z = -1.5, path sqrt(1.2^2 + 3^2)
    path = np.hypot(1.2, 3.0)
    delay = int(round(path * FS / 343.0))
    assert rir.taps[delay] < 0
    assert rir.taps[rir.direct_delay] > 0


def test_measure_rt60_agrees_with_pyroomacoustics():
    room = RoomSpec((6.0, 4.5, 3.0), 0.4)
    geo = Geometry((3.0, 2.0, 1.5), (4.2, 2.4, 1.3))
    rir = simulate_rir(room, geo, FS)
    ours = measure_rt60(rir)
    theirs = pra.experimental.measure_rt60(rir.taps, fs=FS, decay_db=20)
    assert ours == pytest.approx(theirs, rel=0.1)


@pytest.mark.slow
def test_measured_rt60_within_20_percent():
    room = RoomSpec((6.0, 4.5, 3.0), 0.5)
    geo = Geometry((3.0, 2.0, 1.5), (4.2, 2.4, 1.3))
    measured = measure_rt60(simulate_rir(room, geo, FS))
    assert 0.4 <= measured <= 0.6


@pytest.mark.slow
@pytest.mark.parametrize('rt60', [0.3, 0.5, 0.7])
def test_sampled_scenes_hit_target_rt60(rt60):
    for seed in range(10):
        sampled, geometries = sample_scene(np.random.default_rng(seed), n_sources=1)
        room = RoomSpec(sampled.dimensions, rt60)
        measured = measure_rt60(simulate_rir(room, geometries[0], FS))
        assert 0.8 * rt60 <= measured <= 1.2 * rt60, f"seed {seed}: {measured:.3f}s for {rt60}s"


@pytest.mark.slow
def test_longer_rt60_measures_longer():
    geo = Geometry((3.0, 2.0, 1.5), (4.2, 2.4, 1.3))
    short = measure_rt60(simulate_rir(RoomSpec((6.0, 4.5, 3.0), 0.3), geo, FS))
    long = measure_rt60(simulate_rir(RoomSpec((6.0, 4.5, 3.0), 0.6), geo, FS))
    assert long > short
