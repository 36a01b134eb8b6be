#!/usr/bin/env python3
"""
RIR cache: one float32 WAV per response plus a JSON sidecar describing the scene.
"""

import json
import logging
import os

from tsepi.audio.core import AudioClip
from tsepi.audio.wavio import read_wav, write_wav
from tsepi.errors import ManifestError, UndefinedResultError
from tsepi.room.rir import RIR, measure_rt60
from tsepi.room.scene import Geometry, RoomSpec

logger = logging.getLogger(__name__)


def save_rir(directory, name, rir, room, geo):
    """Write <name>.wav and <name>.json; returns the sidecar dict"""
    os.makedirs(directory, exist_ok=True)
    wav_path = os.path.join(directory, f"{name}.wav")
    write_wav(wav_path, AudioClip(rir.taps, rir.sample_rate), subtype="float32")

    try:
        measured = measure_rt60(rir)
    except UndefinedResultError:
        measured = None
    sidecar = {
        "room": room.to_dict(),
        "geometry": geo.to_dict(),
        "measured_rt60": measured,
        "direct_delay": rir.direct_delay,
        "truncated": rir.truncated,
        "sample_rate": rir.sample_rate,
    }
    with open(os.path.join(directory, f"{name}.json"), "w") as f:
        json.dump(sidecar, f, indent=2)
    logger.debug(f"Cached RIR {name} in {directory}")
    return sidecar


def load_rir(directory, name):
    """Read a cached RIR back; returns (RIR, RoomSpec, Geometry, sidecar)"""
    json_path = os.path.join(directory, f"{name}.json")
    try:
        with open(json_path, "r") as f:
            sidecar = json.load(f)
    except FileNotFoundError:
        raise ManifestError(f"RIR sidecar not found: {json_path}", path=json_path)
    except json.JSONDecodeError as e:
        raise ManifestError(f"corrupt RIR sidecar {json_path}: {e}", path=json_path)

    clip = read_wav(os.path.join(directory, f"{name}.wav"))
    rir = RIR(clip.samples, clip.sample_rate, int(sidecar["direct_delay"]), bool(sidecar.get("truncated", False)))
    return rir, RoomSpec.from_dict(sidecar["room"]), Geometry.from_dict(sidecar["geometry"]), sidecar
