"""
Room acoustics: scene sampling, image-source RIRs and the RIR cache
"""

from tsepi.room.scene import RoomSpec, Geometry, Scene, sample_scene, SPEED_OF_SOUND
from tsepi.room.rir import (RIR, absorption_from_rt60, default_max_order, direct_path_rir,
                            energy_decay_curve, measure_rt60, simulate_rir)
from tsepi.room.cache import load_rir, save_rir
